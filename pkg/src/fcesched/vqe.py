"""Product-state VQE for the one-hot QUBO.

The ansatz is a single RY rotation per qubit on |0...0>, so qubit ``k`` is
measured as 1 with probability ``sin(theta_k / 2)**2`` independently of the
others.  The QUBO Hamiltonian is diagonal, which makes the expectation a
multilinear polynomial in those probabilities: it can be evaluated in
closed form (``expectation_exact``) or estimated from sampled shots
(``expectation_sampled``).  Readout error is a per-qubit asymmetric bit flip
applied to each measured bit.

Parameters are optimized with NFT (Nakanishi-Fujii-Todo) sequential
minimization: with the others fixed, the objective is a sinusoid in each
angle, so three evaluations determine it and its minimizer exactly.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from numba import njit

from .classical import SolverResult, collect, make_trial
from .errors import ConfigError, DimensionError, EmptyInputError
from .qubo import QuboProblem, energies, energy

TWO_PI = 2.0 * math.pi
NFT_OFFSETS = (0.0, TWO_PI / 3.0, -TWO_PI / 3.0)

#: Readout error ranges (min, max) used to draw per-qubit flip rates.
NOISE_PROFILES: dict[str, tuple[float, float]] = {
    "brussels": (0.0028, 0.029),
    "nazca": (0.0057, 0.049),
}


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit readout flips: ``eps01`` = P(read 1 | 0), ``eps10`` = P(read 0 | 1)."""

    eps01: np.ndarray
    eps10: np.ndarray

    def __post_init__(self) -> None:
        e01 = np.atleast_1d(np.asarray(self.eps01, dtype=float))
        e10 = np.atleast_1d(np.asarray(self.eps10, dtype=float))
        if e01.shape != e10.shape or e01.ndim != 1:
            raise DimensionError("eps01 and eps10 must be 1-D and the same length")
        for e in (e01, e10):
            if np.any(e < 0) or np.any(e >= 0.5):
                raise ConfigError("readout error rates must lie in [0, 0.5)")
        object.__setattr__(self, "eps01", e01)
        object.__setattr__(self, "eps10", e10)

    @property
    def num_qubits(self) -> int:
        return int(self.eps01.size)

    @classmethod
    def symmetric(cls, eps: float, num_qubits: int) -> NoiseModel:
        e = np.full(num_qubits, float(eps))
        return cls(e, e.copy())

    @classmethod
    def from_profile(cls, name: str, num_qubits: int, seed: int = 0) -> NoiseModel:
        """Symmetric per-qubit rates drawn uniformly from a named device range."""
        try:
            lo, hi = NOISE_PROFILES[name]
        except KeyError:
            raise ConfigError(
                f"unknown noise profile {name!r}; choose from {sorted(NOISE_PROFILES)}"
            ) from None
        e = np.random.default_rng([seed, 7]).uniform(lo, hi, num_qubits)
        return cls(e, e.copy())


def effective_prob(theta_k: float, noise: NoiseModel | None = None, k: int = 0) -> float:
    p = math.sin(theta_k / 2.0) ** 2
    if noise is None:
        return p
    return p * (1.0 - float(noise.eps10[k])) + (1.0 - p) * float(noise.eps01[k])


def effective_probs(theta: np.ndarray, noise: NoiseModel | None = None) -> np.ndarray:
    p = np.sin(np.asarray(theta, dtype=float) / 2.0) ** 2
    if noise is None:
        return p
    if noise.num_qubits != p.size:
        raise DimensionError(f"noise model covers {noise.num_qubits} qubits, state has {p.size}")
    return p * (1.0 - noise.eps10) + (1.0 - p) * noise.eps01


def _check_state(q: QuboProblem, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (q.num_vars,):
        raise DimensionError(f"expected {q.num_vars} angles, got shape {theta.shape}")
    return theta


def expectation_exact(q: QuboProblem, theta: np.ndarray, noise: NoiseModel | None = None) -> float:
    """<psi|H|psi> for the product state, readout noise folded into each qubit."""
    p = effective_probs(_check_state(q, theta), noise)
    return float(q.offset + q.linear @ p + p @ q.upper @ p)


@dataclass(frozen=True)
class ShotBatch:
    """Measured shots stored as a base bitstring plus per-shot deviations.

    Shot ``s`` reads the opposite of ``base`` on the qubits
    ``col[ptr[s]:ptr[s + 1]]``.
    """

    base: np.ndarray
    ptr: np.ndarray
    col: np.ndarray
    shots: int

    def dense(self) -> np.ndarray:
        x = np.empty((self.shots, self.base.size), dtype=np.uint8)
        x[:] = self.base
        x[np.repeat(np.arange(self.shots), np.diff(self.ptr)), self.col] ^= 1
        return x

    def ones(self) -> np.ndarray:
        """Per-qubit count of shots reading 1."""
        flips = np.bincount(self.col, minlength=self.base.size)
        return np.where(self.base == 1, self.shots - flips, flips)


@njit(cache=True)
def _draw_flips(uniforms, minority, shots):
    """Shots reading the minority outcome, per qubit, grouped by shot.

    Successes of a Bernoulli(m) run are found by geometric skipping, so the
    cost scales with the number of flips rather than ``shots * n``.  Every
    column consumes one uniform per flip plus one to end the run.  Returns
    ``(ptr, col, used)`` where the flips of shot ``s`` are
    ``col[ptr[s]:ptr[s+1]]``; ``used`` is -1 if ``uniforms`` ran out.
    """
    n = minority.size
    shot_of = np.empty(uniforms.size, np.int64)
    col_of = np.empty(uniforms.size, np.int64)
    nnz = 0
    used = 0
    for k in range(n):
        m = minority[k]
        if m <= 0.0:
            continue
        log_q = math.log1p(-m)
        pos = -1
        while True:
            if used == uniforms.size:
                return np.zeros(1, np.int64), np.zeros(0, np.int64), -1
            pos += int(math.floor(math.log1p(-uniforms[used]) / log_q)) + 1
            used += 1
            if pos >= shots:
                break
            shot_of[nnz] = pos
            col_of[nnz] = k
            nnz += 1
    ptr = np.zeros(shots + 1, np.int64)
    for i in range(nnz):
        ptr[shot_of[i] + 1] += 1
    for s in range(shots):
        ptr[s + 1] += ptr[s]
    fill = ptr[:-1].copy()
    col = np.empty(nnz, np.int64)
    for i in range(nnz):
        s = shot_of[i]
        col[fill[s]] = col_of[i]
        fill[s] += 1
    return ptr, col, used


@njit(cache=True)
def _flip_energies(ptr, col, delta, grad, sym, e0):
    shots = ptr.size - 1
    out = np.empty(shots)
    for s in range(shots):
        e = e0
        for a in range(ptr[s], ptr[s + 1]):
            ca = col[a]
            e += delta[ca] * grad[ca]
            for b in range(ptr[s], a):
                e += delta[ca] * delta[col[b]] * sym[ca, col[b]]
        out[s] = e
    return out


def sample_shots(
    theta: np.ndarray, shots: int, noise: NoiseModel | None, rng: np.random.Generator
) -> ShotBatch:
    if shots < 1:
        raise ConfigError(f"shots must be >= 1, got {shots}")
    p = effective_probs(theta, noise)
    base = (p > 0.5).astype(np.uint8)
    minority = np.where(base == 1, 1.0 - p, p)
    expected = float(shots * minority.sum())
    budget = int(expected + 6.0 * math.sqrt(expected) + minority.size + 64)
    while True:
        ptr, col, used = _draw_flips(rng.random(budget), minority, shots)
        if used >= 0:
            return ShotBatch(base, ptr, col, shots)
        budget *= 2


def sample_bitstrings(
    theta: np.ndarray,
    shots: int,
    noise: NoiseModel | None = None,
    seed: int | np.random.Generator | None = None,
) -> np.ndarray:
    """``(shots, n)`` array of measured bits, each drawn independently."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sample_shots(theta, shots, noise, rng).dense()


def batch_energies(q: QuboProblem, batch: ShotBatch) -> np.ndarray:
    """Per-shot energies, expanded around the base bitstring.

    With ``d`` the +-1 deviations, ``E(b + d) = E(b) + d.g + sum_{pairs} Q d d``
    where ``g`` is the gradient at ``b``.
    """
    b = batch.base.astype(float)
    e0 = float(q.offset + q.linear @ b + b @ q.upper @ b)
    sym = q.symmetric
    grad = q.linear + sym @ b
    return _flip_energies(batch.ptr, batch.col, 1.0 - 2.0 * b, grad, sym, e0)


def expectation_sampled(q: QuboProblem, samples) -> tuple[float, float]:
    """Shot-average energy and its standard error ``std / sqrt(shots)``.

    ``samples`` is a ``(shots, n)`` bit array or a :class:`ShotBatch`.
    """
    if isinstance(samples, ShotBatch):
        e = batch_energies(q, samples)
    else:
        samples = np.asarray(samples)
        if samples.size == 0:
            raise EmptyInputError("no samples")
        e = energies(q, samples)
    return float(e.mean()), float(e.std() / math.sqrt(e.size))


# --------------------------------------------------------------------------
# NFT


Evaluator = Callable[[np.ndarray], float]


def exact_evaluator(q: QuboProblem, noise: NoiseModel | None = None) -> Evaluator:
    return lambda theta: expectation_exact(q, theta, noise)


def sampled_evaluator(
    q: QuboProblem, shots: int, noise: NoiseModel | None, rng: np.random.Generator
) -> Evaluator:
    def evaluate(theta: np.ndarray) -> float:
        return expectation_sampled(q, sample_shots(theta, shots, noise, rng))[0]

    return evaluate


@dataclass(frozen=True)
class NftFit:
    theta: np.ndarray
    c0: float
    c1: float
    c2: float

    @property
    def amplitude(self) -> float:
        return math.hypot(self.c1, self.c2)

    @property
    def predicted(self) -> float:
        """Fitted objective at the updated angle."""
        return self.c0 - self.amplitude


def fit_sinusoid(angles: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Coefficients of ``c0 + c1 cos(t) + c2 sin(t)`` through three points."""
    a = np.array([[1.0, math.cos(t), math.sin(t)] for t in angles])
    c0, c1, c2 = np.linalg.solve(a, np.asarray(values, dtype=float))
    return float(c0), float(c1), float(c2)


def nft_step(
    theta: np.ndarray,
    k: int,
    evaluate: Evaluator,
    offsets: Sequence[float] = NFT_OFFSETS,
) -> NftFit:
    """Minimize the objective over angle ``k`` with the others held fixed."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= k < theta.size:
        raise IndexError(f"parameter index {k} out of range for {theta.size} angles")
    angles = [float(theta[k] + off) for off in offsets]
    values = []
    for ang in angles:
        probe = theta.copy()
        probe[k] = ang
        values.append(evaluate(probe))
    c0, c1, c2 = fit_sinusoid(angles, values)
    new = theta.copy()
    if math.hypot(c1, c2) > 1e-12:
        new[k] = math.atan2(-c2, -c1) % TWO_PI
    return NftFit(new, c0, c1, c2)


# --------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class VqeConfig:
    shots: int = 8192
    iterations: int = 1000
    trials: int = 20
    evaluator: Literal["exact", "sampled"] = "exact"
    noise: str | None = None
    seed: int = 0
    noise_eps: float | None = field(default=None)

    def __post_init__(self) -> None:
        if self.shots < 1 or self.trials < 1 or self.iterations < 0:
            raise ConfigError("shots and trials must be >= 1, iterations >= 0")
        if self.evaluator not in ("exact", "sampled"):
            raise ConfigError(f"evaluator must be 'exact' or 'sampled', got {self.evaluator!r}")
        if self.noise is not None and self.noise not in NOISE_PROFILES:
            raise ConfigError(f"unknown noise profile {self.noise!r}")
        if self.noise is not None and self.noise_eps is not None:
            raise ConfigError("give either a noise profile or a symmetric noise_eps, not both")

    def noise_model(self, num_qubits: int) -> NoiseModel | None:
        if self.noise is not None:
            return NoiseModel.from_profile(self.noise, num_qubits, self.seed)
        if self.noise_eps is not None:
            return NoiseModel.symmetric(self.noise_eps, num_qubits)
        return None

    def to_dict(self) -> dict:
        return asdict(self)


def extract_bits(
    theta: np.ndarray,
    noise: NoiseModel | None,
    mode: str,
    shots: int = 8192,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Round the state to a bitstring.

    ``exact`` thresholds each measured-1 probability at 0.5; ``sampled``
    takes a per-qubit majority over a fresh batch of shots.  Ties go to 0.
    """
    if mode == "exact":
        return (effective_probs(theta, noise) > 0.5).astype(np.uint8)
    ones = sample_shots(theta, shots, noise, rng).ones()
    return (2 * ones > shots).astype(np.uint8)


def run_trial(
    q: QuboProblem, cfg: VqeConfig, trial: int, noise: NoiseModel | None = None
) -> tuple[np.ndarray, list[tuple[int, float, float]]]:
    """One randomly initialized NFT run; returns final bits and the trajectory.

    Trajectory rows are ``(iteration, fitted objective, best energy so far)``
    where the last column tracks the rounded state after each update.
    """
    init_rng = np.random.default_rng([cfg.seed, trial, 0])
    shot_rng = np.random.default_rng([cfg.seed, trial, 1])
    n = q.num_vars
    theta = init_rng.uniform(0.0, TWO_PI, n)
    if cfg.evaluator == "exact":
        evaluate = exact_evaluator(q, noise)
    else:
        evaluate = sampled_evaluator(q, cfg.shots, noise, shot_rng)

    best = energy(q, (effective_probs(theta, noise) > 0.5).astype(np.uint8))
    trajectory = []
    for it in range(cfg.iterations):
        fit = nft_step(theta, it % n, evaluate)
        theta = fit.theta
        best = min(best, energy(q, (effective_probs(theta, noise) > 0.5).astype(np.uint8)))
        trajectory.append((it + 1, fit.predicted, best))
    bits = extract_bits(theta, noise, cfg.evaluator, cfg.shots, shot_rng)
    return bits, trajectory


def vqe_solve(q: QuboProblem, cfg: VqeConfig | None = None) -> SolverResult:
    """Best of ``cfg.trials`` NFT runs from uniform random angles.

    Trial ``t`` seeds its initial angles from ``(seed, t, 0)`` and its shots
    from ``(seed, t, 1)``, so exact and sampled runs with the same seed start
    from the same point.
    """
    cfg = cfg or VqeConfig()
    start = time.perf_counter()
    noise = cfg.noise_model(q.num_vars)
    trials = []
    trajectories = []
    for t in range(cfg.trials):
        bits, traj = run_trial(q, cfg, t, noise)
        trials.append(make_trial(q, bits))
        trajectories.append(traj)
    backend = "vqe-exact" if cfg.evaluator == "exact" else "vqe-sampled"
    if noise is not None:
        backend = "vqe-noisy"
    result = collect(backend, trials, time.perf_counter() - start, seed=cfg.seed)
    result.trajectory = trajectories[result.meta["best_trial"]]
    result.meta["trajectories"] = trajectories
    return result
