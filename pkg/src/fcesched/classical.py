"""Classical solvers: simulated annealing and the two exact oracles.

``brute_force`` enumerates every bitstring (small problems only) and
``dp_exact`` finds the best feasible schedule by dynamic programming over
orders.  Since the schedule graph is layered and levels may repeat, the
feasible optimum is a longest path, solvable in ``O(N * Z^2)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit

from .errors import ConfigError, SizeError
from .qubo import (
    QuboProblem,
    decode_schedule,
    energies,
    encode_schedule,
    energy,
    is_feasible,
    s_max,
    schedule_score,
)
from .trace import TransitionMatrix

BRUTE_FORCE_MAX_VARS = 20


@dataclass(frozen=True)
class SaParams:
    num_reads: int = 10
    sweeps: int = 100_000
    beta_hot: float = 0.005
    beta_cold: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_reads < 1 or self.sweeps < 1:
            raise ConfigError("num_reads and sweeps must be >= 1")
        if not 0 < self.beta_hot < self.beta_cold:
            raise ConfigError("need 0 < beta_hot < beta_cold")


@dataclass
class TrialRecord:
    energy: float
    feasible: bool
    s_max: float | None
    bits: np.ndarray
    schedule: list[int] | None = None


@dataclass
class SolverResult:
    backend: str
    best_bits: np.ndarray
    best_energy: float
    feasible: bool
    schedule: list[int] | None
    s_max: float | None
    per_trial: list[TrialRecord]
    wall_time: float = 0.0
    trajectory: list[tuple[int, float, float]] | None = None
    meta: dict[str, Any] = field(default_factory=dict)


def make_trial(q: QuboProblem, bits: np.ndarray) -> TrialRecord:
    bits = np.asarray(bits, dtype=np.uint8)
    e = energy(q, bits)
    if is_feasible(bits, q.n_orders, q.z_levels):
        sched = decode_schedule(bits, q.n_orders, q.z_levels)
        return TrialRecord(e, True, schedule_score(q, sched, e), bits, sched)
    return TrialRecord(e, False, None, bits, None)


def collect(
    backend: str, trials: list[TrialRecord], wall_time: float = 0.0, **meta: Any
) -> SolverResult:
    """Best-of-trials summary; ties go to the earliest trial."""
    best = min(range(len(trials)), key=lambda k: trials[k].energy)
    t = trials[best]
    return SolverResult(
        backend=backend,
        best_bits=t.bits,
        best_energy=t.energy,
        feasible=t.feasible,
        schedule=t.schedule,
        s_max=t.s_max,
        per_trial=trials,
        wall_time=wall_time,
        meta=dict(meta, best_trial=best),
    )


# --------------------------------------------------------------------------
# simulated annealing


@njit(cache=True)
def _anneal(linear, coupling, state, betas, uniforms):
    n = state.size
    field_ = coupling @ state.astype(np.float64)
    for s in range(betas.size):
        beta = betas[s]
        for k in range(n):
            h = linear[k] + field_[k]
            delta = h if state[k] == 0 else -h
            if delta <= 0.0 or uniforms[s, k] < np.exp(-beta * delta):
                sign = 1.0 if state[k] == 0 else -1.0
                state[k] = 1 - state[k]
                for m in range(n):
                    field_[m] += sign * coupling[m, k]
    return state


def sa_solve(q: QuboProblem, p: SaParams | None = None) -> SolverResult:
    """Single-bit-flip Metropolis annealing, best of ``p.num_reads`` reads.

    Each read sweeps the variables in index order once per temperature step,
    with inverse temperature rising geometrically from ``beta_hot`` to
    ``beta_cold``.  Read ``r`` draws from its own stream seeded by
    ``(p.seed, r)``, so reads can be run in any order.
    """
    p = p or SaParams()
    start = time.perf_counter()
    betas = np.geomspace(p.beta_hot, p.beta_cold, p.sweeps)
    linear = np.ascontiguousarray(q.linear, dtype=np.float64)
    coupling = np.ascontiguousarray(q.symmetric, dtype=np.float64)
    trials = []
    for r in range(p.num_reads):
        rng = np.random.default_rng([p.seed, r])
        state = rng.integers(0, 2, size=q.num_vars).astype(np.int64)
        uniforms = rng.random((p.sweeps, q.num_vars), dtype=np.float32)
        final = _anneal(linear, coupling, state, betas, uniforms)
        trials.append(make_trial(q, final))
    return collect("sa", trials, time.perf_counter() - start, seed=p.seed)


# --------------------------------------------------------------------------
# exact oracles


def brute_force(q: QuboProblem, chunk: int = 1 << 16) -> tuple[np.ndarray, float]:
    """Global minimum over all ``2**num_vars`` bitstrings.

    Variable 0 is the most significant bit of the enumeration index.  Among
    tied minima the largest index wins, i.e. the candidate whose first
    differing variable is set; on one-hot ties this picks the
    lexicographically smallest schedule.
    """
    n = q.num_vars
    if n > BRUTE_FORCE_MAX_VARS:
        raise SizeError(f"brute force is capped at {BRUTE_FORCE_MAX_VARS} variables, got {n}")
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_e = np.inf
    best_idx = -1
    total = 1 << n
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        xs = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        es = energies(q, xs)
        k = int(np.argmin(es))
        m = float(es[k])
        if m < best_e - 1e-9:
            best_e = m
        if m <= best_e + 1e-9:
            ties = np.flatnonzero(es <= best_e + 1e-9)
            best_idx = int(idx[ties[-1]])
    bits = ((np.int64(best_idx) >> shifts) & 1).astype(np.uint8)
    return bits, energy(q, bits)


def dp_exact(w: TransitionMatrix, n_orders: int, b: float = 7.0) -> tuple[list[int], float, float]:
    """Best feasible schedule: ``(schedule, S_max, -b * S_max)``.

    ``best[n, i]`` is the largest score obtainable from order ``n`` onward
    when order ``n`` uses level ``i``.  The schedule is then read off from
    the front, taking the lowest level index among equals at every step, so
    the lexicographically smallest optimal schedule is returned.
    """
    if n_orders < 2:
        raise ConfigError(f"need at least 2 orders, got {n_orders}")
    W = w.w.astype(float)
    z = w.z
    best = np.zeros((n_orders, z))
    for n in range(n_orders - 2, -1, -1):
        best[n] = (W + best[n + 1][None, :]).max(axis=1)
    sched = [int(np.argmax(best[0]))]
    for n in range(1, n_orders):
        prev = sched[-1]
        sched.append(int(np.argmax(W[prev] + best[n])))
    total = s_max(w, sched)
    assert total == best[0].max()
    return sched, total, -b * total


def dp_result(w: TransitionMatrix, n_orders: int, q: QuboProblem) -> SolverResult:
    start = time.perf_counter()
    sched, _, _ = dp_exact(w, n_orders, q.b)
    trial = make_trial(q, encode_schedule(sched, w.z))
    return collect("dp", [trial], time.perf_counter() - start)


def brute_result(q: QuboProblem) -> SolverResult:
    start = time.perf_counter()
    bits, _ = brute_force(q)
    return collect("brute", [make_trial(q, bits)], time.perf_counter() - start)


def layered_global_min(
    w: TransitionMatrix, n_orders: int, a: float = 1000.0, b: float = 7.0
) -> tuple[np.ndarray, float]:
    """Exact global minimum of the one-hot cost over *all* bitstrings.

    Dynamic programming over orders where the state is the full set of bits
    switched on in a row (``2**Z`` states), so infeasible rows are included.
    Cost ``O(N * 4**Z)``; fine for Z <= 10 at any N.
    """
    z = w.z
    if z > 12:
        raise SizeError(f"row-subset DP is capped at Z=12, got {z}")
    masks = ((np.arange(1 << z)[:, None] >> np.arange(z)) & 1).astype(float)
    row_cost = a * (masks.sum(axis=1) - 1.0) ** 2
    pair = -b * (masks @ w.w.astype(float) @ masks.T)
    # cost[n, S] = best cost of orders n.. given order n uses subset S
    cost = np.tile(row_cost, (n_orders, 1))
    for n in range(n_orders - 2, -1, -1):
        cost[n] = row_cost + (pair + cost[n + 1][None, :]).min(axis=1)
    subsets = [int(np.argmin(cost[0]))]
    for n in range(1, n_orders):
        subsets.append(int(np.argmin(pair[subsets[-1]] + cost[n])))
    bits = masks[subsets].astype(np.uint8).reshape(-1)
    return bits, float(cost[0].min())
