"""One-hot schedule QUBO over an N x Z grid of binary variables.

Variable ``var_index(n, i, z) = n*z + i`` is 1 when level ``i`` is chosen at
order ``n``.  The cost is

    E(x) = a * sum_n (sum_i x[n,i] - 1)^2  -  b * sum_n sum_ij W[i,j] x[n,i] x[n+1,j]

with transitions taken between consecutive orders only.  :func:`build_qubo`
expands it into offset/linear/quadratic form; :func:`direct_energy` evaluates
the unexpanded expression and serves as the cross-check.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, DimensionError, InfeasibleError
from .trace import TransitionMatrix

DEFAULT_A = 1000.0
DEFAULT_B = 7.0


def var_index(n: int, i: int, z: int, n_orders: int | None = None) -> int:
    if not 0 <= i < z or n < 0 or (n_orders is not None and n >= n_orders):
        raise IndexError(f"grid position ({n}, {i}) out of range for Z={z}")
    return n * z + i


@dataclass(frozen=True)
class QuboProblem:
    n_orders: int
    z_levels: int
    a: float
    b: float
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float
    w: TransitionMatrix | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        lin = np.asarray(self.linear, dtype=float).copy()
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        if lin.shape != (self.num_vars,):
            raise DimensionError(
                f"expected {self.num_vars} linear coefficients, got {lin.shape}"
            )
        quad = {}
        for (i, j), c in self.quadratic.items():
            i, j = int(i), int(j)
            if i == j or not (0 <= i < self.num_vars and 0 <= j < self.num_vars):
                raise DimensionError(f"invalid quadratic key ({i}, {j})")
            key = (i, j) if i < j else (j, i)
            quad[key] = quad.get(key, 0.0) + float(c)
        object.__setattr__(self, "quadratic", quad)

    @property
    def num_vars(self) -> int:
        return self.n_orders * self.z_levels

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuboProblem):
            return NotImplemented
        return (
            (self.n_orders, self.z_levels, self.a, self.b, self.offset)
            == (other.n_orders, other.z_levels, other.a, other.b, other.offset)
            and np.array_equal(self.linear, other.linear)
            and self.quadratic == other.quadratic
        )

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def upper(self) -> np.ndarray:
        """Dense strictly-upper-triangular coupling matrix."""
        m = np.zeros((self.num_vars, self.num_vars))
        for (i, j), c in self.quadratic.items():
            m[i, j] = c
        m.setflags(write=False)
        return m

    @cached_property
    def symmetric(self) -> np.ndarray:
        """``upper + upper.T``; row ``k`` is the coupling of variable ``k`` to the rest."""
        m = self.upper + self.upper.T
        m.setflags(write=False)
        return m


def build_qubo(
    w: TransitionMatrix, n_orders: int, a: float = DEFAULT_A, b: float = DEFAULT_B
) -> QuboProblem:
    if n_orders < 2:
        raise ConfigError(f"need at least 2 orders to have a transition, got {n_orders}")
    if not a > 0:
        raise ConfigError(f"penalty weight a must be positive, got {a}")
    if not b >= 0:
        raise ConfigError(f"reward weight b must be non-negative, got {b}")
    z = w.z
    linear = np.full(n_orders * z, -float(a))
    quad: dict[tuple[int, int], float] = {}
    for n in range(n_orders):
        for i in range(z):
            for j in range(i + 1, z):
                quad[(n * z + i, n * z + j)] = 2.0 * a
    if b:
        for n in range(n_orders - 1):
            for i in range(z):
                for j in range(z):
                    if w.w[i, j]:
                        quad[(n * z + i, (n + 1) * z + j)] = -float(b) * float(w.w[i, j])
    return QuboProblem(n_orders, z, float(a), float(b), linear, quad, float(a) * n_orders, w=w)


def _as_bits(q_vars: int, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != q_vars:
        raise DimensionError(f"bitstring length {x.shape[-1]} != {q_vars} variables")
    return x


def energy(q: QuboProblem, x) -> float:
    x = _as_bits(q.num_vars, x).astype(float)
    if x.ndim != 1:
        raise DimensionError("energy() takes a single bitstring; use energies() for batches")
    return float(q.offset + q.linear @ x + x @ q.upper @ x)


def energies(q: QuboProblem, xs) -> np.ndarray:
    """Energies of a ``(k, num_vars)`` batch of bitstrings."""
    xs = np.atleast_2d(_as_bits(q.num_vars, xs)).astype(float)
    return q.offset + xs @ q.linear + np.einsum("ki,ki->k", xs @ q.upper, xs)


def direct_energy(
    x, w: TransitionMatrix, n_orders: int, a: float = DEFAULT_A, b: float = DEFAULT_B
) -> float:
    """Cost of ``x`` computed straight from the grid form, without expansion."""
    z = w.z
    grid = _as_bits(n_orders * z, x).reshape(n_orders, z).astype(float)
    penalty = sum((row.sum() - 1.0) ** 2 for row in grid)
    reward = 0.0
    for n in range(n_orders - 1):
        for i in range(z):
            for j in range(z):
                reward += w.w[i, j] * grid[n, i] * grid[n + 1, j]
    return float(a * penalty - b * reward)


def is_feasible(x, n_orders: int, z_levels: int) -> bool:
    grid = _as_bits(n_orders * z_levels, x).reshape(n_orders, z_levels)
    return bool(np.all(grid.sum(axis=1) == 1))


def decode_schedule(x, n_orders: int, z_levels: int) -> list[int]:
    """Level index chosen at each order of a one-hot bitstring."""
    grid = _as_bits(n_orders * z_levels, x).reshape(n_orders, z_levels)
    counts = grid.sum(axis=1)
    bad = [int(n) for n in np.flatnonzero(counts != 1)]
    if bad:
        raise InfeasibleError(f"orders {bad} are not one-hot", orders=bad)
    return [int(i) for i in grid.argmax(axis=1)]


def encode_schedule(schedule: Sequence[int], z_levels: int) -> np.ndarray:
    x = np.zeros(len(schedule) * z_levels, dtype=np.uint8)
    for n, i in enumerate(schedule):
        x[var_index(n, int(i), z_levels)] = 1
    return x


def s_max(w: TransitionMatrix, schedule: Sequence[int]) -> float:
    """Total transition score of a schedule."""
    if any(not 0 <= int(i) < w.z for i in schedule):
        raise IndexError(f"schedule {list(schedule)} has levels outside [0, {w.z})")
    return float(sum(w.w[i, j] for i, j in zip(schedule, schedule[1:])))


def schedule_score(q: QuboProblem, schedule: Sequence[int], e: float) -> float | None:
    """S_max of a decoded schedule, from the source matrix when ``q`` carries one.

    Without a matrix the score is recovered from the energy identity
    ``E = -b * S_max`` that holds on feasible bitstrings.
    """
    if q.w is not None:
        return s_max(q.w, schedule)
    if q.b > 0:
        return -e / q.b
    return None


def schedule_labels(w: TransitionMatrix, schedule: Sequence[int]) -> list[int]:
    """Level indices -> percent labels, e.g. [1, 5, 1] -> [20, 60, 20]."""
    return [w.levels[int(i)] for i in schedule]
