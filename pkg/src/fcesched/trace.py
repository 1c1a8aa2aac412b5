"""Conductance traces, feedback-cycle scoring and the transition matrix.

A trace is the raw record of one electromigration run: time, applied
voltage and normalized conductance G/G0, plus the sample indices at which
voltage feedback fired.  Each feedback event opens a cycle; cycles are
scored on how cleanly they produced a one-quantum conductance step, and
consecutive pairs of cycles give transition scores that are pooled into the
integer matrix ``W`` consumed by :mod:`fcesched.qubo`.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, EmptyInputError

#: Values an entry of ``W`` may take.
ALLOWED_WEIGHTS: tuple[int, ...] = (0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 99)

#: Denominator floor for :func:`score_vfb`; an ideal cycle would divide by zero.
SCORE_FLOOR = 1e-6

#: Default P1 window half-width, in G0 units.
P1_TOLERANCE = 0.5


def default_levels(z: int) -> list[int]:
    """Feedback-voltage labels (percent) for ``z`` evenly spaced levels.

    ``z=9`` gives 10, 20, ..., 90.
    """
    if z < 2:
        raise ConfigError(f"need at least 2 levels, got {z}")
    return [round(100 * (i + 1) / (z + 1)) for i in range(z)]


@dataclass(frozen=True)
class ConductanceTrace:
    t: np.ndarray
    v: np.ndarray
    g: np.ndarray
    fb_events: list[int]
    vfb_labels: list[int]

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "fb_events", [int(e) for e in self.fb_events])
        object.__setattr__(self, "vfb_labels", [int(x) for x in self.vfb_labels])

        if not (t.shape == v.shape == g.shape) or t.ndim != 1:
            raise DimensionError("t, v and g must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ConfigError("sample times must be strictly increasing")
        if np.any(g < 0):
            raise ConfigError("normalized conductance must be non-negative")
        ev = self.fb_events
        if any(e < 0 or e >= t.size for e in ev):
            raise ConfigError("feedback event index out of range")
        if any(b <= a for a, b in zip(ev, ev[1:])):
            raise ConfigError("feedback events must be strictly increasing")
        if len(self.vfb_labels) != len(ev):
            raise ConfigError("need exactly one V_FB label per feedback event")

    def __len__(self) -> int:
        return int(self.t.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConductanceTrace):
            return NotImplemented
        return (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.g, other.g)
            and self.fb_events == other.fb_events
            and self.vfb_labels == other.vfb_labels
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class FeedbackCycle:
    vfb: int
    start: int
    g: np.ndarray

    def __post_init__(self) -> None:
        if len(self.g) == 0:
            raise EmptyInputError("feedback cycle has no samples")

    @property
    def g_ref(self) -> float:
        return float(self.g[0])

    @property
    def stop(self) -> int:
        return self.start + len(self.g)


@dataclass(frozen=True)
class CycleMetrics:
    d: float
    f: float
    l: int  # noqa: E741
    p1: int
    p2: float

    def __post_init__(self) -> None:
        if self.l < 1 or not 0 <= self.p1 <= self.l or self.p2 < 0:
            raise ConfigError(f"inconsistent cycle metrics: {self}")


@dataclass(frozen=True)
class TransitionMatrix:
    levels: list[int]
    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"W must be square, got shape {w.shape}")
        if w.shape[0] != len(self.levels):
            raise DimensionError("W size does not match the number of levels")
        if w.shape[0] < 2:
            raise ConfigError("need at least 2 levels")
        bad = ~np.isin(w, ALLOWED_WEIGHTS)
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise ConfigError(f"W[{i}][{j}] = {w[i, j]} is not in {ALLOWED_WEIGHTS}")
        w = w.astype(np.int64)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "levels", [int(x) for x in self.levels])

    @property
    def z(self) -> int:
        return len(self.levels)

    def level_index(self, label: int) -> int:
        return self.levels.index(int(label))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.levels == other.levels and np.array_equal(self.w, other.w)

    __hash__ = None  # type: ignore[assignment]


# --------------------------------------------------------------------------
# synthetic traces


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for :func:`generate_synthetic_trace`.

    Transitions between the two ``planted`` levels (either direction) produce
    clean one-quantum steps; every other transition gets a seeded quality in
    ``[0, max_background_quality]`` that widens the jitter, skews the drop
    away from one quantum, and adds a slow creep on the plateau.
    """

    n_cycles: int
    z_levels: int = 9
    noise_amplitude: float = 0.05
    seed: int = 0
    points_per_cycle: int = 225
    planted: tuple[int, int] = (20, 60)
    max_background_quality: float = 0.6
    dt: float = 0.01
    pre_points: int = 20
    levels: list[int] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.n_cycles < 1:
            raise ConfigError(f"n_cycles must be >= 1, got {self.n_cycles}")
        if self.z_levels < 2:
            raise ConfigError(f"z_levels must be >= 2, got {self.z_levels}")
        if not self.noise_amplitude >= 0:
            raise ConfigError(f"noise_amplitude must be >= 0, got {self.noise_amplitude}")
        if self.points_per_cycle < 2 or self.pre_points < 1:
            raise ConfigError("points_per_cycle must be >= 2 and pre_points >= 1")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.levels is not None and len(self.levels) != self.z_levels:
            raise ConfigError("explicit levels must have z_levels entries")

    def resolved_levels(self) -> list[int]:
        return list(self.levels) if self.levels is not None else default_levels(self.z_levels)


def _quality_table(cfg: GeneratorConfig, levels: list[int]) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, 1])
    z = len(levels)
    q = rng.uniform(0.0, cfg.max_background_quality, size=(z, z))
    a, b = cfg.planted
    if a in levels and b in levels:
        ia, ib = levels.index(a), levels.index(b)
        q[ia, ib] = q[ib, ia] = 1.0
    return q


def generate_synthetic_trace(cfg: GeneratorConfig) -> ConductanceTrace:
    """Simulate a stepwise-decreasing conductance record, one plateau per cycle."""
    levels = cfg.resolved_levels()
    quality = _quality_table(cfg, levels)
    rng = np.random.default_rng([cfg.seed, 0])
    z = len(levels)
    labels = rng.integers(0, z, size=cfg.n_cycles)
    noise = cfg.noise_amplitude

    g_start = float(math.ceil(1.5 * cfg.n_cycles) + 2)
    g_parts = [g_start + noise * rng.standard_normal(cfg.pre_points)]
    g_parts[0][0] = g_start
    fb_events: list[int] = []
    cursor = cfg.pre_points
    plateau = g_start
    prev = None
    for n in range(cfg.n_cycles):
        j = int(labels[n])
        q = 0.5 if prev is None else float(quality[prev, j])
        length = int(cfg.points_per_cycle * rng.uniform(0.9, 1.1))
        target = max(round(plateau) - 1.0, 0.0)
        level = target - (1.0 - q) * 0.6 * rng.uniform(-1.0, 1.0)
        sigma = noise * (1.0 + 4.0 * (1.0 - q))
        creep = (1.0 - q) * 5.0 * noise * np.linspace(0.0, 1.0, length)
        g_parts.append(level - creep + sigma * rng.standard_normal(length))
        fb_events.append(cursor)
        cursor += length
        plateau = level
        prev = j

    g = np.maximum(np.concatenate(g_parts), 0.0)
    t = np.arange(g.size) * cfg.dt

    # applied voltage ramps during a cycle and is cut by V_FB percent at each event
    v = np.empty_like(g)
    volts = 0.5
    ev = set(fb_events)
    label_at = dict(zip(fb_events, (levels[int(j)] for j in labels)))
    for k in range(g.size):
        if k in ev:
            volts *= 1.0 - label_at[k] / 100.0
        volts += 2e-3
        v[k] = volts
    return ConductanceTrace(t, v, g, fb_events, [levels[int(j)] for j in labels])


# --------------------------------------------------------------------------
# scoring


def extract_cycles(trace: ConductanceTrace) -> list[FeedbackCycle]:
    """Split a trace at its feedback events.

    Cycle ``k`` runs from event ``k`` up to (not including) event ``k+1``;
    the last cycle runs to the end of the trace.
    """
    if not trace.fb_events:
        raise EmptyInputError("trace has no feedback events")
    bounds = trace.fb_events + [len(trace)]
    return [
        FeedbackCycle(label, a, trace.g[a:b])
        for label, a, b in zip(trace.vfb_labels, bounds, bounds[1:])
    ]


def cycle_metrics(
    cycle: FeedbackCycle, prev_cycle_end_g: float, tolerance: float = P1_TOLERANCE
) -> CycleMetrics:
    if tolerance <= 0:
        raise ConfigError("tolerance must be positive")
    g = cycle.g
    g_ref = cycle.g_ref
    return CycleMetrics(
        d=prev_cycle_end_g - g_ref,
        f=prev_cycle_end_g - float(g[-1]),
        l=int(g.size),
        p1=int(np.count_nonzero(np.abs(g - g_ref) <= tolerance)),
        p2=float(g.max() - g.min()),
    )


def score_vfb(m: CycleMetrics) -> float:
    denom = abs(m.d - 1.0) + abs(m.f - 1.0) + abs(m.p2)
    return (m.p1 / m.l) / max(denom, SCORE_FLOOR)


def score_trans(s_n: float, s_next: float) -> float:
    if s_n < 0 or s_next < 0:
        raise ConfigError("scores must be non-negative")
    return (s_n + s_next) / 2.0


def trace_scores(trace: ConductanceTrace, tolerance: float = P1_TOLERANCE) -> list[tuple[int, float]]:
    """(V_FB label, score) for every cycle of ``trace``, in order.

    The first cycle's drop is measured from the first sample of the trace.
    """
    out = []
    prev_end = float(trace.g[0])
    for cyc in extract_cycles(trace):
        out.append((cyc.vfb, score_vfb(cycle_metrics(cyc, prev_end, tolerance))))
        prev_end = float(cyc.g[-1])
    return out


def transition_records(
    traces: Iterable[ConductanceTrace], tolerance: float = P1_TOLERANCE
) -> list[tuple[int, int, float]]:
    """Transition database: (V_FB before, V_FB after, Score_trans) per consecutive cycle pair."""
    db = []
    for trace in traces:
        scores = trace_scores(trace, tolerance)
        for (li, si), (lj, sj) in zip(scores, scores[1:]):
            db.append((li, lj, score_trans(si, sj)))
    return db


def snap_weight(value: float) -> int:
    """Round a 0..99 rescaled score onto :data:`ALLOWED_WEIGHTS` (ties up, >=95 -> 99)."""
    if value >= 95.0:
        return 99
    return int(10 * math.floor(value / 10.0 + 0.5))


def build_transition_matrix(
    db: Sequence[tuple[int, int, float]], levels: Sequence[int] | None = None
) -> TransitionMatrix:
    """Average, rescale (max -> 99) and snap transition scores into ``W``.

    ``levels`` defaults to the sorted set of labels seen in ``db``; pairs with
    no observations get 0.
    """
    if not db:
        raise EmptyInputError("transition database is empty")
    if levels is None:
        levels = sorted({int(r[0]) for r in db} | {int(r[1]) for r in db})
    levels = [int(x) for x in levels]
    if len(levels) < 2:
        raise ConfigError("need at least 2 levels")
    index = {lab: k for k, lab in enumerate(levels)}

    sums: dict[tuple[int, int], float] = defaultdict(float)
    counts: dict[tuple[int, int], int] = defaultdict(int)
    for li, lj, s in db:
        if li not in index or lj not in index:
            raise ConfigError(f"label pair ({li}, {lj}) not among levels {levels}")
        key = (index[li], index[lj])
        sums[key] += float(s)
        counts[key] += 1

    z = len(levels)
    means = np.zeros((z, z))
    for key, total in sums.items():
        means[key] = total / counts[key]
    top = means.max()
    w = np.zeros((z, z), dtype=np.int64)
    if top > 0:
        scaled = means * (99.0 / top)
        for i in range(z):
            for j in range(z):
                w[i, j] = snap_weight(scaled[i, j])
    return TransitionMatrix(levels, w)


def planted_transition_matrix(
    z: int = 9,
    seed: int = 0,
    pair: tuple[int, int] = (20, 60),
    background_max: int = 40,
    levels: Sequence[int] | None = None,
) -> TransitionMatrix:
    """Random ``W`` with 99 on both directions of ``pair`` and a lower background.

    Background entries are drawn uniformly from multiples of 10 up to
    ``background_max``, so the optimal schedule alternates between the two
    planted levels.  The two planted diagonal entries are held to 20 each:
    with A=1000, B=7 a larger sum would let rows holding both planted levels
    undercut every one-hot schedule.
    """
    levels = list(levels) if levels is not None else default_levels(z)
    if background_max not in ALLOWED_WEIGHTS or background_max >= 99:
        raise ConfigError("background_max must be a multiple of 10 below 99")
    rng = np.random.default_rng([seed, 2])
    w = 10 * rng.integers(0, background_max // 10 + 1, size=(len(levels), len(levels)))
    a, b = levels.index(pair[0]), levels.index(pair[1])
    w[a, b] = w[b, a] = 99
    w[a, a] = min(w[a, a], 20)
    w[b, b] = min(w[b, b], 20)
    return TransitionMatrix(levels, w)
