"""Trial aggregation: residual energy and best S_max as a function of N.

A sweep runs every backend at every N for a number of repeats.  Repeat
``r`` at size ``N`` uses one derived seed for all backends, so VQE variants
start from identical angles (common random numbers) and differ only in how
the objective is evaluated.
"""

from __future__ import annotations

import csv
import io
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .classical import SaParams, SolverResult, TrialRecord, brute_result, dp_exact, dp_result, sa_solve
from .errors import ConfigError, EmptyInputError, InfeasibleError
from .formats import config_line
from .qubo import DEFAULT_A, DEFAULT_B, build_qubo, s_max, schedule_labels
from .trace import TransitionMatrix, planted_transition_matrix
from .vqe import NOISE_PROFILES, VqeConfig, vqe_solve

BACKENDS = ("sa", "vqe-exact", "vqe-sampled", "vqe-noisy", "brute", "dp")
DEFAULT_NOISE_PROFILE = "nazca"
N_RANGE = (2, 10)

SWEEP_COLUMNS = ["backend", "n", "e_res_mean", "e_res_std", "s_max_mean", "s_max_std", "best_schedule"]


def parse_backend(tag: str) -> tuple[str, str | None]:
    """Split ``vqe-noisy:brussels`` into ``("vqe-noisy", "brussels")``."""
    name, _, profile = tag.partition(":")
    if name not in BACKENDS:
        raise ConfigError(f"unknown backend {tag!r}; choose from {', '.join(BACKENDS)}")
    if name != "vqe-noisy":
        if profile:
            raise ConfigError(f"backend {name!r} takes no noise profile")
        return name, None
    profile = profile or DEFAULT_NOISE_PROFILE
    if profile not in NOISE_PROFILES:
        raise ConfigError(f"unknown noise profile {profile!r}")
    return name, profile


def _energies(trials) -> np.ndarray:
    out = []
    for t in trials:
        if isinstance(t, SolverResult):
            out.extend(r.energy for r in t.per_trial)
        elif isinstance(t, TrialRecord):
            out.append(t.energy)
        else:
            out.append(float(t))
    return np.asarray(out, dtype=float)


def residual_energy(trials, e_ref: float) -> tuple[float, float]:
    """``(mean(E) - e_ref, std(E))`` over trials.

    ``trials`` may hold energies, :class:`TrialRecord` or :class:`SolverResult`
    objects; a result contributes each of its trials.
    """
    e = _energies(trials)
    if e.size == 0:
        raise EmptyInputError("residual energy needs at least one trial")
    return float(e.mean() - e_ref), float(e.std())


def best_smax(trials: Sequence[TrialRecord], w: TransitionMatrix) -> tuple[list[int], float]:
    """Highest-scoring feasible schedule; ties go to the earliest trial."""
    best = None
    for t in trials:
        if not t.feasible:
            continue
        score = s_max(w, t.schedule)
        if best is None or score > best[1]:
            best = (list(t.schedule), score)
    if best is None:
        raise InfeasibleError(f"none of the {len(trials)} trials is feasible")
    return best


@dataclass
class BenchmarkRun:
    backend: str
    n_orders: int
    z_levels: int
    result: SolverResult
    e_ref: float
    e_ref_mode: Literal["exact", "sa-min"] = "exact"
    w: TransitionMatrix | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.e_ref_mode == "exact":
            low = min(t.energy for t in self.result.per_trial)
            if low < self.e_ref - 1e-6:
                raise ConfigError(f"trial energy {low} lies below the exact reference {self.e_ref}")

    @property
    def e_res(self) -> float:
        return residual_energy([self.result], self.e_ref)[0]

    @property
    def best(self) -> tuple[list[int], float] | None:
        try:
            return best_smax(self.result.per_trial, self.w)
        except InfeasibleError:
            return None


@dataclass(frozen=True)
class SweepConfig:
    n_range: tuple[int, ...] = tuple(range(2, 11))
    repeats: int = 5
    seed: int = 0
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    z_levels: int = 9
    e_ref_mode: Literal["exact", "sa-min"] = "exact"
    sa: SaParams = field(default_factory=SaParams)
    vqe: VqeConfig = field(default_factory=lambda: VqeConfig(trials=5))

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.n_range or min(self.n_range) < 2:
            raise ConfigError("every N must be >= 2")
        if self.e_ref_mode not in ("exact", "sa-min"):
            raise ConfigError(f"e_ref_mode must be 'exact' or 'sa-min', got {self.e_ref_mode!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        return d


def cell_seed(seed: int, n: int, repeat: int) -> int:
    return int(np.random.SeedSequence([seed, n, repeat]).generate_state(1)[0])


def _vqe_config(base: VqeConfig, evaluator: str, noise: str | None, seed: int) -> VqeConfig:
    d = base.to_dict()
    d.update(evaluator=evaluator, noise=noise, noise_eps=None, seed=seed)
    return VqeConfig(**d)


def run_backend(tag: str, w: TransitionMatrix, n: int, cfg: SweepConfig, seed: int) -> SolverResult:
    name, profile = parse_backend(tag)
    q = build_qubo(w, n, cfg.a, cfg.b)
    if name == "dp":
        return dp_result(w, n, q)
    if name == "brute":
        return brute_result(q)
    if name == "sa":
        return sa_solve(q, SaParams(**dict(asdict(cfg.sa), seed=seed)))
    evaluator = "exact" if name == "vqe-exact" else "sampled"
    return vqe_solve(q, _vqe_config(cfg.vqe, evaluator, profile, seed))


@dataclass
class SweepRow:
    backend: str
    n: int
    e_res_mean: float
    e_res_std: float
    s_max_mean: float | None
    s_max_std: float | None
    best_schedule: list[int] | None
    e_res_runs: list[float]
    s_max_runs: list[float | None]

    def csv_fields(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(float(x))

        sched = "" if self.best_schedule is None else " ".join(str(v) for v in self.best_schedule)
        return [self.backend, str(self.n), num(self.e_res_mean), num(self.e_res_std),
                num(self.s_max_mean), num(self.s_max_std), sched]


MatrixSource = TransitionMatrix | Callable[[int], TransitionMatrix] | None


def _matrix_for(source: MatrixSource, cfg: SweepConfig, repeat: int) -> TransitionMatrix:
    if source is None:
        return planted_transition_matrix(cfg.z_levels, seed=cfg.seed + repeat)
    if isinstance(source, TransitionMatrix):
        return source
    return source(repeat)


def sweep(
    backends: Sequence[str],
    cfg: SweepConfig | None = None,
    w: MatrixSource = None,
    progress: Callable[[str, int, int, float], None] | None = None,
) -> list[SweepRow]:
    """One row per (backend, N), aggregated over ``cfg.repeats`` runs.

    ``w`` is a fixed matrix, a ``repeat -> matrix`` callable, or ``None`` for
    the planted family (repeat ``r`` uses planted seed ``cfg.seed + r``).
    Each run contributes its trial-mean residual energy and its best S_max;
    rows report mean and std of these over repeats.  Runs where no trial is
    feasible are left out of the S_max statistics.
    """
    cfg = cfg or SweepConfig()
    for tag in backends:
        parse_backend(tag)
    if not backends:
        raise ConfigError("no backends given")
    runs: dict[tuple[str, int], list[BenchmarkRun]] = {(b, n): [] for b in backends for n in cfg.n_range}
    for r in range(cfg.repeats):
        wm = _matrix_for(w, cfg, r)
        for n in cfg.n_range:
            seed = cell_seed(cfg.seed, n, r)
            results = {}
            for tag in backends:
                start = time.perf_counter()
                results[tag] = run_backend(tag, wm, n, cfg, seed)
                if progress is not None:
                    progress(tag, n, r, time.perf_counter() - start)
            if cfg.e_ref_mode == "exact":
                e_ref = dp_exact(wm, n, cfg.b)[2]
            else:
                sa = results.get("sa") or run_backend("sa", wm, n, cfg, seed)
                e_ref = min(t.energy for t in sa.per_trial)
            for tag in backends:
                runs[tag, n].append(
                    BenchmarkRun(tag, n, wm.z, results[tag], e_ref, cfg.e_ref_mode, wm)
                )

    rows = []
    for tag in backends:
        for n in cfg.n_range:
            cell = runs[tag, n]
            e_res = [run.e_res for run in cell]
            bests = [run.best for run in cell]
            scores = [b[1] for b in bests if b is not None]
            top = None
            for run, b in zip(cell, bests):
                if b is not None and (top is None or b[1] > top[1]):
                    top = (schedule_labels(run.w, b[0]), b[1])
            rows.append(
                SweepRow(
                    backend=tag,
                    n=n,
                    e_res_mean=float(np.mean(e_res)),
                    e_res_std=float(np.std(e_res)),
                    s_max_mean=float(np.mean(scores)) if scores else None,
                    s_max_std=float(np.std(scores)) if scores else None,
                    best_schedule=None if top is None else top[0],
                    e_res_runs=e_res,
                    s_max_runs=[None if b is None else b[1] for b in bests],
                )
            )
    return rows


def sweep_to_csv(rows: Sequence[SweepRow], config: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(config_line(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def sweep_summary(rows: Sequence[SweepRow], config: dict | None = None) -> dict:
    def clean(x):
        return None if x is None or (isinstance(x, float) and math.isnan(x)) else x

    return {
        "config": config,
        "rows": [{k: clean(v) for k, v in asdict(row).items()} for row in rows],
    }


def rows_from_csv(text: str) -> list[dict]:
    """Read back a sweep CSV (schedules as lists of percent labels)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise EmptyInputError("sweep file is empty")
    out = []
    for rec in csv.DictReader(lines):
        row = {"backend": rec["backend"], "n": int(rec["n"])}
        for key in SWEEP_COLUMNS[2:6]:
            row[key] = float(rec[key]) if rec[key] else None
        sched = rec["best_schedule"]
        row["best_schedule"] = [int(v) for v in sched.split()] if sched else None
        out.append(row)
    return out
