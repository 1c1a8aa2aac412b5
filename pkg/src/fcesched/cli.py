"""Command-line entry point: ``fcesched <subcommand>``.

Subcommands::

    gen-traces  synthetic conductance trace -> CSV
    score       trace CSVs -> transition matrix JSON
    solve       transition matrix -> solver result JSONL (+ trajectory CSV)
    sweep       backends x N -> residual energy / S_max CSV + JSON summary
    report      sweep CSV -> text table

Result files are byte-deterministic for fixed seeds: each embeds its full
effective config, and wall-clock times go to a ``.timing.json`` sidecar and
the log instead.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any

import jsonschema

from . import __version__
from .classical import SaParams, brute_result, dp_result, sa_solve
from .errors import (
    ConfigError,
    EmptyInputError,
    FceSchedError,
    InfeasibleError,
    ParseError,
    SizeError,
)
from .evaluation import (
    BACKENDS,
    N_RANGE,
    SweepConfig,
    rows_from_csv,
    sweep,
    sweep_summary,
    sweep_to_csv,
)
from .formats import (
    TRANSITION_MATRIX_SCHEMA,
    dumps,
    matrix_to_dict,
    read_matrix,
    read_trace,
    result_to_jsonl,
    trace_to_csv,
    trajectory_to_csv,
)
from .qubo import DEFAULT_A, DEFAULT_B, build_qubo
from .trace import (
    GeneratorConfig,
    TransitionMatrix,
    build_transition_matrix,
    default_levels,
    generate_synthetic_trace,
    planted_transition_matrix,
    transition_records,
)
from .vqe import NOISE_PROFILES, VqeConfig, vqe_solve

LOGGER = logging.getLogger("fcesched")

#: Seed used when ``--seed`` is not given.
DEFAULT_SEED = 20240607
OUT_DIR_ENV = "FCESCHED_OUT_DIR"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_EMPTY = 4
EXIT_PARSE = 5
EXIT_INFEASIBLE = 6
EXIT_IO = 7


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        payload.update(getattr(record, "fields", {}))
        return json.dumps(payload, sort_keys=True)


def _setup_logging(json_logs: bool, verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter() if json_logs else logging.Formatter("%(levelname)s %(message)s"))
    LOGGER.handlers[:] = [handler]
    LOGGER.setLevel(logging.DEBUG if verbose else logging.INFO)
    LOGGER.propagate = False


def _log(msg: str, **fields: Any) -> None:
    LOGGER.info(msg, extra={"fields": fields})


def parse_n_range(text: str) -> tuple[int, ...]:
    """``"2..6"`` -> (2, 3, 4, 5, 6); ``"2,4,8"`` and ``"5"`` also accepted."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split("..", 1))
            values = tuple(range(lo, hi + 1))
        else:
            values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse N range {text!r}; use e.g. 2..6 or 2,3,4") from None
    if not values:
        raise ConfigError(f"empty N range {text!r}")
    if min(values) < 2:
        raise ConfigError(f"N must be >= 2, got {min(values)}")
    lo, hi = N_RANGE
    if min(values) < lo or max(values) > hi:
        LOGGER.warning("N range %s is outside the studied range %d..%d", text, lo, hi)
    return values


def _out_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    _log(f"wrote {path}", path=str(path), bytes=len(text.encode("utf-8")))


def _write_timing(path: Path, **timing: Any) -> None:
    sidecar = path.with_name(path.name + ".timing.json")
    sidecar.write_text(dumps(timing) + "\n", encoding="utf-8")


def _load_matrix(args: argparse.Namespace) -> tuple[TransitionMatrix, dict]:
    if args.w:
        if not Path(args.w).exists():
            raise FileNotFoundError(f"transition matrix file not found: {args.w}")
        return read_matrix(args.w), {"w": str(args.w)}
    w = planted_transition_matrix(args.levels, seed=args.seed)
    return w, {"w": "planted", "levels": args.levels}


# --------------------------------------------------------------------------
# subcommands


def cmd_gen_traces(args: argparse.Namespace) -> int:
    cfg = GeneratorConfig(
        n_cycles=args.cycles,
        z_levels=args.levels,
        noise_amplitude=args.noise,
        seed=args.seed,
    )
    trace = generate_synthetic_trace(cfg)
    config = {"command": "gen-traces", "version": __version__, **asdict(cfg)}
    _write(_out_path(args, "traces.csv"), trace_to_csv(trace, config))
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    traces = []
    for path in args.traces:
        if not Path(path).exists():
            raise FileNotFoundError(f"trace file not found: {path}")
        traces.append(read_trace(path))
    if args.levels_from_data:
        levels = sorted({lab for t in traces for lab in t.vfb_labels})
    else:
        levels = default_levels(args.levels)
    w = build_transition_matrix(transition_records(traces), levels=levels)
    config = {
        "command": "score",
        "version": __version__,
        "traces": [str(p) for p in args.traces],
        "levels": list(w.levels),
    }
    data = matrix_to_dict(w, config)
    jsonschema.validate(data, TRANSITION_MATRIX_SCHEMA)
    _write(_out_path(args, "w.json"), dumps(data) + "\n")
    return EXIT_OK


def _solve_config(args: argparse.Namespace, source: dict) -> dict:
    cfg: dict[str, Any] = {
        "command": "solve",
        "version": __version__,
        "backend": args.backend,
        "n_orders": args.n,
        "a": args.a,
        "b": args.b,
        "seed": args.seed,
        **source,
    }
    if args.backend == "sa":
        cfg["sa"] = asdict(_sa_params(args, args.seed))
    if args.backend == "vqe":
        cfg["vqe"] = _vqe_config(args, args.evaluator, args.noise, args.seed).to_dict()
    return cfg


def _sa_params(args: argparse.Namespace, seed: int) -> SaParams:
    return SaParams(
        num_reads=args.reads,
        sweeps=args.sweeps,
        beta_hot=args.beta_hot,
        beta_cold=args.beta_cold,
        seed=seed,
    )


def _vqe_config(args: argparse.Namespace, evaluator: str, noise: str | None, seed: int) -> VqeConfig:
    return VqeConfig(
        shots=args.shots,
        iterations=args.iterations,
        trials=args.trials,
        evaluator=evaluator,
        noise=noise,
        seed=seed,
    )


def cmd_solve(args: argparse.Namespace) -> int:
    w, source = _load_matrix(args)
    if args.n < 2:
        raise ConfigError(f"N must be >= 2, got {args.n}")
    if args.n > N_RANGE[1]:
        LOGGER.warning("N=%d is outside the studied range %d..%d", args.n, *N_RANGE)
    q = build_qubo(w, args.n, args.a, args.b)
    config = _solve_config(args, source)
    if args.backend == "dp":
        result = dp_result(w, args.n, q)
    elif args.backend == "brute":
        result = brute_result(q)
    elif args.backend == "sa":
        result = sa_solve(q, _sa_params(args, args.seed))
    else:
        result = vqe_solve(q, _vqe_config(args, args.evaluator, args.noise, args.seed))

    out = _out_path(args, f"solve-{args.backend}-N{args.n}.jsonl")
    _write(out, result_to_jsonl(result, list(w.levels), config))
    timing = {"wall_time_s": round(result.wall_time, 6)}
    if result.trajectory is not None:
        traj = Path(args.trajectory) if args.trajectory else out.with_suffix(".trajectory.csv")
        _write(traj, trajectory_to_csv(result.trajectory, config))
    _write_timing(out, **timing)
    _log(
        "solved",
        backend=result.backend,
        best_energy=result.best_energy,
        feasible=result.feasible,
        s_max=result.s_max,
        wall_time_s=result.wall_time,
    )
    if not result.feasible:
        LOGGER.warning("best bitstring violates the one-hot constraint")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    n_range = parse_n_range(args.n_range)
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    cfg = SweepConfig(
        n_range=n_range,
        repeats=args.repeats,
        seed=args.seed,
        a=args.a,
        b=args.b,
        z_levels=args.levels,
        e_ref_mode=args.e_ref,
        sa=_sa_params(args, args.seed),
        vqe=_vqe_config(args, "exact", None, args.seed),
    )
    w = read_matrix(args.w) if args.w else None
    config = {
        "command": "sweep",
        "version": __version__,
        "backends": backends,
        "w": str(args.w) if args.w else "planted",
        **cfg.to_dict(),
    }
    timings: dict[str, float] = {}

    def progress(tag: str, n: int, repeat: int, seconds: float) -> None:
        timings[f"{tag}/N{n}/r{repeat}"] = round(seconds, 6)
        LOGGER.debug("%s N=%d repeat=%d %.2fs", tag, n, repeat, seconds)

    rows = sweep(backends, cfg, w, progress=progress)
    out = _out_path(args, "sweep.csv")
    _write(out, sweep_to_csv(rows, config))
    summary = Path(args.summary) if args.summary else out.with_suffix(".json")
    _write(summary, dumps(sweep_summary(rows, config)) + "\n")
    _write_timing(out, cells=timings, total_s=round(sum(timings.values()), 6))
    return EXIT_OK


def format_report(rows: list[dict]) -> str:
    header = ["backend", "N", "E_res", "+/-", "S_max", "+/-", "best schedule"]
    table = [header]
    for r in rows:
        def num(x):
            return "-" if x is None else f"{x:.1f}"

        sched = "-" if r["best_schedule"] is None else "->".join(str(v) for v in r["best_schedule"])
        table.append([r["backend"], str(r["n"]), num(r["e_res_mean"]), num(r["e_res_std"]),
                      num(r["s_max_mean"]), num(r["s_max_std"]), sched])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines) + "\n"


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.sweep)
    if not path.exists():
        raise FileNotFoundError(f"sweep file not found: {path}")
    text = format_report(rows_from_csv(path.read_text(encoding="utf-8")))
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_qubo_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--w", help="transition matrix JSON (default: planted matrix)")
    p.add_argument("--levels", type=int, default=9, help="Z for the planted matrix (default 9)")
    p.add_argument("--a", type=float, default=DEFAULT_A, help="one-hot penalty weight")
    p.add_argument("--b", type=float, default=DEFAULT_B, help="transition reward weight")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    sa, vqe = SaParams(), VqeConfig()
    g = p.add_argument_group("simulated annealing")
    g.add_argument("--reads", type=int, default=sa.num_reads)
    g.add_argument("--sweeps", type=int, default=sa.sweeps)
    g.add_argument("--beta-hot", type=float, default=sa.beta_hot)
    g.add_argument("--beta-cold", type=float, default=sa.beta_cold)
    g = p.add_argument_group("vqe")
    g.add_argument("--shots", type=int, default=vqe.shots)
    g.add_argument("--iterations", type=int, default=vqe.iterations, help="NFT parameter updates per trial")
    g.add_argument("--trials", type=int, default=vqe.trials)


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--json-logs", action="store_true", default=argparse.SUPPRESS,
                        help="log JSON lines to stderr")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="fcesched", description=__doc__.split("\n\n")[0], parents=[common]
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-traces", parents=[common], help="generate a synthetic conductance trace")
    p.add_argument("--cycles", type=int, required=True)
    p.add_argument("--levels", type=int, default=9)
    p.add_argument("--noise", type=float, default=GeneratorConfig(n_cycles=1).noise_amplitude)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_traces)

    p = sub.add_parser("score", parents=[common], help="score traces into a transition matrix")
    p.add_argument("traces", nargs="+")
    p.add_argument("--levels", type=int, default=9, help="Z when using the default level grid")
    p.add_argument("--levels-from-data", action=argparse.BooleanOptionalAction, default=False,
                   help="use the labels seen in the traces instead of the default grid")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("solve", parents=[common], help="solve the schedule QUBO with one backend")
    _add_qubo_args(p)
    p.add_argument("--backend", choices=["dp", "sa", "vqe", "brute"], required=True)
    p.add_argument("-N", dest="n", type=int, required=True, help="number of orders")
    _add_solver_args(p)
    p.add_argument("--evaluator", choices=["exact", "sampled"], default="exact")
    p.add_argument("--noise", choices=sorted(NOISE_PROFILES), help="readout noise profile")
    p.add_argument("--trajectory", help="trajectory CSV path (vqe only)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="residual energy and S_max over N")
    _add_qubo_args(p)
    p.add_argument("--backends", default="dp,sa,vqe-exact",
                   help=f"comma list from {', '.join(BACKENDS)}; vqe-noisy:<profile> picks a profile")
    p.add_argument("-N", dest="n_range", default="2..10", help="e.g. 2..6 or 2,4,6")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--e-ref", choices=["exact", "sa-min"], default="exact")
    _add_solver_args(p)
    p.set_defaults(trials=5)
    p.add_argument("--summary", help="JSON summary path (default: next to the CSV)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="print a sweep CSV as a table")
    p.add_argument("sweep")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


_GLOBAL_DEFAULTS = {"seed": DEFAULT_SEED, "json_logs": False, "verbose": False}

_EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (ParseError, EXIT_PARSE),
    (EmptyInputError, EXIT_EMPTY),
    (InfeasibleError, EXIT_INFEASIBLE),
    (ConfigError, EXIT_CONFIG),
    (SizeError, EXIT_CONFIG),
    (jsonschema.ValidationError, EXIT_ERROR),
    (FceSchedError, EXIT_ERROR),
    (OSError, EXIT_IO),
]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    _setup_logging(args.json_logs, args.verbose)
    try:
        return args.func(args)
    except tuple(exc for exc, _ in _EXIT_CODES) as exc:
        code = next(c for e, c in _EXIT_CODES if isinstance(exc, e))
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        return code


if __name__ == "__main__":
    sys.exit(main())
