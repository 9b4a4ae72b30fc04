"""Command-line front end with bit-stable CSV/JSON emission.

One binary, subcommand style.  Each run writes (with --out) a fixed-header
per-replication CSV and a JSON summary embedding the fully resolved
configuration, so any emitted table is reproducible from its sidecar.  Floats
are serialized with 17 significant digits; row order is replication order;
reruns of the same configuration are byte-identical regardless of the worker
count (wall_time in the JSON summary is the sole exception).

Exit codes: 0 success, 2 usage error, 3 runtime budget or IO error.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from . import __version__
from .harness import default_workers, kind_columns
from .holes import HoleExperimentConfig, run_hole_experiment


class UsageError(Exception):
    pass


_SIXTH = 1.0 / 6.0

# flag name -> (python type, default); None default means "must be provided"
_COMMON = {
    "reps": (int, 100),
    "seed": (int, 0),
    "workers": (int, "optional"),
    "level": (float, 0.99),
}

_SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "speed": {**_COMMON, "epsilon": (float, None), "n": (int, None),
              "halfspace": (int, "optional")},
    "holes": {**_COMMON, "n": (int, None), "m": (int, None)},
    "visits": {**_COMMON, "r": (int, None), "n_domain": (int, None)},
    "hitting": {**_COMMON, "r": (int, None), "start_x": (int, "optional"),
                "start_y": (int, "optional")},
    "avoid-origin": {**_COMMON, "k_list": (str, "4,9,16,25"),
                     "multiplier": (float, 1.0)},
    "blocks": {**_COMMON, "epsilon": (float, None), "n": (int, None),
               "drift_ref": (float, "optional")},
    "coupling": {**_COMMON, "epsilon": (float, None), "n": (int, None)},
    "alpha": {"base_n": (int, None), "base_alpha": (float, None),
              "lam": (int, None), "top_n": (int, None)},
    "oracle": {"what": (str, "fixture"), "r": (float, "optional"),
               "x": (int, "optional"), "y": (int, "optional"),
               "big_r": (float, "optional"), "n": (int, "optional")},
}

_KIND_BY_SUBCOMMAND = {
    "speed": "speed",
    "holes": "holes",
    "visits": "visit_tail",
    "hitting": "hitting",
    "avoid-origin": "avoid_origin",
    "blocks": "blocks",
    "coupling": "coupling_audit",
}


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved invocation."""

    subcommand: str
    options: dict
    out: Optional[str] = None
    format: str = "csv"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erwlab",
        description="Seeded lattice-walk experiments with reproducible output.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        for flag, (ftype, _default) in schema.items():
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                           type=ftype, default=None)
        p.add_argument("--config", dest="config", default=None)
        p.add_argument("--out", dest="out", default=None)
        p.add_argument("--format", dest="format", choices=("csv", "json"),
                       default=None)
    return parser


def _coerce(flag: str, ftype, value):
    if value is None:
        return None
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise UsageError(f"--{flag} expects an integer, got {value!r}")
        out = int(value)
        if isinstance(value, float) and value != out:
            raise UsageError(f"--{flag} expects an integer, got {value!r}")
        return out
    if ftype is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise UsageError(f"--{flag} expects a number, got {value!r}") from None
    return str(value)


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Resolve argv plus optional config file into a validated RunConfig.

    Precedence: explicit flags > config file > defaults.
    """
    parser = _build_parser()
    ns = parser.parse_args(argv)
    schema = _SCHEMAS[ns.subcommand]

    file_values: dict = {}
    if ns.config is not None:
        try:
            with open(ns.config, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
        if "subcommand" in file_values and file_values["subcommand"] != ns.subcommand:
            raise UsageError("config file subcommand does not match the invocation")
        unknown = set(file_values) - set(schema) - {"out", "format", "subcommand"}
        if unknown:
            raise UsageError(f"unknown config keys for {ns.subcommand}: {sorted(unknown)}")

    options = {}
    for flag, (ftype, default) in schema.items():
        value = getattr(ns, flag)
        if value is None and flag in file_values:
            value = _coerce(flag, ftype, file_values[flag])
        if value is None:
            if default is None:
                raise UsageError(f"{ns.subcommand} requires --{flag.replace('_', '-')}")
            value = None if default == "optional" else default
        options[flag] = value
    if "workers" in options and options["workers"] is None:
        options["workers"] = default_workers()

    out = ns.out if ns.out is not None else file_values.get("out")
    fmt = ns.format if ns.format is not None else file_values.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {fmt!r}")

    config = RunConfig(subcommand=ns.subcommand, options=options, out=out, format=fmt)
    _validate(config)
    return config


def _require_positive(options: dict, *names: str) -> None:
    for name in names:
        if options[name] is not None and options[name] < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be a positive integer")


def _validate(config: RunConfig) -> None:
    opts = config.options
    if "epsilon" in opts:
        eps = opts["epsilon"]
        if not 0.0 < eps <= _SIXTH:
            raise UsageError("epsilon must satisfy 0 < epsilon <= 1/6")
    if "reps" in opts:
        _require_positive(opts, "reps", "workers")
        if not 0 <= opts["seed"] < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if not 0.0 < opts["level"] < 1.0:
            raise UsageError("level must lie strictly between 0 and 1")
    sub = config.subcommand
    if sub == "speed":
        _require_positive(opts, "n")
    elif sub == "holes":
        if opts["n"] < 3:
            raise UsageError("holes requires n >= 3")
        if opts["m"] < 0:
            raise UsageError("holes requires m >= 0")
    elif sub == "visits":
        if opts["r"] < 4:
            raise UsageError("visits requires r >= 4")
        if opts["n_domain"] <= 4 * opts["r"]:
            raise UsageError("visits requires n-domain > 4r")
    elif sub == "hitting":
        _require_positive(opts, "r")
    elif sub == "avoid-origin":
        opts["k_list"] = _parse_k_list(opts["k_list"])
        if opts["multiplier"] <= 0:
            raise UsageError("multiplier must be positive")
    elif sub == "blocks":
        from .oracles import block_size

        _require_positive(opts, "n")
        if block_size(opts["n"]) < 4:
            raise UsageError("blocks requires n large enough for a block size of at least 4")
    elif sub == "coupling":
        _require_positive(opts, "n")
    elif sub == "alpha":
        _require_positive(opts, "base_n", "lam", "top_n")
        if not 0.0 < opts["base_alpha"] <= 1.0:
            raise UsageError("base-alpha must lie in (0, 1]")
    elif sub == "oracle":
        if opts["what"] not in ("fixture", "kappa", "kernel", "hit", "annulus", "block-size"):
            raise UsageError(f"unknown oracle query {opts['what']!r}")


def _parse_k_list(value) -> List[int]:
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [part for part in str(value).split(",") if part.strip()]
    try:
        ks = [int(item) for item in items]
    except (TypeError, ValueError):
        raise UsageError("k-list must be a comma-separated list of integers") from None
    if not ks or any(k < 1 for k in ks):
        raise UsageError("k-list must contain positive integers")
    return ks


# emission ------------------------------------------------------------------

def format_number(value) -> str:
    """CSV/JSON number text: integers bare, reals via %.17g (round-trip exact)."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return f"{value:.17g}"
    raise TypeError(f"not a number: {value!r}")


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(key))}: {_json_text(val, indent + 1)}'
            for key, val in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = ",\n".join(f"{pad}  {_json_text(val, indent + 1)}" for val in seq)
        return "[\n" + items + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float)):
        return format_number(obj)
    return json.dumps(str(obj))


def _csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            value = row[col]
            cells.append("" if value is None else format_number(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _estimate_dict(est) -> dict:
    return {
        "mean": est.mean,
        "stderr": est.stderr,
        "count": est.count,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "ci_level": est.ci_level,
        "degenerate": est.degenerate,
    }


def emit(results: dict, config: RunConfig, wall_time: float) -> dict:
    """Write row/summary files (with --out) and return the summary object."""
    summary = {
        "subcommand": config.subcommand,
        "params": dict(results.get("params", config.options)),
        "estimates": {name: _estimate_dict(est)
                      for name, est in results.get("estimates", {}).items()},
        "seed": config.options.get("seed"),
        "version": __version__,
        "wall_time": wall_time,
    }
    if "values" in results:
        summary["values"] = results["values"]
    if "extras" in results:
        summary["extras"] = results["extras"]
    rows = results.get("rows")
    columns = results.get("columns")
    if config.format == "json" and rows is not None:
        summary["rows"] = [
            {col: row[col] for col in columns} for row in rows
        ]
    if config.out is not None:
        os.makedirs(config.out, exist_ok=True)
        if config.format == "csv" and rows is not None:
            path = os.path.join(config.out, f"{config.subcommand}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(_csv_text(columns, rows))
        spath = os.path.join(config.out, f"{config.subcommand}_summary.json")
        with open(spath, "w", encoding="utf-8") as fh:
            fh.write(_json_text(summary) + "\n")
    return summary


# runners -------------------------------------------------------------------

def _run_speed(opts: dict) -> dict:
    from .experiments import speed_experiment
    from .walks import ExternalConfiguration

    config = None
    if opts.get("halfspace") is not None:
        config = ExternalConfiguration.half_space(opts["halfspace"])
    estimates, rows = speed_experiment(
        opts["epsilon"], opts["n"], opts["reps"], seed=opts["seed"],
        workers=opts["workers"], level=opts["level"], config=config,
    )
    return {"estimates": estimates, "rows": rows, "columns": kind_columns("speed")}


def _run_holes(opts: dict) -> dict:
    config = HoleExperimentConfig(n=opts["n"], m=opts["m"], reps=opts["reps"],
                                  seed=opts["seed"])
    estimate, rows = run_hole_experiment(config, workers=opts["workers"],
                                         level=opts["level"])
    params = dict(opts)
    params["mu"] = config.mu
    params["threshold"] = config.threshold
    return {
        "estimates": {"p_holes_below_threshold": estimate},
        "rows": rows,
        "columns": kind_columns("holes"),
        "params": params,
    }


def _run_visits(opts: dict) -> dict:
    from .experiments import visit_tail_experiment, visit_tail_table

    estimates, rows = visit_tail_experiment(
        opts["r"], opts["n_domain"], opts["reps"], seed=opts["seed"],
        workers=opts["workers"], level=opts["level"],
    )
    reference, table = visit_tail_table(
        [row["visits"] for row in rows], opts["r"], opts["n_domain"]
    )
    return {
        "estimates": estimates,
        "rows": rows,
        "columns": kind_columns("visit_tail"),
        "extras": {
            "continuation_reference": reference,
            "continuation_ratios": [
                {"j": j, "count": count, "ratio": ratio} for j, count, ratio in table
            ],
        },
    }


def _run_hitting(opts: dict) -> dict:
    from .experiments import hitting_experiment
    from .oracles import exact_hit_probability

    start = None
    if opts.get("start_x") is not None or opts.get("start_y") is not None:
        start = (opts.get("start_x") or 0, opts.get("start_y") or 0)
    estimates, rows = hitting_experiment(
        opts["r"], opts["reps"], seed=opts["seed"], workers=opts["workers"],
        level=opts["level"], start=start,
    )
    probe = start if start is not None else (opts["r"], 0)
    return {
        "estimates": estimates,
        "rows": rows,
        "columns": kind_columns("hitting"),
        "extras": {"exact": exact_hit_probability(probe, opts["r"]),
                   "start": list(probe)},
    }


def _run_avoid_origin(opts: dict) -> dict:
    from .experiments import avoid_origin_experiment, select_decay_exponent

    results = avoid_origin_experiment(
        opts["k_list"], opts["reps"], seed=opts["seed"], workers=opts["workers"],
        level=opts["level"], multiplier=opts["multiplier"],
    )
    estimates = {}
    rows: List[dict] = []
    for k in opts["k_list"]:
        est, k_rows = results[k]
        estimates[f"p_avoid_k{k}"] = est
        rows.extend(k_rows)
    extras = {}
    means = [results[k][0].mean for k in opts["k_list"]]
    if len(opts["k_list"]) >= 3 and all(m > 0 for m in means):
        best, table = select_decay_exponent(opts["k_list"], means)
        extras = {"best_beta": best,
                  "r_squared": {str(b): v for b, v in table.items()}}
    return {
        "estimates": estimates,
        "rows": rows,
        "columns": kind_columns("avoid_origin"),
        "extras": extras,
    }


def _run_blocks(opts: dict) -> dict:
    from .experiments import block_diagnostics

    estimates, rows = block_diagnostics(
        opts["epsilon"], opts["n"], opts["reps"], seed=opts["seed"],
        workers=opts["workers"], level=opts["level"],
        drift_ref=opts.get("drift_ref"),
    )
    return {"estimates": estimates, "rows": rows, "columns": kind_columns("blocks")}


def _run_coupling(opts: dict) -> dict:
    from .experiments import coupling_audit

    estimates, rows = coupling_audit(
        opts["epsilon"], opts["n"], opts["reps"], seed=opts["seed"],
        workers=opts["workers"], level=opts["level"],
    )
    return {
        "estimates": estimates,
        "rows": rows,
        "columns": kind_columns("coupling_audit"),
        "extras": {"total_violations": sum(row["violations"] for row in rows)},
    }


def _run_alpha(opts: dict) -> dict:
    from .oracles import alpha_schedule

    try:
        schedule = alpha_schedule(opts["base_n"], opts["base_alpha"], opts["lam"],
                                  opts["top_n"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for i in range(schedule.levels):
        rows.append({
            "level": i,
            "n": schedule.ns[i],
            "k": schedule.ks[i],
            "ratio": schedule.ratios[i],
            "alpha": schedule.alphas[i],
        })
    return {
        "rows": rows,
        "columns": ("level", "n", "k", "ratio", "alpha"),
        "values": {"inf_alpha": schedule.inf_alpha, "levels": schedule.levels},
    }


def _run_oracle(opts: dict) -> dict:
    from . import oracles

    what = opts["what"]
    if what == "fixture":
        values = oracles.oracle_fixture()
    elif what == "kappa":
        values = {"kappa": oracles.potential_kernel_constant()}
    elif what == "kernel":
        if opts.get("x") is None or opts.get("y") is None:
            raise UsageError("oracle kernel needs --x and --y")
        point = (opts["x"], opts["y"])
        values = {
            "point": list(point),
            "exact": oracles.potential_kernel_exact(point),
            "asymptotic": oracles.potential_kernel_asymptotic(point),
        }
    elif what == "hit":
        if opts.get("r") is None:
            raise UsageError("oracle hit needs --r")
        r = opts["r"]
        start = (opts["x"] if opts.get("x") is not None else int(r),
                 opts["y"] if opts.get("y") is not None else 0)
        values = {
            "r": r,
            "start": list(start),
            "p_hit": oracles.exact_hit_probability(start, r),
        }
    elif what == "annulus":
        if opts.get("r") is None or opts.get("big_r") is None:
            raise UsageError("oracle annulus needs --r and --big-r")
        values = {
            "r": opts["r"],
            "big_r": opts["big_r"],
            "escape": oracles.annulus_escape(opts["r"], opts["big_r"]),
        }
    else:
        if opts.get("n") is None:
            raise UsageError("oracle block-size needs --n")
        values = {"n": opts["n"], "block_size": oracles.block_size(opts["n"])}
    return {"values": values}


_RUNNERS = {
    "speed": _run_speed,
    "holes": _run_holes,
    "visits": _run_visits,
    "hitting": _run_hitting,
    "avoid-origin": _run_avoid_origin,
    "blocks": _run_blocks,
    "coupling": _run_coupling,
    "alpha": _run_alpha,
    "oracle": _run_oracle,
}


def run_config(config: RunConfig) -> dict:
    return _RUNNERS[config.subcommand](dict(config.options))


def config_from_summary(summary: dict) -> RunConfig:
    """Rebuild the invocation recorded in a summary sidecar."""
    subcommand = summary["subcommand"]
    schema = _SCHEMAS[subcommand]
    options = {flag: summary["params"][flag] for flag in schema
               if flag in summary["params"]}
    return RunConfig(subcommand=subcommand, options=options)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if "--format" in argv and "json" in argv:
            print(_json_text({"error": str(exc), "rows": []}))
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.monotonic()
    try:
        results = run_config(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if config.format == "json":
            print(_json_text({"subcommand": config.subcommand, "error": str(exc),
                              "rows": []}))
        return 2
    except (RuntimeError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    wall = time.monotonic() - start
    try:
        summary = emit(results, config, wall)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(_json_text(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
