"""Command-line entry point: ``dimwitness <command> ...``.

Exit codes: 0 success, 1 validation or usage error, 2 numeric-integrity
error (including a replay that does not reproduce its result file).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, classical, registry, stats
from . import io as dio
from ._backend import BACKEND
from .core import Field, build_probability_matrix, hadamard_bound, witness
from .errors import NumericIntegrityError, WitnessError
from .optimizer import AngleParametrization, AnnealSchedule, optimize, rank_sweep

SEED_ENV = "DIMWIT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _envelope(command: str, config: dict, result: dict) -> dict:
    return {"format": dio.RESULT_FORMAT, "version": dio.FORMAT_VERSION, "library_version": __version__,
            "backend": BACKEND, "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "command": command, "config": config, "result": result}


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_source(args):
    if getattr(args, "entry", None):
        return registry.build(args.entry)
    if getattr(args, "scenario", None):
        return dio.load_scenario(args.scenario)
    raise UsageError("give --scenario FILE or --entry NAME")


# runners shared by the commands and by replay

def run_optimize(config: dict) -> dict:
    schedule = AnnealSchedule(**config["schedule"])
    field = Field.parse(config["field"])
    common = dict(restarts=int(config["restarts"]), jobs=int(config.get("jobs", 1)),
                  do_refine=bool(config["refine"]))
    if config["rank_profile"] == "auto":
        sweep = rank_sweep(int(config["dim"]), int(config["k"]), field, schedule, **common)
        res = sweep.best
        extra = {"rank": sweep.best_rank, "ties": sweep.ties,
                 "rank_values": {str(t): r.value for t, r in sweep.results.items()}}
    else:
        params = AngleParametrization.uniform(int(config["dim"]), int(config["k"]), field,
                                              int(config["rank_profile"]))
        res = optimize(params, schedule, **common)
        extra = {"rank": int(config["rank_profile"])}
    value = res.value
    if not np.isfinite(value) or value > hadamard_bound(int(config["k"])) + 1e-9:
        raise NumericIntegrityError(f"optimizer returned an impossible value {value!r}")
    return {"value": value, "anneal_value": res.best_value, "refined_value": res.refined_value,
            "restart_values": list(res.restart_values), "trace": list(res.trace),
            "evaluations": res.evaluations, "angles": [float(a) for a in res.best_angles],
            "parametrization": res.parametrization.to_dict(),
            "scenario": dio.scenario_to_dict(res.scenario), **extra}


def run_simulate(config: dict):
    """Return ``(result, runs_csv_text)`` for a simulation config."""
    s = dio.scenario_from_dict(config["scenario"])
    N, trials, seed, z = int(config["shots"]), int(config["trials"]), int(config["seed"]), float(config["z"])
    pm = build_probability_matrix(s)
    shots = stats.simulate_shots(pm, N, seed, trials=trials)
    model = None if config.get("variance", "plugin") == "plugin" else pm
    out = stats.detect_trials(shots, z=z, model=model)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "witness_hat", "variance", "z", "verdict"])
    for t in range(trials):
        verdict = stats.Verdict.EXCESS_DIMENSION if out["excess"][t] else stats.Verdict.CONSISTENT
        w.writerow([t, repr(float(out["witness_hat"][t])), repr(float(out["variance"][t])),
                    repr(float(out["z"][t])), verdict.value])
    text = buf.getvalue()
    wh = out["witness_hat"]
    result = {"trials": trials, "witness": witness(pm), "predicted_variance": stats.null_variance(pm, N),
              "witness_hat_mean": float(np.mean(wh)), "witness_hat_variance": float(np.var(wh)),
              "excess_fraction": float(np.mean(out["excess"])),
              "runs_sha256": hashlib.sha256(text.encode()).hexdigest()}
    return result, text


# commands

def cmd_eval(args) -> int:
    s = _load_source(args)
    pm = build_probability_matrix(s)
    w = witness(pm)
    print(f"W = {w:.6f}")
    print(f"|W| = {abs(w):.6f}")
    if args.csv:
        _emit(dio.probability_matrix_to_csv(pm), args.csv)
    if args.out:
        config = {"scenario": dio.scenario_to_dict(s)}
        dio.write_json(args.out, _envelope("eval", config, {"witness": w,
                                                           "digest": dio.scenario_digest(s)}))
    return 0


def _optimize_config(args) -> dict:
    seed = default_seed() if args.seed is None else args.seed
    schedule = AnnealSchedule(t0=args.t0, ratio=args.ratio, precision=args.precision,
                              sweeps_per_stage=args.sweeps, max_stages=args.max_stages, seed=seed)
    rp = args.rank_profile
    if rp != "auto":
        try:
            rp = int(rp)
        except ValueError:
            raise UsageError("--rank-profile must be 'auto' or an integer") from None
    return {"dim": args.dim, "k": args.k, "field": Field.parse(args.field).value, "rank_profile": rp,
            "schedule": schedule.to_dict(), "restarts": args.restarts, "refine": not args.no_refine}


def cmd_optimize(args) -> int:
    config = _optimize_config(args)
    result = run_optimize({**config, "jobs": args.jobs})
    print(f"|W| = {result['value']:.10f}  (anneal {result['anneal_value']:.10f}, rank {result['rank']})")
    if args.out:
        dio.write_json(args.out, _envelope("optimize", config, result))
    if args.trace_csv:
        _emit(dio.trace_to_csv(result["trace"]), args.trace_csv)
    return 0


def cmd_classical_max(args) -> int:
    if args.exhaustive:
        value, mat = classical.exhaustive_binary_max(args.k)
        method = "exhaustive"
    elif args.table:
        value, tab = classical.verify_table2(args.k)
        mat = classical.extremal_matrix(args.k)
        if value != tab:
            raise NumericIntegrityError(f"stored matrix gives {value}, table says {tab}")
        method = "table"
    else:
        seed = default_seed() if args.seed is None else args.seed
        value, mat = classical.binary_anneal_max(args.k, restarts=args.restarts, seed=seed)
        method = "anneal"
    print(value)
    for row in mat.rows():
        print(row)
    print("1" * (args.k + 1))
    if args.out:
        config = {"k": args.k, "method": method}
        dio.write_json(args.out, _envelope("classical-max", config, {"value": value, "rows": mat.rows()}))
    return 0


def cmd_registry(args) -> int:
    if args.action == "list":
        for name in registry.list_entries():
            e = registry.entry(name)
            tags = f" [{', '.join(e.tags)}]" if e.tags else ""
            print(f"{name:32s} {e.expected:.10f}  {e.expected_expr}{tags}")
        return 0
    if args.action == "export":
        _emit(dio.canonical_dumps(registry.export_catalog()), args.out)
        return 0
    if args.all == bool(args.name):
        raise UsageError("registry verify needs exactly one of NAME or --all")
    results = registry.verify_all() if args.all else [registry.verify(args.name)]
    if args.json:
        print(dio.canonical_dumps([r.to_dict() for r in results]), end="")
    else:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.name:32s} computed={r.computed:.12f} expected={r.expected:.12f}")
    return 0 if all(r.passed for r in results) else 2


def cmd_simulate(args) -> int:
    s = _load_source(args)
    seed = default_seed() if args.seed is None else args.seed
    config = {"scenario": dio.scenario_to_dict(s), "shots": args.shots, "trials": args.trials,
              "seed": seed, "z": args.z, "variance": args.variance}
    result, text = run_simulate(config)
    _emit(text, args.out)
    result_path = args.result or (None if args.out in (None, "-") else str(Path(args.out).with_suffix(".json")))
    if result_path:
        dio.write_json(result_path, _envelope("simulate", config, result))
    print(f"excess fraction {result['excess_fraction']:.6f} over {args.trials} trials", file=sys.stderr)
    return 0


def cmd_detect(args) -> int:
    counts, N = dio.counts_from_csv(Path(args.counts).read_text())
    shots = stats.ShotData(N, counts)
    model = None
    if args.scenario:
        model = dio.load_scenario(args.scenario)
        if model.k != shots.k:
            raise UsageError(f"scenario has k={model.k} but counts describe k={shots.k}")
    if args.variance == "plugin":
        model = None
    elif model is None:
        raise UsageError("--variance model needs --scenario")
    decision = stats.detect(shots, z=args.z, order=args.order, model=model)
    _emit(dio.canonical_dumps(decision.to_dict()), args.out)
    return 0


def _summary_row(path, doc) -> dict:
    res, cfg = doc["result"], doc["config"]
    row = {"file": str(path), "command": doc["command"], "version": doc.get("library_version", "?")}
    if doc["command"] == "optimize":
        row.update(dim=cfg["dim"], k=cfg["k"], field=cfg["field"], rank=res.get("rank"),
                   seed=cfg["schedule"]["seed"], value=f"{res['value']:.10f}",
                   stages=len(res["trace"]), evaluations=res["evaluations"])
    elif doc["command"] == "simulate":
        row.update(shots=cfg["shots"], trials=cfg["trials"], seed=cfg["seed"],
                   excess_fraction=f"{res['excess_fraction']:.6f}",
                   witness_hat_variance=f"{res['witness_hat_variance']:.6e}")
    else:
        row.update({k: v for k, v in res.items() if isinstance(v, (int, float, str))})
    return row


def cmd_report(args) -> int:
    docs = [(p, dio.load_result(p)) for p in args.results]
    rows = [_summary_row(p, d) for p, d in docs]
    if len(rows) == 1:
        for key, val in rows[0].items():
            print(f"{key:22s} {val}")
    else:
        keys = list(dict.fromkeys(k for r in rows for k in r))
        width = max(len(k) for k in keys)
        cols = [max(len(str(r.get(k, "-"))) for k in keys) for r in rows]
        for k in keys:
            print(f"{k:{width}s}  " + "  ".join(f"{str(r.get(k, '-')):{c}s}" for r, c in zip(rows, cols)))
    if args.trace_csv:
        if len(docs) != 1:
            raise UsageError("--trace-csv needs exactly one result file")
        _emit(dio.trace_to_csv(docs[0][1]["result"].get("trace", [])), args.trace_csv)
    return 0


def _same(a, b) -> bool:
    return dio.canonical_dumps(a) == dio.canonical_dumps(b)


def cmd_replay(args) -> int:
    doc = dio.load_result(args.result)
    cmd, cfg = doc["command"], doc["config"]
    if cmd == "optimize":
        fresh = run_optimize({**cfg, "jobs": args.jobs})
    elif cmd == "simulate":
        fresh, _ = run_simulate(cfg)
    else:
        raise UsageError(f"replay supports optimize and simulate results, not {cmd!r}")
    if not _same(fresh, doc["result"]):
        diff = [k for k in doc["result"] if not _same(doc["result"][k], fresh.get(k))]
        print(f"MISMATCH in {', '.join(diff)}")
        return 2
    print("REPRODUCED")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dimwitness", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="evaluate the witness of a scenario")
    e.add_argument("--scenario")
    e.add_argument("--entry", help="registry entry name instead of a file")
    e.add_argument("--csv", help="write the probability matrix as CSV ('-' for stdout)")
    e.add_argument("--out", help="result JSON")
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("optimize", help="anneal + refine for the maximal |W_k|")
    o.add_argument("--dim", type=int, required=True)
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--field", choices=["real", "complex"], default="complex")
    o.add_argument("--rank-profile", default="1", help="'auto' or a uniform effect rank")
    o.add_argument("--seed", type=int)
    d = AnnealSchedule()
    o.add_argument("--t0", type=float, default=d.t0)
    o.add_argument("--ratio", type=float, default=d.ratio)
    o.add_argument("--precision", type=float, default=d.precision)
    o.add_argument("--sweeps", type=int, default=d.sweeps_per_stage)
    o.add_argument("--max-stages", type=int)
    o.add_argument("--restarts", type=int, default=8)
    o.add_argument("--no-refine", action="store_true")
    o.add_argument("--jobs", type=int, default=1)
    o.add_argument("--out", help="result JSON")
    o.add_argument("--trace-csv", help="best-so-far per stage as CSV")
    o.set_defaults(func=cmd_optimize)

    c = sub.add_parser("classical-max", help="maximal {0,1} witness")
    c.add_argument("--k", type=int, required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--table", action="store_true", help="print the stored extremal matrix")
    c.add_argument("--restarts", type=int, default=20)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_classical_max)

    r = sub.add_parser("registry", help="catalog of known configurations")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    rs.add_parser("list")
    rv = rs.add_parser("verify")
    rv.add_argument("name", nargs="?")
    rv.add_argument("--all", action="store_true")
    rv.add_argument("--json", action="store_true")
    rx = rs.add_parser("export")
    rx.add_argument("--out")
    r.set_defaults(func=cmd_registry)

    s = sub.add_parser("simulate", help="binomial shot simulation with per-trial decisions")
    s.add_argument("--scenario")
    s.add_argument("--entry")
    s.add_argument("--shots", type=int, required=True)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--z", type=float, default=5.0)
    s.add_argument("--variance", choices=["plugin", "model"], default="plugin")
    s.add_argument("--out", help="per-trial CSV")
    s.add_argument("--result", help="result JSON (default: --out with .json suffix)")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("detect", help="decide from a counts table")
    t.add_argument("--counts", required=True)
    t.add_argument("--scenario")
    t.add_argument("--z", type=float, default=5.0)
    t.add_argument("--order", type=int, choices=[1, 2], default=1)
    t.add_argument("--variance", choices=["plugin", "model"], default="plugin")
    t.add_argument("--out")
    t.set_defaults(func=cmd_detect)

    rp = sub.add_parser("report", help="summarize result files")
    rp.add_argument("results", nargs="+")
    rp.add_argument("--trace-csv")
    rp.set_defaults(func=cmd_report)

    rr = sub.add_parser("replay", help="re-run a result file and compare")
    rr.add_argument("result")
    rr.add_argument("--jobs", type=int, default=1)
    rr.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) == "detect" and args.variance == "model" and not args.scenario:
            raise UsageError("--variance model needs --scenario")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NumericIntegrityError as exc:
        print(f"numeric integrity error: {exc}", file=sys.stderr)
        return 2
    except (WitnessError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
