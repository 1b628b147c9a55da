"""Command-line entry point: ``drlmoa {gen,train,solve,hv,benchmark,export}``.

Exit status is 0 on success, 2 for usage errors (bad flags, missing input
paths) and 1 for any runtime failure; failures print one diagnostic line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import records
from .baselines import ls_postprocess
from .bench import RunConfig, load_instance_source, run_benchmark, summary_rows
from .core import gen_instance, normalize_instance
from .errors import CheckpointError, ConfigurationError, DomainError, ParseError, TrainingError
from .hypervolume import hypervolume_with_method
from .trainer import ModelBank, TrainConfig, infer_front, train_drlmoa
from .tsplib import make_kroab, read_tsplib

log = logging.getLogger("drlmoa")


class UsageError(Exception):
    pass


def _need(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise UsageError(f"no such file or directory: {p}")


def _write(path, data: bytes | str):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    path.write_bytes(data)


def _instance_from_args(args):
    if getattr(args, "tsplib_a", None) or getattr(args, "tsplib_b", None):
        if not (args.tsplib_a and args.tsplib_b):
            raise UsageError("--tsplib-a and --tsplib-b must be given together")
        _need(args.tsplib_a, args.tsplib_b)
        return make_kroab(read_tsplib(args.tsplib_a), read_tsplib(args.tsplib_b))
    if getattr(args, "instance", None):
        _need(args.instance)
        return records.load_instance(args.instance)
    raise UsageError("give --instance or --tsplib-a/--tsplib-b")


def cmd_gen(args):
    if args.tsplib_a or args.tsplib_b:
        if args.out is None:
            raise UsageError("gen from TSPLIB files needs --out")
        records.save_instance(_instance_from_args(args), args.out)
        return 0
    if args.count == 1:
        inst = gen_instance(args.family, args.n, args.seed)
        if args.out is None:
            sys.stdout.write(records.dumps(records.instance_to_dict(inst)))
        else:
            records.save_instance(inst, args.out)
        return 0
    if args.out is None:
        raise UsageError("gen --count > 1 needs --out (directory)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        records.save_instance(gen_instance(args.family, args.n, args.seed + i), out / f"instance_{i:03d}.json")
    return 0


def cmd_train(args):
    if args.out is None:
        raise UsageError("train needs --out (model bank directory)")
    epochs, per_epoch = args.epochs, args.instances_per_epoch
    if args.iterations is not None:
        epochs, per_epoch = 1, args.iterations * args.batch
    cfg = TrainConfig(family=args.family, n_cities=args.n, n_subproblems=args.subproblems,
                      batch_size=args.batch, lr=args.lr, epochs=epochs, instances_per_epoch=per_epoch,
                      hidden=args.hidden, seed=args.seed, warm_share=args.warm_share,
                      transfer=not args.no_transfer, grad_clip=args.grad_clip)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "train_log.jsonl", "w") as fh:
        def progress(sub, rec):
            fh.write(json.dumps({"subproblem": sub, **rec}, sort_keys=True) + "\n")

        bank = train_drlmoa(cfg, callback=progress)
    bank.save(out)
    print(f"trained {len(bank)} subproblems -> {out}")
    return 0


def cmd_solve(args):
    _need(args.bank)
    if args.out is None:
        raise UsageError("solve needs --out")
    inst = normalize_instance(_instance_from_args(args))
    bank = ModelBank.load(args.bank)
    t0 = time.perf_counter()
    archive = infer_front(bank, inst)
    if args.ls:
        archive = ls_postprocess(inst, archive, budget=args.ls_budget)
    wall = time.perf_counter() - t0
    ref = None if args.ref is None else _parse_ref(args.ref)
    rec = records.make_record(inst, archive, "drlmoa+ls" if args.ls else "drlmoa", ref=ref,
                              wall_clock=None if args.no_timing else wall, seed=args.seed,
                              config={"bank": str(args.bank), "ls": bool(args.ls)})
    _write(args.out, records.export_front(rec, "json"))
    print(f"{len(rec.objectives)} non-dominated solutions, HV={rec.hv['value']!r}")
    return 0


def _parse_ref(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"--ref must be comma-separated numbers, got {text!r}") from None


def cmd_hv(args):
    if args.front is None:
        raise UsageError("hv needs --front")
    _need(args.front)
    rec = records.read_front(Path(args.front).read_bytes())
    ref = _parse_ref(args.ref) if args.ref is not None else np.asarray(rec.hv.get("ref"))
    if ref is None or ref.size == 0:
        raise UsageError("front file stores no reference point; pass --ref")
    value, method = hypervolume_with_method(np.asarray(rec.objectives), ref, seed=args.seed)
    print(repr(value))
    if args.out:
        _write(args.out, records.dumps({"hv": value, "ref": ref.tolist(), "method": method}))
    return 0


def cmd_benchmark(args):
    if args.out is None:
        raise UsageError("benchmark needs --out (directory)")
    if args.config:
        _need(args.config)
        plan = json.loads(Path(args.config).read_text())
    else:
        plan = {"instances": [{"family": args.family, "n": args.n, "seed": args.seed + i} for i in range(args.count)],
                "runs": []}
        for alg in args.algorithms.split(","):
            params = {}
            if alg == "drlmoa":
                if args.bank is None:
                    raise UsageError("benchmarking drlmoa needs --bank")
                params = {"bank": args.bank}
            elif alg in ("nsga2", "moead"):
                params = {"iterations": args.iterations}
            elif alg == "mogls":
                params = {"generations": args.iterations}
            plan["runs"].append({"algorithm": alg, "params": params, "seed": args.seed})
    for src in plan["instances"]:
        _need(src.get("path"), src.get("tsplib_a"), src.get("tsplib_b"))
    for r in plan["runs"]:
        _need(r.get("params", {}).get("bank"))
    instances = [load_instance_source(s) for s in plan["instances"]]
    runs = [RunConfig(r["algorithm"], r.get("params", {}), int(r.get("seed", args.seed))) for r in plan["runs"]]
    recs = run_benchmark(instances, runs, workers=args.workers, timing=not args.no_timing)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "records.json", records.dumps([r.to_dict() for r in recs]))
    rows = summary_rows(recs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "algorithm", "hv", "hv_method", "ref", "n_solutions", "time_s"])
    for row in rows:
        w.writerow([row["instance"], row["algorithm"], repr(row["hv"]), row["hv_method"],
                    " ".join(repr(v) for v in row["ref"]), row["n_solutions"],
                    "" if row["time_s"] is None else f"{row['time_s']:.1f}"])
    _write(out / "summary.csv", buf.getvalue())
    for row in rows:
        t = "" if row["time_s"] is None else f"  {row['time_s']:.1f}s"
        print(f"{row['instance']:<24} {row['algorithm']:<10} HV={row['hv']:.6f}  n={row['n_solutions']}{t}")
    return 0


def cmd_export(args):
    if args.front is None or args.out is None:
        raise UsageError("export needs --front and --out")
    _need(args.front)
    rec = records.read_front(Path(args.front).read_bytes())
    _write(args.out, records.export_front(rec, args.format))
    if args.format == "csv":
        _write(str(args.out) + ".meta.json", records.csv_sidecar(rec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    src = argparse.ArgumentParser(add_help=False)
    src.add_argument("--instance", help="instance JSON file")
    src.add_argument("--tsplib-a", help="TSPLIB file for the first objective's coordinates")
    src.add_argument("--tsplib-b", help="TSPLIB file for the second objective's coordinates")

    p = argparse.ArgumentParser(prog="drlmoa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common, src], help="write instance JSON files")
    g.add_argument("--family", default="euclidean", choices=["euclidean", "mixed", "3obj", "5obj"])
    g.add_argument("--n", type=int, default=40)
    g.add_argument("--count", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", parents=[common], help="train a model bank")
    t.add_argument("--family", default="euclidean", choices=["euclidean", "mixed", "3obj", "5obj"])
    t.add_argument("--n", type=int, default=40, help="training city count")
    t.add_argument("--subproblems", type=int, default=100)
    t.add_argument("--batch", type=int, default=200)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--hidden", type=int, default=128)
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--instances-per-epoch", type=int, default=500_000)
    t.add_argument("--iterations", type=int, default=None, help="total iterations (overrides epochs)")
    t.add_argument("--warm-share", type=float, default=0.2)
    t.add_argument("--no-transfer", action="store_true")
    t.add_argument("--grad-clip", type=float, default=None)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", parents=[common, src], help="infer a front with a trained bank")
    s.add_argument("--bank", required=True)
    s.add_argument("--ls", action="store_true", help="2-opt post-processing")
    s.add_argument("--ls-budget", type=int, default=None)
    s.add_argument("--ref", default=None, help="HV reference point, comma separated")
    s.add_argument("--no-timing", action="store_true")
    s.set_defaults(func=cmd_solve)

    h = sub.add_parser("hv", parents=[common], help="hypervolume of a front file")
    h.add_argument("--front")
    h.add_argument("--ref", default=None)
    h.set_defaults(func=cmd_hv)

    b = sub.add_parser("benchmark", parents=[common], help="compare algorithms on shared instances")
    b.add_argument("--config", help="JSON with 'instances' and 'runs'")
    b.add_argument("--algorithms", default="nsga2,moead")
    b.add_argument("--bank")
    b.add_argument("--family", default="euclidean", choices=["euclidean", "mixed", "3obj", "5obj"])
    b.add_argument("--n", type=int, default=40)
    b.add_argument("--count", type=int, default=1)
    b.add_argument("--iterations", type=int, default=500)
    b.add_argument("--no-timing", action="store_true", help="omit wall-clock for byte-reproducible output")
    b.set_defaults(func=cmd_benchmark)

    e = sub.add_parser("export", parents=[common], help="convert a front record to CSV or JSON")
    e.add_argument("--front")
    e.add_argument("--format", choices=["csv", "json"], default="json")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"drlmoa {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConfigurationError, ParseError, CheckpointError, TrainingError, OSError) as exc:
        print(f"drlmoa {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
