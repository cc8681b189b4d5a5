"""Command line interface.

Subcommands: run (train and write checkpoint metrics), sweep (grid search
with a stability-aware selection rule), synth (write a synthetic dataset),
compare (paired comparison of metrics files). Summaries go to stdout as
JSON; tabular results go to --out as CSV. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from wrsol import KERNEL_BACKEND, __version__
from wrsol.data import (
    compute_stats,
    load_examples,
    split_examples,
    synth_noisy_stream,
    write_examples,
)
from wrsol.driver import RunConfig, RunTrace, run_trial
from wrsol.learners import ALGORITHMS, PA_FAMILY, Hyperparams
from wrsol.metrics import oracle_curve, rop, wilcoxon_signed_rank

CSV_HEADER = ["seed", "timestep", "model", "test_acc", "sparsity"]

DEFAULT_SEEDS = "1,2,3,4,5"

C_ERR_GRID = tuple(10.0**e for e in range(-3, 4))
ETA_GRID = tuple(2.0**e for e in range(-3, 10))
LAM_GRID = (0.0,) + tuple(10.0**e for e in range(-3, 4))

TOP_FRACTION = 0.025


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return "%.6f" % x


def _write_metrics_csv(path: str, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for seed, t, model, acc, sp in rows:
            out.writerow([seed, t, model, _fmt(acc), _fmt(sp)])


def _trace_rows(trace: RunTrace):
    """base block, then the ensemble block, then the running-best oracle."""
    rows = []
    for r in trace.records:
        rows.append((trace.seed, r.timestep, "base", r.base_acc, r.base_sparsity))
    if trace.ensemble is not None:
        for r in trace.records:
            rows.append(
                (trace.seed, r.timestep, trace.ensemble, r.ens_acc, r.ens_sparsity)
            )
    best_acc = -1.0
    best_sp = 0.0
    for r in trace.records:
        if r.base_acc > best_acc:
            best_acc = r.base_acc
            best_sp = r.base_sparsity
        rows.append((trace.seed, r.timestep, "oracle", best_acc, best_sp))
    return rows


def _trace_rop(trace: RunTrace, which: str) -> float:
    base = trace.base_curve()
    oracle = oracle_curve(base)
    return rop(oracle, base if which == "base" else trace.ens_curve())


# Shared dataset for forked workers; set before the pool is created.
_SHARED: dict = {}


def _run_task(task):
    seed, fraction, cfg_kw = task
    train, test = split_examples(_SHARED["examples"], fraction, seed)
    config = RunConfig(seed=seed, **cfg_kw)
    return run_trial(config, train, test, _SHARED["dim"])


def _map_tasks(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError("--seeds must be a comma-separated list of integers")
    if not seeds:
        raise UsageError("--seeds must name at least one seed")
    if len(set(seeds)) != len(seeds):
        raise UsageError("--seeds must not repeat")
    return seeds


def _load_dataset(ns) -> tuple[list, int, str]:
    """Returns (examples, dim, source descriptor)."""
    if (ns.data is None) == (not ns.synth):
        raise UsageError("give exactly one of --data FILE or --synth")
    if ns.data is not None:
        examples = load_examples(ns.data)
        stats = compute_stats(examples, declared_dim=ns.dim)
        return examples, stats.dim, ns.data
    if ns.dim is None or ns.n is None:
        raise UsageError("--synth requires --dim and --n")
    stream = synth_noisy_stream(
        dim=ns.dim,
        n=ns.n,
        flip_prob=ns.flip,
        margin=ns.margin,
        seed=ns.data_seed,
        density=ns.density,
    )
    desc = "synth(dim=%d,n=%d,flip=%g,margin=%g,seed=%d)" % (
        ns.dim,
        ns.n,
        ns.flip,
        ns.margin,
        ns.data_seed,
    )
    return stream.examples, ns.dim, desc


def _hyperparams(ns) -> Hyperparams:
    return Hyperparams(
        c_err=ns.c_err,
        eta=ns.eta,
        lam=ns.lam,
        rate=ns.rate,
        momentum=ns.momentum,
        gravity=ns.gravity,
        period=ns.period,
    )


def _summary_block(values: list[float]) -> dict:
    return {"mean": float(np.mean(values)), "per_seed": values}


def cmd_run(ns) -> int:
    seeds = _parse_seeds(ns.seeds)
    if ns.wrs and ns.baseline:
        raise UsageError("--wrs and --baseline are mutually exclusive")
    if ns.voting_zero and not ns.wrs:
        raise UsageError("--voting-zero requires --wrs")
    ensemble = "wrs" if ns.wrs else ns.baseline
    examples, dim, source = _load_dataset(ns)
    cfg_kw = dict(
        algo=ns.algo,
        hp=_hyperparams(ns),
        ensemble=ensemble,
        reservoir_k=ns.k,
        weighting=ns.weighting,
        averaging=ns.averaging,
        voting_zero=bool(ns.voting_zero),
        window=ns.window,
        gamma=ns.gamma,
        checkpoint_target=ns.checkpoints,
        eval_subsample=ns.eval_subsample,
    )
    RunConfig(seed=0, **cfg_kw)  # validate once before fanning out
    _SHARED["examples"] = examples
    _SHARED["dim"] = dim
    tasks = [(seed, ns.train_fraction, cfg_kw) for seed in seeds]
    traces = _map_tasks(_run_task, tasks, ns.jobs)

    if ns.out:
        rows = []
        for trace in traces:
            rows.extend(_trace_rows(trace))
        _write_metrics_csv(ns.out, rows)

    models: dict = {}

    def add(tag, accs, sps, rops):
        models[tag] = {
            "final_acc": _summary_block(accs),
            "final_sparsity": _summary_block(sps),
            "rop": _summary_block(rops),
        }

    add(
        "base",
        [t.final.base_acc for t in traces],
        [t.final.base_sparsity for t in traces],
        [_trace_rop(t, "base") for t in traces],
    )
    if ensemble is not None:
        add(
            ensemble,
            [t.final.ens_acc for t in traces],
            [t.final.ens_sparsity for t in traces],
            [_trace_rop(t, "ens") for t in traces],
        )
    oracle_accs = [float(np.max(t.base_curve().accuracies)) for t in traces]
    add("oracle", oracle_accs, [_trace_rows(t)[-1][4] for t in traces], [0.0] * len(traces))

    summary = {
        "command": "run",
        "version": __version__,
        "kernel_backend": KERNEL_BACKEND,
        "dataset": source,
        "dim": dim,
        "n_examples": len(examples),
        "algo": ns.algo,
        "ensemble": ensemble,
        "seeds": seeds,
        "aggressive_steps": [t.aggressive_steps for t in traces],
        "models": models,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _sweep_cells(algo: str) -> list[dict]:
    if algo in ("pac", "pa1"):
        return [{"c_err": c} for c in C_ERR_GRID]
    if algo == "fsol":
        return [{"eta": e, "lam": l} for e in ETA_GRID for l in LAM_GRID]
    raise UsageError("sweep supports pac, pa1, and fsol; got %r" % algo)


def _cell_label(cell: dict) -> str:
    return ",".join("%s=%g" % (k, v) for k, v in cell.items())


def cmd_sweep(ns) -> int:
    seeds = _parse_seeds(ns.seeds)
    cells = _sweep_cells(ns.algo)
    examples, dim, source = _load_dataset(ns)
    _SHARED["examples"] = examples
    _SHARED["dim"] = dim
    tasks = []
    for cell in cells:
        hp = Hyperparams(**cell)
        cfg_kw = dict(
            algo=ns.algo,
            hp=hp,
            ensemble=None,
            checkpoint_target=ns.checkpoints,
            eval_subsample=ns.eval_subsample,
        )
        for seed in seeds:
            tasks.append((seed, ns.train_fraction, cfg_kw))
    traces = _map_tasks(_run_task, tasks, ns.jobs)

    results = []
    per_cell = len(seeds)
    for i, cell in enumerate(cells):
        group = traces[i * per_cell : (i + 1) * per_cell]
        accs = [t.final.base_acc for t in group]
        rops = [_trace_rop(t, "base") for t in group]
        results.append(
            {
                "cell": cell,
                "mean_final_acc": float(np.mean(accs)),
                "mean_rop": float(np.mean(rops)),
            }
        )

    n_keep = max(1, math.ceil(TOP_FRACTION * len(results)))
    by_acc = sorted(
        range(len(results)),
        key=lambda i: (-results[i]["mean_final_acc"], i),
    )
    kept = by_acc[:n_keep]
    selected = max(kept, key=lambda i: (results[i]["mean_rop"], -i))

    if ns.out:
        with open(ns.out, "w", newline="", encoding="ascii") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["algo", "cell", "mean_final_acc", "mean_rop", "selected"])
            for i, res in enumerate(results):
                out.writerow(
                    [
                        ns.algo,
                        _cell_label(res["cell"]),
                        _fmt(res["mean_final_acc"]),
                        _fmt(res["mean_rop"]),
                        int(i == selected),
                    ]
                )

    summary = {
        "command": "sweep",
        "dataset": source,
        "algo": ns.algo,
        "n_cells": len(cells),
        "top_kept": n_keep,
        "seeds": seeds,
        "selected": {
            "cell": results[selected]["cell"],
            "mean_final_acc": results[selected]["mean_final_acc"],
            "mean_rop": results[selected]["mean_rop"],
        },
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_synth(ns) -> int:
    if ns.out is None:
        raise UsageError("synth requires --out FILE")
    stream = synth_noisy_stream(
        dim=ns.dim,
        n=ns.n,
        flip_prob=ns.flip,
        margin=ns.margin,
        seed=ns.data_seed,
        density=ns.density,
    )
    write_examples(stream.examples, ns.out)
    stats = compute_stats(stream.examples, declared_dim=ns.dim)
    flipped = int(
        np.sum(stream.clean_labels != [y for _, y in stream.examples])
    )
    summary = {
        "command": "synth",
        "out": ns.out,
        "dim": stats.dim,
        "n_examples": stats.n_examples,
        "n_nonzeros": stats.n_nonzeros,
        "sparsity": stats.sparsity,
        "flip_prob": ns.flip,
        "flipped_labels": flipped,
        "margin": ns.margin,
        "seed": ns.data_seed,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _read_metrics_csv(path: str) -> dict:
    """{model: {seed: (timesteps, accs)}} with rows kept in file order."""
    curves: dict = {}
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError("%s: unexpected header %r" % (path, header))
        for row in reader:
            if len(row) != 5:
                raise ValueError("%s: malformed row %r" % (path, row))
            seed = int(row[0])
            t = int(row[1])
            model = row[2]
            acc = float(row[3])
            curves.setdefault(model, {}).setdefault(seed, []).append((t, acc))
    return curves


def _mean_rop_for(curves: dict, model: str, path: str) -> float:
    from wrsol.metrics import AccuracyCurve

    base = curves.get("base")
    if not base:
        raise ValueError("%s: no base rows" % path)
    rops = []
    for seed, pts in sorted(base.items()):
        base_curve = AccuracyCurve([p[0] for p in pts], [p[1] for p in pts])
        oracle = oracle_curve(base_curve)
        mpts = curves[model][seed]
        model_curve = AccuracyCurve([p[0] for p in mpts], [p[1] for p in mpts])
        rops.append(rop(oracle, model_curve))
    return float(np.mean(rops))


def cmd_compare(ns) -> int:
    if len(ns.files) < 2:
        raise UsageError("compare needs at least two metrics files")
    per_file = []
    seed_sets = []
    for path in ns.files:
        curves = _read_metrics_csv(path)
        if "base" not in curves:
            raise ValueError("%s: no base rows" % path)
        seed_sets.append(frozenset(curves["base"].keys()))
        tags = [m for m in curves if m not in ("base", "oracle")]
        if ns.model is not None:
            if ns.model not in curves:
                raise ValueError("%s: no rows for model %r" % (path, ns.model))
            variant = ns.model
        elif len(tags) == 1:
            variant = tags[0]
        elif not tags:
            variant = "base"
        else:
            raise UsageError(
                "%s has several candidate models (%s); pick one with --model"
                % (path, ",".join(sorted(tags)))
            )
        per_file.append((path, curves, variant))
    if len(set(seed_sets)) != 1:
        raise ValueError("input files cover different seed sets")

    entries = []
    base_rops = []
    variant_rops = []
    for path, curves, variant in per_file:
        rb = _mean_rop_for(curves, "base", path)
        rv = _mean_rop_for(curves, variant, path)
        base_rops.append(rb)
        variant_rops.append(rv)
        entries.append(
            {
                "file": path,
                "model": variant,
                "rop_base": rb,
                "rop_model": rv,
                "delta": rv - rb,
                "win": bool(rv < rb),
            }
        )

    wins = sum(1 for e in entries if e["win"])
    note = None
    p_value = None
    statistic = None
    try:
        res = wilcoxon_signed_rank(base_rops, variant_rops)
        p_value = res.p_value
        statistic = res.statistic
    except ValueError as exc:
        note = "degenerate comparison: %s" % exc

    if ns.out:
        with open(ns.out, "w", newline="", encoding="ascii") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["file", "model", "rop_base", "rop_model", "delta", "win"])
            for e in entries:
                out.writerow(
                    [
                        e["file"],
                        e["model"],
                        _fmt(e["rop_base"]),
                        _fmt(e["rop_model"]),
                        _fmt(e["delta"]),
                        int(e["win"]),
                    ]
                )

    summary = {
        "command": "compare",
        "files": entries,
        "wins": wins,
        "n_files": len(entries),
        "wilcoxon_statistic": statistic,
        "wilcoxon_p": p_value,
        "note": note,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="dataset file in sparse text format")
    p.add_argument("--synth", action="store_true", default=None,
                   help="generate a synthetic stream instead of reading --data")
    p.add_argument("--dim", type=int, help="feature count (declared or synthetic)")
    p.add_argument("--n", type=int, help="synthetic stream length")
    p.add_argument("--flip", type=float, help="synthetic label flip probability")
    p.add_argument("--margin", type=float, help="synthetic margin floor")
    p.add_argument("--density", type=float, help="synthetic nonzero fraction per example")
    p.add_argument("--data-seed", type=int, help="seed for the synthetic stream")


def _add_trial_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", help="comma-separated trial seeds")
    p.add_argument("--train-fraction", type=float, help="train split fraction")
    p.add_argument("--checkpoints", type=int, help="target checkpoint count")
    p.add_argument("--eval-subsample", type=int,
                   help="evaluate on a fixed random subset of the test set")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--config", help="JSON file with flag defaults")
    p.add_argument("--out", help="write CSV results here")


_COMMON_DEFAULTS = dict(
    flip=0.1,
    margin=0.1,
    density=0.1,
    data_seed=0,
    seeds=DEFAULT_SEEDS,
    train_fraction=0.7,
    checkpoints=200,
    jobs=os.cpu_count() or 1,
)

_RUN_DEFAULTS = dict(
    _COMMON_DEFAULTS,
    algo="pac",
    c_err=1.0,
    eta=1.0,
    lam=0.01,
    rate=0.1,
    momentum=0.9,
    gravity=1e-4,
    period=10,
    wrs=False,
    baseline=None,
    k=64,
    weighting="standard",
    averaging="simple",
    voting_zero=False,
    window=64,
    gamma=0.9,
)

_SWEEP_DEFAULTS = dict(_COMMON_DEFAULTS, algo="pac")

_SYNTH_DEFAULTS = dict(
    flip=0.1, margin=0.1, density=0.1, data_seed=0, dim=100, n=10000
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wrsol",
        description="Reservoir-stabilized online learning for sparse linear models",
    )
    parser.add_argument("--version", action="version", version="wrsol " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train and record checkpoint metrics")
    _add_dataset_flags(run)
    run.add_argument("--algo", choices=ALGORITHMS)
    run.add_argument("--c-err", type=float, help="slack penalty (pa1/pac)")
    run.add_argument("--eta", type=float, help="learning rate (fsol)")
    run.add_argument("--lam", type=float, help="l1 strength (fsol)")
    run.add_argument("--rate", type=float, help="learning rate (sgdm/adagrad/tgd)")
    run.add_argument("--momentum", type=float, help="velocity decay (sgdm)")
    run.add_argument("--gravity", type=float, help="truncation strength (tgd)")
    run.add_argument("--period", type=int, help="truncation interval (tgd)")
    run.add_argument("--wrs", action="store_true", default=None,
                     help="stabilize with the weighted reservoir ensemble")
    run.add_argument("--baseline", choices=("topk", "movavg", "expavg"),
                     help="non-reservoir ensembler to run instead")
    run.add_argument("--k", type=int, help="reservoir / tracker capacity")
    run.add_argument("--weighting", choices=("standard", "exponential"))
    run.add_argument("--averaging", choices=("simple", "weighted"))
    run.add_argument("--voting-zero", action="store_true", default=None,
                     help="zero coordinates a strict majority of occupants zero")
    run.add_argument("--window", type=int, help="movavg window size")
    run.add_argument("--gamma", type=float, help="expavg mixing factor")
    _add_trial_flags(run)
    run.set_defaults(func=cmd_run, defaults=_RUN_DEFAULTS)

    sweep = sub.add_parser("sweep", help="hyperparameter grid search")
    _add_dataset_flags(sweep)
    sweep.add_argument("--algo", choices=("pac", "pa1", "fsol"))
    _add_trial_flags(sweep)
    sweep.set_defaults(func=cmd_sweep, defaults=_SWEEP_DEFAULTS)

    synth = sub.add_parser("synth", help="write a synthetic dataset")
    synth.add_argument("--dim", type=int)
    synth.add_argument("--n", type=int)
    synth.add_argument("--flip", type=float)
    synth.add_argument("--margin", type=float)
    synth.add_argument("--density", type=float)
    synth.add_argument("--data-seed", type=int)
    synth.add_argument("--config", help="JSON file with flag defaults")
    synth.add_argument("--out", help="dataset file to write")
    synth.set_defaults(func=cmd_synth, defaults=_SYNTH_DEFAULTS)

    compare = sub.add_parser("compare", help="paired comparison of metrics files")
    compare.add_argument("files", nargs="*", help="metrics CSV files")
    compare.add_argument("--model", help="model tag to compare against base")
    compare.add_argument("--out", help="write per-file deltas here")
    compare.set_defaults(func=cmd_compare, defaults={})

    return parser


def _apply_config(ns: argparse.Namespace) -> None:
    """Fill unset flags from --config JSON, then from built-in defaults."""
    if getattr(ns, "config", None):
        try:
            with open(ns.config, "r", encoding="ascii") as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("cannot read --config: %s" % exc)
        if not isinstance(overrides, dict):
            raise UsageError("--config must hold a JSON object")
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(ns, attr):
                raise UsageError("--config names unknown flag %r" % key)
            if getattr(ns, attr) is None:
                setattr(ns, attr, value)
    for key, value in ns.defaults.items():
        if getattr(ns, key, None) is None:
            setattr(ns, key, value)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(ns)
        return ns.func(ns)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
