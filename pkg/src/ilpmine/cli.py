"""Command line: generate | mine | infer | verify | analyze.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver budget
exhausted on at least one instance.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .core import Sample, fraction_str
from .eval import evaluate, hmc_is_path, mst_is_tree, sudoku_valid, sudoku_view
from .latent import LatentSchema, expand_samples, mine_with_latents, observed_pairs
from .miner import (InnerPolytope, build_outer, infer_inner, infer_outer, mine_equalities,
                    prune_redundant_cuts, verify_implied)
from .serialize import MinedModel, dump_model, load_model
from .solver import NodeBudgetExceeded
from .solver.bnb import DEFAULT_NODE_LIMIT
from .tasks import hmc, mst, sudoku
from .tasks.io import DataError, read_jsonl, write_jsonl

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3
PRUNE_THRESHOLD = 5000
MODES = ("inner", "outer", "outer-eq", "outer-latent")


class UsageError(Exception):
    pass


# --- data loading ------------------------------------------------------------

def _is_text_sudoku(path) -> bool:
    return Path(path).suffix.lower() in (".txt", ".csv", ".sdk")


def load_samples(task: str, path, comma=False, require_dim=None) -> list[Sample]:
    if not Path(path).exists():
        raise DataError(f"{path}: no such file")
    if task == "sudoku" and _is_text_sudoku(path):
        try:
            return sudoku.load_sudoku(path, comma=comma or Path(path).suffix.lower() == ".csv")
        except (sudoku.SudokuFormatError, ValueError) as e:
            raise DataError(f"{path}: {e}") from None
    return read_jsonl(path, require_dim=require_dim)


def _read_spec(path) -> hmc.HierarchySpec:
    try:
        with open(path) as fh:
            return hmc.HierarchySpec.from_json(json.load(fh))
    except (OSError, KeyError, ValueError, TypeError) as e:
        raise DataError(f"{path}: cannot read hierarchy spec ({e})") from None


# --- generate ------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    out = Path(args.out)
    if args.task == "mst":
        if args.nodes < 3:
            raise UsageError("--nodes must be at least 3")
        data = mst.gen_mst_dataset(args.nodes, args.samples, args.seed)
        write_jsonl(out, data)
    elif args.task == "sudoku":
        insts = sudoku.gen_sudoku_instances(args.samples, args.seed, args.clues)
        if args.permute is not None:
            data = sudoku.permute_sudoku([x.sample(f"sudoku-{i}") for i, x in enumerate(insts)], args.permute)
            write_jsonl(out, data)
        elif _is_text_sudoku(out):
            sudoku.write_sudoku(out, insts, comma=out.suffix.lower() == ".csv")
        else:
            write_jsonl(out, [x.sample(f"sudoku-{i}") for i, x in enumerate(insts)])
        if args.canonical_out:
            _write_canonical(args.canonical_out, sudoku.DIM,
                             sudoku.canonical_constraints(args.permute), expected_dim=249)
    else:
        spec = hmc.HierarchySpec(args.depth, args.branching)
        if not 0 <= args.noise < 0.5:
            raise UsageError("--noise must lie in [0, 0.5)")
        data = hmc.gen_hmc_dataset(spec, args.samples, args.noise, args.seed)
        write_jsonl(out, data)
        if args.spec_out:
            Path(args.spec_out).write_text(json.dumps(spec.to_json()) + "\n")
        if args.canonical_out:
            rows = hmc.hmc_canonical_constraints(spec)
            rows += [(f"h[{p},{x},0,1] = 0", {("h", p, x, 0, 1): 1}, 0)
                     for x, p in enumerate(spec.parent) if p >= 0]
            _write_canonical(args.canonical_out, spec.n_classes, rows)
    print(f"wrote {args.samples} instances to {out}")
    return EXIT_OK


def _write_canonical(path, dim, rows, expected_dim=None):
    cons = []
    for name, terms, rhs in rows:
        enc = [[list(k) if isinstance(k, tuple) else k, v] for k, v in sorted(terms.items(), key=lambda t: str(t[0]))]
        cons.append({"name": name, "terms": enc, "rhs": rhs})
    doc = {"dim": dim, "constraints": cons}
    if expected_dim is not None:
        doc["expected_dim"] = expected_dim
    Path(path).write_text(json.dumps(doc) + "\n")


def read_canonical(path, schema: LatentSchema | None, dim: int):
    """Canonical constraints as ``(name, {column: coef}, rhs)``; latent terms need ``schema``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as e:
        raise DataError(f"{path}: {e}") from None
    base = int(doc.get("dim", dim if schema is None else schema.m))
    expect_base = dim if schema is None else schema.m
    if base != expect_base:
        raise DataError(f"{path}: canonical constraints have dimension {base}, model has {expect_base}")
    out = []
    for c in doc["constraints"]:
        row = {}
        for key, coef in c["terms"]:
            if isinstance(key, list):
                if key[0] != "h" or schema is None:
                    raise DataError(f"{path}: latent term {key} needs a model with a latent schema")
                try:
                    col = schema.index(*key[1:])
                except KeyError as e:
                    raise DataError(f"{path}: {e}") from None
            else:
                col = int(key)
            if not 0 <= col < dim:
                raise DataError(f"{path}: column {col} outside dimension {dim}")
            row[col] = row.get(col, 0) + coef
        out.append((c.get("name", ""), row, c["rhs"]))
    return out, doc.get("expected_dim")


# --- mine --------------------------------------------------------------------

def _default_slack(task):
    # predicted scores need slack; oracle data does not
    return task == "hmc"


def cmd_mine(args) -> int:
    train = load_samples(args.task, args.train, args.comma)
    if not train:
        raise DataError(f"{args.train}: no samples")
    d = train[0].dim
    slack = _default_slack(args.task) if args.slack is None else args.slack
    header = {"task": args.task, "mode": args.mode, "slack": slack, "seed": args.seed,
              "n_samples": len(train), "train": str(args.train)}
    t0 = time.perf_counter()
    if args.mode == "outer-latent" and args.task != "hmc" and not args.schema:
        raise UsageError("outer-latent needs --task hmc or an explicit --schema file")
    if args.task == "hmc" and args.spec:
        header["hierarchy"] = _read_spec(args.spec).to_json()

    model = MinedModel(d, header)
    if args.mode == "inner":
        model.inner = InnerPolytope.from_samples(train)
        header["n_vertices"] = len(model.inner)
    else:
        schema = None
        samples = train
        if args.mode == "outer-latent":
            if args.schema:
                with open(args.schema) as fh:
                    schema = LatentSchema.from_json(json.load(fh))
            else:
                schema = observed_pairs(train, co_occurring=args.co_occurring)
            samples = expand_samples(train, schema)
            eq = mine_with_latents(train, schema)
        elif args.mode == "outer-eq":
            eq = mine_equalities(train)
        else:
            eq = None
        outer = build_outer(samples, eq=eq, slack=slack)
        prune = args.prune == "on" or (args.prune == "auto" and outer.n_cuts > PRUNE_THRESHOLD)
        if prune:
            before = outer.n_cuts
            outer = prune_redundant_cuts(outer)
            header["pruned_cuts"] = before - outer.n_cuts
        model.outer, model.schema = outer, schema
        model.dim = outer.dim
        eqs = outer.equalities
        header.update({"n_cuts": outer.n_cuts, "eq_rank": eqs.n_rows, "affine_dim": eqs.affine_dim})
        if slack:
            header["n_positive_slack"] = int(sum(1 for x in outer.slacks if x > 0))
    header["mine_seconds"] = round(time.perf_counter() - t0, 3)
    dump_model(model, args.out)
    summary = {k: header[k] for k in ("mode", "n_samples", "n_cuts", "eq_rank", "affine_dim", "n_vertices") if k in header}
    print(json.dumps(summary))
    return EXIT_OK


# --- infer -------------------------------------------------------------------

_WORKER = {}


def _worker_init(model_path, node_limit, time_limit, fix_clues):
    _WORKER["model"] = load_model(model_path)
    _WORKER["opts"] = (node_limit, time_limit, fix_clues)


def _infer_one(model: MinedModel, w, node_limit, time_limit, fix_clues):
    mode = model.header.get("mode", "outer" if model.outer is not None else "inner")
    t = time.perf_counter()
    if mode == "inner":
        y = infer_inner(model.inner, w)
        return {"y": [int(v) for v in y], "status": "optimal", "objective": None,
                "nodes": 0, "ms": (time.perf_counter() - t) * 1e3}
    schema = model.schema
    w_full = np.concatenate([np.asarray(w, dtype=object), np.zeros(schema.dim - schema.m, dtype=object)]) \
        if schema is not None else w
    fix = np.flatnonzero(np.asarray(w, dtype=float) == 1) if fix_clues else None
    try:
        sol = infer_outer(model.outer, w_full, node_limit=node_limit, fix_ones=fix, time_limit=time_limit)
    except NodeBudgetExceeded as e:
        return {"y": None, "status": "budget_exceeded", "objective": None, "nodes": None,
                "ms": (time.perf_counter() - t) * 1e3, "error": str(e)}
    y = None
    if sol.optimal:
        y = sol.assignment[: schema.m] if schema is not None else sol.assignment
        y = [int(v) for v in y]
    return {"y": y, "status": sol.status,
            "objective": None if sol.objective_value is None else fraction_str(sol.objective_value),
            "nodes": sol.nodes_explored, "ms": (time.perf_counter() - t) * 1e3}


def _infer_chunk(items):
    model = _WORKER["model"]
    return [_infer_one(model, w, *_WORKER["opts"]) for w in items]


def cmd_infer(args) -> int:
    model = load_model(args.model)
    task = args.task or model.header.get("task")
    if task is None:
        raise UsageError("--task is required when the model header does not name one")
    base_dim = model.schema.m if model.schema is not None else model.dim
    test = load_samples(task, args.test, args.comma)
    if not test:
        raise DataError(f"{args.test}: no samples")
    if test[0].dim != base_dim:
        raise DataError(f"model dimension {base_dim} does not match test dimension {test[0].dim}")
    fix_clues = task == "sudoku" and not args.no_fix_clues
    ws = [s.w for s in test]
    if args.workers > 1:
        chunks = [ws[i::args.workers] for i in range(args.workers)]
        with ProcessPoolExecutor(args.workers, initializer=_worker_init,
                                 initargs=(args.model, args.node_limit, args.time_limit, fix_clues)) as ex:
            parts = list(ex.map(_infer_chunk, chunks))
        results = [None] * len(ws)
        for i, part in enumerate(parts):
            results[i::args.workers] = part
    else:
        results = [_infer_one(model, w, args.node_limit, args.time_limit, fix_clues) for w in ws]

    with open(args.out, "w") as fh:
        for s, r in zip(test, results):
            fh.write(json.dumps({"id": s.id, **r}, separators=(",", ":")) + "\n")

    preds = [None if r["y"] is None else np.array(r["y"]) for r in results]
    pred_fn, view, mask = _task_metrics(task, model, test, args)
    report = evaluate(preds, [s.y for s in test], pred_fn, ids=[s.id for s in test],
                      statuses=[r["status"] for r in results], timings=[r["ms"] for r in results],
                      element_view=view, element_mask=mask)
    doc = report.to_json()
    doc["mode"] = model.header.get("mode")
    doc["task"] = task
    if args.report:
        Path(args.report).write_text(json.dumps(doc, indent=2) + "\n")
    label = args.label or f"{task}:{model.header.get('mode')}"
    print(report.csv_line(label))
    exhausted = sum(r["status"] == "budget_exceeded" for r in results)
    if exhausted:
        print(f"{exhausted} instance(s) exhausted the solver budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _task_metrics(task, model, test, args):
    if task == "mst":
        n = mst.n_nodes_for(test[0].dim)
        return (lambda y: mst_is_tree(y, n)), None, None
    if task == "sudoku":
        mask = None
        if args.blanks_only:
            mask = [sudoku.decode_y(s.w) == 0 for s in test]
        return sudoku_valid, sudoku_view, mask
    spec_json = model.header.get("hierarchy")
    if args.spec:
        spec_json = _read_spec(args.spec).to_json()
    if spec_json is None:
        raise UsageError("hmc evaluation needs --spec or a model mined with --spec")
    spec = hmc.HierarchySpec.from_json(spec_json)
    return (lambda y: hmc_is_path(y, spec)), None, None


# --- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    model = load_model(args.model)
    eq = model.equalities
    cons, expected = read_canonical(args.canonical, model.schema, eq.dim)
    if args.expected_dim is not None:
        expected = args.expected_dim
    rep = verify_implied(eq, [(row, rhs) for _, row, rhs in cons], expected_dim=expected)
    doc = {
        "all_implied": rep.all_implied, "dim_match": rep.dim_match,
        "n_implied": rep.n_implied, "n_constraints": len(cons),
        "rank": rep.rank, "canonical_rank": rep.canonical_rank,
        "affine_dim": rep.affine_dim, "expected_dim": rep.expected_dim,
        "constraints": [{"name": name, "implied": ok} for (name, _, _), ok in zip(cons, rep.implied)],
    }
    if args.report:
        Path(args.report).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{rep.n_implied}/{len(cons)} implied; rank {rep.rank} vs canonical {rep.canonical_rank}"
          + (f" (expected {expected})" if expected is not None else "")
          + f"; dim_match={rep.dim_match}")
    return EXIT_OK


# --- analyze -----------------------------------------------------------------

DEFAULT_K_GRID = (0, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000)


def cmd_analyze(args) -> int:
    if args.task != "mst":
        raise UsageError("analysis is available for --task mst only")
    limit = 7 if args.full else 6
    if args.nodes > limit or args.nodes < 3:
        raise UsageError(f"--nodes must lie in [3, {limit}]" + ("" if args.full else " (use --full for 7)"))
    n = args.nodes
    ks = sorted(set(int(k) for k in args.k_grid.split(","))) if args.k_grid else list(DEFAULT_K_GRID)
    if args.draws < 1:
        raise UsageError("--draws must be at least 1")
    d = n * (n - 1) // 2
    if args.raw_universe:
        if d > 20:
            raise UsageError("the raw 0/1 universe is limited to 20 variables")
        U = ((np.arange(1 << d)[:, None] >> np.arange(d)[::-1]) & 1).astype(np.int64)
    else:
        U = mst.edge_count_universe(n)
    T = mst.enumerate_spanning_trees(n)
    M, N = len(T), len(U)
    mask = np.zeros(N, dtype=bool)
    tree_keys = {t.tobytes() for t in T}
    mask[:] = [u.tobytes() in tree_keys for u in U]

    stream_seed, draw_seed = np.random.SeedSequence(args.seed).spawn(2)
    samples = mst.gen_mst_dataset(n, max(ks[-1], 1), stream_seed)
    curve = analysis.empirical_sizes(samples, U, T, ks)
    p = analysis.estimate_p(U, T, args.draws, draw_seed, analysis.mst_weight_sampler(n))
    ei, eo = analysis.expected_sizes(M, p[mask], p[~mask], ks)
    si, so = analysis.symmetric_expected_sizes(M, N, ks)
    curve.inner_expect, curve.outer_expect = list(ei), list(eo)
    curve.inner_expect_symmetric, curve.outer_expect_symmetric = list(si), list(so)
    analysis.write_curve_csv(args.out, curve)
    if args.hist_out:
        analysis.write_histogram_csv(args.hist_out, analysis.p_histogram(p[~mask], M, args.bins))
    print(f"M={M} N={N} k_max={ks[-1]} draws={args.draws} -> {args.out}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--error-json", action="store_true", default=argparse.SUPPRESS,
                        help="report errors as JSON on stderr")
    ap = argparse.ArgumentParser(prog="ilpmine", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a seeded dataset")
    g.add_argument("--task", choices=("mst", "sudoku", "hmc"), required=True)
    g.add_argument("--samples", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--nodes", type=int, default=5)
    g.add_argument("--clues", type=int, default=36)
    g.add_argument("--permute", type=int, default=None, help="sudoku: seed of a cell permutation")
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--branching", type=int, default=3)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--spec-out", help="hmc: write the hierarchy spec JSON here")
    g.add_argument("--canonical-out", help="sudoku/hmc: write the canonical constraints here")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("mine", parents=[common], help="mine constraints from training pairs")
    m.add_argument("--task", choices=("mst", "sudoku", "hmc"), required=True)
    m.add_argument("--train", required=True)
    m.add_argument("--mode", choices=MODES, default="outer-eq")
    sl = m.add_mutually_exclusive_group()
    sl.add_argument("--slack", dest="slack", action="store_true", default=None)
    sl.add_argument("--no-slack", dest="slack", action="store_false")
    m.add_argument("--prune", choices=("auto", "on", "off"), default="auto",
                   help=f"LP redundancy pruning of cuts (auto: on above {PRUNE_THRESHOLD} cuts)")
    m.add_argument("--schema", help="latent schema JSON {m, pairs}")
    m.add_argument("--co-occurring", action="store_true",
                   help="track only label pairs that are positive together")
    m.add_argument("--spec", help="hmc hierarchy spec JSON, stored in the model header")
    m.add_argument("--comma", action="store_true", help="sudoku: comma-separated text input")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mine)

    i = sub.add_parser("infer", parents=[common], help="predict with a mined model")
    i.add_argument("--model", required=True)
    i.add_argument("--test", required=True)
    i.add_argument("--out", required=True, help="predictions JSONL")
    i.add_argument("--report", help="evaluation report JSON")
    i.add_argument("--task", choices=("mst", "sudoku", "hmc"))
    i.add_argument("--spec", help="hmc hierarchy spec JSON")
    i.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    i.add_argument("--time-limit", type=float, default=None, help="seconds per instance")
    i.add_argument("--workers", type=int, default=1)
    i.add_argument("--no-fix-clues", action="store_true", help="sudoku: do not pin clue variables")
    i.add_argument("--blanks-only", action="store_true", help="sudoku: score blank cells only")
    i.add_argument("--comma", action="store_true")
    i.add_argument("--label", help="first field of the CSV summary line")
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_infer)

    v = sub.add_parser("verify", parents=[common], help="check canonical constraints against a mined model")
    v.add_argument("--model", required=True)
    v.add_argument("--canonical", required=True)
    v.add_argument("--expected-dim", type=int, default=None,
                   help="expected number of independent equalities")
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", parents=[common], help="feasible-set size curves")
    a.add_argument("--task", choices=("mst",), default="mst")
    a.add_argument("--nodes", type=int, default=5)
    a.add_argument("--draws", type=int, default=20000)
    a.add_argument("--k-grid", help="comma-separated sample counts")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--full", action="store_true", help="allow K7 (54,264-point universe)")
    a.add_argument("--raw-universe", action="store_true", help="count over {0,1}^d instead")
    a.add_argument("--bins", type=int, default=20)
    a.add_argument("--out", required=True)
    a.add_argument("--hist-out")
    a.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        return _fail(args, EXIT_USAGE, str(e))
    except (DataError, OSError, ValueError, KeyError) as e:
        return _fail(args, EXIT_DATA, str(e))
    except NodeBudgetExceeded as e:
        return _fail(args, EXIT_BUDGET, str(e))


def _fail(args, code, msg) -> int:
    if getattr(args, "error_json", False):
        print(json.dumps({"error": msg, "exit_code": code}), file=sys.stderr)
    else:
        print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
