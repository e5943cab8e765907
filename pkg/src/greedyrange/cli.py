"""Command-line harness: build, query, verify, bench, stats.

Exit codes: 0 on success, 1 when verification finds a violation, 2 on
bad input (malformed files, unknown kinds, invalid parameters).

Reports that contain wall-clock fields are for humans; the machine-read
outputs (index files, result rows, CSV columns other than wall time) are
byte-deterministic for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .cascade import GreedyRangeTree, aux_leaf_totals, build_grt, grt_from_obj, grt_query, grt_to_obj
from .dataset import (
    Dataset,
    FactorSpec,
    WorkloadQuery,
    load_dataset,
    load_factor_specs,
    load_results,
    load_workload,
    write_dataset,
    write_results,
    write_workload,
)
from .datagen import GENERATORS, calibrated_queries, synth_dataset
from .errors import ConfigurationError, InputError
from .metrics import dataset_summary
from .oracle import exact_product_range, sandwich_check
from .search import ProductQuery, SearchStats, product_range_query
from .tree import GreedyTree, build_greedy_tree, greedy_permutation, tree_from_obj, tree_to_obj

INDEX_FORMAT = "greedyrange-index"
INDEX_VERSION = 1
STRUCTURES = ("product-tree", "grt")


def _dump(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _print_report(obj: Any) -> None:
    print(json.dumps(obj, indent=2))


# ---------------------------------------------------------------------------
# Index files.
# ---------------------------------------------------------------------------


def _coords_obj(dataset: Dataset) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for spec in dataset.specs:
        col = dataset.coords[spec.name]
        out[spec.name] = col if isinstance(col, list) else col.tolist()
    return out


def build_structure(dataset: Dataset, structure: str, *, seed: int | str = "first", merge_mode: str = "fast"):
    if structure == "product-tree":
        pm = dataset.product()
        ids = dataset.ids().tolist()
        return build_greedy_tree(greedy_permutation(ids, pm, seed=seed), pm)
    if structure == "grt":
        return build_grt(dataset.ids().tolist(), dataset.spaces(), seed=seed, merge_mode=merge_mode)
    raise InputError(f"unknown structure {structure!r}; expected one of {STRUCTURES}")


def save_index(path: str | Path, dataset: Dataset, structure: str, struct: Any) -> None:
    if structure == "product-tree":
        tree_obj = tree_to_obj(struct)
    else:
        tree_obj = grt_to_obj(struct)
    obj = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "structure": structure,
        "factors": [spec.to_obj() for spec in dataset.specs],
        "n": dataset.n,
        "coords": _coords_obj(dataset),
        "tree": tree_obj,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(obj))


def load_index(path: str | Path) -> tuple[str, Dataset, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict) or obj.get("format") != INDEX_FORMAT:
        raise InputError(f"{path}: not a {INDEX_FORMAT} file")
    if obj.get("version") != INDEX_VERSION:
        raise InputError(f"{path}: unsupported index version {obj.get('version')!r}")
    structure = obj.get("structure")
    if structure not in STRUCTURES:
        raise InputError(f"{path}: unknown structure {structure!r}")
    specs = [FactorSpec(name=e["name"], kind=e["kind"], dim=e.get("dim")) for e in obj["factors"]]
    dataset = Dataset(specs, obj["coords"])
    if dataset.n != obj.get("n"):
        raise InputError(f"{path}: coordinate columns disagree with n={obj.get('n')}")
    if structure == "product-tree":
        struct, _ = tree_from_obj(obj["tree"], dataset.product())
    else:
        struct = grt_from_obj(obj["tree"], dataset.spaces())
    return structure, dataset, struct


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    specs = load_factor_specs(args.factors)
    dataset = load_dataset(args.dataset, specs)
    seed: int | str = "first" if args.seed_point is None else args.seed_point
    t0 = time.perf_counter()
    struct = build_structure(dataset, args.structure, seed=seed, merge_mode=args.merge)
    build_seconds = time.perf_counter() - t0
    evals_after_build = {s.name: sp.evals for s, sp in zip(dataset.specs, dataset.spaces())}
    spread: dict[str, Any] = {}
    product_spread = None
    duplicates = False
    if dataset.n >= 2:
        summary = dataset_summary(dataset.product(), dataset.ids())
        for name, st in summary.per_factor.items():
            spread[name] = None if st.has_duplicates else st.spread
            duplicates = duplicates or st.has_duplicates
        product_spread = None if summary.product.has_duplicates else summary.product.spread
    save_index(args.out, dataset, args.structure, struct)
    _print_report(
        {
            "structure": args.structure,
            "n": dataset.n,
            "m": dataset.m,
            "spread": spread,
            "product_spread": product_spread,
            "has_duplicates": duplicates,
            "build_dist_evals": evals_after_build,
            "build_seconds": round(build_seconds, 6),
            "out": str(args.out),
        }
    )
    return 0


def _resolve_queries(workload: Sequence[WorkloadQuery], default_eps: float | None) -> list[ProductQuery]:
    out = []
    for i, wq in enumerate(workload):
        eps = wq.epsilon if wq.epsilon is not None else default_eps
        if eps is None:
            raise InputError(f"query #{i} has no epsilon and no --epsilon-default was given")
        out.append(ProductQuery(coords=wq.coords, radii=wq.radii, epsilon=float(eps)))
    return out


def _run_one(struct: Any, structure: str, query: ProductQuery) -> tuple[set[int], SearchStats]:
    if structure == "product-tree":
        return product_range_query(struct, query)
    return grt_query(struct, query)


def cmd_query(args: argparse.Namespace) -> int:
    structure, dataset, struct = load_index(args.index)
    workload = load_workload(args.workload, dataset.specs)
    queries = _resolve_queries(workload, args.epsilon_default)
    t0 = time.perf_counter()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outcomes = list(pool.map(lambda q: _run_one(struct, structure, q), queries))
    else:
        outcomes = [_run_one(struct, structure, q) for q in queries]
    wall = time.perf_counter() - t0

    rows = []
    for i, (points, stats) in enumerate(outcomes):
        rows.append(
            {
                "query_index": i,
                "points": sorted(points),
                "stats": {
                    "width": stats.width,
                    "height": stats.height,
                    "splits": stats.splits,
                    "dist_evals": list(stats.dist_evals),
                    "k": stats.output_size,
                },
            }
        )
    write_results(args.out, rows)
    widths = [stats.width for _, stats in outcomes]
    per_factor = [0] * dataset.m
    for _, stats in outcomes:
        for j, e in enumerate(stats.dist_evals):
            per_factor[j] += e
    _print_report(
        {
            "structure": structure,
            "n": dataset.n,
            "m": dataset.m,
            "queries": len(queries),
            "results": str(args.out),
            "max_width": max(widths, default=0),
            "mean_width": (sum(widths) / len(widths)) if widths else 0.0,
            "total_splits": sum(stats.splits for _, stats in outcomes),
            "total_dist_evals": per_factor,
            "total_output": sum(stats.output_size for _, stats in outcomes),
            "wall_seconds": round(wall, 6),
        }
    )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    specs = load_factor_specs(args.factors)
    dataset = load_dataset(args.dataset, specs)
    workload = load_workload(args.workload, specs)
    queries = _resolve_queries(workload, args.epsilon_default)
    rows = load_results(args.results)
    by_index = {row["query_index"]: row for row in rows}
    spaces = dataset.spaces()
    ids = dataset.ids()
    failures = 0
    for i, q in enumerate(queries):
        row = by_index.get(i)
        if row is None:
            print(f"query {i}: missing from results", file=sys.stderr)
            failures += 1
            continue
        exact = exact_product_range(spaces, q.coords, q.radii, ids)
        expanded = exact_product_range(
            spaces, q.coords, [(1.0 + q.epsilon) * r for r in q.radii], ids
        )
        verdict = sandwich_check(row["points"], exact, expanded)
        if not verdict.passed:
            failures += 1
            print(
                f"query {i}: FAIL missing={list(verdict.missing)} extra={list(verdict.extra)}",
                file=sys.stderr,
            )
    print(f"verified {len(queries)} queries: {len(queries) - failures} ok, {failures} failed")
    return 1 if failures else 0


def _parse_factor_string(text: str) -> list[FactorSpec]:
    specs = []
    for i, part in enumerate(text.split(",")):
        part = part.strip()
        if not part:
            raise InputError(f"empty factor entry in {text!r}")
        if ":" in part:
            kind, dim = part.split(":", 1)
            try:
                specs.append(FactorSpec(name=f"f{i}", kind=kind, dim=int(dim)))
            except ValueError as exc:
                raise InputError(f"bad factor entry {part!r}") from exc
        else:
            specs.append(FactorSpec(name=f"f{i}", kind=part))
    return specs


def _bench_values(args: argparse.Namespace) -> list[float]:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad sweep values {args.values!r}") from exc
    if not values:
        raise InputError("sweep needs at least one value")
    return values


def _bench_structures(name: str) -> list[str]:
    if name == "both":
        return list(STRUCTURES)
    if name in STRUCTURES:
        return [name]
    raise InputError(f"unknown structure {name!r}")


def cmd_bench(args: argparse.Namespace) -> int:
    specs = _parse_factor_string(args.factors)
    values = _bench_values(args)
    structures = _bench_structures(args.structure)
    rows = []
    for value in values:
        n = int(value) if args.sweep == "n" else args.n
        epsilon = value if args.sweep == "epsilon" else args.epsilon
        aspect = value if args.sweep == "aspect-ratio" else args.aspect
        dataset = synth_dataset(specs, n, layout=args.generator, seed=args.seed)
        workload = calibrated_queries(
            dataset,
            args.queries,
            selectivity=args.selectivity,
            epsilon=epsilon,
            aspect=aspect,
            seed=args.seed + 1,
        )
        queries = _resolve_queries(workload, None)
        for structure in structures:
            struct = build_structure(dataset, structure, merge_mode=args.merge)
            t0 = time.perf_counter()
            outcomes = [_run_one(struct, structure, q) for q in queries]
            wall = time.perf_counter() - t0
            rows.append(
                {
                    "structure": structure,
                    "sweep": args.sweep,
                    "value": value,
                    "width": max(stats.width for _, stats in outcomes),
                    "splits": sum(stats.splits for _, stats in outcomes),
                    "dist_evals": sum(stats.total_evals for _, stats in outcomes),
                    "wall_time_s": round(wall, 6),
                }
            )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["structure", "sweep", "value", "width", "splits", "dist_evals", "wall_time_s"]
        )
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _depth_histogram(tree: GreedyTree) -> list[int]:
    counts: list[int] = []
    if tree.root is None:
        return counts
    stack = [(tree.root, 0)]
    while stack:
        v, d = stack.pop()
        while len(counts) <= d:
            counts.append(0)
        counts[d] += 1
        if v.left is not None:
            stack.append((v.left, d + 1))
            stack.append((v.right, d + 1))
    return counts


def cmd_stats(args: argparse.Namespace) -> int:
    structure, dataset, struct = load_index(args.index)
    primary = struct if isinstance(struct, GreedyTree) else struct.primary
    histogram = _depth_histogram(primary)
    report: dict[str, Any] = {
        "structure": structure,
        "n": dataset.n,
        "m": dataset.m,
        "primary_nodes": sum(histogram),
        "primary_depth": len(histogram) - 1 if histogram else 0,
        "nodes_per_depth": histogram,
    }
    if structure == "grt":
        totals = aux_leaf_totals(struct)
        report["aux_leaf_totals"] = {str(level): totals[level] for level in sorted(totals)}
    _print_report(report)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    specs = _parse_factor_string(args.factors)
    dataset = synth_dataset(specs, args.n, layout=args.generator, seed=args.seed)
    write_dataset(args.dataset_out, dataset)
    with open(args.factors_out, "w", encoding="utf-8") as fh:
        json.dump([spec.to_obj() for spec in dataset.specs], fh)
    if args.workload_out is not None:
        workload = calibrated_queries(
            dataset,
            args.queries,
            selectivity=args.selectivity,
            epsilon=args.epsilon,
            aspect=args.aspect,
            seed=args.seed + 1,
        )
        write_workload(args.workload_out, dataset.specs, workload)
    print(f"wrote n={dataset.n} dataset to {args.dataset_out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greedyrange",
        description="Approximate range search over products of metric spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an index from a dataset")
    p.add_argument("--dataset", required=True, help="dataset JSONL path")
    p.add_argument("--factors", required=True, help="factor config JSON path")
    p.add_argument("--structure", choices=STRUCTURES, default="grt")
    p.add_argument("--out", required=True, help="index output path")
    p.add_argument("--seed-point", type=int, default=None, help="greedy seed point id (default: first)")
    p.add_argument("--merge", choices=("fast", "rebuild"), default="fast")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="run a workload against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--workload", required=True, help="workload JSONL path")
    p.add_argument("--out", required=True, help="results JSONL path")
    p.add_argument("--epsilon-default", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("verify", help="check results against the brute-force oracle")
    p.add_argument("--dataset", required=True)
    p.add_argument("--factors", required=True)
    p.add_argument("--workload", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--epsilon-default", type=float, default=None)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="sweep a parameter on synthetic data")
    p.add_argument("--factors", required=True, help='factor kinds, e.g. "l2:2,l2:2" or "abs1d,abs1d"')
    p.add_argument("--generator", choices=GENERATORS, default="uniform")
    p.add_argument("--sweep", choices=("n", "epsilon", "aspect-ratio"), required=True)
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--aspect", type=float, default=1.0)
    p.add_argument("--selectivity", type=float, default=0.02)
    p.add_argument("--queries", type=int, default=8)
    p.add_argument("--structure", default="both", help="product-tree, grt, or both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--merge", choices=("fast", "rebuild"), default="fast")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("stats", help="size report for an index")
    p.add_argument("--index", required=True)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("gen", help="generate a synthetic dataset (and optional workload)")
    p.add_argument("--factors", required=True, help='factor kinds, e.g. "l2:2,abs1d"')
    p.add_argument("--generator", choices=GENERATORS, default="uniform")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset-out", required=True)
    p.add_argument("--factors-out", required=True)
    p.add_argument("--workload-out", default=None)
    p.add_argument("--queries", type=int, default=8)
    p.add_argument("--selectivity", type=float, default=0.02)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--aspect", type=float, default=1.0)
    p.set_defaults(fn=cmd_gen)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
