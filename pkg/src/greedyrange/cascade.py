"""Cascaded greedy trees: one tree per factor, nested node by node.

The first factor gets a greedy tree over the whole dataset.  Every node
of that tree carries an auxiliary structure over exactly its own points,
built on the remaining factors; with one factor left the auxiliary is a
plain greedy tree.  Auxiliaries are assembled bottom-up by merging the
children's auxiliaries, which copies rather than consumes them, so child
structures stay valid after their parent is built.

A query peels one factor per level: a range cover on the current tree,
then recursion into each cover node's auxiliary with the remaining radii.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .errors import InputError
from .metrics import MetricSpace
from .search import NodeCover, ProductQuery, SearchStats, range_cover, range_report
from .tree import (
    GreedyTree,
    GreedyTreeNode,
    build_greedy_tree,
    greedy_permutation,
    merge,
    tree_from_obj,
    tree_to_obj,
)

__all__ = [
    "GreedyRangeTree",
    "build_grt",
    "grt_query",
    "aux_leaf_totals",
    "grt_to_obj",
    "grt_from_obj",
]

GRT_FORMAT = "greedy-range-tree"
GRT_VERSION = 1


@dataclass
class GreedyRangeTree:
    """Cascade over two or more factors (one factor is a plain tree)."""

    primary: GreedyTree
    aux: dict[int, "GreedyRangeTree | GreedyTree"]  # keyed by id(node)
    factors: list[MetricSpace]

    @property
    def n(self) -> int:
        return self.primary.n

    @property
    def m(self) -> int:
        return len(self.factors)

    def aux_of(self, node: GreedyTreeNode) -> "GreedyRangeTree | GreedyTree":
        return self.aux[id(node)]


def _decorate(tree: GreedyTree, rest: Sequence[MetricSpace], merge_mode: str) -> dict[int, Any]:
    """Attach an auxiliary per node of ``tree`` over the ``rest`` factors."""
    aux: dict[int, Any] = {}
    post: list[GreedyTreeNode] = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        post.append(v)
        if v.left is not None:
            stack.append(v.left)
            stack.append(v.right)
    # Reverse preorder visits children before parents.
    for v in reversed(post):
        if v.left is None:
            aux[id(v)] = build_grt([v.center], rest, merge_mode=merge_mode)
        else:
            left_aux, right_aux = aux[id(v.left)], aux[id(v.right)]
            if len(rest) == 1:
                aux[id(v)] = merge(left_aux, right_aux, mode=merge_mode)
            else:
                primary = merge(left_aux.primary, right_aux.primary, mode=merge_mode)
                aux[id(v)] = GreedyRangeTree(
                    primary=primary,
                    aux=_decorate(primary, rest[1:], merge_mode),
                    factors=list(rest),
                )
    return aux


def build_grt(
    points: Sequence[int],
    factors: Sequence[MetricSpace],
    *,
    seed: int | str = "first",
    merge_mode: str = "fast",
) -> GreedyRangeTree | GreedyTree:
    """Build the cascade for the given factors over the given points.

    With a single factor this is exactly ``build_greedy_tree`` on it.
    """
    factors = list(factors)
    if not factors:
        raise InputError("at least one factor is required")
    if not points:
        raise InputError("n >= 1 required: no points to index")
    tree = build_greedy_tree(greedy_permutation(points, factors[0], seed=seed), factors[0])
    if len(factors) == 1:
        return tree
    return GreedyRangeTree(
        primary=tree,
        aux=_decorate(tree, factors[1:], merge_mode),
        factors=factors,
    )


@dataclass
class _Agg:
    width: int = 0
    height: int = 0
    splits: int = 0
    evals: list[int] | None = None

    def add(self, level: int, stats: SearchStats) -> None:
        self.width = max(self.width, stats.width)
        self.height = max(self.height, stats.height)
        self.splits += stats.splits
        self.evals[level] += stats.dist_evals[0]


def grt_query(struct: GreedyRangeTree | GreedyTree, query: ProductQuery) -> tuple[set[int], SearchStats]:
    """Answer a product query level by level.

    Same sandwich contract as the single-tree search, with the same eps
    applied at every level.  Width and height aggregate as maxima over
    the per-level sub-searches; splits and per-factor evaluations add up.
    """
    m = len(query.radii)
    declared = struct.m if isinstance(struct, GreedyRangeTree) else 1
    if m != declared:
        raise InputError(f"query has {m} radii but the structure has {declared} factors")

    agg = _Agg(evals=[0] * m)
    points: set[int] = set()

    def walk(s: GreedyRangeTree | GreedyTree, level: int) -> None:
        payload = query.coords[level]
        radius = query.radii[level]
        if isinstance(s, GreedyTree):
            pts, stats = range_report(s, payload, radius, query.epsilon)
            agg.add(level, stats)
            points.update(pts)
            return
        cover, stats = range_cover(s.primary, payload, radius, query.epsilon)
        agg.add(level, stats)
        for node in cover.nodes:
            walk(s.aux_of(node), level + 1)

    walk(struct, 0)
    stats = SearchStats(
        width=agg.width,
        height=agg.height,
        splits=agg.splits,
        dist_evals=tuple(agg.evals),
        output_size=len(points),
    )
    return points, stats


def aux_leaf_totals(struct: GreedyRangeTree | GreedyTree) -> dict[int, int]:
    """Leaf counts per cascade level (level 0 is the primary tree)."""
    totals: dict[int, int] = {}

    def walk(s: GreedyRangeTree | GreedyTree, level: int) -> None:
        if isinstance(s, GreedyTree):
            totals[level] = totals.get(level, 0) + s.n
            return
        totals[level] = totals.get(level, 0) + s.primary.n
        for v in s.primary.nodes():
            walk(s.aux_of(v), level + 1)

    walk(struct, 0)
    return totals


# ---------------------------------------------------------------------------
# Serialization: the primary tree's preorder object, each node embedding
# its auxiliary structure under "aux".
# ---------------------------------------------------------------------------


def grt_to_obj(struct: GreedyRangeTree | GreedyTree) -> dict[str, Any]:
    if isinstance(struct, GreedyTree):
        return tree_to_obj(struct)
    extra = {nid: grt_to_obj(sub) for nid, sub in struct.aux.items()}
    return {
        "format": GRT_FORMAT,
        "version": GRT_VERSION,
        "primary": tree_to_obj(struct.primary, node_extra=extra),
    }


def grt_from_obj(obj: dict[str, Any], factors: Sequence[MetricSpace]) -> GreedyRangeTree | GreedyTree:
    factors = list(factors)
    if not factors:
        raise InputError("at least one factor is required")
    if isinstance(obj, dict) and obj.get("format") == GRT_FORMAT:
        if obj.get("version") != GRT_VERSION:
            raise InputError(f"unsupported {GRT_FORMAT} version {obj.get('version')!r}")
        if len(factors) < 2:
            raise InputError("a cascade object needs at least two factors")
        primary, records = tree_from_obj(obj["primary"], factors[0])
        aux: dict[int, Any] = {}
        for node, rec in zip(primary.nodes(), records):
            if "aux" not in rec:
                raise InputError("cascade node is missing its auxiliary structure")
            aux[id(node)] = grt_from_obj(rec["aux"], factors[1:])
        return GreedyRangeTree(primary=primary, aux=aux, factors=factors)
    if len(factors) != 1:
        raise InputError(f"expected a {GRT_FORMAT} object for {len(factors)} factors")
    tree, _ = tree_from_obj(obj, factors[0])
    return tree
