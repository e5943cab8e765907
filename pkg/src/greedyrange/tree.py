"""Greedy-ordered ball trees.

A greedy permutation repeatedly takes the point farthest from everything
chosen so far.  The tree hangs every point under its nearest predecessor
and binarizes each center's child list in rank order: the right child is
the subtree of the earliest remaining child, the left child keeps the
center with the rest.  Node radii are exact maxima over subtree points,
recomputed bottom-up, so every node is a tight ball cover of its leaves.

Exactness has one consequence worth knowing: a right child's radius may
exceed its parent's when an attachment chain wanders around the center
(small Euclidean examples exist).  Radii still cover, which is all the
search needs, so ``verify_greedy_tree`` reports such inversions as a
diagnostic count rather than a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .errors import InputError
from .metrics import MetricSpace, ProductMetric

__all__ = [
    "GreedyPermutation",
    "GreedyTreeNode",
    "GreedyTree",
    "VerificationReport",
    "greedy_permutation",
    "build_greedy_tree",
    "merge",
    "verify_greedy_tree",
    "subtree_points",
    "tree_to_obj",
    "tree_from_obj",
]

Metric = MetricSpace | ProductMetric


@dataclass(frozen=True)
class GreedyPermutation:
    """A farthest-point ordering with insertion radii and predecessors.

    ``insertion_radius[i]`` is the distance from ``order[i]`` to its
    nearest predecessor (inf for the seed); radii never increase along
    the order.  ``parent[i]`` is that predecessor (None for the seed).
    """

    order: list[int]
    insertion_radius: list[float]
    parent: list[int | None]

    def __len__(self) -> int:
        return len(self.order)


def greedy_permutation(points: Sequence[int], metric: Metric, seed: int | str = "first") -> GreedyPermutation:
    """Exact greedy ordering by the naive quadratic algorithm.

    Ties in the farthest-point choice and in nearest-predecessor
    assignment both go to the smallest point id.  ``seed`` is a point id
    or "first" for ``points[0]``.
    """
    ids = np.asarray(list(points), dtype=np.intp)
    if ids.size == 0:
        raise InputError("n >= 1 required: no points to order")
    if len(set(ids.tolist())) != ids.size:
        raise InputError("duplicate point ids in input")
    if seed == "first":
        seed_id = int(ids[0])
    else:
        seed_id = int(seed)
        if seed_id not in set(ids.tolist()):
            raise InputError(f"seed {seed_id} is not among the input points")

    n = ids.size
    order = [seed_id]
    radii = [math.inf]
    parents: list[int | None] = [None]
    if n == 1:
        return GreedyPermutation(order, radii, parents)

    alive = ids != seed_id
    mind = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.intp)
    last = seed_id
    for _ in range(n - 1):
        live_idx = np.flatnonzero(alive)
        live_ids = ids[live_idx]
        row = metric.dist_many(last, live_ids)
        cur_d = mind[live_idx]
        cur_p = parent[live_idx]
        better = row < cur_d
        tie = (row == cur_d) & (last < cur_p)
        cur_p[better | tie] = last
        cur_d[better] = row[better]
        mind[live_idx] = cur_d
        parent[live_idx] = cur_p

        best = cur_d.max()
        cand = live_idx[np.flatnonzero(cur_d == best)]
        chosen = cand[np.argmin(ids[cand])]
        cid = int(ids[chosen])
        order.append(cid)
        radii.append(float(mind[chosen]))
        parents.append(int(parent[chosen]))
        alive[chosen] = False
        last = cid
    return GreedyPermutation(order, radii, parents)


class GreedyTreeNode:
    """Binary ball-tree node; leaves carry single points and radius 0."""

    __slots__ = ("center", "radius", "left", "right", "point_count")

    def __init__(
        self,
        center: int,
        radius: float,
        left: "GreedyTreeNode | None" = None,
        right: "GreedyTreeNode | None" = None,
        point_count: int = 1,
    ) -> None:
        self.center = center
        self.radius = radius
        self.left = left
        self.right = right
        self.point_count = point_count

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"GreedyTreeNode(center={self.center}, radius={self.radius}, count={self.point_count})"


def subtree_points(node: GreedyTreeNode) -> np.ndarray:
    """Point ids under a node, in leaf order."""
    out = np.empty(node.point_count, dtype=np.intp)
    pos = 0
    stack = [node]
    while stack:
        v = stack.pop()
        if v.left is None:
            out[pos] = v.center
            pos += 1
        else:
            stack.append(v.right)
            stack.append(v.left)
    return out


def iter_nodes(node: GreedyTreeNode) -> Iterator[GreedyTreeNode]:
    stack = [node]
    while stack:
        v = stack.pop()
        yield v
        if v.left is not None:
            stack.append(v.right)
            stack.append(v.left)


@dataclass
class GreedyTree:
    """An immutable-by-convention ball tree over a greedy permutation.

    The empty tree (root None) exists only as the merge identity.  Trees
    built or merged in-process remember their permutation; deserialized
    trees do not.
    """

    root: GreedyTreeNode | None
    metric: Metric
    n: int
    permutation: GreedyPermutation | None = field(default=None, repr=False)

    @classmethod
    def empty(cls, metric: Metric) -> "GreedyTree":
        return cls(root=None, metric=metric, n=0)

    def points(self) -> np.ndarray:
        if self.root is None:
            return np.empty(0, dtype=np.intp)
        return subtree_points(self.root)

    def nodes(self) -> Iterator[GreedyTreeNode]:
        if self.root is not None:
            yield from iter_nodes(self.root)


def build_greedy_tree(gp: GreedyPermutation, metric: Metric) -> GreedyTree:
    """Binarize a greedy permutation and compute exact radii bottom-up."""
    order = gp.order
    n = len(order)
    if n == 0:
        raise InputError("cannot build a tree from an empty permutation")
    children: dict[int, list[int]] = {pid: [] for pid in order}
    for i in range(1, n):
        parent = gp.parent[i]
        if parent is None or parent not in children:
            raise InputError(f"permutation entry {i} has no valid parent")
        children[parent].append(order[i])

    node_of: dict[int, GreedyTreeNode] = {}
    pts_of: dict[int, np.ndarray] = {}
    # Children of later-ranked centers are always complete before their
    # parent folds, so one reverse pass suffices.
    for i in range(n - 1, -1, -1):
        c = order[i]
        v = GreedyTreeNode(center=c, radius=0.0)
        pts = np.asarray([c], dtype=np.intp)
        for ch in reversed(children[c]):
            right = node_of.pop(ch)
            pts = np.concatenate([pts, pts_of.pop(ch)])
            radius = float(metric.dist_many(c, pts).max())
            v = GreedyTreeNode(center=c, radius=radius, left=v, right=right, point_count=pts.size)
        node_of[c] = v
        pts_of[c] = pts
    root = node_of[order[0]]
    return GreedyTree(root=root, metric=metric, n=n, permutation=gp)


# ---------------------------------------------------------------------------
# Merge.
# ---------------------------------------------------------------------------


class _Overlay:
    """Read-only view of an input tree used to prune greedy updates.

    Tracks, per node, the max nearest-predecessor distance over the
    still-uninserted points below it, together with the smallest point id
    attaining it.  A node whose ball provably cannot improve any of its
    points is skipped whole; the strict inequality keeps skip decisions
    exact, ties included, so fast merges match plain rebuilds node for node.
    """

    __slots__ = ("centers", "radii", "lefts", "rights", "parents", "best_d", "best_id", "leaf_of")

    def __init__(self, root: GreedyTreeNode) -> None:
        nodes: list[GreedyTreeNode] = []
        parents: list[int] = []
        stack = [(root, -1)]
        while stack:
            v, par = stack.pop()
            idx = len(nodes)
            nodes.append(v)
            parents.append(par)
            if v.left is not None:
                stack.append((v.right, idx))
                stack.append((v.left, idx))
        k = len(nodes)
        self.centers = [v.center for v in nodes]
        self.radii = [v.radius for v in nodes]
        self.lefts = np.full(k, -1, dtype=np.intp)
        self.rights = np.full(k, -1, dtype=np.intp)
        self.parents = np.asarray(parents, dtype=np.intp)
        # Children always get larger indices than their parent in the
        # stack order above; recover links by matching parent indices.
        seen: dict[int, int] = {}
        for idx in range(1, k):
            par = parents[idx]
            if par in seen:
                self.rights[par] = idx
            else:
                self.lefts[par] = idx
                seen[par] = idx
        self.best_d = np.zeros(k)
        self.best_id = np.full(k, -1, dtype=np.intp)
        self.leaf_of = {nodes[i].center: i for i in range(k) if nodes[i].left is None}

    def _combine(self, idx: int) -> None:
        l, r = self.lefts[idx], self.rights[idx]
        dl, dr = self.best_d[l], self.best_d[r]
        if dl > dr:
            self.best_d[idx], self.best_id[idx] = dl, self.best_id[l]
        elif dr > dl:
            self.best_d[idx], self.best_id[idx] = dr, self.best_id[r]
        else:
            self.best_d[idx] = dl
            il, ir = self.best_id[l], self.best_id[r]
            self.best_id[idx] = ir if il < 0 else il if ir < 0 else min(il, ir)

    def init_from(self, mind: np.ndarray) -> None:
        for idx in range(len(self.centers) - 1, -1, -1):
            if self.lefts[idx] < 0:
                pid = self.centers[idx]
                if mind[pid] == -np.inf:
                    self.best_d[idx], self.best_id[idx] = -np.inf, -1
                else:
                    self.best_d[idx], self.best_id[idx] = mind[pid], pid
            else:
                self._combine(idx)

    def mark_inserted(self, pid: int) -> None:
        idx = self.leaf_of[pid]
        self.best_d[idx], self.best_id[idx] = -np.inf, -1
        idx = self.parents[idx]
        while idx >= 0:
            self._combine(idx)
            idx = self.parents[idx]

    def update(self, q: int, mind: np.ndarray, parent: np.ndarray, metric: Metric, cache: dict[int, float]) -> None:
        """Lower nearest-predecessor distances after inserting q."""
        stack = [(0, False)]
        while stack:
            idx, ready = stack.pop()
            if self.best_d[idx] == -np.inf:
                continue
            if ready:
                self._combine(idx)
                continue
            c = self.centers[idx]
            d = cache.get(c)
            if d is None:
                d = metric.dist(q, c)
                cache[c] = d
            if self.lefts[idx] < 0:
                cur = mind[c]
                if d < cur or (d == cur and q < parent[c]):
                    if d < cur:
                        mind[c] = d
                        self.best_d[idx] = d
                    parent[c] = q
                continue
            if d - self.radii[idx] > self.best_d[idx]:
                continue  # no point below can improve, even on ties
            stack.append((idx, True))
            stack.append((self.rights[idx], False))
            stack.append((self.lefts[idx], False))


def _merged_permutation(a: GreedyTree, b: GreedyTree, metric: Metric, seed_id: int) -> GreedyPermutation:
    pa, pb = a.points(), b.points()
    size = int(max(pa.max(), pb.max())) + 1
    mind = np.full(size, np.nan)
    parent = np.full(size, -1, dtype=np.intp)
    for pts, other in ((pa, pb), (pb, pa)):
        row = metric.dist_many(seed_id, pts)
        mind[pts] = row
        parent[pts] = seed_id
    mind[seed_id] = -np.inf

    ov_a, ov_b = _Overlay(a.root), _Overlay(b.root)
    ov_a.init_from(mind)
    ov_b.init_from(mind)

    order = [seed_id]
    radii = [math.inf]
    parents: list[int | None] = [None]
    total = a.n + b.n
    for _ in range(total - 1):
        da, ia = ov_a.best_d[0], ov_a.best_id[0]
        db, ib = ov_b.best_d[0], ov_b.best_id[0]
        if da > db:
            q = int(ia)
        elif db > da:
            q = int(ib)
        else:
            q = int(min(i for i in (ia, ib) if i >= 0))
        order.append(q)
        radii.append(float(mind[q]))
        parents.append(int(parent[q]))
        (ov_a if q in ov_a.leaf_of else ov_b).mark_inserted(q)
        cache: dict[int, float] = {}
        ov_a.update(q, mind, parent, metric, cache)
        ov_b.update(q, mind, parent, metric, cache)
    return GreedyPermutation(order, radii, parents)


def merge(a: GreedyTree, b: GreedyTree, *, mode: str = "fast") -> GreedyTree:
    """Combine two greedy trees over the same metric into a fresh one.

    Inputs are never mutated.  Both modes rerun the exact greedy
    algorithm on the union, seeded with the input root center of larger
    eccentricity; "fast" prunes update rounds with the input trees'
    balls, "rebuild" runs the plain quadratic pass.  Outputs of the two
    modes are identical node for node.
    """
    if mode not in ("fast", "rebuild"):
        raise InputError(f"unknown merge mode {mode!r}")
    if a.metric is not b.metric:
        raise InputError("metric mismatch: merged trees must share one metric object")
    if a.root is None:
        return b
    if b.root is None:
        return a
    pa, pb = a.points(), b.points()
    if set(pa.tolist()) & set(pb.tolist()):
        raise InputError("merged trees must cover disjoint point sets")
    metric = a.metric

    ecc_a = max(a.root.radius, float(metric.dist_many(a.root.center, pb).max()))
    ecc_b = max(b.root.radius, float(metric.dist_many(b.root.center, pa).max()))
    if ecc_a > ecc_b:
        seed_id = a.root.center
    elif ecc_b > ecc_a:
        seed_id = b.root.center
    else:
        seed_id = min(a.root.center, b.root.center)

    if mode == "rebuild":
        union = np.sort(np.concatenate([pa, pb]))
        gp = greedy_permutation(union.tolist(), metric, seed=seed_id)
    else:
        gp = _merged_permutation(a, b, metric, seed_id)
    return build_greedy_tree(gp, metric)


# ---------------------------------------------------------------------------
# Verification.
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Outcome of the exhaustive invariant scan.

    ``radius_inversions`` counts right children whose exact radius
    exceeds the parent's; see the module docstring for why that is
    diagnostic rather than a violation.
    """

    violations: list[tuple[str, str]] = field(default_factory=list)
    checked_nodes: int = 0
    radius_inversions: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self) -> tuple[str, str] | None:
        return self.violations[0] if self.violations else None


def verify_greedy_tree(t: GreedyTree, metric: Metric | None = None) -> VerificationReport:
    """Exhaustively check structural and radius invariants (O(n^2))."""
    metric = metric if metric is not None else t.metric
    report = VerificationReport()
    if t.root is None:
        if t.n != 0:
            report.violations.append(("root", f"empty tree claims n={t.n}"))
        return report

    # Aliased node objects make the structure a DAG; the bottom-up pass
    # below assumes a tree, so that corruption aborts early.
    seen: set[int] = set()
    walk: list[tuple[GreedyTreeNode, str]] = [(t.root, "root")]
    while walk:
        v, path = walk.pop()
        if id(v) in seen:
            report.violations.append((path, "node object linked from two places"))
            return report
        seen.add(id(v))
        if v.left is not None and v.right is not None:
            walk.append((v.right, path + ".R"))
            walk.append((v.left, path + ".L"))

    # Bottom-up point sets via an explicit post-order walk.
    pts_of: dict[int, np.ndarray] = {}
    stack: list[tuple[GreedyTreeNode, str, bool]] = [(t.root, "root", False)]
    while stack:
        v, path, ready = stack.pop()
        if not ready:
            if (v.left is None) != (v.right is None):
                report.violations.append((path, "node has exactly one child"))
                pts_of[id(v)] = np.asarray([v.center], dtype=np.intp)
                continue
            if v.left is None:
                report.checked_nodes += 1
                if v.radius != 0.0:
                    report.violations.append((path, f"leaf radius {v.radius} != 0"))
                if v.point_count != 1:
                    report.violations.append((path, f"leaf point_count {v.point_count} != 1"))
                pts_of[id(v)] = np.asarray([v.center], dtype=np.intp)
                continue
            stack.append((v, path, True))
            stack.append((v.right, path + ".R", False))
            stack.append((v.left, path + ".L", False))
            continue

        report.checked_nodes += 1
        lp = pts_of.pop(id(v.left))
        rp = pts_of.pop(id(v.right))
        if np.intersect1d(lp, rp).size:
            report.violations.append((path, "child point sets overlap"))
        pts = np.concatenate([lp, rp])
        pts_of[id(v)] = pts
        if v.point_count != pts.size:
            report.violations.append((path, f"point_count {v.point_count} != {pts.size}"))
        if v.left.center != v.center:
            report.violations.append((path, f"left child center {v.left.center} != {v.center}"))
        maxd = float(metric.dist_many(v.center, pts).max())
        if v.radius < maxd:
            report.violations.append((path, f"radius < max subtree distance ({v.radius} < {maxd})"))
        elif v.radius > maxd:
            report.violations.append((path, f"radius exceeds max subtree distance ({v.radius} > {maxd})"))
        if v.radius < metric.dist(v.center, v.right.center):
            report.violations.append((path, "radius below distance to right child center"))
        if v.left.radius > v.radius:
            report.violations.append((path, f"left child radius {v.left.radius} > {v.radius}"))
        if v.right.radius > v.radius:
            report.radius_inversions += 1

    root_pts = pts_of[id(t.root)]
    if root_pts.size != t.n:
        report.violations.append(("root", f"{root_pts.size} leaves but tree claims n={t.n}"))
    if len(set(root_pts.tolist())) != root_pts.size:
        report.violations.append(("root", "a point id appears in more than one leaf"))
    if t.permutation is not None and set(t.permutation.order) != set(root_pts.tolist()):
        report.violations.append(("root", "permutation and leaves disagree on the point set"))
    return report


# ---------------------------------------------------------------------------
# Serialization: versioned preorder JSON objects.
# ---------------------------------------------------------------------------

TREE_FORMAT = "greedy-tree"
TREE_VERSION = 1


def tree_to_obj(t: GreedyTree, node_extra: dict[int, Any] | None = None) -> dict[str, Any]:
    """Encode as a flat preorder node array with index links.

    Radii survive bit-exactly because JSON floats use the shortest
    round-tripping decimal form.  ``node_extra`` attaches an extra field
    (used for cascaded auxiliary structures) keyed by ``id(node)``.
    """
    nodes: list[dict[str, Any]] = []
    if t.root is not None:
        stack: list[tuple[GreedyTreeNode, int, str]] = [(t.root, -1, "")]
        while stack:
            v, parent_idx, key = stack.pop()
            idx = len(nodes)
            rec: dict[str, Any] = {"center": int(v.center), "radius": float(v.radius)}
            if node_extra is not None and id(v) in node_extra:
                rec["aux"] = node_extra[id(v)]
            nodes.append(rec)
            if parent_idx >= 0:
                nodes[parent_idx][key] = idx
            if v.left is not None:
                # Right pushed first so the left subtree serializes first.
                stack.append((v.right, idx, "right"))
                stack.append((v.left, idx, "left"))
    return {"format": TREE_FORMAT, "version": TREE_VERSION, "n": t.n, "nodes": nodes}


def tree_from_obj(obj: dict[str, Any], metric: Metric) -> tuple[GreedyTree, list[dict[str, Any]]]:
    """Decode a tree object; also returns the raw node records in order.

    The record list lets callers recover per-node extras ("aux") aligned
    with the rebuilt nodes.
    """
    if not isinstance(obj, dict) or obj.get("format") != TREE_FORMAT:
        raise InputError(f"not a {TREE_FORMAT} object")
    if obj.get("version") != TREE_VERSION:
        raise InputError(f"unsupported {TREE_FORMAT} version {obj.get('version')!r}")
    records = obj.get("nodes")
    if not records:
        raise InputError("serialized tree has no nodes")
    total = len(records)
    built: list[GreedyTreeNode] = [
        GreedyTreeNode(center=int(rec["center"]), radius=float(rec["radius"])) for rec in records
    ]
    # Preorder puts children after their parent, so one reverse pass
    # links subtrees with point counts already final.
    for idx in range(total - 1, -1, -1):
        rec = records[idx]
        has_l, has_r = "left" in rec, "right" in rec
        if has_l != has_r:
            raise InputError(f"node {idx} has exactly one child link")
        if has_l:
            li, ri = rec["left"], rec["right"]
            if not (idx < li < total and idx < ri < total):
                raise InputError(f"node {idx} has child links outside preorder range")
            node = built[idx]
            node.left = built[li]
            node.right = built[ri]
            node.point_count = node.left.point_count + node.right.point_count
    root = built[0]
    n = obj.get("n")
    if n != root.point_count:
        raise InputError(f"serialized tree claims n={n} but has {root.point_count} leaves")
    return GreedyTree(root=root, metric=metric, n=root.point_count), records
