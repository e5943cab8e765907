"""Reference implementations the tests trust instead of the library.

Everything here is written the slow, obvious way: plain dicts, explicit
loops, scalar arithmetic.  No numpy, no shared code with the package.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

Dist = Callable[[int, int], float]


def brute_greedy(points: Sequence[int], dist: Dist, seed: int | None = None) -> tuple[list, list, list]:
    """Quadratic farthest-point ordering.

    Ties (both the farthest choice and the predecessor assignment) go to
    the smallest id.  Returns (order, insertion_radius, parent) with
    insertion_radius[0] = inf and parent[0] = None.
    """
    pts = sorted(points)
    start = pts[0] if seed is None else seed
    order = [start]
    radii = [math.inf]
    parents: list[int | None] = [None]
    remaining = {p for p in pts if p != start}
    # nearest inserted predecessor of every remaining point
    near = {p: (dist(p, start), start) for p in remaining}
    while remaining:
        best = max(near[p][0] for p in remaining)
        chosen = min(p for p in remaining if near[p][0] == best)
        d, parent = near.pop(chosen)
        remaining.discard(chosen)
        order.append(chosen)
        radii.append(d)
        parents.append(parent)
        for p in remaining:
            dd = dist(p, chosen)
            if dd < near[p][0] or (dd == near[p][0] and chosen < near[p][1]):
                near[p] = (dd, chosen)
    return order, radii, parents


def is_greedy_permutation(
    order: Sequence[int],
    radii: Sequence[float],
    parents: Sequence[int | None],
    points: Sequence[int],
    dist: Dist,
) -> list[str]:
    """Check a claimed greedy ordering directly against the definition.

    Returns a list of human-readable complaints; empty means valid.
    Does not compare against any particular construction, only against
    what the ordering is supposed to mean:

    - a permutation of ``points``
    - radii[i] is the distance from order[i] to its nearest predecessor,
      parents[i] is that predecessor (smallest id on ties)
    - order[i] maximizes nearest-predecessor distance among the points
      not yet placed (smallest id on ties)
    - radii (after the leading inf) never increase
    """
    bad: list[str] = []
    if sorted(order) != sorted(points):
        return [f"not a permutation of the input ids: {order}"]
    if len(order) != len(radii) or len(order) != len(parents):
        return ["order, radii, parents lengths disagree"]
    if radii and radii[0] != math.inf:
        bad.append(f"radii[0] = {radii[0]}, expected inf")
    if parents and parents[0] is not None:
        bad.append(f"parents[0] = {parents[0]}, expected None")

    for i in range(1, len(order)):
        prefix = order[:i]
        p = order[i]
        d_near = min(dist(p, q) for q in prefix)
        want_parent = min(q for q in prefix if dist(p, q) == d_near)
        if radii[i] != d_near:
            bad.append(f"radii[{i}] = {radii[i]}, nearest predecessor sits at {d_near}")
        if parents[i] != want_parent:
            bad.append(f"parents[{i}] = {parents[i]}, expected {want_parent}")
        # farthest-point rule over everything not yet placed
        rest = order[i:]
        far = max(min(dist(s, q) for q in prefix) for s in rest)
        achievers = [s for s in rest if min(dist(s, q) for q in prefix) == far]
        if d_near != far or p != min(achievers):
            bad.append(f"order[{i}] = {p} is not the farthest remaining point (tie rule included)")
        if radii[i] > radii[i - 1]:
            bad.append(f"radii increase at {i}: {radii[i - 1]} -> {radii[i]}")
    return bad


def brute_product_range(
    coords_by_point: dict[int, tuple],
    q: tuple,
    radii: Sequence[float],
    dists: Sequence[Callable],
) -> set[int]:
    """Independent product range scan for cross-checking the oracle module."""
    out = set()
    for pid, payloads in coords_by_point.items():
        if all(dists[i](q[i], payloads[i]) <= radii[i] for i in range(len(radii))):
            out.add(pid)
    return out


def scalar_abs(a: float, b: float) -> float:
    return abs(a - b)


def scalar_l2(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def scalar_l1(a: Sequence[float], b: Sequence[float]) -> float:
    return sum(abs(x - y) for x, y in zip(a, b))


def scalar_levenshtein(a: str, b: str) -> float:
    """Textbook full-matrix edit distance, small inputs only."""
    la, lb = len(a), len(b)
    m = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        m[i][0] = i
    for j in range(lb + 1):
        m[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            m[i][j] = min(
                m[i - 1][j] + 1,
                m[i][j - 1] + 1,
                m[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return float(m[la][lb])
