"""Measured Reeb trees of scalar fields on the annulus.

The tree of a :class:`~autogap.surface.ScalarField` is the contour tree of its
piecewise-linear model.  The two boundary circles are collapsed to single
vertices beforehand, so the triangulated surface is a sphere and the contour
tree is a tree whose two distinguished nodes are the roots.

Ties between equal samples are broken by simulation of simplicity: vertices
are ordered by ``(value, index)`` where the index runs through the bottom
root, then the interior grid row by row in ``s``, then the top root.  A
constant field thus behaves like the height ``s`` and yields an interval.

Edge measures are exact for the model: every triangle sends the part of its
area between two levels to the tree arc its contours occupy at those levels.
Triangles on which the field is constant are split according to the tie-break
order instead of the value.
"""

from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .surface import ScalarField, triangle_sublevel


class ReebError(ValueError):
    """The field violates a precondition of the tree construction."""


# -- edge profiles --------------------------------------------------------------
#
# A profile describes how an edge's measure is spread over its values.
# ``value_at(m)`` is the field value at the point of the edge that has
# measure ``m`` between itself and the ``lo`` end.

@dataclass(frozen=True)
class LinearProfile:
    """Measure spread uniformly in value (or a constant-valued edge)."""

    v_lo: float
    v_hi: float
    measure: float

    def value_at(self, m: float) -> float:
        if self.measure <= 0:
            return self.v_lo
        x = min(max(m / self.measure, 0.0), 1.0)
        return self.v_lo + (self.v_hi - self.v_lo) * x


@dataclass(frozen=True)
class FunctionProfile:
    """Measure given by an increasing cumulative function of the value."""

    v_lo: float
    v_hi: float
    measure: float
    cdf: Callable[[float], float]

    def value_at(self, m: float) -> float:
        if m <= 0:
            return self.v_lo
        if m >= self.measure:
            return self.v_hi
        return brentq(lambda c: self.cdf(c) - m, self.v_lo, self.v_hi, xtol=1e-14, rtol=1e-14)


class TriangleProfile:
    """Exact measure profile of a grid arc (sum of triangle pieces)."""

    def __init__(self, v_lo, v_hi, lo, hi, fsorted, area, alloc, flat):
        self.v_lo = float(v_lo)
        self.v_hi = float(v_hi)
        self.measure = float(alloc.sum())
        nonflat = ~flat
        by_hi = np.argsort(hi, kind="stable")
        self._hi_sorted = hi[by_hi]
        self._cum_alloc = np.concatenate([[0.0], np.cumsum(alloc[by_hi])])
        lo_nf, hi_nf = lo[nonflat], hi[nonflat]
        by_lo = np.argsort(lo_nf, kind="stable")
        self._lo = lo_nf[by_lo]
        self._hi = hi_nf[by_lo]
        self._f = fsorted[nonflat][by_lo]
        self._area = area[nonflat][by_lo]
        self._width = float((self._hi - self._lo).max()) if len(self._lo) else 0.0

    def cumulative(self, c: float) -> float:
        """Measure of the part of the arc with value below ``c``."""
        k = np.searchsorted(self._hi_sorted, c, side="right")
        total = self._cum_alloc[k]
        if self._width > 0:
            i0 = np.searchsorted(self._lo, c - self._width, side="left")
            i1 = np.searchsorted(self._lo, c, side="left")
            if i1 > i0:
                sl = slice(i0, i1)
                strad = self._hi[sl] > c
                if np.any(strad):
                    f = self._f[sl][strad]
                    a = self._area[sl][strad]
                    lo = self._lo[sl][strad]
                    total += float((triangle_sublevel(f, a, c) - triangle_sublevel(f, a, lo)).sum())
        return float(total)

    def value_at(self, m: float) -> float:
        if m <= 0 or self.v_hi <= self.v_lo:
            return self.v_lo
        if m >= self.measure:
            return self.v_hi
        a, b = self.v_lo, self.v_hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if self.cumulative(mid) >= m:
                b = mid
            else:
                a = mid
        return b


@dataclass(frozen=True)
class ChainProfile:
    """Profiles of consecutive edges joined at regular nodes, ordered from ``lo`` up."""

    parts: tuple

    @property
    def measure(self) -> float:
        return float(sum(p.measure for p in self.parts))

    def value_at(self, m: float) -> float:
        for p in self.parts[:-1]:
            if m <= p.measure:
                return p.value_at(m)
            m -= p.measure
        return self.parts[-1].value_at(m)


@dataclass(frozen=True)
class ReebEdge:
    lo: int
    hi: int
    measure: float
    profile: object

    def value_at(self, offset: float) -> float:
        return self.profile.value_at(offset)


@dataclass(frozen=True)
class TreePoint:
    """A point of a tree: a node, or ``offset`` measure from an edge's ``lo`` end."""

    value: float
    node: Optional[int] = None
    edge: Optional[int] = None
    offset: float = 0.0
    at_attachment: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "node": self.node, "edge": self.edge,
                "offset": self.offset, "at_attachment": self.at_attachment}


@dataclass(frozen=True)
class Gap:
    """Missing percentile interval ``(h_start, h_end)`` caused by branches at ``node``."""

    h_start: float
    h_end: float
    measure: float
    node: int

    @property
    def length(self) -> float:
        return self.h_end - self.h_start

    def __contains__(self, h: float) -> bool:
        return self.h_start < h < self.h_end

    def to_dict(self) -> dict:
        return {"h_start": self.h_start, "h_end": self.h_end, "measure": self.measure, "node": self.node}


@dataclass(frozen=True)
class StemSegment:
    edge: int
    h_start: float
    h_end: float
    upward: bool


@dataclass(frozen=True)
class StemReport:
    stem: list
    segments: list
    gaps: list
    branches: list
    total_measure: float

    def to_dict(self) -> dict:
        return {
            "stem": list(self.stem),
            "segments": [{"edge": s.edge, "h_start": s.h_start, "h_end": s.h_end} for s in self.segments],
            "gaps": [g.to_dict() for g in self.gaps],
            "branches": [{"node": n, "h": h, "measure": m} for n, h, m in self.branches],
            "total_measure": self.total_measure,
        }


@dataclass(frozen=True)
class PercentileResult:
    point: Optional[TreePoint]
    gap: Optional[Gap] = None

    @property
    def exists(self) -> bool:
        return self.point is not None

    @property
    def value(self) -> Optional[float]:
        return None if self.point is None else self.point.value


class ReebTree:
    """A finite tree with node values, measured edges and two roots."""

    def __init__(self, values: Sequence[float], edges: Sequence[ReebEdge], bottom_root: int,
                 top_root: int, vertices: Optional[Sequence] = None):
        self.values = np.asarray(values, dtype=float)
        self.edges = list(edges)
        self.bottom_root = int(bottom_root)
        self.top_root = int(top_root)
        self.vertices = vertices
        n = len(self.values)
        if len(self.edges) != n - 1:
            raise ReebError(f"{n} nodes and {len(self.edges)} edges do not form a tree")
        self.adjacency: list[list[int]] = [[] for _ in range(n)]
        for k, e in enumerate(self.edges):
            if e.measure < 0:
                raise ReebError("negative edge measure")
            self.adjacency[e.lo].append(k)
            self.adjacency[e.hi].append(k)
        self._root_at_bottom()

    @property
    def n_nodes(self) -> int:
        return len(self.values)

    @property
    def total_measure(self) -> float:
        return float(sum(e.measure for e in self.edges))

    def other(self, k: int, n: int) -> int:
        e = self.edges[k]
        return e.hi if e.lo == n else e.lo

    def _root_at_bottom(self):
        n = self.n_nodes
        parent = [-1] * n
        parent_edge = [-1] * n
        order = [self.bottom_root]
        seen = [False] * n
        seen[self.bottom_root] = True
        for x in order:
            for k in self.adjacency[x]:
                y = self.other(k, x)
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    parent_edge[y] = k
                    order.append(y)
        if len(order) != n:
            raise ReebError("tree is not connected")
        sub = [0.0] * n
        for x in reversed(order):
            if parent[x] >= 0:
                sub[parent[x]] += sub[x] + self.edges[parent_edge[x]].measure
        self._parent, self._parent_edge, self._order, self._sub = parent, parent_edge, order, sub

    # -- median ------------------------------------------------------------------

    def median(self) -> TreePoint:
        """The unique point whose complementary components all have measure <= M/2."""
        M = self.total_measure
        half = 0.5 * M
        eps = 1e-12 * max(M, 1e-300)
        sub, parent, pe = self._sub, self._parent, self._parent_edge
        n = self.bottom_root
        while True:
            heavy = None
            for k in self.adjacency[n]:
                c = self.other(k, n)
                if parent[c] == n and pe[c] == k and self.edges[k].measure + sub[c] > half + eps:
                    heavy = (k, c)
                    break
            if heavy is None:
                return TreePoint(float(self.values[n]), node=n)
            k, c = heavy
            if sub[c] >= half - eps:
                n = c
                continue
            e = self.edges[k]
            beyond = half - sub[c]
            offset = e.measure - beyond if c == e.hi else beyond
            return TreePoint(float(e.value_at(offset)), edge=k, offset=offset)

    # -- stem and percentiles ------------------------------------------------------

    def stem_nodes(self) -> list[int]:
        path = [self.top_root]
        while path[-1] != self.bottom_root:
            path.append(self._parent[path[-1]])
        return path[::-1]

    def stem_report(self) -> StemReport:
        M = self.total_measure
        nodes = self.stem_nodes()
        stem_edges = [self._parent_edge[x] for x in nodes[1:]]
        on_stem = set(stem_edges)
        cum = 0.0
        segments, gaps, branches = [], [], []
        for i, n in enumerate(nodes):
            b = 0.0
            for k in self.adjacency[n]:
                if k in on_stem:
                    continue
                c = self.other(k, n)
                b += self.edges[k].measure + self._sub[c]
            if b > 0:
                branches.append((n, cum / M, b))
                gaps.append(Gap(cum / M, (cum + b) / M, b, n))
            cum += b
            if i < len(stem_edges):
                k = stem_edges[i]
                me = self.edges[k].measure
                segments.append(StemSegment(k, cum / M, (cum + me) / M, self.edges[k].lo == n))
                cum += me
        return StemReport(nodes, segments, gaps, branches, M)

    def percentile(self, h: float) -> PercentileResult:
        """The h-percentile: the stem point whose bottom-side component has measure ``h M``."""
        if not 0.0 <= h <= 1.0:
            raise ValueError(f"h must lie in [0, 1], got {h}")
        M = self.total_measure
        target = h * M
        eps = 1e-12 * max(M, 1e-300)
        report = self.stem_report()
        gaps = {g.node: g for g in report.gaps}
        seg_iter = iter(report.segments)
        cum = 0.0
        for n in report.stem:
            g = gaps.get(n)
            b = g.measure if g else 0.0
            if abs(target - cum) <= eps:
                return PercentileResult(TreePoint(float(self.values[n]), node=n))
            if cum < target < cum + b:
                if abs(target - (cum + b)) <= eps:
                    return PercentileResult(TreePoint(float(self.values[n]), node=n, at_attachment=True), g)
                return PercentileResult(None, g)
            if b > 0 and abs(target - (cum + b)) <= eps:
                return PercentileResult(TreePoint(float(self.values[n]), node=n, at_attachment=True), g)
            cum += b
            seg = next(seg_iter, None)
            if seg is None:
                break
            e = self.edges[seg.edge]
            if cum < target < cum + e.measure:
                along = target - cum
                offset = along if seg.upward else e.measure - along
                return PercentileResult(TreePoint(float(e.value_at(offset)), edge=seg.edge, offset=offset))
            cum += e.measure
        n = report.stem[-1]
        return PercentileResult(TreePoint(float(self.values[n]), node=n))

    # -- derived trees --------------------------------------------------------------

    def capped(self, a: float, b: float, bottom_value: float = 0.0, top_value: float = 0.0) -> "ReebTree":
        """Tree of the field extended by constants over disks of areas ``a`` and ``b``
        glued to the bottom and top boundary circles."""
        if a < 0 or b < 0:
            raise ValueError("cap areas must be non-negative")
        n = self.n_nodes
        values = np.concatenate([self.values, [bottom_value, top_value]])
        edges = list(self.edges) + [
            ReebEdge(n, self.bottom_root, a, LinearProfile(bottom_value, bottom_value, a)),
            ReebEdge(self.top_root, n + 1, b, LinearProfile(top_value, top_value, b)),
        ]
        return ReebTree(values, edges, n, n + 1)

    # -- output -------------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": i, "value": float(v)} for i, v in enumerate(self.values)],
            "edges": [{"lo": e.lo, "hi": e.hi, "measure": e.measure} for e in self.edges],
            "roots": {"bottom": self.bottom_root, "top": self.top_root},
            "total_measure": self.total_measure,
        }

    def to_dot(self) -> str:
        lines = ["graph reeb {"]
        for i, v in enumerate(self.values):
            shape = ' shape=box' if i in (self.bottom_root, self.top_root) else ""
            lines.append(f'  n{i} [label="{i}: {v:.6g}"{shape}];')
        for e in self.edges:
            lines.append(f'  n{e.lo} -- n{e.hi} [label="{e.measure:.6g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    # -- synthetic trees ----------------------------------------------------------------

    @classmethod
    def interval(cls, v_bottom: float, v_top: float, measure: float,
                 cdf: Optional[Callable[[float], float]] = None) -> "ReebTree":
        """A single edge from the bottom root to the top root."""
        lo, hi = (0, 1) if v_bottom <= v_top else (1, 0)
        v_lo, v_hi = min(v_bottom, v_top), max(v_bottom, v_top)
        prof = LinearProfile(v_lo, v_hi, measure) if cdf is None else FunctionProfile(v_lo, v_hi, measure, cdf)
        return cls([v_bottom, v_top], [ReebEdge(lo, hi, measure, prof)], 0, 1)

    @classmethod
    def with_branches(cls, branches: Sequence[tuple[float, float]], total: float = 1.0,
                      branch_height: float = 0.5) -> "ReebTree":
        """Stem with branches attached at given bottom-side fractions.

        ``branches`` lists ``(h, measure)``: a branch of that measure hangs at
        the stem point whose bottom component has measure ``h * total``.  Stem
        values grow linearly with the stem measure; each branch rises
        ``branch_height`` above its attachment.
        """
        values = [0.0]
        edges = []
        cum = 0.0
        prev = 0
        stem_measure = total - sum(m for _, m in branches)
        if stem_measure < 0:
            raise ValueError("branches exceed the total measure")
        height = 0.0
        for h, m in sorted(branches):
            seg = h * total - cum
            if seg < -1e-12:
                raise ValueError("branch attachments overlap")
            seg = max(seg, 0.0)
            node = len(values)
            values.append(height + seg)
            edges.append(ReebEdge(prev, node, seg, LinearProfile(height, height + seg, seg)))
            height += seg
            tip = len(values)
            values.append(height + branch_height)
            edges.append(ReebEdge(node, tip, m, LinearProfile(height, height + branch_height, m)))
            cum += seg + m
            prev = node
        seg = total - cum
        top = len(values)
        values.append(height + seg)
        edges.append(ReebEdge(prev, top, seg, LinearProfile(height, height + seg, seg)))
        return cls(values, edges, 0, top)


# -- contour tree construction ----------------------------------------------------------

def _sweep(order: list, ptr: list, nbr: list, n: int):
    """Merge tree of the sweep in ``order``: arcs from each component head to
    the vertex that absorbs it."""
    uf = [-1] * n
    head = [0] * n
    parent = [-1] * n
    children = [[] for _ in range(n)]
    for v in order:
        uf[v] = v
        for k in range(ptr[v], ptr[v + 1]):
            u = nbr[k]
            if uf[u] < 0:
                continue
            x = u
            while uf[x] != x:
                uf[x] = uf[uf[x]]
                x = uf[x]
            if x != v:
                h = head[x]
                parent[h] = v
                children[v].append(h)
                uf[x] = v
        head[v] = v
    return parent, children


def _merge(n: int, join, split) -> list:
    """Combine join and split trees into the (augmented) contour tree."""
    jt_up, jt_down = join
    st_down, st_up = split
    up_deg = [len(c) for c in st_up]
    down_deg = [len(c) for c in jt_down]
    queue = deque(v for v in range(n) if up_deg[v] + down_deg[v] == 1)
    arcs = []
    while len(arcs) < n - 1:
        x = queue.popleft()
        if up_deg[x] == 0:
            y = st_down[x]
            st_up[y].remove(x)
            up_deg[y] -= 1
            c = jt_down[x][0]
            p = jt_up[x]
            jt_up[c] = p
            if p >= 0:
                lst = jt_down[p]
                lst[lst.index(x)] = c
        else:
            y = jt_up[x]
            jt_down[y].remove(x)
            down_deg[y] -= 1
            c = st_up[x][0]
            p = st_down[x]
            st_down[c] = p
            if p >= 0:
                lst = st_up[p]
                lst[lst.index(x)] = c
        arcs.append((x, y))
        if up_deg[y] + down_deg[y] == 1:
            queue.append(y)
    return arcs


def _check_boundary(field: ScalarField):
    v = field.values
    for j, name in ((0, "bottom"), (-1, "top")):
        row = v[:, j]
        scale = max(1.0, float(np.abs(v).max()))
        if float(np.ptp(row)) > 1e-12 * scale:
            raise ReebError(f"{name} boundary circle is not a level set (spread {np.ptp(row):.3g})")


def build_reeb_tree(field: ScalarField) -> ReebTree:
    """Contour tree of the field with roots at the two boundary circles."""
    _check_boundary(field)
    n_theta, n_s = field.shape
    if n_s < 3:
        raise ReebError("need at least one interior row")
    n_int = n_theta * (n_s - 2)
    n = n_int + 2
    bottom, top = 0, n - 1

    # grid (theta-major) index -> vertex id (s-major, roots collapsed)
    i = np.arange(n_theta)[:, None]
    j = np.arange(n_s)[None, :]
    vid = 1 + (j - 1) * n_theta + i
    vid = np.where(j == 0, bottom, np.where(j == n_s - 1, top, vid)).ravel()

    grid_vals = field.values.ravel()
    values = np.empty(n)
    values[vid] = grid_vals

    tri = vid[field.triangles]
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [0, 2]]])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    both = np.concatenate([pairs, pairs[:, ::-1]])
    both = both[np.lexsort((both[:, 1], both[:, 0]))]
    ptr = np.searchsorted(both[:, 0], np.arange(n + 1)).tolist()
    nbr = both[:, 1].tolist()

    order = np.lexsort((np.arange(n), values))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    order_list = order.tolist()

    join = _sweep(order_list, ptr, nbr, n)
    split = _sweep(order_list[::-1], ptr, nbr, n)
    arcs = _merge(n, join, split)

    # reduce to critical nodes ------------------------------------------------------
    a = np.array(arcs, dtype=np.int64).reshape(-1, 2)
    swap = rank[a[:, 0]] > rank[a[:, 1]]
    lo = np.where(swap, a[:, 1], a[:, 0])
    hi = np.where(swap, a[:, 0], a[:, 1])
    n_up = np.bincount(lo, minlength=n)
    n_down = np.bincount(hi, minlength=n)
    critical = ~((n_up == 1) & (n_down == 1))
    critical[[bottom, top]] = True
    up_nb = np.full(n, -1, dtype=np.int64)
    up_nb[lo[~critical[lo]]] = hi[~critical[lo]]

    crit_ids = np.flatnonzero(critical)
    node_of = np.full(n, -1, dtype=np.int64)
    node_of[crit_ids] = np.arange(len(crit_ids))
    arc_of = np.full(n, -1, dtype=np.int64)
    arc_lo, arc_hi = [], []
    up_nb_l = up_nb.tolist()
    crit_l = critical.tolist()
    arc_of_l = arc_of.tolist()
    starts = lo[critical[lo]]
    ends = hi[critical[lo]]
    for s0, w in zip(starts.tolist(), ends.tolist()):
        k = len(arc_lo)
        while not crit_l[w]:
            arc_of_l[w] = k
            w = up_nb_l[w]
        arc_lo.append(int(node_of[s0]))
        arc_hi.append(int(node_of[w]))
    arc_of = np.array(arc_of_l, dtype=np.int64)
    arc_lo = np.array(arc_lo, dtype=np.int64)
    arc_hi = np.array(arc_hi, dtype=np.int64)
    n_nodes = len(crit_ids)
    if len(arc_lo) != n_nodes - 1:
        raise ReebError("contour tree reduction failed")

    # allocate triangle areas to arcs -------------------------------------------------
    tri_rank = rank[tri]
    srt = np.argsort(tri_rank, axis=1, kind="stable")
    tri = np.take_along_axis(tri, srt, axis=1)
    ta, tc = tri[:, 0], tri[:, 2]
    fv = values[tri]
    area_tri = field.triangle_area
    arc_key = arc_lo * n_nodes + arc_hi
    key_order = np.argsort(arc_key)
    keys_sorted = arc_key[key_order]

    A_arc, C_arc = arc_of[ta], arc_of[tc]
    A_node, C_node = node_of[ta], node_of[tc]
    target = np.full(len(tri), -1, dtype=np.int64)
    m = (A_arc >= 0) & (A_arc == C_arc)
    target[m] = A_arc[m]
    m = (target < 0) & (A_node >= 0) & (C_arc >= 0)
    m[m] &= arc_lo[C_arc[m]] == A_node[m]
    target[m] = C_arc[m]
    m = (target < 0) & (C_node >= 0) & (A_arc >= 0)
    m[m] &= arc_hi[A_arc[m]] == C_node[m]
    target[m] = A_arc[m]
    m = (target < 0) & (A_node >= 0) & (C_node >= 0)
    if np.any(m):
        key = A_node[m] * n_nodes + C_node[m]
        pos = np.clip(np.searchsorted(keys_sorted, key), 0, len(keys_sorted) - 1)
        hit = keys_sorted[pos] == key
        idx = np.flatnonzero(m)
        target[idx[hit]] = key_order[pos[hit]]

    simple = target >= 0
    flat_s = fv[simple, 0] == fv[simple, 2]
    c_arc = [target[simple]]
    c_lo = [fv[simple, 0]]
    c_hi = np.where(flat_s, fv[simple, 0], fv[simple, 2])
    c_hi = [c_hi]
    c_f = [fv[simple]]
    c_alloc = [np.full(int(simple.sum()), area_tri)]
    c_flat = [flat_s]

    hard = np.flatnonzero(~simple)
    if len(hard):
        node_val = values[crit_ids].tolist()
        node_rank = rank[crit_ids].astype(float).tolist()
        arc_index = {(int(x), int(y)): k for k, (x, y) in enumerate(zip(arc_lo, arc_hi))}
        parent, depth = _rooted(n_nodes, arc_lo, arc_hi, int(node_of[bottom]))
        flat_h = fv[hard, 0] == fv[hard, 2]
        levels = np.where(flat_h[:, None], rank[tri[hard]].astype(float), fv[hard])
        arc_of_l, node_of_l = arc_of.tolist(), node_of.tolist()
        arc_lo_l, arc_hi_l = arc_lo.tolist(), arc_hi.tolist()
        seg_tri, seg_arc, seg_l0, seg_l1 = [], [], [], []
        for row, (va, vc, flat, la, lc) in enumerate(zip(ta[hard].tolist(), tc[hard].tolist(),
                                                         flat_h.tolist(), levels[:, 0].tolist(),
                                                         levels[:, 2].tolist())):
            lev_node = node_rank if flat else node_val
            e = arc_of_l[va]
            if e >= 0:
                cur = arc_hi_l[e]
                seg_tri.append(row)
                seg_arc.append(e)
                seg_l0.append(la)
                seg_l1.append(lev_node[cur])
            else:
                cur = node_of_l[va]
            e_tail = arc_of_l[vc]
            goal = arc_lo_l[e_tail] if e_tail >= 0 else node_of_l[vc]
            path = _tree_path(cur, goal, parent, depth)
            for x, y in zip(path[:-1], path[1:]):
                seg_tri.append(row)
                seg_arc.append(arc_index[(x, y)])
                seg_l0.append(lev_node[x])
                seg_l1.append(lev_node[y])
            if e_tail >= 0:
                seg_tri.append(row)
                seg_arc.append(e_tail)
                seg_l0.append(lev_node[goal])
                seg_l1.append(lc)
        seg_tri = np.array(seg_tri, dtype=np.int64)
        lv = levels[seg_tri]
        l0 = np.clip(np.array(seg_l0), lv[:, 0], lv[:, 2])
        l1 = np.clip(np.array(seg_l1), lv[:, 0], lv[:, 2])
        ones = np.full(len(seg_tri), area_tri)
        piece = np.maximum(triangle_sublevel(lv, ones, l1) - triangle_sublevel(lv, ones, l0), 0.0)
        seg_flat = flat_h[seg_tri]
        f_seg = fv[hard][seg_tri]
        c_arc.append(np.array(seg_arc, dtype=np.int64))
        c_lo.append(np.where(seg_flat, f_seg[:, 0], l0))
        c_hi.append(np.where(seg_flat, f_seg[:, 0], l1))
        c_f.append(f_seg)
        c_alloc.append(piece)
        c_flat.append(seg_flat)

    arc_c = np.concatenate(c_arc)
    lo_c = np.concatenate(c_lo)
    hi_c = np.concatenate(c_hi)
    f_c = np.concatenate(c_f)
    alloc_c = np.concatenate(c_alloc)
    flat_c = np.concatenate(c_flat)
    full_area = np.full(len(arc_c), area_tri)

    by_arc = np.argsort(arc_c, kind="stable")
    bounds = np.searchsorted(arc_c[by_arc], np.arange(len(arc_lo) + 1))
    edges = []
    for k in range(len(arc_lo)):
        sl = by_arc[bounds[k]:bounds[k + 1]]
        x, y = int(arc_lo[k]), int(arc_hi[k])
        prof = TriangleProfile(values[crit_ids[x]], values[crit_ids[y]], lo_c[sl], hi_c[sl],
                               f_c[sl], full_area[sl], alloc_c[sl], flat_c[sl])
        edges.append(ReebEdge(x, y, prof.measure, prof))

    grid_pos = []
    for v in crit_ids.tolist():
        if v == bottom:
            grid_pos.append(("bottom_root",))
        elif v == top:
            grid_pos.append(("top_root",))
        else:
            jj, ii = divmod(v - 1, n_theta)
            grid_pos.append((ii, jj + 1))
    return ReebTree(*_simplify(values[crit_ids].tolist(), edges, int(node_of[bottom]),
                               int(node_of[top]), grid_pos))


def _simplify(values, edges, bottom, top, vertices):
    """Fold leaf arcs of zero height into their attachment node, then splice
    the regular nodes this leaves behind.

    Such arcs come from ties broken by index on flat stretches.  Their measure
    sits at a single value, so it is kept as a constant piece of a
    neighbouring edge at the attachment end.
    """
    edges = list(edges)
    alive = [True] * len(edges)
    adj = [set() for _ in values]
    for k, e in enumerate(edges):
        adj[e.lo].add(k)
        adj[e.hi].add(k)
    roots = (bottom, top)
    held = [0.0] * len(values)
    stack = [x for x in range(len(values)) if len(adj[x]) == 1 and x not in roots]
    while stack:
        x = stack.pop()
        if len(adj[x]) != 1 or x in roots:
            continue
        k = next(iter(adj[x]))
        e = edges[k]
        if values[e.lo] != values[e.hi]:
            continue
        y = e.hi if e.lo == x else e.lo
        alive[k] = False
        adj[x].clear()
        adj[y].discard(k)
        held[y] += held[x] + e.measure
        held[x] = 0.0
        if len(adj[y]) == 1:
            stack.append(y)
    for x, m in enumerate(held):
        if m <= 0:
            continue
        flat = LinearProfile(values[x], values[x], m)
        below = [k for k in adj[x] if edges[k].hi == x]
        if below:
            k = min(below)
            e = edges[k]
            edges[k] = ReebEdge(e.lo, e.hi, e.measure + m, ChainProfile(_parts(e.profile) + (flat,)))
        else:
            k = min(adj[x])
            e = edges[k]
            edges[k] = ReebEdge(e.lo, e.hi, e.measure + m, ChainProfile((flat,) + _parts(e.profile)))
    # splice regular nodes: one arc below, one above
    for x in range(len(values)):
        if x in roots or len(adj[x]) != 2:
            continue
        k1, k2 = sorted(adj[x])
        e1, e2 = edges[k1], edges[k2]
        if e1.hi == x and e2.lo == x:
            below, above = k1, k2
        elif e2.hi == x and e1.lo == x:
            below, above = k2, k1
        else:
            continue
        eb, ea = edges[below], edges[above]
        edges[below] = ReebEdge(eb.lo, ea.hi, eb.measure + ea.measure,
                                ChainProfile(_parts(eb.profile) + _parts(ea.profile)))
        alive[above] = False
        adj[x].clear()
        adj[ea.hi].discard(above)
        adj[ea.hi].add(below)
    used = sorted({v for k, e in enumerate(edges) if alive[k] for v in (e.lo, e.hi)} | set(roots))
    new_id = {v: i for i, v in enumerate(used)}
    new_edges = [ReebEdge(new_id[e.lo], new_id[e.hi], e.measure, e.profile)
                 for k, e in enumerate(edges) if alive[k]]
    return ([values[v] for v in used], new_edges, new_id[bottom], new_id[top],
            [vertices[v] for v in used])


def _parts(profile):
    return profile.parts if isinstance(profile, ChainProfile) else (profile,)


def _rooted(n_nodes, arc_lo, arc_hi, root):
    adj = [[] for _ in range(n_nodes)]
    for x, y in zip(arc_lo.tolist(), arc_hi.tolist()):
        adj[x].append(y)
        adj[y].append(x)
    parent = [-1] * n_nodes
    depth = [0] * n_nodes
    seen = [False] * n_nodes
    seen[root] = True
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                depth[y] = depth[x] + 1
                queue.append(y)
    return parent, depth


def _tree_path(u, w, parent, depth):
    left, right = [u], [w]
    while depth[left[-1]] > depth[right[-1]]:
        left.append(parent[left[-1]])
    while depth[right[-1]] > depth[left[-1]]:
        right.append(parent[right[-1]])
    while left[-1] != right[-1]:
        left.append(parent[left[-1]])
        right.append(parent[right[-1]])
    return left + right[-2::-1]


_TREE_CACHE: "weakref.WeakKeyDictionary[ScalarField, ReebTree]" = weakref.WeakKeyDictionary()


def reeb_tree(field: ScalarField) -> ReebTree:
    """Cached :func:`build_reeb_tree` (fields are immutable)."""
    tree = _TREE_CACHE.get(field)
    if tree is None:
        tree = build_reeb_tree(field)
        _TREE_CACHE[field] = tree
    return tree


def median(tree: ReebTree) -> TreePoint:
    return tree.median()


def percentile(tree: ReebTree, h: float) -> PercentileResult:
    return tree.percentile(h)


def stem_report(tree: ReebTree) -> StemReport:
    return tree.stem_report()
