"""Vietoris-Rips persistence over graph geodesic distances.

For a vertex subset, edges enter the complex at the hop distance between
their endpoints and triangles at the largest of their three edge scales
(clique rule, capped at dimension 2).  Dimension-0 pairs come from a
union-find sweep over the edges in filtration order; dimension-1 pairs from
GF(2) column reduction of the triangle boundary, with columns kept as
integer bitmasks over the edge order.  Both agree with full boundary-matrix
reduction, which the test suite checks against an independent rank oracle.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DataError, InternalInvariantError
from .molgraph import MolecularGraph

UNREACHABLE = -1


@dataclass(frozen=True)
class DistanceMatrix:
    hops: np.ndarray  # (n, n) int32, UNREACHABLE for cross-component pairs
    diameter: int     # max finite entry

    def distance(self, u: int, v: int) -> int:
        return int(self.hops[u, v])


def geodesic_distances(graph: MolecularGraph, within=None) -> DistanceMatrix:
    """BFS hop distances; ``within`` restricts the walk to an induced subgraph."""
    n = graph.n_atoms
    if n == 0:
        raise DataError("cannot compute distances on an empty graph")
    allowed = None if within is None else set(within)
    adj = graph.adjacency()
    hops = np.full((n, n), UNREACHABLE, dtype=np.int32)
    sources = range(n) if allowed is None else sorted(allowed)
    for source in sources:
        row = hops[source]
        row[source] = 0
        frontier = [source]
        dist = 0
        while frontier:
            dist += 1
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if allowed is not None and w not in allowed:
                        continue
                    if row[w] == UNREACHABLE:
                        row[w] = dist
                        nxt.append(w)
            frontier = nxt
    finite = hops[hops != UNREACHABLE]
    return DistanceMatrix(hops, int(finite.max()) if finite.size else 0)


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """Simplices of dimension <= 2 with integer entry scales.

    Vertices enter at 0, edges at the geodesic distance of their endpoints,
    triangles at the max of their three edge scales; the filtration order is
    (scale, dimension, lexicographic vertex tuple).  Stored column-wise as
    arrays; the ``edges``/``triangles`` properties expose plain tuples.
    """
    vertices: tuple[int, ...]
    edge_eps: np.ndarray      # (E,) in filtration order
    edge_pairs: np.ndarray    # (E, 2) global vertex ids, u < v
    tri_eps: np.ndarray       # (T,) in filtration order
    tri_verts: np.ndarray     # (T, 3) global vertex ids, a < b < c
    tri_edge_pos: np.ndarray  # (T, 3) positions of the faces in the edge order
    eps_max: int

    @property
    def edges(self) -> tuple[tuple[int, int, int], ...]:
        return tuple((int(e), int(u), int(v)) for e, (u, v)
                     in zip(self.edge_eps.tolist(), self.edge_pairs.tolist()))

    @property
    def triangles(self) -> tuple[tuple[int, int, int, int], ...]:
        return tuple((int(e), int(a), int(b), int(c)) for e, (a, b, c)
                     in zip(self.tri_eps.tolist(), self.tri_verts.tolist()))

    def counts_at(self, eps: int) -> tuple[int, int, int]:
        return (len(self.vertices),
                int((self.edge_eps <= eps).sum()),
                int((self.tri_eps <= eps).sum()))


def build_vr_row(vertex_set, dist: DistanceMatrix, eps_max: int) -> FilteredComplex:
    """Filtered clique 2-skeleton on a vertex set; unreachable pairs never join."""
    verts = sorted(vertex_set)
    if not verts:
        raise DataError("vertex set must be non-empty")
    n = len(verts)
    vert_array = np.asarray(verts, dtype=np.int64)
    sub = dist.hops[np.ix_(verts, verts)].astype(np.int64)

    if n >= 2:
        iu, ju = np.triu_indices(n, 1)
        d = sub[iu, ju]
        keep = (d != UNREACHABLE) & (d <= eps_max)
        eu, ev, ee = iu[keep], ju[keep], d[keep]
        order = np.lexsort((ev, eu, ee))
        eu, ev, ee = eu[order], ev[order], ee[order]
    else:
        eu = ev = ee = np.empty(0, dtype=np.int64)
    pos = np.full((n, n), -1, dtype=np.int64)
    pos[eu, ev] = np.arange(len(ee))
    edge_pairs = np.stack([vert_array[eu], vert_array[ev]], axis=1) if len(ee) \
        else np.empty((0, 2), dtype=np.int64)

    if n >= 3:
        trio = np.fromiter(combinations(range(n), 3),
                           dtype=np.dtype((np.intp, 3)), count=math.comb(n, 3))
        d01 = sub[trio[:, 0], trio[:, 1]]
        d02 = sub[trio[:, 0], trio[:, 2]]
        d12 = sub[trio[:, 1], trio[:, 2]]
        teps = np.maximum(np.maximum(d01, d02), d12)
        ok = ((d01 != UNREACHABLE) & (d02 != UNREACHABLE) & (d12 != UNREACHABLE)
              & (teps <= eps_max))
        trio, teps = trio[ok], teps[ok]
        torder = np.lexsort((trio[:, 2], trio[:, 1], trio[:, 0], teps))
        trio, teps = trio[torder], teps[torder]
        tri_edge_pos = np.stack([pos[trio[:, 0], trio[:, 1]],
                                 pos[trio[:, 0], trio[:, 2]],
                                 pos[trio[:, 1], trio[:, 2]]], axis=1)
        tri_verts = vert_array[trio]
    else:
        teps = np.empty(0, dtype=np.int64)
        tri_verts = np.empty((0, 3), dtype=np.int64)
        tri_edge_pos = np.empty((0, 3), dtype=np.int64)

    return FilteredComplex(tuple(verts), ee.astype(np.int64), edge_pairs,
                           teps.astype(np.int64), tri_verts, tri_edge_pos,
                           int(eps_max))


@dataclass(frozen=True)
class PersistenceDiagram:
    dim: int
    pairs: tuple[tuple[int, int], ...]  # finite (birth, death), birth < death
    essentials: tuple[int, ...]         # births of never-dying classes
    eps_max: int


class _UnionFind:
    __slots__ = ("parent", "count")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.count = n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        self.count -= 1
        return True


def _validate_faces(cx: FilteredComplex):
    vset = set(cx.vertices)
    edge_eps = {}
    for eps, u, v in cx.edges:
        if u not in vset or v not in vset:
            raise InternalInvariantError(f"edge ({u},{v}) has a missing vertex")
        edge_eps[(u, v)] = eps
    for eps, a, b, c in cx.triangles:
        for face in ((a, b), (a, c), (b, c)):
            face_eps = edge_eps.get(face)
            if face_eps is None:
                raise InternalInvariantError(f"triangle {(a, b, c)} missing edge {face}")
            if face_eps > eps:
                raise InternalInvariantError(
                    f"face {face} enters after triangle {(a, b, c)}")
    if len(cx.tri_edge_pos) and not (
            np.all(cx.tri_edge_pos >= 0)
            and np.all(cx.tri_edge_pos < len(cx.edge_eps))):
        raise InternalInvariantError("triangle face positions out of range")


def reduce_complex(cx: FilteredComplex, validate: bool = True
                   ) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """Persistence pairing over GF(2); returns the (PD_0, PD_1) diagrams.

    Zero-persistence pairs are dropped.  Edges that merge components pair
    vertex births at 0; the remaining edges create cycles, which triangles
    kill in filtration order.
    """
    if validate:
        _validate_faces(cx)
    local = {v: i for i, v in enumerate(cx.vertices)}
    uf = _UnionFind(len(cx.vertices))
    n_edges = len(cx.edge_eps)

    pd0_pairs = []
    births = [-1] * n_edges  # birth scale of still-unpaired cycle creators
    alive = 0
    edge_eps = cx.edge_eps.tolist()
    for pos, (u, v) in enumerate(cx.edge_pairs.tolist()):
        if uf.union(local[u], local[v]):
            pd0_pairs.append((0, edge_eps[pos]))
        else:
            births[pos] = edge_eps[pos]
            alive += 1

    pd1_pairs = []
    if alive:
        lows: list[int | None] = [None] * n_edges
        tri_eps = cx.tri_eps.tolist()
        for t, (p0, p1, p2) in enumerate(cx.tri_edge_pos.tolist()):
            col = (1 << p0) | (1 << p1) | (1 << p2)
            low = p2 if p2 > p1 else p1  # faces share vertices, positions differ
            if p0 > low:
                low = p0
            while True:
                other = lows[low]
                if other is None:
                    break
                col ^= other
                if not col:
                    break
                low = col.bit_length() - 1
            if col:
                lows[low] = col
                birth = births[low]
                if birth < 0:
                    raise InternalInvariantError(
                        "reduction paired a non-creator edge; complex is inconsistent")
                births[low] = -1
                eps = tri_eps[t]
                if birth < eps:
                    pd1_pairs.append((birth, eps))
                alive -= 1
                if not alive:
                    break

    pd0 = PersistenceDiagram(0, tuple(sorted(pd0_pairs)), (0,) * uf.count, cx.eps_max)
    pd1 = PersistenceDiagram(1, tuple(sorted(pd1_pairs)),
                             tuple(sorted(b for b in births if b >= 0)), cx.eps_max)
    return pd0, pd1


def betti_at(pd: PersistenceDiagram, t: int) -> int:
    """Number of classes alive at scale t: finite pairs with b <= t < d plus
    essentials with b <= t."""
    if not 0 <= t <= pd.eps_max:
        raise ValueError(f"scale {t} outside the grid [0, {pd.eps_max}]")
    alive = sum(1 for b, d in pd.pairs if b <= t < d)
    alive += sum(1 for b in pd.essentials if b <= t)
    return alive
