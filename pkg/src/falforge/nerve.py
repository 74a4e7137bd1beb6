"""Oriented closed-surface triangulations, their cubic duals and dimers.

Edges are indexed canonically: each edge is the sorted pair of its
endpoints and the edge list is sorted lexicographically.  A face is an
ordered vertex triple; its orientation is the cyclic order of the triple.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

Face = tuple[int, int, int]
Edge = tuple[int, int]


class NerveError(ValueError):
    """A face list that is not an oriented closed-surface triangulation."""

    def __init__(self, defects: Sequence[str]):
        self.defects = list(defects)
        super().__init__("invalid nerve: " + "; ".join(self.defects))


class DimerError(ValueError):
    pass


def _face_edges(face: Face) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
    a, b, c = face
    return (a, b), (b, c), (c, a)


def _key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Nerve:
    n_vertices: int
    faces: tuple[Face, ...]

    @classmethod
    def from_faces(cls, n_vertices: int, faces: Iterable[Sequence[int]]) -> "Nerve":
        return cls(int(n_vertices), tuple(tuple(int(i) for i in f) for f in faces))

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(sorted({_key(u, v) for f in self.faces for u, v in _face_edges(f)}))

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_faces(self) -> tuple[tuple[int, int], ...]:
        """Per edge (lo, hi): the face traversing lo -> hi, then hi -> lo."""
        directed = {}
        for fi, f in enumerate(self.faces):
            for u, v in _face_edges(f):
                directed[(u, v)] = fi
        return tuple((directed[(lo, hi)], directed[(hi, lo)]) for lo, hi in self.edges)

    @cached_property
    def face_edge_ids(self) -> tuple[tuple[int, int, int], ...]:
        """Edge indices of each face in the order ab, bc, ca."""
        idx = self.edge_index
        return tuple(tuple(idx[_key(u, v)] for u, v in _face_edges(f)) for f in self.faces)

    @cached_property
    def vertex_faces(self) -> tuple[tuple[int, ...], ...]:
        """Faces around each vertex in counter-clockwise cyclic order."""
        # the face containing v -> u -> w is followed by the one containing v -> w
        by_out: dict[tuple[int, int], int] = {}
        for fi, f in enumerate(self.faces):
            for k in range(3):
                by_out[(f[k], f[(k + 1) % 3])] = fi
        start: dict[int, int] = {}
        for fi, f in enumerate(self.faces):
            for v in f:
                start.setdefault(v, fi)
        out = []
        for v in range(self.n_vertices):
            if v not in start:
                out.append(())
                continue
            ring = [start[v]]
            while True:
                f = self.faces[ring[-1]]
                k = f.index(v)
                w = f[(k + 2) % 3]
                nxt = by_out[(v, w)]
                if nxt == ring[0]:
                    break
                ring.append(nxt)
            out.append(tuple(ring))
        return tuple(out)

    def link(self, v: int) -> tuple[int, ...]:
        """Neighbours of v in counter-clockwise order."""
        out = []
        for fi in self.vertex_faces[v]:
            f = self.faces[fi]
            out.append(f[(f.index(v) + 1) % 3])
        return tuple(out)

    def degree(self, v: int) -> int:
        return len(self.vertex_faces[v])

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + len(self.faces)

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    def to_dict(self, dimer: Optional["Dimer"] = None) -> dict:
        out = {"vertices": self.n_vertices, "faces": [list(f) for f in self.faces]}
        if dimer is not None:
            out["dimer"] = list(dimer.edges)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> tuple["Nerve", Optional["Dimer"]]:
        try:
            n = data["vertices"]
            faces = data["faces"]
        except (KeyError, TypeError) as exc:
            raise NerveError([f"missing field {exc}"]) from None
        if not isinstance(n, int) or not all(isinstance(f, list) and len(f) == 3 for f in faces):
            raise NerveError(["vertices must be an integer and faces integer triples"])
        nerve = cls.from_faces(n, faces)
        dimer = Dimer.of(data["dimer"]) if "dimer" in data else None
        return nerve, dimer


@dataclass(frozen=True)
class Dimer:
    edges: tuple[int, ...]

    @classmethod
    def of(cls, edges: Iterable[int]) -> "Dimer":
        return cls(tuple(sorted(set(int(e) for e in edges))))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, e: int) -> bool:
        return e in set(self.edges)


@dataclass(frozen=True)
class NerveReport:
    vertices: int
    edges: int
    faces: int
    genus: int


def _orientable(faces: Sequence[Face], edge_to_faces: dict[Edge, list[int]]) -> bool:
    # propagate a relative sign across edges; a conflict means non-orientable
    sign = [0] * len(faces)
    for root in range(len(faces)):
        if sign[root]:
            continue
        sign[root] = 1
        queue = deque([root])
        while queue:
            fi = queue.popleft()
            for u, v in _face_edges(faces[fi]):
                for gi in edge_to_faces[_key(u, v)]:
                    if gi == fi:
                        continue
                    # neighbours must traverse the shared edge in opposite directions
                    same_dir = (u, v) in set(_face_edges(faces[gi]))
                    want = -sign[fi] if same_dir else sign[fi]
                    if sign[gi] == 0:
                        sign[gi] = want
                        queue.append(gi)
                    elif sign[gi] != want:
                        return False
    return True


def validate_nerve(N: Nerve) -> NerveReport:
    defects: list[str] = []
    faces = N.faces
    if N.n_vertices <= 0 or not faces:
        raise NerveError(["empty complex"])
    for fi, f in enumerate(faces):
        if len(f) != 3:
            defects.append(f"face {fi} is not a triangle")
        elif any(not 0 <= v < N.n_vertices for v in f):
            defects.append(f"face {fi} has a vertex id out of range")
        elif len(set(f)) != 3:
            defects.append(f"face {fi} has a repeated vertex")
    if defects:
        raise NerveError(defects)

    edge_to_faces: dict[Edge, list[int]] = defaultdict(list)
    directed: dict[tuple[int, int], list[int]] = defaultdict(list)
    for fi, f in enumerate(faces):
        for u, v in _face_edges(f):
            edge_to_faces[_key(u, v)].append(fi)
            directed[(u, v)].append(fi)
    for e, fs in sorted(edge_to_faces.items()):
        if len(fs) != 2:
            defects.append(f"non-manifold edge {e} lies in {len(fs)} face(s)")
    if defects:
        raise NerveError(defects)

    bad = sorted(e for e, fs in directed.items() if len(fs) > 1)
    if bad:
        if _orientable(faces, edge_to_faces):
            flagged = sorted({fi for e in bad for fi in directed[e]})
            defects.append(f"inconsistent orientation: edges {bad[:4]} traversed twice in the same "
                           f"direction (faces {flagged[:6]})")
        else:
            defects.append("non-orientable gluing")
        raise NerveError(defects)

    used = {v for f in faces for v in f}
    missing = sorted(set(range(N.n_vertices)) - used)
    if missing:
        defects.append(f"isolated vertices {missing[:6]}")

    adj: dict[int, set[int]] = defaultdict(set)
    for u, v in edge_to_faces:
        adj[u].add(v)
        adj[v].add(u)
    seen = {faces[0][0]}
    queue = deque(seen)
    while queue:
        u = queue.popleft()
        for w in adj[u] - seen:
            seen.add(w)
            queue.append(w)
    if seen != used:
        defects.append("disconnected complex")

    # each vertex link must be one cycle, otherwise the vertex is a pinch point
    for v in sorted(used):
        if len(N.vertex_faces[v]) != len(adj[v]):
            defects.append(f"vertex {v} is singular (link is not a single cycle)")
    if defects:
        raise NerveError(defects)

    chi = N.euler_characteristic
    if chi % 2 or chi > 2:
        raise NerveError([f"Euler characteristic {chi} is not that of a closed oriented surface"])
    return NerveReport(N.n_vertices, len(N.edges), len(faces), (2 - chi) // 2)


def subdivide_with_dimer(N: Nerve) -> tuple[Nerve, Dimer]:
    """Cone each face from a new interior vertex; the old edges form a dimer."""
    V = N.n_vertices
    faces = []
    for fi, (a, b, c) in enumerate(N.faces):
        x = V + fi
        faces.extend([(a, b, x), (b, c, x), (c, a, x)])
    out = Nerve(V + len(N.faces), tuple(faces))
    idx = out.edge_index
    return out, Dimer.of(idx[e] for e in N.edges)


def validate_dimer(N: Nerve, D: Dimer) -> bool:
    E = len(N.edges)
    for e in D.edges:
        if not 0 <= e < E:
            raise DimerError(f"edge index {e} out of range [0, {E})")
    coloured = set(D.edges)
    return all(sum(e in coloured for e in ids) == 1 for ids in N.face_edge_ids)


@dataclass(frozen=True)
class DualGraph:
    """Cubic graph with one node per nerve face and one arc per nerve edge.

    ``rotation[f]`` lists the arcs at node f counter-clockwise, matching the
    face's edge order ab, bc, ca.  ``ends[e]`` are the two nodes of arc e.
    """

    rotation: tuple[tuple[int, int, int], ...]
    ends: tuple[tuple[int, int], ...]
    matching: Optional[frozenset[int]] = None

    @property
    def n_nodes(self) -> int:
        return len(self.rotation)

    def matched_arc(self, node: int) -> int:
        if self.matching is None:
            raise DimerError("dual graph carries no matching")
        (arc,) = [e for e in self.rotation[node] if e in self.matching]
        return arc

    def other_end(self, arc: int, node: int) -> int:
        a, b = self.ends[arc]
        return b if a == node else a

    def is_perfect_matching(self) -> bool:
        if self.matching is None:
            return False
        return all(sum(e in self.matching for e in rot) == 1 for rot in self.rotation)

    def face_cycles(self) -> list[tuple[int, ...]]:
        """Boundary cycles of the embedding, as node sequences.

        Arriving at a node along an arc, leave along the arc that follows it
        in the rotation; each cycle encircles one nerve vertex.
        """
        seen: set[tuple[int, int]] = set()
        cycles = []
        for n0 in range(self.n_nodes):
            for e0 in self.rotation[n0]:
                if (n0, e0) in seen:
                    continue
                node, arc, cyc = n0, e0, []
                while (node, arc) not in seen:
                    seen.add((node, arc))
                    cyc.append(node)
                    nxt = self.other_end(arc, node)
                    rot = self.rotation[nxt]
                    # the arc at nxt that follows the one we came in on
                    node, arc = nxt, rot[(rot.index(arc) + 1) % 3]
                cycles.append(tuple(cyc))
        return cycles


def dual_with_matching(N: Nerve, D: Optional[Dimer] = None) -> DualGraph:
    validate_nerve(N)
    matching = None
    if D is not None:
        if not validate_dimer(N, D):
            raise DimerError("colouring is not a dimer")
        matching = frozenset(D.edges)
    return DualGraph(N.face_edge_ids, N.edge_faces, matching)


# -- example nerves ----------------------------------------------------------

def tetrahedron() -> Nerve:
    return Nerve.from_faces(4, [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])


def octahedron() -> Nerve:
    # poles 0 and 5 over the square 1-2-3-4
    faces = []
    for k in range(4):
        a, b = 1 + k, 1 + (k + 1) % 4
        faces.append((0, a, b))
        faces.append((5, b, a))
    return Nerve.from_faces(6, faces)


def torus7() -> Nerve:
    """The 7-vertex triangulation of the torus (every vertex has degree 6)."""
    faces = []
    for i in range(7):
        faces.append((i, (i + 1) % 7, (i + 3) % 7))
        faces.append((i, (i + 3) % 7, (i + 2) % 7))
    return Nerve.from_faces(7, faces)


def connected_sum(A: Nerve, B: Nerve, face_a: int = 0, face_b: int = 0) -> Nerve:
    """Remove a face from each and glue along the boundary triangles."""
    a0, a1, a2 = A.faces[face_a]
    b0, b1, b2 = B.faces[face_b]
    # B's removed triangle is glued reversed so orientations agree
    ident = {b0: a0, b1: a2, b2: a1}
    relabel = {}
    nxt = A.n_vertices
    for v in range(B.n_vertices):
        if v in ident:
            relabel[v] = ident[v]
        else:
            relabel[v] = nxt
            nxt += 1
    faces = [f for i, f in enumerate(A.faces) if i != face_a]
    faces += [tuple(relabel[v] for v in f) for i, f in enumerate(B.faces) if i != face_b]
    return Nerve.from_faces(nxt, faces)


def genus2() -> Nerve:
    """Connected sum of two 7-vertex tori: V=11, E=39, F=26."""
    T = torus7()
    return connected_sum(T, T)


def vertex_split(N: Nerve, v: int, i: int, j: int) -> Nerve:
    """Split v along the link vertices at positions i != j of its ring.

    v keeps the faces between link positions i and j (counter-clockwise),
    a new vertex takes the rest, and two triangles fill the gap.
    """
    ring = N.vertex_faces[v]
    nbrs = N.link(v)
    d = len(ring)
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise ValueError("split positions must be distinct link positions")
    w = N.n_vertices
    moved = set()
    k = j
    while k != i:
        moved.add(ring[k])
        k = (k + 1) % d
    faces = []
    for fi, f in enumerate(N.faces):
        faces.append(tuple(w if (x == v and fi in moved) else x for x in f))
    ui, uj = nbrs[i], nbrs[j]
    faces.append((w, ui, v))
    faces.append((v, uj, w))
    return Nerve.from_faces(w + 1, faces)


def random_nerve(rng: np.random.Generator, splits: int, base: Optional[Nerve] = None) -> Nerve:
    """Grow a nerve by random vertex splits (the surface type is preserved)."""
    N = base if base is not None else tetrahedron()
    for _ in range(splits):
        v = int(rng.integers(N.n_vertices))
        d = N.degree(v)
        i = int(rng.integers(d))
        # keep at least 2 faces on each side so degrees stay >= 3 everywhere
        j = (i + 2 + int(rng.integers(max(d - 3, 1)))) % d
        N = vertex_split(N, v, i, j)
    return N
