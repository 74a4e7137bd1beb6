"""Boundary complex of the region left after scooping out packing and dual half-spaces.

White faces correspond to packing circles, black faces to dual circles,
and ideal vertices to tangency points (one per nerve edge).  At an ideal
vertex the two white and two black circles all pass through the tangency
point; sending it to infinity turns them into two pairs of parallel lines
meeting at right angles, whose separations give the cusp rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    GeneralizedCircle,
    MobiusMap,
    Point,
    bilinear,
    mobius_apply,
    normalize_to_infinity,
)
from .nerve import Dimer, Nerve, validate_dimer
from .packing import Layout
from .svg import Canvas

AUDIT_TOL = 1e-8


class AuditError(RuntimeError):
    """A structural or geometric check failed at a named cell."""

    def __init__(self, cell: str, detail: str):
        super().__init__(f"{cell}: {detail}")
        self.cell = cell
        self.detail = detail


@dataclass(frozen=True)
class IdealVertex:
    edge: int
    point: Point
    chart: int
    # cyclic order around the point: white lo, black f, white hi, black g
    faces: tuple[tuple[str, int], tuple[str, int], tuple[str, int], tuple[str, int]]
    circles: tuple[GeneralizedCircle, GeneralizedCircle, GeneralizedCircle, GeneralizedCircle]


@dataclass(frozen=True)
class ScoopComplex:
    nerve: Nerve
    white_faces: tuple[tuple[int, ...], ...]
    black_faces: tuple[tuple[int, int, int], ...]
    ideal_vertices: tuple[IdealVertex, ...]
    boundary_edges: tuple[tuple[int, int, int, int], ...]
    black_pairs: tuple[tuple[int, int], ...]
    chart_maps: tuple[MobiusMap, ...]
    side_pairings: tuple[MobiusMap, ...]
    global_circles: tuple[GeneralizedCircle, ...]
    global_duals: tuple[GeneralizedCircle, ...]

    @property
    def counts(self) -> dict[str, int]:
        return {
            "white_faces": len(self.white_faces),
            "black_faces": len(self.black_faces),
            "ideal_vertices": len(self.ideal_vertices),
            "boundary_edges": len(self.boundary_edges),
            "black_pairs": len(self.black_pairs),
        }

    def partner(self, black: int) -> int:
        for f, g in self.black_pairs:
            if f == black:
                return g
            if g == black:
                return f
        raise KeyError(black)


@dataclass(frozen=True)
class RectangleShape:
    """Cusp rectangle at one ideal vertex, scaled so the shorter side is 1."""

    w: float
    b: float
    m: float
    height: float
    angle_error: float

    def to_dict(self) -> dict:
        return {"w": self.w, "b": self.b, "m": self.m}


def build_scoop(N: Nerve, D: Dimer, Lyt: Layout, tol: float = AUDIT_TOL) -> ScoopComplex:
    if Lyt.nerve != N:
        raise AuditError("layout", "layout was developed for a different nerve")
    if not validate_dimer(N, D):
        raise AuditError("dimer", "colouring is not a dimer (some face has != 1 coloured edge)")

    white = []
    for v in range(N.n_vertices):
        white.append(tuple(N.edge_index[tuple(sorted((v, u)))] for u in N.link(v)))
    black = N.face_edge_ids

    ideal = []
    for e, (lo, hi) in enumerate(N.edges):
        f, g = N.edge_faces[e]
        Wlo, Whi = Lyt.circle(lo, f), Lyt.circle(hi, f)
        Bf = Lyt.dual_circles[f]
        Bg = mobius_apply(Lyt.transitions[e], Lyt.dual_circles[g])
        cell = f"ideal vertex {e} (edge {lo}-{hi})"
        checks = {
            "white tangency": abs(bilinear(Wlo, Whi) + 1.0),
            "black tangency": abs(abs(bilinear(Bf, Bg)) - 1.0),
            "white/black orthogonality": max(abs(bilinear(W, B)) for W in (Wlo, Whi) for B in (Bf, Bg)),
        }
        for name, err in checks.items():
            if err > tol:
                raise AuditError(cell, f"{name} residual {err:.3e} exceeds {tol:.1e}")
        faces = (("white", lo), ("black", f), ("white", hi), ("black", g))
        ideal.append(IdealVertex(e, Lyt.tangency[e], f, faces, (Wlo, Whi, Bf, Bg)))

    # each white/black incidence is one boundary edge joining two ideal vertices
    bedges = []
    for fi, face in enumerate(N.faces):
        ids = N.face_edge_ids[fi]
        for k, v in enumerate(face):
            # edges of face at v: the one before (ca) and the one after (ab)
            bedges.append((v, fi, ids[(k + 2) % 3], ids[k]))

    pairs = []
    coloured = set(D.edges)
    for e in sorted(coloured):
        f, g = N.edge_faces[e]
        pairs.append((min(f, g), max(f, g)))

    S = ScoopComplex(N, tuple(white), tuple(black), tuple(ideal), tuple(bedges), tuple(sorted(pairs)),
                     Lyt.chart_maps, tuple(P for _, P in Lyt.holonomy.side_pairings),
                     tuple(Lyt.vertex_circles), tuple(Lyt.global_dual(f) for f in range(len(N.faces))))
    _structural_audit(S)
    return S


def _structural_audit(S: ScoopComplex) -> None:
    N = S.nerve
    if len(S.white_faces) != N.n_vertices:
        raise AuditError("complex", "white face count differs from vertex count")
    if len(S.black_faces) != len(N.faces):
        raise AuditError("complex", "black face count differs from face count")
    if len(S.ideal_vertices) != len(N.edges):
        raise AuditError("complex", "ideal vertex count differs from edge count")
    for iv in S.ideal_vertices:
        colours = [c for c, _ in iv.faces]
        if colours != ["white", "black", "white", "black"]:
            raise AuditError(f"ideal vertex {iv.edge}", "incident faces do not alternate in colour")
        if len({x for x in iv.faces}) != 4:
            raise AuditError(f"ideal vertex {iv.edge}", "incident faces are not distinct")
    valence = [0] * len(S.ideal_vertices)
    for v, f, e1, e2 in S.boundary_edges:
        ids = N.face_edge_ids[f]
        cell = f"boundary edge (white {v}, black {f})"
        if e1 == e2 or e1 not in ids or e2 not in ids:
            raise AuditError(cell, "does not join two ideal vertices of its black face")
        if any(v not in N.edges[e] for e in (e1, e2)):
            raise AuditError(cell, "does not join two ideal vertices of its white face")
        valence[e1] += 1
        valence[e2] += 1
    for e, k in enumerate(valence):
        if k != 4:
            raise AuditError(f"ideal vertex {e}", f"meets {k} boundary edges instead of 4")
    seen: dict[int, int] = {}
    for f, g in S.black_pairs:
        for x in (f, g):
            if x in seen:
                raise AuditError(f"black face {x}", "paired more than once")
            seen[x] = 1
        if f == g:
            raise AuditError(f"black face {f}", "paired with itself")
    if len(seen) != len(S.black_faces):
        missing = sorted(set(range(len(S.black_faces))) - set(seen))
        raise AuditError(f"black face {missing[0]}", "not paired by the dimer")


def rectangle_shape(S: ScoopComplex, v: int, tol: float = AUDIT_TOL) -> RectangleShape:
    """Rectangle cut from the cusp at ideal vertex v by its four faces."""
    iv = S.ideal_vertices[v]
    if iv.point.infinite:
        phi = MobiusMap.identity()
    else:
        phi = normalize_to_infinity(iv.point)
    Wlo, Whi, Bf, Bg = (mobius_apply(phi, C) for C in iv.circles)
    cell = f"ideal vertex {v}"
    for name, C in (("white", Wlo), ("white", Whi), ("black", Bf), ("black", Bg)):
        if abs(C.a) > tol * max(1.0, abs(C.b), abs(C.c)):
            raise AuditError(cell, f"{name} circle does not pass through the ideal point")
    # a normalized line is Re(conj(b) z) = -c / 2 with |b| = 1
    nw1, cw1, nw2, cw2 = Wlo.b, Wlo.c, Whi.b, Whi.c
    nb1, cb1, nb2, cb2 = Bf.b, Bf.c, Bg.b, Bg.c
    parallel_w = abs((nw1 * nw2.conjugate()).imag)
    parallel_b = abs((nb1 * nb2.conjugate()).imag)
    angle = abs(math.asin(max(-1.0, min(1.0, (nw1 * nb1.conjugate()).real))))
    if parallel_w > tol or parallel_b > tol:
        raise AuditError(cell, f"image lines are not parallel (residuals {parallel_w:.3e}, {parallel_b:.3e})")
    if angle > tol:
        raise AuditError(cell, f"white and black lines are not orthogonal (angle error {angle:.3e})")

    def separation(n1, c1, n2, c2):
        s = 1.0 if (n1 * n2.conjugate()).real > 0 else -1.0
        return abs(c1 - s * c2) / 2.0

    b = separation(nw1, cw1, nw2, cw2)  # across the white lines: a black side
    w = separation(nb1, cb1, nb2, cb2)  # across the black lines: a white side
    if not (b > 0 and w > 0):
        raise AuditError(cell, "degenerate rectangle")
    h = min(w, b)
    return RectangleShape(w / h, b / h, w / b, h, angle)


# -- finite volume certificate ---------------------------------------------------
#
# Horoballs and circles are handled as Hermitian 2x2 matrices in the
# coordinates (x0, x1, x2, x3) <-> [[x0, x1 + i x2], [x1 - i x2, x3]], with
# the determinant's polarization as inner product.  The horoball at p of
# Euclidean diameter 1/h is h * H_p with H_p = 2 (p, 1)(p, 1)^H, and two
# horoballs are disjoint iff their pairing is at least 2.

def _pair(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return 0.5 * (A[..., 0] * B[..., 3] + A[..., 3] * B[..., 0]) - A[..., 1] * B[..., 1] - A[..., 2] * B[..., 2]


def _horo_vec(p: complex) -> np.ndarray:
    return np.array([2 * abs(p) ** 2, 2 * p.real, 2 * p.imag, 2.0])


def _circle_vec(C: GeneralizedCircle) -> np.ndarray:
    return np.array([C.c, -C.b.real, -C.b.imag, C.a])


def _act(M: MobiusMap, X: np.ndarray) -> np.ndarray:
    A = M.array()
    H = np.array([[X[0], X[1] + 1j * X[2]], [X[1] - 1j * X[2], X[3]]])
    Y = A @ H @ A.conj().T
    return np.array([Y[0, 0].real, Y[0, 1].real, Y[0, 1].imag, Y[1, 1].real])


@dataclass(frozen=True)
class FiniteVolumeReport:
    counts: dict
    height: float
    minimal_height: float
    moduli: tuple[float, ...]
    rectangles: tuple[RectangleShape, ...]

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "height": self.height,
            "minimal_height": self.minimal_height,
            "moduli": list(self.moduli),
        }


def _deck_neighbourhood(pairings: tuple[MobiusMap, ...], tol: float = 1e-8) -> list[MobiusMap]:
    """Distinct nontrivial side pairings, their inverses, and products of two of them."""
    out: list[MobiusMap] = []

    def add(M: MobiusMap) -> None:
        if M.distance_from_identity() < tol:
            return
        if any((M @ K.inverse()).distance_from_identity() < tol for K in out):
            return
        out.append(M)

    for P in pairings:
        add(P)
        add(P.inverse())
    first = list(out)
    for A in first:
        for B in first:
            add(A @ B)
    return out


def _unit(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X)


def finite_volume_audit(S: ScoopComplex, max_doublings: int = 200, tol: float = AUDIT_TOL) -> FiniteVolumeReport:
    """Finiteness certificate for the scooped region.

    Every ideal vertex must carry a valid rectangle, and there must be a
    common height h at which the horoballs of Euclidean diameter 1/h at the
    ideal points are pairwise disjoint and meet no face other than their
    four incident ones.  Translates by the side pairings and their inverses
    are included so that neighbouring fundamental domains are checked too.
    """
    _structural_audit(S)
    rects = tuple(rectangle_shape(S, v, tol) for v in range(len(S.ideal_vertices)))

    horos, incident = [], []
    for iv in S.ideal_vertices:
        M = S.chart_maps[iv.chart]
        p = M(iv.point)
        if p.infinite:
            raise AuditError(f"ideal vertex {iv.edge}", "ideal point at infinity in the global picture")
        horos.append(_horo_vec(p.z))
        incident.append([_unit(_circle_vec(mobius_apply(M, C))) for C in iv.circles])
    horos = np.array(horos)
    faces = np.array([_circle_vec(C) for C in S.global_circles + S.global_duals])

    maps = [MobiusMap.identity()] + _deck_neighbourhood(S.side_pairings)
    all_h = np.concatenate([horos] + [np.array([_act(M, X) for X in horos]) for M in maps[1:]])
    all_c = np.concatenate([faces] + [np.array([_act(M, X) for X in faces]) for M in maps[1:]])
    unit_c = np.array([_unit(X) for X in all_c])

    # pairings scale as h^2 between horoballs and as h between a horoball and a face
    need = 0.0
    for i, Hi in enumerate(horos):
        cell = f"ideal vertex {S.ideal_vertices[i].edge}"
        q = np.delete(_pair(Hi[None, :], all_h), i)
        if np.any(q <= 1e-14 * np.max(np.abs(all_h))):
            raise AuditError(cell, "coincides with another ideal vertex; no horoball height separates them")
        need = max(need, float(np.max(np.sqrt(2.0 / q))))
        skip = np.zeros(len(all_c), dtype=bool)
        for X in incident[i]:
            # same locus regardless of orientation
            skip |= np.minimum(np.linalg.norm(unit_c - X, axis=1), np.linalg.norm(unit_c + X, axis=1)) < 1e-6
        q = np.abs(_pair(Hi[None, :], all_c[~skip]))
        if q.size:
            if np.any(q <= 1e-14 * np.max(np.abs(all_c))):
                raise AuditError(cell, "lies on a face it is not incident to")
            need = max(need, float(np.max(1.0 / q)))

    h = 1.0
    for _ in range(max_doublings):
        if h > need:
            break
        h *= 2.0
    else:
        raise AuditError("complex", "no admissible horoball height within the search range")
    return FiniteVolumeReport(S.counts, h, need, tuple(r.m for r in rects), rects)


def scoop_to_dict(S: ScoopComplex, report: Optional[FiniteVolumeReport] = None) -> dict:
    out = {
        "counts": S.counts,
        "white_faces": [list(w) for w in S.white_faces],
        "black_faces": [list(b) for b in S.black_faces],
        "ideal_vertices": [
            {
                "edge": iv.edge,
                "point": None if iv.point.infinite else [iv.point.z.real, iv.point.z.imag],
                "faces": [[c, i] for c, i in iv.faces],
            }
            for iv in S.ideal_vertices
        ],
        "black_pairs": [list(p) for p in S.black_pairs],
    }
    if report is not None:
        out["moduli"] = list(report.moduli)
        out["horoball_height"] = report.height
    return out


def render_packing_svg(Lyt: Layout, title: Optional[str] = None) -> str:
    """Packing circles solid and dual circles dashed, in the global picture."""
    canvas = Canvas()
    seen = set()
    N = Lyt.nerve
    for f, trip in enumerate(Lyt.face_circles):
        M = Lyt.chart_maps[f]
        for C in trip:
            G = mobius_apply(M, C)
            key = tuple(round(x, 9) for x in G.vector())
            if key in seen:
                continue
            seen.add(key)
            if G.a < 0:
                # the outer circle of a genus-0 picture
                canvas.circle(G.center, G.radius, "white")
            else:
                canvas.gcircle(G, "white")
    for f in range(len(N.faces)):
        canvas.gcircle(Lyt.global_dual(f), "dual", dashed=True)
    return canvas.render(title)
