"""Circle packing labels, the angle-sum solver, and layout development.

Three background geometries are supported, selected by genus:

* ``euclidean`` (torus): radii are Euclidean, normalized to total area 1.
* ``hyperbolic`` (genus >= 2): radii are hyperbolic, developed in the
  Poincare disk.
* ``sphere`` (genus 0): one outer vertex is removed, the remaining disk is
  packed hyperbolically with the outer vertex's neighbours as horocycles,
  and the result is read back as a Euclidean configuration inside the
  unit disk whose complement is the outer circle.  The stored radii are the
  Euclidean radii of that configuration; the outer radius is 1.

The solver runs simultaneous uniform-neighbour sweeps to get close and
then polishes with Newton's method on log-radii.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    GeneralizedCircle,
    MobiusMap,
    Point,
    UNIT_CIRCLE,
    GeometryError,
    bilinear,
    centering_map,
    circle_lorentz_vector,
    disk_isometry_between,
    dual_circle,
    hyperbolic_center_radius,
    hyperbolic_distance,
    mobius_apply,
    similarity,
    spherical_distance,
    spherical_radius,
    tangency_point,
)
from .nerve import Nerve, validate_nerve

TWO_PI = 2.0 * math.pi
GEOMETRIES = ("euclidean", "hyperbolic", "sphere")
_ALIASES = {"spherical": "sphere", "spherical-via-euclidean": "sphere", "torus": "euclidean"}


class PackingError(RuntimeError):
    pass


class GeometryMismatchError(PackingError, ValueError):
    pass


class NonConvergenceError(PackingError):
    def __init__(self, message: str, trace: Sequence[float]):
        super().__init__(message)
        self.trace = list(trace)


class HolonomyError(PackingError):
    def __init__(self, message: str, report: "HolonomyReport"):
        super().__init__(message)
        self.report = report


def geometry_for_genus(genus: int) -> str:
    return "sphere" if genus == 0 else "euclidean" if genus == 1 else "hyperbolic"


def canonical_geometry(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in GEOMETRIES:
        raise GeometryMismatchError(f"unknown geometry {name!r}")
    return name


@dataclass(frozen=True)
class PackingLabel:
    geometry: str
    radii: tuple[float, ...]
    outer: Optional[int] = None

    def __post_init__(self):
        if not all(r > 0 and math.isfinite(r) for r in self.radii):
            raise PackingError("radii must be positive and finite")

    def to_dict(self) -> dict:
        out = {"geometry": self.geometry, "radii": list(self.radii)}
        if self.outer is not None:
            out["outer"] = self.outer
        return out


# -- angle sums ---------------------------------------------------------------

def _corner(one_minus_cos: float, one_plus_cos: float) -> float:
    return 2.0 * math.atan2(math.sqrt(max(one_minus_cos, 0.0)), math.sqrt(max(one_plus_cos, 0.0)))


def _euclid_corner(a: float, b: float, c: float) -> float:
    """Angle between sides a and b opposite side c (sides may be signed).

    Law of cosines, with 1 -/+ cos factored so angles near 0 or pi keep
    full precision.
    """
    ab2 = 2.0 * a * b
    return _corner((c - a + b) * (c + a - b) / ab2, (a + b - c) * (a + b + c) / ab2)


def _hyper_corner(a: float, b: float, c: float) -> float:
    """Hyperbolic law of cosines in the same factored form."""
    ss = math.sinh(a) * math.sinh(b)
    one_minus = 2.0 * math.sinh((c + a - b) / 2) * math.sinh((c - a + b) / 2) / ss
    one_plus = 2.0 * math.sinh((a + b + c) / 2) * math.sinh((a + b - c) / 2) / ss
    return _corner(one_minus, one_plus)


def angle_sum(N: Nerve, L: PackingLabel, v: int) -> float:
    """Sum of the angles at v of the triangles of centers (law of cosines).

    Deliberately independent of the solver's vectorized formulas.
    """
    if not 0 <= v < N.n_vertices or not N.vertex_faces[v]:
        raise ValueError(f"vertex {v} is not a vertex of the nerve")
    r = L.radii

    def signed(i: int) -> float:
        return -r[i] if i == L.outer else r[i]

    total = 0.0
    for fi in N.vertex_faces[v]:
        f = N.faces[fi]
        k = f.index(v)
        u, w = f[(k + 1) % 3], f[(k + 2) % 3]
        if L.geometry == "hyperbolic":
            total += _hyper_corner(r[v] + r[u], r[v] + r[w], r[u] + r[w])
        else:
            # signed sides: internal tangency with the outer circle flips the corner
            a = signed(v) + signed(u)
            b = signed(v) + signed(w)
            c = signed(u) + signed(w)
            total += _euclid_corner(a, b, c)
    return total


def max_residual(N: Nerve, L: PackingLabel) -> float:
    return max(abs(angle_sum(N, L, v) - TWO_PI) for v in range(N.n_vertices))


# -- vectorized solver kernels ------------------------------------------------
#
# Hyperbolic radii are handled through x = exp(-2 r); a horocycle has x = 0.

def _corner_angles(geometry: str, R: np.ndarray, S: Optional[np.ndarray] = None) -> np.ndarray:
    """Angles at the three corners of each face, shape (F, 3).

    Euclidean: R holds per-corner (signed) radii.  Hyperbolic: R holds
    x = exp(-2 r) and S holds 1 - x.  Inputs may be complex (complex-step
    differentiation).  The half-angle tangent form stays accurate for
    angles close to 0 and to pi.
    """
    out = []
    for k in range(3):
        i, j, l = k, (k + 1) % 3, (k + 2) % 3
        if geometry == "euclidean":
            v, u, w = R[:, i], R[:, j], R[:, l]
            t2 = u * w / (v * (v + u + w))
        else:
            xv, xu, xw = R[:, i], R[:, j], R[:, l]
            t2 = xv * S[:, j] * S[:, l] / (S[:, i] * (1 - xv * xu * xw))
        out.append(2.0 * np.arctan(np.sqrt(t2)))
    return np.stack(out, axis=1)


class _System:
    """Angle-sum equations over a face subset with some vertices fixed."""

    def __init__(self, geometry: str, faces: np.ndarray, n: int, free: np.ndarray, horocycle: np.ndarray,
                 outer: Optional[int] = None):
        self.geometry = geometry
        self.faces = faces
        self.n = n
        self.free = free
        self.horo = horocycle
        self.free_idx = np.flatnonzero(free)
        self.eq_idx = self.free_idx if outer is None else np.arange(n)
        self.outer = np.zeros(n, bool)
        if outer is not None:
            self.outer[outer] = True
        self.degree = np.bincount(faces.ravel(), minlength=n)

    def _angles(self, logr, horo, outer):
        r = np.exp(logr)
        if self.geometry == "euclidean":
            # the outer circle of a disk configuration carries signed radius -1
            return _corner_angles("euclidean", np.where(outer, -1.0, r))
        x = np.where(horo, 0.0, np.exp(-2.0 * r))
        y = np.where(horo, 1.0, -np.expm1(-2.0 * r))
        return _corner_angles("hyperbolic", x, y)

    def sums(self, logr: np.ndarray) -> np.ndarray:
        F = self.faces
        ang = self._angles(logr[F], self.horo[F], self.outer[F]).real
        return np.bincount(F.ravel(), weights=ang.ravel(), minlength=self.n)

    def residual(self, logr: np.ndarray) -> np.ndarray:
        return (self.sums(logr) - TWO_PI)[self.eq_idx]

    def jacobian(self, logr: np.ndarray) -> np.ndarray:
        h = 1e-30
        F = self.faces
        base = logr[F].astype(complex)
        J = np.zeros((self.n, self.n))
        for j in range(3):
            pert = base.copy()
            pert[:, j] += 1j * h
            d = self._angles(pert, self.horo[F], self.outer[F]).imag / h
            for k in range(3):
                np.add.at(J, (F[:, k], F[:, j]), d[:, k])
        return J[np.ix_(self.eq_idx, self.free_idx)]

    def sweep(self, logr: np.ndarray) -> np.ndarray:
        """One simultaneous uniform-neighbour update of every free vertex."""
        theta = self.sums(logr)
        k = np.maximum(self.degree, 1)
        beta = np.sin(theta / (2 * k))
        delta = np.sin(math.pi / k)
        r = np.exp(logr)
        if self.geometry == "euclidean":
            rho = r * beta / (1 - beta)
            new = rho * (1 - delta) / delta
        else:
            x = np.exp(-2.0 * r)
            t = np.sqrt(x)
            xn = np.clip((t - beta) / (t - beta * x), 0.0, 1.0 - 1e-16)
            tn = 2 * delta / ((1 - xn) + np.sqrt((1 - xn) ** 2 + 4 * delta * delta * xn))
            new = -np.log(np.clip(tn, 1e-300, 1 - 1e-16))
        out = logr.copy()
        out[self.free] = np.log(new[self.free])
        return out


def _solve_system(sys_: _System, logr: np.ndarray, tol: float, max_iters: int,
                  sweeps: bool = True) -> tuple[np.ndarray, list[float]]:
    trace: list[float] = []
    if sys_.free_idx.size == 0:
        return logr, trace
    res = float(np.max(np.abs(sys_.residual(logr))))
    trace.append(res)
    it = 0
    while sweeps and res > 1e-3 and it < max_iters:
        logr = sys_.sweep(logr)
        if sys_.geometry == "euclidean" and not sys_.outer.any():
            # torus radii are scale-free; keep them centred in log space
            logr = logr - logr.mean()
        res = float(np.max(np.abs(sys_.residual(logr))))
        it += 1
        if it % 50 == 0:
            trace.append(res)
    target = min(tol, 1e-12) * 1e-2
    stall = 0
    while res > target and it < max_iters:
        F = sys_.residual(logr)
        J = sys_.jacobian(logr)
        # truncate the directions of the solution family (torus scale,
        # disk automorphisms); they carry no angle-sum information
        step = np.linalg.lstsq(J, -F, rcond=1e-10)[0]
        norm0 = float(np.linalg.norm(F))
        t = 1.0
        while True:
            trial = logr.copy()
            trial[sys_.free_idx] += t * step
            Ft = sys_.residual(trial)
            if np.all(np.isfinite(Ft)) and np.linalg.norm(Ft) < norm0:
                break
            t *= 0.5
            if t < 1e-10:
                trial = None
                break
        it += 1
        if trial is None:
            break
        new_res = float(np.max(np.abs(Ft)))
        logr = trial
        stall = stall + 1 if new_res > 0.5 * res else 0
        res = new_res
        trace.append(res)
        if stall >= 3 and res <= tol:
            break
    return logr, trace


def _check_geometry(N: Nerve, geometry: Optional[str]) -> tuple[int, str]:
    genus = validate_nerve(N).genus
    expected = geometry_for_genus(genus)
    if geometry is None:
        return genus, expected
    geometry = canonical_geometry(geometry)
    if geometry != expected:
        raise GeometryMismatchError(f"geometry {geometry!r} is incompatible with genus {genus} "
                                    f"(expected {expected!r})")
    return genus, geometry


def outer_vertex(N: Nerve) -> int:
    """Vertex removed for genus-0 packing: maximum degree, lowest index."""
    deg = [N.degree(v) for v in range(N.n_vertices)]
    return int(np.argmax(deg))


def torus_area(N: Nerve, radii: Sequence[float]) -> float:
    r = radii
    return sum(math.sqrt((r[a] + r[b] + r[c]) * r[a] * r[b] * r[c]) for a, b, c in N.faces)


def solve_packing_label(N: Nerve, geometry: Optional[str] = None, tol: float = 1e-10,
                        max_iters: int = 1_000_000,
                        initial: Optional[Sequence[float]] = None) -> PackingLabel:
    """Radii whose angle sums are 2*pi at every vertex.

    ``initial`` optionally seeds the radii (Euclidean or hyperbolic, by
    genus; ignored entries for fixed vertices).  Deterministic.
    """
    genus, geometry = _check_geometry(N, geometry)
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = N.n_vertices
    start = np.zeros(n) if initial is None else np.log(np.asarray(initial, dtype=float))
    if geometry == "euclidean":
        faces = np.array(N.faces)
        sys_ = _System("euclidean", faces, n, np.ones(n, bool), np.zeros(n, bool))
        logr, trace = _solve_system(sys_, start - start.mean(), tol, max_iters)
        r = np.exp(logr)
        r = r / math.sqrt(torus_area(N, r))
        label = PackingLabel("euclidean", tuple(float(x) for x in r))
        res = max_residual(N, label)
    elif geometry == "hyperbolic":
        faces = np.array(N.faces)
        sys_ = _System("hyperbolic", faces, n, np.ones(n, bool), np.zeros(n, bool))
        logr, trace = _solve_system(sys_, start, tol, max_iters)
        label = PackingLabel("hyperbolic", tuple(float(x) for x in np.exp(logr)))
        res = max_residual(N, label)
    else:
        label, trace = _solve_sphere(N, tol, max_iters, start)
        res = max_residual(N, label)
    if not res < tol:
        raise NonConvergenceError(f"angle-sum residual {res:.3e} above tolerance {tol:.1e}", trace + [res])
    return label


def _solve_sphere(N: Nerve, tol: float, max_iters: int, start: np.ndarray):
    n = N.n_vertices
    o = outer_vertex(N)
    horo = np.zeros(n, bool)
    horo[list(N.link(o))] = True
    free = ~horo
    free[o] = False
    faces = np.array([f for f in N.faces if o not in f])
    sys_ = _System("hyperbolic", faces, n, free, horo)
    logr, trace = _solve_system(sys_, start, tol, max_iters)
    hyp = np.exp(logr)
    disk = _develop_single_chart(N, [fi for fi, f in enumerate(N.faces) if o not in f],
                                 lambda v: _hyperbolic_constraint(math.inf if horo[v] else hyp[v]),
                                 first=None)
    circles = [disk[v] for v in range(n) if v != o]
    A = centering_map(circles + [UNIT_CIRCLE.flipped()], preserve=UNIT_CIRCLE)
    radii = np.ones(n)
    for v in range(n):
        if v != o:
            radii[v] = mobius_apply(A, disk[v]).radius
    # polish the Euclidean radii of the disk picture directly; development
    # round-off would otherwise leak into the re-verified angle sums
    free = np.ones(n, bool)
    free[o] = False
    euc = _System("euclidean", np.array(N.faces), n, free, np.zeros(n, bool), outer=o)
    logr, polish = _solve_system(euc, np.log(radii), tol, max_iters, sweeps=False)
    radii = np.exp(logr)
    radii[o] = 1.0
    return PackingLabel("sphere", tuple(float(x) for x in radii), outer=o), trace + polish


# -- placement ------------------------------------------------------------------
#
# A circle is solved for from three linear constraints in the real 4-vector
# X = (a, Re b, Im b, c) plus the quadratic normalization <X, X> = 1.

def _row(Y: np.ndarray) -> np.ndarray:
    # <X, Y> = X_bx Y_bx + X_by Y_by - (X_a Y_c + X_c Y_a) / 2
    return np.array([-0.5 * Y[3], Y[1], Y[2], -0.5 * Y[0]])


def _form(X: np.ndarray, Y: np.ndarray) -> float:
    return float(_row(Y) @ X)


def _euclid_constraint(r: float) -> tuple[np.ndarray, float]:
    return np.array([0.0, 0.0, 0.0, -2.0]), 1.0 / r


def _hyperbolic_constraint(rho: float) -> tuple[np.ndarray, float]:
    # <X, unit circle> = coth(rho) for a circle of hyperbolic radius rho
    return UNIT_CIRCLE.vector(), 1.0 if math.isinf(rho) else 1.0 / math.tanh(rho)


def _candidates(rows: list[np.ndarray], rhs: list[float]) -> list[GeneralizedCircle]:
    A = np.array(rows)
    b = np.array(rhs, dtype=float)
    scale = np.linalg.norm(A, axis=1)
    A, b = A / scale[:, None], b / scale
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    # coefficient magnitudes span many decades; refine the particular solution
    for _ in range(2):
        x0 = x0 + np.linalg.lstsq(A, b - A @ x0, rcond=None)[0]
    null = np.linalg.svd(A)[2][-1]
    qa = _form(null, null)
    qb = 2.0 * _form(x0, null)
    qc = _form(x0, x0) - 1.0
    if abs(qa) < 1e-14:
        roots = [-qc / qb]
    else:
        disc = max(qb * qb - 4 * qa * qc, 0.0)
        sq = math.sqrt(disc)
        # numerically stable pair of roots
        q = -0.5 * (qb + math.copysign(sq, qb))
        roots = [q / qa, qc / q] if q != 0 else [0.0, 0.0]
    out = []
    for s in roots:
        X = x0 + s * null
        out.append(GeneralizedCircle.from_vector(X))
    return out


def place_tangent(Cu: GeneralizedCircle, Cw: GeneralizedCircle, constraint) -> GeneralizedCircle:
    """Circle tangent to Cu and Cw completing the positively oriented triple (u, w, new)."""
    Y, val = constraint
    rows = [_row(Cu.vector()), _row(Cw.vector()), _row(Y)]
    best, best_a = None, -math.inf
    for X in _candidates(rows, [-1.0, -1.0, val]):
        try:
            D = dual_circle(Cu, Cw, X, tol=1e-6)
        except GeometryError:
            continue
        # the interstice of a correctly oriented triple is bounded
        if D.a > best_a:
            best, best_a = X, D.a
    if best is None:
        raise PackingError("no admissible tangent placement")
    return best


def place_second(C0: GeneralizedCircle, constraint) -> GeneralizedCircle:
    """Circle tangent to C0 with center on the real axis, to the right."""
    Y, val = constraint
    rows = [_row(C0.vector()), _row(Y), np.array([0.0, 0.0, 1.0, 0.0])]
    cands = _candidates(rows, [-1.0, val, 0.0])
    if Y[0] != 0.0:
        # hyperbolic circles lie inside the disk
        cands = [X for X in cands if X.a > 0]
    if not cands:
        raise PackingError("no admissible second placement")
    return max(cands, key=lambda X: X.center.real)


def _place_first(constraint) -> GeneralizedCircle:
    Y, val = constraint
    if Y[0] == 0.0:  # Euclidean radius
        return GeneralizedCircle.from_center_radius(0j, 1.0 / val)
    if val == 1.0:  # horocycle touching -1
        return GeneralizedCircle(2.0, 1 + 0j, 0.0)
    return GeneralizedCircle.from_center_radius(0j, _coth_to_t(val))


def _coth_to_t(val: float) -> float:
    # Euclidean radius of the origin-centered circle with <X, U> = coth(rho)
    rho = math.atanh(1.0 / val)
    return math.tanh(rho / 2.0)


def _face_order(face, known: set[int]):
    for k in range(3):
        a, b, c = face[k], face[(k + 1) % 3], face[(k + 2) % 3]
        if a in known and b in known:
            return a, b, c
    raise AssertionError("face does not share an edge with known circles")


def _develop_single_chart(N: Nerve, face_ids: Sequence[int], constraint, first: Optional[tuple]):
    """Place all circles of the given faces in one chart by breadth-first search."""
    face_ids = list(face_ids)
    allowed = set(face_ids)
    circles: dict[int, GeneralizedCircle] = {}
    f0 = face_ids[0]
    a, b, c = N.faces[f0]
    if first is not None:
        v0, C0 = first
        k = N.faces[f0].index(v0)
        a, b, c = N.faces[f0][k], N.faces[f0][(k + 1) % 3], N.faces[f0][(k + 2) % 3]
        circles[a] = C0
    else:
        # prefer an interior (non-horocycle) vertex at the origin
        for k in range(3):
            if constraint(N.faces[f0][k])[1] != 1.0:
                a, b, c = N.faces[f0][k], N.faces[f0][(k + 1) % 3], N.faces[f0][(k + 2) % 3]
                break
        circles[a] = _place_first(constraint(a))
    circles[b] = place_second(circles[a], constraint(b))
    circles[c] = place_tangent(circles[a], circles[b], constraint(c))
    adjacent = _face_adjacency(N)
    seen = {f0}
    queue = deque([f0])
    while queue:
        f = queue.popleft()
        for g in adjacent[f]:
            if g in seen or g not in allowed:
                continue
            seen.add(g)
            u, w, x = _face_order(N.faces[g], set(circles))
            if x not in circles:
                circles[x] = place_tangent(circles[u], circles[w], constraint(x))
            queue.append(g)
    return circles


def _face_adjacency(N: Nerve) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in N.faces]
    for fi, ids in enumerate(N.face_edge_ids):
        for e in ids:
            f, g = N.edge_faces[e]
            adj[fi].append(g if f == fi else f)
    return adj


# -- layouts --------------------------------------------------------------------

@dataclass(frozen=True)
class HolonomyReport:
    """Residuals of a developed layout.

    ``flower_residual`` measures how far the product of chart transitions
    around each vertex is from the identity, together with how well each
    transition carries shared circles onto each other.  ``deck_residual``
    is the deviation of torus side pairings from pure translations.
    """

    tangency_residual: float
    orthogonality_residual: float
    flower_residual: float
    deck_residual: float
    side_pairings: tuple[tuple[int, MobiusMap], ...] = ()

    @property
    def max_residual(self) -> float:
        return max(self.tangency_residual, self.orthogonality_residual, self.flower_residual, self.deck_residual)

    def to_dict(self) -> dict:
        return {
            "tangency_residual": self.tangency_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "flower_residual": self.flower_residual,
            "deck_residual": self.deck_residual,
            "side_pairings": [[e, _map_list(M)] for e, M in self.side_pairings],
        }


def _map_list(M: MobiusMap) -> list:
    return [[z.real, z.imag] for z in (M.m11, M.m12, M.m21, M.m22)]


def _vec(C: GeneralizedCircle) -> list:
    return [C.a, C.b.real, C.b.imag, C.c]


@dataclass(frozen=True)
class Layout:
    """Developed packing as an atlas of per-face charts.

    Every face owns a chart holding its three circles, placed directly from
    the label so that no error accumulates between faces.
    ``transitions[e]`` maps the chart of the second face on edge e (the
    one traversing hi -> lo) into the chart of the first.  ``chart_maps[f]``
    carries chart f into the global picture, composed along a spanning tree
    of faces; for genus 0 the global picture is the disk model with the
    outer circle as the reversed unit circle.  Tangency points are stored in
    the chart of the first face of each edge.
    """

    nerve: Nerve
    label: PackingLabel
    face_circles: tuple[tuple[GeneralizedCircle, GeneralizedCircle, GeneralizedCircle], ...]
    dual_circles: tuple[GeneralizedCircle, ...]
    tangency: tuple[Point, ...]
    transitions: tuple[MobiusMap, ...]
    chart_maps: tuple[MobiusMap, ...]
    holonomy: HolonomyReport

    @property
    def geometry(self) -> str:
        return self.label.geometry

    def circle(self, v: int, face: int) -> GeneralizedCircle:
        return self.face_circles[face][self.nerve.faces[face].index(v)]

    def global_circle(self, v: int, face: Optional[int] = None) -> GeneralizedCircle:
        f = self.nerve.vertex_faces[v][0] if face is None else face
        return mobius_apply(self.chart_maps[f], self.circle(v, f))

    @property
    def vertex_circles(self) -> tuple[GeneralizedCircle, ...]:
        """One global representative per vertex."""
        return tuple(self.global_circle(v) for v in range(self.nerve.n_vertices))

    def global_dual(self, f: int) -> GeneralizedCircle:
        return mobius_apply(self.chart_maps[f], self.dual_circles[f])

    def global_tangency(self, e: int) -> Point:
        return self.chart_maps[self.nerve.edge_faces[e][0]](self.tangency[e])

    def transition(self, dst: int, src: int) -> MobiusMap:
        """Map from the chart of face src to the chart of adjacent face dst."""
        return _transition(self.nerve, self.transitions, dst, src)

    def mapped(self, M: MobiusMap) -> "Layout":
        """The same layout with every chart post-composed by M."""
        fc = tuple(tuple(mobius_apply(M, C) for C in trip) for trip in self.face_circles)
        duals = tuple(mobius_apply(M, D) for D in self.dual_circles)
        tang = tuple(M(p) for p in self.tangency)
        Minv = M.inverse()
        trans = tuple(M @ T @ Minv for T in self.transitions)
        charts = tuple(M @ T @ Minv for T in self.chart_maps)
        return Layout(self.nerve, self.label, fc, duals, tang, trans, charts, self.holonomy)

    def to_dict(self) -> dict:
        def pt(p):
            return None if p.infinite else [p.z.real, p.z.imag]

        return {
            "label": self.label.to_dict(),
            "circles": [_vec(C) for C in self.vertex_circles],
            "face_circles": [[_vec(C) for C in trip] for trip in self.face_circles],
            "dual_circles": [_vec(D) for D in self.dual_circles],
            "tangency_points": [pt(p) for p in self.tangency],
            "transitions": [_map_list(T) for T in self.transitions],
            "residuals": self.holonomy.to_dict(),
        }


def _edge_transition(geometry: str, src: tuple[GeneralizedCircle, GeneralizedCircle],
                     dst: tuple[GeneralizedCircle, GeneralizedCircle]) -> MobiusMap:
    if geometry != "hyperbolic":
        zs, ws = src[0].center, src[1].center
        zd, wd = dst[0].center, dst[1].center
        alpha = (wd - zd) / (ws - zs)
        return similarity(alpha, zd - alpha * zs)
    hs = (hyperbolic_center_radius(src[0])[0], hyperbolic_center_radius(src[1])[0])
    hd = (hyperbolic_center_radius(dst[0])[0], hyperbolic_center_radius(dst[1])[0])
    return disk_isometry_between(hs, hd)


def _local_chart(face: tuple[int, int, int], constraint, size) -> tuple:
    """The three circles of one face in a standard position.

    The smallest circle sits at the origin: tiny circles far from the origin
    have large coefficients and lose precision in inversive products.
    """
    k = min(range(3), key=lambda i: (size(face[i]), i))
    a, b, c = face[k], face[(k + 1) % 3], face[(k + 2) % 3]
    Ca = _place_first(constraint(a))
    Cb = place_second(Ca, constraint(b))
    Cc = place_tangent(Ca, Cb, constraint(c))
    placed = {a: Ca, b: Cb, c: Cc}
    return tuple(placed[v] for v in face)


def develop_layout(N: Nerve, L: PackingLabel, tol: float = 1e-8) -> Layout:
    """Lay out circles for a converged label and audit the result."""
    outer = L.outer if L.geometry == "sphere" else None
    if L.geometry == "hyperbolic":
        constraint = (lambda v: _hyperbolic_constraint(L.radii[v]))
    else:
        # the outer circle of a genus-0 layout is a reversed circle of radius 1
        constraint = (lambda v: _euclid_constraint(-1.0 if v == outer else L.radii[v]))
    face_circles = [_local_chart(f, constraint, lambda v: L.radii[v]) for f in N.faces]
    transitions = []
    for e, (lo, hi) in enumerate(N.edges):
        f, g = N.edge_faces[e]
        src = (face_circles[g][N.faces[g].index(lo)], face_circles[g][N.faces[g].index(hi)])
        dst = (face_circles[f][N.faces[f].index(lo)], face_circles[f][N.faces[f].index(hi)])
        transitions.append(_edge_transition(L.geometry, src, dst))

    root = N.vertex_faces[outer][0] if outer is not None else 0
    chart_maps: list[Optional[MobiusMap]] = [None] * len(N.faces)
    if outer is None:
        chart_maps[root] = MobiusMap.identity()
    else:
        # global disk picture: the outer circle becomes the reversed unit circle
        chart_maps[root] = similarity(1.0, -face_circles[root][N.faces[root].index(outer)].center)
    tree_edges: set[int] = set()
    queue = deque([root])
    while queue:
        f = queue.popleft()
        for e in N.face_edge_ids[f]:
            p, q = N.edge_faces[e]
            g = q if p == f else p
            if chart_maps[g] is None:
                tree_edges.add(e)
                chart_maps[g] = chart_maps[f] @ _transition(N, transitions, f, g)
                queue.append(g)

    duals = [dual_circle(*trip, tol=1e-6) for trip in face_circles]
    tangency = []
    for e, (lo, hi) in enumerate(N.edges):
        f = N.edge_faces[e][0]
        Cl = face_circles[f][N.faces[f].index(lo)]
        Ch = face_circles[f][N.faces[f].index(hi)]
        tangency.append(tangency_point(Cl, Ch, tol=1e-6))
    report = _audit(N, L.geometry, face_circles, duals, transitions, chart_maps, tree_edges)
    layout = Layout(N, L, tuple(face_circles), tuple(duals), tuple(tangency), tuple(transitions),
                    tuple(chart_maps), report)
    if report.max_residual > tol:
        raise HolonomyError(f"layout residual {report.max_residual:.3e} above tolerance {tol:.1e}", report)
    return layout


def _audit(N: Nerve, geometry: str, face_circles, duals, transitions, chart_maps, tree_edges) -> HolonomyReport:
    tangency = 0.0
    ortho = 0.0
    for f, trip in enumerate(face_circles):
        for k in range(3):
            tangency = max(tangency, abs(bilinear(trip[k], trip[(k + 1) % 3]) + 1.0))
            ortho = max(ortho, abs(bilinear(trip[k], duals[f])))
        ortho = max(ortho, abs(duals[f].norm_residual))
    flower = 0.0
    for e, T in enumerate(transitions):
        f, g = N.edge_faces[e]
        # a transition must carry g's copy of each shared circle onto f's copy
        for v in N.edges[e]:
            img = mobius_apply(T, face_circles[g][N.faces[g].index(v)])
            ref = face_circles[f][N.faces[f].index(v)].vector()
            err = float(np.max(np.abs(img.vector() - ref))) / max(1.0, float(np.max(np.abs(ref))))
            flower = max(flower, err)
    for v in range(N.n_vertices):
        ring = N.vertex_faces[v]
        M = MobiusMap.identity()
        for k in range(len(ring)):
            M = M @ _transition(N, transitions, ring[k], ring[(k + 1) % len(ring)])
        flower = max(flower, M.distance_from_identity())
    deck = 0.0
    pairings = []
    if geometry != "sphere":
        for e in range(len(N.edges)):
            if e in tree_edges:
                continue
            f, g = N.edge_faces[e]
            P = chart_maps[f] @ transitions[e] @ chart_maps[g].inverse()
            pairings.append((e, P))
            if geometry == "euclidean":
                # deck transformations of a flat torus are translations
                deck = max(deck, abs(P.m11 / P.m22 - 1.0))
    return HolonomyReport(tangency, ortho, flower, deck, tuple(pairings))


def _transition(N: Nerve, transitions, dst: int, src: int) -> MobiusMap:
    for e in N.face_edge_ids[dst]:
        f, g = N.edge_faces[e]
        if (f, g) == (dst, src):
            return transitions[e]
        if (f, g) == (src, dst):
            return transitions[e].inverse()
    raise ValueError(f"faces {dst} and {src} are not adjacent")


# -- diameter report -------------------------------------------------------------

@dataclass(frozen=True)
class DiameterReport:
    geometry: str
    circle_diameters: tuple[float, ...]
    interstice_diameters: tuple[float, ...]

    @property
    def max_circle(self) -> float:
        return max(self.circle_diameters)

    @property
    def max_interstice(self) -> float:
        return max(self.interstice_diameters)


def sphere_normalization(layout: Layout) -> MobiusMap:
    """Moebius map balancing the packing on the unit sphere."""
    return centering_map(layout.vertex_circles)


def diameter_report(layout: Layout, normalization: Optional[MobiusMap] = None) -> DiameterReport:
    """Circle and interstice diameters in the layout's natural metric.

    Euclidean layouts are measured at unit torus area and hyperbolic ones in
    the disk metric; both are chart independent.  Spherical layouts are
    measured on the unit sphere after mapping the global picture by the
    balancing normalization (or the explicit one supplied).  An interstice
    lies inside the triangle spanned by its three tangency points, so its
    diameter is the largest distance between them.
    """
    N = layout.nerve
    if len(N.faces) < 2:
        raise ValueError("diameter report needs at least two faces")
    geometry = layout.geometry
    if geometry == "sphere":
        M = normalization if normalization is not None else sphere_normalization(layout)
        circles = [min(2.0 * spherical_radius(mobius_apply(M, C)), math.pi) for C in layout.vertex_circles]
        trips = [tuple(mobius_apply(M @ layout.chart_maps[f], C) for C in trip)
                 for f, trip in enumerate(layout.face_circles)]
    else:
        circles = [2.0 * r for r in layout.label.radii]
        trips = layout.face_circles
    inter = []
    for trip in trips:
        pts = [tangency_point(trip[k], trip[(k + 1) % 3], tol=1e-6) for k in range(3)]
        d = 0.0
        for i in range(3):
            p, q = pts[i], pts[(i + 1) % 3]
            if geometry == "euclidean":
                d = max(d, abs(p.z - q.z))
            elif geometry == "hyperbolic":
                d = max(d, hyperbolic_distance(p.z, q.z))
            else:
                d = max(d, spherical_distance(p, q))
        inter.append(d)
    return DiameterReport(geometry, tuple(circles), tuple(inter))
