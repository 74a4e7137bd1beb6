"""Inversive-plane primitives.

A generalized circle is the zero set of

    Q(z) = a |z|^2 + 2 Re(conj(b) z) + c

with ``a, c`` real and ``b`` complex.  Coefficients are normalized so that
``|b|^2 - a c = 1``; the overall sign is the orientation, and the "inside"
of an oriented circle is the region where ``Q < 0``.  With this scaling the
bilinear form

    <C1, C2> = Re(b1 conj(b2)) - (a1 c2 + a2 c1) / 2

is the cosine of the intersection angle: -1 for external tangency, +1 for
internal tangency and 0 for orthogonal circles.  Lines are circles with
``a = 0`` and need no special casing under Moebius maps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


class TangencyError(GeometryError):
    """Raised when two circles are expected to be tangent but are not."""

    def __init__(self, residual: float):
        super().__init__(f"circles are not tangent (inversive product residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Point:
    """A point of the Riemann sphere: a finite coordinate or infinity."""

    z: complex = 0j
    infinite: bool = False

    @classmethod
    def at(cls, z: complex) -> "Point":
        return cls(complex(z), False)

    def __post_init__(self):
        if self.infinite and self.z != 0:
            raise GeometryError("the point at infinity carries no coordinate")
        if not self.infinite and not cmath.isfinite(self.z):
            raise GeometryError("finite point with non-finite coordinate")

    def distance(self, other: "Point") -> float:
        if self.infinite or other.infinite:
            return 0.0 if self.infinite == other.infinite else math.inf
        return abs(self.z - other.z)


INFINITY = Point(0j, True)


def _canonical_sign(a: float, b: complex) -> int:
    if a != 0.0:
        return 1 if a > 0 else -1
    if b.real != 0.0:
        return 1 if b.real > 0 else -1
    return 1 if b.imag >= 0 else -1


@dataclass(frozen=True)
class GeneralizedCircle:
    """Oriented circle or line; see the module docstring for conventions.

    The dataclass constructor stores coefficients verbatim.  Use
    :meth:`from_coefficients`, :meth:`from_center_radius`, :meth:`line` or
    :func:`circle_through` to obtain normalized instances.
    """

    a: float
    b: complex
    c: float

    @classmethod
    def from_coefficients(cls, a: float, b: complex, c: float) -> "GeneralizedCircle":
        a, b, c = float(a), complex(b), float(c)
        # largest-magnitude rescale first keeps |b|^2 - ac well conditioned
        scale = max(abs(a), abs(b), abs(c))
        if scale == 0.0 or not math.isfinite(scale):
            raise GeometryError("degenerate circle coefficients")
        s2 = abs(b / scale) ** 2 - (a / scale) * (c / scale)
        if s2 <= 0.0:
            raise GeometryError("coefficients describe a point or an empty locus")
        norm2 = s2 * scale * scale
        if abs(norm2 - 1.0) <= 4e-16:
            return cls(a, b, c)
        k = 1.0 / (scale * math.sqrt(s2))
        return cls(a * k, b * k, c * k)

    @classmethod
    def from_center_radius(cls, center: complex, radius: float, orientation: int = 1) -> "GeneralizedCircle":
        if not radius > 0 or not math.isfinite(radius):
            raise GeometryError(f"radius must be positive and finite, got {radius}")
        center = complex(center)
        s = 1.0 if orientation >= 0 else -1.0
        return cls(s / radius, -s * center / radius, s * (abs(center) ** 2 - radius * radius) / radius)

    @classmethod
    def line(cls, point: complex, direction: complex) -> "GeneralizedCircle":
        """Line through ``point`` with the inside on the left of ``direction``."""
        if direction == 0:
            raise GeometryError("zero direction")
        d = complex(direction) / abs(direction)
        # inside = left of d: normal pointing right is -i d, Q = 2 Re(conj(n) (z - p))
        n = -1j * d
        return cls(0.0, n, -2.0 * (n.conjugate() * complex(point)).real)

    @property
    def orientation(self) -> int:
        return _canonical_sign(self.a, self.b)

    def is_line(self, tol: float = 1e-13) -> bool:
        return abs(self.a) <= tol * max(abs(self.b), abs(self.c), 1e-300)

    @property
    def center(self) -> complex:
        if self.a == 0.0:
            raise GeometryError("a line has no center")
        return -self.b / self.a

    @property
    def radius(self) -> float:
        if self.a == 0.0:
            return math.inf
        return 1.0 / abs(self.a)

    @property
    def norm_residual(self) -> float:
        """Error in |b|^2 - ac = 1 relative to the size of the terms."""
        bb, ac = abs(self.b) ** 2, self.a * self.c
        return abs(bb - ac - 1.0) / max(1.0, bb, abs(ac))

    def flipped(self) -> "GeneralizedCircle":
        return GeneralizedCircle(-self.a, -self.b, -self.c)

    def canonical(self) -> "GeneralizedCircle":
        """Positively oriented representative of the same locus."""
        return self if self.orientation > 0 else self.flipped()

    def value(self, z: complex) -> float:
        return self.a * abs(z) ** 2 + 2.0 * (self.b.conjugate() * z).real + self.c

    def contains(self, p: Point) -> bool:
        """True if ``p`` lies strictly inside (Q < 0)."""
        if p.infinite:
            return self.a < 0
        return self.value(p.z) < 0

    def distance_to(self, p: Point) -> float:
        """Euclidean distance from a point to the locus."""
        if p.infinite:
            return 0.0 if self.is_line() else math.inf
        if self.a == 0.0:
            return abs(self.value(p.z)) / (2.0 * abs(self.b))
        return abs(abs(p.z - self.center) - self.radius)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b.conjugate(), self.c]], dtype=complex)

    def vector(self) -> np.ndarray:
        """Real 4-vector (a, Re b, Im b, c)."""
        return np.array([self.a, self.b.real, self.b.imag, self.c])

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "GeneralizedCircle":
        return cls.from_coefficients(v[0], complex(v[1], v[2]), v[3])

    def same_locus(self, other: "GeneralizedCircle", tol: float = DEFAULT_TOL, oriented: bool = True) -> bool:
        u, v = self.vector(), other.vector()
        if oriented:
            return float(np.max(np.abs(u - v))) < tol
        return min(float(np.max(np.abs(u - v))), float(np.max(np.abs(u + v)))) < tol


def _check_normalized(C: GeneralizedCircle, tol: float) -> None:
    if C.norm_residual > tol:
        raise GeometryError(f"circle is not normalized (|b|^2 - ac - 1 = {C.norm_residual:.3e})")


def bilinear(C1: GeneralizedCircle, C2: GeneralizedCircle) -> float:
    """The inversive bilinear form without normalization checks."""
    return (C1.b * C2.b.conjugate()).real - 0.5 * (C1.a * C2.c + C2.a * C1.c)


def inversive_product(C1: GeneralizedCircle, C2: GeneralizedCircle, tol: float = DEFAULT_TOL) -> float:
    """Cosine of the oriented intersection angle.

    -1 external tangency, +1 internal tangency, 0 orthogonal.
    """
    _check_normalized(C1, tol)
    _check_normalized(C2, tol)
    return bilinear(C1, C2)


def _point_from_rank_one(N: np.ndarray) -> Point:
    # N = k w w^H with w = (1, -conj(z0)); read w off the dominant column
    col = N[:, 0] if abs(N[0, 0]) + abs(N[1, 0]) >= abs(N[0, 1]) + abs(N[1, 1]) else N[:, 1]
    p, q = col[0], col[1]
    if abs(p) <= 1e-14 * abs(q):
        return INFINITY
    return Point.at(-(q / p).conjugate())


def tangency_point(C1: GeneralizedCircle, C2: GeneralizedCircle, tol: float = DEFAULT_TOL) -> Point:
    """The common point of two tangent circles."""
    B = inversive_product(C1, C2, tol)
    residual = abs(abs(B) - 1.0)
    if residual > tol:
        raise TangencyError(residual)
    sign = 1.0 if B > 0 else -1.0
    # the pencil C1 - s C2 degenerates to the point circle at the tangency
    N = C1.matrix() - sign * C2.matrix()
    return _point_from_rank_one(N)


def _cross_ratio_image(z: complex, p1: Point, p2: Point, p3: Point) -> complex:
    """Image of z under the Moebius map sending p1, p2, p3 to 0, 1, inf."""
    if p1.infinite:
        return (p2.z - p3.z) / (z - p3.z)
    if p2.infinite:
        return (z - p1.z) / (z - p3.z)
    if p3.infinite:
        return (z - p1.z) / (p2.z - p1.z)
    return ((z - p1.z) * (p2.z - p3.z)) / ((z - p3.z) * (p2.z - p1.z))


def circle_through(p1: Point, p2: Point, p3: Point, tol: float = DEFAULT_TOL) -> GeneralizedCircle:
    """Circle through three points, inside on the left of p1 -> p2 -> p3."""
    rows = []
    for p in (p1, p2, p3):
        if p.infinite:
            rows.append([1.0, 0.0, 0.0, 0.0])
        else:
            z = p.z
            rows.append([abs(z) ** 2, 2.0 * z.real, 2.0 * z.imag, 1.0])
    A = np.array(rows)
    scale = np.max(np.abs(A), axis=1, keepdims=True)
    A = A / scale
    _, s, vt = np.linalg.svd(A)
    if s[2] <= tol * s[0]:
        raise GeometryError("degenerate point triple (coincident points)")
    C = GeneralizedCircle.from_vector(vt[-1])
    if C.is_line():
        foot = _line_foot(C)
        probe = foot - C.b / abs(C.b)  # unit step along -normal, Q < 0 there
    else:
        probe = C.center
    inside = C.value(probe) < 0
    left = _cross_ratio_image(probe, p1, p2, p3).imag > 0
    return C if inside == left else C.flipped()


def _line_foot(C: GeneralizedCircle) -> complex:
    # closest point of the line 2 Re(conj(b) z) + c = 0 to the origin
    return -C.c * C.b / (2.0 * abs(C.b) ** 2)


def dual_circle(c1: GeneralizedCircle, c2: GeneralizedCircle, c3: GeneralizedCircle,
                tol: float = DEFAULT_TOL) -> GeneralizedCircle:
    """Circle through the three tangency points of a positively oriented triple.

    The returned circle is orthogonal to all three inputs and oriented so
    that the interstice of the triple is inside it.
    """
    t12 = tangency_point(c1, c2, tol)
    t23 = tangency_point(c2, c3, tol)
    t31 = tangency_point(c3, c1, tol)
    try:
        through = circle_through(t12, t23, t31, tol)
    except GeometryError as exc:
        raise GeometryError(f"degenerate tangent triple: {exc}") from None
    # orthogonality to the three circles is better conditioned than the
    # three-point fit, which only supplies the orientation.  Work in a frame
    # where the smallest circle is the unit circle so coefficients are O(1).
    trio = (c1, c2, c3)
    small = max(trio, key=lambda C: abs(C.a))
    frame = MobiusMap.identity()
    if small.a != 0.0:
        frame = similarity(1.0 / small.radius, -small.center / small.radius)
        trio = tuple(mobius_apply(frame, C) for C in trio)
    rows = np.array([[-0.5 * C.c, C.b.real, C.b.imag, -0.5 * C.a] for C in trio])
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    _, sv, vt = np.linalg.svd(rows)
    if sv[2] <= tol * sv[0]:
        return through
    D = mobius_apply(frame.inverse(), GeneralizedCircle.from_vector(vt[-1]))
    return D if bilinear(D, through) > 0 else D.flipped()


@dataclass(frozen=True)
class MobiusMap:
    """z -> (m11 z + m12) / (m21 z + m22), stored with determinant 1."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def from_matrix(cls, m11: complex, m12: complex, m21: complex, m22: complex) -> "MobiusMap":
        det = complex(m11) * m22 - complex(m12) * m21
        if abs(det) == 0.0:
            raise GeometryError("singular Moebius matrix")
        if abs(det - 1.0) <= 4e-16:
            return cls(complex(m11), complex(m12), complex(m21), complex(m22))
        s = cmath.sqrt(det)
        return cls(m11 / s, m12 / s, m21 / s, m22 / s)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def from_array(cls, m: np.ndarray) -> "MobiusMap":
        return cls.from_matrix(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap.from_array(self.array() @ other.array())

    def inverse(self) -> "MobiusMap":
        return MobiusMap.from_matrix(self.m22, -self.m12, -self.m21, self.m11)

    def __call__(self, p: Point) -> Point:
        if p.infinite:
            if self.m21 == 0:
                return INFINITY
            return Point.at(self.m11 / self.m21)
        den = self.m21 * p.z + self.m22
        if den == 0:
            return INFINITY
        return Point.at((self.m11 * p.z + self.m12) / den)

    def distance_from_identity(self) -> float:
        m = self.array()
        eye = np.eye(2)
        return float(min(np.linalg.norm(m - eye), np.linalg.norm(m + eye)))


def mobius_apply(M: MobiusMap, C: GeneralizedCircle) -> GeneralizedCircle:
    """Image of an oriented circle; inside maps to inside."""
    if M == MobiusMap.identity():
        return GeneralizedCircle.from_coefficients(C.a, C.b, C.c)
    inv = M.inverse().array()
    H = inv.conj().T @ C.matrix() @ inv
    return GeneralizedCircle.from_coefficients(H[0, 0].real, H[0, 1], H[1, 1].real)


def normalize_to_infinity(p: Point) -> MobiusMap:
    """The map z -> 1 / (z - p); the identity when p is already infinite."""
    if p.infinite:
        return MobiusMap.identity()
    return MobiusMap.from_matrix(0j, 1j, 1j, -1j * p.z)


def mobius_from_points(src: Sequence[complex], dst: Sequence[complex]) -> MobiusMap:
    """The unique Moebius map sending three finite points to three finite points."""

    def to_standard(z1: complex, z2: complex, z3: complex) -> np.ndarray:
        return np.array([[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]], dtype=complex)

    S = to_standard(*src)
    T = to_standard(*dst)
    if abs(np.linalg.det(S)) == 0 or abs(np.linalg.det(T)) == 0:
        raise GeometryError("point triples must be distinct")
    return MobiusMap.from_array(np.linalg.solve(T, S))


def similarity(alpha: complex, beta: complex) -> MobiusMap:
    return MobiusMap.from_matrix(alpha, beta, 0j, 1 + 0j)


def disk_translation(a: complex) -> MobiusMap:
    """Disk automorphism z -> (z + a) / (1 + conj(a) z) sending 0 to a."""
    return MobiusMap.from_matrix(1 + 0j, a, complex(a).conjugate(), 1 + 0j)


def rotation(theta: float) -> MobiusMap:
    return MobiusMap.from_matrix(cmath.exp(0.5j * theta), 0j, 0j, cmath.exp(-0.5j * theta))


UNIT_CIRCLE = GeneralizedCircle(1.0, 0j, -1.0)


# -- Lorentzian model -------------------------------------------------------
#
# A circle with matrix M corresponds to the spacelike vector adj(M) in the
# space of 2x2 Hermitian matrices with quadratic form det.  Points of H^3 are
# positive definite Hermitian matrices of determinant one; the origin of the
# ball model is the identity.  For a point X and circle vector C the value
# <X, C> = sinh of the signed distance from X to the hemisphere over C,
# positive on the outside.

def _pairing(A: np.ndarray, B: np.ndarray) -> float:
    return 0.5 * float((np.trace(A) * np.trace(B) - np.trace(A @ B)).real)


def circle_lorentz_vector(C: GeneralizedCircle) -> np.ndarray:
    return np.array([[C.c, -C.b], [-C.b.conjugate(), C.a]], dtype=complex)


def signed_distance_from_origin(C: GeneralizedCircle) -> float:
    """Hyperbolic distance from the ball origin to the hemisphere over C.

    Positive when the origin lies outside the half-space over the inside of C.
    """
    return math.asinh(_pairing(np.eye(2, dtype=complex), circle_lorentz_vector(C)))


def spherical_radius(C: GeneralizedCircle) -> float:
    """Angular radius of the inside of C on the unit sphere (stereographic)."""
    s = _pairing(np.eye(2, dtype=complex), circle_lorentz_vector(C))
    return math.acos(s / math.sqrt(1.0 + s * s))


def inverse_stereographic(p: Point) -> np.ndarray:
    if p.infinite:
        return np.array([0.0, 0.0, 1.0])
    z = p.z
    d = abs(z) ** 2 + 1.0
    return np.array([2 * z.real / d, 2 * z.imag / d, (abs(z) ** 2 - 1.0) / d])


def spherical_distance(p: Point, q: Point) -> float:
    u, v = inverse_stereographic(p), inverse_stereographic(q)
    return float(2.0 * math.asin(min(1.0, np.linalg.norm(u - v) / 2.0)))


def _hermitian_sqrt_inv(X: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(X)
    if np.min(w) <= 0:
        raise GeometryError("barycenter is not a point of hyperbolic space")
    return V @ np.diag(1.0 / np.sqrt(w)) @ V.conj().T


def centering_map(circles: Iterable[GeneralizedCircle],
                  preserve: Optional[GeneralizedCircle] = None) -> MobiusMap:
    """Moebius map moving the hyperbolic barycenter of a circle family to the origin.

    The barycenter minimizes the sum of sinh-distances to the hemispheres,
    a linear functional on the hyperboloid, so it is the normalized sum of the
    circle vectors.  With ``preserve`` the barycenter is taken inside the
    plane over that circle and the returned map keeps the circle fixed.
    """
    S = np.zeros((2, 2), dtype=complex)
    for C in circles:
        S = S + circle_lorentz_vector(C)
    if preserve is not None:
        U = circle_lorentz_vector(preserve)
        S = S - (_pairing(S, U) / _pairing(U, U)) * U
    det = float(np.linalg.det(S).real)
    if det <= 0 or np.trace(S).real <= 0:
        raise GeometryError("circle family has no hyperbolic barycenter")
    X = S / math.sqrt(det)
    return MobiusMap.from_array(_hermitian_sqrt_inv(X))


def hyperbolic_distance(z: complex, w: complex) -> float:
    """Distance in the Poincare disk."""
    q = abs(z - w) / abs(1 - z.conjugate() * w)
    return 2.0 * math.atanh(min(q, 1.0 - 1e-16))


def hyperbolic_center_radius(C: GeneralizedCircle) -> tuple[complex, float]:
    """Hyperbolic center and radius of a circle lying inside the unit disk."""
    z0, rho = C.center, C.radius
    m = abs(z0)
    u = z0 / m if m > 0 else 1.0 + 0j
    s1, s2 = m - rho, m + rho
    if not (-1 < s1 < s2 < 1):
        raise GeometryError("circle is not contained in the unit disk")
    h1, h2 = math.atanh(s1), math.atanh(s2)
    return u * math.tanh(0.5 * (h1 + h2)), h2 - h1


def hyperbolic_circle(center: complex, radius: float) -> GeneralizedCircle:
    base = GeneralizedCircle.from_center_radius(0j, math.tanh(radius / 2.0))
    if center == 0:
        return base
    return mobius_apply(disk_translation(center), base)


def disk_isometry_between(src: tuple[complex, complex], dst: tuple[complex, complex]) -> MobiusMap:
    """Orientation-preserving disk isometry sending src[0]->dst[0] and the
    direction of src[1] to that of dst[1]."""
    A = disk_translation(src[0])
    B = disk_translation(dst[0])
    p = A.inverse()(Point.at(src[1])).z
    q = B.inverse()(Point.at(dst[1])).z
    theta = cmath.phase(q) - cmath.phase(p)
    return B @ rotation(theta) @ A.inverse()
