"""Dehn filling slopes on crossing-circle cusps and the effective crossing planner.

A crossing-circle cusp torus is tiled by two copies of the rectangle at the
ideal vertex of its coloured edge, so it has white side w and black side 2b
(or a sheared version when a half-twist is present).  The slope that adds
c crossings to the twist region has normalized length
sqrt(w / (2b) + c^2 b / (2w)) >= sqrt(c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

# constants of the universal crossing bound
LENGTH_A = 107.6
LENGTH_B = 45.20
LENGTH_SHIFT = 14.41


class FillingError(ValueError):
    pass


@dataclass(frozen=True)
class CuspShape:
    w: float
    b: float
    half_twist: bool = False

    def __post_init__(self):
        if not (self.w > 0 and self.b > 0 and math.isfinite(self.w) and math.isfinite(self.b)):
            raise FillingError(f"cusp sides must be positive and finite, got w={self.w}, b={self.b}")


def crossing_count(n: int, half_twist: bool) -> int:
    """Crossings added by the 1/n filling: |2n| plainly, |2n+1| through a half-twist."""
    return abs(2 * n + 1) if half_twist else abs(2 * n)


def normalized_length(shape: CuspShape, c: int) -> float:
    if c < 1:
        raise FillingError(f"crossing count must be positive, got {c}")
    w, b = shape.w, shape.b
    return math.sqrt(w / (2 * b) + c * c * b / (2 * w))


def aggregate_length(lengths: Sequence[float]) -> float:
    if len(lengths) == 0:
        raise FillingError("no lengths to aggregate")
    if any(not L > 0 for L in lengths):
        raise FillingError("lengths must be positive")
    return math.fsum(1.0 / (L * L) for L in lengths) ** -0.5


def length_threshold(epsilon: float, delta: float) -> float:
    """Squared normalized length that guarantees a (1 + epsilon)-bilipschitz filling."""
    if not (epsilon > 0 and delta > 0):
        raise FillingError(f"epsilon and delta must be positive, got {epsilon}, {delta}")
    return max(LENGTH_A / delta**2 + LENGTH_SHIFT,
               LENGTH_B / (delta**2.5 * math.log1p(epsilon)) + LENGTH_SHIFT)


@dataclass(frozen=True)
class CrossingThreshold:
    C: int
    raw: float
    per_circle_length: float
    n_plain: int
    n_twisted: int

    def admissible(self, half_twist: bool) -> int:
        """Smallest crossing count >= C with the parity forced by the twist flag."""
        n = self.n_twisted if half_twist else self.n_plain
        return crossing_count(n, half_twist)


def min_crossings(epsilon: float, delta: float, n_circles: int) -> CrossingThreshold:
    if n_circles < 1:
        raise FillingError(f"need at least one crossing circle, got {n_circles}")
    t = length_threshold(epsilon, delta)
    raw = n_circles * t
    C = math.ceil(raw)
    # smallest n >= 1 with 2n >= C, and with 2n + 1 >= C
    return CrossingThreshold(C, raw, t, max(1, -(-C // 2)), max(1, -(-(C - 1) // 2)))


@dataclass(frozen=True)
class CircleSlope:
    circle: int
    n: int
    c: int
    length: float
    half_twist: bool


@dataclass(frozen=True)
class SlopePlan:
    epsilon: float
    R: float
    delta: float
    threshold: CrossingThreshold
    circles: tuple[CircleSlope, ...]
    aggregate: float

    @property
    def passed(self) -> bool:
        return all(s.c >= self.threshold.C for s in self.circles)

    def to_dict(self) -> dict:
        return {
            "inputs": {"epsilon": self.epsilon, "R": self.R, "delta": self.delta},
            "threshold": self.threshold.C,
            "threshold_raw": self.threshold.raw,
            "length_squared_needed": self.threshold.per_circle_length,
            "circles": [
                {"circle": s.circle, "n": s.n, "c": s.c, "L": s.length, "half_twist": s.half_twist}
                for s in self.circles
            ],
            "aggregate_length": self.aggregate,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SlopePlan":
        inp = data["inputs"]
        circles = tuple(CircleSlope(s["circle"], s["n"], s["c"], s["L"], s["half_twist"]) for s in data["circles"])
        thr = min_crossings(inp["epsilon"], inp["delta"], len(circles))
        return cls(inp["epsilon"], inp["R"], inp["delta"], thr, circles, data["aggregate_length"])


def plan_with_counts(shapes: Sequence[CuspShape], ns: Sequence[int], epsilon: float, R: float,
                     delta: float) -> SlopePlan:
    if len(shapes) != len(ns):
        raise FillingError("one filling integer per crossing circle is required")
    if not R > 0:
        raise FillingError(f"R must be positive, got {R}")
    thr = min_crossings(epsilon, delta, len(shapes))
    slopes = []
    for i, (shape, n) in enumerate(zip(shapes, ns)):
        c = crossing_count(n, shape.half_twist)
        if c < 1:
            raise FillingError(f"circle {i}: filling integer {n} adds no crossings")
        slopes.append(CircleSlope(i, n, c, normalized_length(shape, c), shape.half_twist))
    agg = aggregate_length([s.length for s in slopes])
    return SlopePlan(epsilon, R, delta, thr, tuple(slopes), agg)


def plan_filling(shapes: Sequence[CuspShape], epsilon: float, R: float, delta: float) -> SlopePlan:
    """Fill every crossing circle with the fewest crossings that meet the threshold."""
    thr = min_crossings(epsilon, delta, max(1, len(shapes)))
    ns = [thr.n_twisted if s.half_twist else thr.n_plain for s in shapes]
    return plan_with_counts(shapes, ns, epsilon, R, delta)


@dataclass(frozen=True)
class Certificate:
    passed: bool
    deficient: tuple[int, ...]
    min_crossings: int
    threshold: int
    aggregate_length_squared: float
    length_squared_needed: float
    distortion: float
    steps: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "deficient_circles": list(self.deficient),
            "min_crossings": self.min_crossings,
            "threshold": self.threshold,
            "aggregate_length_squared": self.aggregate_length_squared,
            "length_squared_needed": self.length_squared_needed,
            "distortion": self.distortion,
            "steps": list(self.steps),
        }


def certificate(epsilon: float, R: float, delta: float, plan: SlopePlan) -> Certificate:
    """Check the chain from crossing counts to the bilipschitz bound.

    Every circle gets at least C crossings, so each L_i^2 >= C and the
    aggregate satisfies L^2 >= C / n, which is at least the squared length
    the effective filling theorem asks for.  The filled ball is then
    (1 + epsilon)-bilipschitz to the ball in the augmented link complement,
    which is itself (1 + epsilon)-close to the model through a
    quasiconformal map whose constant K enters as K^(3/2).
    """
    if (plan.epsilon, plan.R, plan.delta) != (epsilon, R, delta):
        raise FillingError("plan was computed for different parameters")
    thr = min_crossings(epsilon, delta, len(plan.circles))
    deficient = tuple(s.circle for s in plan.circles if s.c < thr.C)
    cmin = min(s.c for s in plan.circles)
    L2 = aggregate_length([s.length for s in plan.circles]) ** 2
    ok = not deficient
    steps = (
        f"every circle has c_i >= {thr.C}" if ok else f"circles {list(deficient)} have c_i < {thr.C}",
        f"L_i^2 >= c_i, so L^2 >= min c_i / n = {cmin / len(plan.circles):.6g}",
        f"needed L^2 >= {thr.per_circle_length:.6g}; achieved {L2:.6g}",
        "filling is (1 + epsilon)-bilipschitz on B(p, R)",
        "first (1 + epsilon) factor from a K^(3/2)-bilipschitz equivariant map",
        f"composite distortion (1 + epsilon)^2 = {(1 + epsilon) ** 2:.6g}",
    )
    return Certificate(ok, deficient, cmin, thr.C, L2, thr.per_circle_length, (1 + epsilon) ** 2, steps)
