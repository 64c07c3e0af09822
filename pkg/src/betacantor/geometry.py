"""Exact planar primitives: rational points, horizontal weighted segments,
lines in normal form, closed balls, and the closed-form clipped L^p moments
that everything else is built on.

Construction geometry is kept in exact rational arithmetic
(``fractions.Fraction``); evaluation switches to floats only after the
caller has rescaled a query window to unit size.  Equality of rational
points is decidable and no rounding happens inside these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union

Rational = Union[Fraction, int]
Scalar = Union[Fraction, int, float]

#: relative tolerance used when a ball/segment intersection has to fall back
#: to floating point (relative to the ball radius)
CLIP_REL_TOL = 1e-12


def to_fraction(value: Scalar) -> Fraction:
    """Convert ints, floats and fractions to an exact ``Fraction``.

    ``Fraction(float)`` is exact (binary floats are dyadic rationals), so
    this never introduces rounding; it only makes downstream arithmetic
    exact.
    """
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


@dataclass(frozen=True)
class RationalPoint:
    """A point of the plane with exact rational coordinates."""

    x: Fraction
    y: Fraction

    def __init__(self, x: Scalar, y: Scalar):
        object.__setattr__(self, "x", to_fraction(x))
        object.__setattr__(self, "y", to_fraction(y))

    def as_floats(self) -> Tuple[float, float]:
        return float(self.x), float(self.y)

    def dist2(self, other: "RationalPoint") -> Fraction:
        """Exact squared euclidean distance."""
        return (self.x - other.x) ** 2 + (self.y - other.y) ** 2


@dataclass(frozen=True)
class WeightedSegment:
    """Closed horizontal segment with a constant linear mass density.

    Invariants: both endpoints share the same ``y``, ``left.x < right.x``,
    and ``density >= 0``.  The segment mass is ``density * length``.
    """

    left: RationalPoint
    right: RationalPoint
    density: Fraction

    def __init__(self, left: RationalPoint, right: RationalPoint,
                 density: Scalar = 1):
        if not isinstance(left, RationalPoint):
            left = RationalPoint(*left)
        if not isinstance(right, RationalPoint):
            right = RationalPoint(*right)
        if left.y != right.y:
            raise ValueError("segment must be horizontal (left.y == right.y)")
        if not left.x < right.x:
            raise ValueError("need left.x < right.x")
        dens = to_fraction(density)
        if dens < 0:
            raise ValueError("density must be nonnegative")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "density", dens)

    @property
    def y(self) -> Fraction:
        return self.left.y

    @property
    def length(self) -> Fraction:
        return self.right.x - self.left.x

    @property
    def mass(self) -> Fraction:
        return self.density * self.length

    def shifted(self, dx: Scalar, dy: Scalar) -> "WeightedSegment":
        dx, dy = to_fraction(dx), to_fraction(dy)
        return WeightedSegment(
            RationalPoint(self.left.x + dx, self.left.y + dy),
            RationalPoint(self.right.x + dx, self.right.y + dy),
            self.density,
        )


@dataclass(frozen=True)
class Line:
    """A line in normal form ``{y : <y, (cos phi, sin phi)> = c}``.

    ``phi`` is the angle of the unit normal, normalized to ``[0, pi)``;
    ``c`` the signed offset.  ``dist(p, line) = |<p, n> - c|``.
    """

    phi: float
    c: float

    def __init__(self, phi: float, c: float):
        phi = float(phi)
        c = float(c)
        # fold the normal into the upper half plane, flipping the offset
        phi = math.fmod(phi, math.pi)
        if phi < 0:
            phi += math.pi
            c = -c
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "c", c)

    @property
    def normal(self) -> Tuple[float, float]:
        return math.cos(self.phi), math.sin(self.phi)

    def distance(self, x: float, y: float) -> float:
        nx, ny = self.normal
        return abs(x * nx + y * ny - self.c)

    @staticmethod
    def horizontal(height: float) -> "Line":
        return Line(math.pi / 2, float(height))


@dataclass(frozen=True)
class Ball:
    """Closed ball ``B(center, radius)``; points on the sphere belong to it."""

    cx: Fraction
    cy: Fraction
    radius: Fraction

    def __init__(self, center, radius: Scalar):
        if isinstance(center, RationalPoint):
            cx, cy = center.x, center.y
        else:
            cx, cy = to_fraction(center[0]), to_fraction(center[1])
        radius = to_fraction(radius)
        if radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cy", cy)
        object.__setattr__(self, "radius", radius)

    @property
    def center(self) -> RationalPoint:
        return RationalPoint(self.cx, self.cy)

    def contains(self, x: Scalar, y: Scalar) -> bool:
        """Exact closed-ball membership for rational inputs."""
        dx = to_fraction(x) - self.cx
        dy = to_fraction(y) - self.cy
        return dx * dx + dy * dy <= self.radius * self.radius

    def scaled(self, s: Scalar) -> "Ball":
        s = to_fraction(s)
        return Ball((self.cx * s, self.cy * s), self.radius * s)


def _sqrt_fraction_exact(q: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn = math.isqrt(num)
    rd = math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def clip_segment_to_ball(seg: WeightedSegment, ball: Ball,
                         ) -> Optional[Tuple[Fraction, Fraction]]:
    """Intersect a horizontal segment with a closed ball.

    Returns the x-interval ``(lo, hi)`` of the clipped sub-segment (it may
    be degenerate, ``lo == hi``, when the ball is tangent), or ``None`` when
    the intersection is empty.  The result is exact when the half-chord
    ``sqrt(r^2 - dy^2)`` is rational; otherwise the chord is computed in
    floating point with relative tolerance ``CLIP_REL_TOL`` and returned as
    an exact fraction of that float.
    """
    dy = seg.y - ball.cy
    w2 = ball.radius * ball.radius - dy * dy
    if w2 < 0:
        return None
    w = _sqrt_fraction_exact(w2)
    if w is None:
        # float fallback; inflate by the stated tolerance so that points on
        # the sphere are not lost to rounding
        wf = math.sqrt(float(w2))
        w = Fraction(wf * (1.0 + CLIP_REL_TOL))
    lo = max(seg.left.x, ball.cx - w)
    hi = min(seg.right.x, ball.cx + w)
    if lo > hi:
        return None
    return lo, hi


def segment_ball_intersects(seg: WeightedSegment, ball: Ball) -> bool:
    """Exact predicate: does the closed segment meet the closed ball?

    Uses the nearest point of the segment to the center, so no square root
    is required and rational inputs are decided exactly.
    """
    xn = min(max(ball.cx, seg.left.x), seg.right.x)
    dx = xn - ball.cx
    dy = seg.y - ball.cy
    return dx * dx + dy * dy <= ball.radius * ball.radius


def _abs_power_antideriv(u: float, p: float) -> float:
    """Antiderivative of ``|u|^p``: ``sign(u) |u|^{p+1} / (p+1)``."""
    return math.copysign(abs(u) ** (p + 1.0), u) / (p + 1.0)


def interval_abs_moment(a: float, b: float, p: float) -> float:
    """Closed form of ``\\int_a^b |u|^p du`` for ``a <= b``, ``p >= 1``."""
    return _abs_power_antideriv(b, p) - _abs_power_antideriv(a, p)


def segment_line_p_moment(seg: WeightedSegment, clip: Ball, line: Line,
                          p: float) -> float:
    """``\\int_{seg ∩ clip} dist(y, line)^p dmu`` in closed form.

    For a horizontal segment the distance to the line is ``|alpha t + beta|``
    with ``alpha = cos phi`` and ``beta = y sin phi - c``, so the integral is
    an antiderivative of ``|u|^p`` split at the sign change.  The density is
    a multiplicative factor.  Agrees with adaptive quadrature to relative
    1e-9 (see the test suite).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    bounds = clip_segment_to_ball(seg, clip)
    if bounds is None:
        return 0.0
    t0, t1 = float(bounds[0]), float(bounds[1])
    if t1 <= t0:
        return 0.0
    alpha = math.cos(line.phi)
    beta = float(seg.y) * math.sin(line.phi) - line.c
    dens = float(seg.density)
    if abs(alpha) < 1e-15:
        # line parallel to the segment: the distance is constant
        return dens * abs(beta) ** p * (t1 - t0)
    u0 = alpha * t0 + beta
    u1 = alpha * t1 + beta
    # the substitution u = alpha t + beta gives a 1/alpha factor; the signed
    # antiderivative handles the split at u = 0 and a negative alpha alike
    return dens * (interval_abs_moment(min(u0, u1), max(u0, u1), p)
                   / abs(alpha))


def _convex_hull(points: Sequence[Tuple[float, float]]):
    """Andrew's monotone chain; returns hull vertices in ccw order."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    for pt in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return lower[:-1] + upper[:-1]


def diameter(points: Iterable[Tuple[Scalar, Scalar]]) -> float:
    """Euclidean diameter of a finite point set.

    The diameter of a union of segments is attained at endpoints, so this
    also serves unions of segments once their endpoints are passed in.
    Goes through the convex hull, so large inputs stay cheap.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) <= 1:
        return 0.0
    hull = _convex_hull(pts)
    best = 0.0
    for i in range(len(hull)):
        xi, yi = hull[i]
        for j in range(i + 1, len(hull)):
            d = math.hypot(hull[j][0] - xi, hull[j][1] - yi)
            if d > best:
                best = d
    return best
