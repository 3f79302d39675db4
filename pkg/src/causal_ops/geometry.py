"""Exact causal-structure computations in 1+1 Minkowski spacetime.

All coordinates are rationals (metric signature -+, units with c = 1), so
every causal predicate in this module is decided exactly, with no floating
point anywhere.  Null coordinates u = t - x, v = t + x turn lightcones and
diamonds into axis-aligned boxes, which is how most predicates are computed
internally.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence, Union

from .errors import DegenerateOverlap, PreconditionViolated

Rat = Fraction


def rat(value) -> Rat:
    """Parse a rational from an int, Fraction, or "p/q" string."""
    if isinstance(value, Rat):
        return value
    if isinstance(value, int):
        return Rat(value)
    if isinstance(value, str):
        return Rat(value)
    raise TypeError(f"not an exact rational: {value!r}")


def rat_str(q: Rat) -> str:
    """Serialize a rational as "p/q" (or "p" when integral)."""
    q = Rat(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class Relation(Enum):
    TIMELIKE_FUTURE = "timelike_future"
    LIGHTLIKE_FUTURE = "lightlike_future"
    SPACELIKE = "spacelike"
    LIGHTLIKE_PAST = "lightlike_past"
    TIMELIKE_PAST = "timelike_past"
    EQUAL = "equal"


@dataclass(frozen=True, order=True)
class Point:
    t: Rat
    x: Rat

    def __post_init__(self):
        object.__setattr__(self, "t", rat(self.t))
        object.__setattr__(self, "x", rat(self.x))

    @property
    def u(self) -> Rat:
        return self.t - self.x

    @property
    def v(self) -> Rat:
        return self.t + self.x

    @staticmethod
    def from_uv(u: Rat, v: Rat) -> "Point":
        return Point((u + v) / 2, (v - u) / 2)

    def __repr__(self):
        return f"({rat_str(self.t)}, {rat_str(self.x)})"


def causal_relation(p: Point, q: Point) -> Relation:
    """Classify q relative to p by exact comparison of dt against |dx|."""
    du = q.u - p.u
    dv = q.v - p.v
    if du == 0 and dv == 0:
        return Relation.EQUAL
    if du >= 0 and dv >= 0:
        if du > 0 and dv > 0:
            return Relation.TIMELIKE_FUTURE
        return Relation.LIGHTLIKE_FUTURE
    if du <= 0 and dv <= 0:
        if du < 0 and dv < 0:
            return Relation.TIMELIKE_PAST
        return Relation.LIGHTLIKE_PAST
    return Relation.SPACELIKE


def in_future_cone(apex: Point, p: Point, strict: bool = False) -> bool:
    """p in J+(apex) (I+ when strict)."""
    if strict:
        return p.u > apex.u and p.v > apex.v
    return p.u >= apex.u and p.v >= apex.v


def in_past_cone(apex: Point, p: Point, strict: bool = False) -> bool:
    """p in J-(apex) (I- when strict)."""
    if strict:
        return p.u < apex.u and p.v < apex.v
    return p.u <= apex.u and p.v <= apex.v


@dataclass(frozen=True)
class Diamond:
    """Double cone I+(bottom) & I-(top); closed means its topological closure."""

    bottom: Point
    top: Point
    closed: bool = False

    def __post_init__(self):
        if not in_future_cone(self.bottom, self.top, strict=True):
            raise PreconditionViolated(
                f"diamond top {self.top} must be chronologically after bottom {self.bottom}"
            )

    def contains(self, p: Point) -> bool:
        strict = not self.closed
        return in_future_cone(self.bottom, p, strict) and in_past_cone(self.top, p, strict)

    def closure(self) -> "Diamond":
        return Diamond(self.bottom, self.top, closed=True)

    def interior(self) -> "Diamond":
        return Diamond(self.bottom, self.top, closed=False)

    def __repr__(self):
        kind = "closed" if self.closed else "open"
        return f"Diamond[{kind} {self.bottom}->{self.top}]"


@dataclass(frozen=True)
class SpacelikeInterval:
    """Open acausal segment x in (x_lo, x_hi) on the slice at time t."""

    t: Rat
    x_lo: Rat
    x_hi: Rat

    def __post_init__(self):
        object.__setattr__(self, "t", rat(self.t))
        object.__setattr__(self, "x_lo", rat(self.x_lo))
        object.__setattr__(self, "x_hi", rat(self.x_hi))
        if not self.x_lo < self.x_hi:
            raise PreconditionViolated("interval needs x_lo < x_hi")

    def contains(self, p: Point) -> bool:
        return p.t == self.t and self.x_lo < p.x < self.x_hi


class SetKind(Enum):
    J_PLUS = "J_plus"
    J_MINUS = "J_minus"
    M_PLUS = "M_plus"
    M_MINUS = "M_minus"
    CAUSAL_COMPLEMENT = "causal_complement"
    CAUSAL_HULL = "causal_hull"


@dataclass(frozen=True)
class CausalSet:
    """A derived causal set (cone, complement, or hull) over a diamond or point.

    For a closed diamond with tips p, q the future/past sets reduce to the
    tip cones: J+(set) = J+(p) and J-(set) = J-(q).  For an open diamond the
    null boundary is excluded, so the cones are chronological (strict).
    """

    kind: SetKind
    base: Union[Diamond, Point]

    def _tips(self):
        if isinstance(self.base, Point):
            return self.base, self.base, False
        return self.base.bottom, self.base.top, not self.base.closed

    def contains(self, p: Point) -> bool:
        bottom, top, strict = self._tips()
        in_jplus = in_future_cone(bottom, p, strict)
        in_jminus = in_past_cone(top, p, strict)
        k = self.kind
        if k is SetKind.J_PLUS:
            return in_jplus
        if k is SetKind.J_MINUS:
            return in_jminus
        if k is SetKind.M_PLUS:
            return not in_jminus
        if k is SetKind.M_MINUS:
            return not in_jplus
        if k is SetKind.CAUSAL_COMPLEMENT:
            return not in_jplus and not in_jminus
        if k is SetKind.CAUSAL_HULL:
            return in_jplus and in_jminus
        raise ValueError(k)


def set_contains(s: CausalSet, p: Point) -> bool:
    return s.contains(p)


def causally_disjoint(a: Diamond, b: Diamond) -> bool:
    """True iff every point of a's closure is spacelike to every point of b's.

    Reduces to tip pairs: the closures causally touch iff a's top lies in
    J+(b's bottom) or b's top lies in J+(a's bottom).
    """
    if in_future_cone(b.bottom, a.top):
        return False
    if in_future_cone(a.bottom, b.top):
        return False
    return True


def check_causal_order(regions: Sequence[Diamond]) -> bool:
    """True iff the listed order is a causal order on the regions.

    For every i < j the closure of regions[j] must avoid J-(closure of
    regions[i]), which for diamonds is the single tip test below.
    """
    if not regions:
        raise PreconditionViolated("need at least one region")
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            if in_past_cone(regions[i].top, regions[j].bottom):
                return False
    return True


def domain_of_dependence(iv: SpacelikeInterval) -> Diamond:
    """Open diamond D(iv) generated by the null rays from the endpoints."""
    half = (iv.x_hi - iv.x_lo) / 2
    center = (iv.x_lo + iv.x_hi) / 2
    return Diamond(Point(iv.t - half, center), Point(iv.t + half, center), closed=False)


# ---------------------------------------------------------------------------
# Worldlines: inextendible piecewise-linear causal graphs x = w(t).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Worldline:
    """Future-directed inextendible PL causal curve with two infinite end rays.

    Vertices are strictly ordered in t with |dx| <= dt on every segment; the
    end rays extend the first/last vertex with the declared velocities
    (|velocity| <= 1), so the curve is a 1-Lipschitz graph x = w(t) over all
    of R.
    """

    vertices: tuple
    initial_velocity: Rat = Rat(0)
    final_velocity: Rat = Rat(0)

    def __post_init__(self):
        verts = tuple(self.vertices)
        if not verts:
            raise PreconditionViolated("worldline needs at least one vertex")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "initial_velocity", rat(self.initial_velocity))
        object.__setattr__(self, "final_velocity", rat(self.final_velocity))
        for vel in (self.initial_velocity, self.final_velocity):
            if abs(vel) > 1:
                raise PreconditionViolated(f"end-ray velocity {vel} exceeds light speed")
        for a, b in zip(verts, verts[1:]):
            dt = b.t - a.t
            if dt <= 0 or abs(b.x - a.x) > dt:
                raise PreconditionViolated(f"vertices {a} -> {b} are not strictly causal")

    def x_at(self, t: Rat) -> Rat:
        """Exact position at time t (rays extended symbolically)."""
        t = rat(t)
        verts = self.vertices
        if t <= verts[0].t:
            return verts[0].x + self.initial_velocity * (t - verts[0].t)
        if t >= verts[-1].t:
            return verts[-1].x + self.final_velocity * (t - verts[-1].t)
        for a, b in zip(verts, verts[1:]):
            if t <= b.t:
                lam = (t - a.t) / (b.t - a.t)
                return a.x + lam * (b.x - a.x)
        raise AssertionError("unreachable")

    def point_at(self, t: Rat) -> Point:
        return Point(rat(t), self.x_at(t))

    def breakpoint_times(self):
        return [p.t for p in self.vertices]

    def pieces(self, t_lo: Rat, t_hi: Rat):
        """Linear pieces (ta, tb, xa, slope) covering [t_lo, t_hi]."""
        times = [t_lo] + [t for t in self.breakpoint_times() if t_lo < t < t_hi] + [t_hi]
        out = []
        for ta, tb in zip(times, times[1:]):
            xa = self.x_at(ta)
            xb = self.x_at(tb)
            slope = (xb - xa) / (tb - ta) if tb > ta else Rat(0)
            out.append((ta, tb, xa, slope))
        return out

    def slope_at(self, t: Rat, side: int) -> Rat:
        """Velocity just before (side=-1) or after (side=+1) time t."""
        t = rat(t)
        verts = self.vertices
        if t < verts[0].t or (t == verts[0].t and side < 0):
            return self.initial_velocity
        if t > verts[-1].t or (t == verts[-1].t and side > 0):
            return self.final_velocity
        for a, b in zip(verts, verts[1:]):
            if (a.t < t < b.t) or (t == a.t and side > 0) or (t == b.t and side < 0):
                return (b.x - a.x) / (b.t - a.t)
        return self.final_velocity


def _null_coord(w: Worldline, t: Rat, sign: int) -> Rat:
    # sign=-1 gives u = t - x, sign=+1 gives v = t + x
    return t + sign * w.x_at(t)


def _first_time_coord_ge(w: Worldline, sign: int, value: Rat):
    """Smallest t with the (nondecreasing) null coordinate >= value, or None.

    Returns _INF-misuse-free values: None means "never", (t,) means attained
    from t onward, and "always" is reported as (-infinity) via the string
    'always'.
    """
    # Past ray: coordinate c(t) = t + sign*x(t); slope 1 + sign*velocity >= 0.
    v0 = w.vertices[0]
    ray_slope = 1 + sign * w.initial_velocity
    c0 = v0.t + sign * v0.x
    if ray_slope == 0:
        if c0 >= value:
            return "always"
    else:
        if c0 >= value:
            tstar = v0.t - (c0 - value) / ray_slope
            return tstar
    # Interior segments.
    verts = w.vertices
    for a, b in zip(verts, verts[1:]):
        ca = a.t + sign * a.x
        cb = b.t + sign * b.x
        if cb >= value:
            if ca >= value:
                return a.t
            # linear crossing inside the segment
            lam = (value - ca) / (cb - ca)
            return a.t + lam * (b.t - a.t)
    # Future ray.
    vl = verts[-1]
    cl = vl.t + sign * vl.x
    slope = 1 + sign * w.final_velocity
    if cl >= value:
        return vl.t
    if slope > 0:
        return vl.t + (value - cl) / slope
    return None


def first_entry_future_cone(w: Worldline, apex: Point):
    """Infimum time at which w enters J+(apex); None if never.

    Membership along a causal curve is upward-closed in t, so the answer is
    the max of the two null-coordinate threshold times.
    """
    tu = _first_time_coord_ge(w, -1, apex.u)
    tv = _first_time_coord_ge(w, +1, apex.v)
    if tu is None or tv is None:
        return None
    if tu == "always" and tv == "always":
        return "always"
    if tu == "always":
        return tv
    if tv == "always":
        return tu
    return max(tu, tv)


def last_exit_past_cone(w: Worldline, apex: Point):
    """Supremum time at which w is still in J-(apex); None if never inside."""
    # w(t) in J-(apex) iff u(t) <= apex.u and v(t) <= apex.v; both coords are
    # nondecreasing, so membership is downward-closed in t.  Reuse the >=
    # scanner on the time-reversed curve via negated coordinates.
    tu = _last_time_coord_le(w, -1, apex.u)
    tv = _last_time_coord_le(w, +1, apex.v)
    if tu is None or tv is None:
        return None
    if tu == "always" and tv == "always":
        return "always"
    if tu == "always":
        return tv
    if tv == "always":
        return tu
    return min(tu, tv)


def _last_time_coord_le(w: Worldline, sign: int, value: Rat):
    """Largest t with the null coordinate <= value; None if never; 'always'."""
    verts = w.vertices
    vl = verts[-1]
    cl = vl.t + sign * vl.x
    slope = 1 + sign * w.final_velocity
    if slope == 0:
        if cl <= value:
            return "always"
    else:
        if cl <= value:
            return vl.t + (value - cl) / slope
    for a, b in zip(reversed(verts[:-1]), reversed(verts[1:])):
        ca = a.t + sign * a.x
        cb = b.t + sign * b.x
        if ca <= value:
            if cb <= value:
                return b.t
            lam = (value - ca) / (cb - ca)
            return a.t + lam * (b.t - a.t)
    v0 = verts[0]
    c0 = v0.t + sign * v0.x
    ray_slope = 1 + sign * w.initial_velocity
    if c0 <= value:
        return v0.t
    if ray_slope > 0:
        return v0.t - (c0 - value) / ray_slope
    return None


def worldline_in_box_times(w: Worldline, region: Diamond):
    """Closed t-range [t_lo, t_hi] of w inside the closure of a diamond.

    Returns None when the worldline misses the closed diamond.
    """
    bot, top = region.bottom, region.top
    lo_u = _first_time_coord_ge(w, -1, bot.u)
    lo_v = _first_time_coord_ge(w, +1, bot.v)
    hi_u = _last_time_coord_le(w, -1, top.u)
    hi_v = _last_time_coord_le(w, +1, top.v)
    los = [t for t in (lo_u, lo_v) if t != "always"]
    his = [t for t in (hi_u, hi_v) if t != "always"]
    if None in (lo_u, lo_v, hi_u, hi_v):
        return None
    t_lo = max(los) if los else None
    t_hi = min(his) if his else None
    if t_lo is None or t_hi is None:
        # Curve rides a null boundary forever; clamp to the diamond's t-span.
        t_lo = t_lo if t_lo is not None else bot.t
        t_hi = t_hi if t_hi is not None else top.t
    if t_lo > t_hi:
        return None
    return (t_lo, t_hi)


def worldline_meets_open_diamond(w: Worldline, region: Diamond) -> bool:
    """Exact test: does the curve have a point strictly inside the diamond?"""
    span = worldline_in_box_times(w, region.closure())
    if span is None:
        return False
    t_lo, t_hi = span
    interior = region.interior()
    # Candidate times: span ends, worldline vertices inside the span, and
    # midpoints of consecutive candidates.  Between candidates all four
    # defining inequalities are linear, so testing candidates and midpoints
    # decides existence exactly.
    cands = [t_lo, t_hi] + [t for t in w.breakpoint_times() if t_lo < t < t_hi]
    cands.sort()
    probe = list(cands)
    for a, b in zip(cands, cands[1:]):
        probe.append((a + b) / 2)
    return any(interior.contains(w.point_at(t)) for t in probe)


def worldline_crossings(a: Worldline, b: Worldline):
    """Exact intersection points of two PL worldline graphs, sorted by t.

    Raises DegenerateOverlap when the curves coincide on a segment or ray.
    """
    times = sorted(set(a.breakpoint_times()) | set(b.breakpoint_times()))
    hits = []

    def diff(t):
        return a.x_at(t) - b.x_at(t)

    def add(t):
        if not any(t == h for h in hits):
            hits.append(t)

    # Past rays.
    t0 = times[0]
    slope = (a.initial_velocity if t0 <= a.vertices[0].t else a.slope_at(t0, -1)) - (
        b.initial_velocity if t0 <= b.vertices[0].t else b.slope_at(t0, -1)
    )
    d0 = diff(t0)
    if slope == 0:
        if d0 == 0:
            raise DegenerateOverlap("curves share their past rays")
    else:
        tstar = t0 - d0 / slope
        if tstar <= t0:
            add(tstar)
    # Interior pieces.
    for ta, tb in zip(times, times[1:]):
        da, db = diff(ta), diff(tb)
        if da == 0 and db == 0:
            raise DegenerateOverlap(f"curves overlap on [{ta}, {tb}]")
        if da == 0:
            add(ta)
        if db == 0:
            add(tb)
        if (da > 0 > db) or (da < 0 < db):
            tstar = ta + (tb - ta) * da / (da - db)
            add(tstar)
    # Future rays.
    t1 = times[-1]
    slope = (a.final_velocity if t1 >= a.vertices[-1].t else a.slope_at(t1, +1)) - (
        b.final_velocity if t1 >= b.vertices[-1].t else b.slope_at(t1, +1)
    )
    d1 = diff(t1)
    if slope == 0:
        if d1 == 0:
            raise DegenerateOverlap("curves share their future rays")
    else:
        tstar = t1 - d1 / slope
        if tstar >= t1:
            add(tstar)
    if len(times) == 1 and diff(times[0]) == 0:
        add(times[0])
    hits.sort()
    return [Point(t, a.x_at(t)) for t in hits]


# ---------------------------------------------------------------------------
# Cauchy graphs and the separating-surface construction.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CauchyGraph:
    """1-Lipschitz piecewise-linear graph t = f(x); a Cauchy surface.

    Breakpoints are ordered by x; beyond the first/last breakpoint the graph
    continues with the declared slopes (|slope| <= 1).
    """

    breakpoints: tuple
    slope_left: Rat = Rat(0)
    slope_right: Rat = Rat(0)

    def __post_init__(self):
        pts = tuple(self.breakpoints)
        if not pts:
            raise PreconditionViolated("cauchy graph needs at least one breakpoint")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "slope_left", rat(self.slope_left))
        object.__setattr__(self, "slope_right", rat(self.slope_right))
        for s in (self.slope_left, self.slope_right):
            if abs(s) > 1:
                raise PreconditionViolated("cauchy graph slope exceeds 1")
        for a, b in zip(pts, pts[1:]):
            dx = b.x - a.x
            if dx <= 0 or abs(b.t - a.t) > dx:
                raise PreconditionViolated(f"breakpoints {a} -> {b} break the Lipschitz bound")

    def t_at(self, x: Rat) -> Rat:
        x = rat(x)
        pts = self.breakpoints
        if x <= pts[0].x:
            return pts[0].t + self.slope_left * (x - pts[0].x)
        if x >= pts[-1].x:
            return pts[-1].t + self.slope_right * (x - pts[-1].x)
        for a, b in zip(pts, pts[1:]):
            if x <= b.x:
                lam = (x - a.x) / (b.x - a.x)
                return a.t + lam * (b.t - a.t)
        raise AssertionError("unreachable")


def separating_cauchy_surface(k: Diamond, l: Diamond) -> CauchyGraph:
    """Cauchy graph between the closed diamonds K and L (K past, L future).

    The graph is the midpoint of the two null envelopes g(x) = top_K.t -
    |x - top_K.x| (upper boundary of J-(K)) and h(x) = bot_L.t + |x - bot_L.x|
    (lower boundary of J+(L)).  Under the precondition L within M+_K the
    envelopes never meet, so g < f < h pointwise and the surface avoids both
    J-(K) and J+(L).
    """
    qk = k.top
    pl = l.bottom
    if in_past_cone(qk, pl):
        raise PreconditionViolated("L is not contained in M+_K")

    def f(x):
        g = qk.t - abs(x - qk.x)
        h = pl.t + abs(x - pl.x)
        return (g + h) / 2

    xs = sorted({qk.x, pl.x})
    pts = tuple(Point(f(x), x) for x in xs)
    return CauchyGraph(pts, slope_left=Rat(0), slope_right=Rat(0))


# ---------------------------------------------------------------------------
# Finite covering of a worldline segment by future domains of dependence.
# ---------------------------------------------------------------------------


def _coverage_end(gamma: Worldline, iv: SpacelikeInterval):
    """First time > iv.t at which gamma leaves D+(iv); None means never.

    gamma(t) sits in D+(iv) iff x(t) - (t - iv.t) > x_lo and
    x(t) + (t - iv.t) < x_hi; both gap functions are nonincreasing PL in t,
    so the exit is the first zero of either.
    """
    ends = []
    for sign, bound in ((-1, iv.x_lo), (+1, iv.x_hi)):
        # gap(t) = sign*(bound - x(t)) - (t - iv.t), positive while inside
        t = iv.t
        gap0 = (bound - gamma.x_at(t)) * sign - 0
        if gap0 <= 0:
            return iv.t
        horizon = iv.t + (iv.x_hi - iv.x_lo)  # apex is reached before this
        for ta, tb, xa, slope in gamma.pieces(iv.t, horizon):
            ga = (bound - gamma.x_at(ta)) * sign - (ta - iv.t)
            gb = (bound - gamma.x_at(tb)) * sign - (tb - iv.t)
            if ga <= 0:
                ends.append(ta)
                break
            if gb <= 0:
                lam = ga / (ga - gb)
                ends.append(ta + lam * (tb - ta))
                break
    if not ends:
        return None
    return min(ends)


def _min_gap(gamma: Worldline, delta: Worldline, t_lo: Rat, t_hi: Rat) -> Rat:
    """Minimum |x_delta(t) - x_gamma(t)| over the closed t-range (exact)."""
    cands = {t_lo, t_hi}
    for w in (gamma, delta):
        cands.update(t for t in w.breakpoint_times() if t_lo < t < t_hi)
    return min(abs(delta.x_at(t) - gamma.x_at(t)) for t in sorted(cands))


def cover_segment(gamma: Worldline, delta: Worldline, k: Diamond):
    """Cover gamma within the closure of K by future domains of dependence.

    Returns spacelike intervals O_i with: the union of D+(O_i) covering
    gamma's segment inside the closed diamond, every D+(O_i) disjoint from
    delta, and gamma's crossing of O_{i+1} contained in D+(O_i).
    """
    span = worldline_in_box_times(gamma, k.closure())
    if span is None:
        return []
    t_lo, t_hi = span
    for p in worldline_crossings(gamma, delta):
        if k.closure().contains(p):
            raise PreconditionViolated(f"gamma and delta intersect at {p} inside K")
    gap = _min_gap(gamma, delta, t_lo, t_hi)
    cap = (k.top.t - k.bottom.t) + 1
    halfwidth = min(gap, cap)
    intervals = []
    tb = t_lo
    while True:
        xg = gamma.x_at(tb)
        iv = SpacelikeInterval(tb, xg - halfwidth, xg + halfwidth)
        intervals.append(iv)
        end = _coverage_end(gamma, iv)
        if end is None or end > t_hi:
            return intervals
        tb = end - halfwidth / 8
        if len(intervals) > 10000:
            raise AssertionError("covering failed to terminate")


def in_future_domain(iv: SpacelikeInterval, p: Point) -> bool:
    """Membership of p in D+(iv)."""
    dt = p.t - iv.t
    if dt < 0:
        return False
    return (p.x - dt > iv.x_lo) and (p.x + dt < iv.x_hi)


def validate_cover(gamma: Worldline, delta: Worldline, k: Diamond, intervals) -> dict:
    """Exact three-part check of a cover_segment output."""
    span = worldline_in_box_times(gamma, k.closure())
    if span is None:
        return {"coverage": not intervals, "avoidance": True, "chaining": True}
    t_lo, t_hi = span
    # Avoidance: delta enters D+(O) iff it is inside the base interval at the
    # base time (both edge gaps are nonincreasing along a causal curve).
    avoidance = all(
        not (iv.x_lo < delta.x_at(iv.t) < iv.x_hi) for iv in intervals
    )
    # Coverage: union of half-open [t_i, end_i) windows must contain the span.
    windows = []
    for iv in intervals:
        if not (iv.x_lo < gamma.x_at(iv.t) < iv.x_hi):
            continue
        end = _coverage_end(gamma, iv)
        windows.append((iv.t, end))
    windows.sort(key=lambda w: w[0])
    cur = t_lo
    covered = False
    for start, end in windows:
        if start > cur:
            break
        if end is None:
            covered = True
            break
        cur = max(cur, end)
        if cur > t_hi:
            covered = True
            break
    # A closed endpoint exactly at t_hi still needs cur > t_hi since windows
    # are half-open on the right.
    coverage = covered
    # Chaining: gamma's crossing of O_{i+1} lies in D+(O_i).
    chaining = True
    for prev, nxt in zip(intervals, intervals[1:]):
        p = gamma.point_at(nxt.t)
        if nxt.contains(p) and not in_future_domain(prev, p):
            chaining = False
    return {"coverage": coverage, "avoidance": avoidance, "chaining": chaining}


# ---------------------------------------------------------------------------
# Randomized geometry harnesses.
# ---------------------------------------------------------------------------


def _rand_rat(rng: random.Random, lo, hi, denom: int = 64) -> Rat:
    lo, hi = rat(lo), rat(hi)
    return lo + (hi - lo) * Rat(rng.randint(0, denom), denom)


def random_causal_curve_through(rng: random.Random, p: Point, max_kinks: int = 8) -> Worldline:
    """Random inextendible PL causal curve passing through p."""
    verts = [p]
    t = p.t
    x = p.x
    for _ in range(rng.randint(0, max_kinks // 2)):
        dt = _rand_rat(rng, Rat(1, 4), 2)
        slope = _rand_rat(rng, -1, 1, denom=8)
        t, x = t + dt, x + slope * dt
        verts.append(Point(t, x))
    head = [p]
    t, x = p.t, p.x
    for _ in range(rng.randint(0, max_kinks // 2)):
        dt = _rand_rat(rng, Rat(1, 4), 2)
        slope = _rand_rat(rng, -1, 1, denom=8)
        t, x = t - dt, x - slope * dt
        head.append(Point(t, x))
    verts = list(reversed(head[1:])) + verts
    v_in = _rand_rat(rng, -1, 1, denom=8)
    v_out = _rand_rat(rng, -1, 1, denom=8)
    return Worldline(tuple(verts), initial_velocity=v_in, final_velocity=v_out)


def random_point_in_diamond(rng: random.Random, region: Diamond, denom: int = 1024) -> Point:
    bot, top = region.bottom, region.top
    au = Rat(rng.randint(1, denom - 1), denom)
    av = Rat(rng.randint(1, denom - 1), denom)
    u = bot.u + au * (top.u - bot.u)
    v = bot.v + av * (top.v - bot.v)
    return Point.from_uv(u, v)


def sorkin_geometry_check(o_a: Diamond, o_b: Diamond, o_c: Diamond, samples: int, seed: int) -> dict:
    """Exact predicates for a three-region signalling layout plus a randomized
    falsification pass on the inclusion of O_C in the domain of dependence of
    (closure of O_A)^perp minus J+(closure of O_B).
    """
    rng = random.Random(seed)
    ordered = check_causal_order([o_a, o_b, o_c])
    disjoint_ac = causally_disjoint(o_a, o_c)
    b_meets_future_a = in_future_cone(o_a.bottom, o_b.top)
    b_meets_past_c = in_past_cone(o_c.top, o_b.bottom)
    falsifications = 0
    checked = 0
    qa_top, pa_bot = o_a.top, o_a.bottom
    pb_bot = o_b.bottom
    for _ in range(samples):
        p = random_point_in_diamond(rng, o_c)
        for _ in range(samples // 10 + 1):
            curve = random_causal_curve_through(rng, p)
            checked += 1
            # The target set S excludes J+(bot A), J-(top A), J+(bot B);
            # along a causal curve each cone membership flips exactly once.
            t_enter_a = first_entry_future_cone(curve, pa_bot)
            t_enter_b = first_entry_future_cone(curve, pb_bot)
            t_exit = last_exit_past_cone(curve, qa_top)
            uppers = [t for t in (t_enter_a, t_enter_b) if t is not None]
            if any(t == "always" for t in uppers):
                falsifications += 1
                continue
            if t_exit == "always":
                falsifications += 1
                continue
            if t_exit is None:
                continue  # never in J-(top A): early part of the curve is in S
            if not uppers:
                continue
            if not (t_exit < min(uppers)):
                falsifications += 1
    return {
        "ordered": ordered,
        "disjoint_ac": disjoint_ac,
        "b_meets_future_a": b_meets_future_a,
        "b_meets_past_c": b_meets_past_c,
        "curves_checked": checked,
        "lemma_falsifications": falsifications,
    }


# ---------------------------------------------------------------------------
# Probe-route construction between two spacelike regions.
# ---------------------------------------------------------------------------


def _region_window(w: Worldline, o_a: Diamond, o_c: Diamond):
    """Open t-interval of w inside M+(closure O_A) & M-(closure O_C)."""
    lo = last_exit_past_cone(w, o_a.top)
    hi = first_entry_future_cone(w, o_c.bottom)
    if lo == "always" or hi == "always":
        return None
    return lo, hi  # lo may be None (never below), hi may be None (never above)


def _pick_inside(lo, hi, nudge=Rat(1)):
    if lo is None and hi is None:
        return Rat(0)
    if lo is None:
        return hi - nudge
    if hi is None:
        return lo + nudge
    if not lo < hi:
        return None
    return lo + min(nudge, (hi - lo) / 4)


def find_probe_route(o_a: Diamond, o_c: Diamond, gamma_a: Worldline, gamma_c: Worldline):
    """Causal worldline crossing gamma_C and then gamma_A inside
    M+(closure O_A) & M-(closure O_C); None when no such route exists.

    The route is a straight timelike chord between exact crossing events,
    extended by null end rays chosen to avoid further crossings; the result
    is verified exactly and None is returned when verification fails.
    """
    if not causally_disjoint(o_a, o_c):
        raise PreconditionViolated("regions must be causally disjoint")
    win_c = _region_window(gamma_c, o_a, o_c)
    win_a = _region_window(gamma_a, o_a, o_c)
    if win_c is None or win_a is None:
        return None
    t_pc = _pick_inside(*win_c)
    if t_pc is None:
        return None
    p_c = gamma_c.point_at(t_pc)
    # earliest strictly-timelike entry of gamma_A into the future of p_c
    entry = first_entry_future_cone(gamma_a, p_c)
    if entry is None:
        return None
    lo_a, hi_a = win_a
    lo = entry if (lo_a is None or entry >= lo_a) else lo_a
    t_pa = _pick_inside(lo, hi_a, nudge=Rat(1, 2))
    if t_pa is None:
        return None
    p_a = gamma_a.point_at(t_pa)
    if not in_future_cone(p_c, p_a, strict=True):
        # lightlike or unrelated after nudging: push later if the window allows
        t_pa = _pick_inside(t_pa, hi_a, nudge=Rat(1, 2))
        if t_pa is None:
            return None
        p_a = gamma_a.point_at(t_pa)
        if not in_future_cone(p_c, p_a, strict=True):
            return None
    side_a = 1 if gamma_a.x_at(p_c.t) > p_c.x else -1
    side_c = 1 if gamma_c.x_at(p_a.t) > p_a.x else -1
    for v_in, v_out in (
        (Rat(side_a), Rat(-side_c)),
        (Rat(-side_a), Rat(-side_c)),
        (Rat(side_a), Rat(side_c)),
        (Rat(-side_a), Rat(side_c)),
    ):
        route = Worldline((p_c, p_a), initial_velocity=v_in, final_velocity=v_out)
        try:
            hits_c = worldline_crossings(route, gamma_c)
            hits_a = worldline_crossings(route, gamma_a)
        except DegenerateOverlap:
            continue
        if hits_c == [p_c] and hits_a == [p_a]:
            return route
    return None
