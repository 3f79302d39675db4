"""Worldline nets: regions mapped to subalgebras of a finite tensor product.

Each worldline carries one finite-dimensional factor; the subalgebra of a
region is generated by the factors of the worldlines passing through it.
Subalgebras are represented structurally as label sets plus an optional
unitary frame, never as explicit linear subspaces.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction as F
from typing import Optional

from . import geometry as geo
from .errors import DimensionMismatch
from .geometry import Diamond, Point, SpacelikeInterval, Worldline
from .quantum import TensorSpace, UnitaryOp


@dataclass(frozen=True)
class WorldlineSystem:
    label: str
    worldline: Worldline
    dim: int


@dataclass(frozen=True)
class HybridNet:
    systems: tuple

    def __post_init__(self):
        systems = tuple(self.systems)
        object.__setattr__(self, "systems", systems)
        labels = [s.label for s in systems]
        if len(set(labels)) != len(labels):
            raise DimensionMismatch(f"duplicate system labels {labels}")

    @property
    def space(self) -> TensorSpace:
        return TensorSpace(tuple((s.label, s.dim) for s in self.systems))

    @property
    def labels(self):
        return tuple(s.label for s in self.systems)

    def system(self, label: str) -> WorldlineSystem:
        for s in self.systems:
            if s.label == label:
                return s
        raise DimensionMismatch(f"no system {label!r}")


@dataclass(frozen=True)
class SubalgebraDescriptor:
    """frame . (B(H_S) (x) 1_rest) . frame^dag, given by the label set S.

    An absent frame means the identity frame.
    """

    factor_labels: frozenset
    frame: Optional[UnitaryOp] = None

    def complement(self, net: HybridNet) -> "SubalgebraDescriptor":
        return SubalgebraDescriptor(frozenset(net.labels) - self.factor_labels, self.frame)


def local_algebra(net: HybridNet, region: Diamond) -> SubalgebraDescriptor:
    """Labels of worldlines with a point strictly inside the open region."""
    hit = frozenset(
        s.label for s in net.systems if geo.worldline_meets_open_diamond(s.worldline, region)
    )
    return SubalgebraDescriptor(hit)


def interval_labels(net: HybridNet, iv: SpacelikeInterval) -> frozenset:
    return frozenset(
        s.label for s in net.systems if iv.x_lo < s.worldline.x_at(iv.t) < iv.x_hi
    )


def worldline_intersections(a: Worldline, b: Worldline):
    """Exact crossing points of two worldlines, sorted by t.

    Raises DegenerateOverlap when the curves share a segment.
    """
    return geo.worldline_crossings(a, b)


def _meets_closed_complement(w: Worldline, region: Diamond) -> bool:
    """Does the worldline touch the closed causal complement of the region?

    The complement of a diamond splits into two spacelike wedges; membership
    along a causal curve reduces to comparing null-coordinate threshold
    times, since u and v are both nondecreasing in t.
    """
    bot, top = region.bottom, region.top
    # right wedge: u <= u_bot and v >= v_top; left wedge: u >= u_top, v <= v_bot
    right = (
        ("upto", geo._last_time_coord_le(w, -1, bot.u)),
        ("above", geo._first_time_coord_ge(w, +1, top.v)),
    )
    left = (
        ("above", geo._first_time_coord_ge(w, -1, top.u)),
        ("upto", geo._last_time_coord_le(w, +1, bot.v)),
    )
    return _interval_overlap(*right) or _interval_overlap(*left)


def _interval_overlap(a, b) -> bool:
    """Overlap of the t-sets described by (mode, threshold) pairs.

    Modes: 'upto' = (-inf, thr], 'above' = [thr, inf).  A threshold of
    'always' means the whole line and None means the empty set (the
    coordinate scanners report them that way).
    """
    def as_range(mode, thr):
        if thr is None:
            return "empty"
        if thr == "always":
            return (None, None)
        return (None, thr) if mode == "upto" else (thr, None)

    ra = as_range(*a)
    rb = as_range(*b)
    if ra == "empty" or rb == "empty":
        return False
    lo = max((r[0] for r in (ra, rb) if r[0] is not None), default=None)
    hi = min((r[1] for r in (ra, rb) if r[1] is not None), default=None)
    if lo is None or hi is None:
        return True
    return lo <= hi


def net_axiom_check(net: HybridNet, trials: int, seed: int, local_algebra_fn=local_algebra) -> dict:
    """Randomized structural check of isotony, commutation of spacelike
    regions, the diamond property, and label-set duality.

    local_algebra_fn is injectable so that a deliberately broken region
    predicate is detected (negative-control testing).
    """
    rng = random.Random(seed)
    pts = [p for s in net.systems for p in s.worldline.vertices]
    ts = [p.t for p in pts] or [F(0)]
    xs = [p.x for p in pts] or [F(0)]
    t_lo, t_hi = min(ts) - 4, max(ts) + 4
    x_lo, x_hi = min(xs) - 4, max(xs) + 4

    def rand_diamond():
        bt = geo._rand_rat(rng, t_lo, t_hi)
        bx = geo._rand_rat(rng, x_lo, x_hi)
        h = geo._rand_rat(rng, F(1, 2), 4)
        skew = geo._rand_rat(rng, -1, 1, denom=8) * h / 2
        return Diamond(Point(bt, bx), Point(bt + h, bx + skew))

    def shrink(outer: Diamond) -> Diamond:
        bu, bv = outer.bottom.u, outer.bottom.v
        tu, tv = outer.top.u, outer.top.v
        au = geo._rand_rat(rng, 0, F(1, 3))
        av = geo._rand_rat(rng, 0, F(1, 3))
        cu = geo._rand_rat(rng, F(2, 3), 1)
        cv = geo._rand_rat(rng, F(2, 3), 1)
        return Diamond(
            Point.from_uv(bu + au * (tu - bu), bv + av * (tv - bv)),
            Point.from_uv(bu + cu * (tu - bu), bv + cv * (tv - bv)),
        )

    counts = {
        "isotony": [0, 0],
        "einstein": [0, 0],
        "diamond": [0, 0],
        "duality": [0, 0],
    }
    for _ in range(trials):
        outer = rand_diamond()
        inner = shrink(outer)
        li = local_algebra_fn(net, inner).factor_labels
        lo_ = local_algebra_fn(net, outer).factor_labels
        counts["isotony"][0] += 1
        if not li <= lo_:
            counts["isotony"][1] += 1

        # spacelike pair: translate a fresh diamond sideways until disjoint
        a = rand_diamond()
        b = None
        for _ in range(20):
            cand = rand_diamond()
            if geo.causally_disjoint(a, cand):
                b = cand
                break
        if b is not None:
            counts["einstein"][0] += 1
            la = local_algebra_fn(net, a).factor_labels
            lb = local_algebra_fn(net, b).factor_labels
            if la & lb:
                counts["einstein"][1] += 1

        t0 = geo._rand_rat(rng, t_lo, t_hi)
        lo = geo._rand_rat(rng, x_lo, x_hi)
        iv = SpacelikeInterval(t0, lo, lo + geo._rand_rat(rng, F(1, 2), 4))
        counts["diamond"][0] += 1
        if local_algebra_fn(net, geo.domain_of_dependence(iv)).factor_labels != interval_labels(net, iv):
            counts["diamond"][1] += 1

        # duality: labels missing from a region must touch its causal complement
        region = rand_diamond()
        lreg = local_algebra_fn(net, region).factor_labels
        counts["duality"][0] += 1
        for s in net.systems:
            if s.label in lreg:
                continue
            if not _meets_closed_complement(s.worldline, region):
                counts["duality"][1] += 1
                break
    return {
        "trials": trials,
        "checks": {k: v[0] for k, v in counts.items()},
        "violations": {k: v[1] for k, v in counts.items()},
        "total_violations": sum(v[1] for v in counts.values()),
    }
