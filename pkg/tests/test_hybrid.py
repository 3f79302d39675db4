"""Worldline-net structure tests."""

import random
from fractions import Fraction as F

import numpy as np
import pytest

from causal_ops.errors import DegenerateOverlap
from causal_ops.geometry import Diamond, Point, SpacelikeInterval, Worldline, domain_of_dependence
from causal_ops.hybrid import (
    HybridNet,
    WorldlineSystem,
    interval_labels,
    local_algebra,
    net_axiom_check,
    worldline_intersections,
)
from causal_ops.quantum import tensor_embed, random_unitary, TensorSpace


def P(t, x):
    return Point(F(t), F(x))


def vertical(x):
    return Worldline((P(0, x),), initial_velocity=0, final_velocity=0)


def lightline():
    return Worldline((P(0, 0),), initial_velocity=1, final_velocity=1)


@pytest.fixture
def net():
    return HybridNet(
        (
            WorldlineSystem("A", vertical(-2), 2),
            WorldlineSystem("B", lightline(), 2),
            WorldlineSystem("C", vertical(3), 3),
        )
    )


class TestLocalAlgebra:
    def test_only_one_worldline(self, net):
        region = Diamond(P(0, -2), P(1, -2))
        assert local_algebra(net, region).factor_labels == {"A"}

    def test_empty_region(self, net):
        region = Diamond(P(0, 10), P(1, 10))
        assert local_algebra(net, region).factor_labels == frozenset()

    def test_crossing_region(self, net):
        # gamma_B is the line x = t; it crosses gamma_A (x=-2) at (-2, -2)
        region = Diamond(P(-3, -2), P(-1, -2))
        assert local_algebra(net, region).factor_labels == {"A", "B"}

    def test_space_matches_systems(self, net):
        assert net.space.labels == ("A", "B", "C")
        assert net.space.dim == 12


class TestWorldlineIntersections:
    def test_vertical_vs_light(self):
        assert worldline_intersections(vertical(0), lightline()) == [P(0, 0)]

    def test_parallel(self):
        assert worldline_intersections(vertical(0), vertical(1)) == []

    def test_zigzag_two_hits_sorted(self):
        zig = Worldline((P(-1, 1), P(1, -1), P(3, 1)), initial_velocity=-1, final_velocity=1)
        assert worldline_intersections(zig, vertical(0)) == [P(0, 0), P(2, 0)]

    def test_overlap_error(self):
        with pytest.raises(DegenerateOverlap):
            worldline_intersections(vertical(0), Worldline((P(1, 0),), 0, 0))


class TestNetAxioms:
    def test_clean_net_no_violations(self, net):
        rep = net_axiom_check(net, trials=500, seed=4)
        assert rep["total_violations"] == 0
        assert rep["checks"]["isotony"] == 500

    def test_broken_predicate_detected(self, net):
        rng = random.Random(0)

        def broken(net_, region):
            out = local_algebra(net_, region)
            if rng.random() < 0.5:  # randomly forget about worldline C
                return type(out)(out.factor_labels | {"C"})
            return out

        rep = net_axiom_check(net, trials=200, seed=4, local_algebra_fn=broken)
        assert rep["total_violations"] > 0

    def test_empty_net_vacuous(self):
        rep = net_axiom_check(HybridNet(()), trials=50, seed=1)
        assert rep["total_violations"] == 0

    def test_diamond_axiom_explicit(self, net):
        rng = random.Random(9)
        for _ in range(100):
            t0 = F(rng.randint(-12, 12), 2)
            lo = F(rng.randint(-16, 16), 2)
            iv = SpacelikeInterval(t0, lo, lo + F(rng.randint(1, 8), 2))
            dom = domain_of_dependence(iv)
            assert local_algebra(net, dom).factor_labels == interval_labels(net, iv)

    def test_einstein_causality_commutators(self, net):
        # causally disjoint regions pick up disjoint label sets, so embedded
        # elements commute exactly
        r1 = Diamond(P(0, -2), P(1, -2))
        r2 = Diamond(P(0, 3), P(1, 3))
        l1 = local_algebra(net, r1).factor_labels
        l2 = local_algebra(net, r2).factor_labels
        assert not (l1 & l2)
        space = net.space
        rng = np.random.default_rng(8)
        for _ in range(20):
            d1 = int(np.prod([space.dim_of(l) for l in sorted(l1)]))
            d2 = int(np.prod([space.dim_of(l) for l in sorted(l2)]))
            m1 = rng.standard_normal((d1, d1)) + 1j * rng.standard_normal((d1, d1))
            m2 = rng.standard_normal((d2, d2)) + 1j * rng.standard_normal((d2, d2))
            e1 = tensor_embed(m1, sorted(l1), space)
            e2 = tensor_embed(m2, sorted(l2), space)
            assert np.max(np.abs(e1 @ e2 - e2 @ e1)) <= 1e-10

    def test_isotony_monotone(self, net):
        inner = Diamond(P(-1, -2), P(1, -2))
        outer = Diamond(P(-4, 0), P(6, 0))
        li = local_algebra(net, inner).factor_labels
        lo = local_algebra(net, outer).factor_labels
        assert li <= lo
