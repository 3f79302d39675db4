"""Scattering-morphism and probe-measurement tests.

The operator-ordering convention (which side of the product the early
coupling lands on) is frozen by the round-trip tests in this module.
"""

from fractions import Fraction as F

import numpy as np
import pytest

from causal_ops.errors import (
    CrossingOutsideCouplingZone,
    NonlocalUnitary,
    PreconditionViolated,
    RouteNotFound,
)
from causal_ops.geometry import Diamond, Point, Worldline, find_probe_route
from causal_ops.hybrid import HybridNet, WorldlineSystem
from causal_ops.fv import (
    FvMeasurement,
    NotFactorable,
    ScatteringMorphism,
    SemilocalisableDecomposition,
    compose_measurements,
    compose_semilocalisable,
    factor_scattering,
    fv_from_semilocalisable,
    induced_channel,
    induced_observable,
    scattering_from_route,
    update_nonselective,
    update_selective,
)
from causal_ops.quantum import (
    Channel,
    DensityOp,
    Effect,
    TensorSpace,
    UnitaryOp,
    choi_distance,
    dagger,
    identity_channel,
    random_channel,
    random_effect,
    random_state,
    random_unitary,
    stinespring,
    tensor_embed,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def P(t, x):
    return Point(F(t), F(x))


def vertical(x):
    return Worldline((P(0, x),), initial_velocity=0, final_velocity=0)


def swap_matrix(d):
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def identity_theta(space, system_labels, probe_labels):
    return ScatteringMorphism(
        space=space,
        u=UnitaryOp(space, np.eye(space.dim)),
        interactions=(),
        system_labels=system_labels,
        probe_labels=probe_labels,
    )


SP = TensorSpace((("s", 2), ("p", 2)))


class TestInducedObservable:
    def test_identity_theta_gives_scalar(self):
        theta = identity_theta(SP, ("s",), ("p",))
        sigma = random_state(TensorSpace((("p", 2),)), 3)
        b = random_effect(TensorSpace((("p", 2),)), 4)
        eps = induced_observable(theta, sigma, b)
        scalar = np.trace(sigma.mat @ b.mat)
        assert np.max(np.abs(eps - scalar * I2)) < 1e-12

    def test_swap_transplants_effect(self):
        theta = ScatteringMorphism(
            space=SP,
            u=UnitaryOp(SP, swap_matrix(2)),
            interactions=((P(0, 0), frozenset({"s", "p"})),),
            system_labels=("s",),
            probe_labels=("p",),
        )
        sigma = random_state(TensorSpace((("p", 2),)), 5)
        b = random_effect(TensorSpace((("p", 2),)), 6)
        eps = induced_observable(theta, sigma, b)
        assert np.max(np.abs(eps - b.mat)) < 1e-12

    def test_unitality(self):
        for seed in range(5):
            u = random_unitary(SP, 50 + seed)
            theta = ScatteringMorphism(SP, u, (), ("s",), ("p",))
            sigma = random_state(TensorSpace((("p", 2),)), seed)
            eps = induced_observable(theta, sigma, np.eye(2))
            assert np.max(np.abs(eps - I2)) < 1e-10

    def test_positive_effect_spectrum(self):
        for seed in range(30):
            u = random_unitary(SP, 800 + seed)
            theta = ScatteringMorphism(SP, u, (), ("s",), ("p",))
            sigma = random_state(TensorSpace((("p", 2),)), 900 + seed)
            b = random_effect(TensorSpace((("p", 2),)), 1000 + seed)
            eps = induced_observable(theta, sigma, b)
            ev = np.linalg.eigvalsh((eps + dagger(eps)) / 2)
            assert ev[0] > -1e-10 and ev[-1] < 1 + 1e-10


class TestUpdates:
    def test_identity_theta_selective(self):
        theta = identity_theta(SP, ("s",), ("p",))
        sigma = random_state(TensorSpace((("p", 2),)), 7)
        b = random_effect(TensorSpace((("p", 2),)), 8)
        omega = random_state(TensorSpace((("s", 2),)), 9)
        unnorm, prob, post = update_selective(theta, sigma, b, omega)
        pb = float(np.trace(sigma.mat @ b.mat).real)
        assert abs(prob - pb) < 1e-12
        assert np.max(np.abs(unnorm - pb * omega.mat)) < 1e-12
        assert np.max(np.abs(post.mat - omega.mat)) < 1e-12

    def test_probability_additivity(self):
        for seed in range(10):
            u = random_unitary(SP, 60 + seed)
            theta = ScatteringMorphism(SP, u, (), ("s",), ("p",))
            sigma = random_state(TensorSpace((("p", 2),)), 70 + seed)
            b = random_effect(TensorSpace((("p", 2),)), 80 + seed)
            omega = random_state(TensorSpace((("s", 2),)), 90 + seed)
            _, p1, _ = update_selective(theta, sigma, b, omega)
            _, p2, _ = update_selective(theta, sigma, b.complement(), omega)
            assert abs(p1 + p2 - 1.0) < 1e-10

    def test_zero_probability_signal(self):
        theta = identity_theta(SP, ("s",), ("p",))
        sigma = DensityOp(TensorSpace((("p", 2),)), np.diag([1.0, 0.0]))
        b = Effect(TensorSpace((("p", 2),)), np.diag([0.0, 1.0]))
        omega = random_state(TensorSpace((("s", 2),)), 1)
        _, prob, post = update_selective(theta, sigma, b, omega)
        assert prob <= 1e-12 and post is None

    def test_nonselective_identity_and_swap(self):
        sigma = random_state(TensorSpace((("p", 2),)), 11)
        omega = random_state(TensorSpace((("s", 2),)), 12)
        theta = identity_theta(SP, ("s",), ("p",))
        assert np.max(np.abs(update_nonselective(theta, sigma, omega).mat - omega.mat)) < 1e-12
        theta_swap = ScatteringMorphism(
            SP, UnitaryOp(SP, swap_matrix(2)), (), ("s",), ("p",)
        )
        out = update_nonselective(theta_swap, sigma, omega)
        assert np.max(np.abs(out.mat - sigma.mat)) < 1e-12

    def test_stinespring_route_reproduces_channel(self):
        # couple a probe to one system worldline with the dilation unitary of
        # the phase flip; the nonselective update must equal the channel
        flip = Channel(TensorSpace((("s", 2),)), TensorSpace((("s", 2),)),
                       [np.sqrt(0.5) * I2, np.sqrt(0.5) * Z])
        env, tau, u = stinespring(flip, env_label="p")
        system = HybridNet((WorldlineSystem("s", vertical(0), 2),))
        route = Worldline((P(0, -1), P(2, 1)), initial_velocity=1, final_velocity=1)
        k = Diamond(P(0, 0), P(2, 0), closed=True)
        theta = scattering_from_route(route, system, "p", 2, k, [(("s", "p"), u.mat)])
        omega = random_state(TensorSpace((("s", 2),)), 21)
        out = update_nonselective(theta, tau, omega)
        assert np.max(np.abs(out.mat - flip.apply(omega.mat))) < 1e-12

    def test_two_qubit_projective_update_matches_kraus(self):
        # incomplete two-outcome projective operation realized through its
        # dilation, applied as one scattering on (A, C) with an ancilla probe
        phi = np.zeros(4, dtype=complex)
        phi[0] = phi[3] = 1 / np.sqrt(2)
        proj = np.outer(phi, phi.conj())
        ac = TensorSpace((("A", 2), ("C", 2)))
        bob = Channel(ac, ac, [proj, np.eye(4) - proj])
        env, tau, u = stinespring(bob, env_label="p")
        space = ac * env
        theta = ScatteringMorphism(
            space,
            UnitaryOp(space, dagger(u.mat)),
            ((P(0, 0), frozenset({"A", "p"})), (P(0, 0), frozenset({"C", "p"}))),
            ("A", "C"),
            ("p",),
        )
        zero2 = np.zeros((4, 4), dtype=complex)
        zero2[0, 0] = 1.0  # |00><00|
        omega = DensityOp(ac, zero2)
        out = update_nonselective(theta, tau, omega)
        assert np.max(np.abs(out.mat - bob.apply(omega.mat))) < 1e-12


class TestScatteringFromRoute:
    def setup_method(self):
        self.system = HybridNet(
            (WorldlineSystem("A", vertical(-2), 2), WorldlineSystem("C", vertical(3), 2))
        )
        self.o_a = Diamond(P(0, -2), P(1, -2))
        self.o_c = Diamond(P(3, 3), P(4, 3))
        self.route = find_probe_route(self.o_a, self.o_c, vertical(-2), vertical(3))
        assert self.route is not None
        self.k = Diamond(self.route.vertices[0], self.route.vertices[1], closed=True)
        self.space = self.system.space * TensorSpace((("B", 2),))

    def test_frozen_operator_ordering(self):
        u_bc = random_unitary(TensorSpace((("B", 2), ("C", 2))), 31).mat
        u_ab = random_unitary(TensorSpace((("A", 2), ("B", 2))), 32).mat
        theta = scattering_from_route(
            self.route, self.system, "B", 2, self.k,
            [(("B", "C"), u_bc), (("A", "B"), u_ab)],
        )
        w1 = tensor_embed(u_bc, ["B", "C"], self.space)
        w2 = tensor_embed(u_ab, ["A", "B"], self.space)
        assert np.max(np.abs(theta.u.mat - dagger(w1) @ dagger(w2))) < 1e-12
        # the frozen ordering factorizes in the late-BC form
        res = factor_scattering(theta, (("A",), ("B",), ("C",)))
        assert not isinstance(res, NotFactorable)
        assert [lbl for _, lbl in sorted((e[0].t, sorted(e[1])) for e in theta.interactions)]

    def test_crossing_events_recorded_in_order(self):
        u_bc = random_unitary(TensorSpace((("B", 2), ("C", 2))), 33).mat
        u_ab = random_unitary(TensorSpace((("A", 2), ("B", 2))), 34).mat
        theta = scattering_from_route(
            self.route, self.system, "B", 2, self.k,
            [(("B", "C"), u_bc), (("A", "B"), u_ab)],
        )
        assert len(theta.interactions) == 2
        (e1, l1), (e2, l2) = theta.interactions
        assert e1.t < e2.t
        assert l1 == {"B", "C"} and l2 == {"A", "B"}

    def test_no_crossing_probe_only(self):
        far = Worldline((P(0, 50),), initial_velocity=0, final_velocity=0)
        k = Diamond(P(0, 50), P(1, 50), closed=True)
        u_b = random_unitary(TensorSpace((("B", 2),)), 35).mat
        theta = scattering_from_route(far, self.system, "B", 2, k, [(("B",), u_b)])
        assert theta.interactions == ()
        # system observables are fixed up to roundoff in u^dag u
        a = tensor_embed(X, ["A"], self.space)
        assert np.max(np.abs(theta.heisenberg(a) - a)) <= 1e-12

    def test_nonlocal_unitary_rejected(self):
        u_ac = random_unitary(TensorSpace((("A", 2), ("C", 2))), 36).mat
        with pytest.raises(NonlocalUnitary):
            scattering_from_route(
                self.route, self.system, "B", 2, self.k,
                [(("A", "C"), u_ac), (("A", "B"), np.eye(4))],
            )

    def test_crossing_outside_zone_rejected(self):
        small_k = Diamond(self.route.vertices[0], P(self.route.vertices[0].t + F(1, 4),
                                                    self.route.vertices[0].x), closed=True)
        with pytest.raises(CrossingOutsideCouplingZone):
            scattering_from_route(self.route, self.system, "B", 2, small_k,
                                  [(("B", "C"), np.eye(4)), (("A", "B"), np.eye(4))])


class TestFactorScattering:
    ABC = TensorSpace((("A", 2), ("B", 2), ("C", 2)))

    def _theta(self, u):
        return ScatteringMorphism(self.ABC, UnitaryOp(self.ABC, u), (), ("A", "C"), ("B",))

    def test_ab_only(self):
        v = random_unitary(TensorSpace((("A", 2), ("B", 2))), 41).mat
        res = factor_scattering(self._theta(tensor_embed(v, ["A", "B"], self.ABC)),
                                (("A",), ("B",), ("C",)))
        assert not isinstance(res, NotFactorable)
        psi, chi = res
        # psi acts trivially on the C sector it was extracted from
        c_emb = tensor_embed(Z, ["C*"], TensorSpace((("B*", 2), ("C*", 2))))
        assert np.max(np.abs(psi.mat @ c_emb @ dagger(psi.mat) - c_emb)) < 1e-9

    def test_cnot_across_cut_not_factorable(self):
        cnot = np.zeros((4, 4), dtype=complex)
        for a in range(2):
            for c in range(2):
                cnot[2 * a + (c ^ a), 2 * a + c] = 1
        space = TensorSpace((("A", 2), ("C", 2)))
        theta = ScatteringMorphism(space, UnitaryOp(space, cnot), (), ("A", "C"), ())
        res = factor_scattering(theta, (("A",), (), ("C",)))
        assert isinstance(res, NotFactorable)
        assert res.stage == "c-sector"
        assert res.deviation > 0.1

    def test_structured_round_trip(self):
        for seed in range(20):
            u_bc = random_unitary(TensorSpace((("B", 2), ("C", 2))), 600 + seed).mat
            u_ab = random_unitary(TensorSpace((("A", 2), ("B", 2))), 700 + seed).mat
            u = tensor_embed(u_bc, ["B", "C"], self.ABC) @ tensor_embed(u_ab, ["A", "B"], self.ABC)
            res = factor_scattering(self._theta(u), (("A",), ("B",), ("C",)))
            assert not isinstance(res, NotFactorable)
            psi, chi = res
            u_rec = tensor_embed(psi.mat, ["B", "C"], self.ABC) @ tensor_embed(
                chi.mat, ["A", "B"], self.ABC
            )
            from causal_ops.fv import _unitary_choi_distance

            assert _unitary_choi_distance(u_rec, u) <= 1e-9

    def test_haar_random_not_factorable(self):
        for seed in range(10):
            u = random_unitary(self.ABC, 350 + seed).mat
            res = factor_scattering(self._theta(u), (("A",), ("B",), ("C",)))
            assert isinstance(res, NotFactorable)
            assert res.deviation > 1e-3


class TestComposeMeasurements:
    def _measurement(self, x_pos, t0, seed, system):
        route = Worldline((P(t0, x_pos - 1), P(t0 + 2, x_pos + 1)),
                          initial_velocity=0, final_velocity=0)
        k = Diamond(P(t0, x_pos), P(t0 + 2, x_pos), closed=True)
        u = random_unitary(TensorSpace((("s", 2), ("p", 2))), seed).mat
        label = "s1" if x_pos < 0 else "s2"
        theta = scattering_from_route(route, system, "p", 2, k, [((label, "p"), u)])
        ps = TensorSpace((("p", 2),))
        return FvMeasurement(
            probe=(WorldlineSystem("p", route, 2),),
            coupling=k,
            theta=theta,
            sigma=random_state(ps, seed + 1),
            effect=random_effect(ps, seed + 2),
        )

    def test_spacelike_measurements_commute(self):
        system = HybridNet(
            (WorldlineSystem("s1", vertical(-10), 2), WorldlineSystem("s2", vertical(10), 2))
        )
        m1 = self._measurement(-10, 0, 71, system)
        m2 = self._measurement(10, 0, 73, system)
        omega = random_state(system.space, 77)
        rep = compose_measurements([m1, m2], omega)
        assert rep["swap_deviation"] <= 1e-10
        assert len(rep["expectations"]) == 2

    def test_single_reduces_to_selective(self):
        system = HybridNet(
            (WorldlineSystem("s1", vertical(-10), 2), WorldlineSystem("s2", vertical(10), 2))
        )
        m = self._measurement(-10, 0, 81, system)
        omega = random_state(system.space, 83)
        rep = compose_measurements([m], omega)
        unnorm, prob, post = update_selective(m.theta, m.sigma, m.effect, omega)
        assert np.max(np.abs(rep["final_unnormalized"] - unnorm)) < 1e-12
        assert abs(rep["probability"] - prob) < 1e-12

    def test_unordered_zones_rejected(self):
        system = HybridNet(
            (WorldlineSystem("s1", vertical(-10), 2), WorldlineSystem("s2", vertical(10), 2))
        )
        m1 = self._measurement(-10, 0, 91, system)
        m2 = self._measurement(-10, -5, 93, system)  # strictly earlier zone listed second
        omega = random_state(system.space, 95)
        with pytest.raises(PreconditionViolated):
            compose_measurements([m1, m2], omega)


def classical_feedforward_channel():
    """rho -> sum_i (X^i (x) P_i) rho (X^i (x) P_i): flip A on C's Z outcome."""
    ac = TensorSpace((("A", 2), ("C", 2)))
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    k0 = np.kron(I2, p0)
    k1 = np.kron(X, p1)
    return Channel(ac, ac, [k0, k1])


class TestFvFromSemilocalisable:
    def setup_method(self):
        self.o_a = Diamond(P(0, -2), P(1, -2))
        self.o_c = Diamond(P(3, 3), P(4, 3))
        self.gamma_a = vertical(-2)
        self.gamma_c = vertical(3)
        self.geometry = (self.o_a, self.o_c, self.gamma_a, self.gamma_c)

    def _decomposition_for(self, l_bc, l_ab, rho_b):
        return SemilocalisableDecomposition(
            b_dim=rho_b.space.dim, rho_b=rho_b, l_bc=l_bc, l_ab=l_ab
        )

    def test_trivial_decomposition(self):
        bspace = TensorSpace((("B", 1),))
        bc = TensorSpace((("B", 1), ("C", 2)))
        ab = TensorSpace((("A", 2), ("B", 1)))
        d = self._decomposition_for(
            identity_channel(bc), identity_channel(ab), DensityOp(bspace, np.eye(1))
        )
        m = fv_from_semilocalisable(d, self.geometry)
        assert m.nonselective
        ch = induced_channel(m.theta, m.sigma)
        target = identity_channel(TensorSpace((("A", 2), ("C", 2))))
        assert choi_distance(ch.choi, target.choi) <= 1e-9

    def test_measure_and_feedforward(self):
        # copy C's Z value into B, then flip A conditioned on B
        bc = TensorSpace((("B", 2), ("C", 2)))
        ab = TensorSpace((("A", 2), ("B", 2)))
        cnot_cb = np.zeros((4, 4), dtype=complex)  # control C (2nd), target B (1st)
        for b in range(2):
            for c in range(2):
                cnot_cb[2 * (b ^ c) + c, 2 * b + c] = 1
        cnot_ba = np.zeros((4, 4), dtype=complex)  # control B (2nd), target A (1st)
        for a in range(2):
            for b in range(2):
                cnot_ba[2 * (a ^ b) + b, 2 * a + b] = 1
        bspace = TensorSpace((("B", 2),))
        d = self._decomposition_for(
            Channel(bc, bc, [cnot_cb]),
            Channel(ab, ab, [cnot_ba]),
            DensityOp(bspace, np.diag([1.0, 0.0])),
        )
        composed = d.compose()
        oracle = classical_feedforward_channel()
        assert choi_distance(composed.choi, oracle.choi) <= 1e-10
        m = fv_from_semilocalisable(d, self.geometry)
        ch = induced_channel(m.theta, m.sigma)
        assert choi_distance(ch.choi, oracle.choi) <= 1e-9

    def test_random_decompositions_reproduced(self):
        bc = TensorSpace((("B", 2), ("C", 2)))
        ab = TensorSpace((("A", 2), ("B", 2)))
        bspace = TensorSpace((("B", 2),))
        for seed in range(5):
            d = self._decomposition_for(
                random_channel(bc, 2, 400 + seed),
                random_channel(ab, 2, 500 + seed),
                random_state(bspace, 600 + seed),
            )
            m = fv_from_semilocalisable(d, self.geometry)
            ch = induced_channel(m.theta, m.sigma)
            assert choi_distance(ch.choi, d.compose().choi) <= 1e-9

    def test_route_not_found(self):
        runaway = Worldline((P(F(1, 2), -2),), initial_velocity=0, final_velocity=-1)
        bc = TensorSpace((("B", 1), ("C", 2)))
        ab = TensorSpace((("A", 2), ("B", 1)))
        d = self._decomposition_for(
            identity_channel(bc), identity_channel(ab),
            DensityOp(TensorSpace((("B", 1),)), np.eye(1)),
        )
        with pytest.raises(RouteNotFound):
            fv_from_semilocalisable(d, (self.o_a, self.o_c, runaway, self.gamma_c))


class TestLocalityProperties:
    """Structural locality of route-built scatterings."""

    def setup_method(self):
        self.o_a = Diamond(P(0, -2), P(1, -2))
        self.o_c = Diamond(P(3, 3), P(4, 3))
        self.gamma_a = vertical(-2)
        self.gamma_c = vertical(3)
        self.system = HybridNet(
            (WorldlineSystem("A", self.gamma_a, 2), WorldlineSystem("C", self.gamma_c, 2))
        )

    def _c_only_theta(self, seed):
        # probe crossing only gamma_C: a segment from the left of gamma_C,
        # turning to run parallel after the crossing
        route = Worldline((P(-1, 2), P(0, 3), P(1, F(7, 2))),
                          initial_velocity=0, final_velocity=F(1, 2))
        k = Diamond(P(-1, 3), P(1, 3), closed=True)
        u = random_unitary(TensorSpace((("C", 2), ("B", 2))), seed).mat
        return scattering_from_route(route, self.system, "B", 2, k, [(("C", "B"), u)])

    def test_untouched_system_factor_fixed_exactly(self):
        theta = self._c_only_theta(111)
        space = theta.space
        for seed in range(20):
            a = random_effect(TensorSpace((("A", 2),)), 130 + seed).mat
            a_emb = tensor_embed(a, ["A"], space)
            assert np.max(np.abs(theta.heisenberg(a_emb) - a_emb)) <= 1e-12

    def test_update_preserves_remote_expectations(self):
        theta = self._c_only_theta(112)
        sigma = random_state(TensorSpace((("B", 2),)), 113)
        for seed in range(20):
            omega = random_state(self.system.space, 150 + seed)
            a = random_effect(TensorSpace((("A", 2),)), 170 + seed).mat
            before = np.trace(omega.mat @ tensor_embed(a, ["A"], self.system.space))
            out = update_nonselective(theta, sigma, omega)
            after = np.trace(out.mat @ tensor_embed(a, ["A"], self.system.space))
            assert abs(before - after) <= 1e-10

    def test_probe_only_effect_no_information(self):
        # effect on a probe factor that never crosses a system worldline
        far = Worldline((P(0, 50),), initial_velocity=0, final_velocity=0)
        k = Diamond(P(0, 50), P(1, 50), closed=True)
        theta = scattering_from_route(
            far, self.system, "B", 2, k,
            [(("B",), random_unitary(TensorSpace((("B", 2),)), 115).mat)],
        )
        sigma = random_state(TensorSpace((("B", 2),)), 116)
        for seed in range(20):
            b = random_effect(TensorSpace((("B", 2),)), 200 + seed)
            eps = induced_observable(theta, sigma, b)
            # the coupling rotates the probe before b is read out
            u_b = theta.u.mat  # acts on B only up to embedding
            scalar = np.trace(
                tensor_embed(sigma.mat, ["B"], theta.space)
                @ theta.heisenberg(tensor_embed(b.mat, ["B"], theta.space))
            ) / self.system.space.dim
            assert np.max(np.abs(eps - scalar * np.eye(4))) <= 1e-10

    def test_nonselective_update_is_valid_state(self):
        theta = self._c_only_theta(117)
        sigma = random_state(TensorSpace((("B", 2),)), 118)
        for seed in range(30):
            omega = random_state(self.system.space, 300 + seed)
            update_nonselective(theta, sigma, omega)  # DensityOp validates

    def test_forward_region_maps_into_backward_descriptor(self):
        # Theta(observables of a late region on gamma_C) supported on the
        # labels of an early generating interval containing gamma_C and the
        # probe route but not gamma_A
        route = find_probe_route(self.o_a, self.o_c, self.gamma_a, self.gamma_c)
        k = Diamond(route.vertices[0], route.vertices[1], closed=True)
        u_bc = random_unitary(TensorSpace((("B", 2), ("C", 2))), 119).mat
        u_ab = random_unitary(TensorSpace((("A", 2), ("B", 2))), 120).mat
        theta = scattering_from_route(route, self.system, "B", 2, k,
                                      [(("B", "C"), u_bc), (("A", "B"), u_ab)])
        space = theta.space
        # late observable on C; target label set {B, C}
        for seed in range(20):
            c = random_effect(TensorSpace((("C", 2),)), 400 + seed).mat
            x = theta.heisenberg(tensor_embed(c, ["C"], space))
            from causal_ops.quantum import partial_trace

            y = partial_trace(x, space, ["C", "B"]) / 2
            resid = np.linalg.norm(x - tensor_embed(y, ["C", "B"], space))
            assert resid <= 1e-9
