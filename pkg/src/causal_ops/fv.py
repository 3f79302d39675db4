"""Probe-coupled measurements on worldline nets.

A measurement couples probe factors to system factors through a scattering
morphism Theta(a) = u a u^dag whose interactions happen at exact worldline
crossings inside a compact coupling diamond.  Conventions frozen here:

* Theta acts on observables (Heisenberg); the Schrodinger state update
  conjugates by u^dag, so rho' = Tr_probe(u^dag (rho (x) sigma) u).
* Coupling unitaries supplied per crossing are Schrodinger-picture; with
  crossings at times t_1 < ... < t_n carrying unitaries w_1 ... w_n, the
  scattering unitary is u = w_1^dag w_2^dag ... w_n^dag, which makes the
  update apply the couplings in time order and makes a route that meets C
  before A factor as (id_A (x) psi_BC) o (chi_AB (x) id_C).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .errors import (
    CrossingOutsideCouplingZone,
    DimensionMismatch,
    NonlocalUnitary,
    NotTracePreserving,
    PreconditionViolated,
    RouteNotFound,
)
from .geometry import Diamond, Point, Worldline
from .hybrid import HybridNet, WorldlineSystem
from .quantum import (
    Channel,
    DensityOp,
    Effect,
    TensorSpace,
    UnitaryOp,
    channel_from_choi,
    dagger,
    matrix_units,
    partial_trace,
    stinespring,
    tensor_embed,
)

ZERO_PROBABILITY = 1e-12


@dataclass(frozen=True)
class ScatteringMorphism:
    """*-automorphism Theta(a) = u a u^dag with its interaction events."""

    space: TensorSpace
    u: UnitaryOp
    interactions: tuple  # ((Point, frozenset of labels), ...) in time order
    system_labels: tuple
    probe_labels: tuple

    def __post_init__(self):
        if self.u.space.dim != self.space.dim:
            raise DimensionMismatch("scattering unitary does not match the space")
        declared = set(self.system_labels) | set(self.probe_labels)
        if declared != set(self.space.labels):
            raise DimensionMismatch("system/probe labels must partition the space")

    def heisenberg(self, a: np.ndarray) -> np.ndarray:
        return self.u.mat @ a @ dagger(self.u.mat)

    @property
    def touched_labels(self) -> frozenset:
        out = frozenset()
        for _, labels in self.interactions:
            out |= labels
        return out

    def system_space(self) -> TensorSpace:
        return self.space.restrict(self.system_labels)

    def probe_space(self) -> TensorSpace:
        return self.space.restrict(self.probe_labels)


@dataclass(frozen=True)
class FvMeasurement:
    """Probe fragment + coupling diamond + scattering + probe state + effect."""

    probe: tuple  # WorldlineSystem fragments carrying the probe factors
    coupling: Diamond
    theta: ScatteringMorphism
    sigma: DensityOp
    effect: Effect

    def __post_init__(self):
        probe_space = self.theta.probe_space()
        if self.sigma.space.dim != probe_space.dim:
            raise DimensionMismatch("probe state does not live on the probe factors")
        if self.effect.space.dim != probe_space.dim:
            raise DimensionMismatch("probe effect does not live on the probe factors")
        closure = self.coupling.closure()
        for event, _ in self.theta.interactions:
            if not closure.contains(event):
                raise CrossingOutsideCouplingZone(f"interaction at {event} outside the zone")

    @property
    def nonselective(self) -> bool:
        return bool(
            np.max(np.abs(self.effect.mat - np.eye(self.effect.space.dim))) <= 1e-12
        )


def _arrange_product(space: TensorSpace, blocks) -> np.ndarray:
    """Kron the (labels, matrix) blocks and permute to the space's order."""
    labels = []
    mat = None
    for lbls, m in blocks:
        labels.extend(lbls)
        mat = np.asarray(m, dtype=np.complex128) if mat is None else np.kron(mat, m)
    return tensor_embed(mat, labels, space)


def induced_observable(theta: ScatteringMorphism, sigma: DensityOp, b) -> np.ndarray:
    """System observable with the same statistics as the probe effect b.

    Computes the partial expectation of Theta(1 (x) b) in the probe state.
    """
    b_mat = b.mat if isinstance(b, Effect) else np.asarray(b, dtype=np.complex128)
    probe = theta.probe_space()
    if b_mat.shape[0] != probe.dim:
        raise DimensionMismatch("effect dim != probe dim")
    b_emb = tensor_embed(b_mat, probe.labels, theta.space)
    sig_emb = tensor_embed(sigma.mat, probe.labels, theta.space)
    x = theta.heisenberg(b_emb)
    return partial_trace(sig_emb @ x, theta.space, theta.system_labels)


def _update_raw(theta: ScatteringMorphism, sigma_mat, omega_mat, b_mat=None) -> np.ndarray:
    """Unnormalized Schrodinger update on raw matrices."""
    sys_labels = list(theta.system_labels)
    probe_labels = list(theta.probe_labels)
    full = _arrange_product(theta.space, [(sys_labels, omega_mat), (probe_labels, sigma_mat)])
    u = theta.u.mat
    moved = dagger(u) @ full @ u
    if b_mat is not None:
        moved = moved @ tensor_embed(b_mat, probe_labels, theta.space)
    return partial_trace(moved, theta.space, sys_labels)


def update_selective(theta: ScatteringMorphism, sigma: DensityOp, b: Effect, omega: DensityOp):
    """Post-selected update: (unnormalized matrix, probability, state or None).

    None in the last slot signals zero probability (below 1e-12).
    """
    out = _update_raw(theta, sigma.mat, omega.mat, b.mat)
    prob = float(np.trace(out).real)
    sys_space = theta.system_space()
    if prob <= ZERO_PROBABILITY:
        return out, prob, None
    return out, prob, DensityOp(sys_space, out / prob)


def update_nonselective(theta: ScatteringMorphism, sigma: DensityOp, omega: DensityOp) -> DensityOp:
    """Trace out the probe after the coupling; independent of any effect."""
    out = _update_raw(theta, sigma.mat, omega.mat)
    return DensityOp(theta.system_space(), out)


def induced_channel(theta: ScatteringMorphism, sigma: DensityOp) -> Channel:
    """The nonselective update as a channel on the system factors.

    When the probe factors sit at the end of the space (the layout built by
    scattering_from_route), the Kraus operators are sliced directly out of
    the scattering unitary: K_{b,s} = sqrt(p_s) (1 (x) <b|) u^dag (1 (x) |s>)
    over the probe's output basis and the eigenvectors of sigma.
    """
    sys_space = theta.system_space()
    d = sys_space.dim
    n_probe = len(theta.probe_labels)
    if n_probe and theta.space.labels[-n_probe:] == tuple(theta.probe_labels):
        dp = theta.probe_space().dim
        u_dag = dagger(theta.u.mat).reshape(d, dp, d, dp)
        ev, vecs = np.linalg.eigh(sigma.mat)
        kraus = []
        for p_s, v in zip(ev, vecs.T):
            if p_s < 1e-14:
                continue
            block = np.sqrt(p_s) * np.einsum("abij,j->abi", u_dag, v)
            kraus.extend(block[:, b, :] for b in range(dp))
        j = np.zeros((d * d, d * d), dtype=np.complex128)
        for k in kraus:
            w = k.T.reshape(-1)
            j += np.outer(w, w.conj())
        return channel_from_choi(j, sys_space, sys_space)
    j = np.zeros((d * d, d * d), dtype=np.complex128)
    units = matrix_units(d)
    for i in range(d):
        for k in range(d):
            out = _update_raw(theta, sigma.mat, units[i][k])
            j[i * d : (i + 1) * d, k * d : (k + 1) * d] = out
    return channel_from_choi(j, sys_space, sys_space)


def compose_measurements(measurements: Sequence[FvMeasurement], omega: DensityOp) -> dict:
    """Apply causally ordered measurements; per-party expectations use the
    state updated by the strictly earlier parties (unnormalized composition).

    When adjacent coupling zones are causally disjoint the two application
    orders are compared; the maximal deviation is reported.
    """
    if not geo.check_causal_order([m.coupling for m in measurements]):
        raise PreconditionViolated("coupling zones are not causally ordered as listed")
    state = omega.mat
    expectations = []
    swap_dev = 0.0
    for idx, m in enumerate(measurements):
        eps = induced_observable(m.theta, m.sigma, m.effect)
        expectations.append(float(np.trace(state @ eps).real))
        nxt = state_after = _update_raw(m.theta, m.sigma.mat, state, m.effect.mat)
        if idx + 1 < len(measurements):
            m2 = measurements[idx + 1]
            if geo.causally_disjoint(m.coupling, m2.coupling):
                ab = _update_raw(m2.theta, m2.sigma.mat, state_after, m2.effect.mat)
                ba = _update_raw(
                    m.theta,
                    m.sigma.mat,
                    _update_raw(m2.theta, m2.sigma.mat, state, m2.effect.mat),
                    m.effect.mat,
                )
                swap_dev = max(swap_dev, float(np.max(np.abs(ab - ba))))
        state = nxt
    prob = float(np.trace(state).real)
    final = None
    if prob > ZERO_PROBABILITY:
        final = DensityOp(omega.space, state / prob)
    return {
        "final_unnormalized": state,
        "probability": prob,
        "final_state": final,
        "expectations": expectations,
        "swap_deviation": swap_dev,
    }


def scattering_from_route(
    route: Worldline,
    system: HybridNet,
    probe_label: str,
    probe_dim: int,
    k: Diamond,
    unitaries: Sequence,
) -> ScatteringMorphism:
    """Scattering morphism of a probe travelling along a route.

    unitaries is a list of (labels, matrix) pairs aligned with the route's
    system-worldline crossings in time order; each matrix is indexed in its
    declared label order and may touch only the probe and the crossed
    system factor.  With no crossings, only probe-local unitaries are
    accepted and the result is a pure tensor of single-factor rotations.
    """
    closure = k.closure()
    crossings = []
    for s in system.systems:
        for p in geo.worldline_crossings(route, s.worldline):
            if not closure.contains(p):
                raise CrossingOutsideCouplingZone(
                    f"route crosses {s.label} at {p}, outside the coupling diamond"
                )
            crossings.append((p, s.label))
    crossings.sort(key=lambda c: (c[0].t, c[1]))
    space = system.space * TensorSpace(((probe_label, probe_dim),))
    unitaries = list(unitaries)
    if crossings:
        if len(unitaries) != len(crossings):
            raise NonlocalUnitary(
                f"{len(crossings)} crossings but {len(unitaries)} unitaries supplied"
            )
        for (point, sys_label), (labels, _) in zip(crossings, unitaries):
            if set(labels) != {probe_label, sys_label}:
                raise NonlocalUnitary(
                    f"unitary at {point} declares {labels}, expected "
                    f"{{{sys_label!r}, {probe_label!r}}}"
                )
    else:
        for labels, _ in unitaries:
            if set(labels) != {probe_label}:
                raise NonlocalUnitary("with no crossings only probe-local unitaries are allowed")
    u = np.eye(space.dim, dtype=np.complex128)
    for labels, mat in unitaries:
        emb = tensor_embed(np.asarray(mat, dtype=np.complex128), list(labels), space)
        u = u @ dagger(emb)  # first coupling's dagger ends up leftmost
    interactions = tuple(
        (point, frozenset({probe_label, sys_label})) for (point, sys_label) in crossings
    )
    return ScatteringMorphism(
        space=space,
        u=UnitaryOp(space, u),
        interactions=interactions,
        system_labels=system.labels,
        probe_labels=(probe_label,),
    )


# ---------------------------------------------------------------------------
# Factorization of a scattering morphism across an A | B | C partition.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NotFactorable:
    """Witness that Theta does not factor as (id_A x psi_BC) o (chi_AB x id_C)."""

    stage: str
    witness: tuple
    deviation: float

    def __bool__(self):
        return False


def _unitary_choi_vec(u: np.ndarray) -> np.ndarray:
    return np.asarray(u).T.reshape(-1)


def _unitary_choi_distance(u1: np.ndarray, u2: np.ndarray) -> float:
    w1 = _unitary_choi_vec(u1)
    w2 = _unitary_choi_vec(u2)
    return float(np.linalg.norm(np.outer(w1, w1.conj()) - np.outer(w2, w2.conj())))


def _hom_to_unitary(gamma_units, d_small: int, d_mult: int):
    """Unitary u with hom(c) = u (1_mult (x) c) u^dag, from matrix units.

    gamma_units[i][j] is hom(E_ij) on a space of dim d_mult * d_small; the
    multiplicity basis comes from the range of hom(E_00).
    """
    p0 = gamma_units[0][0]
    ev, vecs = np.linalg.eigh((p0 + dagger(p0)) / 2)
    cols = [vecs[:, i] for i in range(len(ev)) if ev[i] > 0.5]
    if len(cols) != d_mult:
        return None
    d_tot = d_mult * d_small
    u = np.zeros((d_tot, d_tot), dtype=np.complex128)
    for i in range(d_small):
        gi = gamma_units[i][0]
        for j, w in enumerate(cols):
            u[:, j * d_small + i] = gi @ w
    if np.max(np.abs(dagger(u) @ u - np.eye(d_tot))) > 1e-8:
        return None
    return u


def factor_scattering(theta: ScatteringMorphism, partition):
    """Split Theta into a BC part applied late and an AB part applied early.

    partition = (a_labels, b_labels, c_labels) covering theta's space.
    Returns (psi_BC, chi_AB) as unitaries on the (B, C) and (A, B) blocks, or
    a NotFactorable witness.  Conjugating by (1_B (x) c)-moving unitaries is
    unique up to a multiplicity-basis rotation, which is absorbed into chi.
    """
    a_labels, b_labels, c_labels = [list(p) for p in partition]
    all_labels = a_labels + b_labels + c_labels
    if set(all_labels) != set(theta.space.labels) or len(all_labels) != len(theta.space.labels):
        raise DimensionMismatch("partition must cover the space exactly once")
    canon = TensorSpace(tuple((lbl, theta.space.dim_of(lbl)) for lbl in all_labels))
    u_can = tensor_embed(theta.u.mat, list(theta.space.labels), canon)
    da = int(np.prod([canon.dim_of(l) for l in a_labels]) or 1)
    db = int(np.prod([canon.dim_of(l) for l in b_labels]) or 1)
    dc = int(np.prod([canon.dim_of(l) for l in c_labels]) or 1)
    dbc, dab = db * dc, da * db
    space_bc = TensorSpace((("B*", db), ("C*", dc)))
    space_abc = TensorSpace((("A*", da), ("B*", db), ("C*", dc)))

    # (1) Theta(1_AB (x) c) must lie in 1_A (x) B(H_BC)
    gamma = [[None] * dc for _ in range(dc)]
    units_c = matrix_units(dc)
    for i in range(dc):
        for j in range(dc):
            x = u_can @ tensor_embed(units_c[i][j], ["C*"], space_abc) @ dagger(u_can)
            y = partial_trace(x, space_abc, ["B*", "C*"]) / da
            dev = float(np.linalg.norm(x - tensor_embed(y, ["B*", "C*"], space_abc)))
            if dev > 1e-9:
                return NotFactorable("c-sector", (i, j), dev)
            gamma[i][j] = y

    # (2) unitary implementing the homomorphism c -> gamma(c)
    u_psi = _hom_to_unitary(gamma, dc, db)
    if u_psi is None:
        return NotFactorable("intertwiner", (), float("nan"))

    # (3) peel psi off; the remainder must fix C pointwise and act on AB
    u2 = dagger(tensor_embed(u_psi, ["B*", "C*"], space_abc)) @ u_can
    chi = [[None] * dab for _ in range(dab)]
    units_ab = matrix_units(dab)
    for i in range(dab):
        for j in range(dab):
            z = u2 @ tensor_embed(units_ab[i][j], ["A*", "B*"], space_abc) @ dagger(u2)
            w = partial_trace(z, space_abc, ["A*", "B*"]) / dc
            dev = float(np.linalg.norm(z - tensor_embed(w, ["A*", "B*"], space_abc)))
            if dev > 1e-9:
                return NotFactorable("ab-sector", (i, j), dev)
            chi[i][j] = w
    u_chi = _hom_to_unitary(chi, dab, 1)
    if u_chi is None:
        return NotFactorable("ab-intertwiner", (), float("nan"))

    # (4) reconstruction check, insensitive to global phases
    u_rec = tensor_embed(u_psi, ["B*", "C*"], space_abc) @ tensor_embed(
        u_chi, ["A*", "B*"], space_abc
    )
    dist = _unitary_choi_distance(u_rec, u_can)
    if dist > 1e-9:
        return NotFactorable("reconstruction", (), dist)
    psi = UnitaryOp(space_bc, u_psi)
    chi_op = UnitaryOp(TensorSpace((("A*", da), ("B*", db))), u_chi)
    return psi, chi_op


# ---------------------------------------------------------------------------
# Semilocalisable data and its realization as a probe measurement.
# ---------------------------------------------------------------------------


@dataclass
class SemilocalisableDecomposition:
    """One-way-communication form of a channel on (A, C).

    l_bc acts on factors (B, C), l_ab on (A, B), rho_b on B; the represented
    channel is rho_AC -> Tr_B((l_ab x id_C)((id_A x l_bc)(rho_AC x rho_b))).
    """

    b_dim: int
    rho_b: DensityOp
    l_bc: Channel
    l_ab: Channel

    def __post_init__(self):
        if self.rho_b.space.dim != self.b_dim:
            raise DimensionMismatch("rho_b dim != b_dim")
        if not (self.l_bc.nonselective and self.l_ab.nonselective):
            raise NotTracePreserving("decomposition components must be nonselective")

    @property
    def dims(self):
        db, dc = self.l_bc.space_in.dims
        da, db2 = self.l_ab.space_in.dims
        if db != self.b_dim or db2 != self.b_dim:
            raise DimensionMismatch("component channels disagree on the B dimension")
        return da, db, dc

    def compose(self) -> Channel:
        return compose_semilocalisable(self.l_bc, self.l_ab, self.rho_b)


def compose_semilocalisable(l_bc: Channel, l_ab: Channel, rho_b: DensityOp) -> Channel:
    """Channel on (A, C) realized by B-mediated one-way communication."""
    db, dc = l_bc.space_in.dims
    da, db2 = l_ab.space_in.dims
    if db != db2 or rho_b.space.dim != db:
        raise DimensionMismatch("B dimensions disagree")
    big = TensorSpace((("A", da), ("B", db), ("C", dc)))
    ac = TensorSpace((("A", da), ("C", dc)))
    k_bc = [tensor_embed(k, ["B", "C"], big) for k in l_bc.kraus]
    k_ab = [tensor_embed(k, ["A", "B"], big) for k in l_ab.kraus]
    dac = da * dc
    units = matrix_units(dac)
    j = np.zeros((dac * dac, dac * dac), dtype=np.complex128)
    for i in range(dac):
        for m in range(dac):
            x = _arrange_product(big, [(["A", "C"], units[i][m]), (["B"], rho_b.mat)])
            x = sum(k @ x @ dagger(k) for k in k_bc)
            x = sum(k @ x @ dagger(k) for k in k_ab)
            out = partial_trace(x, big, ["A", "C"])
            j[i * dac : (i + 1) * dac, m * dac : (m + 1) * dac] = out
    return channel_from_choi(j, ac, ac)


def fv_from_semilocalisable(d: SemilocalisableDecomposition, geometry) -> FvMeasurement:
    """Realize a semilocalisable channel as a nonselective probe measurement.

    geometry = (o_a, o_c, gamma_a, gamma_c).  The components are dilated to
    coupling unitaries, the probe (carrying B and the two dilation
    environments) travels a route meeting gamma_C and then gamma_A, and the
    coupling diamond spans the two crossings.
    """
    o_a, o_c, gamma_a, gamma_c = geometry
    da, db, dc = d.dims
    route = geo.find_probe_route(o_a, o_c, gamma_a, gamma_c)
    if route is None:
        raise RouteNotFound("no causal probe route through both system worldlines")
    p_c, p_a = route.vertices
    coupling = Diamond(p_c, p_a, closed=True)

    env1, tau1, u1 = stinespring(d.l_bc, env_label="E1")  # on (B, C, E1)
    env2, tau2, u2 = stinespring(d.l_ab, env_label="E2")  # on (A, B, E2)
    e1, e2 = env1.dim, env2.dim
    bm = db * e1 * e2

    s1 = TensorSpace((("B", db), ("E1", e1), ("E2", e2), ("C", dc)))
    w1 = tensor_embed(u1.mat, ["B", "C", "E1"], s1)  # indexed as (Bm, C)
    s2 = TensorSpace((("A", da), ("B", db), ("E1", e1), ("E2", e2)))
    w2 = tensor_embed(u2.mat, ["A", "B", "E2"], s2)  # indexed as (A, Bm)

    system = HybridNet(
        (WorldlineSystem("A", gamma_a, da), WorldlineSystem("C", gamma_c, dc))
    )
    theta = scattering_from_route(
        route,
        system,
        probe_label="B",
        probe_dim=bm,
        k=coupling,
        unitaries=[(("B", "C"), w1), (("A", "B"), w2)],
    )
    probe_space = TensorSpace((("B", bm),))
    sigma = DensityOp(probe_space, np.kron(np.kron(d.rho_b.mat, tau1.mat), tau2.mat))
    ident = Effect(probe_space, np.eye(bm))
    probe = (WorldlineSystem("B", route, bm),)
    return FvMeasurement(probe=probe, coupling=coupling, theta=theta, sigma=sigma, effect=ident)
