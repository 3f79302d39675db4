"""Finite-dimensional operators, states, and channels over labeled tensor factors.

Dense complex128 matrices throughout; composite indices are big-endian (the
leftmost factor is the most significant digit).  Numerical contracts: matrices
are Hermitian within 1e-12, PSD down to a relative eigenvalue floor of -1e-9,
and operator equalities hold to 1e-10 unless stated otherwise.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NotPSD, NotTracePreserving

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = 1e-9
EQ_TOL = 1e-10
KRAUS_CUT = 1e-10


@dataclass(frozen=True)
class TensorSpace:
    """Ordered labeled factors of a finite-dimensional tensor product."""

    factors: tuple

    def __post_init__(self):
        facs = tuple((str(lbl), int(d)) for lbl, d in self.factors)
        object.__setattr__(self, "factors", facs)
        if any(d <= 0 for _, d in facs):
            raise DimensionMismatch("factor dimensions must be positive")
        labels = [lbl for lbl, _ in facs]
        if len(set(labels)) != len(labels):
            raise DimensionMismatch(f"duplicate factor labels: {labels}")

    @property
    def labels(self):
        return tuple(lbl for lbl, _ in self.factors)

    @property
    def dims(self):
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.factors else 1

    def dim_of(self, label: str) -> int:
        for lbl, d in self.factors:
            if lbl == label:
                return d
        raise DimensionMismatch(f"no factor {label!r} in {self.labels}")

    def axis(self, label: str) -> int:
        return self.labels.index(label)

    def restrict(self, labels: Sequence[str]) -> "TensorSpace":
        """Subspace of the given labels, kept in this space's order."""
        keep = set(labels)
        missing = keep - set(self.labels)
        if missing:
            raise DimensionMismatch(f"unknown labels {sorted(missing)}")
        return TensorSpace(tuple(f for f in self.factors if f[0] in keep))

    def __mul__(self, other: "TensorSpace") -> "TensorSpace":
        return TensorSpace(self.factors + other.factors)


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, [np.asarray(m, dtype=np.complex128) for m in mats])


def matrix_units(d: int):
    """Matrix-unit basis E_ij of the d x d algebra, indexed [i][j]."""
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            row.append(e)
        out.append(row)
    return out


def tensor_embed(op, on_factors: Sequence[str], space: TensorSpace) -> np.ndarray:
    """Embed op (indexed in on_factors order) as op (x) identity on the full
    space, with legs permuted to the space's global factor order."""
    op = _as_matrix(op)
    on_factors = list(on_factors)
    sub_dims = [space.dim_of(lbl) for lbl in on_factors]
    if op.shape[0] != int(np.prod(sub_dims)):
        raise DimensionMismatch(
            f"operator dim {op.shape[0]} != product of {on_factors} dims {sub_dims}"
        )
    rest = [lbl for lbl in space.labels if lbl not in on_factors]
    rest_dim = int(np.prod([space.dim_of(lbl) for lbl in rest])) if rest else 1
    big = np.kron(op, np.eye(rest_dim, dtype=np.complex128))
    order = on_factors + rest
    dims_in_order = [space.dim_of(lbl) for lbl in order]
    n = len(order)
    legs = big.reshape(dims_in_order + dims_in_order)
    perm = [order.index(lbl) for lbl in space.labels]
    legs = legs.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(legs.reshape(space.dim, space.dim))


def partial_trace(m, space: TensorSpace, keep: Sequence[str]) -> np.ndarray:
    """Trace out every factor not in keep; the result is indexed by the kept
    factors in global order (a 1x1 matrix when keep is empty)."""
    m = _as_matrix(m)
    if m.shape[0] != space.dim:
        raise DimensionMismatch(f"matrix dim {m.shape[0]} != space dim {space.dim}")
    keep_set = set(keep)
    unknown = keep_set - set(space.labels)
    if unknown:
        raise DimensionMismatch(f"unknown labels {sorted(unknown)}")
    n = len(space.factors)
    if n == 0:
        return m.reshape(1, 1)
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise DimensionMismatch("too many factors")
    row = letters[:n]
    col = list(letters[n : 2 * n])
    out_row, out_col = [], []
    for i, lbl in enumerate(space.labels):
        if lbl in keep_set:
            out_row.append(row[i])
            out_col.append(col[i])
        else:
            col[i] = row[i]  # contract
    legs = m.reshape(list(space.dims) * 2)
    sub = f"{row}{''.join(col)}->{''.join(out_row)}{''.join(out_col)}"
    kept_dim = int(np.prod([space.dim_of(l) for l in space.labels if l in keep_set]) or 1)
    return np.einsum(sub, legs).reshape(kept_dim, kept_dim)


def _check_hermitian(m, tol=HERM_TOL, what="matrix"):
    if np.max(np.abs(m - dagger(m))) > tol:
        raise NotPSD(f"{what} is not Hermitian within {tol}")


def min_eig_floor(m):
    """(min, max) eigenvalues of the Hermitian part; PSD contract requires
    min >= -1e-9 * max(1, max)."""
    ev = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return float(ev[0]), float(ev[-1])


def _check_psd(m, what="matrix"):
    lo, hi = min_eig_floor(m)
    if lo < -PSD_FLOOR * max(1.0, hi):
        raise NotPSD(f"{what} has negative eigenvalue {lo}")


@dataclass
class DensityOp:
    """Unit-trace PSD operator on a labeled tensor space."""

    space: TensorSpace
    mat: np.ndarray

    def __post_init__(self):
        self.mat = _as_matrix(self.mat)
        if self.mat.shape[0] != self.space.dim:
            raise DimensionMismatch("density operator dim != space dim")
        _check_hermitian(self.mat, what="density operator")
        _check_psd(self.mat, what="density operator")
        if abs(np.trace(self.mat).real - 1.0) > TRACE_TOL or abs(np.trace(self.mat).imag) > TRACE_TOL:
            raise NotTracePreserving(f"density operator trace {np.trace(self.mat)} != 1")

    def expect(self, observable) -> complex:
        return complex(np.trace(self.mat @ _as_matrix(observable)))


@dataclass
class Effect:
    """Operator between 0 and the identity; a yes/no question."""

    space: TensorSpace
    mat: np.ndarray

    def __post_init__(self):
        self.mat = _as_matrix(self.mat)
        if self.mat.shape[0] != self.space.dim:
            raise DimensionMismatch("effect dim != space dim")
        _check_hermitian(self.mat, tol=1e-10, what="effect")
        lo, hi = min_eig_floor(self.mat)
        if lo < -PSD_FLOOR or hi > 1.0 + PSD_FLOOR:
            raise NotPSD(f"effect spectrum [{lo}, {hi}] escapes [0, 1]")

    def complement(self) -> "Effect":
        return Effect(self.space, np.eye(self.space.dim) - self.mat)


@dataclass
class UnitaryOp:
    space: TensorSpace
    mat: np.ndarray

    def __post_init__(self):
        self.mat = _as_matrix(self.mat)
        if self.mat.shape[0] != self.space.dim:
            raise DimensionMismatch("unitary dim != space dim")
        if np.max(np.abs(dagger(self.mat) @ self.mat - np.eye(self.space.dim))) > 1e-10:
            raise DimensionMismatch("matrix is not unitary within 1e-10")


@dataclass
class Channel:
    """Kraus-form operation; trace-nonincreasing CP map."""

    space_in: TensorSpace
    space_out: TensorSpace
    kraus: list

    def __post_init__(self):
        din, dout = self.space_in.dim, self.space_out.dim
        ops = []
        for k in self.kraus:
            k = np.asarray(k, dtype=np.complex128)
            if k.shape != (dout, din):
                raise DimensionMismatch(f"kraus shape {k.shape} != ({dout}, {din})")
            ops.append(k)
        if not ops:
            raise DimensionMismatch("channel needs at least one Kraus operator")
        self.kraus = ops
        gram = sum(dagger(k) @ k for k in ops)
        ev = np.linalg.eigvalsh((gram + dagger(gram)) / 2)
        if ev[-1] > 1.0 + 1e-9:
            raise NotTracePreserving(f"channel increases trace: max eig {ev[-1]}")
        self._gram = gram
        self._choi = None

    @property
    def nonselective(self) -> bool:
        din = self.space_in.dim
        return bool(np.max(np.abs(self._gram - np.eye(din))) <= 1e-10)

    @property
    def choi(self) -> np.ndarray:
        if self._choi is None:
            self._choi = choi_transform(self)
        return self._choi

    def apply(self, rho) -> np.ndarray:
        rho = _as_matrix(rho)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def apply_state(self, rho: DensityOp) -> DensityOp:
        return DensityOp(self.space_out, self.apply(rho.mat))

    def then(self, other: "Channel") -> "Channel":
        """Composition: self first, then other."""
        if other.space_in.dim != self.space_out.dim:
            raise DimensionMismatch("composition dims do not match")
        ops = [k2 @ k1 for k2 in other.kraus for k1 in self.kraus]
        return Channel(self.space_in, other.space_out, ops)


def identity_channel(space: TensorSpace) -> Channel:
    return Channel(space, space, [np.eye(space.dim, dtype=np.complex128)])


def unitary_channel(u: UnitaryOp) -> Channel:
    return Channel(u.space, u.space, [u.mat])


@dataclass
class DualMap:
    """Heisenberg-picture dual of a channel: a -> sum K^dag a K."""

    space_in: TensorSpace   # observables on the channel's output space
    space_out: TensorSpace  # observables on the channel's input space
    kraus: list             # the original channel's Kraus operators

    def apply(self, a) -> np.ndarray:
        a = _as_matrix(a)
        return sum(dagger(k) @ a @ k for k in self.kraus)


def hs_adjoint(c: Channel) -> DualMap:
    """Hilbert-Schmidt adjoint satisfying Tr(L(rho) a) = Tr(rho L^dag(a))."""
    return DualMap(c.space_out, c.space_in, list(c.kraus))


def _choi_of_kraus(kraus, din, dout) -> np.ndarray:
    j = np.zeros((din * dout, din * dout), dtype=np.complex128)
    for k in kraus:
        w = np.asarray(k).T.reshape(-1)  # w[(i, a)] = K[a, i], big-endian (i, a)
        j += np.outer(w, w.conj())
    return j


def choi_transform(c: Channel) -> np.ndarray:
    """Choi matrix J = sum_ij E_ij (x) L(E_ij) (input factor on the left)."""
    return _choi_of_kraus(c.kraus, c.space_in.dim, c.space_out.dim)


def channel_from_choi(j, space_in: TensorSpace, space_out: TensorSpace) -> Channel:
    """Recover a Kraus form from a Choi matrix via eigendecomposition,
    dropping eigenvalues below 1e-10."""
    j = _as_matrix(j)
    din, dout = space_in.dim, space_out.dim
    if j.shape[0] != din * dout:
        raise DimensionMismatch("choi matrix dim != d_in * d_out")
    _check_hermitian(j, tol=1e-9, what="choi matrix")
    ev, vecs = np.linalg.eigh((j + dagger(j)) / 2)
    if ev[0] < -PSD_FLOOR * max(1.0, float(ev[-1])):
        raise NotPSD(f"choi matrix eigenvalue {ev[0]} below PSD floor")
    kraus = []
    for lam, v in zip(ev, vecs.T):
        if lam < KRAUS_CUT:
            continue
        kraus.append(np.sqrt(lam) * v.reshape(din, dout).T)
    if not kraus:
        kraus = [np.zeros((dout, din), dtype=np.complex128)]
    return Channel(space_in, space_out, kraus)


def choi_distance(j1, j2) -> float:
    """Frobenius distance between Choi matrices."""
    return float(np.linalg.norm(np.asarray(j1) - np.asarray(j2)))


def validate_channel(c: Channel) -> dict:
    """Check CP (Choi PSD), TP, trace-nonincreasing, and unital dual."""
    din = c.space_in.dim
    lo, hi = min_eig_floor(c.choi)
    cp = lo >= -PSD_FLOOR * max(1.0, hi)
    gram = sum(dagger(k) @ k for k in c.kraus)
    cogram = sum(k @ dagger(k) for k in c.kraus)
    tp = bool(np.max(np.abs(gram - np.eye(din))) <= 1e-10)
    ev = np.linalg.eigvalsh((gram + dagger(gram)) / 2)
    nonincreasing = bool(ev[-1] <= 1.0 + 1e-9)
    unital_dual = bool(np.max(np.abs(cogram - np.eye(c.space_out.dim))) <= 1e-10)
    return {"cp": bool(cp), "tp": tp, "trace_nonincreasing": nonincreasing, "unital_dual": unital_dual}


def stinespring(c: Channel, env_label: str = "E"):
    """Dilate a nonselective channel to a unitary with a pure environment.

    Returns (env_space, tau, u) with env dimension = number of Kraus
    operators, tau = |0><0| on the environment, and u on system (x) env
    satisfying L(rho) = Tr_env(u (rho (x) tau) u^dag).
    """
    if c.space_in.dim != c.space_out.dim:
        raise DimensionMismatch("dilation requires equal input and output dims")
    if not c.nonselective:
        raise NotTracePreserving("dilation requires a trace-preserving channel")
    d = c.space_in.dim
    m = len(c.kraus)
    env = TensorSpace(((env_label, m),))
    # isometry V|psi> = sum_k K_k|psi> (x) |k>, columns placed at (i, 0)
    dm = d * m
    u = np.zeros((dm, dm), dtype=np.complex128)
    v = np.zeros((dm, d), dtype=np.complex128)
    for k_idx, k in enumerate(c.kraus):
        for a in range(d):
            v[a * m + k_idx, :] = k[a, :]
    for i in range(d):
        u[:, i * m] = v[:, i]
    # deterministic orthonormal completion: QR of [V | I] yields dm columns
    # whose tail is orthogonal to the range of V
    q, _ = np.linalg.qr(np.concatenate([v, np.eye(dm, dtype=np.complex128)], axis=1))
    fill_cols = [i * m + k for i in range(d) for k in range(1, m)]
    for col, w in zip(fill_cols, q[:, d:].T):
        u[:, col] = w
    tau_mat = np.zeros((m, m), dtype=np.complex128)
    tau_mat[0, 0] = 1.0
    tau = DensityOp(env, tau_mat)
    return env, tau, UnitaryOp(c.space_in * env, u)


def trace_distance(a: DensityOp, b: DensityOp) -> float:
    if a.space.dim != b.space.dim:
        raise DimensionMismatch("states live on different spaces")
    ev = np.linalg.eigvalsh(a.mat - b.mat)
    return float(0.5 * np.sum(np.abs(ev)))


# -- seeded random instances ---------------------------------------------------

def _ginibre(rng, rows, cols) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(space: TensorSpace, seed: int) -> UnitaryOp:
    """Haar-distributed unitary: QR of a Ginibre matrix with phase fix."""
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, space.dim, space.dim)
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph = ph / np.abs(ph)
    return UnitaryOp(space, q * ph)


def random_channel(space: TensorSpace, kraus_count: int, seed: int) -> Channel:
    """Trace-preserving channel from an orthonormalized Gaussian Kraus stack."""
    rng = np.random.default_rng(seed)
    d = space.dim
    stack = _ginibre(rng, kraus_count * d, d)
    q, r = np.linalg.qr(stack)  # q has orthonormal columns: q^dag q = 1_d
    ph = np.diag(r).copy()
    ph = ph / np.abs(ph)
    q = q * ph
    kraus = [q[k * d : (k + 1) * d, :] for k in range(kraus_count)]
    return Channel(space, space, kraus)


def random_state(space: TensorSpace, seed: int, pure: bool = False) -> DensityOp:
    rng = np.random.default_rng(seed)
    d = space.dim
    if pure:
        v = _ginibre(rng, d, 1)
        v = v / np.linalg.norm(v)
        return DensityOp(space, v @ dagger(v))
    g = _ginibre(rng, d, d)
    rho = g @ dagger(g)
    return DensityOp(space, rho / np.trace(rho))


def random_effect(space: TensorSpace, seed: int) -> Effect:
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, space.dim, space.dim)
    h = (g + dagger(g)) / 2
    ev, vecs = np.linalg.eigh(h)
    squashed = (np.tanh(ev) + 1.0) / 2.0  # spectrum into (0, 1)
    return Effect(space, (vecs * squashed) @ dagger(vecs))
