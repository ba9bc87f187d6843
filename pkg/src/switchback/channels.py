"""Kraus-form qubit channels, composition, and Pauli transfer representation.

The central family is a dephasing-type qubit channel whose canonical rates are
(1/2, 1/2, -tanh(t)/2): one rate is negative for every t > 0, yet the map stays
completely positive and its trace-distance dynamics is monotone. Channels are
snapshots at a fixed time; a one-parameter family is just a callable
``t -> KrausChannel``.
"""

from dataclasses import InitVar, dataclass
from math import sqrt
from typing import Callable, Sequence

import numpy as np

from .core import (
    ATOL_EVOLVED,
    DensityMatrix,
    IDENTITY_2,
    PAULI_BASIS,
    _frozen_copy,
    eigenvalues_hermitian,
)

COMPLETENESS_TOL = 1e-10

ChannelFamily = Callable[[float], "KrausChannel"]


class DimensionMismatch(ValueError):
    """Operands act on different Hilbert-space dimensions."""


class NegativeTime(ValueError):
    """Channel family evaluated at t < 0."""


class BadWeights(ValueError):
    """Mixture weights are negative or do not sum to one."""


class UnsupportedDimension(ValueError):
    """Operation would leave the supported 2- and 4-dimensional spaces."""


class ComplexResidue(ValueError):
    """Transfer-matrix entry has a non-negligible imaginary part."""


class IncompleteKraus(ValueError):
    """Kraus operators do not resolve trace_scale times the identity."""


@dataclass(frozen=True)
class KrausChannel:
    """CP map as a stack of Kraus operators with shape (n_ops, dim, dim).

    ``trace_scale`` is 1 for trace-preserving channels and equals the branch
    probability for post-selected branches, where sum K^dag K = trace_scale * I.
    Constructors of non-uniform joint maps may pass ``check=False``.
    """

    kraus: np.ndarray
    trace_scale: float = 1.0
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim != 3 or k.shape[1] != k.shape[2]:
            raise ValueError(f"expected stacked square operators, got {k.shape}")
        if k.shape[1] not in (2, 4):
            raise UnsupportedDimension(f"dimension {k.shape[1]} not supported")
        if not 0.0 < self.trace_scale <= 1.0 + 1e-12:
            raise ValueError(f"trace_scale {self.trace_scale} outside (0, 1]")
        object.__setattr__(self, "kraus", _frozen_copy(k))
        if check:
            defect = completeness_defect(self)
            if defect > COMPLETENESS_TOL:
                raise IncompleteKraus(f"completeness defect {defect:.3e}")

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_ops(self) -> int:
        return self.kraus.shape[0]


def completeness_defect(ch: KrausChannel) -> float:
    """Max-norm of sum K^dag K minus trace_scale * identity."""
    s = np.einsum("kba,kbc->ac", ch.kraus.conj(), ch.kraus)
    return float(np.abs(s - ch.trace_scale * np.eye(ch.dim)).max())


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel(np.eye(dim, dtype=complex)[np.newaxis])


# -- the always-indivisible dephasing family ---------------------------------

def eternal_rates(t: float) -> tuple[float, float, float]:
    """Master-equation rates (gamma_1, gamma_2, gamma_3) = (1, 1, -tanh t)."""
    return 1.0, 1.0, -float(np.tanh(t))


def xi1(t: float) -> float:
    """Integral of gamma_1 from 0 to t."""
    return float(t)


def xi2(t: float) -> float:
    """Integral of gamma_1 + gamma_3 from 0 to t, i.e. t - ln cosh t."""
    # logaddexp avoids cosh overflow for large t
    return float(t - (np.logaddexp(t, -t) - np.log(2.0)))


def eternal_contractions(t: float) -> tuple[float, float, float]:
    """Bloch contraction factors (x, y, z) of the dephasing family."""
    xy = float(np.exp(-xi2(t)))
    return xy, xy, float(np.exp(-2.0 * t))


def eternal_channel(t: float) -> KrausChannel:
    """Snapshot of the dephasing family at time t, as four Kraus operators.

    Amplitudes: a1 = (1 + e^{-2t})/2, a2 = (1 - e^{-2t})/2, a3 = e^{-t} cosh t.
    For these rates a1 == a3 analytically, so the fourth operator vanishes;
    the amplitude is clamped at zero against roundoff before the square root.
    """
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    a1 = 0.5 * (1.0 + np.exp(-2.0 * t))
    a2 = 0.5 * (1.0 - np.exp(-2.0 * t))
    a3 = np.exp(-t) * np.cosh(t)
    k = np.zeros((4, 2, 2), dtype=complex)
    k[0, 0, 1] = sqrt(a2)
    k[1, 1, 0] = sqrt(a2)
    k[2] = sqrt(0.5 * (a1 + a3)) * IDENTITY_2
    k[3] = sqrt(max(0.5 * (a1 - a3), 0.0)) * np.diag([-1.0, 1.0])
    return KrausChannel(k)


def series_doubled_family(t: float) -> KrausChannel:
    """Snapshot family t -> (dephasing channel at t) composed with itself;
    its generator carries exactly the doubled rates."""
    ch = eternal_channel(t)
    return compose_series(ch, ch)


# -- application and composition ----------------------------------------------

def apply_raw(ch: KrausChannel, m: np.ndarray) -> np.ndarray:
    """Un-normalized sandwich sum K m K^dag; trace = trace_scale * Tr m."""
    return np.einsum("kab,bc,kdc->ad", ch.kraus, np.asarray(m, dtype=complex),
                     ch.kraus.conj(), optimize=True)

def apply_many(ch: KrausChannel, rhos: np.ndarray) -> np.ndarray:
    """Normalized channel action on stacked states of shape (n, dim, dim)."""
    out = np.einsum("kab,nbc,kdc->nad", ch.kraus, rhos, ch.kraus.conj(), optimize=True)
    return out / ch.trace_scale


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Channel action on a state, renormalized by trace_scale for
    post-selected branches. Use apply_raw for the branch-weighted matrix."""
    if ch.dim != rho.dim:
        raise DimensionMismatch(f"channel dim {ch.dim} vs state dim {rho.dim}")
    out = apply_raw(ch, rho.matrix) / ch.trace_scale
    return DensityMatrix(out, atol=ATOL_EVOLVED)


def compose_series(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Channel b after channel a: Kraus set {B_j A_i}."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"{a.dim} vs {b.dim}")
    k = np.einsum("jab,ibc->jiac", b.kraus, a.kraus).reshape(-1, a.dim, a.dim)
    return KrausChannel(k, trace_scale=a.trace_scale * b.trace_scale)


def compose_parallel(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Tensor product a (x) b on two qubits: Kraus set {A_i (x) B_j}."""
    if a.dim != 2 or b.dim != 2:
        raise UnsupportedDimension("parallel composition is capped at two qubits")
    k = np.einsum("iab,jcd->ijacbd", a.kraus, b.kraus).reshape(-1, 4, 4)
    return KrausChannel(k, trace_scale=a.trace_scale * b.trace_scale)


def mix(channels: Sequence[tuple[float, KrausChannel]]) -> KrausChannel:
    """Convex mixture: Kraus sets concatenated with sqrt(weight) prefactors."""
    if not channels:
        raise BadWeights("empty mixture")
    weights = np.array([w for w, _ in channels], dtype=float)
    if (weights < 0).any():
        raise BadWeights(f"negative weight in {weights}")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise BadWeights(f"weights sum to {weights.sum()!r}, not 1")
    dims = {ch.dim for _, ch in channels}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed dimensions {sorted(dims)}")
    stacks = [sqrt(w) * ch.kraus for w, ch in channels]
    scale = float(sum(w * ch.trace_scale for w, ch in channels))
    return KrausChannel(np.concatenate(stacks), trace_scale=scale)


# -- transfer-matrix and Choi representations ---------------------------------

@dataclass(frozen=True)
class TransferMatrix:
    """Real 4x4 matrix F_mn = Tr[G_m Lambda[G_n]] in the normalized Pauli
    basis, for the trace_scale-normalized action. ``t`` is an optional label."""

    F: np.ndarray
    t: float | None = None

    def __post_init__(self):
        f = np.asarray(self.F, dtype=float)
        if f.shape != (4, 4):
            raise ValueError(f"expected 4x4, got {f.shape}")
        object.__setattr__(self, "F", _frozen_copy(f).real)


def transfer_matrix(ch: KrausChannel, t: float | None = None) -> TransferMatrix:
    """Pauli transfer matrix of a qubit channel's normalized action."""
    if ch.dim != 2:
        raise UnsupportedDimension("transfer matrix is defined for qubit channels")
    mapped = np.einsum("kab,nbc,kdc->nad", ch.kraus, PAULI_BASIS, ch.kraus.conj(), optimize=True)
    f = np.einsum("mab,nba->mn", PAULI_BASIS, mapped) / ch.trace_scale
    residue = float(np.abs(f.imag).max())
    if residue > 1e-12:
        raise ComplexResidue(f"imaginary residue {residue:.3e}")
    return TransferMatrix(f.real, t=t)


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """Choi matrix (reference (x) output ordering), trace = trace_scale."""
    if ch.dim != 2:
        raise UnsupportedDimension("Choi matrix implemented for qubit channels")
    # (I (x) K)|Phi+> = vec of K^T / sqrt(2)
    w = ch.kraus.transpose(0, 2, 1).reshape(ch.n_ops, 4) / sqrt(2.0)
    return np.einsum("ka,kb->ab", w, w.conj())


def choi_from_transfer(f: np.ndarray) -> np.ndarray:
    """Choi matrix of the (possibly unphysical) map a transfer matrix defines."""
    f = np.asarray(f, dtype=float)
    c = np.zeros((4, 4), dtype=complex)
    for m in range(4):
        for n in range(4):
            if f[m, n] != 0.0:
                c += 0.5 * f[m, n] * np.kron(PAULI_BASIS[n].T, PAULI_BASIS[m])
    return c


def min_choi_eigenvalue(choi: np.ndarray) -> float:
    return float(eigenvalues_hermitian(choi)[-1])


def is_cp_choi(choi: np.ndarray, tol: float = 1e-10) -> bool:
    return min_choi_eigenvalue(choi) >= -tol


def is_cptp(ch: KrausChannel, tol: float = 1e-10) -> bool:
    """Complete positivity (Choi positivity) plus completeness at trace_scale."""
    return completeness_defect(ch) <= tol and is_cp_choi(choi_matrix(ch), tol)
