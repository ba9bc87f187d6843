"""Exact small-dimension complex linear algebra and qubit state primitives.

Everything here is a pure function over immutable values; matrices handed to
callers are defensive copies with the writeable flag cleared.
"""

from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

ATOL_CONSTRUCT = 1e-12   # Hermiticity/trace/positivity gate on construction
ATOL_EVOLVED = 1e-10     # looser gate after repeated channel applications

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z)

# Orthonormal Hermitian operator basis {I, X, Y, Z}/sqrt(2); Tr[G_i G_j] = delta_ij.
PAULI_BASIS = np.stack(PAULIS) / sqrt(2.0)

for _m in PAULIS + (PAULI_BASIS,):
    _m.flags.writeable = False


class NotHermitian(ValueError):
    """Matrix handed to a Hermitian-only routine is not Hermitian."""


class BlochOutOfBall(ValueError):
    """Bloch vector lies outside the unit ball."""


class InvalidDensityMatrix(ValueError):
    """Matrix fails the Hermitian / unit-trace / positivity gates."""


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def _check_hermitian(m: np.ndarray, tol: float = 1e-10) -> None:
    defect = np.abs(m - m.conj().T).max()
    if defect > tol:
        raise NotHermitian(f"max |M - M^dag| = {defect:.3e} exceeds {tol:.1e}")


def _eigvals_2x2(m: np.ndarray) -> tuple[float, float]:
    # closed form for Hermitian [[a, b], [conj(b), d]]
    a = m[0, 0].real
    d = m[1, 1].real
    mean = 0.5 * (a + d)
    radius = sqrt((0.5 * (a - d)) ** 2 + abs(m[0, 1]) ** 2)
    return mean + radius, mean - radius


def jacobi_eigensystem(m: np.ndarray, max_sweeps: int = 50):
    """Eigenvalues and eigenvectors of a small Hermitian matrix.

    Cyclic complex Jacobi rotations with a fixed sweep cap; adequate for the
    2x2 and 4x4 matrices used throughout, no external solver needed.
    Returns (values descending, column eigenvectors in matching order).
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    a = [[m[i, j] for j in range(n)] for i in range(n)]
    v = [[1.0 + 0.0j if i == j else 0.0j for j in range(n)] for i in range(n)]

    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(a[p][q]) ** 2
        if off < 1e-30:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                mag = abs(apq)
                if mag < 1e-18:
                    continue
                alpha = apq / mag
                tau = (a[q][q].real - a[p][p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                sa = s * alpha
                sac = s * alpha.conjugate()
                # columns p, q of A and V, then rows p, q of A (A <- R^dag A R)
                for k in range(n):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp - sac * akq
                    a[k][q] = s * akp + c * alpha.conjugate() * akq
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = c * vkp - sac * vkq
                    v[k][q] = s * vkp + c * alpha.conjugate() * vkq
                for k in range(n):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk - sa * aqk
                    a[q][k] = s * apk + c * alpha * aqk

    values = np.array([a[i][i].real for i in range(n)])
    vectors = np.array(v)
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def eigenvalues_hermitian(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real eigenvalues of a Hermitian 2x2 or 4x4 matrix, descending.

    2x2 is solved in closed form, 4x4 by cyclic Jacobi rotations.
    Raises NotHermitian when the Hermiticity defect exceeds `tol`.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"unsupported shape {m.shape}; expected 2x2 or 4x4")
    _check_hermitian(m, tol)
    if m.shape == (2, 2):
        return np.array(_eigvals_2x2(m))
    values, _ = jacobi_eigensystem(m)
    return values


def _frozen_copy(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state (2x2 or 4x4)."""

    matrix: np.ndarray
    atol: float = ATOL_CONSTRUCT

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise InvalidDensityMatrix(f"unsupported shape {m.shape}")
        defect = np.abs(m - m.conj().T).max()
        if defect > self.atol:
            raise InvalidDensityMatrix(f"Hermiticity defect {defect:.3e}")
        trace_err = abs(m.trace() - 1.0)
        if trace_err > self.atol:
            raise InvalidDensityMatrix(f"trace defect {trace_err:.3e}")
        herm = 0.5 * (m + m.conj().T)
        lo = eigenvalues_hermitian(herm, tol=1.0)[-1]
        if lo < -self.atol:
            raise InvalidDensityMatrix(f"negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _frozen_copy(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BlochVector:
    """Point in the closed unit ball representing a qubit state."""

    t1: float
    t2: float
    t3: float

    def __post_init__(self):
        norm2 = self.t1 ** 2 + self.t2 ** 2 + self.t3 ** 2
        if norm2 > 1.0 + ATOL_CONSTRUCT:
            raise BlochOutOfBall(f"|v|^2 = {norm2!r} > 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3])


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    """Bloch components t_k = Tr[rho sigma_k] of a qubit state."""
    m = rho.matrix
    if m.shape != (2, 2):
        raise ValueError("Bloch representation is defined for qubits only")
    return BlochVector(
        float((m[0, 1] + m[1, 0]).real),
        float((1j * (m[0, 1] - m[1, 0])).real),
        float((m[0, 0] - m[1, 1]).real),
    )


def density_from_bloch(v: BlochVector | Sequence[float]) -> DensityMatrix:
    """State (I + v . sigma)/2; raises BlochOutOfBall outside the unit ball."""
    if not isinstance(v, BlochVector):
        v = BlochVector(*(float(x) for x in v))
    m = 0.5 * (IDENTITY_2 + v.t1 * SIGMA_X + v.t2 * SIGMA_Y + v.t3 * SIGMA_Z)
    return DensityMatrix(m)


_PIVOTS_4 = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _jacobi_values_batch(mats: np.ndarray, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of stacked Hermitian 4x4 matrices (n, 4, 4), unsorted.

    Same cyclic rotations as jacobi_eigensystem, vectorized across the batch.
    """
    a = np.array(mats, dtype=complex)
    for _ in range(max_sweeps):
        off = sum(np.abs(a[:, p, q]) ** 2 for p, q in _PIVOTS_4)
        if off.max() < 1e-30:
            break
        for p, q in _PIVOTS_4:
            apq = a[:, p, q]
            mag = np.abs(apq)
            active = mag > 1e-18
            safe_mag = np.where(active, mag, 1.0)
            alpha = np.where(active, apq / safe_mag, 1.0 + 0.0j)
            tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe_mag)
            root = np.sqrt(1.0 + tau * tau)
            t = 1.0 / (np.abs(tau) + root)
            t = np.where(tau >= 0.0, t, -t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            sa = s * alpha
            sac = s * alpha.conj()
            akp = a[:, :, p].copy()
            akq = a[:, :, q].copy()
            a[:, :, p] = c[:, None] * akp - sac[:, None] * akq
            a[:, :, q] = s[:, None] * akp + (c * alpha.conj())[:, None] * akq
            apk = a[:, p, :].copy()
            aqk = a[:, q, :].copy()
            a[:, p, :] = c[:, None] * apk - sa[:, None] * aqk
            a[:, q, :] = s[:, None] * apk + (c * alpha)[:, None] * aqk
    return np.stack([a[:, i, i].real for i in range(4)], axis=1)


def _trace_distance_matrices(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    if diff.shape == (2, 2):
        hi, lo = _eigvals_2x2(diff)
        return 0.5 * (abs(hi) + abs(lo))
    # fix the overall sign so that swapping the arguments diagonalizes the
    # bit-identical matrix and symmetry holds exactly
    for x in np.real(np.diagonal(diff)):
        if x != 0.0:
            if x < 0.0:
                diff = -diff
            break
    values, _ = jacobi_eigensystem(diff)
    return 0.5 * float(np.abs(values).sum())


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of a - b; in [0, 1], and for qubits equal to half
    the Euclidean distance of the Bloch vectors."""
    if a.dim != b.dim:
        raise ValueError("states have different dimensions")
    return _trace_distance_matrices(a.matrix, b.matrix)


def trace_distance_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Trace distances for stacked state pairs (n, d, d); vectorized for d=2."""
    a = np.asarray(a)
    b = np.asarray(b)
    diff = a - b
    if diff.shape[-2:] == (2, 2):
        mean = 0.5 * (diff[:, 0, 0] + diff[:, 1, 1]).real
        radius = np.sqrt(
            (0.5 * (diff[:, 0, 0] - diff[:, 1, 1]).real) ** 2
            + np.abs(diff[:, 0, 1]) ** 2
        )
        return 0.5 * (np.abs(mean + radius) + np.abs(mean - radius))
    values = _jacobi_values_batch(diff)
    return 0.5 * np.abs(values).sum(axis=1)
