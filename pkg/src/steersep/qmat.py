"""Fixed-size 4x4 Hermitian kernel for two-qubit states.

Every array routine here accepts a single ``(4, 4)`` matrix or a stack of
shape ``(..., 4, 4)``; the samplers lean on the stacked form.  Basis order is
``|00>, |01>, |10>, |11>`` with Alice's qubit first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DomainError, NonRealDeterminant

#: Strict upper-triangle positions in canonical storage order.
UPPER = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_ROWS = np.array([p for p, _ in UPPER])
_COLS = np.array([q for _, q in UPPER])

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
_I2 = np.eye(2, dtype=complex)
#: sigma_i (x) I, I (x) sigma_j and sigma_i (x) sigma_j.
PAULI_A = np.array([np.kron(s, _I2) for s in SIGMA])
PAULI_B = np.array([np.kron(_I2, s) for s in SIGMA])
PAULI_AB = np.array([[np.kron(s, t) for t in SIGMA] for s in SIGMA])

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 50
TRACE_TOL = 1e-12


@dataclass(frozen=True)
class Hermitian4:
    """Hermitian 4x4 matrix held as its real diagonal plus strict upper triangle.

    The lower triangle is implied by conjugation, so Hermiticity is structural
    and the partial transpose is an exact permutation/conjugation of storage.
    """

    diag: tuple[float, float, float, float]
    upper: tuple[complex, complex, complex, complex, complex, complex]

    def __post_init__(self):
        d = tuple(float(x) for x in self.diag)
        u = tuple(complex(x) for x in self.upper)
        if len(d) != 4 or len(u) != 6:
            raise DomainError("need 4 diagonal and 6 upper-triangle entries")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(np.array(u)))):
            raise DomainError("non-finite matrix entry")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "upper", u)

    @classmethod
    def from_array(cls, m, atol=1e-12):
        m = np.asarray(m, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError(f"expected a 4x4 matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise DomainError("matrix is not Hermitian")
        return cls(tuple(m.diagonal().real), tuple(m[_ROWS, _COLS]))

    def to_array(self):
        m = np.diag(np.array(self.diag, dtype=complex))
        u = np.array(self.upper)
        m[_ROWS, _COLS] = u
        m[_COLS, _ROWS] = u.conj()
        return m

    @property
    def trace(self):
        return sum(self.diag)

    def __array__(self, dtype=None, copy=None):
        m = self.to_array()
        return m if dtype is None else m.astype(dtype)


class DensityMatrix(Hermitian4):
    """Unit-trace :class:`Hermitian4`.  Positivity is checked by callers."""

    def __post_init__(self):
        super().__post_init__()
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise DomainError(f"trace {self.trace!r} is not 1")


def as_array(m):
    if isinstance(m, Hermitian4):
        return m.to_array()
    return np.asarray(m, dtype=complex)


def hermitian_from_parts(diag, upper):
    """Assemble a stack of Hermitian matrices from ``(..., 4)`` and ``(..., 6)`` parts."""
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=complex)
    m = np.zeros(diag.shape[:-1] + (4, 4), dtype=complex)
    idx = np.arange(4)
    m[..., idx, idx] = diag
    m[..., _ROWS, _COLS] = upper
    m[..., _COLS, _ROWS] = upper.conj()
    return m


def _stack(m):
    m = as_array(m)
    if m.shape[-2:] != (4, 4):
        raise DomainError(f"expected (..., 4, 4), got {m.shape}")
    single = m.ndim == 2
    return m.reshape(-1, 4, 4), single, m.shape[:-2]


def determinant(m, check=True):
    """Determinant of Hermitian 4x4 matrices via LU with partial pivoting.

    Returns the real part.  The imaginary residual of an exact Hermitian
    determinant is pure rounding; anything larger than
    ``1e-12 * (1 + |re|)`` raises :class:`NonRealDeterminant`.
    """
    a, single, shape = _stack(m)
    a = a.astype(complex, copy=True)
    n = a.shape[0]
    rows = np.arange(n)
    det = np.ones(n, dtype=complex)
    for k in range(4):
        piv = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = piv != k
        if swap.any():
            r, p = rows[swap], piv[swap]
            tmp = a[r, k].copy()
            a[r, k] = a[r, p]
            a[r, p] = tmp
            det[swap] = -det[swap]
        pivot = a[:, k, k]
        det *= pivot
        if k < 3:
            safe = np.where(pivot == 0, 1.0, pivot)
            factors = np.where(pivot[:, None] == 0, 0.0, a[:, k + 1:, k] / safe[:, None])
            a[:, k + 1:, k:] -= factors[:, :, None] * a[:, None, k, k:]
    if check:
        bad = np.abs(det.imag) > 1e-12 * (1.0 + np.abs(det.real))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NonRealDeterminant(f"determinant {det[i]!r} has a non-negligible imaginary part")
    out = det.real.reshape(shape)
    return out.item() if single else out


def _jacobi_sweeps(a, v):
    """Cyclic complex Jacobi on a stack, in place.  Returns sweeps used."""
    idx = np.arange(4)
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2))))
    offmask = ~np.eye(4, dtype=bool)
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        active = np.flatnonzero(off > JACOBI_TOL * scale)
        if active.size == 0:
            return sweep
        if sweep == JACOBI_MAX_SWEEPS:
            break
        x = a[active]
        w = v[active] if v is not None else None
        for p, q in UPPER:
            apq = x[:, p, q]
            g = np.abs(apq)
            nz = g > 0
            e = np.where(nz, apq / np.where(nz, g, 1.0), 1.0)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                tau = (x[:, q, q].real - x[:, p, p].real) / (2.0 * g)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(nz & np.isfinite(t), t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ce = e.conj()
            colp = x[:, :, p].copy()
            colq = x[:, :, q].copy()
            x[:, :, p] = c[:, None] * colp - (s * ce)[:, None] * colq
            x[:, :, q] = s[:, None] * colp + (c * ce)[:, None] * colq
            rowp = x[:, p, :].copy()
            rowq = x[:, q, :].copy()
            x[:, p, :] = c[:, None] * rowp - (s * e)[:, None] * rowq
            x[:, q, :] = s[:, None] * rowp + (c * e)[:, None] * rowq
            x[:, p, q] = 0.0
            x[:, q, p] = 0.0
            x[:, idx, idx] = x[:, idx, idx].real
            if w is not None:
                vp = w[:, :, p].copy()
                vq = w[:, :, q].copy()
                w[:, :, p] = c[:, None] * vp - (s * ce)[:, None] * vq
                w[:, :, q] = s[:, None] * vp + (c * ce)[:, None] * vq
        a[active] = x
        if v is not None:
            v[active] = w
    raise ConvergenceFailure(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def eigh(m):
    """Eigenvalues (decreasing) and unit eigenvectors (columns) of Hermitian 4x4 matrices."""
    a, single, shape = _stack(m)
    a = a.astype(complex, copy=True)
    v = np.broadcast_to(np.eye(4, dtype=complex), a.shape).copy()
    _jacobi_sweeps(a, v)
    lam = np.diagonal(a, axis1=1, axis2=2).real
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    if single:
        return lam[0], v[0]
    return lam.reshape(shape + (4,)), v.reshape(shape + (4, 4))


def eigenvalues(m):
    """Eigenvalues sorted decreasing, ``lam[..., 0] >= ... >= lam[..., 3]``."""
    a, single, shape = _stack(m)
    a = a.astype(complex, copy=True)
    _jacobi_sweeps(a, None)
    lam = -np.sort(-np.diagonal(a, axis1=1, axis2=2).real, axis=1)
    return lam[0] if single else lam.reshape(shape + (4,))


def partial_transpose_b(rho):
    """Transpose Bob's indices: each 2x2 block of the matrix is transposed in place.

    On :class:`Hermitian4` input this is exact: entries (0,1) and (2,3) are
    conjugated, (0,3) and (1,2) are swapped.
    """
    if isinstance(rho, Hermitian4):
        u = rho.upper
        return type(rho)(rho.diag, (u[0].conjugate(), u[1], u[3], u[2], u[4], u[5].conjugate()))
    m = np.asarray(rho)
    shape = m.shape
    return m.reshape(shape[:-2] + (2, 2, 2, 2)).swapaxes(-1, -3).reshape(shape)


@dataclass(frozen=True)
class BlochForm:
    """Pauli decomposition: Alice's vector ``a``, Bob's vector ``b``, correlations ``t``."""

    a: np.ndarray
    b: np.ndarray
    t: np.ndarray


def bloch_coefficients(rho):
    """Vectorized decomposition returning ``(a, b, t)`` arrays."""
    m = as_array(rho)
    a = np.einsum("...jk,ikj->...i", m, PAULI_A).real
    b = np.einsum("...jk,ikj->...i", m, PAULI_B).real
    t = np.einsum("...jk,ilkj->...il", m, PAULI_AB).real
    return a, b, t


def bloch_decompose(rho):
    a, b, t = bloch_coefficients(rho)
    return BlochForm(a, b, t)


def bloch_reconstruct(f):
    m = np.eye(4, dtype=complex)
    m = m + np.tensordot(np.asarray(f.a, dtype=float), PAULI_A, axes=1)
    m = m + np.tensordot(np.asarray(f.b, dtype=float), PAULI_B, axes=1)
    m = m + np.tensordot(np.asarray(f.t, dtype=float), PAULI_AB, axes=2)
    m = m / 4.0
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(tuple(m.diagonal().real), tuple(m[_ROWS, _COLS]))


def maximally_mixed():
    return DensityMatrix((0.25, 0.25, 0.25, 0.25), (0j,) * 6)


def werner(w):
    """``w |psi-><psi-| + (1 - w) I/4`` with the singlet ``(|01> - |10>)/sqrt(2)``."""
    w = float(w)
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"Werner weight {w} outside [0, 1]")
    base = (1.0 - w) / 4.0
    mid = base + w / 2.0
    return DensityMatrix((base, mid, mid, base), (0j, 0j, 0j, complex(-w / 2.0), 0j, 0j))


def singlet():
    return werner(1.0)
