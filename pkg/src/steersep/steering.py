"""Steering-ellipsoid volumes from determinants of the state and its partial transpose.

Volumes are in Bloch-ball units: the full ball has volume 4*pi/3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReducedState
from .qmat import BlochForm, as_array, bloch_coefficients, determinant, partial_transpose_b

DEGENERATE_TOL = 1e-14
VOLUME_PREFACTOR = 64.0 * math.pi / 3.0
#: Largest sphere inside the tetrahedron inscribed in the unit ball.
WERNER_BOUNDARY_VOLUME = 4.0 * math.pi / 81.0


@dataclass(frozen=True)
class EllipsoidVolumes:
    v_a: float
    v_b: float
    a_sq: float
    b_sq: float


def theta_matrix(f: BlochForm) -> np.ndarray:
    """``[[1, b^T], [a, T]]`` as a real 4x4 array."""
    th = np.empty((4, 4))
    th[0, 0] = 1.0
    th[0, 1:] = f.b
    th[1:, 0] = f.a
    th[1:, 1:] = f.t
    return th


def theta_stack(a, b, t):
    a = np.asarray(a)
    th = np.empty(a.shape[:-1] + (4, 4))
    th[..., 0, 0] = 1.0
    th[..., 0, 1:] = b
    th[..., 1:, 0] = a
    th[..., 1:, 1:] = t
    return th


def det_theta_identity_residual(rho):
    """``|det Theta - 16 (det rho^TB - det rho)|``; vectorizes over stacks."""
    m = as_array(rho)
    a, b, t = bloch_coefficients(m)
    lhs = np.linalg.det(theta_stack(a, b, t))
    rhs = 16.0 * (determinant(partial_transpose_b(m)) - determinant(m))
    out = np.abs(lhs - rhs)
    return float(out) if np.ndim(out) == 0 else out


def volume_from_determinants(det_rho, det_pt, norm_sq):
    """``(64 pi / 3) |det rho - det rho^TB| / (1 - norm_sq)^2``; NaN where degenerate."""
    gap = 1.0 - np.asarray(norm_sq, dtype=float)
    ok = gap > DEGENERATE_TOL
    num = VOLUME_PREFACTOR * np.abs(np.asarray(det_rho) - np.asarray(det_pt))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, num / np.where(ok, gap, 1.0) ** 2, np.nan)


def _norms_and_dets(rho):
    m = as_array(rho)
    a, b, _ = bloch_coefficients(m)
    return float(a @ a), float(b @ b), determinant(m), determinant(partial_transpose_b(m))


def volume_a(rho) -> EllipsoidVolumes:
    """Volume of the ellipsoid Bob can steer Alice to, with its Alice-side partner."""
    a_sq, b_sq, d_rho, d_pt = _norms_and_dets(rho)
    if 1.0 - b_sq <= DEGENERATE_TOL:
        raise DegenerateReducedState(f"|b|^2 = {b_sq!r} at the Bloch sphere")
    if 1.0 - a_sq <= DEGENERATE_TOL:
        raise DegenerateReducedState(f"|a|^2 = {a_sq!r} at the Bloch sphere")
    v_a = VOLUME_PREFACTOR * abs(d_rho - d_pt) / (1.0 - b_sq) ** 2
    v_b = (1.0 - b_sq) ** 2 / (1.0 - a_sq) ** 2 * v_a
    return EllipsoidVolumes(v_a, v_b, a_sq, b_sq)


def volume_a_alt_norm(rho) -> float:
    """Same numerator as :func:`volume_a` but with Alice's norm in the denominator."""
    a_sq, _, d_rho, d_pt = _norms_and_dets(rho)
    if 1.0 - a_sq <= DEGENERATE_TOL:
        raise DegenerateReducedState(f"|a|^2 = {a_sq!r} at the Bloch sphere")
    return VOLUME_PREFACTOR * abs(d_rho - d_pt) / (1.0 - a_sq) ** 2


def volume_a_theta(rho) -> float:
    """``(4 pi / 3) |det Theta| / (1 - b^2)^2``, the Theta-matrix route to V_A."""
    f_a, f_b, f_t = bloch_coefficients(as_array(rho))
    b_sq = float(f_b @ f_b)
    if 1.0 - b_sq <= DEGENERATE_TOL:
        raise DegenerateReducedState(f"|b|^2 = {b_sq!r} at the Bloch sphere")
    th = theta_matrix(BlochForm(f_a, f_b, f_t))
    return 4.0 * math.pi / 3.0 * abs(np.linalg.det(th)) / (1.0 - b_sq) ** 2
