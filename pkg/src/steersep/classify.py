"""Per-state labels and weights: PPT, absolute separability, Bures reweighting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeViolation, SingularSpectrum
from .qmat import as_array, determinant, eigenvalues, partial_transpose_b

#: Partial-transpose eigenvalues down to -PPT_TOL count as separable, so the
#: exact-zero boundary eigenvalue of Werner(1/3) classifies deterministically.
PPT_TOL = 1e-12
SINGULAR_TOL = 1e-15
RANGE_TOL = 1e-10
DET_DIFF_MIN = -1.0 / 16.0
DET_DIFF_MAX = 1.0 / 432.0


@dataclass(frozen=True)
class ClassifyResult:
    is_ppt: bool
    is_abs_sep: bool
    det_diff: float
    bures_weight: float | None


def ppt_mask(min_pt_eigenvalue):
    return np.asarray(min_pt_eigenvalue) >= -PPT_TOL


def is_separable_ppt(rho) -> bool:
    lam = eigenvalues(partial_transpose_b(as_array(rho)))
    return bool(ppt_mask(lam[-1]))


def abs_sep_mask(spectra):
    """Vectorized ``l1 - l3 < 2 sqrt(l2 l4)`` on decreasing spectra ``(..., 4)``."""
    s = np.asarray(spectra, dtype=float)
    prod = np.clip(s[..., 1] * s[..., 3], 0.0, None)
    return s[..., 0] - s[..., 2] < 2.0 * np.sqrt(prod)


def is_absolutely_separable(spectrum) -> bool:
    return bool(abs_sep_mask(spectrum))


def bures_weights(spectra):
    """Bures-to-Hilbert-Schmidt density ratio (up to a constant); NaN where singular."""
    s = np.asarray(spectra, dtype=float)
    ok = np.all(s > SINGULAR_TOL, axis=-1)
    pair = np.ones(s.shape[:-1])
    for j in range(3):
        for k in range(j + 1, 4):
            pair = pair * (s[..., j] + s[..., k])
    with np.errstate(invalid="ignore", divide="ignore"):
        w = 1.0 / (pair * np.sqrt(np.prod(np.where(ok[..., None], s, 1.0), axis=-1)))
    return np.where(ok, w, np.nan)


def bures_weight(spectrum) -> float:
    s = np.asarray(spectrum, dtype=float)
    if np.any(s <= SINGULAR_TOL):
        raise SingularSpectrum(f"eigenvalue {s.min()!r} too small for the Bures weight")
    prod_pairs = math.prod(s[j] + s[k] for j in range(3) for k in range(j + 1, 4))
    return 1.0 / (prod_pairs * math.sqrt(math.prod(s)))


def range_violations(det_diff):
    d = np.asarray(det_diff)
    return (d < DET_DIFF_MIN - RANGE_TOL) | (d > DET_DIFF_MAX + RANGE_TOL)


def det_difference(rho) -> float:
    """``det rho^TB - det rho``, checked against its physical range [-1/16, 1/432]."""
    m = as_array(rho)
    d = determinant(partial_transpose_b(m)) - determinant(m)
    if range_violations(d):
        raise RangeViolation(f"det difference {d!r} outside [-1/16, 1/432]", matrix=m)
    return d


def classify(rho) -> ClassifyResult:
    m = as_array(rho)
    spec = eigenvalues(m)
    ppt = is_separable_ppt(m)
    try:
        bw = bures_weight(spec)
    except SingularSpectrum:
        bw = None
    return ClassifyResult(ppt, is_absolutely_separable(spec), det_difference(m), bw)
