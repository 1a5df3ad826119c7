"""Self-test battery run by ``steersep validate``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import DET_DIFF_MAX, DET_DIFF_MIN, RANGE_TOL
from .moments import MomentParams, f2_moment, f2_prime_hyp, f2_prime_sum
from .qmat import (
    Hermitian4,
    bloch_coefficients,
    bloch_decompose,
    bloch_reconstruct,
    determinant,
    eigenvalues,
    partial_transpose_b,
    werner,
)
from .sampling import RandomStream, ginibre_block, paper_feasible_block
from .steering import WERNER_BOUNDARY_VOLUME, det_theta_identity_residual, volume_a, volume_from_determinants


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def sample_states(seed: int, n_ginibre: int, n_paper: int, cutoff: float = 4 / 15):
    """Feasible states from both samplers for property checks."""
    g = ginibre_block(RandomStream(seed, 0), n_ginibre).states
    stream = RandomStream(seed, 1)
    found = []
    have = 0
    while have < n_paper:
        _, mats = paper_feasible_block(stream, 1 << 20, cutoff)
        found.append(mats)
        have += len(mats)
    p = np.concatenate(found)[:n_paper] if found else np.empty((0, 4, 4), dtype=complex)
    return g, p


def _check(name, passed, detail):
    return Check(name, bool(passed), detail)


def werner_checks():
    w = werner(1.0 / 3.0)
    v = volume_a(w).v_a
    d_rho = determinant(w)
    d_pt = determinant(partial_transpose_b(w))
    d1 = determinant(partial_transpose_b(werner(1.0))) - determinant(werner(1.0))
    return [
        _check("werner boundary volume 4pi/81", abs(v - WERNER_BOUNDARY_VOLUME) <= 1e-12,
               f"v_a={v!r} target={WERNER_BOUNDARY_VOLUME!r}"),
        _check("werner(1/3) determinants", abs(d_rho - 1 / 432) <= 1e-14 and abs(d_pt) <= 1e-14,
               f"det rho={d_rho!r} det rho^TB={d_pt!r}"),
        _check("werner(1) det difference -1/16", abs(d1 + 1 / 16) <= 1e-12, f"diff={d1!r}"),
    ]


def state_checks(states):
    checks = []
    res = det_theta_identity_residual(states)
    checks.append(_check("det Theta identity", res.max() <= 1e-10, f"max residual {res.max():.3e}"))

    worst_pt = 0
    worst_rt = 0.0
    for m in states:
        h = Hermitian4.from_array(m)
        twice = partial_transpose_b(partial_transpose_b(h))
        worst_pt += twice != h or partial_transpose_b(h).trace != h.trace
        back = bloch_reconstruct(bloch_decompose(m)).to_array()
        worst_rt = max(worst_rt, float(np.abs(back - m).max()))
    checks.append(_check("partial transpose involution", worst_pt == 0, f"{worst_pt} mismatches"))
    checks.append(_check("Bloch roundtrip", worst_rt <= 1e-12, f"max entry error {worst_rt:.3e}"))

    lam = eigenvalues(states)
    dets = determinant(states)
    err = np.abs(dets - lam.prod(axis=1)).max()
    checks.append(_check("determinant = eigenvalue product", err <= 1e-10, f"max error {err:.3e}"))
    serr = np.abs(lam.sum(axis=1) - 1).max()
    checks.append(_check("eigenvalue sum", serr <= 1e-10, f"max error {serr:.3e}"))

    a, b, _ = bloch_coefficients(states)
    a_sq, b_sq = (a * a).sum(1), (b * b).sum(1)
    d_rho, d_pt = dets, determinant(partial_transpose_b(states))
    v_a = volume_from_determinants(d_rho, d_pt, b_sq)
    v_b = (1 - b_sq) ** 2 / (1 - a_sq) ** 2 * v_a
    lhs, rhs = v_a * (1 - b_sq) ** 2, v_b * (1 - a_sq) ** 2
    rel = np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)
    checks.append(_check("V_B reciprocity", np.nanmax(rel) <= 1e-10, f"max rel error {np.nanmax(rel):.3e}"))

    diff = d_pt - d_rho
    out = int(((diff < DET_DIFF_MIN - RANGE_TOL) | (diff > DET_DIFF_MAX + RANGE_TOL)).sum())
    checks.append(_check("det difference range", out == 0,
                         f"{out} outside; observed [{diff.min():.6g}, {diff.max():.6g}]"))
    return checks


def moment_checks(n_max=10, k_max=5, alphas=(1, 2, 4)):
    mismatch = 0
    norm_bad = 0
    for alpha in alphas:
        for k in range(k_max + 1):
            norm_bad += f2_moment(MomentParams(0, k, alpha)) != 1
            for n in range(n_max + 1):
                p = MomentParams(n, k, alpha)
                mismatch += f2_prime_sum(p) != f2_prime_hyp(p)
    return [
        _check("F2' cross-form identity", mismatch == 0, f"{mismatch} mismatches on n<={n_max}, k<={k_max}"),
        _check("F2 zeroth moment", norm_bad == 0, f"{norm_bad} entries differ from 1"),
    ]


def run_validation(seed: int = 0, n_ginibre: int = 10_000, n_paper: int = 1_000):
    g, p = sample_states(seed, n_ginibre, n_paper)
    checks = werner_checks()
    for label, states in (("ginibre", g), ("paper", p)):
        for c in state_checks(states):
            checks.append(Check(f"{c.name} [{label}]", c.passed, c.detail))
    checks.extend(moment_checks())
    return checks


def format_checks(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}" for c in checks]
    n_ok = sum(c.passed for c in checks)
    lines.append(f"{n_ok}/{len(checks)} checks passed")
    return "\n".join(lines)

