"""Random two-qubit states: the flat-box rejection sampler and a Ginibre sampler.

Streams
-------
Worker ``w`` of a run seeded with ``seed`` draws from
``Generator(Philox(SeedSequence(seed, spawn_key=(w,))))``.  Philox4x64 is the
counter-based generator of Salmon et al. (Random123), so streams can be
reproduced outside numpy.

Draw layout of the rejection sampler: candidate ``i`` consumes uniform draws
``15*i .. 15*i + 14`` of its stream, in this order: three draws for the
diagonal, six real parts, six imaginary parts, the off-diagonals following
:data:`steersep.qmat.UPPER`.  A draw ``u`` in ``[0, 1)`` maps to
``cutoff * (2u - 1)`` in ``[-cutoff, cutoff)``.

The Ginibre sampler consumes 32 standard normals per state: 16 real parts
then 16 imaginary parts of ``G`` in row-major order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, IterationBudgetExceeded
from .qmat import DensityMatrix, Hermitian4, UPPER, eigenvalues, hermitian_from_parts

DRAWS_PER_CANDIDATE = 15
NORMALS_PER_GINIBRE = 32
DEFAULT_CUTOFF = Fraction(4, 15)
DEFAULT_CALL_CAP = 10**8
PAPER = "paper_rejection"
GINIBRE = "ginibre_hs"
#: Slack for the exact-arithmetic minor prefilters.  Only clearly negative
#: minors are rejected early; the eigenvalue test is the final arbiter.
MINOR_SLACK = 1e-13

_TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
_PAIR_INDEX = {pq: i for i, pq in enumerate(UPPER)}


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = PAPER
    cutoff: Fraction = DEFAULT_CUTOFF
    seed: int = 0
    workers: int = 1
    call_cap: int = DEFAULT_CALL_CAP

    def __post_init__(self):
        if self.kind not in (PAPER, GINIBRE):
            raise DomainError(f"unknown sampler kind {self.kind!r}")
        cutoff = Fraction(self.cutoff) if not isinstance(self.cutoff, float) else self.cutoff
        object.__setattr__(self, "cutoff", cutoff)
        if not 0 < cutoff <= 1:
            raise DomainError(f"cutoff {cutoff} outside (0, 1]")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


class RandomStream:
    """Per-worker Philox stream with a push-back buffer for uniform draws."""

    def __init__(self, seed: int, worker_id: int = 0):
        self.seed = int(seed)
        self.worker_id = int(worker_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.worker_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buffer = np.empty(0)

    def uniform(self, n: int) -> np.ndarray:
        if self._buffer.size == 0:
            return self._gen.random(n)
        take = self._buffer[:n]
        self._buffer = self._buffer[n:]
        if take.size == n:
            return take.copy()
        return np.concatenate([take, self._gen.random(n - take.size)])

    def unread(self, draws) -> None:
        """Return unused uniform draws so the next call sees them first."""
        self._buffer = np.concatenate([np.asarray(draws, dtype=float), self._buffer])

    def normal(self, n: int) -> np.ndarray:
        if self._buffer.size:
            raise RuntimeError("stream holds buffered uniforms; normals would break the draw layout")
        return self._gen.standard_normal(n)


def diagonal_from_draws(u) -> np.ndarray:
    """Spacings of ``0 <= sorted(u1, u2, u3) <= 1``: a flat point on the simplex."""
    u = np.asarray(u, dtype=float)
    a, b, c = u[..., 0], u[..., 1], u[..., 2]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    mid, top = np.minimum(hi, c), np.maximum(hi, c)
    bot, mid = np.minimum(lo, mid), np.maximum(lo, mid)
    return np.stack([bot, mid - bot, top - mid, 1.0 - top], axis=-1)


def sample_diagonal(stream: RandomStream) -> np.ndarray:
    return diagonal_from_draws(stream.uniform(3))


def sample_ordered_spectrum(stream: RandomStream) -> np.ndarray:
    return -np.sort(-sample_diagonal(stream))


def ordered_spectra(stream: RandomStream, n: int) -> np.ndarray:
    d = diagonal_from_draws(stream.uniform(3 * n).reshape(n, 3))
    return -np.sort(-d, axis=1)


def candidate_parts(draws, cutoff: float):
    """Map ``(m, 15)`` uniform draws to diagonal ``(m, 4)`` and upper ``(m, 6)`` arrays."""
    draws = np.asarray(draws, dtype=float).reshape(-1, DRAWS_PER_CANDIDATE)
    diag = diagonal_from_draws(draws[:, :3])
    re = cutoff * (2.0 * draws[:, 3:9] - 1.0)
    im = cutoff * (2.0 * draws[:, 9:15] - 1.0)
    return diag, re + 1j * im


def sample_candidate(stream: RandomStream, cutoff=DEFAULT_CUTOFF) -> Hermitian4:
    """One unit-trace Hermitian candidate; positivity not checked."""
    diag, upper = candidate_parts(stream.uniform(DRAWS_PER_CANDIDATE), float(cutoff))
    return Hermitian4(tuple(diag[0]), tuple(upper[0]))


def _minor_survivors(diag, re, im):
    """Indices of candidates whose 2x2 and 3x3 principal minors are not clearly negative."""
    keep = None
    sq = re * re + im * im
    for k, (p, q) in enumerate(UPPER):
        ok = diag[:, p] * diag[:, q] - sq[:, k] >= -MINOR_SLACK
        keep = ok if keep is None else keep & ok
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return idx
    d = diag[idx]
    z = re[idx] + 1j * im[idx]
    s = sq[idx]
    ok = np.ones(idx.size, dtype=bool)
    for i, j, l in _TRIPLES:
        ij, jl, il = _PAIR_INDEX[(i, j)], _PAIR_INDEX[(j, l)], _PAIR_INDEX[(i, l)]
        minor = (
            d[:, i] * d[:, j] * d[:, l]
            + 2.0 * (z[:, ij] * z[:, jl] * z[:, il].conj()).real
            - d[:, i] * s[:, jl]
            - d[:, j] * s[:, il]
            - d[:, l] * s[:, ij]
        )
        ok &= minor >= -MINOR_SLACK
    return idx[ok]


def feasible_from_draws(draws, cutoff: float):
    """Run the rejection test on a block of candidates.

    Returns ``(local_indices, matrices)`` for the candidates whose smallest
    eigenvalue is ``>= 0``.
    """
    draws = np.asarray(draws, dtype=float).reshape(-1, DRAWS_PER_CANDIDATE)
    diag = diagonal_from_draws(draws[:, :3])
    re = cutoff * (2.0 * draws[:, 3:9] - 1.0)
    im = cutoff * (2.0 * draws[:, 9:15] - 1.0)
    idx = _minor_survivors(diag, re, im)
    if idx.size == 0:
        return idx, np.empty((0, 4, 4), dtype=complex)
    mats = hermitian_from_parts(diag[idx], re[idx] + 1j * im[idx])
    ok = eigenvalues(mats)[:, -1] >= 0.0
    return idx[ok], mats[ok]


def paper_feasible_block(stream: RandomStream, n: int, cutoff: float):
    return feasible_from_draws(stream.uniform(DRAWS_PER_CANDIDATE * n), cutoff)


def next_feasible(stream: RandomStream, config: SamplerConfig = SamplerConfig(), block: int = 4096):
    """Draw candidates until one is positive semidefinite.

    Returns ``(state, candidates_tried)``.  Unused draws of the final block are
    pushed back so the stream position is exactly after the accepted candidate.
    """
    if config.kind != PAPER:
        raise DomainError("next_feasible drives the rejection sampler only")
    cutoff = float(config.cutoff)
    tried = 0
    while tried < config.call_cap:
        m = min(block, config.call_cap - tried)
        draws = stream.uniform(DRAWS_PER_CANDIDATE * m)
        idx, mats = feasible_from_draws(draws, cutoff)
        if idx.size:
            i = int(idx[0])
            stream.unread(draws[DRAWS_PER_CANDIDATE * (i + 1):])
            return DensityMatrix.from_array(mats[0]), tried + i + 1
        tried += m
    raise IterationBudgetExceeded(f"no feasible candidate in {config.call_cap} tries")


@dataclass
class GinibreBlock:
    states: np.ndarray
    degenerate_draws: int = 0


def ginibre_block(stream: RandomStream, n: int) -> GinibreBlock:
    """``G G^dagger / tr(G G^dagger)`` for complex Gaussian ``G``: Hilbert-Schmidt distributed."""
    z = stream.normal(NORMALS_PER_GINIBRE * n).reshape(n, 2, 4, 4)
    g = z[:, 0] + 1j * z[:, 1]
    rho = g @ g.conj().transpose(0, 2, 1)
    tr = np.trace(rho, axis1=1, axis2=2).real
    degenerate = 0
    bad = np.flatnonzero(tr <= 1e-300)
    while bad.size:
        degenerate += bad.size
        z = stream.normal(NORMALS_PER_GINIBRE * bad.size).reshape(bad.size, 2, 4, 4)
        g = z[:, 0] + 1j * z[:, 1]
        rho[bad] = g @ g.conj().transpose(0, 2, 1)
        tr[bad] = np.trace(rho[bad], axis1=1, axis2=2).real
        bad = bad[tr[bad] <= 1e-300]
    rho /= tr[:, None, None]
    rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
    return GinibreBlock(rho, degenerate)


def sample_ginibre_hs(stream: RandomStream) -> DensityMatrix:
    return DensityMatrix.from_array(ginibre_block(stream, 1).states[0])
