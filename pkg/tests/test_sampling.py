from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steersep.errors import DomainError, IterationBudgetExceeded
from steersep.qmat import eigenvalues, hermitian_from_parts
from steersep.sampling import (
    DRAWS_PER_CANDIDATE,
    GINIBRE,
    RandomStream,
    SamplerConfig,
    candidate_parts,
    diagonal_from_draws,
    feasible_from_draws,
    ginibre_block,
    next_feasible,
    ordered_spectra,
    paper_feasible_block,
    sample_candidate,
    sample_diagonal,
    sample_ginibre_hs,
    sample_ordered_spectrum,
)

unit = st.floats(0, 1, exclude_max=True)


def test_diagonal_examples():
    assert np.allclose(diagonal_from_draws([0.5, 0.2, 0.9]), [0.2, 0.3, 0.4, 0.1])
    assert np.array_equal(diagonal_from_draws([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0, 1.0])


@given(st.lists(unit, min_size=3, max_size=3))
def test_diagonal_matches_sorted_spacings(u):
    s = sorted(u)
    ref = [s[0], s[1] - s[0], s[2] - s[1], 1 - s[2]]
    d = diagonal_from_draws(u)
    assert np.array_equal(d, ref)
    assert np.all(d >= 0)
    assert abs(d.sum() - 1) <= 1e-15


def test_diagonal_moments():
    # each coordinate of a flat point on the 3-simplex is Beta(1, 3): mean 1/4, variance 3/80
    d = sample_diagonal_block(RandomStream(7, 0), 1_000_000)
    se = np.sqrt(3 / 80 / d.shape[0])
    assert np.all(np.abs(d.mean(axis=0) - 0.25) <= 3 * se)
    assert np.allclose(d.var(axis=0), 3 / 80, rtol=0.01)


def sample_diagonal_block(stream, n):
    return diagonal_from_draws(stream.uniform(3 * n).reshape(n, 3))


def test_sample_diagonal_uses_three_draws():
    a, b = RandomStream(3, 0), RandomStream(3, 0)
    assert np.array_equal(sample_diagonal(a), diagonal_from_draws(b.uniform(3)))
    assert np.array_equal(a.uniform(5), b.uniform(5))


def test_ordered_spectrum():
    lam = sample_ordered_spectrum(RandomStream(1, 0))
    assert np.all(np.diff(lam) <= 0) and abs(lam.sum() - 1) <= 1e-15
    block = ordered_spectra(RandomStream(1, 0), 1000)
    assert np.array_equal(block[0], lam)
    assert np.all(np.diff(block, axis=1) <= 0)


def test_candidate_bounds_and_layout():
    stream = RandomStream(5, 0)
    draws = RandomStream(5, 0).uniform(DRAWS_PER_CANDIDATE)
    h = sample_candidate(stream, Fraction(1, 10))
    u = np.array(h.upper)
    assert np.all(np.abs(u.real) <= 0.1) and np.all(np.abs(u.imag) <= 0.1)
    assert abs(h.trace - 1) <= 1e-15
    assert np.allclose(u.real, 0.1 * (2 * draws[3:9] - 1))
    assert np.allclose(u.imag, 0.1 * (2 * draws[9:15] - 1))
    diag, upper = candidate_parts(np.zeros(15), 0.25)
    assert np.all(upper == -0.25 - 0.25j)


def test_feasible_filter_matches_full_eigenvalue_test():
    draws = RandomStream(9, 0).uniform(DRAWS_PER_CANDIDATE * 200_000)
    idx, mats = feasible_from_draws(draws, 4 / 15)
    diag, upper = candidate_parts(draws, 4 / 15)
    allm = hermitian_from_parts(diag, upper)
    ref = np.flatnonzero(np.linalg.eigvalsh(allm)[:, 0] >= 0)
    assert np.array_equal(idx, ref)
    assert np.all(eigenvalues(mats)[:, -1] >= 0)


def test_next_feasible_position():
    cfg = SamplerConfig(cutoff=Fraction(4, 15), seed=11)
    s = RandomStream(11, 0)
    state, tried = next_feasible(s, cfg)
    ref = RandomStream(11, 0)
    idx, mats = paper_feasible_block(ref, tried, 4 / 15)
    assert idx[-1] == tried - 1 and idx.size == 1
    assert np.allclose(state.to_array(), mats[0])
    # the stream now sits right after the accepted candidate
    assert np.array_equal(s.uniform(40), ref.uniform(40))
    state2, tried2 = next_feasible(s, cfg)
    assert tried2 >= 1


def test_next_feasible_small_cutoff_accepts_often():
    cfg = SamplerConfig(cutoff=Fraction(1, 20), seed=2)
    s = RandomStream(2, 0)
    total = sum(next_feasible(s, cfg)[1] for _ in range(50))
    assert 50 / total > 1e-4


def test_call_cap():
    seed = next(k for k in range(100) if paper_feasible_block(RandomStream(k, 0), 1, 1.0)[0].size == 0)
    cfg = SamplerConfig(cutoff=Fraction(1), seed=seed, call_cap=1)
    with pytest.raises(IterationBudgetExceeded):
        next_feasible(RandomStream(seed, 0), cfg)


def test_block_size_does_not_change_sequence():
    cfg = SamplerConfig(seed=4)
    a, b = RandomStream(4, 0), RandomStream(4, 0)
    for _ in range(5):
        sa, ta = next_feasible(a, cfg, block=512)
        sb, tb = next_feasible(b, cfg, block=10_000)
        assert ta == tb and sa == sb


def test_sampler_config_validation():
    with pytest.raises(DomainError):
        SamplerConfig(cutoff=Fraction(0))
    with pytest.raises(DomainError):
        SamplerConfig(cutoff=Fraction(3, 2))
    with pytest.raises(DomainError):
        SamplerConfig(kind="other")
    with pytest.raises(DomainError):
        SamplerConfig(workers=0)
    with pytest.raises(DomainError):
        next_feasible(RandomStream(0), SamplerConfig(kind=GINIBRE))


def test_streams_are_reproducible_and_independent():
    assert np.array_equal(RandomStream(1, 0).uniform(10), RandomStream(1, 0).uniform(10))
    assert not np.array_equal(RandomStream(1, 0).uniform(10), RandomStream(1, 1).uniform(10))
    assert not np.array_equal(RandomStream(1, 0).uniform(10), RandomStream(2, 0).uniform(10))


def test_chunking_does_not_change_draws():
    a, b = RandomStream(8, 3), RandomStream(8, 3)
    whole = a.uniform(3000)
    parts = np.concatenate([b.uniform(1000), b.uniform(1500), b.uniform(500)])
    assert np.array_equal(whole, parts)


def test_unread_buffer():
    s = RandomStream(0)
    x = s.uniform(10)
    s.unread(x[4:])
    assert np.array_equal(s.uniform(3), x[4:7])
    assert np.array_equal(s.uniform(5)[:3], x[7:])
    s.unread([0.5])
    with pytest.raises(RuntimeError):
        s.normal(1)


def test_ginibre_states(ginibre_states):
    lam = np.linalg.eigvalsh(ginibre_states)
    assert lam.min() >= -1e-14
    assert np.abs(np.trace(ginibre_states, axis1=1, axis2=2) - 1).max() <= 1e-14
    assert np.allclose(ginibre_states, ginibre_states.conj().transpose(0, 2, 1), atol=0)


def test_ginibre_purity():
    # mean purity of induced states with N = K = 4 is (N + K)/(N K + 1) = 8/17
    rho = ginibre_block(RandomStream(21, 0), 200_000).states
    pur = np.einsum("nij,nji->n", rho, rho).real
    se = pur.std() / np.sqrt(pur.size)
    assert abs(pur.mean() - 8 / 17) <= 4 * se


def test_sample_ginibre_single_matches_block():
    one = sample_ginibre_hs(RandomStream(6, 0))
    block = ginibre_block(RandomStream(6, 0), 3).states
    assert np.allclose(one.to_array(), block[0], atol=1e-16)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 40))
def test_ginibre_chunk_invariance(seed, n):
    a = ginibre_block(RandomStream(seed, 0), 2 * n).states
    s = RandomStream(seed, 0)
    b = np.concatenate([ginibre_block(s, n).states, ginibre_block(s, n).states])
    assert np.array_equal(a, b)
