"""Mergeable tallies for separability ratios and the Bloch-norm curve.

Each accepted state is routed to one of ``n_batches`` equal slices of the
run's iteration range (by its global draw index) and to one bin of ``|b|``.
Ratio standard errors come from batch means of the linearized ratio
``x_b - R y_b``, which tolerates batches with empty denominators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import abs_sep_mask
from .errors import EmptyAccumulator, LayoutMismatch
from .sampling import ordered_spectra

DEFAULT_BATCHES = 100
DEFAULT_BINS = 20

#: Weighted sums, in batch-array column order.
SUM_NAMES = ("qse_all", "qse_sep", "qse_abssep", "qse_alt_all", "qse_alt_sep", "bures_all", "bures_sep")
#: Integer tallies, in batch-array column order.
COUNT_NAMES = ("iterations", "feasible", "ppt", "abs_sep")


class CompensatedSum:
    """Neumaier summation."""

    __slots__ = ("total", "comp")

    def __init__(self, total=0.0, comp=0.0):
        self.total = float(total)
        self.comp = float(comp)

    def add(self, x):
        x = float(x)
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - t) + x
        else:
            self.comp += (x - t) + self.total
        self.total = t

    def merged(self, other):
        out = CompensatedSum(self.total, self.comp)
        out.add(other.total)
        out.comp += other.comp
        return out

    @property
    def value(self):
        return self.total + self.comp

    def __repr__(self):
        return f"CompensatedSum({self.value!r})"


@dataclass(frozen=True)
class SampleRecord:
    index: int
    det_rho: float
    det_pt: float
    a_sq: float
    b_sq: float
    spectrum: tuple
    is_ppt: bool
    is_abs_sep: bool
    v_a: float | None
    v_a_alt: float | None
    bures_weight: float | None

    @property
    def det_diff(self):
        return self.det_pt - self.det_rho


@dataclass
class BinCell:
    b_lo: float
    b_hi: float
    n_feasible: int = 0
    n_ppt: int = 0
    w_all: CompensatedSum = field(default_factory=CompensatedSum)
    w_sep: CompensatedSum = field(default_factory=CompensatedSum)


@dataclass(frozen=True)
class Estimate:
    estimate: float
    std_error: float

    def as_dict(self):
        return {"estimate": self.estimate, "std_error": self.std_error}


@dataclass(frozen=True)
class CurvePoint:
    b_lo: float
    b_hi: float
    n_feasible: int
    n_ppt: int
    w_all: float
    w_sep: float
    ratio: float
    std_error: float


@dataclass(frozen=True)
class RatioReport:
    hs_ratio: Estimate
    qse_ratio: Estimate
    qse_alt_ratio: Estimate
    bures_ratio: Estimate
    abs_sep_fraction: Estimate
    qse_abs_sep_ratio: Estimate
    curve: list

    def ratios(self):
        return {
            "hs_ratio": self.hs_ratio,
            "qse_ratio": self.qse_ratio,
            "qse_alt_ratio": self.qse_alt_ratio,
            "bures_ratio": self.bures_ratio,
            "abs_sep_fraction": self.abs_sep_fraction,
            "qse_abs_sep_ratio": self.qse_abs_sep_ratio,
        }


class Accumulator:
    """Single-owner tally for one worker; combine workers with :func:`merge`."""

    def __init__(self, total_iterations: int, n_batches: int = DEFAULT_BATCHES, n_bins: int = DEFAULT_BINS):
        if total_iterations < 1 or n_batches < 1 or n_bins < 1:
            raise ValueError("total_iterations, n_batches and n_bins must be positive")
        self.total_iterations = int(total_iterations)
        self.n_batches = int(n_batches)
        self.n_bins = int(n_bins)
        self.iterations = 0
        self.feasible = 0
        self.ppt = 0
        self.abs_sep = 0
        self.excluded_degenerate = 0
        self.excluded_degenerate_alt = 0
        self.excluded_singular_spectrum = 0
        self.sums = {name: CompensatedSum() for name in SUM_NAMES}
        self.max_qse = 0.0
        self.max_bures = 0.0
        self.bins = [BinCell(i / n_bins, (i + 1) / n_bins) for i in range(n_bins)]
        self.batch_counts = np.zeros((n_batches, len(COUNT_NAMES)), dtype=np.int64)
        self.batch_sums = np.zeros((n_batches, len(SUM_NAMES)))
        # (bin, batch, [w_all, w_sep]) for per-bin error bars
        self.bin_batch = np.zeros((n_bins, n_batches, 2))

    @property
    def layout(self):
        return (self.total_iterations, self.n_batches, self.n_bins)

    def batch_of(self, index: int) -> int:
        return index * self.n_batches // self.total_iterations

    def bin_of(self, b_sq: float) -> int:
        return min(int(math.sqrt(max(b_sq, 0.0)) * self.n_bins), self.n_bins - 1)

    def count_iterations(self, start: int, stop: int):
        """Tally global draw indices ``start .. stop-1`` against their batches."""
        if stop <= start:
            return
        self.iterations += stop - start
        n, nb = self.total_iterations, self.n_batches
        for b in range(self.batch_of(start), self.batch_of(stop - 1) + 1):
            lo = max(start, -(-b * n // nb))
            hi = min(stop, -(-(b + 1) * n // nb))
            self.batch_counts[b, 0] += hi - lo

    def _add(self, name, batch, x):
        self.sums[name].add(x)
        self.batch_sums[batch, SUM_NAMES.index(name)] += x

    def ingest(self, rec: SampleRecord):
        b = self.batch_of(rec.index)
        cell_i = self.bin_of(rec.b_sq)
        cell = self.bins[cell_i]
        self.feasible += 1
        self.batch_counts[b, 1] += 1
        cell.n_feasible += 1
        if rec.is_ppt:
            self.ppt += 1
            self.batch_counts[b, 2] += 1
            cell.n_ppt += 1
        if rec.is_abs_sep:
            self.abs_sep += 1
            self.batch_counts[b, 3] += 1
        if rec.v_a is None:
            self.excluded_degenerate += 1
        else:
            self._add("qse_all", b, rec.v_a)
            cell.w_all.add(rec.v_a)
            self.bin_batch[cell_i, b, 0] += rec.v_a
            self.max_qse = max(self.max_qse, rec.v_a)
            if rec.is_ppt:
                self._add("qse_sep", b, rec.v_a)
                cell.w_sep.add(rec.v_a)
                self.bin_batch[cell_i, b, 1] += rec.v_a
            if rec.is_abs_sep:
                self._add("qse_abssep", b, rec.v_a)
        if rec.v_a_alt is None:
            self.excluded_degenerate_alt += 1
        else:
            self._add("qse_alt_all", b, rec.v_a_alt)
            if rec.is_ppt:
                self._add("qse_alt_sep", b, rec.v_a_alt)
        if rec.bures_weight is None:
            self.excluded_singular_spectrum += 1
        else:
            self._add("bures_all", b, rec.bures_weight)
            self.max_bures = max(self.max_bures, rec.bures_weight)
            if rec.is_ppt:
                self._add("bures_sep", b, rec.bures_weight)
        return self

    def sum_value(self, name: str) -> float:
        return self.sums[name].value

    def copy(self):
        return merge(Accumulator(*self.layout), self)


def ingest(acc: Accumulator, rec: SampleRecord) -> Accumulator:
    return acc.ingest(rec)


def merge(a: Accumulator, b: Accumulator) -> Accumulator:
    """Componentwise combination; deterministic for a fixed argument order."""
    if a.layout != b.layout:
        raise LayoutMismatch(f"accumulator layouts differ: {a.layout} vs {b.layout}")
    out = Accumulator(*a.layout)
    for name in ("iterations", "feasible", "ppt", "abs_sep", "excluded_degenerate",
                 "excluded_degenerate_alt", "excluded_singular_spectrum"):
        setattr(out, name, getattr(a, name) + getattr(b, name))
    out.sums = {name: a.sums[name].merged(b.sums[name]) for name in SUM_NAMES}
    out.max_qse = max(a.max_qse, b.max_qse)
    out.max_bures = max(a.max_bures, b.max_bures)
    for cell, ca, cb in zip(out.bins, a.bins, b.bins):
        cell.n_feasible = ca.n_feasible + cb.n_feasible
        cell.n_ppt = ca.n_ppt + cb.n_ppt
        cell.w_all = ca.w_all.merged(cb.w_all)
        cell.w_sep = ca.w_sep.merged(cb.w_sep)
    out.batch_counts = a.batch_counts + b.batch_counts
    out.batch_sums = a.batch_sums + b.batch_sums
    out.bin_batch = a.bin_batch + b.bin_batch
    return out


def ratio_estimate(num_batches, den_batches, num_total=None, den_total=None) -> Estimate:
    """Ratio of totals with a batch-means standard error of the linearized ratio."""
    x = np.asarray(num_batches, dtype=float)
    y = np.asarray(den_batches, dtype=float)
    num = float(x.sum()) if num_total is None else float(num_total)
    den = float(y.sum()) if den_total is None else float(den_total)
    if den <= 0.0:
        return Estimate(math.nan, math.nan)
    r = num / den
    nb = x.size
    if nb < 2:
        return Estimate(r, math.nan)
    resid = x - r * y
    return Estimate(r, math.sqrt(nb / (nb - 1) * float(resid @ resid)) / den)


def report(acc: Accumulator) -> RatioReport:
    if acc.feasible < 1:
        raise EmptyAccumulator("no feasible states were accumulated")
    c = acc.batch_counts
    s = acc.batch_sums
    col = {name: i for i, name in enumerate(SUM_NAMES)}

    def weighted(num, den):
        return ratio_estimate(s[:, col[num]], s[:, col[den]], acc.sum_value(num), acc.sum_value(den))

    curve = []
    for i, cell in enumerate(acc.bins):
        est = ratio_estimate(acc.bin_batch[i, :, 1], acc.bin_batch[i, :, 0], cell.w_sep.value, cell.w_all.value)
        curve.append(CurvePoint(cell.b_lo, cell.b_hi, cell.n_feasible, cell.n_ppt,
                                cell.w_all.value, cell.w_sep.value, est.estimate, est.std_error))
    return RatioReport(
        hs_ratio=ratio_estimate(c[:, 2], c[:, 1]),
        qse_ratio=weighted("qse_sep", "qse_all"),
        qse_alt_ratio=weighted("qse_alt_sep", "qse_alt_all"),
        bures_ratio=weighted("bures_sep", "bures_all"),
        abs_sep_fraction=ratio_estimate(c[:, 3], c[:, 1]),
        qse_abs_sep_ratio=weighted("qse_abssep", "qse_all"),
        curve=curve,
    )


def max_weight_share(acc: Accumulator) -> dict:
    """Largest single weight as a fraction of its total, per weighted measure."""
    qse = acc.sum_value("qse_all")
    bures = acc.sum_value("bures_all")
    return {
        "qse": acc.max_qse / qse if qse > 0 else math.nan,
        "bures": acc.max_bures / bures if bures > 0 else math.nan,
    }


def estimate_ordered_spectra_abs_sep(stream, n_samples: int, chunk: int = 1_000_000):
    """Fraction of flat ordered spectra passing the absolute-separability test.

    Returns ``(estimate, binomial_std_error)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        hits += int(abs_sep_mask(ordered_spectra(stream, m)).sum())
        done += m
    p = hits / n_samples
    return p, math.sqrt(p * (1.0 - p) / n_samples)


def ordered_abs_sep_volume(n_grid: int = 2000) -> float:
    """Deterministic quadrature of the absolutely separable part of the ordered chamber.

    For fixed ``(l2, l3)`` the test ``l1 - l3 < 2 sqrt(l2 l4)`` holds for
    ``l1`` below ``l3 - 2 l2 + 2 sqrt(l2 (1 - 2 l3))``, so only a 2-D midpoint
    rule is needed; ``l3 = t l2`` maps the triangle onto a square.  Volume is
    in ``(l1, l2, l3)`` coordinates, where the whole chamber has 1/144.
    """
    h = 1.0 / n_grid
    x = (np.arange(n_grid) + 0.5) * h
    total = 0.0
    for l2 in 0.5 * x:
        l3 = x * l2
        lo = np.maximum(l2, 1.0 - l2 - 2.0 * l3)
        hi = np.minimum(1.0 - l2 - l3, l3 - 2.0 * l2 + 2.0 * np.sqrt(np.clip(l2 * (1.0 - 2.0 * l3), 0.0, None)))
        total += float(np.clip(hi - lo, 0.0, None).sum()) * l2
    return total * 0.5 * h * h
