"""Experiment pipeline: sample, classify, weigh, accumulate, merge, serialize."""
from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from .classify import abs_sep_mask, bures_weights, ppt_mask, range_violations
from .errors import InvariantViolation, RangeViolation
from .estimator import (
    DEFAULT_BATCHES,
    DEFAULT_BINS,
    Accumulator,
    SampleRecord,
    max_weight_share,
    merge,
    report,
)
from .qmat import bloch_coefficients, determinant, eigenvalues, partial_transpose_b
from .sampling import GINIBRE, PAPER, RandomStream, SamplerConfig, ginibre_block, paper_feasible_block
from .steering import volume_from_determinants

MEASURES = ("hs", "qse", "qse_alt", "bures")
#: Ratios reported for each requested measure.
MEASURE_RATIOS = {
    "hs": ("hs_ratio", "abs_sep_fraction"),
    "qse": ("qse_ratio", "qse_abs_sep_ratio"),
    "qse_alt": ("qse_alt_ratio",),
    "bures": ("bures_ratio",),
}
PAPER_CHUNK = 1 << 20
GINIBRE_CHUNK = 1 << 15
CURVE_HEADER = ("bin_lo", "bin_hi", "n_feasible", "n_ppt", "w_all", "w_sep", "ratio", "std_error")
SAMPLE_HEADER = ("index", "det_rho", "det_pt", "a_sq", "b_sq", "lambda1", "lambda2", "lambda3", "lambda4",
                 "is_ppt", "is_abs_sep", "v_a", "v_a_alt", "bures_weight")
WORKERS_ENV = "STEERSEP_WORKERS"


def default_workers() -> int:
    return int(os.environ.get(WORKERS_ENV, "1"))


@dataclass(frozen=True)
class RunConfig:
    iterations: int
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    measures: tuple = MEASURES
    bins: int = DEFAULT_BINS
    batches: int = DEFAULT_BATCHES
    processes: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.bins < 1 or self.batches < 1:
            raise ValueError("bins and batches must be >= 1")
        unknown = set(self.measures) - set(MEASURES)
        if unknown:
            raise ValueError(f"unknown measures {sorted(unknown)}")

    def worker_range(self, worker_id: int):
        w = self.sampler.workers
        return self.iterations * worker_id // w, self.iterations * (worker_id + 1) // w

    def as_dict(self):
        s = self.sampler
        cutoff = str(s.cutoff) if isinstance(s.cutoff, Fraction) else repr(s.cutoff)
        return {
            "iterations": self.iterations,
            "sampler": s.kind,
            "cutoff": cutoff,
            "seed": s.seed,
            "workers": s.workers,
            "measures": list(self.measures),
            "bins": self.bins,
            "batches": self.batches,
            "version": __version__,
        }


def analyze_states(mats: np.ndarray) -> dict:
    """Per-state scalars for a stack of feasible states, with invariant checks.

    Raises :class:`RangeViolation` or :class:`InvariantViolation` carrying the
    offending matrix.
    """
    pt = partial_transpose_b(mats)
    det_rho = determinant(mats)
    det_pt = determinant(pt)
    spectrum = eigenvalues(mats)
    pt_min = eigenvalues(pt)[:, -1]
    a, b, _ = bloch_coefficients(mats)
    a_sq = np.einsum("ij,ij->i", a, a)
    b_sq = np.einsum("ij,ij->i", b, b)
    is_ppt = ppt_mask(pt_min)
    is_abs = abs_sep_mask(spectrum)
    diff = det_pt - det_rho

    bad = range_violations(diff)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise RangeViolation(f"det difference {diff[i]!r} outside [-1/16, 1/432]", matrix=mats[i])
    bad = (diff > 0) & ~is_ppt
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvariantViolation(f"positive det difference {diff[i]!r} on an NPT state", matrix=mats[i])
    bad = is_abs & ~is_ppt
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvariantViolation("absolutely separable spectrum on an NPT state", matrix=mats[i])

    return {
        "det_rho": det_rho,
        "det_pt": det_pt,
        "a_sq": a_sq,
        "b_sq": b_sq,
        "spectrum": spectrum,
        "is_ppt": is_ppt,
        "is_abs_sep": is_abs,
        "v_a": volume_from_determinants(det_rho, det_pt, b_sq),
        "v_a_alt": volume_from_determinants(det_rho, det_pt, a_sq),
        "bures_weight": bures_weights(spectrum),
    }


def _opt(x):
    return None if math.isnan(x) else float(x)


def records_from(indices, feats) -> list[SampleRecord]:
    out = []
    for j, idx in enumerate(indices):
        out.append(SampleRecord(
            index=int(idx),
            det_rho=float(feats["det_rho"][j]),
            det_pt=float(feats["det_pt"][j]),
            a_sq=float(feats["a_sq"][j]),
            b_sq=float(feats["b_sq"][j]),
            spectrum=tuple(float(x) for x in feats["spectrum"][j]),
            is_ppt=bool(feats["is_ppt"][j]),
            is_abs_sep=bool(feats["is_abs_sep"][j]),
            v_a=_opt(feats["v_a"][j]),
            v_a_alt=_opt(feats["v_a_alt"][j]),
            bures_weight=_opt(feats["bures_weight"][j]),
        ))
    return out


def iter_worker_records(cfg: RunConfig, worker_id: int, chunk: int | None = None):
    """Yield ``(chunk_start, chunk_stop, records)`` for one worker's slice of the run."""
    start, stop = cfg.worker_range(worker_id)
    stream = RandomStream(cfg.sampler.seed, worker_id)
    kind = cfg.sampler.kind
    if chunk is None:
        chunk = PAPER_CHUNK if kind == PAPER else GINIBRE_CHUNK
    cutoff = float(cfg.sampler.cutoff)
    pos = start
    while pos < stop:
        m = min(chunk, stop - pos)
        if kind == PAPER:
            idx, mats = paper_feasible_block(stream, m, cutoff)
        else:
            mats = ginibre_block(stream, m).states
            idx = np.arange(m)
        recs = records_from(pos + idx, analyze_states(mats)) if len(idx) else []
        yield pos, pos + m, recs
        pos += m


def run_worker(cfg: RunConfig, worker_id: int, sample_sink=None, progress=None) -> Accumulator:
    acc = Accumulator(cfg.iterations, cfg.batches, cfg.bins)
    for lo, hi, recs in iter_worker_records(cfg, worker_id):
        for rec in recs:
            acc.ingest(rec)
            if sample_sink is not None:
                sample_sink(rec)
        acc.count_iterations(lo, hi)
        if progress is not None:
            progress(worker_id, hi, acc)
    return acc


def _run_worker_star(args):
    return run_worker(*args)


def run_accumulate(cfg: RunConfig, sample_sink=None, progress=None) -> Accumulator:
    """Run every worker and merge in ascending worker order."""
    workers = range(cfg.sampler.workers)
    if cfg.processes > 1 and sample_sink is None and progress is None:
        with ProcessPoolExecutor(max_workers=cfg.processes) as pool:
            parts = list(pool.map(_run_worker_star, [(cfg, w) for w in workers]))
    else:
        parts = [run_worker(cfg, w, sample_sink, progress) for w in workers]
    total = Accumulator(cfg.iterations, cfg.batches, cfg.bins)
    for part in parts:
        total = merge(total, part)
    return total


def summary_dict(cfg: RunConfig, acc: Accumulator, timestamp: str | None = None) -> dict:
    rep = report(acc)
    ratios = rep.ratios()
    wanted = [name for m in cfg.measures for name in MEASURE_RATIOS[m]]
    return {
        "config": cfg.as_dict(),
        "iterations": acc.iterations,
        "feasible": acc.feasible,
        "ppt": acc.ppt,
        "abs_sep": acc.abs_sep,
        "exclusions": {
            "degenerate_b": acc.excluded_degenerate,
            "degenerate_a": acc.excluded_degenerate_alt,
            "singular_spectrum": acc.excluded_singular_spectrum,
        },
        "ratios": {name: ratios[name].as_dict() for name in wanted},
        "sums": {name: acc.sum_value(name) for name in acc.sums},
        "max_weight_share": max_weight_share(acc),
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def write_summary(path, summary: dict):
    with open(path, "w") as fh:
        json.dump(_json_safe(summary), fh, indent=2)
        fh.write("\n")


def _num(x):
    return format(x, ".17g")


def write_curve(path, acc: Accumulator):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for p in report(acc).curve:
            w.writerow([_num(p.b_lo), _num(p.b_hi), p.n_feasible, p.n_ppt,
                        _num(p.w_all), _num(p.w_sep), _num(p.ratio), _num(p.std_error)])


class SampleWriter:
    """Per-sample CSV, one :class:`SampleRecord` per row; empty cells mark exclusions."""

    def __init__(self, fh):
        self._w = csv.writer(fh)
        self._w.writerow(SAMPLE_HEADER)

    def __call__(self, rec: SampleRecord):
        def cell(x):
            return "" if x is None else _num(x)

        self._w.writerow([rec.index, _num(rec.det_rho), _num(rec.det_pt), _num(rec.a_sq), _num(rec.b_sq),
                          *(_num(x) for x in rec.spectrum), int(rec.is_ppt), int(rec.is_abs_sep),
                          cell(rec.v_a), cell(rec.v_a_alt), cell(rec.bures_weight)])


def progress_printer(every: int = 10_000_000):
    marks = {}

    def show(worker_id, position, acc):
        if position // every != marks.get(worker_id, -1):
            marks[worker_id] = position // every
            print(f"[worker {worker_id}] {acc.iterations:,} iterations, {acc.feasible:,} feasible",
                  file=sys.stderr, flush=True)

    return show


def run_experiment(cfg: RunConfig, out_summary=None, out_curve=None, out_samples=None, progress=False):
    """Full pipeline.  Returns ``(accumulator, summary_dict)`` and writes requested files."""
    sink_fh = open(out_samples, "w", newline="") if out_samples else None
    try:
        sink = SampleWriter(sink_fh) if sink_fh else None
        acc = run_accumulate(cfg, sample_sink=sink, progress=progress_printer() if progress else None)
    finally:
        if sink_fh:
            sink_fh.close()
    summary = summary_dict(cfg, acc)
    if out_summary:
        write_summary(out_summary, summary)
    if out_curve:
        write_curve(out_curve, acc)
    return acc, summary
