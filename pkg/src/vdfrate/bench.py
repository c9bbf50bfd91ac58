"""Benchmark orchestration and local calibration.

All timings use ``time.perf_counter_ns`` and are summarised as median and
median absolute deviation.
"""

from __future__ import annotations

import logging
import random
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .group_arith import RSA_2048, RsaGroup
from .multiexp import CSV_HEADER as MULTIEXP_HEADER
from .multiexp import bench_multiexp, write_csv
from .pow import PowPuzzle, pow_verify
from .vdf import VdfChallenge, evaluate, prove_direct, prove_long_division, verify

log = logging.getLogger(__name__)

DEFAULT_TAUS = tuple(1 << j for j in range(10, 17))
DEFAULT_LAMBDAS = (1024, 2048, 3072)

EVAL_HEADER = ("lambda", "tau", "median_ns", "mad_ns")
PROOF_HEADER = ("lambda", "tau", "method", "median_ns", "mad_ns")
VERIFY_HEADER = ("lambda", "tau", "median_ns", "mad_ns", "mults")
FIT_HEADER = ("lambda", "series", "slope_ns_per_tau", "intercept_ns", "r_squared", "relative_drift")


def median_mad(samples: Sequence[float]) -> tuple[float, float]:
    med = statistics.median(samples)
    return med, statistics.median(abs(s - med) for s in samples)


def time_ns(fn: Callable[[], object], reps: int) -> list[int]:
    out = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        out.append(time.perf_counter_ns() - t0)
    return out


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    relative_drift: float  # |slope| * max(x) / mean(y)


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    slope, intercept = statistics.linear_regression(xs, ys)
    if statistics.pstdev(ys) == 0:
        r2 = 1.0
    else:
        r2 = statistics.correlation(xs, ys) ** 2
    drift = abs(slope) * max(xs) / statistics.fmean(ys)
    return LinearFit(slope, intercept, r2, drift)


def make_proofs(group: RsaGroup, tau: int, count: int, k: int = 128, seed: int = 0):
    """Honest (message, proof) pairs produced by the long-division prover."""
    rng = random.Random(f"{seed}/{tau}/{group.bits}")
    out = []
    for _ in range(count):
        ch = VdfChallenge(rng.randbytes(32), tau, group, k)
        proof, _ = prove_long_division(ch, evaluate(ch).y)
        out.append((ch.message, proof))
    return out


def time_verify(group: RsaGroup, proofs, k: int = 128, inner: int = 3) -> tuple[list[int], list[int]]:
    """Best-of-``inner`` verify time per proof, plus multiplication counts."""
    times, mults = [], []
    for message, proof in proofs:
        best = None
        for _ in range(inner):
            t0 = time.perf_counter_ns()
            res = verify(message, proof.tau, proof, group, k)
            dt = time.perf_counter_ns() - t0
            if not res:
                raise AssertionError("honest proof rejected during benchmark")
            best = dt if best is None else min(best, dt)
        times.append(best)
        mults.append(res.multiplications)
    return times, mults


def measure_eval(group: RsaGroup, taus: Iterable[int], reps: int = 3, k: int = 128) -> list[dict]:
    rows = []
    for tau in taus:
        ch = VdfChallenge(b"bench/eval", tau, group, k)
        med, mad = median_mad(time_ns(lambda: evaluate(ch), reps))
        rows.append({"lambda": group.bits, "tau": tau, "median_ns": med, "mad_ns": mad})
    return rows


@dataclass(frozen=True)
class Calibration:
    sigma: float
    verify_seconds: float
    hash_seconds: float
    lam: int


def calibrate(group: Optional[RsaGroup] = None, k: int = 128, tau: int = 1 << 14) -> Calibration:
    """Measure squarings/s, seconds per VDF verification and per PoW check."""
    group = group or RsaGroup(RSA_2048)
    ch = VdfChallenge(b"calibrate", tau, group, k)
    t0 = time.perf_counter()
    evaluate(ch)
    sigma = tau / (time.perf_counter() - t0)
    small = VdfChallenge(b"calibrate", 1024, group, k)
    proof, _ = prove_long_division(small, evaluate(small).y)
    times, _ = time_verify(group, [(b"calibrate", proof)] * 5, k)
    puzzle = PowPuzzle(b"calibrate", 0)
    hashes = time_ns(lambda: pow_verify(puzzle, 7), 2000)
    return Calibration(
        sigma=sigma,
        verify_seconds=statistics.median(times) / 1e9,
        hash_seconds=statistics.median(hashes) / 1e9,
        lam=group.bits,
    )


@dataclass
class BenchReport:
    out_dir: Path
    fits: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def bench_all(
    out_dir,
    lambdas: Sequence[int] = DEFAULT_LAMBDAS,
    taus: Sequence[int] = DEFAULT_TAUS,
    reps: int = 3,
    k: int = 128,
    multiexp_lambdas: Sequence[int] = (2048, 4096),
    multiexp_ks: Sequence[int] = (128, 192, 256),
    multiexp_reps: int = 30,
    seed: int = 0,
) -> BenchReport:
    """Write eval/proof/verify/multiexp timing CSVs and a linear-fit report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = BenchReport(out)
    eval_rows, proof_rows, verify_rows, fit_rows = [], [], [], []
    for lam in lambdas:
        group = RsaGroup.generate(lam, seed).public()
        log.info("benchmarking lambda=%d", lam)
        rows = measure_eval(group, taus, reps, k)
        eval_rows += rows
        vmeds = []
        for tau in taus:
            ch = VdfChallenge(b"bench/proof", tau, group, k)
            y = evaluate(ch).y
            for method, fn in (
                ("direct", lambda: prove_direct(ch, y)),
                ("long_division", lambda: prove_long_division(ch, y)),
            ):
                med, mad = median_mad(time_ns(fn, reps))
                proof_rows.append(
                    {"lambda": lam, "tau": tau, "method": method, "median_ns": med, "mad_ns": mad}
                )
            times, mults = time_verify(group, make_proofs(group, tau, reps, k, seed), k)
            med, mad = median_mad(times)
            vmeds.append(med)
            verify_rows.append(
                {"lambda": lam, "tau": tau, "median_ns": med, "mad_ns": mad, "mults": max(mults)}
            )
        for series, ys in (("eval", [r["median_ns"] for r in rows]), ("verify", vmeds)):
            fit = fit_line(list(taus), ys)
            report.fits[(lam, series)] = fit
            fit_rows.append(
                {
                    "lambda": lam,
                    "series": series,
                    "slope_ns_per_tau": fit.slope,
                    "intercept_ns": fit.intercept,
                    "r_squared": fit.r_squared,
                    "relative_drift": fit.relative_drift,
                }
            )
    mrows = bench_multiexp(multiexp_lambdas, multiexp_ks, (2,), multiexp_reps, seed)
    for name, header, rows in (
        ("eval_time.csv", EVAL_HEADER, eval_rows),
        ("proof_time.csv", PROOF_HEADER, proof_rows),
        ("verify_time.csv", VERIFY_HEADER, verify_rows),
        ("fit_report.csv", FIT_HEADER, fit_rows),
        ("multiexp.csv", MULTIEXP_HEADER, mrows),
    ):
        write_csv(out / name, rows, header)
        report.files.append(out / name)
    return report
