import csv

import pytest

from vdfrate.bench import (
    EVAL_HEADER,
    FIT_HEADER,
    PROOF_HEADER,
    VERIFY_HEADER,
    bench_all,
    calibrate,
    fit_line,
    median_mad,
)
from vdfrate.group_arith import RsaGroup
from vdfrate.multiexp import CSV_HEADER


def test_median_mad():
    assert median_mad([1, 2, 3, 4, 100]) == (3, 1)


def test_fit_line_exact():
    fit = fit_line([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1)
    assert fit.r_squared == pytest.approx(1)
    flat = fit_line([1, 2, 3], [5, 5, 5])
    assert flat.slope == 0 and flat.relative_drift == 0


def test_bench_all_small(tmp_path):
    report = bench_all(
        tmp_path,
        lambdas=(256,),
        taus=(64, 128, 256),
        reps=2,
        multiexp_lambdas=(256,),
        multiexp_ks=(128,),
        multiexp_reps=2,
    )
    expected = {
        "eval_time.csv": EVAL_HEADER,
        "proof_time.csv": PROOF_HEADER,
        "verify_time.csv": VERIFY_HEADER,
        "fit_report.csv": FIT_HEADER,
        "multiexp.csv": CSV_HEADER,
    }
    assert {p.name for p in report.files} == set(expected)
    for name, header in expected.items():
        with open(tmp_path / name) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == header
        assert len(rows) > 1
    assert (256, "eval") in report.fits and (256, "verify") in report.fits


def test_calibrate_small_group():
    cal = calibrate(RsaGroup.generate(256, seed=2).public(), tau=2048)
    assert cal.sigma > 0 and cal.verify_seconds > 0 and cal.hash_seconds > 0
    assert cal.lam == 256
