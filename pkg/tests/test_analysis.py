import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from torsorlab.arith import ZETA2, ZETA3
from torsorlab.analysis import fit_and_compare, leading_constant, predicted_count, prediction
from torsorlab.densities import euler_product, omega_infty, sum_cx


def test_x2_shape_and_exponents():
    p = prediction("X", 2, c=1.0)
    assert (p.a, p.b, p.height_exponent) == (1, 2, 2)
    B = 1e6
    assert p.shape(B) == pytest.approx(B**2 * math.log(B**2), rel=1e-14)


@pytest.mark.parametrize("B", [1e3, 1e6, 1e12])
def test_x2_doubling_factor(B):
    p = prediction("X", 2, c=2.5)
    assert p(2 * B) / p(B) == pytest.approx(4 * (1 + math.log(2) / math.log(B)), rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_higher_exponents(n):
    px = prediction("X", n, c=1.0)
    assert px.b == 1 and px.a * px.height_exponent == 2
    pp = prediction("Xprime", n, c=1.0)
    assert pp.b == 1 and pp.a * pp.height_exponent == Fraction(2, n + 3)
    assert pp.shape(10.0**30) == pytest.approx(10.0 ** (60 / (n + 3)), rel=1e-12)


def test_x2_constant_assembly():
    om = omega_infty("X", 2, method="quadrature")
    c, err, source = leading_constant("X", 2, omega=om)
    assert c == pytest.approx(0.125 * float(euler_product("X", 2)) * om.value, rel=1e-15)
    assert c == pytest.approx(0.125 * 46.93354178 / (ZETA2 * ZETA3), rel=1e-8)
    assert "alpha=1/8" in source and "quadrature" in source


def test_sum_constant_assembly():
    fs = sum_cx("X", 3, 50)
    c, err, _ = leading_constant("X", 3, M=50)
    assert c == fs.partial + fs.tail and err == fs.tail
    assert predicted_count("X", 3, 1e6, M=50) == pytest.approx(c * 1e12, rel=1e-12)


def test_synthetic_round_trip():
    pred = prediction("X", 2, c=1.0)
    counts = {B: 3.7 * pred.shape(B) for B in (10**3, 10**4, 10**5, 10**6)}
    rep = fit_and_compare(counts, pred.with_c(3.7))
    assert rep.fitted_c == pytest.approx(3.7, rel=1e-12)
    assert all(r == pytest.approx(1, abs=1e-9) for r in rep.ratios)
    assert rep.trend == "flat"


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 100), st.sampled_from([("X", 2), ("X", 3), ("Xprime", 2)]))
def test_fit_recovers_any_constant(c, fam):
    pred = prediction(*fam, c=1.0)
    counts = {B: c * pred.shape(B) for B in (10**4, 10**6, 10**8)}
    assert fit_and_compare(counts, pred).fitted_c == pytest.approx(c, rel=1e-12)


def test_trend_labels():
    pred = prediction("X", 3, c=1.0)
    Bs = (10**3, 10**4, 10**5)
    closer = fit_and_compare({B: f * pred.shape(B) for B, f in zip(Bs, (1.3, 1.1, 1.02))}, pred)
    assert closer.trend == "approaching" and closer.monotone
    away = fit_and_compare({B: f * pred.shape(B) for B, f in zip(Bs, (1.01, 0.9, 0.7))}, pred)
    assert away.trend == "diverging"


def test_report_serialization():
    pred = prediction("X", 2, c=3.0)
    rep = fit_and_compare({100: 339224, 1000: 46732676}, pred)
    payload = json.loads(rep.to_json())
    assert payload["entries"][0]["N"] == "339224" and payload["prediction"]["a"] == "1"
    csv = rep.to_csv()
    assert csv.splitlines()[0] == "B,N,predicted,ratio" and csv.endswith("\n")


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        fit_and_compare({}, prediction("X", 2, c=1.0))
