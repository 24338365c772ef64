import itertools
import json
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from torsorlab.arith import ZETA2, ZETA3
from torsorlab.densities import (
    DensityError, WidenRange, c_x, euler_product, exponent_e, fiber_base, finite_field_count, omega_infty,
    omega_p, padic_density_oracle, sum_cx,
)


# p-adic ------------------------------------------------------------------------


def test_global_omega_p_values():
    assert omega_p("X", 2, 2) == Fraction(21, 8)
    for p in (3, 5, 7, 11):
        assert omega_p("X", 2, p) == (1 + Fraction(1, p)) * (1 + Fraction(1, p) + Fraction(1, p * p))


def test_x_fiber_omega_p():
    assert omega_p("X", 3, 3, (1, 2, 5)) == Fraction(4, 3)


def test_xprime_unramified_is_one_plus_inverse_p():
    for p in (5, 7, 11, 13):
        assert float(omega_p("Xprime", 2, p, (1, 2, 3))) == pytest.approx(1 + 1 / p, abs=1e-15)


def test_xprime_ramified_in_y():
    # nu_2(y^) = 1 and nu_2(a^) = nu_2(c^) = 0 gives 1 + 2^e with e = -1/5
    v = omega_p("Xprime", 2, 2, (1, 1, 2))
    assert exponent_e(2) == Fraction(-1, 5)
    with mpmath.workdps(30):
        assert abs(v - (1 + mpmath.power(2, mpmath.mpf(-1) / 5))) < mpmath.mpf(10) ** -25
    est = padic_density_oracle("Xprime", 2, 2, (1, 1, 2))
    assert abs(float(v) - est.value) <= est.std_error + 4e-16 * float(v)


def _ff_brute(n, p):
    total = 0
    for a, b, c, d, z, w in itertools.product(range(p), repeat=6):
        if (a * d - b * c - z ** (n + 1) * w) % p == 0 and (a, c, z) != (0, 0, 0) and (b, d, w) != (0, 0, 0):
            total += 1
    return total // (p - 1) ** 2


@pytest.mark.parametrize("p", [2, 3, 5])
def test_finite_field_count_brute_force(p):
    assert finite_field_count(2, p) == _ff_brute(2, p)


def test_finite_field_count_values():
    assert [finite_field_count(2, p) for p in (2, 3, 5, 7, 11)] == [21, 52, 186, 456, 1596]
    for p in (2, 3, 5, 7, 11):
        assert finite_field_count(2, p) == (p + 1) * (p * p + p + 1)
        # the threefold's density is the count over p^3
        assert Fraction(finite_field_count(2, p), p**3) == omega_p("X", 2, p)


def test_finite_field_refusal():
    with pytest.raises(DensityError):
        finite_field_count(2, 103)


@pytest.mark.parametrize("x", [(1, 0, 0), (2, 3, 5), (5, 1, 10), (0, 1, 25)])
def test_x_fiber_oracle(x):
    est = padic_density_oracle("X", 3, 5, x, (30, 30))
    assert abs(est.value - 1.2) <= est.std_error + 1e-15


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("x,p", [((1, 1, 1), 3), ((2, 2, 1), 2), ((4, 1, 2), 2), ((3, 6, 1), 3), ((1, 0, 4), 2),
                                 ((5, 10, 1), 5), ((1, 2, 25), 5), ((8, 4, 3), 2), ((9, 3, 2), 3), ((7, 1, 7), 7)])
def test_xprime_fiber_closed_form_vs_oracle(n, x, p):
    est = padic_density_oracle("Xprime", n, p, x, (30, 30))
    closed = float(omega_p("Xprime", n, p, x))
    assert abs(closed - est.value) <= est.std_error + 4e-16 * closed


def test_oracle_tail_halves_per_shell():
    errs = [padic_density_oracle("X", 3, 2, (1, 1, 1), (J, 20)).std_error for J in (5, 6, 7, 8)]
    assert all(b <= a / 2 + 1e-18 for a, b in zip(errs, errs[1:]))


def test_oracle_widen_range():
    with pytest.raises(WidenRange):
        padic_density_oracle("X", 3, 2, (1, 1, 1), (3, 3), tol=1e-12)


def test_non_prime_and_non_primitive():
    with pytest.raises(DensityError):
        omega_p("X", 2, 4)
    with pytest.raises(DensityError):
        omega_p("X", 3, 3, (2, 4, 6))
    with pytest.raises(DensityError):
        c_x("Xprime", 2, (1, 1, 0))
    with pytest.raises(DensityError):
        c_x("X", 3, (0, 0, 1))


def test_fiber_base_normalization():
    assert fiber_base("X", (-1, 2, 3)) == (1, -2, -3)
    assert fiber_base("X", (0, -1, 1)) == (0, 1, -1)


# Euler products ------------------------------------------------------------------


def test_euler_products():
    assert float(euler_product("X", 2)) == pytest.approx(1 / (ZETA2 * ZETA3), rel=1e-15)
    assert float(euler_product("X", 2)) == pytest.approx(0.505739, abs=1e-6)
    assert float(euler_product("X", 3, (1, 2, 3))) == pytest.approx(0.607927, abs=1e-6)
    assert float(euler_product("Xprime", 2, (1, 1, 1))) == pytest.approx(1 / ZETA2, rel=1e-15)
    assert float(euler_product("Xprime", 2, (1, -1, -1))) == pytest.approx(1 / ZETA2, rel=1e-15)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13])
def test_xprime_unramified_euler_factor(p):
    with mpmath.workdps(30):
        factor = (1 - mpmath.mpf(1) / p) * omega_p("Xprime", 3, p, (1, 1, 1))
        assert abs(factor - (1 - mpmath.mpf(1) / p) * (1 + mpmath.mpf(1) / p)) < mpmath.mpf(10) ** -25


def test_xprime_euler_product_finite_and_positive():
    v = euler_product("Xprime", 2, (12, 18, 5))
    assert 0 < v < 10


# real densities --------------------------------------------------------------------


def test_degenerate_fiber_exact():
    est = omega_infty("X", 3, (1, 0, 0))
    assert est.value == 4 and est.std_error == 0 and est.method == "degenerate-exact"
    assert c_x("X", 3, (1, 0, 0)).value == pytest.approx(2 / ZETA2, rel=1e-15)
    assert c_x("X", 3, (1, 0, 0)).value == pytest.approx(1.215854, abs=1e-6)


def test_global_density_mc_vs_quadrature():
    quad = omega_infty("X", 2, method="quadrature")
    mc = omega_infty("X", 2, seed=11, target_rel=0.002)
    assert mc.method == "monte-carlo" and quad.method == "quadrature"
    assert abs(mc.value - quad.value) <= 3 * mc.std_error
    assert quad.value == pytest.approx(46.93354178, rel=1e-7)


def test_mc_reproducible_and_seed_split():
    a = omega_infty("X", 2, seed=3, samples=1 << 18)
    assert a == omega_infty("X", 2, seed=3, samples=1 << 18)
    b = omega_infty("X", 2, seed=4, samples=1 << 18)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.std_error, b.std_error)


@pytest.mark.parametrize("x", [(2, 1, 1), (3, -2, 1), (5, 3, 4), (1, 1, 1)])
def test_chart_independence(x):
    ea = omega_infty("X", 3, x, method="monte-carlo", chart="a", seed=1, target_rel=0.003)
    ec = omega_infty("X", 3, x, method="monte-carlo", chart="c", seed=2, target_rel=0.003)
    assert abs(ea.value - ec.value) <= 3 * math.hypot(ea.std_error, ec.std_error) + 1e-12


@pytest.mark.parametrize("family,n,x", [("X", 3, (3, 1, 2)), ("X", 4, (2, 3, 7)), ("X", 3, (5, 2, 0)),
                                        ("Xprime", 2, (1, 1, 1)), ("Xprime", 2, (3, 1, 2)),
                                        ("Xprime", 3, (2, 2, 5)), ("Xprime", 2, (0, 1, 2))])
def test_closed_form_vs_monte_carlo(family, n, x):
    exact = omega_infty(family, n, x)
    mc = omega_infty(family, n, x, method="monte-carlo", seed=5, target_rel=0.003)
    assert abs(exact.value - mc.value) <= 4 * mc.std_error + 1e-12 * exact.value


def test_fiber_density_times_height_bounded():
    vals = []
    for x in [(1, 0, 0), (1, 1, 1), (7, 3, 2), (10, 1, 9), (13, 12, 0), (20, 3, 17), (1, 0, 30)]:
        big = max(abs(v) for v in x)
        vals.append(omega_infty("X", 3, x).value * big**4)
    assert min(vals) > 0.5 * max(vals)


def test_density_json():
    payload = json.loads(omega_infty("X", 2, seed=9, samples=1 << 16).to_json("X", 2))
    assert set(payload) == {"family", "n", "x", "value", "std_error", "samples", "method", "seed"}
    assert payload["x"] is None and payload["seed"] == 9


@settings(max_examples=60, deadline=None)
@given(st.integers(-40, 40), st.integers(-40, 40), st.integers(-40, 40), st.sampled_from([2, 3, 4]))
def test_c_x_positive(a, c, y, n):
    if math.gcd(math.gcd(a, c), y) != 1 or (a, c) == (0, 0):
        return
    assert c_x("X", n, (a, c, y)).value > 0
    if y != 0:
        assert c_x("Xprime", n, (a, c, y)).value > 0


# fiber sums ------------------------------------------------------------------------


def test_sum_cx_x3():
    fs = sum_cx("X", 3, 200)
    parts = [fs.partial_at(m) for m in range(1, 201)]
    assert all(b >= a for a, b in zip(parts, parts[1:]))
    assert fs.tail_kind == "rigorous"
    assert fs.partial == pytest.approx(20.71074, abs=1e-4)
    tails = [sum_cx("X", 3, M).tail for M in (25, 50, 100)]
    assert tails == sorted(tails, reverse=True)


def test_sum_cx_x2_grows_like_log():
    fs = sum_cx("X", 2, 400)
    S = [fs.partial_at(m) for m in (50, 100, 200, 400)]
    inc = [b - a for a, b in zip(S, S[1:])]
    assert all(v > 7 for v in inc)
    assert max(inc) / min(inc) < 1.05
    assert math.isinf(fs.tail)


def test_sum_cx_matches_direct_sum():
    M = 6
    direct = 0.0
    for x in itertools.product(range(-M, M + 1), repeat=3):
        if (x[0], x[1]) == (0, 0) or math.gcd(math.gcd(*x[:2]), x[2]) != 1:
            continue
        if x != fiber_base("X", x):
            continue
        direct += c_x("X", 3, x).value
    assert sum_cx("X", 3, M).partial == pytest.approx(direct, rel=1e-12)


def test_sum_cx_xprime_matches_direct_sum():
    M = 5
    direct = 0.0
    for x in itertools.product(range(-M, M + 1), repeat=3):
        if (x[0], x[1]) == (0, 0) or x[2] == 0 or math.gcd(math.gcd(*x[:2]), x[2]) != 1:
            continue
        if x != fiber_base("Xprime", x):
            continue
        direct += c_x("Xprime", 2, x).value
    assert sum_cx("Xprime", 2, M).partial == pytest.approx(direct, rel=1e-10)
