import itertools
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from torsorlab.arith import ZETA2
from torsorlab.enumerate import (
    OracleRefusal, brute_force_points_X, count_direct_oracle, count_fiberwise, count_line_coprime,
    count_singular_locus, count_X, count_Xp, fiber_count_X, fiber_count_Xp, iter_line, oracle_histogram,
    oracle_line_series, oracle_series, solve_line,
)
from torsorlab.heights import TorsorPoint, height_projective, monomial_set


# lines -----------------------------------------------------------------------


def test_solve_line_examples():
    assert solve_line(2, 3, 5, 10, 10) == 7
    assert solve_line(1, 0, 5, 10, 10) == 21
    assert solve_line(2, 4, 3, 10, 10) == 0


def test_solve_line_rejects_zero_direction():
    with pytest.raises(ValueError):
        solve_line(0, 0, 1, 5, 5)


def _brute_line(a, c, N, Rb, Rd):
    return [(b, d) for b in range(-Rb, Rb + 1) for d in range(-Rd, Rd + 1) if a * d - b * c == N]


@settings(max_examples=200, deadline=None)
@given(st.integers(-7, 7), st.integers(-7, 7), st.integers(-30, 30), st.integers(0, 12), st.integers(0, 12))
def test_solve_line_matches_brute_force(a, c, N, Rb, Rd):
    if (a, c) == (0, 0):
        return
    sols = _brute_line(a, c, N, Rb, Rd)
    assert solve_line(a, c, N, Rb, Rd) == len(sols)
    assert sorted(iter_line(a, c, N, Rb, Rd)) == sorted(sols)


@settings(max_examples=150, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(-40, 40), st.integers(0, 15), st.integers(1, 30))
def test_coprime_line_count(a, c, N, R, m):
    if (a, c) == (0, 0) or math.gcd(a, c) != 1:
        return
    want = sum(1 for b, d in _brute_line(a, c, N, R, R) if math.gcd(math.gcd(b, d), m) == 1)
    assert count_line_coprime(a, c, N, R, m) == want


# X_n --------------------------------------------------------------------------

# six-variable tuple counts are four per point; these were produced by the
# brute-force oracle and match count_X through that accounting
X2_POINTS = {10: 2380, 100: 339224, 1000: 46732676}


def test_count_x2_frozen_values():
    got = count_X(2, sorted(X2_POINTS)).counts()
    assert got == X2_POINTS
    assert oracle_series(2, sorted(X2_POINTS)) == {b: 4 * v for b, v in X2_POINTS.items()}


def test_count_x2_at_ten_thousand():
    assert count_X(2, 10_000).entries[0].quotient == 6010106984


@pytest.mark.parametrize("n,B", [(2, 60), (3, 90), (4, 150)])
def test_count_x_matches_point_brute_force(n, B):
    pts = brute_force_points_X(n, B)
    assert count_X(n, B).entries[0].quotient == len(pts)
    assert count_direct_oracle(n, B) == 4 * len(pts)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_every_bound_against_histogram(n):
    bounds = list(range(0, 201))
    ours = count_X(n, bounds).counts()
    hist = oracle_series(n, bounds)
    assert all(4 * ours[b] == hist[b] for b in bounds)


@pytest.mark.parametrize("n", [2, 3])
def test_line_oracle_agrees(n):
    bounds = [50, 400, 1500]
    assert oracle_line_series(n, bounds) == {b: 4 * v for b, v in count_X(n, bounds).counts().items()}


def test_python_and_compiled_paths_agree():
    for n in (2, 3):
        bounds = [30, 200, 700]
        fast = count_X(n, bounds, method="compiled", fibers=True)
        slow = count_X(n, bounds, method="python", fibers=True)
        assert fast.counts() == slow.counts()
        assert fast.entries[-1].fibers == slow.entries[-1].fibers


def test_raw_is_eight_per_point_and_monotone():
    s = count_X(3, [1, 10, 100, 1000])
    assert all(e.raw == 8 * e.quotient for e in s.entries)
    q = [e.quotient for e in s.entries]
    assert q == sorted(q)


def test_empty_region():
    assert count_X(2, 0).entries[0].quotient == 0
    assert count_Xp(2, 0).entries[0].quotient == 0
    assert count_direct_oracle(2, 0) == 0


def test_oracle_tuple_count_sign_symmetric():
    hist = oracle_histogram(2, 300)
    assert hist.sum() % 4 == 0
    # brute-force points are projective and their height respects the bound
    for p in sorted(brute_force_points_X(2, 40))[:200]:
        assert height_projective(2, p).base <= 40


def test_oracle_refuses_large_bound():
    with pytest.raises(OracleRefusal):
        count_direct_oracle(2, 10**6)


def test_workers_do_not_change_results():
    a = count_X(3, [500, 5000], workers=1, fibers=True)
    b = count_X(3, [500, 5000], workers=4, fibers=True)
    assert a.to_json() == b.to_json()
    c = count_Xp(2, 10**12, workers=1, fibers=True)
    d = count_Xp(2, 10**12, workers=3, fibers=True)
    assert c.to_json() == d.to_json()


def test_big_integer_path_matches_int64_path():
    # forcing the Python enumerator at a bound the compiled path also handles
    assert count_X(4, 3000, method="python").counts() == count_X(4, 3000, method="compiled").counts()


def test_json_strings_for_integers():
    payload = json.loads(count_X(2, [100], fibers=True).to_json())
    e = payload["entries"][0]
    assert e["raw_count"] == str(8 * 339224) and e["B"] == "100"
    assert all(isinstance(f["count"], str) for f in e["fibers"])


def test_csv_layout():
    text = count_X(2, [10, 100]).to_csv(prediction=lambda B: 1.0)
    lines = text.split("\n")
    assert lines[0] == "B,N,logB,N_over_prediction"
    assert text.endswith("\n") and "\r" not in text


# X'_n -------------------------------------------------------------------------


def _xprime_brute(n, B):
    from torsorlab.arith import iroot

    ms = monomial_set("Xprime", n)
    sq, top = (n + 1) ** 2, n * n + 3 * n + 2
    A, Z, W, Rb = iroot(B, sq), iroot(B, top), iroot(B, n + 3), iroot(B, n + 1)
    total = 0
    for a, c, y, z, t, w in itertools.product(range(-A, A + 1), range(-A, A + 1), range(-A, A + 1),
                                              range(-Z, Z + 1), range(-Z, Z + 1), range(-W, W + 1)):
        if y * z * t * w == 0:
            continue
        for b in range(-Rb, Rb + 1):
            for d in range(-Rb, Rb + 1):
                if a * d - b * c != y**n * z ** (n + 1) * w:
                    continue
                p = TorsorPoint("Xprime", n, (a, b, c, d, y, z, t, w))
                if p.is_valid() and ms.max_abs(p.coords) <= B:
                    total += 1
    return total


def test_xprime_brute_force_small():
    assert _xprime_brute(2, 1000) == 2240
    assert count_Xp(2, 1000).entries[0].raw == 2240


def test_xprime_frozen_values():
    # 24896 tuples at 1e5 come from a full-sign brute force over eight variables
    assert count_Xp(2, 10**5).entries[0].raw == 24896
    got = count_Xp(2, [10**8, 10**10]).counts()
    assert got == {10**8: 36280, 10**10: 272560}


@pytest.mark.parametrize("n,B", [(2, 10**7), (2, 10**9), (3, 10**12)])
def test_xprime_loop_orders_agree(n, B):
    ac = count_Xp(n, B, method="python-ac").entries[0].raw
    wt = count_Xp(n, B, method="python-wt").entries[0].raw
    compiled = count_Xp(n, B, method="compiled").entries[0].raw
    assert ac == wt == compiled
    assert ac % 16 == 0


# fibers -----------------------------------------------------------------------


@pytest.mark.parametrize("family,n,B", [("X", 3, 3000), ("X", 2, 500), ("Xprime", 2, 10**11)])
def test_fiber_partition_sums_to_total(family, n, B):
    fib = count_fiberwise(family, n, B)
    total = (count_X if family == "X" else count_Xp)(n, B).entries[0].raw
    assert sum(fib.values()) == total
    assert all((k[0], k[1]) != (0, 0) for k in fib)
    assert all(math.gcd(math.gcd(*k[:2]), k[2]) == 1 for k in fib)


def test_x_fiber_over_100():
    n, B = 3, 100
    fib = count_fiberwise("X", n, B)
    # projective points (a w : b w^(n-1) : c w : d w^(n-1) : z w) lie over (1:0:0) iff c = z = 0
    on_fiber = [p for p in brute_force_points_X(n, B) if p[2] == 0 and p[4] == 0]
    assert on_fiber
    assert fib[(1, 0, 0)] == 8 * len(on_fiber)


@pytest.mark.parametrize("x", [(1, 0, 0), (1, 1, 1), (3, 1, 2), (2, -1, 1), (0, 1, 2)])
def test_single_fiber_counts_match_fiber_map_x(x):
    n, B = 3, 20_000
    fib = count_fiberwise("X", n, B)
    assert 8 * fiber_count_X(n, x, B) == fib.get(x, 0)


@pytest.mark.parametrize("x", [(1, 0, 1), (1, 1, 1), (2, 1, -1), (1, 1, 2), (0, 1, 2), (2, 2, 3)])
def test_single_fiber_counts_match_fiber_map_xprime(x):
    n, B = 2, 10**13
    fib = count_fiberwise("Xprime", n, B)
    assert 16 * fiber_count_Xp(n, x, B) == fib.get(x, 0)


# singular locus ---------------------------------------------------------------


def test_singular_locus_small():
    assert count_singular_locus(2, 1) == 4


def test_singular_locus_monotone_and_asymptotic():
    vals = [count_singular_locus(2, B) for B in (10, 100, 1000, 10**4)]
    assert vals == sorted(vals)
    B = 10**5
    assert abs(count_singular_locus(2, B) / (2 / ZETA2 * B) - 1) < 0.02
    n, B = 3, 10**6
    assert abs(count_singular_locus(n, B) / (2 / ZETA2 * B ** (2 * n / (n + 2))) - 1) < 0.02
