"""The twelve acceptance checks, shared by the test suite and ``torsorlab verify-all``."""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .arith import ZETA2


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return (f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'}  {self.title}: "
                f"{self.detail} ({self.elapsed:.1f} s)")

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "elapsed": self.elapsed, "data": self.data}


def _geomspace_ints(lo: int, hi: int, k: int) -> list[int]:
    return sorted({int(round(v)) for v in np.geomspace(lo, hi, k)})


# ---------------------------------------------------------------------------


def c1_invariants(quick: bool = False) -> CriterionResult:
    from .geometry import cox_data, invariants, is_simplicial

    bad = []
    for n in range(2, 11):
        ix, ixp = invariants("X", n), invariants("Xprime", n)
        if ix.a != Fraction(2 * n, n + 2) or ix.b != (2 if n == 2 else 1):
            bad.append(f"X_{n}: a={ix.a} b={ix.b}")
        if ixp.a != Fraction(2 * n + 2, n + 3) or ixp.b != 1:
            bad.append(f"X'_{n}: a={ixp.a} b={ixp.b}")
        if is_simplicial(cox_data("Xprime", n).effective_cone()):
            bad.append(f"Eff(X'_{n}) simplicial")
        if not is_simplicial(cox_data("X", n, rank=2).effective_cone()):
            bad.append(f"Eff(X~_{n}) not simplicial")
    return CriterionResult(1, "exact invariants n=2..10", not bad, "; ".join(bad) or "all exact")


XPRIME_FIBERS_PADIC = [(1, 1, 1), (1, 0, 1), (1, 1, 2), (2, 1, 1), (2, 2, 1), (1, 1, 4), (4, 1, 1), (1, 3, 3),
                       (3, 3, 1), (1, 1, 9), (9, 3, 1), (5, 1, 1), (1, 1, 5), (5, 5, 2), (2, 3, 6), (1, 2, 8),
                       (8, 8, 3), (6, 2, 3), (3, 1, 2), (1, 5, 25)]


def c2_padic(quick: bool = False) -> CriterionResult:
    from .arith import prime_factors
    from .densities import finite_field_count, omega_p, padic_density_oracle

    bad = []
    for p in (2, 3, 5, 7, 11):
        closed = (1 + Fraction(1, p)) * (1 + Fraction(1, p) + Fraction(1, p * p))
        ff = finite_field_count(2, p)
        if omega_p("X", 2, p) != closed or Fraction(ff, p**3) != closed:
            bad.append(f"p={p}: omega_p={omega_p('X', 2, p)} count={ff}")
    checked = ramified = 0
    worst = 0.0
    for x in XPRIME_FIBERS_PADIC:
        primes = sorted(set(prime_factors(abs(x[0] * x[1] * x[2]) or abs(x[1] * x[2]))) | {2})
        for p in primes:
            est = padic_density_oracle("Xprime", 2, p, x, (30, 30))
            closed = float(omega_p("Xprime", 2, p, x))
            gap = abs(closed - est.value)
            worst = max(worst, gap / max(est.std_error, 1e-300))
            checked += 1
            ramified += any(v % p == 0 for v in x if v)
            if gap > est.std_error + 4e-16 * closed:
                bad.append(f"x={x} p={p}: closed {closed} vs oracle {est.value} +- {est.std_error}")
    detail = (f"X_2 closed form = count/p^3 at p<=11; {checked} fiber/prime pairs ({ramified} ramified) "
              f"within tail bound, worst gap/bound {worst:.2f}")
    return CriterionResult(2, "p-adic densities", not bad, "; ".join(bad) or detail)


def c3_oracle(quick: bool = False) -> CriterionResult:
    from .enumerate import count_X, oracle_line_series, oracle_series

    full_to = {2: 300, 3: 400, 4: 600} if quick else {2: 1000, 3: 1500, 4: 2500}
    top = 3000 if quick else 10_000
    bad, notes = [], []
    for n, b1 in full_to.items():
        every = list(range(1, b1 + 1))
        ours = count_X(n, every).counts()
        hist = oracle_series(n, every)
        mism = [b for b in every if 4 * ours[b] != hist[b] or hist[b] % 4]
        grid = _geomspace_ints(b1, top, 12 if quick else 40)
        ours_g = count_X(n, grid).counts()
        line = oracle_line_series(n, grid)
        mism += [b for b in grid if 4 * ours_g[b] != line[b]]
        if mism:
            bad.append(f"n={n}: mismatch at B={mism[:5]}")
        notes.append(f"n={n}: every B<={b1} + {len(grid)} bounds to {top}")
    return CriterionResult(3, "oracle equivalence", not bad, "; ".join(bad) or "exact; " + ", ".join(notes))


def c4_x2(quick: bool = False) -> CriterionResult:
    from .analysis import fit_and_compare, prediction
    from .densities import omega_infty
    from .enumerate import count_X

    om = omega_infty("X", 2, seed=0, target_rel=0.01)
    pred = prediction("X", 2, omega=om)
    rep = fit_and_compare(count_X(2, [100, 1000, 10_000]).counts(), pred)
    r = rep.ratios
    ok = om.std_error <= 0.01 * om.value and 0.75 <= r[-1] <= 1.25 and rep.monotone
    detail = (f"omega_inf={om.value:.3f}+-{om.std_error:.3f}, c={pred.c:.5f}, ratios "
              + ", ".join(f"{v:.4f}" for v in r) + f", |r-1| nonincreasing={rep.monotone}")
    return CriterionResult(4, "X_2 count vs c B^2 log B^2", ok, detail, data={"ratios": r})


def c5_x3(quick: bool = False) -> CriterionResult:
    from .analysis import fit_and_compare, prediction
    from .densities import sum_cx
    from .enumerate import count_X

    M = 200 if quick else 400
    fs = sum_cx("X", 3, M)
    pred = prediction("X", 3, c=fs.partial + fs.tail, c_error=fs.tail)
    rep = fit_and_compare(count_X(3, [10_000, 100_000]).counts(), pred)
    r4, r5 = rep.ratios
    tail_rel = fs.tail / fs.partial
    ok = tail_rel <= 0.005 and abs(r4 - 1) <= 0.10 and abs(r5 - 1) <= 0.05
    return CriterionResult(5, "X_3 count vs c B^2", ok,
                           f"c={pred.c:.5f} (tail {tail_rel:.3%}), ratio {r4:.4f} at 1e4, {r5:.4f} at 1e5")


X_FIBERS = [(1, 0, 0), (1, 1, 1), (3, 1, 2), (2, 3, 7), (0, 1, 1), (5, 2, 0), (1, 0, 3), (2, 1, 0), (1, 2, 3),
            (4, 1, 1)]
XPRIME_FIBERS = [(1, 0, 1), (1, 1, 1), (2, 1, 1), (1, 1, 2), (2, 2, 1), (3, 1, 2), (1, 2, 4), (4, 4, 3), (0, 1, 2),
                 (6, 2, 3)]


def c6_fibers(quick: bool = False) -> CriterionResult:
    from .densities import c_x
    from .enumerate import fiber_count_X, fiber_count_Xp

    BX = 10**6 if quick else 10**7
    BXp = 10**20 if quick else 10**25
    worst = 0.0
    bad = []
    for x in X_FIBERS:
        r = fiber_count_X(3, x, BX) / (c_x("X", 3, x).value * BX**2)
        worst = max(worst, abs(r - 1))
        if abs(r - 1) > 0.05:
            bad.append(f"X {x}: {r:.4f}")
    for x in XPRIME_FIBERS:
        r = fiber_count_Xp(2, x, BXp) / (c_x("Xprime", 2, x).value * BXp**0.4)
        worst = max(worst, abs(r - 1))
        if abs(r - 1) > 0.05:
            bad.append(f"X' {x}: {r:.4f}")
    detail = f"10+10 fibers at B=1e{round(math.log10(BX))} / 1e{round(math.log10(BXp))}, max |ratio-1|={worst:.2e}"
    return CriterionResult(6, "per-fiber counts vs c_x", not bad, "; ".join(bad) or detail)


def c7_xprime(quick: bool = False) -> CriterionResult:
    from .analysis import fit_and_compare, prediction
    from .densities import sum_cx
    from .enumerate import count_Xp

    fs = sum_cx("Xprime", 2, 200)
    pred = prediction("Xprime", 2, c=fs.partial + fs.tail, c_error=fs.tail)
    bounds = [10**e for e in range(8, 17 if quick else 19, 2)]
    rep = fit_and_compare(count_Xp(2, bounds).counts(), pred)
    r = rep.ratios
    ok = rep.monotone and abs(r[-1] - 1) <= 0.35
    detail = (f"c={pred.c:.3f} (extrapolated tail {fs.tail:.2f}); ratios "
              + ", ".join(f"{v:.3f}" for v in r) + f" for B=1e8..1e{2 * len(r) + 6}")
    return CriterionResult(7, "X'_2 global count vs c B^(2/5)", ok, detail, data={"ratios": r})


def c8_bt_bound(quick: bool = False) -> CriterionResult:
    from .fibers import bt_bound_experiment

    rep = bt_bound_experiment(3, (30, 100), verify=2 if quick else 8, target_rel=0.02)
    s = rep.summary
    resolved = all(rec["mc_std_error"] <= 0.02 * rec["mc_value"] for rec in rep.records)
    ok = s["spread_growth"] <= 2 and resolved and s["flagged"] == 0
    spreads = ", ".join(f"W={w}: {v['spread']:.4f}" for w, v in s["windows"].items())
    return CriterionResult(8, "c_x / H(x) spread for X_3", ok,
                           f"{spreads}; growth {s['spread_growth']:.3f}; {len(rep.records)} points checked "
                           f"by Monte Carlo, {s['flagged']} flagged")


def c9_refutation(quick: bool = False) -> CriterionResult:
    from .fibers import bt_refutation

    rep = bt_refutation(2, 2, 6)
    seq = rep.sequence
    slope = rep.summary["slope"]
    norm = [s["normalized"] for s in seq]
    normp = [s["normalized_prime"] for s in seq]
    bounded = max(norm) <= 2 * norm[0]
    growing = all(b > a for a, b in zip(normp[2:], normp[3:])) and normp[-1] >= 4 * normp[0]
    equal = all(s["equal_height"] for s in seq)
    ok = abs(slope - 0.75) <= 0.075 and bounded and growing and equal
    return CriterionResult(9, "refutation sequences for X'_2", ok,
                           f"slope {slope:.4f} (target 3/4 +- 10%, theory 4/5); normalized c_x max "
                           f"{max(norm):.3f}, primed {normp[0]:.3f} -> {normp[-1]:.3f}; equal heights={equal}")


def c10_singular(quick: bool = False) -> CriterionResult:
    from .enumerate import count_singular_locus

    B = 10**6
    N = count_singular_locus(2, B)
    r = N / (2 / ZETA2 * B)
    return CriterionResult(10, "singular locus count", 0.98 <= r <= 1.02, f"N={N}, ratio {r:.5f}")


def c11_convergence(quick: bool = False) -> CriterionResult:
    from .densities import sum_cx

    lo, hi = (100, 200) if quick else (200, 400)
    fx = sum_cx("X", 3, hi)
    dx = fx.partial_at(hi) / fx.partial_at(lo) - 1
    fp = sum_cx("Xprime", 2, hi)
    dp = fp.partial_at(hi) / fp.partial_at(lo) - 1
    f2 = sum_cx("X", 2, 4 * lo)
    Ms = [25 * 2**k for k in range(int(math.log2(f2.M // 25)) + 1)]
    S = [f2.partial_at(m) for m in Ms]
    inc = np.diff(S)
    slope = float(np.polyfit(np.log(Ms), S, 1)[0])
    log_like = bool(np.all(inc > 0) and inc.max() / inc.min() <= 1.1)
    ok = abs(dx) < 0.005 and abs(dp) < 0.005 and log_like
    detail = (f"X_3 M={lo}->{hi}: {dx:+.3%}; X'_2: {dp:+.3%}; X_2 partial sums grow by "
              + ", ".join(f"{v:.3f}" for v in inc) + f" per doubling (slope {slope:.3f} per log M)")
    return CriterionResult(11, "convergence of fiber sums", ok, detail,
                           data={"x3": dx, "xprime2": dp, "x2_increments": inc.tolist()})


def c12_determinism(quick: bool = False) -> CriterionResult:
    from .cli import RunConfig, compute, render, run

    def artifact(workers: int, **kw) -> bytes:
        cfg = RunConfig(workers=workers, use_cache=False, **kw)
        return render(cfg, *compute(cfg))

    cases = [
        dict(command="count", family="X", n=2, B=[3000], seed=42),
        dict(command="count", family="X", n=3, B=[1000, 20_000], seed=1, options={"blocks": 8}),
        dict(command="count", family="Xprime", n=2, B=[10**12], seed=0),
        dict(command="count-fibers", family="X", n=3, B=[2000], seed=0),
        dict(command="density", family="X", n=2, seed=7, options={"quantity": "omega_inf"}),
        dict(command="density", family="X", n=3, seed=3,
             options={"quantity": "c_x", "x": [3, 1, 2], "method": "monte-carlo"}),
    ]
    bad = []
    for case in cases:
        ref = artifact(1, **case)
        for w in (1, 2, 4):
            if artifact(w, **case) != ref:
                bad.append(f"{case['command']} {case.get('family')} workers={w}")
    with tempfile.TemporaryDirectory() as tmp:
        cfg = dict(command="count", family="X", n=2, B=[500], seed=0, cache_dir=tmp)
        first = run(RunConfig(output=f"{tmp}/a.json", **cfg))
        again = run(RunConfig(output=f"{tmp}/b.json", workers=3, **cfg))
        if first != again:
            bad.append("cache hit differs")
    return CriterionResult(12, "determinism", not bad,
                           "; ".join(bad) or f"{len(cases)} configs byte-identical at 1, 2, 4 workers; cache hit identical")


CRITERIA: dict[int, Callable[[bool], CriterionResult]] = {
    1: c1_invariants, 2: c2_padic, 3: c3_oracle, 4: c4_x2, 5: c5_x3, 6: c6_fibers,
    7: c7_xprime, 8: c8_bt_bound, 9: c9_refutation, 10: c10_singular, 11: c11_convergence,
    12: c12_determinism,
}


def run_criterion(number: int, quick: bool = False) -> CriterionResult:
    start = time.perf_counter()
    try:
        res = CRITERIA[number](quick)
    except Exception as exc:  # a crash is reported as a failure of that criterion
        res = CriterionResult(number, CRITERIA[number].__name__, False, f"raised {type(exc).__name__}: {exc}")
    res.elapsed = time.perf_counter() - start
    return res


def run_all(quick: bool = False, only: list[int] | None = None,
            echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    out = []
    for k in sorted(only or CRITERIA):
        res = run_criterion(k, quick)
        if echo:
            echo(res.line())
        out.append(res)
    return out
