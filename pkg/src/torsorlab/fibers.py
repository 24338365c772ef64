"""Fibration maps to P^2 and the experiments comparing c_x with a height on the base."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit

from . import __version__
from .arith import ZETA2, gcd_all, is_prime, primitive_normalized
from .densities import _x_real_float, c_x
from .heights import TorsorPoint


class FibrationUndefined(ValueError):
    """The point maps to the zero triple."""


def fibration_base(family: str, point: TorsorPoint | Sequence[int], n: int | None = None,
                   *, validate: bool = True) -> tuple[int, int, int]:
    """Normalized base point (a : c : z) resp. (a t : c t : y z) of a torsor point.

    X accepts six- or seven-variable tuples; for the seven-variable model the
    image is (a t : c t : z), the six-variable point it corresponds to.
    """
    if not isinstance(point, TorsorPoint):
        point = TorsorPoint(family, n if n is not None else 2, tuple(point))
    if validate:
        point.validate()
    v = point.named()
    if family == "X":
        t = v.get("t", 1)
        image = (v["a"] * t, v["c"] * t, v["z"])
    elif family == "Xprime":
        image = (v["a"] * v["t"], v["c"] * v["t"], v["y"] * v["z"])
    else:
        raise ValueError(f"unknown family {family!r}")
    if not any(image):
        raise FibrationUndefined(f"{point.coords} maps to (0:0:0)")
    return primitive_normalized(image)


def default_r(n: int) -> int:
    """Default exponent for the X' base height max^r.

    Along x(m) = (2^m : 1 : 1) the constants c_x decay like
    max^-(n + 8/(n+3)); this is the smallest integer r keeping c_x / max^r
    bounded on that sequence.
    """
    return math.ceil(-(n + Fraction(8, n + 3)))


def hbar(x: Sequence[int], n: int, family: str = "X", r: int | None = None) -> Fraction:
    """Base height: 1/max^(n+1) for X, max^r for X'."""
    x = tuple(int(v) for v in x)
    if gcd_all(x) != 1:
        raise ValueError(f"{x} is not primitive")
    big = max(abs(v) for v in x)
    if family == "X":
        return Fraction(1, big ** (n + 1))
    if family == "Xprime":
        return Fraction(big) ** (default_r(n) if r is None else r)
    raise ValueError(f"unknown family {family!r}")


@dataclass
class BTReport:
    family: str
    n: int
    sample: dict
    records: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    sequence: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n, "version": __version__,
                           "sample": self.sample, "records": self.records,
                           "summary": self.summary, "sequence": self.sequence},
                          sort_keys=True, default=str)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if self.sequence:
            wr.writerow(["m", "log_ratio"])
            for rec in self.sequence:
                wr.writerow([rec["m"], repr(rec["log_ratio"])])
        else:
            wr.writerow(["window", "x", "hbar", "c_x", "std_error", "ratio"])
            for rec in self.records:
                wr.writerow([rec["window"], " ".join(map(str, rec["x"])), rec["hbar"],
                             repr(rec["c_x"]), repr(rec["std_error"]), repr(rec["ratio"])])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# the bound for X


@njit(cache=True)
def _x_ratio_extremes(n, W):
    """Min and max of omega_inf,x * max^(n+1) over primitive x with max coordinate <= W.

    The real density depends only on |a|, |c|, |z| and is symmetric in a, c,
    so representatives alpha >= gamma >= 0, Z >= 0 cover every base point.
    """
    lo, hi = np.inf, -np.inf
    lo_x = np.zeros(3, dtype=np.int64)
    hi_x = np.zeros(3, dtype=np.int64)
    for alpha in range(1, W + 1):
        for gamma in range(0, alpha + 1):
            g = alpha if gamma == 0 else math.gcd(alpha, gamma)
            for Z in range(0, W + 1):
                if math.gcd(g, Z) != 1:
                    continue
                big = max(alpha, Z)
                v = _x_real_float(n, alpha, gamma, Z) * float(big) ** (n + 1)
                if v < lo:
                    lo = v
                    lo_x[0], lo_x[1], lo_x[2] = alpha, gamma, Z
                if v > hi:
                    hi = v
                    hi_x[0], hi_x[1], hi_x[2] = alpha, gamma, Z
    return lo, hi, lo_x, hi_x


def _record(family: str, n: int, x: tuple[int, int, int], window, *, r: int | None = None,
            mc: dict | None = None, target_rel: float = 0.02) -> dict:
    h = hbar(x, n, family, r)
    exact = c_x(family, n, x)
    rec = {"window": window, "x": list(x), "hbar": str(h), "c_x": exact.value,
           "std_error": exact.std_error, "method": exact.method, "ratio": exact.value / float(h)}
    if mc is not None:
        est = c_x(family, n, x, method="monte-carlo", target_rel=target_rel, **mc)
        rel = est.std_error / est.value if est.value else math.inf
        rec.update({"mc_value": est.value, "mc_std_error": est.std_error, "mc_samples": est.samples,
                    "flagged": bool(rel > target_rel or abs(est.value - exact.value) > 4 * est.std_error + 1e-9 * exact.value)})
    return rec


def bt_bound_experiment(n: int, windows: Sequence[int] = (30, 100), *, verify: int = 8, seed: int = 0,
                        target_rel: float = 0.02, max_samples: int = 1 << 24,
                        workers: int = 1) -> BTReport:
    """Spread of c_x / H(x) over every primitive x with max coordinate <= W, per window.

    Extremes are found exhaustively from the closed-form real density.  The
    extremal points plus ``verify`` random points per window are re-evaluated
    by Monte Carlo; records whose estimate misses the target relative error,
    or disagrees with the closed form, are flagged.
    """
    if n < 3:
        raise ValueError("the comparison is stated for n >= 3")
    windows = sorted(int(w) for w in windows)
    rng = np.random.Generator(np.random.Philox(seed))
    scale = 0.5 / ZETA2  # c_x = scale * omega_inf,x for X fibers
    jobs: list[tuple[tuple[int, int, int], int]] = []
    summary: dict = {"windows": {}}
    for W in windows:
        lo, hi, lo_x, hi_x = _x_ratio_extremes(n, W)
        summary["windows"][str(W)] = {"min_ratio": scale * lo, "max_ratio": scale * hi,
                                      "spread": hi / lo, "argmin": [int(v) for v in lo_x],
                                      "argmax": [int(v) for v in hi_x]}
        picks = [tuple(int(v) for v in lo_x), tuple(int(v) for v in hi_x)]
        while len(picks) < 2 + verify:
            x = tuple(int(v) for v in rng.integers(-W, W + 1, size=3))
            if gcd_all(x) == 1 and (x[0], x[1]) != (0, 0):
                picks.append(primitive_normalized(x))
        jobs.extend((x, W) for x in picks)
    mc = {"seed": seed, "max_samples": max_samples}

    def run(job):
        x, W = job
        return _record("X", n, x, W, mc=mc, target_rel=target_rel)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(run, jobs))
    spreads = [summary["windows"][str(W)]["spread"] for W in windows]
    summary.update({"min_ratio": min(r["ratio"] for r in records),
                    "max_ratio": max(r["ratio"] for r in records),
                    "spread_growth": max(spreads) / min(spreads),
                    "flagged": sum(r.get("flagged", False) for r in records)})
    sample = {"kind": "exhaustive extremes + random verification", "windows": windows,
              "verify_per_window": verify, "seed": seed, "target_rel": target_rel}
    return BTReport("X", n, sample, records, summary)


# ---------------------------------------------------------------------------
# the refutation for X'


def refutation_points(m: int, p: int = 2, base: Sequence[int] = (1, 1, 1)) -> tuple[tuple, tuple]:
    a0, c0, y0 = (int(v) for v in base)
    return (a0 * p**m, c0, y0), (a0 * p**m, c0 * p**m, y0)


def bt_refutation(n: int = 2, p: int = 2, m_max: int = 6, *, base: Sequence[int] = (1, 1, 1),
                  r: int | None = None, method: str = "closed-form", seed: int = 0,
                  target_rel: float = 0.01, fit_from: int = 2) -> BTReport:
    """c_x along x0(m) = (a0 p^m : c0 : y0) and x0'(m) = (a0 p^m : c0 p^m : y0).

    Both sequences have the same base height for every r, yet the log_p ratio
    of their constants grows linearly in m.  The slope is a least-squares fit
    over m >= fit_from.
    """
    a0, c0, y0 = (int(v) for v in base)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if (a0 * c0 * y0) % p == 0 or gcd_all((a0, c0, y0)) != 1:
        raise ValueError("base must be primitive with p not dividing a0 c0 y0")
    r = default_r(n) if r is None else r
    kw = {} if method == "closed-form" else {"method": "monte-carlo", "seed": seed, "target_rel": target_rel}
    sequence, records = [], []
    for m in range(m_max + 1):
        x, xp = refutation_points(m, p, base)
        cx, cxp = c_x("Xprime", n, x, **kw), c_x("Xprime", n, xp, **kw)
        h, hp = hbar(x, n, "Xprime", r), hbar(xp, n, "Xprime", r)
        log_ratio = math.log(cxp.value / cx.value) / math.log(p)
        err = math.hypot(cx.std_error / cx.value, cxp.std_error / cxp.value) / math.log(p)
        sequence.append({"m": m, "x": list(x), "x_prime": list(xp), "c_x": cx.value, "c_x_prime": cxp.value,
                         "log_ratio": log_ratio, "log_ratio_error": err, "hbar": str(h),
                         "hbar_prime": str(hp), "equal_height": h == hp,
                         "normalized": cx.value / float(h), "normalized_prime": cxp.value / float(hp)})
        for pt, est, hh in ((x, cx, h), (xp, cxp, hp)):
            records.append({"m": m, "x": list(pt), "hbar": str(hh), "c_x": est.value,
                            "std_error": est.std_error, "method": est.method, "ratio": est.value / float(hh)})
    fit = [s for s in sequence if s["m"] >= fit_from]
    slope = float(np.polyfit([s["m"] for s in fit], [s["log_ratio"] for s in fit], 1)[0]) if len(fit) >= 2 else math.nan
    summary = {"slope": slope, "expected_slope": str(Fraction(4, n + 3)), "r": r,
               "min_ratio": min(rec["ratio"] for rec in records),
               "max_ratio": max(rec["ratio"] for rec in records),
               "max_normalized": max(s["normalized"] for s in sequence),
               "last_normalized_prime": sequence[-1]["normalized_prime"]}
    sample = {"kind": "refutation sequences", "p": p, "base": [a0, c0, y0], "m_max": m_max,
              "method": method, "seed": seed, "fit_from": fit_from}
    return BTReport("Xprime", n, sample, records, summary, sequence)
