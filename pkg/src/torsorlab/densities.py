"""Local densities, Euler products and per-fiber leading constants.

Fiber conventions: for X_n a base point is (a : c : z), for X'_n it is
(a^ : c^ : y^), always as a primitive, sign-normalized integer triple.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np
from numba import njit

from .arith import ZETA2, ZETA2_MP, ZETA3_MP, gcd_all, is_prime, prime_factors, primitive_normalized, valuation

METHODS = ("closed-form", "monte-carlo", "shell-sum", "degenerate-exact", "quadrature")
MP_DPS = 30
FF_LIMIT = 101


class DensityError(ValueError):
    pass


class WidenRange(RuntimeError):
    """The valuation window of the p-adic oracle is too small for the requested accuracy."""


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    std_error: float
    samples: int
    method: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")

    def to_dict(self, family: str, n: int, x: Sequence[int] | None) -> dict:
        return {"family": family, "n": n, "x": None if x is None else [int(v) for v in x],
                "value": repr(float(self.value)), "std_error": repr(float(self.std_error)),
                "samples": self.samples, "method": self.method, "seed": self.seed}

    def to_json(self, family: str, n: int, x: Sequence[int] | None = None) -> str:
        return json.dumps(self.to_dict(family, n, x), sort_keys=True)


def fiber_base(family: str, x: Sequence[int]) -> tuple[int, int, int]:
    """Validate an admissible primitive base point and return its normalized form."""
    x = tuple(int(v) for v in x)
    if len(x) != 3:
        raise DensityError("a base point has three coordinates")
    if gcd_all(x) != 1:
        raise DensityError(f"{x} is not primitive")
    if x[0] == 0 and x[1] == 0:
        raise DensityError("base points on V(a, c) are not admissible")
    if family == "Xprime" and x[2] == 0:
        raise DensityError("base points on V(y) are not admissible for X'")
    return primitive_normalized(x)


def exponent_e(n: int) -> Fraction:
    return Fraction(1 - n, n + 3)


# ---------------------------------------------------------------------------
# p-adic densities


def omega_p(family: str, n: int, p: int, x: Sequence[int] | None = None):
    """Local density at p: a Fraction for X, an mpmath real for X' fibers."""
    if not is_prime(p):
        raise DensityError(f"{p} is not prime")
    if family == "X":
        if x is None:
            if n != 2:
                raise DensityError("the global p-adic density is only provided for n = 2")
            return (1 + Fraction(1, p)) * (1 + Fraction(1, p) + Fraction(1, p * p))
        fiber_base("X", x)
        return 1 + Fraction(1, p)
    if family == "Xprime":
        if x is None:
            raise DensityError("X' densities are fiberwise; pass a base point")
        ah, ch, yh = fiber_base("Xprime", x)
        nu = valuation(yh, p)
        mu = min(valuation(ah, p) if ah else 10**9, valuation(ch, p) if ch else 10**9)
        return _omega_p_xprime(n, p, nu, mu)
    raise DensityError(f"unknown family {family!r}")


def _omega_p_xprime(n: int, p: int, nu: int, mu: int):
    e = exponent_e(n)
    with mpmath.workdps(MP_DPS):
        q = mpmath.power(p, mpmath.mpf(e.numerator) / e.denominator)
        inv = mpmath.mpf(1) / p
        core = (1 - inv) * (1 - q ** (nu + 1)) / (1 - q) + inv + q**nu * inv
        return +(core * (q * p) ** mu)


def finite_field_count(n: int, p: int) -> int:
    """Points of the minimal desingularization over F_p, from its torsor.

    Counts (a, b, c, d, z, w) in F_p^6 with ad - bc = z^(n+1) w,
    (a, c, z) != 0 and (b, d, w) != 0, divided by the torus order (p-1)^2.
    """
    if not is_prime(p):
        raise DensityError(f"{p} is not prime")
    if p > FF_LIMIT:
        raise DensityError(f"finite-field oracle refuses p={p} > {FF_LIMIT}")
    r = np.arange(p, dtype=np.int64)
    prod = np.bincount((r[:, None] * r[None, :] % p).ravel(), minlength=p)  # #{(a,d): ad = u}
    # pairs[m] = #{(a,d,b,c): ad - bc = m}
    pairs = np.array([int(np.dot(prod, np.roll(prod, m))) for m in range(p)], dtype=object)
    rhs = np.bincount(((r[:, None] ** (n + 1) % p) * r[None, :] % p).ravel(), minlength=p)
    total = sum(int(pairs[m]) * int(rhs[m]) for m in range(p))
    count, rem = divmod(total - 2 * p**3 + 1, (p - 1) ** 2)
    assert rem == 0
    return count


# ---------------------------------------------------------------------------
# p-adic oracle by ball refinement


def _xprime_terms(n: int, ah: int, ch: int, yh: int, p: int) -> list[tuple[int, int, int]]:
    """(constant valuation, b exponent, d exponent) for the 13 monomials at z = t = w = 1."""
    from .heights import _reduced_xprime

    va = valuation(ah, p) if ah else None
    vc = valuation(ch, p) if ch else None
    vy = valuation(yh, p)
    out = []
    for ea, eb, ec, ed, ey, *_ in _reduced_xprime(n):
        if (ea and va is None) or (ec and vc is None):
            continue  # the monomial vanishes identically
        const = (ea * va if ea else 0) + (ec * vc if ec else 0) + ey * vy
        out.append((const, eb, ed))
    return out


def padic_density_oracle(family: str, n: int, p: int, x: Sequence[int],
                         shell_range: tuple[int, int] = (40, 40), tol: float | None = None) -> DensityEstimate:
    """Fiber p-adic density by refining balls of Q_p until the integrand is constant on each.

    ``shell_range = (J, K)`` integrates exactly over p^(-J) Z_p and refines
    down to balls of radius p^-(K); balls still unsettled at that depth are
    bracketed by the integrand's bounds.  The std_error field is the
    rigorous bound tail + bracket width.
    """
    if not is_prime(p):
        raise DensityError(f"{p} is not prime")
    ah, ch, yh = fiber_base(family, x)
    J, Kdepth = shell_range
    chart_a = ah != 0
    lead, other = (ah, ch) if chart_a else (ch, ah)
    if family == "X":
        const = yh ** (n + 1)  # the base's third coordinate is z
        terms = [(0, 0, 0), (0, 1, 0), (0, 0, 1)]
        weight = Fraction(2)
        tail_exp = Fraction(valuation(lead, p))
    else:
        const = yh**n
        terms = _xprime_terms(n, ah, ch, yh, p)
        if not chart_a:
            terms = [(cv, ed, eb) for cv, eb, ed in terms]
        weight = Fraction(2, n + 3)
        vmin = min(valuation(v, p) for v in (ah, ch) if v)
        # |b|^(n+3) max(|a^|,|c^|)^2 |y^|^2 bounds the max monomial from below for large |b|
        tail_exp = valuation(lead, p) + weight * 2 * (vmin + valuation(yh, p))
    # chart variable u (b for the a-chart, d for the c-chart); partner
    # v = (u*other + const) / lead in the a-chart, (u*other - const)/lead in the c-chart.
    sign = 1 if chart_a else -1
    if other == 0 and const == 0:
        terms = [tm for tm in terms if tm[2] == 0]  # the partner coordinate vanishes identically
    vlead = valuation(lead, p)
    groups: dict[tuple[int, Fraction], int] = defaultdict(int)
    unresolved: list[tuple[int, Fraction, Fraction]] = []
    pJ = p**J
    cterm = sign * const * pJ  # delta(beta) = beta*other + p^J * sign*const, u = beta / p^J

    def val(x: int) -> int | None:
        return None if x == 0 else valuation(x, p)

    stack = [(0, 0)]  # (beta0, m): ball beta0 + p^m Z_p
    while stack:
        beta0, m = stack.pop()
        pm = p**m
        vb0 = val(beta0 % pm) if m > 0 else None
        vu = vb0 - J if vb0 is not None else None
        ulow = m - J
        delta0 = beta0 * other + cterm
        if other == 0:
            vdelta = val(delta0)
            vdelta_low = vdelta
        else:
            vo = valuation(other, p)
            vd0 = val(delta0)
            vdelta = vd0 if vd0 is not None and vd0 < m + vo else None
            vdelta_low = m + vo
        vv = vdelta - J - vlead if vdelta is not None else None
        vlow = (vdelta_low - J - vlead) if vdelta_low is not None else None
        det, low = [], []
        for cv, eb, ed in terms:
            known = (eb == 0 or vu is not None) and (ed == 0 or vv is not None)
            if known:
                det.append(cv + eb * (vu or 0) + ed * (vv or 0))
            else:
                lb = cv + (eb * (vu if vu is not None else ulow) if eb else 0)
                lb += ed * (vv if vv is not None else vlow) if ed else 0
                low.append(lb)
        D = min(det) if det else None
        L = min(low) if low else None
        if D is not None and (L is None or D <= L):
            groups[(m, Fraction(D))] += 1
            continue
        if m >= J + Kdepth:
            if D is None:
                raise WidenRange("integrand unbounded on an unresolved ball; increase the depth")
            unresolved.append((m, Fraction(L), Fraction(D)))
            continue
        for j in range(p):
            stack.append((beta0 + j * pm, m + 1))
    with mpmath.workdps(MP_DPS):
        P = mpmath.mpf(p)
        scale = P**vlead

        def power(fr: Fraction):
            return P ** (mpmath.mpf(fr.numerator) / fr.denominator)

        total = mpmath.fsum(cnt * P ** (J - m) * power(weight * D) for (m, D), cnt in sorted(groups.items()))
        lo_extra = mpmath.fsum(P ** (J - m) * power(weight * L) for m, L, _ in unresolved)
        hi_extra = mpmath.fsum(P ** (J - m) * power(weight * D) for m, _, D in unresolved)
        value = scale * (total + (lo_extra + hi_extra) / 2)
        tail = power(tail_exp - J - 1)  # integrand <= p^tail_exp |b|^-2 beyond the window
        err = scale * (hi_extra - lo_extra) / 2 + tail
    if tol is not None and float(err) > tol:
        raise WidenRange(f"error bound {float(err):.3g} exceeds tolerance {tol:.3g}; widen shell_range")
    return DensityEstimate(float(value), float(err), sum(groups.values()) + len(unresolved), "shell-sum")


# ---------------------------------------------------------------------------
# Euler products


def euler_product(family: str, n: int, x: Sequence[int] | None = None):
    """prod_p (1 - 1/p) omega_p as an mpmath real."""
    with mpmath.workdps(MP_DPS):
        if family == "X" and x is None:
            if n != 2:
                raise DensityError("the global Euler product is only provided for n = 2")
            return 1 / (ZETA2_MP * ZETA3_MP)
        if family == "X":
            fiber_base("X", x)
            return 1 / ZETA2_MP
        if family != "Xprime" or x is None:
            raise DensityError("X' Euler products need a base point")
        ah, ch, yh = fiber_base("Xprime", x)
        g = math.gcd(ah, ch)
        out = 1 / ZETA2_MP
        for p in sorted(set(prime_factors(yh)) | set(prime_factors(g))):
            out *= omega_p("Xprime", n, p, (ah, ch, yh)) / (1 + mpmath.mpf(1) / p)
        return +out


def _xprime_local_factor(n: int, Y: int, g: int) -> float:
    """Euler product of an X' fiber divided by 1/zeta(2)."""
    out = 1.0
    for p, nu in prime_factors(Y).items():
        out *= float(_omega_p_xprime(n, p, nu, 0)) / (1 + 1 / p)
    for p, mu in prime_factors(g).items():
        out *= float(_omega_p_xprime(n, p, 0, mu)) / (1 + 1 / p)
    return out


# ---------------------------------------------------------------------------
# real densities, closed forms


def _x_fiber_real_exact(n: int, a: int, c: int, z: int) -> Fraction:
    alpha, gamma = max(abs(a), abs(c)), min(abs(a), abs(c))
    W = Fraction(1, max(alpha, abs(z)) ** n)
    k = abs(z) ** (n + 1)
    if k == 0:
        return Fraction(2, alpha) * 2 * W
    w1 = Fraction(alpha - gamma, k)
    integral = 2 * min(W, w1)
    if gamma > 0 and W > w1:
        hi = min(W, Fraction(alpha + gamma, k))
        integral += ((alpha + gamma) * (hi - w1) - Fraction(k, 2) * (hi * hi - w1 * w1)) / gamma
    return Fraction(2, alpha) * integral


def _xprime_fiber_real_mp(n: int, a: int, c: int, Y: int):
    alpha, gamma = max(abs(a), abs(c)), min(abs(a), abs(c))
    Y = abs(Y)
    with mpmath.workdps(MP_DPS):
        mpf = mpmath.mpf
        q = mpf(2) / (n + 1)
        big = max(alpha, Y)
        beta1 = mpf(alpha * Y) ** (mpf(-2) / (n + 3))
        Kc = mpf(big) ** -2
        W = mpf(big) ** (-mpf((n + 1) ** 2) / (n + 3))
        k = mpf(Y) ** n
        w1 = (Kc / beta1) ** (1 / q)

        def rho(w):
            return beta1 if w <= w1 else Kc * w ** (-q)

        kappas = [alpha - gamma, alpha + gamma] if gamma else [alpha]
        pts = {mpf(0), W, w1}
        for kap in kappas:
            if kap > 0:
                pts.add(kap * beta1 / k)
                pts.add((kap * Kc / k) ** (1 / (1 + q)))
        pts = sorted(p for p in pts if 0 <= p <= W)

        def int_rho(u, v):
            if v <= w1:
                return beta1 * (v - u)
            return Kc * (v ** (1 - q) - u ** (1 - q)) / (1 - q)

        total = mpf(0)
        for u, v in zip(pts, pts[1:]):
            if v <= u:
                continue
            mid = (u + v) / 2
            r, s = rho(mid), k * mid
            if s <= (alpha - gamma) * r:
                total += 2 * int_rho(u, v)
            elif gamma and s <= (alpha + gamma) * r:
                total += ((alpha + gamma) * int_rho(u, v) - k * (v * v - u * u) / 2) / gamma
        return 2 * total / alpha


@njit(cache=True)
def _x_real_float(n, alpha, gamma, Z):
    W = 1.0 / float(max(alpha, Z)) ** n
    k = float(Z) ** (n + 1)
    if k == 0.0:
        return 4.0 * W / alpha
    w1 = (alpha - gamma) / k
    integral = 2.0 * min(W, w1)
    if gamma > 0 and W > w1:
        hi = min(W, (alpha + gamma) / k)
        integral += ((alpha + gamma) * (hi - w1) - 0.5 * k * (hi * hi - w1 * w1)) / gamma
    return 2.0 * integral / alpha


@njit(cache=True)
def _xp_real_float(n, alpha, gamma, Y):
    q = 2.0 / (n + 1)
    big = float(max(alpha, Y))
    beta1 = float(alpha * Y) ** (-2.0 / (n + 3))
    Kc = big**-2.0
    W = big ** (-float((n + 1) ** 2) / (n + 3))
    k = float(Y) ** n
    w1 = (Kc / beta1) ** (1.0 / q)
    pts = np.empty(7)
    npts = 0
    pts[npts] = 0.0
    npts += 1
    pts[npts] = W
    npts += 1
    pts[npts] = w1
    npts += 1
    for j in range(2):
        kap = float(alpha - gamma) if j == 0 else float(alpha + gamma)
        if kap > 0:
            pts[npts] = kap * beta1 / k
            npts += 1
            pts[npts] = (kap * Kc / k) ** (1.0 / (1.0 + q))
            npts += 1
    pts = np.sort(pts[:npts])
    total = 0.0
    for i in range(npts - 1):
        u = max(pts[i], 0.0)
        v = min(pts[i + 1], W)
        if v <= u:
            continue
        mid = 0.5 * (u + v)
        r = beta1 if mid <= w1 else Kc * mid ** (-q)
        if v <= w1:
            ir = beta1 * (v - u)
        else:
            ir = Kc * (v ** (1.0 - q) - u ** (1.0 - q)) / (1.0 - q)
        s = k * mid
        if s <= (alpha - gamma) * r:
            total += 2.0 * ir
        elif gamma > 0 and s <= (alpha + gamma) * r:
            total += ((alpha + gamma) * ir - 0.5 * k * (v * v - u * u)) / gamma
    return 2.0 * total / alpha


# ---------------------------------------------------------------------------
# Monte Carlo


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(block << 64) | (seed & ((1 << 64) - 1))))


def _mc_blocks(sample_block: Callable[[np.random.Generator, int], np.ndarray], scale: float, *,
               seed: int, samples: int | None, target_rel: float | None, block_size: int,
               max_samples: int, workers: int = 1) -> DensityEstimate:
    """Block-wise Monte Carlo with a fixed block order, so results do not depend on scheduling.

    With several workers, blocks are drawn ahead in batches but consumed in
    order; the stopping test runs after every block, so surplus blocks of the
    last batch are discarded and the estimate matches the sequential one.
    """
    sums: list[float] = []
    sqs: list[float] = []
    count = 0
    block = 0
    goal = samples if samples is not None else max_samples
    workers = max(1, int(workers))

    def draw(i: int, size: int) -> tuple[float, float]:
        vals = sample_block(_rng(seed, i), size)
        return math.fsum(vals), math.fsum(vals * vals)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        done = False
        while count < goal and not done:
            sizes = []
            planned = count
            while len(sizes) < workers and planned < goal:
                sizes.append(min(block_size, goal - planned))
                planned += sizes[-1]
            jobs = [(block + j, sz) for j, sz in enumerate(sizes)]
            results = list(pool.map(lambda job: draw(*job), jobs)) if pool else [draw(*jobs[0])]
            for (_, size), (sm, sq) in zip(jobs, results):
                sums.append(sm)
                sqs.append(sq)
                count += size
                block += 1
                if samples is None and target_rel is not None and count >= 4 * block_size:
                    mean = math.fsum(sums) / count
                    var = max(math.fsum(sqs) / count - mean * mean, 0.0)
                    if mean > 0 and math.sqrt(var / count) <= target_rel * mean:
                        done = True
                        break
    finally:
        if pool:
            pool.shutdown()
    mean = math.fsum(sums) / count
    var = max(math.fsum(sqs) / count - mean * mean, 0.0)
    return DensityEstimate(scale * mean, scale * math.sqrt(var / count), count, "monte-carlo", seed)


def _global_x2_block(rng: np.random.Generator, size: int) -> np.ndarray:
    a, d, z = rng.uniform(-1.0, 1.0, size=(3, size))
    u = np.abs(a * d - z**3)
    out = np.zeros(size)
    mask = (u <= 1.0) & (u > 0.0)
    out[mask] = -np.log(u[mask])
    return out


def _fiber_sampler(family: str, n: int, x: tuple[int, int, int], chart: str):
    a, c, third = x
    k = third ** (n + 1) if family == "X" else third**n
    if chart == "a":
        lead, other = a, c
    else:
        lead, other = c, a
    if lead == 0:
        raise DensityError(f"the {chart}-chart needs a nonzero {chart} coordinate")
    if family == "X":
        W = 1.0 / max(abs(a), abs(c), abs(third)) ** n
        rho_max = 1.0

        def rho(w):
            return np.ones_like(w)
    else:
        A, Y = max(abs(a), abs(c)), abs(third)
        beta1 = float(A * Y) ** (-2.0 / (n + 3))
        Kc = float(max(A, Y)) ** -2.0
        W = float(max(A, Y)) ** (-((n + 1) ** 2) / (n + 3))
        rho_max = beta1

        def rho(w):
            aw = np.abs(w)
            with np.errstate(divide="ignore"):
                return np.minimum(beta1, Kc * np.where(aw > 0, aw, 1e-300) ** (-2.0 / (n + 1)))

    sgn = 1.0 if chart == "a" else -1.0

    def block(rng: np.random.Generator, size: int) -> np.ndarray:
        w = rng.uniform(-W, W, size)
        u = rng.uniform(-rho_max, rho_max, size)
        v = (u * other + sgn * k * w) / lead
        r = rho(w)
        return ((np.abs(u) <= r) & (np.abs(v) <= r)).astype(np.float64)

    scale = 2 * W * 2 * rho_max / abs(lead)
    return block, scale


def omega_infty(family: str, n: int, x: Sequence[int] | None = None, *, method: str = "auto",
                samples: int | None = None, seed: int = 0, target_rel: float | None = 0.01,
                chart: str | None = None, block_size: int = 1 << 16,
                max_samples: int = 1 << 26, workers: int = 1) -> DensityEstimate:
    """Archimedean density, globally for X_2 or on a fiber.

    ``method`` is auto, closed-form, monte-carlo or quadrature (X_2 only).
    For fibers, auto picks the exact piecewise integration; Monte Carlo
    remains available as an independent estimate in either chart.
    """
    if x is None:
        if family != "X" or n != 2:
            raise DensityError("the global real density is only provided for X_2")
        if method == "quadrature":
            return _global_x2_quadrature()
        if method not in ("auto", "monte-carlo"):
            raise DensityError(f"method {method!r} is not available for the global density")
        return _mc_blocks(_global_x2_block, 32.0, seed=seed, samples=samples, target_rel=target_rel,
                          block_size=block_size, max_samples=max_samples, workers=workers)
    base = fiber_base(family, x)
    a, c, third = base
    if method in ("auto", "closed-form"):
        if family == "X":
            exact = _x_fiber_real_exact(n, a, c, third)
            degenerate = c == 0 and third == 0
            return DensityEstimate(float(exact), 0.0, 0, "degenerate-exact" if degenerate else "closed-form")
        return DensityEstimate(float(_xprime_fiber_real_mp(n, a, c, third)), 0.0, 0, "closed-form")
    if method != "monte-carlo":
        raise DensityError(f"unknown method {method!r}")
    if chart is None:
        chart = "a" if abs(a) >= abs(c) else "c"
    block, scale = _fiber_sampler(family, n, base, chart)
    return _mc_blocks(block, scale, seed=seed, samples=samples, target_rel=target_rel,
                      block_size=block_size, max_samples=max_samples, workers=workers)


def _global_x2_quadrature() -> DensityEstimate:
    """4 * int log(1/|ad - z^3|) with the a-integral done by hand, then 2-D adaptive quadrature."""
    from scipy import integrate

    def F(u: float) -> float:  # antiderivative of -log|u|
        return 0.0 if u == 0 else -u * math.log(abs(u)) + u

    def inner(d: float, z: float) -> float:
        if d == 0:
            return 0.0
        s = z**3
        lo, hi = max(-d - s, -1.0), min(d - s, 1.0)
        if hi <= lo:
            return 0.0
        return (F(hi) - F(lo)) / d

    val, err = integrate.dblquad(lambda d, z: inner(d, z), 0.0, 1.0, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10)
    return DensityEstimate(4 * 4 * val, 4 * 4 * err, 0, "quadrature")


# ---------------------------------------------------------------------------
# per-fiber constants and their sums


def c_x(family: str, n: int, x: Sequence[int], **kwargs) -> DensityEstimate:
    """(1/2) * real density * Euler product, carrying the real density's error and method."""
    om = omega_infty(family, n, x, **kwargs)
    ep = float(euler_product(family, n, x))
    return DensityEstimate(0.5 * ep * om.value, 0.5 * ep * om.std_error, om.samples, om.method, om.seed)


@dataclass(frozen=True)
class FiberSum:
    family: str
    n: int
    M: int
    partial: float
    tail: float
    tail_kind: str  # "rigorous" or "extrapolated"
    by_max: np.ndarray  # by_max[m] = sum of c_x over x with max coordinate m

    def partial_at(self, M: int) -> float:
        return math.fsum(self.by_max[: M + 1])


@njit(cache=True)
def _x_sum_by_max(n, M):
    out = np.zeros(M + 1)
    for alpha in range(1, M + 1):
        for gamma in range(0, alpha + 1):
            g = alpha if gamma == 0 else math.gcd(alpha, gamma)
            for Z in range(0, M + 1):
                if math.gcd(g, Z) != 1:
                    continue
                nz = 1 + (gamma > 0) + (Z > 0)
                mult = (1 << nz) // 2 * (2 if alpha != gamma else 1)
                out[max(alpha, Z)] += mult * _x_real_float(n, alpha, gamma, Z)
    return out


@njit(cache=True)
def _xp_sum_by_max(n, M, local):
    """local[Y, g] is the X' Euler factor (times zeta(2))."""
    out = np.zeros(M + 1)
    for alpha in range(1, M + 1):
        for gamma in range(0, alpha + 1):
            g = alpha if gamma == 0 else math.gcd(alpha, gamma)
            for Y in range(1, M + 1):
                if math.gcd(g, Y) != 1:
                    continue
                nz = 2 + (gamma > 0)
                mult = (1 << nz) // 2 * (2 if alpha != gamma else 1)
                out[max(alpha, Y)] += mult * local[Y, g] * _xp_real_float(n, alpha, gamma, Y)
    return out


def _local_table(n: int, M: int) -> np.ndarray:
    fy = np.array([1.0] + [_xprime_local_factor(n, Y, 1) for Y in range(1, M + 1)])
    fg = np.array([1.0] + [_xprime_local_factor(n, 1, g) for g in range(1, M + 1)])
    return np.outer(fy, fg)


def sum_cx(family: str, n: int, M: int) -> FiberSum:
    """Sum of c_x over admissible x with max coordinate <= M, with a tail estimate.

    For X with n >= 3 the tail is the rigorous bound c_x <= 2/(zeta(2) m^(n+1))
    summed over at most 12 m^2 + 1 base points of max coordinate m.  For X'
    the tail is extrapolated from a power-law fit to the last shells.
    """
    if M < 1:
        raise ValueError("M must be positive")
    if family == "X":
        by_max = 0.5 / ZETA2 * _x_sum_by_max(n, M)
        if n >= 3:
            with mpmath.workdps(20):
                tail = float(2 / ZETA2_MP * (12 * mpmath.zeta(n - 1, M + 1) + mpmath.zeta(n + 1, M + 1)))
            kind = "rigorous"
        else:
            tail, kind = math.inf, "divergent"
    elif family == "Xprime":
        by_max = 0.5 / ZETA2 * _xp_sum_by_max(n, M, _local_table(n, M))
        tail, kind = _extrapolated_tail(by_max), "extrapolated"
    else:
        raise ValueError(f"unknown family {family!r}")
    return FiberSum(family, n, M, math.fsum(by_max), tail, kind, by_max)


def _extrapolated_tail(by_max: np.ndarray) -> float:
    M = len(by_max) - 1
    lo = max(2, M // 2)
    ms = np.arange(lo, M + 1)
    vals = by_max[lo:]
    if len(ms) < 3 or np.any(vals <= 0):
        return math.inf
    slope, icept = np.polyfit(np.log(ms), np.log(vals), 1)
    kappa = -slope
    if kappa <= 1:
        return math.inf
    C = math.exp(icept)
    with mpmath.workdps(20):
        return float(C * mpmath.zeta(kappa, M + 1))
