"""Small exact number-theoretic helpers shared by the counting and density code."""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd

import gmpy2
import mpmath

# High-precision zeta constants; the float copies feed the numeric kernels.
with mpmath.workdps(40):
    ZETA2_MP = mpmath.pi**2 / 6
    ZETA3_MP = mpmath.mpf("1.202056903159594285399738161511449990765")
ZETA2 = float(ZETA2_MP)
ZETA3 = float(ZETA3_MP)


def gcd_all(values) -> int:
    return reduce(gcd, (abs(int(v)) for v in values), 0)


def is_prime(p: int) -> bool:
    return p >= 2 and bool(gmpy2.is_prime(p))


def valuation(x: int | Fraction, p: int) -> int:
    """p-adic valuation of a nonzero integer or rational."""
    if x == 0:
        raise ValueError("valuation of zero is infinite")
    if isinstance(x, Fraction):
        return valuation(x.numerator, p) - (valuation(x.denominator, p) if x.denominator != 1 else 0)
    x = abs(int(x))
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def prime_factors(n: int) -> dict[int, int]:
    n = abs(int(n))
    if n <= 1:
        return {}
    from sympy import factorint

    return {int(p): int(e) for p, e in factorint(n).items()}


def squarefree_divisors(n: int) -> list[tuple[int, int]]:
    """Pairs (e, mu(e)) for the squarefree divisors e of n."""
    out = [(1, 1)]
    for p in prime_factors(n):
        out += [(e * p, -mu) for e, mu in out]
    return out


def iroot(x: int, k: int) -> int:
    """Largest r >= 0 with r**k <= x (0 when x < 0)."""
    if x < 0:
        return 0
    return int(gmpy2.iroot(gmpy2.mpz(x), k)[0])


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def primitive_normalized(coords) -> tuple[int, ...]:
    """Divide by the gcd and make the first nonzero entry positive."""
    coords = tuple(int(c) for c in coords)
    g = gcd_all(coords)
    if g == 0:
        raise ValueError("the zero tuple has no projective class")
    coords = tuple(c // g for c in coords)
    for c in coords:
        if c != 0:
            if c < 0:
                coords = tuple(-x for x in coords)
            break
    return coords


def count_in_progression(lo: int, hi: int, modulus: int, residue: int = 0) -> int:
    """Number of k in [lo, hi] with k = residue (mod modulus)."""
    if hi < lo:
        return 0
    return (hi - residue) // modulus - (lo - 1 - residue) // modulus
