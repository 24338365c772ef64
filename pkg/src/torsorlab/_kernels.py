"""Compiled integer kernels for the enumeration hot loops.

All arithmetic is int64.  Callers guarantee that bounds are small enough for
the products formed here; the X' kernel additionally saturates every monomial
product at ``cap + 1`` so that comparisons against the bound stay exact.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import Dict

SHORT_LINE = 64


@njit(cache=True, nogil=True)
def igcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@njit(cache=True, nogil=True)
def egcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b != 0:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


@njit(cache=True, nogil=True)
def ipow(x, k):
    r = 1
    for _ in range(k):
        r *= x
    return r


@njit(cache=True, nogil=True)
def smul(x, y, cap):
    """x*y for x, y >= 0, saturated at cap + 1."""
    if x == 0 or y == 0:
        return 0
    if x > cap // y:
        return cap + 1
    r = x * y
    return r if r <= cap else cap + 1


@njit(cache=True, nogil=True)
def spow(x, k, cap):
    r = 1
    for _ in range(k):
        r = smul(r, x, cap)
        if r > cap:
            return cap + 1
    return r


@njit(cache=True, nogil=True)
def iroot(x, k):
    """Largest r >= 0 with r**k <= x."""
    if x <= 0:
        return 0
    if k == 1:
        return x
    r = int(float(x) ** (1.0 / k))
    while r > 0 and spow(r, k, x) > x:
        r -= 1
    while spow(r + 1, k, x) <= x:
        r += 1
    return r


@njit(cache=True, nogil=True)
def ceil_div(p, q):
    return -((-p) // q)


@njit(cache=True, nogil=True)
def line_interval(a, c, b0, d0, R):
    """k-range with |b0 + a k| <= R and |d0 + c k| <= R (empty if lo > hi)."""
    lo = -(1 << 62)
    hi = 1 << 62
    for coef, off in ((a, b0), (c, d0)):
        if coef == 0:
            if abs(off) > R:
                return 1, 0
        elif coef > 0:
            lo = max(lo, ceil_div(-R - off, coef))
            hi = min(hi, (R - off) // coef)
        else:
            m = -coef
            lo = max(lo, ceil_div(off - R, m))
            hi = min(hi, (off + R) // m)
    return lo, hi


@njit(cache=True)
def squarefree_table(limit):
    """CSR table of (squarefree divisor, Moebius sign) for 1..limit."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    for i in range(2, limit + 1):
        if spf[i] == 0:
            for j in range(i, limit + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    counts = np.zeros(limit + 2, dtype=np.int64)
    for w in range(1, limit + 1):
        k = 0
        m = w
        while m > 1:
            p = spf[m]
            k += 1
            while m % p == 0:
                m //= p
        counts[w + 1] = 1 << k
    ptr = np.cumsum(counts)
    div = np.empty(ptr[limit + 1], dtype=np.int64)
    mu = np.empty(ptr[limit + 1], dtype=np.int64)
    for w in range(1, limit + 1):
        base = ptr[w]
        div[base] = 1
        mu[base] = 1
        size = 1
        m = w
        while m > 1:
            p = spf[m]
            while m % p == 0:
                m //= p
            for i in range(size):
                div[base + size + i] = div[base + i] * p
                mu[base + size + i] = -mu[base + i]
            size *= 2
    return ptr, div, mu


@njit(cache=True)
def smallest_prime_factors(limit):
    spf = np.zeros(limit + 1, dtype=np.int64)
    for i in range(2, limit + 1):
        if spf[i] == 0:
            for j in range(i, limit + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    return spf


@njit(cache=True, nogil=True)
def count_line_table(a, c, b0, d0, R, w, ptr, div, mu, short):
    """Points b0+ak, d0+ck in the box |.| <= R with gcd(b, d, w) = 1.

    The base solution is a multiple of N, so for squarefree e | w the
    condition e | gcd(b, d) is exactly e | k.
    """
    lo, hi = line_interval(a, c, b0, d0, R)
    if hi < lo:
        return 0
    if w == 1:
        return hi - lo + 1
    if hi - lo + 1 <= short:
        s = 0
        for k in range(lo, hi + 1):
            if igcd(igcd(b0 + a * k, d0 + c * k), w) == 1:
                s += 1
        return s
    s = 0
    for i in range(ptr[w], ptr[w + 1]):
        e = div[i]
        s += mu[i] * (hi // e - (lo - 1) // e)
    return s


@njit(cache=True, nogil=True)
def count_line_primes(a, c, b0, d0, R, modulus, primes, nprimes, short):
    """As count_line_table, with the squarefree kernel of `modulus` given by its primes."""
    lo, hi = line_interval(a, c, b0, d0, R)
    if hi < lo:
        return 0
    if nprimes == 0:
        return hi - lo + 1
    if hi - lo + 1 <= short:
        s = 0
        for k in range(lo, hi + 1):
            if igcd(igcd(b0 + a * k, d0 + c * k), modulus) == 1:
                s += 1
        return s
    s = 0
    for mask in range(1 << nprimes):
        e = 1
        sign = 1
        for i in range(nprimes):
            if mask >> i & 1:
                e *= primes[i]
                sign = -sign
        s += sign * (hi // e - (lo - 1) // e)
    return s


@njit(cache=True, nogil=True)
def _normalize3(x, y, z):
    g = igcd(igcd(x, y), z)
    x //= g
    y //= g
    z //= g
    if x < 0 or (x == 0 and (y < 0 or (y == 0 and z < 0))):
        return -x, -y, -z
    return x, y, z


def new_fiber_dict():
    return Dict.empty(key_type=types.UniTuple(types.int64, 3), value_type=types.int64)


@njit(cache=True, nogil=True)
def x_counts(n, bounds, block, nblocks, ptr, div, mu, short, fibers, want_fibers):
    """Seven-variable torsor tuples for X_n, one bound per entry of `bounds` (sorted).

    Enumerates t > 0, w > 0, z >= 0 and (a, c) with a > 0 or (a, c) = (0, 1);
    each representative stands for 16 tuples (z > 0) or 8 (z = 0).  When
    `want_fibers` is set, counts at the largest bound are also attributed to
    the fiber bases (at : ct : z).
    """
    nb = bounds.shape[0]
    Bm = bounds[nb - 1]
    out = np.zeros(nb, dtype=np.int64)
    amax = iroot(Bm, n)
    for a in range(block, amax + 1, nblocks):
        an = ipow(a, n)
        lead = max(an, 1)
        t = 1
        while True:
            tn1 = ipow(t, n + 1)
            if lead * tn1 > Bm:
                break
            for w in range(1, Bm // (lead * tn1) + 1):
                wt1 = w * tn1
                if a == 0:
                    c_lo, c_hi = 1, 1
                else:
                    cm = iroot(Bm // wt1, n)
                    c_lo, c_hi = -cm, cm
                zmax = iroot(Bm // (w * t), n)
                for z in range(0, zmax + 1):
                    if igcd(z, t) != 1:
                        continue
                    zmono = ipow(z, n) * w * t
                    N = ipow(z, n + 1) * w
                    mult = 16 if z > 0 else 8
                    for c in range(c_lo, c_hi + 1):
                        if igcd(a, c) != 1:
                            continue
                        m0 = max(max(an * wt1, ipow(abs(c), n) * wt1), zmono)
                        if m0 > Bm:
                            continue
                        g, x, y = egcd(a, c)
                        b0 = -y * N
                        d0 = x * N
                        last = 0
                        for j in range(nb):
                            if bounds[j] >= m0:
                                last = count_line_table(a, c, b0, d0, bounds[j], w, ptr, div, mu, short)
                                out[j] += mult * last
                        if want_fibers and last > 0:
                            k1 = _normalize3(a * t, c * t, z)
                            fibers[k1] = fibers.get(k1, 0) + 8 * last
                            k2 = _normalize3(a * t, c * t, -z)
                            fibers[k2] = fibers.get(k2, 0) + (mult - 8) * last
            t += 1
    return out


@njit(cache=True, nogil=True)
def x_fiber_count(n, A, C, z, t, B, ptr, div, mu, short):
    """Points of X_n over the base (At : Ct : z), gcd(A, C) = 1, at monomial bound B."""
    g, x, y = egcd(A, C)
    lead = max(ipow(abs(A), n), ipow(abs(C), n)) * ipow(t, n + 1)
    zt = ipow(abs(z), n) * t
    total = 0
    w = 1
    while lead * w <= B and zt * w <= B:
        N = ipow(z, n + 1) * w
        total += count_line_table(A, C, -y * N, x * N, B, w, ptr, div, mu, short)
        w += 1
    return total


@njit(cache=True, nogil=True)
def oracle_histogram(n, B):
    """Brute-force six-variable tuples, every solution visited; hist[h] counts height base h."""
    hist = np.zeros(B + 1, dtype=np.int64)
    for w in range(-B, B + 1):
        if w == 0:
            continue
        aw = abs(w)
        amax = iroot(B // aw, n)
        for a in range(-amax, amax + 1):
            for c in range(-amax, amax + 1):
                if a == 0 and c == 0:
                    continue
                g = igcd(a, c)
                for z in range(-amax, amax + 1):
                    if igcd(g, z) != 1:
                        continue
                    m0 = max(max(ipow(abs(a), n), ipow(abs(c), n)), ipow(abs(z), n)) * aw
                    N = ipow(z, n + 1) * w
                    if N % g != 0:
                        continue
                    if abs(a) >= abs(c):
                        # a d = N + b c ; step through admissible b
                        ap = abs(a) // g
                        cp = c // g if a > 0 else -c // g
                        Np = N // g if a > 0 else -N // g
                        # ap * d' = Np + b cp with d' = d * sign(a)
                        if ap == 1:
                            r = 0
                        else:
                            _, inv, _ = egcd(cp % ap, ap)
                            r = (-Np * inv) % ap
                        b = -B + ((r + B) % ap)
                        while b <= B:
                            num = N + b * c
                            d = num // a
                            if abs(d) <= B and igcd(igcd(b, d), w) == 1:
                                h = max(m0, max(abs(b), abs(d)))
                                hist[h] += 1
                            b += ap
                    else:
                        cp_ = abs(c) // g
                        ap_ = a // g if c > 0 else -a // g
                        Np = N // g if c > 0 else -N // g
                        # b c = a d - N  ->  cp_ * b' = ap_ d - Np with b' = b * sign(c)
                        if cp_ == 1:
                            r = 0
                        else:
                            _, inv, _ = egcd(ap_ % cp_, cp_)
                            r = (Np * inv) % cp_
                        d = -B + ((r + B) % cp_)
                        while d <= B:
                            num = a * d - N
                            b = num // c
                            if abs(b) <= B and igcd(igcd(b, d), w) == 1:
                                h = max(m0, max(abs(b), abs(d)))
                                hist[h] += 1
                            d += cp_
    return hist


@njit(cache=True, nogil=True)
def _distinct_primes(m, spf, buf, start):
    k = start
    while m > 1:
        p = spf[m]
        seen = False
        for i in range(k):
            if buf[i] == p:
                seen = True
        if not seen:
            buf[k] = p
            k += 1
        while m % p == 0:
            m //= p
    return k


@njit(cache=True, nogil=True)
def xp_box_radius(n, A, y, z, t, w, B):
    """Largest R with max(|b|,|d|) = R admissible for the b,d-rows of the 13 monomials."""
    C1 = smul(smul(A, A, B), smul(y, y, B), B)
    C2 = smul(smul(spow(A, 2 * n + 2, B), spow(t, 2 * n + 2, B), B), smul(w, w, B), B)
    C3 = smul(smul(spow(y, 2 * n + 2, B), spow(z, 2 * n + 2, B), B), smul(w, w, B), B)
    if C1 > B or C2 > B or C3 > B:
        return 0
    return min(iroot(B // C1, n + 3), min(iroot(B // C2, n + 1), iroot(B // C3, n + 1)))


@njit(cache=True, nogil=True)
def xp_counts(n, B, block, nblocks, spf, short, fibers, want_fibers):
    """Eight-variable torsor tuples for X'_n with y, z, t, w > 0 and a > 0 or (a, c) = (0, 1).

    Each representative stands for 32 tuples.  Returns the representative count.
    """
    sq = (n + 1) * (n + 1)
    top = n * n + 3 * n + 2
    Amax = iroot(B, sq)
    total = 0
    primes = np.zeros(64, dtype=np.int64)
    for a in range(block, Amax + 1, nblocks):
        c_lo, c_hi = (1, 1) if a == 0 else (-Amax, Amax)
        for c in range(c_lo, c_hi + 1):
            if igcd(a, c) != 1:
                continue
            A = max(a, abs(c))
            PA = spow(A, sq, B)
            if PA > B:
                continue
            g, xx, yy = egcd(a, c)
            t = 1
            while True:
                PT = smul(PA, spow(t, top, B), B)
                if PT > B or xp_box_radius(n, A, 1, 1, t, 1, B) == 0:
                    break
                z = 1
                while True:
                    PZ = smul(PT, spow(z, n + 1, B), B)
                    QZ = smul(spow(z, top, B), spow(t, n + 1, B), B)
                    if PZ > B or QZ > B:
                        break
                    if 2 * A * xp_box_radius(n, A, 1, z, t, 1, B) < spow(z, n + 1, B):
                        break
                    if igcd(z, t) != 1:
                        z += 1
                        continue
                    nz = _distinct_primes(z, spf, primes, 0)
                    w = 1
                    while True:
                        PW = smul(PZ, spow(w, n + 3, B), B)
                        QW = smul(QZ, spow(w, n + 3, B), B)
                        if PW > B or QW > B:
                            break
                        zw = smul(spow(z, n + 1, B), w, B)
                        if 2 * A * xp_box_radius(n, A, 1, z, t, w, B) < zw:
                            break
                        np_ = _distinct_primes(w, spf, primes, nz)
                        y = 1
                        while True:
                            QY = smul(QW, spow(y, sq, B), B)
                            if QY > B:
                                break
                            R = xp_box_radius(n, A, y, z, t, w, B)
                            N = smul(spow(y, n, B), zw, B)
                            if N > 2 * A * R:
                                break
                            if igcd(y, t) == 1 and igcd(y, w) == 1:
                                b0 = -yy * N
                                d0 = xx * N
                                k = count_line_primes(a, c, b0, d0, R, z * w, primes, np_, short)
                                total += k
                                if want_fibers and k > 0:
                                    k1 = _normalize3(a * t, c * t, y * z)
                                    fibers[k1] = fibers.get(k1, 0) + 16 * k
                                    k2 = _normalize3(a * t, c * t, -y * z)
                                    fibers[k2] = fibers.get(k2, 0) + 16 * k
                            y += 1
                        w += 1
                    z += 1
                t += 1
    return total


@njit(cache=True, nogil=True)
def _progression_line(a, c, N, R):
    """#{(b, d) : a d - b c = N, |b|, |d| <= R} by stepping the larger coefficient's partner.

    Independent of the egcd parametrization used by the main enumerators:
    solves for the residue class of b (or d) and counts it in an interval.
    """
    g = igcd(a, c)
    if N % g != 0 or R < 0:
        return 0
    if abs(a) >= abs(c):
        # a d = N + b c, b in a class mod |a|/g, then |N + b c| <= R |a|
        m = abs(a) // g
        if m == 1:
            r = 0
        else:
            _, inv, _ = egcd((c // g) % m, m)
            r = (-(N // g) * inv) % m
        lo = -R
        hi = R
        if c == 0:
            if abs(N) > R * abs(a):
                return 0
        else:
            # -R|a| <= N + b c <= R|a|
            x1 = -R * abs(a) - N
            x2 = R * abs(a) - N
            if c > 0:
                lo = max(lo, ceil_div(x1, c))
                hi = min(hi, x2 // c)
            else:
                lo = max(lo, ceil_div(-x2, -c))
                hi = min(hi, (-x1) // (-c))
        if hi < lo:
            return 0
        return (hi - r) // m - (lo - 1 - r) // m
    # b c = a d - N, d in a class mod |c|/g, then |a d - N| <= R |c|
    m = abs(c) // g
    if m == 1:
        r = 0
    else:
        _, inv, _ = egcd((a // g) % m, m)
        r = ((N // g) * inv) % m
    lo = -R
    hi = R
    if a == 0:
        if abs(N) > R * abs(c):
            return 0
    else:
        x1 = -R * abs(c) + N
        x2 = R * abs(c) + N
        if a > 0:
            lo = max(lo, ceil_div(x1, a))
            hi = min(hi, x2 // a)
        else:
            lo = max(lo, ceil_div(-x2, -a))
            hi = min(hi, (-x1) // (-a))
    if hi < lo:
        return 0
    return (hi - r) // m - (lo - 1 - r) // m


@njit(cache=True, nogil=True)
def oracle_line_counts(n, bounds, ptr, div, mu):
    """Six-variable tuple counts at each bound, every sign of (a, c, z, w) enumerated.

    gcd(b, d, w) = 1 is imposed by substituting b = e b', d = e d' for each
    squarefree e | w and counting the smaller line ad' - b'c = N/e.
    """
    nb = bounds.shape[0]
    Bm = bounds[nb - 1]
    out = np.zeros(nb, dtype=np.int64)
    for w in range(-Bm, Bm + 1):
        if w == 0:
            continue
        aw = abs(w)
        amax = iroot(Bm // aw, n)
        for a in range(-amax, amax + 1):
            for c in range(-amax, amax + 1):
                if a == 0 and c == 0:
                    continue
                g = igcd(a, c)
                for z in range(-amax, amax + 1):
                    if igcd(g, z) != 1:
                        continue
                    m0 = max(max(ipow(abs(a), n), ipow(abs(c), n)), ipow(abs(z), n)) * aw
                    N = ipow(z, n + 1) * w
                    for j in range(nb):
                        R = bounds[j]
                        if R < m0:
                            continue
                        s = 0
                        for i in range(ptr[aw], ptr[aw + 1]):
                            e = div[i]
                            s += mu[i] * _progression_line(a, c, N // e, R // e)
                        out[j] += s
    return out
