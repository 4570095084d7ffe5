"""Pure numpy implementation of the Mittag-Leffler summation kernels.

Mirrors ``_mlf_ext.pyx`` line for line so the two backends produce the same
numbers up to rounding. Both kernels take precomputed log-magnitude / sign
coefficient tables and return ``(value, error_estimate)`` arrays.
"""
import numpy as np

EPS = np.finfo(float).eps
_LOG_MAX = 709.0


def series_sum(z, lc, sc, alpha, kmax):
    """Sum ``sum_k sc[k] exp(lc[k]) z**k`` with a rounding-error estimate.

    ``kmax`` caps the number of terms; points that have not converged by then
    get an infinite error estimate.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    val = np.zeros(n)
    err = np.full(n, np.inf)
    if n == 0:
        return val, err
    x = np.abs(z)
    zero = x == 0.0
    val[zero] = sc[0] * np.exp(lc[0])
    err[zero] = EPS * abs(val[zero])

    idx = np.flatnonzero(~zero)
    lx = np.log(x[idx])
    alx = np.abs(lx)
    neg = z[idx] < 0
    kpeak = x[idx] ** (1.0 / alpha) / alpha + 1.0
    s = np.zeros(idx.size)
    c = np.zeros(idx.size)
    sabs = np.zeros(idx.size)
    done = np.zeros(idx.size, dtype=bool)
    bad = np.zeros(idx.size, dtype=bool)
    kmax = min(kmax, lc.size)
    for k in range(kmax):
        act = ~(done | bad)
        if not act.any():
            break
        if sc[k] == 0.0:
            continue
        a = np.flatnonzero(act)
        L = lc[k] + k * lx[a]
        over = L > _LOG_MAX
        if over.any():
            bad[a[over]] = True
            a = a[~over]
            L = L[~over]
        t = sc[k] * np.exp(L)
        if k % 2 == 1:
            t = np.where(neg[a], -t, t)
        # Neumaier compensated summation
        sa = s[a]
        tot = sa + t
        big = np.abs(sa) >= np.abs(t)
        c[a] += np.where(big, (sa - tot) + t, (t - tot) + sa)
        s[a] = tot
        sabs[a] += np.abs(t) * (3.0 + abs(lc[k]) + k * alx[a])
        conv = (k > kpeak[a]) & (np.abs(t) <= 1e-17 * np.abs(tot + c[a]))
        done[a[conv]] = True
    res = s + c
    e = np.where(done & ~bad, EPS * sabs, np.inf)
    val[idx] = np.where(bad, np.nan, res)
    err[idx] = e
    return val, err


def asymptotic_sum(x, la, sa, lb, mu, k_after):
    """Optimally truncated asymptotic sum ``sum_k sa[k] exp(la[k]) x**-(mu+k)``.

    ``lb`` holds log upper bounds on the coefficient magnitudes; the
    truncation error is estimated by the bound of the first omitted term.
    Search for the smallest bound only starts at ``k_after``, past which the
    bounds are log-convex in ``k``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    lx = np.log(x)
    s = np.zeros(n)
    c = np.zeros(n)
    sabs = np.zeros(n)
    trunc = np.full(n, np.inf)
    prev = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    for k in range(la.size):
        a = np.flatnonzero(~done)
        if a.size == 0:
            break
        nk = mu + k
        Lb = lb[k] - nk * lx[a]
        if k >= k_after:
            up = Lb > prev[a]
            if up.any():
                trunc[a[up]] = np.exp(Lb[up])
                done[a[up]] = True
                a = a[~up]
                Lb = Lb[~up]
        if sa[k] != 0.0 and a.size:
            L = la[k] - nk * lx[a]
            t = sa[k] * np.exp(L)
            ss = s[a]
            tot = ss + t
            big = np.abs(ss) >= np.abs(t)
            c[a] += np.where(big, (ss - tot) + t, (t - tot) + ss)
            s[a] = tot
            sabs[a] += np.abs(t) * (2.0 + abs(la[k]) + nk * lx[a])
        prev[a] = Lb
        if k >= k_after and a.size:
            tot = np.abs(s[a] + c[a])
            conv = (tot > 0) & (Lb < np.log(1e-18 * np.where(tot > 0, tot, 1.0)))
            trunc[a[conv]] = np.exp(Lb[conv])
            done[a[conv]] = True
    return s + c, trunc + EPS * sabs


# -- double-double series ---------------------------------------------------

_SPLIT = 134217729.0  # 2**27 + 1
EPS_DD = 2.0**-104


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    return _quick_two_sum(p, e + (ah * bl + al * bh))


def _dd_mul_d(ah, al, b):
    p, e = _two_prod(ah, b)
    return _quick_two_sum(p, e + al * b)


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    s, e = _quick_two_sum(s, e + t)
    return _quick_two_sum(s, e + f)


def dd_series_sum(z, r_hi, r_lo, c0_hi, c0_lo, alpha, kmax):
    """Power series in double-double arithmetic.

    Terms follow ``t_0 = c0`` and ``t_k = t_{k-1} * z * r[k]``, with the ratio
    table ``r`` (``r[0]`` unused) and ``c0`` given as (hi, lo) pairs. Used
    where the double series loses too many digits to cancellation.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    sh = np.full(n, c0_hi)
    sl = np.full(n, c0_lo)
    th = sh.copy()
    tl = sl.copy()
    sabs = np.full(n, abs(c0_hi) * 4.0)
    done = z == 0.0
    kpeak = np.abs(z) ** (1.0 / alpha) / alpha + 1.0
    kmax = min(kmax, r_hi.size)
    for k in range(1, kmax):
        a = np.flatnonzero(~done)
        if a.size == 0:
            break
        qh, ql = _dd_mul_d(r_hi[k], r_lo[k], z[a])
        th[a], tl[a] = _dd_mul(th[a], tl[a], qh, ql)
        sh[a], sl[a] = _dd_add(sh[a], sl[a], th[a], tl[a])
        sabs[a] += np.abs(th[a]) * (k + 4.0)
        conv = (k > kpeak[a]) & (np.abs(th[a]) <= 1e-34 * np.abs(sh[a]))
        done[a[conv]] = True
    val = sh + sl
    err = np.where(done, EPS_DD * sabs + EPS * np.abs(val), np.inf)
    return val, err
