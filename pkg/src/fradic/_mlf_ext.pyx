# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Mittag-Leffler summation kernels.

Same contract as ``fradic._mlf_py``; see that module for the argument layout.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, pow, fma, INFINITY, NAN

cnp.import_array()

cdef double EPS = 2.220446049250313e-16
cdef double LOG_MAX = 709.0


def series_sum(z, const double[::1] lc, const double[::1] sc, double alpha, Py_ssize_t kmax):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef Py_ssize_t n = zv.shape[0]
    out_v = np.zeros(n)
    out_e = np.full(n, np.inf)
    cdef double[::1] val = out_v
    cdef double[::1] err = out_e
    cdef Py_ssize_t i, k
    cdef double zi, x, lx, alx, kpeak, s, c, sabs, L, t, tot
    cdef bint neg, done, bad
    if kmax > lc.shape[0]:
        kmax = lc.shape[0]
    for i in range(n):
        zi = zv[i]
        x = fabs(zi)
        if x == 0.0:
            val[i] = sc[0] * exp(lc[0])
            err[i] = EPS * fabs(val[i])
            continue
        lx = log(x)
        alx = fabs(lx)
        neg = zi < 0
        kpeak = pow(x, 1.0 / alpha) / alpha + 1.0
        s = 0.0
        c = 0.0
        sabs = 0.0
        done = False
        bad = False
        for k in range(kmax):
            if sc[k] == 0.0:
                continue
            L = lc[k] + k * lx
            if L > LOG_MAX:
                bad = True
                break
            t = sc[k] * exp(L)
            if neg and (k & 1):
                t = -t
            tot = s + t
            if fabs(s) >= fabs(t):
                c += (s - tot) + t
            else:
                c += (t - tot) + s
            s = tot
            sabs += fabs(t) * (3.0 + fabs(lc[k]) + k * alx)
            if k > kpeak and fabs(t) <= 1e-17 * fabs(tot + c):
                done = True
                break
        if bad:
            val[i] = NAN
            err[i] = INFINITY
        else:
            val[i] = s + c
            err[i] = EPS * sabs if done else INFINITY
    return out_v, out_e


def asymptotic_sum(x, const double[::1] la, const double[::1] sa, const double[::1] lb,
                   double mu, Py_ssize_t k_after):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t K = la.shape[0]
    out_v = np.zeros(n)
    out_e = np.zeros(n)
    cdef double[::1] val = out_v
    cdef double[::1] err = out_e
    cdef Py_ssize_t i, k
    cdef double lx, s, c, sabs, trunc, prev, nk, Lb, t, tot
    for i in range(n):
        lx = log(xv[i])
        s = 0.0
        c = 0.0
        sabs = 0.0
        trunc = INFINITY
        prev = INFINITY
        for k in range(K):
            nk = mu + k
            Lb = lb[k] - nk * lx
            if k >= k_after and Lb > prev:
                trunc = exp(Lb)
                break
            if sa[k] != 0.0:
                t = sa[k] * exp(la[k] - nk * lx)
                tot = s + t
                if fabs(s) >= fabs(t):
                    c += (s - tot) + t
                else:
                    c += (t - tot) + s
                s = tot
                sabs += fabs(t) * (2.0 + fabs(la[k]) + nk * lx)
            prev = Lb
            if k >= k_after:
                tot = fabs(s + c)
                if tot > 0 and Lb < log(1e-18 * tot):
                    trunc = exp(Lb)
                    break
        val[i] = s + c
        err[i] = trunc + EPS * sabs
    return out_v, out_e


# -- double-double series ---------------------------------------------------

cdef double EPS_DD = 4.930380657631324e-32  # 2**-104

cdef inline void two_sum(double a, double b, double* s, double* e) noexcept nogil:
    cdef double bb
    s[0] = a + b
    bb = s[0] - a
    e[0] = (a - (s[0] - bb)) + (b - bb)

cdef inline void quick_two_sum(double a, double b, double* s, double* e) noexcept nogil:
    s[0] = a + b
    e[0] = b - (s[0] - a)

cdef inline void dd_mul(double ah, double al, double bh, double bl,
                        double* rh, double* rl) noexcept nogil:
    cdef double p = ah * bh
    cdef double e = fma(ah, bh, -p)
    quick_two_sum(p, e + (ah * bl + al * bh), rh, rl)

cdef inline void dd_mul_d(double ah, double al, double b,
                          double* rh, double* rl) noexcept nogil:
    cdef double p = ah * b
    cdef double e = fma(ah, b, -p)
    quick_two_sum(p, e + al * b, rh, rl)

cdef inline void dd_add(double ah, double al, double bh, double bl,
                        double* rh, double* rl) noexcept nogil:
    cdef double s, e, t, f
    two_sum(ah, bh, &s, &e)
    two_sum(al, bl, &t, &f)
    quick_two_sum(s, e + t, &s, &e)
    quick_two_sum(s, e + f, rh, rl)


def dd_series_sum(z, const double[::1] r_hi, const double[::1] r_lo, double c0_hi,
                  double c0_lo, double alpha, Py_ssize_t kmax):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef Py_ssize_t n = zv.shape[0]
    out_v = np.zeros(n)
    out_e = np.full(n, np.inf)
    cdef double[::1] val = out_v
    cdef double[::1] err = out_e
    cdef Py_ssize_t i, k
    cdef double zi, sh, sl, th, tl, qh, ql, sabs, kpeak
    cdef bint done
    if kmax > r_hi.shape[0]:
        kmax = r_hi.shape[0]
    with nogil:
        for i in range(n):
            zi = zv[i]
            sh = c0_hi
            sl = c0_lo
            th = c0_hi
            tl = c0_lo
            sabs = fabs(c0_hi) * 4.0
            done = zi == 0.0
            kpeak = pow(fabs(zi), 1.0 / alpha) / alpha + 1.0
            k = 1
            while not done and k < kmax:
                dd_mul_d(r_hi[k], r_lo[k], zi, &qh, &ql)
                dd_mul(th, tl, qh, ql, &th, &tl)
                dd_add(sh, sl, th, tl, &sh, &sl)
                sabs += fabs(th) * (k + 4.0)
                if k > kpeak and fabs(th) <= 1e-34 * fabs(sh):
                    done = True
                k += 1
            val[i] = sh + sl
            if done:
                err[i] = EPS_DD * sabs + EPS * fabs(val[i])
    return out_v, out_e
