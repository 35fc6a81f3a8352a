# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``."""

from libc.math cimport ceil, exp, fabs, log, sqrt, INFINITY

cdef double _LANCZOS_G = 7.0
cdef double[9] _LANCZOS = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
]
cdef double _HALF_LOG_2PI = 0.91893853320467274178
cdef double BIG = 1.0e10
cdef double BIG_INV = 1.0e-10


cdef double _ln_gamma(double a) noexcept nogil:
    cdef double shift = 0.0
    cdef double z, s, t
    cdef int i
    if a < 0.5:
        shift = log(a)
        a = a + 1.0
    z = a - 1.0
    s = _LANCZOS[0]
    for i in range(1, 9):
        s += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * log(t) - t + log(s) - shift


def ln_gamma(double a):
    return _ln_gamma(a)


cdef double _bessel_log(long n, double x, double* sign) noexcept nogil:
    cdef long nmax, m, j, skipped = 0
    cdef double tox, bjp, bj, bjm, total, ans, ratio
    cdef bint have_ans = False, jsum = False
    cdef double m_guess
    if n > x:
        nmax = n
    else:
        nmax = <long>ceil(x)
    m_guess = 160.0 * (nmax if nmax > 1 else 1)
    m = 2 * ((nmax + <long>sqrt(m_guess) + 10) // 2)
    tox = 2.0 / x
    bjp = 0.0
    bj = 1.0
    total = 0.0
    ans = 0.0
    j = m
    while j > 0:
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        if fabs(bj) > BIG:
            bj *= BIG_INV
            bjp *= BIG_INV
            total *= BIG_INV
            if have_ans:
                skipped += 1
        if jsum:
            total += bj
        jsum = not jsum
        if j == n:
            ans = bjp
            have_ans = True
        j -= 1
    if n == 0:
        ans = bj
    total = 2.0 * total - bj
    if ans == 0.0:
        sign[0] = 0.0
        return -INFINITY
    ratio = ans / total
    sign[0] = 1.0 if ratio > 0.0 else -1.0
    return log(fabs(ratio)) + skipped * log(BIG_INV)


def bessel_log(long n, double x):
    cdef double sign
    cdef double val = _bessel_log(n, x, &sign)
    return val, sign


def corner_series(long l, double x, double alpha, double A, double B, double C,
                  double tol, long jmax, bint derivative):
    cdef double beta = 2.0 * sqrt(A * C)
    cdef double delta = sqrt(B * B - beta * beta)
    cdef double log_ratio = log((B - delta) / beta)
    cdef double total = 0.0, comp = 0.0, log_fact = 0.0, peak = 0.0, scale
    cdef double w, theta, lt, bl, bs, term, t
    cdef long j, order, small_run = 0
    for j in range(jmax):
        if j > 0:
            log_fact += log(<double>j)
        w = j + 1.0 - alpha
        theta = -B / w
        lt = j * log(w) - log_fact + (j + 1) * log_ratio + x * theta + (B - delta) / theta
        order = l - j - 1
        if order >= 0:
            bl = _bessel_log(order, beta / -theta, &bs)
            if order % 2 == 1:
                bs = -bs
        else:
            bl = _bessel_log(-order, beta / -theta, &bs)
        if bs != 0.0:
            term = bs * exp(lt + bl)
        else:
            term = 0.0
        if derivative:
            term *= theta
        t = total + term
        if fabs(total) >= fabs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if fabs(term) > peak:
            peak = fabs(term)
        scale = fabs(total + comp)
        if peak > scale:
            scale = peak
        if fabs(term) < tol * scale:
            small_run += 1
            if small_run >= 3:
                return total + comp, j + 1, True
        else:
            small_run = 0
    return total + comp, jmax, False


def simulate_chunk(long k, double x, double t, double c, double lam, double mu,
                   const double[::1] expo, const double[::1] unif, double t0,
                   double dt, long idx, long[::1] out_k, double[::1] out_x):
    cdef Py_ssize_t n_samples = out_k.shape[0]
    cdef Py_ssize_t n_draws = expo.shape[0]
    cdef Py_ssize_t i = 0
    cdef double ts, rate, h, t_next, slope, xs
    with nogil:
        ts = t0 + idx * dt
        while i < n_draws and idx < n_samples:
            if k > 0:
                rate = lam + mu
            else:
                rate = lam
            h = expo[i] / rate
            t_next = t + h
            slope = k - c
            while idx < n_samples and ts <= t_next:
                xs = x + slope * (ts - t)
                out_k[idx] = k
                out_x[idx] = xs if xs > 0.0 else 0.0
                idx += 1
                ts = t0 + idx * dt
            x = x + slope * h
            if x < 0.0:
                x = 0.0
            t = t_next
            if k == 0 or unif[i] * rate < lam:
                k += 1
            else:
                k -= 1
            i += 1
    return k, x, t, idx, i
