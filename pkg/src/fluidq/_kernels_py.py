"""Pure-Python kernels. ``_kernels.pyx`` mirrors these line for line.

The two implementations perform the same floating-point operations in the
same order, so the simulator in particular produces bit-identical output on
either backend.
"""

import math

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.91893853320467274178

BIG = 1.0e10
BIG_INV = 1.0e-10
LOG_BIG_INV = math.log(BIG_INV)


def ln_gamma(a):
    if a < 0.5:
        return ln_gamma(a + 1.0) - math.log(a)
    z = a - 1.0
    s = _LANCZOS[0]
    for i in range(1, 9):
        s += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(s)


def bessel_log(n, x):
    """(log|J_n(x)|, sign) for integer n >= 0 and x > 0 by Miller's recurrence.

    Rescalings applied after J_n is captured are counted rather than applied,
    so orders far beyond x do not underflow.
    """
    nmax = n if n > x else int(math.ceil(x))
    m = 2 * ((nmax + int(math.sqrt(160.0 * max(nmax, 1))) + 10) // 2)
    tox = 2.0 / x
    bjp = 0.0
    bj = 1.0
    total = 0.0
    ans = 0.0
    have_ans = False
    skipped = 0
    jsum = False
    for j in range(m, 0, -1):
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        if abs(bj) > BIG:
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
    if n == 0:
        ans = bj
    total = 2.0 * total - bj
    if ans == 0.0:
        return -math.inf, 0.0
    ratio = ans / total
    sign = 1.0 if ratio > 0.0 else -1.0
    return math.log(abs(ratio)) + skipped * LOG_BIG_INV, sign


def corner_series(l, x, alpha, A, B, C, tol, jmax, derivative):
    """Sum over poles of the corner spectral representation.

    Returns (value, terms_used, converged). The prefactor
    mu_inf (C/A)^(l/2) sqrt(Delta/B) is applied by the caller.
    """
    beta = 2.0 * math.sqrt(A * C)
    delta = math.sqrt(B * B - beta * beta)
    log_ratio = math.log((B - delta) / beta)
    total = 0.0
    comp = 0.0
    small_run = 0
    log_fact = 0.0
    peak = 0.0
    for j in range(jmax):
        if j > 0:
            log_fact += math.log(j)
        w = j + 1.0 - alpha
        theta = -B / w
        lt = j * math.log(w) - log_fact + (j + 1) * log_ratio + x * theta + (B - delta) / theta
        order = l - j - 1
        if order >= 0:
            bl, bs = bessel_log(order, beta / -theta)
            if order % 2 == 1:
                bs = -bs
        else:
            bl, bs = bessel_log(-order, beta / -theta)
        term = bs * math.exp(lt + bl) if bs != 0.0 else 0.0
        if derivative:
            term *= theta
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if abs(term) > peak:
            peak = abs(term)
        # cancellation already limits accuracy to tol * peak
        if abs(term) < tol * max(abs(total + comp), peak):
            small_run += 1
            if small_run >= 3:
                return total + comp, j + 1, True
        else:
            small_run = 0
    return total + comp, jmax, False


def simulate_chunk(k, x, t, c, lam, mu, expo, unif, t0, dt, idx, out_k, out_x):
    """Advance the modulated fluid queue through pre-drawn random numbers.

    Records (Z, X) at times t0 + i*dt for i = idx, idx+1, ... into the output
    arrays. Returns the state (k, x, t, idx, used) after the chunk; stops early
    once every sample slot is filled.
    """
    n_samples = len(out_k)
    n_draws = len(expo)
    i = 0
    ts = t0 + idx * dt
    while i < n_draws and idx < n_samples:
        rate = lam + mu if k > 0 else lam
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
