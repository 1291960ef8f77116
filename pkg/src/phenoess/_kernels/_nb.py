"""numba implementations of the hot loops."""
import math

import numpy as np
from numba import njit

from ._rules import (EXP_SWING, GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS, GL_NODES,
                     GL_WEIGHTS, LOG_PANEL)

_GKX = GK_NODES.copy()
_GKW = GK_WEIGHTS.copy()
_GW = GAUSS_WEIGHTS.copy()
_GLX = GL_NODES.copy()
_GLW = GL_WEIGHTS.copy()


@njit(cache=True)
def log_integrand(s, p):
    q = 1.0 - p
    return math.exp(p * s) / (q - p * math.expm1(-q * s))


@njit(cache=True)
def _gk15(lo, hi, p):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    k = 0.0
    g = 0.0
    for j in range(15):
        v = log_integrand(c + h * _GKX[j], p)
        k += _GKW[j] * v
        g += _GW[j] * v
    return k * h, abs((k - g) * h)


@njit(cache=True)
def _kernel_log_one(s0, s1, p, abs_tol, rel_tol, max_iter):
    if s1 <= s0:
        return 0.0, True
    if p == 0.0:
        return s1 - s0, True
    width = s1 - s0
    n0 = max(1, int(math.ceil(width / LOG_PANEL)))
    cap = n0 + 2 * max_iter + 2
    los = np.empty(cap)
    his = np.empty(cap)
    top = 0
    for i in range(n0 - 1, -1, -1):
        los[top] = s0 + width * i / n0
        his[top] = s0 + width * (i + 1) / n0 if i + 1 < n0 else s1
        top += 1
    total = 0.0
    splits = 0
    while top > 0:
        top -= 1
        lo = los[top]
        hi = his[top]
        val, err = _gk15(lo, hi, p)
        tol = max(abs_tol * (hi - lo) / width, rel_tol * abs(val))
        if err <= tol or hi - lo <= 1e-13 * (1.0 + abs(lo)):
            total += val
            continue
        if splits >= max_iter:
            return total + val, False
        splits += 1
        mid = 0.5 * (lo + hi)
        los[top] = mid
        his[top] = hi
        top += 1
        los[top] = lo
        his[top] = mid
        top += 1
    return total, True


@njit(cache=True)
def kernel_log_batch(s0, s1, p, abs_tol, rel_tol, max_iter):
    n = s0.size
    out = np.empty(n)
    ok = True
    for i in range(n):
        v, good = _kernel_log_one(s0[i], s1[i], p, abs_tol, rel_tol, max_iter)
        out[i] = v
        ok = ok and good
    return out, ok


@njit(cache=True)
def invert_kernel_batch(s0, targets, s_max, p, abs_tol, rel_tol, max_iter):
    """Solve kernel(s0, t) = target for t in [s0, s_max], elementwise."""
    n = targets.size
    out = np.empty(n)
    ok = True
    guess = s0
    for i in range(n):
        tau = targets[i]
        if tau <= 0.0:
            out[i] = s0
            continue
        if p == 0.0:
            out[i] = min(s0 + tau, s_max)
            continue
        lo = s0
        hi = s_max
        t = guess
        if t <= lo or t >= hi:
            t = min(s0 + tau / log_integrand(s0, p), 0.5 * (lo + hi))
        done = False
        for _ in range(max_iter):
            k, good = _kernel_log_one(s0, t, p, abs_tol * 1e-2, rel_tol * 1e-2, max_iter)
            ok = ok and good
            r = k - tau
            if r > 0.0:
                hi = t
            else:
                lo = t
            if abs(r) <= max(abs_tol, rel_tol * tau) or hi - lo <= 4e-16 * max(1.0, abs(t)):
                done = True
                break
            t_new = t - r / log_integrand(t, p)
            if not (lo < t_new < hi):
                t_new = 0.5 * (lo + hi)
            t = t_new
        if not done:
            ok = False
        out[i] = t
        guess = t
    return out, ok


@njit(cache=True)
def bracket_panels(x_lo, x_hi, f_lo, f_hi, F_lo, F_hi, c, p):
    """Integrate (exp(c*F) - p) * f over panels where F and f are linear."""
    n = x_lo.size
    out = np.empty(n)
    for i in range(n):
        w = x_hi[i] - x_lo[i]
        if w <= 0.0 or (f_lo[i] == 0.0 and f_hi[i] == 0.0):
            out[i] = 0.0
            continue
        m = max(1, int(math.ceil(c * abs(F_hi[i] - F_lo[i]) / EXP_SWING)))
        acc = 0.0
        for j in range(m):
            t0 = j / m
            t1 = (j + 1) / m
            tc = 0.5 * (t0 + t1)
            th = 0.5 * (t1 - t0)
            sub = 0.0
            for k in range(_GLX.size):
                t = tc + th * _GLX[k]
                F = F_lo[i] + (F_hi[i] - F_lo[i]) * t
                f = f_lo[i] + (f_hi[i] - f_lo[i]) * t
                sub += _GLW[k] * (math.exp(c * F) - p) * f
            acc += sub * th
        out[i] = acc * w
    return out


@njit(cache=True)
def mc_mean_fitness(times, x_dist, u_surv, p, a, ties_inclusive):
    """Mean realised fitness of a sorted finite population for one disturbance draw."""
    n = times.size
    n_pre = 0
    s_pre = 0
    for j in range(n):
        if times[j] <= x_dist:
            n_pre += 1
            if u_surv[j] < p:
                s_pre += 1
        else:
            break
    total = 0.0
    i = 0
    while i < n:
        j = i
        while j < n and times[j] == times[i]:
            j += 1
        for k in range(i, j):
            rank = j - 1 if ties_inclusive else i
            if times[k] <= x_dist:
                if u_surv[k] < p:
                    total += math.exp(-a * rank / n)
            else:
                total += math.exp(-a * (s_pre + rank - n_pre) / n)
        i = j
    return total / n
