"""Pure-numpy implementations, vectorised across intervals and knots."""
import numpy as np

from ._rules import (EXP_SWING, GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS, GL_NODES,
                     GL_WEIGHTS, LOG_PANEL)


def log_integrand(s, p):
    q = 1.0 - p
    return np.exp(p * s) / (q - p * np.expm1(-q * s))


def _gk15(lo, hi, p):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    v = log_integrand(c[:, None] + h[:, None] * GK_NODES[None, :], p)
    k = v @ GK_WEIGHTS
    g = v @ GAUSS_WEIGHTS
    return k * h, np.abs((k - g) * h)


def kernel_log_batch(s0, s1, p, abs_tol, rel_tol, max_iter):
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    out = np.zeros(s0.size)
    live = s1 > s0
    if p == 0.0:
        out[live] = s1[live] - s0[live]
        return out, True
    idx = np.flatnonzero(live)
    width = s1[idx] - s0[idx]
    counts = np.maximum(1, np.ceil(width / LOG_PANEL).astype(np.int64))
    owner = np.repeat(idx, counts)
    start = np.repeat(np.cumsum(counts) - counts, counts)
    j = np.arange(owner.size) - start
    n_own = np.repeat(counts, counts)
    lo = s0[owner] + (s1[owner] - s0[owner]) * j / n_own
    hi = np.where(j + 1 < n_own, s0[owner] + (s1[owner] - s0[owner]) * (j + 1) / n_own, s1[owner])
    total_w = s1 - s0
    rounds = 0
    while owner.size:
        val, err = _gk15(lo, hi, p)
        tol = np.maximum(abs_tol * (hi - lo) / total_w[owner], rel_tol * np.abs(val))
        accept = (err <= tol) | (hi - lo <= 1e-13 * (1.0 + np.abs(lo)))
        if rounds >= max_iter:
            np.add.at(out, owner, val)
            return out, False
        np.add.at(out, owner[accept], val[accept])
        keep = ~accept
        owner, lo, hi = owner[keep], lo[keep], hi[keep]
        mid = 0.5 * (lo + hi)
        owner = np.concatenate([owner, owner])
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        rounds += 1
    return out, True


def invert_kernel_batch(s0, targets, s_max, p, abs_tol, rel_tol, max_iter):
    """Solve kernel(s0, t) = target for t in [s0, s_max], vectorised Newton-bisection."""
    targets = np.asarray(targets, dtype=float)
    out = np.full(targets.size, float(s0))
    pos = targets > 0.0
    if p == 0.0:
        out[pos] = np.minimum(s0 + targets[pos], s_max)
        return out, True
    tau = targets[pos]
    lo = np.full(tau.size, float(s0))
    hi = np.full(tau.size, float(s_max))
    t = np.minimum(s0 + tau / log_integrand(s0, p), 0.5 * (lo + hi))
    active = np.ones(tau.size, dtype=bool)
    ok = True
    for _ in range(max_iter):
        a_idx = np.flatnonzero(active)
        if a_idx.size == 0:
            break
        ta = t[a_idx]
        k, good = kernel_log_batch(np.full(a_idx.size, float(s0)), ta, p,
                                   abs_tol * 1e-2, rel_tol * 1e-2, max_iter)
        ok = ok and good
        r = k - tau[a_idx]
        up = r > 0.0
        hi[a_idx[up]] = ta[up]
        lo[a_idx[~up]] = ta[~up]
        conv = (np.abs(r) <= np.maximum(abs_tol, rel_tol * tau[a_idx])) | (
            hi[a_idx] - lo[a_idx] <= 4e-16 * np.maximum(1.0, np.abs(ta)))
        t_new = ta - r / log_integrand(ta, p)
        bad = ~((lo[a_idx] < t_new) & (t_new < hi[a_idx]))
        t_new[bad] = 0.5 * (lo[a_idx[bad]] + hi[a_idx[bad]])
        t[a_idx[~conv]] = t_new[~conv]
        active[a_idx[conv]] = False
    if active.any():
        ok = False
    out[pos] = t
    return out, ok


def bracket_panels(x_lo, x_hi, f_lo, f_hi, F_lo, F_hi, c, p):
    """Integrate (exp(c*F) - p) * f over panels where F and f are linear."""
    x_lo = np.asarray(x_lo, dtype=float)
    w = np.asarray(x_hi, dtype=float) - x_lo
    m = np.maximum(1, np.ceil(c * np.abs(F_hi - F_lo) / EXP_SWING).astype(np.int64))
    owner = np.repeat(np.arange(x_lo.size), m)
    start = np.repeat(np.cumsum(m) - m, m)
    j = np.arange(owner.size) - start
    mm = m[owner]
    t = ((j[:, None] + 0.5) + 0.5 * GL_NODES[None, :]) / mm[:, None]
    F = F_lo[owner, None] + (F_hi - F_lo)[owner, None] * t
    f = f_lo[owner, None] + (f_hi - f_lo)[owner, None] * t
    sub = ((np.exp(c * F) - p) * f) @ GL_WEIGHTS * 0.5 / mm
    out = np.zeros(x_lo.size)
    np.add.at(out, owner, sub)
    out *= w
    out[(w <= 0.0) | ((f_lo == 0.0) & (f_hi == 0.0))] = 0.0
    return out


def mc_mean_fitness(times, x_dist, u_surv, p, a, ties_inclusive):
    """Mean realised fitness of a sorted finite population for one disturbance draw."""
    n = times.size
    side = "right" if ties_inclusive else "left"
    rank = np.searchsorted(times, times, side=side)
    if ties_inclusive:
        rank = rank - 1
    exposed = times <= x_dist
    n_pre = int(exposed.sum())
    survived = u_surv < p
    s_pre = int(survived[:n_pre].sum())
    alive = np.where(exposed, rank, s_pre + rank - n_pre)
    fit = np.exp(-a * alive / n)
    fit = np.where(exposed, np.where(survived, fit, 0.0), fit)
    return float(fit.sum() / n)
