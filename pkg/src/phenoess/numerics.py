"""Quadrature, the competition kernel integral, and bracketed root finding.

The kernel

    K(u, v; p) = integral_u^v dz / (z**(1-p) - p),    1 <= u <= v,

appears in every equilibrium equation. It is always evaluated after the
substitution z = exp(s), which turns the integrand into
exp(p*s) / (1 - p*exp(-(1-p)*s)); limits like v = exp(50) are then passed as
their logarithms and never materialised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _kernels
from ._kernels._rules import GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS
from .errors import InvalidDomainError, NoBracketError, NoConvergenceError


@dataclass(frozen=True)
class Tolerances:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidDomainError("tolerances must be positive")
        if self.max_iter < 1:
            raise InvalidDomainError("max_iter must be >= 1")


DEFAULT_TOL = Tolerances()


def _check_p(p):
    if not (0.0 <= p < 1.0):
        raise InvalidDomainError(f"p must lie in [0, 1), got {p}")


def kernel_log(s0, s1, p, tol: Tolerances = DEFAULT_TOL):
    """Kernel integral between log-limits ``s0 <= s1`` (i.e. u = e**s0, v = e**s1).

    Accepts scalars or equal-length arrays; returns the same shape.
    """
    _check_p(p)
    s0a = np.atleast_1d(np.asarray(s0, dtype=float))
    s1a = np.atleast_1d(np.asarray(s1, dtype=float))
    s0a, s1a = np.broadcast_arrays(s0a, s1a)
    if np.any(s0a < 0) or np.any(s1a < s0a):
        raise InvalidDomainError("kernel limits must satisfy 0 <= s0 <= s1")
    p = float(p)
    tail = np.zeros(s0a.shape)
    if p > 0.0:
        # Beyond s_flat the integrand equals exp(p*s) to machine precision; integrate that
        # part exactly so tiny p (huge a_M) does not need ~s1 quadrature panels.
        s_flat = max(0.0, (37.0 + math.log(p)) / (1.0 - p))
        cut = np.maximum(s0a, s_flat)
        far = s1a > cut
        width = s1a[far] - cut[far]
        x = p * width
        # expm1(x)/x written to stay exact when p is subnormal
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            rel = np.where(x > 1e-8, np.expm1(x) / np.where(x > 0, x, 1.0), 1.0 + 0.5 * x)
            tail[far] = np.exp(p * cut[far]) * width * rel
        s1a = np.minimum(s1a, cut)
    vals, ok = _kernels.kernel_log_batch(np.ascontiguousarray(s0a), np.ascontiguousarray(s1a),
                                         p, tol.abs_tol, tol.rel_tol, tol.max_iter)
    vals = vals + tail
    if not ok:
        raise NoConvergenceError("kernel quadrature exceeded max_iter subdivisions")
    if np.ndim(s0) == 0 and np.ndim(s1) == 0:
        return float(vals[0])
    return vals


def kernel_K(u: float, v: float, p: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Evaluate integral_u^v dz / (z**(1-p) - p) for 1 <= u <= v and 0 <= p < 1."""
    _check_p(p)
    if not (1.0 <= u <= v):
        raise InvalidDomainError(f"kernel_K needs 1 <= u <= v, got u={u}, v={v}")
    if p == 0.0:
        return math.log(v / u)
    return kernel_log(math.log(u), math.log(v), p, tol)


def invert_kernel(s0: float, targets, s_max: float, p: float, tol: Tolerances = DEFAULT_TOL):
    """Return t in [s0, s_max] with kernel_log(s0, t, p) = target, for each target."""
    _check_p(p)
    targets = np.ascontiguousarray(np.atleast_1d(np.asarray(targets, dtype=float)))
    t, ok = _kernels.invert_kernel_batch(float(s0), targets, float(s_max), float(p),
                                         tol.abs_tol, tol.rel_tol, tol.max_iter)
    if not ok:
        raise NoConvergenceError("kernel inversion did not converge")
    return t


def bracketed_root(fn, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Root of a sign-changing function on ``[lo, hi]`` by Brent's method.

    An endpoint whose residual is already within ``abs_tol`` is returned as is.
    """
    f_lo = fn(lo)
    if abs(f_lo) <= tol.abs_tol:
        return lo
    f_hi = fn(hi)
    if abs(f_hi) <= tol.abs_tol:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoBracketError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    # xtol tighter than abs_tol so the residual test usually holds too.
    xtol = min(tol.abs_tol, 1e-12) * 1e-2
    rtol = max(4 * np.finfo(float).eps, min(tol.rel_tol, 1e-12))
    try:
        x = optimize.brentq(fn, lo, hi, xtol=xtol, rtol=rtol, maxiter=tol.max_iter)
    except RuntimeError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return float(x)


def expand_bracket(fn, lo: float, hi: float, limit: float, grow, max_steps: int = 200):
    """Move ``hi`` with ``grow`` until fn changes sign on [lo, hi] or ``limit`` is passed."""
    f_lo = fn(lo)
    for _ in range(max_steps):
        if np.sign(fn(hi)) != np.sign(f_lo):
            return lo, hi
        lo, f_lo = hi, fn(hi)
        hi = grow(hi)
        if (limit > lo and hi > limit) or (limit < lo and hi < limit):
            hi = limit
    raise NoBracketError("could not bracket a root")


def adaptive_gk15(fn, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL,
                  breakpoints=()) -> float:
    """Adaptive Gauss-Kronrod quadrature of a vectorised callable.

    The interval is pre-split at ``breakpoints`` so that kinks of piecewise
    integrands sit on panel edges.
    """
    if hi < lo:
        raise InvalidDomainError("integration limits reversed")
    if hi == lo:
        return 0.0
    edges = np.unique(np.concatenate([[lo, hi], np.asarray(breakpoints, dtype=float)]))
    edges = edges[(edges >= lo) & (edges <= hi)]
    a_, b_ = edges[:-1], edges[1:]
    width = hi - lo
    total = 0.0
    for _ in range(tol.max_iter):
        c = 0.5 * (a_ + b_)
        h = 0.5 * (b_ - a_)
        v = np.asarray(fn((c[:, None] + h[:, None] * GK_NODES[None, :]).ravel()), dtype=float)
        v = v.reshape(c.size, GK_NODES.size)
        k = (v @ GK_WEIGHTS) * h
        err = np.abs((v @ GAUSS_WEIGHTS) * h - k)
        ok = (err <= np.maximum(tol.abs_tol * (b_ - a_) / width, tol.rel_tol * np.abs(k))) | (
            b_ - a_ <= 1e-14 * (1 + np.abs(a_)))
        total += float(np.sum(k[ok]))
        if ok.all():
            return total
        a_, b_ = a_[~ok], b_[~ok]
        m = 0.5 * (a_ + b_)
        a_, b_ = np.concatenate([a_, m]), np.concatenate([m, b_])
    raise NoConvergenceError("adaptive quadrature exceeded max_iter rounds")


def integrate_density_product(d, weight, lo: float, hi: float,
                              tol: Tolerances = DEFAULT_TOL) -> float:
    """Integral of ``weight(x) * density(x)`` over [lo, hi], split at the density knots."""
    if lo > hi:
        raise InvalidDomainError("lo must not exceed hi")
    lo_c, hi_c = max(lo, d.t_low), min(hi, d.t_high)
    if lo_c >= hi_c:
        return 0.0
    return adaptive_gk15(lambda x: np.asarray(weight(x), dtype=float) * d.density(x),
                         lo_c, hi_c, tol, breakpoints=d.xs)
