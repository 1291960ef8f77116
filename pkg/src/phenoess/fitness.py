"""Fitness of an arrival date against a resident strategy, and ESS certification.

For a resident strategy mu with CDF F and disturbance density f,

    phi(y) = exp(-a F(y)) * [ integral_0^y (exp(a (1-p) F(x)) - p) f(x) dx + p ].

Between consecutive knots of F and f both are linear, so the bracketed
integral is computed panel by panel with a fixed Gauss-Legendre rule after
splitting panels until the exponent moves by at most EXP_SWING.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels._rules import EXP_SWING, GL_NODES, GL_WEIGHTS
from .disturbance import Disturbance
from .errors import InvalidDomainError
from .ess_solver import CompetitionParams, degenerate_cases
from .numerics import DEFAULT_TOL, Tolerances
from .strategy import MixedStrategy

TOL_CERTIFY = 1e-6


def psi(y, x, s: MixedStrategy, params: CompetitionParams):
    """Fitness of an individual arriving at ``y`` when the disturbance strikes at ``x``."""
    a, p = params.a, params.p
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    Fy = np.asarray(s.F_mu(y))
    Fx = np.asarray(s.F_mu(x))
    out = np.where(y <= x, p * np.exp(-a * Fy), np.exp(-a * (p * Fx + Fy - Fx)))
    return out if out.ndim else float(out)


def _bracket_at(ys: np.ndarray, s: MixedStrategy, params: CompetitionParams,
                d: Disturbance) -> np.ndarray:
    """integral_0^y (exp(a(1-p)F(x)) - p) f(x) dx at each (sorted or not) y."""
    a, p = params.a, params.p
    edges = np.unique(np.concatenate([[0.0], s.xs, d.xs, ys[ys >= 0]]))
    # f vanishes outside [t_low, t_high]; clip panels there and let H stay flat.
    lo, hi = edges[:-1], edges[1:]
    F_lo = np.asarray(s.F_mu(lo), dtype=float)
    F_hi = np.asarray(s.F_mu(hi), dtype=float)
    # F_mu jumps at 0; on (0, next] it starts from the right limit, which F_mu(0) already is.
    f_lo = np.asarray(d.density_right(lo), dtype=float)
    f_hi = np.asarray(d.density_left(hi), dtype=float)
    c = a * (1.0 - p)
    pieces = _kernels.bracket_panels(lo, hi, f_lo, f_hi, F_lo, F_hi, c, p)
    H = np.concatenate([[0.0], np.cumsum(pieces)])
    idx = np.searchsorted(edges, np.maximum(ys, 0.0))
    return np.where(ys > 0, H[np.minimum(idx, H.size - 1)], 0.0)


def phi(y, s: MixedStrategy, params: CompetitionParams, d: Disturbance,
        tol: Tolerances = DEFAULT_TOL):
    """Expected fitness of an individual arriving at ``y`` (scalar or array).

    The panel rule is exact to rounding for the piecewise-linear inputs used
    here, so ``tol`` is accepted for interface symmetry only.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(ys < 0):
        raise InvalidDomainError("arrival dates must be >= 0")
    a, p = params.a, params.p
    if a == 0.0:
        out = p + (1.0 - p) * np.asarray(d.cdf(ys), dtype=float)
    else:
        H = _bracket_at(ys, s, params, d)
        out = np.exp(-a * np.asarray(s.F_mu(ys), dtype=float)) * (H + p)
    return out if np.ndim(y) else float(out[0])


def _ac_nodes(s: MixedStrategy, params: CompetitionParams, d: Disturbance):
    """Quadrature nodes and weights for integral g(y) dF_nu(y) over the ac part."""
    xs, F = s.xs, s.F
    edges = np.unique(np.concatenate([xs, d.xs[(d.xs > xs[0]) & (d.xs < xs[-1])]]))
    Fe = np.interp(edges, xs, F)
    lo, hi = edges[:-1], edges[1:]
    slope = np.diff(Fe) / np.diff(edges)
    keep = slope > 0
    lo, hi, slope, dF = lo[keep], hi[keep], slope[keep], np.diff(Fe)[keep]
    m = np.maximum(1, np.ceil(params.a * (1.0 - s.atom) * dF / EXP_SWING).astype(np.int64))
    owner = np.repeat(np.arange(lo.size), m)
    j = np.arange(owner.size) - np.repeat(np.cumsum(m) - m, m)
    h = (hi - lo)[owner] / m[owner]
    left = lo[owner] + j * h
    nodes = left[:, None] + 0.5 * h[:, None] * (1.0 + GL_NODES[None, :])
    w = (0.5 * h * slope[owner])[:, None] * GL_WEIGHTS[None, :]
    return nodes.ravel(), w.ravel()


def average_fitness(s: MixedStrategy, params: CompetitionParams, d: Disturbance,
                    tol: Tolerances = DEFAULT_TOL) -> float:
    """Population-average fitness: integral of phi against mu."""
    total = s.atom * phi(0.0, s, params, d, tol)
    if s.atom < 1.0:
        nodes, w = _ac_nodes(s, params, d)
        total += (1.0 - s.atom) * float(np.dot(phi(nodes, s, params, d, tol), w))
    return float(total)


def max_average_fitness(a: float) -> float:
    """Supremum of the average fitness over all strategies, (1 - e^-a)/a."""
    if not a > 0:
        raise InvalidDomainError("a must be positive")
    return -math.expm1(-a) / a


def late_family_factor(n: int, p: float, d: Disturbance) -> float:
    """c_n = cdf(t_high(1 - 1/n)) + p * tail(t_high(1 - 1/n)); lower factor for the late family."""
    x = d.t_high * (1.0 - 1.0 / n)
    return float(d.cdf(x) + p * d.tail(x))


@dataclass(frozen=True, eq=False)
class FitnessProfile:
    ys: np.ndarray
    phis: np.ndarray
    on_support: np.ndarray
    lambda_hat: float
    level: float
    support_deviation: float
    off_support_excess: float
    certified: bool
    tol_certify: float = TOL_CERTIFY

    @property
    def probes(self):
        return list(zip(self.ys.tolist(), self.phis.tolist()))

    def certificate(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "level": self.level,
            "support_deviation": self.support_deviation,
            "off_support_excess": self.off_support_excess,
            "certified": bool(self.certified),
            "tol_certify": self.tol_certify,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "phi", "on_support"])
            for y, v, on in zip(self.ys, self.phis, self.on_support):
                w.writerow([f"{y:.12g}", f"{v:.12g}", int(on)])


def probe_grid(s: MixedStrategy, d: Disturbance, probe_count: int, margin: float = 0.1):
    top = max(d.t_high, float(s.xs[-1]) if s.xs.size else 0.0)
    top = top * (1.0 + margin) if top > 0 else 1.0
    ys = np.concatenate([np.linspace(0.0, top, probe_count), s.xs, d.xs])
    return np.unique(ys[ys >= 0])


def ess_certificate(s: MixedStrategy, params: CompetitionParams, d: Disturbance,
                    probe_count: int = 2001, tol: Tolerances = DEFAULT_TOL,
                    level: float | None = None, tol_certify: float = TOL_CERTIFY) -> FitnessProfile:
    """Probe phi and check that it is flat on the support and no higher elsewhere.

    The reference level is ``level`` if given, else the smallest phi seen on
    the support; a strategy is certified when phi stays within
    ``tol_certify`` of it on the support and never exceeds it by more than
    ``tol_certify`` off the support. Never raises on a non-equilibrium input.
    """
    if probe_count < 10:
        raise InvalidDomainError("probe_count must be >= 10")
    ys = probe_grid(s, d, probe_count)
    vals = np.asarray(phi(ys, s, params, d, tol), dtype=float)
    on = s.on_support(ys)
    sup_vals = vals[on]
    ref = float(level) if level is not None else (float(sup_vals.min()) if sup_vals.size else float("nan"))
    dev = float(np.max(np.abs(sup_vals - ref))) if sup_vals.size else 0.0
    off = vals[~on]
    excess = float(np.max(off - ref)) if off.size else 0.0
    if params.is_degenerate:
        certified = degenerate_cases(params.a, params.p, d).is_ess(s)
    else:
        certified = dev <= tol_certify and excess <= tol_certify
    return FitnessProfile(ys, vals, on, float(vals.max()), ref, dev, excess, bool(certified),
                          tol_certify)
