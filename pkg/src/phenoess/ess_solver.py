"""Phase-transition threshold, equilibrium coefficients and the ESS itself.

Notation: C(a, p) = K(1, e**a; p). The threshold a_M(p) solves p*C = 1, and
the regime is set by comparing a with a_M(p). Below the threshold the ESS is
absolutely continuous on [x_c, t_high]; above it a fraction gamma of the
population arrives at time 0.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .disturbance import Disturbance
from .errors import InconsistentSolutionError, InvalidDomainError, InvalidRegimeError
from .numerics import (DEFAULT_TOL, Tolerances, bracketed_root, expand_bracket, invert_kernel,
                       kernel_log)
from .strategy import MixedStrategy

# a_M(0) is unbounded: every finite a is subcritical when p = 0.
UNBOUNDED = math.inf
CRITICAL_RTOL = 1e-9
# Target error of phi from interpolating F_nu; phi moves by about a*lambda*dF.
REFINE_PHI_TOL = 1e-8
REFINE_ROUNDS = 12


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class CompetitionParams:
    """Competition strength ``a`` and disturbance survival probability ``p``.

    The solver needs a > 0 and 0 <= p < 1. The no-competition and
    no-mortality edges (a = 0 or p = 1) can be built with :meth:`edge`; they
    are served by :func:`degenerate_cases` and the fitness functions only.
    """

    a: float
    p: float
    allow_edge: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        a, p = float(self.a), float(self.p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        if not (math.isfinite(a) and math.isfinite(p)):
            raise InvalidDomainError("a and p must be finite")
        if self.allow_edge:
            if a < 0 or not (0.0 <= p <= 1.0):
                raise InvalidDomainError(f"need a >= 0 and p in [0, 1], got a={a}, p={p}")
        elif not (a > 0 and 0.0 <= p < 1.0):
            raise InvalidDomainError(
                f"need a > 0 and 0 <= p < 1, got a={a}, p={p} (see degenerate_cases)")

    @classmethod
    def edge(cls, a: float, p: float) -> "CompetitionParams":
        return cls(a, p, allow_edge=True)

    @property
    def is_degenerate(self) -> bool:
        return self.a == 0.0 or self.p == 1.0


def _require_solvable(params: CompetitionParams):
    if params.is_degenerate:
        raise InvalidDomainError("a = 0 or p = 1 has no interior ESS; use degenerate_cases")


def _C(a: float, p: float, tol: Tolerances) -> float:
    if p == 0.0:
        return a
    return kernel_log(0.0, a, p, tol)


# -- threshold --------------------------------------------------------------

@functools.lru_cache(maxsize=4096)
def _a_M_cached(p: float, tol: Tolerances) -> float:
    if p < 2.0 ** -55:
        # the integrand is exp(p*s) to machine precision, so p*C(a) = expm1(p*a);
        # for denormal p this overflows to inf, i.e. effectively unbounded
        return math.log(2.0) / p
    # C(a) >= a, so the root of p*C(a) = 1 lies in (0, 1/p].
    return bracketed_root(lambda a: p * _C(a, p, tol) - 1.0, 0.0, 1.0 / p, tol)


def compute_a_M(p: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Competition threshold a_M(p); :data:`UNBOUNDED` when p = 0."""
    p = float(p)
    if not (0.0 <= p < 1.0):
        raise InvalidDomainError(f"p must lie in [0, 1), got {p}")
    if p == 0.0:
        return UNBOUNDED
    return _a_M_cached(p, tol)


def compute_p_M(a: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Inverse of a_M: the p in (0, 1) with a_M(p) = a. p_M(inf) = 0."""
    a = float(a)
    if a == UNBOUNDED:
        return 0.0
    if not a > 0:
        raise InvalidDomainError(f"a must be positive, got {a}")

    # p*C(a, p) - 1 increases in p, from -1 at p = 0 to +inf as p -> 1.
    def resid(p):
        return p * _C(a, p, tol) - 1.0

    lo, hi = expand_bracket(resid, 0.0, 0.5, 1.0, lambda h: 0.5 * (1.0 + h), max_steps=60)
    return bracketed_root(resid, lo, hi, tol)


def classify_regime(a: float, a_M: float) -> Regime:
    if a_M == UNBOUNDED:
        return Regime.SUBCRITICAL
    if abs(a - a_M) <= CRITICAL_RTOL * a_M:
        return Regime.CRITICAL
    return Regime.SUBCRITICAL if a < a_M else Regime.SUPERCRITICAL


def regime(params: CompetitionParams, tol: Tolerances = DEFAULT_TOL) -> Regime:
    _require_solvable(params)
    return classify_regime(params.a, compute_a_M(params.p, tol))


# -- coefficients ---------------------------------------------------------------

def compute_gamma(params: CompetitionParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """Atom mass at 0; zero unless a > a_M(p)."""
    _require_solvable(params)
    a, p = params.a, params.p
    a_M = compute_a_M(p, tol)
    if classify_regime(a, a_M) is not Regime.SUPERCRITICAL:
        return 0.0

    # p*exp(-a*g)*K(e**(a*g), e**a) - 1 is decreasing in g, positive at g = 0.
    def resid(g):
        return p * math.exp(-a * g) * kernel_log(a * g, a, p, tol) - 1.0

    hi = min(1.0 - a_M / a, p)
    return bracketed_root(resid, 0.0, hi, tol)


def _lambda_from(a, p, C, gamma, reg):
    if reg is Regime.SUPERCRITICAL:
        return p * math.exp(-a * gamma)
    return 1.0 / (1.0 + (1.0 - p) * C)


def compute_lambda(params: CompetitionParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """Equilibrium fitness level lambda(a, p)."""
    _require_solvable(params)
    a, p = params.a, params.p
    reg = regime(params, tol)
    gamma = compute_gamma(params, tol) if reg is Regime.SUPERCRITICAL else 0.0
    C = _C(a, p, tol) if reg is not Regime.SUPERCRITICAL else float("nan")
    return _lambda_from(a, p, C, gamma, reg)


def uniform_alpha_R(params: CompetitionParams, tol: Tolerances = DEFAULT_TOL):
    """Return (alpha, R) with x_c = t_low + alpha*(t_high - t_low) for uniform f and R = tail(x_c).

    Only defined for a <= a_M(p).
    """
    _require_solvable(params)
    if regime(params, tol) is Regime.SUPERCRITICAL:
        raise InvalidRegimeError("alpha and R are only defined for a <= a_M(p)")
    C = _C(params.a, params.p, tol)
    R = C / (1.0 + (1.0 - params.p) * C)
    if regime(params, tol) is Regime.CRITICAL:
        R = 1.0
    return 1.0 - R, R


def compute_x_c(params: CompetitionParams, d: Disturbance, tol: Tolerances = DEFAULT_TOL) -> float:
    """Start of the continuous part: the maximal x with tail(x) = R (0 if supercritical)."""
    reg = regime(params, tol)
    if reg is Regime.SUPERCRITICAL:
        return 0.0
    if reg is Regime.CRITICAL:
        return d.t_low
    _, R = uniform_alpha_R(params, tol)
    return float(d.upper_quantile(1.0 - R))


# -- the ESS ------------------------------------------------------------------

@dataclass(frozen=True)
class EssSolution:
    params: CompetitionParams
    a_M: float
    regime: Regime
    gamma: float
    x_c: float
    lam: float
    strategy: MixedStrategy
    disturbance: Disturbance
    residuals: Dict[str, float]

    @property
    def start(self) -> float:
        """Left end of the continuous part's support."""
        return float(self.strategy.xs[0])

    def summary(self) -> dict:
        return {
            "a": self.params.a,
            "p": self.params.p,
            "a_M": "inf" if self.a_M == UNBOUNDED else self.a_M,
            "regime": self.regime.value,
            "gamma": self.gamma,
            "x_c": self.x_c,
            "lambda": self.lam,
            "residuals": dict(self.residuals),
        }


def _ess_grid(d: Disturbance, start: float, n: int) -> np.ndarray:
    c0 = float(d.cdf(start))
    mass = c0 + (1.0 - c0) * np.linspace(0.0, 1.0, n)
    xs = np.asarray(d.quantile(mass), dtype=float)
    kn = d.xs[(d.xs > start) & (d.xs < d.t_high)]
    xs = np.unique(np.concatenate([[start, d.t_high], xs, kn]))
    return xs[(xs >= start) & (xs <= d.t_high)]


def _invert_cdf(a, p, gamma, lam, d, start, K_total, x, tol):
    """F_nu at ``x`` (array) plus the inversion target at the last point."""
    targets = (np.asarray(d.cdf(x), dtype=float) - float(d.cdf(start))) / lam
    targets = np.maximum(targets, 0.0)
    # Equal targets (flat cdf across density gaps) must give identical values.
    uniq, inv = np.unique(targets, return_inverse=True)
    s0 = a * gamma
    if p == 0.0:
        t = s0 + np.minimum(uniq, K_total)
    else:
        t = invert_kernel(s0, np.minimum(uniq, K_total), a, p, tol)
    F = np.clip((t / a - gamma) / (1.0 - gamma), 0.0, 1.0)[inv]
    return F, targets[-1]


def solve_ess(params: CompetitionParams, d: Disturbance, grid_points: int = 2001,
              tol: Tolerances = DEFAULT_TOL) -> EssSolution:
    """Tabulate the unique ESS for ``params`` under disturbance density ``d``.

    F_nu is found knot by knot by inverting
    K(e**(a*gamma), e**(a*gamma + a*(1-gamma)*F_nu(x))) = (cdf(x) - cdf(x_c)) / lambda.
    """
    if grid_points < 3:
        raise InvalidDomainError("grid_points must be >= 3")
    _require_solvable(params)
    a, p = params.a, params.p
    a_M = compute_a_M(p, tol)
    reg = classify_regime(a, a_M)
    gamma = compute_gamma(params, tol)
    C = _C(a, p, tol) if reg is not Regime.SUPERCRITICAL else float("nan")
    lam = _lambda_from(a, p, C, gamma, reg)
    x_c = compute_x_c(params, d, tol)
    start = max(x_c, d.t_low)

    s0 = a * gamma
    K_total = a - s0 if p == 0.0 else kernel_log(s0, a, p, tol)

    def tabulate(x):
        return _invert_cdf(a, p, gamma, lam, d, start, K_total, x, tol)

    xs = _ess_grid(d, start, grid_points)
    F, last_target = tabulate(xs)
    end_resid = K_total - last_target
    if abs(end_resid) > 100.0 * (tol.abs_tol + tol.rel_tol * K_total):
        raise InconsistentSolutionError(
            f"endpoint condition F_nu(t_high) = 1 violated: kernel residual {end_resid:.3e}")

    # Mass quantiles thin out where f is small; bisect knot intervals until
    # linear interpolation matches the midpoint value.
    refine_tol = min(1e-6, REFINE_PHI_TOL / (a * lam))
    for _ in range(REFINE_ROUNDS):
        mids = 0.5 * (xs[:-1] + xs[1:])
        Fm, _ = tabulate(mids)
        bad = np.abs(Fm - 0.5 * (F[:-1] + F[1:])) > refine_tol
        if not bad.any():
            break
        xs = np.concatenate([xs, mids[bad]])
        F = np.concatenate([F, Fm[bad]])
        order = np.argsort(xs, kind="stable")
        xs, F = xs[order], F[order]
    F = np.maximum.accumulate(F)
    F[0], F[-1] = 0.0, 1.0

    residuals = {"endpoint": float(abs(end_resid) / max(1.0, K_total))}
    if p > 0:
        residuals["a_M"] = float(abs(p * _C(a_M, p, tol) - 1.0))
    if reg is Regime.SUPERCRITICAL:
        residuals["gamma"] = float(abs(p * math.exp(-a * gamma) * K_total - 1.0))
    else:
        R = float(d.tail(x_c))
        residuals["x_c"] = float(abs(R - lam * C)) if reg is Regime.SUBCRITICAL else 0.0
        residuals["lambda"] = float(abs((1.0 - lam) / (1.0 - p) - lam * C))
    strat = MixedStrategy(gamma, xs, F)
    return EssSolution(params, a_M, reg, gamma, x_c, lam, strat, d, residuals)


def ess_cdf(sol: EssSolution, x, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """F_nu evaluated directly at arbitrary ``x`` by kernel inversion, without the tabulation."""
    a, p = sol.params.a, sol.params.p
    x = np.atleast_1d(np.asarray(x, dtype=float))
    K_total = a - a * sol.gamma if p == 0.0 else kernel_log(a * sol.gamma, a, p, tol)
    xc = np.clip(x, sol.start, sol.disturbance.t_high)
    F, _ = _invert_cdf(a, p, sol.gamma, sol.lam, sol.disturbance, sol.start, K_total, xc, tol)
    return np.where(x < sol.start, 0.0, F)


def ess_density(sol: EssSolution, x) -> np.ndarray:
    """Density g of the continuous part nu, from the closed form in terms of F_mu.

    g = f / (a (1-gamma) lambda) * exp(-a F_mu) * (exp(a (1-p) F_mu) - p).
    """
    a, p = sol.params.a, sol.params.p
    x = np.asarray(x, dtype=float)
    Fm = np.asarray(sol.strategy.F_mu(x), dtype=float)
    f = np.asarray(sol.disturbance.density(x), dtype=float)
    g = f / (a * (1.0 - sol.gamma) * sol.lam) * np.exp(-a * Fm) * (np.exp(a * (1.0 - p) * Fm) - p)
    return np.where((x >= sol.start) & (x <= sol.disturbance.t_high), g, 0.0)


# -- no-competition / no-mortality edges -----------------------------------------

class DegenerateKind(enum.Enum):
    EVERY_STRATEGY = "every"
    LATE_ONLY = "late"
    POINT_MASS_AT_ZERO = "delta0"


_DESCRIPTIONS = {
    DegenerateKind.EVERY_STRATEGY: "every μ",
    DegenerateKind.LATE_ONLY: "any strategy supported at or after t̄_f",
    DegenerateKind.POINT_MASS_AT_ZERO: "δ₀",
}


@dataclass(frozen=True)
class DegenerateCase:
    kind: DegenerateKind
    t_high: float

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self.kind]

    def __str__(self):
        return self.description

    def is_ess(self, s: MixedStrategy) -> bool:
        if self.kind is DegenerateKind.EVERY_STRATEGY:
            return True
        if self.kind is DegenerateKind.POINT_MASS_AT_ZERO:
            return s.atom == 1.0
        if s.atom > 0:
            return False
        return bool(s.xs[0] >= self.t_high)

    def example(self) -> Optional[MixedStrategy]:
        if self.kind is DegenerateKind.POINT_MASS_AT_ZERO:
            return MixedStrategy.point_mass_at_zero()
        return MixedStrategy.uniform(self.t_high, self.t_high + 1.0)


def degenerate_cases(a: float, p: float, d: Disturbance) -> DegenerateCase:
    """Classify the ESS when there is no competition (a = 0) or no mortality (p = 1)."""
    if a < 0 or not (0.0 <= p <= 1.0):
        raise InvalidDomainError(f"need a >= 0 and p in [0, 1], got a={a}, p={p}")
    if a == 0 and p == 1:
        kind = DegenerateKind.EVERY_STRATEGY
    elif a == 0:
        kind = DegenerateKind.LATE_ONLY
    elif p == 1:
        kind = DegenerateKind.POINT_MASS_AT_ZERO
    else:
        raise InvalidDomainError("a > 0 and p < 1 is not degenerate; use solve_ess")
    return DegenerateCase(kind, d.t_high)
