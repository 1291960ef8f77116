"""Effects of a changed disturbance on a population that has not adapted.

A resident strategy tuned to one disturbance density is evaluated under
another one; the helpers here compare fitness profiles, average fitness and
the sensitivity of the average fitness to the survival probability p.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List

import numpy as np

from .disturbance import Disturbance, DisturbanceKind, shift_disturbance
from .errors import InvalidDomainError
from .ess_solver import CompetitionParams, solve_ess
from .fitness import average_fitness, phi, probe_grid
from .numerics import DEFAULT_TOL, Tolerances
from .strategy import MixedStrategy

__all__ = [
    "PairedProfile", "compare_profiles", "nested_uniform_threshold", "average_fitness_delta",
    "average_fitness_change", "dp_average_fitness", "shift_disturbance",
]


@dataclass(frozen=True, eq=False)
class PairedProfile:
    ys: np.ndarray
    phi_1: np.ndarray
    phi_2: np.ndarray
    crossings: List[float]

    @property
    def diff(self) -> np.ndarray:
        return self.phi_2 - self.phi_1

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "phi_1", "phi_2", "diff"])
            for y, u, v in zip(self.ys, self.phi_1, self.phi_2):
                w.writerow([f"{y:.12g}", f"{u:.12g}", f"{v:.12g}", f"{v - u:.12g}"])


def _bisect_sign(fn, lo, hi, f_lo, iters=80):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(f_lo):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compare_profiles(s: MixedStrategy, params: CompetitionParams, d1: Disturbance,
                     d2: Disturbance, probe_count: int = 2001, zero_tol: float = 1e-13,
                     tol: Tolerances = DEFAULT_TOL) -> PairedProfile:
    """phi under ``d1`` and ``d2`` on a shared grid, with the dates where they cross."""
    ys = np.unique(np.concatenate([probe_grid(s, d1, probe_count), probe_grid(s, d2, probe_count)]))
    p1 = np.asarray(phi(ys, s, params, d1, tol))
    p2 = np.asarray(phi(ys, s, params, d2, tol))
    diff = p2 - p1
    sgn = np.where(np.abs(diff) <= zero_tol, 0, np.sign(diff))

    def fn(y):
        return phi(y, s, params, d2, tol) - phi(y, s, params, d1, tol)

    crossings = []
    nz = np.flatnonzero(sgn)
    for i, j in zip(nz[:-1], nz[1:]):
        if sgn[i] != sgn[j]:
            crossings.append(float(_bisect_sign(fn, ys[i], ys[j], diff[i])))
    return PairedProfile(ys, p1, p2, crossings)


def nested_uniform_threshold(d1: Disturbance, d2: Disturbance) -> float:
    """Date y1 after which the narrower uniform density d2 gives the higher phi.

    Needs uniform d1, d2 with t_low1 <= t_low2 and t_high1 >= t_high2, not equal.
    """
    if d1.kind is not DisturbanceKind.UNIFORM or d2.kind is not DisturbanceKind.UNIFORM:
        raise InvalidDomainError("both densities must be uniform")
    l1, h1, l2, h2 = d1.t_low, d1.t_high, d2.t_low, d2.t_high
    if not (l1 <= l2 and h1 >= h2):
        raise InvalidDomainError("d2 must be nested inside d1")
    den = l1 + h2 - l2 - h1
    if den == 0.0:
        raise InvalidDomainError("identical supports have no threshold")
    return (l1 * h2 - l2 * h1) / den


def average_fitness_change(params: CompetitionParams, d1: Disturbance, d2: Disturbance,
                           tol: Tolerances = DEFAULT_TOL, grid_points: int = 2001):
    """Average fitness of the ESS for ``d1`` under ``d1`` and under ``d2``."""
    mu = solve_ess(params, d1, grid_points, tol).strategy
    return average_fitness(mu, params, d1, tol), average_fitness(mu, params, d2, tol)


def average_fitness_delta(params: CompetitionParams, d1: Disturbance, d2: Disturbance,
                          tol: Tolerances = DEFAULT_TOL, grid_points: int = 2001) -> float:
    """Change in average fitness of the d1-adapted ESS when the disturbance becomes d2."""
    lb1, lb2 = average_fitness_change(params, d1, d2, tol, grid_points)
    return lb2 - lb1


def dp_average_fitness(s: MixedStrategy, a: float, p: float, d: Disturbance,
                       h: float = 1e-4, tol: Tolerances = DEFAULT_TOL) -> float:
    """Central difference of the average fitness in p at fixed strategy."""
    if not (0.0 < p - h and p + h < 1.0):
        raise InvalidDomainError(f"need 0 < p-h and p+h < 1, got p={p}, h={h}")
    up = average_fitness(s, CompetitionParams.edge(a, p + h), d, tol)
    dn = average_fitness(s, CompetitionParams.edge(a, p - h), d, tol)
    return (up - dn) / (2.0 * h)
