"""Independent checks that do not use the closed-form equilibrium.

* Finite-population Monte Carlo of a single breeding season: draw the
  disturbance time, draw N arrival dates, apply survival coin flips, and
  score individuals by exp(-a * alive_before / N).
* A discretised learning dynamic that pushes mass toward dates with higher
  fitness and averages the iterates, approximating the ESS from scratch.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import List, Tuple

import numpy as np

from . import _kernels
from .disturbance import Disturbance
from .errors import InvalidDomainError
from .ess_solver import CompetitionParams
from .fitness import phi
from .strategy import MixedStrategy

CI_LEVEL = 0.99


@dataclass(frozen=True)
class McConfig:
    """Population size, number of independent seasons and the master seed.

    ``atom_self_competition`` decides whether individuals sharing an arrival
    date count each other as earlier arrivals. The default (True) matches the
    right-continuous F_mu used by the analytic fitness, where the atom at 0
    competes with itself.
    """

    population: int = 100_000
    replications: int = 200
    seed: int = 0
    atom_self_competition: bool = True

    def __post_init__(self):
        if self.population < 100:
            raise InvalidDomainError("population must be >= 100")
        if self.replications < 1:
            raise InvalidDomainError("replications must be >= 1")

    def generators(self):
        # One child stream per replication: results do not depend on run order.
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(self.replications)]


def _mean_ci(samples: np.ndarray):
    mean = float(np.mean(samples))
    if samples.size < 2:
        return mean, math.inf
    z = NormalDist().inv_cdf(0.5 + CI_LEVEL / 2)
    return mean, float(z * np.std(samples, ddof=1) / math.sqrt(samples.size))


def _season(rng, s: MixedStrategy, d: Disturbance, n: int):
    x = float(d.quantile(rng.random()))
    times = s.sample_sorted_with(rng, n)
    surv = rng.random(n)
    return x, times, surv


def mc_phi(y, s: MixedStrategy, params: CompetitionParams, d: Disturbance, cfg: McConfig = McConfig()):
    """Monte Carlo estimate of phi at ``y`` (scalar or array): (mean, ci_half_width)."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    a, p = params.a, params.p
    side = "right" if cfg.atom_self_competition else "left"
    out = np.empty((cfg.replications, ys.size))
    for r, rng in enumerate(cfg.generators()):
        x, times, surv = _season(rng, s, d, cfg.population)
        n_pre = int(np.searchsorted(times, x, side="right"))
        s_pre = int(np.count_nonzero(surv[:n_pre] < p))
        before = np.searchsorted(times, ys, side=side)
        exposed = ys <= x
        alive = np.where(exposed, before, s_pre + before - n_pre)
        own = np.where(exposed, rng.random(ys.size) < p, True)
        out[r] = own * np.exp(-a * alive / cfg.population)
    stats = [_mean_ci(out[:, j]) for j in range(ys.size)]
    if np.ndim(y) == 0:
        return stats[0]
    return np.array([m for m, _ in stats]), np.array([c for _, c in stats])


def mc_average_fitness(s: MixedStrategy, params: CompetitionParams, d: Disturbance,
                       cfg: McConfig = McConfig()):
    """Monte Carlo estimate of the population-average fitness: (mean, ci_half_width)."""
    vals = np.empty(cfg.replications)
    for r, rng in enumerate(cfg.generators()):
        x, times, surv = _season(rng, s, d, cfg.population)
        vals[r] = _kernels.mc_mean_fitness(times, x, surv, params.p, params.a,
                                           cfg.atom_self_competition)
    return _mean_ci(vals)


# -- learning dynamic ---------------------------------------------------------------

@dataclass
class BestResponseResult:
    strategy: MixedStrategy
    grid: np.ndarray
    weights: np.ndarray
    residual: float
    history: List[Tuple[int, float, float]] = field(default_factory=list)

    def write_history(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "ks_to_previous", "residual"])
            for it, ks, res in self.history:
                w.writerow([it, f"{ks:.12g}", f"{res:.12g}"])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "F"])
            F = np.cumsum(self.weights)
            for x, f in zip(self.grid, F):
                w.writerow([f"{x:.12g}", f"{f:.12g}"])


def _cells_to_strategy(y: np.ndarray, w: np.ndarray) -> MixedStrategy:
    """Cell 0 is an atom at 0; cell j > 0 spreads its mass evenly over (y[j-1], y[j]]."""
    rest = np.cumsum(w[1:])
    if rest[-1] <= 0:
        return MixedStrategy.point_mass_at_zero()
    atom = float(min(1.0, max(0.0, w[0])))
    return MixedStrategy(atom, y, np.concatenate([[0.0], rest / rest[-1]]))


def best_response_iterate(params: CompetitionParams, d: Disturbance, grid: int = 400,
                          iterations: int = 3000, damping: float = 0.1, max_step: float = 0.1,
                          return_result: bool = False):
    """Approximate the ESS by exponential-weights learning on a date grid.

    Each step scales the mass of every date cell by
    exp(damping * (phi - mean phi) / (a * mean phi)), clipped to +-max_step,
    then renormalises. The interior dynamics cycle around the equilibrium, so
    the returned strategy is the average of the iterates over the second half
    of the run. ``residual`` is max phi - mean phi for that average; it is
    small only if the run has converged, and nothing is raised otherwise.
    """
    if grid < 50:
        raise InvalidDomainError("grid must be >= 50")
    if not (0.0 < damping <= 1.0):
        raise InvalidDomainError("damping must lie in (0, 1]")
    if iterations < 1:
        raise InvalidDomainError("iterations must be >= 1")
    y = np.linspace(0.0, d.t_high, grid)
    mids = np.concatenate([[0.0], 0.5 * (y[1:] + y[:-1])])
    w = np.full(grid, 1.0 / grid)
    scale = params.a if params.a > 0 else 1.0
    acc = np.zeros(grid)
    count = 0
    history = []
    for k in range(iterations):
        ph = phi(mids, _cells_to_strategy(y, w), params, d)
        bar = float(w @ ph)
        step = np.clip(damping * (ph - bar) / (scale * bar), -max_step, max_step)
        w_new = w * np.exp(step)
        w_new /= w_new.sum()
        history.append((k + 1, float(np.max(np.abs(np.cumsum(w_new) - np.cumsum(w)))),
                        float(ph.max() - bar)))
        w = w_new
        if k >= iterations // 2:
            acc += w
            count += 1
    w_avg = acc / count
    strat = _cells_to_strategy(y, w_avg)
    ph = phi(mids, strat, params, d)
    res = BestResponseResult(strat, y, w_avg, float(ph.max() - w_avg @ ph), history)
    return res if return_result else strat


def ks_distance(s1: MixedStrategy, s2: MixedStrategy) -> float:
    """Sup distance between two strategy CDFs; both are linear between their knots."""
    xs = np.unique(np.concatenate([[0.0], s1.xs, s2.xs]))
    return float(np.max(np.abs(np.asarray(s1.F_mu(xs)) - np.asarray(s2.F_mu(xs)))))
