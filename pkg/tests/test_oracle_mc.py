import math

import numpy as np
import pytest

from phenoess.disturbance import piecewise, uniform
from phenoess.errors import InvalidDomainError
from phenoess.ess_solver import CompetitionParams, solve_ess
from phenoess.fitness import max_average_fitness, phi
from phenoess.oracle_mc import McConfig, best_response_iterate, ks_distance, mc_average_fitness, mc_phi
from phenoess.strategy import MixedStrategy, late_arrival_family

U01 = uniform(0.0, 1.0)
TRI = piecewise([[0, 0], [0.5, 2], [1, 0]])
SMALL = McConfig(population=5000, replications=60, seed=11)


def test_config_validation():
    with pytest.raises(InvalidDomainError):
        McConfig(population=10)
    with pytest.raises(InvalidDomainError):
        McConfig(replications=0)


def test_seed_determinism():
    s = MixedStrategy(0.2, np.array([0.1, 0.9]), np.array([0.0, 1.0]))
    prm = CompetitionParams(2.0, 0.4)
    assert mc_average_fitness(s, prm, TRI, SMALL) == mc_average_fitness(s, prm, TRI, SMALL)
    m1, c1 = mc_phi(np.array([0.0, 0.5]), s, prm, TRI, SMALL)
    m2, c2 = mc_phi(np.array([0.0, 0.5]), s, prm, TRI, SMALL)
    assert np.array_equal(m1, m2) and np.array_equal(c1, c2)
    other = McConfig(population=5000, replications=60, seed=12)
    assert mc_average_fitness(s, prm, TRI, other) != mc_average_fitness(s, prm, TRI, SMALL)


def test_atom_at_zero():
    s = MixedStrategy.point_mass_at_zero()
    prm = CompetitionParams(1.5, 0.5)
    cfg = McConfig(population=1000, replications=400, seed=3)
    # whole population at 0 and all competing with each other
    m, ci = mc_phi(0.0, s, prm, U01, cfg)
    assert abs(m - 0.5 * math.exp(-1.5)) <= 3 * ci
    assert phi(0.0, s, prm, U01) == pytest.approx(0.5 * math.exp(-1.5))
    # strictly-earlier counting: nobody precedes the atom, so phi(0) = p
    alt = McConfig(population=1000, replications=400, seed=3, atom_self_competition=False)
    m, ci = mc_phi(0.0, s, prm, U01, alt)
    assert abs(m - 0.5) <= 3 * ci


@pytest.mark.parametrize("a,p,d", [(0.2, 0.2, U01), (5.0, 0.2, U01), (2.0, 0.5, TRI)])
def test_ess_phi_on_support(a, p, d):
    prm = CompetitionParams(a, p)
    sol = solve_ess(prm, d)
    ys = np.array([sol.start, 0.5 * (sol.start + d.t_high), d.t_high])
    m, ci = mc_phi(ys, sol.strategy, prm, d, McConfig(population=20000, replications=300, seed=5))
    assert np.all(np.abs(m - sol.lam) <= 3 * ci)


def test_small_a_path():
    prm = CompetitionParams(1e-9, 0.3)
    ys = np.array([0.2, 0.5, 0.8])
    m, ci = mc_phi(ys, MixedStrategy.uniform(0, 1), prm, TRI,
                   McConfig(population=1000, replications=400, seed=8))
    assert np.all(np.abs(m - (1 - 0.7 * TRI.tail(ys))) <= 3 * ci)


def test_late_family_attains_bound():
    prm = CompetitionParams(3.0, 0.3)
    s = MixedStrategy.uniform(1.0, 1.0 + 1.0 / 16)
    m, ci = mc_average_fitness(s, prm, U01, SMALL)
    assert abs(m - max_average_fitness(3.0)) <= 3 * ci + 1e-3
    inside = late_arrival_family(16, 1.0)
    m2, _ = mc_average_fitness(inside, prm, U01, SMALL)
    assert m2 < m


def test_everyone_killed_when_p_zero():
    d = uniform(0.5, 0.9)
    m, ci = mc_average_fitness(MixedStrategy.uniform(0.0, 0.4), CompetitionParams(2.0, 0.0), d, SMALL)
    assert m == 0.0 and ci == 0.0


def test_ci_calibration():
    prm = CompetitionParams(0.4, 0.3)
    sol = solve_ess(prm, U01)
    hits = 0
    for seed in range(100):
        m, ci = mc_average_fitness(sol.strategy, prm, U01,
                                   McConfig(population=2000, replications=40, seed=1000 + seed))
        hits += abs(m - sol.lam) <= ci
    assert hits >= 95


def test_ci_scaling():
    s = MixedStrategy.uniform(0.0, 1.0)
    prm = CompetitionParams(1.0, 0.3)
    ratios = []
    for seed in range(5):
        _, c1 = mc_average_fitness(s, prm, U01, McConfig(population=2000, replications=400, seed=seed))
        _, c2 = mc_average_fitness(s, prm, U01, McConfig(population=2000, replications=800, seed=seed))
        ratios.append(c2 / c1)
    assert np.mean(ratios) == pytest.approx(1 / math.sqrt(2), rel=0.2)


# -- best response ---------------------------------------------------------------------

def test_best_response_subcritical():
    prm = CompetitionParams(0.2, 0.2)
    br = best_response_iterate(prm, U01)
    assert ks_distance(br, solve_ess(prm, U01).strategy) <= 0.02


def test_best_response_atom():
    prm = CompetitionParams(5.0, 0.2)
    res = best_response_iterate(prm, U01, return_result=True)
    assert abs(res.strategy.atom - 0.10142) <= 0.02
    assert ks_distance(res.strategy, solve_ess(prm, U01).strategy) <= 0.03


def test_best_response_no_mortality():
    br = best_response_iterate(CompetitionParams.edge(2.0, 1.0), U01, grid=60, iterations=600)
    assert br.atom > 0.9


def test_best_response_outputs(tmp_path):
    res = best_response_iterate(CompetitionParams(1.0, 0.3), U01, grid=50, iterations=20,
                                return_result=True)
    assert len(res.history) == 20 and res.residual >= 0
    res.write_history(tmp_path / "h.csv")
    res.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "h.csv").read_text().startswith("iteration,ks_to_previous,residual\n")
    assert (tmp_path / "b.csv").read_text().startswith("x,F\n")
    for kw in ({"grid": 10}, {"damping": 0.0}, {"iterations": 0}):
        with pytest.raises(InvalidDomainError):
            best_response_iterate(CompetitionParams(1.0, 0.3), U01, **kw)


def test_ks_distance():
    a = MixedStrategy.uniform(0, 1)
    assert ks_distance(a, a) == 0.0
    assert ks_distance(a, MixedStrategy.point_mass_at_zero()) == pytest.approx(1.0)
    assert ks_distance(a, MixedStrategy.uniform(0.5, 1.5)) == pytest.approx(0.5)
