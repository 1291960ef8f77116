"""Parameter sweeps over (a, p) and the monotonicity/bounds audit of their results."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Sequence

from .disturbance import Disturbance
from .ess_solver import (CompetitionParams, UNBOUNDED, classify_regime, compute_a_M, compute_gamma,
                         compute_lambda, compute_x_c)
from .numerics import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class SweepRow:
    a: float
    p: float
    a_M: float
    gamma: float
    x_c: float
    lam: float
    regime: str

    def as_dict(self):
        return asdict(self)


def sweep_point(a: float, p: float, d: Disturbance, tol: Tolerances = DEFAULT_TOL) -> SweepRow:
    params = CompetitionParams(a, p)
    a_M = compute_a_M(p, tol)
    return SweepRow(a, p, a_M, compute_gamma(params, tol), compute_x_c(params, d, tol),
                    compute_lambda(params, tol), classify_regime(a, a_M).value)


def _point(args):
    return sweep_point(*args)


def sweep(a_values: Sequence[float], p_values: Sequence[float], d: Disturbance,
          tol: Tolerances = DEFAULT_TOL, jobs: int = 1) -> List[SweepRow]:
    """Evaluate every (a, p) pair; rows come back sorted by (a, p) whatever ``jobs`` is."""
    tasks = [(float(a), float(p), d, tol) for a in a_values for p in p_values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_point, tasks, chunksize=8))
    else:
        rows = [_point(t) for t in tasks]
    return sorted(rows, key=lambda r: (r.a, r.p))


def monotonicity_violations(rows: Sequence[SweepRow], tol: float = 1e-8) -> List[str]:
    """List every breach of the known orderings and bounds beyond ``tol``.

    Along a at fixed p: lambda decreases, x_c does not increase, gamma does
    not decrease. Along p at
    fixed a: lambda decreases, gamma does not decrease, x_c does not increase,
    a_M strictly decreases. Rowwise: exp(-a) <= lambda <= 1/(1+a),
    gamma < p and gamma < 1 - a_M/a when p > 0.
    """
    out = []
    by_p, by_a = {}, {}
    for r in rows:
        by_p.setdefault(r.p, []).append(r)
        by_a.setdefault(r.a, []).append(r)
        if not (math.exp(-r.a) - tol <= r.lam <= 1.0 / (1.0 + r.a) + tol):
            out.append(f"lambda bounds at a={r.a}, p={r.p}: {r.lam}")
        if r.p > 0 and r.gamma >= r.p + tol:
            out.append(f"gamma >= p at a={r.a}, p={r.p}")
        if r.gamma > 0 and r.a_M != UNBOUNDED and r.gamma >= 1.0 - r.a_M / r.a + tol:
            out.append(f"gamma >= 1 - a_M/a at a={r.a}, p={r.p}")
    for p, rs in by_p.items():
        rs = sorted(rs, key=lambda r: r.a)
        for u, v in zip(rs, rs[1:]):
            if v.lam > u.lam + tol:
                out.append(f"lambda not decreasing in a at p={p}: a={u.a}->{v.a}")
            if v.x_c > u.x_c + tol:
                out.append(f"x_c increasing in a at p={p}: a={u.a}->{v.a}")
            if v.gamma < u.gamma - tol:
                out.append(f"gamma decreasing in a at p={p}: a={u.a}->{v.a}")
    for a, rs in by_a.items():
        rs = sorted(rs, key=lambda r: r.p)
        for u, v in zip(rs, rs[1:]):
            if v.lam > u.lam + tol:
                out.append(f"lambda not decreasing in p at a={a}: p={u.p}->{v.p}")
            if v.gamma < u.gamma - tol:
                out.append(f"gamma decreasing in p at a={a}: p={u.p}->{v.p}")
            if v.x_c > u.x_c + tol:
                out.append(f"x_c increasing in p at a={a}: p={u.p}->{v.p}")
            if not v.a_M < u.a_M:
                out.append(f"a_M not decreasing in p: p={u.p}->{v.p}")
    return out
