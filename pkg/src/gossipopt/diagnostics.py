"""
Convergence diagnostics computed from state snapshots.

Nothing here is used by the engines: every quantity needs the global
optimum ``x_star`` or all objectives at once, which no node has. The run
harness pulls these after each step.

The Lyapunov function is the sum over nodes of the convexity surplus of
``f_i`` between the node's estimate and the optimum,

    V(x) = sum_i  f_i(x*) - f_i(x_i) - f_i'(x_i) (x* - x_i),

which is zero exactly at consensus on ``x*`` and never increases under
either engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainViolation, NumericalFailure
from .rootfind import DEFAULT_TOL_X, Bracket, bisect, solve_equalized

__all__ = [
    "DiagnosticsRow",
    "lyapunov",
    "predicted_drop_pe",
    "conservation_residual",
    "max_slope",
    "drift_budget",
    "beta_bound_check",
    "constructive_beta",
    "approach_monotonicity_probe",
    "NOT_REPRESENTABLE",
]


def lyapunov(estimates, specs, x_star):
    """Sum of the convexity surplus of each objective from its estimate to ``x_star``."""
    return math.fsum(f.bregman(x, x_star) for f, x in zip(specs, estimates))


def predicted_drop_pe(before, pair, after, specs):
    """
    Change in V predicted from the two gossiping nodes alone.

    Returns ``-sum over the pair of [f(new) - f(old) - f'(old)(new - old)]``.
    When the pair's derivative sum is conserved this equals
    ``V(after) - V(before)``, without reference to ``x_star``.
    """
    total = []
    for node in pair:
        f = specs[node - 1]
        total.append(f.bregman(before[node - 1], after[node - 1]))
    return -math.fsum(total)


def conservation_residual(estimates, specs):
    """Sum of local derivatives at the estimates; zero on the invariant manifold."""
    return math.fsum(f.deriv(x) for f, x in zip(specs, estimates))


def max_slope(specs, lo, hi, n_grid=257):
    """Largest difference quotient of any ``f'`` on a uniform grid over ``[lo, hi]``."""
    if hi <= lo:
        xs = [lo]
    else:
        xs = np.linspace(lo, hi, n_grid).tolist()
    best = 0.0
    for f in specs:
        d = [f.deriv(x) for x in xs]
        for m in range(len(xs) - 1):
            best = max(best, (d[m + 1] - d[m]) / (xs[m + 1] - xs[m]))
    return best


def drift_budget(specs, lo, hi, tol_x=DEFAULT_TOL_X):
    """Per-iteration bound on the growth of the conservation residual.

    One equalizing or inverting solve is within ``tol_x`` of its exact root,
    moving two derivatives by at most ``L_max * tol_x`` each.
    """
    return 2.0 * max_slope(specs, lo, hi) * tol_x


def constructive_beta(specs, b):
    """``1 + 2 max_j |f_j'(b)|``, the constant bounding the convexity surplus by a multiple of ``|y - x|``."""
    return 1.0 + 2.0 * max(abs(f.deriv(b)) for f in specs)


def beta_bound_check(specs, interval, n_samples=10_000, seed=0):
    """
    Sample the bound ``f_i(y) - f_i(x) - f_i'(x)(y - x) <= beta |y - x|``.

    Parameters
    ----------
    specs : sequence of ObjectiveSpec
        Objectives sharing ``interval``.
    interval : tuple of float
        Closed interval ``[a, b]`` inside every domain.
    n_samples : int
        Number of ``(x, y)`` pairs drawn uniformly from ``[a, b]**2``; every
        objective is checked on every pair.
    seed : int
        Seed for :func:`numpy.random.default_rng`.

    Returns
    -------
    beta : float
        ``1 + 2 max_j |f_j'(b)|``.
    holds : bool
        Whether all ``n_samples * len(specs)`` inequalities pass.
    """
    a, b = interval
    for f in specs:
        if not (f.contains(a) and f.contains(b)):
            raise DomainViolation(f"[{a}, {b}] is not inside the domain of {f.serialize()}")
    beta = constructive_beta(specs, b)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(a, b, size=(n_samples, 2))
    # include both ends and the diagonal
    pts[:3] = [[a, b], [b, a], [a, a]]
    holds = True
    for x, y in pts.tolist():
        bound = beta * abs(y - x)
        for f in specs:
            if f.bregman(x, y) > bound:
                holds = False
                break
        if not holds:
            break
    return beta, holds


NOT_REPRESENTABLE = None


def _pair_at_gap(fl, fh, xl, xh, target, gap, tol_x):
    # p in [xl, xh - gap] with fl'(p) + fh'(p + gap) = target; increasing in p
    dl, dh = fl._deriv, fh._deriv
    hi = xh - gap
    if hi < xl:
        hi = xl
    p = bisect(lambda p: (dl(p) + dh(p + gap)) - target, Bracket(xl, hi, tol_x))
    return p, p + gap


def approach_monotonicity_probe(fi, fj, xi, xj, gaps, x_ref=None, tol_x=DEFAULT_TOL_X):
    """
    Pair's Lyapunov contribution along conservation-preserving approaches.

    For each target gap ``g`` the order-preserving pair ``(p, p + g)`` with
    the same derivative sum as ``(xi, xj)`` is found, and
    ``sum f(x_ref) - f(x) - f'(x)(x_ref - x)`` over the pair is returned.
    Differences of this quantity between grid points equal the
    corresponding differences of the full V, whatever ``x_ref`` is, so the
    sequence must be strictly increasing in the gap.

    Parameters
    ----------
    fi, fj : ObjectiveSpec
    xi, xj : float
        Pre-gossip estimates.
    gaps : sequence of float
        Descending gaps in ``[0, |xj - xi|]``.
    x_ref : float, optional
        Reference point; defaults to the pair's equalized value, which
        makes the gap-0 entry zero.

    Returns
    -------
    list of (gap, value)
        ``value`` is ``NOT_REPRESENTABLE`` (None) when the pair cannot be
        placed at that gap numerically.
    """
    gap0 = abs(xj - xi)
    gaps = [float(g) for g in gaps]
    if any(g < 0 or g > gap0 for g in gaps):
        raise ValueError(f"gaps must lie in [0, {gap0}]")
    if any(b > a for a, b in zip(gaps, gaps[1:])):
        raise ValueError("gaps must be in descending order")
    if xi <= xj:
        fl, fh, xl, xh = fi, fj, xi, xj
    else:
        fl, fh, xl, xh = fj, fi, xj, xi
    target = fl.deriv(xl) + fh.deriv(xh)
    if x_ref is None:
        x_ref = solve_equalized(fi, fj, xi, xj, tol_x)
    out = []
    for g in gaps:
        if g == gap0:
            lo_x, hi_x = xl, xh
        elif g == 0.0:
            lo_x = hi_x = solve_equalized(fl, fh, xl, xh, tol_x)
        else:
            try:
                lo_x, hi_x = _pair_at_gap(fl, fh, xl, xh, target, g, tol_x)
            except (NumericalFailure, DomainViolation):
                out.append((g, NOT_REPRESENTABLE))
                continue
        out.append((g, fl.bregman(lo_x, x_ref) + fh.bregman(hi_x, x_ref)))
    return out


@dataclass
class DiagnosticsRow:
    """
    One trace line: diagnostics after iteration ``k``.

    ``dV_predicted`` is only filled for PE steps. ``estimates`` is only
    filled for small networks. Transmission counters are cumulative.
    """

    k: int
    pair: list
    V: float
    dV_observed: float
    dV_predicted: float
    residual: float
    envelope: list
    gap_before: float
    gap_after: float
    skipped: bool = False
    rounds: int = None
    tx_reals: int = 0
    tx_functions: int = 0
    tx_tokens: int = 0
    estimates: list = None

    FIELDS = (
        "k", "pair", "V", "dV_observed", "dV_predicted", "residual", "envelope",
        "gap_before", "gap_after", "skipped", "rounds", "tx_reals", "tx_functions",
        "tx_tokens", "estimates",
    )

    def to_json(self):
        return json.dumps(asdict(self), separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, line):
        data = json.loads(line)
        unknown = set(data) - set(cls.FIELDS)
        if unknown:
            raise ValueError(f"unknown trace fields {sorted(unknown)}")
        return cls(**data)
