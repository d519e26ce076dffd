"""
Bracketed bisection for monotone scalar residuals.

Every solve in the package (the equalizing step, derivative inversions, and
the global-optimum oracle) reduces to finding the zero of a non-decreasing
residual on a closed bracket ``[lo, hi]`` with ``residual(lo) <= 0 <=
residual(hi)``. Plain bisection is used throughout: it never leaves the
bracket and its output is a deterministic function of the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketInvalid, ConfigInvalid, MaxIterExceeded

__all__ = [
    "DEFAULT_TOL_X",
    "DEFAULT_MAX_ITER",
    "Bracket",
    "bisect",
    "solve_equalized",
    "invert_derivative",
    "solve_global_optimum",
    "check_compatible",
]

DEFAULT_TOL_X = 1e-12
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class Bracket:
    """Closed search interval with an absolute width tolerance."""

    lo: float
    hi: float
    tol_x: float = DEFAULT_TOL_X
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConfigInvalid(f"bracket needs lo <= hi, got [{self.lo}, {self.hi}]")
        if not self.tol_x > 0:
            raise ConfigInvalid(f"tol_x must be positive, got {self.tol_x}")
        if self.max_iter < 1:
            raise ConfigInvalid(f"max_iter must be >= 1, got {self.max_iter}")

    @property
    def width(self):
        return self.hi - self.lo


def bisect(residual, bracket, history=None):
    """
    Zero of a non-decreasing ``residual`` inside ``bracket``.

    Parameters
    ----------
    residual : callable
        Scalar function, non-decreasing on the bracket. Only evaluated at
        points of ``[bracket.lo, bracket.hi]``.
    bracket : Bracket
        Search interval and stopping rule.
    history : list, optional
        If given, the ``(lo, hi)`` pair after every halving is appended.

    Returns
    -------
    float
        Midpoint of the final bracket, within ``bracket.tol_x / 2`` of the
        root, so a few ulps of residual rounding near the root still leave
        it within ``tol_x``.
        A degenerate bracket returns ``lo`` without evaluating; an exactly
        zero residual at an endpoint or midpoint returns that point.

    Raises
    ------
    BracketInvalid
        ``residual(lo) > 0`` or ``residual(hi) < 0``.
    MaxIterExceeded
        The width is still above ``tol_x`` after ``max_iter`` halvings.
    """
    lo, hi = bracket.lo, bracket.hi
    if lo == hi:
        return lo
    r_lo = residual(lo)
    r_hi = residual(hi)
    if not (r_lo <= 0.0 <= r_hi):
        raise BracketInvalid(
            f"residual does not straddle zero on [{lo!r}, {hi!r}]: "
            f"r(lo)={r_lo!r}, r(hi)={r_hi!r}"
        )
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    stop = bracket.tol_x
    n = 0
    while hi - lo > stop:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # adjacent floats: the bracket cannot shrink any further
            break
        if n == bracket.max_iter:
            raise MaxIterExceeded(
                f"width {hi - lo!r} > {stop!r} after {n} halvings on [{bracket.lo!r}, {bracket.hi!r}]"
            )
        r = residual(mid)
        if r == 0.0:
            return mid
        if r < 0.0:
            lo = mid
        else:
            hi = mid
        n += 1
        if history is not None:
            history.append((lo, hi))
    return 0.5 * (lo + hi)


def solve_equalized(fi, fj, xi, xj, tol_x=DEFAULT_TOL_X, max_iter=DEFAULT_MAX_ITER):
    """
    Common value ``z`` with ``fi'(z) + fj'(z) = fi'(xi) + fj'(xj)``.

    The root always lies between ``xi`` and ``xj``, which is the initial
    bracket. The result is bit-for-bit symmetric under swapping
    ``(fi, xi)`` with ``(fj, xj)``.
    """
    if xi == xj:
        return xi
    di, dj = fi._deriv, fj._deriv
    fi._check(xi)
    fj._check(xj)
    target = di(xi) + dj(xj)
    lo, hi = (xi, xj) if xi < xj else (xj, xi)
    for x in (lo, hi):
        fi._check(x)
        fj._check(x)
    return bisect(lambda z: (di(z) + dj(z)) - target, Bracket(lo, hi, tol_x, max_iter))


def invert_derivative(f, target, bracket):
    """
    Point ``x`` in ``bracket`` with ``f'(x) = target``.

    Requires ``f'(bracket.lo) <= target <= f'(bracket.hi)``; otherwise
    :class:`BracketInvalid` is raised.
    """
    f._check(bracket.lo)
    f._check(bracket.hi)
    d = f._deriv
    return bisect(lambda x: d(x) - target, bracket)


def check_compatible(specs):
    """Raise ConfigInvalid unless every minimizer lies inside every domain.

    Under this condition the convex hull of the minimizers, which contains
    all estimates for the whole run, is a subset of the common domain.
    """
    if not specs:
        raise ConfigInvalid("need at least one objective")
    for f in specs:
        x = f.minimizer()
        for g in specs:
            if not g.contains(x):
                raise ConfigInvalid(
                    f"minimizer {x!r} of {f.serialize()} is outside the domain of {g.serialize()}"
                )


def solve_global_optimum(specs, tol_x=1e-13, max_iter=DEFAULT_MAX_ITER):
    """
    Minimizer of the sum of ``specs``: the root of the summed derivative.

    The root is bracketed by the smallest and largest individual
    minimizers. This is the reference value the consensus engines are
    checked against; it uses every objective at once and is therefore not
    available to any single node.
    """
    specs = list(specs)
    check_compatible(specs)
    mins = [f.minimizer() for f in specs]
    derivs = [f._deriv for f in specs]
    return bisect(
        lambda x: math.fsum(d(x) for d in derivs),
        Bracket(min(mins), max(mins), tol_x, max_iter),
    )
