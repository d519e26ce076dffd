import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossipopt.errors import BracketInvalid, ConfigInvalid, DomainViolation, MaxIterExceeded
from gossipopt.objective import exp_linear, log_barrier, quadratic, quartic, weighted_quadratic
from gossipopt.rootfind import (
    Bracket,
    bisect,
    check_compatible,
    invert_derivative,
    solve_equalized,
    solve_global_optimum,
)

from conftest import MIXES


def test_bisect_linear_root():
    x = bisect(lambda x: x - 0.3, Bracket(0.0, 1.0, 1e-12))
    assert abs(x - 0.3) <= 1e-12


def test_bisect_history_halves_every_step():
    hist = []
    bisect(lambda x: x - 0.3, Bracket(0.0, 1.0, 1e-6), hist)
    widths = [hi - lo for lo, hi in hist]
    assert widths[0] == 0.5
    assert all(b == a / 2 for a, b in zip(widths, widths[1:]))
    assert widths[-1] <= 1e-6


def test_bisect_degenerate_bracket_does_not_evaluate():
    def boom(x):
        raise AssertionError("evaluated")
    assert bisect(boom, Bracket(2.0, 2.0)) == 2.0


def test_bisect_endpoint_zero_returned_exactly():
    assert bisect(lambda x: x, Bracket(0.0, 1.0)) == 0.0
    assert bisect(lambda x: x - 1.0, Bracket(0.0, 1.0)) == 1.0


def test_bisect_rejects_non_straddling():
    with pytest.raises(BracketInvalid):
        bisect(lambda x: x + 1.0, Bracket(0.0, 1.0))
    with pytest.raises(BracketInvalid):
        bisect(lambda x: x - 2.0, Bracket(0.0, 1.0))


def test_bisect_max_iter():
    with pytest.raises(MaxIterExceeded):
        bisect(lambda x: x - 0.3, Bracket(0.0, 1.0, 1e-12, max_iter=10))


def test_bisect_tiny_tolerance_stops_at_adjacent_floats():
    x = bisect(lambda x: x - 1.0 / 3.0, Bracket(0.0, 1.0, 1e-300, max_iter=2000))
    assert abs(x - 1.0 / 3.0) <= 2 * math.ulp(1.0 / 3.0)


@pytest.mark.parametrize("lo,hi,tol,it", [(1.0, 0.0, 1e-12, 10), (0.0, 1.0, 0.0, 10), (0.0, 1.0, 1e-12, 0)])
def test_bracket_validation(lo, hi, tol, it):
    with pytest.raises(ConfigInvalid):
        Bracket(lo, hi, tol, it)


def test_equalized_quadratics_is_average():
    assert solve_equalized(quadratic(0), quadratic(4), 0.0, 4.0) == pytest.approx(2.0, abs=1e-12)


def test_equalized_exp_quadratic_matches_high_precision():
    # fi = exp(x) - 3x at xi = 0, fj = x^2 / 2 at xj = 2
    mpmath.mp.dps = 40
    target = mpmath.mpf(-2) + 2
    z_ref = mpmath.findroot(lambda z: mpmath.exp(z) - 3 + z - target, 0.8)
    z = solve_equalized(exp_linear(1, 3), quadratic(0), 0.0, 2.0)
    assert abs(z - float(z_ref)) <= 1e-12
    assert abs(float(z_ref) - 0.79205996843067700) < 1e-16


def test_equalized_equal_inputs_shortcut():
    assert solve_equalized(quadratic(0), quartic(1, 1, 3), 1.25, 1.25) == 1.25


def test_equalized_domain_checked():
    with pytest.raises(DomainViolation):
        solve_equalized(log_barrier(0, 1, 0), quadratic(0), -1.0, 2.0)


points = st.floats(-3, 3, allow_nan=False)
spec_pool = [f for mix in MIXES.values() for f in mix]


@given(st.sampled_from(spec_pool), st.sampled_from(spec_pool), points, points)
@settings(max_examples=300)
def test_equalized_symmetric_in_range_and_conserving(fi, fj, xi, xj):
    z = solve_equalized(fi, fj, xi, xj)
    assert z == solve_equalized(fj, fi, xj, xi)
    assert min(xi, xj) <= z <= max(xi, xj)
    lhs = fi.deriv(z) + fj.deriv(z)
    rhs = fi.deriv(xi) + fj.deriv(xj)
    # slope of the residual times the bracket tolerance
    slope = max(abs(fi.deriv(z + 1e-6) + fj.deriv(z + 1e-6) - lhs) / 1e-6, 1.0)
    assert abs(lhs - rhs) <= 2e-12 * slope + 1e-12 * max(1.0, abs(rhs))


def test_invert_derivative():
    f = weighted_quadratic(2.0, 1.0)
    assert invert_derivative(f, 4.0, Bracket(0.0, 5.0)) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(BracketInvalid):
        invert_derivative(f, 100.0, Bracket(0.0, 5.0))


def test_check_compatible():
    check_compatible([quadratic(1.0), log_barrier(1.0, 1.0, 0.0)])
    with pytest.raises(ConfigInvalid):
        check_compatible([quadratic(-1.0), log_barrier(1.0, 1.0, 0.0)])
    with pytest.raises(ConfigInvalid):
        check_compatible([])


def test_global_optimum_quadratics_is_weighted_mean():
    specs = MIXES["quadratic"]
    w = [f.params[0] for f in specs]
    y = [f.params[1] for f in specs]
    expected = math.fsum(a * b for a, b in zip(w, y)) / math.fsum(w)
    assert solve_global_optimum(specs) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("name", ["mixed", "curved"])
def test_global_optimum_matches_high_precision(name):
    specs = MIXES[name]
    mpmath.mp.dps = 50

    def total(x):
        s = mpmath.mpf(0)
        for f in specs:
            p = [mpmath.mpf(v) for v in f.params]
            if f.family == "quadratic":
                s += x - p[0]
            elif f.family == "weighted-quadratic":
                s += p[0] * (x - p[1])
            elif f.family == "quartic-plus-quadratic":
                s += 4 * p[0] * (x - p[2]) ** 3 + 2 * p[1] * (x - p[2])
            elif f.family == "exp-plus-linear":
                s += p[0] * mpmath.exp(p[0] * x) - p[0] * p[1]
            else:
                s += (x - p[0]) - p[1] / (x - mpmath.mpf(f.domain[0]))
        return s

    x_ref = mpmath.findroot(total, solve_global_optimum(specs))
    assert abs(solve_global_optimum(specs) - float(x_ref)) <= 1e-12
