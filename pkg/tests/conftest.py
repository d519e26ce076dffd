import pytest

from gossipopt.objective import exp_linear, log_barrier, quadratic, quartic, weighted_quadratic

# One representative instance per family, all minimizers inside (-5, inf).
FAMILY_SAMPLES = {
    "quadratic": quadratic(1.5, -0.25),
    "weighted-quadratic": weighted_quadratic(2.5, -1.0),
    "quartic-plus-quadratic": quartic(0.7, 0.4, 0.5),
    "exp-plus-linear": exp_linear(0.8, 2.0),
    "log-barrier-quadratic": log_barrier(0.5, 1.5, -5.0),
}

# Ten-node family mixes used by the engine, diagnostics and acceptance tests.
MIXES = {
    "quadratic": tuple(
        weighted_quadratic(w, y)
        for w, y in [(1, -3), (2, -1.5), (0.5, 0), (1.5, 1), (3, 2.5), (1, 3), (0.8, -2), (2.5, 0.5), (1.2, -0.5), (0.6, 1.8)]
    ),
    "mixed": (
        quadratic(-2.0), weighted_quadratic(2.0, 1.0), quartic(0.5, 1.0, -1.0), quartic(0.1, 0.5, 2.0),
        exp_linear(1.0, 3.0), exp_linear(0.5, 2.0), log_barrier(0.5, 1.0, -5.0), log_barrier(-1.5, 0.5, -5.0),
        quadratic(2.5, 1.0), weighted_quadratic(0.5, -0.5),
    ),
    "curved": (
        quartic(1.0, 0.2, -1.5), quartic(0.2, 1.0, 1.0), quartic(2.0, 0.1, 0.3), exp_linear(2.0, 1.5),
        exp_linear(1.0, 0.5), exp_linear(0.5, 4.0), log_barrier(-2.0, 2.0, -4.0), log_barrier(1.0, 0.25, -4.0),
        log_barrier(0.0, 1.0, -4.0), quartic(0.5, 0.5, -0.5),
    ),
}


def envelope(specs):
    mins = [f.minimizer() for f in specs]
    return min(mins), max(mins)


@pytest.fixture(params=sorted(FAMILY_SAMPLES))
def family_spec(request):
    return FAMILY_SAMPLES[request.param]


@pytest.fixture(params=sorted(MIXES))
def mix(request):
    return MIXES[request.param]
