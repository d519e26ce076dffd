"""
Local objective functions.

Each node privately holds a strictly convex, continuously differentiable
scalar function with a minimizer inside an open interval. Five parametric
families are provided; every instance is an immutable :class:`ObjectiveSpec`
that can be evaluated, differentiated, minimized, and shipped to another node
as a short text descriptor::

    quadratic:2.0,0.0
    log-barrier-quadratic:0.0,1.0@0.0,inf

Family parameters (in serialization order):

====================== ============ ====================================
family                 params       f(x)
====================== ============ ====================================
quadratic              y, c         (x - y)**2 / 2 + c
weighted-quadratic     w, y         w (x - y)**2 / 2,           w > 0
quartic-plus-quadratic a, b, y      a (x - y)**4 + b (x - y)**2, a, b > 0
exp-plus-linear        s, m         exp(s x) - s m x,           s, m > 0
log-barrier-quadratic  y, mu        (x - y)**2 / 2 - mu log(x - lo), mu > 0
====================== ============ ====================================

The log-barrier family takes its barrier location ``lo`` from the lower end
of the domain, which must therefore be finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigInvalid, DomainViolation

__all__ = [
    "FAMILIES",
    "ObjectiveSpec",
    "parse_spec",
    "quadratic",
    "weighted_quadratic",
    "quartic",
    "exp_linear",
    "log_barrier",
]

INF = math.inf

# below this |t| the Bregman kernels switch to a Taylor series
_SERIES_CUTOFF = 1e-2


def _exp_kernel(t):
    """exp(t) - 1 - t without cancellation."""
    if abs(t) < _SERIES_CUTOFF:
        # terms through t**8 / 8! keep relative error below 1e-17 here
        return t * t * (0.5 + t * (1 / 6 + t * (1 / 24 + t * (1 / 120 + t * (1 / 720 + t * (1 / 5040 + t / 40320))))))
    return math.expm1(t) - t


def _log_kernel(t):
    """t - log(1 + t) without cancellation, for t > -1."""
    if abs(t) < _SERIES_CUTOFF:
        return t * t * (0.5 + t * (-1 / 3 + t * (1 / 4 + t * (-1 / 5 + t * (1 / 6 + t * (-1 / 7 + t / 8))))))
    return t - math.log1p(t)


# Each family builds closures for (value, derivative, bregman, minimizer).
# bregman(x, z) = f(z) - f(x) - f'(x) (z - x), evaluated in a
# cancellation-free form.

def _quadratic(params, domain, strict):
    y, c = params

    def value(x):
        d = x - y
        return 0.5 * d * d + c

    def deriv(x):
        return x - y

    def bregman(x, z):
        d = z - x
        return 0.5 * d * d

    return value, deriv, bregman, y


def _weighted_quadratic(params, domain, strict):
    w, y = params
    if strict and not w > 0:
        raise ConfigInvalid(f"weighted-quadratic needs w > 0, got {w}")

    def value(x):
        d = x - y
        return 0.5 * w * d * d

    def deriv(x):
        return w * (x - y)

    def bregman(x, z):
        d = z - x
        return 0.5 * w * d * d

    return value, deriv, bregman, y


def _quartic(params, domain, strict):
    a, b, y = params
    if strict and not (a > 0 and b > 0):
        raise ConfigInvalid(f"quartic-plus-quadratic needs a > 0 and b > 0, got a={a}, b={b}")

    def value(x):
        u = x - y
        u2 = u * u
        return a * u2 * u2 + b * u2

    def deriv(x):
        u = x - y
        return 4.0 * a * u * u * u + 2.0 * b * u

    def bregman(x, z):
        u = x - y
        d = z - x
        return d * d * (a * (6.0 * u * u + 4.0 * u * d + d * d) + b)

    return value, deriv, bregman, y


def _exp_linear(params, domain, strict):
    s, m = params
    if not (s > 0 and m > 0):
        raise ConfigInvalid(f"exp-plus-linear needs s > 0 and m > 0, got s={s}, m={m}")
    sm = s * m

    def value(x):
        return math.exp(s * x) - sm * x

    def deriv(x):
        return s * math.exp(s * x) - sm

    def bregman(x, z):
        return math.exp(s * x) * _exp_kernel(s * (z - x))

    return value, deriv, bregman, math.log(m) / s


def _log_barrier(params, domain, strict):
    y, mu = params
    lo = domain[0]
    if strict and not mu > 0:
        raise ConfigInvalid(f"log-barrier-quadratic needs mu > 0, got {mu}")
    if not math.isfinite(lo):
        raise ConfigInvalid("log-barrier-quadratic needs a finite lower domain bound")

    def value(x):
        d = x - y
        return 0.5 * d * d - mu * math.log(x - lo)

    def deriv(x):
        return (x - y) - mu / (x - lo)

    def bregman(x, z):
        d = z - x
        return 0.5 * d * d + mu * _log_kernel(d / (x - lo))

    # positive root t of t**2 + (lo - y) t - mu = 0, with t = x - lo
    p = y - lo
    disc = math.sqrt(p * p + 4.0 * mu)
    t = 0.5 * (p + disc) if p >= 0 else 2.0 * mu / (disc - p)
    return value, deriv, bregman, lo + t


FAMILIES = {
    "quadratic": (_quadratic, 2),
    "weighted-quadratic": (_weighted_quadratic, 2),
    "quartic-plus-quadratic": (_quartic, 3),
    "exp-plus-linear": (_exp_linear, 2),
    "log-barrier-quadratic": (_log_barrier, 2),
}


@dataclass(frozen=True)
class ObjectiveSpec:
    """
    A strictly convex C1 scalar objective: family, parameters, open domain.

    Instances are immutable and compare field-for-field. The callables built
    from the parameters are cached on the instance and excluded from
    equality.

    Parameters
    ----------
    family : str
        One of the keys of :data:`FAMILIES`.
    params : tuple of float
        Family parameters, see the module docstring.
    domain : tuple of float, optional
        Open interval ``(lo, hi)``; endpoints may be infinite. Defaults to
        the whole real line.
    strict : bool, optional
        When False the curvature-sign checks on the parameters are skipped.
        Only meant for negative tests that need a non-convex instance; such
        objects break every guarantee in this package.
    """

    family: str
    params: tuple
    domain: tuple = (-INF, INF)
    strict: bool = field(default=True, compare=False, repr=False)
    _value: object = field(init=False, repr=False, compare=False)
    _deriv: object = field(init=False, repr=False, compare=False)
    _bregman: object = field(init=False, repr=False, compare=False)
    _xmin: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigInvalid(f"unknown objective family {self.family!r}")
        builder, n_params = FAMILIES[self.family]
        params = tuple(float(p) for p in self.params)
        if len(params) != n_params:
            raise ConfigInvalid(f"{self.family} takes {n_params} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise ConfigInvalid(f"non-finite parameter in {params}")
        lo, hi = (float(v) for v in self.domain)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise ConfigInvalid(f"domain must be an open interval lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "domain", (lo, hi))
        value, deriv, bregman, xmin = builder(params, (lo, hi), self.strict)
        if not lo < xmin < hi:
            raise ConfigInvalid(f"minimizer {xmin} of {self.family} lies outside the domain ({lo}, {hi})")
        object.__setattr__(self, "_value", value)
        object.__setattr__(self, "_deriv", deriv)
        object.__setattr__(self, "_bregman", bregman)
        object.__setattr__(self, "_xmin", xmin)

    def contains(self, x):
        """True iff ``x`` lies strictly inside the open domain."""
        lo, hi = self.domain
        return lo < x < hi

    def _check(self, x):
        if not self.contains(x):
            raise DomainViolation(f"{x!r} is not inside the open domain {self.domain} of {self.serialize()}")

    def eval(self, x):
        """Objective value f(x)."""
        self._check(x)
        return self._value(x)

    def deriv(self, x):
        """Derivative f'(x); strictly increasing in ``x``."""
        self._check(x)
        return self._deriv(x)

    def minimizer(self):
        """The unique minimizer, in closed form for every family."""
        return self._xmin

    def bregman(self, x, z):
        """
        First-order convexity surplus ``f(z) - f(x) - f'(x) (z - x)``.

        Computed in a cancellation-free form, so it stays accurate (and
        non-negative) when ``z`` is very close to ``x``.
        """
        self._check(x)
        self._check(z)
        return self._bregman(x, z)

    def serialize(self):
        """Canonical text form ``family:p1,p2,...`` with ``@lo,hi`` if the domain is not R."""
        text = self.family + ":" + ",".join(repr(p) for p in self.params)
        if self.domain != (-INF, INF):
            text += "@" + ",".join(repr(v) for v in self.domain)
        return text

    @classmethod
    def parse(cls, text):
        """Inverse of :meth:`serialize`; exact round trip for every instance."""
        return parse_spec(text)

    def __str__(self):
        return self.serialize()


def _parse_float(token, text):
    try:
        return float(token)
    except ValueError:
        raise ConfigInvalid(f"bad number {token!r} in objective descriptor {text!r}") from None


def parse_spec(text, strict=True):
    """Parse ``family:p1,p2,...[@lo,hi]`` into an :class:`ObjectiveSpec`."""
    text = text.strip()
    family, sep, rest = text.partition(":")
    if not sep:
        raise ConfigInvalid(f"objective descriptor {text!r} lacks 'family:'")
    body, at, dom = rest.partition("@")
    params = tuple(_parse_float(t, text) for t in body.split(",") if t.strip())
    if at:
        bounds = [_parse_float(t, text) for t in dom.split(",")]
        if len(bounds) != 2:
            raise ConfigInvalid(f"domain in {text!r} must be 'lo,hi'")
        domain = tuple(bounds)
    else:
        domain = (-INF, INF)
    return ObjectiveSpec(family.strip(), params, domain, strict)


def quadratic(y, c=0.0):
    return ObjectiveSpec("quadratic", (y, c))


def weighted_quadratic(w, y):
    return ObjectiveSpec("weighted-quadratic", (w, y))


def quartic(a, b, y=0.0):
    return ObjectiveSpec("quartic-plus-quadratic", (a, b, y))


def exp_linear(s, m):
    return ObjectiveSpec("exp-plus-linear", (s, m))


def log_barrier(y, mu, lo):
    return ObjectiveSpec("log-barrier-quadratic", (y, mu), (lo, INF))
