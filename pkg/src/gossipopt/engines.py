"""
Pairwise Equalizing (PE) and Pairwise Bisectioning (PB) gossip engines.

Both engines start every node at its own minimizer, so the sum of local
derivatives evaluated at the estimates is zero, and every gossip between a
pair ``{i, j}`` keeps ``f_i'(x_i) + f_j'(x_j)`` unchanged while pulling the
two estimates together. PE moves both to the common value that preserves
the sum. PB reaches the same neighbourhood through ``R`` rounds of a
distributed bisection, exchanging only derivative differences and
LEFT/RIGHT tokens, never the objectives themselves.

States are immutable; each step returns a new :class:`ConsensusState`.
Node ids are 1-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .errors import BracketInvalid, ConfigInvalid
from .rootfind import DEFAULT_TOL_X, Bracket, check_compatible, invert_derivative, solve_equalized

__all__ = [
    "DEFAULT_SKIP_GAP",
    "ConsensusState",
    "Message",
    "PbTranscript",
    "init_state",
    "pe_step",
    "pb_step",
    "select_rounds",
    "RoundsPolicy",
]

DEFAULT_SKIP_GAP = 1e-14


@dataclass(frozen=True)
class ConsensusState:
    """
    Snapshot of every node's estimate and what it has learned.

    Attributes
    ----------
    specs : tuple of ObjectiveSpec
        Local objectives; ``specs[i - 1]`` belongs to node ``i``.
    estimates : tuple of float
        Current estimates, one per node.
    knowledge : tuple of frozenset
        Node ids whose objective each node knows; always contains itself.
    k : int
        Number of iterations applied so far.
    tx_reals, tx_functions, tx_tokens : int
        Cumulative real-number, objective-descriptor and token transmissions.
    n_skipped : int
        Iterations skipped because the pair was already (numerically) equal.
    """

    specs: tuple
    estimates: tuple
    knowledge: tuple
    k: int = 0
    tx_reals: int = 0
    tx_functions: int = 0
    tx_tokens: int = 0
    n_skipped: int = 0

    @property
    def n_nodes(self):
        return len(self.estimates)

    def envelope(self):
        return (min(self.estimates), max(self.estimates))


def init_state(specs):
    """Every node starts at its own minimizer and knows only its own objective."""
    specs = tuple(specs)
    if len(specs) < 2:
        raise ConfigInvalid(f"need at least 2 nodes, got {len(specs)}")
    check_compatible(specs)
    return ConsensusState(
        specs=specs,
        estimates=tuple(f.minimizer() for f in specs),
        knowledge=tuple(frozenset({i}) for i in range(1, len(specs) + 1)),
    )


def _check_pair(state, pair):
    i, j = (int(v) for v in pair)
    n = state.n_nodes
    if i == j or not (1 <= i <= n and 1 <= j <= n):
        raise ConfigInvalid(f"pair {pair!r} is not two distinct nodes of 1..{n}")
    return i, j


def _skip(state):
    return replace(state, k=state.k + 1, n_skipped=state.n_skipped + 1)


def pe_step(state, pair, tol_x=DEFAULT_TOL_X, skip_gap=DEFAULT_SKIP_GAP):
    """
    One Pairwise Equalizing iteration on ``pair = (initiator, neighbour)``.

    Both estimates become the unique ``z`` between them with
    ``f_i'(z) + f_j'(z) = f_i'(x_i) + f_j'(x_j)``; all other nodes stay
    put. The node that computes ``z`` (``b``) is the one that already knows
    both objectives when exactly one does, otherwise the neighbour. If
    ``b`` lacks the other objective it is transmitted once and remembered.
    Two real numbers are exchanged (``x_a`` to ``b``, ``z`` back to ``a``).

    A pair whose gap is at most ``skip_gap`` is left untouched and counted
    in ``n_skipped``; pass ``skip_gap=None`` to always solve.
    """
    i, j = _check_pair(state, pair)
    xs = state.estimates
    xi, xj = xs[i - 1], xs[j - 1]
    if skip_gap is not None and abs(xi - xj) <= skip_gap:
        return _skip(state)

    know = state.knowledge
    i_full = j in know[i - 1]
    j_full = i in know[j - 1]
    a, b = (j, i) if (i_full and not j_full) else (i, j)

    z = solve_equalized(state.specs[i - 1], state.specs[j - 1], xi, xj, tol_x)

    new_x = list(xs)
    new_x[i - 1] = new_x[j - 1] = z
    tx_functions = state.tx_functions
    if a not in know[b - 1]:
        know = list(know)
        know[b - 1] = know[b - 1] | {a}
        know = tuple(know)
        tx_functions += 1
    return replace(
        state,
        estimates=tuple(new_x),
        knowledge=know,
        k=state.k + 1,
        tx_reals=state.tx_reals + 2,
        tx_functions=tx_functions,
    )


class Message(NamedTuple):
    """One entry of a PB transcript.

    ``kind`` is ``estimate``, ``derivative-delta`` or ``token`` for
    transmissions, and ``final-estimate`` for the local assignment each node
    makes at the end (logged with ``sender == receiver``, not transmitted).
    """

    sender: int
    receiver: int
    kind: str
    value: object


REAL_KINDS = ("estimate", "derivative-delta")


@dataclass
class PbTranscript:
    """Ordered message log of one PB iteration."""

    initiator: int
    responder: int
    rounds: int
    messages: list = field(default_factory=list)
    branch: str = None
    gap_before: float = 0.0
    gap_after: float = 0.0
    skipped: bool = False

    def send(self, sender, receiver, kind, value):
        self.messages.append(Message(sender, receiver, kind, value))

    @property
    def real_message_count(self):
        return sum(1 for m in self.messages if m.kind in REAL_KINDS)

    @property
    def token_count(self):
        return sum(1 for m in self.messages if m.kind == "token")

    def tokens(self):
        return [m.value for m in self.messages if m.kind == "token"]


def _clamped_inverse(f, target, lo, hi, tol_x):
    """(f')^-1(target) on [lo, hi], absorbing last-bit overshoot of the target.

    The branch logic guarantees ``f'(lo) <= target <= f'(hi)`` in exact
    arithmetic; rounding in the exchanged differences can push the target a
    few ulps past either end. Overshoots beyond that slack still raise.
    """
    d_lo, d_hi = f._deriv(lo), f._deriv(hi)
    slack = 64 * 2.0 ** -52 * (abs(d_lo) + abs(d_hi) + abs(target) + 1.0)
    if target <= d_lo:
        if d_lo - target <= slack:
            return lo
        raise BracketInvalid(f"target {target!r} below f'(lo)={d_lo!r} on [{lo!r}, {hi!r}]")
    if target >= d_hi:
        if target - d_hi <= slack:
            return hi
        raise BracketInvalid(f"target {target!r} above f'(hi)={d_hi!r} on [{lo!r}, {hi!r}]")
    return invert_derivative(f, target, Bracket(lo, hi, tol_x))


def pb_step(state, pair, rounds, tol_x=DEFAULT_TOL_X, skip_gap=DEFAULT_SKIP_GAP):
    """
    One Pairwise Bisectioning iteration; returns ``(new_state, transcript)``.

    ``pair = (i, j)``: node ``i`` initiates and performs the sign tests,
    node ``j`` answers with derivative differences. Message sequence:

    1. ``i -> j``: estimate ``x_i``; ``j -> i``: estimate ``x_j``. Both set
       the bracket ``[a, b] = [min, max]``.
    2. ``rounds`` times: ``j -> i`` the difference ``f_j'(mid) - f_j'(x_j)``;
       ``i`` adds ``f_i'(mid) - f_i'(x_i)`` and answers LEFT (``b <- mid``)
       when the sum is ``>= 0``, RIGHT (``a <- mid``) otherwise.
    3. ``j -> i``: ``f_j'(c_j) - f_j'(x_j)`` with ``c_j`` the bracket end
       nearest ``x_j``. If ``(that + f_i'(c_i) - f_i'(x_i)) (x_i - mid) >= 0``
       node ``i`` inverts its derivative to absorb ``j``'s move and ``j``
       jumps to ``c_j``; otherwise ``i -> j`` sends its own difference,
       jumps to ``c_i``, and ``j`` inverts.

    That is ``3 + rounds`` or ``4 + rounds`` real numbers and ``rounds``
    tokens. Objectives are never transmitted.
    """
    i, j = _check_pair(state, pair)
    if rounds < 1:
        raise ConfigInvalid(f"rounds must be a positive integer, got {rounds}")
    xs = state.estimates
    xi, xj = xs[i - 1], xs[j - 1]
    fi, fj = state.specs[i - 1], state.specs[j - 1]
    tr = PbTranscript(initiator=i, responder=j, rounds=rounds, gap_before=abs(xi - xj))
    if skip_gap is not None and abs(xi - xj) <= skip_gap:
        tr.skipped = True
        tr.rounds = 0
        tr.gap_after = tr.gap_before
        return _skip(state), tr

    di, dj = fi._deriv, fj._deriv
    fi._check(xi)
    fj._check(xj)
    dxi, dxj = di(xi), dj(xj)

    # exchange estimates; both nodes hold the same bracket from here on
    tr.send(i, j, "estimate", xi)
    a, b = min(xi, xj), max(xi, xj)
    tr.send(j, i, "estimate", xj)

    # bisection rounds
    for _ in range(rounds):
        mid = 0.5 * (a + b)
        delta_j = dj(mid) - dxj
        tr.send(j, i, "derivative-delta", delta_j)
        if delta_j + (di(mid) - dxi) >= 0:
            b = mid
            tr.send(i, j, "token", "LEFT")
        else:
            a = mid
            tr.send(i, j, "token", "RIGHT")

    # clamp one node to the bracket, let the other absorb the difference
    c_j = a if xj <= a else b
    c_i = a if xi <= a else b
    delta_j = dj(c_j) - dxj
    tr.send(j, i, "derivative-delta", delta_j)
    delta_i = di(c_i) - dxi
    if (delta_j + delta_i) * (xi - 0.5 * (a + b)) >= 0:
        tr.branch = "i-inverts"
        new_i = _clamped_inverse(fi, dxi - delta_j, a, b, tol_x)
        new_j = c_j
    else:
        tr.branch = "j-inverts"
        tr.send(i, j, "derivative-delta", delta_i)
        new_i = c_i
        new_j = _clamped_inverse(fj, dxj - delta_i, a, b, tol_x)
    tr.send(i, i, "final-estimate", new_i)
    tr.send(j, j, "final-estimate", new_j)
    tr.gap_after = abs(new_i - new_j)

    new_x = list(xs)
    new_x[i - 1] = new_i
    new_x[j - 1] = new_j
    new_state = replace(
        state,
        estimates=tuple(new_x),
        k=state.k + 1,
        tx_reals=state.tx_reals + tr.real_message_count,
        tx_tokens=state.tx_tokens + tr.token_count,
    )
    return new_state, tr


@dataclass(frozen=True)
class RoundsPolicy:
    """How many bisection rounds PB uses per iteration.

    ``RoundsPolicy.fixed(R)`` always uses ``R``. ``RoundsPolicy.adaptive(delta)``
    picks the fewest rounds that bring the pair's gap to at most ``delta``.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "fixed":
            if int(self.value) != self.value or self.value < 1:
                raise ConfigInvalid(f"fixed rounds must be a positive integer, got {self.value}")
            object.__setattr__(self, "value", int(self.value))
        elif self.kind == "adaptive":
            if not self.value > 0:
                raise ConfigInvalid(f"adaptive target gap must be positive, got {self.value}")
        else:
            raise ConfigInvalid(f"unknown rounds policy {self.kind!r}")

    @classmethod
    def fixed(cls, rounds):
        return cls("fixed", rounds)

    @classmethod
    def adaptive(cls, delta):
        return cls("adaptive", float(delta))

    @classmethod
    def parse(cls, text):
        """``'3'`` or ``'adaptive:0.01'``."""
        text = str(text).strip()
        if text.startswith("adaptive:"):
            try:
                return cls.adaptive(float(text.split(":", 1)[1]))
            except ValueError:
                raise ConfigInvalid(f"bad adaptive rounds policy {text!r}") from None
        try:
            return cls.fixed(int(text))
        except ValueError:
            raise ConfigInvalid(f"bad rounds policy {text!r}") from None

    def __str__(self):
        return str(self.value) if self.kind == "fixed" else f"adaptive:{self.value!r}"


def select_rounds(policy, gap):
    """Number of PB bisection rounds for a pair whose estimates differ by ``gap``."""
    if gap < 0:
        raise ValueError(f"gap must be non-negative, got {gap}")
    if policy.kind == "fixed":
        return policy.value
    if gap <= policy.value:
        return 1
    return max(1, math.ceil(math.log2(gap / policy.value)))
