"""
Time-varying undirected topologies and gossip-pair schedulers.

Node identifiers are 1-based (``1..N``). An edge is a sorted pair ``(i, j)``
with ``i < j``. ``TopologySpec.edges_at(k)`` returns the link set at
iteration ``k >= 1`` as a sorted tuple of edges, which fixes the order every
scheduler indexes into.

Random draws come from SplitMix64 (Steele, Lea and Flood 2014), implemented
with Python integers so that sequences are identical on every platform:

    state  <- (state + 0x9E3779B97F4A7C15) mod 2**64
    z      <- state
    z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    output <- z ^ (z >> 31)

The draw for iteration ``k`` uses a fresh generator whose state is
``mix(seed + k * 0x9E3779B97F4A7C15 mod 2**64)`` (``mix`` being the three
output lines above), so the pair chosen at ``k`` depends only on the seed
and ``k``. A bounded integer in ``[0, n)`` is taken by rejection: draw until
the 64-bit output is below ``2**64 - (2**64 mod n)``, then reduce mod ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigInvalid, ScheduleExhausted

__all__ = [
    "SplitMix64",
    "TopologySpec",
    "SchedulerSpec",
    "Scheduler",
    "window_connected",
    "canonical_edge",
]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Portable 64-bit generator with integer-only state."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GAMMA) & _MASK
        return _mix(self.state)

    def below(self, n):
        """Uniform integer in ``[0, n)`` without modulo bias."""
        if n < 1:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    @classmethod
    def for_step(cls, seed, k):
        """Generator dedicated to iteration ``k`` of a run seeded with ``seed``."""
        return cls(_mix((int(seed) + int(k) * _GAMMA) & _MASK))


def canonical_edge(pair):
    i, j = (int(v) for v in pair)
    return (i, j) if i < j else (j, i)


def _edge_tuple(edges, n_nodes):
    out = set()
    for e in edges:
        if len(e) != 2:
            raise ConfigInvalid(f"edge {e!r} does not have two endpoints")
        i, j = canonical_edge(e)
        if i == j:
            raise ConfigInvalid(f"self-loop {{{i}, {j}}} is not a link")
        if not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
            raise ConfigInvalid(f"edge {{{i}, {j}}} has a node outside 1..{n_nodes}")
        out.add((i, j))
    if not out:
        raise ConfigInvalid("every link set E(k) must be nonempty")
    return tuple(sorted(out))


@dataclass(frozen=True)
class TopologySpec:
    """
    The graph sequence G(k) = (V, E(k)).

    Parameters
    ----------
    n_nodes : int
        Number of nodes N >= 2.
    mode : {'static', 'periodic', 'scripted'}
        ``static``: one link set for all k. ``periodic``: E(k) cycles through
        ``edge_sets`` with period ``len(edge_sets)``. ``scripted``: E(k) is
        ``edge_sets[k - 1]`` and querying past the end raises
        ScheduleExhausted.
    edge_sets : tuple of edge tuples
        One entry for ``static``; one per phase or step otherwise.
    """

    n_nodes: int
    mode: str = "static"
    edge_sets: tuple = ()

    def __post_init__(self):
        if int(self.n_nodes) < 2:
            raise ConfigInvalid(f"need at least 2 nodes, got {self.n_nodes}")
        if self.mode not in ("static", "periodic", "scripted"):
            raise ConfigInvalid(f"unknown topology mode {self.mode!r}")
        sets = tuple(_edge_tuple(es, self.n_nodes) for es in self.edge_sets)
        if not sets:
            raise ConfigInvalid("topology has no link sets")
        if self.mode == "static" and len(sets) != 1:
            raise ConfigInvalid("static topology takes exactly one link set")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "edge_sets", sets)

    @classmethod
    def static(cls, n_nodes, edges):
        return cls(n_nodes, "static", (tuple(edges),))

    @classmethod
    def ring(cls, n_nodes):
        if n_nodes == 2:
            return cls.static(2, [(1, 2)])
        return cls.static(n_nodes, [(i, i % n_nodes + 1) for i in range(1, n_nodes + 1)])

    @classmethod
    def path(cls, n_nodes):
        return cls.static(n_nodes, [(i, i + 1) for i in range(1, n_nodes)])

    @classmethod
    def complete(cls, n_nodes):
        return cls.static(n_nodes, [(i, j) for i in range(1, n_nodes + 1) for j in range(i + 1, n_nodes + 1)])

    def edges_at(self, k):
        """Sorted link set E(k) for iteration ``k >= 1``."""
        if k < 1:
            raise ValueError(f"iterations start at k=1, got {k}")
        if self.mode == "static":
            return self.edge_sets[0]
        if self.mode == "periodic":
            return self.edge_sets[(k - 1) % len(self.edge_sets)]
        if k > len(self.edge_sets):
            raise ScheduleExhausted(f"scripted topology has {len(self.edge_sets)} steps, asked for k={k}")
        return self.edge_sets[k - 1]

    def union_edges(self):
        """Every edge that appears in some link set."""
        return tuple(sorted({e for es in self.edge_sets for e in es}))


SCHEDULER_KINDS = ("uniform-random-edge", "round-robin", "scripted", "clique-partition")


@dataclass(frozen=True)
class SchedulerSpec:
    """
    Rule producing the gossip pair u(k) from E(k).

    ``uniform-random-edge`` draws uniformly from E(k). ``round-robin`` takes
    edge ``(k - 1) mod |E(k)|``. ``scripted`` replays ``pairs``.
    ``clique-partition`` draws uniformly from the edges of E(k) whose
    endpoints share a group in ``groups`` (nodes in no group form their own
    singleton group), so cross-group pairs never gossip.
    """

    kind: str
    seed: int = 0
    pairs: tuple = ()
    groups: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEDULER_KINDS:
            raise ConfigInvalid(f"unknown scheduler kind {self.kind!r}")
        object.__setattr__(self, "seed", int(self.seed) & _MASK)
        object.__setattr__(self, "pairs", tuple(canonical_edge(p) for p in self.pairs))
        object.__setattr__(self, "groups", tuple(tuple(int(v) for v in g) for g in self.groups))
        if self.kind == "scripted" and not self.pairs:
            raise ConfigInvalid("scripted scheduler needs a nonempty pair list")
        if self.kind == "clique-partition":
            seen = [v for g in self.groups for v in g]
            if not seen:
                raise ConfigInvalid("clique-partition scheduler needs groups")
            if len(seen) != len(set(seen)):
                raise ConfigInvalid("clique-partition groups must be disjoint")


@dataclass
class Scheduler:
    """
    Stateful pair generator for one run.

    The emitted pair at ``k`` depends only on (spec, topology, k), but the
    scheduler insists on consecutive ``k`` and keeps the emitted history so
    that connectivity of the realised pattern can be checked afterwards.
    """

    spec: SchedulerSpec
    topology: TopologySpec
    k: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        n = self.topology.n_nodes
        if self.spec.kind == "clique-partition":
            for v in (v for g in self.spec.groups for v in g):
                if not 1 <= v <= n:
                    raise ConfigInvalid(f"group member {v} outside 1..{n}")
            self._group = {v: gi for gi, g in enumerate(self.spec.groups) for v in g}
        for p in self.spec.pairs:
            if not (1 <= p[0] <= n and 1 <= p[1] <= n) or p[0] == p[1]:
                raise ConfigInvalid(f"scripted pair {p} is not a valid link on 1..{n}")

    def _group_of(self, v):
        return self._group.get(v, -v)

    def next_pair(self, k=None):
        """
        Gossip pair u(k) for the next iteration.

        ``k`` defaults to one past the last emitted iteration and must equal
        it when given.
        """
        if k is None:
            k = self.k + 1
        if k != self.k + 1:
            raise ValueError(f"scheduler is at k={self.k}; next pair is for k={self.k + 1}, not {k}")
        edges = self.topology.edges_at(k)
        spec = self.spec
        if spec.kind == "uniform-random-edge":
            pair = edges[SplitMix64.for_step(spec.seed, k).below(len(edges))]
        elif spec.kind == "round-robin":
            pair = edges[(k - 1) % len(edges)]
        elif spec.kind == "scripted":
            if k > len(spec.pairs):
                raise ScheduleExhausted(f"scripted schedule has {len(spec.pairs)} pairs, asked for k={k}")
            pair = spec.pairs[k - 1]
            if pair not in edges:
                raise ScheduleExhausted(f"scripted pair {pair} is not a link of E({k})")
        else:
            eligible = [e for e in edges if self._group_of(e[0]) == self._group_of(e[1])]
            if not eligible:
                raise ScheduleExhausted(f"no intra-group link in E({k})")
            pair = eligible[SplitMix64.for_step(spec.seed, k).below(len(eligible))]
        self.k = k
        self.history.append(pair)
        return pair

    def take(self, n):
        """The next ``n`` pairs as a list."""
        return [self.next_pair() for _ in range(n)]


def window_connected(history, window, n_nodes):
    """
    True iff the pairs in the trailing ``window`` of ``history`` connect all
    ``n_nodes`` nodes.

    This is the finite-horizon stand-in for requiring that the pairs which
    gossip infinitely often form a connected graph.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    parent = list(range(n_nodes + 1))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    components = n_nodes
    for i, j in history[-window:]:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            components -= 1
    return components == 1
