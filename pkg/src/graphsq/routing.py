"""JSQ(d) task assignment on a graph.

An arrival at server ``i`` samples ``d-1`` distinct out-neighbours uniformly,
then joins the shortest queue among ``i`` and the sample, breaking ties
uniformly. Servers with fewer than ``d-1`` neighbours use a
:class:`FallbackPolicy`.

``arrival_intensity_exact`` gives the total acceptance weight ``C_i`` of a
server (its arrival rate is ``lambda * C_i``) through hypergeometric tie
counts; ``arrival_intensity_bruteforce`` sums the defining ordered-tuple
expansion and exists to check it.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from graphsq.graph import Graph


class FallbackPolicy(enum.Enum):
    SELF_ONLY = "self-only"
    CLOSED_NEIGHBORHOOD_JSQ = "closed-neighborhood-jsq"

    @classmethod
    def parse(cls, value) -> "FallbackPolicy":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"selfonly": "self-only", "closedneighborhoodjsq": "closed-neighborhood-jsq"}
        return cls(aliases.get(key.replace("-", ""), key))


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class RoutingSample:
    origin: int
    targets: tuple[int, ...]
    destination: int

    @property
    def fallback(self) -> bool:
        return not self.targets


def tie_break_b(x: Sequence[int]) -> float:
    """Probability that the first coordinate wins a uniform shortest-queue tie-break."""
    if len(x) == 0:
        raise ValueError("tie_break_b needs at least one queue length")
    first = x[0]
    m = min(x)
    if first != m:
        return 0.0
    return 1.0 / sum(1 for v in x if v == m)


def _argmin_pick(candidates: Sequence[int], queues, rng) -> int:
    best = min(queues[c] for c in candidates)
    ties = [c for c in candidates if queues[c] == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.random() * len(ties))]


def sample_subset(pool: Sequence[int], m: int, rng) -> list[int]:
    """``m`` distinct entries of ``pool`` by a partial Fisher-Yates shuffle.

    Swaps are recorded in a dict so the pool is never copied.
    """
    size = len(pool)
    swaps: dict[int, int] = {}
    out = []
    for a in range(m):
        r = a + int(rng.random() * (size - a))
        if r >= size:
            r = size - 1
        out.append(pool[swaps.get(r, r)])
        swaps[r] = swaps.get(a, a)
    return out


def route_arrival(
    g: Graph,
    queues,
    i: int,
    d: int,
    rng,
    fb: FallbackPolicy = FallbackPolicy.SELF_ONLY,
    nbrs: Sequence[int] | None = None,
) -> RoutingSample:
    """Route one arrival at server ``i``.

    ``rng`` needs only a ``random()`` method. Uniforms are consumed in a fixed
    order: one per sampled target, then one tie-break draw if (and only if)
    the minimum is shared. ``nbrs`` may pass the out-neighbour list of ``i``
    to skip the lookup.
    """
    if nbrs is None:
        nbrs = g.neighbor_lists()[i]
    if len(nbrs) < d - 1:
        if fb is FallbackPolicy.SELF_ONLY:
            return RoutingSample(i, (), i)
        return RoutingSample(i, (), _argmin_pick([i, *nbrs], queues, rng))
    targets = sample_subset(nbrs, d - 1, rng)
    return RoutingSample(i, tuple(targets), _argmin_pick([i, *targets], queues, rng))


# -- exact intensity ----------------------------------------------------


def win_probability(equal, greater, pool, m: int, extra_ties=0):
    """P(target wins) when ``m`` distinct items are drawn uniformly from a pool.

    The pool holds ``equal`` items tied with the target, ``greater`` items
    above it and the rest below it; any draw from below beats the target.
    ``extra_ties`` fixed competitors are also tied with the target. Works
    elementwise on numpy arrays.

    Each hypergeometric weight C(E,k) C(G,m-k) / C(P,m) is evaluated as a
    product of ratios no larger than one, so it cannot overflow for any
    degree.
    """
    equal = np.asarray(equal, dtype=float)
    greater = np.asarray(greater, dtype=float)
    pool = np.asarray(pool, dtype=float)
    extra = np.asarray(extra_ties, dtype=float)
    total = np.zeros(np.broadcast(equal, greater, pool, extra).shape)
    for k in range(m + 1):
        w = np.full_like(total, float(math.comb(m, k)))
        for a in range(k):
            w = w * np.clip(equal - a, 0.0, None) / (pool - a)
        for b in range(m - k):
            w = w * np.clip(greater - b, 0.0, None) / (pool - k - b)
        total = total + w / (1.0 + extra + k)
    return total


def _win_scalar(equal: int, greater: int, pool: int, m: int, extra: int = 0) -> float:
    total = 0.0
    for k in range(min(m, equal) + 1):
        if m - k > greater:
            continue
        w = float(math.comb(m, k))
        for a in range(k):
            w *= (equal - a) / (pool - a)
        for b in range(m - k):
            w *= (greater - b) / (pool - k - b)
        total += w / (1 + extra + k)
    return total


def _closed_jsq_share(queues, target: int, members: Sequence[int]) -> float:
    # share of an arrival taken by `target` under JSQ over `members`
    best = min(queues[c] for c in members)
    if queues[target] != best:
        return 0.0
    return 1.0 / sum(1 for c in members if queues[c] == best)


def arrival_intensity_exact(
    g: Graph, queues, i: int, d: int, fb: FallbackPolicy = FallbackPolicy.SELF_ONLY
) -> float:
    """Acceptance weight ``C_i`` of server ``i`` in state ``queues``.

    Sum of: the share of ``i``'s own arrivals it keeps; for every ``j`` with
    ``i`` among its out-neighbours and ``deg(j) >= d-1``, the probability
    ``(d-1)/deg(j)`` that ``i`` is sampled times the probability that ``i``
    then wins; and the fallback shares for low-degree servers.
    """
    out = g.neighbor_lists()
    x = queues[i]
    nbrs = out[i]
    deg_i = len(nbrs)
    if deg_i >= d - 1:
        less = sum(1 for k in nbrs if queues[k] < x)
        equal = sum(1 for k in nbrs if queues[k] == x)
        own = _win_scalar(equal, deg_i - less - equal, deg_i, d - 1)
    elif fb is FallbackPolicy.SELF_ONLY:
        own = 1.0
    else:
        own = _closed_jsq_share(queues, i, [i, *nbrs])

    forwarded = 0.0
    for j in g.in_neighbor_lists()[i]:
        nj = out[j]
        deg_j = len(nj)
        xj = queues[j]
        if deg_j < d - 1:
            if fb is FallbackPolicy.CLOSED_NEIGHBORHOOD_JSQ:
                forwarded += _closed_jsq_share(queues, i, [j, *nj])
            continue
        if xj < x:
            continue
        less = equal = 0
        for k in nj:
            if k == i:
                continue
            v = queues[k]
            if v < x:
                less += 1
            elif v == x:
                equal += 1
        pool = deg_j - 1
        win = _win_scalar(equal, pool - less - equal, pool, d - 2, int(xj == x))
        forwarded += (d - 1) / deg_j * win
    return own + forwarded


def arrival_intensities(g: Graph, queues, d: int, fb: FallbackPolicy = FallbackPolicy.SELF_ONLY) -> np.ndarray:
    return np.array([arrival_intensity_exact(g, queues, i, d, fb) for i in range(g.n_vertices)])


# -- brute force ---------------------------------------------------------


def _falling(n: int, m: int) -> int:
    out = 1
    for a in range(m):
        out *= n - a
    return out


def bruteforce_tuple_count(g: Graph, i: int, d: int) -> int:
    out = g.neighbor_lists()
    count = _falling(len(out[i]), d - 1)
    for j in g.in_neighbor_lists()[i]:
        count += _falling(len(out[j]) - 1, d - 2) + len(out[j]) + 1
    return count


def arrival_intensity_bruteforce(
    g: Graph,
    queues,
    i: int,
    d: int,
    fb: FallbackPolicy = FallbackPolicy.SELF_ONLY,
    budget: int = 10**7,
) -> float:
    """``C_i`` by summing over every ordered tuple of distinct neighbours.

    Own arrivals: each ordered ``(d-1)``-tuple of distinct out-neighbours of
    ``i`` has weight ``1 / (D_i (D_i-1) ... (D_i-d+2))``. Forwarded arrivals:
    for each in-neighbour ``j`` the ordered tuples ``(j, k_3, ..., k_d)`` with
    ``k``'s distinct out-neighbours of ``j`` other than ``i``, weighted by
    ``(d-1)`` times the same falling-factorial weight for ``D_j``. Fallback
    shares enumerate the closed neighbourhood directly.
    """
    n_tuples = bruteforce_tuple_count(g, i, d)
    if n_tuples > budget:
        raise BudgetExceeded(f"{n_tuples} tuples exceeds the brute-force budget {budget}")
    out = g.neighbor_lists()
    x = queues[i]
    nbrs = out[i]

    total = 0.0
    if len(nbrs) >= d - 1:
        alpha = 1.0 / _falling(len(nbrs), d - 1)
        for tup in itertools.permutations(nbrs, d - 1):
            total += alpha * tie_break_b((x, *(queues[k] for k in tup)))
    else:
        total += _fallback_bruteforce(queues, i, i, nbrs, fb)

    for j in g.in_neighbor_lists()[i]:
        nj = out[j]
        if len(nj) < d - 1:
            total += _fallback_bruteforce(queues, i, j, nj, fb)
            continue
        alpha = 1.0 / _falling(len(nj), d - 1)
        rest = [k for k in nj if k != i]
        for tup in itertools.permutations(rest, d - 2):
            total += (d - 1) * alpha * tie_break_b((x, queues[j], *(queues[k] for k in tup)))
    return total


def _fallback_bruteforce(queues, i: int, origin: int, nbrs, fb: FallbackPolicy) -> float:
    if fb is FallbackPolicy.SELF_ONLY:
        return 1.0 if origin == i else 0.0
    others = [origin, *nbrs]
    others.remove(i)
    return tie_break_b((queues[i], *(queues[k] for k in others)))
