"""Graph topologies for the load-balancing network and degree-regularity checks.

Graphs are stored in compressed sparse row form: ``indptr``/``indices`` hold
the out-neighbour lists, sorted within each row. For undirected graphs the
in-neighbour arrays are the same objects. Vertices are 0-based everywhere,
including the edge-list file format.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from graphsq._rng import make_generator

FAMILIES = ("clique", "cycle", "circulant", "random_regular", "errg", "directed_errg")
RANDOM_FAMILIES = frozenset({"random_regular", "errg", "directed_errg"})
EDGELIST_MAGIC = "graphsq-edgelist"
EDGELIST_VERSION = "v1"


class GraphError(ValueError):
    """Invalid generator parameters or malformed graph data."""


class RetryBudgetExceeded(RuntimeError):
    pass


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int64, copy=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple graph on vertices ``0..n-1``.

    Build instances with :meth:`from_edges` or :func:`generate`; the
    constructor trusts its arrays.
    """

    n_vertices: int
    directed: bool
    indptr: np.ndarray
    indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    _lists: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges, directed: bool = False) -> "Graph":
        """Build from ``(i, j)`` pairs; for undirected graphs each pair is one edge."""
        if n < 1:
            raise GraphError(f"need at least one vertex, got n={n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loops are not allowed")
        if not directed:
            e = np.sort(e, axis=1)
        key = e[:, 0] * n + e[:, 1]
        if np.unique(key).size != key.size:
            raise GraphError("duplicate edges")
        if directed:
            src, dst = e[:, 0], e[:, 1]
        else:
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
        indptr, indices = _csr(n, src, dst)
        if directed:
            in_indptr, in_indices = _csr(n, dst, src)
        else:
            in_indptr, in_indices = indptr, indices
        return cls(
            n,
            bool(directed),
            _frozen(indptr),
            _frozen(indices),
            _frozen(in_indptr),
            _frozen(in_indices),
        )

    @property
    def degrees(self) -> np.ndarray:
        """Out-degrees (plain degrees for undirected graphs)."""
        return np.diff(self.indptr)

    @property
    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted out-neighbours of ``i``."""
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[i] : self.in_indptr[i + 1]]

    def neighbor_lists(self) -> list[list[int]]:
        """Out-neighbour lists as plain Python lists (cached; used by event loops)."""
        if "out" not in self._lists:
            flat = self.indices.tolist()
            ptr = self.indptr.tolist()
            self._lists["out"] = [flat[ptr[i] : ptr[i + 1]] for i in range(self.n_vertices)]
        return self._lists["out"]

    def in_neighbor_lists(self) -> list[list[int]]:
        if not self.directed:
            return self.neighbor_lists()
        if "in" not in self._lists:
            flat = self.in_indices.tolist()
            ptr = self.in_indptr.tolist()
            self._lists["in"] = [flat[ptr[i] : ptr[i + 1]] for i in range(self.n_vertices)]
        return self._lists["in"]

    def edges(self) -> np.ndarray:
        """Edge array of shape ``(m, 2)``; ``i < j`` rows for undirected graphs."""
        src = np.repeat(np.arange(self.n_vertices, dtype=np.int64), self.degrees)
        e = np.column_stack([src, self.indices])
        if not self.directed:
            e = e[e[:, 0] < e[:, 1]]
        return e

    @property
    def n_edges(self) -> int:
        m = int(self.indices.size)
        return m if self.directed else m // 2

    def validate(self) -> None:
        """Check the structural invariants; raises :class:`GraphError`."""
        n = self.n_vertices
        for ptr, idx in ((self.indptr, self.indices), (self.in_indptr, self.in_indices)):
            if ptr.shape != (n + 1,) or ptr[0] != 0 or ptr[-1] != idx.size:
                raise GraphError("inconsistent row pointers")
            for i in range(n):
                row = idx[ptr[i] : ptr[i + 1]]
                if row.size and (np.any(np.diff(row) <= 0) or np.any(row == i)):
                    raise GraphError(f"row {i} unsorted, duplicated or has a self-loop")
        fwd = set(zip(np.repeat(np.arange(n), self.degrees).tolist(), self.indices.tolist()))
        back = set(zip(self.in_indices.tolist(), np.repeat(np.arange(n), self.in_degrees).tolist()))
        if fwd != back:
            raise GraphError("in/out adjacency disagree")
        if not self.directed and fwd != {(j, i) for i, j in fwd}:
            raise GraphError("undirected adjacency is not symmetric")

    # -- serialization -------------------------------------------------

    def to_edgelist(self) -> str:
        buf = io.StringIO()
        buf.write(f"{EDGELIST_MAGIC} {EDGELIST_VERSION} {self.n_vertices} {int(self.directed)}\n")
        for i, j in self.edges().tolist():
            buf.write(f"{i} {j}\n")
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_edgelist())

    @classmethod
    def from_edgelist(cls, text: str) -> "Graph":
        lines = text.splitlines()
        if not lines:
            raise GraphError("empty edge-list")
        head = lines[0].split()
        if len(head) != 4 or head[0] != EDGELIST_MAGIC or head[1] != EDGELIST_VERSION:
            raise GraphError(f"bad edge-list header: {lines[0]!r}")
        n, directed = int(head[2]), head[3] == "1"
        body = [ln.split() for ln in lines[1:] if ln.strip()]
        edges = np.array(body, dtype=np.int64).reshape(-1, 2)
        if not directed and edges.size and np.any(edges[:, 0] >= edges[:, 1]):
            raise GraphError("undirected edge-list rows must have i < j")
        return cls.from_edges(n, edges, directed=directed)

    @classmethod
    def load(cls, path) -> "Graph":
        return cls.from_edgelist(Path(path).read_text())


# -- generators -------------------------------------------------------


def _clique(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j])


def _circulant(n: int, k: int) -> np.ndarray:
    base = np.arange(n)
    pairs = []
    for off in range(1, k + 1):
        a, b = base, (base + off) % n
        pairs.append(np.column_stack([np.minimum(a, b), np.maximum(a, b)]))
    e = np.concatenate(pairs)
    e = e[e[:, 0] != e[:, 1]]
    return np.unique(e, axis=0)


def _random_regular(n: int, k: int, rng: np.random.Generator, max_restarts: int) -> np.ndarray:
    # Pairing model: shuffle n*k stubs, pair consecutive ones, restart on any
    # self-loop or multi-edge.
    stubs = np.repeat(np.arange(n, dtype=np.int64), k)
    for _ in range(max_restarts + 1):
        perm = rng.permutation(stubs).reshape(-1, 2)
        e = np.sort(perm, axis=1)
        if np.any(e[:, 0] == e[:, 1]):
            continue
        key = e[:, 0] * n + e[:, 1]
        if np.unique(key).size == key.size:
            return e
    raise RetryBudgetExceeded(
        f"random_regular(n={n}, k={k}): no simple pairing after {max_restarts} restarts "
        "(a pairing is simple with probability about exp(-(k^2-1)/4); try method='sequential')"
    )


def _random_regular_sequential(n: int, k: int, rng: np.random.Generator, max_restarts: int) -> np.ndarray:
    # Steger-Wormald: pair random stubs, skipping pairs that would create a
    # loop or a repeated edge; restart only if the leftover stubs admit no
    # valid pair. Asymptotically uniform for slowly growing k.
    for _ in range(max_restarts + 1):
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(n, dtype=np.int64), k)
        while stubs.size:
            stubs = rng.permutation(stubs)
            left = []
            for a, b in stubs.reshape(-1, 2).tolist():
                e = (a, b) if a < b else (b, a)
                if a != b and e not in edges:
                    edges.add(e)
                else:
                    left += [a, b]
            stubs = np.array(left, dtype=np.int64)
            if stubs.size and not _has_valid_pair(stubs, edges):
                break
        else:
            return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    raise RetryBudgetExceeded(f"random_regular(n={n}, k={k}): sequential pairing failed {max_restarts} times")


def _has_valid_pair(stubs: np.ndarray, edges) -> bool:
    verts = sorted(set(stubs.tolist()))
    for x, a in enumerate(verts):
        for b in verts[x + 1 :]:
            if (a, b) not in edges:
                return True
    return False


def _errg(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    rows = []
    for i in range(n - 1):
        hit = np.flatnonzero(rng.random(n - 1 - i) < p)
        if hit.size:
            rows.append(np.column_stack([np.full(hit.size, i), hit + i + 1]))
    return np.concatenate(rows) if rows else np.empty((0, 2), dtype=np.int64)


def _directed_errg(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    rows = []
    for i in range(n):
        hit = np.flatnonzero(rng.random(n - 1) < p)
        if hit.size:
            dst = hit + (hit >= i)  # skip the diagonal
            rows.append(np.column_stack([np.full(hit.size, i), dst]))
    return np.concatenate(rows) if rows else np.empty((0, 2), dtype=np.int64)


def generate(
    family: str,
    n: int,
    seed: int | None = None,
    *,
    k: int | None = None,
    p: float | None = None,
    max_restarts: int = 1000,
    method: str = "pairing",
) -> Graph:
    """Generate a graph from one of :data:`FAMILIES`.

    ``circulant(k)`` joins each vertex to the ``k`` nearest vertices on each
    side of a ring (``k=1`` is the cycle). Random families are a deterministic
    function of ``(family, n, k or p, seed)`` and require a seed.

    ``method`` selects the random-regular sampler: ``"pairing"`` restarts the
    whole pairing on any loop or repeated edge (exactly uniform, practical for
    k up to about 5); ``"sequential"`` repairs pairings stub by stub.
    """
    family = family.replace("-", "_")
    if family not in FAMILIES:
        raise GraphError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if n < 2:
        raise GraphError(f"n must be at least 2, got {n}")
    if family in ("circulant", "random_regular"):
        if k is None or not 1 <= k <= n - 1:
            raise GraphError(f"{family} needs 1 <= k <= n-1, got k={k}")
        if family == "random_regular" and (n * k) % 2:
            raise GraphError(f"random_regular needs n*k even, got n={n}, k={k}")
    if family in ("errg", "directed_errg") and (p is None or not 0.0 <= p <= 1.0):
        raise GraphError(f"{family} needs 0 <= p <= 1, got p={p}")
    rng = None
    if family in RANDOM_FAMILIES:
        if seed is None:
            raise GraphError(f"{family} is random and needs an explicit seed")
        rng = make_generator(seed)

    if family == "clique":
        edges = _clique(n)
    elif family == "cycle":
        edges = _circulant(n, 1)
    elif family == "circulant":
        edges = _circulant(n, k)
    elif family == "random_regular":
        if method == "pairing":
            edges = _random_regular(n, k, rng, max_restarts)
        elif method == "sequential":
            edges = _random_regular_sequential(n, k, rng, max_restarts)
        else:
            raise GraphError(f"unknown random_regular method {method!r}")
    elif family == "errg":
        edges = _errg(n, p, rng)
    else:
        edges = _directed_errg(n, p, rng)
    return Graph.from_edges(n, edges, directed=family == "directed_errg")


# -- regularity --------------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    d_min: int
    d_max: int
    rho: np.ndarray
    epsilon: float
    isolated_count: int
    below_d_count: int
    d: int = 2

    def summary(self) -> dict:
        return {
            "d_min": self.d_min,
            "d_max": self.d_max,
            "epsilon": self.epsilon,
            "isolated_count": self.isolated_count,
            "below_d_count": self.below_d_count,
        }


def regularity_report(g: Graph, d: int = 2) -> RegularityReport:
    """Degree statistics and the load ratios ``rho_i = sum_j xi_ji / D_j``.

    ``D_j`` is the (out-)degree of ``j``; vertices with ``D_j = 0`` contribute
    nothing. For directed graphs ``d_min``/``d_max`` range over both the in-
    and out-degrees.
    """
    out_deg = g.degrees
    n = g.n_vertices
    # every out-edge j -> i carries weight 1/D_j to its head i; grouping the
    # edges into i by D_j and adding count/D_j keeps rho exactly 1 on regular graphs
    tail_deg = np.repeat(out_deg, out_deg)
    width = int(out_deg.max(initial=0)) + 1
    counts = np.bincount(g.indices * width + tail_deg, minlength=n * width).reshape(n, width)
    rho = np.zeros(n)
    for D in np.flatnonzero(counts.any(axis=0)):
        if D > 0:
            rho += counts[:, D] / D
    degs = np.concatenate([out_deg, g.in_degrees]) if g.directed else out_deg
    isolated = (out_deg == 0) & (g.in_degrees == 0)
    return RegularityReport(
        d_min=int(degs.min()),
        d_max=int(degs.max()),
        rho=_frozen(rho),
        epsilon=float(np.max(np.abs(rho - 1.0))),
        isolated_count=int(isolated.sum()),
        below_d_count=int((out_deg < d - 1).sum()),
        d=d,
    )


def condition1_check(
    report: RegularityReport, n: int, *, min_degree: int | None = None, max_epsilon: float = 0.25
) -> tuple[bool, str]:
    """Finite-instance proxy for the diverging-degree regularity condition.

    The condition is asymptotic, so a single instance can only be screened:
    minimum degree at least ``min_degree`` (default ``max(d, ceil(log2 n))``)
    and ``epsilon <= max_epsilon``.
    """
    if min_degree is None:
        min_degree = max(report.d, math.ceil(math.log2(max(n, 2))))
    if report.d_min < min_degree:
        return False, f"FAIL (d_min={report.d_min})"
    if report.epsilon > max_epsilon:
        return False, f"FAIL (epsilon={report.epsilon:.3g})"
    return True, "PASS"
