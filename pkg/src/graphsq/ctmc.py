"""Event-driven exact simulation of the N-server JSQ(d) network.

The next event is drawn at the aggregate rate ``n*lam + busy`` (Poisson
splitting of the per-server arrival and service clocks): an arrival with
probability ``n*lam / rate`` at a uniform server, otherwise a departure from a
uniform busy server. Busy servers sit in a dense array with swap-remove, which
fixes the order of random draws and therefore makes runs bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from graphsq._rng import UniformStream, make_generator
from graphsq.graph import Graph
from graphsq.meanfield import OccupancyVector, occupancy_array, sample_from_tail
from graphsq.routing import FallbackPolicy, route_arrival

# seed keys for the independent sub-streams of one run
INIT_KEY = 0
DYNAMICS_KEY = 1


class EventBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemState:
    time: float
    queues: np.ndarray


@dataclass
class SimConfig:
    lam: float
    d: int
    T: float
    seed: int
    sample_dt: float = 0.1
    fallback: FallbackPolicy = FallbackPolicy.SELF_ONLY
    q_init: OccupancyVector = field(default_factory=lambda: OccupancyVector([1.0, 0.0]))
    tagged: tuple[int, ...] = ()
    jmax: int = 40
    max_events: int = 10**8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("arrival rate must be non-negative")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.jmax < 1:
            raise ValueError("jmax must be at least 1")
        if self.sample_dt <= 0:
            raise ValueError("sample_dt must be positive")
        if self.seed is None:
            raise ValueError("an explicit seed is required")
        if not isinstance(self.q_init, OccupancyVector):
            self.q_init = OccupancyVector(self.q_init)
        self.fallback = FallbackPolicy.parse(self.fallback)
        self.tagged = tuple(int(v) for v in self.tagged)


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid_times: np.ndarray
    occupancy: np.ndarray  # (len(grid_times), jmax + 1)
    tagged_paths: dict[int, list[tuple[float, int]]]
    event_count: int
    final_queues: np.ndarray

    def occupancy_at(self, k: int) -> OccupancyVector:
        return OccupancyVector(self.occupancy[k], check=False)


def sample_initial(n: int, q_init, rng: np.random.Generator) -> SystemState:
    """iid initial queue lengths with ``P(X >= j) = q_init[j]``."""
    return SystemState(0.0, sample_from_tail(q_init, n, rng))


def occupancy(queues, jmax: int) -> OccupancyVector:
    """Global occupancy tail vector of a state, truncated at ``jmax``."""
    if isinstance(queues, SystemState):
        queues = queues.queues
    return OccupancyVector.from_queues(queues, jmax)


def neighborhood_occupancy(g: Graph, queues, i: int, jmax: int) -> OccupancyVector:
    """Occupancy of the closed neighbourhood ``{i} + nbrs(i)``, each weighted ``1/(D_i+1)``."""
    if isinstance(queues, SystemState):
        queues = queues.queues
    x = np.asarray(queues)
    members = np.concatenate([[i], g.neighbors(i)])
    return OccupancyVector(occupancy_array(x[members], jmax), check=False)


def grid(T: float, dt: float) -> np.ndarray:
    m = int(np.floor(T / dt + 1e-9))
    return np.arange(m + 1) * dt


def run_sim(g: Graph, cfg: SimConfig, initial: SystemState | None = None) -> Trajectory:
    """Simulate the network on ``[0, cfg.T]`` and record occupancy on a grid.

    The value recorded at a grid time is the state right after the last event
    at or before it. Initial queues come from ``cfg.q_init`` unless
    ``initial`` is supplied.
    """
    n = g.n_vertices
    if initial is None:
        initial = sample_initial(n, cfg.q_init, make_generator(cfg.seed, INIT_KEY))
    rng = UniformStream.from_seed(cfg.seed, DYNAMICS_KEY)
    queues = [int(v) for v in initial.queues]
    nbrs = g.neighbor_lists()
    lam, d, fb, jmax = cfg.lam, cfg.d, cfg.fallback, cfg.jmax

    busy = [i for i in range(n) if queues[i] > 0]
    pos = [-1] * n
    for k, i in enumerate(busy):
        pos[i] = k
    # level[v] = number of servers with exactly v tasks (capped into jmax)
    level = [0] * (jmax + 1)
    for v in queues:
        level[min(v, jmax)] += 1

    times = grid(cfg.T, cfg.sample_dt)
    occ = np.empty((times.size, jmax + 1))
    tagged = {i: [(0.0, queues[i])] for i in cfg.tagged}
    inv_n = 1.0 / n

    def record(k):
        acc = 0
        row = occ[k]
        for v in range(jmax, -1, -1):
            acc += level[v]
            row[v] = acc * inv_n

    arrival_rate = n * lam
    t = 0.0
    k_grid = 0
    events = 0
    n_grid = times.size
    while True:
        rate = arrival_rate + len(busy)
        t_next = t + rng.exponential(rate) if rate > 0 else float("inf")
        while k_grid < n_grid and times[k_grid] < t_next:
            record(k_grid)
            k_grid += 1
        if t_next > cfg.T:
            break
        t = t_next
        events += 1
        if events > cfg.max_events:
            raise EventBudgetExceeded(f"more than {cfg.max_events} events")
        if rng.random() * rate < arrival_rate:
            origin = rng.integer(n)
            dest = route_arrival(g, queues, origin, d, rng, fb, nbrs[origin]).destination
            v = queues[dest]
            queues[dest] = v + 1
            level[min(v, jmax)] -= 1
            level[min(v + 1, jmax)] += 1
            if v == 0:
                pos[dest] = len(busy)
                busy.append(dest)
        else:
            dest = busy[rng.integer(len(busy))]
            v = queues[dest]
            queues[dest] = v - 1
            level[min(v, jmax)] -= 1
            level[min(v - 1, jmax)] += 1
            if v == 1:
                k = pos[dest]
                last = busy.pop()
                if last != dest:
                    busy[k] = last
                    pos[last] = k
                pos[dest] = -1
        if dest in tagged:
            tagged[dest].append((t, queues[dest]))

    return Trajectory(
        grid_times=times,
        occupancy=occ,
        tagged_paths=tagged,
        event_count=events,
        final_queues=np.array(queues, dtype=np.int64),
    )
