"""Pathwise coupling of the N-server network with its tagged-queue limits.

Both systems read the same driving noise: per server, a rate-1 Poisson stream
of service events (applied to each process only while it is non-empty) and a
Poisson random measure of arrival candidates ``(s, y)`` with ``y`` uniform on
``[0, ymax_i]`` at rate ``lam * ymax_i``. A candidate is accepted by the
N-system when ``y <= C_i^N(s-)`` and by the limit process when
``y <= C_i(s-)``.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from graphsq._rng import UniformStream, make_generator, seed_sequence
from graphsq.ctmc import INIT_KEY, SimConfig, run_sim, sample_initial
from graphsq.graph import Graph, generate, regularity_report
from graphsq.meanfield import OdeSolution, limit_intensity_padded, path_value_at, simulate_mkv_path
from graphsq.routing import _win_scalar, win_probability
from graphsq.stats import Accumulator, covariance

DRIVER_KEY = 2
MKV_KEY = 3
GRAPH_KEY = 4
YMAX_TOL = 1e-9


class CouplingError(RuntimeError):
    pass


class YmaxViolation(CouplingError):
    pass


@dataclass(frozen=True, eq=False)
class DriverStreams:
    """All driver events on ``[0, T]``, merged in time order."""

    times: np.ndarray
    server: np.ndarray
    is_arrival: np.ndarray
    y: np.ndarray
    ymax: np.ndarray


def build_drivers(n: int, lam: float, T: float, ymax: np.ndarray, seed: int) -> DriverStreams:
    """Draw the service streams and arrival measures for every server.

    Server ``i`` uses its own generator keyed by ``(seed, DRIVER_KEY, i)``, so
    its noise is unaffected by the rest of the system. Draw order per server:
    service count, service times, candidate count, candidate times, marks.
    """
    parts_t, parts_s, parts_a, parts_y = [], [], [], []
    for i in range(n):
        gen = make_generator(seed, DRIVER_KEY, i)
        ns = gen.poisson(T)
        ts = gen.random(ns) * T
        na = gen.poisson(lam * ymax[i] * T)
        ta = gen.random(na) * T
        ya = gen.random(na) * ymax[i]
        parts_t += [ts, ta]
        parts_s += [np.full(ns, i), np.full(na, i)]
        parts_a += [np.zeros(ns, bool), np.ones(na, bool)]
        parts_y += [np.zeros(ns), ya]
    times = np.concatenate(parts_t)
    order = np.argsort(times, kind="stable")
    return DriverStreams(
        times=times[order],
        server=np.concatenate(parts_s).astype(np.int64)[order],
        is_arrival=np.concatenate(parts_a)[order],
        y=np.concatenate(parts_y)[order],
        ymax=np.asarray(ymax, dtype=float),
    )


def dominating_bounds(g: Graph, d: int) -> np.ndarray:
    """``ymax_i = max(d, 1 + (d-1) rho_i)``: bounds both acceptance weights."""
    rho = regularity_report(g, d).rho
    return np.maximum(float(d), 1.0 + (d - 1) * rho)


class _NetworkState:
    """Queue lengths plus, per server, a histogram of its out-neighbours' queues.

    The histogram lets ``C_i^N`` be evaluated with a handful of vector
    operations instead of a two-hop scan.
    """

    def __init__(self, g: Graph, queues: np.ndarray, d: int):
        self.g = g
        self.d = d
        self.x = np.array(queues, dtype=np.int64)
        self.deg = g.degrees.astype(np.int64)
        self.in_nbrs = [g.in_neighbors(i) for i in range(g.n_vertices)]
        width = int(self.x.max(initial=0)) + 8
        n = g.n_vertices
        self.hist = np.zeros((n, width), dtype=np.int64)
        src = np.repeat(np.arange(n), self.deg)
        np.add.at(self.hist, (src, self.x[g.indices]), 1)

    def _move(self, k: int, old: int, new: int) -> None:
        if new >= self.hist.shape[1]:
            self.hist = np.pad(self.hist, ((0, 0), (0, self.hist.shape[1])))
        js = self.in_nbrs[k]
        self.hist[js, old] -= 1
        self.hist[js, new] += 1

    def increment(self, k: int) -> None:
        v = int(self.x[k])
        self.x[k] = v + 1
        self._move(k, v, v + 1)

    def decrement(self, k: int) -> None:
        v = int(self.x[k])
        if v > 0:
            self.x[k] = v - 1
            self._move(k, v, v - 1)

    def intensity(self, i: int) -> float:
        """``C_i^N`` for a graph where every server has at least ``d-1`` neighbours."""
        d = self.d
        x = int(self.x[i])
        row = self.hist[i]
        deg_i = int(self.deg[i])
        less = int(row[:x].sum())
        equal = int(row[x])
        total = _win_scalar(equal, deg_i - less - equal, deg_i, d - 1)
        js = self.in_nbrs[i]
        if js.size == 0:
            return total
        xj = self.x[js]
        keep = xj >= x
        if not keep.any():
            return total
        js = js[keep]
        xj = xj[keep]
        sub = self.hist[js, : x + 1]
        less_j = sub[:, :x].sum(axis=1)
        equal_j = sub[:, x] - 1  # drop i itself
        pool = self.deg[js] - 1
        win = win_probability(equal_j, pool - less_j - equal_j, pool, d - 2, xj == x)
        return total + float(np.sum((d - 1) / self.deg[js] * win))


@dataclass
class CouplingResult:
    tagged: np.ndarray
    sup_abs: np.ndarray
    final_prelimit: np.ndarray
    final_limit: np.ndarray
    candidates: int
    services: int
    meta: dict = field(default_factory=dict)

    @property
    def sup_sq(self) -> np.ndarray:
        return self.sup_abs.astype(np.int64) ** 2

    @property
    def mean_sup2(self) -> float:
        return float(self.sup_sq.mean()) if self.sup_abs.size else math.nan


def run_coupled(
    g: Graph,
    cfg: SimConfig,
    sol: OdeSolution | None,
    tagged=None,
    seed: int | None = None,
    *,
    prelimit: str = "nsystem",
) -> CouplingResult:
    """Drive the network and the tagged limit processes with shared noise.

    ``prelimit="nsystem"`` is the real experiment; ``"mkv"`` swaps in a second
    copy of the limit dynamics (a control whose discrepancy must be zero);
    ``sol=None`` runs the network alone through the same thinning route.
    Returns per-tagged-server ``sup_t |X_i^N(t) - X_i(t)|``.
    """
    if prelimit not in ("nsystem", "mkv"):
        raise ValueError(f"unknown prelimit {prelimit!r}")
    seed = cfg.seed if seed is None else seed
    n, d, lam, T = g.n_vertices, cfg.d, cfg.lam, cfg.T
    if int(g.degrees.min()) < d - 1:
        raise CouplingError(f"every server needs at least d-1={d - 1} neighbours for the coupling")
    if sol is not None and sol.T < T - 1e-12:
        raise CouplingError(f"ODE solution covers [0, {sol.T}] but T={T}")
    if sol is None and prelimit == "mkv":
        raise ValueError("the mkv control needs an ODE solution")
    tagged = np.arange(n) if tagged is None else np.asarray(sorted(set(tagged)), dtype=np.int64)

    x0 = sample_initial(n, cfg.q_init, make_generator(seed, INIT_KEY)).queues
    ymax = dominating_bounds(g, d)
    drv = build_drivers(n, lam, T, ymax, seed)

    net = _NetworkState(g, x0, d) if prelimit == "nsystem" else None
    xn = x0.tolist()  # used by the mkv control only
    is_tagged = np.zeros(n, dtype=bool)
    is_tagged[tagged] = True
    xl = x0.tolist()
    sup = np.zeros(n, dtype=np.int64)
    with_limit = sol is not None

    for t, i, arr, y in zip(drv.times.tolist(), drv.server.tolist(), drv.is_arrival.tolist(), drv.y.tolist()):
        track = with_limit and is_tagged[i]
        if not arr:
            if net is not None:
                net.decrement(i)
            elif xn[i] > 0:
                xn[i] -= 1
            if track and xl[i] > 0:
                xl[i] -= 1
        else:
            bound = ymax[i] + YMAX_TOL
            if net is not None:
                c_pre = net.intensity(i)
            else:
                c_pre = limit_intensity_padded(xn[i], sol.at(t), d)
            if c_pre > bound:
                raise YmaxViolation(f"C^N_{i}={c_pre} exceeds ymax={ymax[i]} at t={t}")
            if y <= c_pre:
                if net is not None:
                    net.increment(i)
                else:
                    xn[i] += 1
            if track:
                c_lim = limit_intensity_padded(xl[i], sol.at(t), d)
                if c_lim > bound:
                    raise YmaxViolation(f"C_{i}={c_lim} exceeds ymax={ymax[i]} at t={t}")
                if y <= c_lim:
                    xl[i] += 1
        if track:
            cur = net.x[i] if net is not None else xn[i]
            diff = abs(int(cur) - xl[i])
            if diff > sup[i]:
                sup[i] = diff

    final_pre = net.x.copy() if net is not None else np.array(xn, dtype=np.int64)
    return CouplingResult(
        tagged=tagged,
        sup_abs=sup[tagged] if with_limit else np.zeros(0, dtype=np.int64),
        final_prelimit=final_pre,
        final_limit=np.array(xl, dtype=np.int64),
        candidates=int(drv.is_arrival.sum()),
        services=int((~drv.is_arrival).sum()),
        meta={"n": n, "lam": lam, "d": d, "T": T, "seed": int(seed), "prelimit": prelimit},
    )


# -- sweeps ----------------------------------------------------------------


def resolve_p(spec, n: int) -> float:
    """Edge probability for ``n`` from a tag: ``n^-1/2``, ``log2n/n``, ``c/n`` or a number."""
    s = str(spec).replace(" ", "")
    m = re.fullmatch(r"n\^\(?(-?[0-9.]+)(?:/([0-9.]+))?\)?", s)
    if m:
        expo = float(m.group(1)) / (float(m.group(2)) if m.group(2) else 1.0)
        return min(1.0, n**expo)
    if s in ("log2n/n", "log^2n/n", "log(n)^2/n"):
        return min(1.0, math.log(n) ** 2 / n)
    if s in ("logn/n", "log(n)/n"):
        return min(1.0, math.log(n) / n)
    m = re.fullmatch(r"([0-9.]+)/n", s)
    if m:
        return min(1.0, float(m.group(1)) / n)
    p = float(s)
    if not 0 <= p <= 1:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    return p


def derive_seed(seed: int, *key: int) -> int:
    return int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint32)[0])


def draw_sweep_graph(family: str, n: int, p: float, d: int, seed: int, max_redraws: int = 100):
    """Graph for one sweep cell, redrawn until every degree is at least ``d-1``.

    Returns ``(graph, redraws)``.
    """
    if family == "clique":
        return generate("clique", n), 0
    for attempt in range(max_redraws + 1):
        g = generate(family, n, derive_seed(seed, GRAPH_KEY, attempt), p=p)
        if int(g.degrees.min()) >= d - 1:
            return g, attempt
    raise CouplingError(
        f"{family}(n={n}, p={p:.4g}): min degree < d-1 after {max_redraws} redraws; p too small"
    )


@dataclass
class SweepRow:
    n: int
    p: float
    mean_sup2: float
    stderr: float
    product: float
    replications: int
    redraws: int
    seeds: list = field(default_factory=list)

    def csv_row(self) -> dict:
        return {"n": self.n, "p": self.p, "mean_sup2": self.mean_sup2, "stderr": self.stderr, "product": self.product}


def coupled_replication(family, n, p, cfg, sol, seed, freeze_seed=None, max_redraws=100):
    """One annealed replication: fresh graph (unless frozen), shared-noise run.

    Returns ``(mean over servers of sup^2, redraws)``.
    """
    g, redraws = draw_sweep_graph(family, n, p, cfg.d, seed if freeze_seed is None else freeze_seed, max_redraws)
    res = run_coupled(g, cfg, sol, seed=seed)
    return res.mean_sup2, redraws


def _cell(args):
    return coupled_replication(*args)


def rate_sweep(
    family: str,
    n_list,
    cfg: SimConfig,
    replications: int,
    sol: OdeSolution,
    *,
    p_spec="n^-1/2",
    freeze_graph: bool = False,
    max_redraws: int = 100,
    jobs: int = 1,
) -> list[SweepRow]:
    """Annealed estimate of ``E sup_t |X_i^N - X_i|^2`` for each ``n``.

    Every replication draws a fresh graph and fresh noise from seeds derived
    from ``(cfg.seed, n, r)``; ``freeze_graph`` reuses one graph per ``n``.
    The product column is ``sqrt(n p) * mean``.
    """
    rows = []
    for n in n_list:
        p = 1.0 if family == "clique" else resolve_p(p_spec, n)
        seeds = [derive_seed(cfg.seed, n, r) for r in range(replications)]
        freeze = derive_seed(cfg.seed, n, GRAPH_KEY, 0) if freeze_graph else None
        tasks = [(family, n, p, cfg, sol, s, freeze, max_redraws) for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as ex:
                results = list(ex.map(_cell, tasks))
        else:
            results = [_cell(t) for t in tasks]
        acc = Accumulator().extend(r[0] for r in results)
        redraws = sum(r[1] for r in results)
        if freeze_graph:
            redraws = results[0][1] if results else 0
        rows.append(
            SweepRow(
                n=n,
                p=p,
                mean_sup2=acc.mean,
                stderr=acc.stderr,
                product=math.sqrt(n * p) * acc.mean,
                replications=replications,
                redraws=redraws,
                seeds=seeds,
            )
        )
    return rows


# -- propagation of chaos -----------------------------------------------------

FUNCTIONALS = {
    "busy": lambda x: 1.0 if x >= 1 else 0.0,
    "ge2": lambda x: 1.0 if x >= 2 else 0.0,
    "length": float,
}


@dataclass
class CovarianceRow:
    i: int
    j: int
    cov: float
    stderr: float
    reps: int

    def csv_row(self) -> dict:
        return {"i": self.i, "j": self.j, "cov": self.cov, "stderr": self.stderr, "reps": self.reps}


def _final_state(args):
    g, cfg, seed = args
    run_cfg = SimConfig(
        lam=cfg.lam, d=cfg.d, T=cfg.T, seed=seed, sample_dt=cfg.T, fallback=cfg.fallback,
        q_init=cfg.q_init, jmax=cfg.jmax, max_events=cfg.max_events,
    )
    return run_sim(g, run_cfg).final_queues


def _mkv_finals(args):
    sol, cfg, seed, servers = args
    out = {}
    for s in servers:
        rng = UniformStream.from_seed(seed, MKV_KEY, s)
        out[s] = path_value_at(simulate_mkv_path(sol, cfg.lam, cfg.d, cfg.T, cfg.q_init, rng), cfg.T)
    return out


def chaos_covariance(
    g: Graph | None,
    cfg: SimConfig,
    pairs,
    replications: int,
    *,
    f: str = "busy",
    sol: OdeSolution | None = None,
    mkv_control: bool = False,
    jobs: int = 1,
) -> list[CovarianceRow]:
    """Covariance of ``f(X_i(T))`` and ``f(X_j(T))`` across independent replications.

    Replication ``r`` of the network uses seed ``derive_seed(cfg.seed, r)``.
    With ``mkv_control`` each server instead follows an independent
    limit-process path, so every covariance with ``i != j`` is zero in truth.
    """
    func = FUNCTIONALS[f] if isinstance(f, str) else f
    pairs = [(int(a), int(b)) for a, b in pairs]
    servers = sorted({s for p in pairs for s in p})
    seeds = [derive_seed(cfg.seed, r) for r in range(replications)]
    if mkv_control:
        if sol is None:
            raise ValueError("the mkv control needs an ODE solution")
        tasks = [(sol, cfg, s, servers) for s in seeds]
        worker = _mkv_finals
    else:
        tasks = [(g, cfg, s) for s in seeds]
        worker = _final_state
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            finals = list(ex.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        finals = [worker(t) for t in tasks]
    rows = []
    for a, b in pairs:
        va = [func(int(x[a])) for x in finals]
        vb = [func(int(x[b])) for x in finals]
        cov, se = covariance(va, vb)
        rows.append(CovarianceRow(a, b, cov, se, replications))
    return rows
