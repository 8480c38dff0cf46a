import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from graphsq.ctmc import (
    EventBudgetExceeded,
    SimConfig,
    SystemState,
    grid,
    neighborhood_occupancy,
    occupancy,
    run_sim,
    sample_initial,
)
from graphsq.graph import Graph, generate
from graphsq.meanfield import OccupancyVector
from graphsq.routing import arrival_intensity_bruteforce


def test_sample_initial_point_mass():
    s = sample_initial(5, [1, 1, 1, 0], np.random.default_rng(0))
    assert s.time == 0.0 and s.queues.tolist() == [2] * 5
    s = sample_initial(5, [1, 0], np.random.default_rng(0))
    assert s.queues.tolist() == [0] * 5


def test_sample_initial_law():
    xs = sample_initial(100000, [1, 0.5, 0.2], np.random.default_rng(1)).queues
    assert abs(np.mean(xs >= 1) - 0.5) < 0.01 and abs(np.mean(xs >= 2) - 0.2) < 0.01


def test_occupancy_example():
    assert occupancy([0, 2, 1, 2], 3).q.tolist() == [1, 0.75, 0.5, 0]
    assert occupancy(SystemState(0.0, np.array([0, 5])), 2).q.tolist() == [1, 0.5, 0.5]


def test_neighborhood_occupancy_example():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (2, 3)])
    x = [1, 0, 3, 2]
    assert neighborhood_occupancy(g, x, 0, 3).q.tolist() == pytest.approx([1, 2 / 3, 1 / 3, 1 / 3])
    assert neighborhood_occupancy(g, x, 3, 3).q.tolist() == [1, 1, 1, 0.5]


def test_grid():
    assert grid(1.0, 0.25).tolist() == [0, 0.25, 0.5, 0.75, 1.0]
    assert grid(1.0, 0.3).tolist() == pytest.approx([0, 0.3, 0.6, 0.9])


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(lam=-1, d=2, T=1, seed=0)
    with pytest.raises(ValueError):
        SimConfig(lam=0.5, d=1, T=1, seed=0)
    with pytest.raises(ValueError):
        SimConfig(lam=0.5, d=2, T=1, seed=None)
    with pytest.raises(ValueError):
        SimConfig(lam=0.5, d=2, T=1, seed=0, q_init=[1, 0.3, 0.5])
    assert SimConfig(lam=0.5, d=2, T=1, seed=0, fallback="closed-neighborhood-jsq").fallback.value == (
        "closed-neighborhood-jsq"
    )


def test_pure_death_drains():
    g = generate("cycle", 50)
    cfg = SimConfig(lam=0.0, d=2, T=40.0, seed=3, q_init=[1, 1, 1, 0], jmax=5)
    tr = run_sim(g, cfg)
    assert tr.event_count == 100
    assert tr.final_queues.tolist() == [0] * 50
    assert tr.occupancy[0].tolist() == [1, 1, 1, 0, 0, 0]
    assert tr.occupancy[-1].tolist() == [1, 0, 0, 0, 0, 0]


def test_grid_records_state_after_last_event():
    g = Graph.from_edges(1, [])
    cfg = SimConfig(lam=0.0, d=2, T=5.0, seed=8, sample_dt=0.01, q_init=[1, 1, 0], tagged=(0,))
    tr = run_sim(g, cfg)
    (t0, x0), (t1, x1) = tr.tagged_paths[0]
    assert (t0, x0, x1) == (0.0, 1, 0) and 0 < t1 < 5
    before = tr.grid_times < t1
    assert np.all(tr.occupancy[before, 1] == 1.0)
    assert np.all(tr.occupancy[~before, 1] == 0.0)


def test_deterministic_and_seed_sensitive():
    g = generate("errg", 60, seed=1, p=0.2)
    cfg = SimConfig(lam=0.8, d=2, T=5.0, seed=42, tagged=(0, 7))
    a, b = run_sim(g, cfg), run_sim(g, cfg)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.tagged_paths == b.tagged_paths and a.event_count == b.event_count
    cfg.seed = 43
    assert not np.array_equal(run_sim(g, cfg).occupancy, a.occupancy)


def test_event_budget():
    g = generate("clique", 20)
    with pytest.raises(EventBudgetExceeded):
        run_sim(g, SimConfig(lam=0.9, d=2, T=100.0, seed=0, max_events=50))


def test_occupancy_rows_are_tails_and_sum_to_mean():
    g = generate("circulant", 100, k=3)
    cfg = SimConfig(lam=0.95, d=2, T=8.0, seed=5, sample_dt=0.5, q_init=[1, 0.5, 0.2], jmax=60)
    tr = run_sim(g, cfg)
    for row in tr.occupancy:
        OccupancyVector(row)
    assert tr.grid_times[-1] == 8.0
    assert tr.occupancy[-1, 1:].sum() == pytest.approx(tr.final_queues.mean(), abs=1e-12)


def test_long_run_busy_fraction():
    g = generate("clique", 200)
    cfg = SimConfig(lam=0.9, d=2, T=150.0, seed=11, sample_dt=0.5)
    tr = run_sim(g, cfg)
    keep = tr.grid_times >= 30
    # every accepted task leaves, so the long-run busy fraction equals lam
    assert abs(tr.occupancy[keep, 1].mean() - 0.9) < 0.02


def test_exchangeable_servers_on_clique():
    g = generate("clique", 10)
    reps = 600
    a, b = [], []
    for r in range(reps):
        tr = run_sim(g, SimConfig(lam=0.9, d=2, T=3.0, seed=r, q_init=[1, 0.6, 0.3], tagged=(0, 9)))
        a.append(tr.tagged_paths[0][-1][1])
        b.append(tr.tagged_paths[9][-1][1])
    diff = np.subtract(a, b)
    assert abs(diff.mean()) <= 4 * diff.std(ddof=1) / math.sqrt(reps)


def _exact_q1(g, lam, d, T, cap):
    """E q_1(T) from the empty state via the generator on queues <= cap."""
    n = g.n_vertices
    states = list(itertools.product(range(cap + 1), repeat=n))
    index = {s: k for k, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for s, k in index.items():
        for i in range(n):
            up = lam * arrival_intensity_bruteforce(g, s, i, d)
            if s[i] < cap and up:
                t = list(s)
                t[i] += 1
                Q[k, index[tuple(t)]] += up
            if s[i] > 0:
                t = list(s)
                t[i] -= 1
                Q[k, index[tuple(t)]] += 1.0
        Q[k, k] = -Q[k].sum()
    p = expm(Q * T)[index[(0,) * n]]
    q1 = np.array([np.mean(np.array(s) >= 1) for s in states])
    return float(p @ q1)


def test_transient_mean_matches_generator():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    lam, d, T = 0.7, 2, 1.5
    exact = _exact_q1(g, lam, d, T, cap=7)
    reps = 4000
    vals = np.array(
        [run_sim(g, SimConfig(lam=lam, d=d, T=T, seed=r, sample_dt=T)).occupancy[-1, 1] for r in range(reps)]
    )
    assert abs(vals.mean() - exact) <= 4 * vals.std(ddof=1) / math.sqrt(reps)


def test_neighborhood_occupancy_spec_examples():
    star = Graph.from_edges(5, [(0, k) for k in range(1, 5)])
    assert neighborhood_occupancy(star, [2, 0, 0, 0, 0], 0, 2).q.tolist() == pytest.approx([1, 0.2, 0.2])
    g = generate("clique", 6)
    x = [0, 3, 1, 1, 2, 0]
    assert neighborhood_occupancy(g, x, 2, 4) == occupancy(x, 4)
    lone = Graph.from_edges(3, [(1, 2)])
    assert neighborhood_occupancy(lone, [2, 0, 5], 0, 3).q.tolist() == [1, 1, 1, 0]
    assert occupancy([0, 0, 0], 3).q.tolist() == [1, 0, 0, 0]


def test_event_count_matches_arrival_poisson_law():
    # from the empty state, events = 2 * arrivals - remaining tasks, and arrivals ~ Poisson(n lam T)
    g = generate("clique", 100)
    lam, T = 0.9, 10.0
    mean = 100 * lam * T
    for s in range(20):
        tr = run_sim(g, SimConfig(lam=lam, d=2, T=T, seed=s, sample_dt=T))
        arrivals = (tr.event_count + tr.final_queues.sum()) / 2
        assert arrivals == int(arrivals)
        assert abs(arrivals - mean) <= 5 * math.sqrt(mean)
