import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphsq import coupling
from graphsq.coupling import (
    CouplingError,
    YmaxViolation,
    _NetworkState,
    build_drivers,
    chaos_covariance,
    derive_seed,
    dominating_bounds,
    draw_sweep_graph,
    rate_sweep,
    resolve_p,
    run_coupled,
)
from graphsq.ctmc import SimConfig, run_sim
from graphsq.graph import Graph, generate
from graphsq.meanfield import default_truncation, integrate
from graphsq.routing import arrival_intensities
from graphsq.stats import Accumulator, batch_stats, covariance


def _sol(lam, d, T, q_init=(1.0, 0.0)):
    return integrate(list(q_init), lam, d, T=T, h=1e-2, B=default_truncation(lam, d))


# -- drivers and bounds ------------------------------------------------------------


def test_dominating_bounds():
    assert dominating_bounds(generate("clique", 6), 2).tolist() == [2.0] * 6
    star = Graph.from_edges(5, [(0, k) for k in range(1, 5)])
    ymax = dominating_bounds(star, 2)
    assert ymax[0] == pytest.approx(5.0) and ymax[1] == pytest.approx(2.0)


def test_drivers_sorted_and_bounded():
    ymax = np.array([2.0, 3.0, 2.5])
    drv = build_drivers(3, 0.8, 4.0, ymax, seed=1)
    assert np.all(np.diff(drv.times) >= 0) and np.all(drv.times <= 4.0)
    arr = drv.is_arrival
    assert np.all(drv.y[arr] <= ymax[drv.server[arr]]) and np.all(drv.y[~arr] == 0)


def test_driver_streams_are_per_server():
    # server 0's noise must not depend on how many servers there are
    a = build_drivers(2, 0.8, 5.0, np.array([2.0, 2.0]), seed=9)
    b = build_drivers(5, 0.8, 5.0, np.full(5, 2.0), seed=9)
    assert a.times[a.server == 0].tolist() == b.times[b.server == 0].tolist()


def test_driver_rates():
    n, lam, T = 400, 0.7, 10.0
    drv = build_drivers(n, lam, T, np.full(n, 2.0), seed=3)
    services = (~drv.is_arrival).sum()
    candidates = drv.is_arrival.sum()
    assert abs(services - n * T) <= 4 * math.sqrt(n * T)
    assert abs(candidates - n * T * lam * 2) <= 4 * math.sqrt(n * T * lam * 2)


# -- auxiliary network state -------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.sampled_from([2, 3, 4]), directed=st.booleans())
def test_histogram_intensity_tracks_exact(seed, d, directed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(d + 1, 14))
    fam = "directed_errg" if directed else "errg"
    g = generate(fam, n, seed=seed, p=0.7)
    if g.degrees.min() < d - 1:
        return
    net = _NetworkState(g, rng.integers(0, 3, n), d)
    for _ in range(30):
        k = int(rng.integers(n))
        if rng.random() < 0.55:
            net.increment(k)
        else:
            net.decrement(k)
        exact = arrival_intensities(g, net.x, d)
        got = [net.intensity(i) for i in range(n)]
        assert np.max(np.abs(exact - got)) <= 1e-12


def test_histogram_grows():
    g = generate("clique", 4)
    net = _NetworkState(g, np.zeros(4, dtype=int), 2)
    for _ in range(30):
        net.increment(0)
    assert net.x[0] == 30
    assert net.intensity(0) == pytest.approx(arrival_intensities(g, net.x, 2)[0])


# -- coupled runs -------------------------------------------------------------


def test_mkv_control_has_zero_discrepancy():
    g = generate("errg", 80, seed=5, p=0.3)
    cfg = SimConfig(lam=0.9, d=2, T=5.0, seed=7)
    res = run_coupled(g, cfg, _sol(0.9, 2, 5.0), prelimit="mkv")
    assert res.sup_abs.max() == 0 and res.mean_sup2 == 0.0
    assert np.array_equal(res.final_prelimit, res.final_limit)


def test_pure_death_has_zero_discrepancy():
    g = generate("cycle", 40)
    cfg = SimConfig(lam=0.0, d=2, T=5.0, seed=2, q_init=[1, 0.8, 0.5, 0.1])
    res = run_coupled(g, cfg, _sol(0.0, 2, 5.0, cfg.q_init.q))
    assert res.mean_sup2 == 0.0 and res.candidates == 0


def test_coupled_run_deterministic():
    g = generate("circulant", 60, k=4)
    cfg = SimConfig(lam=0.9, d=2, T=4.0, seed=12)
    sol = _sol(0.9, 2, 4.0)
    a, b = run_coupled(g, cfg, sol), run_coupled(g, cfg, sol)
    assert np.array_equal(a.sup_abs, b.sup_abs) and np.array_equal(a.final_prelimit, b.final_prelimit)


def test_tagged_subset_does_not_change_network():
    g = generate("errg", 50, seed=1, p=0.3)
    cfg = SimConfig(lam=0.9, d=2, T=4.0, seed=4)
    sol = _sol(0.9, 2, 4.0)
    full = run_coupled(g, cfg, sol)
    part = run_coupled(g, cfg, sol, tagged=[3, 17])
    assert np.array_equal(full.final_prelimit, part.final_prelimit)
    assert part.sup_abs.tolist() == full.sup_abs[[3, 17]].tolist()


def test_degree_precondition():
    g = Graph.from_edges(3, [(0, 1)])
    with pytest.raises(CouplingError):
        run_coupled(g, SimConfig(lam=0.5, d=2, T=1.0, seed=0), _sol(0.5, 2, 1.0))


def test_short_ode_rejected():
    g = generate("clique", 5)
    with pytest.raises(CouplingError):
        run_coupled(g, SimConfig(lam=0.5, d=2, T=2.0, seed=0), _sol(0.5, 2, 1.0))


def test_ymax_violation_detected(monkeypatch):
    g = generate("clique", 10)
    monkeypatch.setattr(coupling, "dominating_bounds", lambda g, d: np.full(g.n_vertices, 0.5))
    with pytest.raises(YmaxViolation):
        run_coupled(g, SimConfig(lam=0.9, d=2, T=2.0, seed=0), _sol(0.9, 2, 2.0))


def test_network_alone_matches_gillespie_in_law():
    g = generate("errg", 20, seed=3, p=0.4)
    lam, d, T, reps = 0.9, 2, 2.0, 500
    prm = []
    gil = []
    for r in range(reps):
        cfg = SimConfig(lam=lam, d=d, T=T, seed=r, sample_dt=T)
        prm.append(np.mean(run_coupled(g, cfg, None).final_prelimit >= 2))
        gil.append(run_sim(g, cfg).occupancy[-1, 2])
    se = math.hypot(np.std(prm, ddof=1), np.std(gil, ddof=1)) / math.sqrt(reps)
    assert abs(np.mean(prm) - np.mean(gil)) <= 4 * se


def test_discrepancy_shrinks_with_n():
    lam, d, T = 0.9, 2, 3.0
    sol = _sol(lam, d, T)
    means = []
    for n in (30, 300):
        vals = [run_coupled(generate("clique", n), SimConfig(lam=lam, d=d, T=T, seed=s), sol).mean_sup2 for s in range(6)]
        means.append(np.mean(vals))
    assert means[1] < means[0]


@pytest.mark.slow
def test_clique_discrepancy_256_vs_1024():
    lam, d, T = 0.9, 2, 5.0
    rows = rate_sweep("clique", [256, 1024], SimConfig(lam=lam, d=d, T=T, seed=21), 50, _sol(lam, d, T))
    assert rows[1].mean_sup2 < rows[0].mean_sup2


@pytest.mark.slow
def test_clique_rate_sweep_non_increasing():
    lam, d, T = 0.9, 2, 5.0
    rows = rate_sweep("clique", [128, 512, 2048], SimConfig(lam=lam, d=d, T=T, seed=1), 8, _sol(lam, d, T))
    vals = [r.mean_sup2 for r in rows]
    assert vals[0] >= vals[1] >= vals[2]


# -- sweeps -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "spec,n,expected",
    [("n^-1/2", 100, 0.1), ("n^(-1/2)", 400, 0.05), ("logn/n", 100, math.log(100) / 100),
     ("log2n/n", 100, math.log(100) ** 2 / 100), ("3/n", 30, 0.1), ("0.25", 10, 0.25), ("n^-1/2", 1, 1.0)],
)
def test_resolve_p(spec, n, expected):
    assert resolve_p(spec, n) == pytest.approx(expected)


def test_resolve_p_rejects():
    with pytest.raises(ValueError):
        resolve_p("1.5", 10)
    with pytest.raises(ValueError):
        resolve_p("nonsense", 10)


def test_draw_sweep_graph():
    g, redraws = draw_sweep_graph("errg", 100, 0.1, 2, seed=5)
    assert g.degrees.min() >= 1 and redraws >= 0
    with pytest.raises(CouplingError):
        draw_sweep_graph("errg", 100, 0.001, 2, seed=5, max_redraws=3)


def test_derive_seed_distinct():
    seeds = {derive_seed(1, n, r) for n in (256, 1024) for r in range(50)}
    assert len(seeds) == 100


def test_rate_sweep_reproducible_and_frozen():
    cfg = SimConfig(lam=0.9, d=2, T=2.0, seed=3)
    sol = _sol(0.9, 2, 2.0)
    a = rate_sweep("errg", [64], cfg, 3, sol)
    b = rate_sweep("errg", [64], cfg, 3, sol)
    assert a[0].csv_row() == b[0].csv_row()
    row = a[0]
    assert row.product == pytest.approx(math.sqrt(64 * row.p) * row.mean_sup2)
    frozen = rate_sweep("errg", [64], cfg, 3, sol, freeze_graph=True)
    assert frozen[0].replications == 3 and frozen[0].seeds == row.seeds


# -- statistics -----------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40), st.data())
def test_accumulator_order_independent(values, data):
    perm = data.draw(st.permutations(values))
    cut = data.draw(st.integers(0, len(values)))
    whole = Accumulator().extend(values)
    parts = Accumulator().extend(perm[cut:]).merge(Accumulator().extend(perm[:cut]))
    assert (whole.mean, whole.variance) == (parts.mean, parts.variance)
    assert (whole.mean, whole.stderr) == batch_stats(perm)


def test_accumulator_values():
    acc = Accumulator().extend([1.0, 2.0, 3.0, 4.0])
    assert acc.mean == 2.5 and acc.variance == pytest.approx(5 / 3)
    assert acc.stderr == pytest.approx(math.sqrt(5 / 12))
    assert math.isnan(Accumulator().mean)
    one = Accumulator()
    one.add(1.0)
    assert one.mean == 1.0 and math.isnan(one.stderr)


def test_stderr_scales_inverse_sqrt():
    rng = np.random.default_rng(0)
    small = Accumulator().extend(rng.random(400).tolist()).stderr
    large = Accumulator().extend(rng.random(6400).tolist()).stderr
    assert small / large == pytest.approx(4.0, rel=0.1)


def test_covariance_examples():
    cov, se = covariance([1, 2, 3, 4], [2, 4, 6, 8])
    assert cov == pytest.approx(np.cov([1, 2, 3, 4], [2, 4, 6, 8])[0, 1])
    assert se > 0
    with pytest.raises(ValueError):
        covariance([1, 2], [1, 2])


# -- chaos ----------------------------------------------------------------------


def test_chaos_rows():
    g = generate("clique", 30)
    cfg = SimConfig(lam=0.9, d=2, T=2.0, seed=1)
    rows = chaos_covariance(g, cfg, [(0, 0), (0, 1)], 200)
    assert rows[0].cov > 0 and rows[0].reps == 200
    assert abs(rows[1].cov) < rows[0].cov


def test_chaos_mkv_control_independent():
    lam, d, T = 0.9, 2, 2.0
    cfg = SimConfig(lam=lam, d=d, T=T, seed=2)
    rows = chaos_covariance(None, cfg, [(0, 1), (2, 3), (1, 1)], 400, sol=_sol(lam, d, T), mkv_control=True)
    for r in rows[:2]:
        assert abs(r.cov) <= 4 * r.stderr
    assert rows[2].cov > 0
