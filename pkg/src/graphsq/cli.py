"""Command-line harness: ``graphsq <command> [options]``.

Options can also come from a TOML file given with ``--config``; top-level
keys apply to every command and a ``[<command>]`` table to one command.
Flags given on the command line win. The merged configuration is echoed into
``manifest.jsonl`` in the output directory.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or model
error (event budget, monotonicity abort, coupling failure).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from graphsq import __version__
from graphsq.coupling import (
    GRAPH_KEY,
    chaos_covariance,
    coupled_replication,
    derive_seed,
    resolve_p,
)
from graphsq.ctmc import SimConfig, run_sim
from graphsq.export import (
    COMPARE_HEADER,
    COVARIANCE_HEADER,
    SWEEP_HEADER,
    append_manifest,
    write_fixed_point,
    write_json,
    write_occupancy,
    write_rows,
    write_tagged,
)
from graphsq.graph import RANDOM_FAMILIES, Graph, condition1_check, generate, regularity_report
from graphsq.meanfield import (
    OccupancyVector,
    default_truncation,
    fixed_point,
    integrate,
    l1_distance,
)
from graphsq.stats import Accumulator

OUTPUT_ENV = "GRAPHSQ_OUTPUT_DIR"

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


DEFAULTS = {
    "lam": 0.9,
    "d": 2,
    "T": 10.0,
    "h": 0.01,
    "sample_dt": 0.1,
    "fallback": "self-only",
    "q_init": "1,0",
    "B": None,
    "jmax": None,
    "jobs": 1,
    "k": None,
    "p": None,
    "seed": None,
    "seeds": None,
    "graph": None,
    "graph_seed": None,
    "rr_method": "pairing",
    "tail_threshold": 1e-8,
    "max_events": 10**8,
}

COMMAND_DEFAULTS = {
    "graphgen": {"family": "clique", "n": 100, "out": None},
    "check-graph": {},
    "simulate": {"family": "clique", "n": 1000, "tagged": ""},
    "ode": {"start": None, "fixed_point": False},
    "compare": {"families": "clique", "n_list": "100,1000", "k": "sqrt"},
    "couple": {"family": "errg", "n_list": "256,1024,4096", "p_spec": "n^-1/2", "reps": 50, "T": 5.0,
               "freeze_graph": False, "max_redraws": 100},
    "chaos": {"family": "clique", "n": 1000, "pairs": "0-1", "f": "busy", "reps": 2000, "T": 5.0,
              "mkv_control": False},
    "summarize": {},
}


# -- parsing helpers ---------------------------------------------------------


def parse_int_list(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).split(",") if v.strip()]


def parse_seeds(cfg: dict) -> list[int]:
    """Seeds from ``seeds`` (``a:b`` range, comma list) or a single ``seed``."""
    spec = cfg.get("seeds")
    if spec is not None:
        if isinstance(spec, (list, tuple)):
            return [int(v) for v in spec]
        s = str(spec)
        if ":" in s:
            a, b = s.split(":", 1)
            return list(range(int(a), int(b)))
        return parse_int_list(s)
    if cfg.get("seed") is not None:
        return [int(cfg["seed"])]
    raise UsageError("this command is randomized: give --seed or --seeds")


def parse_q(s) -> OccupancyVector:
    if isinstance(s, OccupancyVector):
        return s
    vals = s if isinstance(s, (list, tuple)) else [float(v) for v in str(s).split(",")]
    return OccupancyVector(vals)


def parse_pairs(s) -> list[tuple[int, int]]:
    out = []
    for item in str(s).split(","):
        a, b = item.split("-")
        out.append((int(a), int(b)))
    return out


def resolve_k(spec, n: int) -> int | None:
    if spec is None:
        return None
    if str(spec) == "sqrt":
        return math.ceil(math.sqrt(n))
    return int(spec)


def graph_param(family: str, k, p) -> str:
    if family in ("circulant", "random_regular"):
        return f"k={k}"
    if family in ("errg", "directed_errg"):
        return f"p={p}"
    return ""


def build_graph(cfg: dict, n: int | None = None, seed: int | None = None) -> Graph:
    if cfg.get("graph"):
        return Graph.load(cfg["graph"])
    family = cfg["family"].replace("-", "_")
    n = int(cfg["n"]) if n is None else n
    k = resolve_k(cfg.get("k"), n)
    p = resolve_p(cfg["p"], n) if cfg.get("p") is not None else None
    gseed = cfg.get("graph_seed")
    if gseed is None:
        gseed = seed
    if family in RANDOM_FAMILIES and gseed is None:
        raise UsageError(f"{family} is random: give --graph-seed or --seed")
    return generate(family, n, gseed, k=k, p=p, method=cfg.get("rr_method", "pairing"))


def default_B(cfg: dict) -> int:
    if cfg.get("B") is not None:
        return int(cfg["B"])
    return default_truncation(float(cfg["lam"]), int(cfg["d"]))


def default_jmax(cfg: dict) -> int:
    if cfg.get("jmax") is not None:
        return int(cfg["jmax"])
    return 2 * default_B(cfg)


def out_dir(cfg: dict) -> Path:
    base = cfg.get("out_dir") or os.environ.get(OUTPUT_ENV) or "graphsq-out"
    p = Path(base)
    p.mkdir(parents=True, exist_ok=True)
    return p


def sim_config(cfg: dict, seed: int, tagged=()) -> SimConfig:
    return SimConfig(
        lam=float(cfg["lam"]),
        d=int(cfg["d"]),
        T=float(cfg["T"]),
        seed=seed,
        sample_dt=float(cfg["sample_dt"]),
        fallback=cfg["fallback"],
        q_init=parse_q(cfg["q_init"]),
        tagged=tuple(tagged),
        jmax=default_jmax(cfg),
        max_events=int(cfg["max_events"]),
    )


def _manifest(cfg: dict, command: str, started: float, **extra) -> dict:
    rec = {
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in sorted(cfg.items()) if k not in ("func", "config")},
        "wall_clock_s": round(time.time() - started, 3),
    }
    rec.update(extra)
    return rec


# -- commands -----------------------------------------------------------------


def cmd_graphgen(cfg: dict) -> int:
    started = time.time()
    family = cfg["family"].replace("-", "_")
    seed = None
    if family in RANDOM_FAMILIES:
        seed = parse_seeds(cfg)[0]
    g = build_graph(cfg, seed=seed)
    rep = regularity_report(g, int(cfg["d"]))
    dest = Path(cfg["out"]) if cfg.get("out") else out_dir(cfg) / f"graph-{family}-n{g.n_vertices}.edgelist"
    dest.parent.mkdir(parents=True, exist_ok=True)
    g.save(dest)
    _print_report(g, rep)
    print(f"edges: {g.n_edges}")
    print(f"wrote {dest}")
    append_manifest(dest.parent / "manifest.jsonl",
                    _manifest(cfg, "graphgen", started, seeds=[seed] if seed is not None else [],
                              outputs=[dest.name], report=rep.summary()))
    return 0


def _print_report(g: Graph, rep) -> None:
    ok, verdict = condition1_check(rep, g.n_vertices)
    for key, val in rep.summary().items():
        print(f"{key}: {val}")
    print(f"condition1: {verdict}")


def cmd_check_graph(cfg: dict) -> int:
    if not cfg.get("graph"):
        raise UsageError("check-graph needs --graph FILE")
    g = Graph.load(cfg["graph"])
    g.validate()
    print(f"n: {g.n_vertices}")
    print(f"directed: {int(g.directed)}")
    print(f"edges: {g.n_edges}")
    _print_report(g, regularity_report(g, int(cfg["d"])))
    return 0


def cmd_simulate(cfg: dict) -> int:
    started = time.time()
    seeds = parse_seeds(cfg)
    tagged = parse_int_list(cfg.get("tagged") or "")
    dest = out_dir(cfg)
    events, outputs = {}, []
    for seed in seeds:
        g = build_graph(cfg, seed=seed)
        sc = sim_config(cfg, seed, tagged)
        tr = run_sim(g, sc)
        occ = write_occupancy(dest / f"occupancy-seed{seed}.csv", tr.grid_times, tr.occupancy)
        outputs.append(occ.name)
        if tagged:
            outputs.append(write_tagged(dest / f"tagged-seed{seed}.csv", tr.tagged_paths).name)
        events[seed] = tr.event_count
        final = ",".join(repr(float(v)) for v in tr.occupancy[-1][:6])
        print(f"seed {seed}: events={tr.event_count} final q[0:6]=({final})")
    append_manifest(dest / "manifest.jsonl",
                    _manifest(cfg, "simulate", started, seeds=seeds, event_counts=events, outputs=outputs))
    return 0


def cmd_ode(cfg: dict) -> int:
    started = time.time()
    lam, d, T, h = float(cfg["lam"]), int(cfg["d"]), float(cfg["T"]), float(cfg["h"])
    B = default_B(cfg)
    if cfg.get("fixed_point") or cfg.get("start") == "fixed-point":
        try:
            qstar = fixed_point(lam, d, B)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        qstar = fixed_point(lam, d, B) if 0 < lam < 1 else None
    q0 = qstar if cfg.get("start") == "fixed-point" else parse_q(cfg["q_init"])
    sol = integrate(q0, lam, d, T, h, B, tail_threshold=float(cfg["tail_threshold"]))
    dest = out_dir(cfg)
    outputs = [write_occupancy(dest / "ode.csv", sol.times, sol.states).name]
    extra = {}
    if cfg.get("fixed_point"):
        outputs.append(write_fixed_point(dest / "fixed_point.csv", qstar.q).name)
    if qstar is not None:
        drift = max(l1_distance(s, qstar.q) for s in sol.states)
        extra["sup_l1_from_fixed_point"] = drift
        print(f"sup l1 distance from fixed point: {drift:.3e}")
    print(f"tail_mass_max: {sol.tail_mass_max:.3e}")
    for w in sol.warnings:
        print(f"warning: {w}")
    append_manifest(dest / "manifest.jsonl",
                    _manifest(cfg, "ode", started, seeds=[], outputs=outputs, B=B, h_used=sol.h,
                              tail_mass_max=sol.tail_mass_max, warnings=list(sol.warnings), **extra))
    return 0


def compare_cell(params: dict) -> dict:
    """One (family, n, seed) cell of the occupancy-vs-ODE comparison."""
    cfg = dict(params)
    seed, n = int(cfg["seed"]), int(cfg["n"])
    g = build_graph(cfg, n=n, seed=seed)
    rep = regularity_report(g, int(cfg["d"]))
    _, verdict = condition1_check(rep, n)
    sc = sim_config(cfg, seed)
    tr = run_sim(g, sc)
    sol = integrate(sc.q_init, sc.lam, sc.d, sc.T, float(cfg["h"]), default_B(cfg),
                    tail_threshold=float(cfg["tail_threshold"]))
    ref = np.array([sol.at(t) for t in tr.grid_times])
    sup = max(l1_distance(a, b) for a, b in zip(tr.occupancy, ref))
    return {
        "kind": "compare",
        "family": cfg["family"],
        "n": n,
        "param": graph_param(cfg["family"], resolve_k(cfg.get("k"), n), cfg.get("p")),
        "seed": seed,
        "sup_l1": sup,
        "grid": tr.grid_times,
        "occupancy": tr.occupancy,
        "reference": ref,
        "events": tr.event_count,
        "tail_mass_max": sol.tail_mass_max,
        "report": rep.summary(),
        "condition1": verdict,
    }


def _run_cells(func, tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(func, tasks))
    return [func(t) for t in tasks]


def cmd_compare(cfg: dict) -> int:
    started = time.time()
    seeds = parse_seeds(cfg)
    dest = out_dir(cfg)
    cells = dest / "cells"
    tasks, names = [], []
    for family in [f.strip() for f in str(cfg["families"]).split(",")]:
        for n in parse_int_list(cfg["n_list"]):
            for seed in seeds:
                name = cells / f"compare-{family}-n{n}-seed{seed}.json"
                if name.exists():
                    continue  # resumable sweep
                task = {k: v for k, v in cfg.items() if k != "func"}
                task.update(family=family, n=n, seed=seed)
                if family not in ("circulant", "random_regular"):
                    task["k"] = None
                tasks.append(task)
                names.append(name)
    for name, res in zip(names, _run_cells(compare_cell, tasks, int(cfg["jobs"]))):
        write_json(name, res)
    table = summarize_dir(dest)
    for row in table.get("compare", []):
        print(
            f"{row['family']:<14} n={row['n']:<6} {row['param']:<8} "
            f"sup_l1(mean path)={row['sup_l1_mean_path']:.4f} "
            f"mean sup_l1={row['mean_sup_l1']:.4f}+-{row['stderr_sup_l1']:.4f} "
            f"condition1: {row['condition1']}"
        )
    append_manifest(dest / "manifest.jsonl",
                    _manifest(cfg, "compare", started, seeds=seeds, outputs=["compare.csv"],
                              cells=[p.name for p in names]))
    return 0


def _couple_cell(task):
    family, n, p, sc, sol, seed, freeze, max_redraws = task
    mean_sup2, redraws = coupled_replication(family, n, p, sc, sol, seed, freeze, max_redraws)
    return {"mean_sup2": mean_sup2, "redraws": redraws}


def cmd_couple(cfg: dict) -> int:
    started = time.time()
    seed = parse_seeds(cfg)[0]
    dest = out_dir(cfg)
    cells = dest / "cells"
    family = cfg["family"].replace("-", "_")
    if family not in ("errg", "directed_errg", "clique"):
        raise UsageError("couple supports --family errg, directed-errg or clique")
    sc = sim_config(cfg, seed)
    sol = integrate(sc.q_init, sc.lam, sc.d, sc.T, float(cfg["h"]), default_B(cfg),
                    tail_threshold=float(cfg["tail_threshold"]))
    freeze = bool(cfg.get("freeze_graph"))
    tasks, names, meta = [], [], []
    for n in parse_int_list(cfg["n_list"]):
        p = 1.0 if family == "clique" else resolve_p(cfg["p_spec"], n)
        fseed = derive_seed(seed, n, GRAPH_KEY, 0) if freeze else None
        for r in range(int(cfg["reps"])):
            name = cells / f"couple-{family}-n{n}-rep{r}.json"
            rseed = derive_seed(seed, n, r)
            if name.exists():
                continue
            tasks.append((family, n, p, sc, sol, rseed, fseed, int(cfg["max_redraws"])))
            names.append(name)
            meta.append({"kind": "couple", "family": family, "n": n, "p": p, "rep": r, "seed": rseed,
                         "freeze_graph": freeze})
    for name, m, res in zip(names, meta, _run_cells(_couple_cell, tasks, int(cfg["jobs"]))):
        write_json(name, {**m, **res})
    table = summarize_dir(dest)
    for row in table.get("couple", []):
        print(f"n={row['n']:<6} p={row['p']:.5g} mean_sup2={row['mean_sup2']:.5f} "
              f"stderr={row['stderr']:.5f} product={row['product']:.4f}")
    redraws = sum(json.loads(Path(nm).read_text())["redraws"] for nm in names)
    append_manifest(dest / "manifest.jsonl",
                    _manifest(cfg, "couple", started, seeds=[seed], outputs=["couple.csv"], freeze_graph=freeze,
                              redraws=redraws, tail_mass_max=sol.tail_mass_max))
    return 0


def cmd_chaos(cfg: dict) -> int:
    started = time.time()
    seed = parse_seeds(cfg)[0]
    dest = out_dir(cfg)
    sc = sim_config(cfg, seed)
    pairs = parse_pairs(cfg["pairs"])
    mkv = bool(cfg.get("mkv_control"))
    g = None if mkv else build_graph(cfg, seed=seed)
    sol = None
    if mkv:
        sol = integrate(sc.q_init, sc.lam, sc.d, sc.T, float(cfg["h"]), default_B(cfg))
    rows = chaos_covariance(g, sc, pairs, int(cfg["reps"]), f=cfg["f"], sol=sol, mkv_control=mkv,
                            jobs=int(cfg["jobs"]))
    write_rows(dest / "chaos.csv", COVARIANCE_HEADER, [r.csv_row() for r in rows])
    for r in rows:
        if r.i == r.j:
            note = "variance"
        else:
            note = ("within" if abs(r.cov) <= 3 * r.stderr else "outside") + " 3 stderr"
        print(f"({r.i},{r.j}) cov={r.cov:.5f} stderr={r.stderr:.5f} reps={r.reps} [{note}]")
    append_manifest(dest / "manifest.jsonl",
                    _manifest(cfg, "chaos", started, seeds=[seed], outputs=["chaos.csv"], mkv_control=mkv))
    return 0


def summarize_dir(dest: Path) -> dict:
    """Aggregate every cell file under ``dest/cells`` into the summary CSVs."""
    cells = sorted((Path(dest) / "cells").glob("*.json"))
    compare, couple = {}, {}
    for path in cells:
        c = json.loads(path.read_text())
        if c["kind"] == "compare":
            compare.setdefault((c["family"], c["n"], c["param"]), []).append(c)
        elif c["kind"] == "couple":
            couple.setdefault((c["family"], c["n"]), []).append(c)
    out = {}
    if compare:
        rows = []
        for (family, n, param), group in sorted(compare.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
            group.sort(key=lambda c: c["seed"])
            mean_path = np.mean([np.asarray(c["occupancy"]) for c in group], axis=0)
            ref = np.asarray(group[0]["reference"])
            acc = Accumulator().extend(c["sup_l1"] for c in group)
            rows.append({
                "family": family,
                "n": n,
                "param": param,
                "seeds": len(group),
                "sup_l1_mean_path": max(l1_distance(a, b) for a, b in zip(mean_path, ref)),
                "mean_sup_l1": acc.mean,
                "stderr_sup_l1": acc.stderr if len(group) > 1 else 0.0,
                "condition1": group[0]["condition1"],
            })
        write_rows(Path(dest) / "compare.csv", COMPARE_HEADER, rows)
        out["compare"] = rows
    if couple:
        rows = []
        for (family, n), group in sorted(couple.items()):
            group.sort(key=lambda c: c["rep"])
            acc = Accumulator().extend(c["mean_sup2"] for c in group)
            p = group[0]["p"]
            rows.append({"n": n, "p": p, "mean_sup2": acc.mean, "stderr": acc.stderr,
                         "product": math.sqrt(n * p) * acc.mean})
        write_rows(Path(dest) / "couple.csv", SWEEP_HEADER, rows)
        out["couple"] = rows
    return out


def cmd_summarize(cfg: dict) -> int:
    src = Path(cfg.get("input") or out_dir(cfg))
    if not (src / "cells").is_dir():
        raise UsageError(f"no cells directory under {src}")
    table = summarize_dir(src)
    for kind, rows in table.items():
        print(f"{kind}: {len(rows)} rows -> {src / (kind + '.csv')}")
    return 0


COMMANDS = {
    "graphgen": cmd_graphgen,
    "check-graph": cmd_check_graph,
    "simulate": cmd_simulate,
    "ode": cmd_ode,
    "compare": cmd_compare,
    "couple": cmd_couple,
    "chaos": cmd_chaos,
    "summarize": cmd_summarize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"graphsq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def new(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="TOML file with option values")
        p.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./graphsq-out)")
        return p

    def graph_opts(p):
        p.add_argument("--graph", help="edge-list file (overrides --family)")
        p.add_argument("--family", help="clique, cycle, circulant, random-regular, errg, directed-errg")
        p.add_argument("--n", type=int)
        p.add_argument("--k", help="degree parameter; 'sqrt' means ceil(sqrt(n))")
        p.add_argument("--p", help="edge probability or tag such as n^-1/2")
        p.add_argument("--graph-seed", type=int)
        p.add_argument("--rr-method", choices=["pairing", "sequential"], help="random-regular sampler")

    def model_opts(p):
        p.add_argument("--lam", type=float, help="arrival rate per server")
        p.add_argument("--d", type=int, help="number of choices")
        p.add_argument("--T", type=float, help="time horizon")
        p.add_argument("--q-init", help="initial tail vector, e.g. 1,0.5")
        p.add_argument("--h", type=float, help="RK4 step")
        p.add_argument("--B", type=int, help="ODE truncation level")
        p.add_argument("--tail-threshold", type=float)

    def seed_opts(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--seeds", help="range a:b or comma list")
        p.add_argument("--jobs", type=int, help="parallel worker processes")

    def sim_opts(p):
        p.add_argument("--sample-dt", type=float)
        p.add_argument("--fallback", choices=["self-only", "closed-neighborhood-jsq"])
        p.add_argument("--jmax", type=int)
        p.add_argument("--max-events", type=int)

    p = new("graphgen", "generate a graph and report its degree regularity")
    graph_opts(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--out", help="edge-list path")

    p = new("check-graph", "report degree regularity of an edge-list file")
    p.add_argument("--graph")
    p.add_argument("--d", type=int)

    p = new("simulate", "simulate the network and write occupancy paths")
    graph_opts(p)
    model_opts(p)
    seed_opts(p)
    sim_opts(p)
    p.add_argument("--tagged", help="comma list of servers whose paths are recorded")

    p = new("ode", "integrate the mean-field ODE")
    model_opts(p)
    p.add_argument("--start", choices=["fixed-point", "q-init"])
    p.add_argument("--fixed-point", action="store_true", help="also write the fixed point")

    p = new("compare", "sup-l1 distance between simulated occupancy and the ODE")
    graph_opts(p)
    model_opts(p)
    seed_opts(p)
    sim_opts(p)
    p.add_argument("--families", help="comma list of families")
    p.add_argument("--n-list", help="comma list of system sizes")

    p = new("couple", "annealed coupling-error sweep")
    graph_opts(p)
    model_opts(p)
    seed_opts(p)
    sim_opts(p)
    p.add_argument("--n-list")
    p.add_argument("--p-spec", help="edge probability tag resolved per n, e.g. n^-1/2")
    p.add_argument("--reps", type=int)
    p.add_argument("--freeze-graph", action="store_true")
    p.add_argument("--max-redraws", type=int)

    p = new("chaos", "pairwise covariance of tagged servers at time T")
    graph_opts(p)
    model_opts(p)
    seed_opts(p)
    sim_opts(p)
    p.add_argument("--pairs", help="comma list of i-j pairs")
    p.add_argument("--f", choices=["busy", "ge2", "length"])
    p.add_argument("--reps", type=int)
    p.add_argument("--mkv-control", action="store_true")

    p = new("summarize", "rebuild summary tables from cell files")
    p.add_argument("--input", help="output directory of a previous sweep")
    return parser


def effective_config(args: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(args).items() if k != "command"}
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[args.command])
    if given.get("config"):
        with open(given["config"], "rb") as fh:
            data = tomllib.load(fh)
        cfg.update({k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)})
        cfg.update({k.replace("-", "_"): v for k, v in data.get(args.command, {}).items()})
    cfg.update(given)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"graphsq {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"graphsq {args.command}: runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
