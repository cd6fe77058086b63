"""Experiment harness: config parsing, seeded runs, deterministic tables.

Seed streams (master seed M):

  (M, 0, cell, restart)  stochastic search runs, cells in config order
  (M, 1, k)              k-th dataset drawn from a network
  engine-internal        see qbnsl.qaoa.optimize

Result tables are CSV with a leading '# config_sha256=... master_seed=...'
line and are byte-identical for identical config + master seed. Wall time and
environment details go to the JSON manifest sidecar (<out>.manifest.json),
which is the only non-deterministic output channel.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np
import yaml

from . import __version__ as _version
from .baselines import default_schedule, hill_climb, simulated_annealing_qubo, tabu_search
from .dataset import DiscreteDataset, read_csv_dataset
from .graphs import Dag, structural_hamming_distance
from .network import BayesianNetwork, load_bn
from .noise import NoiseModel
from .qaoa import ObjectiveConfig, OptimizerConfig, QaoaResult, run_restarts
from .qubo import Hamiltonian, build_hamiltonian, penalized_cost
from .scores import LocalScoreTable, build_score_table, exhaustive_best_dag

COLUMNS = (
    "cell",
    "algorithm",
    "params",
    "cost_mean",
    "cost_std",
    "cost_min",
    "iterations_mean",
    "iterations_std",
    "shd",
    "score",
    "arcs",
)

SA_LABEL = "SA (classical substitute)"


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def config_sha256(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _want(doc: dict, key: str, types, path: str, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigError(f"{path}.{key}: required field is missing")
        return default
    val = doc[key]
    if not isinstance(val, types) or isinstance(val, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        raise ConfigError(f"{path}.{key}: wrong type {type(val).__name__}")
    return val


def _check_keys(doc: dict, allowed, path: str) -> None:
    extra = set(doc) - set(allowed)
    if extra:
        raise ConfigError(f"{path}: unknown field(s) {sorted(extra)}")


def _number(doc, key, path, default=None, required=False, lo=None, hi=None):
    val = _want(doc, key, (int, float), path, default=default, required=required)
    if val is None:
        return None
    val = float(val)
    if lo is not None and val < lo or hi is not None and val > hi:
        raise ConfigError(f"{path}.{key}: {val} outside [{lo}, {hi}]")
    return val


def _int(doc, key, path, default=None, required=False, lo=None, hi=None):
    val = _want(doc, key, int, path, default=default, required=required)
    if val is None:
        return None
    if lo is not None and val < lo or hi is not None and val > hi:
        raise ConfigError(f"{path}.{key}: {val} outside [{lo}, {hi}]")
    return int(val)


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class TableResult:
    rows: list[dict]
    extra: dict


def _score_settings(cfg: dict, path: str) -> tuple[str, int, float]:
    kind = _want(cfg, "score", str, path, default="bic")
    if kind not in ("bic", "bdeu"):
        raise ConfigError(f"{path}.score: expected 'bic' or 'bdeu', got {kind!r}")
    max_parents = _int(cfg, "max_parents", path, default=2, lo=0, hi=2)
    ess = _number(cfg, "ess", path, default=1.0)
    if ess <= 0:
        raise ConfigError(f"{path}.ess: must be positive")
    return kind, max_parents, float(ess)


def _load_dataset(cfg: dict, path: str) -> DiscreteDataset:
    ds_path = _want(cfg, "dataset", str, path, required=True)
    return read_csv_dataset(ds_path)


def _qaoa_cells(
    ham: Hamiltonian,
    depth: int,
    alpha: float,
    shots: int,
    restarts: int,
    maxiter: int,
    seed,
    noise: NoiseModel | None,
    override: bool,
) -> list[QaoaResult]:
    cfg = ObjectiveConfig(shots=shots, alpha=alpha, override_qubit_ceiling=override)
    opt = OptimizerConfig(maxiter=maxiter)
    return run_restarts(ham, depth, cfg, restarts, seed, noise=noise, opt=opt)


def _pool_size(cfg: dict, path: str, num_cells: int) -> int:
    workers = _int(cfg, "workers", path, default=None, lo=1)
    if workers is None:
        workers = min(4, os.cpu_count() or 1)
    return min(workers, num_cells)


def _run_cells(worker, arglist, workers: int) -> list:
    """Run sweep cells in a bounded process pool; results come back in
    submission (= config) order no matter which cell finishes first. Each
    cell is a pure function of its arguments, so the table is identical to a
    sequential run."""
    if workers <= 1 or len(arglist) <= 1:
        return [worker(a) for a in arglist]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, a) for a in arglist]
        return [f.result() for f in futures]


def _aggregate(values) -> tuple[float, float, float]:
    arr = np.asarray(list(values), dtype=np.float64)
    return float(arr.mean()), float(arr.std()), float(arr.min())


def _pick_best(results: list[QaoaResult]) -> QaoaResult:
    best = results[0]
    for r in results[1:]:
        if r.best_cost < best.best_cost:
            best = r
    return best


def _arc_string(dag: Dag | None) -> str:
    if dag is None:
        return ""
    return ";".join(f"{u}->{v}" for u, v in dag.arcs())


def run_score(cfg: dict, master_seed: int, override: bool) -> TableResult:
    _check_keys(cfg, {"dataset", "score", "max_parents", "ess"}, "score")
    kind, max_parents, ess = _score_settings(cfg, "score")
    data = _load_dataset(cfg, "score")
    table = build_score_table(data, kind=kind, max_parents=max_parents, ess=ess)
    rows = []
    for i in range(table.n):
        keys = [K for (node, K) in table.entries if node == i]
        for K in sorted(keys, key=lambda K: (len(K), tuple(sorted(K)))):
            rows.append(
                {
                    "cell": f"{data.names[i]}",
                    "algorithm": kind,
                    "params": "parents=" + ",".join(data.names[j] for j in sorted(K)),
                    "score": table.entries[(i, K)],
                }
            )
    return TableResult(rows=rows, extra={})


_LEARN_KEYS = {
    "dataset", "score", "max_parents", "ess", "algorithm", "restarts",
    "depth", "alpha", "shots", "maxiter", "sa_steps", "histogram_out",
}


def run_learn(cfg: dict, master_seed: int, override: bool) -> TableResult:
    _check_keys(cfg, _LEARN_KEYS, "learn")
    kind, max_parents, ess = _score_settings(cfg, "learn")
    algorithm = _want(cfg, "algorithm", str, "learn", required=True)
    data = _load_dataset(cfg, "learn")
    table = build_score_table(data, kind=kind, max_parents=max_parents, ess=ess)
    row: dict = {"cell": "learn", "algorithm": algorithm, "params": ""}
    extra: dict = {}
    if algorithm == "exhaustive":
        dag, score = exhaustive_best_dag(table)
        row.update(score=score, arcs=_arc_string(dag))
    elif algorithm == "hill-climb":
        res = hill_climb(table, seed=(master_seed, 0, 0, 0))
        row.update(score=res.score, arcs=_arc_string(res.dag), iterations_mean=float(res.iterations))
    elif algorithm == "tabu":
        res = tabu_search(table, seed=(master_seed, 0, 0, 0))
        row.update(score=res.score, arcs=_arc_string(res.dag), iterations_mean=float(res.iterations))
    elif algorithm == "sa":
        ham = build_hamiltonian(table)
        restarts = _int(cfg, "restarts", "learn", default=10, lo=1)
        steps = _int(cfg, "sa_steps", "learn", default=20000, lo=1)
        results = [
            simulated_annealing_qubo(ham, default_schedule(ham, steps), (master_seed, 0, 0, j))
            for j in range(restarts)
        ]
        costs = [r.best_cost for r in results]
        mean, std, mn = _aggregate(costs)
        best = results[int(np.argmin(costs))]
        from .qubo import decode

        decoded = decode(best.best_bits, ham.layout)
        dag = decoded.dag() if decoded.is_acyclic() else None
        row.update(
            algorithm=SA_LABEL,
            cost_mean=mean, cost_std=std, cost_min=mn,
            iterations_mean=float(steps), iterations_std=0.0,
            arcs=_arc_string(dag),
            score=table.network_score(dag) if dag is not None else "",
        )
    elif algorithm == "qaoa":
        ham = build_hamiltonian(table)
        depth = _int(cfg, "depth", "learn", default=4, lo=1)
        alpha = _number(cfg, "alpha", "learn", default=1.0, lo=1e-9, hi=1.0)
        shots = _int(cfg, "shots", "learn", default=1024, lo=1)
        restarts = _int(cfg, "restarts", "learn", default=10, lo=1)
        maxiter = _int(cfg, "maxiter", "learn", default=500, lo=4 * depth)
        results = _qaoa_cells(
            ham, depth, alpha, shots, restarts, maxiter, (master_seed, 0, 0), None, override
        )
        mean, std, mn = _aggregate(r.best_objective for r in results)
        it_mean, it_std, _ = _aggregate(r.iterations for r in results)
        best = _pick_best(results)
        dag = best.best_dag()
        row.update(
            params=f"depth={depth} alpha={alpha} shots={shots} restarts={restarts}",
            cost_mean=mean, cost_std=std, cost_min=mn,
            iterations_mean=it_mean, iterations_std=it_std,
            arcs=_arc_string(dag),
            score=table.network_score(dag) if dag is not None else "",
        )
        extra["qaoa_best"] = best
        extra["hamiltonian"] = ham
    else:
        raise ConfigError(
            "learn.algorithm: expected one of exhaustive/hill-climb/tabu/sa/qaoa, "
            f"got {algorithm!r}"
        )
    return TableResult(rows=[row], extra=extra)


def run_sample(cfg: dict, master_seed: int, override: bool) -> tuple[BayesianNetwork, DiscreteDataset]:
    _check_keys(cfg, {"network", "rows"}, "sample")
    bn_path = _want(cfg, "network", str, "sample", required=True)
    rows = _int(cfg, "rows", "sample", required=True, lo=1)
    bn = load_bn(bn_path)
    return bn, bn.forward_sample(rows, (master_seed, 1, 0))


_SWEEP_PA_KEYS = {
    "dataset", "score", "max_parents", "ess", "depths", "alphas",
    "shots", "restarts", "maxiter", "workers",
}


def _pa_cell(args) -> dict:
    c, ham, depth, alpha, shots, restarts, maxiter, seed, override = args
    results = _qaoa_cells(ham, depth, alpha, shots, restarts, maxiter, seed, None, override)
    mean, std, mn = _aggregate(r.best_objective for r in results)
    it_mean, it_std, _ = _aggregate(r.iterations for r in results)
    ent_mean, _, _ = _aggregate(r.final_entropy() for r in results)
    return {
        "cell": c,
        "algorithm": "qaoa",
        "params": f"depth={depth} alpha={alpha!r} entropy_mean={ent_mean!r}",
        "cost_mean": mean, "cost_std": std, "cost_min": mn,
        "iterations_mean": it_mean, "iterations_std": it_std,
    }


def run_sweep_pa(cfg: dict, master_seed: int, override: bool) -> TableResult:
    _check_keys(cfg, _SWEEP_PA_KEYS, "sweep-pa")
    kind, max_parents, ess = _score_settings(cfg, "sweep-pa")
    depths = _want(cfg, "depths", list, "sweep-pa", required=True)
    alphas = _want(cfg, "alphas", list, "sweep-pa", required=True)
    shots = _int(cfg, "shots", "sweep-pa", default=1024, lo=1)
    restarts = _int(cfg, "restarts", "sweep-pa", default=10, lo=1)
    maxiter = _int(cfg, "maxiter", "sweep-pa", default=500, lo=8)
    data = _load_dataset(cfg, "sweep-pa")
    table = build_score_table(data, kind=kind, max_parents=max_parents, ess=ess)
    ham = build_hamiltonian(table)
    arglist = []
    for c, (depth, alpha) in enumerate(product(depths, alphas)):
        if not isinstance(depth, int) or depth < 1:
            raise ConfigError(f"sweep-pa.depths: bad entry {depth!r}")
        if not isinstance(alpha, (int, float)) or not 0 < alpha <= 1:
            raise ConfigError(f"sweep-pa.alphas: bad entry {alpha!r}")
        arglist.append(
            (c, ham, depth, float(alpha), shots, restarts, maxiter, (master_seed, 0, c), override)
        )
    rows = _run_cells(_pa_cell, arglist, _pool_size(cfg, "sweep-pa", len(arglist)))
    return TableResult(rows=rows, extra={})


_SWEEP_NOISE_KEYS = {
    "dataset", "score", "max_parents", "ess", "depth", "alpha", "shots",
    "restarts", "maxiter", "channels", "log10_omegas", "omegas", "workers",
}


def _noise_cell(args) -> dict:
    c, ham, channel, omega, depth, alpha, shots, restarts, maxiter, seed, override = args
    noise = NoiseModel.single(channel, omega)
    results = _qaoa_cells(ham, depth, alpha, shots, restarts, maxiter, seed, noise, override)
    mean, std, mn = _aggregate(r.best_objective for r in results)
    it_mean, it_std, _ = _aggregate(r.iterations for r in results)
    return {
        "cell": c,
        "algorithm": "qaoa",
        "params": f"channel={channel} omega={omega!r} depth={depth} alpha={alpha!r}",
        "cost_mean": mean, "cost_std": std, "cost_min": mn,
        "iterations_mean": it_mean, "iterations_std": it_std,
    }


def run_sweep_noise(cfg: dict, master_seed: int, override: bool) -> TableResult:
    _check_keys(cfg, _SWEEP_NOISE_KEYS, "sweep-noise")
    kind, max_parents, ess = _score_settings(cfg, "sweep-noise")
    depth = _int(cfg, "depth", "sweep-noise", default=3, lo=1)
    alpha = _number(cfg, "alpha", "sweep-noise", default=0.5, lo=1e-9, hi=1.0)
    shots = _int(cfg, "shots", "sweep-noise", default=256, lo=1)
    restarts = _int(cfg, "restarts", "sweep-noise", default=20, lo=1)
    maxiter = _int(cfg, "maxiter", "sweep-noise", default=120, lo=8)
    channels = _want(cfg, "channels", list, "sweep-noise", required=True)
    if "omegas" in cfg and "log10_omegas" in cfg:
        raise ConfigError("sweep-noise: give either omegas or log10_omegas, not both")
    if "omegas" in cfg:
        omegas = [float(w) for w in _want(cfg, "omegas", list, "sweep-noise")]
    elif "log10_omegas" in cfg:
        omegas = [10.0 ** float(e) for e in _want(cfg, "log10_omegas", list, "sweep-noise")]
    else:
        raise ConfigError("sweep-noise: omegas or log10_omegas is required")
    for w in omegas:
        if not 0.0 <= w <= 1.0:
            raise ConfigError(f"sweep-noise: omega {w} outside [0, 1]")
    for ch in channels:
        try:
            NoiseModel.single(str(ch), 0.0)
        except Exception as exc:
            raise ConfigError(f"sweep-noise.channels: {exc}") from None
    data = _load_dataset(cfg, "sweep-noise")
    table = build_score_table(data, kind=kind, max_parents=max_parents, ess=ess)
    ham = build_hamiltonian(table)
    arglist = [
        (c, ham, str(channel), float(omega), depth, alpha, shots, restarts, maxiter,
         (master_seed, 0, c), override)
        for c, (channel, omega) in enumerate(product(channels, omegas))
    ]
    rows = _run_cells(_noise_cell, arglist, _pool_size(cfg, "sweep-noise", len(arglist)))
    return TableResult(rows=rows, extra={})


_COMPARE_KEYS = {"network", "nodes", "sample_sizes", "score", "max_parents", "ess", "algorithms"}
_COMPARE_ALG_KEYS = {"name", "depth", "alpha", "shots", "restarts", "maxiter", "steps"}


def run_compare(cfg: dict, master_seed: int, override: bool) -> TableResult:
    _check_keys(cfg, _COMPARE_KEYS, "compare")
    kind, max_parents, ess = _score_settings(cfg, "compare")
    bn = load_bn(_want(cfg, "network", str, "compare", required=True))
    if "nodes" in cfg:
        bn = bn.subnetwork([str(x) for x in _want(cfg, "nodes", list, "compare")])
    truth = bn.dag
    sizes = _want(cfg, "sample_sizes", list, "compare", required=True)
    algs = _want(cfg, "algorithms", list, "compare", required=True)
    for a in algs:
        if not isinstance(a, dict) or "name" not in a:
            raise ConfigError("compare.algorithms: each entry needs a 'name'")
        _check_keys(a, _COMPARE_ALG_KEYS, f"compare.algorithms[{a.get('name')}]")
    rows = []
    cell = 0
    for s_idx, size in enumerate(sizes):
        size = int(size)
        data = bn.forward_sample(size, (master_seed, 1, s_idx))
        table = build_score_table(data, kind=kind, max_parents=max_parents, ess=ess)
        ham = None
        for alg in algs:
            name = alg["name"]
            row: dict = {"cell": cell, "params": f"rows={size}"}
            if name == "exhaustive":
                dag, score = exhaustive_best_dag(table)
                row.update(algorithm=name, score=score, arcs=_arc_string(dag),
                           shd=structural_hamming_distance(dag, truth))
            elif name == "hill-climb":
                res = hill_climb(table, seed=(master_seed, 0, cell, 0))
                row.update(algorithm=name, score=res.score, arcs=_arc_string(res.dag),
                           iterations_mean=float(res.iterations),
                           shd=structural_hamming_distance(res.dag, truth))
            elif name == "tabu":
                res = tabu_search(table, seed=(master_seed, 0, cell, 0))
                row.update(algorithm=name, score=res.score, arcs=_arc_string(res.dag),
                           iterations_mean=float(res.iterations),
                           shd=structural_hamming_distance(res.dag, truth))
            elif name == "sa":
                if ham is None:
                    ham = build_hamiltonian(table)
                restarts = int(alg.get("restarts", 10))
                steps = int(alg.get("steps", 20000))
                results = [
                    simulated_annealing_qubo(ham, default_schedule(ham, steps), (master_seed, 0, cell, j))
                    for j in range(restarts)
                ]
                costs = [r.best_cost for r in results]
                mean, std, mn = _aggregate(costs)
                from .qubo import decode

                best = results[int(np.argmin(costs))]
                decoded = decode(best.best_bits, ham.layout)
                dag = decoded.dag() if decoded.is_acyclic() else None
                row.update(
                    algorithm=SA_LABEL, cost_mean=mean, cost_std=std, cost_min=mn,
                    iterations_mean=float(steps), iterations_std=0.0,
                    arcs=_arc_string(dag),
                    score=table.network_score(dag) if dag is not None else "",
                    shd=structural_hamming_distance(dag, truth) if dag is not None else "",
                )
            elif name == "qaoa":
                if ham is None:
                    ham = build_hamiltonian(table)
                depth = int(alg.get("depth", 4))
                alpha = float(alg.get("alpha", 0.5))
                shots = int(alg.get("shots", 1024))
                restarts = int(alg.get("restarts", 10))
                maxiter = int(alg.get("maxiter", 300))
                results = _qaoa_cells(
                    ham, depth, alpha, shots, restarts, maxiter,
                    (master_seed, 0, cell), None, override,
                )
                mean, std, mn = _aggregate(r.best_objective for r in results)
                it_mean, it_std, _ = _aggregate(r.iterations for r in results)
                best = _pick_best(results)
                dag = best.best_dag()
                row.update(
                    algorithm=name,
                    params=f"rows={size} depth={depth} alpha={alpha!r} shots={shots}",
                    cost_mean=mean, cost_std=std, cost_min=mn,
                    iterations_mean=it_mean, iterations_std=it_std,
                    arcs=_arc_string(dag),
                    score=table.network_score(dag) if dag is not None else "",
                    shd=structural_hamming_distance(dag, truth) if dag is not None else "",
                )
            else:
                raise ConfigError(f"compare.algorithms: unknown algorithm {name!r}")
            rows.append(row)
            cell += 1
    return TableResult(rows=rows, extra={})


def write_table(path, rows: list[dict], doc: dict, master_seed: int) -> str:
    """Write the result table CSV; returns the config hash. Refuses to clobber
    an existing table written under a different config (mismatched replay)."""
    digest = config_sha256(doc)
    marker = f"# config_sha256={digest} master_seed={master_seed}"
    try:
        with open(path) as fh:
            first = fh.readline().strip()
        if first.startswith("# config_sha256="):
            old = first.split()[1].split("=", 1)[1]
            if old != digest:
                raise ConfigError(
                    f"{path}: exists with different config hash {old[:12]}... "
                    "(mismatched replay); refusing to overwrite"
                )
    except FileNotFoundError:
        pass
    lines = [marker, ",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(_csv_field(_fmt(row.get(col, ""))) for col in COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return digest


def _csv_field(s: str) -> str:
    if any(ch in s for ch in ",\"\n"):
        return '"' + s.replace('"', '""') + '"'
    return s


def write_manifest(out_path, doc: dict, master_seed: int, wall_time: float, command: str) -> None:
    manifest = {
        "command": command,
        "config": doc,
        "config_sha256": config_sha256(doc),
        "master_seed": master_seed,
        "seed_scheme": (
            "(M,0,cell,restart) search runs; (M,1,k) dataset draws; "
            "runs use (run,0) init, (run,1) all objective evaluations, "
            "(run,2) final histogram"
        ),
        "package_version": _version,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "wall_time_s": wall_time,
    }
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def emit_histogram(result: QaoaResult, ham: Hamiltonian, path) -> None:
    """CSV of the final histogram: bitstring, count, cost, decoded arcs,
    sorted by count descending (ties: bitstring ascending)."""
    from .qubo import decode

    items = sorted(result.final_histogram.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = ["bitstring,count,cost,arcs"]
    for bits, count in items:
        cost = penalized_cost(ham, bits)
        decoded = decode(bits, ham.layout)
        arcs = ";".join(f"{u}->{v}" for u, v in decoded.arcs())
        lines.append(f"{bits},{count},{_fmt(cost)},{_csv_field(arcs)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_task(task: str, cfg: dict, master_seed: int, out, override: bool, command: str) -> None:
    """Dispatch one CLI task and write its outputs."""
    start = time.monotonic()
    if task == "sample":
        bn, data = run_sample(cfg, master_seed, override)
        data.to_csv(out)
        write_manifest(out, cfg, master_seed, time.monotonic() - start, command)
        return
    runners = {
        "score": run_score,
        "learn": run_learn,
        "sweep-pa": run_sweep_pa,
        "sweep-noise": run_sweep_noise,
        "compare": run_compare,
    }
    if task not in runners:
        raise ConfigError(f"unknown task {task!r}")
    result = runners[task](cfg, master_seed, override)
    write_table(out, result.rows, cfg, master_seed)
    if task == "learn" and "histogram_out" in cfg and "qaoa_best" in result.extra:
        emit_histogram(result.extra["qaoa_best"], result.extra["hamiltonian"], cfg["histogram_out"])
    write_manifest(out, cfg, master_seed, time.monotonic() - start, command)
