"""Discrete Bayesian networks: YAML serialization, forward sampling, subnetworks.

File schema (YAML):

    network: optional name
    nodes:                       # order fixes the node indexing
      - name: A
        states: [no, yes]       # >= 2 states, order fixes the state coding
    arcs:
      - [A, B]                  # arc A -> B, the arc set must be acyclic
    cpts:
      A:
        - given: {}             # one row per parent configuration
          p: [0.7, 0.3]         # probabilities in state order, sum 1 +- 1e-6
      B:
        - given: {A: no}
          p: [0.9, 0.1]
        - given: {A: yes}
          p: [0.2, 0.8]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .dataset import DiscreteDataset
from .graphs import CycleError, Dag

ROW_SUM_TOL = 1e-6


class NetworkError(ValueError):
    """Malformed network definition or file."""


@dataclass(frozen=True)
class BayesianNetwork:
    """Nodes 0..n-1 with states, a DAG, and one CPT per node.

    cpts[i] has shape (q_i, r_i): one row per configuration of the parents of
    node i (parents in ascending index order, the last one varying fastest),
    probabilities in state order. Rows are normalized exactly on construction.
    """

    names: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    dag: Dag
    cpts: tuple[np.ndarray, ...] = field(hash=False)
    title: str = ""

    def __post_init__(self) -> None:
        n = len(self.names)
        if n == 0:
            raise NetworkError("network needs at least one node")
        if len(set(self.names)) != n:
            raise NetworkError("duplicate node names")
        if self.dag.n != n or len(self.states) != n or len(self.cpts) != n:
            raise NetworkError("names/states/dag/cpts sizes disagree")
        fixed = []
        for i in range(n):
            r_i = len(self.states[i])
            if r_i < 2:
                raise NetworkError(f"node {self.names[i]}: needs >= 2 states")
            q = 1
            for p in self.dag.parents(i):
                q *= len(self.states[p])
            cpt = np.asarray(self.cpts[i], dtype=np.float64)
            if cpt.shape != (q, r_i):
                raise NetworkError(
                    f"node {self.names[i]}: CPT shape {cpt.shape} != ({q}, {r_i})"
                )
            if np.any(cpt < 0):
                raise NetworkError(f"node {self.names[i]}: negative probability")
            sums = cpt.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
                raise NetworkError(
                    f"node {self.names[i]}: CPT rows must sum to 1 within {ROW_SUM_TOL}"
                )
            cpt = cpt / sums[:, None]
            cpt.setflags(write=False)
            fixed.append(cpt)
        object.__setattr__(self, "cpts", tuple(fixed))

    @property
    def n(self) -> int:
        return len(self.names)

    def node_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise NetworkError(f"unknown node {name!r}") from None

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)

    def parent_config_index(self, i: int, codes: np.ndarray) -> np.ndarray:
        """Mixed-radix parent configuration index for each row of `codes` (N x n)."""
        idx = np.zeros(codes.shape[0], dtype=np.int64)
        for p in self.dag.parents(i):
            idx = idx * len(self.states[p]) + codes[:, p]
        return idx

    def forward_sample(self, num_rows: int, seed) -> DiscreteDataset:
        """Ancestral sampling: nodes in topological order (ties by index),
        num_rows categorical draws per node, seeded and reproducible."""
        if num_rows < 1:
            raise NetworkError("num_rows must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        codes = np.zeros((num_rows, self.n), dtype=np.int64)
        for i in self.dag.topological_order():
            cum = np.cumsum(self.cpts[i], axis=1)
            rows = cum[self.parent_config_index(i, codes)]
            u = rng.random(num_rows)
            codes[:, i] = np.minimum(
                (rows <= u[:, None]).sum(axis=1), len(self.states[i]) - 1
            )
        return DiscreteDataset(codes, self.cardinalities(), self.names, self.states)

    def subnetwork(self, names) -> "BayesianNetwork":
        """Restriction to an ancestrally closed node subset.

        Kept nodes retain their original relative order, so parent orderings
        and CPT rows carry over unchanged. Raises if some kept node has a
        parent outside the subset.
        """
        keep = sorted(self.node_index(name) for name in names)
        if len(set(keep)) != len(list(names)):
            raise NetworkError("duplicate names in subnetwork request")
        keep_set = set(keep)
        for i in keep:
            missing = [self.names[p] for p in self.dag.parents(i) if p not in keep_set]
            if missing:
                raise NetworkError(
                    f"subnetwork is not ancestrally closed: {self.names[i]} "
                    f"has dropped parent(s) {missing}"
                )
        remap = {old: new for new, old in enumerate(keep)}
        m = np.zeros((len(keep), len(keep)), dtype=np.uint8)
        for u, v in self.dag.arcs():
            if u in keep_set and v in keep_set:
                m[remap[u], remap[v]] = 1
        return BayesianNetwork(
            names=tuple(self.names[i] for i in keep),
            states=tuple(self.states[i] for i in keep),
            dag=Dag(m),
            cpts=tuple(self.cpts[i] for i in keep),
            title=self.title,
        )


def _cpt_from_rows(bn_names, bn_states, parents, r_i, rows, node_name) -> np.ndarray:
    q = 1
    for p in parents:
        q *= len(bn_states[p])
    cpt = np.full((q, r_i), np.nan)
    for row in rows:
        if not isinstance(row, dict) or "given" not in row or "p" not in row:
            raise NetworkError(f"cpts.{node_name}: each row needs 'given' and 'p'")
        given = row["given"] or {}
        if set(given) != {bn_names[p] for p in parents}:
            raise NetworkError(
                f"cpts.{node_name}: 'given' keys {sorted(given)} != parents "
                f"{sorted(bn_names[p] for p in parents)}"
            )
        idx = 0
        for p in parents:
            label = str(given[bn_names[p]])
            if label not in bn_states[p]:
                raise NetworkError(
                    f"cpts.{node_name}: unknown state {label!r} of {bn_names[p]}"
                )
            idx = idx * len(bn_states[p]) + bn_states[p].index(label)
        if not np.all(np.isnan(cpt[idx])):
            raise NetworkError(f"cpts.{node_name}: duplicate row for {given}")
        p_vec = row["p"]
        if len(p_vec) != r_i:
            raise NetworkError(f"cpts.{node_name}: expected {r_i} probabilities")
        cpt[idx] = [float(x) for x in p_vec]
    if np.any(np.isnan(cpt)):
        raise NetworkError(f"cpts.{node_name}: missing parent configuration row(s)")
    return cpt


def load_bn(path) -> BayesianNetwork:
    """Read a network from the YAML schema in the module docstring."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise NetworkError(f"{path}: top level must be a mapping")
    for key in ("nodes", "arcs", "cpts"):
        if key not in doc:
            raise NetworkError(f"{path}: missing section {key!r}")
    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise NetworkError(f"{path}: 'nodes' must be a non-empty list")
    names, states = [], []
    for entry in nodes:
        if not isinstance(entry, dict) or "name" not in entry or "states" not in entry:
            raise NetworkError(f"{path}: each node needs 'name' and 'states'")
        names.append(str(entry["name"]))
        states.append(tuple(str(s) for s in entry["states"]))
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise NetworkError(f"{path}: duplicate node names")
    m = np.zeros((len(names), len(names)), dtype=np.uint8)
    for arc in doc["arcs"] or []:
        if not isinstance(arc, (list, tuple)) or len(arc) != 2:
            raise NetworkError(f"{path}: arcs must be [from, to] pairs")
        u, v = str(arc[0]), str(arc[1])
        if u not in index or v not in index:
            raise NetworkError(f"{path}: arc references unknown node {arc}")
        m[index[u], index[v]] = 1
    try:
        dag = Dag(m)
    except CycleError:
        raise NetworkError(f"{path}: arcs contain a directed cycle") from None
    cpts = []
    for i, name in enumerate(names):
        if name not in doc["cpts"]:
            raise NetworkError(f"{path}: missing CPT for node {name}")
        parents = dag.parents(i)
        cpts.append(
            _cpt_from_rows(names, states, parents, len(states[i]), doc["cpts"][name], name)
        )
    return BayesianNetwork(
        names=tuple(names),
        states=tuple(states),
        dag=dag,
        cpts=tuple(cpts),
        title=str(doc.get("network", "")),
    )


def save_bn(bn: BayesianNetwork, path) -> None:
    """Write a network in the same YAML schema load_bn reads."""
    doc: dict = {}
    if bn.title:
        doc["network"] = bn.title
    doc["nodes"] = [
        {"name": name, "states": list(states)} for name, states in zip(bn.names, bn.states)
    ]
    doc["arcs"] = [[bn.names[u], bn.names[v]] for u, v in bn.dag.arcs()]
    cpts: dict = {}
    for i, name in enumerate(bn.names):
        parents = bn.dag.parents(i)
        rows = []
        q = bn.cpts[i].shape[0]
        for idx in range(q):
            given = {}
            rem = idx
            for p in reversed(parents):
                r_p = len(bn.states[p])
                given[bn.names[p]] = bn.states[p][rem % r_p]
                rem //= r_p
            rows.append(
                {
                    "given": {bn.names[p]: given[bn.names[p]] for p in parents},
                    "p": [round(float(x), 12) for x in bn.cpts[i][idx]],
                }
            )
        cpts[name] = rows
    doc["cpts"] = cpts
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def shipped_network() -> BayesianNetwork:
    """The five-node risk-factors/cancer/symptoms network bundled with the
    package (hand-authored probabilities; see the YAML header)."""
    ref = resources.files("qbnsl").joinpath("data/cancer_shaped.yaml")
    with resources.as_file(ref) as path:
        return load_bn(path)
