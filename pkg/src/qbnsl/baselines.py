"""Classical search baselines over the same score table / Hamiltonian.

All three searches are deterministic given their seed. For hill climbing and
tabu the seed is consulted only to break exact score ties among candidate
moves; tie-free instances give the same trajectory under every seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Dag, is_acyclic
from .qubo import Hamiltonian, PseudoBooleanPolynomial, penalized_cost
from .scores import LocalScoreTable
from .seeds import generator


@dataclass(frozen=True)
class SearchResult:
    dag: Dag
    score: float
    iterations: int


def _legal_moves(matrix: np.ndarray, cap: int):
    """(kind, u, v) moves keeping the graph acyclic and within the in-degree cap.

    Deterministic order: kind (add, delete, reverse), then (u, v).
    """
    n = matrix.shape[0]
    in_deg = matrix.sum(axis=0)
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            if not matrix[u, v] and not matrix[v, u] and in_deg[v] < cap:
                matrix[u, v] = 1
                ok = is_acyclic(matrix)
                matrix[u, v] = 0
                if ok:
                    yield ("add", u, v)
    for u in range(n):
        for v in range(n):
            if matrix[u, v]:
                yield ("delete", u, v)
    for u in range(n):
        for v in range(n):
            if matrix[u, v] and not matrix[v, u] and in_deg[u] < cap:
                matrix[u, v] = 0
                matrix[v, u] = 1
                ok = is_acyclic(matrix)
                matrix[v, u] = 0
                matrix[u, v] = 1
                if ok:
                    yield ("reverse", u, v)


def _move_delta(table: LocalScoreTable, matrix: np.ndarray, move) -> float:
    kind, u, v = move
    pa_v = tuple(int(i) for i in np.flatnonzero(matrix[:, v]))
    if kind == "add":
        return table.score(v, pa_v + (u,)) - table.score(v, pa_v)
    if kind == "delete":
        return table.score(v, tuple(i for i in pa_v if i != u)) - table.score(v, pa_v)
    pa_u = tuple(int(i) for i in np.flatnonzero(matrix[:, u]))
    return (
        table.score(v, tuple(i for i in pa_v if i != u))
        - table.score(v, pa_v)
        + table.score(u, pa_u + (v,))
        - table.score(u, pa_u)
    )


def _apply_move(matrix: np.ndarray, move) -> None:
    kind, u, v = move
    if kind == "add":
        matrix[u, v] = 1
    elif kind == "delete":
        matrix[u, v] = 0
    else:
        matrix[u, v] = 0
        matrix[v, u] = 1


def _pick(ties: list, rng) -> tuple:
    # draw only on a real tie, so tie-free runs are seed-independent
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def _check_dag(matrix: np.ndarray, cap: int) -> None:
    assert is_acyclic(matrix), "search produced a cyclic graph"
    assert int(matrix.sum(axis=0).max(initial=0)) <= cap, "search exceeded the in-degree cap"


def hill_climb(table: LocalScoreTable, max_in_degree: int | None = None, seed=0) -> SearchResult:
    """Greedy ascent from the empty graph: apply the best strictly improving
    legal move (add/delete/reverse) until none exists. Exact ties are broken
    uniformly at random from the seed; otherwise the seed is unused."""
    cap = table.max_parents if max_in_degree is None else min(max_in_degree, table.max_parents)
    n = table.n
    rng = generator(seed)
    matrix = np.zeros((n, n), dtype=np.uint8)
    score = table.network_score(Dag(matrix))
    steps = 0
    while True:
        ties: list = []
        best_delta = 0.0
        for move in _legal_moves(matrix, cap):
            delta = _move_delta(table, matrix, move)
            if delta > best_delta:
                ties = [move]
                best_delta = delta
            elif ties and delta == best_delta:
                ties.append(move)
        if not ties:
            break
        _apply_move(matrix, _pick(ties, rng))
        score += best_delta
        steps += 1
    _check_dag(matrix, cap)
    dag = Dag(matrix)
    return SearchResult(dag=dag, score=table.network_score(dag), iterations=steps)


def tabu_search(
    table: LocalScoreTable,
    max_in_degree: int | None = None,
    tenure: int = 10,
    max_stall: int = 50,
    seed=0,
) -> SearchResult:
    """Tabu variant of the greedy walk: always take the best non-tabu legal
    move (even downhill), forbid its inverse for `tenure` steps, keep the best
    graph seen, stop after `max_stall` steps without improving it. A tabu move
    is still allowed when it beats the best seen (aspiration). Exact ties are
    broken uniformly at random from the seed."""
    if tenure < 1:
        raise ValueError("tenure must be >= 1")
    cap = table.max_parents if max_in_degree is None else min(max_in_degree, table.max_parents)
    n = table.n
    rng = generator(seed)
    matrix = np.zeros((n, n), dtype=np.uint8)
    score = table.network_score(Dag(matrix))
    best_matrix, best_score = matrix.copy(), score
    tabu: dict[tuple, int] = {}
    steps = 0
    stall = 0
    while stall < max_stall:
        steps += 1
        ties: list = []
        chosen_delta = -np.inf
        for move in _legal_moves(matrix, cap):
            delta = _move_delta(table, matrix, move)
            if move in tabu and score + delta <= best_score:
                continue
            if delta > chosen_delta:
                ties = [move]
                chosen_delta = delta
            elif ties and delta == chosen_delta:
                ties.append(move)
        if not ties:
            break
        kind, u, v = _pick(ties, rng)
        inverse = {"add": ("delete", u, v), "delete": ("add", u, v), "reverse": ("reverse", v, u)}[kind]
        _apply_move(matrix, (kind, u, v))
        score += chosen_delta
        tabu = {mv: exp - 1 for mv, exp in tabu.items() if exp > 1}
        tabu[inverse] = tenure
        if score > best_score:
            # reset the stall counter only on material gains: score-equivalent
            # structures differ by accumulated rounding dust (~1 ulp per move),
            # and plateau laps would otherwise reset it forever
            if score > best_score + 1e-9 * max(1.0, abs(best_score)):
                stall = 0
            else:
                stall += 1
            best_matrix, best_score = matrix.copy(), score
        else:
            stall += 1
    _check_dag(best_matrix, cap)
    dag = Dag(best_matrix)
    return SearchResult(dag=dag, score=table.network_score(dag), iterations=steps)


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling plan: temperature t_start shrinking to t_end over
    `steps` moves, multiplied by the derived per-step factor."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self) -> None:
        if not self.t_start > self.t_end > 0:
            raise ValueError("need t_start > t_end > 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def factor(self) -> float:
        return (self.t_end / self.t_start) ** (1.0 / self.steps)


@dataclass(frozen=True)
class AnnealResult:
    best_bits: str
    best_cost: float
    iterations: int


def default_schedule(objective: Hamiltonian | PseudoBooleanPolynomial, steps: int = 20000) -> AnnealSchedule:
    """Start hot enough to cross either compiled penalty (or the largest
    coefficient, for a bare polynomial), finish at a thousandth of that."""
    if isinstance(objective, Hamiltonian):
        t_start = max(objective.delta_trans, objective.delta_consist)
    else:
        t_start = max((abs(c) for c in objective.terms.values()), default=1.0)
        t_start = max(t_start, 1e-9)
    return AnnealSchedule(t_start=t_start, t_end=1e-3 * t_start, steps=steps)


def simulated_annealing_qubo(
    objective: Hamiltonian | PseudoBooleanPolynomial,
    schedule: AnnealSchedule | None = None,
    seed=0,
    start=None,
    delta_max: float | None = None,
) -> AnnealResult:
    """Metropolis single-bit-flip walk under geometric cooling; returns the
    best assignment seen.

    A Hamiltonian objective is evaluated through penalized_cost, so the
    in-degree clamp applies; a bare polynomial is evaluated as-is and
    delta_max is ignored. `start` fixes the initial assignment (by default it
    is drawn uniformly from the seed); the classical stand-in for the
    annealing hardware rows of the comparison tables.
    """
    if isinstance(objective, Hamiltonian):
        v = objective.layout.num_qubits
        cost_of = lambda b: penalized_cost(objective, b, delta_max=delta_max)
    else:
        v = objective.num_vars
        cost_of = objective.evaluate
    if schedule is None:
        schedule = default_schedule(objective)
    rng = generator(seed)
    if start is None:
        bits = rng.integers(0, 2, size=v, dtype=np.uint8)
    else:
        bits = np.array([1 if int(b) else 0 for b in start], dtype=np.uint8)
        if bits.shape != (v,):
            raise ValueError(f"start must supply {v} bits")
    cost = cost_of(bits)
    best_bits, best_cost = bits.copy(), cost
    temp = schedule.t_start
    factor = schedule.factor
    for _ in range(schedule.steps):
        k = int(rng.integers(v))
        bits[k] ^= 1
        new_cost = cost_of(bits)
        delta = new_cost - cost
        if delta <= 0 or rng.random() < np.exp(-delta / temp):
            cost = new_cost
            if cost < best_cost:
                best_bits, best_cost = bits.copy(), cost
        else:
            bits[k] ^= 1
        temp *= factor
    return AnnealResult(
        best_bits="".join("1" if b else "0" for b in best_bits),
        best_cost=float(best_cost),
        iterations=schedule.steps,
    )
