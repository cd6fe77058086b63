"""Variational optimization of the compiled Hamiltonian on the simulator.

A depth-p run alternates a diagonal cost layer (RZ/ZZ rotations from the
Ising coefficients) with a transverse mixing layer, starting from the uniform
superposition. Parameters are optimized with the in-repo trust-region method
against a CVaR objective estimated from measurement histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, fsum, log

import numpy as np

from .cobyla import minimize_cobyla
from .graphs import Dag
from .noise import NoiseModel, sample_noisy
from .qubo import (
    DecodedSolution,
    Hamiltonian,
    IsingCoefficients,
    decode,
    penalized_cost,
    penalized_cost_vector,
    to_ising,
)
from .seeds import child, generator
from .statevector import (
    DEFAULT_QUBIT_CEILING,
    GateOp,
    apply_inplace,
    bitstring_of,
    hadamard,
    init_superposition,
    rot_x,
    rot_z,
    run_program,
    sample,
    sample_counts,
    zz_rot,
)

TWO_PI = 2.0 * np.pi


class QaoaError(ValueError):
    """Invalid engine configuration."""


@dataclass(frozen=True)
class AnsatzTemplate:
    """Gate schedule for a given Ising objective and depth."""

    ising: IsingCoefficients
    depth: int

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise QaoaError("depth must be >= 1")

    @property
    def num_qubits(self) -> int:
        return self.ising.num_vars

    @property
    def num_parameters(self) -> int:
        return 2 * self.depth

    @property
    def gates_per_layer(self) -> int:
        return len(self.ising.linear) + len(self.ising.quadratic) + self.num_qubits

    def gates(self, gammas, betas) -> list[GateOp]:
        """Mixing wall, then depth x (cost layer, mixer layer).

        Zero Ising coefficients contribute no gates; the constant term is a
        global phase and is dropped.
        """
        gammas = np.asarray(gammas, dtype=np.float64)
        betas = np.asarray(betas, dtype=np.float64)
        if gammas.shape != (self.depth,) or betas.shape != (self.depth,):
            raise QaoaError(f"expected {self.depth} gammas and betas")
        v = self.num_qubits
        ops = [hadamard(k) for k in range(v)]
        lin = sorted(self.ising.linear.items())
        quad = sorted(self.ising.quadratic.items())
        for g, b in zip(gammas, betas):
            for k, h_k in lin:
                ops.append(rot_z(2.0 * g * h_k, k))
            for (k, l), j_kl in quad:
                ops.append(zz_rot(2.0 * g * j_kl, k, l))
            for k in range(v):
                ops.append(rot_x(2.0 * b, k))
        return ops

    def spin_energies(self) -> np.ndarray:
        """Ising energy (constant term excluded) of every basis state.

        Cached per template; 2^q floats, so only sized for registers within
        the default ceiling.
        """
        cached = getattr(self, "_energies", None)
        if cached is not None:
            return cached
        v = self.num_qubits
        idx = np.arange(1 << v)
        z = 1.0 - 2.0 * (((idx[None, :] >> (v - 1 - np.arange(v)[:, None])) & 1))
        energies = np.zeros(1 << v)
        for k, h_k in self.ising.linear.items():
            energies += h_k * z[k]
        for (k, l), j_kl in self.ising.quadratic.items():
            energies += j_kl * z[k] * z[l]
        object.__setattr__(self, "_energies", energies)
        return energies


def build_ansatz(ham: Hamiltonian, depth: int) -> AnsatzTemplate:
    return AnsatzTemplate(ising=to_ising(ham.poly), depth=depth)


def simulate_ansatz(template: AnsatzTemplate, gammas, betas, override_ceiling=False) -> np.ndarray:
    """Noiseless statevector at the given parameters.

    The cost layer is the diagonal exp(-i gamma E) applied in one pass per
    layer rather than gate by gate, which is exactly equal (the gate schedule
    is a product of commuting diagonal factors) and much faster for deep
    circuits. Registers past the default ceiling fall back to the gate path
    so no 2^q energy table is materialized on top of the statevector.
    """
    gammas = np.asarray(gammas, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    if gammas.shape != (template.depth,) or betas.shape != (template.depth,):
        raise QaoaError(f"expected {template.depth} gammas and betas")
    v = template.num_qubits
    if v > DEFAULT_QUBIT_CEILING:
        return run_program(template.gates(gammas, betas), v, override_ceiling)
    energies = template.spin_energies()
    state = init_superposition(v, override_ceiling)
    scratch = np.empty_like(state)
    phase = np.empty(state.shape[0], dtype=np.complex128)
    for g, b in zip(gammas, betas):
        # exp(-i g E) assembled from real cos/sin (faster than complex exp)
        angles = (-g) * energies
        phase.real = np.cos(angles)
        phase.imag = np.sin(angles)
        state *= phase
        state, scratch = _mix_all(state, scratch, v, b)
    return state


def _mix_all(state, scratch, v, beta):
    """Same-angle transverse rotation on every qubit: RX(2 beta) per qubit.

    Qubits are fused three at a time into one 8x8 matmul per group, which cuts
    the number of passes over the state. matmul forbids aliased out=, so the
    two buffers alternate; returns (current, other).
    """
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    m1 = np.array([[c, s], [s, c]])
    m3 = np.kron(np.kron(m1, m1), m1)
    k = 0
    while k + 3 <= v:
        x = state.reshape((1 << k), 8, -1)
        np.matmul(m3, x, out=scratch.reshape(x.shape))
        state, scratch = scratch, state
        k += 3
    while k < v:
        x = state.reshape((1 << k), 2, -1)
        np.matmul(m1, x, out=scratch.reshape(x.shape))
        state, scratch = scratch, state
        k += 1
    return state, scratch


def cvar(costs, counts, alpha: float) -> float:
    """Average of the ceil(alpha * t) smallest sampled costs, with multiplicity.

    alpha = 1 is the plain sample expectation. Sums use exact accumulation so
    the alpha = 1 identity holds to rounding.
    """
    if not 0.0 < alpha <= 1.0:
        raise QaoaError(f"alpha must be in (0, 1], got {alpha}")
    costs = np.asarray(costs, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    if costs.shape != counts.shape or costs.ndim != 1 or costs.size == 0:
        raise QaoaError("costs and counts must be matching non-empty vectors")
    if np.any(counts < 1):
        raise QaoaError("counts must be positive")
    total = int(counts.sum())
    need = ceil(alpha * total)
    order = np.argsort(costs, kind="stable")
    acc = 0
    parts: list[float] = []
    for idx in order:
        take = min(int(counts[idx]), need - acc)
        parts.append(float(costs[idx]) * take)
        acc += take
        if acc == need:
            break
    return fsum(parts) / need


def solution_entropy(histogram: dict[str, int]) -> float:
    """Shannon entropy (natural log) of the normalized histogram."""
    total = sum(histogram.values())
    if total <= 0:
        raise QaoaError("histogram is empty")
    return -fsum(
        (c / total) * log(c / total) for c in histogram.values() if c > 0
    )


@dataclass(frozen=True)
class ObjectiveConfig:
    """Sampling settings for one objective evaluation.

    Every objective evaluation of a run with seed path S draws its shots
    from the single stream (S, 1). Reusing one stream (common random
    numbers) turns shot noise into a fixed perturbation of the landscape,
    so comparisons between nearby parameter vectors reflect real cost
    differences instead of resample noise; fresh noise per evaluation would
    stall the trust-region descent long before its budget ran out.
    """

    shots: int = 1024
    alpha: float = 1.0
    delta_max: float | None = None
    override_qubit_ceiling: bool = False

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise QaoaError("shots must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise QaoaError("alpha must be in (0, 1]")


@dataclass(frozen=True)
class OptimizerConfig:
    rhobeg: float = 0.5
    rhoend: float = 1e-3
    maxiter: int = 500


@dataclass
class EvaluationOutcome:
    value: float
    histogram: dict[str, int]
    costs: dict[str, float]


def evaluate_objective(
    template: AnsatzTemplate,
    ham: Hamiltonian,
    params,
    cfg: ObjectiveConfig,
    seed,
    noise: NoiseModel | None = None,
    cost_cache: dict[str, float] | None = None,
) -> EvaluationOutcome:
    """Sample the circuit at the given parameters and score the histogram.

    Bitstring costs are the in-degree-penalized Hamiltonian values; the
    objective value is their CVaR at the configured alpha.
    """
    params = np.mod(np.asarray(params, dtype=np.float64), TWO_PI)
    p = template.depth
    if params.shape != (2 * p,):
        raise QaoaError(f"expected {2 * p} parameters")
    vec = penalized_cost_vector(ham, delta_max=cfg.delta_max)
    if noise is None or noise.is_trivial:
        state = simulate_ansatz(
            template, params[:p], params[p:], cfg.override_qubit_ceiling
        )
        if vec is not None:
            # cost the sampled outcomes by table lookup, no per-string decode
            counts = sample_counts(state, cfg.shots, seed)
            hit = np.flatnonzero(counts)
            value = cvar(vec[hit], counts[hit], cfg.alpha)
            nq = template.num_qubits
            histogram, costs = {}, {}
            for i in hit.tolist():
                bits = bitstring_of(i, nq)
                histogram[bits] = int(counts[i])
                costs[bits] = float(vec[i])
            return EvaluationOutcome(value=value, histogram=histogram, costs=costs)
        histogram = sample(state, cfg.shots, seed)
    else:
        ops = template.gates(params[:p], params[p:])
        histogram = sample_noisy(
            ops, template.num_qubits, noise, cfg.shots, seed, cfg.override_qubit_ceiling
        )
    costs = {}
    if vec is not None:
        for bits in histogram:
            costs[bits] = float(vec[int(bits, 2)])
    else:
        cache = cost_cache if cost_cache is not None else {}
        for bits in histogram:
            if bits not in cache:
                cache[bits] = penalized_cost(ham, bits, delta_max=cfg.delta_max)
            costs[bits] = cache[bits]
    keys = list(histogram)
    value = cvar([costs[b] for b in keys], [histogram[b] for b in keys], cfg.alpha)
    return EvaluationOutcome(value=value, histogram=histogram, costs=costs)


@dataclass
class QaoaResult:
    """One optimization run. best_bits/best_cost track the single best
    measured bitstring across every evaluation of the run (the final
    histogram included); best_objective is the lowest CVaR value seen."""

    gammas: np.ndarray
    betas: np.ndarray
    best_bits: str
    best_cost: float
    best_objective: float
    iterations: int
    converged: bool
    trace: list[float] = field(repr=False)
    best_cost_trace: list[float] = field(repr=False)
    final_histogram: dict[str, int] = field(repr=False)
    decoded: DecodedSolution = field(repr=False)

    def best_dag(self) -> Dag | None:
        """Decoded best structure, or None if the best bitstring is cyclic."""
        if not self.decoded.is_acyclic():
            return None
        return self.decoded.dag()

    def final_entropy(self) -> float:
        return solution_entropy(self.final_histogram)


def optimize(
    ham: Hamiltonian,
    depth: int,
    cfg: ObjectiveConfig,
    seed,
    noise: NoiseModel | None = None,
    opt: OptimizerConfig | None = None,
) -> QaoaResult:
    """One QAOA run: random start in [0, 2pi)^(2p), trust-region descent.

    Seed streams: (seed, 0) initial parameters, (seed, 1) all objective
    evaluations (shared; see ObjectiveConfig), (seed, 2) the final histogram.
    """
    if opt is None:
        opt = OptimizerConfig()
    template = build_ansatz(ham, depth)
    rng = generator(child(seed, 0))
    x0 = rng.uniform(0.0, TWO_PI, size=2 * depth)

    cache: dict[str, float] = {}
    trace: list[float] = []
    best_cost_trace: list[float] = []
    state = {"bits": None, "cost": np.inf}

    def track(outcome: EvaluationOutcome) -> None:
        for bits, cost in outcome.costs.items():
            if cost < state["cost"] or (
                cost == state["cost"] and (state["bits"] is None or bits < state["bits"])
            ):
                state["bits"], state["cost"] = bits, cost

    eval_seed = child(seed, 1)

    def objective(params: np.ndarray) -> float:
        outcome = evaluate_objective(
            template, ham, params, cfg, eval_seed, noise, cache
        )
        track(outcome)
        trace.append(outcome.value)
        best_cost_trace.append(state["cost"])
        return outcome.value

    result = minimize_cobyla(
        objective, x0, rhobeg=opt.rhobeg, rhoend=opt.rhoend, maxfun=opt.maxiter
    )
    best_params = np.mod(result.x, TWO_PI)
    final = evaluate_objective(
        template, ham, best_params, cfg, child(seed, 2), noise, cache
    )
    track(final)

    assert state["bits"] is not None
    return QaoaResult(
        gammas=best_params[:depth],
        betas=best_params[depth:],
        best_bits=state["bits"],
        best_cost=float(state["cost"]),
        best_objective=float(min(min(trace), final.value)),
        iterations=result.nfev,
        converged=result.converged,
        trace=trace,
        best_cost_trace=best_cost_trace,
        final_histogram=final.histogram,
        decoded=decode(state["bits"], ham.layout),
    )


def run_restarts(
    ham: Hamiltonian,
    depth: int,
    cfg: ObjectiveConfig,
    num_restarts: int,
    seed,
    noise: NoiseModel | None = None,
    opt: OptimizerConfig | None = None,
) -> list[QaoaResult]:
    """Independent runs seeded (seed, restart_index); index order preserved."""
    if num_restarts < 1:
        raise QaoaError("num_restarts must be >= 1")
    return [
        optimize(ham, depth, cfg, child(seed, j), noise=noise, opt=opt)
        for j in range(num_restarts)
    ]
