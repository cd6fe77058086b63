"""Score-based Bayesian network structure learning with a variational
quantum-circuit solver (simulated), plus exact and heuristic baselines.

The pipeline: discrete data -> local score table (BIC/BDeu) -> pseudo-Boolean
Hamiltonian over arc and order bits -> Ising coefficients -> depth-p
variational circuit optimized against a CVaR objective -> decoded structure.
"""

__version__ = "0.1.0"

from .baselines import (
    AnnealResult,
    AnnealSchedule,
    SearchResult,
    default_schedule,
    hill_climb,
    simulated_annealing_qubo,
    tabu_search,
)
from .cobyla import CobylaResult, OptimizerError, minimize_cobyla
from .dataset import DatasetError, DiscreteDataset, read_csv_dataset
from .graphs import (
    CycleError,
    Dag,
    count_dags,
    enumerate_dags,
    is_acyclic,
    structural_hamming_distance,
)
from .network import BayesianNetwork, NetworkError, load_bn, save_bn, shipped_network
from .noise import (
    NoiseChannel,
    NoiseError,
    NoiseModel,
    run_noisy_batch,
    run_noisy_trajectory,
    sample_noisy,
)
from .qaoa import (
    AnsatzTemplate,
    ObjectiveConfig,
    OptimizerConfig,
    QaoaResult,
    build_ansatz,
    cvar,
    evaluate_objective,
    optimize,
    run_restarts,
    simulate_ansatz,
    solution_entropy,
)
from .qubo import (
    DecodedSolution,
    EncodingError,
    Hamiltonian,
    IsingCoefficients,
    PseudoBooleanPolynomial,
    QubitLayout,
    brute_force_minimum,
    build_hamiltonian,
    decode,
    default_penalty,
    encode,
    ising_from_text,
    ising_to_text,
    penalized_cost,
    penalized_cost_vector,
    poly_from_text,
    poly_to_text,
    score_weight,
    to_ising,
)
from .scores import LocalScoreTable, ScoreError, build_score_table, exhaustive_best_dag, local_score
from .statevector import (
    GateOp,
    ResourceLimitError,
    apply_gate,
    cnot,
    exact_expectation,
    hadamard,
    init_state,
    init_superposition,
    program_from_text,
    program_to_text,
    rot_x,
    rot_z,
    run_program,
    sample,
    sample_counts,
    state_fidelity,
    zz_rot,
)

__all__ = [name for name in dir() if not name.startswith("_")]
