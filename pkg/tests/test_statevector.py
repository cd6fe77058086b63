import numpy as np
import pytest
from scipy.stats import chi2

from qbnsl import (
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
from qbnsl.statevector import GateError, bitstring_of

# dense single-qubit matrices for the independent oracle
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def rx_mat(t):
    return np.array(
        [[np.cos(t / 2), -1j * np.sin(t / 2)], [-1j * np.sin(t / 2), np.cos(t / 2)]]
    )


def rz_mat(t):
    return np.diag([np.exp(-1j * t / 2), np.exp(1j * t / 2)])


def lift(u, k, nq):
    """Qubit k is the k-th most significant index bit, so it is the k-th
    kron factor."""
    full = np.eye(1)
    for j in range(nq):
        full = np.kron(full, u if j == k else np.eye(2))
    return full


def rand_state(nq, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**nq) + 1j * rng.normal(size=2**nq)
    return v / np.linalg.norm(v)


def test_init_states():
    s = init_state(2)
    assert s.tolist() == [1, 0, 0, 0]
    u = init_superposition(3)
    assert np.allclose(u, np.full(8, 2 ** -1.5))
    with pytest.raises(GateError):
        init_state(0)


def test_qubit_ceiling_guard():
    with pytest.raises(ResourceLimitError):
        init_state(25)
    with pytest.raises(ResourceLimitError):
        init_superposition(25)
    # the override raises the ceiling to the hard cap without allocating here
    from qbnsl.statevector import check_qubit_budget

    check_qubit_budget(30, override_ceiling=True)
    with pytest.raises(ResourceLimitError):
        check_qubit_budget(31, override_ceiling=True)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_single_qubit_gates_match_dense_oracle(k):
    psi = rand_state(3, 40 + k)
    for op, mat in [
        (hadamard(k), H),
        (rot_x(0.83, k), rx_mat(0.83)),
        (rot_z(-1.91, k), rz_mat(-1.91)),
    ]:
        got = apply_gate(psi, op)
        want = lift(mat, k, 3) @ psi
        assert np.allclose(got, want, atol=1e-12), op.kind


def test_cnot_matches_dense_oracle():
    psi = rand_state(3, 77)
    cn = np.zeros((4, 4))
    cn[0, 0] = cn[1, 1] = cn[2, 3] = cn[3, 2] = 1  # control = MSB of the pair
    for control, target in [(0, 2), (2, 0), (1, 2)]:
        got = apply_gate(psi, cnot(control, target))
        # dense: permute qubits so (control, target) sit on the front pair
        rest = [q for q in range(3) if q not in (control, target)]
        perm = [control, target] + rest
        full = np.kron(cn, np.eye(2 ** (3 - 2)))
        # build the permutation matrix that maps qubit j to position perm.index(j)
        src = np.arange(8)
        dst = np.zeros(8, dtype=int)
        for i in range(8):
            b = format(i, "03b")
            nb = "".join(b[perm[j]] for j in range(3))
            dst[i] = int(nb, 2)
        p = np.zeros((8, 8))
        p[dst, src] = 1
        want = p.T @ (full @ (p @ psi))
        assert np.allclose(got, want, atol=1e-12), (control, target)


def test_zz_rotation_phases():
    psi = rand_state(2, 9)
    got = apply_gate(psi, zz_rot(0.7, 0, 1))
    phases = np.exp(
        [-1j * 0.35, 1j * 0.35, 1j * 0.35, -1j * 0.35]
    )  # equal bits get e^{-i t/2}
    assert np.allclose(got, phases * psi, atol=1e-12)


def test_gate_inverses_and_self_inverses():
    psi = rand_state(3, 123)
    assert np.allclose(apply_gate(apply_gate(psi, hadamard(1)), hadamard(1)), psi, atol=1e-9)
    assert np.allclose(apply_gate(apply_gate(psi, cnot(0, 2)), cnot(0, 2)), psi, atol=1e-9)
    fwd = apply_gate(psi, rot_x(0.9, 2))
    assert np.allclose(apply_gate(fwd, rot_x(-0.9, 2)), psi, atol=1e-9)
    fwd = apply_gate(psi, rot_z(1.7, 0))
    assert np.allclose(apply_gate(fwd, rot_z(-1.7, 0)), psi, atol=1e-9)
    fwd = apply_gate(psi, zz_rot(0.4, 0, 1))
    assert np.allclose(apply_gate(fwd, zz_rot(-0.4, 0, 1)), psi, atol=1e-9)


def test_cnot_rz_cnot_equals_zz():
    # the standard two-qubit decomposition of the coupling rotation
    rng = np.random.default_rng(8)
    for trial in range(100):
        psi = rand_state(3, 1000 + trial)
        t = float(rng.uniform(0, 2 * np.pi))
        a, b = rng.choice(3, size=2, replace=False).tolist()
        via_gates = apply_gate(
            apply_gate(apply_gate(psi, cnot(a, b)), rot_z(t, b)), cnot(a, b)
        )
        direct = apply_gate(psi, zz_rot(t, a, b))
        f = state_fidelity(via_gates, direct)
        assert f >= 1 - 1e-12


def test_state_fidelity_ignores_global_phase():
    psi = rand_state(2, 4)
    assert state_fidelity(psi, np.exp(1j * 0.93) * psi) == pytest.approx(1.0, abs=1e-12)


def test_exact_expectation_vector_and_callable():
    psi = rand_state(2, 15)
    diag = np.array([0.0, 1.0, 2.0, 3.0])
    want = float(np.sum(np.abs(psi) ** 2 * diag))
    assert exact_expectation(psi, diag) == pytest.approx(want, abs=1e-12)
    assert exact_expectation(psi, lambda b: float(int(b, 2))) == pytest.approx(
        want, abs=1e-12
    )


def test_sampling_statistics_uniform_state():
    state = init_superposition(3)
    hist = sample(state, 100_000, seed=(11,))
    assert sum(hist.values()) == 100_000
    # chi-square goodness of fit against the uniform distribution
    expected = 100_000 / 8
    stat = sum((c - expected) ** 2 / expected for c in hist.values())
    assert stat < chi2.ppf(0.999, df=7)


def test_sample_counts_agrees_with_sample():
    state = apply_gate(init_superposition(3), rot_x(0.9, 1))
    counts = sample_counts(state, 4096, seed=3)
    hist = sample(state, 4096, seed=3)
    assert {bitstring_of(int(i), 3): int(counts[i]) for i in np.flatnonzero(counts)} == hist


def test_sampling_is_deterministic_per_seed():
    state = init_superposition(2)
    assert sample(state, 500, seed=(1, 2)) == sample(state, 500, seed=(1, 2))
    assert sample(state, 500, seed=(1, 2)) != sample(state, 500, seed=(1, 3))
    with pytest.raises(GateError):
        sample(state, 0, seed=1)


def test_biased_state_sampling_matches_born_weights():
    state = apply_gate(init_state(1), rot_x(1.0, 0))
    p1 = float(np.abs(state[1]) ** 2)
    hist = sample(state, 50_000, seed=5)
    got = hist.get("1", 0) / 50_000
    assert abs(got - p1) < 3 * np.sqrt(p1 * (1 - p1) / 50_000)


def test_program_text_round_trip():
    ops = [hadamard(0), rot_z(0.42, 2), cnot(1, 2), zz_rot(-0.1, 0, 1), rot_x(1.5, 1)]
    text = program_to_text(ops)
    back = program_from_text(text)
    assert back == ops
    psi_a = run_program(ops, 3)
    psi_b = run_program(back, 3)
    assert np.allclose(psi_a, psi_b, atol=0)


def test_gate_validation():
    psi = init_state(2)
    with pytest.raises(GateError):
        apply_gate(psi, rot_x(0.3, 5))
    with pytest.raises(GateError):
        apply_gate(psi, GateOp("cnot", (1, 1)))
    with pytest.raises(GateError):
        apply_gate(psi, GateOp("nope", (0,)))
