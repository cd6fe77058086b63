"""Dense statevector simulation of the small gate set used by the ansatz.

Conventions: qubit 0 is the leftmost character of a measured bitstring and
the most significant bit of a statevector index. States are numpy complex128
vectors of length 2^q; batched helpers accept shape (batch, 2^q).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_QUBIT_CEILING = 24
HARD_QUBIT_CEILING = 30

_SQRT1_2 = 1.0 / np.sqrt(2.0)


class ResourceLimitError(RuntimeError):
    """Simulation request exceeds the configured qubit ceiling."""


class GateError(ValueError):
    """Malformed gate operation or program."""


@dataclass(frozen=True)
class GateOp:
    """One gate: kind in {'h', 'rx', 'rz', 'cnot', 'zz'}, target qubits, angle."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        arity = {"h": 1, "rx": 1, "rz": 1, "cnot": 2, "zz": 2}
        if self.kind not in arity:
            raise GateError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity[self.kind]:
            raise GateError(f"{self.kind} takes {arity[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise GateError(f"{self.kind} qubits must be distinct")
        needs_angle = self.kind in ("rx", "rz", "zz")
        if needs_angle and self.angle is None:
            raise GateError(f"{self.kind} needs an angle")
        if not needs_angle and self.angle is not None:
            raise GateError(f"{self.kind} takes no angle")

    @property
    def arity(self) -> int:
        return len(self.qubits)


def hadamard(q: int) -> GateOp:
    return GateOp("h", (q,))


def rot_x(theta: float, q: int) -> GateOp:
    """exp(-i theta X / 2)."""
    return GateOp("rx", (q,), float(theta))


def rot_z(theta: float, q: int) -> GateOp:
    """diag(e^(-i theta/2), e^(+i theta/2))."""
    return GateOp("rz", (q,), float(theta))


def cnot(control: int, target: int) -> GateOp:
    return GateOp("cnot", (control, target))


def zz_rot(theta: float, qa: int, qb: int) -> GateOp:
    """Phase e^(-i theta/2) on equal bits, e^(+i theta/2) on unequal bits."""
    return GateOp("zz", (qa, qb), float(theta))


def check_qubit_budget(num_qubits: int, override_ceiling: bool = False) -> None:
    ceiling = HARD_QUBIT_CEILING if override_ceiling else DEFAULT_QUBIT_CEILING
    if num_qubits > ceiling:
        need = (2**num_qubits * 16) / 2**30
        raise ResourceLimitError(
            f"{num_qubits} qubits exceeds the ceiling of {ceiling} "
            f"(statevector alone needs {need:.1f} GiB)"
        )


def init_state(num_qubits: int, override_ceiling: bool = False) -> np.ndarray:
    """|0...0> over num_qubits qubits, guarded by the qubit ceiling."""
    if num_qubits < 1:
        raise GateError("need at least one qubit")
    check_qubit_budget(num_qubits, override_ceiling)
    state = np.zeros(2**num_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def init_superposition(num_qubits: int, override_ceiling: bool = False) -> np.ndarray:
    """Uniform superposition: every amplitude 2^(-q/2) (a Hadamard on each
    qubit of |0...0>), guarded by the qubit ceiling."""
    if num_qubits < 1:
        raise GateError("need at least one qubit")
    check_qubit_budget(num_qubits, override_ceiling)
    return np.full(2**num_qubits, 2.0 ** (-num_qubits / 2.0), dtype=np.complex128)


def _num_qubits_of(states: np.ndarray) -> int:
    dim = states.shape[-1]
    nq = int(dim).bit_length() - 1
    if 2**nq != dim:
        raise GateError(f"state length {dim} is not a power of two")
    return nq


def _split(states: np.ndarray, k: int, nq: int) -> np.ndarray:
    """View with qubit k as its own axis: (..., 2^k, 2, 2^(nq-1-k))."""
    lead = states.shape[:-1]
    return states.reshape(lead + (2**k, 2, 2 ** (nq - 1 - k)))


def apply_inplace(states: np.ndarray, op: GateOp) -> None:
    """Apply one gate to a (..., 2^q) complex array, mutating it."""
    nq = _num_qubits_of(states)
    if any(not 0 <= q < nq for q in op.qubits):
        raise GateError(f"gate {op.kind} targets qubit outside 0..{nq - 1}")
    if op.kind in ("h", "rx"):
        x = _split(states, op.qubits[0], nq)
        a0 = x[..., 0, :].copy()
        a1 = x[..., 1, :]
        if op.kind == "h":
            x[..., 0, :] = _SQRT1_2 * (a0 + a1)
            x[..., 1, :] = _SQRT1_2 * (a0 - a1)
        else:
            c = np.cos(op.angle / 2.0)
            s = -1j * np.sin(op.angle / 2.0)
            x[..., 0, :] = c * a0 + s * a1
            x[..., 1, :] = s * a0 + c * a1
    elif op.kind == "rz":
        x = _split(states, op.qubits[0], nq)
        x[..., 0, :] *= np.exp(-0.5j * op.angle)
        x[..., 1, :] *= np.exp(0.5j * op.angle)
    elif op.kind == "zz":
        qa, qb = op.qubits
        idx = np.arange(states.shape[-1])
        parity = ((idx >> (nq - 1 - qa)) ^ (idx >> (nq - 1 - qb))) & 1
        phase = np.where(parity == 1, np.exp(0.5j * op.angle), np.exp(-0.5j * op.angle))
        states *= phase
    elif op.kind == "cnot":
        ctrl, tgt = op.qubits
        idx = np.arange(states.shape[-1])
        perm = idx ^ (((idx >> (nq - 1 - ctrl)) & 1) << (nq - 1 - tgt))
        states[...] = states[..., perm]
    else:  # pragma: no cover
        raise GateError(f"unknown gate kind {op.kind!r}")


def apply_gate(state: np.ndarray, op: GateOp) -> np.ndarray:
    """Pure version of apply_inplace: returns a new state."""
    out = np.array(state, dtype=np.complex128, copy=True)
    apply_inplace(out, op)
    return out


def apply_pauli_inplace(states: np.ndarray, pauli: str, k: int) -> None:
    """Apply X, Y, or Z on qubit k (used by the depolarizing channel)."""
    nq = _num_qubits_of(states)
    x = _split(states, k, nq)
    if pauli == "x":
        a0 = x[..., 0, :].copy()
        x[..., 0, :] = x[..., 1, :]
        x[..., 1, :] = a0
    elif pauli == "y":
        a0 = x[..., 0, :].copy()
        x[..., 0, :] = -1j * x[..., 1, :]
        x[..., 1, :] = 1j * a0
    elif pauli == "z":
        x[..., 1, :] *= -1.0
    else:
        raise GateError(f"unknown Pauli {pauli!r}")


def run_program(
    ops, num_qubits: int, override_ceiling: bool = False
) -> np.ndarray:
    """Apply a gate list to |0...0> and return the final state."""
    state = init_state(num_qubits, override_ceiling)
    for op in ops:
        apply_inplace(state, op)
    return state


def bitstring_of(index: int, num_qubits: int) -> str:
    return format(index, f"0{num_qubits}b")


def sample_counts(state: np.ndarray, shots: int, seed) -> np.ndarray:
    """shots i.i.d. Born-rule draws as a count vector over all basis indices.

    Draws by inverting the CDF on a block of uniforms rather than calling a
    multinomial routine. The count vector is multinomial-distributed either
    way; inversion additionally makes draws under a shared seed vary smoothly
    when the underlying state changes a little, which the optimizer relies on
    (common random numbers across objective evaluations of one run).
    """
    if shots < 1:
        raise GateError("shots must be >= 1")
    nq = _num_qubits_of(state)
    probs = np.abs(state) ** 2
    cum = np.cumsum(probs)
    cum /= cum[-1]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    u = rng.random(shots)
    outcomes = np.searchsorted(cum, u, side="right")
    np.clip(outcomes, 0, (1 << nq) - 1, out=outcomes)
    return np.bincount(outcomes, minlength=1 << nq)


def sample(state: np.ndarray, shots: int, seed) -> dict[str, int]:
    """sample_counts aggregated into a {bitstring: count} map (zeros dropped)."""
    counts = sample_counts(state, shots, seed)
    nq = _num_qubits_of(state)
    return {
        bitstring_of(int(i), nq): int(counts[i]) for i in np.flatnonzero(counts)
    }


def exact_expectation(state: np.ndarray, diagonal) -> float:
    """<state| D |state> for a real diagonal observable.

    The observable is either a vector of basis-state values or a callable
    taking a bitstring; the callable form is for small diagnostic checks
    (it touches all 2^q basis states).
    """
    if callable(diagonal):
        nq = _num_qubits_of(state)
        diagonal = np.array(
            [float(diagonal(bitstring_of(i, nq))) for i in range(state.shape[-1])]
        )
    diagonal = np.asarray(diagonal, dtype=np.float64)
    if diagonal.shape != state.shape:
        raise GateError("diagonal observable must match the state length")
    return float(np.sum((np.abs(state) ** 2) * diagonal))


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 with both states normalized; insensitive to global phase."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(np.abs(np.vdot(a, b)) ** 2)


def program_to_text(ops) -> str:
    """One gate per line: 'H 3', 'RX 0.5 1', 'RZ 0.42 5', 'CNOT 1 2', 'ZZ 0.1 1 2'."""
    lines = []
    for op in ops:
        name = op.kind.upper()
        if op.angle is None:
            lines.append(f"{name} " + " ".join(str(q) for q in op.qubits))
        else:
            lines.append(f"{name} {op.angle!r} " + " ".join(str(q) for q in op.qubits))
    return "\n".join(lines) + "\n"


def program_from_text(text: str) -> list[GateOp]:
    ops: list[GateOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0].lower()
        try:
            if name in ("h",):
                ops.append(GateOp(name, (int(parts[1]),)))
            elif name in ("rx", "rz"):
                ops.append(GateOp(name, (int(parts[2]),), float(parts[1])))
            elif name == "cnot":
                ops.append(GateOp(name, (int(parts[1]), int(parts[2]))))
            elif name == "zz":
                ops.append(GateOp(name, (int(parts[2]), int(parts[3])), float(parts[1])))
            else:
                raise GateError(f"line {lineno}: unknown gate {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise GateError(f"line {lineno}: cannot parse {raw!r}: {exc}") from None
    return ops
