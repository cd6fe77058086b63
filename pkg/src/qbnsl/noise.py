"""Stochastic noise on top of the statevector engine (Monte-Carlo trajectories).

Channel placement follows the hardware convention modelled here: every
1-qubit gate is followed by the configured damping channel(s) on its target,
every 2-qubit gate by the depolarizing channel on both of its targets. The
RNG consumption per noise event has a fixed shape, so trajectories are
reproducible bit for bit regardless of which branches fire.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import (
    GateError,
    GateOp,
    apply_pauli_inplace,
    apply_inplace,
    check_qubit_budget,
    _num_qubits_of,
    _split,
    bitstring_of,
)

KINDS = ("amplitude_damping", "phase_damping", "depolarizing")


class NoiseError(ValueError):
    """Malformed noise configuration."""


@dataclass(frozen=True)
class NoiseChannel:
    """One ω-parametrized channel; kind is one of

    amplitude_damping:  K0 = [[1, 0], [0, sqrt(1-ω)]],  K1 = [[0, sqrt(ω)], [0, 0]]
    phase_damping:      K0 = [[1, 0], [0, sqrt(1-ω)]],  K1 = [[0, 0], [0, sqrt(ω)]]
    depolarizing:       sqrt(1-ω) I and sqrt(ω/3) X, Y, Z
    """

    kind: str
    omega: float

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise NoiseError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.omega <= 1.0:
            raise NoiseError(f"omega must be in [0, 1], got {self.omega}")

    def kraus(self) -> list[np.ndarray]:
        w = self.omega
        if self.kind == "amplitude_damping":
            return [
                np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - w)]], dtype=np.complex128),
                np.array([[0.0, np.sqrt(w)], [0.0, 0.0]], dtype=np.complex128),
            ]
        if self.kind == "phase_damping":
            return [
                np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - w)]], dtype=np.complex128),
                np.array([[0.0, 0.0], [0.0, np.sqrt(w)]], dtype=np.complex128),
            ]
        paulis = [
            np.eye(2, dtype=np.complex128),
            np.array([[0, 1], [1, 0]], dtype=np.complex128),
            np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
            np.array([[1, 0], [0, -1]], dtype=np.complex128),
        ]
        return [np.sqrt(1.0 - w) * paulis[0]] + [np.sqrt(w / 3.0) * p for p in paulis[1:]]


@dataclass(frozen=True)
class NoiseModel:
    """At most one channel per kind; damping channels act after 1-qubit gates
    (amplitude first, then phase), depolarizing after 2-qubit gates."""

    channels: tuple[NoiseChannel, ...] = ()

    def __post_init__(self) -> None:
        kinds = [ch.kind for ch in self.channels]
        if len(set(kinds)) != len(kinds):
            raise NoiseError("at most one channel per kind")

    @classmethod
    def single(cls, kind: str, omega: float) -> "NoiseModel":
        return cls((NoiseChannel(kind, omega),))

    def _get(self, kind: str) -> NoiseChannel | None:
        for ch in self.channels:
            if ch.kind == kind:
                return ch
        return None

    @property
    def damping_channels(self) -> tuple[NoiseChannel, ...]:
        out = []
        for kind in ("amplitude_damping", "phase_damping"):
            ch = self._get(kind)
            if ch is not None and ch.omega > 0.0:
                out.append(ch)
        return tuple(out)

    @property
    def depolarizing(self) -> NoiseChannel | None:
        ch = self._get("depolarizing")
        return ch if ch is not None and ch.omega > 0.0 else None

    @property
    def is_trivial(self) -> bool:
        return not self.damping_channels and self.depolarizing is None


def apply_damping_batch(
    states: np.ndarray, channel: NoiseChannel, k: int, rng: np.random.Generator
) -> None:
    """One stochastic Kraus branch per trajectory row, renormalized.

    Branch K1 fires with probability ||K1 psi||^2 = ω * P(qubit k = 1).
    """
    if channel.kind not in ("amplitude_damping", "phase_damping"):
        raise NoiseError(f"{channel.kind} is not a 1-qubit damping channel")
    nq = _num_qubits_of(states)
    w = channel.omega
    x = _split(states, k, nq)  # (t, 2^k, 2, rest) view into states
    p1 = np.sum(np.abs(x[:, :, 1, :]) ** 2, axis=(1, 2))
    u = rng.random(states.shape[0])
    fire = u < w * p1
    if np.any(fire):
        sel = x[fire]
        ones = sel[:, :, 1, :] / np.sqrt(p1[fire])[:, None, None]
        if channel.kind == "amplitude_damping":
            sel[:, :, 0, :] = ones
            sel[:, :, 1, :] = 0.0
        else:
            sel[:, :, 0, :] = 0.0
            sel[:, :, 1, :] = ones
        x[fire] = sel
    # K1 rows above land normalized; K0 rows scale the |1> half by
    # sqrt(1-w) and renormalize by the surviving norm sqrt(1 - w*p1),
    # known from p1 without another pass over the state
    keep = ~fire
    norm0 = np.sqrt(np.maximum(1.0 - w * p1, 1e-300))
    scale0 = np.ones(states.shape[0])
    scale1 = np.ones(states.shape[0])
    scale0[keep] = 1.0 / norm0[keep]
    scale1[keep] = np.sqrt(1.0 - w) / norm0[keep]
    x[:, :, 0, :] *= scale0[:, None, None]
    x[:, :, 1, :] *= scale1[:, None, None]


def apply_depolarizing_batch(
    states: np.ndarray, channel: NoiseChannel, k: int, rng: np.random.Generator
) -> None:
    """With probability ω, a uniformly random Pauli on qubit k, per trajectory."""
    if channel.kind != "depolarizing":
        raise NoiseError(f"{channel.kind} is not the depolarizing channel")
    t = states.shape[0]
    u = rng.random(t)
    which = rng.integers(0, 3, size=t)  # 0 -> X, 1 -> Y, 2 -> Z
    fire = u < channel.omega
    for code, pauli in enumerate("xyz"):
        rows = fire & (which == code)
        if np.any(rows):
            sub = states[rows]
            apply_pauli_inplace(sub, pauli, k)
            states[rows] = sub


def run_noisy_batch(
    ops,
    num_qubits: int,
    noise: NoiseModel,
    num_trajectories: int,
    seed,
    override_ceiling: bool = False,
) -> np.ndarray:
    """num_trajectories independent Monte-Carlo trajectories of a gate program.

    Returns the final states as a (num_trajectories, 2^q) array. Noise applies
    to every gate in the program, the initial mixing wall included.
    """
    if num_trajectories < 1:
        raise NoiseError("num_trajectories must be >= 1")
    check_qubit_budget(num_qubits, override_ceiling)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    states = np.zeros((num_trajectories, 2**num_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    damping = noise.damping_channels
    depol = noise.depolarizing
    for op in ops:
        apply_inplace(states, op)
        if op.arity == 1:
            for ch in damping:
                apply_damping_batch(states, ch, op.qubits[0], rng)
        else:
            if depol is not None:
                for q in op.qubits:
                    apply_depolarizing_batch(states, depol, q, rng)
    return states


def run_noisy_trajectory(ops, num_qubits: int, noise: NoiseModel, seed) -> np.ndarray:
    """Single trajectory; the batch runner with one row."""
    return run_noisy_batch(ops, num_qubits, noise, 1, seed)[0]


def sample_noisy(
    ops,
    num_qubits: int,
    noise: NoiseModel,
    shots: int,
    seed,
    override_ceiling: bool = False,
) -> dict[str, int]:
    """One measured bitstring per trajectory, aggregated into a histogram."""
    if shots < 1:
        raise NoiseError("shots must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    traj_seed = rng.integers(0, 2**63 - 1)
    states = run_noisy_batch(ops, num_qubits, noise, shots, int(traj_seed), override_ceiling)
    dim = states.shape[1]
    counts = np.zeros(dim, dtype=np.int64)
    chunk = max(1, (1 << 22) // dim)
    for lo in range(0, shots, chunk):
        block = states[lo : lo + chunk]
        probs = np.abs(block) ** 2
        probs /= probs.sum(axis=1, keepdims=True)
        cum = np.cumsum(probs, axis=1)
        u = rng.random((block.shape[0], 1))
        idx = (cum < u).sum(axis=1)
        np.add.at(counts, np.minimum(idx, dim - 1), 1)
    return {
        bitstring_of(int(i), num_qubits): int(c)
        for i, c in enumerate(counts)
        if c > 0
    }


def apply_channel_stochastic(
    state: np.ndarray, channel: NoiseChannel, k: int, rng: np.random.Generator
) -> np.ndarray:
    """One stochastic application of a channel to a single state (any kind)."""
    out = np.array(state, dtype=np.complex128, copy=True).reshape(1, -1)
    if channel.kind == "depolarizing":
        apply_depolarizing_batch(out, channel, k, rng)
    else:
        apply_damping_batch(out, channel, k, rng)
    return out[0]
