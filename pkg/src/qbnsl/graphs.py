"""Directed acyclic graph primitives: construction, enumeration, counting, distance."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np


class CycleError(ValueError):
    """An adjacency matrix that must be acyclic contains a directed cycle."""


def is_acyclic(matrix: np.ndarray) -> bool:
    """True if the 0/1 adjacency matrix (arc u->v at [u, v]) has no directed cycle.

    Peels zero-in-degree nodes until none remain (Kahn). Leftover nodes mean a cycle.
    """
    m = np.asarray(matrix, dtype=np.uint8).copy()
    alive = np.ones(m.shape[0], dtype=bool)
    while alive.any():
        in_deg = m[alive][:, alive].sum(axis=0)
        sources = np.flatnonzero(alive)[in_deg == 0]
        if sources.size == 0:
            return False
        alive[sources] = False
    return True


@dataclass(frozen=True)
class Dag:
    """Immutable labeled DAG on nodes 0..n-1. matrix[u, v] == 1 means arc u -> v."""

    matrix: np.ndarray = field(hash=False)

    def __post_init__(self) -> None:
        # copy: freezing a caller's array (or sharing it) would be a trap
        m = np.array(self.matrix, dtype=np.uint8, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {m.shape}")
        if m.shape[0] == 0:
            raise ValueError("empty graph (n >= 1 required)")
        if np.any(np.diag(m) != 0):
            raise ValueError("self-loops are not allowed")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if not is_acyclic(m):
            raise CycleError("adjacency matrix contains a directed cycle")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def from_arcs(cls, n: int, arcs) -> "Dag":
        m = np.zeros((n, n), dtype=np.uint8)
        for u, v in arcs:
            m[u, v] = 1
        return cls(m)

    def arcs(self) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in zip(*np.nonzero(self.matrix))]

    def parents(self, v: int) -> tuple[int, ...]:
        return tuple(int(u) for u in np.flatnonzero(self.matrix[:, v]))

    def in_degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def topological_order(self) -> list[int]:
        """Kahn's algorithm; among ready nodes the smallest index goes first."""
        m = self.matrix.astype(np.int64)
        in_deg = m.sum(axis=0)
        order: list[int] = []
        ready = sorted(np.flatnonzero(in_deg == 0).tolist())
        while ready:
            u = ready.pop(0)
            order.append(u)
            for v in np.flatnonzero(m[u]):
                in_deg[v] -= 1
                if in_deg[v] == 0:
                    # keep the ready list sorted so the order is reproducible
                    ready.append(int(v))
                    ready.sort()
        return order

    def offdiag_bits(self) -> tuple[int, ...]:
        """Row-major flattening of the matrix with the diagonal dropped.

        This is the canonical adjacency bit-vector used for tie-breaking and it
        matches the arc-bit block of the qubit layout.
        """
        n = self.n
        return tuple(
            int(self.matrix[u, v]) for u in range(n) for v in range(n) if v != u
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, Dag) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash((self.n, self.matrix.tobytes()))

    def __repr__(self) -> str:
        arcs = ", ".join(f"{u}->{v}" for u, v in self.arcs())
        return f"Dag(n={self.n}, arcs=[{arcs}])"


def count_dags(n: int) -> int:
    """Number of labeled DAGs on n nodes, by the alternating recurrence

        a(0) = 1,  a(n) = sum_{i=1}^{n} (-1)^(i+1) C(n, i) 2^(i(n-i)) a(n-i)

    Exact integers: 1, 3, 25, 543, 29281 for n = 1..5.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    a = [1]
    for k in range(1, n + 1):
        total = 0
        for i in range(1, k + 1):
            total += (-1) ** (i + 1) * comb(k, i) * 2 ** (i * (k - i)) * a[k - i]
        a.append(total)
    return a[n]


def enumerate_dags(n: int, max_in_degree: int | None = None):
    """Yield every labeled DAG on n nodes, optionally capped by in-degree.

    Candidates are generated in lexicographic order of the off-diagonal
    adjacency bit-vector, so the first DAG satisfying a predicate is the
    lexicographically smallest one. Practical for n <= 5 (2^20 candidates).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 6:
        raise ValueError("exhaustive enumeration is limited to n <= 6")
    slots = [(u, v) for u in range(n) for v in range(n) if v != u]
    k = len(slots)
    for mask in range(2 ** k):
        m = np.zeros((n, n), dtype=np.uint8)
        for b, (u, v) in enumerate(slots):
            # bit 0 of the vector is the highest bit of the mask
            if (mask >> (k - 1 - b)) & 1:
                m[u, v] = 1
        if max_in_degree is not None and m.sum(axis=0).max(initial=0) > max_in_degree:
            continue
        if is_acyclic(m):
            yield Dag(m)


def structural_hamming_distance(a: Dag, b: Dag) -> int:
    """Arc edits (addition, deletion, reversal) turning a into b; a reversal costs 1.

    Equivalently: the number of unordered node pairs whose arc status
    (absent, u->v, v->u) differs between the two graphs.
    """
    if a.n != b.n:
        raise ValueError(f"graphs have different sizes: {a.n} vs {b.n}")
    dist = 0
    for u in range(a.n):
        for v in range(u + 1, a.n):
            sa = (int(a.matrix[u, v]), int(a.matrix[v, u]))
            sb = (int(b.matrix[u, v]), int(b.matrix[v, u]))
            if sa != sb:
                dist += 1
    return dist
