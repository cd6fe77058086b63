"""Compilation of structure search into a pseudo-Boolean Hamiltonian.

Qubit register for n nodes (v = 3n(n-1)/2 bits):

  * arc bits   a[u->v] for every ordered pair u != v, row-major:
    a[0->1], a[0->2], ..., a[0->n-1], a[1->0], a[1->2], ...
  * order bits r[u<v] for every unordered pair u < v, row-major, after all
    arc bits. r[u<v] = 1 encodes "u precedes v" in a topological order.

The Hamiltonian to minimize is

  H = -(sum of score weights over realized parent sets)
      + delta_trans   * (one penalty per node triple breaking transitivity)
      + delta_consist * (one penalty per arc disagreeing with the order bits)

Feasible bitstrings (arc set acyclic, order bits a witnessing topological
order, in-degrees within the parent cap) satisfy H = -(network score).
The in-degree cap itself stays classical: see penalized_cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graphs import Dag
from .scores import LocalScoreTable, ScoreError


class EncodingError(ValueError):
    """Invalid layout, bitstring, or Hamiltonian request."""


@dataclass(frozen=True)
class QubitLayout:
    """Index bookkeeping for the arc + order register described above."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise EncodingError("layout needs n >= 2")

    @property
    def num_arc_bits(self) -> int:
        return self.n * (self.n - 1)

    @property
    def num_order_bits(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def num_qubits(self) -> int:
        return self.num_arc_bits + self.num_order_bits

    def arc_bit(self, u: int, v: int) -> int:
        """Index of a[u->v]."""
        if u == v or not (0 <= u < self.n and 0 <= v < self.n):
            raise EncodingError(f"bad arc ({u}, {v})")
        return u * (self.n - 1) + (v if v < u else v - 1)

    def order_bit(self, u: int, v: int) -> int:
        """Index of r[u<v]; requires u < v."""
        if not 0 <= u < v < self.n:
            raise EncodingError(f"order bit needs 0 <= u < v, got ({u}, {v})")
        # offset of pair (u, v) in row-major upper-triangle order
        pos = u * self.n - u * (u + 1) // 2 + (v - u - 1)
        return self.num_arc_bits + pos

    def describe(self, k: int) -> str:
        """Human-readable name of bit k, e.g. 'a[2->0]' or 'r[1<3]'."""
        if not 0 <= k < self.num_qubits:
            raise EncodingError(f"bit index {k} out of range")
        if k < self.num_arc_bits:
            u, rest = divmod(k, self.n - 1)
            v = rest if rest < u else rest + 1
            return f"a[{u}->{v}]"
        for u in range(self.n):
            for v in range(u + 1, self.n):
                if self.order_bit(u, v) == k:
                    return f"r[{u}<{v}]"
        raise AssertionError("unreachable")


def _as_bits(bits, expected: int) -> np.ndarray:
    if isinstance(bits, str):
        if not set(bits) <= {"0", "1"}:
            raise EncodingError(f"bitstring has characters outside 0/1: {bits!r}")
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
            raise EncodingError("bits must be a flat 0/1 sequence")
    if arr.size != expected:
        raise EncodingError(f"expected {expected} bits, got {arr.size}")
    return arr


@dataclass(frozen=True)
class PseudoBooleanPolynomial:
    """Multilinear polynomial over 0/1 variables; term key = sorted index tuple."""

    num_vars: int
    terms: dict[tuple[int, ...], float]

    def __post_init__(self) -> None:
        for key in self.terms:
            if any(not 0 <= k < self.num_vars for k in key):
                raise EncodingError(f"term {key} references a variable out of range")
            if tuple(sorted(set(key))) != key:
                raise EncodingError(f"term key {key} must be sorted and duplicate-free")

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def evaluate(self, bits) -> float:
        x = _as_bits(bits, self.num_vars)
        total = 0.0
        for key, coeff in self.terms.items():
            prod = 1
            for k in key:
                prod &= int(x[k])
                if not prod:
                    break
            if prod:
                total += coeff
        return total

    def __add__(self, other: "PseudoBooleanPolynomial") -> "PseudoBooleanPolynomial":
        if other.num_vars != self.num_vars:
            raise EncodingError("polynomials are over different registers")
        merged = dict(self.terms)
        for key, coeff in other.terms.items():
            merged[key] = merged.get(key, 0.0) + coeff
        return PseudoBooleanPolynomial(self.num_vars, merged)


def _add_term(terms: dict, key: tuple[int, ...], coeff: float) -> None:
    key = tuple(sorted(key))
    terms[key] = terms.get(key, 0.0) + coeff


def score_weight(table: LocalScoreTable, i: int, subset) -> float:
    """Inclusion-exclusion weight of parent subset J for node i:

      w_i({})     = s_i({})
      w_i({j})    = s_i({j}) - s_i({})
      w_i({j,k})  = s_i({j,k}) - s_i({j}) - s_i({k}) + s_i({})

    Summing w_i over all subsets of a parent set telescopes back to the
    local score of that set (for parent sets of size <= 2).
    """
    J = tuple(sorted(int(j) for j in subset))
    if len(J) == 0:
        return table.score(i, ())
    if len(J) == 1:
        return table.score(i, J) - table.score(i, ())
    if len(J) == 2:
        j, k = J
        return (
            table.score(i, J)
            - table.score(i, (j,))
            - table.score(i, (k,))
            + table.score(i, ())
        )
    raise ScoreError("score weights are defined for subsets of size <= 2")


def default_penalty(table: LocalScoreTable) -> float:
    """Dominance bound 2 * (max local score - min local score) * n.

    Any single constraint violation then costs more than the largest score
    advantage an infeasible assignment can collect. Floored at 1.0 so a flat
    (zero-range) table still yields a positive penalty.
    """
    lo, hi = table.value_range()
    return max(2.0 * (hi - lo) * table.n, 1.0)


@dataclass(frozen=True)
class Hamiltonian:
    """Compiled objective H = score_part + penalty_part over the qubit register."""

    layout: QubitLayout
    score_part: PseudoBooleanPolynomial = field(repr=False)
    penalty_part: PseudoBooleanPolynomial = field(repr=False)
    delta_trans: float
    delta_consist: float
    max_parents: int

    @property
    def poly(self) -> PseudoBooleanPolynomial:
        return self.score_part + self.penalty_part

    def evaluate(self, bits) -> float:
        return self.score_part.evaluate(bits) + self.penalty_part.evaluate(bits)


def build_hamiltonian(
    table: LocalScoreTable,
    delta_trans: float | None = None,
    delta_consist: float | None = None,
) -> Hamiltonian:
    """Compile a local score table into the penalized Hamiltonian.

    Scores enter negated (search minimizes H). Penalties default to the
    dominance bound. The parent cap must be <= 2 so arc products stay
    quadratic.
    """
    if table.max_parents > 2:
        raise EncodingError("quadratic encoding requires max_parents <= 2")
    n = table.n
    layout = QubitLayout(n)
    if delta_trans is None:
        delta_trans = default_penalty(table)
    if delta_consist is None:
        delta_consist = default_penalty(table)
    if delta_trans <= 0 or delta_consist <= 0:
        raise EncodingError("penalty weights must be positive")

    score_terms: dict[tuple[int, ...], float] = {}
    for i in range(n):
        others = [j for j in range(n) if j != i]
        _add_term(score_terms, (), -score_weight(table, i, ()))
        for j in others:
            _add_term(score_terms, (layout.arc_bit(j, i),), -score_weight(table, i, (j,)))
        if table.max_parents >= 2:
            for j, k in combinations(others, 2):
                _add_term(
                    score_terms,
                    (layout.arc_bit(j, i), layout.arc_bit(k, i)),
                    -score_weight(table, i, (j, k)),
                )

    pen_terms: dict[tuple[int, ...], float] = {}
    # transitivity: penalize order-bit triples that do not embed in a total order
    for i, j, k in combinations(range(n), 3):
        r_ij, r_jk, r_ik = layout.order_bit(i, j), layout.order_bit(j, k), layout.order_bit(i, k)
        _add_term(pen_terms, (r_ik,), delta_trans)
        _add_term(pen_terms, (r_ij, r_jk), delta_trans)
        _add_term(pen_terms, (r_ij, r_ik), -delta_trans)
        _add_term(pen_terms, (r_jk, r_ik), -delta_trans)
    # order consistency: an arc may only run from earlier to later
    for i, j in combinations(range(n), 2):
        a_ij, a_ji, r_ij = layout.arc_bit(i, j), layout.arc_bit(j, i), layout.order_bit(i, j)
        _add_term(pen_terms, (a_ji, r_ij), delta_consist)
        _add_term(pen_terms, (a_ij,), delta_consist)
        _add_term(pen_terms, (a_ij, r_ij), -delta_consist)

    return Hamiltonian(
        layout=layout,
        score_part=PseudoBooleanPolynomial(layout.num_qubits, score_terms),
        penalty_part=PseudoBooleanPolynomial(layout.num_qubits, pen_terms),
        delta_trans=float(delta_trans),
        delta_consist=float(delta_consist),
        max_parents=table.max_parents,
    )


@dataclass(frozen=True)
class DecodedSolution:
    """Bitstring split back into structure: adjacency, precedence, in-degrees.

    adjacency is not guaranteed acyclic; callers needing a Dag must check.
    """

    layout: QubitLayout
    adjacency: np.ndarray = field(hash=False)
    precedence: np.ndarray = field(hash=False)  # [u, v] = 1 iff u precedes v

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def arcs(self) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in zip(*np.nonzero(self.adjacency))]

    def is_acyclic(self) -> bool:
        from .graphs import is_acyclic

        return is_acyclic(self.adjacency)

    def dag(self) -> Dag:
        return Dag(self.adjacency.copy())


def decode(bits, layout: QubitLayout) -> DecodedSolution:
    """Split a register bitstring into adjacency and precedence matrices."""
    x = _as_bits(bits, layout.num_qubits)
    n = layout.n
    adj = np.zeros((n, n), dtype=np.uint8)
    prec = np.zeros((n, n), dtype=np.uint8)
    for u in range(n):
        for v in range(n):
            if u != v:
                adj[u, v] = x[layout.arc_bit(u, v)]
    for u in range(n):
        for v in range(u + 1, n):
            if x[layout.order_bit(u, v)]:
                prec[u, v] = 1
            else:
                prec[v, u] = 1
    return DecodedSolution(layout=layout, adjacency=adj, precedence=prec)


def encode(dag: Dag, order=None) -> str:
    """Bitstring for a DAG plus a topological order (default: Kahn order).

    The order must be a permutation of the nodes that is topological for the
    DAG, so the result is always penalty-free.
    """
    layout = QubitLayout(dag.n)
    if order is None:
        order = dag.topological_order()
    order = [int(u) for u in order]
    if sorted(order) != list(range(dag.n)):
        raise EncodingError("order must be a permutation of the nodes")
    pos = {u: p for p, u in enumerate(order)}
    for u, v in dag.arcs():
        if pos[u] > pos[v]:
            raise EncodingError(f"order is not topological: arc {u}->{v} runs backwards")
    x = np.zeros(layout.num_qubits, dtype=np.uint8)
    for u, v in dag.arcs():
        x[layout.arc_bit(u, v)] = 1
    for u in range(dag.n):
        for v in range(u + 1, dag.n):
            x[layout.order_bit(u, v)] = 1 if pos[u] < pos[v] else 0
    return "".join("1" if b else "0" for b in x)


def penalized_cost(ham: Hamiltonian, bits, delta_max: float | None = None) -> float:
    """Hamiltonian value plus the classical in-degree penalty

        delta_max * sum_i max(0, in_degree(i) - max_parents)^2.

    The parent cap is kept off the quantum register; it is enforced here when
    bitstrings are evaluated. delta_max defaults to the larger of the two
    compiled penalty weights.
    """
    if delta_max is None:
        delta_max = max(ham.delta_trans, ham.delta_consist)
    decoded = decode(bits, ham.layout)
    excess = np.maximum(decoded.in_degrees().astype(np.int64) - ham.max_parents, 0)
    return ham.evaluate(bits) + float(delta_max) * float(np.sum(excess**2))


# largest register the cost tabulation will materialize (8 MB of float64)
_COST_VECTOR_CAP = 20


def penalized_cost_vector(
    ham: Hamiltonian, delta_max: float | None = None
) -> np.ndarray | None:
    """penalized_cost tabulated over every basis index, or None past the cap.

    Entry int(bits, 2) holds the cost of `bits` (variable k sits at bit
    v-1-k of the index, matching measurement bitstrings), so sampled outcomes
    can be costed by array lookup instead of per-string decoding. The table is
    cached on the Hamiltonian per delta_max and returned read-only.
    """
    v = ham.layout.num_qubits
    if v > _COST_VECTOR_CAP:
        return None
    if delta_max is None:
        delta_max = max(ham.delta_trans, ham.delta_consist)
    cache = getattr(ham, "_cost_vectors", None)
    if cache is None:
        cache = {}
        object.__setattr__(ham, "_cost_vectors", cache)
    vec = cache.get(float(delta_max))
    if vec is not None:
        return vec

    index = np.arange(1 << v, dtype=np.int64)
    columns: dict[int, np.ndarray] = {}

    def column(k: int) -> np.ndarray:
        col = columns.get(k)
        if col is None:
            col = ((index >> (v - 1 - k)) & 1).astype(np.uint8)
            columns[k] = col
        return col

    vec = np.zeros(1 << v)
    for term, coeff in ham.poly.terms.items():
        if not term:
            vec += coeff
            continue
        prod = column(term[0])
        for k in term[1:]:
            prod = prod * column(k)
        vec += coeff * prod
    layout = ham.layout
    for child in range(layout.n):
        in_degree = np.zeros(1 << v, dtype=np.int64)
        for u in range(layout.n):
            if u != child:
                in_degree += column(layout.arc_bit(u, child))
        excess = np.maximum(in_degree - ham.max_parents, 0).astype(np.float64)
        vec += float(delta_max) * excess * excess
    vec.setflags(write=False)
    cache[float(delta_max)] = vec
    return vec


def brute_force_minimum(
    ham: Hamiltonian, delta_max: float | None = None
) -> tuple[str, float]:
    """Global minimum of penalized_cost by full 2^v enumeration (v <= 20).

    Ties resolve to the lexicographically smallest bitstring, which is the
    lowest basis index.
    """
    v = ham.layout.num_qubits
    if v > 20:
        raise EncodingError(f"brute force over 2^{v} strings refused (limit 2^20)")
    vec = penalized_cost_vector(ham, delta_max=delta_max)
    assert vec is not None  # cap above matches _COST_VECTOR_CAP
    best = int(np.argmin(vec))  # argmin takes the first minimum
    return format(best, f"0{v}b"), float(vec[best])


@dataclass(frozen=True)
class IsingCoefficients:
    """Spin form of a quadratic pseudo-Boolean polynomial via x = (1 - z)/2.

    value(z) = constant + sum_k h[k] z_k + sum_{k<l} J[(k,l)] z_k z_l,
    with z in {-1, +1} and bit 1 mapping to spin -1.
    """

    num_vars: int
    constant: float
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]

    def evaluate_spins(self, spins) -> float:
        z = np.asarray(spins, dtype=np.float64)
        if z.shape != (self.num_vars,) or not np.isin(z, (-1.0, 1.0)).all():
            raise EncodingError("spins must be a flat -1/+1 vector of register size")
        total = self.constant
        for k, coeff in self.linear.items():
            total += coeff * z[k]
        for (k, l), coeff in self.quadratic.items():
            total += coeff * z[k] * z[l]
        return float(total)

    def evaluate_bits(self, bits) -> float:
        x = _as_bits(bits, self.num_vars)
        return self.evaluate_spins(1.0 - 2.0 * x.astype(np.float64))


def to_ising(poly: PseudoBooleanPolynomial) -> IsingCoefficients:
    """Exact change of variables x_k = (1 - z_k)/2 for polynomials of degree <= 2."""
    if poly.degree > 2:
        raise EncodingError("Ising form requires degree <= 2")
    constant = 0.0
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}

    def add_lin(k: int, c: float) -> None:
        linear[k] = linear.get(k, 0.0) + c

    for key, c in poly.terms.items():
        if len(key) == 0:
            constant += c
        elif len(key) == 1:
            constant += c / 2.0
            add_lin(key[0], -c / 2.0)
        else:
            k, l = key
            constant += c / 4.0
            add_lin(k, -c / 4.0)
            add_lin(l, -c / 4.0)
            quadratic[(k, l)] = quadratic.get((k, l), 0.0) + c / 4.0
    linear = {k: v for k, v in linear.items() if v != 0.0}
    quadratic = {kl: v for kl, v in quadratic.items() if v != 0.0}
    return IsingCoefficients(poly.num_vars, constant, linear, quadratic)


def poly_to_text(poly: PseudoBooleanPolynomial) -> str:
    """Term-list form, one term per line: 'const c', 'q3 c', 'q0*q4 c'."""
    lines = [f"vars {poly.num_vars}"]
    for key in sorted(poly.terms, key=lambda t: (len(t), t)):
        coeff = poly.terms[key]
        name = "const" if not key else "*".join(f"q{k}" for k in key)
        lines.append(f"{name} {float(coeff)!r}")
    return "\n".join(lines) + "\n"


def poly_from_text(text: str) -> PseudoBooleanPolynomial:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("vars "):
        raise EncodingError("term list must start with a 'vars <count>' line")
    num_vars = int(lines[0].split()[1])
    terms: dict[tuple[int, ...], float] = {}
    for ln in lines[1:]:
        name, coeff = ln.rsplit(None, 1)
        if name == "const":
            key: tuple[int, ...] = ()
        else:
            try:
                key = tuple(sorted(int(part[1:]) for part in name.split("*")))
            except ValueError:
                raise EncodingError(f"bad term name {name!r}") from None
        terms[key] = terms.get(key, 0.0) + float(coeff)
    return PseudoBooleanPolynomial(num_vars, terms)


def ising_to_text(ising: IsingCoefficients) -> str:
    """Term-list form mirroring poly_to_text, with z-variables."""
    lines = [f"vars {ising.num_vars}", f"const {float(ising.constant)!r}"]
    for k in sorted(ising.linear):
        lines.append(f"z{k} {float(ising.linear[k])!r}")
    for k, l in sorted(ising.quadratic):
        lines.append(f"z{k}*z{l} {float(ising.quadratic[(k, l)])!r}")
    return "\n".join(lines) + "\n"


def ising_from_text(text: str) -> IsingCoefficients:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("vars "):
        raise EncodingError("term list must start with a 'vars <count>' line")
    num_vars = int(lines[0].split()[1])
    constant = 0.0
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for ln in lines[1:]:
        name, coeff_s = ln.rsplit(None, 1)
        coeff = float(coeff_s)
        if name == "const":
            constant += coeff
        elif "*" in name:
            k, l = sorted(int(part[1:]) for part in name.split("*"))
            quadratic[(k, l)] = quadratic.get((k, l), 0.0) + coeff
        else:
            k = int(name[1:])
            linear[k] = linear.get(k, 0.0) + coeff
    return IsingCoefficients(num_vars, constant, linear, quadratic)
