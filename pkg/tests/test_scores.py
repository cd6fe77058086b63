import itertools
from collections import Counter
from math import lgamma, log

import numpy as np
import pytest

from qbnsl import (
    Dag,
    DiscreteDataset,
    ScoreError,
    build_score_table,
    enumerate_dags,
    exhaustive_best_dag,
    local_score,
)
from conftest import binary_dataset, chain_dataset

ROWS = [
    (0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 1), (0, 0, 0),
    (1, 1, 0), (0, 1, 1), (1, 0, 1), (0, 0, 1), (1, 1, 1),
    (0, 0, 0), (1, 0, 0),
]
DATA = DiscreteDataset.from_codes(np.array(ROWS), (2, 2, 2))


def oracle_bic(i, parents, card=2):
    """Direct textbook computation, independent of the library internals."""
    cnt, ptot = Counter(), Counter()
    for r in ROWS:
        key = tuple(r[p] for p in parents)
        cnt[key + (r[i],)] += 1
        ptot[key] += 1
    ll = sum(c * (log(c) - log(ptot[full[:-1]])) for full, c in cnt.items())
    q = 2 ** len(parents)
    return ll - 0.5 * log(len(ROWS)) * (card - 1) * q


def oracle_bdeu(i, parents, ess, card=2):
    cnt, ptot = Counter(), Counter()
    for r in ROWS:
        key = tuple(r[p] for p in parents)
        cnt[key + (r[i],)] += 1
        ptot[key] += 1
    q = 2 ** len(parents)
    aj, ajk = ess / q, ess / (q * card)
    s = 0.0
    for key in itertools.product(range(2), repeat=len(parents)):
        s += lgamma(aj) - lgamma(aj + ptot.get(key, 0))
        for k in range(card):
            s += lgamma(ajk + cnt.get(key + (k,), 0)) - lgamma(ajk)
    return s


# expected values frozen from the oracle above
FROZEN = {
    ("bic", 2, ()): -9.392772516792311,
    ("bic", 2, (0,)): -10.462874742916547,
    ("bic", 2, (0, 1)): -11.03823888782011,
    ("bic", 0, ()): -9.560219491613346,
    ("bdeu1", 2, ()): -9.639766177133836,
    ("bdeu4", 2, (0,)): -9.595602772766828,
    ("bdeu1", 2, (0, 1)): -12.290029252524839,
}


def test_bic_matches_frozen_oracle_values():
    for (kind, i, pa), want in FROZEN.items():
        if kind != "bic":
            continue
        assert local_score(DATA, i, pa, kind="bic") == pytest.approx(want, abs=1e-12)
        assert oracle_bic(i, pa) == pytest.approx(want, abs=1e-12)


def test_bdeu_matches_frozen_oracle_values():
    assert local_score(DATA, 2, (), kind="bdeu", ess=1.0) == pytest.approx(
        FROZEN[("bdeu1", 2, ())], abs=1e-12
    )
    assert local_score(DATA, 2, (0,), kind="bdeu", ess=4.0) == pytest.approx(
        FROZEN[("bdeu4", 2, (0,))], abs=1e-12
    )
    assert local_score(DATA, 2, (0, 1), kind="bdeu", ess=1.0) == pytest.approx(
        FROZEN[("bdeu1", 2, (0, 1))], abs=1e-12
    )


def test_scores_agree_with_oracles_on_random_data():
    data = binary_dataset(31, 200, 4)
    rows = [tuple(int(x) for x in r) for r in data.values]

    def obic(i, parents):
        cnt, ptot = Counter(), Counter()
        for r in rows:
            key = tuple(r[p] for p in parents)
            cnt[key + (r[i],)] += 1
            ptot[key] += 1
        ll = sum(c * (log(c) - log(ptot[f[:-1]])) for f, c in cnt.items())
        return ll - 0.5 * log(len(rows)) * (2 ** len(parents))

    for i in range(4):
        for pa in [(), *((j,) for j in range(4) if j != i)]:
            assert local_score(data, i, pa) == pytest.approx(obic(i, pa), abs=1e-9)


def test_argument_validation():
    with pytest.raises(ScoreError):
        local_score(DATA, 0, (0,))
    with pytest.raises(ScoreError):
        local_score(DATA, 0, (1, 1))
    with pytest.raises(ScoreError):
        local_score(DATA, 5, ())
    with pytest.raises(ScoreError):
        local_score(DATA, 0, (9,))
    with pytest.raises(ScoreError):
        local_score(DATA, 0, (), kind="aic")
    with pytest.raises(ScoreError):
        local_score(DATA, 0, (), kind="bdeu", ess=0.0)


def test_table_is_complete_and_consistent():
    table = build_score_table(DATA, kind="bic", max_parents=2)
    assert table.n == 3 and table.max_parents == 2
    for i in range(3):
        for k in range(3):
            for pa in itertools.combinations((j for j in range(3) if j != i), k):
                assert table.score(i, pa) == pytest.approx(
                    local_score(DATA, i, pa), abs=0
                )
    with pytest.raises(ScoreError):
        table.score(0, (1, 2, 3))


def test_network_score_is_sum_of_local_scores():
    table = build_score_table(DATA, kind="bic", max_parents=2)
    dag = Dag.from_arcs(3, [(0, 2), (1, 2)])
    want = (
        local_score(DATA, 0, ())
        + local_score(DATA, 1, ())
        + local_score(DATA, 2, (0, 1))
    )
    assert table.network_score(dag) == pytest.approx(want, abs=1e-12)


def test_exhaustive_best_dag_matches_full_scan():
    table = build_score_table(chain_dataset(3, 250), kind="bic", max_parents=2)
    best, best_score = exhaustive_best_dag(table)
    scores = {d: table.network_score(d) for d in enumerate_dags(3, max_in_degree=2)}
    top = max(scores.values())
    assert best_score == pytest.approx(top, abs=0)
    assert scores[best] == pytest.approx(top, abs=0)
    # ties resolve to the smallest off-diagonal bit-vector
    tied = [d for d, s in scores.items() if s == top]
    assert best.offdiag_bits() == min(d.offdiag_bits() for d in tied)


def test_exhaustive_respects_in_degree_cap():
    table = build_score_table(binary_dataset(5, 150, 4), kind="bic", max_parents=2)
    _, unc = exhaustive_best_dag(table)
    capped_dag, capped = exhaustive_best_dag(table, max_in_degree=1)
    assert int(capped_dag.in_degrees().max()) <= 1
    assert capped <= unc + 1e-12


def test_bdeu_ess_changes_scores():
    a = local_score(DATA, 2, (0,), kind="bdeu", ess=1.0)
    b = local_score(DATA, 2, (0,), kind="bdeu", ess=16.0)
    assert a != b
