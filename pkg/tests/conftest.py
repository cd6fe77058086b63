import numpy as np
import pytest
from hypothesis import settings

from qbnsl import DiscreteDataset, build_hamiltonian, build_score_table

# property tests run on a slow single-core box; generous deadlines
settings.register_profile("ci", deadline=None, max_examples=50)
settings.load_profile("ci")


def binary_dataset(seed: int, rows: int, n: int) -> DiscreteDataset:
    rng = np.random.default_rng(seed)
    return DiscreteDataset.from_codes(rng.integers(0, 2, size=(rows, n)), (2,) * n)


def chain_dataset(seed: int, rows: int) -> DiscreteDataset:
    """Three binary variables with a clear X0 -> X2 <- X1 signal."""
    rng = np.random.default_rng(seed)
    x0 = rng.integers(0, 2, rows)
    x1 = rng.integers(0, 2, rows)
    flip = np.array([0.1, 0.8, 0.7, 0.15])
    x2 = (rng.random(rows) < flip[2 * x0 + x1]).astype(int)
    return DiscreteDataset.from_codes(np.stack([x0, x1, x2], axis=1), (2, 2, 2))


@pytest.fixture(scope="session")
def small_ham():
    table = build_score_table(chain_dataset(7, 300), kind="bic", max_parents=2)
    return build_hamiltonian(table)


@pytest.fixture(scope="session")
def small_table():
    return build_score_table(chain_dataset(7, 300), kind="bic", max_parents=2)
