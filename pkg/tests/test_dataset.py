import numpy as np
import pytest

from qbnsl import DatasetError, DiscreteDataset, read_csv_dataset


def test_from_codes_defaults():
    ds = DiscreteDataset.from_codes([[0, 1], [1, 2]], (2, 3))
    assert ds.num_rows == 2
    assert ds.num_variables == 2
    assert ds.names == ("X1", "X2")
    assert ds.state_labels == (("0", "1"), ("0", "1", "2"))


def test_validation_rejects_bad_shapes_and_codes():
    with pytest.raises(DatasetError):
        DiscreteDataset.from_codes(np.zeros((0, 2), dtype=int), (2, 2))
    with pytest.raises(DatasetError):
        DiscreteDataset.from_codes([[0, 2]], (2, 2))  # code out of range
    with pytest.raises(DatasetError):
        DiscreteDataset.from_codes([[0, -1]], (2, 2))
    with pytest.raises(DatasetError):
        DiscreteDataset.from_codes([[0]], (1,))  # cardinality < 2
    with pytest.raises(DatasetError):
        DiscreteDataset.from_codes([[0, 0]], (2,))  # card count mismatch


def test_values_are_read_only():
    ds = DiscreteDataset.from_codes([[0, 1]], (2, 2))
    with pytest.raises(ValueError):
        ds.values[0, 0] = 1


def test_restrict_keeps_given_order():
    ds = DiscreteDataset.from_codes(
        [[0, 1, 2], [1, 0, 0]], (2, 2, 3), names=("A", "B", "C")
    )
    sub = ds.restrict([2, 0])
    assert sub.names == ("C", "A")
    assert sub.cardinalities == (3, 2)
    assert sub.values.tolist() == [[2, 0], [0, 1]]


def test_csv_round_trip(tmp_path):
    ds = DiscreteDataset.from_codes(
        [[0, 2], [1, 0], [0, 1]],
        (2, 3),
        names=("Rain", "Mood"),
        state_labels=(("no", "yes"), ("low", "mid", "high")),
    )
    path = tmp_path / "d.csv"
    ds.to_csv(path)
    back = read_csv_dataset(path)
    assert back.names == ds.names
    # label->code maps are rebuilt in first-appearance order
    rebuilt = [
        [back.state_labels[i][back.values[r, i]] for i in range(2)]
        for r in range(3)
    ]
    original = [
        [ds.state_labels[i][ds.values[r, i]] for i in range(2)] for r in range(3)
    ]
    assert rebuilt == original


def test_read_csv_rejects_degenerate_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("")
    with pytest.raises(DatasetError):
        read_csv_dataset(p)
    p.write_text("A,A\n0,1\n1,0\n")
    with pytest.raises(DatasetError):
        read_csv_dataset(p)
    p.write_text("A,B\n0,1\n0,0\n")  # A is constant
    with pytest.raises(DatasetError):
        read_csv_dataset(p)
