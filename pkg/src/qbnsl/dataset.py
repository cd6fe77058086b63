"""Discrete datasets for structure learning: integer-coded columns plus label maps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class DatasetError(ValueError):
    """Malformed dataset contents or file."""


@dataclass(frozen=True)
class DiscreteDataset:
    """N x n matrix of integer state codes, one column per variable.

    values[r, i] is the state of variable i in row r, in 0..cardinalities[i]-1.
    Every cardinality is at least 2. state_labels[i][s] is the external label
    of state s of variable i; labels are assigned in first-appearance order
    when reading from CSV.
    """

    values: np.ndarray = field(hash=False)
    cardinalities: tuple[int, ...]
    names: tuple[str, ...]
    state_labels: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.ndim != 2:
            raise DatasetError(f"values must be 2-D, got shape {vals.shape}")
        n_rows, n_vars = vals.shape
        if n_rows < 1:
            raise DatasetError("dataset needs at least one row")
        if n_vars != len(self.cardinalities) or n_vars != len(self.names):
            raise DatasetError("cardinalities/names do not match the column count")
        if len(self.state_labels) != n_vars:
            raise DatasetError("state_labels do not match the column count")
        for i, card in enumerate(self.cardinalities):
            if card < 2:
                raise DatasetError(f"variable {self.names[i]}: cardinality must be >= 2")
            if len(self.state_labels[i]) != card:
                raise DatasetError(f"variable {self.names[i]}: label count != cardinality")
            col = vals[:, i]
            if col.min() < 0 or col.max() >= card:
                raise DatasetError(f"variable {self.names[i]}: state code out of range")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_variables(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_codes(cls, values, cardinalities, names=None, state_labels=None) -> "DiscreteDataset":
        """Build from integer codes, with default names X1..Xn and numeric labels."""
        values = np.asarray(values, dtype=np.int64)
        cards = tuple(int(c) for c in cardinalities)
        if names is None:
            names = tuple(f"X{i + 1}" for i in range(len(cards)))
        if state_labels is None:
            state_labels = tuple(tuple(str(s) for s in range(c)) for c in cards)
        return cls(values, cards, tuple(names), tuple(tuple(l) for l in state_labels))

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def restrict(self, columns) -> "DiscreteDataset":
        """Dataset over a subset of variables (given by index), order preserved."""
        cols = [int(c) for c in columns]
        return DiscreteDataset(
            self.values[:, cols],
            tuple(self.cardinalities[c] for c in cols),
            tuple(self.names[c] for c in cols),
            tuple(self.state_labels[c] for c in cols),
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            for row in self.values:
                w.writerow([self.state_labels[i][row[i]] for i in range(self.num_variables)])


def read_csv_dataset(path) -> DiscreteDataset:
    """Read a dataset from CSV: header row of variable names, then label rows.

    Labels are mapped to integer codes in first-appearance order, scanning
    rows top to bottom. Each variable must take at least two distinct labels.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        names = tuple(h.strip() for h in header)
        if any(not name for name in names):
            raise DatasetError(f"{path}: blank variable name in header")
        if len(set(names)) != len(names):
            raise DatasetError(f"{path}: duplicate variable names in header")
        maps: list[dict[str, int]] = [{} for _ in names]
        rows: list[list[int]] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and rec[0].strip() == ""):
                continue
            if len(rec) != len(names):
                raise DatasetError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(rec)}"
                )
            coded = []
            for i, label in enumerate(rec):
                label = label.strip()
                if label not in maps[i]:
                    maps[i][label] = len(maps[i])
                coded.append(maps[i][label])
            rows.append(coded)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    for i, m in enumerate(maps):
        if len(m) < 2:
            raise DatasetError(
                f"{path}: variable {names[i]} is constant (needs >= 2 observed states)"
            )
    labels = tuple(tuple(sorted(m, key=m.get)) for m in maps)
    cards = tuple(len(m) for m in maps)
    return DiscreteDataset(np.array(rows, dtype=np.int64), cards, names, labels)
