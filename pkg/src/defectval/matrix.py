from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    """Feature matrix plus boolean defect labels and per-row origin tags."""

    features: np.ndarray
    labels: np.ndarray
    release_ids: np.ndarray
    unit_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        labels = np.asarray(self.labels, dtype=bool)
        release_ids = np.asarray(self.release_ids, dtype=np.int64)
        n = features.shape[0]
        if n < 1:
            raise ValueError("a LabeledMatrix needs at least one row")
        if labels.shape != (n,) or release_ids.shape != (n,) or len(self.unit_names) != n:
            raise ValueError("row count of features, labels and origin tags differ")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "release_ids", _frozen(release_ids))
        object.__setattr__(self, "unit_names", tuple(self.unit_names))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def take(self, rows: np.ndarray) -> LabeledMatrix:
        """Row subset; duplicates in ``rows`` are kept (bootstrap training)."""
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledMatrix(
            self.features[rows],
            self.labels[rows],
            self.release_ids[rows],
            tuple(self.unit_names[i] for i in rows),
        )
