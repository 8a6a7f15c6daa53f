"""Embedded reliability datasets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError


@dataclass(frozen=True)
class Dataset:
    name: str
    values: tuple
    source: str

    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


AIRPLANE = Dataset(
    "airplane",
    (23, 261, 87, 7, 120, 14, 62, 47, 225, 71, 246, 21, 42, 20, 5,
     12, 120, 11, 3, 14, 71, 11, 14, 11, 16, 90, 1, 16, 52, 95),
    "intervals between failures of an airplane air-conditioning system",
)

PUMPS = Dataset(
    "pumps",
    (1, 2, 2, 2, 3, 4, 5, 8, 10, 11, 13, 13, 15, 17, 18, 26, 27, 29,
     10, 14, 14, 18, 21, 24, 28, 31, 34, 38, 41, 61, 15, 21, 23, 26, 33,
     41, 43, 43, 56, 10, 25, 39, 42, 48, 52, 24, 26, 34, 43, 44, 49, 51,
     37, 40, 0, 0, 0, 0, 0, 0, 0),
    "times to failure of 61 cam-driven reciprocating pumps",
)

DATASETS = {d.name: d for d in (AIRPLANE, PUMPS)}


def load(name: str) -> Dataset:
    try:
        return DATASETS[name.strip().lower()]
    except KeyError:
        raise DomainError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}") from None
