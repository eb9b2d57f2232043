"""Triangular beam database: row k tiles the cell with k equal-angle beams.

Row k uses beamwidth theta_k = theta_1 / k with theta_1 = arctan(d_a/h_b),
and ground boundaries at cumulative angles h_b * tan(j * theta_k). Building
from cumulative angles (rather than chaining the recursion) keeps the rows
tiling [0, d_a] without floating-point drift; the last boundary is pinned
to d_a exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfCellError


@dataclass(frozen=True)
class BeamEntry:
    """One beam: angular width plus its ground-interval footprint."""

    theta: float
    d_left: float
    d_right: float
    j: int   # beam index within the row, 1-based
    k: int   # row (dictionary size)

    @property
    def coverage(self) -> float:
        return self.d_right - self.d_left


def beam_boundaries(d_a: float, h_b: float, k: int) -> np.ndarray:
    """The k+1 ground boundaries of row k: h_b*tan(j*theta_k), j = 0..k."""
    if d_a <= 0.0 or h_b <= 0.0:
        raise ValueError("cell size and BS height must be positive")
    if k < 1:
        raise ValueError("dictionary size must be >= 1")
    theta_1 = math.atan2(d_a, h_b)
    angles = np.arange(k + 1) * (theta_1 / k)
    bounds = h_b * np.tan(angles)
    bounds[0] = 0.0
    bounds[-1] = d_a
    return bounds


def row_beamwidth(d_a: float, h_b: float, k: int) -> float:
    return math.atan2(d_a, h_b) / k


@dataclass(frozen=True)
class BeamDictionary:
    """All rows 1..n_max for one side of a BS with cell size d_a."""

    d_a: float
    h_b: float
    n_max: int
    rows: tuple  # rows[k-1] is a tuple of k BeamEntry values

    @property
    def theta_1(self) -> float:
        return math.atan2(self.d_a, self.h_b)

    def row(self, k: int) -> tuple:
        if not 1 <= k <= self.n_max:
            raise ValueError(f"row {k} outside 1..{self.n_max}")
        return self.rows[k - 1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "j", "theta_k", "d_left", "d_right"])
            for row in self.rows:
                for beam in row:
                    writer.writerow([beam.k, beam.j, repr(beam.theta),
                                     repr(beam.d_left), repr(beam.d_right)])


def build_dictionary(d_a: float, h_b: float, n_max: int) -> BeamDictionary:
    """Construct rows 1..n_max of the beam database for one cell side."""
    if d_a <= 0.0 or h_b <= 0.0 or n_max < 1:
        raise ValueError("d_a, h_b must be positive and n_max >= 1")
    rows = []
    for k in range(1, n_max + 1):
        theta_k = row_beamwidth(d_a, h_b, k)
        bounds = beam_boundaries(d_a, h_b, k)
        rows.append(tuple(
            BeamEntry(theta=theta_k, d_left=float(bounds[j - 1]),
                      d_right=float(bounds[j]), j=j, k=k)
            for j in range(1, k + 1)
        ))
    return BeamDictionary(d_a=d_a, h_b=h_b, n_max=n_max, rows=tuple(rows))


def lookup_index(d_a: float, h_b: float, k: int, d_hat: float) -> int:
    """1-based beam index in row k containing d_hat; right-boundary ties
    resolve to the left beam."""
    if not 0.0 <= d_hat <= d_a:
        raise OutOfCellError(f"estimate {d_hat} outside cell [0, {d_a}]")
    bounds = beam_boundaries(d_a, h_b, k)
    j = int(np.searchsorted(bounds, d_hat, side="left"))
    return max(1, min(j, k))


def lookup_beam(dictionary: BeamDictionary, k: int, d_hat: float) -> BeamEntry:
    """The unique beam of row k whose ground interval contains d_hat."""
    j = lookup_index(dictionary.d_a, dictionary.h_b, k, d_hat)
    return dictionary.row(k)[j - 1]
