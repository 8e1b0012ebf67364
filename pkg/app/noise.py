"""Depolarizing qubit errors, ideal syndromes and Gaussian-perturbed soft syndrome readout."""

from __future__ import annotations

import csv
import logging
import pathlib
from dataclasses import dataclass

import numpy as np

from config import DEFAULT_LLR_SAT
from gf2 import BitVector, DimensionError, SparseBitMatrix, mat_vec_mod2

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PauliErrorVector:
    """Binary (X | Z) form; a qubit with both bits set carries a Y."""

    e_x: BitVector
    e_z: BitVector

    def __post_init__(self):
        if self.e_x.shape != self.e_z.shape:
            raise DimensionError(f"X part has {self.e_x.size} qubits, Z part {self.e_z.size}")

    @property
    def n(self) -> int:
        return int(self.e_x.size)

    @classmethod
    def from_supports(cls, n: int, x_support=(), z_support=()) -> PauliErrorVector:
        e_x = np.zeros(n, dtype=np.uint8)
        e_z = np.zeros(n, dtype=np.uint8)
        e_x[list(x_support)] = 1
        e_z[list(z_support)] = 1
        return cls(e_x, e_z)

    def pauli_string(self) -> str:
        letters = np.array(["I", "X", "Z", "Y"])
        return "".join(letters[self.e_x + 2 * self.e_z])


@dataclass(frozen=True)
class NoiseParams:
    p: float
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing probability {self.p} outside [0, 1]")
        if self.sigma < 0:
            raise ValueError(f"syndrome noise sigma {self.sigma} is negative")


@dataclass(frozen=True, eq=False)
class SyndromeObservation:
    raw: np.ndarray
    hard_sign: np.ndarray
    llr: np.ndarray

    @property
    def m(self) -> int:
        return int(self.raw.size)

    @property
    def hard_bits(self) -> BitVector:
        return (self.hard_sign < 0).astype(np.uint8)


def sample_depolarizing(n: int, p: float, rng: np.random.Generator) -> PauliErrorVector:
    """Each qubit: I w.p. 1-p, else X, Y, Z with p/3 each."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    u = rng.random(n)
    is_x = u < p / 3
    is_y = (u >= p / 3) & (u < 2 * p / 3)
    is_z = (u >= 2 * p / 3) & (u < p)
    e_x = (is_x | is_y).astype(np.uint8)
    e_z = (is_z | is_y).astype(np.uint8)
    return PauliErrorVector(e_x, e_z)


def ideal_syndrome(H: SparseBitMatrix, e: BitVector) -> BitVector:
    return mat_vec_mod2(H, e)


def observe_syndrome(s_bits: BitVector, sigma: float, llr_sat: float = DEFAULT_LLR_SAT,
                     rng: np.random.Generator | None = None) -> SyndromeObservation:
    """Bipolar syndrome (bit 0 -> +1) plus N(0, sigma^2); LLR 2 r / sigma^2 clamped to +-llr_sat."""
    if sigma < 0:
        raise ValueError(f"syndrome noise sigma {sigma} is negative")
    if llr_sat <= 0:
        raise ValueError("llr_sat must be positive")
    bipolar = 1.0 - 2.0 * np.asarray(s_bits, dtype=np.float64)
    if sigma == 0:
        raw = bipolar
        llr = bipolar * llr_sat
    else:
        if rng is None:
            raise ValueError("a generator is required when sigma > 0")
        raw = bipolar + sigma * rng.standard_normal(bipolar.size)
        llr = np.clip(2.0 * raw / sigma**2, -llr_sat, llr_sat)
    hard_sign = np.where(raw >= 0, 1, -1).astype(np.int8)
    return SyndromeObservation(raw=raw, hard_sign=hard_sign, llr=llr)


def write_observations_csv(path, observations) -> None:
    """observations: iterable of (trial, SyndromeObservation)."""
    with open(pathlib.Path(path), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["trial", "check", "raw", "llr"])
        for trial, obs in observations:
            for i in range(obs.m):
                writer.writerow([trial, i, repr(float(obs.raw[i])), repr(float(obs.llr[i]))])
