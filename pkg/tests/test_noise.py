import csv

import numpy as np
import pytest
from scipy.stats import norm

from gf2 import DimensionError, SparseBitMatrix
from noise import (
    NoiseParams, PauliErrorVector, ideal_syndrome, observe_syndrome,
    sample_depolarizing, write_observations_csv,
)


class FixedNormals:
    """Stands in for a Generator when a test needs exact noise values."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)

    def standard_normal(self, size):
        assert size == self.values.size
        return self.values


# ─── Depolarizing channel ───

def test_noiseless_channel(rng):
    e = sample_depolarizing(500, 0.0, rng)
    assert not e.e_x.any() and not e.e_z.any()


def test_certain_error_has_x_component_two_thirds_of_the_time(rng):
    n = 200_000
    e = sample_depolarizing(n, 1.0, rng)
    assert np.all(e.e_x | e.e_z)
    frac = e.e_x.mean()
    assert abs(frac - 2 / 3) < 3 * np.sqrt((2 / 9) / n)


def test_marginal_and_y_rates(rng):
    n, p = 100_000, 0.05
    e = sample_depolarizing(n, p, rng)
    for q, observed in ((2 * p / 3, e.e_x.mean()), (2 * p / 3, e.e_z.mean()), (p / 3, (e.e_x & e.e_z).mean())):
        assert abs(observed - q) < 3 * np.sqrt(q * (1 - q) / n)


def test_invalid_probability(rng):
    with pytest.raises(ValueError):
        sample_depolarizing(3, 1.5, rng)
    with pytest.raises(ValueError):
        NoiseParams(p=-0.1, sigma=0.0)
    with pytest.raises(ValueError):
        NoiseParams(p=0.1, sigma=-1.0)


def test_pauli_string():
    e = PauliErrorVector.from_supports(4, x_support=[0, 2], z_support=[1, 2])
    assert e.pauli_string() == "XZYI"
    with pytest.raises(DimensionError):
        PauliErrorVector(np.zeros(3, dtype=np.uint8), np.zeros(4, dtype=np.uint8))


# ─── Syndromes ───

def test_ideal_syndrome_of_single_qubit_is_a_column(rep3):
    assert not ideal_syndrome(rep3.h_z, np.zeros(rep3.n, dtype=np.uint8)).any()
    dense = rep3.h_z.to_dense()
    for j in range(rep3.n):
        e = np.zeros(rep3.n, dtype=np.uint8)
        e[j] = 1
        assert np.array_equal(ideal_syndrome(rep3.h_z, e), dense[:, j])


def test_ideal_syndrome_dimension_mismatch():
    H = SparseBitMatrix.from_dense([[1, 1]])
    with pytest.raises(DimensionError):
        ideal_syndrome(H, np.zeros(3, dtype=np.uint8))


def test_noiseless_observation_saturates():
    obs = observe_syndrome(np.array([0, 1], dtype=np.uint8), 0.0, llr_sat=30.0)
    assert obs.hard_sign.tolist() == [1, -1]
    assert obs.llr.tolist() == [30.0, -30.0]
    assert obs.hard_bits.tolist() == [0, 1]


def test_llr_is_two_r_over_sigma_squared():
    # raw = 1 + 0.5 * (-1) = 0.5, sigma^2 = 0.25
    obs = observe_syndrome(np.array([0], dtype=np.uint8), 0.5, rng=FixedNormals([-1.0]))
    assert obs.raw[0] == pytest.approx(0.5)
    assert obs.llr[0] == pytest.approx(4.0)


def test_zero_readout_counts_as_satisfied():
    obs = observe_syndrome(np.array([0], dtype=np.uint8), 0.5, rng=FixedNormals([-2.0]))
    assert obs.raw[0] == 0.0
    assert obs.hard_sign[0] == 1


def test_llr_is_clamped(rng):
    obs = observe_syndrome(rng.integers(0, 2, size=10_000), 0.05, llr_sat=7.5, rng=rng)
    assert np.all(np.abs(obs.llr) <= 7.5)
    assert np.all(np.sign(obs.llr[obs.llr != 0]) == np.sign(obs.raw[obs.llr != 0]))


def test_noisy_observation_needs_a_generator():
    with pytest.raises(ValueError):
        observe_syndrome(np.zeros(2, dtype=np.uint8), 0.3)


@pytest.mark.parametrize("sigma", [0.3, 0.5])
def test_hard_sign_flip_rate_matches_gaussian_tail(sigma, rng):
    m = 1_000_000
    s = rng.integers(0, 2, size=m).astype(np.uint8)
    obs = observe_syndrome(s, sigma, rng=rng)
    flip_rate = np.mean(obs.hard_bits != s)
    q = norm.sf(1.0 / sigma)
    assert abs(flip_rate - q) < 3 * np.sqrt(q * (1 - q) / m)


def test_observation_dump(tmp_path, rng):
    obs = observe_syndrome(np.array([0, 1, 1], dtype=np.uint8), 0.4, rng=rng)
    path = tmp_path / "noise.csv"
    write_observations_csv(path, [(0, obs), (1, obs)])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["trial", "check", "raw", "llr"]
    assert len(rows) == 7
    assert float(rows[2][2]) == obs.raw[1]
    assert float(rows[2][3]) == obs.llr[1]
