import math

import numpy as np
import pytest

from andersonclock import (CouplingVariant, DisorderDistribution, DisorderRealization,
                           ModelParams, ValidationError, build_hamiltonian, coupling,
                           coupling_sequence, realization_to_csv, sample_disorder)
from conftest import dense_eigenvalues

ALL_KINDS = [
    DisorderDistribution.point_mass_zero(),
    DisorderDistribution.bernoulli_pm1(),
    DisorderDistribution.uniform(1.0),
    DisorderDistribution.symmetrized_pareto(1.0),
    DisorderDistribution.cauchy(1.0),
]


class TestSampling:
    def test_point_mass_zero_is_zero(self):
        r = sample_disorder(DisorderDistribution.point_mass_zero(), 3, 12345)
        assert np.array_equal(r.values, np.zeros(3))

    def test_bernoulli_support_and_mean(self):
        n = 10**5
        r = sample_disorder(DisorderDistribution.bernoulli_pm1(), n, 7)
        assert set(np.unique(r.values)) == {-1.0, 1.0}
        assert abs(r.values.mean()) < 3.0 / math.sqrt(n)

    def test_pareto_tail_fraction(self):
        # P(|w| > 10) = 0.1 exactly for delta=1, scale=1
        n = 10**6
        r = sample_disorder(DisorderDistribution.symmetrized_pareto(1.0), n, 11)
        frac = np.mean(np.abs(r.values) > 10.0)
        assert abs(frac - 0.1) < 3.0 * math.sqrt(0.1 * 0.9 / n)

    @pytest.mark.parametrize("delta", [1.0, 1.5])
    def test_pareto_tail_slope(self, delta):
        # consecutive-octave slopes of log2 P(|w| > R) all equal -delta within 3 sigma
        n = 10**6
        r = sample_disorder(DisorderDistribution.symmetrized_pareto(delta), n, 13)
        a = np.abs(r.values)
        for radius in (2.0, 4.0, 8.0):
            p1 = np.mean(a > radius)
            q = 2.0 ** (-delta)  # conditional survival across one octave
            slope = math.log2(np.mean(a > 2 * radius) / p1)
            sigma = math.sqrt((1 - q) / (n * p1 * q)) / math.log(2)
            assert abs(slope + delta) < 3.0 * sigma

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind)
    @pytest.mark.parametrize("k_trunc", [1.0, 10.0, 100.0])
    def test_symmetry_truncated_mean(self, dist, k_trunc):
        n = 10**6
        r = sample_disorder(dist, n, 17)
        inside = r.values[np.abs(r.values) <= k_trunc]
        if inside.size == 0:
            return
        se = inside.std() / math.sqrt(inside.size)
        assert abs(inside.mean()) <= 4.0 * se + 1e-15

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind)
    def test_determinism_and_order_independence(self, dist):
        a1 = sample_disorder(dist, 64, 99, index=3).values
        b = sample_disorder(dist, 64, 99, index=1).values
        a2 = sample_disorder(dist, 64, 99, index=3).values
        assert np.array_equal(a1, a2)
        if dist.kind != "point_mass_zero":
            assert not np.array_equal(a1, b)

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind)
    def test_prefix_property(self, dist):
        short = sample_disorder(dist, 50, 42, index=5).values
        long = sample_disorder(dist, 200, 42, index=5).values
        assert np.array_equal(short, long[:50])

    def test_values_are_read_only(self):
        r = sample_disorder(DisorderDistribution.uniform(1.0), 8, 5)
        with pytest.raises(ValueError):
            r.values[0] = 0.0

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValidationError):
            DisorderDistribution.symmetrized_pareto(-1.0)
        with pytest.raises(ValidationError):
            DisorderDistribution.symmetrized_pareto(1.0, scale=0.0)
        with pytest.raises(ValidationError):
            DisorderDistribution.uniform(-2.0)
        with pytest.raises(ValidationError):
            DisorderDistribution("no_such_kind")
        with pytest.raises(ValidationError):
            DisorderDistribution("uniform", half_width=1.0, delta=2.0)
        with pytest.raises(ValidationError):
            sample_disorder(DisorderDistribution.uniform(1.0), 0, 1)
        with pytest.raises(ValidationError):
            sample_disorder(DisorderDistribution.uniform(1.0), 5, -1)

    def test_tail_exponent(self):
        assert DisorderDistribution.symmetrized_pareto(2.5).tail_exponent == 2.5
        assert DisorderDistribution.cauchy().tail_exponent == 1.0
        assert math.isinf(DisorderDistribution.uniform(1.0).tail_exponent)
        assert math.isinf(DisorderDistribution.point_mass_zero().tail_exponent)


class TestKeyValue:
    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: d.kind)
    def test_round_trip(self, dist):
        assert DisorderDistribution.from_keyvalue(dist.to_keyvalue()) == dist

    def test_rejects_stray_key(self):
        with pytest.raises(ValidationError):
            DisorderDistribution.from_keyvalue("kind = uniform\nhalf_width = 1\nbogus = 2\n")

    def test_rejects_missing_kind(self):
        with pytest.raises(ValidationError):
            DisorderDistribution.from_keyvalue("half_width = 1\n")


class TestParamsAndCoupling:
    def test_coupling_values(self):
        p = ModelParams(alpha=1.0, size=10)
        assert coupling(p, 4) == 0.25
        assert coupling(ModelParams(alpha=2.0, size=10), 1) == 1.0
        p16 = ModelParams(alpha=0.75, size=16, variant=CouplingVariant.UNIFORM_SCALED)
        for n in (1, 7, 16):
            assert coupling(p16, n) == pytest.approx(0.125, abs=0.0)

    def test_coupling_sequence_matches_scalar(self):
        # vectorized and scalar pow may differ in the last ulp
        p = ModelParams(alpha=0.6, size=25)
        seq = coupling_sequence(p)
        scalar = np.array([coupling(p, n) for n in range(1, 26)])
        assert np.allclose(seq, scalar, rtol=5e-16, atol=0.0)
        assert np.all(seq > 0)

    def test_out_of_range_site(self):
        p = ModelParams(alpha=1.0, size=10)
        with pytest.raises(ValidationError):
            coupling(p, 0)
        with pytest.raises(ValidationError):
            coupling(p, 11)

    def test_invalid_params(self):
        with pytest.raises(ValidationError):
            ModelParams(alpha=0.0, size=5)
        with pytest.raises(ValidationError):
            ModelParams(alpha=1.0, size=0)
        with pytest.raises(ValidationError):
            ModelParams(alpha=1.0, size=5, energy_theta=math.pi)
        with pytest.raises(ValidationError):
            ModelParams(alpha=1.0, size=5, energy_theta=0.0)

    def test_energy(self):
        p = ModelParams(alpha=1.0, size=5, energy_theta=math.pi / 3)
        assert p.energy == pytest.approx(1.0, abs=1e-15)


class TestHamiltonian:
    def test_free_spectrum(self):
        p = ModelParams(alpha=1.0, size=5)
        d = sample_disorder(DisorderDistribution.point_mass_zero(), 5, 0)
        op = build_hamiltonian(p, d)
        assert np.array_equal(op.diagonal, np.zeros(5))
        want = np.sort([2 * math.cos(k * math.pi / 6) for k in range(1, 6)])
        assert np.max(np.abs(dense_eigenvalues(op.diagonal) - want)) < 1e-12

    def test_single_site(self):
        p = ModelParams(alpha=1.0, size=1)
        d = DisorderRealization(values=np.array([0.3]), master_seed=0, realization_index=0)
        op = build_hamiltonian(p, d)
        assert dense_eigenvalues(op.diagonal)[0] == pytest.approx(0.3, abs=0.0)

    def test_diagonal_is_coupling_times_omega(self):
        p = ModelParams(alpha=1.0, size=50)
        d = sample_disorder(DisorderDistribution.uniform(1.0), 50, 3)
        op = build_hamiltonian(p, d)
        assert np.array_equal(op.diagonal, coupling_sequence(p) * d.values)

    def test_length_mismatch(self):
        p = ModelParams(alpha=1.0, size=5)
        d = sample_disorder(DisorderDistribution.uniform(1.0), 6, 3)
        with pytest.raises(ValidationError):
            build_hamiltonian(p, d)

    def test_spectral_bound_contains_spectrum(self):
        p = ModelParams(alpha=1.0, size=40)
        d = sample_disorder(DisorderDistribution.cauchy(1.0), 40, 21)
        op = build_hamiltonian(p, d)
        evals = dense_eigenvalues(op.diagonal)
        assert evals[0] >= -op.spectral_bound() and evals[-1] <= op.spectral_bound()


def test_realization_csv_round_trip(tmp_path):
    p = ModelParams(alpha=1.0, size=4)
    d = sample_disorder(DisorderDistribution.uniform(1.0), 4, 77)
    path = tmp_path / "realization.csv"
    realization_to_csv(p, d, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,omega_n,a_n,d_n"
    assert len(lines) == 5
    row = lines[2].split(",")
    assert int(row[0]) == 2
    assert float(row[1]) == d.values[1]
    assert float(row[2]) == 0.5
    assert float(row[3]) == 0.5 * d.values[1]
