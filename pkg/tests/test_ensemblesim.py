import math

import numpy as np
import pytest

from models.models import EnsembleSpec
from services.ensemblesim import (
    covariance_zscores,
    density_factory,
    derive_chain_seeds,
    diagonal_shift_zscores,
    empirical_moments,
    log_density,
    mean_zscores,
    merge_batches,
    sample,
    sample_chains,
    wlt_centering,
    wlt_scale,
)
from services.freezecov import build_freezing_covariance, limit_mean
from utils.errors import DomainError
from utils.validators import in_chamber


def test_density_is_minus_infinity_outside_the_chamber():
    hermite = EnsembleSpec(kind="hermite", n=3)
    assert log_density(hermite, 10.0, [1.0, 0.0, 2.0]) == -math.inf
    assert math.isfinite(log_density(hermite, 10.0, [-1.0, 0.0, 1.0]))
    laguerre = EnsembleSpec(kind="laguerre", n=2, nu=2.0)
    assert log_density(laguerre, 10.0, [-0.1, 1.0]) == -math.inf
    trig = EnsembleSpec(kind="jacobi-trig", n=2)
    assert log_density(trig, 10.0, [0.2, 1.0]) == -math.inf
    jacobi = EnsembleSpec(kind="jacobi", n=2)
    assert log_density(jacobi, 10.0, [-0.5, 1.0]) == -math.inf


def test_hermite_density_formula():
    spec = EnsembleSpec(kind="hermite", n=2)
    y = np.array([-1.0, 2.0])
    expected = -5.0 / 4.0 + 2.0 * 3.0 * math.log(3.0)
    assert density_factory(spec, 3.0, t=2.0)(y) == pytest.approx(expected)


def test_bad_parameters_rejected():
    spec = EnsembleSpec(kind="hermite", n=2)
    with pytest.raises(DomainError):
        density_factory(spec, 0.0)
    with pytest.raises(DomainError):
        density_factory(spec, 1.0, t=-1.0)
    with pytest.raises(DomainError):
        sample(spec, 10.0, samples=0)
    with pytest.raises(DomainError):
        sample(spec, 10.0, samples=10, start=[1.0, 0.0])


def test_centering_is_in_the_chamber():
    for spec in (
        EnsembleSpec(kind="hermite", n=4),
        EnsembleSpec(kind="laguerre", n=4, nu=2.0),
        EnsembleSpec(kind="jacobi-trig", n=4, a=1.0, b=2.0),
        EnsembleSpec(kind="jacobi", n=4, a=1.0, b=2.0),
    ):
        assert in_chamber(spec.kind, wlt_centering(spec, 100.0, t=2.0))


def test_scale():
    assert wlt_scale(EnsembleSpec(kind="hermite", n=2), t=4.0) == pytest.approx(0.5)
    assert wlt_scale(EnsembleSpec(kind="jacobi", n=2), beta_like=9.0) == pytest.approx(3.0)


def test_sampling_is_reproducible():
    spec = EnsembleSpec(kind="laguerre", n=3, nu=2.0)
    first = sample(spec, 50.0, samples=200, burn_in=100, seed=7, thinning=2)
    second = sample(spec, 50.0, samples=200, burn_in=100, seed=7, thinning=2)
    other = sample(spec, 50.0, samples=200, burn_in=100, seed=8, thinning=2)
    assert np.array_equal(first.draws, second.draws)
    assert not np.array_equal(first.draws, other.draws)
    assert first.draws.shape == (200, 3)
    assert all(in_chamber("laguerre", row) for row in first.draws)


def test_trig_jacobi_chain_stays_in_chamber():
    spec = EnsembleSpec(kind="jacobi-trig", n=3, a=1.0, b=1.5)
    batch = sample(spec, 200.0, samples=500, burn_in=500, seed=3, thinning=1)
    assert all(in_chamber("jacobi-trig", row) for row in batch.draws)
    assert 0.05 <= batch.acceptance_rate <= 0.8
    assert not batch.tuning_warning


def test_single_hermite_particle_has_unit_variance():
    spec = EnsembleSpec(kind="hermite", n=1)
    batch = sample(spec, 1e4, t=2.0, samples=20000, burn_in=2000, seed=11, thinning=2)
    moments = empirical_moments(batch, wlt_centering(spec, 1e4, t=2.0), wlt_scale(spec, t=2.0))
    assert abs(moments.covariance[0, 0] - 1.0) <= 4.0 * moments.se[0, 0]
    assert abs(moments.mean[0]) <= 4.0 * moments.mean_se[0]


def test_two_hermite_particles_match_the_frozen_covariance():
    spec = EnsembleSpec(kind="hermite", n=2)
    beta_like = 500.0
    batch = sample(spec, beta_like, samples=20000, burn_in=2000, seed=5, thinning=2)
    moments = empirical_moments(batch, wlt_centering(spec, beta_like), wlt_scale(spec))
    sigma = build_freezing_covariance(spec).sigma_matrix
    assert np.max(np.abs(moments.covariance - sigma)) <= 0.1


def test_sample_mean_centering_gives_zero_mean():
    spec = EnsembleSpec(kind="hermite", n=2)
    batch = sample(spec, 100.0, samples=500, burn_in=200, seed=1, thinning=1)
    moments = empirical_moments(batch, batch.draws.mean(axis=0), 1.0)
    assert np.allclose(moments.mean, 0.0, atol=1e-12)
    assert np.allclose(moments.covariance, moments.covariance.T)


def test_moments_need_enough_draws():
    spec = EnsembleSpec(kind="hermite", n=1)
    batch = sample(spec, 10.0, samples=50, burn_in=10, seed=0, thinning=1)
    with pytest.raises(DomainError):
        empirical_moments(batch, [0.0], 1.0)


def test_chain_seeds_and_merging():
    seeds = derive_chain_seeds(42, 3)
    assert len(set(seeds)) == 3
    assert seeds == derive_chain_seeds(42, 3)
    with pytest.raises(DomainError):
        derive_chain_seeds(42, 0)

    spec = EnsembleSpec(kind="hermite", n=2)
    merged = sample_chains(spec, 20.0, chains=3, seed=42, samples=100, burn_in=50, thinning=1)
    assert merged.draws.shape == (300, 2)
    single = sample(spec, 20.0, seed=seeds[1], samples=100, burn_in=50, thinning=1)
    assert np.array_equal(merged.draws[100:200], single.draws)

    other = sample(EnsembleSpec(kind="hermite", n=2), 30.0, samples=10, burn_in=0, thinning=1)
    with pytest.raises(DomainError):
        merge_batches([single, other])
    with pytest.raises(DomainError):
        merge_batches([])


def test_zscores_handle_zero_standard_errors():
    from models.models import Moments

    moments = Moments(
        mean=np.array([0.0, 1.0]),
        covariance=np.array([[1.0, 0.0], [0.0, 2.0]]),
        se=np.array([[0.5, 0.0], [0.0, 0.0]]),
        mean_se=np.array([0.0, 0.5]),
        n_batches=10,
    )
    z = covariance_zscores(moments, np.eye(2))
    assert z[0, 0] == 0.0 and z[0, 1] == 0.0 and z[1, 1] == np.inf
    assert np.array_equal(mean_zscores(moments, np.zeros(2)), np.array([0.0, 2.0]))


def test_diagonal_shift_uses_the_joint_error():
    from models.models import Moments

    def moments(diagonal, se):
        return Moments(
            mean=np.zeros(2),
            covariance=np.diag(diagonal),
            se=np.diag(se),
            mean_se=np.ones(2),
            n_batches=10,
        )

    z = diagonal_shift_zscores(moments([1.0, 2.0], [0.3, 0.0]), moments([1.5, 2.0], [0.4, 0.0]))
    assert z == pytest.approx([1.0, 0.0])


@pytest.mark.slow
@pytest.mark.parametrize("spec", [EnsembleSpec(kind="hermite", n=2), EnsembleSpec(kind="laguerre", n=2, nu=2.0)])
def test_freezing_covariance_by_sampling(spec):
    beta_like = 1e4
    batch = sample(spec, beta_like, samples=100000, burn_in=10000, seed=2024, thinning=10)
    moments = empirical_moments(batch, wlt_centering(spec, beta_like), wlt_scale(spec))
    sigma = build_freezing_covariance(spec).sigma_matrix
    assert np.all(np.abs(covariance_zscores(moments, sigma)) < 4.0)
    assert np.all(np.abs(mean_zscores(moments, limit_mean(spec))) < 4.0)


@pytest.mark.slow
@pytest.mark.parametrize("spec", [EnsembleSpec(kind="hermite", n=2), EnsembleSpec(kind="laguerre", n=2, nu=2.0)])
def test_variance_stabilizes_when_beta_doubles(spec):
    runs = []
    for beta_like in (5e3, 1e4):
        batch = sample(spec, beta_like, samples=100000, burn_in=10000, seed=2024, thinning=10)
        moments = empirical_moments(batch, wlt_centering(spec, beta_like), wlt_scale(spec, beta_like=beta_like))
        runs.append(moments)
    assert np.all(diagonal_shift_zscores(*runs) < 6.0)
