"""
Metropolis-Hastings sampling of the ensemble densities at large beta and
moment extraction for the freezing limit theorems.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

from config.config import settings
from models.models import EnsembleSpec, Moments, SampleBatch
from services.freezecov import frozen_offset_scale, frozen_positions
from services.orthopoly import zeros_and_weights
from utils.errors import DomainError
from utils.validators import check_chamber, in_chamber

logger = logging.getLogger(__name__)

LogDensity = Callable[[np.ndarray], float]

_ACCEPTANCE_BAND = (0.05, 0.8)


def _check_parameters(spec: EnsembleSpec, beta_like: float, t: float) -> None:
    if not beta_like > 0.0:
        raise DomainError(f"beta_like must be positive, got {beta_like}")
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")


def density_factory(spec: EnsembleSpec, beta_like: float, t: float = 1.0) -> LogDensity:
    """
    Unnormalized log density on the ensemble's chamber, -inf outside

    hermite:     -|y|^2/(2t) + 2k sum log(y_j - y_i)
    laguerre:    -|y|^2/(2t) + 2 kappa sum log(y_j^2 - y_i^2) + 2 kappa nu sum log y_i
    jacobi-trig: kappa sum log(cos 2t_j - cos 2t_i) + kappa a sum log sin t_i + kappa b sum log sin 2t_i
    jacobi:      kappa sum log(x_j - x_i) + (kappa (a+b)/2 - 1/2) sum log(1 - x_i)
                 + (kappa b/2 - 1/2) sum log(1 + x_i)
    """
    _check_parameters(spec, beta_like, t)
    upper, lower = np.triu_indices(spec.n, k=1)
    kind = spec.kind

    def log_density(y: np.ndarray) -> float:
        if not in_chamber(kind, y):
            return -math.inf
        if kind == "hermite":
            return float(-np.dot(y, y) / (2.0 * t) + 2.0 * beta_like * np.sum(np.log(y[lower] - y[upper])))
        if kind == "laguerre":
            squares = y * y
            return float(
                -squares.sum() / (2.0 * t)
                + 2.0 * beta_like * np.sum(np.log(squares[lower] - squares[upper]))
                + 2.0 * beta_like * spec.nu * np.sum(np.log(y))
            )
        if kind == "jacobi-trig":
            cosines = np.cos(2.0 * y)
            return float(
                beta_like * np.sum(np.log(cosines[lower] - cosines[upper]))
                + beta_like * spec.a * np.sum(np.log(np.sin(y)))
                + beta_like * spec.b * np.sum(np.log(np.sin(2.0 * y)))
            )
        return float(
            beta_like * np.sum(np.log(y[lower] - y[upper]))
            + (beta_like * (spec.a + spec.b) / 2.0 - 0.5) * np.sum(np.log1p(-y))
            + (beta_like * spec.b / 2.0 - 0.5) * np.sum(np.log1p(y))
        )

    return log_density


def log_density(spec: EnsembleSpec, beta_like: float, y: Sequence[float], t: float = 1.0) -> float:
    """Unnormalized log density at one configuration"""
    return density_factory(spec, beta_like, t)(np.asarray(y, dtype=float))


def wlt_centering(spec: EnsembleSpec, beta_like: float, t: float = 1.0) -> np.ndarray:
    """
    Frozen configuration in sample coordinates:
    sqrt(t) sqrt(2k) z, sqrt(t) sqrt(2 kappa) sqrt(z), arccos(z)/2 or z
    """
    _check_parameters(spec, beta_like, t)
    zeros = zeros_and_weights(spec.family, spec.n).zeros
    positions = frozen_positions(spec, zeros) * frozen_offset_scale(spec, beta_like)
    if spec.kind in ("hermite", "laguerre"):
        positions = positions * math.sqrt(t)
    return positions


def wlt_scale(spec: EnsembleSpec, t: float = 1.0, beta_like: float = 1.0) -> float:
    """Factor turning X - centering into the limit statistic: 1/sqrt(t) or sqrt(kappa)"""
    _check_parameters(spec, beta_like, t)
    if spec.kind in ("hermite", "laguerre"):
        return 1.0 / math.sqrt(t)
    return math.sqrt(beta_like)


def sample(
    spec: EnsembleSpec,
    beta_like: float,
    t: float = 1.0,
    samples: Optional[int] = None,
    burn_in: Optional[int] = None,
    seed: int = 0,
    thinning: Optional[int] = None,
    start: Optional[Sequence[float]] = None,
) -> SampleBatch:
    """
    Random-walk Metropolis on the unnormalized log density

    Proposals move every coordinate by exp(log_step)/scale times a standard
    normal, scale being the limit-statistic scale. log_step follows a
    Robbins-Monro recursion towards the target acceptance during burn-in and
    is frozen afterwards. Proposals leaving the chamber are rejected.

    Args:
        spec: Ensemble and parameters
        beta_like: k (Hermite), kappa (Laguerre, Jacobi)
        t: Time scale of the Hermite/Laguerre densities
        samples: Retained draws M
        burn_in: Adaptation steps before retention
        seed: Seed of numpy's default generator
        thinning: Steps between retained draws
        start: Initial configuration, the frozen configuration by default

    Returns:
        SampleBatch with M x N draws
    """
    samples = settings.mh_samples if samples is None else samples
    burn_in = settings.mh_burn_in if burn_in is None else burn_in
    thinning = settings.mh_thinning if thinning is None else thinning
    if samples < 1 or burn_in < 0 or thinning < 1:
        raise DomainError(f"need samples >= 1, burn_in >= 0, thinning >= 1; got {samples}, {burn_in}, {thinning}")

    target = density_factory(spec, beta_like, t)
    scale = wlt_scale(spec, t, beta_like)
    state = wlt_centering(spec, beta_like, t) if start is None else np.array(start, dtype=float)
    check_chamber(spec.kind, state)
    current = target(state)

    total = burn_in + samples * thinning
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((total, spec.n))
    log_uniforms = np.log(rng.random(total))

    log_step = 0.0
    goal = settings.mh_target_acceptance
    draws = np.empty((samples, spec.n))
    accepted = 0
    for i in range(total):
        step = math.exp(log_step) / scale
        proposal = state + step * normals[i]
        candidate = target(proposal)
        accept = candidate - current >= log_uniforms[i]
        if accept:
            state, current = proposal, candidate
        if i < burn_in:
            log_step += ((1.0 if accept else 0.0) - goal) / (i + 1) ** 0.6
            continue
        accepted += int(accept)
        kept = i - burn_in
        if (kept + 1) % thinning == 0:
            draws[kept // thinning] = state

    rate = accepted / (samples * thinning)
    warning = not _ACCEPTANCE_BAND[0] <= rate <= _ACCEPTANCE_BAND[1]
    if warning:
        logger.warning(f"MH acceptance {rate:.3f} outside {_ACCEPTANCE_BAND} for {spec.kind} N={spec.n}")
    logger.info(f"Sampled {samples} draws for {spec.kind} N={spec.n} beta={beta_like:g}: acceptance {rate:.3f}")

    return SampleBatch(
        spec=spec,
        beta_like=beta_like,
        t=t,
        draws=draws,
        acceptance_rate=rate,
        seed=seed,
        step_size=math.exp(log_step),
        burn_in=burn_in,
        thinning=thinning,
        tuning_warning=warning,
    )


def derive_chain_seeds(seed: int, chains: int) -> List[int]:
    """Independent child seeds through numpy's SeedSequence.spawn"""
    if chains < 1:
        raise DomainError(f"chains must be >= 1, got {chains}")
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(chains)]


def merge_batches(batches: Sequence[SampleBatch]) -> SampleBatch:
    """Concatenate chains of the same target; acceptance is averaged by draw count"""
    if not batches:
        raise DomainError("nothing to merge")
    first = batches[0]
    for batch in batches[1:]:
        if batch.spec != first.spec or batch.beta_like != first.beta_like or batch.t != first.t:
            raise DomainError("batches sample different targets")
    counts = np.array([len(batch.draws) for batch in batches], dtype=float)
    rates = np.array([batch.acceptance_rate for batch in batches])
    return first.model_copy(update={
        "draws": np.vstack([batch.draws for batch in batches]),
        "acceptance_rate": float(np.dot(counts, rates) / counts.sum()),
        "step_size": float(np.mean([batch.step_size for batch in batches])),
        "tuning_warning": any(batch.tuning_warning for batch in batches),
    })


def sample_chains(
    spec: EnsembleSpec,
    beta_like: float,
    chains: int = 1,
    seed: int = 0,
    **kwargs,
) -> SampleBatch:
    """Run independent chains on derived seeds and merge them in seed order"""
    if chains == 1:
        return sample(spec, beta_like, seed=seed, **kwargs)
    seeds = derive_chain_seeds(seed, chains)
    with ThreadPoolExecutor(max_workers=max(1, settings.threads)) as executor:
        batches = list(executor.map(lambda s: sample(spec, beta_like, seed=s, **kwargs), seeds))
    return merge_batches(batches)


def empirical_moments(
    batch: SampleBatch,
    centering: Sequence[float],
    scale: float,
    n_batches: int = 50,
) -> Moments:
    """
    Mean and covariance of scale * (draw - centering) with batch-means
    standard errors for every entry

    Raises:
        DomainError: fewer than 100 draws or fewer draws than batches
    """
    draws = batch.draws
    m = len(draws)
    if m < 100:
        raise DomainError(f"need at least 100 draws, got {m}")
    n_batches = min(n_batches, m)
    statistic = scale * (draws - np.asarray(centering, dtype=float)[None, :])
    mean = statistic.mean(axis=0)
    centered = statistic - mean[None, :]
    covariance = centered.T @ centered / (m - 1)

    chunks = np.array_split(np.arange(m), n_batches)
    batch_means = np.array([statistic[chunk].mean(axis=0) for chunk in chunks])
    batch_covariances = np.array([centered[chunk].T @ centered[chunk] / len(chunk) for chunk in chunks])
    root = math.sqrt(n_batches)
    return Moments(
        mean=mean,
        covariance=0.5 * (covariance + covariance.T),
        se=batch_covariances.std(axis=0, ddof=1) / root,
        mean_se=batch_means.std(axis=0, ddof=1) / root,
        n_batches=n_batches,
    )


def covariance_zscores(moments: Moments, sigma: np.ndarray) -> np.ndarray:
    """(empirical - predicted) / se entrywise; zero-SE entries give 0 when equal, inf otherwise"""
    difference = moments.covariance - np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = difference / moments.se
    return np.where(moments.se > 0.0, z, np.where(difference == 0.0, 0.0, np.inf))


def mean_zscores(moments: Moments, predicted: np.ndarray) -> np.ndarray:
    difference = moments.mean - np.asarray(predicted, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = difference / moments.mean_se
    return np.where(moments.mean_se > 0.0, z, np.where(difference == 0.0, 0.0, np.inf))


def diagonal_shift_zscores(first: Moments, second: Moments) -> np.ndarray:
    """
    |diag(first) - diag(second)| over the joint batch-means SE, per coordinate

    Used to compare runs at beta_like and 2 beta_like, whose limit variances agree.
    """
    difference = np.abs(np.diag(first.covariance) - np.diag(second.covariance))
    joint = np.sqrt(np.diag(first.se) ** 2 + np.diag(second.se) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = difference / joint
    return np.where(joint > 0.0, z, np.where(difference == 0.0, 0.0, np.inf))
