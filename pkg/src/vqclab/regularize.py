"""Parameter-initialization priors and the iterative noise-diffusion step.

Two mechanisms for keeping gradient variance alive on deep circuits:

* Data-derived initialization.  ``fit_prior`` extracts distribution
  hyperparameters from the flattened encoded train features (extrema,
  mean, population std, and Beta shape parameters by method of moments on
  min-max rescaled values).  ``sample_init`` draws the parameter tensor
  from one of eight families, the first three of which have a with-prior
  form: Uniform(d_min, d_max), Normal(mean, std), and Beta(alpha, beta)
  mapped affinely back onto [d_min, d_max].

* Noise diffusion.  ``build_schedule`` ramps the diffusion rate linearly
  from dr_min to dr_max over the training iterations, sets gamma = 1 - dr
  and the running product gamma_bar = prod(gamma).  ``diffuse`` then mixes
  each parameter with standard normal noise, theta' = sqrt(gamma_bar) *
  theta + sqrt(1 - gamma_bar) * eps, one draw per parameter per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "FAMILIES",
    "PRIOR_FAMILIES",
    "PriorStats",
    "InitStrategy",
    "DiffusionSchedule",
    "fit_prior",
    "sample_init",
    "build_schedule",
    "diffuse",
]

FAMILIES = (
    "Uniform",
    "Normal",
    "Beta",
    "XavierUniform",
    "XavierNormal",
    "KaimingUniform",
    "KaimingNormal",
    "TruncatedNormal",
)
# Only the three classic families have a data-prior form.
PRIOR_FAMILIES = ("Uniform", "Normal", "Beta")


@dataclass(frozen=True)
class PriorStats:
    """Distribution hyperparameters fitted from encoded train features.

    ``beta_alpha``/``beta_beta`` are None when the moment fit is undefined
    (degenerate data, or variance at the two-point upper bound).
    """

    d_min: float
    d_max: float
    mean: float
    std: float
    beta_alpha: float | None
    beta_beta: float | None

    def __post_init__(self):
        if self.d_min > self.d_max:
            raise ValueError("d_min must be <= d_max")
        if self.std < 0:
            raise ValueError("std must be >= 0")
        if (self.beta_alpha is None) != (self.beta_beta is None):
            raise ValueError("beta parameters must be both set or both None")
        if self.beta_alpha is not None and (self.beta_alpha <= 0 or self.beta_beta <= 0):
            raise ValueError("beta parameters must be positive when defined")

    @property
    def beta_defined(self) -> bool:
        return self.beta_alpha is not None


@dataclass(frozen=True)
class InitStrategy:
    """An initialization family plus whether to use the data prior."""

    family: str
    use_prior: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown init family {self.family!r}; choices: {FAMILIES}")
        if self.use_prior and self.family not in PRIOR_FAMILIES:
            raise ValueError(
                f"use_prior is only valid for {PRIOR_FAMILIES}, not {self.family}"
            )


def fit_prior(train_features: np.ndarray) -> PriorStats:
    """Fit prior hyperparameters from flattened encoded train features.

    Uses population std.  Beta parameters come from method of moments on
    the values min-max rescaled to [0, 1]:
    alpha = m*(m*(1-m)/v - 1), beta = (1-m)*(m*(1-m)/v - 1).
    """
    values = np.asarray(train_features, dtype=np.float64).reshape(-1)
    if values.size < 2:
        raise ValueError("need at least 2 values to fit a prior")
    if not np.all(np.isfinite(values)):
        raise ValueError("prior fit requires finite values")
    d_min = float(values.min())
    d_max = float(values.max())
    mean = float(values.mean())
    std = float(values.std())
    beta_alpha = beta_beta = None
    if d_max > d_min:
        rescaled = (values - d_min) / (d_max - d_min)
        m = float(rescaled.mean())
        v = float(rescaled.var())
        # Moment fit needs 0 < v < m*(1-m); the bound is hit only by
        # two-point data, where no Beta matches.
        if 0.0 < v < m * (1.0 - m):
            common = m * (1.0 - m) / v - 1.0
            beta_alpha = m * common
            beta_beta = (1.0 - m) * common
    return PriorStats(d_min, d_max, mean, std, beta_alpha, beta_beta)


def _fan(shape: tuple[int, int, int]) -> int:
    # The parameter tensor is (layers, qubits, rotations); each layer block
    # maps N*R angles to N*R angles, so fan_in = fan_out = N*R.
    return shape[1] * shape[2]


def sample_init(
    strategy: InitStrategy,
    prior: PriorStats | None,
    shape: tuple[int, int, int],
    seed: int,
) -> np.ndarray:
    """Draw the initial parameter tensor; deterministic given the seed."""
    if len(shape) != 3 or any(s < 1 for s in shape):
        raise ValueError(f"shape must be three positive ints, got {shape}")
    if strategy.use_prior and prior is None:
        raise ValueError("use_prior requires fitted PriorStats")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    family = strategy.family

    if family == "Uniform":
        if strategy.use_prior:
            return rng.uniform(prior.d_min, prior.d_max, shape)
        return rng.uniform(0.0, 1.0, shape)
    if family == "Normal":
        if strategy.use_prior:
            return rng.normal(prior.mean, prior.std, shape)
        return rng.normal(0.0, 1.0, shape)
    if family == "Beta":
        if strategy.use_prior:
            if not prior.beta_defined:
                raise ValueError("Beta prior undefined for degenerate data")
            draws = rng.beta(prior.beta_alpha, prior.beta_beta, shape)
            return prior.d_min + (prior.d_max - prior.d_min) * draws
        return rng.beta(0.5, 0.5, shape)

    fan = _fan(shape)
    if family == "XavierUniform":
        bound = np.sqrt(6.0 / (2 * fan))
        return rng.uniform(-bound, bound, shape)
    if family == "XavierNormal":
        return rng.normal(0.0, np.sqrt(2.0 / (2 * fan)), shape)
    if family == "KaimingUniform":
        bound = np.sqrt(6.0 / fan)
        return rng.uniform(-bound, bound, shape)
    if family == "KaimingNormal":
        return rng.normal(0.0, np.sqrt(2.0 / fan), shape)
    # TruncatedNormal: standard normal conditioned on [-2, 2], drawn by
    # inverse CDF so the draw count per parameter is fixed.
    lo, hi = ndtr(-2.0), ndtr(2.0)
    u = rng.uniform(lo, hi, shape)
    return ndtri(u)


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-iteration diffusion rates and their cumulative products.

    dr ramps (non-decreasing) from dr_min to dr_max, gamma = 1 - dr is
    non-increasing, and gamma_bar[t] = prod_{i<=t} gamma[i] strictly
    decreases within (0, 1].
    """

    total_steps: int
    dr_min: float
    dr_max: float
    dr: np.ndarray
    gamma: np.ndarray
    gamma_bar: np.ndarray


def build_schedule(total_steps: int, dr_min: float, dr_max: float) -> DiffusionSchedule:
    """Linear diffusion-rate ramp over the training iterations."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not (0.0 < dr_min <= dr_max < 1.0):
        raise ValueError(
            f"need 0 < dr_min <= dr_max < 1, got dr_min={dr_min}, dr_max={dr_max}"
        )
    dr = np.linspace(dr_min, dr_max, total_steps)
    gamma = 1.0 - dr
    gamma_bar = np.cumprod(gamma)
    return DiffusionSchedule(total_steps, float(dr_min), float(dr_max), dr, gamma, gamma_bar)


def diffuse(
    params: np.ndarray,
    gamma_bar_t: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One noising step: sqrt(gamma_bar)*theta + sqrt(1-gamma_bar)*eps.

    Always consumes exactly params.size standard normal draws, so stream
    positions are independent of the gamma_bar value (at gamma_bar == 1
    the noise coefficient is exactly zero and params pass through).
    """
    if not 0.0 < gamma_bar_t <= 1.0:
        raise ValueError(f"gamma_bar_t must be in (0, 1], got {gamma_bar_t}")
    params = np.asarray(params, dtype=np.float64)
    eps = rng.standard_normal(params.shape)
    if gamma_bar_t == 1.0:
        return params.copy()
    return np.sqrt(gamma_bar_t) * params + np.sqrt(1.0 - gamma_bar_t) * eps
