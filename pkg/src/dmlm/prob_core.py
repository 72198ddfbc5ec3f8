"""Diagonal-Gaussian distribution algebra.

Every token or patch embedding is a diagonal Gaussian stored as a mean vector
and a log-variance vector. The closed forms here are what the training losses
and zero-shot scoring are built on; the Monte-Carlo and quantile oracles at the
bottom exist only to validate those closed forms independently.

All functions broadcast over leading batch dimensions and reduce over the last
(feature) dimension.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple, Union

# Third Party
import numpy as np
import scipy.stats
import torch

# dmlm
from dmlm.errors import ContractViolationError

# =============================================================================
# GLOBALS
# =============================================================================

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0

TensorLike = Union[torch.Tensor, np.ndarray, Sequence[float], float]


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _to_tensor(value: Any, like: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Convert a value to a floating point tensor.

    Values which are not already tensors become float64 unless a reference
    tensor is given, in which case its dtype and device are used.

    :param value: The value to convert.
    :param like: Optional tensor to take the dtype and device from.
    :return: The converted tensor.

    """
    if isinstance(value, torch.Tensor):
        if like is not None and value.dtype != like.dtype:
            return value.to(dtype=like.dtype)

        return value

    if like is not None:
        return torch.as_tensor(value, dtype=like.dtype, device=like.device)

    return torch.as_tensor(value, dtype=torch.float64)


def _check_finite(name: str, *tensors: torch.Tensor) -> None:
    """Raise if any of the tensors holds a NaN or infinite value.

    :param name: The name used in the error message.
    :param tensors: The tensors to check.
    :return:

    """
    for tensor in tensors:
        if not bool(torch.isfinite(tensor).all()):
            raise ContractViolationError(f"{name} has non-finite entries")


def _check_pair(p: DiagGaussian, q: DiagGaussian) -> None:
    """Check that two distributions can be compared.

    :param p: The first distribution.
    :param q: The second distribution.
    :return:

    """
    if p.dim != q.dim:
        raise ContractViolationError(
            f"Dimension mismatch: p has d={p.dim}, q has d={q.dim}"
        )

    _check_finite("p", p.mu, p.log_var)
    _check_finite("q", q.mu, q.log_var)


def _safe_sqrt(value: torch.Tensor) -> torch.Tensor:
    """Square root with a zero (not NaN) gradient at zero.

    :param value: Non-negative values.
    :return: The element-wise square root.

    """
    positive = value > 0
    safe = torch.where(positive, value, torch.ones_like(value))

    return torch.where(positive, torch.sqrt(safe), torch.zeros_like(value))


def _as_numpy(dist: DiagGaussian) -> Tuple[np.ndarray, np.ndarray]:
    """Get float64 numpy copies of a distribution's parameters.

    :param dist: The distribution.
    :return: The mean and log-variance arrays.

    """
    mu = dist.mu.detach().cpu().to(torch.float64).numpy()
    log_var = dist.log_var.detach().cpu().to(torch.float64).numpy()

    return mu, log_var


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class DiagGaussian:
    """A diagonal Gaussian N(mu, diag(exp(log_var))).

    Leading dimensions of the tensors are batch dimensions. The log-variance is
    clamped to [LOGVAR_MIN, LOGVAR_MAX] on construction.

    :param mu: The mean, shape (..., d).
    :param log_var: The log-variance, same shape as mu.

    """

    mu: torch.Tensor
    log_var: torch.Tensor

    def __post_init__(self) -> None:
        mu = _to_tensor(self.mu)
        log_var = _to_tensor(self.log_var, like=mu)

        if mu.dim() == 0:
            mu = mu.reshape(1)

        if log_var.dim() == 0:
            log_var = log_var.reshape(1)

        if mu.shape != log_var.shape:
            raise ContractViolationError(
                f"mu and log_var shapes differ: {tuple(mu.shape)} "
                f"vs {tuple(log_var.shape)}"
            )

        if mu.shape[-1] < 1:
            raise ContractViolationError("Distribution dimension must be at least 1")

        object.__setattr__(self, "mu", mu)
        object.__setattr__(
            self, "log_var", torch.clamp(log_var, LOGVAR_MIN, LOGVAR_MAX)
        )

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def batch_shape(self) -> torch.Size:
        """The leading batch dimensions."""
        return self.mu.shape[:-1]

    @property
    def dim(self) -> int:
        """The dimension d of the distribution."""
        return int(self.mu.shape[-1])

    @property
    def std(self) -> torch.Tensor:
        """The per-dimension standard deviation."""
        return torch.exp(0.5 * self.log_var)

    @property
    def variance(self) -> torch.Tensor:
        """The per-dimension variance."""
        return torch.exp(self.log_var)

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def standard(cls, dim: int, dtype: torch.dtype = torch.float64) -> DiagGaussian:
        """Build N(0, I).

        :param dim: The dimension.
        :param dtype: The tensor dtype.
        :return: The standard normal distribution.

        """
        zeros = torch.zeros(dim, dtype=dtype)

        return cls(zeros, zeros.clone())

    @classmethod
    def from_variance(cls, mu: TensorLike, variance: TensorLike) -> DiagGaussian:
        """Build a distribution from a mean and a variance.

        :param mu: The mean.
        :param variance: The (positive) variance.
        :return: The distribution.

        """
        mu_tensor = _to_tensor(mu)
        var_tensor = _to_tensor(variance, like=mu_tensor)

        if bool((var_tensor <= 0).any()):
            raise ContractViolationError("Variance must be strictly positive")

        return cls(mu_tensor, torch.log(var_tensor))

    def detach(self) -> DiagGaussian:
        """Get a copy cut from the autograd graph."""
        return DiagGaussian(self.mu.detach(), self.log_var.detach())

    def is_finite(self) -> bool:
        """Whether all entries are finite."""
        return bool(
            torch.isfinite(self.mu).all() and torch.isfinite(self.log_var).all()
        )


@dataclass(frozen=True)
class GaussianSequence:
    """An ordered sequence of diagonal Gaussians, one per token or patch.

    :param mu: The means, shape (..., L, d).
    :param log_var: The log-variances, same shape as mu.

    """

    mu: torch.Tensor
    log_var: torch.Tensor

    def __post_init__(self) -> None:
        mu = _to_tensor(self.mu)
        log_var = _to_tensor(self.log_var, like=mu)

        if mu.dim() < 2:
            raise ContractViolationError("A sequence needs shape (..., L, d)")

        if mu.shape != log_var.shape:
            raise ContractViolationError(
                f"mu and log_var shapes differ: {tuple(mu.shape)} "
                f"vs {tuple(log_var.shape)}"
            )

        if mu.shape[-2] < 1:
            raise ContractViolationError("A sequence must have at least one element")

        if mu.shape[-1] < 1:
            raise ContractViolationError("Distribution dimension must be at least 1")

        object.__setattr__(self, "mu", mu)
        object.__setattr__(
            self, "log_var", torch.clamp(log_var, LOGVAR_MIN, LOGVAR_MAX)
        )

    def __getitem__(self, index: int) -> DiagGaussian:
        return DiagGaussian(self.mu[..., index, :], self.log_var[..., index, :])

    def __len__(self) -> int:
        return int(self.mu.shape[-2])

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def dim(self) -> int:
        """The dimension d shared by all items."""
        return int(self.mu.shape[-1])

    @property
    def items(self) -> List[DiagGaussian]:
        """The per-position distributions."""
        return [self[idx] for idx in range(len(self))]

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_items(cls, items: Sequence[DiagGaussian]) -> GaussianSequence:
        """Stack distributions into a sequence.

        :param items: The distributions, all of the same dimension.
        :return: The sequence.

        """
        if not items:
            raise ContractViolationError("A sequence must have at least one element")

        if len({item.dim for item in items}) != 1:
            raise ContractViolationError("All items must share the same dimension")

        return cls(
            torch.stack([item.mu for item in items], dim=-2),
            torch.stack([item.log_var for item in items], dim=-2),
        )

    def detach(self) -> GaussianSequence:
        """Get a copy cut from the autograd graph."""
        return GaussianSequence(self.mu.detach(), self.log_var.detach())

    def select(self, indices: Sequence[int]) -> GaussianSequence:
        """Get the sub-sequence at the given positions.

        :param indices: The positions to keep, in order.
        :return: The sub-sequence.

        """
        index = torch.as_tensor(list(indices), dtype=torch.long)

        return GaussianSequence(
            self.mu.index_select(-2, index), self.log_var.index_select(-2, index)
        )


# =============================================================================
# FUNCTIONS
# =============================================================================


def kl_diag(p: DiagGaussian, q: DiagGaussian, check: bool = True) -> torch.Tensor:
    """Compute KL(p || q) for diagonal Gaussians in closed form.

    The expression is evaluated in log-variance space:
    1/2 sum_k [lq - lp + exp(lp - lq) + (mu_p - mu_q)^2 exp(-lq) - 1].

    :param p: The first distribution.
    :param q: The second distribution.
    :param check: Whether to validate dimensions and finiteness.
    :return: The divergence, shaped like the broadcast batch shape.

    """
    if check:
        _check_pair(p, q)

    log_ratio = p.log_var - q.log_var
    mean_term = (p.mu - q.mu).pow(2) * torch.exp(-q.log_var)

    per_dim = -log_ratio + torch.exp(log_ratio) + mean_term - 1.0

    return torch.clamp(0.5 * per_dim.sum(dim=-1), min=0.0)


def w2_diag(p: DiagGaussian, q: DiagGaussian, check: bool = True) -> torch.Tensor:
    """Compute the 2-Wasserstein distance between diagonal Gaussians.

    For diagonal covariances this is
    sqrt(sum_k (mu_p - mu_q)^2 + (sigma_p - sigma_q)^2).

    :param p: The first distribution.
    :param q: The second distribution.
    :param check: Whether to validate dimensions and finiteness.
    :return: The distance, shaped like the broadcast batch shape.

    """
    if check:
        _check_pair(p, q)

    squared = (p.mu - q.mu).pow(2) + (p.std - q.std).pow(2)

    return _safe_sqrt(squared.sum(dim=-1))


def sample(p: DiagGaussian, noise: TensorLike) -> torch.Tensor:
    """Draw a reparameterized sample mu + sigma * noise.

    :param p: The distribution.
    :param noise: Standard normal noise whose last dimension is d.
    :return: The sample, differentiable with respect to mu and log_var.

    """
    noise_tensor = _to_tensor(noise, like=p.mu)

    if noise_tensor.dim() == 0 or noise_tensor.shape[-1] != p.dim:
        raise ContractViolationError(
            f"Noise must have last dimension {p.dim}, "
            f"got shape {tuple(noise_tensor.shape)}"
        )

    return p.mu + p.std * noise_tensor


def pool_sequence(
    seq: GaussianSequence, valid: Optional[torch.Tensor] = None
) -> DiagGaussian:
    """Moment-match a sequence to a single Gaussian (mixture pooling).

    The mean is the average item mean; the variance is the mixture variance
    mean(sigma_i^2) + mean((mu_i - mu)^2), floored at exp(LOGVAR_MIN).

    :param seq: The sequence to pool.
    :param valid: Optional boolean mask of shape (..., L) marking the positions to
        pool over (padding excluded).
    :return: The pooled distribution with the sequence's batch shape.

    """
    if valid is None:
        weights = torch.ones(
            seq.mu.shape[:-1], dtype=seq.mu.dtype, device=seq.mu.device
        )

    else:
        weights = valid.to(dtype=seq.mu.dtype)

    counts = weights.sum(dim=-1, keepdim=True)

    if bool((counts <= 0).any()):
        raise ContractViolationError("Cannot pool an empty sequence")

    weights = (weights / counts).unsqueeze(-1)

    mean = (weights * seq.mu).sum(dim=-2)
    spread = (seq.mu - mean.unsqueeze(-2)).pow(2)
    variance = (weights * (torch.exp(seq.log_var) + spread)).sum(dim=-2)

    variance = torch.clamp(variance, min=math.exp(LOGVAR_MIN))

    return DiagGaussian(mean, torch.log(variance))


# -----------------------------------------------------------------------------
# Independent oracles.
# -----------------------------------------------------------------------------


def mc_kl_oracle(
    p: DiagGaussian,
    q: DiagGaussian,
    n_samples: int,
    seed: int,
    return_stderr: bool = False,
) -> Union[float, Tuple[float, float]]:
    """Estimate KL(p || q) by Monte-Carlo.

    The estimate is the sample mean of log p(x) - log q(x) with x drawn from p.

    Only unbatched distributions are supported.

    :param p: The first distribution.
    :param q: The second distribution.
    :param n_samples: The number of samples, at least 10^4.
    :param seed: The random seed.
    :param return_stderr: Whether to also return the standard error of the mean.
    :return: The estimate, optionally with its standard error.

    """
    if n_samples < 10_000:
        raise ContractViolationError(
            "The Monte-Carlo oracle needs at least 10^4 samples"
        )

    _check_pair(p, q)

    mu_p, lv_p = _as_numpy(p)
    mu_q, lv_q = _as_numpy(q)

    if mu_p.ndim != 1 or mu_q.ndim != 1:
        raise ContractViolationError(
            "The Monte-Carlo oracle only handles unbatched inputs"
        )

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, mu_p.shape[0]))

    draws = mu_p + np.exp(0.5 * lv_p) * noise

    # The normalizing constants cancel.
    log_p = -0.5 * (lv_p + noise**2)
    log_q = -0.5 * (lv_q + (draws - mu_q) ** 2 / np.exp(lv_q))

    log_ratio = (log_p - log_q).sum(axis=1)

    estimate = float(log_ratio.mean())

    if return_stderr:
        return estimate, float(log_ratio.std(ddof=1) / math.sqrt(n_samples))

    return estimate


def quantile_w2_oracle(p: DiagGaussian, q: DiagGaussian, n_grid: int) -> float:
    """Compute the 1-D W2 distance by quadrature of the quantile functions.

    Evaluates sqrt(integral_0^1 (F_p^-1(u) - F_q^-1(u))^2 du) with the midpoint
    rule on n_grid points.

    :param p: The first distribution, d = 1.
    :param q: The second distribution, d = 1.
    :param n_grid: The number of grid points.
    :return: The distance.

    """
    _check_pair(p, q)

    mu_p, lv_p = _as_numpy(p)
    mu_q, lv_q = _as_numpy(q)

    if mu_p.size != 1 or mu_q.size != 1:
        raise ContractViolationError("The quantile oracle needs d = 1")

    grid = (np.arange(n_grid, dtype=np.float64) + 0.5) / n_grid

    quantiles_p = scipy.stats.norm.ppf(
        grid, loc=mu_p.item(), scale=math.exp(0.5 * lv_p.item())
    )
    quantiles_q = scipy.stats.norm.ppf(
        grid, loc=mu_q.item(), scale=math.exp(0.5 * lv_q.item())
    )

    return float(np.sqrt(np.mean((quantiles_p - quantiles_q) ** 2)))
