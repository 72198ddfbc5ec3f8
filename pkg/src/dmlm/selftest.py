"""Numerical self checks of the distribution algebra and the training loss.

Every check compares an implementation against an independent reference: the
closed forms against the Monte-Carlo and quantile oracles, and analytic
gradients against central finite differences.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
import time
from typing import Callable, List, NamedTuple, Tuple

# Third Party
import numpy as np
import torch

# dmlm
from dmlm import prob_core
from dmlm.datasets.batching import collate
from dmlm.datasets.synthetic import DatasetSpec, generate_dataset
from dmlm.encoders import EncoderConfig
from dmlm.reports.lexicon import Lexicon
from dmlm.training.config import TrainingConfig
from dmlm.training.losses import teacher_targets
from dmlm.training.trainer import build_model, compute_step_losses

# The number of random pairs of the oracle and gradient suites.
ORACLE_PAIRS = 100
GRADCHECK_PAIRS = 50

MC_SAMPLES = 1_000_000
QUANTILE_GRID = 100_000

# Pairs beyond 3 standard errors are expected 0.27% of the time; the suite
# allows 2% of them and none beyond MAX_Z.
MC_Z = 3.0
MAX_Z = 4.5
MC_OUTLIER_FRACTION = 0.02

W2_TOLERANCE = 1e-3
CLOSED_FORM_TOLERANCE = 1e-9

GRADCHECK_EPS = 1e-5
GRADCHECK_RTOL = 1e-4

LOSS_PARAMETERS = 20
LOSS_STEP = 1e-4
LOSS_RTOL = 1e-3
LOSS_ATOL = 1e-7


# =============================================================================
# CLASSES
# =============================================================================


class CheckResult(NamedTuple):
    """The outcome of one check."""

    name: str
    passed: bool
    detail: str


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _random_pairs(
    count: int, seed: int, dim: int = 1
) -> List[Tuple[prob_core.DiagGaussian, prob_core.DiagGaussian]]:
    """Draw random float64 Gaussian pairs.

    Means lie in [-2, 2] and log-variances in [-1, 1].

    :param count: The number of pairs.
    :param seed: The random seed.
    :param dim: The dimension of each distribution.
    :return: The pairs.

    """
    rng = np.random.default_rng(seed)

    pairs = []

    for _ in range(count):
        mu = rng.uniform(-2.0, 2.0, size=(2, dim))
        log_var = rng.uniform(-1.0, 1.0, size=(2, dim))

        pairs.append(
            (
                prob_core.DiagGaussian(
                    torch.from_numpy(mu[0]), torch.from_numpy(log_var[0])
                ),
                prob_core.DiagGaussian(
                    torch.from_numpy(mu[1]), torch.from_numpy(log_var[1])
                ),
            )
        )

    return pairs


def _random_inputs(count: int, seed: int, dim: int = 3) -> Tuple[torch.Tensor, ...]:
    """Draw float64 leaf tensors (mu_p, log_var_p, mu_q, log_var_q).

    :param count: The batch size.
    :param seed: The random seed.
    :param dim: The distribution dimension.
    :return: The four tensors, requiring gradients.

    """
    generator = torch.Generator().manual_seed(seed)

    def _uniform(low: float, high: float) -> torch.Tensor:
        values = torch.rand(count, dim, generator=generator, dtype=torch.float64)
        return (low + (high - low) * values).requires_grad_(True)

    return (
        _uniform(-2.0, 2.0),
        _uniform(-1.0, 1.0),
        _uniform(-2.0, 2.0),
        _uniform(-1.0, 1.0),
    )


def _timed(name: str, check: Callable[[], Tuple[bool, str]]) -> CheckResult:
    """Run a check and append its runtime to the detail.

    :param name: The check name.
    :param check: The check returning whether it passed and a detail string.
    :return: The result.

    """
    start = time.perf_counter()
    passed, detail = check()

    return CheckResult(name, passed, f"{detail} ({time.perf_counter() - start:.1f}s)")


# =============================================================================
# FUNCTIONS
# =============================================================================


def check_closed_form_values() -> Tuple[bool, str]:
    """Compare the closed forms with hand-derived values.

    :return: Whether the check passed, and the largest error.

    """
    cases = (
        (prob_core.kl_diag, (1.0, 0.0), (0.0, 0.0), 0.5),
        (
            prob_core.kl_diag,
            (0.0, math.log(4.0)),
            (0.0, 0.0),
            0.5 * (math.log(0.25) + 3.0),
        ),
        (prob_core.w2_diag, (0.0, 0.0), (3.0, 0.0), 3.0),
        (prob_core.w2_diag, (0.0, 0.0), (0.0, math.log(4.0)), 1.0),
    )

    errors = []

    for function, (mu_p, lv_p), (mu_q, lv_q), expected in cases:
        value = function(
            prob_core.DiagGaussian([mu_p], [lv_p]),
            prob_core.DiagGaussian([mu_q], [lv_q]),
        )
        errors.append(abs(float(value) - expected))

    worst = max(errors)

    return worst <= CLOSED_FORM_TOLERANCE, f"max error {worst:.2e}"


def check_kl_gradients(seed: int = 0) -> Tuple[bool, str]:
    """Compare the analytic gradients of kl_diag with finite differences.

    :param seed: The random seed.
    :return: Whether the check passed, and a detail string.

    """
    inputs = _random_inputs(GRADCHECK_PAIRS, seed)

    def _kl(
        mu_p: torch.Tensor, lv_p: torch.Tensor, mu_q: torch.Tensor, lv_q: torch.Tensor
    ) -> torch.Tensor:
        return prob_core.kl_diag(
            prob_core.DiagGaussian(mu_p, lv_p), prob_core.DiagGaussian(mu_q, lv_q)
        )

    passed = torch.autograd.gradcheck(
        _kl,
        inputs,
        eps=GRADCHECK_EPS,
        atol=1e-8,
        rtol=GRADCHECK_RTOL,
        raise_exception=False,
    )

    return bool(passed), f"{GRADCHECK_PAIRS} pairs, h={GRADCHECK_EPS:g}"


def check_kl_oracle(seed: int = 0) -> Tuple[bool, str]:
    """Compare kl_diag with the Monte-Carlo oracle on random 1-D pairs.

    :param seed: The random seed.
    :return: Whether the check passed, and the worst z-score.

    """
    z_scores = []

    for index, (p, q) in enumerate(_random_pairs(ORACLE_PAIRS, seed)):
        estimate, stderr = prob_core.mc_kl_oracle(
            p, q, MC_SAMPLES, seed + index, return_stderr=True
        )
        closed = float(prob_core.kl_diag(p, q))

        z_scores.append(abs(closed - estimate) / max(stderr, 1e-12))

    z_array = np.array(z_scores)
    outliers = float(np.mean(z_array > MC_Z))
    worst = float(z_array.max())

    passed = outliers <= MC_OUTLIER_FRACTION and worst <= MAX_Z

    return passed, f"max |z| {worst:.2f}, {outliers:.0%} beyond {MC_Z:g} SE"


def check_loss_gradients(seed: int = 0) -> Tuple[bool, str]:
    """Compare the gradient of the total loss with finite differences.

    A tiny float64 model is evaluated on a fixed batch with the teacher
    targets and mask plans held fixed, at randomly chosen parameter entries.

    :param seed: The random seed.
    :return: Whether the check passed, and the worst relative error.

    """
    spec = DatasetSpec(
        n_samples=4, n_test=2, n_classes=2, grid_h=6, grid_w=6, patch_dim=4, seed=seed
    )
    dataset = generate_dataset(spec, Lexicon.default(), max_len=96)

    encoder = EncoderConfig(
        d_model=8,
        n_layers=1,
        n_heads=2,
        vocab_size=len(dataset.vocab),
        max_len=96,
        patch_dim=4,
        max_patches=36,
        mlp_ratio=2,
    )
    training = TrainingConfig(masking_strategy="random", seed=seed)

    model = build_model(encoder, seed, dtype=torch.float64)
    model.eval()

    batch = collate(list(dataset))
    targets = teacher_targets(model, batch)

    losses = compute_step_losses(model, batch, training, 0, targets=targets)
    plans = losses.plans

    model.zero_grad()
    losses.total.backward()

    def _total() -> float:
        with torch.no_grad():
            losses = compute_step_losses(
                model, batch, training, 0, targets=targets, plans=plans
            )

            return float(losses.total)

    parameters = [param for param in model.parameters() if param.requires_grad]
    sizes = np.array([param.numel() for param in parameters])

    rng = np.random.default_rng(seed)
    picks = rng.choice(int(sizes.sum()), size=LOSS_PARAMETERS, replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    worst = 0.0
    passed = True

    for pick in picks:
        index = int(np.searchsorted(offsets, pick, side="right") - 1)
        param = parameters[index]
        flat = param.data.view(-1)
        position = int(pick - offsets[index])

        original = flat[position].item()

        flat[position] = original + LOSS_STEP
        upper = _total()
        flat[position] = original - LOSS_STEP
        lower = _total()
        flat[position] = original

        numeric = (upper - lower) / (2 * LOSS_STEP)
        analytic = 0.0

        if param.grad is not None:
            analytic = param.grad.view(-1)[position].item()

        error = abs(analytic - numeric)
        scale = max(abs(analytic), abs(numeric))

        if error > LOSS_RTOL * scale + LOSS_ATOL:
            passed = False

        if scale > 0:
            worst = max(worst, error / scale)

    return passed, f"{LOSS_PARAMETERS} parameters, max rel error {worst:.2e}"


def check_w2_gradients(seed: int = 0) -> Tuple[bool, str]:
    """Compare the analytic gradients of w2_diag with finite differences.

    :param seed: The random seed.
    :return: Whether the check passed, and a detail string.

    """
    inputs = _random_inputs(GRADCHECK_PAIRS, seed + 1)

    def _w2(
        mu_p: torch.Tensor, lv_p: torch.Tensor, mu_q: torch.Tensor, lv_q: torch.Tensor
    ) -> torch.Tensor:
        return prob_core.w2_diag(
            prob_core.DiagGaussian(mu_p, lv_p), prob_core.DiagGaussian(mu_q, lv_q)
        )

    passed = torch.autograd.gradcheck(
        _w2,
        inputs,
        eps=GRADCHECK_EPS,
        atol=1e-8,
        rtol=GRADCHECK_RTOL,
        raise_exception=False,
    )

    return bool(passed), f"{GRADCHECK_PAIRS} pairs, h={GRADCHECK_EPS:g}"


def check_w2_oracle(seed: int = 0) -> Tuple[bool, str]:
    """Compare w2_diag with the quantile oracle on random 1-D pairs.

    :param seed: The random seed.
    :return: Whether the check passed, and the largest error.

    """
    errors = [
        abs(
            float(prob_core.w2_diag(p, q))
            - prob_core.quantile_w2_oracle(p, q, QUANTILE_GRID)
        )
        for p, q in _random_pairs(ORACLE_PAIRS, seed + 1)
    ]

    worst = max(errors)

    return worst <= W2_TOLERANCE, f"max error {worst:.2e}"


def run_selftest(seed: int = 0) -> List[CheckResult]:
    """Run every check.

    :param seed: The random seed of the suites.
    :return: The results, in a fixed order.

    """
    return [
        _timed("closed form values", check_closed_form_values),
        _timed("kl_diag vs Monte-Carlo", lambda: check_kl_oracle(seed)),
        _timed("w2_diag vs quantile", lambda: check_w2_oracle(seed)),
        _timed("kl_diag gradients", lambda: check_kl_gradients(seed)),
        _timed("w2_diag gradients", lambda: check_w2_gradients(seed)),
        _timed("total loss gradients", lambda: check_loss_gradients(seed)),
    ]
