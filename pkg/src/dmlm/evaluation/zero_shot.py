"""Zero-shot classification by comparing pooled image and class prompt distributions."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
from dataclasses import dataclass
from typing import List, Sequence

# Third Party
import numpy as np
import torch
from scipy import special

# dmlm
from dmlm.datasets.synthetic import GENERIC_FINDING, PairedSample, tokenize_sample_text
from dmlm.datasets.vocab import Vocabulary
from dmlm.encoders import DualEncoder, ImageInput, TextInput, encode_text
from dmlm.errors import ConfigError, ContractViolationError
from dmlm.prob_core import DiagGaussian, kl_diag, pool_sequence, w2_diag
from dmlm.reports.backends import TemplateReportBackend, generate_report
from dmlm.reports.lexicon import Lexicon
from dmlm.reports.report import StructuredReport
from dmlm.schema import ConfigSection

# =============================================================================
# GLOBALS
# =============================================================================

SCORING_RULES = ("w2", "kl")


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class EvalConfig(ConfigSection):
    """Zero-shot evaluation settings."""

    section_name = "eval"

    scoring: str = "w2"
    temperature: float = 1.0
    batch_size: int = 64

    def validate(self) -> None:
        if self.scoring not in SCORING_RULES:
            raise ConfigError(f"eval.scoring must be one of {', '.join(SCORING_RULES)}")

        if self.temperature <= 0:
            raise ConfigError("eval.temperature must be positive")

        if self.batch_size < 1:
            raise ConfigError("eval.batch_size must be positive")


@dataclass(frozen=True)
class ClassPrompt:
    """The text a class is scored against.

    :param class_id: The class id.
    :param report: The class's structured report.
    :param text: The tokenized prompt.

    """

    class_id: int
    report: StructuredReport
    text: TextInput


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_class_prompts(
    classes: Lexicon,
    vocab: Vocabulary,
    report_style: str = "structured",
    max_len: int = 128,
) -> List[ClassPrompt]:
    """Build one prompt per class from the lexicon.

    Prompts are full structured reports with a generic finding, tokenized in
    the same style as the training text.

    :param classes: The lexicon whose n-th entry is class n.
    :param vocab: The vocabulary.
    :param report_style: "structured" or "findings".
    :param max_len: The maximum token sequence length.
    :return: The prompts, in class order.

    """
    backend = TemplateReportBackend(classes)
    findings = (GENERIC_FINDING,)

    prompts = []

    for class_id, disease in enumerate(classes.diseases):
        report = generate_report(disease, findings, backend)
        text = tokenize_sample_text(report, findings, vocab, report_style, max_len)

        if report_style == "structured" and not len(text.span_positions("appearance")):
            raise ContractViolationError(
                f"The prompt for {disease} has no appearance tokens"
            )

        prompts.append(ClassPrompt(class_id, report, text))

    return prompts


def encode_images(
    model: DualEncoder, images: Sequence[ImageInput], batch_size: int = 64
) -> DiagGaussian:
    """Encode and pool images without masking.

    :param model: The model.
    :param images: The images, all of the same shape.
    :param batch_size: The number of images encoded at once.
    :return: Pooled distributions with batch shape (N,).

    """
    model.eval()

    means = []
    log_vars = []

    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            chunk = images[start : start + batch_size]
            patches = torch.from_numpy(np.stack([image.patches for image in chunk]))

            pooled = pool_sequence(model.image(patches.to(model.dtype)))

            means.append(pooled.mu)
            log_vars.append(pooled.log_var)

    return DiagGaussian(torch.cat(means), torch.cat(log_vars))


def encode_prompts(model: DualEncoder, prompts: Sequence[ClassPrompt]) -> DiagGaussian:
    """Encode and pool the class prompts.

    :param model: The model.
    :param prompts: The prompts.
    :return: Pooled distributions with batch shape (C,).

    """
    model.eval()

    with torch.no_grad():
        pooled = [pool_sequence(encode_text(model, prompt.text)) for prompt in prompts]

    return DiagGaussian(
        torch.stack([item.mu for item in pooled]),
        torch.stack([item.log_var for item in pooled]),
    )


def evaluate_samples(
    model: DualEncoder,
    samples: Sequence[PairedSample],
    prompts: Sequence[ClassPrompt],
    config: EvalConfig = EvalConfig(),
) -> np.ndarray:
    """Score the images of a set of samples.

    :param model: The model.
    :param samples: The samples.
    :param prompts: One prompt per class.
    :param config: The evaluation configuration.
    :return: Class probabilities of shape (N, C).

    """
    return score_images(model, [sample.image for sample in samples], prompts, config)


def prompt_distances(
    images: DiagGaussian, prompts: DiagGaussian, scoring: str = "w2"
) -> np.ndarray:
    """Compute the distance of every image to every prompt.

    :param images: Pooled image distributions, batch shape (N,).
    :param prompts: Pooled prompt distributions, batch shape (C,).
    :param scoring: "w2", or "kl" for KL(image || prompt).
    :return: Distances of shape (N, C).

    """
    image_side = DiagGaussian(images.mu.unsqueeze(1), images.log_var.unsqueeze(1))
    prompt_side = DiagGaussian(prompts.mu.unsqueeze(0), prompts.log_var.unsqueeze(0))

    if scoring == "w2":
        distances = w2_diag(image_side, prompt_side)

    elif scoring == "kl":
        distances = kl_diag(image_side, prompt_side)

    else:
        raise ContractViolationError(f"Unknown scoring rule: {scoring}")

    return distances.detach().cpu().double().numpy()


def score_images(
    model: DualEncoder,
    images: Sequence[ImageInput],
    prompts: Sequence[ClassPrompt],
    config: EvalConfig = EvalConfig(),
) -> np.ndarray:
    """Score many images against the class prompts.

    :param model: The model.
    :param images: The images.
    :param prompts: One prompt per class.
    :param config: The evaluation configuration.
    :return: Class probabilities of shape (N, C), rows summing to 1.

    """
    if len(prompts) < 2:
        raise ContractViolationError("Zero-shot scoring needs at least two classes")

    distances = prompt_distances(
        encode_images(model, images, config.batch_size),
        encode_prompts(model, prompts),
        config.scoring,
    )

    return scores_from_distances(distances, config.temperature)


def scores_from_distances(
    distances: np.ndarray, temperature: float = 1.0
) -> np.ndarray:
    """Turn distances into class probabilities with softmax(-distance / temperature).

    >>> scores_from_distances(np.array([[1.0, 1.0]])).tolist()
    [[0.5, 0.5]]

    :param distances: Distances of shape (N, C).
    :param temperature: The softmax temperature.
    :return: Probabilities of shape (N, C).

    """
    distances = np.asarray(distances, dtype=np.float64)

    return special.softmax(-distances / temperature, axis=-1)


def zero_shot_scores(
    model: DualEncoder,
    image: ImageInput,
    prompts: Sequence[ClassPrompt],
    config: EvalConfig = EvalConfig(),
) -> np.ndarray:
    """Score one image against the class prompts.

    :param model: The model.
    :param image: The image.
    :param prompts: One prompt per class.
    :param config: The evaluation configuration.
    :return: Class probabilities of length C.

    """
    return score_images(model, [image], prompts, config)[0]
