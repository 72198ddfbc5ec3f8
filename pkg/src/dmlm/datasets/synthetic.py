"""Synthetic paired image-report data with a planted, class-dependent motif.

Every image is a grid of flattened patches of background noise. A square
lesion placed inside one quadrant carries the class motif, a Hadamard row
pattern unique to the class. The paired report names the disease and the
quadrant ("upper left opacity"); only the report's definition, appearance and
verdict identify the class.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union, overload

# Third Party
import numpy as np
from scipy import linalg

# dmlm
from dmlm.datasets.vocab import Vocabulary, build_vocab
from dmlm.encoders import ImageInput, TextInput
from dmlm.errors import ConfigError, ContractViolationError
from dmlm.reports.backends import TemplateReportBackend, generate_report
from dmlm.reports.lexicon import Lexicon
from dmlm.reports.report import StructuredReport, serialize_report
from dmlm.reports.tokenize import tokenize_findings, tokenize_report
from dmlm.schema import ConfigSection

_logger = logging.getLogger(__name__)

# =============================================================================
# GLOBALS
# =============================================================================

GENERIC_FINDING = "opacity"

REPORT_STYLES = ("structured", "findings")

_VERTICAL = ("upper", "lower")
_HORIZONTAL = ("left", "right")


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class DatasetSpec(ConfigSection):
    """Settings of the synthetic data generator."""

    section_name = "dataset"

    n_samples: int = 256
    n_test: int = 64
    n_classes: int = 4
    grid_h: int = 8
    grid_w: int = 8
    patch_dim: int = 16
    noise_std: float = 0.1
    motif_amplitude: float = 0.25
    lesion_size: int = 3
    seed: int = 0

    def validate(self) -> None:
        for name in (
            "n_samples",
            "n_test",
            "n_classes",
            "grid_h",
            "grid_w",
            "patch_dim",
            "lesion_size",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"dataset.{name} must be positive")

        if self.noise_std < 0:
            raise ConfigError("dataset.noise_std must not be negative")

        if self.motif_amplitude <= 0:
            raise ConfigError("dataset.motif_amplitude must be positive")

        if self.patch_dim & (self.patch_dim - 1):
            raise ConfigError("dataset.patch_dim must be a power of two")

        if self.n_classes >= self.patch_dim:
            raise ConfigError(
                "dataset.n_classes must be smaller than dataset.patch_dim"
            )

        if self.lesion_size > min(self.grid_h // 2, self.grid_w // 2):
            raise ConfigError("dataset.lesion_size must fit inside one grid quadrant")

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def n_patches(self) -> int:
        """The number of patches per image."""
        return self.grid_h * self.grid_w


@dataclass(frozen=True)
class PairedSample:
    """One image with its report.

    :param id: The sample id.
    :param image: The image patches.
    :param text: The tokenized report.
    :param label: The class id.
    :param report: The structured report.
    :param findings: The findings the report was built from.
    :param lesion_region: The patches carrying the class motif.

    """

    id: str
    image: ImageInput
    text: TextInput
    label: int
    report: StructuredReport
    findings: Tuple[str, ...]
    lesion_region: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "findings", tuple(self.findings))
        object.__setattr__(
            self, "lesion_region", tuple(int(index) for index in self.lesion_region)
        )

        if any(not 0 <= index < len(self.image) for index in self.lesion_region):
            raise ContractViolationError(
                f"Lesion region of {self.id} is outside the image"
            )

        if self.label < 0:
            raise ContractViolationError("Labels must not be negative")


class SyntheticDataset(Sequence[PairedSample]):
    """Samples plus the vocabulary and class lexicon they were tokenized with.

    :param samples: The samples.
    :param vocab: The vocabulary.
    :param classes: The lexicon whose n-th entry is class n.
    :param report_style: How the sample text was tokenized.
    :param max_len: The maximum token sequence length.

    """

    def __init__(
        self,
        samples: Sequence[PairedSample],
        vocab: Vocabulary,
        classes: Lexicon,
        report_style: str = "structured",
        max_len: int = 128,
    ) -> None:
        if report_style not in REPORT_STYLES:
            raise ContractViolationError(f"Unknown report style: {report_style}")

        self._samples = list(samples)
        self._vocab = vocab
        self._classes = classes
        self._report_style = report_style
        self._max_len = max_len

        for sample in self._samples:
            if sample.label >= len(classes):
                raise ContractViolationError(f"Label of {sample.id} has no class entry")

            if sample.report.disease != classes.diseases[sample.label]:
                raise ContractViolationError(
                    f"Report of {sample.id} does not match its label"
                )

    @overload
    def __getitem__(self, index: int) -> PairedSample:
        ...

    @overload
    def __getitem__(self, index: slice) -> List[PairedSample]:
        ...

    def __getitem__(
        self, index: Union[int, slice]
    ) -> Union[PairedSample, List[PairedSample]]:
        return self._samples[index]

    def __iter__(self) -> Iterator[PairedSample]:
        return iter(self._samples)

    def __len__(self) -> int:
        return len(self._samples)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def classes(self) -> Lexicon:
        """The class lexicon."""
        return self._classes

    @property
    def labels(self) -> np.ndarray:
        """The labels of all samples."""
        return np.array([sample.label for sample in self._samples], dtype=np.int64)

    @property
    def max_len(self) -> int:
        """The maximum token sequence length."""
        return self._max_len

    @property
    def n_classes(self) -> int:
        """The number of classes."""
        return len(self._classes)

    @property
    def report_style(self) -> str:
        """How the sample text was tokenized."""
        return self._report_style

    @property
    def vocab(self) -> Vocabulary:
        """The vocabulary."""
        return self._vocab

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def restyle(self, report_style: str) -> SyntheticDataset:
        """Re-tokenize every sample with a different report style.

        :param report_style: The new style.
        :return: A new dataset sharing images, reports and vocabulary.

        """
        samples = [
            PairedSample(
                id=sample.id,
                image=sample.image,
                text=tokenize_sample_text(
                    sample.report,
                    sample.findings,
                    self.vocab,
                    report_style,
                    self.max_len,
                ),
                label=sample.label,
                report=sample.report,
                findings=sample.findings,
                lesion_region=sample.lesion_region,
            )
            for sample in self._samples
        ]

        return SyntheticDataset(
            samples, self.vocab, self.classes, report_style, self.max_len
        )


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _class_lexicon(spec: DatasetSpec, lexicon: Lexicon) -> Lexicon:
    """Get the lexicon entries used as classes.

    :param spec: The dataset spec.
    :param lexicon: The full lexicon.
    :return: The first n_classes entries.

    """
    if spec.n_classes > len(lexicon):
        raise ContractViolationError(
            f"n_classes ({spec.n_classes}) exceeds the lexicon size ({len(lexicon)})"
        )

    return lexicon.subset(spec.n_classes)


def _draw_samples(
    spec: DatasetSpec,
    classes: Lexicon,
    count: int,
    seed: Sequence[int],
    id_prefix: str,
) -> List[
    Tuple[str, np.ndarray, int, StructuredReport, Tuple[str, ...], Tuple[int, ...]]
]:
    """Draw images, regions and reports.

    :param spec: The dataset spec.
    :param classes: The class lexicon.
    :param count: The number of samples.
    :param seed: The generator seed.
    :param id_prefix: The prefix of the sample ids.
    :return: Per sample its id, patches, label, report, findings and region.

    """
    rng = np.random.default_rng(list(seed))
    backend = TemplateReportBackend(classes)
    motifs = class_motifs(spec.n_classes, spec.patch_dim, spec.motif_amplitude)

    labels = rng.permutation(np.arange(count) % spec.n_classes)

    quadrant_h = spec.grid_h // 2
    quadrant_w = spec.grid_w // 2

    drawn = []

    for index, label in enumerate(labels):
        vertical = int(rng.integers(2))
        horizontal = int(rng.integers(2))
        row = vertical * quadrant_h + int(
            rng.integers(quadrant_h - spec.lesion_size + 1)
        )
        col = horizontal * quadrant_w + int(
            rng.integers(quadrant_w - spec.lesion_size + 1)
        )

        region = lesion_region_indices(spec.grid_w, row, col, spec.lesion_size)

        noise = rng.standard_normal((spec.n_patches, spec.patch_dim))
        patches = 0.5 + spec.noise_std * noise
        patches[list(region)] += motifs[label]
        patches = np.clip(patches, 0.0, 1.0).astype(np.float32)

        location = f"{_VERTICAL[vertical]} {_HORIZONTAL[horizontal]}"
        findings = (f"{location} {GENERIC_FINDING}",)
        report = generate_report(classes.diseases[label], findings, backend)

        drawn.append(
            (f"{id_prefix}-{index:05d}", patches, int(label), report, findings, region)
        )

    return drawn


# =============================================================================
# FUNCTIONS
# =============================================================================


def class_motifs(n_classes: int, patch_dim: int, amplitude: float) -> np.ndarray:
    """Build the per-class patch motifs.

    Class c uses Hadamard row c + 1, so every motif has mean amplitude and the
    motifs are mutually orthogonal around that mean.

    :param n_classes: The number of classes.
    :param patch_dim: The patch size, a power of two greater than n_classes.
    :param amplitude: The motif amplitude.
    :return: Motifs of shape (n_classes, patch_dim).

    """
    rows = linalg.hadamard(patch_dim)[1 : n_classes + 1].astype(np.float64)

    return amplitude * (1.0 + 0.5 * rows)


def generate_dataset(
    spec: DatasetSpec,
    lexicon: Lexicon,
    vocab: Optional[Vocabulary] = None,
    report_style: str = "structured",
    max_len: int = 128,
    split: str = "train",
    vocab_size: Optional[int] = None,
) -> SyntheticDataset:
    """Generate a synthetic split.

    :param spec: The dataset spec.
    :param lexicon: The lexicon whose first n_classes entries are the classes.
    :param vocab: Optional vocabulary; built from the generated reports when not passed.
    :param report_style: How sample text is tokenized.
    :param max_len: The maximum token sequence length.
    :param split: "train" (n_samples) or "test" (n_test).
    :param vocab_size: Optional limit of a newly built vocabulary.
    :return: The generated dataset.

    """
    if split not in ("train", "test"):
        raise ContractViolationError(f"Unknown split: {split}")

    classes = _class_lexicon(spec, lexicon)

    count = spec.n_samples if split == "train" else spec.n_test
    stream = 0 if split == "train" else 1
    drawn = _draw_samples(spec, classes, count, (spec.seed, stream), split)

    if vocab is None:
        vocab = build_vocab(
            (serialize_report(item[3]) for item in drawn), max_size=vocab_size
        )

    samples = [
        PairedSample(
            id=sample_id,
            image=ImageInput(patches, spec.grid_h, spec.grid_w),
            text=tokenize_sample_text(report, findings, vocab, report_style, max_len),
            label=label,
            report=report,
            findings=findings,
            lesion_region=region,
        )
        for sample_id, patches, label, report, findings, region in drawn
    ]

    _logger.debug("Generated %s %s samples", len(samples), split)

    return SyntheticDataset(samples, vocab, classes, report_style, max_len)


def generate_splits(
    spec: DatasetSpec,
    lexicon: Lexicon,
    report_style: str = "structured",
    max_len: int = 128,
    vocab_size: Optional[int] = None,
) -> Tuple[SyntheticDataset, SyntheticDataset]:
    """Generate the train and held-out test splits.

    The test split is tokenized with the train vocabulary.

    :param spec: The dataset spec.
    :param lexicon: The lexicon whose first n_classes entries are the classes.
    :param report_style: How sample text is tokenized.
    :param max_len: The maximum token sequence length.
    :param vocab_size: Optional vocabulary size limit.
    :return: The train and test datasets.

    """
    train = generate_dataset(
        spec,
        lexicon,
        report_style=report_style,
        max_len=max_len,
        vocab_size=vocab_size,
    )
    test = generate_dataset(
        spec,
        lexicon,
        vocab=train.vocab,
        report_style=report_style,
        max_len=max_len,
        split="test",
    )

    return train, test


def lesion_region_indices(
    grid_w: int, row: int, col: int, size: int
) -> Tuple[int, ...]:
    """Get the patch indices of a square region.

    >>> lesion_region_indices(8, 0, 0, 2)
    (0, 1, 8, 9)

    :param grid_w: The number of patch columns.
    :param row: The top row of the region.
    :param col: The left column of the region.
    :param size: The region side length.
    :return: The sorted patch indices.

    """
    return tuple(
        (row + offset_row) * grid_w + col + offset_col
        for offset_row in range(size)
        for offset_col in range(size)
    )


def tokenize_sample_text(
    report: StructuredReport,
    findings: Sequence[str],
    vocab: Vocabulary,
    report_style: str,
    max_len: int,
) -> TextInput:
    """Tokenize a sample's text in the requested style.

    :param report: The structured report.
    :param findings: The raw findings.
    :param vocab: The vocabulary.
    :param report_style: "structured" or "findings".
    :param max_len: The maximum token sequence length.
    :return: The tokenized text.

    """
    if report_style == "structured":
        return tokenize_report(report, vocab, max_len)

    if report_style == "findings":
        return tokenize_findings(findings, vocab, max_len)

    raise ContractViolationError(f"Unknown report style: {report_style}")
