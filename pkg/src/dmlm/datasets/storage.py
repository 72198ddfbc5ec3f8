"""Read and write synthetic corpora on disk.

A corpus directory holds:

images.npy
    float32 array of shape (N, P, patch_dim), patch values in [0, 1].
metadata.jsonl
    One JSON record per image, in the same order:
    {id, label, disease, report_text, findings, lesion_region, grid_h, grid_w}.
    report_text is the serialized structured report.
reports.jsonl
    The report corpus, {id, disease, report_text} per line.
vocab.json
    The vocabulary tokens in id order, and their digest.
classes.toml
    The lexicon entries of the classes, in label order.

A datagen output directory holds one corpus directory per split, "train" and
"test".

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import io
import json
import pathlib
from typing import Optional

# Third Party
import numpy as np
import toml

# dmlm
from dmlm.datasets.synthetic import PairedSample, SyntheticDataset, tokenize_sample_text
from dmlm.datasets.vocab import Vocabulary
from dmlm.encoders import ImageInput
from dmlm.errors import ContractViolationError
from dmlm.reports.corpus import ReportRecord, write_report_corpus
from dmlm.reports.lexicon import Lexicon
from dmlm.reports.report import parse_report, serialize_report
from dmlm.utils import atomic_write_bytes, atomic_write_text

# =============================================================================
# GLOBALS
# =============================================================================

IMAGES_FILE = "images.npy"
METADATA_FILE = "metadata.jsonl"
REPORTS_FILE = "reports.jsonl"
VOCAB_FILE = "vocab.json"
CLASSES_FILE = "classes.toml"

TRAIN_SPLIT = "train"
TEST_SPLIT = "test"


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _metadata_record(sample: PairedSample) -> dict:
    """Build the metadata record of a sample.

    :param sample: The sample.
    :return: The JSON compatible record.

    """
    return {
        "id": sample.id,
        "label": sample.label,
        "disease": sample.report.disease,
        "report_text": serialize_report(sample.report),
        "findings": list(sample.findings),
        "lesion_region": list(sample.lesion_region),
        "grid_h": sample.image.grid_h,
        "grid_w": sample.image.grid_w,
    }


# =============================================================================
# FUNCTIONS
# =============================================================================


def load_corpus(
    directory: pathlib.Path,
    report_style: str = "structured",
    max_len: int = 128,
    vocab: Optional[Vocabulary] = None,
) -> SyntheticDataset:
    """Load a corpus written by save_corpus().

    :param directory: The corpus directory.
    :param report_style: How sample text is tokenized.
    :param max_len: The maximum token sequence length.
    :param vocab: Optional vocabulary overriding the stored one.
    :return: The dataset.

    """
    for name in (IMAGES_FILE, METADATA_FILE, VOCAB_FILE, CLASSES_FILE):
        if not (directory / name).is_file():
            raise FileNotFoundError(f"Corpus file not found: {directory / name}")

    images = np.load(directory / IMAGES_FILE, allow_pickle=False)

    if images.ndim != 3 or images.dtype != np.float32:
        raise ContractViolationError(f"{IMAGES_FILE} must be a float32 array of rank 3")

    if vocab is None:
        vocab = Vocabulary.load(directory / VOCAB_FILE)

    classes = Lexicon.load(directory / CLASSES_FILE)

    with (directory / METADATA_FILE).open("r", encoding="utf-8") as handle:
        records = [json.loads(line) for line in handle if line.strip()]

    if len(records) != images.shape[0]:
        raise ContractViolationError(
            f"{METADATA_FILE} has {len(records)} records for {images.shape[0]} images"
        )

    samples = []

    for record, patches in zip(records, images):
        report = parse_report(record["report_text"], disease=record["disease"])
        findings = tuple(record["findings"])

        samples.append(
            PairedSample(
                id=record["id"],
                image=ImageInput(patches, record["grid_h"], record["grid_w"]),
                text=tokenize_sample_text(
                    report, findings, vocab, report_style, max_len
                ),
                label=record["label"],
                report=report,
                findings=findings,
                lesion_region=record["lesion_region"],
            )
        )

    return SyntheticDataset(samples, vocab, classes, report_style, max_len)


def save_corpus(directory: pathlib.Path, dataset: SyntheticDataset) -> None:
    """Write a dataset to a corpus directory.

    :param directory: The corpus directory, created if needed.
    :param dataset: The dataset to write.
    :return:

    """
    directory.mkdir(parents=True, exist_ok=True)

    buffer = io.BytesIO()
    patches = np.stack([sample.image.patches for sample in dataset])
    np.save(buffer, patches.astype(np.float32))
    atomic_write_bytes(directory / IMAGES_FILE, buffer.getvalue())

    lines = [
        json.dumps(_metadata_record(sample), ensure_ascii=False, sort_keys=True)
        for sample in dataset
    ]
    atomic_write_text(directory / METADATA_FILE, "".join(f"{line}\n" for line in lines))

    write_report_corpus(
        directory / REPORTS_FILE,
        (
            ReportRecord(
                sample.id, sample.report.disease, serialize_report(sample.report)
            )
            for sample in dataset
        ),
    )

    dataset.vocab.save(directory / VOCAB_FILE)

    classes = {
        "disease": [
            {
                "name": entry.name,
                "definition": entry.definition,
                "appearance": entry.appearance,
            }
            for entry in dataset.classes
        ]
    }
    atomic_write_text(directory / CLASSES_FILE, toml.dumps(classes))


def split_directory(directory: pathlib.Path, split: str) -> pathlib.Path:
    """Resolve the corpus directory of a split.

    :param directory: A datagen output directory, or a corpus directory.
    :param split: The split name.
    :return: The split's subdirectory when present, otherwise the directory itself.

    """
    candidate = directory / split

    return candidate if candidate.is_dir() else directory
