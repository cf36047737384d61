"""Benchmark dataset ingestion and receptive-field encoding.

Three UCI binary classification sets are supported, with fixed split sizes.
Raw files are read from a local data directory (they are small text files
from the UCI repository); a fetch helper downloads and checksums them when
network access is available, and loads verify the recorded checksum.  The
split is a seeded shuffle of the complete rows: the published experiments do
not disclose which rows were used, only the split sizes.

Encoding: each feature gets a bank of ten one-hot receptive fields at the
empirical deciles of the *training* rows; duplicate quantile boundaries merge
bins (constant features collapse to a single always-on field).  Test rows are
encoded with the training boundaries only.
"""

from dataclasses import dataclass
import hashlib
from pathlib import Path

import numpy as np

from . import rngs
from .patterns import rf_encode_matrix


class DatasetError(RuntimeError):
    """Raised when a dataset file is missing, corrupt, or mis-sized."""


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    filename: str
    url: str
    n_features: int
    n_train: int
    n_test: int
    positive_label: str   # documented class mapped to o=1


DATASETS = {
    "BC": DatasetSpec(
        name="BC",
        filename="breast-cancer-wisconsin.data",
        url="https://archive.ics.uci.edu/ml/machine-learning-databases/"
            "breast-cancer-wisconsin/breast-cancer-wisconsin.data",
        n_features=9, n_train=222, n_test=383,
        positive_label="malignant (class code 4)",
    ),
    "HEART": DatasetSpec(
        name="HEART",
        filename="processed.cleveland.data",
        url="https://archive.ics.uci.edu/ml/machine-learning-databases/"
            "heart-disease/processed.cleveland.data",
        n_features=13, n_train=70, n_test=200,
        positive_label="disease present (num > 0)",
    ),
    "ION": DatasetSpec(
        name="ION",
        filename="ionosphere.data",
        url="https://archive.ics.uci.edu/ml/machine-learning-databases/"
            "ionosphere/ionosphere.data",
        n_features=34, n_train=100, n_test=251,
        positive_label="good radar return (class g)",
    ),
}


def _parse_rows(name: str, text: str):
    """(features, labels) of complete rows; malformed rows raise, missing-value
    rows are dropped and counted."""
    spec = DATASETS[name]
    feats, labels = [], []
    n_total = n_dropped = 0
    for line in text.strip().splitlines():
        line = line.strip().rstrip(",")
        if not line:
            continue
        parts = line.split(",")
        n_total += 1
        if name == "BC":
            if len(parts) != 11:
                raise DatasetError(f"BC row with {len(parts)} fields")
            raw, label = parts[1:10], 1 if parts[10] == "4" else 0
        elif name == "HEART":
            if len(parts) != 14:
                raise DatasetError(f"HEART row with {len(parts)} fields")
            raw, label = parts[0:13], 1 if float(parts[13]) > 0 else 0
        elif name == "ION":
            if len(parts) != 35:
                raise DatasetError(f"ION row with {len(parts)} fields")
            raw, label = parts[0:34], 1 if parts[34] == "g" else 0
        else:
            raise DatasetError(f"unknown dataset {name}")
        if any(v == "?" for v in raw):
            n_dropped += 1
            continue
        feats.append([float(v) for v in raw])
        labels.append(label)
    return np.array(feats), np.array(labels, dtype=np.int64), n_total, n_dropped


def _checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_dataset(name: str, data_dir, seed: int = 0):
    """Deterministic train/test split of a locally cached dataset.

    Returns (train_X, train_y, test_X, test_y, manifest).  The manifest
    records the file checksum, row accounting, and the split seed, which
    together reproduce the exact split.
    """
    if name not in DATASETS:
        raise DatasetError(f"unknown dataset {name!r}; known: {sorted(DATASETS)}")
    spec = DATASETS[name]
    path = Path(data_dir) / spec.filename
    if not path.exists():
        raise DatasetError(
            f"dataset file {path} not found; fetch it first "
            f"(branchlearn --fetch-data --out <data_dir>) or place the UCI file "
            f"{spec.filename} there")
    X, y, n_total, n_dropped = _parse_rows(name, path.read_text())
    if X.shape[1] != spec.n_features:
        raise DatasetError(f"{name}: expected {spec.n_features} features, "
                           f"got {X.shape[1]}")
    need = spec.n_train + spec.n_test
    if len(X) < need:
        raise DatasetError(f"{name}: {len(X)} complete rows < required {need}")
    checksum = _checksum(path)
    recorded = Path(data_dir) / (spec.filename + ".sha256")
    if recorded.exists():
        expected = recorded.read_text().strip()
        if expected != checksum:
            raise DatasetError(f"{name}: checksum mismatch ({checksum} != {expected})")
    order = rngs.stream(seed, rngs.DATASET_SPLIT).permutation(len(X))
    train_idx = order[:spec.n_train]
    test_idx = order[spec.n_train:need]
    manifest = {
        "dataset": name,
        "file": spec.filename,
        "sha256": checksum,
        "rows_total": n_total,
        "rows_dropped_missing": n_dropped,
        "rows_unused": len(X) - need,
        "n_train": spec.n_train,
        "n_test": spec.n_test,
        "split_seed": seed,
        "positive_label": spec.positive_label,
    }
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx], manifest


@dataclass(frozen=True)
class RfEncoder:
    """Per-feature quantile boundaries built from training rows only."""

    boundaries: tuple   # one ascending array per feature

    @property
    def n_bits(self) -> int:
        return sum(len(b) + 1 for b in self.boundaries)

    def encode(self, X: np.ndarray) -> np.ndarray:
        return rf_encode_matrix(np.asarray(X, dtype=np.float64), self.boundaries)


def build_encoder(train_X: np.ndarray, n_rf: int = 10) -> RfEncoder:
    """Density-matched boundaries at the empirical quantiles of each feature.

    Duplicate boundary values (heavily tied features) are merged, shrinking
    that feature's bank; a constant feature keeps a single always-on field.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    qs = np.arange(1, n_rf) / n_rf
    bounds = []
    for j in range(train_X.shape[1]):
        raw = np.quantile(train_X[:, j], qs, method="midpoint")
        uniq = np.unique(raw)
        # boundaries at or above the column maximum head empty bins (values on
        # a boundary fall to the lower interval); a constant feature keeps a
        # single always-on field
        uniq = uniq[uniq < train_X[:, j].max()]
        bounds.append(uniq)
    return RfEncoder(tuple(np.asarray(b) for b in bounds))


def fetch_datasets(data_dir, names=None) -> list:
    """Download raw UCI files and record their checksums (network required)."""
    import urllib.request

    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    fetched = []
    for name in names or sorted(DATASETS):
        spec = DATASETS[name]
        path = data_dir / spec.filename
        try:
            with urllib.request.urlopen(spec.url, timeout=60) as resp:
                path.write_bytes(resp.read())
        except Exception as exc:   # noqa: BLE001 - surface as a data error
            raise DatasetError(f"could not fetch {spec.url}: {exc}") from exc
        (data_dir / (spec.filename + ".sha256")).write_text(_checksum(path) + "\n")
        fetched.append(str(path))
    return fetched
