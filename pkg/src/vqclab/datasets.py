"""Dataset loading, binarization, splitting, and angle encoding.

Four benchmark datasets are supported, each validated against a fixed
shape registry at load time:

=========  ===========  ========  =======  ==================
name       instances    features  classes  splits (tr/va/te)
=========  ===========  ========  =======  ==================
iris       150          4         3        60 / 20 / 20
wine       178          13        3        80 / 20 / 30
titanic    891          11        2        320 / 80 / 179
mnist      60000        784       10       320 / 80 / 400
=========  ===========  ========  =======  ==================

Tabular sets are plain CSV with a header row (features first, label
last; Titanic uses the canonical passenger schema with a ``Survived``
label column).  MNIST is the standard big-endian IDX pair.

The pipeline binarizes to the two smallest class labels, shuffles with a
seed and takes the first train+valid+test rows, then encodes: principal
components fitted on the train split reduce dimensionality to at most the
qubit count (identity when already small enough), and per-dimension
min-max scaling maps train values onto [0, pi] with valid/test clipped
into range.  The encoder state depends only on the train split, so there
is no leakage.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SHAPE_REGISTRY",
    "SPLIT_REGISTRY",
    "RawDataset",
    "SplitDataset",
    "EncoderState",
    "load",
    "binarize_and_split",
    "fit_encoder",
    "encode",
    "prepare",
]

# name -> (instances, feature columns, classes)
SHAPE_REGISTRY = {
    "iris": (150, 4, 3),
    "wine": (178, 13, 3),
    "titanic": (891, 11, 2),
    "mnist": (60000, 784, 10),
}
# name -> (train, valid, test) row counts after binarization
SPLIT_REGISTRY = {
    "iris": (60, 20, 20),
    "wine": (80, 20, 30),
    "titanic": (320, 80, 179),
    "mnist": (320, 80, 400),
}

# Titanic columns that identify rather than describe a passenger; kept in
# the raw matrix (the registry counts them) but masked out of the model
# features.
_TITANIC_IDENTIFIERS = {"PassengerId", "Name", "Ticket", "Cabin"}
_TITANIC_LABEL = "Survived"


@dataclass
class RawDataset:
    """Parsed dataset: numeric matrix (NaN for missing), integer labels.

    ``usable`` masks the feature columns that may feed the model; it is
    all-True except for Titanic's identifier columns.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    usable: np.ndarray


@dataclass
class SplitDataset:
    """Train/valid/test splits as (features, labels) pairs.

    Straight out of ``binarize_and_split`` the features are raw usable
    columns and ``encoder_state`` is None; after ``prepare`` they are
    encoded angles in [0, pi] with at most n_qubits dimensions.
    """

    name: str
    train: tuple[np.ndarray, np.ndarray]
    valid: tuple[np.ndarray, np.ndarray]
    test: tuple[np.ndarray, np.ndarray]
    encoder_state: "EncoderState | None" = None


def _check_shape(name: str, features: np.ndarray, labels: np.ndarray) -> None:
    want_rows, want_cols, want_classes = SHAPE_REGISTRY[name]
    rows, cols = features.shape
    classes = np.unique(labels).size
    if (rows, cols, classes) != (want_rows, want_cols, want_classes):
        raise ValueError(
            f"{name}: expected {want_rows}x{want_cols} with {want_classes} classes, "
            f"got {rows}x{cols} with {classes}"
        )


def _read_csv_rows(path: Path) -> tuple[list[str], list[list[str]], list[int]]:
    """Read header + data rows, keeping each row's 1-based file line number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        rows, linenos = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append(row)
            linenos.append(lineno)
    return header, rows, linenos


def _column_values(rows: list[list[str]], col: int) -> list[str]:
    return [row[col] for row in rows]


def _numeric_or_categorical(values: list[str]) -> np.ndarray:
    """Parse one CSV column: floats where possible, else sorted-category codes.

    Empty fields become NaN either way.
    """
    out = np.empty(len(values), dtype=np.float64)
    numeric = True
    for v in values:
        if v == "":
            continue
        try:
            float(v)
        except ValueError:
            numeric = False
            break
    if numeric:
        for i, v in enumerate(values):
            out[i] = np.nan if v == "" else float(v)
        return out
    categories = {c: i for i, c in enumerate(sorted({v for v in values if v != ""}))}
    for i, v in enumerate(values):
        out[i] = np.nan if v == "" else categories[v]
    return out


def _parse_labels(values: list[str]) -> np.ndarray:
    try:
        return np.array([int(float(v)) for v in values], dtype=np.int64)
    except ValueError:
        categories = {c: i for i, c in enumerate(sorted(set(values)))}
        return np.array([categories[v] for v in values], dtype=np.int64)


def _load_tabular(name: str, path: Path) -> RawDataset:
    header, rows, linenos = _read_csv_rows(path)
    if len(header) < 2:
        raise ValueError(f"{path}: need at least one feature column plus a label")
    n_feat = len(header) - 1
    features = np.empty((len(rows), n_feat), dtype=np.float64)
    for c in range(n_feat):
        values = _column_values(rows, c)
        for i, v in enumerate(values):
            if v == "":
                features[i, c] = np.nan
                continue
            try:
                features[i, c] = float(v)
            except ValueError:
                raise ValueError(
                    f"{path}: line {linenos[i]}: non-numeric value {v!r} in column "
                    f"{header[c]!r}"
                ) from None
    labels = _parse_labels(_column_values(rows, n_feat))
    raw = RawDataset(
        name, features, labels, header[:n_feat], np.ones(n_feat, dtype=bool)
    )
    _check_shape(name, raw.features, raw.labels)
    return raw


def _load_titanic(path: Path) -> RawDataset:
    header, rows, linenos = _read_csv_rows(path)
    if _TITANIC_LABEL not in header:
        raise ValueError(f"{path}: titanic file needs a {_TITANIC_LABEL!r} column")
    label_col = header.index(_TITANIC_LABEL)
    feat_cols = [c for c in range(len(header)) if c != label_col]
    columns = [_numeric_or_categorical(_column_values(rows, c)) for c in feat_cols]
    features = np.column_stack(columns) if columns else np.empty((len(rows), 0))
    label_values = _column_values(rows, label_col)
    for i, v in enumerate(label_values):
        if v == "":
            raise ValueError(
                f"{path}: line {linenos[i]}: missing {_TITANIC_LABEL} value"
            )
    labels = _parse_labels(label_values)
    names = [header[c] for c in feat_cols]
    usable = np.array([n not in _TITANIC_IDENTIFIERS for n in names], dtype=bool)
    raw = RawDataset("titanic", features, labels, names, usable)
    _check_shape("titanic", raw.features, raw.labels)
    return raw


def _read_idx(path: Path, want_magic: int) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < 4:
        raise ValueError(f"{path}: truncated IDX header")
    (magic,) = struct.unpack(">i", data[:4])
    if magic != want_magic:
        raise ValueError(
            f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{want_magic:08x}"
        )
    n_dims = magic & 0xFF
    header_len = 4 + 4 * n_dims
    if len(data) < header_len:
        raise ValueError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(f">{n_dims}i", data[4:header_len])
    count = int(np.prod(dims))
    body = np.frombuffer(data, dtype=np.uint8, offset=header_len)
    if body.size != count:
        raise ValueError(
            f"{path}: IDX payload has {body.size} bytes, dimensions imply {count}"
        )
    return body.reshape(dims)


def _load_mnist(path: Path) -> RawDataset:
    images = _read_idx(path / "train-images-idx3-ubyte", 0x00000803)
    labels = _read_idx(path / "train-labels-idx1-ubyte", 0x00000801)
    if images.ndim != 3:
        raise ValueError("mnist image file must be rank 3 (count, rows, cols)")
    if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
        raise ValueError(
            f"mnist image/label counts differ: {images.shape[0]} vs {labels.shape[0]}"
        )
    n = images.shape[0]
    features = images.reshape(n, -1).astype(np.float64)
    names = [f"px{i}" for i in range(features.shape[1])]
    raw = RawDataset(
        "mnist",
        features,
        labels.astype(np.int64),
        names,
        np.ones(features.shape[1], dtype=bool),
    )
    _check_shape("mnist", raw.features, raw.labels)
    return raw


def load(name: str, path: str | Path) -> RawDataset:
    """Load a dataset by name from a file (CSV) or directory (MNIST IDX)."""
    key = name.lower()
    if key not in SHAPE_REGISTRY:
        raise ValueError(f"unknown dataset {name!r}; choices: {sorted(SHAPE_REGISTRY)}")
    path = Path(path)
    if key == "titanic":
        return _load_titanic(path)
    if key == "mnist":
        return _load_mnist(path)
    return _load_tabular(key, path)


def binarize_and_split(raw: RawDataset, seed: int) -> SplitDataset:
    """Keep the two smallest class labels, shuffle, slice the fixed splits.

    Identical seeds give identical split membership.  Features are
    restricted to the usable model columns here.
    """
    classes = np.unique(raw.labels)
    if classes.size < 2:
        raise ValueError(f"{raw.name}: need at least 2 classes, found {classes.size}")
    keep_values = classes[:2]
    mask = np.isin(raw.labels, keep_values)
    features = raw.features[mask][:, raw.usable]
    labels = (raw.labels[mask] == keep_values[1]).astype(np.int64)

    n_train, n_valid, n_test = SPLIT_REGISTRY[raw.name]
    total = n_train + n_valid + n_test
    if labels.size < total:
        raise ValueError(
            f"{raw.name}: {labels.size} instances after binarization, "
            f"need {total} for the splits"
        )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    order = rng.permutation(labels.size)[:total]
    features = features[order]
    labels = labels[order]
    a, b = n_train, n_train + n_valid
    return SplitDataset(
        raw.name,
        (features[:a], labels[:a]),
        (features[a:b], labels[a:b]),
        (features[b:], labels[b:]),
    )


@dataclass
class EncoderState:
    """Train-split-fitted reduction and scaling parameters.

    ``components`` is None when the original dimension already fits the
    qubit count (identity reduction, no centering).
    """

    medians: np.ndarray
    center: np.ndarray | None
    components: np.ndarray | None
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.mins.size


def fit_encoder(train_features: np.ndarray, n_qubits: int) -> EncoderState:
    """Fit imputation, reduction, and [0, pi] scaling on the train split."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    x = np.asarray(train_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("encoder fit needs a non-empty 2-d feature matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
        medians = np.nanmedian(x, axis=0)
    medians = np.where(np.isfinite(medians), medians, 0.0)
    x = np.where(np.isnan(x), medians, x)

    center = components = None
    if x.shape[1] > n_qubits:
        center = x.mean(axis=0)
        _, _, vt = np.linalg.svd(x - center, full_matrices=False)
        components = vt[:n_qubits]
        # Deterministic orientation: largest-magnitude loading positive.
        for row in components:
            pivot = np.argmax(np.abs(row))
            if row[pivot] < 0:
                row *= -1.0
        projected = (x - center) @ components.T
    else:
        projected = x
    return EncoderState(
        medians, center, components, projected.min(axis=0), projected.max(axis=0)
    )


def encode(state: EncoderState, features: np.ndarray) -> np.ndarray:
    """Map raw feature rows to angles in [0, pi] using fitted parameters.

    Constant train columns map to angle 0; out-of-range valid/test values
    clip into [0, pi].
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != state.medians.size:
        raise ValueError(
            f"feature dim {x.shape[1]} != fitted dim {state.medians.size}"
        )
    x = np.where(np.isnan(x), state.medians, x)
    if state.components is not None:
        x = (x - state.center) @ state.components.T
    span = state.maxs - state.mins
    safe = np.where(span > 0, span, 1.0)
    angles = (x - state.mins) / safe * np.pi
    angles[:, span <= 0] = 0.0
    return np.clip(angles, 0.0, np.pi)


def prepare(raw: RawDataset, n_qubits: int, seed: int) -> SplitDataset:
    """binarize_and_split + fit_encoder on train + encode all splits."""
    split = binarize_and_split(raw, seed)
    enc = fit_encoder(split.train[0], n_qubits)
    out = []
    for feats, labels in (split.train, split.valid, split.test):
        out.append((encode(enc, feats), labels))
    return SplitDataset(raw.name, out[0], out[1], out[2], enc)
