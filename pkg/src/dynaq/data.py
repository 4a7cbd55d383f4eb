"""Dataset loading, manifests, and pool partitioning.

Network-flow datasets arrive as CSV files, usually headerless.  A manifest
names the columns positionally, says which ones to drop (identifiers,
free-text categoricals, timestamps), which column is the label, and how to
map it to {0, 1}.  Loaded features are float64 matrices; no scaling is
applied anywhere.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

from .errors import SchemaError

PathLike = Union[str, Path]

BENIGN = 0
MALICIOUS = 1


@dataclass
class Dataset:
    """A fully numeric binary-labeled table."""

    features: np.ndarray        # (M, K) float64
    labels: np.ndarray          # (M,) int8, values in {0, 1}
    name: str = "dataset"
    feature_names: tuple = ()

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.features.ndim != 2:
            raise SchemaError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise SchemaError("labels length must match feature rows")
        bad = (self.labels != BENIGN) & (self.labels != MALICIOUS)
        if bad.any():
            raise SchemaError("labels must be 0 or 1")
        if self.feature_names and len(self.feature_names) != self.features.shape[1]:
            raise SchemaError("feature_names length must match feature columns")
        self.feature_names = tuple(self.feature_names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def positive_fraction(self) -> float:
        if self.labels.size == 0:
            return 0.0
        return float(self.labels.mean())

    def take(self, idx: np.ndarray, name: Optional[str] = None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx],
                       name=name or self.name, feature_names=self.feature_names)


@dataclass
class Manifest:
    """Versioned description of one CSV source."""

    name: str
    version: int
    columns: Sequence[str]
    label_column: str
    label_mode: str                     # "string" or "binary"
    drop_columns: Sequence[str] = ()
    benign_values: Sequence[str] = ()
    missing_policy: str = "error"       # "error" or "zero"

    def __post_init__(self):
        self.columns = [str(c) for c in self.columns]
        self.drop_columns = [str(c).casefold() for c in self.drop_columns]
        self.benign_values = [str(v).casefold() for v in self.benign_values]
        if self.label_mode not in ("string", "binary"):
            raise SchemaError(f"unknown label_mode {self.label_mode!r}")
        if self.missing_policy not in ("error", "zero"):
            raise SchemaError(f"unknown missing_policy {self.missing_policy!r}")
        lowered = [c.casefold() for c in self.columns]
        if self.label_column.casefold() not in lowered:
            raise SchemaError(f"label column {self.label_column!r} not in manifest columns")
        unknown = set(self.drop_columns) - set(lowered)
        if unknown:
            raise SchemaError(f"drop_columns not in manifest: {sorted(unknown)}")


def load_manifest(source: PathLike) -> Manifest:
    with open(source, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SchemaError(f"manifest {source} is not a mapping")
    keys = {"name", "version", "columns", "label_column", "label_mode",
            "drop_columns", "benign_values", "missing_policy"}
    fields = {k: v for k, v in raw.items() if k in keys}
    try:
        return Manifest(**fields)
    except TypeError as exc:
        raise SchemaError(f"bad manifest {source}: {exc}") from exc


def builtin_manifest(name: str) -> Manifest:
    """Load one of the manifests shipped inside the package."""
    ref = importlib.resources.files("dynaq").joinpath(f"manifests/{name}.yaml")
    with importlib.resources.as_file(ref) as path:
        if not path.exists():
            raise SchemaError(f"no built-in manifest named {name!r}")
        return load_manifest(path)


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _has_header(path: PathLike) -> bool:
    # A header line contains no numeric cell; any data row in these datasets
    # has plenty of them.
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        first = fh.readline()
    cells = [c.strip().strip('"') for c in first.rstrip("\n").split(",")]
    return not any(_is_number(c) for c in cells if c != "")


def _read_frame(path: PathLike, manifest: Manifest) -> pd.DataFrame:
    if _has_header(path):
        df = pd.read_csv(path, header=0, skipinitialspace=True, dtype=object)
        df.columns = [str(c).strip().casefold() for c in df.columns]
    else:
        df = pd.read_csv(path, header=None, skipinitialspace=True, dtype=object)
        if df.shape[1] != len(manifest.columns):
            raise SchemaError(
                f"{path}: expected {len(manifest.columns)} columns, found {df.shape[1]}")
        df.columns = [c.casefold() for c in manifest.columns]
    return df


def _extract_labels(df: pd.DataFrame, manifest: Manifest, path: PathLike) -> np.ndarray:
    col = manifest.label_column.casefold()
    if col not in df.columns:
        raise SchemaError(f"{path}: label column {manifest.label_column!r} missing")
    raw = df[col]
    if manifest.label_mode == "string":
        text = raw.astype(str).str.strip().str.casefold()
        labels = np.where(text.isin(manifest.benign_values), BENIGN, MALICIOUS)
        missing = raw.isna()
        if missing.any():
            row = int(np.flatnonzero(missing.to_numpy())[0])
            raise SchemaError(f"{path}: row {row}: empty label")
        return labels.astype(np.int8)
    numeric = pd.to_numeric(raw, errors="coerce")
    bad = numeric.isna() | ~numeric.isin([0, 1])
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise SchemaError(f"{path}: row {row}: label must be 0 or 1")
    return numeric.to_numpy(dtype=np.int8)


def load_dataset(path: PathLike, manifest: Manifest, name: Optional[str] = None) -> Dataset:
    """Read one CSV through a manifest.

    Dropped columns never touch the numeric parser, so free-text categoricals
    are fine there.  Everything that remains must parse as a number; an
    unparseable cell raises SchemaError naming the row.  Missing cells follow
    the manifest's missing_policy.
    """
    df = _read_frame(path, manifest)
    labels = _extract_labels(df, manifest, path)

    drop = set(manifest.drop_columns) | {manifest.label_column.casefold()}
    keep = [c for c in df.columns if c not in drop]
    if not keep:
        raise SchemaError(f"{path}: no feature columns remain after drops")

    mat = np.empty((len(df), len(keep)), dtype=np.float64)
    for j, col in enumerate(keep):
        raw = df[col]
        blank = raw.isna() | (raw.astype(str).str.strip() == "")
        vals = pd.to_numeric(raw, errors="coerce")
        unparseable = vals.isna() & ~blank
        if unparseable.any():
            row = int(np.flatnonzero(unparseable.to_numpy())[0])
            raise SchemaError(
                f"{path}: row {row}: column {col!r} value "
                f"{raw.iloc[row]!r} is not numeric")
        if blank.any() and manifest.missing_policy == "error":
            row = int(np.flatnonzero(blank.to_numpy())[0])
            raise SchemaError(f"{path}: row {row}: column {col!r} is missing")
        # convert through float(): exact for repr-printed doubles, where
        # pandas' fast parser can land 1 ulp off
        mat[:, j] = raw.where(~blank, 0.0).astype(np.float64).to_numpy()

    return Dataset(mat, labels, name=name or manifest.name, feature_names=tuple(keep))


def load_generic_csv(path: PathLike, label_column: str = "label",
                     name: Optional[str] = None) -> Dataset:
    """Load a headered CSV whose label column already holds 0/1."""
    if not _has_header(path):
        raise SchemaError(f"{path}: generic CSV loading needs a header row")
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        header = [c.strip().strip('"') for c in fh.readline().rstrip("\n").split(",")]
    manifest = Manifest(name=name or Path(path).stem, version=1,
                        columns=header, label_column=label_column,
                        label_mode="binary", missing_policy="error")
    return load_dataset(path, manifest, name=name)


def load_nslkdd(path: PathLike, name: str = "nslkdd") -> Dataset:
    return load_dataset(path, builtin_manifest("nslkdd"), name=name)


def load_unsw(path: PathLike, name: str = "unsw-nb15") -> Dataset:
    return load_dataset(path, builtin_manifest("unsw_nb15"), name=name)


def concat_datasets(first: Dataset, second: Dataset, name: str) -> Dataset:
    """Stack two compatible datasets, first rows then second rows."""
    if first.n_features != second.n_features:
        raise SchemaError("datasets have different feature counts")
    if first.feature_names and second.feature_names \
            and first.feature_names != second.feature_names:
        raise SchemaError("datasets have different feature names")
    return Dataset(np.vstack([first.features, second.features]),
                   np.concatenate([first.labels, second.labels]),
                   name=name,
                   feature_names=first.feature_names or second.feature_names)


def build_nslkdd_rand(train: Dataset, test: Dataset) -> Dataset:
    """Merged NSL-KDD variant: train rows followed by test rows, one pool."""
    return concat_datasets(train, test, name="nslkdd-rand")


@dataclass
class PoolPartition:
    """Index split of one dataset into labeled / unlabeled / evaluation."""

    labeled: np.ndarray
    unlabeled: np.ndarray
    evaluation: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.labeled = np.asarray(self.labeled, dtype=np.int64)
        self.unlabeled = np.asarray(self.unlabeled, dtype=np.int64)
        self.evaluation = np.asarray(self.evaluation, dtype=np.int64)

    def validate(self, n_rows: int) -> None:
        parts = [self.labeled, self.unlabeled, self.evaluation]
        allidx = np.concatenate(parts)
        if allidx.size and (allidx.min() < 0 or allidx.max() >= n_rows):
            raise SchemaError("partition index out of range")
        if np.unique(allidx).size != allidx.size:
            raise SchemaError("partition parts overlap")


def partition(data: Dataset, labeled0: int, eval_size: int = 0,
              fixed_eval: Optional[np.ndarray] = None, seed: int = 0) -> PoolPartition:
    """Split rows into initial labeled set, unlabeled pool, and evaluation set.

    Sampling is uniform without replacement and fully determined by the seed.
    When fixed_eval is given those rows form the evaluation set verbatim and
    eval_size is ignored.
    """
    n = data.n_rows
    rng = np.random.default_rng(seed)
    if fixed_eval is not None:
        ev = np.unique(np.asarray(fixed_eval, dtype=np.int64))
        if ev.size and (ev.min() < 0 or ev.max() >= n):
            raise SchemaError("fixed_eval index out of range")
        rest = np.setdiff1d(np.arange(n, dtype=np.int64), ev, assume_unique=False)
        if labeled0 > rest.size:
            raise SchemaError(f"labeled0={labeled0} exceeds pool of {rest.size}")
        perm = rng.permutation(rest.size)
        lab = rest[perm[:labeled0]]
        unl = rest[perm[labeled0:]]
    else:
        if labeled0 + eval_size > n:
            raise SchemaError("labeled0 + eval_size exceeds dataset rows")
        perm = rng.permutation(n)
        ev = perm[:eval_size]
        lab = perm[eval_size:eval_size + labeled0]
        unl = perm[eval_size + labeled0:]
    part = PoolPartition(np.sort(lab), np.sort(unl), np.sort(ev), seed=seed)
    part.validate(n)
    return part
