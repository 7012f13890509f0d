"""Dataset containers and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ContractError, IngestionError


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows about a synthetic dataset.

    Column indices refer to columns of ``Dataset.x``. ``generator`` records the
    settings needed to draw fresh rows from the same population (graph kind,
    outcome form, noise level), which biased selection relies on.
    """

    stable_cols: np.ndarray
    unstable_cols: np.ndarray
    beta_true: np.ndarray
    biased_cols: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    nonlinear_term: Optional[np.ndarray] = None
    f_values: Optional[np.ndarray] = None
    generator: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("stable_cols", "unstable_cols", "biased_cols"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        object.__setattr__(self, "beta_true", _frozen(self.beta_true))
        for name in ("nonlinear_term", "f_values"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _frozen(getattr(self, name)))

        p = self.beta_true.shape[0]
        cols = np.concatenate([self.stable_cols, self.unstable_cols])
        if sorted(cols.tolist()) != list(range(p)):
            raise ContractError("stable_cols and unstable_cols must partition range(p)")
        if not set(self.biased_cols.tolist()) <= set(self.unstable_cols.tolist()):
            raise ContractError("biased_cols must be a subset of unstable_cols")
        if np.any(self.beta_true[self.unstable_cols] != 0):
            raise ContractError("beta_true must be zero on unstable columns")

    @property
    def p(self):
        return self.beta_true.shape[0]

    def to_dict(self):
        return {
            "stable_cols": self.stable_cols.tolist(),
            "unstable_cols": self.unstable_cols.tolist(),
            "biased_cols": self.biased_cols.tolist(),
            "beta_true": self.beta_true.tolist(),
            "generator": dict(self.generator),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            stable_cols=d["stable_cols"],
            unstable_cols=d["unstable_cols"],
            biased_cols=d.get("biased_cols", []),
            beta_true=d["beta_true"],
            generator=d.get("generator", {}),
        )


@dataclass(frozen=True)
class Dataset:
    """Covariates ``x`` (n x p), outcome ``y`` (n, may be unset) and labels.

    Arrays are copied and made read-only on construction.
    """

    x: np.ndarray
    y: Optional[np.ndarray] = None
    feature_names: Optional[Sequence[str]] = None
    truth: Optional[GroundTruth] = None

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim != 2:
            raise ContractError(f"x must be 2-D, got shape {x.shape}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ContractError(f"x must be non-empty, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ContractError("x contains NaN or Inf")
        object.__setattr__(self, "x", x)

        if self.y is not None:
            y = _frozen(self.y)
            if y.shape != (x.shape[0],):
                raise ContractError(f"y must have shape ({x.shape[0]},), got {y.shape}")
            if not np.all(np.isfinite(y)):
                raise ContractError("y contains NaN or Inf")
            object.__setattr__(self, "y", y)

        names = self.feature_names
        if names is None:
            names = [f"X{j + 1}" for j in range(x.shape[1])]
        names = tuple(str(s) for s in names)
        if len(names) != x.shape[1]:
            raise ContractError(f"{len(names)} feature names for {x.shape[1]} columns")
        object.__setattr__(self, "feature_names", names)

        if self.truth is not None and self.truth.p != x.shape[1]:
            raise ContractError("ground truth dimension does not match x")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def require_y(self):
        if self.y is None:
            raise ContractError("dataset has no outcome column")
        return self.y

    def take(self, rows):
        """Row subset (or permutation); per-sample truth arrays follow along."""
        rows = np.asarray(rows)
        truth = self.truth
        if truth is not None:
            truth = replace(
                truth,
                nonlinear_term=None if truth.nonlinear_term is None else truth.nonlinear_term[rows],
                f_values=None if truth.f_values is None else truth.f_values[rows],
            )
        y = None if self.y is None else self.y[rows]
        return Dataset(self.x[rows], y, self.feature_names, truth)


def concat(datasets):
    """Stack datasets that share a schema."""
    first = datasets[0]
    ys = [d.y for d in datasets]
    y = None if any(v is None for v in ys) else np.concatenate(ys)
    truth = first.truth
    if truth is not None:
        per_sample = {}
        for name in ("nonlinear_term", "f_values"):
            parts = [getattr(d.truth, name) for d in datasets]
            per_sample[name] = None if any(v is None for v in parts) else np.concatenate(parts)
        truth = replace(truth, **per_sample)
    return Dataset(np.vstack([d.x for d in datasets]), y, first.feature_names, truth)


def metadata_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def write_dataset_csv(ds, path, metadata=None):
    """Write ``ds`` as ``X1..Xp,Y`` CSV; with ``metadata`` also a JSON sidecar.

    Floats are written with 17 significant digits so a round trip is exact.
    """
    path = Path(path)
    y = ds.require_y()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + ["Y"])
        for row, target in zip(ds.x, y):
            w.writerow([format(v, ".17g") for v in row] + [format(target, ".17g")])
    if metadata is not None:
        meta = dict(metadata)
        if ds.truth is not None:
            meta.setdefault("truth", ds.truth.to_dict())
        with open(metadata_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def read_metadata(csv_path):
    """Load the JSON sidecar next to ``csv_path``; ``None`` when absent."""
    mp = metadata_path(csv_path)
    if not mp.exists():
        return None
    with open(mp) as fh:
        return json.load(fh)


def read_dataset_csv(path, outcome_column="Y", feature_columns=None, attach_truth=True):
    """Read a CSV into a :class:`Dataset`.

    ``feature_columns`` defaults to every column except ``outcome_column``.
    Raises :class:`IngestionError` naming the file and offending column.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"{path}: cannot read ({exc})", path=str(path)) from exc
    if not rows:
        raise IngestionError(f"{path}: empty file", path=str(path))
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if outcome_column not in header:
        raise IngestionError(
            f"{path}: missing outcome column {outcome_column!r}", path=str(path), column=outcome_column
        )
    if feature_columns is None:
        feature_columns = [h for h in header if h != outcome_column]
    feature_columns = list(feature_columns)
    if outcome_column in feature_columns:
        raise IngestionError(
            f"{path}: outcome column {outcome_column!r} also listed as a feature",
            path=str(path),
            column=outcome_column,
        )
    for col in feature_columns:
        if col not in header:
            raise IngestionError(f"{path}: missing feature column {col!r}", path=str(path), column=col)
    if not body:
        raise IngestionError(f"{path}: no data rows", path=str(path))

    idx = {h: i for i, h in enumerate(header)}
    wanted = feature_columns + [outcome_column]
    table = np.empty((len(body), len(wanted)))
    for k, col in enumerate(wanted):
        j = idx[col]
        for i, r in enumerate(body):
            try:
                table[i, k] = float(r[j])
            except (ValueError, IndexError) as exc:
                raise IngestionError(
                    f"{path}: row {i + 2} column {col!r} is not a number", path=str(path), column=col
                ) from exc
        if not np.all(np.isfinite(table[:, k])):
            raise IngestionError(f"{path}: column {col!r} has non-finite values", path=str(path), column=col)

    truth = None
    if attach_truth:
        meta = read_metadata(path)
        if meta and "truth" in meta and len(meta["truth"]["beta_true"]) == len(feature_columns):
            truth = GroundTruth.from_dict(meta["truth"])
    return Dataset(table[:, :-1], table[:, -1], feature_columns, truth)
