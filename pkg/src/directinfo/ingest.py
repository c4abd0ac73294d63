"""Loading variable-by-observation matrices with missing values.

A :class:`Dataset` holds ``n_vars`` named variables observed in ``n_obs``
conditions, together with a boolean mask of which cells were actually
observed. Estimation always happens on a :class:`JointSample`, the subset of
observations where every requested variable is present.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    DuplicateNameError,
    EmptyDatasetError,
    ParseError,
    RaggedRowsError,
)

ORIENTATIONS = ("rows", "columns")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Named variables x observations, with an explicit observed-mask.

    Parameters
    ----------
    names : tuple of str
        Unique variable identifiers, one per row of ``values``.
    values : ndarray, shape (n_vars, n_obs)
        Observations. Entries where ``present`` is False are never read.
    present : ndarray of bool, shape (n_vars, n_obs)
        True where the value was observed.
    """

    names: tuple
    values: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.array(self.values, dtype=float)
        present = np.array(self.present, dtype=bool)
        if values.ndim != 2:
            raise ParseError(f"values must be 2-D, got shape {values.shape}")
        if values.shape != present.shape:
            raise ParseError(
                f"values {values.shape} and mask {present.shape} differ in shape")
        n_vars, n_obs = values.shape
        if n_vars < 1 or n_obs < 1:
            raise EmptyDatasetError(
                f"dataset needs at least one variable and one observation, "
                f"got {n_vars}x{n_obs}")
        if len(names) != n_vars:
            raise ParseError(f"{len(names)} names for {n_vars} variables")
        _check_unique(names)
        # masked cells are undefined; zero them so nothing downstream sees junk
        values = np.where(present, values, 0.0)
        if not np.all(np.isfinite(values)):
            raise ParseError("observed values must be finite")
        values.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)

    @property
    def n_vars(self) -> int:
        return self.values.shape[0]

    @property
    def n_obs(self) -> int:
        return self.values.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    @classmethod
    def from_array(cls, values, names=None, present=None) -> "Dataset":
        """Build a dataset from an (n_vars, n_obs) array.

        When ``present`` is omitted, NaN cells are treated as missing.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if present is None:
            present = ~np.isnan(values)
        if names is None:
            names = [f"v{i}" for i in range(values.shape[0])]
        return cls(tuple(names), values, present)

    def __repr__(self):
        return (f"Dataset(n_vars={self.n_vars}, n_obs={self.n_obs}, "
                f"missing={int((~self.present).sum())})")


@dataclass(frozen=True, eq=False)
class JointSample:
    """Observations where all requested variables are present.

    ``columns[k]`` is the k-th requested variable restricted to ``indices``.
    """

    indices: np.ndarray
    columns: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)


def _check_unique(names: Sequence[str]) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicateNameError(f"duplicate variable name {name!r}")
        seen.add(name)


def _parse_cell(cell: str, missing_token: str, where: str) -> float:
    text = cell.strip()
    if text == "" or text == missing_token:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"unparseable cell {cell!r} at {where}") from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r} at {where}")
    return value


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline=""), True
    return source, False


def load_dataset(source, delimiter: str = ",", missing_token: str = "NA",
                 orientation: str = "rows", header: bool = False,
                 index: bool = False) -> Dataset:
    """Parse a delimited-text table into a :class:`Dataset`.

    Parameters
    ----------
    source : path or text stream
    delimiter : str
        Cell separator, usually ``","`` or ``"\\t"``.
    missing_token : str
        Cell content marking a missing value. Blank cells are missing too.
    orientation : {"rows", "columns"}
        ``"rows"``: one variable per line, the first cell holds its name.
        ``"columns"``: the first line holds the names, every following
        line is one observation.
    header : bool
        For ``"rows"`` orientation, skip a leading line of observation labels.
    index : bool
        For ``"columns"`` orientation, the first cell of every line is an
        observation label and is dropped.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    stream, owned = _open_text(source)
    try:
        rows = [r for r in csv.reader(stream, delimiter=delimiter)
                if any(c.strip() for c in r)]
    finally:
        if owned:
            stream.close()

    if orientation == "rows":
        if header and rows:
            rows = rows[1:]
        if not rows:
            raise EmptyDatasetError("no variables found")
        width = len(rows[0])
        names, table = [], []
        for lineno, row in enumerate(rows):
            if len(row) != width:
                raise RaggedRowsError(
                    f"variable {row[0]!r} has {len(row) - 1} observations, "
                    f"expected {width - 1}")
            names.append(row[0].strip())
            table.append([_parse_cell(c, missing_token, f"row {lineno}, col {k + 1}")
                          for k, c in enumerate(row[1:])])
        if width < 2:
            raise EmptyDatasetError("no observations found")
        values = np.array(table, dtype=float)
    else:
        if not rows:
            raise EmptyDatasetError("no header line found")
        head = rows[0][1:] if index else rows[0]
        names = [h.strip() for h in head]
        body = rows[1:]
        if not names:
            raise EmptyDatasetError("no variables found")
        if not body:
            raise EmptyDatasetError("no observations found")
        width = len(rows[0])
        table = []
        for lineno, row in enumerate(body, start=1):
            if len(row) != width:
                raise RaggedRowsError(
                    f"line {lineno} has {len(row)} cells, expected {width}")
            cells = row[1:] if index else row
            table.append([_parse_cell(c, missing_token, f"line {lineno}, col {k}")
                          for k, c in enumerate(cells)])
        values = np.array(table, dtype=float).T

    _check_unique(names)
    present = ~np.isnan(values)
    return Dataset(tuple(names), values, present)


def write_dataset(ds: Dataset, dest, delimiter: str = ",",
                  missing_token: str = "NA", orientation: str = "rows") -> None:
    """Write a dataset in the format read by :func:`load_dataset`.

    Floats are written with ``repr`` so reloading is bit-exact.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    stream, owned = (open(dest, "w", newline=""), True) \
        if isinstance(dest, (str, os.PathLike)) else (dest, False)
    try:
        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        cells = [[repr(float(v)) if p else missing_token
                  for v, p in zip(vrow, prow)]
                 for vrow, prow in zip(ds.values, ds.present)]
        if orientation == "rows":
            for name, row in zip(ds.names, cells):
                writer.writerow([name, *row])
        else:
            writer.writerow(ds.names)
            for obs in zip(*cells):
                writer.writerow(obs)
    finally:
        if owned:
            stream.close()


def dumps_dataset(ds: Dataset, **kwargs) -> str:
    buf = io.StringIO()
    write_dataset(ds, buf, **kwargs)
    return buf.getvalue()


def joint_sample(ds: Dataset, variables: Iterable[int]) -> JointSample:
    """Restrict ``variables`` to the observations where all of them are present."""
    variables = [int(v) for v in variables]
    if not variables:
        raise ValueError("at least one variable is required")
    for v in variables:
        if not 0 <= v < ds.n_vars:
            raise IndexError(f"variable index {v} out of range")
    mask = np.logical_and.reduce(ds.present[variables], axis=0)
    indices = np.flatnonzero(mask)
    columns = ds.values[variables][:, indices]
    return JointSample(indices, columns)


def shuffle_columns(js: JointSample, which: int, rng) -> JointSample:
    """Return a copy of ``js`` with column ``which`` randomly permuted."""
    if not 0 <= which < js.columns.shape[0]:
        raise IndexError(f"column {which} out of range")
    rng = np.random.default_rng(rng)
    columns = js.columns.copy()
    columns[which] = rng.permutation(columns[which])
    return JointSample(js.indices.copy(), columns)
