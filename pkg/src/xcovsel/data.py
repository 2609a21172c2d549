"""CSV ingestion and the preprocessing transforms used on real data.

Files are comma-separated UTF-8 with a header row of labels and a
numeric body; an optional first column of row labels is detected when
the header starts with an empty cell or when body rows carry one more
field than the header.  Matrices are always returned observations x
features; ``orientation="features-as-rows"`` transposes gene-style
input where each file row is a feature.
"""

from __future__ import annotations

import csv
import warnings

import numpy as np

from .fdr import DataMatrix

ORIENTATIONS = ("observations-as-rows", "features-as-rows")


class DataFormatError(ValueError):
    """Malformed or out-of-domain input data."""


def ingest_csv(path, orientation: str = "observations-as-rows") -> DataMatrix:
    """Parse a CSV file into a DataMatrix.

    Errors name the offending cell; duplicate labels are rejected.
    Missing row labels are filled in as r1, r2, ...
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need a header row and at least one data row")
    header, body = rows[0], rows[1:]

    has_row_labels = header[0] == "" or all(len(r) == len(header) + 1 for r in body)
    col_labels = header[1:] if header[0] == "" else header
    width = len(col_labels) + 1 if has_row_labels else len(col_labels)
    if not col_labels:
        raise DataFormatError(f"{path}: header row has no column labels")

    row_labels: list[str] = []
    values = np.empty((len(body), len(col_labels)))
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: row {i + 2} has {len(row)} fields, expected {width}"
            )
        if has_row_labels:
            row_labels.append(row[0])
        else:
            row_labels.append(f"r{i + 1}")
        for j, cell in enumerate(row[width - len(col_labels):]):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric value {cell!r} at row {row_labels[-1]!r}, "
                    f"column {col_labels[j]!r}"
                ) from None

    for kind, labels in (("column", col_labels), ("row", row_labels)):
        seen = set()
        for label in labels:
            if label in seen:
                raise DataFormatError(f"{path}: duplicate {kind} label {label!r}")
            seen.add(label)

    try:
        if orientation == "features-as-rows":
            return DataMatrix(values.T, tuple(row_labels), tuple(col_labels))
        return DataMatrix(values, tuple(col_labels), tuple(row_labels))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_csv(path, data: DataMatrix) -> None:
    """Write a DataMatrix with a row-label column (empty header corner).

    Floats are written in shortest round-trip form, so read-back via
    ingest_csv reproduces the matrix exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(data.feature_names))
        for obs_id, row in zip(data.observation_ids, data.values):
            writer.writerow([obs_id] + [repr(float(v)) for v in row])


def _first_violation(values: np.ndarray, tol: float) -> bool:
    for axis in (0, 1):
        mean = values.mean(axis=axis)
        var = values.var(axis=axis)
        if np.abs(mean).max() > tol or np.abs(var - 1).max() > tol:
            return True
    return False


def standardize_rows_columns(
    data: DataMatrix, tol: float = 1e-8, max_iter: int = 50
) -> DataMatrix:
    """Alternate column and row standardization until both converge.

    Each pass sets mean 0, variance 1 along the axis; alternation stops
    when every row and column satisfies both within tol, or after
    max_iter alternations with a convergence warning.  Variance here is
    the population variance: on a rectangular matrix the row and column
    constraints pin the same total sum of squares only under that
    convention, so it is the one with a joint fixed point.
    A constant row or column has no scale and is rejected.
    """
    values = data.values.copy()
    n_obs, n_feat = values.shape
    if n_obs < 2 or n_feat < 2:
        raise DataFormatError("standardization needs at least 2 rows and 2 columns")
    for axis, kind, labels in (
        (0, "column", data.feature_names),
        (1, "row", data.observation_ids),
    ):
        spread = values.max(axis=axis) - values.min(axis=axis)
        if np.any(spread == 0):
            which = labels[int(np.argmax(spread == 0))]
            raise DataFormatError(f"constant {kind} {which!r}: standardization undefined")

    def rescale(axis: int) -> None:
        mean = values.mean(axis=axis, keepdims=True)
        sd = values.std(axis=axis, keepdims=True)
        flat_sd = sd.ravel()
        if np.any(flat_sd == 0):
            labels = data.feature_names if axis == 0 else data.observation_ids
            which = labels[int(np.argmax(flat_sd == 0))]
            kind = "column" if axis == 0 else "row"
            raise DataFormatError(f"constant {kind} {which!r}: standardization undefined")
        values[:] = (values - mean) / sd

    converged = False
    for _ in range(max_iter):
        rescale(axis=0)
        rescale(axis=1)
        if not _first_violation(values, tol):
            converged = True
            break
    if not converged:
        warnings.warn(
            f"row/column standardization did not converge to {tol} "
            f"within {max_iter} alternations",
            stacklevel=2,
        )
    return DataMatrix(values, data.feature_names, data.observation_ids)


def counts_to_log_proportions(data: DataMatrix) -> DataMatrix:
    """Row-normalize count data and take natural logs.

    Each observation row is divided by its row sum and logged.  A row
    that contains a zero count first gets 0.5 added to every entry of
    that row (the half-count convention), reported with a warning.
    """
    values = data.values
    if np.any(values < 0):
        i, j = np.argwhere(values < 0)[0]
        raise DataFormatError(
            f"negative count at row {data.observation_ids[i]!r}, "
            f"column {data.feature_names[j]!r}"
        )
    zero_rows = np.where((values == 0).any(axis=1))[0]
    all_zero = np.where(values.sum(axis=1) == 0)[0]
    if all_zero.size:
        raise DataFormatError(
            f"row {data.observation_ids[all_zero[0]]!r} is all zeros; "
            "proportions undefined"
        )
    values = values.copy()
    if zero_rows.size:
        values[zero_rows] += 0.5
        shown = ", ".join(repr(data.observation_ids[i]) for i in zero_rows[:5])
        warnings.warn(
            f"0.5 pseudocount applied to {zero_rows.size} row(s) with zero "
            f"counts ({shown}{', ...' if zero_rows.size > 5 else ''})",
            stacklevel=2,
        )
    values = np.log(values / values.sum(axis=1, keepdims=True))
    return DataMatrix(values, data.feature_names, data.observation_ids)
