"""File formats: contingency CSV, raw-sample CSV, scheme sidecar JSON.

Contingency CSV has header ``x1,...,xd,count`` and one row per nonzero
cell; sample CSV has header ``x1,...,xd`` and one row per observation.
States are 1-based integers. When no scheme is supplied, cardinalities
are inferred as the maximum observed state per variable (floored at 2,
since one-state variables are not representable).
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from pathlib import Path

from .distribution import DEFAULT_CELL_CAP, JointTable, VariableSpec, from_counts, make_scheme
from .errors import DataFormatError


def _parse_header(fields, path):
    if not fields:
        raise DataFormatError(f"{path}:1: empty header row")
    fields = [f.strip() for f in fields]
    has_count = fields[-1].lower() == "count"
    xs = fields[:-1] if has_count else fields
    if not xs:
        raise DataFormatError(f"{path}:1: no variable columns in header")
    for i, name in enumerate(xs):
        if name.lower() != f"x{i + 1}":
            raise DataFormatError(
                f"{path}:1: column {i + 1} is {name!r}, expected 'x{i + 1}'"
            )
    return len(xs), has_count


def _parse_state(field, path, line, col):
    try:
        value = int(field)
    except ValueError:
        raise DataFormatError(
            f"{path}:{line}: column {col}: {field!r} is not an integer state"
        ) from None
    if value < 1:
        raise DataFormatError(
            f"{path}:{line}: column {col}: state {value} is not >= 1 (states are 1-based)"
        )
    return value


def _read_rows(path):
    try:
        with open(path, newline="") as f:
            return list(csv.reader(f))
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror or exc}") from None


def sniff_kind(path) -> str:
    """Peek at the header: 'counts' when it ends in a count column, else 'samples'."""
    rows = _read_rows(path)
    if not rows:
        raise DataFormatError(f"{path}:1: file is empty")
    _, has_count = _parse_header(rows[0], path)
    return "counts" if has_count else "samples"


def read_counts_csv(path, scheme=None, cap: int = DEFAULT_CELL_CAP) -> JointTable:
    """Load a contingency CSV into a joint table."""
    rows = _read_rows(path)
    if not rows:
        raise DataFormatError(f"{path}:1: file is empty")
    d, has_count = _parse_header(rows[0], path)
    if not has_count:
        raise DataFormatError(f"{path}:1: header has no trailing 'count' column")
    cells = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise DataFormatError(
                f"{path}:{line}: expected {d + 1} fields, got {len(row)}"
            )
        state = tuple(_parse_state(row[i], path, line, i + 1) for i in range(d))
        raw = row[d].strip()
        try:
            count = float(raw)
        except ValueError:
            raise DataFormatError(
                f"{path}:{line}: column {d + 1}: {raw!r} is not a number"
            ) from None
        if not math.isfinite(count) or count < 0:
            raise DataFormatError(
                f"{path}:{line}: column {d + 1}: count must be a non-negative real"
            )
        cells.append((state, count))
    if not cells:
        raise DataFormatError(f"{path}: no data rows")
    return _build(cells, d, scheme, cap, path)


def read_samples_csv(path, scheme=None, cap: int = DEFAULT_CELL_CAP) -> JointTable:
    """Load a raw-sample CSV (one observation per row) into a joint table."""
    rows = _read_rows(path)
    if not rows:
        raise DataFormatError(f"{path}:1: file is empty")
    d, has_count = _parse_header(rows[0], path)
    if has_count:
        raise DataFormatError(
            f"{path}:1: header ends in 'count'; this is a contingency table, not samples"
        )
    tally: Counter = Counter()
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d:
            raise DataFormatError(f"{path}:{line}: expected {d} fields, got {len(row)}")
        tally[tuple(_parse_state(row[i], path, line, i + 1) for i in range(d))] += 1
    if not tally:
        raise DataFormatError(f"{path}: no data rows")
    return _build(sorted(tally.items()), d, scheme, cap, path)


def _build(cells, d, scheme, cap, path):
    if scheme is None:
        maxima = [2] * d
        for state, _ in cells:
            for i, s in enumerate(state):
                if s > maxima[i]:
                    maxima[i] = s
        scheme = make_scheme(maxima)
    elif len(scheme) != d:
        raise DataFormatError(
            f"{path}: scheme describes {len(scheme)} variables, data has {d}"
        )
    return from_counts(cells, scheme, cap=cap)


def read_scheme_json(path):
    """Load a scheme sidecar: {"variables": [{"name", "cardinality"}, ...]}."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("variables"), list):
        raise DataFormatError(f"{path}: expected an object with a 'variables' list")
    specs = []
    for i, entry in enumerate(doc["variables"]):
        if not isinstance(entry, dict) or "cardinality" not in entry:
            raise DataFormatError(f"{path}: variables[{i}] needs a 'cardinality'")
        declared = entry.get("index", i + 1)
        if declared != i + 1:
            raise DataFormatError(
                f"{path}: variables[{i}] declares index {declared}, expected {i + 1}"
            )
        try:
            specs.append(VariableSpec(i + 1, int(entry["cardinality"]), entry.get("name")))
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}: variables[{i}]: {exc}") from None
    if not specs:
        raise DataFormatError(f"{path}: 'variables' is empty")
    return tuple(specs)


def find_scheme_sidecar(data_path) -> Path | None:
    """Sidecar convention: <input stem>.scheme.json next to the data file."""
    p = Path(data_path)
    sidecar = p.with_name(p.stem + ".scheme.json")
    return sidecar if sidecar.is_file() else None


def load_table(path, scheme_path=None, cap: int = DEFAULT_CELL_CAP,
               kind: str = "auto") -> JointTable:
    """Load counts or samples CSV, resolving the scheme sidecar if present."""
    scheme = None
    if scheme_path is not None:
        scheme = read_scheme_json(scheme_path)
    else:
        sidecar = find_scheme_sidecar(path)
        if sidecar is not None:
            scheme = read_scheme_json(sidecar)
    if kind == "auto":
        kind = sniff_kind(path)
    if kind == "counts":
        return read_counts_csv(path, scheme=scheme, cap=cap)
    if kind == "samples":
        return read_samples_csv(path, scheme=scheme, cap=cap)
    raise DataFormatError(f"unknown input kind {kind!r}")


def write_counts_csv(path, table: JointTable):
    """Write nonzero cells in ascending row-major order.

    Counts that are integral within 1e-9 are written as integers, so
    integer contingency data round-trips readably; exact-probability
    tables keep full float precision (repr round-trips the double).
    """
    n = table.total_count if table.total_count is not None else 1.0
    d = table.d
    with open(path, "w", newline="") as f:
        f.write(",".join(f"x{i + 1}" for i in range(d)) + ",count\n")
        flat = table.probs.reshape(-1)
        for pos in range(flat.shape[0]):
            value = float(flat[pos])
            if value == 0.0:
                continue
            state = []
            rem = pos
            for c in reversed(table.cardinalities):
                state.append(rem % c + 1)
                rem //= c
            state.reverse()
            count = value * n
            text = str(int(round(count))) if abs(count - round(count)) < 1e-9 else repr(count)
            f.write(",".join(str(s) for s in state) + f",{text}\n")
