"""CSV matrices and JSON certificates."""
from __future__ import annotations

import json
import math

import numpy as np


class InputError(ValueError):
    pass


def parse_matrix(text, source="<string>"):
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        row = []
        for col, tok in enumerate(fields, start=1):
            tok = tok.strip()
            try:
                val = float(tok)
            except ValueError:
                raise InputError(f"{source}: row {lineno}, column {col}: non-numeric token {tok!r}") from None
            if not math.isfinite(val):
                raise InputError(f"{source}: row {lineno}, column {col}: non-finite value {tok!r}")
            row.append(val)
        if width is None:
            width = len(row)
        elif len(row) != width:
            plural = "field" if len(row) == 1 else "fields"
            raise InputError(f"{source}: row {lineno} has {len(row)} {plural}, expected {width}")
        rows.append(row)
    if not rows:
        raise InputError(f"{source}: empty matrix file")
    return np.array(rows, dtype=float)


def load_matrix(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_matrix(text, source=str(path))


def format_matrix(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in M)


def save_matrix(path, M):
    with open(path, "w") as fh:
        fh.write(format_matrix(M))


def load_vector(path):
    """A weight vector stored as a single CSV row or a single column."""
    M = load_matrix(path)
    if M.shape[0] != 1 and M.shape[1] != 1:
        raise InputError(f"{path}: expected a single row or column, got shape {M.shape[0]}x{M.shape[1]}")
    return M.ravel()


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def dump_certificate(path, cert):
    text = json.dumps(jsonable(cert), indent=2) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def load_certificate(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed certificate JSON ({exc.msg})") from None
