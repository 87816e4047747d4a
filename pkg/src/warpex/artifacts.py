"""CSV and JSON emission with deterministic formatting."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .warp import WarpedSphereMetric

FLOAT_FORMAT = ".17g"
SCHEMA_VERSION = "1"


class ArtifactExistsError(FileExistsError):
    pass


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format(x, FLOAT_FORMAT))
    return obj


def dumps(obj) -> str:
    """Sorted, indented JSON; floats rounded to 17 significant digits, NaN as null."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _check_target(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ArtifactExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)


def write_json(path, obj, force: bool = False) -> Path:
    path = Path(path)
    _check_target(path, force)
    path.write_text(dumps(obj))
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]], force: bool = False) -> Path:
    path = Path(path)
    _check_target(path, force)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), FLOAT_FORMAT) for v in row])
    return path


def read_csv(path) -> dict:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


PROFILE_COLUMNS = ("r", "a", "a_prime", "a_double_prime", "a_triple_prime")


def profile_samples(metric: WarpedSphereMetric, samples: int = 513) -> np.ndarray:
    """Chebyshev-Lobatto samples of ``a, a', a'', a'''`` with the seams included."""
    prof = metric.profile
    t = np.cos(np.pi * np.arange(samples)[::-1] / (samples - 1))
    r = 0.5 * prof.L * (1.0 + t)
    r[0], r[-1] = 0.0, prof.L
    r = np.unique(np.concatenate([r, prof.breakpoints]))
    cols = [r] + [prof(r, j) for j in range(min(prof.max_order, 3) + 1)]
    return np.column_stack(cols)


def write_profile(path, metric: WarpedSphereMetric, samples: int = 513, force: bool = False) -> Path:
    return write_csv(path, PROFILE_COLUMNS, profile_samples(metric, samples), force)
