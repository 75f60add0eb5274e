"""File formats for histograms, matrices, distributions, and result documents.

All delimited-text files use ``#``-prefixed metadata comment lines followed by
a header row; result documents are JSON.  Floats are serialized with 17
significant digits throughout, so every file round-trips exactly and files
from identical runs are byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .response import DetectorParams, PhotonNumberDistribution, ResponseMatrix
from .simulate import CountHistogram


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _json_encode(obj: Any, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(key))}: {_json_encode(value, indent + 1)}"
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_json_encode(value, indent + 1)}" for value in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json_document(document: dict, path: str | Path) -> None:
    Path(path).write_text(_json_encode(document) + "\n")


def read_json_document(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def _detector_comment_lines(params: DetectorParams) -> list[str]:
    return [
        f"# t_r: {format_float(params.t_r)}",
        f"# t_c: {format_float(params.t_c)}",
        f"# eta: {format_float(params.eta)}",
        f"# p_d: {format_float(params.p_d)}",
        f"# L: {params.L}",
    ]


def _read_delimited(path: str | Path) -> tuple[dict[str, str], list[list[str]]]:
    """Split a delimited file into metadata comments and data rows."""
    metadata: dict[str, str] = {}
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                metadata[key.strip()] = value.strip()
            continue
        rows.append([cell.strip() for cell in line.split(",")])
    return metadata, rows


def _detector_from_metadata(metadata: dict[str, str]) -> DetectorParams | None:
    keys = ("t_r", "t_c", "eta", "p_d", "L")
    if not all(key in metadata for key in keys):
        return None
    return DetectorParams(
        t_r=float(metadata["t_r"]),
        t_c=float(metadata["t_c"]),
        eta=float(metadata["eta"]),
        p_d=float(metadata["p_d"]),
        L=int(metadata["L"]),
    )


def write_histogram(
    hist: CountHistogram,
    path: str | Path,
    params: DetectorParams | None = None,
    input_desc: str | None = None,
) -> None:
    """Write ``k,count`` rows (including zero rows) with run metadata comments."""
    lines = ["# loop detector count histogram"]
    if params is not None:
        lines += _detector_comment_lines(params)
    if input_desc:
        lines.append(f"# input: {input_desc}")
    lines += [
        f"# trials: {hist.trials}",
        f"# seed: {hist.seed}",
        f"# params_digest: {hist.params_digest}",
        "k,count",
    ]
    lines += [f"{k},{int(count)}" for k, count in enumerate(hist.tallies)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram(path: str | Path) -> tuple[CountHistogram, dict[str, str]]:
    metadata, rows = _read_delimited(path)
    if not rows or rows[0] != ["k", "count"]:
        raise ValueError(f"{path}: expected a 'k,count' histogram header")
    body = rows[1:]
    if [int(row[0]) for row in body] != list(range(len(body))):
        raise ValueError(f"{path}: histogram rows must cover k = 0..k_max in order")
    tallies = np.array([int(row[1]) for row in body], dtype=np.int64)
    hist = CountHistogram(
        tallies=tallies,
        trials=int(metadata.get("trials", tallies.sum())),
        seed=int(metadata.get("seed", 0)),
        params_digest=metadata.get("params_digest", ""),
    )
    return hist, metadata


def write_matrix(W: ResponseMatrix, path: str | Path) -> None:
    """Write the response matrix as rows k, columns n, with metadata comments."""
    lines = ["# loop detector response matrix"]
    lines += _detector_comment_lines(W.params)
    lines += [
        f"# n_max: {W.n_max}",
        f"# params_digest: {W.params.digest()}",
        "k," + ",".join(f"n={n}" for n in range(W.n_max + 1)),
    ]
    for k in range(W.k_max + 1):
        lines.append(f"{k}," + ",".join(format_float(x) for x in W.w[k]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: str | Path) -> ResponseMatrix:
    metadata, rows = _read_delimited(path)
    params = _detector_from_metadata(metadata)
    if params is None:
        raise ValueError(f"{path}: matrix file lacks detector metadata")
    if not rows or rows[0][0] != "k":
        raise ValueError(f"{path}: expected a 'k,n=0,...' matrix header")
    body = rows[1:]
    w = np.array([[float(cell) for cell in row[1:]] for row in body])
    return ResponseMatrix(w, params, int(metadata["n_max"]))


def write_probabilities(
    probs: Sequence[float], path: str | Path, comments: Sequence[str] = ()
) -> None:
    """Write exact count probabilities as ``k,probability`` rows."""
    lines = list(comments) + ["k,probability"]
    lines += [f"{k},{format_float(p)}" for k, p in enumerate(probs)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_probabilities(path: str | Path) -> np.ndarray:
    metadata, rows = _read_delimited(path)
    if not rows or rows[0] != ["k", "probability"]:
        raise ValueError(f"{path}: expected a 'k,probability' header")
    body = rows[1:]
    if [int(row[0]) for row in body] != list(range(len(body))):
        raise ValueError(f"{path}: probability rows must cover k = 0..k_max in order")
    return np.array([float(row[1]) for row in body])


def write_distribution(
    rho: PhotonNumberDistribution, path: str | Path, comments: Sequence[str] = ()
) -> None:
    lines = list(comments) + ["n,probability"]
    lines += [f"{n},{format_float(p)}" for n, p in enumerate(rho.rho)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_distribution(path: str | Path) -> PhotonNumberDistribution:
    """Read a photon-number distribution from ``n,probability`` rows."""
    metadata, rows = _read_delimited(path)
    if not rows or rows[0] != ["n", "probability"]:
        raise ValueError(f"{path}: expected an 'n,probability' header")
    body = rows[1:]
    if [int(row[0]) for row in body] != list(range(len(body))):
        raise ValueError(f"{path}: distribution rows must cover n = 0..n_max in order")
    return PhotonNumberDistribution(np.array([float(row[1]) for row in body]))


def read_mixture(path: str | Path) -> list[tuple[float, float]]:
    """Read a classical intensity mixture from ``weight,intensity`` rows."""
    metadata, rows = _read_delimited(path)
    if not rows or rows[0] != ["weight", "intensity"]:
        raise ValueError(f"{path}: expected a 'weight,intensity' header")
    mixture = [(float(row[0]), float(row[1])) for row in rows[1:]]
    if not mixture:
        raise ValueError(f"{path}: mixture file has no components")
    return mixture


def write_table(
    path: str | Path,
    header: str,
    rows: Sequence[Sequence[Any]],
    comments: Sequence[str] = (),
) -> None:
    """Write a generic comma-delimited table with comment lines."""
    lines = list(comments) + [header]
    for row in rows:
        cells = [
            format_float(cell) if isinstance(cell, (float, np.floating)) else str(cell)
            for cell in row
        ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
