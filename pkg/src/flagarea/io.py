"""Plain-text data files and key=value configuration files."""

from __future__ import annotations

import os

import numpy as np


def emit_plot_data(series, path):
    """Write columns as '#'-headed, space-delimited text at 17 significant digits.

    ``series`` maps column names to equal-length 1-d arrays (insertion order
    is the column order).  An empty mapping, or empty columns, gives a
    header-only file.
    """
    names = list(series)
    cols = [np.asarray(series[k], dtype=float).ravel() for k in names]
    lengths = {c.size for c in cols}
    if len(lengths) > 1:
        raise ValueError("columns differ in length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_plot_data(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '#' header line")
        names = header[1:].split()
        rows = [list(map(float, line.split())) for line in fh if line.strip()]
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}


def histogram_series(samples, bins, range=None):
    counts, edges = np.histogram(samples, bins=bins, range=range)
    return {"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts}


def read_config(path):
    """Flat key=value file; blank lines and '#' comments are ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    return path


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path
