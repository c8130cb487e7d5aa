"""Dataset ingestion: sparse "label idx:val" files, train/test splitting with
optional train-statistics standardization, and a seeded synthetic logistic
generator so the benchmark suite is self-contained.
"""
from __future__ import annotations

import math

import numpy as np

from .validation import as_float_array


class SparseFormatError(ValueError):
    """Malformed sparse dataset line; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_line(line_no, line):
    tokens = line.split()
    try:
        label = float(tokens[0])
    except ValueError:
        raise SparseFormatError(line_no, f"bad label token {tokens[0]!r}") \
            from None
    if label in (-1.0, 0.0):
        label = 0.0
    elif label == 1.0:
        label = 1.0
    else:
        raise SparseFormatError(line_no,
                                f"label must be 0/1 or -1/+1, got {tokens[0]}")
    entries = []
    prev = 0
    for tok in tokens[1:]:
        try:
            idx_str, val_str = tok.split(":", 1)
            idx = int(idx_str)
            val = float(val_str)
        except ValueError:
            raise SparseFormatError(line_no, f"bad token {tok!r}") from None
        if idx < 1:
            raise SparseFormatError(line_no, f"index {idx} is not 1-based")
        if idx <= prev:
            raise SparseFormatError(
                line_no, f"index {idx} not strictly increasing after {prev}")
        prev = idx
        entries.append((idx, val))
    return label, entries


def load_sparse_dataset(path):
    """Load a sparse "label idx:val idx:val ..." file into a dense matrix.

    Indices are 1-based and strictly increasing within a line; labels may be
    {0, 1} or {-1, +1} (mapped to {0, 1}).  The matrix width is the largest
    index seen anywhere; missing entries are zero.
    """
    rows = []
    width = 0
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            label, entries = _parse_line(line_no, line)
            rows.append((label, entries))
            if entries:
                width = max(width, entries[-1][0])
    if not rows:
        raise SparseFormatError(0, "empty dataset")
    X = np.zeros((len(rows), width))
    y = np.zeros(len(rows))
    for i, (label, entries) in enumerate(rows):
        y[i] = label
        for idx, val in entries:
            X[i, idx - 1] = val
    return X, y


def dump_sparse_dataset(path, X, y):
    """Serialize a dense matrix back to the sparse line format (zeros are
    omitted; reloading yields an identical matrix)."""
    X = as_float_array(X, "X", ndim=2)
    y = np.asarray(y).ravel()
    with open(path, "w", encoding="ascii") as fh:
        for row, label in zip(X, y):
            toks = [str(int(label))]
            for j, val in enumerate(row, start=1):
                if val != 0.0:
                    toks.append(f"{j}:{val!r}")
            fh.write(" ".join(toks) + "\n")


def split_standardize(X, y, split, seed, standardize=False):
    """Seeded shuffle, head/tail split, optional train-statistics z-scoring.

    The first ceil(split * D) shuffled rows form the training set.  When
    ``standardize`` is set, per-feature mean and standard deviation computed
    on the training rows only are applied to both splits; zero-variance
    features are left unscaled.
    """
    X = as_float_array(X, "X", ndim=2)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two rows to split")
    if not 0.0 < split < 1.0:
        raise ValueError("split fraction must be in (0, 1)")
    n_train = math.ceil(split * n)
    if n_train == 0 or n_train == n:
        raise ValueError("split yields an empty train or test set")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    X_train, y_train = X[tr].copy(), y[tr].copy()
    X_test, y_test = X[te].copy(), y[te].copy()
    if standardize:
        mean = X_train.mean(axis=0)
        std = X_train.std(axis=0)
        scale = np.where(std > 0.0, std, 1.0)
        X_train = (X_train - mean) / scale
        X_test = (X_test - mean) / scale
    return X_train, y_train, X_test, y_test


def make_synthetic_logistic(n_rows=200, n_features=5, seed=0):
    """Separable logistic data with a known direction: standard normal
    features, labels y = 1[x . w_true >= 0]."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_rows, n_features))
    w_true = rng.standard_normal(n_features)
    w_true /= np.linalg.norm(w_true)
    y = (X @ w_true >= 0.0).astype(np.float64)
    return X, y, w_true
