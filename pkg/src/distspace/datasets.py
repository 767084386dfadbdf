"""Simulation settings, label contamination and data loaders."""

from __future__ import annotations

import csv
import os
import re
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .functional import FunctionalSample

__all__ = [
    "Split",
    "make_rng",
    "SIGMA1",
    "gen_setting1",
    "gen_setting2",
    "gen_setting3",
    "SETTINGS",
    "mislabel",
    "standardize_median_mad",
    "load_csv",
    "load_ucr",
    "BANKNOTE_URL",
    "fetch_uci_banknote",
    "split_banknote",
    "split_functional",
]

SIGMA1 = np.array([[5.0, 3.0, 1.0],
                   [3.0, 2.0, 1.0],
                   [1.0, 1.0, 3.0]])
SHIFT3 = np.array([1.0, -2.0, -4.0])

BANKNOTE_URL = ("https://archive.ics.uci.edu/ml/machine-learning-databases/00267/"
                "data_banknote_authentication.txt")
CACHE_ENV = "DISTSPACE_CACHE"


@dataclass
class Split:
    """Training and test data with labels."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def make_rng(seed, *stream) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` keys give independent substreams."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def _stack(parts, n_per_group):
    X = np.vstack(parts)
    y = np.repeat(np.arange(len(parts)), n_per_group)
    return X, y


def _gaussian(rng, n, mean, cov):
    L = np.linalg.cholesky(cov)
    return mean + rng.standard_normal((n, len(mean))) @ L.T


def _setting1_group(rng, g, n):
    Z = _gaussian(rng, n, np.zeros(3), SIGMA1)
    if g == 1:
        Z[:, 1] = -Z[:, 1]
    elif g == 2:
        Z = Z + SHIFT3
    return Z


def gen_setting1(seed, n_train=(50, 50, 50), n_test=500) -> Split:
    """Three trivariate normals: C1, C1 with second coordinate negated, C1 shifted."""
    rng = make_rng(seed)
    train = [_setting1_group(rng, g, n) for g, n in enumerate(n_train)]
    test = [_setting1_group(rng, g, n_test) for g in range(3)]
    X_train, y_train = _stack(train, n_train)
    X_test, y_test = _stack(test, [n_test] * 3)
    return Split(X_train, y_train, X_test, y_test)


def _setting2_group(rng, g, n):
    return rng.standard_normal((n, 6)) if g == 0 else rng.exponential(1.0, (n, 6))


def gen_setting2(seed, n_train=(150, 100), n_test=500) -> Split:
    """N(0, I_6) against independent Exp(1) coordinates."""
    rng = make_rng(seed)
    train = [_setting2_group(rng, g, n) for g, n in enumerate(n_train)]
    test = [_setting2_group(rng, g, n_test) for g in range(2)]
    X_train, y_train = _stack(train, n_train)
    X_test, y_test = _stack(test, [n_test] * 2)
    return Split(X_train, y_train, X_test, y_test)


def _setting3_group(rng, g, n):
    if g == 0:
        return rng.standard_normal((n, 7))
    U = rng.standard_normal((n, 7))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return U * rng.uniform(12.0, 13.0, size=(n, 1))


def gen_setting3(seed, n_train=(150, 250), n_test=500) -> Split:
    """N(0, I_7) inside a spherical shell with radii uniform on [12, 13]."""
    rng = make_rng(seed)
    train = [_setting3_group(rng, g, n) for g, n in enumerate(n_train)]
    test = [_setting3_group(rng, g, n_test) for g in range(2)]
    X_train, y_train = _stack(train, n_train)
    X_test, y_test = _stack(test, [n_test] * 2)
    return Split(X_train, y_train, X_test, y_test)


SETTINGS = {1: gen_setting1, 2: gen_setting2, 3: gen_setting3}


def mislabel(y, fraction: float, seed) -> np.ndarray:
    """Relabel ``round(fraction * n_g)`` random points of every group.

    Each chosen point gets a label drawn uniformly from the other groups.
    Rounding is half-to-even. Returns a new label array.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"mislabel fraction must be in [0, 1), got {fraction}")
    y = np.asarray(y)
    out = y.copy()
    if fraction == 0:
        return out
    rng = make_rng(seed)
    labels = np.unique(y)
    if labels.size < 2:
        raise ValueError("mislabeling needs at least two groups")
    for lab in labels:
        members = np.flatnonzero(y == lab)
        count = int(np.round(fraction * members.size))
        if count == 0:
            continue
        chosen = rng.choice(members, size=count, replace=False)
        others = labels[labels != lab]
        out[chosen] = others[rng.integers(0, others.size, size=count)]
    return out


def standardize_median_mad(X, reference=None, columns=None):
    """``(X - med) / MAD`` per column, with med and MAD from ``reference`` (default X)."""
    X = np.asarray(X, dtype=float)
    ref = X if reference is None else np.asarray(reference, dtype=float)
    med = np.median(ref, axis=0)
    mad = np.median(np.abs(ref - med), axis=0)
    bad = np.flatnonzero(mad == 0)
    if bad.size:
        names = [columns[i] if columns is not None else str(i) for i in bad]
        raise ValueError(f"column {names[0]} has zero MAD")
    return (X - med) / mad


def load_csv(path, label_col=-1, standardize: bool = False, train_rows=None):
    """Read a CSV file with a header row into ``(X, y, feature_names)``.

    ``label_col`` is a column name or index, or None for unlabeled data
    (``y`` is then None). With ``standardize`` every
    feature is centered by its median and scaled by its MAD, both taken over
    ``train_rows`` (a boolean mask or index array; default all rows).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_col is None:
        li = None
    elif isinstance(label_col, str) and not re.fullmatch(r"-?\d+", label_col):
        if label_col not in header:
            raise ValueError(f"{path}: no column named {label_col!r}")
        li = header.index(label_col)
    else:
        li = int(label_col)
        if not -len(header) <= li < len(header):
            raise ValueError(f"{path}: label column {li} out of range")
        li %= len(header)
    feats = [i for i in range(len(header)) if i != li]
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        lab = None if li is None else row[li].strip()
        if lab == "":
            raise ValueError(f"{path}:{lineno}: missing label")
        vals = []
        for i in feats:
            try:
                vals.append(float(row[i]))
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: column {header[i]!r}: non-numeric value {row[i]!r}"
                ) from None
        X.append(vals)
        y.append(lab)
    if not X:
        raise ValueError(f"{path}: no data rows")
    X = np.array(X)
    names = [header[i] for i in feats]
    if standardize:
        ref = X if train_rows is None else X[train_rows]
        X = standardize_median_mad(X, ref, names)
    if li is None:
        return X, None, names
    y = np.array([int(v) if re.fullmatch(r"-?\d+", v) else v for v in y], dtype=object)
    if all(isinstance(v, int) for v in y):
        y = y.astype(np.int64)
    return X, y, names


def load_ucr(path):
    """Read a UCR archive text file: label then T values per line.

    Commas, tabs and spaces are all accepted as delimiters. Returns a
    :class:`FunctionalSample` on the grid ``1..T`` and the labels.
    """
    path = Path(path)
    labels, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = [f for f in re.split(r"[,\s]+", line.strip()) if f]
            if not fields:
                continue
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
            lab = vals[0]
            labels.append(int(lab) if lab == int(lab) else lab)
            rows.append(vals[1:])
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(
                    f"{path}:{lineno}: ragged row ({len(rows[-1])} values, expected {len(rows[0])})")
    if not rows:
        raise ValueError(f"{path}: empty file")
    if len(rows[0]) == 0:
        raise ValueError(f"{path}: rows have no values")
    return FunctionalSample.from_array(np.array(rows)), np.array(labels)


def _cache_dir(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "distspace"


def fetch_uci_banknote(url: str | None = None, cache_dir=None, timeout: float = 30.0):
    """Banknote authentication data ``(X, y)``: 1372 x 4, labels 0 (762) / 1 (610).

    A cached copy is used when present; otherwise the file is downloaded and
    cached. Raises ``ValueError("unexpected dataset shape")`` if the content
    does not match.
    """
    cache = _cache_dir(cache_dir) / "data_banknote_authentication.txt"
    if cache.exists():
        text = cache.read_text(encoding="utf-8")
    else:
        with urllib.request.urlopen(url or BANKNOTE_URL, timeout=timeout) as resp:
            text = resp.read().decode("utf-8")
        cache.parent.mkdir(parents=True, exist_ok=True)
        cache.write_text(text, encoding="utf-8")
    rows = [r for r in csv.reader(text.splitlines()) if r]
    try:
        data = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ValueError("unexpected dataset shape") from exc
    if data.ndim != 2 or data.shape != (1372, 5):
        raise ValueError("unexpected dataset shape")
    X, y = data[:, :4], data[:, 4].astype(np.int64)
    if sorted(np.bincount(y).tolist()) != [610, 762] or np.count_nonzero(y == 0) != 762:
        raise ValueError("unexpected dataset shape")
    return X, y


def split_banknote(X, y, seed, n_train: int = 500, stratify: bool = True) -> Split:
    """Random train/test split; features standardized by training median and MAD."""
    rng = make_rng(seed)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = X.shape[0]
    if stratify:
        labels, counts = np.unique(y, return_counts=True)
        take = np.floor(n_train * counts / n).astype(int)
        # hand out the remainder by largest fractional part
        frac = n_train * counts / n - take
        for i in np.argsort(-frac, kind="stable")[: n_train - take.sum()]:
            take[i] += 1
        train = np.concatenate([rng.choice(np.flatnonzero(y == lab), size=t, replace=False)
                                for lab, t in zip(labels, take)])
    else:
        train = rng.choice(n, size=n_train, replace=False)
    train = np.sort(train)
    mask = np.zeros(n, bool)
    mask[train] = True
    Xs = standardize_median_mad(X, X[mask])
    return Split(Xs[mask], y[mask], Xs[~mask], y[~mask])


def split_functional(sample: FunctionalSample, y, seed, n_train_per_group):
    """Draw ``n_train_per_group`` curves of every label for training, rest for testing.

    ``n_train_per_group`` is an int or a mapping label -> size.
    """
    rng = make_rng(seed)
    y = np.asarray(y)
    train = []
    for lab in np.unique(y):
        members = np.flatnonzero(y == lab)
        size = n_train_per_group[lab] if isinstance(n_train_per_group, dict) else n_train_per_group
        if size >= members.size:
            raise ValueError(f"group {lab} has only {members.size} curves")
        train.append(rng.choice(members, size=size, replace=False))
    train = np.sort(np.concatenate(train))
    mask = np.zeros(y.size, bool)
    mask[train] = True
    return sample[mask], y[mask], sample[~mask], y[~mask]
