"""Curves on a shared time grid: integrated depths and distances, fkNN.

A curve is a ``(T, p)`` array; a batch of curves is ``(n, T, p)``. All
integrals are weighted sums with trapezoid weights normalized to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .classifiers import DepthDistanceClassifier, group_seed
from .distances import GroupModel, ao, bagdistance, fit_group, halfspace_depth, pd, sdo, spd

__all__ = [
    "trapezoid_weights",
    "FunctionalSample",
    "augment_curves",
    "PointwiseGroupModels",
    "fit_pointwise",
    "mfd",
    "fbd",
    "fsdo",
    "fao",
    "l2_curve_distance",
    "FunctionalTrainingSet",
    "fit_functional_training_set",
    "FunctionalClassifier",
    "functional_classify",
]


def trapezoid_weights(grid) -> np.ndarray:
    """Trapezoid quadrature weights on ``grid``, normalized to sum to 1."""
    t = np.asarray(grid, dtype=float)
    if t.size == 1:
        return np.ones(1)
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w / w.sum()


@dataclass(frozen=True)
class FunctionalSample:
    """``n`` curves of dimension ``p`` observed on a common grid of ``T`` points."""

    grid: np.ndarray
    curves: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_array(cls, curves, grid=None, weights=None) -> "FunctionalSample":
        arr = np.asarray(curves, dtype=float)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"curves must have shape (n, T) or (n, T, p), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("curves contain NaN or infinite values")
        T = arr.shape[1]
        t = np.arange(1.0, T + 1) if grid is None else np.asarray(grid, dtype=float)
        if t.shape != (T,):
            raise ValueError(f"grid has {t.size} points, curves have {T}")
        w = trapezoid_weights(t) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (T,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be T nonnegative numbers summing to 1")
        return cls(grid=t, curves=arr, weights=w)

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    @property
    def T(self) -> int:
        return self.curves.shape[1]

    @property
    def p(self) -> int:
        return self.curves.shape[2]

    @property
    def domain_length(self) -> float:
        return float(self.grid[-1] - self.grid[0]) if self.T > 1 else 1.0

    def __getitem__(self, rows) -> "FunctionalSample":
        return FunctionalSample(self.grid, self.curves[rows], self.weights)

    def resample(self, grid) -> "FunctionalSample":
        """Linear interpolation of every curve onto ``grid``."""
        t = np.asarray(grid, dtype=float)
        out = np.empty((self.n, t.size, self.p))
        for i in range(self.n):
            for j in range(self.p):
                out[i, :, j] = np.interp(t, self.grid, self.curves[i, :, j])
        return FunctionalSample.from_array(out, t)


def augment_curves(sample: FunctionalSample, ops) -> FunctionalSample:
    """Append derivative or cumulative-integral coordinates.

    ``ops`` is a list of ``(coordinate, "derivative" | "integral")`` pairs.
    Derivatives are central differences (one-sided at the ends); integrals
    are cumulative trapezoid sums starting at 0.
    """
    if sample.T < 2:
        raise ValueError("augmentation needs at least 2 time points")
    extra = []
    for coord, kind in ops:
        y = sample.curves[:, :, coord]
        if kind == "derivative":
            extra.append(np.gradient(y, sample.grid, axis=1, edge_order=1))
        elif kind in ("integral", "cumulativeIntegral"):
            extra.append(cumulative_trapezoid(y, sample.grid, axis=1, initial=0.0))
        else:
            raise ValueError(f"unknown augmentation {kind!r}")
    curves = np.concatenate([sample.curves] + [e[:, :, None] for e in extra], axis=2)
    return FunctionalSample(sample.grid, curves, sample.weights)


@dataclass
class PointwiseGroupModels:
    """One :class:`GroupModel` per time point, fitted on the cross-sections."""

    models: list[GroupModel]
    weights: np.ndarray

    @property
    def T(self) -> int:
        return len(self.models)


def fit_pointwise(sample: FunctionalSample, seed: int = 0,
                  n_dirs: int | None = None) -> PointwiseGroupModels:
    """Fit a group model at every time point.

    All time points share ``seed``, so with T=1 the model equals the
    multivariate one.
    """
    models = []
    for t in range(sample.T):
        try:
            models.append(fit_group(sample.curves[:, t, :], seed=seed, n_dirs=n_dirs))
        except ValueError as exc:
            raise ValueError(f"time point {t}: {exc}") from exc
    return PointwiseGroupModels(models, sample.weights)


def _curves(X, group: PointwiseGroupModels) -> tuple[np.ndarray, bool]:
    arr = np.asarray(X.curves if isinstance(X, FunctionalSample) else X, dtype=float)
    single = arr.ndim == 2 or (arr.ndim == 1)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape[1] != group.T:
        raise ValueError(f"curves have {arr.shape[1]} time points, model has {group.T}")
    return arr, single


def _integrate(X, group: PointwiseGroupModels, func):
    arr, single = _curves(X, group)
    total = np.zeros(arr.shape[0])
    for t, (model, w) in enumerate(zip(group.models, group.weights)):
        if w == 0:
            continue
        try:
            total += w * np.atleast_1d(func(arr[:, t, :], model))
        except ValueError as exc:
            raise ValueError(f"time point {t}: {exc}") from exc
    return float(total[0]) if single else total


def mfd(X, group: PointwiseGroupModels, depth: str = "hd"):
    """Integrated depth of a curve: weighted sum of the pointwise depths."""
    funcs = {"hd": halfspace_depth, "pd": pd, "spd": spd}
    if depth not in funcs:
        raise ValueError(f"unknown depth {depth!r}")
    return _integrate(X, group, funcs[depth])


def fbd(X, group: PointwiseGroupModels):
    """Integrated bagdistance."""
    return _integrate(X, group, bagdistance)


def fsdo(X, group: PointwiseGroupModels):
    """Integrated Stahel-Donoho outlyingness."""
    return _integrate(X, group, sdo)


def fao(X, group: PointwiseGroupModels):
    """Integrated adjusted outlyingness."""
    return _integrate(X, group, ao)


_FUNCTIONAL_MEASURES = {
    "hd": lambda X, g: mfd(X, g, "hd"),
    "pd": lambda X, g: mfd(X, g, "pd"),
    "spd": lambda X, g: mfd(X, g, "spd"),
    "bd": fbd,
    "sdo": fsdo,
    "ao": fao,
}


def l2_curve_distance(X1, X2, grid=None, weights=None) -> float:
    """L2 distance between two curves on the same grid.

    Computed as ``sqrt(|U| * sum_t w_t ||X1(t) - X2(t)||^2)`` with normalized
    trapezoid weights ``w`` on the domain ``U``.
    """
    a = np.asarray(X1, dtype=float)
    b = np.asarray(X2, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ValueError(f"curve shapes differ: {a.shape} vs {b.shape}")
    T = a.shape[0]
    t = np.arange(1.0, T + 1) if grid is None else np.asarray(grid, dtype=float)
    if t.shape != (T,):
        raise ValueError("grid does not match the curves")
    w = trapezoid_weights(t) if weights is None else np.asarray(weights, dtype=float)
    length = float(t[-1] - t[0]) if T > 1 else 1.0
    return float(np.sqrt(length * np.sum(w * np.sum((a - b) ** 2, axis=1))))


@dataclass
class FunctionalTrainingSet:
    """Pointwise group models for every label; same interface as :class:`TrainingSet`."""

    labels: list
    groups: list[PointwiseGroupModels]
    counts: np.ndarray
    grid: np.ndarray
    seed: int = 0

    @property
    def priors(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    def transform(self, X, measure: str) -> np.ndarray:
        if measure not in _FUNCTIONAL_MEASURES:
            raise ValueError(f"unknown measure {measure!r}")
        arr = np.asarray(X.curves if isinstance(X, FunctionalSample) else X, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        func = _FUNCTIONAL_MEASURES[measure]
        return np.column_stack([np.atleast_1d(func(arr, g)) for g in self.groups])


def fit_functional_training_set(sample: FunctionalSample, y, seed: int = 0,
                                n_dirs: int | None = None) -> FunctionalTrainingSet:
    y = np.asarray(y)
    if y.shape[0] != sample.n:
        raise ValueError(f"{sample.n} curves but {y.shape[0]} labels")
    labels = sorted(np.unique(y).tolist())
    if len(labels) < 2:
        raise ValueError("need at least two groups")
    groups, counts = [], []
    for g, lab in enumerate(labels):
        sub = sample[y == lab]
        groups.append(fit_pointwise(sub, seed=group_seed(seed, g), n_dirs=n_dirs))
        counts.append(sub.n)
    return FunctionalTrainingSet(labels, groups, np.array(counts), sample.grid, seed)


class FunctionalClassifier(DepthDistanceClassifier):
    """The five rules on curves. Plain ``knn`` here is fkNN with the L2 distance."""

    def _check(self, X) -> FunctionalSample:
        if not isinstance(X, FunctionalSample):
            raise TypeError("FunctionalClassifier expects a FunctionalSample")
        return X

    def _fit_training(self, X, y):
        return fit_functional_training_set(self._check(X), y, seed=self.seed, n_dirs=self.n_dirs)

    def _raw(self, X):
        # Euclidean distance of these vectors equals the L2 curve distance
        X = self._check(X)
        scale = np.sqrt(X.weights * X.domain_length)
        return (X.curves * scale[None, :, None]).reshape(X.n, -1)

    def to_dict(self, config=None):
        raise NotImplementedError("functional models are not serialized")


def functional_classify(X, training_curves: FunctionalSample, y, method: str = "distspace",
                        measure: str | None = "bd", seed: int = 0, k_grid=None):
    """Fit a :class:`FunctionalClassifier` on the training curves and label ``X``."""
    clf = FunctionalClassifier(method, measure, k_grid=k_grid, seed=seed)
    clf.fit(training_curves, y)
    return clf.predict(X)
