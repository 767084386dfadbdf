"""Depth and distance transforms, and the classifiers built on them.

Every rule works on the G-vector of a point's depths or distances to the
training groups:

* ``maxdepth``  -- largest depth coordinate (hd, pd, spd)
* ``mindist``   -- smallest distance coordinate (bd, sdo, ao)
* ``ddknn``     -- kNN on the depth transform (DepthDepth + kNN)
* ``distspace`` -- kNN on the distance transform
* ``knn``       -- plain kNN in the original coordinates
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .depth import as_data_matrix
from .distances import GroupModel, ao, bagdistance, fit_group, halfspace_depth, pd, sdo, spd

__all__ = [
    "DEPTH_MEASURES",
    "DISTANCE_MEASURES",
    "METHODS",
    "TrainingSet",
    "fit_training_set",
    "depth_transform",
    "distance_transform",
    "maxdepth_classify",
    "mindist_classify",
    "KNNModel",
    "knn_fit",
    "knn_predict",
    "distspace_classify",
    "DepthDistanceClassifier",
    "check_method_measure",
    "MODEL_VERSION",
]

DEPTH_MEASURES = ("hd", "pd", "spd")
DISTANCE_MEASURES = ("bd", "sdo", "ao")
METHODS = ("maxdepth", "mindist", "ddknn", "distspace", "knn")
MODEL_VERSION = "1"

_MEASURE_FUNCS = {
    "hd": halfspace_depth,
    "pd": pd,
    "spd": spd,
    "bd": bagdistance,
    "sdo": sdo,
    "ao": ao,
}


def check_method_measure(method: str, measure: str | None) -> None:
    """Raise ``ValueError`` for a method/measure pair that makes no sense."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "knn":
        if measure not in (None, "", "none"):
            raise ValueError("plain knn takes no measure")
        return
    allowed = DEPTH_MEASURES if method in ("maxdepth", "ddknn") else DISTANCE_MEASURES
    if measure not in allowed:
        kind = "depth" if method in ("maxdepth", "ddknn") else "distance"
        raise ValueError(
            f"method {method!r} needs a {kind} measure ({', '.join(allowed)}), got {measure!r}")


@dataclass
class TrainingSet:
    """Fitted group models of a labeled training sample."""

    labels: list
    groups: list[GroupModel]
    counts: np.ndarray
    seed: int = 0

    @property
    def priors(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.groups[0].p

    def transform(self, X, measure: str) -> np.ndarray:
        """``(k, G)`` matrix of depths or distances of the rows of ``X`` to each group."""
        if measure not in _MEASURE_FUNCS:
            raise ValueError(f"unknown measure {measure!r}")
        pts = np.atleast_2d(np.asarray(X, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, training data has {self.dim}")
        func = _MEASURE_FUNCS[measure]
        return np.column_stack([np.atleast_1d(func(pts, g)) for g in self.groups])


def group_seed(seed: int, index: int) -> int:
    """Seed for the direction set of group ``index``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def fit_training_set(X, y, seed: int = 0, n_dirs: int | None = None,
                     threads: int = 1) -> TrainingSet:
    """Fit one :class:`GroupModel` per label (labels sorted, G >= 2).

    With ``threads > 1`` the groups are fitted concurrently; the result does
    not depend on the thread count.
    """
    X = as_data_matrix(X, "training data")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    labels = sorted(np.unique(y).tolist())
    if len(labels) < 2:
        raise ValueError("need at least two groups")
    parts = [X[y == lab] for lab in labels]

    def fit(g):
        return fit_group(parts[g], seed=group_seed(seed, g), n_dirs=n_dirs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            groups = list(pool.map(fit, range(len(labels))))
    else:
        groups = [fit(g) for g in range(len(labels))]
    counts = [rows.shape[0] for rows in parts]
    return TrainingSet(labels=labels, groups=groups, counts=np.array(counts), seed=seed)


def depth_transform(x, training: TrainingSet, measure: str = "spd") -> np.ndarray:
    """Depth of ``x`` in every group: a G-vector, or ``(k, G)`` for k points."""
    if measure not in DEPTH_MEASURES:
        raise ValueError(f"{measure!r} is not a depth")
    out = training.transform(x, measure)
    return out[0] if np.ndim(x) == 1 else out


def distance_transform(x, training: TrainingSet, measure: str = "bd") -> np.ndarray:
    """Distance of ``x`` to every group: a G-vector, or ``(k, G)`` for k points."""
    if measure not in DISTANCE_MEASURES:
        raise ValueError(f"{measure!r} is not a distance")
    out = training.transform(x, measure)
    return out[0] if np.ndim(x) == 1 else out


def _pick(scores: np.ndarray, priors: np.ndarray, largest: bool) -> np.ndarray:
    """Index of the best column per row; ties go to larger prior, then lower index."""
    order = np.lexsort((np.arange(priors.size), -priors))
    ranked = scores[:, order]
    best = ranked.argmax(axis=1) if largest else ranked.argmin(axis=1)
    return order[best]


def maxdepth_classify(x, training: TrainingSet, measure: str = "spd"):
    """Assign points to the group in which they are deepest."""
    coords = np.atleast_2d(depth_transform(x, training, measure))
    idx = _pick(coords, training.priors, largest=True)
    labels = np.asarray(training.labels, dtype=object)[idx]
    return labels[0] if np.ndim(x) == 1 else labels


def mindist_classify(x, training: TrainingSet, measure: str = "bd"):
    """Assign points to the group they are closest to."""
    coords = np.atleast_2d(distance_transform(x, training, measure))
    idx = _pick(coords, training.priors, largest=False)
    labels = np.asarray(training.labels, dtype=object)[idx]
    return labels[0] if np.ndim(x) == 1 else labels


# ---------------------------------------------------------------------------
# k nearest neighbors


@dataclass
class KNNModel:
    """kNN reference points with integer-coded labels and the chosen ``k``."""

    points: np.ndarray
    codes: np.ndarray
    labels: list
    k: int
    loo_errors: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.labels)


def _neighbors(ref: np.ndarray, queries: np.ndarray, kmax: int, exclude_self: bool = False):
    """Indices and distances of the ``kmax`` nearest reference points.

    Equal distances keep reference order (stable sort). With
    ``exclude_self`` the queries are the reference points and each point's
    own row is skipped.
    """
    idx = np.empty((queries.shape[0], kmax), dtype=np.int64)
    dist = np.empty((queries.shape[0], kmax))
    step = max(1, 2_000_000 // max(ref.shape[0], 1))
    for s in range(0, queries.shape[0], step):
        D = cdist(queries[s:s + step], ref)
        if exclude_self:
            rows = np.arange(D.shape[0])
            D[rows, s + rows] = np.inf
        order = np.argsort(D, axis=1, kind="stable")[:, :kmax]
        idx[s:s + step] = order
        dist[s:s + step] = np.take_along_axis(D, order, axis=1)
    return idx, dist


def _vote(codes: np.ndarray, dist: np.ndarray, n_classes: int) -> np.ndarray:
    """Majority vote per row; ties by smaller summed distance, then lower code."""
    onehot = codes[:, :, None] == np.arange(n_classes)[None, None, :]
    votes = onehot.sum(axis=1)
    summed = (onehot * dist[:, :, None]).sum(axis=1)
    top = votes == votes.max(axis=1, keepdims=True)
    summed = np.where(top, summed, np.inf)
    return (summed == summed.min(axis=1, keepdims=True)).argmax(axis=1)


def knn_fit(points, labels, k_grid=None) -> KNNModel:
    """Choose ``k`` by leave-one-out misclassification count.

    ``k_grid`` defaults to ``1..min(30, N-1)``; ties go to the smallest k.
    """
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(labels)
    N = Z.shape[0]
    if N < 2:
        raise ValueError("kNN needs at least two training points")
    if k_grid is None:
        k_grid = range(1, min(30, N - 1) + 1)
    grid = sorted({int(k) for k in k_grid})
    if not grid:
        raise ValueError("empty k grid")
    if grid[0] < 1 or grid[-1] > N - 1:
        raise ValueError(f"k must lie in 1..{N - 1}")
    uniq = sorted(np.unique(y).tolist())
    codes = np.searchsorted(np.asarray(uniq), y)
    idx, dist = _neighbors(Z, Z, grid[-1], exclude_self=True)
    ncodes = codes[idx]
    errors = {}
    for k in grid:
        pred = _vote(ncodes[:, :k], dist[:, :k], len(uniq))
        errors[k] = int(np.count_nonzero(pred != codes))
    best = min(grid, key=lambda k: (errors[k], k))
    return KNNModel(points=Z, codes=codes, labels=uniq, k=best, loo_errors=errors)


def knn_predict(x, model: KNNModel):
    """Labels of the query points by majority vote among the k nearest."""
    Q = np.atleast_2d(np.asarray(x, dtype=float))
    idx, dist = _neighbors(model.points, Q, model.k)
    pred = _vote(model.codes[idx], dist, model.n_classes)
    labels = np.asarray(model.labels, dtype=object)[pred]
    return labels[0] if np.ndim(x) == 1 else labels


def distspace_classify(x, training: TrainingSet, measure: str, model: KNNModel):
    """kNN on the transform of ``x`` (distance measures: DistSpace, depths: DepthDepth)."""
    coords = training.transform(np.atleast_2d(np.asarray(x, dtype=float)), measure)
    labels = knn_predict(coords, model)
    return labels[0] if np.ndim(x) == 1 else labels


# ---------------------------------------------------------------------------
# estimator


def _to_builtin(values):
    return [v.item() if hasattr(v, "item") else v for v in values]


class DepthDistanceClassifier:
    """Classifier wrapping all five rules behind ``fit`` / ``predict``.

    Parameters
    ----------
    method : str
        One of ``maxdepth``, ``mindist``, ``ddknn``, ``distspace``, ``knn``.
    measure : str or None
        ``hd``/``pd``/``spd`` for depth rules, ``bd``/``sdo``/``ao`` for
        distance rules, ``None`` for plain kNN.
    k_grid : iterable of int, optional
        Candidate neighbor counts for leave-one-out selection.
    seed : int
        Master seed for the per-group direction sets.
    n_dirs : int, optional
        Directions per group, default ``250 p``.
    scale : bool
        Divide transformed coordinates by their training standard deviation
        before kNN. Off by default.
    """

    def __init__(self, method="distspace", measure="bd", k_grid=None, seed=0, n_dirs=None,
                 scale=False):
        check_method_measure(method, measure)
        self.method = method
        self.measure = None if method == "knn" else measure
        self.k_grid = None if k_grid is None else list(k_grid)
        self.seed = int(seed)
        self.n_dirs = n_dirs
        self.scale = bool(scale)

    def _fit_training(self, X, y):
        return fit_training_set(X, y, seed=self.seed, n_dirs=self.n_dirs)

    def _raw(self, X):
        return as_data_matrix(X, "data")

    def fit(self, X, y, training=None, coords=None):
        """Fit on ``X`` with labels ``y``.

        A prefitted ``training`` set and precomputed training ``coords``
        may be passed to share work between classifiers.
        """
        y = np.asarray(y)
        self.X_ = X
        self.y_ = y
        self.training_ = None
        if self.method != "knn":
            self.training_ = training if training is not None else self._fit_training(X, y)
            self.labels_ = list(self.training_.labels)
        else:
            self.labels_ = sorted(np.unique(y).tolist())
        self.train_coords_ = self.transform(X, coords)
        self._col_scale = np.ones(self.train_coords_.shape[1])
        self.knn_ = None
        if self.method in ("knn", "ddknn", "distspace"):
            if self.scale:
                sd = self.train_coords_.std(axis=0)
                self._col_scale = np.where(sd > 0, sd, 1.0)
            self.knn_ = knn_fit(self.train_coords_ / self._col_scale, y, self.k_grid)
        return self

    def transform(self, X, coords=None) -> np.ndarray:
        """Transformed coordinates (the raw data for plain kNN)."""
        if coords is not None:
            return coords
        if self.method == "knn":
            return self._raw(X)
        return self.training_.transform(X, self.measure)

    def predict(self, X, coords=None):
        """Predicted labels; precomputed transform ``coords`` may be supplied."""
        Z = self.transform(X, coords)
        if self.method == "maxdepth":
            idx = _pick(Z, self.training_.priors, largest=True)
        elif self.method == "mindist":
            idx = _pick(Z, self.training_.priors, largest=False)
        else:
            return knn_predict(Z / self._col_scale, self.knn_)
        return np.asarray(self.labels_, dtype=object)[idx]

    @property
    def k_(self):
        return None if self.knn_ is None else self.knn_.k

    @property
    def loo_error_(self):
        """Leave-one-out error percentage at the chosen k (kNN-based rules)."""
        if self.knn_ is None:
            return None
        return 100.0 * self.knn_.loo_errors[self.knn_.k] / self.train_coords_.shape[0]

    # -- serialization ----------------------------------------------------

    def to_dict(self, config: dict | None = None) -> dict:
        doc = {
            "version": MODEL_VERSION,
            "kind": "multivariate",
            "method": self.method,
            "measure": self.measure,
            "k": self.k_,
            "k_grid": self.k_grid,
            "seed": self.seed,
            "n_dirs": self.n_dirs,
            "scale": self.scale,
            "labels": _to_builtin(self.labels_),
            "priors": None if self.training_ is None else self.training_.priors.tolist(),
            "loo_error": self.loo_error_,
            "train_coords": self.train_coords_.tolist(),
            "train_labels": _to_builtin(self.y_),
            "training_data": np.asarray(self.X_, dtype=float).tolist(),
        }
        if config is not None:
            doc["config"] = config
        return doc

    def to_json(self, config: dict | None = None) -> str:
        return json.dumps(self.to_dict(config), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "DepthDistanceClassifier":
        """Rebuild a fitted classifier; group models are refit from the stored data."""
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        if doc.get("kind", "multivariate") != "multivariate":
            raise ValueError(f"not a multivariate model: {doc.get('kind')!r}")
        try:
            clf = cls(doc["method"], doc["measure"], doc.get("k_grid"), doc["seed"],
                      doc.get("n_dirs"), doc.get("scale", False))
            X = np.asarray(doc["training_data"], dtype=float)
            y = np.asarray(doc["train_labels"])
        except KeyError as exc:
            raise ValueError(f"model document lacks field {exc}") from exc
        clf.fit(X, y)
        if doc.get("k") is not None and clf.k_ != doc["k"]:
            raise ValueError("refit model disagrees with stored k")
        return clf

    @classmethod
    def from_json(cls, text: str) -> "DepthDistanceClassifier":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed model JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValueError("malformed model JSON: expected an object")
        return cls.from_dict(doc)
