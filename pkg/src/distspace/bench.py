"""Replicated classification experiments and timing runs."""

from __future__ import annotations

import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifiers import DepthDistanceClassifier, check_method_measure, fit_training_set
from .datasets import SETTINGS, make_rng, mislabel, split_banknote, split_functional
from .distances import ao, bagdistance, fit_group

__all__ = [
    "DEFAULT_METHODS",
    "parse_method",
    "misclassification_rate",
    "ScenarioSpec",
    "BenchResult",
    "run_benchmark",
    "time_measures",
]

DEFAULT_METHODS = (
    "knn",
    "maxdepth:hd", "maxdepth:pd", "maxdepth:spd",
    "ddknn:hd", "ddknn:pd", "ddknn:spd",
    "mindist:bd", "mindist:sdo", "mindist:ao",
    "distspace:bd", "distspace:sdo", "distspace:ao",
)


def parse_method(name: str) -> tuple[str, str | None]:
    """``"distspace:bd"`` -> ``("distspace", "bd")``; ``"knn"`` -> ``("knn", None)``."""
    method, _, measure = name.strip().lower().partition(":")
    measure = measure or None
    check_method_measure(method, measure)
    return method, measure


def misclassification_rate(predictions, truth, priors: dict) -> float:
    """Test error percentages per group, weighted by the training priors.

    ``priors`` maps each label to ``n_g / N`` of the training set.
    """
    pred = np.asarray(predictions, dtype=object)
    true = np.asarray(truth, dtype=object)
    if pred.shape != true.shape:
        raise ValueError("predictions and truth differ in length")
    test_labels = set(true.tolist())
    if not test_labels <= set(priors):
        raise ValueError(f"test labels {sorted(test_labels - set(priors), key=str)} have no prior")
    total = 0.0
    for lab, prior in priors.items():
        mask = true == lab
        if not mask.any():
            continue
        total += prior * 100.0 * np.count_nonzero(pred[mask] != lab) / mask.sum()
    return total


@dataclass
class ScenarioSpec:
    """One experiment: data source, sizes, contamination and seeds.

    ``setting`` is 1, 2 or 3 for the simulated settings, ``"banknote"``
    (``data`` holds ``(X, y)``) or ``"ucr"`` (``data`` holds
    ``(FunctionalSample, y)``).
    """

    setting: object = 1
    runs: int = 10
    mislabel: float = 0.0
    seed: int = 0
    n_train: object = None
    n_test: int = 500
    n_dirs: int | None = None
    k_grid: list | None = None
    stratify: bool = True
    data: object = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= self.mislabel < 1:
            raise ValueError("mislabel fraction must be in [0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be positive")
        if self.setting in ("1", "2", "3"):
            self.setting = int(self.setting)
        if self.setting not in (1, 2, 3, "banknote", "ucr"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.setting in ("banknote", "ucr") and self.data is None:
            raise ValueError(f"setting {self.setting!r} needs data")

    def config(self) -> dict:
        d = asdict(self)
        d.pop("data")
        return d


@dataclass
class BenchResult:
    """Misclassification percentages, one row per replication, one column per method."""

    methods: list
    errors: np.ndarray
    timings: dict
    config: dict

    def quantiles(self) -> dict:
        qs = np.quantile(self.errors, [0, 0.25, 0.5, 0.75, 1.0], axis=0)
        return {m: dict(zip(("min", "q1", "median", "q3", "max"), qs[:, j].tolist()))
                for j, m in enumerate(self.methods)}

    def median(self, method: str) -> float:
        return float(np.median(self.errors[:, self.methods.index(method)]))

    def to_csv(self) -> str:
        """``replication,method,error`` rows; deterministic for a fixed seed."""
        out = io.StringIO()
        out.write("# " + json.dumps(self.config, sort_keys=True) + "\n")
        out.write("replication,method,error\n")
        for r in range(self.errors.shape[0]):
            for j, m in enumerate(self.methods):
                out.write(f"{r},{m},{float(self.errors[r, j])!r}\n")
        return out.getvalue()

    def to_json(self) -> str:
        doc = {"config": self.config, "summary": self.quantiles(),
               "timings_seconds": self.timings}
        return json.dumps(doc, indent=1, sort_keys=True)


def _replicate(spec: ScenarioSpec, methods, r: int):
    rng = make_rng(spec.seed, r)
    fit_seed = int(rng.integers(2**31))
    tick = time.perf_counter()
    functional = spec.setting == "ucr"
    if spec.setting in SETTINGS:
        gen = SETTINGS[spec.setting]
        kwargs = {"n_test": spec.n_test}
        if spec.n_train is not None:
            kwargs["n_train"] = tuple(spec.n_train)
        split = gen(rng, **kwargs)
        X_train, y_train, X_test, y_test = split.X_train, split.y_train, split.X_test, split.y_test
    elif spec.setting == "banknote":
        X, y = spec.data
        split = split_banknote(X, y, rng, n_train=spec.n_train or 500, stratify=spec.stratify)
        X_train, y_train, X_test, y_test = split.X_train, split.y_train, split.X_test, split.y_test
    else:
        sample, y = spec.data
        X_train, y_train, X_test, y_test = split_functional(sample, y, rng, spec.n_train or 15)
    y_train = mislabel(y_train, spec.mislabel, rng)
    t_data = time.perf_counter() - tick

    tick = time.perf_counter()
    need_groups = any(m != "knn" for m, _ in methods)
    training = None
    if need_groups:
        if functional:
            from .functional import fit_functional_training_set
            training = fit_functional_training_set(X_train, y_train, seed=fit_seed,
                                                   n_dirs=spec.n_dirs)
        else:
            training = fit_training_set(X_train, y_train, seed=fit_seed, n_dirs=spec.n_dirs)
    t_fit = time.perf_counter() - tick

    tick = time.perf_counter()
    cache: dict = {}
    labels, counts = np.unique(y_train, return_counts=True)
    priors = dict(zip(labels.tolist(), (counts / counts.sum()).tolist()))
    errors = []
    for method, measure in methods:
        if functional:
            from .functional import FunctionalClassifier as cls
        else:
            cls = DepthDistanceClassifier
        clf = cls(method, measure, k_grid=spec.k_grid, seed=fit_seed, n_dirs=spec.n_dirs)
        if measure is not None and measure not in cache:
            cache[measure] = (training.transform(X_train, measure),
                              training.transform(X_test, measure))
        tr, te = cache.get(measure, (None, None))
        clf.fit(X_train, y_train, training=training, coords=tr)
        pred = clf.predict(X_test, coords=te)
        errors.append(misclassification_rate(pred, y_test, priors))
    t_classify = time.perf_counter() - tick
    return errors, {"data": t_data, "fit": t_fit, "classify": t_classify}


def run_benchmark(spec: ScenarioSpec, methods=DEFAULT_METHODS, threads: int = 1) -> BenchResult:
    """Run ``spec.runs`` replications of every method.

    Replication ``r`` draws everything from its own random stream derived
    from ``(spec.seed, r)``, so results do not depend on ``threads``.
    """
    names = [m if isinstance(m, str) else ":".join(x for x in m if x) for m in methods]
    parsed = [parse_method(m) for m in names]

    def job(r):
        try:
            return _replicate(spec, parsed, r)
        except Exception as exc:
            raise RuntimeError(f"replication {r}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(spec.runs)))
    else:
        results = [job(r) for r in range(spec.runs)]
    errors = np.array([e for e, _ in results])
    timings = {phase: float(sum(t[phase] for _, t in results)) for phase in results[0][1]}
    config = spec.config()
    config["methods"] = names
    return BenchResult(methods=names, errors=errors, timings=timings, config=config)


def time_measures(p_grid=(2, 3, 4, 5), m_grid=(1, 50, 100, 1000), n: int = 100,
                  n_datasets: int = 1000, seed: int = 0, bd_method: str = "bisect"):
    """Mean milliseconds to compute the bagdistance and the AO of m points.

    Each dataset is n draws from a centered normal with a random covariance;
    the query points come from the same law. Every timing includes the
    fixed per-dataset cost (directions, projections, and for the
    bagdistance the Tukey median and bag). For p >= 3 the bagdistance uses
    ``bd_method`` (bisection along the ray by default); p = 2 uses the bag
    polygon.
    """
    rows = []
    for p in p_grid:
        for m in m_grid:
            rng = make_rng(seed, p, m)
            t_bd = t_ao = 0.0
            for _ in range(n_datasets):
                A = rng.standard_normal((p, p))
                Y = rng.standard_normal((n, p)) @ A.T
                Q = rng.standard_normal((m, p)) @ A.T
                dir_seed = int(rng.integers(2**31))
                tick = time.perf_counter()
                group = fit_group(Y, seed=dir_seed)
                bagdistance(Q, group, method="region" if p == 2 else bd_method)
                t_bd += time.perf_counter() - tick
                tick = time.perf_counter()
                group = _fit_projection_only(Y, dir_seed)
                ao(Q, group)
                t_ao += time.perf_counter() - tick
            rows.append({"p": p, "m": m, "bd_ms": 1000 * t_bd / n_datasets,
                         "ao_ms": 1000 * t_ao / n_datasets})
    return rows


def _fit_projection_only(Y, seed):
    """Group statistics needed for SDO/AO only: no depths, median or bag."""
    from .depth import affine_directions
    from .distances import GroupModel, _fences, _medcouple_rows

    dirs = affine_directions(Y, seed=seed)
    S = np.sort(Y @ dirs.directions.T, axis=0).T
    med = np.median(S, axis=1)
    q1, q3 = np.quantile(S, [0.25, 0.75], axis=1)
    mc = _medcouple_rows(S)
    w1, w2 = _fences(q1, q3, mc)
    valid = q3 > q1
    return GroupModel(sample=Y, dirs=dirs, projected=None, med=med, mad=None, q1=q1, q3=q3,
                      mc=mc, valid_sdo=valid, valid_ao=valid, lower_fence=w1, upper_fence=w2,
                      bag=None, body=None, diameter=0.0)
