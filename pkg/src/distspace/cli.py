"""``distspace`` command line: train, classify, bench, bagdist.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bench import DEFAULT_METHODS, ScenarioSpec, parse_method, run_benchmark
from .classifiers import DepthDistanceClassifier, check_method_measure
from .datasets import fetch_uci_banknote, load_csv, load_ucr
from .distances import ao, bagdistance, fit_group, sdo

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# key -> (type, default) per command; every key may be set in a --config file
_KEYS = {
    "train": {
        "data": (str, None), "label_col": (str, "-1"), "method": (str, "distspace"),
        "measure": (str, "bd"), "k": (int, None), "k_grid": (str, None), "seed": (int, 0),
        "n_dirs": (int, None), "scale": (bool, False), "standardize": (bool, False),
        "threads": (int, 1), "out": (str, "model.json"),
    },
    "classify": {
        "model": (str, None), "data": (str, None), "label_col": (str, None),
        "threads": (int, 1), "out": (str, "predictions.csv"),
    },
    "bench": {
        "setting": (str, "1"), "runs": (int, 10), "mislabel": (float, 0.0),
        "methods": (str, ",".join(DEFAULT_METHODS)), "seed": (int, 0), "out": (str, "bench_out"),
        "threads": (int, 1), "n_train": (str, None), "n_test": (int, 500), "n_dirs": (int, None),
        "k_grid": (str, None), "stratify": (bool, True), "data": (str, None),
        "label_col": (str, "-1"), "fetch_banknote": (bool, False), "cache_dir": (str, None),
        "ucr": (str, None),
    },
    "bagdist": {
        "data": (str, None), "query": (str, None), "label_col": (str, None),
        "group": (str, None), "measures": (str, "bd"), "method": (str, "region"),
        "seed": (int, 0), "n_dirs": (int, None), "threads": (int, 1),
        "out": (str, None), "polygon": (str, None),
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, typ, raw):
    if raw is None or isinstance(raw, typ) and not isinstance(raw, str):
        return raw
    text = str(raw).strip()
    if text.lower() in ("", "none", "null") and typ is not bool:
        return None
    try:
        if typ is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError
        return typ(text)
    except ValueError:
        raise UsageError(f"{key}: cannot read {raw!r} as {typ.__name__}") from None


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def effective_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    spec = _KEYS[command]
    cfg = {k: d for k, (_, d) in spec.items()}
    if args.config:
        for key, value in read_config(args.config).items():
            if key not in spec:
                raise UsageError(f"unknown config key {key!r} for {command}")
            cfg[key] = value
    for key in spec:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return {k: _convert(k, spec[k][0], v) for k, v in cfg.items()}


def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _int_list(text):
    if text is None:
        return None
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma separated list of integers, got {text!r}") from None


def _label_col(text):
    if text is None:
        return None
    return int(text) if str(text).lstrip("-").isdigit() else text


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _chunked(func, X, threads: int):
    if threads <= 1 or X.shape[0] < 2 * threads:
        return func(X)
    parts = np.array_split(X, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(func, parts))
    return np.concatenate(results)


def _fmt(v) -> str:
    return repr(float(v))


# -- commands --------------------------------------------------------------

def cmd_train(cfg: dict) -> int:
    _require(cfg, "data")
    method, measure = cfg["method"].lower(), cfg["measure"]
    if method == "knn":
        measure = None
    try:
        check_method_measure(method, measure)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    k_grid = [cfg["k"]] if cfg["k"] is not None else _int_list(cfg["k_grid"])
    X, y, names = load_csv(cfg["data"], _label_col(cfg["label_col"]))
    preprocess = None
    if cfg["standardize"]:
        from .datasets import standardize_median_mad
        med = np.median(X, axis=0)
        mad = np.median(np.abs(X - med), axis=0)
        X = standardize_median_mad(X, columns=names)
        preprocess = {"median": med.tolist(), "mad": mad.tolist()}
    clf = DepthDistanceClassifier(method, measure, k_grid=k_grid, seed=cfg["seed"],
                                  n_dirs=cfg["n_dirs"], scale=cfg["scale"])
    training = None
    if method != "knn":
        from .classifiers import fit_training_set
        training = fit_training_set(X, y, seed=cfg["seed"], n_dirs=cfg["n_dirs"],
                                    threads=cfg["threads"])
    clf.fit(X, y, training=training)
    doc = clf.to_dict(config=cfg)
    doc["features"] = names
    doc["preprocess"] = preprocess
    _write(cfg["out"], json.dumps(doc, indent=1, sort_keys=True) + "\n")
    if clf.k_ is not None:
        print(f"k = {clf.k_}, leave-one-out error = {clf.loo_error_:.2f}%")
    else:
        print(f"trained {method}({measure}) on {X.shape[0]} rows")
    return EXIT_OK


def _load_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read model: {exc}") from None
    clf = DepthDistanceClassifier.from_json(text)
    doc = json.loads(text)
    return clf, doc


def cmd_classify(cfg: dict) -> int:
    _require(cfg, "model", "data")
    clf, doc = _load_model(cfg["model"])
    p = np.asarray(doc["training_data"]).shape[1]
    label_col = _label_col(cfg["label_col"])
    if label_col is None:
        # a file with one extra column is taken to hold labels where training had them
        with open(cfg["data"], encoding="utf-8") as fh:
            n_cols = len(fh.readline().split(","))
        if n_cols == p + 1:
            label_col = _label_col(doc.get("config", {}).get("label_col", "-1"))
    X, _, _ = load_csv(cfg["data"], label_col)
    if X.shape[1] != p:
        raise ValueError(f"data have {X.shape[1]} features, model expects {p}")
    pre = doc.get("preprocess")
    if pre:
        X = (X - np.asarray(pre["median"])) / np.asarray(pre["mad"])
    coords = _chunked(clf.transform, X, cfg["threads"])
    pred = clf.predict(X, coords=coords)
    run_cfg = dict(cfg, model_config=doc.get("config"))
    lines = ["# " + json.dumps(run_cfg, sort_keys=True)]
    coord_names = ["x" + str(j + 1) for j in range(p)] if clf.method == "knn" else \
        [f"{clf.measure}_{lab}" for lab in clf.labels_]
    lines.append(",".join(["row", "label"] + coord_names))
    for i in range(X.shape[0]):
        lines.append(",".join([str(i), str(pred[i])] + [_fmt(v) for v in coords[i]]))
    _write(cfg["out"], "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_bench(cfg: dict) -> int:
    setting = str(cfg["setting"]).lower()
    if setting == "4":
        setting = "banknote"
    if setting not in ("1", "2", "3", "banknote", "ucr"):
        raise UsageError(f"unknown setting {cfg['setting']!r}")
    if cfg["ucr"] is not None:
        setting = "ucr"
    try:
        methods = [parse_method(m) for m in cfg["methods"].split(",") if m.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not methods:
        raise UsageError("no methods given")
    if not 0 <= cfg["mislabel"] < 1:
        raise UsageError("--mislabel must be in [0, 1)")
    if cfg["runs"] < 1 or cfg["threads"] < 1:
        raise UsageError("--runs and --threads must be positive")
    data = None
    n_train = _int_list(cfg["n_train"])
    if setting == "banknote":
        if cfg["fetch_banknote"]:
            data = fetch_uci_banknote(cache_dir=cfg["cache_dir"])
        elif cfg["data"] is not None:
            X, y, _ = load_csv(cfg["data"], _label_col(cfg["label_col"]))
            data = (X, y)
        else:
            raise UsageError("setting banknote needs --data or --fetch-banknote")
        n_train = n_train[0] if n_train else None
    elif setting == "ucr":
        _require(cfg, "ucr")
        data = load_ucr(cfg["ucr"])
        if n_train is not None:
            labels = np.unique(data[1]).tolist()
            if len(n_train) == 1:
                n_train = n_train[0]
            elif len(n_train) == len(labels):
                n_train = dict(zip(labels, n_train))
            else:
                raise UsageError(f"--n-train needs 1 or {len(labels)} sizes")
    spec = ScenarioSpec(setting=int(setting) if setting.isdigit() else setting,
                        runs=cfg["runs"], mislabel=cfg["mislabel"], seed=cfg["seed"],
                        n_train=n_train, n_test=cfg["n_test"], n_dirs=cfg["n_dirs"],
                        k_grid=_int_list(cfg["k_grid"]), stratify=cfg["stratify"], data=data)
    names = [m if s is None else f"{m}:{s}" for m, s in methods]
    result = run_benchmark(spec, names, threads=cfg["threads"])
    # threads do not change results; leave them out so outputs stay byte-identical
    for key, value in cfg.items():
        if key not in ("threads", "out"):
            result.config.setdefault(key, value)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(result.to_csv(), encoding="utf-8")
    (out / "summary.json").write_text(result.to_json() + "\n", encoding="utf-8")
    width = max(len(n) for n in names)
    for name, q in result.quantiles().items():
        print(f"{name:<{width}}  median {q['median']:6.2f}%  [{q['q1']:.2f}, {q['q3']:.2f}]")
    return EXIT_OK


def cmd_bagdist(cfg: dict) -> int:
    _require(cfg, "data")
    measures = [m.strip().lower() for m in cfg["measures"].split(",") if m.strip()]
    bad = [m for m in measures if m not in ("bd", "sdo", "ao")]
    if bad:
        raise UsageError(f"unknown measure {bad[0]!r}; choose from bd, sdo, ao")
    if cfg["method"] not in ("region", "bisect"):
        raise UsageError("--method must be region or bisect")
    label_col = _label_col(cfg["label_col"])
    X, y, names = load_csv(cfg["data"], label_col)
    if cfg["group"] is not None:
        if y is None:
            raise UsageError("--group needs --label-col")
        X = X[np.array([str(v) for v in y]) == cfg["group"]]
        if X.shape[0] == 0:
            raise ValueError(f"no rows with label {cfg['group']!r}")
    group = fit_group(X, seed=cfg["seed"], n_dirs=cfg["n_dirs"])
    if cfg["polygon"] is not None:
        if group.p != 2 or group.bag.polygon is None:
            raise ValueError("polygon export needs bivariate data")
        verts = group.bag.polygon.tolist()
        doc = {"config": cfg, "center": group.center.tolist(),
               "vertices": verts + verts[:1], "orientation": "ccw", "closed": True}
        _write(cfg["polygon"], json.dumps(doc, indent=1, sort_keys=True) + "\n")
    if cfg["query"] is None:
        return EXIT_OK
    Q, _, _ = load_csv(cfg["query"], None)
    if Q.shape[1] != group.p:
        raise ValueError(f"query points have {Q.shape[1]} coordinates, data have {group.p}")
    funcs = {"bd": lambda Z: np.atleast_1d(bagdistance(Z, group, method=cfg["method"])),
             "sdo": lambda Z: np.atleast_1d(sdo(Z, group)),
             "ao": lambda Z: np.atleast_1d(ao(Z, group))}
    cols = [_chunked(funcs[m], Q, cfg["threads"]) for m in measures]
    lines = ["# " + json.dumps(cfg, sort_keys=True), ",".join(["row"] + measures)]
    for i in range(Q.shape[0]):
        lines.append(",".join([str(i)] + [_fmt(c[i]) for c in cols]))
    _write(cfg["out"], "\n".join(lines) + "\n")
    return EXIT_OK


_COMMANDS = {"train": cmd_train, "classify": cmd_classify, "bench": cmd_bench,
             "bagdist": cmd_bagdist}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distspace",
                                     description="Depth- and distance-based classification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "fit a classifier on a labeled CSV and write model JSON",
        "classify": "label the rows of a CSV with a saved model",
        "bench": "run the replicated simulation benchmark",
        "bagdist": "bagdistance (and SDO/AO) of query points to one sample",
    }
    for name, keys in _KEYS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="key = value file; flags override it")
        for key, (typ, default) in keys.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
                p.add_argument("--no-" + key.replace("_", "-"), dest=key,
                               action="store_const", const=False)
            else:
                p.add_argument(flag, dest=key, default=None,
                               help=f"default: {default}" if default is not None else None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = effective_config(args.command, args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"distspace {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError, KeyError, TypeError) as exc:
        print(f"distspace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
