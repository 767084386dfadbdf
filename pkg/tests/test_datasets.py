import urllib.request

import numpy as np
import pytest

from distspace.datasets import (
    SIGMA1,
    fetch_uci_banknote,
    gen_setting1,
    gen_setting2,
    gen_setting3,
    load_csv,
    load_ucr,
    make_rng,
    mislabel,
    split_banknote,
    split_functional,
    standardize_median_mad,
)
from distspace.distances import medcouple


def write_banknote(path, rng, rows=(762, 610), cols=5):
    X = np.vstack([rng.standard_normal((rows[0], 4)), rng.standard_normal((rows[1], 4)) + 2])
    y = np.r_[np.zeros(rows[0], int), np.ones(rows[1], int)]
    with open(path, "w") as fh:
        for x, lab in zip(X, y):
            fh.write(",".join(f"{v:.5f}" for v in x[: cols - 1]) + f",{lab}\n")


# -- simulation settings -----------------------------------------------------

def test_setting1_laws():
    s = gen_setting1(0, n_train=(100000, 100000, 100000), n_test=1)
    groups = [s.X_train[s.y_train == g] for g in range(3)]
    D = np.diag([1.0, -1.0, 1.0])
    assert np.allclose(np.cov(groups[0].T), SIGMA1, atol=0.1)
    assert np.allclose(np.cov(groups[1].T), D @ SIGMA1 @ D, atol=0.1)
    assert np.allclose(groups[2].mean(axis=0), [1, -2, -4], atol=0.05)
    small = gen_setting1(1)
    assert np.bincount(small.y_train).tolist() == [50, 50, 50]
    assert np.bincount(small.y_test).tolist() == [500, 500, 500]


def test_setting2_laws():
    s = gen_setting2(0, n_train=(10, 100000), n_test=1)
    expo = s.X_train[s.y_train == 1]
    assert np.allclose(expo.mean(axis=0), 1, atol=0.03)
    assert np.allclose(expo.var(axis=0), 1, atol=0.03)
    mcs = [medcouple(expo[i * 2000:(i + 1) * 2000, 0]) for i in range(5)]
    assert np.mean(mcs) > 0.2
    assert np.bincount(gen_setting2(3).y_train).tolist() == [150, 100]


def test_setting3_laws():
    s = gen_setting3(0, n_train=(10, 100000), n_test=1)
    shell = s.X_train[s.y_train == 1]
    r = np.linalg.norm(shell, axis=1)
    assert r.min() >= 12 and r.max() <= 13
    assert np.allclose((shell / r[:, None]).mean(axis=0), 0, atol=0.05)
    small = gen_setting3(2)
    assert np.bincount(small.y_train).tolist() == [150, 250]
    assert small.X_train.shape[1] == 7


def test_generators_deterministic():
    a, b = gen_setting1(5), gen_setting1(5)
    assert np.array_equal(a.X_train, b.X_train) and np.array_equal(a.X_test, b.X_test)
    assert not np.array_equal(a.X_train, gen_setting1(6).X_train)
    r1, r2 = make_rng(7, 3), make_rng(7, 4)
    assert r1.random() != r2.random()


# -- mislabeling -------------------------------------------------------------

def test_mislabel_counts_and_contract():
    y = np.repeat([0, 1, 2], 50)
    assert np.array_equal(mislabel(y, 0.0, 1), y)
    out = mislabel(y, 0.10, 1)
    for g in range(3):
        assert np.count_nonzero(out[y == g] != g) == 5
    assert np.array_equal(y, np.repeat([0, 1, 2], 50))


def test_mislabel_round_half_even():
    y = np.r_[np.zeros(50, int), np.ones(150, int)]
    out = mislabel(y, 0.05, 2)  # 2.5 -> 2 and 7.5 -> 8
    assert np.count_nonzero(out[:50] != 0) == 2
    assert np.count_nonzero(out[50:] != 1) == 8


def test_mislabel_errors():
    with pytest.raises(ValueError):
        mislabel(np.zeros(4, int), 1.0, 0)
    with pytest.raises(ValueError):
        mislabel(np.zeros(4, int), 0.5, 0)


# -- loaders -----------------------------------------------------------------

def test_load_csv_golden(tmp_path):
    f = tmp_path / "toy.csv"
    f.write_text("x1,x2,label\n1.5,2,a\n-3,4e-1,b\n0,7,a\n", encoding="utf-8")
    X, y, names = load_csv(f)
    assert np.array_equal(X, [[1.5, 2.0], [-3.0, 0.4], [0.0, 7.0]])
    assert list(y) == ["a", "b", "a"] and names == ["x1", "x2"]
    X2, y2, _ = load_csv(f, label_col="label")
    assert np.array_equal(X, X2) and list(y2) == list(y)
    g = tmp_path / "nolab.csv"
    g.write_text("x1,x2\n1,2\n3,4\n", encoding="utf-8")
    X3, y3, names3 = load_csv(g, label_col=None)
    assert y3 is None and names3 == ["x1", "x2"] and X3.shape == (2, 2)


def test_load_csv_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x1,x2,label\n1,2,0\n3,oops,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"bad.csv:3: column 'x2'"):
        load_csv(f)
    f.write_text("x1,x2,label\n1,2,\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing label"):
        load_csv(f)


def test_standardize(tmp_path, rng):
    X = rng.standard_normal((51, 3)) * [1, 5, 0.1] + [3, -2, 8]
    Z = standardize_median_mad(X)
    assert np.allclose(np.median(Z, axis=0), 0, atol=1e-12)
    assert np.allclose(np.median(np.abs(Z), axis=0), 1)
    X[:, 1] = np.r_[np.zeros(40), np.ones(11)]
    with pytest.raises(ValueError, match="column b has zero MAD"):
        standardize_median_mad(X, columns=["a", "b", "c"])


def test_load_ucr(tmp_path):
    f = tmp_path / "toy_TRAIN"
    f.write_text("1, 0.5, 0.25, 1.0, 2.0\n2\t3 4 5 6\n", encoding="utf-8")
    sample, y = load_ucr(f)
    assert sample.curves.shape == (2, 4, 1) and list(y) == [1, 2]
    assert np.array_equal(sample.grid, [1, 2, 3, 4])
    f.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="empty"):
        load_ucr(f)
    f.write_text("1 1 2 3\n2 1 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="ragged"):
        load_ucr(f)


# -- banknote ----------------------------------------------------------------

def test_banknote_cache_used_without_network(tmp_path, monkeypatch, rng):
    write_banknote(tmp_path / "data_banknote_authentication.txt", rng)

    def no_network(*args, **kwargs):
        raise AssertionError("network accessed")

    monkeypatch.setattr(urllib.request, "urlopen", no_network)
    X, y = fetch_uci_banknote(cache_dir=tmp_path)
    assert X.shape == (1372, 4)
    assert np.bincount(y).tolist() == [762, 610]


def test_banknote_shape_check(tmp_path, rng):
    write_banknote(tmp_path / "data_banknote_authentication.txt", rng, rows=(700, 610))
    with pytest.raises(ValueError, match="unexpected dataset shape"):
        fetch_uci_banknote(cache_dir=tmp_path)


def test_banknote_bad_url_surfaces_error(tmp_path):
    with pytest.raises(OSError):
        fetch_uci_banknote(url="http://127.0.0.1:9/none.txt", cache_dir=tmp_path / "empty",
                           timeout=2)


def test_split_banknote(tmp_path, rng):
    write_banknote(tmp_path / "data_banknote_authentication.txt", rng)
    X, y = fetch_uci_banknote(cache_dir=tmp_path)
    s = split_banknote(X, y, 3)
    assert s.X_train.shape == (500, 4) and s.X_test.shape == (872, 4)
    assert np.bincount(s.y_train).tolist() == [278, 222]
    assert np.allclose(np.median(s.X_train, axis=0), 0, atol=1e-12)
    u = split_banknote(X, y, 3, stratify=False)
    assert u.X_train.shape == (500, 4)


def test_split_functional(rng):
    from distspace.functional import FunctionalSample
    sample = FunctionalSample.from_array(rng.standard_normal((30, 5)))
    y = np.repeat([1, 2, 3], 10)
    tr, ytr, te, yte = split_functional(sample, y, 0, {1: 3, 2: 4, 3: 5})
    assert np.bincount(ytr).tolist() == [0, 3, 4, 5] and te.n == 18
