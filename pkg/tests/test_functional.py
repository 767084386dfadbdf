import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from distspace.classifiers import DepthDistanceClassifier
from distspace.distances import fit_group, halfspace_depth, sdo
from distspace.functional import (
    FunctionalClassifier,
    FunctionalSample,
    augment_curves,
    fao,
    fbd,
    fit_functional_training_set,
    fit_pointwise,
    fsdo,
    functional_classify,
    l2_curve_distance,
    mfd,
    trapezoid_weights,
)


def wavy_sample(rng, n=50, T=41, p=1, shift=0.0):
    t = np.linspace(0, 1, T)
    base = np.sin(2 * np.pi * t)[None, :, None]
    curves = base + shift + rng.standard_normal((n, 1, p)) + 0.3 * rng.standard_normal((n, T, p))
    return FunctionalSample.from_array(curves, t)


@pytest.fixture(scope="module")
def wavy():
    return wavy_sample(np.random.default_rng(0))


@pytest.fixture(scope="module")
def wavy_model(wavy):
    return fit_pointwise(wavy, seed=1)


def median_curve(model):
    return np.array([m.center for m in model.models])


def test_trapezoid_weights():
    w = trapezoid_weights([0.0, 1.0, 3.0])
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert w == pytest.approx([1 / 6, 1 / 2, 1 / 3])
    assert trapezoid_weights([5.0]) == pytest.approx([1.0])
    with pytest.raises(ValueError):
        trapezoid_weights([0.0, 0.0, 1.0])


def test_sample_validation():
    with pytest.raises(ValueError):
        FunctionalSample.from_array(np.zeros((2, 3, 1)), grid=[0.0, 1.0])
    with pytest.raises(ValueError):
        FunctionalSample.from_array([[0.0, np.nan]])
    s = FunctionalSample.from_array(np.zeros((2, 4)))
    assert s.curves.shape == (2, 4, 1) and s.domain_length == 3.0


def test_single_time_point_reduces_to_multivariate(rng):
    Y = rng.standard_normal((30, 2))
    sample = FunctionalSample.from_array(Y[:, None, :], grid=[0.0])
    model = fit_pointwise(sample, seed=3)
    g = fit_group(Y, seed=3)
    X = rng.standard_normal((10, 2)) * 2
    assert np.allclose(mfd(X[:, None, :], model, "hd"), halfspace_depth(X, g))
    assert np.allclose(fsdo(X[:, None, :], model), sdo(X, g))


def test_single_time_point_classifier_matches_multivariate(rng):
    X = np.vstack([rng.standard_normal((30, 3)), rng.standard_normal((30, 3)) + 2])
    y = np.r_[np.zeros(30, int), np.ones(30, int)]
    Q = rng.standard_normal((80, 3)) * 2 + 1
    fs = FunctionalSample.from_array(X[:, None, :], grid=[0.0])
    fq = FunctionalSample.from_array(Q[:, None, :], grid=[0.0])
    for method, measure in [("maxdepth", "hd"), ("mindist", "bd"), ("distspace", "ao"),
                            ("ddknn", "spd"), ("knn", None)]:
        a = FunctionalClassifier(method, measure, seed=4).fit(fs, y).predict(fq)
        b = DepthDistanceClassifier(method, measure, seed=4).fit(X, y).predict(Q)
        assert np.array_equal(a, b), method


def test_mfd_of_median_curve_dominates(wavy, wavy_model):
    med = median_curve(wavy_model)
    top = mfd(med, wavy_model, "hd")
    assert top >= mfd(wavy, wavy_model, "hd").max()
    all_depths = mfd(wavy, wavy_model, "hd")
    assert np.all((all_depths >= 0) & (all_depths <= 1))


def test_far_curve_has_zero_depth(wavy, wavy_model):
    far = median_curve(wavy_model) + 100.0
    assert mfd(far, wavy_model, "hd") == 0.0


def test_fbd_median_zero_and_homogeneous(wavy, wavy_model):
    med = median_curve(wavy_model)
    assert fbd(med, wavy_model) == pytest.approx(0.0, abs=1e-12)
    X = wavy.curves[3]
    assert fbd(med + 2 * (X - med), wavy_model) == pytest.approx(2 * fbd(X, wavy_model),
                                                                  rel=1e-8)


def test_spike_inflates_fbd_but_not_mfd(wavy, wavy_model):
    med = median_curve(wavy_model)
    spiked = med.copy()
    spiked[:2] += 500.0  # 2 of 41 grid points, about 5% of the grid
    assert mfd(spiked, wavy_model, "hd") >= 0.95 * mfd(med, wavy_model, "hd")
    for height in (500.0, 5000.0):
        s = med.copy()
        s[:2] += height
        assert fbd(s, wavy_model) > 10.0
    s1, s2 = med.copy(), med.copy()
    s1[:2] += 500.0
    s2[:2] += 5000.0
    assert fbd(s2, wavy_model) > 9 * fbd(s1, wavy_model)


def test_quadrature_restriction(wavy, wavy_model):
    keep = np.arange(0, 41, 4)
    w = np.zeros(41)
    w[keep] = trapezoid_weights(wavy.grid[keep])
    weighted = FunctionalSample.from_array(wavy.curves, wavy.grid, weights=w)
    full = fit_pointwise(weighted, seed=1)
    sub = fit_pointwise(FunctionalSample.from_array(wavy.curves[:, keep], wavy.grid[keep]), seed=1)
    X = wavy.curves[:7]
    assert np.allclose(fao(X, full), fao(X[:, keep], sub), rtol=1e-12)
    assert np.allclose(mfd(X, full, "spd"), mfd(X[:, keep], sub, "spd"), rtol=1e-12)


def test_grid_mismatch(wavy_model):
    with pytest.raises(ValueError):
        mfd(np.zeros(10), wavy_model)


def test_pointwise_failure_reports_time_point(rng):
    curves = rng.standard_normal((20, 6, 2))
    curves[:, 3, :] = 1.0
    with pytest.raises(ValueError, match="time point 3"):
        fit_pointwise(FunctionalSample.from_array(curves))


# -- L2 distance and fkNN ----------------------------------------------------

def test_l2_distance_examples():
    t = np.linspace(0, 1, 11)
    assert l2_curve_distance(np.ones(11), np.ones(11), t) == 0.0
    assert l2_curve_distance(np.full(11, 2.0), np.full(11, -1.5), t) == pytest.approx(3.5)
    with pytest.raises(ValueError):
        l2_curve_distance(np.zeros(3), np.zeros(4))


@given(arrays(np.float64, (3, 12), elements=st.floats(-50, 50)))
def test_l2_triangle_inequality(c):
    t = np.linspace(0, 2, 12)
    ab = l2_curve_distance(c[0], c[1], t)
    bc = l2_curve_distance(c[1], c[2], t)
    ac = l2_curve_distance(c[0], c[2], t)
    assert ac <= ab + bc + 1e-9


def test_fknn_uses_l2_distance(rng):
    train = wavy_sample(rng, n=20)
    y = np.arange(20) % 2
    test = wavy_sample(rng, n=5)
    clf = FunctionalClassifier("knn", None, k_grid=[1]).fit(train, y)
    pred = clf.predict(test)
    for i in range(5):
        d = [l2_curve_distance(test.curves[i], train.curves[j], train.grid) for j in range(20)]
        assert pred[i] == y[int(np.argmin(d))]


# -- classification ----------------------------------------------------------

def test_constant_level_groups(rng):
    T = 8
    g0 = rng.standard_normal((20, T, 1)) * 0.5
    g1 = 10 + rng.standard_normal((20, T, 1)) * 0.5
    train = FunctionalSample.from_array(np.vstack([g0, g1]))
    y = np.r_[np.zeros(20, int), np.ones(20, int)]
    test = FunctionalSample.from_array(np.ones((1, T, 1)))
    assert functional_classify(test, train, y, "distspace", "bd")[0] == 0
    tr = fit_functional_training_set(train, y)
    assert tr.transform(test, "bd").shape == (1, 2)


def test_fdistspace_affine_invariant_per_time_point(rng):
    a = wavy_sample(rng, n=25, T=6, p=2)
    b = wavy_sample(rng, n=25, T=6, p=2, shift=1.5)
    train = FunctionalSample.from_array(np.vstack([a.curves, b.curves]), a.grid)
    y = np.r_[np.zeros(25, int), np.ones(25, int)]
    test = wavy_sample(rng, n=60, T=6, p=2, shift=0.7)
    A = rng.standard_normal((6, 2, 2))
    c = rng.standard_normal((6, 2))

    def remap(s):
        return FunctionalSample.from_array(np.einsum("tij,ntj->nti", A, s.curves) + c, s.grid)

    p1 = FunctionalClassifier("distspace", "bd", seed=2).fit(train, y).predict(test)
    p2 = FunctionalClassifier("distspace", "bd", seed=2).fit(remap(train), y).predict(remap(test))
    assert np.array_equal(p1, p2)


def test_functional_classifier_requires_sample():
    with pytest.raises(TypeError):
        FunctionalClassifier("knn", None).fit(np.zeros((4, 3)), [0, 0, 1, 1])
    with pytest.raises(NotImplementedError):
        FunctionalClassifier("knn", None).to_dict()


# -- augmentation ------------------------------------------------------------

def test_augment_integral_and_derivative():
    t = np.linspace(0, 1, 101)
    s = FunctionalSample.from_array(np.stack([np.ones(101), t ** 2], axis=-1)[None], t)
    out = augment_curves(s, [(0, "integral"), (1, "derivative")])
    assert out.p == 4
    assert np.allclose(out.curves[0, :, 2], t, atol=1e-12)
    deriv = out.curves[0, :, 3]
    assert np.allclose(deriv[1:-1], 2 * t[1:-1], atol=1e-10)
    assert abs(deriv[0] - 0) <= 0.011 and abs(deriv[-1] - 2) <= 0.011


def test_augment_roundtrip():
    t = np.linspace(0, 2 * np.pi, 401)
    s = FunctionalSample.from_array(np.sin(t)[None, :], t)
    integ = augment_curves(s, [(0, "integral")])
    back = augment_curves(FunctionalSample.from_array(integ.curves[:, :, 1], t), [(0, "derivative")])
    dt = t[1] - t[0]
    assert np.max(np.abs(back.curves[0, 1:-1, 1] - np.sin(t[1:-1]))) < dt ** 2
    assert np.max(np.abs(back.curves[0, :, 1] - np.sin(t))) < dt


def test_augment_errors():
    with pytest.raises(ValueError):
        augment_curves(FunctionalSample.from_array(np.ones((2, 1))), [(0, "integral")])
    with pytest.raises(ValueError):
        augment_curves(FunctionalSample.from_array(np.ones((2, 3))), [(0, "fourier")])


def test_resample_linear():
    t = np.array([0.0, 1.0, 2.0])
    s = FunctionalSample.from_array(np.array([[0.0, 2.0, 4.0]]), t)
    r = s.resample([0.5, 1.5])
    assert r.curves[0, :, 0] == pytest.approx([1.0, 3.0])
