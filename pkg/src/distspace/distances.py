"""Generalized norms and robust distances to a sample.

A :class:`GroupModel` caches everything the distance measures need for
one training group: the direction set, sorted projections, per-direction
median / MAD / quartiles / medcouple, the sample depths, the Tukey median
and the bag.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .depth import (
    BagGeometry,
    DirectionSet,
    ProjectedSample,
    affine_directions,
    as_data_matrix,
    compute_bag,
    depth_counts,
)

__all__ = [
    "StarBody",
    "Ellipsoid",
    "Polytope",
    "Interval",
    "generalized_norm",
    "GroupModel",
    "fit_group",
    "bagdistance",
    "bisect_ray",
    "sdo",
    "medcouple",
    "ao1",
    "ao",
    "pd",
    "spd",
    "halfspace_depth",
]


class StarBody:
    """A compact set, star-shaped about ``center`` with the center inside.

    Subclasses provide :meth:`radius`, the distance from the center to the
    boundary along a unit direction.
    """

    center: np.ndarray

    def radius(self, u) -> np.ndarray:
        raise NotImplementedError

    def norm(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - self.center
        length = np.linalg.norm(d, axis=1)
        out = np.zeros(x.shape[0])
        nz = length > 0
        if nz.any():
            out[nz] = length[nz] / self.radius(d[nz] / length[nz, None])
        return out


class Ellipsoid(StarBody):
    """``{x : (x-c)' S^-1 (x-c) <= 1}``; its gauge is the Mahalanobis distance."""

    def __init__(self, cov, center=None):
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        p = self.cov.shape[0]
        self.center = np.zeros(p) if center is None else np.asarray(center, dtype=float)
        self._prec = np.linalg.inv(self.cov)

    def radius(self, u):
        u = np.atleast_2d(u)
        return 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", u, self._prec, u))

    def mahalanobis(self, x):
        d = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        return np.sqrt(np.einsum("ij,jk,ik->i", d, self._prec, d))


class Polytope(StarBody):
    """Bounded intersection of halfspaces ``{x : A x <= b}`` around ``center``."""

    def __init__(self, normals, offsets, center):
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        self.center = np.asarray(center, dtype=float).reshape(-1)
        slack = self.offsets - self.normals @ self.center
        if np.any(slack <= 0):
            raise ValueError("degenerate bag: center is not interior to the region")
        # bodies from data are used as inverse scales, keep 1/slack
        self._inv_slack = 1.0 / slack

    def radius(self, u):
        return 1.0 / self._gauge(np.atleast_2d(u))

    def _gauge(self, d):
        step = max(1, 4_000_000 // max(1, self.normals.shape[0]))
        out = np.empty(d.shape[0])
        for s in range(0, d.shape[0], step):
            g = (d[s:s + step] @ self.normals.T) * self._inv_slack
            out[s:s + step] = g.max(axis=1)
        if np.any(out[np.any(d != 0, axis=1)] <= 0):
            raise ValueError("unbounded ray: region is not bounded in this direction")
        return np.maximum(out, 0.0)

    def norm(self, x):
        d = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        return self._gauge(d)

    def ray_hit(self, u) -> np.ndarray:
        """Boundary points ``center + r(u) u``."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return self.center + self.radius(u)[:, None] * u


class Interval(StarBody):
    """``[c - 1/b, c + 1/a]`` in one dimension; gauge ``a x+ + b x-``."""

    def __init__(self, a: float, b: float, center: float = 0.0):
        if a <= 0 or b <= 0:
            raise ValueError("interval half-widths must be positive")
        self.a, self.b = float(a), float(b)
        self.center = np.array([float(center)])

    def radius(self, u):
        u = np.asarray(u, dtype=float).reshape(-1)
        return np.where(u > 0, 1.0 / self.a, 1.0 / self.b)

    def norm(self, x):
        z = np.asarray(x, dtype=float).reshape(-1) - self.center[0]
        return self.a * np.maximum(z, 0) + self.b * np.maximum(-z, 0)


def generalized_norm(x, body: StarBody):
    """Gauge of ``body`` about its center: ``||x - c|| / r(u)``, 0 at the center."""
    x = np.asarray(x, dtype=float)
    if isinstance(body, Interval):
        out = body.norm(x)
        return float(out[0]) if x.ndim == 0 else out
    if x.ndim == 1:
        return float(body.norm(x[None, :])[0])
    return body.norm(x)


# ---------------------------------------------------------------------------
# medcouple and univariate adjusted outlyingness


def _mc_kernel_median(lower: np.ndarray, upper: np.ndarray, m: float, n_ties: int) -> float:
    zl = lower[:, None]
    zu = upper[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = ((zu - m) - (m - zl)) / (zu - zl)
    if n_ties:
        # both at the median: -1 / 0 / +1 by position in the tie block
        k = n_ties
        i = np.arange(1, k + 1)
        block = np.sign((i[:, None] + i[None, :] - 1) - k).astype(float)
        # lower is ascending so its ties are the last k rows; upper's first k columns
        h[-k:, :k] = block
    return float(np.median(h))


def medcouple(z) -> float:
    """Medcouple by full pairwise enumeration (O(n^2)).

    The kernel ``((zj - m) - (m - zi)) / (zj - zi)`` is evaluated for every
    pair ``zi <= m <= zj``; pairs tied at the median get -1, 0 or +1
    depending on their position in the block of ties.
    """
    z = np.sort(np.asarray(z, dtype=float).reshape(-1))
    if z.size < 3:
        raise ValueError("medcouple needs at least 3 observations")
    if z[0] == z[-1]:
        raise ValueError("zero scale")
    m = float(np.median(z))
    n_ties = int(np.count_nonzero(z == m))
    lower = z[z <= m]
    upper = z[z >= m]
    return _mc_kernel_median(lower, upper, m, n_ties)


def _medcouple_rows(S: np.ndarray) -> np.ndarray:
    """Medcouple of every row of a row-sorted matrix, same kernel as :func:`medcouple`.

    Rows whose only value equal to the median is the middle order statistic
    (odd n) or that have none (even n) share one pair layout and are done in
    blocks; rows with more ties fall back to :func:`medcouple`'s kernel.
    """
    m_dirs, n = S.shape
    out = np.empty(m_dirs)
    med = np.median(S, axis=1)
    n_ties = (S == med[:, None]).sum(axis=1)
    odd = n % 2 == 1
    regular = n_ties == (1 if odd else 0)
    half = (n + 1) // 2
    start_up = half - 1 if odd else half
    rows = np.flatnonzero(regular)
    step = max(1, 4_000_000 // (half * (n - start_up)))
    for s in range(0, rows.size, step):
        r = rows[s:s + step]
        mm = med[r][:, None, None]
        zl = S[r, :half][:, :, None]
        zu = S[r, start_up:][:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            h = ((zu - mm) - (mm - zl)) / (zu - zl)
        if odd:
            h[:, -1, 0] = 0.0
        out[r] = np.median(h.reshape(r.size, -1), axis=1)
    for r in np.flatnonzero(~regular):
        z = S[r]
        out[r] = _mc_kernel_median(z[z <= med[r]], z[z >= med[r]], med[r], int(n_ties[r]))
    return out


def _fences(q1, q3, mc):
    iqr = q3 - q1
    pos = mc >= 0
    w1 = np.where(pos, q1 - 1.5 * np.exp(-4 * mc) * iqr, q1 - 1.5 * np.exp(-3 * mc) * iqr)
    w2 = np.where(pos, q3 + 1.5 * np.exp(3 * mc) * iqr, q3 + 1.5 * np.exp(4 * mc) * iqr)
    return w1, w2


def ao1(z, sample) -> float:
    """Univariate adjusted outlyingness of ``z`` with respect to ``sample``.

    Deviations from the median are scaled by the distance from the median
    to the skewness-adjusted boxplot fence on the same side. A sample with
    negative medcouple is handled by mirroring both ``z`` and the sample.
    """
    Z = np.asarray(sample, dtype=float).reshape(-1)
    z = float(z)
    mc = medcouple(Z)
    if mc < 0:
        return ao1(-z, -Z)
    med = float(np.median(Z))
    q1, q3 = np.quantile(Z, [0.25, 0.75])
    if q3 - q1 <= 0:
        raise ValueError("zero IQR")
    w1 = q1 - 1.5 * np.exp(-4 * mc) * (q3 - q1)
    w2 = q3 + 1.5 * np.exp(3 * mc) * (q3 - q1)
    if z > med:
        return (z - med) / (w2 - med)
    return (med - z) / (med - w1)


# ---------------------------------------------------------------------------
# group model


@dataclass
class GroupModel:
    """Cached statistics of one training group.

    Build with :func:`fit_group`. Instances are treated as immutable.
    """

    sample: np.ndarray
    dirs: DirectionSet
    projected: ProjectedSample
    med: np.ndarray
    mad: np.ndarray
    q1: np.ndarray
    q3: np.ndarray
    mc: np.ndarray
    valid_sdo: np.ndarray
    valid_ao: np.ndarray
    lower_fence: np.ndarray
    upper_fence: np.ndarray
    bag: BagGeometry
    body: StarBody
    diameter: float
    dropped_directions: int = 0

    @property
    def n(self) -> int:
        return self.sample.shape[0]

    @property
    def p(self) -> int:
        return self.sample.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.bag.center

    def depth_counts(self, points) -> np.ndarray:
        return depth_counts(points, self.sample, projected=self.projected)

    def depth(self, points) -> np.ndarray:
        return self.depth_counts(points) / self.n


def _bag_body(bag: BagGeometry, projected: ProjectedSample) -> StarBody:
    p = projected.sample.shape[1]
    if p == 2:
        V = bag.polygon
        E = np.roll(V, -1, axis=0) - V
        # outward normals of a counterclockwise polygon
        normals = np.column_stack([E[:, 1], -E[:, 0]])
        offsets = np.einsum("ij,ij->i", normals, V)
        return Polytope(normals, offsets, bag.center)
    lo, hi = projected.region_bounds(bag.depth_count_threshold)
    V = projected.dirs.directions
    return Polytope(np.vstack([V, -V]), np.concatenate([hi, -lo]), bag.center)


def fit_group(sample, dirs: DirectionSet | None = None, seed: int = 0,
              n_dirs: int | None = None) -> GroupModel:
    """Fit a :class:`GroupModel`; directions default to ``250 p`` affine-invariant draws."""
    Y = as_data_matrix(sample)
    n, p = Y.shape
    if n < p + 1:
        raise ValueError(f"group needs n >= p+1 = {p + 1} points, got {n}")
    if dirs is None:
        dirs = affine_directions(Y, n_dirs, seed=seed)
    projected = ProjectedSample(Y, dirs)
    S = projected.sorted
    med = np.median(S, axis=1)
    mad = np.median(np.abs(S - med[:, None]), axis=1)
    q1, q3 = np.quantile(S, [0.25, 0.75], axis=1)
    iqr = q3 - q1
    tiny = projected.tol
    valid_sdo = mad > tiny
    valid_ao = iqr > tiny
    nondegenerate = (S[:, -1] - S[:, 0]) > tiny
    mc = np.zeros(S.shape[0])
    if nondegenerate.any() and n >= 3:
        mc[nondegenerate] = _medcouple_rows(S[nondegenerate])
    valid_ao &= nondegenerate
    if not valid_sdo.any() and not valid_ao.any():
        raise ValueError("all projection directions are degenerate")
    dropped = int((~(valid_sdo & valid_ao)).sum())
    if dropped and p > 1:
        warnings.warn(f"{dropped} degenerate projection directions skipped", RuntimeWarning,
                      stacklevel=2)
    w1, w2 = _fences(q1, q3, mc)
    counts = depth_counts(Y, Y, projected=projected)
    bag = compute_bag(Y, dirs, projected=projected, counts=counts)
    body = _bag_body(bag, projected)
    diameter = float(pdist(Y).max()) if n > 1 else 0.0
    return GroupModel(
        sample=Y, dirs=dirs, projected=projected, med=med, mad=mad, q1=q1, q3=q3, mc=mc,
        valid_sdo=valid_sdo, valid_ao=valid_ao, lower_fence=w1, upper_fence=w2,
        bag=bag, body=body, diameter=diameter, dropped_directions=dropped,
    )


def _points(x, group: GroupModel) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and (group.p > 1 or x.size == 1) or x.ndim == 0
    pts = x.reshape(1, -1) if single else (x.reshape(-1, 1) if x.ndim == 1 else x)
    if pts.shape[1] != group.p:
        raise ValueError(f"point dimension {pts.shape[1]} does not match group dimension {group.p}")
    return pts, single


def _out(vals: np.ndarray, single: bool):
    return float(vals[0]) if single else vals


def halfspace_depth(x, group: GroupModel):
    """Halfspace depth of ``x`` in the group (exact for p <= 2)."""
    pts, single = _points(x, group)
    return _out(group.depth(pts), single)


def bisect_ray(group: GroupModel, u, target: float, rel_tol: float = 1e-8) -> np.ndarray:
    """Point ``c*`` on the ray ``center + t u`` where depth falls to ``target``.

    Depth decreases along rays from the Tukey median, so the crossing is
    found by bisection on ``t``. The bracket starts at the sample diameter
    and is doubled at most 60 times.
    """
    U = np.atleast_2d(np.asarray(u, dtype=float))
    U = U / np.linalg.norm(U, axis=1)[:, None]
    hits = _bisect_rays(group, U, target, rel_tol)
    return hits[0] if np.ndim(u) == 1 else hits


def _bisect_rays(group: GroupModel, U: np.ndarray, target: float, rel_tol: float = 1e-8):
    theta = group.center
    need = target * group.n - 1e-9

    def inside(t):
        return group.depth_counts(theta + t[:, None] * U) >= need

    if not np.all(inside(np.zeros(U.shape[0]))):
        raise ValueError("target depth exceeds the depth of the center")
    R = max(group.diameter, 1e-300)
    hi = np.full(U.shape[0], R)
    for _ in range(60):
        still = inside(hi)
        if not still.any():
            break
        hi[still] *= 2
    else:
        raise ValueError("unbounded ray: depth never drops to the target")
    lo = np.zeros(U.shape[0])
    tol = rel_tol * R
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    t = 0.5 * (lo + hi)
    return theta + t[:, None] * U


def bagdistance(x, group: GroupModel, method: str = "region"):
    """Bagdistance ``||x - theta|| / ||c_x - theta||`` of points to a group.

    ``method="region"`` intersects the ray with the bag directly (the
    polygon for p=2, the slab intersection of the median-depth region
    otherwise). ``method="bisect"`` locates ``c_x`` by bisection on depth.
    For p >= 3 both give the same bag. For p = 2 the polygon is the hull
    of the deepest half of the sample, which lies inside the exact region
    {hd >= median depth} that bisection finds, so the two differ there.
    """
    pts, single = _points(x, group)
    if method == "region":
        return _out(group.body.norm(pts), single)
    if method != "bisect":
        raise ValueError(f"unknown bagdistance method {method!r}")
    d = pts - group.center
    length = np.linalg.norm(d, axis=1)
    out = np.zeros(pts.shape[0])
    nz = length > 0
    if nz.any():
        U = d[nz] / length[nz, None]
        c = _bisect_rays(group, U, group.bag.threshold)
        out[nz] = length[nz] / np.linalg.norm(c - group.center, axis=1)
    return _out(out, single)


def _chunks(pts: np.ndarray, m: int):
    step = max(1, 4_000_000 // max(m, 1))
    for s in range(0, pts.shape[0], step):
        yield s, pts[s:s + step]


def sdo(x, group: GroupModel):
    """Stahel-Donoho outlyingness over the cached directions (raw MAD)."""
    pts, single = _points(x, group)
    keep = group.valid_sdo
    if not keep.any():
        raise ValueError("all projection directions are degenerate")
    V = group.dirs.directions[keep]
    med, mad = group.med[keep], group.mad[keep]
    out = np.empty(pts.shape[0])
    for s, chunk in _chunks(pts, V.shape[0]):
        out[s:s + chunk.shape[0]] = (np.abs(chunk @ V.T - med) / mad).max(axis=1)
    return _out(out, single)


def ao(x, group: GroupModel):
    """Adjusted outlyingness: maximum of the univariate AO over the cached directions."""
    pts, single = _points(x, group)
    keep = group.valid_ao
    if not keep.any():
        raise ValueError("all projection directions are degenerate")
    V = group.dirs.directions[keep]
    med = group.med[keep]
    up = group.upper_fence[keep] - med
    down = med - group.lower_fence[keep]
    out = np.empty(pts.shape[0])
    for s, chunk in _chunks(pts, V.shape[0]):
        dev = chunk @ V.T - med
        val = np.where(dev > 0, dev / up, -dev / down)
        out[s:s + chunk.shape[0]] = val.max(axis=1)
    return _out(out, single)


def pd(x, group: GroupModel):
    """Projection depth ``1 / (1 + SDO)``."""
    return 1.0 / (1.0 + sdo(x, group))


def spd(x, group: GroupModel):
    """Skew-adjusted projection depth ``1 / (1 + AO)``."""
    return 1.0 / (1.0 + ao(x, group))
