"""Halfspace (Tukey) depth, Tukey median and the bag.

Depths are exact for p=1 and p=2. In higher dimensions the infimum over
all directions is replaced by a minimum over a finite :class:`DirectionSet`,
which gives an upper bound on the exact depth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import ceil

import numpy as np
from scipy.spatial import ConvexHull

__all__ = [
    "DirectionSet",
    "BagGeometry",
    "ProjectedSample",
    "as_data_matrix",
    "affine_directions",
    "exact_direction_set",
    "hd_univariate",
    "hd_bivariate_exact",
    "hd_approx",
    "depth_counts",
    "tukey_median",
    "compute_bag",
]

_REL_TOL = 1e-9
_ANGLE_TOL = 1e-10


def as_data_matrix(values, name="sample") -> np.ndarray:
    """Validate and return an ``(n, p)`` float array with finite entries."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("empty sample")
    if arr.shape[1] == 0:
        raise ValueError(f"{name} has no columns")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


@dataclass(frozen=True)
class DirectionSet:
    """A finite set of unit directions in R^p.

    Attributes
    ----------
    directions : ndarray of shape (m, p)
        Unit vectors, one per row.
    seed : int or None
        Seed used to draw them, ``None`` for deterministic constructions.
    """

    directions: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if dirs.shape[0] < 1:
            raise ValueError("direction set is empty")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero direction")
        dirs = dirs / norms[:, None]
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]


def _hyperplane_normals(points: np.ndarray) -> np.ndarray:
    """Normals of the hyperplanes through ``points[k]`` (shape (k, p, p)).

    Uses the generalized cross product (cofactor expansion) of the p-1
    difference vectors, so the normal transforms with the cofactor matrix of
    any linear map applied to the points.
    """
    k, _, p = points.shape
    diffs = points[:, 1:, :] - points[:, :1, :]
    normals = np.empty((k, p))
    for j in range(p):
        cols = [c for c in range(p) if c != j]
        sub = diffs[:, :, cols]
        normals[:, j] = (-1) ** j * (np.linalg.det(sub) if p > 1 else 1.0)
    return normals


def affine_directions(sample, m: int | None = None, seed: int = 0) -> DirectionSet:
    """Draw ``m`` directions orthogonal to hyperplanes through p random points.

    The index draws depend only on ``seed`` and ``n``, so applying a
    nonsingular affine map to the sample maps every direction to the
    corresponding direction of the transformed sample. Default ``m = 250 p``.
    Degenerate draws (affinely dependent points) are redrawn, at most
    ``50 m`` attempts in total.
    """
    Y = as_data_matrix(sample)
    n, p = Y.shape
    if p == 1:
        return DirectionSet(np.array([[1.0], [-1.0]]), seed=seed)
    if n < p:
        raise ValueError(f"need at least p={p} points to draw directions, got {n}")
    if m is None:
        m = 250 * p
    rng = np.random.Generator(np.random.Philox(seed))
    scale = np.max(np.linalg.norm(Y - Y.mean(axis=0), axis=1))
    if scale == 0:
        raise ValueError("degenerate sample")
    found: list[np.ndarray] = []
    attempts = 0
    need = m
    while need > 0:
        if attempts >= 50 * m:
            raise ValueError("could not draw enough non-degenerate directions")
        batch = max(need, 8)
        idx = rng.random((batch, n)).argsort(axis=1)[:, :p]
        attempts += batch
        normals = _hyperplane_normals(Y[idx])
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-10 * scale ** (p - 1)
        good = normals[ok] / norms[ok, None]
        found.append(good[:need])
        need -= min(need, good.shape[0])
    return DirectionSet(np.vstack(found), seed=seed)


def exact_direction_set(x, sample) -> DirectionSet:
    """Directions attaining the exact halfspace depth of ``x`` (small n only).

    For every hyperplane through ``x`` and p-1 sample points both unit
    normals are returned, each tilted slightly so that the p-1 points on the
    hyperplane fall strictly on the negative side while no other point
    changes side. For samples in general position the minimum of the
    resulting univariate depths equals the exact halfspace depth.
    """
    Y = as_data_matrix(sample)
    n, p = Y.shape
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p:
        raise ValueError(f"point has dimension {x.shape[0]}, sample has {p}")
    if p == 1:
        return DirectionSet(np.array([[1.0], [-1.0]]))
    if n < p - 1:
        raise ValueError(f"need at least p-1={p - 1} sample points, got {n}")
    D = Y - x
    out = []
    for combo in itertools.combinations(range(n), p - 1):
        B = D[list(combo)]
        pts = np.vstack([np.zeros(p), B])[None]
        normal = _hyperplane_normals(pts)[0]
        nrm = np.linalg.norm(normal)
        if nrm <= 1e-12 * max(1.0, np.abs(B).max()) ** (p - 1):
            continue
        u = normal / nrm
        # tilt w: w.b_j = -1 for every boundary point, w orthogonal to u
        w = -np.linalg.pinv(B) @ np.ones(p - 1)
        others = np.setdiff1d(np.arange(n), combo)
        ud = D[others] @ u
        wd = D[others] @ w
        movable = (np.abs(ud) > 1e-12 * np.abs(D[others]).max(axis=1, initial=0.0)) & (wd != 0)
        ratio = np.abs(ud[movable]) / np.abs(wd[movable]) if movable.any() else np.array([np.inf])
        eps = min(0.5 * ratio.min(), 0.1 / np.linalg.norm(w))
        for sign in (1.0, -1.0):
            out.append(sign * u + eps * w)
    if not out:
        raise ValueError("no hyperplane through x and p-1 sample points")
    return DirectionSet(np.array(out))


def _snap_sorted(S: np.ndarray, tol: np.ndarray) -> np.ndarray:
    """Merge runs of row-sorted values closer than ``tol`` onto their first value."""
    n = S.shape[1]
    gaps = np.diff(S, axis=1) > tol[:, None]
    starts = np.where(np.concatenate([np.ones((S.shape[0], 1), bool), gaps], axis=1),
                      np.arange(n)[None, :], 0)
    starts = np.maximum.accumulate(starts, axis=1)
    return np.take_along_axis(S, starts, axis=1)


class ProjectedSample:
    """Sample projected on a direction set, sorted per direction.

    Counting how many projections lie on either side of a query is a
    binary search per direction; projections closer than a relative
    roundoff tolerance are treated as tied so that counts are stable under
    affine maps of the data.
    """

    def __init__(self, sample, dirs: DirectionSet):
        Y = as_data_matrix(sample)
        if dirs.dim != Y.shape[1]:
            raise ValueError(
                f"direction dimension {dirs.dim} does not match sample dimension {Y.shape[1]}")
        self.sample = Y
        self.dirs = dirs
        V = dirs.directions
        self.n = Y.shape[0]
        self.tol = _REL_TOL * (np.abs(V) @ np.abs(Y).T).max(axis=1) + 1e-300
        S = np.sort(Y @ V.T, axis=0).T  # (m, n)
        self.sorted = _snap_sorted(S, self.tol)
        m = S.shape[0]
        # one flat sorted key array: row r occupies [4r, 4r+1]; the map is
        # monotone per row so searches give the same counts as per-row searches
        self._lo = self.sorted[:, 0]
        spread = self.sorted[:, -1] - self._lo
        self._span = np.where(spread > 0, spread, 1.0)
        self._offset = 4.0 * np.arange(m)
        self._keys = (self._offset[:, None]
                      + (self.sorted - self._lo[:, None]) / self._span[:, None]).ravel()

    def project(self, points) -> np.ndarray:
        return np.atleast_2d(np.asarray(points, dtype=float)) @ self.dirs.directions.T

    def _key(self, Z: np.ndarray) -> np.ndarray:
        return self._offset + np.clip((Z - self._lo) / self._span, -1.0, 2.0)

    def side_counts(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Counts ``#{s <= z}`` and ``#{s >= z}`` for projected queries ``Z`` (k, m)."""
        k, m = Z.shape
        rows = np.arange(m)[None, :] * self.n
        hi = np.searchsorted(self._keys, self._key(Z + self.tol).ravel(), side="right")
        lo = np.searchsorted(self._keys, self._key(Z - self.tol).ravel(), side="left")
        le = hi.reshape(k, m) - rows
        ge = self.n - (lo.reshape(k, m) - rows)
        return le, ge

    def depth_counts(self, points) -> np.ndarray:
        """Minimal closed-halfspace count over the directions, per point."""
        Z = self.project(points)
        out = np.empty(Z.shape[0], dtype=np.int64)
        # chunk to bound memory of the (k, m) key arrays
        step = max(1, 2_000_000 // Z.shape[1])
        for s in range(0, Z.shape[0], step):
            le, ge = self.side_counts(Z[s:s + step])
            out[s:s + step] = np.minimum(le, ge).min(axis=1)
        return out

    def region_bounds(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-direction slab ``[lo, hi]`` of the region with depth count >= ``count``."""
        if not 1 <= count <= self.n:
            raise ValueError(f"depth count {count} outside 1..{self.n}")
        return self.sorted[:, count - 1], self.sorted[:, self.n - count]


def hd_univariate(x, sample) -> float:
    """Halfspace depth of a real number: ``min(#{y >= x}, #{y <= x}) / n``."""
    y = np.asarray(sample, dtype=float).reshape(-1)
    if y.size == 0:
        raise ValueError("empty sample")
    x = float(np.asarray(x).reshape(-1)[0])
    return min(np.count_nonzero(y >= x), np.count_nonzero(y <= x)) / y.size


def _hd2_count(x: np.ndarray, Y: np.ndarray, scale: float) -> int:
    d = Y - x
    coincident = np.all(np.abs(d) <= 1e-12 * scale, axis=1)
    c0 = int(coincident.sum())
    d = d[~coincident]
    if d.shape[0] == 0:
        return c0
    two_pi = 2 * np.pi
    ang = np.sort(np.mod(np.arctan2(d[:, 1], d[:, 0]), two_pi))
    brk = np.sort(np.mod(np.concatenate([ang, ang - np.pi]), two_pi))
    nxt = np.append(brk[1:], brk[0] + two_pi)
    gap = nxt - brk
    keep = gap > _ANGLE_TOL
    mids = np.mod(brk[keep] + gap[keep] / 2, two_pi)
    doubled = np.concatenate([ang, ang + two_pi])
    inside = np.searchsorted(doubled, mids + np.pi) - np.searchsorted(doubled, mids, side="right")
    return c0 + int(inside.min())


def hd_bivariate_exact(x, sample) -> float:
    """Exact bivariate halfspace depth in O(n log n).

    The count of a closed halfplane with boundary through ``x`` only
    changes at angles where the boundary passes a data point, so it is
    enough to evaluate it once inside every arc between those critical
    angles. Points equal to ``x`` lie in every halfplane.
    """
    Y = as_data_matrix(sample)
    if Y.shape[1] != 2:
        raise ValueError(f"hd_bivariate_exact needs p=2, got p={Y.shape[1]}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != 2:
        raise ValueError("point must be 2-dimensional")
    scale = max(np.abs(Y).max(), np.abs(x).max(), 1e-300)
    return _hd2_count(x, Y, scale) / Y.shape[0]


def hd_approx(x, sample, dirs: DirectionSet):
    """Halfspace depth restricted to the directions in ``dirs``.

    Accepts one point (returns a float) or an ``(k, p)`` array (returns an
    array). Never smaller than the exact depth.
    """
    proj = ProjectedSample(sample, dirs)
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != dirs.dim:
        raise ValueError(f"point dimension {pts.shape[-1]} does not match directions {dirs.dim}")
    depth = proj.depth_counts(np.atleast_2d(pts)) / proj.n
    return float(depth[0]) if pts.ndim == 1 else depth


def depth_counts(points, sample, dirs: DirectionSet | None = None,
                 projected: ProjectedSample | None = None) -> np.ndarray:
    """Integer halfspace depth counts: exact for p <= 2, ``dirs``-based above."""
    Y = as_data_matrix(sample)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = Y.shape[1]
    if p == 1:
        z = np.sort(Y[:, 0])
        q = pts[:, 0]
        return np.minimum(np.searchsorted(z, q, side="right"),
                          Y.shape[0] - np.searchsorted(z, q, side="left"))
    if p == 2:
        scale = max(np.abs(Y).max(), 1e-300)
        return np.array([_hd2_count(q, Y, max(scale, np.abs(q).max())) for q in pts])
    if projected is None:
        if dirs is None:
            raise ValueError("a direction set is required for p >= 3")
        projected = ProjectedSample(Y, dirs)
    return projected.depth_counts(pts)


def _check_nondegenerate(Y: np.ndarray) -> None:
    n, p = Y.shape
    if n < p + 1:
        raise ValueError(f"need n >= p+1 = {p + 1} points, got {n}")
    centered = Y - Y.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1e-300):
        raise ValueError("degenerate sample")


def _nelder_mead_max(f, simplex: np.ndarray, values: np.ndarray,
                     max_iter: int = 200, patience: int = 50, ftol: float = 1e-7):
    """Maximize ``f`` from an initial simplex; ties keep the earlier vertex.

    Every move is an affine combination of simplex vertices and decisions
    only compare function values, so the search commutes with affine maps.
    """
    best_val = values.max()
    stall = 0
    for _ in range(max_iter):
        order = np.argsort(-values, kind="stable")
        simplex, values = simplex[order], values[order]
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr > values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe > fr else (xr, fr)
        elif fr > values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr > values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = f(xc)
                accept = fc >= fr
            else:
                xc = centroid + 0.5 * (worst - centroid)
                fc = f(xc)
                accept = fc > values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [f(v) for v in simplex[1:]]
        if values.max() > best_val + ftol:
            best_val = values.max()
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    order = np.argsort(-values, kind="stable")
    return simplex[order[0]], values[order[0]]


def tukey_median(sample, dirs: DirectionSet | None = None,
                 projected: ProjectedSample | None = None,
                 counts: np.ndarray | None = None) -> np.ndarray:
    """Approximate halfspace median.

    Starts from the mean of the deepest sample points (or the lowest-index
    deepest point if the mean is less deep) and refines it with a
    Nelder-Mead search that maximizes depth. The result is never less deep
    than the deepest sample point. For p=1 this is the ordinary median.
    """
    Y = as_data_matrix(sample)
    n, p = Y.shape
    if p == 1:
        return np.array([np.median(Y[:, 0])])
    _check_nondegenerate(Y)
    if p >= 3 and projected is None:
        if dirs is None:
            raise ValueError("a direction set is required for p >= 3")
        projected = ProjectedSample(Y, dirs)

    def depth(q):
        return float(depth_counts(q[None, :], Y, projected=projected)[0])

    if counts is None:
        counts = depth_counts(Y, Y, projected=projected)
    kmax = counts.max()
    deepest = np.flatnonzero(counts == kmax)
    start = Y[deepest].mean(axis=0)
    f0 = depth(start)
    if f0 < kmax:
        start, f0 = Y[deepest[0]].copy(), float(kmax)

    # initial simplex: step a quarter of the way towards the deepest
    # points that keep the simplex non-degenerate
    vertices = [start]
    basis = np.empty((0, p))
    for i in np.argsort(-counts, kind="stable"):
        d = Y[i] - start
        trial = np.vstack([basis, d])
        if np.linalg.matrix_rank(trial, tol=1e-10 * max(np.abs(trial).max(), 1e-300)) > basis.shape[0]:
            basis = trial
            vertices.append(start + 0.25 * d)
            if basis.shape[0] == p:
                break
    if basis.shape[0] < p:
        return start
    simplex = np.array(vertices)
    values = np.array([f0] + [depth(v) for v in simplex[1:]])
    best, _ = _nelder_mead_max(depth, simplex, values)
    return best


@dataclass(frozen=True)
class BagGeometry:
    """Summary of the bag of a sample.

    Attributes
    ----------
    center : ndarray (p,)
        Tukey median.
    threshold : float
        Median depth of the sample points; the bag is the region with at
        least this depth.
    source_depths : ndarray (n,)
        Depth of each sample point.
    polygon : ndarray (k, 2) or None
        For p=2, counterclockwise vertices of the convex hull of the
        ``ceil(n/2)`` deepest points (all points tied at the cut included).
    """

    center: np.ndarray
    threshold: float
    source_depths: np.ndarray
    polygon: np.ndarray | None = None
    depth_count_threshold: int = field(default=0)

    @property
    def n(self) -> int:
        return self.source_depths.shape[0]


def compute_bag(sample, dirs: DirectionSet | None = None,
                projected: ProjectedSample | None = None,
                counts: np.ndarray | None = None,
                center: np.ndarray | None = None) -> BagGeometry:
    """Build the bag: Tukey median, median-depth threshold and, for p=2, the polygon."""
    Y = as_data_matrix(sample)
    n, p = Y.shape
    if p >= 2:
        _check_nondegenerate(Y)
    if p >= 3 and projected is None:
        if dirs is None:
            raise ValueError("a direction set is required for p >= 3")
        projected = ProjectedSample(Y, dirs)
    if counts is None:
        counts = depth_counts(Y, Y, projected=projected)
    if center is None:
        center = tukey_median(Y, dirs, projected=projected, counts=counts)
    med = float(np.median(counts))
    polygon = None
    if p == 2:
        half = ceil(n / 2)
        cut = np.sort(counts)[::-1][half - 1]
        members = Y[counts >= cut]
        try:
            hull = ConvexHull(members)
        except Exception as exc:  # qhull raises on flat point sets
            raise ValueError("degenerate bag: deepest half of the points is flat") from exc
        polygon = members[hull.vertices]
    return BagGeometry(
        center=np.asarray(center, dtype=float),
        threshold=med / n,
        source_depths=counts / n,
        polygon=polygon,
        depth_count_threshold=int(ceil(med - 1e-9)),
    )
