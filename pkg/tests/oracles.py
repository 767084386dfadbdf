"""Slow reference implementations used only by the tests.

They share no code with the package: depth oracles work in exact integer
arithmetic on integer-valued data, the others are plain-Python loops.
"""

from __future__ import annotations

import itertools
import statistics
from fractions import Fraction


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def hd2_count(x, Y) -> int:
    """Exact closed-halfplane depth count of integer point ``x`` in integer sample ``Y``.

    The count as a function of the normal direction is constant between the
    directions perpendicular to some ``y_i - x``; the closed count at such a
    direction is the larger of its neighbours, so the minimum is attained
    just next to one. Each neighbour is reached by an infinitesimal rotation
    whose effect on tied points is decided by the rotated normal.
    """
    D = [(int(y[0]) - int(x[0]), int(y[1]) - int(x[1])) for y in Y]
    at_x = sum(1 for d in D if d == (0, 0))
    crit = []
    for d in D:
        if d != (0, 0):
            crit += [(-d[1], d[0]), (d[1], -d[0])]
    if not crit:
        return len(D)
    best = len(D)
    for c in crit:
        perp = (-c[1], c[0])
        for s in (1, -1):
            cnt = at_x
            for d in D:
                if d == (0, 0):
                    continue
                v = _dot(c, d)
                if v > 0 or (v == 0 and s * _dot(perp, d) > 0):
                    cnt += 1
            best = min(best, cnt)
    return best


def hd3_count(x, Y) -> int:
    """Exact closed-halfspace depth count in R^3 for integer data.

    The sphere of normals is cut into cells by the great circles
    ``u . d_j = 0``; every open cell has a vertex ``+-(d_i x d_j)``. Around
    each vertex the adjacent cells are enumerated with a two-level
    infinitesimal perturbation, first within the tangent plane towards one
    of the tied great circles, then sideways.
    """
    D = [tuple(int(a) - int(b) for a, b in zip(y, x)) for y in Y]
    at_x = sum(1 for d in D if d == (0, 0, 0))
    nz = [d for d in D if d != (0, 0, 0)]
    if not nz:
        return len(D)
    verts = set()
    for a, b in itertools.combinations(nz, 2):
        c = _cross(a, b)
        if c != (0, 0, 0):
            verts.add(c)
            verts.add(tuple(-v for v in c))
    if not verts:
        # all differences parallel: a normal orthogonal to them leaves every point on the plane
        d = nz[0]
        helper = (1, 0, 0) if _cross(d, (1, 0, 0)) != (0, 0, 0) else (0, 1, 0)
        verts = {_cross(d, helper), tuple(-v for v in _cross(d, helper))}
    best = len(D)
    for v in verts:
        tied = [d for d in nz if _dot(v, d) == 0]
        tangents = []
        for d in tied:
            t = _cross(v, d)
            tangents += [t, tuple(-c for c in t)]
        if not tangents:
            tangents = [(0, 0, 0)]
        for a in tangents:
            b = _cross(v, a)
            for s in (1, -1):
                cnt = at_x
                for d in nz:
                    key = (_sign(_dot(v, d)), _sign(_dot(a, d)), s * _sign(_dot(b, d)))
                    first = next((k for k in key if k != 0), 0)
                    if first > 0:
                        cnt += 1
                best = min(best, cnt)
    return best


def medcouple(z) -> float:
    """Medcouple by enumerating all pairs around the median (Brys et al. tie kernel)."""
    z = sorted(Fraction(v) for v in z)
    m = statistics.median(z)
    lower = [v for v in z if v <= m]
    upper = [v for v in z if v >= m]
    # ties at the median, indexed from the top of the lower half
    ties = sum(1 for v in z if v == m)
    values = []
    lower_desc = sorted(lower, reverse=True)
    for i, zi in enumerate(lower_desc, start=1):
        for j, zj in enumerate(upper, start=1):
            if zi == m and zj == m:
                values.append(Fraction(_sign(ties - 1 - (i - 1) - (j - 1))))
            else:
                values.append(((zj - m) - (m - zi)) / (zj - zi))
    return float(statistics.median(values))


def quantile7(z, q: float) -> float:
    z = sorted(z)
    h = (len(z) - 1) * q
    lo = int(h)
    hi = min(lo + 1, len(z) - 1)
    return z[lo] + (h - lo) * (z[hi] - z[lo])


def ao1(z: float, sample) -> float:
    mc = medcouple(sample)
    if mc < 0:
        return ao1(-z, [-v for v in sample])
    import math
    med = statistics.median(sample)
    q1, q3 = quantile7(sample, 0.25), quantile7(sample, 0.75)
    iqr = q3 - q1
    w1 = q1 - 1.5 * math.exp(-4 * mc) * iqr
    w2 = q3 + 1.5 * math.exp(3 * mc) * iqr
    return (z - med) / (w2 - med) if z > med else (med - z) / (med - w1)


def loo_errors(points, labels, k_values):
    """Leave-one-out kNN error count for every k, by explicit loops.

    Neighbours are ordered by distance, then training index; vote ties go
    to the label with the smallest summed distance, then the smaller label.
    """
    n = len(points)
    out = {}
    for k in k_values:
        errors = 0
        for i in range(n):
            dists = []
            for j in range(n):
                if j != i:
                    d = sum((a - b) ** 2 for a, b in zip(points[i], points[j])) ** 0.5
                    dists.append((d, j))
            dists.sort()
            votes, summed = {}, {}
            for d, j in dists[:k]:
                votes[labels[j]] = votes.get(labels[j], 0) + 1
                summed[labels[j]] = summed.get(labels[j], 0.0) + d
            pred = min(votes, key=lambda lab: (-votes[lab], summed[lab], lab))
            errors += pred != labels[i]
        out[k] = errors
    return out
