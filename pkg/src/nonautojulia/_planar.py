"""Small planar helpers on complex point arrays (polygons, mesh spacing, clearances)."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def as_xy(z):
    z = np.asarray(z, dtype=complex).ravel()
    return np.column_stack([z.real, z.imag])


def closed_spacing(curve):
    """Largest gap between consecutive vertices of a closed polyline."""
    curve = np.asarray(curve, dtype=complex)
    return float(np.max(np.abs(np.diff(np.append(curve, curve[0])))))


def points_in_polygon(points, poly, chunk=4096):
    """Even-odd rule containment of ``points`` in the closed polygon ``poly``."""
    points = np.asarray(points, dtype=complex).ravel()
    poly = np.asarray(poly, dtype=complex).ravel()
    x1, y1 = poly.real, poly.imag
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    out = np.zeros(points.size, dtype=bool)
    lo = np.array([x1.min(), y1.min()])
    hi = np.array([x1.max(), y1.max()])
    cand = np.flatnonzero((points.real >= lo[0]) & (points.real <= hi[0])
                          & (points.imag >= lo[1]) & (points.imag <= hi[1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, cand.size, chunk):
            idx = cand[s:s + chunk]
            px = points.real[idx, None]
            py = points.imag[idx, None]
            straddle = (y1 > py) != (y2 > py)
            xint = (x2 - x1) * (py - y1) / (y2 - y1) + x1
            out[idx] = (np.count_nonzero(straddle & (px < xint), axis=1) % 2) == 1
    return out


def cross_label_clearance(points, labels, k_nn=8):
    """Lower bound on the distance between points carrying different labels.

    Each point's ``k_nn`` nearest neighbours are inspected; if none carries a
    different label, the distance to the farthest of them is a valid lower
    bound for that point.
    """
    xy = as_xy(points)
    labels = np.asarray(labels).ravel()
    k_nn = min(k_nn, len(xy))
    tree = cKDTree(xy)
    dist, idx = tree.query(xy, k=k_nn)
    other = labels[idx] != labels[:, None]
    far = np.where(other, dist, np.inf).min(axis=1)
    bound = np.where(np.isfinite(far), far, dist[:, -1])
    return float(bound.min())


def min_distance(a, b):
    """Minimum Euclidean distance between two point sets."""
    tree = cKDTree(as_xy(b))
    d, _ = tree.query(as_xy(a), k=1)
    return float(d.min())


def clearance_to_curves(points, curves):
    """Distance from ``points`` to the vertices of closed polylines, with the local spacing there.

    ``curves`` has shape ``(n_curves, n_vertices)``.  The spacing is the longer
    of the two edges meeting at the closest vertex.
    """
    curves = np.asarray(curves, dtype=complex)
    n_v = curves.shape[-1]
    flat = curves.reshape(-1, n_v)
    tree = cKDTree(as_xy(flat))
    d, idx = tree.query(as_xy(points), k=1)
    i = int(np.argmin(d))
    row, col = divmod(int(idx[i]), n_v)
    ring = flat[row]
    local = max(abs(ring[col] - ring[col - 1]), abs(ring[(col + 1) % n_v] - ring[col]))
    return float(d[i]), float(local)
