"""Hausdorff dimension estimates: the a_k/b_k Bowen ratio, covering bounds, box counting."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateInput, IoFailure, PreconditionError
from .ncifs import DIAM_X, log_radius_bound
from .seqcore import Kind

LOG2 = math.log(2.0)


def ab_terms(spec, k):
    """``(a_k, b_k)`` in nats.

    ``a_k = (m_k + 1) log 2 / k`` and
    ``b_k = a_k + (1 - 2**-(m_k+1)) log(|c_k| - 2) / k``.
    """
    m = spec.m_k(k)
    a = (m + 1) * LOG2 / k
    b = a + (1.0 - math.ldexp(1.0, -(m + 1))) * math.log(abs(spec.c_k(k)) - 2.0) / k
    return a, b


def _ratio(spec, k):
    a, b = ab_terms(spec, k)
    return a / b


def _trend_levels(K):
    ks = []
    k = 1
    while k < K:
        ks.append(k)
        k *= 2
    ks.append(K)
    return ks


def analytic_limits(spec):
    """Limits of a_k and b_k where they follow from the formula, else ``None``."""
    if spec.kind is Kind.HDMAX:
        return LOG2, LOG2
    if spec.kind is Kind.CONSTANT:
        return 0.0, 0.0
    return None


@dataclass(frozen=True)
class DimensionReport:
    K: int
    a_K: float
    b_K: float
    ratio: float
    trend: tuple[tuple[int, float], ...]
    cover_bound_sharp: float
    cover_bound_universal: float
    stabilized: bool
    a_limit: float | None
    b_limit: float | None

    @property
    def bowen_applicable(self):
        """Both limits known to exist and be positive (only decidable for formula specs)."""
        return self.a_limit is not None and self.a_limit > 0 and self.b_limit > 0

    def to_json(self):
        doc = asdict(self)
        doc["trend"] = [list(t) for t in self.trend]
        doc["bowen_applicable"] = self.bowen_applicable
        return doc


def bowen_estimate(spec, K):
    """Finite-horizon Bowen ratio ``a_K / b_K`` with convergence diagnostics.

    ``stabilized`` asks that a_k and b_k change by less than 1% relative
    between ``ceil(K/10)`` and ``K``.
    """
    if K < 1:
        raise PreconditionError("K", "must be >= 1")
    if spec.length is not None and K > spec.length:
        spec.c_k(K)  # raises HorizonExceeded
    a, b = ab_terms(spec, K)
    trend = tuple((k, _ratio(spec, k)) for k in _trend_levels(K))
    a0, b0 = ab_terms(spec, max(1, math.ceil(K / 10)))
    stabilized = K >= 10 and abs(a - a0) < 1e-2 * abs(a) and abs(b - b0) < 1e-2 * abs(b)
    _, sharp = cover_bound(spec, K)
    limits = analytic_limits(spec) or (None, None)
    return DimensionReport(K, a, b, a / b, trend, sharp, 4.0, bool(stabilized), *limits)


def cover_bound(spec, k):
    """``(4, 2**M_k * diam(X) * prod sup|phi_j'|)``: universal and sharp H^1 covering bounds."""
    # 2**(m_j+1) * sup_j = (|c_j| - 2)**(1/D_j - 1); summing these logs avoids
    # cancelling M_k log 2 against the log radius bound at large k
    terms = []
    for j in range(1, k + 1):
        inv_d = math.ldexp(1.0, -(spec.m_k(j) + 1))
        terms.append((inv_d - 1.0) * math.log(abs(spec.c_k(j)) - 2.0))
    return 4.0, DIAM_X * math.exp(math.fsum(terms))


def write_trend_csv(path, report):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "ratio"])
            for k, r in report.trend:
                w.writerow([k, repr(r)])
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


# ---------------------------------------------------------------------------
# box counting


@dataclass(frozen=True)
class BoxCountResult:
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    r_squared: float

    def to_json(self):
        return {"scales": list(self.scales), "counts": list(self.counts),
                "slope": self.slope, "r_squared": self.r_squared}


def _cell_keys(x, y, eps):
    ix = np.floor(x / eps).astype(np.int64)
    iy = np.floor(y / eps).astype(np.int64)
    return np.unique(np.stack([ix, iy], axis=1), axis=0)


def _count_cells(x, y, eps, threads):
    if threads <= 1 or x.size < 65536:
        return len(_cell_keys(x, y, eps))
    parts = np.array_split(np.arange(x.size), threads)
    with ThreadPoolExecutor(threads) as pool:
        keys = list(pool.map(lambda idx: _cell_keys(x[idx], y[idx], eps), parts))
    return len(np.unique(np.concatenate(keys), axis=0))


def box_count(points, scales, threads=1):
    """Count occupied origin-anchored grid cells at each scale and fit the log-log slope."""
    pts = np.asarray(points, dtype=complex).ravel()
    scales = [float(e) for e in scales]
    if len(scales) < 2:
        raise PreconditionError("scales", "need at least 2 scales")
    if not all(math.isfinite(e) and e > 0 for e in scales):
        raise PreconditionError("scales", "every scale must be finite and > 0")
    if len(set(scales)) < 2:
        raise PreconditionError("scales", "need at least 2 distinct scales")
    if pts.size < 2 or np.all(pts == pts[0]):
        raise DegenerateInput("box counting needs at least two distinct points")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("non-finite points")
    x, y = pts.real.copy(), pts.imag.copy()
    counts = [_count_cells(x, y, e, threads) for e in scales]
    lx = np.log(1.0 / np.array(scales))
    ly = np.log(np.array(counts, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return BoxCountResult(tuple(scales), tuple(int(n) for n in counts), float(slope), r2)


def cylinder_scales(spec, levels):
    """Level-k cylinder radius bounds for each k in ``levels``."""
    return [math.exp(log_radius_bound(spec, k)) for k in levels]


def default_scales(spec, k, n=8):
    """Geometric ladder between the level-ceil(k/2) and level-k radius bounds."""
    hi = math.exp(log_radius_bound(spec, math.ceil(k / 2)))
    lo = math.exp(log_radius_bound(spec, k))
    if hi == lo:
        hi = DIAM_X
    return list(np.geomspace(hi, lo, n))


def write_counts_csv(path, result):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "count"])
            for e, n in zip(result.scales, result.counts):
                w.writerow([repr(e), n])
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc

