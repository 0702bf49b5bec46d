"""Inverse branches of the window maps as a non-autonomous conformal IFS on X = D(0, 2).

At level k the system consists of the ``D = 2**(m_k+1)`` inverse branches of
``w -> w**D + c_k``, each defined on D(0, 4).  Branch ``j`` is the root whose
argument is taken in the window ``(arg(-c_k) - pi, arg(-c_k) + pi]``, rotated
by ``exp(2 pi i j / D)``.  Words are read left to right as level 1, 2, ...;
``phi_w = phi_{w_1} o ... o phi_{w_k}`` is applied right to left.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _planar
from .errors import (BranchIndexOutOfRange, BudgetExceeded, DomainViolation, IoFailure,
                     PreconditionError)
from .seqcore import checkpoint

#: diameter of X = closed disc of radius 2
DIAM_X = 4.0
#: universal contraction bound 2**(-11/4)
ETA = 2.0 ** (-11 / 4)
DEFAULT_ANCHOR = 2 + 0j
DEFAULT_BUDGET = 1 << 22
BRANCH_DOMAIN_RADIUS = 4.0


def _cut_center(c):
    # + 0.0 drops the sign of a negative zero so that real c > 0 gives pi, not -pi
    return math.atan2(-c.imag + 0.0, -c.real)


def _rotations(D):
    j = np.arange(D)
    return np.exp(2j * np.pi * j / D)


def branch_apply(spec, k, j, w):
    """Image of ``w`` under the j-th inverse branch of the level-k window map."""
    w = complex(w)
    if not abs(w) < BRANCH_DOMAIN_RADIUS:
        raise DomainViolation(f"|w| = {abs(w):g} outside D(0, 4)")
    D = spec.degree(k)
    if not 0 <= j < D:
        raise BranchIndexOutOfRange(f"branch {j} not in [0, {D}) at level {k}")
    c = spec.c_k(k)
    u = w - c
    alpha = _cut_center(c)
    theta = math.atan2(u.imag, u.real)
    if theta > alpha + math.pi:
        theta -= 2 * math.pi
    elif theta <= alpha - math.pi:
        theta += 2 * math.pi
    root = cmath.rect(math.exp(math.log(abs(u)) / D), theta / D)
    return root * cmath.exp(2j * math.pi * j / D)


def principal_roots(spec, k, w):
    """Branch-0 images of an array ``w`` (no domain check)."""
    w = np.asarray(w, dtype=complex)
    D = spec.degree(k)
    c = spec.c_k(k)
    u = w - c
    alpha = _cut_center(c)
    theta = np.arctan2(u.imag, u.real)
    theta = np.where(theta > alpha + np.pi, theta - 2 * np.pi, theta)
    theta = np.where(theta <= alpha - np.pi, theta + 2 * np.pi, theta)
    return np.exp(np.log(np.abs(u)) / D) * np.exp(1j * theta / D)


def branch_images(spec, k, w):
    """All branch images of ``w``; shape ``(D,) + w.shape``, indexed by branch."""
    w = np.asarray(w, dtype=complex)
    if np.any(~(np.abs(w) < BRANCH_DOMAIN_RADIUS)):
        raise DomainViolation("input outside D(0, 4)")
    root = principal_roots(spec, k, w)
    rot = _rotations(spec.degree(k)).reshape((-1,) + (1,) * w.ndim)
    return rot * root


def branch_derivative(spec, k, w):
    """Closed-form ``|phi'(w)| = |w - c_k|**(1/D - 1) / D``, same for every branch."""
    D = spec.degree(k)
    return np.abs(np.asarray(w) - spec.c_k(k)) ** (1.0 / D - 1.0) / D


def log_branch_deriv_sup(spec, k):
    e = spec.m_k(k) + 1
    return (math.ldexp(1.0, -e) - 1.0) * math.log(abs(spec.c_k(k)) - 2.0) - e * math.log(2.0)


def branch_deriv_sup(spec, k):
    """Sup of ``|phi'|`` over X: ``(|c_k| - 2)**(1/D - 1) / D``."""
    return math.exp(log_branch_deriv_sup(spec, k))


def log_radius_bound(spec, k):
    return math.log(DIAM_X) + math.fsum(log_branch_deriv_sup(spec, j) for j in range(1, k + 1))


def radius_bound(spec, k):
    """``diam(X) * prod_{j<=k} sup|phi_j'|`` bounding every level-k cylinder."""
    return math.exp(log_radius_bound(spec, k))


# ---------------------------------------------------------------------------
# words and cylinders


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...] = ()

    def __len__(self):
        return len(self.letters)

    def check(self, spec):
        for i, j in enumerate(self.letters, start=1):
            D = spec.degree(i)
            if not 0 <= j < D:
                raise BranchIndexOutOfRange(f"letter {j} at position {i} not in [0, {D})")
        return self

    def to_json(self):
        return list(self.letters)

    @classmethod
    def from_json(cls, doc):
        return cls(tuple(int(j) for j in doc))

    def __str__(self):
        return "-".join(map(str, self.letters))


def count_words(spec, k):
    """``#I^k = 2**M_k``."""
    return 1 << checkpoint(spec, k)


def word_of_index(spec, k, index):
    """Inverse of lexicographic numbering of level-k words."""
    letters = []
    for level in range(k, 0, -1):
        index, j = divmod(index, spec.degree(level))
        letters.append(j)
    return Word(tuple(reversed(letters)))


@dataclass(frozen=True)
class Cylinder:
    word: Word
    center: complex
    radius_bound: float


def apply_word(spec, word, w):
    """``phi_word(w)`` for an array (or scalar) ``w``."""
    z = np.asarray(w, dtype=complex)
    rot_cache = {}
    for i in range(len(word) - 1, -1, -1):
        level = i + 1
        D = spec.degree(level)
        if D not in rot_cache:
            rot_cache[D] = _rotations(D)
        if np.any(~(np.abs(z) < BRANCH_DOMAIN_RADIUS)):
            raise DomainViolation("input outside D(0, 4)")
        z = principal_roots(spec, level, z) * rot_cache[D][word.letters[i]]
    return z


def cylinder(spec, word, anchor=DEFAULT_ANCHOR):
    if not abs(anchor) <= 2.0:
        raise DomainViolation(f"anchor {anchor} outside X")
    word.check(spec)
    z = complex(anchor)
    for i in range(len(word) - 1, -1, -1):
        z = branch_apply(spec, i + 1, word.letters[i], z)
    return Cylinder(word, z, radius_bound(spec, len(word)))


def _descend(spec, k, lo, pts):
    for level in range(k, lo - 1, -1):
        pts = branch_images(spec, level, pts).ravel()
    return pts


def iter_limit_points(spec, k, anchor=DEFAULT_ANCHOR, budget=DEFAULT_BUDGET):
    """Yield ``(first_letter, points)`` partitions in lexicographic order.

    Each partition is independently deterministic and may be consumed in
    parallel.  For ``k = 0`` a single partition ``(None, [anchor])`` is yielded.
    """
    total = count_words(spec, k)
    if total > budget:
        raise BudgetExceeded(total, budget)
    if not abs(anchor) <= 2.0:
        raise DomainViolation(f"anchor {anchor} outside X")
    base = np.array([complex(anchor)])
    if k == 0:
        yield None, base
        return
    inner = _descend(spec, k, 2, base)
    root = principal_roots(spec, 1, inner)
    for j, rot in enumerate(_rotations(spec.degree(1))):
        yield j, rot * root


def limit_points(spec, k, anchor=DEFAULT_ANCHOR, budget=DEFAULT_BUDGET):
    """Centers of all ``2**M_k`` level-k cylinders, lexicographic by word."""
    return np.concatenate([p for _, p in iter_limit_points(spec, k, anchor, budget)])


def write_limit_points_csv(path, spec, k, anchor=DEFAULT_ANCHOR, budget=DEFAULT_BUDGET):
    rb = radius_bound(spec, k)
    pts = limit_points(spec, k, anchor, budget)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["word", "re", "im", "radius_bound"])
            for i, z in enumerate(pts):
                w.writerow([str(word_of_index(spec, k, i)), repr(float(z.real)),
                            repr(float(z.imag)), repr(rb)])
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
    return len(pts)


# ---------------------------------------------------------------------------
# system verification


def eta_epsilon(eps):
    """Contraction bound on D(0, 2 + eps) for the worst case m_k = 1."""
    if not 0 < eps <= 1:
        raise PreconditionError("epsilon", f"must satisfy 0 < epsilon <= 1, got {eps}")
    value = 0.25 * (2.0 - eps) ** (-0.75)
    if not value < 1:
        raise PreconditionError("epsilon", f"eta_epsilon = {value} must be < 1")
    return value


@dataclass(frozen=True)
class SystemCheck:
    open_set_ok: bool
    conformality_ok: bool
    contraction_ok: bool
    balanced_ok: bool
    epsilon: float
    eta_eps: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def all_ok(self):
        return self.open_set_ok and self.conformality_ok and self.contraction_ok and self.balanced_ok

    def to_json(self):
        return {"open_set_ok": self.open_set_ok, "conformality_ok": self.conformality_ok,
                "contraction_ok": self.contraction_ok, "balanced_ok": self.balanced_ok,
                "all_ok": self.all_ok, "epsilon": self.epsilon, "eta_eps": self.eta_eps,
                "details": self.details}


def circle(center, radius, n, offset=0.0):
    t = 2 * np.pi * (np.arange(n) + offset) / n
    return center + radius * np.exp(1j * t)


def disc_samples(radius, n):
    """Deterministic polar grid of about ``n`` points in the open disc."""
    n_theta = 64
    n_r = max(n // n_theta, 1)
    r = radius * (1 - 1e-12) * np.sqrt((np.arange(n_r) + 1) / n_r)
    t = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    return (r[:, None] * np.exp(1j * t[None, :])).ravel()


def sampled_deriv_sup(spec, k, j, points, h=1e-6):
    """Max over ``points`` of the central-difference ``|phi_j'|`` (independent of the closed form)."""
    points = np.asarray(points, dtype=complex)
    D = spec.degree(k)
    rot = np.exp(2j * np.pi * j / D)
    fp = principal_roots(spec, k, points + h) * rot
    fm = principal_roots(spec, k, points - h) * rot
    return float(np.max(np.abs(fp - fm) / (2 * h)))


def open_set_clearance(spec, k, mesh=4096):
    """Clearance and mesh spacing between the images of C(0, 2) under the level-k branches.

    Returns ``(clearance, spacing, nested)``; the level-1 images are pairwise
    disjoint when ``clearance > spacing`` and no image curve encloses another.
    """
    images = branch_images(spec, k, circle(0, 2.0, mesh))
    D = images.shape[0]
    labels = np.repeat(np.arange(D), mesh)
    clearance = _planar.cross_label_clearance(images.ravel(), labels)
    spacing = max(_planar.closed_spacing(row) for row in images)
    reps = images[:, 0]
    nested = False
    for a in range(D):
        inside = _planar.points_in_polygon(np.delete(reps, a), images[a])
        if inside.any():
            nested = True
            break
    return clearance, spacing, nested


def distortion_ratio(spec, length, n_words=16, n_points=256, eps=0.5, seed=0):
    """max/min of ``|phi_w'|`` over sample points of V, maximized over sampled words."""
    rng = np.random.default_rng(seed)
    pts = disc_samples(2.0 + eps, n_points)
    worst = 1.0
    for _ in range(n_words):
        letters = tuple(int(rng.integers(spec.degree(i))) for i in range(1, length + 1))
        z = pts.copy()
        logd = np.zeros(z.shape)
        for i in range(length, 0, -1):
            logd += np.log(branch_derivative(spec, i, z))
            z = principal_roots(spec, i, z) * np.exp(2j * np.pi * letters[i - 1] / spec.degree(i))
        worst = max(worst, float(np.exp(logd.max() - logd.min())))
    return worst


def verify_system(spec, k_max, eps=0.5, samples=4096, mesh=4096):
    """Numerically check the open set, conformality, contraction and balance conditions.

    Distortion is reported in ``details`` (no threshold is applied).
    """
    eta_eps = eta_epsilon(eps)
    r_v = 2.0 + eps
    v_pts = disc_samples(r_v, samples)
    x_bdry = circle(0, 2.0, mesh)
    contraction = conformality = open_set = balanced = True
    levels = []
    for k in range(1, k_max + 1):
        sup = branch_deriv_sup(spec, k)
        ok_c = sup <= ETA
        imgs = branch_images(spec, k, v_pts)
        max_mod = float(np.abs(imgs).max())
        ok_conf = max_mod <= 2.0 + eta_eps * eps
        clearance, spacing, nested = open_set_clearance(spec, k, mesh)
        ok_open = clearance > spacing and not nested
        # |phi_j'| = |phi_j| / (D |w - c|) measured from the computed branch images
        D = spec.degree(k)
        bimg = branch_images(spec, k, x_bdry)
        dsup = (np.abs(bimg) / (D * np.abs(x_bdry - spec.c_k(k)))).max(axis=1)
        spread = float((dsup.max() - dsup.min()) / dsup.max())
        ok_bal = spread <= 1e-9
        contraction &= ok_c
        conformality &= ok_conf
        open_set &= ok_open
        balanced &= ok_bal
        levels.append({"k": k, "deriv_sup": sup, "max_image_modulus": max_mod,
                       "clearance": clearance, "mesh_spacing": spacing, "nested": nested,
                       "balance_spread": spread})
    distortion = {str(L): distortion_ratio(spec, L, eps=eps) for L in range(1, min(k_max, 3) + 1)}
    return SystemCheck(bool(open_set), bool(conformality), bool(contraction), bool(balanced),
                       eps, eta_eps, {"levels": levels, "distortion": distortion})
