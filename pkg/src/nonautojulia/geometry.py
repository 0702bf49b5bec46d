"""Uniform perfectness versus HNUP: classification, separating annuli and their checks.

At level k the round annulus ``A(sqrt(-c_k), 1, sqrt|c_k|)`` separates the two
components of ``P_{M_k}^{-1}(D(0, 2))``.  Pulled back by the ``2**m_k`` branches
of ``z**(2**m_k)`` on a slit plane (and then by every level-(k-1) word map) it
yields ``2**M_k`` conformal annuli of modulus ``log|c_k| / 2``, each around one
component of ``S_k`` and inside a component of ``S_{k-1}``, whose diameter is
at most ``4 eta**(k-1)``.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _planar
from .errors import BudgetExceeded, IoFailure, MeshTooCoarse, PreconditionError
from .ncifs import (DEFAULT_ANCHOR, ETA, apply_word, branch_images, circle,
                    count_words, word_of_index)
from .seqcore import Kind, checkpoint


class Verdict(str, enum.Enum):
    UNIFORMLY_PERFECT = "UniformlyPerfect"
    HNUP = "HNUP"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    sup_abs_c: float
    moduli_trend: tuple[tuple[int, float], ...]
    note: str = ""

    def to_json(self):
        return {"verdict": self.verdict.value, "sup_abs_c": self.sup_abs_c,
                "moduli_trend": [list(r) for r in self.moduli_trend], "note": self.note}


def classify(spec, horizon):
    """Verdict from the declared asymptotics of ``|c_k|``; explicit lists stay undetermined."""
    horizon = spec.clip_horizon(horizon)
    ks = sorted({1, horizon} | {2 ** i for i in range(int(math.log2(horizon)) + 1)})
    trend = tuple((k, math.log(abs(spec.c_k(k))) / 2) for k in ks)
    sup_c = max(abs(spec.c_k(k)) for k in range(1, horizon + 1))
    if spec.kind is Kind.EXPLICIT:
        return Classification(Verdict.UNDETERMINED, sup_c, trend,
                              "finite prefix - asymptotics undetermined")
    verdict = Verdict.UNIFORMLY_PERFECT if spec.declared_bounded else Verdict.HNUP
    return Classification(verdict, sup_c, trend, "from declared boundedness of |c_k|")


@dataclass(frozen=True)
class AnnulusCertificate:
    k: int
    modulus: float
    diam_bound: float
    count: int


def annulus_certificate(spec, k):
    return AnnulusCertificate(k, math.log(abs(spec.c_k(k))) / 2, 4.0 * ETA ** (k - 1),
                              1 << checkpoint(spec, k))


@dataclass(frozen=True)
class ThinnessTable:
    rows: tuple[AnnulusCertificate, ...]
    moduli_increasing: bool
    diam_decreasing: bool
    unbounded: bool

    @property
    def pointwise_thin_evidence(self):
        """Moduli growing while diameters shrink over the horizon (unbounded specs only)."""
        return self.unbounded and self.moduli_increasing and self.diam_decreasing

    def to_json(self):
        return {"rows": [[r.k, r.modulus, r.diam_bound, str(r.count)] for r in self.rows],
                "moduli_increasing": self.moduli_increasing,
                "diam_decreasing": self.diam_decreasing,
                "pointwise_thin_evidence": self.pointwise_thin_evidence}


def thinness_table(spec, k_max):
    rows = tuple(annulus_certificate(spec, k) for k in range(1, spec.clip_horizon(k_max) + 1))
    mods = [r.modulus for r in rows]
    diams = [r.diam_bound for r in rows]
    inc = all(b > a for a, b in zip(mods, mods[1:]))
    dec = all(b < a for a, b in zip(diams, diams[1:]))
    unbounded = spec.kind is not Kind.EXPLICIT and not spec.declared_bounded
    return ThinnessTable(rows, inc, dec, unbounded)


def write_thinness_csv(path, table):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "modulus", "diam_bound", "count"])
            for r in table.rows:
                w.writerow([r.k, repr(r.modulus), repr(r.diam_bound), r.count])
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


# ---------------------------------------------------------------------------
# numerical separation check


def _neg(c):
    return complex(-c.real + 0.0, -c.imag + 0.0)


def _windowed_root(u, n, center):
    """n-th root of ``u`` with argument taken in ``(center - pi, center + pi]``."""
    theta = np.arctan2(u.imag, u.real)
    theta = np.where(theta > center + np.pi, theta - 2 * np.pi, theta)
    theta = np.where(theta <= center - np.pi, theta + 2 * np.pi, theta)
    return np.abs(u) ** (1.0 / n) * np.exp(1j * theta / n)


def slit_ray_angle(c):
    """Direction of a ray from 0 avoiding both discs ``D(+-sqrt(-c), sqrt|c|)``.

    The discs touch at 0 with common tangent perpendicular to ``sqrt(-c)``.
    """
    s0 = np.sqrt(_neg(c))
    return float(np.angle(s0) + np.pi / 2)


def _slit_branches(z, n, rho):
    """All n branches of ``z**(1/n)`` on the plane slit along the ray at angle rho."""
    root = _windowed_root(z, n, rho - np.pi)
    rot = np.exp(2j * np.pi * np.arange(n) / n)
    return rot[:, None] * root[None, :]


def _outer_pullback(sign, s0, radius, mesh, n, rho):
    """Slit-plane n-th root branches of ``C(sign*s0, radius)``, a circle through 0 tangent to the slit.

    With ``t`` the angle from 0 along the circle, ``z = 2 r sin(t/2) e^{i(phi0 + pi/2 + t/2)}``;
    the argument relative to the slit is formed exactly so that points
    hugging the slit near 0 stay on their own side.  The mesh is refined near
    0 so that the roots are roughly evenly spaced there; 0 itself is excluded.
    """
    u = -1.0 + (np.arange(mesh) + 0.5) * 2.0 / mesh
    t = np.pi * np.sign(u) * np.abs(u) ** n
    mod = 2.0 * radius * np.abs(np.sin(t / 2))
    if sign > 0:
        rel = np.where(t > 0, -np.pi + t / 2, t / 2)
    else:
        rel = np.where(t > 0, -2 * np.pi + t / 2, -np.pi + t / 2)
    root = mod ** (1.0 / n) * np.exp(1j * (rho + rel) / n)
    rot = np.exp(2j * np.pi * np.arange(n) / n)
    return rot[:, None] * root[None, :]


@dataclass(frozen=True)
class SeparationResult:
    passed: bool
    min_clearance: float
    k: int
    details: dict = field(default_factory=dict, compare=False)

    def to_json(self):
        return {"k": self.k, "passed": self.passed, "min_clearance": self.min_clearance,
                "details": self.details}


def _containment_ok(centers, inner, outer):
    """Each annulus holds exactly one center inside its inner curve and no other inside its outer curve."""
    owner = []
    for g_in, g_out in zip(inner, outer):
        ins = _planar.points_in_polygon(centers, g_in)
        outs = _planar.points_in_polygon(centers, g_out)
        if ins.sum() != 1 or not np.array_equal(ins, outs):
            return False
        owner.append(int(np.flatnonzero(ins)[0]))
    return sorted(owner) == list(range(len(centers)))


def separation_check(spec, k, mesh=1024, anchor=DEFAULT_ANCHOR, prefix_budget=1024):
    """Numerically verify the separating-annulus picture at level k.

    (i) ``P_{M_k}^{-1}(C(0, 2))`` lies in ``D(sqrt(-c_k), 1) u D(-sqrt(-c_k), 1)``;
    (ii) the ``2**(m_k+1)`` pulled-back annuli each enclose exactly one level-k
    component at stage ``M_{k-1}``, lie in D(0, 2), and still enclose exactly
    one cylinder center after mapping by every level-(k-1) word (stage 0).

    Raises MeshTooCoarse when any clearance is below 10x the mesh spacing at
    the closest approach.
    """
    if mesh < 64:
        raise PreconditionError("mesh", f"must be >= 64, got {mesh}")
    c = spec.c_k(k)
    n = 1 << spec.m_k(k)
    s0 = complex(np.sqrt(_neg(c)))
    big_r = math.sqrt(abs(c))
    alpha = float(np.angle(_neg(c)))

    # (i) preimage of C(0, 2) under z**2 + c
    u = _windowed_root(circle(0, 2.0, mesh) - c, 2, alpha)
    comps = [u, -u]
    dist = np.minimum(np.abs(np.concatenate(comps) - s0), np.abs(np.concatenate(comps) + s0))
    inner_margin = float(1.0 - dist.max())
    spacing_i = max(_planar.closed_spacing(cc) for cc in comps)
    if inner_margin < 10 * spacing_i:
        if inner_margin < 0:
            return SeparationResult(False, inner_margin, k, {"inner_margin": inner_margin})
        raise MeshTooCoarse(inner_margin, spacing_i)

    # (ii) pulled-back annuli at stage M_{k-1}
    rho = slit_ray_angle(c)
    inner, outer = [], []
    for sign in (1, -1):
        ctr = sign * s0
        inner.extend(_slit_branches(circle(ctr, 1.0, mesh), n, rho))
        outer.extend(_outer_pullback(sign, s0, big_r, mesh, n, rho))
    inner, outer = np.array(inner), np.array(outer)
    outer_max = float(np.abs(outer).max())
    in_disc = outer_max <= 2.0 * (1 + 1e-12)

    comp_mesh = branch_images(spec, k, circle(0, 2.0, mesh))
    centers = branch_images(spec, k, np.array([complex(anchor)]))[:, 0]
    D = centers.size
    sep_stage = in_disc and _containment_ok(centers, inner, outer)
    if sep_stage:
        # whole components, not just their representative centers
        for g_in, g_out in zip(inner, outer):
            j = int(np.flatnonzero(_planar.points_in_polygon(centers, g_in))[0])
            if not _planar.points_in_polygon(comp_mesh[j], g_in).all():
                sep_stage = False
                break
            others = np.delete(comp_mesh, j, axis=0).ravel()
            if _planar.points_in_polygon(others, g_out).any():
                sep_stage = False
                break
    clearance_stage, spacing_stage = _planar.clearance_to_curves(
        comp_mesh.ravel(), np.concatenate([inner, outer]))
    if clearance_stage < 10 * spacing_stage:
        raise MeshTooCoarse(clearance_stage, spacing_stage)

    # stage 0: push everything through each level-(k-1) word map
    n_prefix = count_words(spec, k - 1)
    if n_prefix > prefix_budget:
        raise BudgetExceeded(n_prefix, prefix_budget)
    clearance0 = math.inf
    sep0 = True
    n_in, n_out = inner.shape[0], outer.shape[0]
    for idx in range(n_prefix):
        word = word_of_index(spec, k - 1, idx)
        mc = apply_word(spec, word, centers)
        mi = apply_word(spec, word, inner)
        mo = apply_word(spec, word, outer)
        if sep0 and not _containment_ok(mc, mi, mo):
            sep0 = False
        cl, sp = _planar.clearance_to_curves(mc, np.concatenate([mi, mo]))
        if cl < 10 * sp:
            raise MeshTooCoarse(cl, sp)
        clearance0 = min(clearance0, cl)
    assert n_in == n_out == D
    min_clear = min(inner_margin, clearance_stage, clearance0)
    passed = inner_margin > 0 and in_disc and sep_stage and sep0 and min_clear > 0
    details = {"inner_margin": inner_margin, "clearance_stage": clearance_stage,
               "clearance_stage0": clearance0, "outer_max_modulus": outer_max,
               "annuli_in_disc": in_disc, "separated_stage": sep_stage,
               "separated_stage0": sep0, "prefixes": n_prefix, "annuli": D,
               "slit_angle": rho}
    return SeparationResult(bool(passed), float(min_clear), k, details)
