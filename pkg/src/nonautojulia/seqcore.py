"""Parameter sequences and the non-autonomous quadratic iteration they define.

A parameter sequence ``(c_k, m_k)`` defines the polynomial steps

    P_m(z) = z**2 + c_k   if m == M_k for some k >= 1
    P_m(z) = z**2         otherwise

with checkpoints ``M_0 = 0`` and ``M_k = sum_{j<=k} (m_j + 1)``.  Between two
checkpoints the composition collapses to ``z**(2**(m_k+1)) + c_k``.

All squaring is done on explicit real and imaginary parts, never through
``complex.__mul__`` or a power call, so the scalar path here and the numpy
kernels in :mod:`nonautojulia.render` perform the same floating point
operations in the same order.
"""
from __future__ import annotations

import cmath
import enum
import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonExceeded, NonfiniteParameter, ZeroLengthSpec, ConfigParseError

#: reported magnitudes are capped here; anything larger is treated as infinity
MAGNITUDE_CAP = 1e300
ESCAPE_RADIUS = 2.0


class Kind(str, enum.Enum):
    EXPLICIT = "explicit"
    HDMAX = "hdmax"
    CONSTANT = "constant"


@dataclass(frozen=True)
class ParamSpec:
    """Data ``(c_k, m_k)`` for k = 1, 2, ... plus the declared asymptotics of ``|c_k|``.

    Use the :meth:`hdmax`, :meth:`constant` and :meth:`explicit` constructors.
    Construction only rejects malformed data (non-finite ``c``, ``m < 1``,
    empty lists); the admissibility inequalities are checked by
    :func:`validate` so that violations can be reported rather than raised.
    """

    kind: Kind
    c: complex = 0j
    m: int = 0
    entries: tuple[tuple[complex, int], ...] = ()
    declared_bounded: bool = False
    horizon_default: int = 6

    def __post_init__(self):
        if self.horizon_default < 1:
            raise ValueError("horizon_default must be >= 1")
        if self.kind is Kind.EXPLICIT:
            if not self.entries:
                raise ZeroLengthSpec("explicit parameter list is empty")
            pairs = self.entries
        elif self.kind is Kind.CONSTANT:
            if not self.declared_bounded:
                raise ValueError("a constant sequence is bounded")
            pairs = ((self.c, self.m),)
        else:
            if self.declared_bounded:
                raise ValueError("c_k = k + 4 is unbounded")
            pairs = ()
        for i, (c, m) in enumerate(pairs, start=1):
            if not cmath.isfinite(c):
                raise NonfiniteParameter(f"c_{i} = {c!r} is not finite")
            if isinstance(m, bool) or int(m) != m or m < 1:
                raise ValueError(f"m_{i} = {m!r} must be a positive integer")

    # constructors -------------------------------------------------------

    @classmethod
    def hdmax(cls, horizon_default=6):
        """The sequence ``c_k = k + 4``, ``m_k = k + 1`` (unbounded)."""
        return cls(Kind.HDMAX, declared_bounded=False, horizon_default=horizon_default)

    @classmethod
    def constant(cls, c, m, horizon_default=6):
        return cls(Kind.CONSTANT, c=complex(c), m=int(m), declared_bounded=True,
                   horizon_default=horizon_default)

    @classmethod
    def explicit(cls, pairs, declared_bounded=False, horizon_default=None):
        entries = tuple((complex(c), int(m)) for c, m in pairs)
        if horizon_default is None:
            horizon_default = max(len(entries), 1)
        return cls(Kind.EXPLICIT, entries=entries, declared_bounded=bool(declared_bounded),
                   horizon_default=horizon_default)

    # accessors ----------------------------------------------------------

    @property
    def length(self):
        """Number of realized levels, ``None`` for the infinite formula kinds."""
        return len(self.entries) if self.kind is Kind.EXPLICIT else None

    def _check_level(self, k):
        if k < 1:
            raise ValueError(f"level k = {k} must be >= 1")
        if self.kind is Kind.EXPLICIT and k > len(self.entries):
            raise HorizonExceeded(f"level {k} beyond explicit list of length {len(self.entries)}")

    def c_k(self, k):
        self._check_level(k)
        if self.kind is Kind.HDMAX:
            return complex(k + 4)
        if self.kind is Kind.CONSTANT:
            return self.c
        return self.entries[k - 1][0]

    def m_k(self, k):
        self._check_level(k)
        if self.kind is Kind.HDMAX:
            return k + 1
        if self.kind is Kind.CONSTANT:
            return self.m
        return self.entries[k - 1][1]

    def degree(self, k):
        """Number of inverse branches at level k, ``2**(m_k+1)``."""
        return 1 << (self.m_k(k) + 1)

    def clip_horizon(self, K):
        return K if self.length is None else min(K, self.length)

    # serialization ------------------------------------------------------

    def to_json(self):
        doc = {"kind": self.kind.value, "declared_bounded": self.declared_bounded,
               "horizon_default": self.horizon_default}
        if self.kind is Kind.CONSTANT:
            doc["c"] = [self.c.real, self.c.imag]
            doc["m"] = self.m
        elif self.kind is Kind.EXPLICIT:
            doc["list"] = [[c.real, c.imag, m] for c, m in self.entries]
        return doc

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            kind = Kind(doc["kind"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigParseError(f"spec.kind: expected one of hdmax/constant/explicit ({exc})")
        horizon = doc.get("horizon_default")
        try:
            if kind is Kind.HDMAX:
                if doc.get("declared_bounded", False):
                    raise ConfigParseError("spec.declared_bounded: hdmax is unbounded")
                return cls.hdmax(horizon or 6)
            if kind is Kind.CONSTANT:
                if not doc.get("declared_bounded", True):
                    raise ConfigParseError("spec.declared_bounded: constant is bounded")
                re, im = doc["c"]
                return cls.constant(complex(re, im), doc["m"], horizon or 6)
            rows = doc["list"]
            return cls.explicit([(complex(re, im), m) for re, im, m in rows],
                                declared_bounded=doc.get("declared_bounded", False),
                                horizon_default=horizon)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (ConfigParseError, NonfiniteParameter, ZeroLengthSpec)):
                raise
            raise ConfigParseError(f"spec ({kind.value}): {exc}") from exc

    def describe(self):
        if self.kind is Kind.HDMAX:
            return "hdmax (c_k = k+4, m_k = k+1)"
        if self.kind is Kind.CONSTANT:
            return f"constant (c = {self.c}, m = {self.m})"
        return f"explicit ({len(self.entries)} levels)"


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class LevelCheck:
    k: int
    c: complex
    m: int
    modulus_ok: bool
    strong_ok: bool
    weak_ok: bool


@dataclass(frozen=True)
class ValidationReport:
    levels: tuple[LevelCheck, ...]
    allow_weak: bool = False

    @property
    def passed(self):
        return all(lv.modulus_ok and lv.weak_ok and (lv.strong_ok or self.allow_weak)
                   for lv in self.levels)

    def violations(self):
        out = []
        for lv in self.levels:
            if not lv.modulus_ok:
                out.append(f"k={lv.k}: |c_k| > 4 violated (|c_k| = {abs(lv.c):g})")
            if not lv.weak_ok:
                out.append(f"k={lv.k}: 2^(2^m_k) > sqrt|c_k| + 1 violated")
            if not lv.strong_ok and not self.allow_weak:
                out.append(f"k={lv.k}: 2^(2^m_k) >= 2 sqrt|c_k| violated")
        return out

    def to_json(self):
        return {
            "passed": self.passed,
            "allow_weak": self.allow_weak,
            "violations": self.violations(),
            "levels": [{"k": lv.k, "c": [lv.c.real, lv.c.imag], "m": lv.m,
                        "modulus_ok": lv.modulus_ok, "strong_ok": lv.strong_ok,
                        "weak_ok": lv.weak_ok} for lv in self.levels],
        }


def _inequalities(c, m):
    a = abs(c)
    if m >= 10:
        # 2**(2**m) >= 2**1024 exceeds every finite 2*sqrt|c|
        return True, True
    lhs = 2.0 ** (1 << m)
    return lhs >= 2.0 * math.sqrt(a), lhs > math.sqrt(a) + 1.0


def validate(spec, K, allow_weak=False):
    """Check ``|c_k| > 4`` and both invariance inequalities for k = 1..K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    K = spec.clip_horizon(K)
    levels = []
    for k in range(1, K + 1):
        c, m = spec.c_k(k), spec.m_k(k)
        if not cmath.isfinite(c):
            raise NonfiniteParameter(f"c_{k} = {c!r} is not finite")
        strong, weak = _inequalities(c, m)
        levels.append(LevelCheck(k, c, m, abs(c) > 4.0, strong, weak))
    return ValidationReport(tuple(levels), allow_weak)


# ---------------------------------------------------------------------------
# checkpoints and steps


def checkpoint(spec, k):
    """``M_k = sum_{j=1..k} (m_j + 1)``, with ``M_0 = 0``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 0
    if spec.kind is Kind.HDMAX:
        return k * (k + 1) // 2 + 2 * k
    if spec.kind is Kind.CONSTANT:
        return k * (spec.m + 1)
    if k > len(spec.entries):
        raise HorizonExceeded(f"checkpoint {k} beyond explicit list of length {len(spec.entries)}")
    return sum(m + 1 for _, m in spec.entries[:k])


@functools.lru_cache(maxsize=256)
def checkpoints(spec, K):
    """Tuple ``(M_0, ..., M_K)``."""
    out = [0]
    for k in range(1, K + 1):
        out.append(out[-1] + spec.m_k(k) + 1)
    return tuple(out)


def level_of_stage(spec, stage):
    """Return ``(k, is_checkpoint)`` where ``M_{k-1} < stage <= M_k``.

    For ``stage == 0`` this is ``(0, True)``.
    """
    if stage < 0:
        raise ValueError("stage must be >= 0")
    if stage == 0:
        return 0, True
    k, M = 0, 0
    while M < stage:
        k += 1
        M += spec.m_k(k) + 1
    return k, M == stage


@dataclass(frozen=True)
class Step:
    """The polynomial applied at one stage: ``z**2`` or ``z**2 + c``."""

    c: complex | None = None

    @property
    def is_square(self):
        return self.c is None

    def __call__(self, z):
        x, y = z.real, z.imag
        x, y = x * x - y * y, 2.0 * x * y
        if self.c is not None:
            x, y = x + self.c.real, y + self.c.imag
        return complex(x, y)

    def derivative(self, z):
        return 2 * z


SQUARE = Step()


def step(spec, stage):
    """The polynomial ``P_stage`` (stages start at 1)."""
    if stage < 1:
        raise ValueError("stages are numbered from 1")
    k, at_checkpoint = level_of_stage(spec, stage)
    return Step(spec.c_k(k)) if at_checkpoint else SQUARE


# ---------------------------------------------------------------------------
# scalar iteration


def _square_n(x, y, n):
    """Square ``x + iy`` n times; returns ``(x, y, overflowed)``."""
    for _ in range(n):
        x, y = x * x - y * y, 2.0 * x * y
        if not (abs(x) <= MAGNITUDE_CAP and abs(y) <= MAGNITUDE_CAP):
            return math.inf, 0.0, True
    return x, y, False


def _escaped(x, y):
    # also true for nan
    return not (x * x + y * y <= ESCAPE_RADIUS * ESCAPE_RADIUS)


def window_apply(spec, k, z):
    """``Q_{M_{k-1}, M_k}(z) = z**(2**(m_k+1)) + c_k`` by repeated squaring.

    Overflowing orbits return ``complex(inf, 0)``; use :func:`math.isinf` on
    the real part (or :func:`is_overflow`) to detect it.
    """
    c = spec.c_k(k)
    x, y, over = _square_n(float(z.real), float(z.imag), spec.m_k(k) + 1)
    if over:
        return complex(math.inf, 0.0)
    return complex(x + c.real, y + c.imag)


def is_overflow(z):
    return not cmath.isfinite(z)


def survival_test(spec, z, k):
    """True iff ``|Q_{M_j}(z)| <= 2`` for every j = 1..k."""
    x, y = float(z.real), float(z.imag)
    for j in range(1, k + 1):
        c = spec.c_k(j)
        x, y, over = _square_n(x, y, spec.m_k(j) + 1)
        if over:
            return False
        x, y = x + c.real, y + c.imag
        if _escaped(x, y):
            return False
    return True


@dataclass(frozen=True)
class OrbitRecord:
    """Orbit of ``z0`` from ``start_stage``.

    ``samples`` holds ``(stage, z)`` for the start and every stage reached;
    ``step_log_derivs[i]`` is ``log|P'|`` for the step into stage
    ``start_stage + i + 1``.
    """

    start_stage: int
    samples: tuple[tuple[int, complex], ...]
    escape_checkpoint: int | None
    log_deriv: float
    step_log_derivs: tuple[float, ...] = field(repr=False, default=())
    overflowed: bool = False

    @property
    def escaped(self):
        return self.escape_checkpoint is not None

    @property
    def end_stage(self):
        return self.samples[-1][0]

    def log_deriv_between(self, m, n):
        """``log|Q'_{m,n}|`` at the orbit point of stage m."""
        if not self.start_stage <= m <= n <= self.end_stage:
            raise ValueError(f"window [{m}, {n}] outside recorded stages")
        i0 = m - self.start_stage
        return math.fsum(self.step_log_derivs[i0:i0 + (n - m)])

    def checkpoint_values(self, spec):
        Ms = set(checkpoints(spec, level_of_stage(spec, self.end_stage)[0]))
        return [(s, z) for s, z in self.samples if s in Ms]


def _log_abs_2z(x, y):
    r = math.hypot(x, y)
    return math.log(2.0 * r) if r > 0 else -math.inf


def orbit(spec, z0, start_stage, K):
    """Iterate ``z0`` from ``start_stage`` through stage ``M_K``.

    The escape test ``|z| > 2`` is made only at checkpoints ``M_k > start_stage``,
    plus once at the start if ``start_stage = M_j`` for some j >= 1.  The
    orbit stops at the first escape.
    """
    Ms = checkpoints(spec, K)
    if not 0 <= start_stage <= Ms[-1]:
        raise ValueError(f"start_stage {start_stage} outside [0, M_K = {Ms[-1]}]")
    x, y = float(z0.real), float(z0.imag)
    samples = [(start_stage, complex(x, y))]
    logs = []
    k0, at_cp = level_of_stage(spec, start_stage)
    if at_cp and k0 >= 1 and _escaped(x, y):
        return OrbitRecord(start_stage, tuple(samples), k0, 0.0, ())
    k = k0 if not at_cp else k0 + 1
    stage = start_stage
    escape = None
    overflowed = False
    while k <= K:
        c = spec.c_k(k)
        while stage < Ms[k]:
            logs.append(_log_abs_2z(x, y))
            x, y = x * x - y * y, 2.0 * x * y
            stage += 1
            if stage == Ms[k]:
                x, y = x + c.real, y + c.imag
            if not (abs(x) <= MAGNITUDE_CAP and abs(y) <= MAGNITUDE_CAP):
                overflowed = True
                x, y = math.inf, 0.0
                samples.append((stage, complex(x, y)))
                break
            samples.append((stage, complex(x, y)))
        if overflowed or _escaped(x, y):
            escape = k
            break
        k += 1
    return OrbitRecord(start_stage, tuple(samples), escape, math.fsum(logs), tuple(logs),
                       overflowed)


# ---------------------------------------------------------------------------
# vectorized iteration


SURVIVED = -1


def escape_codes(spec, z, K, start_stage=0):
    """First escaping checkpoint index for every point of ``z`` (``SURVIVED`` = -1).

    Same arithmetic as :func:`orbit`, on numpy arrays.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    x = np.ascontiguousarray(z.real, dtype=float).ravel().copy()
    y = np.ascontiguousarray(z.imag, dtype=float).ravel().copy()
    codes = np.full(x.shape, SURVIVED, dtype=np.int32)
    Ms = checkpoints(spec, K)
    if not 0 <= start_stage < Ms[-1]:
        raise ValueError(f"start_stage {start_stage} must lie in [0, M_K = {Ms[-1]})")
    active = np.arange(x.size)
    k0, at_cp = level_of_stage(spec, start_stage)
    r4 = ESCAPE_RADIUS * ESCAPE_RADIUS
    with np.errstate(over="ignore", invalid="ignore"):
        if at_cp and k0 >= 1:
            esc = ~(x * x + y * y <= r4)
            codes[esc] = k0
            keep = ~esc
            active, x, y = active[keep], x[keep], y[keep]
        k = k0 if not at_cp else k0 + 1
        stage = start_stage
        while k <= K and active.size:
            c = spec.c_k(k)
            for _ in range(Ms[k] - stage):
                x, y = x * x - y * y, 2.0 * x * y
            stage = Ms[k]
            x = x + c.real
            y = y + c.imag
            esc = ~(x * x + y * y <= r4)
            codes[active[esc]] = k
            keep = ~esc
            active, x, y = active[keep], x[keep], y[keep]
            k += 1
    return codes.reshape(shape)
