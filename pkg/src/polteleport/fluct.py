"""Linearized fluctuation operators over a basis of independent noise sources.

Every source has unit variance. A :class:`FluctuationVector` is a real linear
form over sources, so variances and covariances reduce to sums of coefficient
products. Quantum sources come in (x, p) pairs belonging to one elementary
mode; classical sources stand for deliberately applied modulation signals.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

QUANTUM = "quantum"
CLASSICAL = "classical"

_registry_tokens = itertools.count()
_token_lock = threading.Lock()


@dataclass(frozen=True)
class NoiseSource:
    """One unit-variance noise source.

    ``pair`` links the x- and p-sources of one quantum mode and is ``None``
    for classical sources. ``role`` is ``"x"`` or ``"p"`` for quantum sources.
    """

    registry: int
    index: int
    kind: str
    pair: int | None = None
    role: str | None = None
    label: str = field(default="", compare=False)

    @property
    def is_quantum(self) -> bool:
        return self.kind == QUANTUM


class SourceRegistry:
    """Allocates fresh noise sources. Allocation is the only mutable state."""

    def __init__(self) -> None:
        with _token_lock:
            self.token = next(_registry_tokens)
        self._counter = itertools.count()
        self._lock = threading.Lock()

    def _next(self) -> int:
        with self._lock:
            return next(self._counter)

    def quantum_pair(self, label: str = "") -> tuple[NoiseSource, NoiseSource]:
        with self._lock:
            i = next(self._counter)
            j = next(self._counter)
        x = NoiseSource(self.token, i, QUANTUM, pair=i, role="x", label=label + ".x")
        p = NoiseSource(self.token, j, QUANTUM, pair=i, role="p", label=label + ".p")
        return x, p

    def classical(self, label: str = "") -> NoiseSource:
        return NoiseSource(self.token, self._next(), CLASSICAL, label=label)


class FluctuationVector:
    """Immutable real linear combination of unit-variance noise sources."""

    __slots__ = ("_coeffs",)

    def __init__(self, coefficients: Mapping[NoiseSource, float] | None = None):
        coeffs = {}
        if coefficients:
            for src, c in coefficients.items():
                c = float(c)
                if c != 0.0:
                    coeffs[src] = c
        self._coeffs = coeffs

    @classmethod
    def _raw(cls, coeffs: dict[NoiseSource, float]) -> FluctuationVector:
        v = cls.__new__(cls)
        v._coeffs = coeffs
        return v

    @classmethod
    def of(cls, source: NoiseSource, coefficient: float = 1.0) -> FluctuationVector:
        return cls({source: coefficient})

    @classmethod
    def zero(cls) -> FluctuationVector:
        return cls._raw({})

    @property
    def coefficients(self) -> Mapping[NoiseSource, float]:
        return dict(self._coeffs)

    def coefficient(self, source: NoiseSource) -> float:
        return self._coeffs.get(source, 0.0)

    def sources(self) -> Iterator[NoiseSource]:
        return iter(self._coeffs)

    def __add__(self, other: FluctuationVector) -> FluctuationVector:
        if not isinstance(other, FluctuationVector):
            return NotImplemented
        out = dict(self._coeffs)
        for src, c in other._coeffs.items():
            out[src] = out.get(src, 0.0) + c
        return FluctuationVector._raw(out)

    def __sub__(self, other: FluctuationVector) -> FluctuationVector:
        if not isinstance(other, FluctuationVector):
            return NotImplemented
        return self + (-1.0) * other

    def __neg__(self) -> FluctuationVector:
        return (-1.0) * self

    def __mul__(self, scale: float) -> FluctuationVector:
        s = float(scale)
        if s == 0.0:
            return FluctuationVector._raw({})
        return FluctuationVector._raw({k: s * c for k, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, scale: float) -> FluctuationVector:
        return self * (1.0 / scale)

    def restrict(self, kind: str) -> FluctuationVector:
        """Part of the vector supported on sources of ``kind``."""
        return FluctuationVector._raw({k: c for k, c in self._coeffs.items() if k.kind == kind})

    @property
    def quantum(self) -> FluctuationVector:
        return self.restrict(QUANTUM)

    @property
    def classical(self) -> FluctuationVector:
        return self.restrict(CLASSICAL)

    def __repr__(self) -> str:
        terms = ", ".join(f"{k.label or k.index}: {c:.6g}" for k, c in self._coeffs.items())
        return f"FluctuationVector({{{terms}}})"


def linear_combination(terms: Iterable[tuple[float, FluctuationVector]]) -> FluctuationVector:
    out: dict[NoiseSource, float] = {}
    for scale, vec in terms:
        if scale == 0.0:
            continue
        for src, c in vec._coeffs.items():
            out[src] = out.get(src, 0.0) + scale * c
    return FluctuationVector._raw(out)


def variance(v: FluctuationVector) -> float:
    return math.fsum(c * c for c in v._coeffs.values())


@dataclass(frozen=True)
class VarianceSplit:
    total: float
    quantum: float
    classical: float


def variance_split(v: FluctuationVector) -> VarianceSplit:
    q = math.fsum(c * c for k, c in v._coeffs.items() if k.kind == QUANTUM)
    cl = math.fsum(c * c for k, c in v._coeffs.items() if k.kind == CLASSICAL)
    return VarianceSplit(total=q + cl, quantum=q, classical=cl)


def covariance(u: FluctuationVector, v: FluctuationVector) -> float:
    a, b = u._coeffs, v._coeffs
    if len(b) < len(a):
        a, b = b, a
    return math.fsum(c * b[k] for k, c in a.items() if k in b)


def symplectic_product(x: FluctuationVector, p: FluctuationVector) -> float:
    """Canonical commutator weight of a quadrature pair.

    Sums x_i p_j - x_j p_i over quantum source pairs (i = x-source,
    j = p-source). A freshly created mode gives exactly 1; classical
    sources contribute nothing.
    """
    pairs: dict[tuple[int, int | None], list[NoiseSource | None]] = {}
    for src in itertools.chain(x._coeffs, p._coeffs):
        if src.kind != QUANTUM:
            continue
        slot = pairs.setdefault((src.registry, src.pair), [None, None])
        slot[0 if src.role == "x" else 1] = src
    total = []
    for xs, ps in pairs.values():
        xi = x._coeffs.get(xs, 0.0) if xs is not None else 0.0
        xj = x._coeffs.get(ps, 0.0) if ps is not None else 0.0
        pi = p._coeffs.get(xs, 0.0) if xs is not None else 0.0
        pj = p._coeffs.get(ps, 0.0) if ps is not None else 0.0
        total.append(xi * pj - xj * pi)
    return math.fsum(total)
