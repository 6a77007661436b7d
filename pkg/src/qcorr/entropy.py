"""Generalized entropies of probability spectra.

Trace-form entropies ``S_f(p) = sum_i f(p_i)`` with ``f`` concave and
``f(0) = f(1) = 0`` (von Neumann, Tsallis), the Renyi family, majorization of
spectra and the Tsallis -> Renyi map.  All logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, NormalizationError

LOG_BASE = 2.0
LOG_E = 1.0 / np.log(LOG_BASE)  # log_2(e)

CLAMP_TOL = 1e-12  # negatives above -CLAMP_TOL are rounding noise from eigensolvers
NORM_TOL = 1e-10
VN_SWITCH = 1e-6  # |q - 1| below this evaluates the von Neumann branch


def _log(x):
    return np.log(x) / np.log(LOG_BASE)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a density operator.

    Entries in ``[-CLAMP_TOL, 0)`` are clamped to zero; larger negatives or a
    total differing from one by more than ``NORM_TOL`` raise
    :class:`NormalizationError`.  The order given by the caller is kept.
    """

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise NormalizationError("empty spectrum")
        if not np.all(np.isfinite(p)):
            raise NormalizationError("spectrum has non-finite entries")
        if np.any(p < -CLAMP_TOL):
            raise NormalizationError(f"negative eigenvalue {p.min():.3e} in spectrum")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise NormalizationError(f"spectrum sums to {p.sum():.12g}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_density(cls, rho: np.ndarray) -> "Spectrum":
        return cls(np.linalg.eigvalsh(np.asarray(rho)))

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __repr__(self) -> str:
        return f"Spectrum({np.array2string(self.probs, precision=6)})"

    def decreasing(self) -> np.ndarray:
        return np.sort(self.probs)[::-1]

    def is_pure(self, tol: float = 1e-12) -> bool:
        return bool(self.probs.max() >= 1.0 - tol)


SpectrumLike = Union[Spectrum, Sequence[float], np.ndarray]


def as_spectrum(s: SpectrumLike) -> Spectrum:
    return s if isinstance(s, Spectrum) else Spectrum(s)


@dataclass(frozen=True)
class EntropyFunctional:
    """One member of the von Neumann / Tsallis / Renyi families.

    Use the constructors :meth:`von_neumann`, :meth:`tsallis`, :meth:`renyi`
    and :meth:`linear` (the ``q = 2`` Tsallis entropy ``2(1 - Tr rho^2)``).
    """

    kind: str = "vn"
    q: float = 1.0

    def __post_init__(self):
        if self.kind not in ("vn", "tsallis", "renyi"):
            raise DomainError(f"unknown entropy kind {self.kind!r}")
        if not np.isfinite(self.q) or self.q <= 0:
            raise DomainError(f"entropic index q must be > 0, got {self.q}")
        if self.kind == "vn":
            object.__setattr__(self, "q", 1.0)

    @classmethod
    def von_neumann(cls) -> "EntropyFunctional":
        return cls("vn")

    @classmethod
    def tsallis(cls, q: float) -> "EntropyFunctional":
        return cls("tsallis", float(q))

    @classmethod
    def renyi(cls, q: float) -> "EntropyFunctional":
        return cls("renyi", float(q))

    @classmethod
    def linear(cls) -> "EntropyFunctional":
        return cls("tsallis", 2.0)

    @property
    def is_von_neumann(self) -> bool:
        """True when evaluation goes through the von Neumann branch."""
        return self.kind == "vn" or abs(self.q - 1.0) < VN_SWITCH

    @property
    def is_trace_form(self) -> bool:
        return self.kind != "renyi" or self.is_von_neumann

    @property
    def name(self) -> str:
        if self.kind == "vn":
            return "VonNeumann"
        return f"{'Tsallis' if self.kind == 'tsallis' else 'Renyi'}({self.q:g})"

    def __str__(self) -> str:
        return self.name

    # ---- the generating function f and its derivatives (trace forms only) ----

    def f(self, p):
        p = np.asarray(p, dtype=float)
        if self.is_von_neumann:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(p > 0, -p * _log(np.where(p > 0, p, 1.0)), 0.0)
        self._require_trace_form()
        return (p - np.power(p, self.q)) / tsallis_constant(self.q)

    def fprime(self, p):
        p = np.asarray(p, dtype=float)
        if self.is_von_neumann:
            return -_log(p) - LOG_E
        self._require_trace_form()
        return (1.0 - self.q * np.power(p, self.q - 1.0)) / tsallis_constant(self.q)

    def fsecond(self, p):
        p = np.asarray(p, dtype=float)
        if self.is_von_neumann:
            return -LOG_E / p
        self._require_trace_form()
        q = self.q
        return -q * (q - 1.0) * np.power(p, q - 2.0) / tsallis_constant(q)

    def _require_trace_form(self):
        if not self.is_trace_form:
            raise DomainError(f"{self.name} is not of trace form")


VON_NEUMANN = EntropyFunctional.von_neumann()
LINEAR = EntropyFunctional.linear()


def tsallis_constant(q: float) -> float:
    """``c_q = 1 - 2**(1 - q)``; the Tsallis normalisation constant."""
    return 1.0 - LOG_BASE ** (1.0 - q)


def entropy_values(p: np.ndarray, func: EntropyFunctional) -> np.ndarray:
    """Entropy of each spectrum stored along the last axis of ``p``.

    No validation; meant for batched evaluation inside optimisers.  Negative
    entries are treated as zero.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    if func.is_von_neumann:
        return func.f(p).sum(axis=-1)
    power_sum = np.power(p, func.q).sum(axis=-1)
    if func.kind == "tsallis":
        return (1.0 - power_sum) / tsallis_constant(func.q)
    return _log(power_sum) / (1.0 - func.q)


def eval_entropy(s: SpectrumLike, func: EntropyFunctional = VON_NEUMANN) -> float:
    """Entropy ``S_f`` of a spectrum (base-2 logs, ``0 log 0 = 0``).

    >>> eval_entropy([0.25, 0.25, 0.25, 0.25])
    2.0
    """
    s = as_spectrum(s)
    return float(max(entropy_values(s.probs, func), 0.0))


def majorizes(a: SpectrumLike, b: SpectrumLike, tol: float = 1e-12) -> bool:
    """True iff ``a`` majorizes ``b`` (``b`` is more mixed than ``a``).

    Both spectra are sorted decreasingly and the shorter one is padded with
    zeros before comparing partial sums.
    """
    pa = as_spectrum(a).decreasing()
    pb = as_spectrum(b).decreasing()
    size = max(pa.size, pb.size)
    pa = np.pad(pa, (0, size - pa.size))
    pb = np.pad(pb, (0, size - pb.size))
    return bool(np.all(np.cumsum(pa) >= np.cumsum(pb) - tol))


def tsallis_to_renyi(sq: float, q: float) -> float:
    """Renyi entropy from the Tsallis entropy of the same state and index ``q``."""
    if q <= 0:
        raise DomainError(f"entropic index q must be > 0, got {q}")
    if abs(q - 1.0) < VN_SWITCH:
        raise DomainError("q = 1: Tsallis and Renyi both reduce to von Neumann")
    arg = 1.0 - tsallis_constant(q) * sq
    if arg <= 0:
        raise DomainError(f"1 - c_q S_q = {arg:.3e} <= 0; S_q={sq} is invalid for q={q}")
    return float(_log(arg) / (1.0 - q))


def binary_entropy(x) -> np.ndarray:
    """``h(x) = -x log x - (1 - x) log(1 - x)`` elementwise."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return VON_NEUMANN.f(x) + VON_NEUMANN.f(1.0 - x)
