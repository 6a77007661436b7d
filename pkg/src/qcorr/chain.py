"""Exact parity-resolved solution of the finite cyclic XY chain in a transverse field.

``H = B sum_i s_iz - sum_i (Jx s_ix s_i+1,x + Jy s_iy s_i+1,y)``, ``n + 1 = 1``.

After the Jordan-Wigner map each ``S_z`` parity sector is a quadratic fermion
form.  The even sector (``P_z = +1``) has antiperiodic modes
``k = 1/2, ..., n - 1/2``, the odd sector periodic modes ``k = 0, ..., n - 1``,
with ``omega_k = 2 pi k / n`` and

    lambda_k = sqrt((B - J+ cos w_k)**2 + J-**2 sin(w_k)**2),
    v_k**2 = (1 - (B - J+ cos w_k) / lambda_k) / 2,
    u_k v_k = J- sin(w_k) / (2 lambda_k),

``J+- = (Jx +- Jy) / 2``.  In the odd sector the ``k = 0`` mode takes
``lambda_0 = J+ - B`` and is always occupied, so the quasiparticle vacuum
keeps the sector parity.  Pair states follow from Wick's theorem through
the contractions ``f_L``, ``g_L`` and two ``L x L`` determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .entropy import LOG_E
from .errors import DomainError, NumericalError
from .measures import XState

GAPLESS_TOL = 1e-14
DEGENERACY_TOL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class ChainParams:
    """Cyclic first-neighbour XY chain: ``n`` sites, couplings ``jx``, ``jy``, field ``b``."""

    n: int
    jx: float
    jy: float
    b: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise DomainError(f"n must be an even integer >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("jx", "jy", "b"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.jx <= 0:
            raise DomainError(f"Jx must be > 0, got {self.jx}")
        if abs(self.jy) > self.jx * (1 + 1e-12):
            raise DomainError(f"|Jy| must not exceed Jx (Jy={self.jy}, Jx={self.jx})")
        if self.b < 0:
            raise DomainError("B must be >= 0; use ChainParams.mirrored for negative fields")

    @classmethod
    def from_chi(cls, n: int, chi: float, b: float, jx: float = 1.0) -> "ChainParams":
        return cls(n, jx, chi * jx, b)

    @classmethod
    def mirrored(cls, n: int, jx: float, jy: float, b: float) -> tuple["ChainParams", bool]:
        """Map ``B < 0`` to ``|B|``; the flag reports whether a spin flip was applied.

        The spectrum is symmetric under ``B -> -B`` combined with a global
        spin flip, which leaves every correlation measure unchanged.
        """
        return cls(n, jx, jy, abs(b)), b < 0

    @property
    def chi(self) -> float:
        return self.jy / self.jx

    @property
    def j_plus(self) -> float:
        return 0.5 * (self.jx + self.jy)

    @property
    def j_minus(self) -> float:
        return 0.5 * (self.jx - self.jy)

    def with_field(self, b: float) -> "ChainParams":
        return ChainParams(self.n, self.jx, self.jy, b)


@dataclass(frozen=True)
class SectorSolution:
    """Quasiparticle modes of one parity sector and its vacuum energy."""

    params: ChainParams
    parity: int
    k: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    v2: np.ndarray = field(repr=False)
    uv: np.ndarray = field(repr=False)
    vacuum_energy: float = 0.0
    gapless: bool = False

    @property
    def modes(self) -> list[tuple[float, float, float, float, float]]:
        """``(k, omega_k, lambda_k, v_k**2, u_k v_k)`` for every mode."""
        return list(zip(*(a.tolist() for a in (self.k, self.omega, self.lam, self.v2, self.uv))))


def _check_parity(parity: int) -> int:
    if parity not in (1, -1):
        raise DomainError(f"parity must be +1 or -1, got {parity}")
    return int(parity)


def mode_energies(p: ChainParams, parity: int) -> SectorSolution:
    """All modes of the requested parity sector with their BCS amplitudes.

    A vanishing ``lambda_k`` (``k != 0``) takes the ``B -> B+`` limit
    (``v_k = 0``) and sets ``gapless``.
    """
    parity = _check_parity(parity)
    n = p.n
    k = np.arange(n, dtype=float) + (0.5 if parity == 1 else 0.0)
    omega = 2 * np.pi * k / n
    eps = p.b - p.j_plus * np.cos(omega)
    sin = np.sin(omega)
    if parity == -1:
        sin[0] = 0.0
        if n % 2 == 0:
            sin[n // 2] = 0.0
    lam = np.hypot(eps, p.j_minus * sin)
    scale = max(p.jx, p.b)
    zero = lam <= GAPLESS_TOL * scale
    safe = np.where(zero, 1.0, lam)
    v2 = np.where(zero, 0.0, 0.5 * (1.0 - eps / safe))
    uv = np.where(zero, 0.0, p.j_minus * sin / (2 * safe))
    gapless = bool(zero[1:].any()) if parity == -1 else bool(zero.any())
    if parity == -1:
        lam[0] = p.j_plus - p.b
        v2[0], uv[0] = 1.0, 0.0
    return SectorSolution(p, parity, k, omega, lam, v2, uv, float(-0.5 * lam.sum()), gapless)


def sector_energy(p: ChainParams, parity: int) -> float:
    return mode_energies(p, parity).vacuum_energy


@dataclass(frozen=True)
class GroundSector:
    parity: int
    e_plus: float
    e_minus: float
    degenerate: bool

    @property
    def gap(self) -> float:
        """``E- - E+``; positive when the even sector is lower."""
        return self.e_minus - self.e_plus


def ground_sector(p: ChainParams, tol: float = DEGENERACY_TOL) -> GroundSector:
    """Parity of the lower sector vacuum.

    At an exact crossing (``|E+ - E-| <= tol * n * max(Jx, B)``) the result is
    flagged ``degenerate`` and reports ``+1``; callers wanting side limits
    evaluate both sectors explicitly.
    """
    e_plus, e_minus = sector_energy(p, 1), sector_energy(p, -1)
    degenerate = abs(e_plus - e_minus) <= tol * p.n * max(p.jx, p.b)
    parity = 1 if (degenerate or e_plus < e_minus) else -1
    return GroundSector(parity, e_plus, e_minus, bool(degenerate))


def parity_crossings(p: ChainParams, b_lo: float, b_hi: float, n_grid: int = 2001) -> list[float]:
    """Fields in ``(b_lo, b_hi]`` where the ground-state parity changes.

    Sign changes of ``E+ - E-`` on a uniform grid are refined with Brent's
    method; a root within ``1e-9 Jx`` of the factorizing field is snapped to it.
    """
    grid = np.linspace(b_lo, b_hi, n_grid)
    diff = np.array([sector_energy(p.with_field(b), 1) - sector_energy(p.with_field(b), -1)
                     for b in grid])
    return _refine_crossings(p, grid, diff)


def _refine_crossings(p: ChainParams, grid, diff) -> list[float]:
    bs = _factorizing_or_none(p)
    sign = np.sign(diff)
    out = []
    for i in range(len(grid) - 1):
        if sign[i] == 0 or sign[i] == sign[i + 1]:
            continue
        if sign[i + 1] == 0:
            root = float(grid[i + 1])
        else:
            root = brentq(lambda b: sector_energy(p.with_field(b), 1)
                          - sector_energy(p.with_field(b), -1),
                          grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if bs is not None and abs(root - bs) < 1e-9 * p.jx:
            root = bs
        out.append(float(root))
    return out


@dataclass(frozen=True)
class PairCorrelations:
    """Fermionic contractions ``f_L`` (``<c+_i c_j> - delta/2``) and ``g_L`` (``<c+_i c+_j>``), ``L = i - j``."""

    f: np.ndarray
    g: np.ndarray
    # mean occupation <c+_i c_i>; kept apart from f[0] so that nearly empty or
    # nearly full bands do not lose digits to the -1/2 shift
    density: float = float("nan")

    def f_at(self, m: int) -> float:
        return float(self.f[abs(m)])

    def g_at(self, m: int) -> float:
        return float(np.sign(m) * self.g[abs(m)])


def pair_correlators(s: SectorSolution, lmax: int) -> PairCorrelations:
    n = s.params.n
    if not 0 <= lmax <= n // 2:
        raise DomainError(f"Lmax must lie in [0, n/2], got {lmax}")
    L = np.arange(lmax + 1)[:, None]
    phase = s.omega[None, :] * L
    cos, sin = np.cos(phase), np.sin(phase)
    f = (cos @ s.v2) / n
    g = (sin @ s.uv) / n
    imag = max(np.abs(sin @ s.v2).max(), np.abs(cos @ s.uv).max()) / n
    if imag >= IMAG_TOL:
        raise NumericalError(f"contractions have imaginary part {imag:.3e}")
    density = float(f[0])
    f[0] -= 0.5
    f.setflags(write=False)
    g.setflags(write=False)
    return PairCorrelations(f, g, density)


def _toeplitz_det(c: PairCorrelations, L: int, shift: int) -> float:
    r = np.arange(L)
    m = r[:, None] - r[None, :] + shift
    vals = 2.0 * (c.f[np.abs(m)] + np.sign(m) * c.g[np.abs(m)])
    return float(np.linalg.det(vals))


def pair_state_from_correlators(c: PairCorrelations, L: int) -> XState:
    """Pair state at separation ``L`` from the contractions (requires ``len(c.f) > L``)."""
    if L < 1 or L >= len(c.f):
        raise DomainError(f"separation L={L} outside the available contractions")
    f0 = c.f[0]
    det_p = _toeplitz_det(c, L, 1)   # <sigma_x sigma_x>
    det_m = _toeplitz_det(c, L, -1)  # <sigma_y sigma_y>
    if not (math.isfinite(det_p) and math.isfinite(det_m)):
        raise NumericalError(f"non-finite Wick determinant at L={L}")
    occ = c.density if math.isfinite(c.density) else f0 + 0.5
    conn = c.g[L] ** 2 - c.f[L] ** 2
    a_plus = occ * occ + conn
    a_minus = (1.0 - occ) ** 2 + conn
    cc = occ * (1.0 - occ) - conn
    return XState(a_plus, a_minus, cc, cc, 0.25 * (det_p + det_m), 0.25 * (det_p - det_m))


def pair_rdm(p: ChainParams, parity: int, L: int) -> XState:
    """Reduced state of two spins at separation ``1 <= L <= n/2`` in a sector vacuum."""
    if not 1 <= L <= p.n // 2:
        raise DomainError(f"L must lie in [1, n/2] = [1, {p.n // 2}], got {L}")
    c = pair_correlators(mode_energies(p, parity), L)
    return pair_state_from_correlators(c, L)


def pair_rdms(p: ChainParams, parity: int, separations) -> dict[int, XState]:
    """Pair states for several separations sharing one set of contractions."""
    seps = sorted(set(int(L) for L in separations))
    if not seps:
        return {}
    if seps[0] < 1 or seps[-1] > p.n // 2:
        raise DomainError(f"separations must lie in [1, {p.n // 2}]")
    c = pair_correlators(mode_energies(p, parity), seps[-1])
    return {L: pair_state_from_correlators(c, L) for L in seps}


# --------------------------------------------------------------------------
# factorizing field
# --------------------------------------------------------------------------

def _check_chi(chi: float):
    if not 0 < chi < 1:
        raise DomainError(f"a factorizing field needs 0 < chi < 1, got chi={chi}")


def factorizing_field(p: ChainParams) -> float:
    """``B_s = sqrt(Jx Jy)``."""
    _check_chi(p.chi)
    return math.sqrt(p.jx * p.jy)


def _factorizing_or_none(p: ChainParams) -> float | None:
    return math.sqrt(p.jx * p.jy) if 0 < p.chi < 1 else None


@dataclass(frozen=True)
class FactorizedPairState:
    chi: float
    theta: float
    state: XState


def factorized_pair_state(chi: float) -> FactorizedPairState:
    """Common pair state ``(|th,th><th,th| + |-th,-th><-th,-th|) / 2``, ``cos th = sqrt(chi)``.

    Entries are ``a+- = (1 +- cos th)**2 / 4`` and ``alpha = beta = c = sin(th)**2 / 4``.
    The chain solver stores the dominant ``|down down>`` weight in ``a_minus``;
    this labelling is its spin-flipped image (see :meth:`XState.flipped`).
    """
    _check_chi(chi)
    ct = math.sqrt(chi)
    theta = math.acos(ct)
    s2 = 1.0 - chi
    x = XState(0.25 * (1 + ct) ** 2, 0.25 * (1 - ct) ** 2, 0.25 * s2, 0.25 * s2,
               0.25 * s2, 0.25 * s2)
    return FactorizedPairState(chi, theta, x)


def i2_at_factorizing(chi: float) -> float:
    """Quadratic deficit of the factorized pair state (``n -> infinity``)."""
    _check_chi(chi)
    return 0.5 * (1 - chi) ** 2 if chi >= 1 / 3 else 0.5 * chi * (1 + chi)


def i2_side_limits(chi: float, n: int) -> tuple[float, float]:
    """``(left, right)`` limits of ``I2`` at ``B_s`` for a finite chain (valid for ``chi >~ 1/3``)."""
    _check_chi(chi)
    if n < 4 or n % 2:
        raise DomainError("n must be an even integer >= 4")
    base = 0.5 * (1 - chi) ** 2 * (1 + chi ** (n - 2))
    h = chi ** (n / 2)
    return base / (1 - h) ** 2, base / (1 + h) ** 2


def concurrence_side_limits(chi: float, n: int) -> tuple[float, float]:
    """``(left, right)`` limits of the pair concurrence at ``B_s``."""
    _check_chi(chi)
    if n < 4 or n % 2:
        raise DomainError("n must be an even integer >= 4")
    num = chi ** (n / 2 - 1) * (1 - chi)
    h = chi ** (n / 2)
    return num / (1 - h), num / (1 + h)


@dataclass(frozen=True)
class StrongFieldEstimate:
    eta: float
    C: float
    I2: float
    I1: float
    D: float
    valid: bool  # False when B < 5 Jx


def strong_field_asymptotics(p: ChainParams) -> StrongFieldEstimate:
    """Leading strong-field behaviour of first-neighbour measures, ``eta = (Jx - Jy) / 8B``."""
    if p.b <= 0:
        raise DomainError("strong-field expansion needs B > 0")
    eta = (p.jx - p.jy) / (8 * p.b)
    if eta == 0:
        return StrongFieldEstimate(0.0, 0.0, 0.0, 0.0, 0.0, p.b >= 5 * p.jx)
    e2 = eta * eta
    log_term = LOG_E - math.log2(e2)
    return StrongFieldEstimate(eta, 2 * (eta - e2), 4 * e2, e2 * log_term, e2 * (log_term - 2),
                               p.b >= 5 * p.jx)
