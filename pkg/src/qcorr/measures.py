"""Correlation measures of two-qubit states.

States enter either as :class:`XState` (the six real entries of a parity
symmetric pair density matrix) or as a :class:`BlochForm`
``rho = (I + rA.sigma_A + rB.sigma_B + sigma_A^T J sigma_B) / (dA dB)``.
Measurements are complete projective spin measurements on the right
qubit ``B`` along a unit vector ``k``.

XState inputs use a one-angle fast path: for X states every objective depends
on ``k`` only through ``cos(gamma)`` and ``|J_perp k|``, so the optimum lies in
the plane spanned by ``z`` and the transverse axis with the larger ``|j|``,
and the objective is even about ``gamma = 0`` and ``gamma = pi/2``.  General
BlochForm inputs are optimised over the full half sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import brentq

from .entropy import (
    LOG_E, VON_NEUMANN, EntropyFunctional, Spectrum, binary_entropy,
    entropy_values, tsallis_constant,
)
from .errors import DomainError, OptimizationError, StructureError

TRACE_TOL = 1e-10
POS_TOL = 1e-12
GAMMA_TOL = 1e-8
N_SCAN = 64
RESIDUAL_TOL = 1e-5
FLAT_TOL = 1e-11  # objective spread (bits) below which the direction is numerically undetermined
P_FLOOR = 1e-300  # keeps f'(p) finite at p = 0
BRANCH_TOL = 1e-14

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)
I2 = np.eye(2)


class _Discord:
    """Marker selecting the quantum discord where an entropy is expected."""

    def __repr__(self) -> str:
        return "DISCORD"

    name = "Discord"


DISCORD = _Discord()


# --------------------------------------------------------------------------
# state representations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class XState:
    """Two-qubit X state in the basis ``|00>, |01>, |10>, |11>`` (0 = up)::

        [[a+, 0,  0,  b ],
         [0,  c+, a,  0 ],
         [0,  a,  c-, 0 ],
         [b,  0,  0,  a-]]

    with ``a = alpha`` and ``b = beta``.
    """

    a_plus: float
    a_minus: float
    c_plus: float
    c_minus: float
    alpha: float
    beta: float

    def __post_init__(self):
        vals = (self.a_plus, self.a_minus, self.c_plus, self.c_minus, self.alpha, self.beta)
        for name, v in zip(("a_plus", "a_minus", "c_plus", "c_minus", "alpha", "beta"), vals):
            v = float(v)
            if not math.isfinite(v):
                raise DomainError(f"XState.{name} is not finite")
            object.__setattr__(self, name, v)
        diag = (self.a_plus, self.a_minus, self.c_plus, self.c_minus)
        if abs(sum(diag) - 1.0) > TRACE_TOL:
            raise DomainError(f"XState trace is {sum(diag):.15g}, expected 1")
        if min(diag) < -POS_TOL:
            raise DomainError(f"XState has a negative diagonal entry {min(diag):.3e}")
        ap, am, cp, cm = (max(d, 0.0) for d in diag)
        if abs(self.alpha) > math.sqrt(cp * cm) + POS_TOL:
            raise DomainError("XState violates |alpha| <= sqrt(c+ c-)")
        if abs(self.beta) > math.sqrt(ap * am) + POS_TOL:
            raise DomainError("XState violates |beta| <= sqrt(a+ a-)")

    @classmethod
    def from_matrix(cls, rho: np.ndarray, tol: float = 1e-10) -> "XState":
        """Read an X state off a 4x4 density matrix, rejecting other structure."""
        rho = np.asarray(rho)
        if rho.shape != (4, 4):
            raise DomainError(f"expected a 4x4 matrix, got shape {rho.shape}")
        mask = np.zeros((4, 4), dtype=bool)
        mask[np.diag_indices(4)] = True
        mask[0, 3] = mask[3, 0] = mask[1, 2] = mask[2, 1] = True
        off = np.abs(rho[~mask]).max()
        if off > tol:
            raise StructureError(f"matrix is not of X form (max off-X entry {off:.3e})")
        if np.iscomplexobj(rho) and np.abs(rho.imag).max() > tol:
            raise StructureError("X-state entries must be real")
        r = rho.real
        return cls(r[0, 0], r[3, 3], r[1, 1], r[2, 2],
                   0.5 * (r[1, 2] + r[2, 1]), 0.5 * (r[0, 3] + r[3, 0]))

    def to_matrix(self) -> np.ndarray:
        m = np.diag([self.a_plus, self.c_plus, self.c_minus, self.a_minus])
        m[0, 3] = m[3, 0] = self.beta
        m[1, 2] = m[2, 1] = self.alpha
        return m

    def as_array(self) -> np.ndarray:
        return np.array([self.a_plus, self.a_minus, self.c_plus, self.c_minus,
                         self.alpha, self.beta])

    def flipped(self) -> "XState":
        """The state after flipping both spins (``sigma_x (x) sigma_x``)."""
        return XState(self.a_minus, self.a_plus, self.c_minus, self.c_plus,
                      self.alpha, self.beta)

    def swapped(self) -> "XState":
        """Exchange of the two qubits."""
        return XState(self.a_plus, self.a_minus, self.c_minus, self.c_plus,
                      self.alpha, self.beta)


@dataclass(frozen=True)
class BlochForm:
    """Local Bloch vectors and correlation matrix of a qudit-qubit state.

    ``rA`` has ``dA**2 - 1`` components, ``rB`` three and ``J`` has shape
    ``(dA**2 - 1, 3)``.  For ``dA > 2`` the local operators are generalized
    Gell-Mann matrices normalised to ``Tr s_m s_n = dA delta_mn``.
    """

    rA: np.ndarray
    rB: np.ndarray
    J: np.ndarray
    dA: int = 2

    def __post_init__(self):
        dA = int(self.dA)
        if dA < 2:
            raise DomainError("dA must be >= 2")
        rA = np.array(self.rA, dtype=float).reshape(-1)
        rB = np.array(self.rB, dtype=float).reshape(-1)
        J = np.array(self.J, dtype=float)
        if rA.size != dA * dA - 1 or rB.size != 3 or J.shape != (dA * dA - 1, 3):
            raise DomainError("BlochForm component shapes do not match dA")
        for a in (rA, rB, J):
            a.setflags(write=False)
        object.__setattr__(self, "rA", rA)
        object.__setattr__(self, "rB", rB)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "dA", dA)

    @classmethod
    def from_matrix(cls, rho: np.ndarray, dA: int = 2) -> "BlochForm":
        rho = np.asarray(rho)
        sa = local_operators(dA)
        sb = PAULI
        rA = np.real([np.trace(rho @ np.kron(s, I2)) for s in sa])
        rB = np.real([np.trace(rho @ np.kron(np.eye(dA), s)) for s in sb])
        J = np.real([[np.trace(rho @ np.kron(s, t)) for t in sb] for s in sa])
        return cls(rA, rB, J, dA)

    def to_matrix(self) -> np.ndarray:
        sa = local_operators(self.dA)
        d = 2 * self.dA
        rho = np.eye(d, dtype=complex)
        for m, s in enumerate(sa):
            rho += self.rA[m] * np.kron(s, I2)
            for n, t in enumerate(PAULI):
                rho += self.J[m, n] * np.kron(s, t)
        for n, t in enumerate(PAULI):
            rho += self.rB[n] * np.kron(np.eye(self.dA), t)
        rho /= d
        if np.abs(rho.imag).max() < 1e-15:
            return rho.real
        return rho

    def is_x_form(self, tol: float = 1e-12) -> bool:
        """Local vectors along z and diagonal ``J`` (two qubits only)."""
        if self.dA != 2:
            return False
        off = self.J - np.diag(np.diag(self.J))
        return bool(np.abs(self.rA[:2]).max() <= tol and np.abs(self.rB[:2]).max() <= tol
                    and np.abs(off).max() <= tol)

    def _require_qubits(self):
        if self.dA != 2:
            raise DomainError("operation defined for two qubits only (dA = 2)")


def local_operators(d: int) -> np.ndarray:
    """Traceless orthogonal basis of ``d x d`` Hermitian matrices, ``Tr s_m s_n = d delta``."""
    if d == 2:
        return PAULI
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1
        m[l, l] = -l
        mats.append(m * math.sqrt(2.0 / (l * (l + 1))))
    return np.array(mats) * math.sqrt(d / 2.0)


StateLike = Union[XState, BlochForm]


@dataclass(frozen=True)
class MeasurementDir:
    """Spin measurement axis ``k = (sin g cos p, sin g sin p, cos g)``."""

    gamma: float
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @classmethod
    def from_vector(cls, k) -> "MeasurementDir":
        k = np.asarray(k, dtype=float)
        norm = np.linalg.norm(k)
        if norm == 0:
            raise DomainError("zero vector has no direction")
        k = k / norm
        gamma = math.acos(max(-1.0, min(1.0, k[2])))
        phi = math.atan2(k[1], k[0]) if abs(k[2]) < 1.0 else 0.0
        return cls(gamma, phi)

    @property
    def vector(self) -> np.ndarray:
        g, p = self.gamma, self.phi
        return np.array([math.sin(g) * math.cos(p), math.sin(g) * math.sin(p), math.cos(g)])


Z_DIR = MeasurementDir(0.0)
X_DIR = MeasurementDir(math.pi / 2)


@dataclass(frozen=True)
class MeasureOutcome:
    """Optimised measure, minimising direction and stationarity residual.

    ``degenerate`` marks a tie between distinct optimal directions or an
    objective too flat to resolve the direction numerically.
    """

    value: float
    dir: MeasurementDir
    residual: float = 0.0
    degenerate: bool = False

    @property
    def gamma(self) -> float:
        return self.dir.gamma


def _clamp_value(v: float) -> float:
    if v < -1e-10:
        raise OptimizationError(f"measure evaluated to {v:.3e} < 0")
    return max(float(v), 0.0)


# --------------------------------------------------------------------------
# basic maps
# --------------------------------------------------------------------------

def _as_bloch(state: StateLike) -> BlochForm:
    return to_bloch(state) if isinstance(state, XState) else state


def x_state_spectrum(x: XState) -> Spectrum:
    """Eigenvalues of the two 2x2 blocks of an X state."""
    sa = 0.5 * (x.a_plus + x.a_minus)
    da = math.hypot(0.5 * (x.a_plus - x.a_minus), x.beta)
    sc = 0.5 * (x.c_plus + x.c_minus)
    dc = math.hypot(0.5 * (x.c_plus - x.c_minus), x.alpha)
    ev = np.array([sa + da, sa - da, sc + dc, sc - dc])
    if ev.min() < -POS_TOL:
        raise DomainError(f"X state is not positive (eigenvalue {ev.min():.3e})")
    return Spectrum(ev)


def to_bloch(x: XState) -> BlochForm:
    ap, am, cp, cm = x.a_plus, x.a_minus, x.c_plus, x.c_minus
    rA = np.array([0.0, 0.0, ap + cp - cm - am])
    rB = np.array([0.0, 0.0, ap + cm - cp - am])
    J = np.diag([2 * (x.alpha + x.beta), 2 * (x.alpha - x.beta), ap + am - cp - cm])
    return BlochForm(rA, rB, J)


def from_bloch(b: BlochForm) -> XState:
    """Inverse of :func:`to_bloch`; ``b`` must be of X form."""
    if not b.is_x_form(tol=1e-10):
        raise StructureError("BlochForm is not of X form")
    ra, rb = b.rA[2], b.rB[2]
    jx, jy, jz = np.diag(b.J)
    return XState(0.25 * (1 + ra + rb + jz), 0.25 * (1 - ra - rb + jz),
                  0.25 * (1 + ra - rb - jz), 0.25 * (1 - ra + rb - jz),
                  0.25 * (jx + jy), 0.25 * (jx - jy))


def state_spectrum(state: StateLike) -> Spectrum:
    if isinstance(state, XState):
        return x_state_spectrum(state)
    return Spectrum.from_density(state.to_matrix())


def _post_probs(b: BlochForm, K: np.ndarray):
    """Post-measurement probabilities for a batch of unit vectors ``K`` (N, 3).

    Returns ``(p, pB)`` with ``p[:, (mu, nu)]`` flattened as
    ``[(+,+), (-,+), (+,-), (-,-)]`` and ``pB[:, nu]`` for ``nu = +, -``.
    """
    rbk = K @ b.rB
    JK = K @ b.J.T
    m_plus = np.linalg.norm(b.rA + JK, axis=-1)
    m_minus = np.linalg.norm(b.rA - JK, axis=-1)
    p = 0.25 * np.stack([1 + rbk + m_plus, 1 + rbk - m_plus,
                         1 - rbk + m_minus, 1 - rbk - m_minus], axis=-1)
    pB = 0.5 * np.stack([1 + rbk, 1 - rbk], axis=-1)
    return np.clip(p, 0.0, None), np.clip(pB, 0.0, None)


def post_measurement_spectrum(b: StateLike, k: MeasurementDir) -> Spectrum:
    """Eigenvalues ``p'_{mu nu} = (1 + nu rB.k + mu |rA + nu J k|) / 4``."""
    b = _as_bloch(b)
    b._require_qubits()
    p, _ = _post_probs(b, k.vector[None, :])
    return Spectrum(p[0])


def post_measurement_state(b: StateLike, k: MeasurementDir) -> np.ndarray:
    """Dense post-measurement density matrix (unknown outcome)."""
    b = _as_bloch(b)
    b._require_qubits()
    kv = k.vector
    kb = b.rB @ kv
    jk = b.J @ kv
    ks = np.einsum("m,mij->ij", kv, PAULI)
    rho = np.eye(4, dtype=complex)
    rho += sum(b.rA[m] * np.kron(PAULI[m], I2) for m in range(3))
    rho += kb * np.kron(I2, ks)
    rho += np.kron(np.einsum("m,mij->ij", jk, PAULI), ks)
    rho /= 4
    return rho.real if np.abs(rho.imag).max() < 1e-15 else rho


def conditional_entropy_after(b: StateLike, k: MeasurementDir) -> float:
    """``S(A|B_k) = sum_nu p_nu S(rho_{A/nu})`` after measuring ``B`` along ``k``."""
    b = _as_bloch(b)
    b._require_qubits()
    return float(max(_conditional_entropy(b, k.vector[None, :])[0], 0.0))


def _conditional_entropy(b: BlochForm, K: np.ndarray) -> np.ndarray:
    p, pB = _post_probs(b, K)
    return entropy_values(p, VON_NEUMANN) - entropy_values(pB, VON_NEUMANN)


def _deficit_objective(b: BlochForm, K: np.ndarray, func: EntropyFunctional) -> np.ndarray:
    p, _ = _post_probs(b, K)
    return entropy_values(p, func)


# --------------------------------------------------------------------------
# measurement optimisation
# --------------------------------------------------------------------------

def _plane_axis(b: BlochForm) -> float:
    jx, jy = abs(b.J[0, 0]), abs(b.J[1, 1])
    return 0.0 if jx >= jy else math.pi / 2


def _plane_vectors(gamma: np.ndarray, phi: float) -> np.ndarray:
    s = np.sin(gamma)
    return np.stack([s * math.cos(phi), s * math.sin(phi), np.cos(gamma)], axis=-1)


def _fold_gamma(g: float) -> float:
    g = abs(g) % math.pi
    return math.pi - g if g > math.pi / 2 else g


def _plane_slope(b: BlochForm, gamma: np.ndarray, phi: float, func) -> np.ndarray:
    """Exact ``d/d gamma`` of the discord or deficit objective along the plane.

    The von Neumann branches are written in terms of log ratios of nearly
    equal probabilities, so the slope stays accurate when the objective
    itself is flat to machine precision (weakly correlated pairs).
    """
    gamma = np.asarray(gamma, dtype=float)
    K = _plane_vectors(gamma, phi)
    c = np.cos(gamma)
    dK = np.stack([c * math.cos(phi), c * math.sin(phi), -np.sin(gamma)], axis=-1)
    rbk, drbk = K @ b.rB, dK @ b.rB
    JK, JdK = K @ b.J.T, dK @ b.J.T
    slope = np.zeros_like(gamma)
    logs_b = []
    for nu in (1, -1):
        v = b.rA + nu * JK
        m = np.linalg.norm(v, axis=-1)
        dm = nu * np.einsum("ij,ij->i", v, JdK) / np.where(m > 0, m, 1.0)
        hi = np.maximum(0.25 * (1 + nu * rbk + m), P_FLOOR)
        lo = np.maximum(0.25 * (1 + nu * rbk - m), P_FLOOR)
        if func is DISCORD or func.is_von_neumann:
            slope += 0.25 * dm * np.log2(lo / hi)
            if func is DISCORD:
                x = m * m / np.maximum((1 + nu * rbk) ** 2, P_FLOOR)
                logs_b.append(np.log1p(-np.minimum(x, 1 - 1e-16)) * LOG_E)
            else:
                logs_b.append(-nu * (np.log2(hi) + np.log2(lo)))
        else:
            logs_b.append((hi, lo, dm, nu))
    if func is DISCORD:
        return slope + 0.25 * drbk * (logs_b[1] - logs_b[0])
    if func.is_von_neumann:
        return slope + 0.25 * drbk * (logs_b[0] + logs_b[1])
    p = np.stack([t[0] for t in logs_b] + [t[1] for t in logs_b], axis=-1)
    if func.is_trace_form:
        fp = func.fprime(p)
    else:
        q = func.q
        T = np.power(p, q).sum(axis=-1, keepdims=True)
        fp = q / ((1.0 - q) * T) * LOG_E * np.power(p, q - 1.0)
    for i, (_, _, dm, nu) in enumerate(logs_b):
        slope += 0.25 * (nu * drbk * (fp[:, i] + fp[:, i + 2]) + dm * (fp[:, i] - fp[:, i + 2]))
    return slope


def _minimize_plane(b: BlochForm, objective, func) -> tuple[MeasurementDir, float, bool]:
    """Scan ``gamma`` in ``[0, pi/2]``, then polish each slope sign change with Brent's method.

    Both end points are stationary by symmetry; they count as minima when the
    slope of their neighbouring grid point points back towards them.  When the
    objective varies by less than ``FLAT_TOL`` over the whole range the
    direction cannot be resolved in double precision; the transverse axis
    (``gamma = pi/2``) is then reported and the third return value is True.
    """
    phi = _plane_axis(b)
    gs = np.linspace(0.0, math.pi / 2, N_SCAN)
    vals = objective(b, _plane_vectors(gs, phi))
    slopes = _plane_slope(b, gs, phi, func)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(slopes))):
        raise OptimizationError("measurement objective is not finite on the scan grid")
    if vals.max() - vals.min() <= FLAT_TOL:
        return MeasurementDir(math.pi / 2, phi), float(vals[-1]), True

    def slope(g):
        return float(_plane_slope(b, np.array([g]), phi, func)[0])

    cands = []
    if slopes[1] >= 0:
        cands.append(0.0)
    if slopes[-2] <= 0:
        cands.append(math.pi / 2)
    for i in range(1, N_SCAN - 2):
        if slopes[i] < 0 < slopes[i + 1]:
            cands.append(brentq(slope, gs[i], gs[i + 1], xtol=GAMMA_TOL * 1e-2))
        elif slopes[i] == 0 and slopes[i - 1] < 0 < slopes[i + 1]:
            cands.append(float(gs[i]))
    if not cands:
        cands.append(float(gs[int(np.argmin(vals))]))
    cvals = objective(b, _plane_vectors(np.array(cands), phi))
    best = int(np.argmin(cvals))
    return MeasurementDir(_fold_gamma(cands[best]), phi), float(cvals[best]), False


def _fibonacci_half_sphere(n: int) -> np.ndarray:
    i = np.arange(n)
    z = (i + 0.5) / n
    r = np.sqrt(1 - z * z)
    ang = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=-1)


_PATCH = np.linspace(-3.0, 3.0, 7)


def _tangent_basis(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(k[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(k, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(k, e1)


def _pattern_search(b: BlochForm, objective, k0: np.ndarray, step: float,
                    min_step: float = 1e-9, max_iter: int = 400) -> tuple[np.ndarray, float]:
    """Batched 7x7 pattern search in the tangent plane of the current best direction.

    The patch recentres on its best point; the step shrinks threefold when
    the centre already wins.
    """
    u, v = np.meshgrid(_PATCH, _PATCH)
    u, v = u.ravel(), v.ravel()
    k = k0 / np.linalg.norm(k0)
    best = float(objective(b, k[None, :])[0])
    for _ in range(max_iter):
        if step < min_step:
            break
        e1, e2 = _tangent_basis(k)
        K = k[None, :] + step * (u[:, None] * e1 + v[:, None] * e2)
        K /= np.linalg.norm(K, axis=1)[:, None]
        vals = objective(b, K)
        i = int(np.argmin(vals))
        if vals[i] < best:
            k, best = K[i], float(vals[i])
        else:
            step /= 3.0
    return k, best


def _minimize_sphere(b: BlochForm, objective, n_grid: int = 400,
                     n_starts: int = 3) -> tuple[MeasurementDir, float, bool]:
    K = _fibonacci_half_sphere(n_grid)
    vals = objective(b, K)
    if not np.all(np.isfinite(vals)):
        raise OptimizationError("sphere scan produced non-finite values")
    flat = float(np.ptp(vals)) <= FLAT_TOL
    spacing = math.sqrt(2.0 * math.pi / n_grid)
    best_k, best_v = K[int(np.argmin(vals))], float(np.min(vals))
    if not flat:
        for i in np.argsort(vals, kind="stable")[:n_starts]:
            k, v = _pattern_search(b, objective, K[i], spacing / 3.0)
            if v < best_v:
                best_k, best_v = k, v
    if best_k[2] < 0:
        best_k = -best_k
    return MeasurementDir.from_vector(best_k), best_v, flat


def _minimize(state: StateLike, objective, func):
    if isinstance(state, XState):
        return _minimize_plane(to_bloch(state), objective, func)
    state._require_qubits()
    return _minimize_sphere(state, objective)


def quantum_discord(state: StateLike) -> MeasureOutcome:
    """Quantum discord ``D(A|B)`` over projective spin measurements on ``B``."""
    b = _as_bloch(state)
    k, cond, flat = _minimize(state, _conditional_entropy, DISCORD)
    s_ab = entropy_values(np.asarray(state_spectrum(state)), VON_NEUMANN)
    rb = np.linalg.norm(b.rB)
    s_b = float(binary_entropy(0.5 * (1 + min(rb, 1.0))))
    value = _clamp_value(cond - s_ab + s_b)
    return MeasureOutcome(value, k, stationarity_residual(b, k, DISCORD), flat)


def info_deficit(state: StateLike, func: EntropyFunctional = VON_NEUMANN) -> MeasureOutcome:
    """One-way generalized information deficit ``I_f(A|B)``."""
    b = _as_bloch(state)
    k, s_post, flat = _minimize(state, lambda bb, K: _deficit_objective(bb, K, func), func)
    s_ab = float(entropy_values(np.asarray(state_spectrum(state)), func))
    return MeasureOutcome(_clamp_value(s_post - s_ab), k, stationarity_residual(b, k, func), flat)


def renyi_deficit_from_tsallis(iq: float, q: float, sq_state: float) -> float:
    """Renyi deficit from the Tsallis deficit ``iq`` and Tsallis entropy ``sq_state`` of the state.

    ``(1 / (1 - q)) log2(1 - c_q iq / (1 - c_q S_q(rho)))``.  Both deficits
    are minimised by the same measurement since the map is increasing.
    """
    if q <= 0 or abs(q - 1) < 1e-6:
        raise DomainError(f"need q > 0 and q != 1, got {q}")
    cq = tsallis_constant(q)
    den = 1.0 - cq * sq_state
    arg = 1.0 - cq * iq / den
    if den <= 0 or arg <= 0:
        raise DomainError("Tsallis values outside the range of a valid state")
    return float(math.log2(arg) / (1.0 - q))


def geometric_deficit_I2(state: StateLike, tie_tol: float = 1e-12) -> MeasureOutcome:
    """Quadratic deficit ``I2 = (Tr M2 - lambda_max) / dA``, ``M2 = rB rB^T + J^T J``.

    Exact ties between the field axis and a transverse axis resolve to ``z``;
    any tie of the largest eigenvalue sets ``degenerate``.
    """
    b = _as_bloch(state)
    M2 = np.outer(b.rB, b.rB) + b.J.T @ b.J
    w, v = np.linalg.eigh(M2)
    lam = w[-1]
    scale = max(1.0, abs(lam))
    degenerate = bool(w[-1] - w[-2] <= tie_tol * scale)
    k = v[:, -1]
    if degenerate and M2[2, 2] >= lam - tie_tol * scale and abs(M2[2, :2]).max() <= tie_tol:
        k = np.array([0.0, 0.0, 1.0])
    elif np.abs(M2 - np.diag(np.diag(M2))).max() <= tie_tol * scale:
        # diagonal M2: report a coordinate axis exactly
        k = np.eye(3)[int(np.argmax(np.abs(k)))]
    if k[2] < 0 or (k[2] == 0 and k[0] < 0):
        k = -k
    value = _clamp_value((np.trace(M2) - lam) / b.dA)
    residual = float(np.linalg.norm(M2 @ k - lam * k))
    return MeasureOutcome(value, MeasurementDir.from_vector(k), residual, degenerate)


def i2_at_direction(state: StateLike, k: MeasurementDir) -> float:
    """``I2(k) = (Tr M2 - k^T M2 k) / dA`` for a fixed measurement."""
    b = _as_bloch(state)
    M2 = np.outer(b.rB, b.rB) + b.J.T @ b.J
    kv = k.vector
    return float((np.trace(M2) - kv @ M2 @ kv) / b.dA)


# --------------------------------------------------------------------------
# entanglement
# --------------------------------------------------------------------------

def concurrence(x: XState) -> float:
    """Wootters concurrence of an X state, ``2 max(|b| - sqrt(c+c-), |a| - sqrt(a+a-), 0)``."""
    par, anti = _concurrence_entries(x)
    return float(min(max(2 * par, 2 * anti, 0.0), 1.0))


def _concurrence_entries(x: XState) -> tuple[float, float]:
    cc = math.sqrt(max(x.c_plus, 0.0) * max(x.c_minus, 0.0))
    aa = math.sqrt(max(x.a_plus, 0.0) * max(x.a_minus, 0.0))
    return abs(x.beta) - cc, abs(x.alpha) - aa


def entanglement_type(x: XState) -> str | None:
    """``"parallel"``, ``"antiparallel"`` or ``None`` for separable pairs."""
    par, anti = _concurrence_entries(x)
    if par > 0:
        return "parallel"
    if anti > 0:
        return "antiparallel"
    return None


def wootters_concurrence(rho: np.ndarray) -> float:
    """Concurrence of an arbitrary two-qubit density matrix.

    Uses the singular values of ``X^T (sy sy) X`` with ``rho = X X^+``, which
    avoids square roots of round-off eigenvalues for rank-deficient states.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(rho)
    x = v * np.sqrt(np.clip(w, 0.0, None))
    s = np.linalg.svd(x.T @ np.kron(PAULI[1], PAULI[1]) @ x, compute_uv=False)
    return float(max(0.0, s[0] - s[1:].sum()))


def entanglement_of_formation(c: float) -> float:
    """Two-qubit entanglement of formation as a function of the concurrence."""
    if not (-1e-12 <= c <= 1 + 1e-12):
        raise DomainError(f"concurrence must lie in [0, 1], got {c}")
    c = min(max(c, 0.0), 1.0)
    q_plus = 0.5 * (1 + math.sqrt(1 - c * c))
    return float(binary_entropy(q_plus))


# --------------------------------------------------------------------------
# stationarity and the quadratic estimate
# --------------------------------------------------------------------------

def _effective_derivatives(func, p: np.ndarray):
    """``f'`` and ``f''`` on ``p``; Renyi uses the gradient of ``log Tr p^q / (1-q)``."""
    pc = np.maximum(p, P_FLOOR)
    if func is DISCORD or func.is_trace_form:
        f = VON_NEUMANN if func is DISCORD else func
        return f.fprime(pc), (lambda x: f.fsecond(np.maximum(x, P_FLOOR)))
    q = func.q
    T = float(np.sum(np.power(p, q)))
    scale = q / ((1.0 - q) * T) * LOG_E
    return scale * np.power(pc, q - 1.0), (lambda x: scale * (q - 1.0)
                                           * np.power(np.maximum(x, P_FLOOR), q - 2.0))


def _divided_difference(fp_hi, fp_lo, p_hi, p_lo, fsecond) -> float:
    dp = p_hi - p_lo
    if abs(dp) > 1e-9 * max(1.0, abs(p_hi)):
        return (fp_hi - fp_lo) / dp
    return float(fsecond(0.5 * (p_hi + p_lo)))


def stationarity_residual(b: StateLike, k: MeasurementDir, func=VON_NEUMANN) -> float:
    """Norm of the component of ``a1 rB + a2 J^T rA + a3 J^T J k`` orthogonal to ``k``.

    This is the tangential gradient of the measurement objective on the unit
    sphere; it vanishes at every stationary measurement.  Pass ``DISCORD`` for
    the quantum discord objective.  Equal post-measurement eigenvalues use the
    ``f''`` limit of the divided difference.
    """
    b = _as_bloch(b)
    b._require_qubits()
    kv = k.vector
    p, pB = _post_probs(b, kv[None, :])
    p = p[0]
    fp, fsecond = _effective_derivatives(func, p)
    # an outcome of zero probability (pure marginal of B) carries no weight
    live = pB[0] > BRANCH_TOL
    fp = np.where(np.repeat(live, 2), fp, 0.0)
    a1 = 0.25 * (fp[0] + fp[1] - fp[2] - fp[3])
    dd_plus = _divided_difference(fp[0], fp[1], p[0], p[1], fsecond) if live[0] else 0.0
    dd_minus = _divided_difference(fp[2], fp[3], p[2], p[3], fsecond) if live[1] else 0.0
    # sum_mu mu f'(p_mu,nu) / m_nu = dd_nu / 2
    a2 = 0.125 * (dd_plus - dd_minus)
    a3 = 0.125 * (dd_plus + dd_minus)
    if func is DISCORD:
        if live.all():
            a1 -= 0.5 * math.log2(pB[0][1] / pB[0][0])
    grad = a1 * b.rB + a2 * (b.J.T @ b.rA) + a3 * (b.J.T @ b.J @ kv)
    tangential = grad - (grad @ kv) * kv
    return float(np.linalg.norm(tangential))


def measured_basis(b: StateLike, k: MeasurementDir) -> np.ndarray:
    """Columns ``|i_nu>|nu_k>``: eigenbasis of the post-measurement state."""
    b = _as_bloch(b)
    b._require_qubits()
    rho = b.to_matrix()
    _, wb = np.linalg.eigh(np.einsum("m,mij->ij", k.vector, PAULI))
    wb = wb[:, ::-1]  # (+k, -k)
    basis = []
    for nu in range(2):
        proj = np.kron(I2, np.outer(wb[:, nu], wb[:, nu].conj()))
        block = np.einsum("aibj,i,j->ab", (proj @ rho @ proj).reshape(2, 2, 2, 2),
                          wb[:, nu].conj(), wb[:, nu])
        _, ua = np.linalg.eigh(block)
        for i in range(2):
            basis.append(np.kron(ua[:, i], wb[:, nu]))
    return np.array(basis).T


def deficit_second_order(b: StateLike, k: MeasurementDir, func=VON_NEUMANN) -> float:
    """Second-order estimate of ``S_f(rho') - S_f(rho)`` from the elements lost in the measurement.

    ``sum_{mu<nu} (f'(p_mu) - f'(p_nu)) / (p_nu - p_mu) |<nu'|rho|mu'>|^2``;
    equal pairs use ``-f''(p_mu)``.
    """
    b = _as_bloch(b)
    V = measured_basis(b, k)
    R = V.conj().T @ b.to_matrix() @ V
    p = np.real(np.diag(R))
    fp, fsecond = _effective_derivatives(func, p)
    total = 0.0
    for mu in range(4):
        for nu in range(mu + 1, 4):
            w = -_divided_difference(fp[nu], fp[mu], p[nu], p[mu], fsecond)
            total += w * abs(R[nu, mu]) ** 2
    return float(total)
