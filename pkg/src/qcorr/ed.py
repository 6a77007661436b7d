"""Dense exact diagonalization of small XY chains, used to falsify the fast paths.

Basis states are integers whose bit ``n - 1 - i`` holds site ``i``; a zero
bit is spin up.  The Hamiltonian is built block by block in the two
``P_z = (-1)**(number of up spins)`` sectors, so it commutes with the parity
by construction.  Measurement optimisation here is an exhaustive search with
dense projectors, sharing no code with the closed forms in :mod:`qcorr.measures`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .chain import ChainParams
from .entropy import VON_NEUMANN, EntropyFunctional, entropy_values
from .errors import DomainError, NumericalError, ResourceError
from .measures import (
    DISCORD, I2, PAULI, BlochForm, MeasureOutcome, MeasurementDir, XState,
)

MAX_SITES = 12
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class DenseState:
    """Normalised real ground-state vector of one parity sector."""

    amplitudes: np.ndarray = field(repr=False)
    parity: int
    energy: float
    n: int

    def __post_init__(self):
        a = np.asarray(self.amplitudes)
        if a.shape != (2 ** self.n,):
            raise DomainError(f"expected {2 ** self.n} amplitudes, got shape {a.shape}")
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise DomainError("state is not normalised")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)


@dataclass(frozen=True)
class ExactGround:
    """Sector ground states; ``ground`` is the lower one (even on an exact tie)."""

    even: DenseState
    odd: DenseState

    def sector(self, parity: int) -> DenseState:
        if parity not in (1, -1):
            raise DomainError(f"parity must be +1 or -1, got {parity}")
        return self.even if parity == 1 else self.odd

    @property
    def ground(self) -> DenseState:
        return self.odd if self.odd.energy < self.even.energy - DEGENERACY_TOL else self.even


def _up_counts(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return n - np.array([bin(i).count("1") for i in idx])


def sector_hamiltonian(p: ChainParams, parity: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense Hamiltonian block of one parity sector and its basis indices."""
    n = p.n
    ups = _up_counts(n)
    basis = np.flatnonzero((ups % 2 == 0) if parity == 1 else (ups % 2 == 1))
    pos = {int(s): i for i, s in enumerate(basis)}
    dim = basis.size
    H = np.zeros((dim, dim))
    H[np.arange(dim), np.arange(dim)] = p.b * (ups[basis] - 0.5 * n)
    hop, pair = -0.5 * p.j_plus, -0.5 * p.j_minus
    for i in range(n):
        j = (i + 1) % n
        mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
        for a, s in enumerate(basis):
            s = int(s)
            bi, bj = (s >> (n - 1 - i)) & 1, (s >> (n - 1 - j)) & 1
            amp = hop if bi != bj else pair
            if amp != 0.0:
                H[pos[s ^ mask], a] += amp
    return H, basis


def _sector_ground(p: ChainParams, parity: int) -> DenseState:
    H, basis = sector_hamiltonian(p, parity)
    w, v = np.linalg.eigh(H)
    scale = max(p.jx, p.b, 1.0)
    deg = np.flatnonzero(w <= w[0] + DEGENERACY_TOL * scale)
    vec = v[:, 0]
    if deg.size > 1:
        # resolve like the B -> B+ limit: lowest total S_z inside the ground multiplet
        sz = _up_counts(p.n)[basis] - 0.5 * p.n
        sub = v[:, deg]
        ws, vs = np.linalg.eigh(sub.T @ (sz[:, None] * sub))
        vec = sub @ vs[:, 0]
    full = np.zeros(2 ** p.n)
    full[basis] = vec / np.linalg.norm(vec)
    i = int(np.argmax(np.abs(full)))
    if full[i] < 0:
        full = -full
    return DenseState(full, parity, float(w[0]), p.n)


def ground_state_exact(p: ChainParams) -> ExactGround:
    """Lowest eigenvector of each parity sector by dense diagonalization.

    Raises :class:`ResourceError` for ``n > 12``.  A degenerate sector ground
    level is resolved by taking the state of lowest total ``S_z``.
    """
    if p.n > MAX_SITES:
        raise ResourceError(f"dense diagonalization limited to n <= {MAX_SITES}, got {p.n}")
    return ExactGround(_sector_ground(p, 1), _sector_ground(p, -1))


def parity_of(s: DenseState) -> float:
    """``<P_z>`` of a dense state."""
    sign = np.where(_up_counts(s.n) % 2 == 0, 1.0, -1.0)
    return float(np.sum(sign * s.amplitudes ** 2))


def reduce_pair_matrix(s: DenseState, i: int, j: int) -> np.ndarray:
    if not 0 <= i < j < s.n:
        raise DomainError(f"need 0 <= i < j < n, got ({i}, {j})")
    t = np.moveaxis(s.tensor(), (i, j), (0, 1)).reshape(4, -1)
    return t @ t.conj().T


def reduce_pair(s: DenseState, i: int, j: int) -> XState:
    """Two-site reduced state; raises :class:`StructureError` if it is not of X form."""
    return XState.from_matrix(reduce_pair_matrix(s, i, j), tol=1e-10)


def fermion_contractions(s: DenseState, lmax: int) -> tuple[np.ndarray, np.ndarray]:
    """``f_L = <c+_0 c_L> - delta_L0 / 2`` and ``g_L = <c+_0 c+_L>`` from the spin state.

    Uses ``c_i = prod_{l<i}(-sigma_lz) sigma^-_i`` with spin up as an occupied site.
    """
    n = s.n
    psi = s.tensor()
    zsign = np.array([1.0, -1.0])  # sigma_z on (up, down)

    def lower(t, site):  # sigma^-: up -> down
        out = np.zeros_like(t)
        src = [slice(None)] * n
        dst = [slice(None)] * n
        src[site], dst[site] = 0, 1
        out[tuple(dst)] = t[tuple(src)]
        return out

    def string(t, sites):
        for l in sites:
            shape = [1] * n
            shape[l] = 2
            t = t * (-zsign).reshape(shape)
        return t

    f = np.zeros(lmax + 1)
    g = np.zeros(lmax + 1)
    for L in range(lmax + 1):
        # c_L |psi>, then c_0 on it; <c+_0 c_L> = <c_0 psi | c_L psi>
        cl = lower(string(psi, range(L)), L)
        c0 = lower(psi, 0)
        f[L] = float(np.vdot(c0, cl).real) - (0.5 if L == 0 else 0.0)
        if L > 0:
            # <c+_0 c+_L> = -<c+_L c+_0> = -<c_0 c_L psi | psi> (real state)
            g[L] = -float(np.vdot(lower(cl, 0), psi).real)
    return f, g


# --------------------------------------------------------------------------
# exhaustive measurement search
# --------------------------------------------------------------------------

def _dense(state) -> np.ndarray:
    if isinstance(state, (XState, BlochForm)):
        return np.asarray(state.to_matrix(), dtype=complex)
    rho = np.asarray(state, dtype=complex)
    if rho.shape == (4,):
        rho = np.outer(rho, rho.conj())
    if rho.shape != (4, 4):
        raise DomainError("expected a two-qubit state")
    return rho


def _directions(gamma, phi) -> np.ndarray:
    gamma, phi = np.broadcast_arrays(np.asarray(gamma, float), np.asarray(phi, float))
    s = np.sin(gamma)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(gamma)], axis=-1)


def _batch_objective(rho: np.ndarray, K: np.ndarray, which) -> np.ndarray:
    """Post-measurement entropy (deficit) or conditional entropy (discord) for directions ``K``."""
    ks = np.einsum("km,mij->kij", K, PAULI)
    projs = [0.5 * (I2[None] + sgn * ks) for sgn in (1, -1)]
    post = np.zeros((K.shape[0], 4, 4), dtype=complex)
    pb = []
    for P in projs:
        big = np.einsum("ab,kij->kaibj", I2, P).reshape(-1, 4, 4)
        block = big @ rho[None] @ big
        post += block
        pb.append(np.einsum("kii->k", block).real)
    ev = np.linalg.eigvalsh(post)
    if which is DISCORD:
        return (entropy_values(ev, VON_NEUMANN)
                - entropy_values(np.stack(pb, axis=-1), VON_NEUMANN))
    return entropy_values(ev, which)


def _reference(rho: np.ndarray, which) -> float:
    """State-dependent offset: ``S(AB) - S(B)`` for discord, ``S(AB)`` for a deficit."""
    ev = np.linalg.eigvalsh(rho)
    if which is DISCORD:
        rb = np.einsum("aiaj->ij", rho.reshape(2, 2, 2, 2))
        return float(entropy_values(ev, VON_NEUMANN)
                     - entropy_values(np.linalg.eigvalsh(rb), VON_NEUMANN))
    return float(entropy_values(ev, which))


def grid_minimize_measure(state, which=DISCORD, resolution: int = 64) -> MeasureOutcome:
    """Minimise a measurement-based measure by exhaustive search over the half sphere.

    ``resolution**2 / 2`` Fibonacci directions are evaluated, the best few are
    refined twice on shrinking local ``(gamma, phi)`` patches and finally
    polished with Nelder-Mead.  ``which`` is :data:`DISCORD` or an
    :class:`EntropyFunctional` (information deficit).
    """
    if resolution < 64:
        raise DomainError(f"resolution must be >= 64, got {resolution}")
    if which is not DISCORD and not isinstance(which, EntropyFunctional):
        raise DomainError("which must be DISCORD or an EntropyFunctional")
    rho = _dense(state)
    npts = resolution * resolution // 2
    i = np.arange(npts)
    z = (i + 0.5) / npts
    ang = i * math.pi * (3.0 - math.sqrt(5.0))
    gam, ph = np.arccos(z), np.mod(ang, 2 * math.pi)
    vals = _batch_objective(rho, _directions(gam, ph), which)

    width = 2.0 * math.sqrt(2 * math.pi / npts)
    order = np.argsort(vals, kind="stable")[:4]
    starts = [(gam[j], ph[j], vals[j]) for j in order]
    refined = []
    for g0, p0, v0 in starts:
        w = width
        for _ in range(2):
            gg, pp = np.meshgrid(g0 + w * np.linspace(-1, 1, 15), p0 + w * np.linspace(-1, 1, 15))
            vv = _batch_objective(rho, _directions(gg.ravel(), pp.ravel()), which)
            j = int(np.argmin(vv))
            if vv[j] < v0:
                g0, p0, v0 = gg.ravel()[j], pp.ravel()[j], vv[j]
            w /= 7.0
        refined.append((g0, p0, v0))

    def scalar(x):
        return float(_batch_objective(rho, _directions([x[0]], [x[1]]), which)[0])

    best = None
    for g0, p0, v0 in refined:
        res = minimize(scalar, [g0, p0], method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 2000})
        cand = (res.x, res.fun) if res.fun < v0 else (np.array([g0, p0]), v0)
        if best is None or cand[1] < best[1]:
            best = cand
    (g, ph_best), val = best
    if not math.isfinite(val):
        raise NumericalError("grid search produced no finite value")
    k = _directions(g, ph_best)
    if k[2] < 0:
        k = -k
    value = max(float(val - _reference(rho, which)), 0.0)
    return MeasureOutcome(value, MeasurementDir.from_vector(k), _grid_residual(rho, k, which))


def _grid_residual(rho, k, which, h: float = 1e-5) -> float:
    """Tangential gradient norm of the objective at ``k`` by central differences."""
    e1 = np.cross(k, [1.0, 0.0, 0.0] if abs(k[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k, e1)
    grads = []
    for e in (e1, e2):
        pts = np.array([k * math.cos(h) + e * math.sin(h), k * math.cos(h) - e * math.sin(h)])
        v = _batch_objective(rho, pts, which)
        grads.append((v[0] - v[1]) / (2 * h))
    return float(math.hypot(*grads))


def compare_with_solver(n: int, chis=(0.25, 0.5, 1.0), fields=(0.0, 0.3, None, 1.0, 1.5),
                        jx: float = 1.0) -> list[tuple[float, float, int, float]]:
    """Largest XState deviation between the fermion solver and dense ED.

    ``None`` in ``fields`` stands for the factorizing field ``sqrt(chi) Jx``.
    Returns ``(chi, B, parity, max |difference|)`` per sector.
    """
    from .chain import pair_rdms

    out = []
    for chi in chis:
        for bf in fields:
            b = math.sqrt(chi) * jx if bf is None else bf * jx
            p = ChainParams(n, jx, chi * jx, b)
            exact = ground_state_exact(p)
            for parity in (1, -1):
                s = exact.sector(parity)
                fast = pair_rdms(p, parity, range(1, n // 2 + 1))
                dev = max(float(np.max(np.abs(np.subtract(fast[L].as_array(),
                                                          reduce_pair(s, 0, L).as_array()))))
                          for L in fast)
                out.append((chi, b, parity, dev))
    return out
