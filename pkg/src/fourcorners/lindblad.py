"""Lindbladian superoperators, gauge freedom, propagation and spectra."""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csgraph, csr_matrix

from .opspace import (
    dagger,
    devectorize,
    left_superop,
    right_superop,
    sandwich_superop,
    vectorize,
)

__all__ = [
    "LindbladModel",
    "Spectrum",
    "build_generator",
    "build_adjoint_generator",
    "gauge_transform",
    "propagate",
    "spectrum",
    "block_eigvals",
    "default_zero_tol",
    "dissipative_gap",
]


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian ``H`` and jumps ``[(F, kappa), ...]`` (hbar = 1)."""

    H: np.ndarray
    jumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if not np.all(np.isfinite(H)):
            raise ValueError("H has non-finite entries")
        if np.max(np.abs(H - dagger(H)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
            raise ValueError("H is not Hermitian")
        jumps = []
        for F, k in self.jumps:
            F = np.asarray(F, dtype=complex)
            if F.shape != H.shape:
                raise ValueError(f"jump shape {F.shape} does not match H {H.shape}")
            if not np.all(np.isfinite(F)):
                raise ValueError("jump operator has non-finite entries")
            k = float(k)
            if not k > 0:
                raise ValueError(f"rates must be positive, got {k}")
            jumps.append((F, k))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def operators(self):
        return [F for F, _ in self.jumps]

    @property
    def rates(self):
        return np.array([k for _, k in self.jumps], dtype=float)

    def conjugated(self, U):
        """Model with every operator rotated, X -> U X U^dag."""
        U = np.asarray(U)
        Ud = dagger(U)
        H = U @ self.H @ Ud
        return LindbladModel(0.5 * (H + dagger(H)), tuple((U @ F @ Ud, k) for F, k in self.jumps))


def build_generator(m):
    """Column-stacked matrix of L(rho) = -i[H,rho] + sum k (F rho F^dag - {F^dag F, rho}/2)."""
    N = m.dim
    L = -1j * (left_superop(m.H) - right_superop(m.H))
    eye = np.eye(N)
    for F, k in m.jumps:
        FdF = dagger(F) @ F
        L += k * (np.kron(F.conj(), F) - 0.5 * np.kron(eye, FdF) - 0.5 * np.kron(FdF.T, eye))
    return L


def build_adjoint_generator(m):
    """Heisenberg generator L^dag(A) = i[H,A] + sum k (F^dag A F - {F^dag F, A}/2)."""
    N = m.dim
    Ld = 1j * (left_superop(m.H) - right_superop(m.H))
    eye = np.eye(N)
    for F, k in m.jumps:
        FdF = dagger(F) @ F
        Ld += k * (sandwich_superop(dagger(F), F) - 0.5 * np.kron(eye, FdF) - 0.5 * np.kron(FdF.T, eye))
    return Ld


def gauge_transform(m, g):
    """Shift F -> F + g I and H -> H - (i/2) sum k (g* F - g F^dag); L is unchanged."""
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    if g.shape[0] != len(m.jumps):
        raise ValueError(f"need {len(m.jumps)} gauge parameters, got {g.shape[0]}")
    N = m.dim
    H = m.H.copy()
    jumps = []
    for (F, k), gl in zip(m.jumps, g):
        H = H - 0.5j * k * (np.conj(gl) * F - gl * dagger(F))
        jumps.append((F + gl * np.eye(N), k))
    return LindbladModel(0.5 * (H + dagger(H)), tuple(jumps))


def propagate(L, rho0, t):
    """e^{tL} rho0 by scaling and squaring."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if np.max(np.abs(rho0 - dagger(rho0))) > 1e-10 or abs(np.trace(rho0) - 1) > 1e-10:
        warnings.warn("initial operator is not a unit-trace Hermitian matrix", stacklevel=2)
    if t == 0:
        return rho0.copy()
    return devectorize(sla.expm(t * np.asarray(L)) @ vectorize(rho0))


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a superoperator.

    ``right`` and ``left`` hold eigenvectors as columns, with
    ``L @ right[:, i] = lam_i right[:, i]`` and ``left[:, i]^dag L = lam_i left[:, i]^dag``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    diagonalizable: bool
    condition: float
    right_residuals: np.ndarray
    left_residuals: np.ndarray

    @property
    def radius(self):
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))

    def __len__(self):
        return self.eigenvalues.shape[0]


def default_zero_tol(radius):
    return 1e-8 * max(1.0, float(radius))


def spectrum(L, cond_limit=1e8):
    """Full left/right eigen-decomposition with per-pair residuals."""
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("superoperator must be square")
    try:
        lam, vl, vr = sla.eig(L, left=True, right=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"eigensolver failed: {exc}") from exc
    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)
    rres = np.linalg.norm(L @ vr - vr * lam, axis=0)
    lres = np.linalg.norm(vl.conj().T @ L - lam[:, None] * vl.conj().T, axis=1)
    gram = vl.conj().T @ vr
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(gram)) if gram.size else 1.0
    if not np.isfinite(cond):
        cond = np.inf
    return Spectrum(lam, vr, vl, cond < cond_limit, cond, rres, lres)


def block_eigvals(L, tol=0.0):
    """Eigenvalues of L computed on the connected components of its sparsity graph.

    Permuting to block-diagonal form is exact, so this is the full spectrum
    at a fraction of the cost when L has symmetry sectors (e.g. parity).
    """
    A = np.asarray(L)
    mask = np.abs(A) > tol * max(1.0, np.max(np.abs(A), initial=0.0))
    mask = mask | mask.T
    ncomp, labels = csgraph.connected_components(csr_matrix(mask), directed=False)
    out = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        out.append(sla.eigvals(A[np.ix_(idx, idx)]))
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


def dissipative_gap(spec, zero_tol=None):
    """Smallest |Re lambda| over the decaying eigenvalues; +inf if there are none."""
    lam = spec.eigenvalues if isinstance(spec, Spectrum) else np.asarray(spec)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if zero_tol is None:
        zero_tol = default_zero_tol(np.max(np.abs(lam)))
    re = np.abs(lam.real)
    dec = re[re > zero_tol]
    return float(dec.min()) if dec.size else float("inf")
