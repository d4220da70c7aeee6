"""Linear response of asymptotic states and effective in-subspace generators."""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .asymptotics import (
    NSStructure,
    complement_inverse,
    drazin_inverse,
    ns_partial_trace,
    trivial_ns_structure,
)
from .lindblad import LindbladModel
from .opspace import (
    HermitianBasis,
    commutator_superop,
    dagger,
    devectorize,
    is_unitary_generator,
    sandwich_superop,
    superop_in_hermitian_basis,
    vectorize,
)

__all__ = [
    "Perturbation",
    "ResponseResult",
    "FrequencyResult",
    "LeakageResult",
    "SecondOrderResult",
    "perturbation_superop",
    "kubo_time_response",
    "frequency_response",
    "effective_hamiltonian_W",
    "effective_hamiltonian_Y",
    "combined_X",
    "leakage",
    "second_order_term",
]


@dataclass(frozen=True)
class Perturbation:
    """H -> H + g V and F_l -> F_l + g f_l for (l, f_l) in ``jump_deltas``."""

    V: np.ndarray = None
    jump_deltas: tuple = ()

    def __post_init__(self):
        if self.V is not None:
            V = np.asarray(self.V, dtype=complex)
            if np.max(np.abs(V - dagger(V))) > 1e-12 * max(1.0, np.max(np.abs(V))):
                raise ValueError("V must be Hermitian")
            object.__setattr__(self, "V", V)
        object.__setattr__(self, "jump_deltas",
                           tuple((int(l), np.asarray(f, dtype=complex)) for l, f in self.jump_deltas))

    @property
    def kind(self):
        if self.V is not None and self.jump_deltas:
            return "combined"
        return "jump" if self.jump_deltas else "hamiltonian"


def perturbation_superop(p, m):
    """First-order change of the generator: -i[V,.] + sum k (F . f^dag + f . F^dag - {f^dag F + F^dag f, .}/2)."""
    N = m.dim
    S = np.zeros((N * N, N * N), dtype=complex)
    if p.V is not None:
        S += commutator_superop(p.V)
    eye = np.eye(N)
    for l, f in p.jump_deltas:
        if not 0 <= l < len(m.jumps):
            raise IndexError(f"jump index {l} out of range")
        F, k = m.jumps[l]
        A = dagger(f) @ F + dagger(F) @ f
        S += k * (sandwich_superop(F, dagger(f)) + sandwich_superop(f, dagger(F))
                  - 0.5 * np.kron(eye, A) - 0.5 * np.kron(A.T, eye))
    return S


@dataclass(frozen=True)
class ResponseResult:
    """Kubo response split into in-subspace, interference and outside parts."""

    total: np.ndarray
    in_subspace: np.ndarray
    interference: np.ndarray
    outside: np.ndarray
    times: np.ndarray = None
    quadrature_error: float = float("nan")


def _default_rho(space, rho_inf):
    if rho_inf is None:
        return space.steady_state()
    return np.asarray(rho_inf, dtype=complex)


def _check_steady(L, rho, tol=1e-9):
    r = np.linalg.norm(L @ vectorize(rho))
    if r > tol * max(1.0, np.linalg.norm(L)):
        raise ValueError(f"rho_inf is not steady (residual {r:.2e})")


def _kernels(L, space, A, v, h, n):
    """chi_x(u_j) for the three parts, u_j = j h."""
    PUL = space.corners.proj_UL
    a = vectorize(A)
    a_ul = PUL @ a
    a_out = a - a_ul
    Pinf = space.Pinf
    vP = Pinf @ v
    vQ = v - vP
    v_out = v - PUL @ v
    E = sla.expm(h * np.asarray(L))
    out = np.zeros((3, n), dtype=complex)
    x = np.stack([vP, vQ, v_out], axis=1)
    for j in range(n):
        out[0, j] = np.vdot(a_ul, x[:, 0])
        out[1, j] = np.vdot(a_ul, x[:, 1])
        out[2, j] = np.vdot(a_out, x[:, 2])
        x = E @ x
    return out


def _convolve(g, chi, h):
    """R_k = int_0^{t_k} g(t_k - u) chi(u) du, trapezoid on a uniform grid."""
    n = g.shape[0]
    out = np.zeros(n, dtype=complex)
    full = np.convolve(g, chi)[:n]
    for k in range(1, n):
        out[k] = h * (full[k] - 0.5 * g[k] * chi[0] - 0.5 * g[0] * chi[k])
    return out


def kubo_time_response(L, space, A, dL, g, t_grid, rho_inf=None):
    """<<A|delta rho(t)>> = int dtau g(tau) <<A| e^{(t - tau)L} dL |rho_inf>> on a uniform grid.

    ``g`` is a callable or an array sampled on ``t_grid``; the drive starts
    at ``t_grid[0]``.  The quadrature error is estimated by comparing with
    the same rule on every second grid point.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise ValueError("need a one-dimensional grid of at least 3 points")
    h = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("time grid must be uniform")
    gs = np.asarray(g(t) if callable(g) else g, dtype=complex)
    rho = _default_rho(space, rho_inf)
    _check_steady(L, rho)
    v = np.asarray(dL) @ vectorize(rho)
    chi = _kernels(L, space, A, v, h, t.size)
    parts = np.array([_convolve(gs, c, h) for c in chi])
    total = parts.sum(axis=0)
    coarse = sum(_convolve(gs[::2], c[::2], 2 * h) for c in chi)
    err = float(np.max(np.abs(coarse - total[::2])) / 3.0)
    return ResponseResult(total, parts[0], parts[1], parts[2], t, err)


@dataclass(frozen=True)
class FrequencyResult:
    value: complex
    by_eps: dict = field(default_factory=dict)
    resonant: bool = False
    error: float = float("nan")


def frequency_response(L, space, A, dL, omega, eps=None, rho_inf=None):
    """chi(omega) = -<<A|(L + i(omega + i eps))^{-1} dL|rho_inf>>.

    With ``eps`` given, the value at that broadening.  Otherwise eps -> 0 by
    Richardson extrapolation over (1e-3, 1e-4, 1e-5); near an asymptotic
    eigenfrequency with nonzero weight the point is flagged resonant and the
    smallest-eps value is returned unextrapolated.
    """
    L = np.asarray(L)
    rho = _default_rho(space, rho_inf)
    _check_steady(L, rho)
    v = np.asarray(dL) @ vectorize(rho)
    a = vectorize(A)
    I = np.eye(L.shape[0])

    def at(e):
        z = omega + 1j * e
        return -np.vdot(a, np.linalg.solve(L + 1j * z * I, v))

    if eps is not None:
        return FrequencyResult(complex(at(eps)), {eps: complex(at(eps))})
    epss = (1e-3, 1e-4, 1e-5)
    vals = {e: complex(at(e)) for e in epss}
    weights = space.j_kets.conj().T @ v
    guard = 10 * max(epss)
    scale = max(1.0, np.linalg.norm(v))
    resonant = bool(np.any((np.abs(omega + space.frequencies) < guard) & (np.abs(weights) > 1e-10 * scale)))
    if resonant:
        warnings.warn(f"omega={omega} is resonant with an asymptotic frequency", stacklevel=2)
        return FrequencyResult(vals[epss[-1]], vals, True, float("nan"))
    # quadratic through the three points, evaluated at eps = 0 (Neville)
    x = np.array(epss)
    y = np.array([vals[e] for e in epss])
    c = np.polyfit(x, y.real, 2)[-1] + 1j * np.polyfit(x, y.imag, 2)[-1]
    lin = y[2] - (y[1] - y[2]) * x[2] / (x[1] - x[2])
    return FrequencyResult(complex(c), vals, False, float(abs(c - lin)))


def _steady_basis(space):
    idx = space.steady_index
    return space.Psi[idx], space.J_UL[idx]


def effective_hamiltonian_W(space, p, m=None):
    """In-subspace first-order generator P_Psi dL P_Psi and its unitarity report.

    ``p`` is a Perturbation (requires ``m``) or a superoperator.  The report
    holds the matrix <<J_UL^mu| dL |Psi_nu>> over the steady Hermitian basis
    and whether it is real antisymmetric (i.e. of the form -i[W, .]).
    """
    dL = perturbation_superop(p, m) if isinstance(p, Perturbation) else np.asarray(p)
    W = space.Ppsi @ dL @ space.Ppsi
    Psi, Jul = _steady_basis(space)
    basis = HermitianBasis(Psi, Jul)
    M, is_real = superop_in_hermitian_basis(dL, basis, tol=1e-9)
    unitary = bool(is_real and is_unitary_generator(dL, basis, tol=1e-9))
    Mc = np.asarray(M)
    rep = dict(matrix=Mc, real=is_real, unitary=unitary,
               max_imag=float(np.max(np.abs(np.imag(Mc)), initial=0.0)),
               max_symmetric=float(np.max(np.abs(np.real(Mc) + np.real(Mc).T), initial=0.0)))
    return W, rep


def combined_X(m, p):
    """X = V + (i/2) sum k (F^dag f - f^dag F)."""
    N = m.dim
    X = np.zeros((N, N), dtype=complex) if p.V is None else p.V.copy()
    for l, f in p.jump_deltas:
        F, k = m.jumps[l]
        X = X + 0.5j * k * (dagger(F) @ f - dagger(f) @ F)
    return 0.5 * (X + dagger(X))


def effective_hamiltonian_Y(space, ns, m, p):
    """Y = (i/2) sum k Tr_ax{rho_ax (F_UL^dag f_UL - f_UL^dag F_UL)} on the DFS factor.

    For a decoherence-free subspace pass ``ns=None`` (trivial auxiliary factor).
    """
    if ns is None:
        if space is None:
            raise ValueError("missing noiseless-subsystem structure")
        ns = trivial_ns_structure(space.corners.P)
    if not isinstance(ns, NSStructure):
        raise TypeError("ns must be an NSStructure")
    P = ns.P
    d = ns.d
    Y = np.zeros((d, d), dtype=complex)
    for l, f in p.jump_deltas:
        F, k = m.jumps[l]
        Fu, fu = P @ F @ P, P @ f @ P
        Y += 0.5j * k * ns_partial_trace(ns, dagger(Fu) @ fu - dagger(fu) @ Fu)
    return 0.5 * (Y + dagger(Y))


@dataclass(frozen=True)
class LeakageResult:
    """Leakage -L^{-1} dL rho_inf.

    ``drazin`` uses the full Drazin inverse; ``complement`` is
    -L_c^{-1} P_c dL rho_inf with L_c the compression to the complement of UL.
    Block triangularity makes ``P_c drazin == complement`` exact in general
    (``deviation``); ``ul_norm`` is the UL part of ``drazin``, which vanishes
    for decoherence-free subspaces so that the two vectors then coincide.
    """

    drazin: np.ndarray
    complement: np.ndarray
    deviation: float
    ul_norm: float

    @property
    def total_deviation(self):
        return float(np.linalg.norm(self.drazin - self.complement))

    def corner_norms(self, cp):
        X = devectorize(self.drazin)
        return {c: float(np.linalg.norm(cp.project(X, c))) for c in ("UL", "UR", "LL", "LR")}


def leakage(space, dL, rho_inf=None, Linv=None):
    """Leakage out of the asymptotic subspace after a ramped-step perturbation."""
    L = space.L
    rho = _default_rho(space, rho_inf)
    v = np.asarray(dL) @ vectorize(rho)
    if Linv is None:
        Linv = drazin_inverse(L, space)
    a = -Linv @ v
    B = space.corners.basis("complement")
    if B.shape[1]:
        Lc = B.conj().T @ L @ B
        b = -B @ np.linalg.solve(Lc, B.conj().T @ v)
    else:
        b = np.zeros_like(v)
    a_c = a - space.corners.proj_UL @ a
    return LeakageResult(a, b, float(np.linalg.norm(a_c - b)), float(np.linalg.norm(a - a_c)))


@dataclass(frozen=True)
class SecondOrderResult:
    full: np.ndarray
    reduced: np.ndarray
    full_restricted: np.ndarray
    reduced_restricted: np.ndarray
    deviation: float


def second_order_term(space, dV, Linv=None):
    """P_inf V L^{-1} V P_inf and the reduced P_inf V L_c^{-1} V P_Psi.

    The restrictions to the asymptotic subspace, <<J|.|Psi>>, are returned
    alongside; they coincide when UL-to-coherence couplings vanish (DFS).
    """
    L = space.L
    if Linv is None:
        Linv = drazin_inverse(L, space)
    dV = np.asarray(dV)
    full = space.Pinf @ dV @ Linv @ dV @ space.Pinf
    red = space.Pinf @ dV @ complement_inverse(L, space.corners) @ dV @ space.Ppsi
    K, Jk = space.psi_kets, space.j_kets
    fr = Jk.conj().T @ full @ K
    rr = Jk.conj().T @ red @ K
    return SecondOrderResult(full, red, fr, rr, float(np.max(np.abs(fr - rr), initial=0.0)))
