"""Asymptotic subspace: eigenmatrices, conserved quantities and projections.

Right eigenmatrices Psi span the asymptotic subspace and are orthonormal
under the Hilbert-Schmidt product; the conserved quantities J are the
biorthogonal left eigenmatrices, <<J^mu|Psi_nu>> = delta.  The Delta = 0
cluster is given a Hermitian basis with the traceful element first.
"""
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .corners import (
    CornerProjectors,
    decompose_generator,
    nondecaying_projector,
)
from .lindblad import LindbladModel, build_generator, default_zero_tol, spectrum as _spectrum
from .opspace import dagger, devectorize, hermitize, vectorize

__all__ = [
    "AsymptoticSpace",
    "NSStructure",
    "asymptotic_modes",
    "conserved_quantities",
    "biorthogonalize",
    "asymptotic_space",
    "asymptotic_projection",
    "minimal_projection",
    "infinite_time_map",
    "asymptotic_coefficients",
    "asymptotic_state",
    "drazin_inverse",
    "complement_inverse",
    "dual_basis",
    "transfer_channel",
    "choi_matrix",
    "embed_channel",
    "extract_channel",
    "kraus_superop",
    "ns_partial_trace",
    "validate_ns_structure",
    "trivial_ns_structure",
]


def _kets(ops):
    return np.stack([vectorize(x) for x in ops], axis=1)


def _ops(K):
    return np.array([devectorize(K[:, i]) for i in range(K.shape[1])])


def _cluster(values, radius):
    """Group sorted real values into clusters no wider than ``radius`` between neighbours."""
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] < radius:
            cur.append(b)
        else:
            groups.append(cur)
            cur = [b]
    groups.append(cur)
    return groups


def _hermitian_orthonormal(K, k):
    """Orthonormal Hermitian basis (as kets) of the k-dim space spanned by columns of K.

    The space is assumed closed under the adjoint.
    """
    ops = _ops(K)
    cands = []
    for X in ops:
        cands.append(hermitize(X))
        cands.append((X - dagger(X)) / 2j)
    # Hermitian matrices form a real inner-product space; use real coordinates
    C = np.stack([vectorize(h) for h in cands], axis=1)
    Cr = np.vstack([C.real, C.imag])
    U, s, _ = np.linalg.svd(Cr, full_matrices=False)
    B = U[:, :k]
    n2 = K.shape[0]
    H = B[:n2] + 1j * B[n2:]
    ops = _ops(H)
    ops = np.array([hermitize(X) for X in ops])
    # traceful element first, the rest traceless
    t = np.array([np.trace(X).real for X in ops])
    if np.linalg.norm(t) > 1e-12:
        M = np.eye(k)
        M[:, 0] = t / np.linalg.norm(t)
        R, _ = np.linalg.qr(M)
        if R[:, 0] @ t < 0:
            R[:, 0] *= -1
        ops = np.einsum("kij,kl->lij", ops, R)
    return _kets(ops)


@dataclass(frozen=True)
class AsymptoticSpace:
    """Asymptotic modes of a generator.

    Attributes
    ----------
    frequencies : (n,) real array of Delta, one per mode
    Psi, J : (n, N, N) arrays of right and left eigenmatrices
    corners : CornerProjectors of the nondecaying subspace
    L : the generator (N^2 x N^2)
    J_crosscheck : max deviation between direct and block-formula J (nan if skipped)
    """

    frequencies: np.ndarray
    Psi: np.ndarray
    J: np.ndarray
    corners: CornerProjectors
    L: np.ndarray = field(repr=False)
    J_crosscheck: float = float("nan")
    zero_tol: float = 1e-8

    @property
    def dim(self):
        return self.Psi.shape[1]

    def __len__(self):
        return self.Psi.shape[0]

    @property
    def steady(self):
        return bool(np.all(np.abs(self.frequencies) < 10 * self.zero_tol))

    @property
    def steady_index(self):
        return np.flatnonzero(np.abs(self.frequencies) < 10 * self.zero_tol)

    @property
    def psi_kets(self):
        return _kets(self.Psi)

    @property
    def j_kets(self):
        return _kets(self.J)

    @property
    def J_UL(self):
        P = self.corners.P
        return np.array([P @ X @ P for X in self.J])

    @cached_property
    def Pinf(self):
        return self.psi_kets @ self.j_kets.conj().T

    @cached_property
    def Ppsi(self):
        return self.psi_kets @ _kets(self.J_UL).conj().T

    def steady_state(self):
        """The asymptotic image of the maximally mixed state."""
        N = self.dim
        return devectorize(self.Pinf @ vectorize(np.eye(N) / N))


@dataclass(frozen=True)
class NSStructure:
    """Noiseless-subsystem factorization P H = E (H_dfs (x) H_ax).

    ``embedding`` is an N x (d * d_ax) isometry whose column k * d_ax + a
    is |k> (x) |a>; ``aux_state`` is the full-rank auxiliary density matrix.
    """

    d: int
    aux_state: np.ndarray
    embedding: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.aux_state, dtype=complex)
        object.__setattr__(self, "aux_state", rho)
        object.__setattr__(self, "embedding", np.asarray(self.embedding, dtype=complex))
        w = np.linalg.eigvalsh(hermitize(rho))
        if w.min() <= 0 or abs(np.trace(rho) - 1) > 1e-9:
            raise ValueError("auxiliary state must be positive definite with unit trace")
        if self.embedding.shape[1] != self.d * self.d_ax:
            raise ValueError("embedding width must equal d * d_ax")

    @property
    def d_ax(self):
        return self.aux_state.shape[0]

    @property
    def P(self):
        E = self.embedding
        return E @ dagger(E)

    @property
    def n_ax(self):
        return float(np.linalg.norm(self.aux_state))

    def pullback(self, X):
        """E^dag X E reshaped as (d, d_ax, d, d_ax)."""
        Y = dagger(self.embedding) @ X @ self.embedding
        return Y.reshape(self.d, self.d_ax, self.d, self.d_ax)

    def embed(self, x, aux=None):
        """E (x (x) aux) E^dag; aux defaults to the auxiliary state."""
        aux = self.aux_state if aux is None else aux
        return self.embedding @ np.kron(x, aux) @ dagger(self.embedding)


def trivial_ns_structure(P):
    """DFS as a noiseless subsystem with a one-dimensional auxiliary factor."""
    w, V = np.linalg.eigh(hermitize(P))
    E = V[:, w > 0.5]
    return NSStructure(E.shape[1], np.ones((1, 1)), E)


def ns_partial_trace(ns, X, weight=True):
    """Tr_ax{rho_ax E^dag X E} (or the plain partial trace if weight is False)."""
    Y = ns.pullback(X)
    if weight:
        return np.einsum("kalb,ba->kl", Y, ns.aux_state)
    return np.einsum("kala->kl", Y)


def asymptotic_modes(L, spec=None, zero_tol=None):
    """Frequencies and orthonormal right eigenmatrices of the asymptotic cluster.

    Returns ``(frequencies, Psi, left_raw)`` where ``left_raw`` are the matching
    left eigenvectors (columns) dual to Psi.
    """
    L = np.asarray(L)
    if spec is None:
        spec = _spectrum(L)
    if zero_tol is None:
        zero_tol = default_zero_tol(spec.radius)
    lam = spec.eigenvalues
    asym = np.flatnonzero(np.abs(lam.real) < zero_tol)
    if asym.size == 0:
        raise ValueError("no asymptotic eigenvalues; a trace-preserving generator always has one")
    groups = [asym[g] for g in _cluster(lam[asym].imag, 10 * zero_tol)]
    freqs, psis, lefts = [], [], []
    done = set()
    centers = [float(np.mean(lam[g].imag)) for g in groups]
    for gi, g in enumerate(groups):
        if gi in done:
            continue
        delta = centers[gi]
        k = g.size
        R = spec.right[:, g]
        Lf = spec.left[:, g]
        if abs(delta) < 10 * zero_tol:
            K = _hermitian_orthonormal(R, k)
            freqs += [0.0] * k
            psis.append(K)
            lefts.append(Lf @ np.linalg.inv(Lf.conj().T @ K).conj().T)
            done.add(gi)
            continue
        # pair +Delta with -Delta: Psi_{-Delta} = Psi_{Delta}^dag
        partner = int(np.argmin([abs(c + delta) if j not in done and j != gi else np.inf
                                 for j, c in enumerate(centers)]))
        if abs(centers[partner] + delta) > 10 * zero_tol or groups[partner].size != k:
            raise ValueError(f"asymptotic frequency {delta} lacks a conjugate partner")
        pos, neg = (gi, partner) if delta > 0 else (partner, gi)
        Q, _ = np.linalg.qr(spec.right[:, groups[pos]])
        Kp = Q
        Kn = _kets([dagger(X) for X in _ops(Kp)])
        for idx, K in ((pos, Kp), (neg, Kn)):
            Lf = spec.left[:, groups[idx]]
            freqs += [centers[idx]] * k
            psis.append(K)
            lefts.append(Lf @ np.linalg.inv(Lf.conj().T @ K).conj().T)
        done.update((pos, neg))
    Psi = np.hstack(psis)
    Jr = np.hstack(lefts)
    return np.array(freqs), _ops(Psi), Jr


def biorthogonalize(Psi, J):
    """Rescale J so that <<J^mu|Psi_nu>> = delta_{mu nu}; Psi is left untouched."""
    K = _kets(Psi)
    Jk = _kets(J)
    G = Jk.conj().T @ K
    if np.linalg.cond(G) > 1e12:
        raise np.linalg.LinAlgError("singular Gram matrix between J and Psi")
    Jk = Jk @ np.linalg.inv(G).conj().T
    return np.asarray(Psi), _ops(Jk)


def dual_basis(space, targets):
    """Conserved quantities dual to a new basis ``targets`` of the asymptotic subspace."""
    Phi = _kets(targets)
    C = space.j_kets.conj().T @ Phi
    return _ops(space.j_kets @ np.linalg.inv(C).conj().T)


def conserved_quantities(L, decomp, freqs, Psi, left_raw=None):
    """Left eigenmatrices J two ways; returns ``(J, deviation)``.

    (a) from left eigenvectors of the full generator (``left_raw``),
    (b) from left eigenmatrices of the UL block, extended by the resolvent
        of the complement compression:
        <<J| = <<J_UL| (P_UL - L B (B^dag L B - i Delta)^{-1} B^dag).
    If ``left_raw`` is None only (b) is computed.
    """
    L = np.asarray(L)
    cp = decomp.cp
    K = _kets(Psi)
    BU = cp.basis("UL")
    Bc = cp.basis("complement")
    lam_ul, vl_ul = sla.eig(decomp.L_UL, left=True, right=False)
    Lc = Bc.conj().T @ L @ Bc if Bc.shape[1] else None
    Jb = np.zeros_like(K)
    tol = 1e-6 * max(1.0, np.max(np.abs(lam_ul), initial=0.0))
    for delta in np.unique(np.round(freqs, 12)):
        idx = np.flatnonzero(np.abs(freqs - delta) < 1e-9 * max(1.0, abs(delta)) + 1e-9)
        sel = np.flatnonzero(np.abs(lam_ul - 1j * delta) < tol)
        if sel.size < idx.size:
            raise np.linalg.LinAlgError(f"UL block lacks eigenvalue i*{delta}")
        Y = BU @ vl_ul[:, sel]
        # biorthogonalize against the cluster's Psi (which lives in UL)
        G = Y.conj().T @ K[:, idx]
        Jul = Y @ np.linalg.pinv(G).conj().T
        if Lc is not None:
            A = Lc.conj().T + 1j * delta * np.eye(Lc.shape[0])
            if np.linalg.cond(A) > 1e13:
                raise np.linalg.LinAlgError("resolvent of the complement compression is singular")
            z = np.linalg.solve(A, Bc.conj().T @ (L.conj().T @ Jul))
            Jb[:, idx] = Jul - Bc @ z
        else:
            Jb[:, idx] = Jul
    Jb_ops = _ops(Jb)
    if left_raw is None:
        return Jb_ops, float("nan")
    dev = float(np.max(np.abs(left_raw - Jb)))
    return Jb_ops, dev


def asymptotic_space(L_or_model, spec=None, zero_tol=None, crosscheck=True, cp=None):
    """Compute the full asymptotic data of a generator (or model)."""
    m = None
    if isinstance(L_or_model, LindbladModel):
        m = L_or_model
        L = build_generator(m)
    else:
        L = np.asarray(L_or_model)
    if spec is None:
        spec = _spectrum(L)
    if zero_tol is None:
        zero_tol = default_zero_tol(spec.radius)
    freqs, Psi, Jraw = asymptotic_modes(L, spec, zero_tol)
    if cp is None:
        cp = nondecaying_projector(L, spec, zero_tol)
    dev = float("nan")
    J = _ops(Jraw)
    if crosscheck:
        decomp = decompose_generator(L, cp, m, crosscheck=m is not None)
        Jb, dev = conserved_quantities(L, decomp, freqs, Psi, Jraw)
        if dev > 1e-8:
            warnings.warn(f"conserved quantities disagree between routes ({dev:.2e})", stacklevel=2)
    Psi, J = biorthogonalize(Psi, J)
    steady = np.abs(freqs) < 10 * zero_tol
    J[steady] = np.array([hermitize(X) for X in J[steady]])
    return AsymptoticSpace(freqs, Psi, J, cp, L, dev, zero_tol)


def asymptotic_projection(space):
    """P_inf = sum |Psi><<J|."""
    return space.Pinf


def minimal_projection(space, corners=None):
    """P_Psi = P_inf P_UL = sum |Psi><<J_UL|."""
    if corners is None or corners is space.corners:
        return space.Ppsi
    return space.Pinf @ corners.proj_UL


def infinite_time_map(space, t):
    """sum exp(i Delta t) |Psi><<J|, the long-time limit of exp(tL)."""
    ph = np.exp(1j * space.frequencies * t)
    return (space.psi_kets * ph) @ space.j_kets.conj().T


def asymptotic_coefficients(space, rho_in):
    """c_mu = <<J^mu|rho_in>>."""
    return space.j_kets.conj().T @ vectorize(rho_in)


def asymptotic_state(space, rho_in, t=0.0):
    """Asymptotic image of rho_in, rotated to time t."""
    c = asymptotic_coefficients(space, rho_in) * np.exp(1j * space.frequencies * t)
    return devectorize(space.psi_kets @ c)


def drazin_inverse(L, space, cond_limit=1e12):
    """Inverse of L on the decaying part, zero on the asymptotic subspace.

    Uses (L Q_inf + P_inf)^{-1} Q_inf, which reduces to (L + P_inf)^{-1} - P_inf
    when every asymptotic frequency is zero; falls back to a pseudoinverse on
    the range of Q_inf if the shifted matrix is ill conditioned.
    """
    L = np.asarray(L)
    Pinf = space.Pinf
    Qinf = np.eye(L.shape[0]) - Pinf
    A = L @ Qinf + Pinf
    cond = np.linalg.cond(A)
    if cond < cond_limit:
        return np.linalg.solve(A, Qinf)
    warnings.warn(f"shifted generator ill conditioned ({cond:.1e}); using pseudoinverse", stacklevel=2)
    return Qinf @ np.linalg.pinv(Qinf @ L @ Qinf) @ Qinf


def complement_inverse(L, cp):
    """B (B^dag L B)^{-1} B^dag with B an isometry onto the complement of UL."""
    B = cp.basis("complement")
    if B.shape[1] == 0:
        return np.zeros_like(np.asarray(L))
    Lc = B.conj().T @ np.asarray(L) @ B
    return B @ np.linalg.solve(Lc, B.conj().T)


def kraus_superop(kraus):
    """Column-stacked matrix of rho -> sum E rho E^dag."""
    return sum(np.kron(np.conj(E), E) for E in kraus)


def choi_matrix(S, d_in, d_out):
    """Choi matrix sum_ij |i><j| (x) S(|i><j|) of a d_in -> d_out map."""
    C = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            E = np.zeros((d_in, d_in))
            E[i, j] = 1.0
            out = (S @ vectorize(E)).reshape(d_out, d_out, order="F")
            C[i * d_out : (i + 1) * d_out, j * d_out : (j + 1) * d_out] = out
    return C


def transfer_channel(space):
    """P_inf restricted to LR inputs, as a matrix from q x q to N x N operators
    (rotated input coordinates of ``corners.basis('LR')``)."""
    B = space.corners.basis("LR")
    return space.Pinf @ B


def embed_channel(kraus, kappa_eff=1.0, tol=1e-10):
    """Lindbladian whose asymptotic projection realizes a channel.

    The padded space is (output block, input block), each Kraus operator
    sits in the output-input corner, F = [[0, E], [0, 0]], with H = 0 and
    rate kappa_eff.  Inputs placed in the input block flow into the output
    block as sum E rho E^dag.
    """
    kraus = [np.asarray(E, dtype=complex) for E in kraus]
    if not kraus:
        raise ValueError("empty Kraus set")
    d_out, d_in = kraus[0].shape
    if any(E.shape != (d_out, d_in) for E in kraus):
        raise ValueError("Kraus operators must share a shape")
    S = sum(dagger(E) @ E for E in kraus)
    if np.max(np.abs(S - np.eye(d_in))) > tol:
        raise ValueError("Kraus set is not trace preserving")
    if not kappa_eff > 0:
        raise ValueError("kappa_eff must be positive")
    N = d_in + d_out
    jumps = []
    for E in kraus:
        F = np.zeros((N, N), dtype=complex)
        F[:d_out, d_out:] = E
        jumps.append((F, kappa_eff))
    return LindbladModel(np.zeros((N, N)), tuple(jumps))


def extract_channel(model, d_out, space=None):
    """Channel (d_out^2 x d_in^2, column stacking) read off P_inf on the input block.

    Uses the computational basis of the padded space: outputs are the first
    ``d_out`` levels, inputs the rest.
    """
    N = model.dim
    d_in = N - d_out
    if space is None:
        space = asymptotic_space(model, crosscheck=False)
    out_idx = np.arange(d_out)
    in_idx = np.arange(d_out, N)
    C = np.zeros((d_out * d_out, d_in * d_in), dtype=complex)
    for j in range(d_in):
        for i in range(d_in):
            X = np.zeros((N, N), dtype=complex)
            X[in_idx[i], in_idx[j]] = 1.0
            Y = devectorize(space.Pinf @ vectorize(X))
            C[:, j * d_in + i] = vectorize(Y[np.ix_(out_idx, out_idx)])
    return C


def validate_ns_structure(space, ns, n_inputs=None, tol=1e-8):
    """Compare the spectral P_Psi with Tr_ax{P rho P} (x) rho_ax and check J_UL form.

    Returns the maximum deviations; ``passed`` if both are below ``tol``.
    """
    N = space.dim
    Ppsi = space.Ppsi
    dev_p = 0.0
    for j in range(N):
        for i in range(N):
            X = np.zeros((N, N), dtype=complex)
            X[i, j] = 1.0
            got = devectorize(Ppsi @ vectorize(X))
            want = ns.embed(ns_partial_trace(ns, X, weight=False))
            dev_p = max(dev_p, float(np.max(np.abs(got - want))))
    dev_j = 0.0
    for Jul in space.J_UL[space.steady_index]:
        Y = ns.pullback(Jul)
        D = np.einsum("kala->kl", Y) / ns.d_ax
        want = np.kron(D, np.eye(ns.d_ax)).reshape(Y.shape)
        dev_j = max(dev_j, float(np.max(np.abs(Y - want))))
    dev_P = float(np.max(np.abs(ns.P - space.corners.P)))
    return dict(projection_deviation=dev_p, j_form_deviation=dev_j, support_deviation=dev_P,
                passed=max(dev_p, dev_j, dev_P) < tol)
