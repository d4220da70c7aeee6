"""Four-corners partition of operator space and block structure of the generator.

With P the projector onto the nondecaying subspace and Q = I - P, operators
split into the corners

    UL = P A P    UR = P A Q
    LL = Q A P    LR = Q A Q

The generator is block upper triangular in this partition: nothing flows
from UL into the other corners, and coherences (UR, LL) never feed LR.
"""
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .lindblad import Spectrum, block_eigvals, build_generator, default_zero_tol, dissipative_gap
from .lindblad import spectrum as _spectrum
from .opspace import dagger, devectorize, hermitize, sandwich_superop, vectorize

__all__ = [
    "CORNERS",
    "CornerProjectors",
    "corner_projectors",
    "nondecaying_projector",
    "dark_projector",
    "corner_project",
    "BlockDecomposition",
    "GapReport",
    "decompose_generator",
    "block_formulas",
    "validate_proposition1",
    "effective_dissipative_gap",
    "gap_report",
    "parent_hamiltonian",
    "ModelGaps",
    "model_gaps",
]

CORNERS = ("UL", "UR", "LL", "LR")


@dataclass(frozen=True)
class CornerProjectors:
    """Projector pair {P, Q} and the corner superoperators.

    ``U`` is a unitary whose first ``rank`` columns span the range of P; it
    fixes the rotated coordinates used for block compressions.
    """

    P: np.ndarray
    U: np.ndarray
    rank: int

    @property
    def Q(self):
        return np.eye(self.dim) - self.P

    @property
    def dim(self):
        return self.P.shape[0]

    @property
    def UP(self):
        return self.U[:, : self.rank]

    @property
    def UQ(self):
        return self.U[:, self.rank :]

    def _pair(self, which):
        left, right = {"UL": (0, 0), "UR": (0, 1), "LL": (1, 0), "LR": (1, 1)}[which]
        ops = (self.P, self.Q)
        return ops[left], ops[right]

    def projection(self, which):
        """Superoperator A -> X A Y of a corner, or of the unions 'off' and 'complement'."""
        if which == "off":
            return self.projection("UR") + self.projection("LL")
        if which == "complement":
            return np.eye(self.dim**2) - self.projection("UL")
        X, Y = self._pair(which)
        return sandwich_superop(X, Y)

    @cached_property
    def proj_UL(self):
        return self.projection("UL")

    @cached_property
    def proj_UR(self):
        return self.projection("UR")

    @cached_property
    def proj_LL(self):
        return self.projection("LL")

    @cached_property
    def proj_LR(self):
        return self.projection("LR")

    @property
    def proj_offdiag(self):
        return self.proj_UR + self.proj_LL

    @property
    def proj_complement(self):
        return np.eye(self.dim**2) - self.proj_UL

    def basis(self, which):
        """Isometry whose columns are vec(|u_i><u_j|) spanning a corner.

        Column order is column-major in the rotated block coordinates, so
        ``basis(c) @ vec(x) = vec(U_a x U_b^dag)``.
        """
        if which == "complement":
            return np.hstack([self.basis(c) for c in ("UR", "LL", "LR")])
        if which == "off":
            return np.hstack([self.basis("UR"), self.basis("LL")])
        a, b = {"UL": (self.UP, self.UP), "UR": (self.UP, self.UQ),
                "LL": (self.UQ, self.UP), "LR": (self.UQ, self.UQ)}[which]
        return np.kron(b.conj(), a)

    def project(self, A, which):
        X, Y = self._pair(which)
        return X @ A @ Y


def corner_projectors(P, tol=1e-10):
    """Build CornerProjectors from an orthogonal projector."""
    P = np.asarray(P, dtype=complex)
    if np.max(np.abs(P @ P - P)) > tol or np.max(np.abs(P - dagger(P))) > tol:
        raise ValueError("P is not an orthogonal projector")
    w, V = np.linalg.eigh(hermitize(P))
    order = np.argsort(-w)
    V = V[:, order]
    r = int(np.sum(w > 0.5))
    Pc = V[:, :r] @ dagger(V[:, :r])
    return CornerProjectors(Pc, V, r)


def corner_project(cp, A, which):
    """PAP, PAQ, QAP or QAQ for which in {'UL','UR','LL','LR'}."""
    if which not in CORNERS:
        raise ValueError(f"unknown corner {which!r}; expected one of {CORNERS}")
    return cp.project(np.asarray(A), which)


def _support(rho, rank_tol):
    w, V = np.linalg.eigh(hermitize(rho))
    wmax = max(np.max(np.abs(w)), np.finfo(float).tiny)
    keep = w > rank_tol * wmax
    return V[:, keep] @ dagger(V[:, keep])


def _support_residual(P, X):
    Q = np.eye(P.shape[0]) - P
    nrm = max(np.linalg.norm(X), np.finfo(float).tiny)
    return (np.linalg.norm(Q @ X @ Q) + np.linalg.norm(P @ X @ Q) + np.linalg.norm(Q @ X @ P)) / nrm


def nondecaying_projector(L, spec=None, zero_tol=None, rank_tol=1e-9, tol=1e-8):
    """Projector onto the support of the asymptotic subspace.

    The Delta = 0 spectral projector applied to I/N gives a state of maximal
    rank in the asymptotic subspace; its support is P.  If some asymptotic
    eigenmatrix leaks outside, the support is enlarged by those elements.
    """
    L = np.asarray(L)
    if spec is None:
        spec = _spectrum(L)
    lam = spec.eigenvalues
    if zero_tol is None:
        zero_tol = default_zero_tol(spec.radius)
    asym = np.flatnonzero(np.abs(lam.real) < zero_tol)
    if asym.size == 0:
        raise ValueError("no asymptotic eigenvalue found; spectrum may be defective")
    N = int(round(np.sqrt(L.shape[0])))
    steady = asym[np.abs(lam[asym].imag) < 10 * zero_tol]
    R = spec.right[:, steady]
    Lf = spec.left[:, steady]
    G = Lf.conj().T @ R
    x = R @ np.linalg.solve(G, Lf.conj().T @ vectorize(np.eye(N) / N))
    P = _support(devectorize(x), rank_tol)
    # every asymptotic eigenmatrix must live in the PAP corner
    bad = [i for i in asym if _support_residual(P, devectorize(spec.right[:, i])) > tol]
    if bad:
        acc = devectorize(x)
        for i in asym:
            X = devectorize(spec.right[:, i])
            acc = acc + X @ dagger(X) / np.linalg.norm(X) ** 2
        P = _support(acc, rank_tol)
        bad = [i for i in asym if _support_residual(P, devectorize(spec.right[:, i])) > tol]
        if bad:
            raise ValueError("could not find a projector supporting the asymptotic subspace")
    return corner_projectors(P)


def dark_projector(m, tol=1e-9):
    """Projector onto the common kernel of all jump operators.

    Equals the nondecaying projector for decoherence-free subspaces that
    are annihilated by every jump and invariant under H; this is the
    caller's claim and is checked only through the no-leak conditions downstream.
    """
    Fs = [F for F, _ in m.jumps]
    N = m.dim
    if not Fs:
        return corner_projectors(np.eye(N))
    S = np.vstack(Fs)
    _, s, Vh = np.linalg.svd(S)
    s = np.concatenate([s, np.zeros(N - s.size)])
    smax = max(1.0, s.max())
    keep = s < tol * smax
    V = dagger(Vh)[:, keep]
    return corner_projectors(V @ dagger(V))


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks of the generator in the rotated corner coordinates.

    ``blocks[(to, frm)]`` is the matrix of P_to L P_frm with respect to the
    isometries ``cp.basis(to)`` and ``cp.basis(frm)``.
    """

    cp: CornerProjectors
    blocks: dict
    triangularity_residual: float
    crosscheck_residual: float = float("nan")
    model: object = None

    @property
    def L_UL(self):
        return self.blocks[("UL", "UL")]

    @property
    def L_UR(self):
        return self.blocks[("UR", "UR")]

    @property
    def L_LL(self):
        return self.blocks[("LL", "LL")]

    @property
    def L_coh(self):
        """Joint compression onto the coherences UR + LL (block diagonal)."""
        a, b = self.L_UR, self.L_LL
        out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
        out[: a.shape[0], : a.shape[0]] = a
        out[a.shape[0] :, a.shape[0] :] = b
        return out

    @property
    def L_LR(self):
        return self.blocks[("LR", "LR")]

    @property
    def couplings(self):
        """The upper-triangular couplings UL<-off, off<-LR, UL<-LR."""
        keys = [("UL", "UR"), ("UL", "LL"), ("UR", "LR"), ("LL", "LR"), ("UL", "LR")]
        return {k: self.blocks[k] for k in keys if k in self.blocks}

    def superop(self, to, frm):
        """Block as a full N^2 x N^2 superoperator."""
        return self.cp.basis(to) @ self.blocks[(to, frm)] @ self.cp.basis(frm).conj().T

    def reassemble(self):
        out = 0
        for (to, frm) in self.blocks:
            out = out + self.superop(to, frm)
        return out


def _parts(m, cp):
    P, Q = cp.P, cp.Q
    H = m.H
    out = dict(H_UL=P @ H @ P, H_UR=P @ H @ Q, H_LR=Q @ H @ Q, jumps=[])
    for F, k in m.jumps:
        FdF = dagger(F) @ F
        out["jumps"].append(dict(k=k, UL=P @ F @ P, UR=P @ F @ Q, LL=Q @ F @ P, LR=Q @ F @ Q,
                                 FdF_LR=Q @ FdF @ Q))
    return out


def _coords(cp, A, a, b):
    Ua = cp.UP if a == "P" else cp.UQ
    Ub = cp.UP if b == "P" else cp.UQ
    return dagger(Ua) @ A @ Ub


def _lin(terms, da, db):
    """Matrix of x -> sum_i A_i x B_i for x of shape (da, db)."""
    M = np.zeros((da * db, da * db), dtype=complex)
    for A, B in terms:
        M += np.kron(np.transpose(B), A)
    return M


def block_formulas(m, cp, which=("UL", "UR", "LL", "LR", "couplings")):
    """Generator blocks assembled from the corner parts of H and F.

    Each block is returned in the rotated coordinates of ``cp.basis``.  The
    formulas assume the no-leak conditions (QFP = 0 and the constraint on PHQ); a
    mismatch with the direct compression signals that P is wrong.
    """
    r = cp.rank
    q = cp.dim - r
    pt = _parts(m, cp)
    c = lambda A, a, b: _coords(cp, A, a, b)  # noqa: E731
    Ir, Iq = np.eye(r), np.eye(q)
    blocks = {}
    J = pt["jumps"]
    FdF_UL = sum((j["k"] * dagger(j["UL"]) @ j["UL"] for j in J), 0 * cp.P)
    FdF_LR = sum((j["k"] * j["FdF_LR"] for j in J), 0 * cp.P)
    HU = c(pt["H_UL"], "P", "P")
    HL = c(pt["H_LR"], "Q", "Q")
    KU = c(FdF_UL, "P", "P")
    KL = c(FdF_LR, "Q", "Q")
    if "UL" in which:
        terms = [(-1j * HU - 0.5 * KU, Ir), (Ir, 1j * HU - 0.5 * KU)]
        terms += [(j["k"] * c(j["UL"], "P", "P"), dagger(c(j["UL"], "P", "P"))) for j in J]
        blocks[("UL", "UL")] = _lin(terms, r, r)
    if "UR" in which:
        terms = [(-1j * HU - 0.5 * KU, Iq), (Ir, 1j * HL - 0.5 * KL)]
        terms += [(j["k"] * c(j["UL"], "P", "P"), dagger(c(j["LR"], "Q", "Q"))) for j in J]
        blocks[("UR", "UR")] = _lin(terms, r, q)
    if "LL" in which:
        terms = [(-1j * HL - 0.5 * KL, Ir), (Iq, 1j * HU - 0.5 * KU)]
        terms += [(j["k"] * c(j["LR"], "Q", "Q"), dagger(c(j["UL"], "P", "P"))) for j in J]
        blocks[("LL", "LL")] = _lin(terms, q, r)
    if "LR" in which:
        terms = [(-1j * HL - 0.5 * KL, Iq), (Iq, 1j * HL - 0.5 * KL)]
        terms += [(j["k"] * c(j["LR"], "Q", "Q"), dagger(c(j["LR"], "Q", "Q"))) for j in J]
        blocks[("LR", "LR")] = _lin(terms, q, q)
    if "couplings" in which:
        # UL <- UR and UL <- LL, x in rotated coordinates of the source corner
        # (P A Q) -> P A P maps r x q to r x r: sum k (F_UL x F_UR^dag - x F_UR^dag F_UL)
        def rect(terms, d_out, d_in_r, d_in_c):
            M = np.zeros((d_out[0] * d_out[1], d_in_r * d_in_c), dtype=complex)
            for A, B in terms:
                M += np.kron(np.transpose(B), A)
            return M

        t = []
        for j in J:
            k = j["k"]
            t.append((k * c(j["UL"], "P", "P"), dagger(c(j["UR"], "P", "Q"))))
            t.append((-k * np.eye(r), c(dagger(j["UR"]) @ j["UL"], "Q", "P")))
        blocks[("UL", "UR")] = rect(t, (r, r), r, q)
        t = []
        for j in J:
            k = j["k"]
            t.append((k * c(j["UR"], "P", "Q"), dagger(c(j["UL"], "P", "P"))))
            t.append((-k * c(dagger(j["UL"]) @ j["UR"], "P", "Q"), np.eye(r)))
        blocks[("UL", "LL")] = rect(t, (r, r), q, r)
        t = []
        for j in J:
            k = j["k"]
            t.append((k * c(j["UR"], "P", "Q"), dagger(c(j["LR"], "Q", "Q"))))
            t.append((-k * c(dagger(j["UL"]) @ j["UR"], "P", "Q"), np.eye(q)))
        blocks[("UR", "LR")] = rect(t, (r, q), q, q)
        t = []
        for j in J:
            k = j["k"]
            t.append((k * c(j["LR"], "Q", "Q"), dagger(c(j["UR"], "P", "Q"))))
            t.append((-k * np.eye(q), c(dagger(j["UR"]) @ j["UL"], "Q", "P")))
        blocks[("LL", "LR")] = rect(t, (q, r), q, q)
        t = [(j["k"] * c(j["UR"], "P", "Q"), dagger(c(j["UR"], "P", "Q"))) for j in J]
        blocks[("UL", "LR")] = rect(t, (r, r), q, q)
    return blocks


def decompose_generator(L, cp, m=None, crosscheck=True, tol=1e-9,
                        which=("UL", "UR", "LL", "LR", "couplings")):
    """Block decomposition of L in the four-corners partition.

    With ``L`` given, blocks are direct compressions and (if a model is
    supplied and ``crosscheck``) compared with :func:`block_formulas`.
    With ``L=None`` the formula route alone is used, which avoids forming
    N^2 x N^2 matrices; ``which`` then restricts the blocks built.
    """
    if L is None:
        if m is None:
            raise ValueError("need either L or a model")
        blocks = block_formulas(m, cp, which)
        return BlockDecomposition(cp, blocks, 0.0, float("nan"), m)
    L = np.asarray(L)
    B = {c: cp.basis(c) for c in CORNERS}
    blocks = {}
    upper = [("UL", "UL"), ("UR", "UR"), ("LL", "LL"), ("LR", "LR"),
             ("UL", "UR"), ("UL", "LL"), ("UR", "LR"), ("LL", "LR"), ("UL", "LR")]
    zero = [("UR", "UL"), ("LL", "UL"), ("LR", "UL"), ("LR", "UR"), ("LR", "LL"),
            ("UR", "LL"), ("LL", "UR")]
    for to, frm in upper:
        blocks[(to, frm)] = B[to].conj().T @ L @ B[frm]
    scale = max(1.0, np.max(np.abs(L)))
    tri = 0.0
    for to, frm in zero:
        blk = B[to].conj().T @ L @ B[frm]
        if blk.size:
            tri = max(tri, float(np.max(np.abs(blk))) / scale)
    cross = float("nan")
    if m is not None and crosscheck:
        ref = block_formulas(m, cp)
        cross = 0.0
        for key, blk in ref.items():
            if blk.size:
                cross = max(cross, float(np.max(np.abs(blk - blocks[key]))) / scale)
        if cross > tol:
            warnings.warn(
                f"block formulas disagree with direct compression ({cross:.2e}); "
                "P may be wrong or the no-leak conditions violated",
                stacklevel=2,
            )
    return BlockDecomposition(cp, blocks, tri, cross, m)


def validate_proposition1(m, cp, tol=1e-9):
    """Residuals of QFP = 0 (per jump) and PHQ = -(i/2) sum k F_UL^dag F_UR."""
    P, Q = cp.P, cp.Q
    leak = [float(np.linalg.norm(Q @ F @ P)) for F, _ in m.jumps]
    target = sum((-0.5j * k * dagger(P @ F @ P) @ (P @ F @ Q) for F, k in m.jumps), 0 * P)
    ham = float(np.linalg.norm(P @ m.H @ Q - target))
    ok = all(x < tol for x in leak) and ham < tol
    return dict(jump_residuals=leak, hamiltonian_residual=ham, max_residual=max(leak + [ham]), passed=ok)


@dataclass(frozen=True)
class GapReport:
    """Gaps of the off-UL blocks.

    ``delta_edg`` uses the coherence blocks; ``delta_complement`` the whole
    complement of UL (coherences and LR); ``delta_lr`` the LR block alone.
    ``min_abs`` is min |lambda| over the nonzero coherence eigenvalues.
    """

    delta_edg: float
    delta_complement: float
    delta_lr: float
    min_abs: float
    coherence_eigvals: np.ndarray = field(repr=False)


def _min_re(lam, zero_tol):
    re = np.abs(np.real(lam))
    re = re[re > zero_tol]
    return float(re.min()) if re.size else float("inf")


def gap_report(decomp, zero_tol=None, include_lr=True):
    lam_ur = sla.eigvals(decomp.L_UR) if decomp.L_UR.size else np.zeros(0)
    lam_coh = np.concatenate([lam_ur, np.conj(lam_ur)])
    if ("LR", "LR") in decomp.blocks and include_lr and decomp.L_LR.size:
        lam_lr = sla.eigvals(decomp.L_LR)
    else:
        lam_lr = np.zeros(0)
    if zero_tol is None:
        rad = max(np.max(np.abs(lam_coh), initial=0.0), np.max(np.abs(lam_lr), initial=0.0))
        zero_tol = default_zero_tol(rad)
    d_coh = _min_re(lam_coh, zero_tol)
    d_lr = _min_re(lam_lr, zero_tol) if include_lr else float("nan")
    d_all = min(d_coh, d_lr) if include_lr else float("nan")
    a = np.abs(lam_coh)
    a = a[a > zero_tol]
    return GapReport(d_coh, d_all, d_lr, float(a.min()) if a.size else float("inf"), lam_coh)


def effective_dissipative_gap(decomp, zero_tol=None, which="coherence"):
    """Smallest decay rate of the coherence blocks UR + LL.

    ``which='complement'`` instead uses the complement of UL (coherences and
    LR jointly).  Returns +inf when P = I.
    """
    if decomp.cp.rank == decomp.cp.dim:
        return float("inf")
    rep = gap_report(decomp, zero_tol, include_lr=(which == "complement"))
    if which == "coherence":
        return rep.delta_edg
    if which == "complement":
        return rep.delta_complement
    raise ValueError("which must be 'coherence' or 'complement'")


def parent_hamiltonian(m, P=None, tol=1e-9):
    """H_edg = (1/2) sum k F^dag F and its excitation gap.

    The gap matches the effective dissipative gap when H = 0 and the jumps
    annihilate the decoherence-free subspace; a warning is issued otherwise.
    """
    N = m.dim
    Hedg = 0.5 * sum((k * dagger(F) @ F for F, k in m.jumps), np.zeros((N, N), dtype=complex))
    Hedg = hermitize(Hedg)
    if np.linalg.norm(m.H) > tol:
        warnings.warn("model has a Hamiltonian part; parent-Hamiltonian gap may not equal the effective gap",
                      stacklevel=2)
    if P is not None:
        if max((np.linalg.norm(F @ P) for F, _ in m.jumps), default=0.0) > tol * max(1.0, np.linalg.norm(Hedg)):
            warnings.warn("jumps do not annihilate the supplied subspace", stacklevel=2)
    w = np.linalg.eigvalsh(Hedg)
    thr = tol * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    pos = w[w > thr]
    return Hedg, float(pos.min()) if pos.size else float("inf")


@dataclass(frozen=True)
class ModelGaps:
    """Dissipative gap, effective gap and parent-Hamiltonian gap of one model.

    ``precondition`` is True when H = 0 and every jump annihilates P, the
    regime where the parent gap equals ``delta_edg``.
    """

    delta_dg: float
    delta_edg: float
    parent_gap: float
    rank: int
    precondition: bool
    prop1_residual: float


def model_gaps(m, P=None, tol=1e-9):
    """Gaps of a model whose nondecaying subspace is ``P`` (default: jump kernel).

    The full spectrum is taken sector-by-sector (:func:`block_eigvals`) and
    the effective gap from the coherence blocks built by formula, so no
    N^2 x N^2 eigendecomposition with eigenvectors is needed.
    """
    cp = dark_projector(m, tol) if P is None else corner_projectors(P)
    if cp.rank == 0:
        raise ValueError("empty nondecaying subspace (no common jump kernel at this tolerance)")
    prop1 = validate_proposition1(m, cp, tol)
    if not prop1["passed"]:
        raise ValueError(f"P violates the no-leak conditions (residual {prop1['max_residual']:.2e})")
    lam = block_eigvals(build_generator(m))
    ddg = dissipative_gap(lam)
    dec = decompose_generator(None, cp, m, which=("UL", "UR", "LL"))
    dedg = effective_dissipative_gap(dec)
    nH = np.linalg.norm(m.H)
    leak = max((np.linalg.norm(F @ cp.P) for F, _ in m.jumps), default=0.0)
    scale = max(1.0, max((np.linalg.norm(F) for F, _ in m.jumps), default=0.0))
    pre = bool(nH <= tol and leak <= tol * scale)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, pg = parent_hamiltonian(m, cp.P, tol)
    return ModelGaps(ddg, dedg, pg, cp.rank, pre, prop1["max_residual"])
