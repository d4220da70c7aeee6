"""Adiabatic geometry of steady asymptotic subspaces.

Gauge-invariant quantities (holonomy operator, QGT, metric, path length)
are built from the minimal projection P_Psi alone.  Basis-dependent ones
(connection, coordinate holonomy, curvature) use frames aligned by
orthogonal Procrustes.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, expm_multiply

from .asymptotics import asymptotic_space, complement_inverse
from .corners import dark_projector
from .lindblad import build_generator
from .opspace import dagger, devectorize, vectorize

__all__ = [
    "ParameterFamily",
    "Path",
    "Frame",
    "GeometryReport",
    "AdiabaticResult",
    "p_psi_derivative",
    "gauge_align",
    "steady_frame",
    "connection_forms",
    "adiabatic_connection",
    "holonomy_operator",
    "holonomy_coordinate",
    "curvature",
    "qgt",
    "qgt_forms",
    "metric",
    "metric_tensor",
    "alt_metric",
    "path_length",
    "adiabatic_propagate",
    "fubini_study",
    "geometry_report",
]


@dataclass(frozen=True)
class ParameterFamily:
    """x -> LindbladModel.

    ``projector='spectral'`` computes P_Psi from the full asymptotic space;
    ``'dark'`` takes the common kernel of the jumps as a decoherence-free
    subspace (P_Psi = P . P), which avoids N^2-sized eigensolves for large N.
    """

    model: callable
    param_dim: int
    fd_step: float = 1e-5
    projector: str = "spectral"
    dark_tol: float = 1e-9

    def __post_init__(self):
        if self.projector not in ("spectral", "dark"):
            raise ValueError("projector must be 'spectral' or 'dark'")

    def generator(self, x):
        return build_generator(self.model(np.asarray(x, dtype=float)))

    def space(self, x):
        return asymptotic_space(self.model(np.asarray(x, dtype=float)), crosscheck=False)

    def dark_P(self, x):
        return dark_projector(self.model(np.asarray(x, dtype=float)), self.dark_tol).P

    def ppsi(self, x):
        """Dense minimal projection at x."""
        if self.projector == "dark":
            P = self.dark_P(x)
            return np.kron(P.conj(), P)
        return self.space(x).Ppsi

    def rank(self, x):
        if self.projector == "dark":
            return int(round(np.trace(self.dark_P(x)).real)) ** 2
        return len(self.space(x))

    def step(self, x):
        return self.fd_step * (1.0 + np.abs(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Path:
    """Curve s -> x(s), s in [0, 1]."""

    curve: callable
    closed: bool = False

    @classmethod
    def from_samples(cls, samples, closed=None):
        X = np.atleast_2d(np.asarray(samples, dtype=float))
        if X.shape[0] == 1:
            X = X.T
        s = np.linspace(0.0, 1.0, X.shape[0])
        f = lambda t: np.array([np.interp(t, s, X[:, j]) for j in range(X.shape[1])])  # noqa: E731
        if closed is None:
            closed = bool(np.allclose(X[0], X[-1]))
        return cls(f, closed)

    def samples(self, n):
        xs = [np.atleast_1d(np.asarray(self.curve(s), dtype=float)) for s in np.linspace(0.0, 1.0, n + 1)]
        if self.closed:
            xs[-1] = xs[0].copy()
        return np.array(xs)


@dataclass(frozen=True)
class Frame:
    """Steady Hermitian basis at a point: Psi, J, J_UL as ket columns."""

    Psi: np.ndarray
    J: np.ndarray
    J_UL: np.ndarray
    P: np.ndarray

    def transformed(self, R):
        Ri = np.linalg.inv(R).conj().T
        return Frame(self.Psi @ R, self.J @ Ri, self.J_UL @ Ri, self.P)


def _check_steady_space(sp):
    if not sp.steady:
        raise ValueError("geometry requires a steady asymptotic subspace (all Delta = 0)")


def steady_frame(fam, x, ref=None):
    """Frame at x, aligned to ``ref`` if given."""
    if fam.projector == "dark":
        P = fam.dark_P(x)
        w, V = np.linalg.eigh(P)
        E = V[:, w > 0.5]
        from .opspace import hermitian_basis

        hb = hermitian_basis(E.shape[1])
        K = np.stack([vectorize(E @ g @ dagger(E)) for g in hb.elements], axis=1)
        fr = Frame(K, K, K, P)
    else:
        sp = fam.space(x)
        _check_steady_space(sp)
        fr = Frame(sp.psi_kets, sp.j_kets, np.stack([vectorize(X) for X in sp.J_UL], axis=1), sp.corners.P)
    if ref is not None:
        fr = gauge_align(ref, fr)
    return fr


def gauge_align(ref, new, min_overlap=1e-3):
    """Rotate ``new`` by the real orthogonal matrix maximizing Re<<Psi_ref|Psi_new R>>.

    J is transformed contragradiently (for orthogonal R, also by R).
    """
    if ref.Psi.shape[1] != new.Psi.shape[1]:
        raise ValueError("frames have different dimensions")
    C = np.real(new.Psi.conj().T @ ref.Psi)
    U, s, Vt = np.linalg.svd(C)
    if s.size and s.min() < min_overlap:
        raise np.linalg.LinAlgError("frames nearly orthogonal; path step too large")
    R = U @ Vt
    return Frame(new.Psi @ R, new.J @ R, new.J_UL @ R, new.P)


def _rank_guard(ranks):
    if len(set(ranks)) != 1:
        raise ValueError(f"asymptotic rank changes inside stencil/path: {ranks}")


def p_psi_derivative(fam, x, alpha, h=None):
    """Central difference of P_Psi along alpha with one Richardson refinement.

    Returns ``(D, err)`` with err = ||D(h/2) - D(h)|| / 3.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = fam.step(x)[alpha]
    e = np.zeros_like(x)
    e[alpha] = 1.0
    pts = [x + h * e, x - h * e, x + 0.5 * h * e, x - 0.5 * h * e]
    if fam.projector == "spectral":
        sps = [fam.space(p) for p in pts]
        _rank_guard([len(s) for s in sps])
        Ps = [s.Ppsi for s in sps]
    else:
        Ps = [fam.ppsi(p) for p in pts]
        _rank_guard([int(round(np.trace(P).real)) for P in Ps])
    D1 = (Ps[0] - Ps[1]) / (2 * h)
    D2 = (Ps[2] - Ps[3]) / h
    return (4 * D2 - D1) / 3, float(np.linalg.norm(D2 - D1) / 3)


def _frame_derivative(fam, x, alpha, base, h):
    e = np.zeros_like(x)
    e[alpha] = 1.0
    f = {t: steady_frame(fam, x + t * h * e, base) for t in (1.0, -1.0, 0.5, -0.5)}
    dPsi = (4 * (f[0.5].Psi - f[-0.5].Psi) / h - (f[1.0].Psi - f[-1.0].Psi) / (2 * h)) / 3
    dJ = (4 * (f[0.5].J - f[-0.5].J) / h - (f[1.0].J - f[-1.0].J) / (2 * h)) / 3
    dJul = (4 * (f[0.5].J_UL - f[-0.5].J_UL) / h - (f[1.0].J_UL - f[-1.0].J_UL) / (2 * h)) / 3
    return dPsi, dJ, dJul


def connection_forms(fam, x, alpha, base=None, h=None):
    """Connection <<J|d Psi>> and its UL form <<J_UL|d Psi>> (complex, for checking)."""
    x = np.asarray(x, dtype=float)
    if base is None:
        base = steady_frame(fam, x)
    if h is None:
        h = fam.step(x)[alpha]
    dPsi, _, _ = _frame_derivative(fam, x, alpha, base, h)
    return base.J.conj().T @ dPsi, base.J_UL.conj().T @ dPsi


def adiabatic_connection(fam, x, alpha, base=None, tol=1e-9):
    """Real matrix A_{alpha, mu nu} = <<J^mu|d_alpha Psi_nu>> in the aligned gauge."""
    A, A_ul = connection_forms(fam, x, alpha, base)
    scale = max(1.0, np.max(np.abs(A)))
    if np.max(np.abs(A.imag)) > 1e3 * tol * scale or np.max(np.abs(A - A_ul)) > 1e3 * tol * scale:
        warnings.warn("connection forms disagree or are not real beyond finite-difference noise", stacklevel=2)
    return A.real


def _midpoint_generator(P0, P1, ds):
    """Kato form [dP, P] at the midpoint; equals dP P on As(H) since P dP P = 0,
    and is anti-Hermitian for orthogonal projectors (exactly unitary steps)."""
    D = (P1 - P0) / ds
    Pm = 0.5 * (P0 + P1)
    return D @ Pm - Pm @ D


def _path_projectors(fam, xs):
    if fam.projector == "spectral":
        sps = [fam.space(x) for x in xs]
        _rank_guard([len(sp) for sp in sps])
        return [sp.Ppsi for sp in sps]
    Ps = [fam.ppsi(x) for x in xs]
    _rank_guard([int(round(np.trace(P).real)) for P in Ps])
    return Ps


def _richardson(fine, coarse):
    # symmetric one-step maps: the error series is even in ds
    return (4 * fine - coarse) / 3


def _holonomy_dense(Ps, stride=1):
    Ps = Ps[::stride]
    n = len(Ps) - 1
    ds = 1.0 / n
    U = np.eye(Ps[0].shape[0], dtype=complex)
    for k in range(n):
        U = sla.expm(_midpoint_generator(Ps[k], Ps[k + 1], ds) * ds) @ U
    return U


def _holonomy_apply_dark(Ps, Y, stride=1):
    """Transport vectorized operators with P_Psi(X) = P X P, never forming N^2 x N^2 matrices."""
    Ps = Ps[::stride]
    n = len(Ps) - 1
    N = Ps[0].shape[0]
    for k in range(n):
        P0, P1 = Ps[k], Ps[k + 1]

        def mv(v, P0=P0, P1=P1):
            X = v.reshape(N, N, order="F")
            D = lambda Y: P1 @ Y @ P1 - P0 @ Y @ P0  # noqa: E731
            M = lambda Y: 0.5 * (P0 @ Y @ P0 + P1 @ Y @ P1)  # noqa: E731
            return (D(M(X)) - M(D(X))).reshape(-1, order="F")

        # both superoperators are Hermitian, so the commutator is anti-Hermitian
        op = LinearOperator((N * N, N * N), matvec=mv, rmatvec=lambda v, f=mv: -f(v), dtype=complex)
        Y = expm_multiply(op, Y, traceA=0.0)
    return Y


def holonomy_operator(fam, path, n_steps=400, converge=False, tol=1e-7, apply_to=None,
                      max_doublings=3, richardson=True):
    """Path-ordered exp of dP_Psi/ds P_Psi by the midpoint rule (Kato form).

    Returns the N^2 x N^2 superoperator, or the transported operators when
    ``apply_to`` (a list of operators) is given; 'dark' families then use
    matrix-free steps.  ``richardson`` combines n and n/2 step products on
    the same samples.  With ``converge`` the step count doubles until
    results change by < tol.
    """
    Y0 = None if apply_to is None else np.stack([vectorize(X) for X in apply_to], axis=1)
    matrix_free = Y0 is not None and fam.projector == "dark"

    def run(n):
        xs = path.samples(n)
        Ps = [fam.dark_P(x) for x in xs] if matrix_free else _path_projectors(fam, xs)
        if matrix_free:
            _rank_guard([int(round(np.trace(P).real)) for P in Ps])
            step = lambda st: _holonomy_apply_dark(Ps, Y0, st)  # noqa: E731
        else:
            step = lambda st: _holonomy_dense(Ps, st) if Y0 is None else _holonomy_dense(Ps, st) @ Y0  # noqa: E731
        fine = step(1)
        if richardson and n % 2 == 0:
            return _richardson(fine, step(2))
        return fine

    res = run(n_steps)
    if converge:
        change = np.inf
        for _ in range(max_doublings):
            n_steps *= 2
            new = run(n_steps)
            change = float(np.max(np.abs(new - res)))
            res = new
            if change < tol:
                break
        else:
            raise RuntimeError(f"holonomy did not converge (last change {change:.2e})")
    if Y0 is not None:
        return [devectorize(res[:, j]) for j in range(res.shape[1])]
    return res


def _aligned_frames(fam, xs):
    frames = [steady_frame(fam, xs[0])]
    for x in xs[1:]:
        frames.append(steady_frame(fam, x, frames[-1]))
    _rank_guard([f.Psi.shape[1] for f in frames])
    return frames


def _coordinate_product(frames, stride=1, closed=True):
    frames = frames[::stride]
    ds = 1.0 / (len(frames) - 1)
    B = np.eye(frames[0].Psi.shape[1], dtype=complex)
    for a, b in zip(frames[:-1], frames[1:]):
        Jm = 0.5 * (a.J + b.J)
        A = Jm.conj().T @ (b.Psi - a.Psi) / ds
        B = sla.expm(-A * ds) @ B
    if not closed:
        return B
    return frames[0].J.conj().T @ frames[-1].Psi @ B


def holonomy_coordinate(fam, path, n_steps=400, return_frames=False, richardson=True):
    """B = T . P exp(-sum A_k ds) in a sequentially aligned gauge.

    A_k = <<J_mid|Psi_{k+1} - Psi_k>>/ds.  For closed paths T = <<J(0)|Psi_aligned(1)>>
    returns the transported coefficients to the initial basis, so that
    U Psi_mu(0) = sum_nu Psi_nu(0) B_{nu mu}; open paths give coefficients in
    the aligned end frame (T = 1).
    """
    frames = _aligned_frames(fam, path.samples(n_steps))
    B = _coordinate_product(frames, 1, path.closed)
    if richardson and n_steps % 2 == 0:
        B = _richardson(B, _coordinate_product(frames, 2, path.closed))
    if return_frames:
        return B, frames
    return B


def curvature(fam, x, alpha, beta, h=2e-3):
    """F = d_alpha A_beta - d_beta A_alpha + [A_alpha, A_beta] in a base-aligned gauge.

    Nested central differences at h and h/2 combined by Richardson.
    """
    x = np.asarray(x, dtype=float)
    base = steady_frame(fam, x)
    if alpha == beta:
        k = base.Psi.shape[1]
        return np.zeros((k, k))
    ea = np.zeros_like(x)
    ea[alpha] = 1.0
    eb = np.zeros_like(x)
    eb[beta] = 1.0

    def A_at(y, e, h):
        fy = steady_frame(fam, y, base)
        fp = steady_frame(fam, y + h * e, base)
        fm = steady_frame(fam, y - h * e, base)
        return fy.J.conj().T @ (fp.Psi - fm.Psi) / (2 * h)

    def F(h):
        dAb = (A_at(x + h * ea, eb, h) - A_at(x - h * ea, eb, h)) / (2 * h)
        dAa = (A_at(x + h * eb, ea, h) - A_at(x - h * eb, ea, h)) / (2 * h)
        Aa = A_at(x, ea, h)
        Ab = A_at(x, eb, h)
        return dAb - dAa + Aa @ Ab - Ab @ Aa

    return np.real((4 * F(0.5 * h) - F(h)) / 3)


def _derivs(fam, x):
    return [p_psi_derivative(fam, x, a)[0] for a in range(fam.param_dim)]


def qgt_forms(fam, x, alpha, beta, base=None, D=None):
    """QGT matrix elements in the projector form <<J_UL|dP dP|Psi>> and the
    frame form <<d J_UL|(1 - P_Psi)|d Psi>>."""
    x = np.asarray(x, dtype=float)
    if base is None:
        base = steady_frame(fam, x)
    if D is None:
        D = {a: p_psi_derivative(fam, x, a)[0] for a in {alpha, beta}}
    qa = base.J_UL.conj().T @ D[alpha] @ D[beta] @ base.Psi
    h = fam.step(x)
    _, _, dJa = _frame_derivative(fam, x, alpha, base, h[alpha])
    dPb, _, _ = _frame_derivative(fam, x, beta, base, h[beta])
    Ppsi = base.Psi @ base.J_UL.conj().T
    qb = dJa.conj().T @ (dPb - Ppsi @ dPb)
    return qa, qb


def qgt(fam, x, alpha, beta, D=None):
    """Real QGT matrix Q_{alpha beta, mu nu} over the steady Hermitian basis."""
    base = steady_frame(fam, x)
    if D is None:
        D = {a: p_psi_derivative(fam, x, a)[0] for a in {alpha, beta}}
    return np.real(base.J_UL.conj().T @ D[alpha] @ D[beta] @ base.Psi)


def metric(fam, x, alpha, beta, D=None, Ppsi=None):
    """M = TR{P_Psi dP_alpha dP_beta} + (alpha <-> beta)."""
    if D is None:
        D = {a: p_psi_derivative(fam, x, a)[0] for a in {alpha, beta}}
    if Ppsi is None:
        Ppsi = fam.ppsi(x)
    val = np.trace(Ppsi @ D[alpha] @ D[beta]) + np.trace(Ppsi @ D[beta] @ D[alpha])
    return float(np.real(val))


def metric_tensor(fam, x):
    D = dict(enumerate(_derivs(fam, x)))
    Ppsi = fam.ppsi(x)
    n = fam.param_dim
    M = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            M[a, b] = M[b, a] = metric(fam, x, a, b, D, Ppsi)
    return M


def _aux_purity(frame):
    """n_ax^2 of a single noiseless-subsystem block, from the J_UL norms."""
    k = frame.Psi.shape[1]
    d = int(round(np.sqrt(k)))
    rank = int(round(np.trace(frame.P).real))
    d_ax = rank // d
    return float(np.sum(np.abs(frame.J_UL) ** 2) / (d * d * d_ax))


def alt_metric(fam, x, alpha, beta, D=None):
    """Metric of the alternative tensor P^dag dP^dag dP P, normalized by n_ax^2."""
    x = np.asarray(x, dtype=float)
    if D is None:
        D = {a: p_psi_derivative(fam, x, a)[0] for a in {alpha, beta}}
    base = steady_frame(fam, x)
    Pp = base.Psi @ base.J_UL.conj().T
    K = base.Psi

    def tr(a, b):
        Q = dagger(Pp) @ dagger(D[a]) @ D[b] @ Pp
        return np.trace(K.conj().T @ Q @ K)

    return float(np.real(_aux_purity(base) * (tr(alpha, beta) + tr(beta, alpha))))


def path_length(fam, path, n_steps=400):
    """L = int ||dP_Psi/ds P_Psi||_F ds (midpoint rule)."""
    xs = path.samples(n_steps)
    ds = 1.0 / n_steps
    Ps = _path_projectors(fam, xs)
    return float(sum(np.linalg.norm(_midpoint_generator(a, b, ds)) * ds for a, b in zip(Ps[:-1], Ps[1:])))


def fubini_study(psi_fn, x, h=1e-5, normalization="projector"):
    """Fubini-Study metric of a state-valued function by central differences.

    ``'projector'``: <<d_(a P|d_b) P>> = Tr(d_a P d_b P + d_b P d_a P) with
    P = |psi><psi|, i.e. 4 Re<d_a psi|(1 - P)|d_b psi>; the steady-state
    metric reduces to this form for a pure state.  ``'standard'``:
    Re<d_a psi|(1 - P)|d_b psi>.
    """
    if normalization not in ("projector", "standard"):
        raise ValueError("normalization must be 'projector' or 'standard'")
    x = np.asarray(x, dtype=float)

    def unit(y):
        v = np.asarray(psi_fn(y), dtype=complex)
        return v / np.linalg.norm(v)

    psi = unit(x)
    n = x.size
    d = []
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        d.append((unit(x + e) - unit(x - e)) / (2 * h))
    Q = np.eye(psi.size) - np.outer(psi, psi.conj())
    g = np.array([[np.real(np.vdot(d[a], Q @ d[b])) for b in range(n)] for a in range(n)])
    return 4 * g if normalization == "projector" else g


@dataclass(frozen=True)
class AdiabaticResult:
    final: np.ndarray
    holonomy_prediction: np.ndarray
    corrected_prediction: np.ndarray
    deviation: float
    corrected_deviation: float
    leakage_norm: float
    nonadiabatic: bool


def _pinf_dense(fam, x):
    sp = fam.space(x)
    _check_steady_space(sp)
    return sp


def adiabatic_propagate(fam, path, T, rho0=None, n_steps=400, rtol=1e-10, atol=1e-12):
    """Integrate (1/T) d_s rho = L(s) rho and compare with the holonomy.

    The first-order predictor adds the leakage term (1/T) L_c^{-1} dP_Psi U rho0
    at s = 1 and the tunneling integral (1/T) int U(1,r) dP_inf L_c^{-1} dP_Psi U(r,0) rho0 dr,
    with L_c^{-1} the inverse of the compression to the complement of UL.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    xs = path.samples(n_steps)
    ds = 1.0 / n_steps
    sps = [_pinf_dense(fam, x) for x in xs]
    _rank_guard([len(s) for s in sps])
    if rho0 is None:
        rho0 = sps[0].steady_state()
    y0 = vectorize(rho0)

    def rhs(s, y):
        return T * (fam.generator(path.curve(s)) @ y)

    sol = solve_ivp(rhs, (0.0, 1.0), y0.astype(complex), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    final = sol.y[:, -1]

    Pp = [s.Ppsi for s in sps]
    Pi = [s.Pinf for s in sps]
    Lci = [complement_inverse(s.L, s.corners) for s in sps]

    def ddt(seq, k):
        if k == 0:
            return (-3 * seq[0] + 4 * seq[1] - seq[2]) / (2 * ds)
        if k == n_steps:
            return (3 * seq[k] - 4 * seq[k - 1] + seq[k - 2]) / (2 * ds)
        return (seq[k + 1] - seq[k - 1]) / (2 * ds)

    ys = [y0]
    Es = []
    for k in range(n_steps):
        E = sla.expm(_midpoint_generator(Pp[k], Pp[k + 1], ds) * ds)
        Es.append(E)
        ys.append(E @ ys[-1])
    f = [ddt(Pi, k) @ Lci[k] @ ddt(Pp, k) @ ys[k] for k in range(n_steps + 1)]
    z = np.zeros_like(y0)
    for k in range(n_steps):
        z = Es[k] @ (z + 0.5 * ds * f[k]) + 0.5 * ds * f[k + 1]
    hol = ys[-1]
    leak = Lci[-1] @ ddt(Pp, n_steps) @ hol
    corr = hol + (leak + z) / T
    dev = float(np.linalg.norm(final - hol))
    cdev = float(np.linalg.norm(final - corr))
    PUL = sps[-1].corners.proj_UL
    lk = float(np.linalg.norm(final - PUL @ final))
    if dev > 0.5:
        warnings.warn("deviation > 0.5: non-adiabatic regime", stacklevel=2)
    return AdiabaticResult(devectorize(final), devectorize(hol), devectorize(corr), dev, cdev, lk, dev > 0.5)


@dataclass(frozen=True)
class GeometryReport:
    connection: list
    holonomy_operator: np.ndarray
    holonomy_coordinate: np.ndarray
    curvature: dict
    qgt: dict
    metric: np.ndarray
    alt_metric: np.ndarray
    path_length: float
    extras: dict = field(default_factory=dict)


def geometry_report(fam, x, path=None, n_steps=200):
    """Collect the local and (optionally) path quantities at a point."""
    x = np.asarray(x, dtype=float)
    n = fam.param_dim
    base = steady_frame(fam, x)
    D = dict(enumerate(_derivs(fam, x)))
    conn = [adiabatic_connection(fam, x, a, base) for a in range(n)]
    Fs = {(a, b): curvature(fam, x, a, b) for a in range(n) for b in range(a + 1, n)}
    Qs = {(a, b): qgt(fam, x, a, b, D) for a in range(n) for b in range(n)}
    M = metric_tensor(fam, x)
    Malt = np.array([[alt_metric(fam, x, a, b, D) for b in range(n)] for a in range(n)])
    U = B = None
    Lp = float("nan")
    if path is not None:
        U = holonomy_operator(fam, path, n_steps)
        B = holonomy_coordinate(fam, path, n_steps)
        Lp = path_length(fam, path, n_steps)
    return GeometryReport(conn, U, B, Fs, Qs, M, Malt, Lp)
