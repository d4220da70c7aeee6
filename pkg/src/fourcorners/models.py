"""Built-in models and random model generators."""
import numpy as np
from scipy.stats import unitary_group

from .lindblad import LindbladModel
from .opspace import dagger

__all__ = [
    "destroy",
    "coherent_state",
    "four_level",
    "two_photon",
    "cat_pair",
    "amplitude_damping",
    "thermal_qubit",
    "channel_embed",
    "qubit_pure_family",
    "random_hermitian",
    "random_unitary",
    "random_dfs_model",
    "random_unique_model",
    "random_ns_model",
    "BUILTINS",
]

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def destroy(n):
    """Truncated annihilation operator on n Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def coherent_state(alpha, n):
    """Truncated, renormalized coherent state |alpha>."""
    k = np.arange(n)
    logfact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, n)))])
    amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * np.power(complex(alpha), k)
    if alpha == 0:
        amp = np.zeros(n, dtype=complex)
        amp[0] = 1.0
    return amp / np.linalg.norm(amp)


def four_level(alpha=0.0, beta=0.0, kappa=1.0, basis=None):
    """Two-level DFS {psi_0, psi_1} fed by decaying partners {psi_0^perp, psi_1^perp}.

    Levels are ordered (psi_0, psi_1, psi_0^perp, psi_1^perp), optionally
    rotated by the unitary ``basis`` (its columns are these kets).  ``alpha``
    adds dephasing of the perp levels and ``beta`` splits the DFS levels.
    """
    U = np.eye(4, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    psi = [U[:, 0], U[:, 1]]
    perp = [U[:, 2], U[:, 3]]
    F = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        F += np.outer(psi[k], perp[k].conj())
        F += alpha * (-1) ** k * np.outer(perp[k], perp[k].conj())
    H = 0.5 * beta * (np.outer(psi[0], psi[0].conj()) - np.outer(psi[1], psi[1].conj()))
    return LindbladModel(H, ((F, kappa),))


def two_photon(alpha, truncation=60, kappa=1.0):
    """Two-photon absorption with drive, F = a^2 - alpha^2."""
    a = destroy(truncation)
    F = a @ a - alpha**2 * np.eye(truncation)
    return LindbladModel(np.zeros((truncation, truncation)), ((F, kappa),))


def cat_pair(alpha0, alpha1, truncation=40, kappa=1.0):
    """F = (a - alpha0)(a - alpha1); dark states near |alpha0>, |alpha1>."""
    a = destroy(truncation)
    I = np.eye(truncation)
    F = (a - alpha0 * I) @ (a - alpha1 * I)
    return LindbladModel(np.zeros((truncation, truncation)), ((F, kappa),))


def amplitude_damping(kappa=1.0):
    """Qubit decay |1> -> |0> with F = sigma_minus = |0><1|."""
    return LindbladModel(np.zeros((2, 2)), ((SIGMA_MINUS, kappa),))


def thermal_qubit(kappa_down=1.0, kappa_up=0.5):
    """Decay and excitation; unique full-rank steady state."""
    return LindbladModel(np.zeros((2, 2)), ((SIGMA_MINUS, kappa_down), (dagger(SIGMA_MINUS), kappa_up)))


def channel_embed(kraus, kappa_eff=1.0):
    """See :func:`fourcorners.asymptotics.embed_channel`."""
    from .asymptotics import embed_channel

    return embed_channel(kraus, kappa_eff)


def qubit_pure_family(theta, phi=0.0, kappa=1.0):
    """Decay into |g> = (cos(theta/2), e^{i phi} sin(theta/2)); pure steady state |g><g|."""
    g = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    e = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
    return LindbladModel(np.zeros((2, 2)), ((np.outer(g, e.conj()), kappa),))


def random_hermitian(n, rng, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (X + dagger(X))


def random_unitary(n, rng):
    return unitary_group.rvs(n, random_state=rng)


def _cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _prop1_hamiltonian(H_lr, jumps_blocks, r, q, rng, H_ul=None):
    """Hamiltonian whose PHQ block satisfies the no-leak conditions for block-form jumps."""
    N = r + q
    H = np.zeros((N, N), dtype=complex)
    if H_ul is not None:
        H[:r, :r] = H_ul
    H[r:, r:] = H_lr
    ur = np.zeros((r, q), dtype=complex)
    for F, k in jumps_blocks:
        ur += -0.5j * k * dagger(F[:r, :r]) @ F[:r, r:]
    H[:r, r:] = ur
    H[r:, :r] = dagger(ur)
    return H


def random_dfs_model(rng, r=2, q=2, n_jumps=2, rotate=True):
    """Steady DFS of dimension r inside r + q levels.

    Jumps act on the DFS as multiples of the identity (c_l P), the
    coherence and LR blocks are random, and QFP = 0.
    """
    N = r + q
    jumps = []
    for _ in range(n_jumps):
        F = np.zeros((N, N), dtype=complex)
        F[:r, :r] = complex(rng.normal(), rng.normal()) * np.eye(r)
        F[:r, r:] = _cplx(rng, r, q)
        F[r:, r:] = _cplx(rng, q, q)
        jumps.append((F, float(rng.uniform(0.5, 1.5))))
    H = _prop1_hamiltonian(random_hermitian(q, rng), jumps, r, q, rng)
    m = LindbladModel(0.5 * (H + dagger(H)), tuple(jumps))
    return m.conjugated(random_unitary(N, rng)) if rotate else m


def random_unique_model(rng, r=2, q=1, n_jumps=2, rotate=True):
    """Unique steady state of rank r (full rank when q = 0)."""
    N = r + q
    jumps = []
    for _ in range(n_jumps):
        F = np.zeros((N, N), dtype=complex)
        F[:r, :r] = _cplx(rng, r, r)
        F[:r, r:] = _cplx(rng, r, q)
        F[r:, r:] = _cplx(rng, q, q)
        jumps.append((F, float(rng.uniform(0.5, 1.5))))
    H = _prop1_hamiltonian(random_hermitian(q, rng), jumps, r, q, rng, H_ul=random_hermitian(r, rng))
    m = LindbladModel(0.5 * (H + dagger(H)), tuple(jumps))
    return m.conjugated(random_unitary(N, rng)) if rotate else m


def random_ns_model(rng, d=2, d_ax=2, q=1, kappas=None, U=None):
    """Noiseless subsystem: d-dim DFS tensor a d_ax-dim auxiliary, plus q decaying levels.

    Auxiliary jumps are I_d (x) sigma_-/sigma_+ style random operators giving a
    full-rank auxiliary state; each decaying level feeds a random state in P.
    Returns (model, embedding isometry, auxiliary steady state).
    """
    r = d * d_ax
    N = r + q
    if kappas is None:
        kappas = (float(rng.uniform(0.5, 1.5)), float(rng.uniform(0.2, 0.8)))
    lower = np.diag(np.ones(d_ax - 1), 1).astype(complex)
    aux_ops = [lower + 0.3 * _cplx(rng, d_ax, d_ax), dagger(lower)]
    jumps = []
    for A, k in zip(aux_ops, kappas):
        F = np.zeros((N, N), dtype=complex)
        F[:r, :r] = np.kron(np.eye(d), A)
        jumps.append((F, k))
    for j in range(q):
        F = np.zeros((N, N), dtype=complex)
        target = _cplx(rng, r)
        F[:r, r + j] = target / np.linalg.norm(target)
        F[r:, r:] = 0.3 * _cplx(rng, q, q)
        jumps.append((F, 1.0))
    H = _prop1_hamiltonian(random_hermitian(q, rng), jumps, r, q, rng)
    m = LindbladModel(0.5 * (H + dagger(H)), tuple(jumps))
    E = np.eye(N, dtype=complex)[:, :r]
    if U is not None:
        m = m.conjugated(U)
        E = U @ E
    # auxiliary steady state: kernel of the auxiliary generator
    aux = LindbladModel(np.zeros((d_ax, d_ax)), tuple((A, k) for A, k in zip(aux_ops, kappas)))
    from .lindblad import build_generator

    La = build_generator(aux)
    _, _, Vh = np.linalg.svd(La)
    rho = Vh[-1].conj().reshape(d_ax, d_ax, order="F")
    rho = 0.5 * (rho + dagger(rho))
    rho = rho / np.trace(rho)
    return m, E, rho


BUILTINS = {
    "four_level": four_level,
    "two_photon": two_photon,
    "cat_pair": cat_pair,
    "amplitude_damping": amplitude_damping,
    "thermal_qubit": thermal_qubit,
}
