import numpy as np
import pytest

from fourcorners import models

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def random_density(rng, n, rank=None):
    X = random_matrix(rng, n, n if rank is None else rank)
    rho = X @ X.conj().T
    return rho / np.trace(rho)


def random_kraus(rng, d_in, d_out, n=2):
    """Trace-preserving Kraus set from a random isometry (n raised to ceil(d_in/d_out) if needed)."""
    n = max(n, -(-d_in // d_out))
    X = random_matrix(rng, n * d_out, d_in)
    Q, _ = np.linalg.qr(X)
    return [Q[k * d_out:(k + 1) * d_out, :] for k in range(n)]


def model_zoo(seed, n_each=1):
    """DFS, unique and NS random models (name, model, ns-or-None)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_each):
        out.append(("dfs", models.random_dfs_model(rng, r=2, q=2), None))
        out.append(("unique", models.random_unique_model(rng, r=2, q=1), None))
        m, E, rho = models.random_ns_model(rng, 2, 2, 1, U=models.random_unitary(5, rng))
        out.append(("ns", m, (E, rho)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def eig_match(a, b):
    """Max distance after optimally pairing two eigenvalue multisets."""
    from scipy.optimize import linear_sum_assignment

    a, b = np.asarray(a), np.asarray(b)
    assert a.shape == b.shape
    D = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(D)
    return float(D[r, c].max(initial=0.0))
