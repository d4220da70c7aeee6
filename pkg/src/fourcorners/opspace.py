"""Hilbert-Schmidt operator space.

Operators are vectorized by column stacking, ``vec(A) = A.flatten(order="F")``,
so that the map ``A -> L @ A @ R`` is the matrix ``kron(R.T, L)``.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "vectorize",
    "devectorize",
    "hs_inner",
    "sandwich_superop",
    "left_superop",
    "right_superop",
    "commutator_superop",
    "superop_adjoint",
    "apply_superop",
    "HermitianBasis",
    "hermitian_basis",
    "superop_in_hermitian_basis",
    "restricted_matrix",
    "is_unitary_generator",
    "hermitize",
    "dagger",
]

DEFAULT_TOL = 1e-10


def dagger(A):
    return np.conj(np.transpose(A))


def hermitize(A):
    """Hermitian part (A + A^dag)/2."""
    A = np.asarray(A)
    return 0.5 * (A + dagger(A))


def _square(A, name="operator"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    return A


def _dim_from_ket(v):
    n = int(round(np.sqrt(v.shape[0])))
    if n * n != v.shape[0]:
        raise ValueError(f"length {v.shape[0]} is not a perfect square")
    return n


def vectorize(A):
    """Column-stacked operator ket |A>>."""
    A = _square(A)
    return np.asarray(A, dtype=complex).reshape(-1, order="F")


def devectorize(v, dim=None):
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("operator ket must be one-dimensional")
    n = _dim_from_ket(v)
    if dim is not None and dim != n:
        raise ValueError(f"ket of length {v.shape[0]} does not match dim {dim}")
    return v.reshape((n, n), order="F")


def hs_inner(A, B):
    """Hilbert-Schmidt inner product <<A|B>> = Tr(A^dag B)."""
    A = _square(A)
    B = _square(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def sandwich_superop(L, R):
    """Matrix of A -> L A R."""
    L = _square(L, "L")
    R = _square(R, "R")
    if L.shape != R.shape:
        raise ValueError(f"dimension mismatch {L.shape} vs {R.shape}")
    return np.kron(np.transpose(R), L)


def left_superop(A):
    """A -> X A (left multiplication)."""
    A = _square(A)
    return np.kron(np.eye(A.shape[0]), A)


def right_superop(A):
    """X -> X A (right multiplication)."""
    A = _square(A)
    return np.kron(np.transpose(A), np.eye(A.shape[0]))


def commutator_superop(H):
    """-i[H, .]."""
    return -1j * (left_superop(H) - right_superop(H))


def superop_adjoint(S):
    """Hilbert-Schmidt adjoint; the conjugate transpose of the matrix."""
    return dagger(np.asarray(S))


def apply_superop(S, A):
    """Apply a superoperator matrix to an operator, returning an operator."""
    A = _square(A)
    S = np.asarray(S)
    if S.shape != (A.size, A.size):
        raise ValueError(f"superoperator shape {S.shape} incompatible with {A.shape}")
    return devectorize(S @ vectorize(A))


@dataclass(frozen=True)
class HermitianBasis:
    """Orthonormal Hermitian operator basis, stored as an (n, N, N) array.

    ``duals`` are the biorthogonal partners used for matrix elements; for an
    orthonormal basis they are the elements themselves.
    """

    elements: np.ndarray
    duals: np.ndarray = None

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        object.__setattr__(self, "elements", el)
        if self.duals is None:
            object.__setattr__(self, "duals", el)
        else:
            object.__setattr__(self, "duals", np.asarray(self.duals, dtype=complex))

    @property
    def dim(self):
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    def __getitem__(self, k):
        return self.elements[k]

    def kets(self):
        """Columns vec(Gamma_k)."""
        return np.stack([vectorize(g) for g in self.elements], axis=1)

    def dual_kets(self):
        return np.stack([vectorize(g) for g in self.duals], axis=1)

    def gram(self):
        K = self.kets()
        return K.conj().T @ K


def hermitian_basis(N):
    """Generalized Gell-Mann basis normalized to Tr(G_k G_l) = delta_kl.

    Element 0 is I/sqrt(N); then symmetric and antisymmetric off-diagonal
    pairs; then traceless diagonal elements.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    out = [np.eye(N, dtype=complex) / np.sqrt(N)]
    s2 = 1.0 / np.sqrt(2.0)
    for j in range(N):
        for k in range(j + 1, N):
            S = np.zeros((N, N), dtype=complex)
            S[j, k] = S[k, j] = s2
            out.append(S)
            A = np.zeros((N, N), dtype=complex)
            A[j, k] = -1j * s2
            A[k, j] = 1j * s2
            out.append(A)
    for l in range(1, N):
        d = np.zeros(N)
        d[:l] = 1.0
        d[l] = -l
        out.append(np.diag(d / np.sqrt(l * (l + 1))).astype(complex))
    return HermitianBasis(np.array(out))


def restricted_matrix(S, right, left=None):
    """Matrix elements <<left_k| S |right_l>> for lists of operators."""
    R = np.stack([vectorize(x) for x in right], axis=1)
    Lk = R if left is None else np.stack([vectorize(x) for x in left], axis=1)
    return Lk.conj().T @ np.asarray(S) @ R


def superop_in_hermitian_basis(S, basis, tol=DEFAULT_TOL):
    """Return (M, is_real) with M_kl = <<G_k|S|G_l>>.

    Real matrix elements witness Hermiticity preservation.  When ``is_real``
    the real part is returned.
    """
    S = np.asarray(S)
    M = restricted_matrix(S, basis.elements, basis.duals)
    scale = max(1.0, np.max(np.abs(M))) if M.size else 1.0
    is_real = bool(np.all(np.abs(M.imag) < tol * scale))
    return (M.real if is_real else M), is_real


def is_unitary_generator(S, basis, tol=DEFAULT_TOL):
    """True iff S is real antisymmetric in the Hermitian basis (-i[H,.] form)."""
    M, is_real = superop_in_hermitian_basis(S, basis, tol)
    if not is_real:
        raise ValueError("superoperator is not Hermiticity-preserving in this basis")
    scale = max(1.0, np.max(np.abs(M))) if M.size else 1.0
    return bool(np.max(np.abs(M + M.T), initial=0.0) < tol * scale)
