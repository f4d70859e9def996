"""Fixed-size 2x2 and 3x3 matrix algebra and quadratic forms.

Everything operates on plain float64 numpy arrays. The trailing one or two
axes are the vector/matrix axes; leading axes are batch axes where noted.
Vectorization of a 3x3 matrix is row-major, vec(H)[3*i + j] = H[i, j].
"""

import numpy as np

__all__ = [
    "det2",
    "det3",
    "cofactor3",
    "inv3",
    "nearest_rotation",
    "dist_SO3_sq",
    "sym_part",
    "random_rotation",
    "cholesky3",
    "schur_effective",
    "QuadForm3",
    "QuadForm2",
    "PartitionedSym3",
]


def _check_square(M, n, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.shape[-2:] != (n, n):
        raise ValueError(f"{name}: trailing shape must be ({n}, {n}), got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name}: non-finite entries")
    return M


def det2(M):
    """Determinant of a 2x2 matrix (batched)."""
    M = np.asarray(M, dtype=float)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def det3(M):
    """Determinant of a 3x3 matrix by cofactor expansion along the first row."""
    M = np.asarray(M, dtype=float)
    return (
        M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
        + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
    )


def cofactor3(M):
    """Cofactor matrix of a 3x3 matrix, Cof(M)[i,j] = d det / d M[i,j] (batched)."""
    M = np.asarray(M, dtype=float)
    C = np.empty_like(M)
    C[..., 0, 0] = M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1]
    C[..., 0, 1] = M[..., 1, 2] * M[..., 2, 0] - M[..., 1, 0] * M[..., 2, 2]
    C[..., 0, 2] = M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]
    C[..., 1, 0] = M[..., 0, 2] * M[..., 2, 1] - M[..., 0, 1] * M[..., 2, 2]
    C[..., 1, 1] = M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
    C[..., 1, 2] = M[..., 0, 1] * M[..., 2, 0] - M[..., 0, 0] * M[..., 2, 1]
    C[..., 2, 0] = M[..., 0, 1] * M[..., 1, 2] - M[..., 0, 2] * M[..., 1, 1]
    C[..., 2, 1] = M[..., 0, 2] * M[..., 1, 0] - M[..., 0, 0] * M[..., 1, 2]
    C[..., 2, 2] = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    return C


def inv3(M):
    """Inverse of a 3x3 matrix via the adjugate (batched). Raises on a singular input."""
    M = _check_square(M, 3)
    d = det3(M)
    if np.any(d == 0.0):
        raise ValueError("inv3: singular matrix")
    return np.swapaxes(cofactor3(M), -1, -2) / d[..., None, None]


def sym_part(M):
    """Symmetric part (M + M^T) / 2 (batched)."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def nearest_rotation(F, tol=1e-13, max_iter=50):
    """Rotation factor of the polar decomposition of F, for det F > 0.

    Newton iteration X <- (X + X^{-T}) / 2, started at F. Converges
    quadratically to the orthogonal polar factor for any invertible F;
    orientation is preserved, so det F > 0 is required for a rotation.
    Batched over leading axes.
    """
    F = _check_square(F, 3, "F")
    d = det3(F)
    if np.any(d <= 0.0):
        raise ValueError("nearest_rotation: det F must be positive")
    X = F.copy()
    for _ in range(max_iter):
        Xn = 0.5 * (X + np.swapaxes(np.linalg.inv(X), -1, -2))
        delta = np.max(np.abs(Xn - X))
        X = Xn
        if delta <= tol * max(1.0, np.max(np.abs(X))):
            break
    return X


def dist_SO3_sq(F):
    """Squared Frobenius distance of F to the rotation group (batched).

    For det F > 0 this is |F - nearest_rotation(F)|^2. Otherwise it falls
    back to sum_i (sigma_i - 1)^2 with sigma_i the singular values, obtained
    from the eigenvalues of F^T F, so the value is finite for every F.
    """
    F = _check_square(F, 3, "F")
    d = det3(F)
    out = np.empty(F.shape[:-2], dtype=float)
    pos = d > 0.0
    if np.any(pos):
        Fp = F[pos] if F.ndim > 2 else F
        R = nearest_rotation(Fp)
        v = np.sum((Fp - R) ** 2, axis=(-2, -1))
        if F.ndim > 2:
            out[pos] = v
        else:
            out = v
    if np.any(~pos):
        Fn = F[~pos] if F.ndim > 2 else F
        lam = np.linalg.eigvalsh(np.swapaxes(Fn, -1, -2) @ Fn)
        sig = np.sqrt(np.clip(lam, 0.0, None))
        v = np.sum((sig - 1.0) ** 2, axis=-1)
        if F.ndim > 2:
            out[~pos] = v
        else:
            out = v
    return out if F.ndim > 2 else float(out)


def random_rotation(rng):
    """Random rotation matrix (QR of a Gaussian sample, sign-fixed, det +1)."""
    A = rng.standard_normal((3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diagonal(R))
    if det3(Q) < 0.0:
        Q[:, 2] = -Q[:, 2]
    return Q


def cholesky3(S, tol=0.0):
    """Lower-triangular Cholesky factor of a symmetric positive definite 3x3 matrix.

    Raises ValueError if a pivot is not strictly positive.
    """
    S = _check_square(S, 3, "S")
    if S.ndim != 2:
        raise ValueError("cholesky3: single matrix only")
    if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.max(np.abs(S))):
        raise ValueError("cholesky3: matrix not symmetric")
    L = np.zeros((3, 3))
    for i in range(3):
        for j in range(i + 1):
            s = S[i, j] - L[i, :j] @ L[j, :j]
            if i == j:
                if s <= tol:
                    raise ValueError("cholesky3: matrix not positive definite")
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L


class PartitionedSym3:
    """Symmetric positive definite 3x3 matrix split into in-plane and out-of-plane parts.

    Blocks: kbar (2x2, in-plane), kv (length-2 coupling column), kz (scalar,
    out-of-plane diagonal entry).
    """

    def __init__(self, kbar, kv, kz):
        self.kbar = np.asarray(kbar, dtype=float).reshape(2, 2)
        self.kv = np.asarray(kv, dtype=float).reshape(2)
        self.kz = float(kz)
        if self.kz <= 0.0:
            raise ValueError("PartitionedSym3: kz must be positive")
        K = self.assemble()
        if np.max(np.abs(K - K.T)) > 1e-10 * max(1.0, np.max(np.abs(K))):
            raise ValueError("PartitionedSym3: kbar must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (K + K.T))) <= 0.0:
            raise ValueError("PartitionedSym3: assembled matrix not positive definite")

    @classmethod
    def from_matrix(cls, K):
        K = _check_square(K, 3, "K")
        if np.max(np.abs(K - K.T)) > 1e-8 * max(1.0, np.max(np.abs(K))):
            raise ValueError("PartitionedSym3: matrix not symmetric")
        K = 0.5 * (K + K.T)
        return cls(K[:2, :2], K[:2, 2], K[2, 2])

    def assemble(self):
        K = np.zeros((3, 3))
        K[:2, :2] = 0.5 * (self.kbar + self.kbar.T)
        K[:2, 2] = self.kv
        K[2, :2] = self.kv
        K[2, 2] = self.kz
        return K


def schur_effective(K):
    """Schur complement kbar - kv kv^T / kz of a PartitionedSym3.

    This is the effective in-plane 2x2 tensor after eliminating the
    out-of-plane component at fixed in-plane data.
    """
    if not isinstance(K, PartitionedSym3):
        K = PartitionedSym3.from_matrix(K)
    return 0.5 * (K.kbar + K.kbar.T) - np.outer(K.kv, K.kv) / K.kz


class _QuadFormBase:
    """Quadratic form on n x n matrices stored as a full symmetric coefficient matrix.

    Q(H) = vec(H)^T A vec(H) with row-major vec. The form must be positive
    semidefinite, vanish on skew-symmetric matrices, and be positive definite
    on symmetric matrices.
    """

    _n = None

    def __init__(self, A):
        n = self._n
        m = n * n
        A = np.asarray(A, dtype=float)
        if A.shape != (m, m):
            raise ValueError(f"coefficient matrix must be {m}x{m}, got {A.shape}")
        scale = max(1.0, float(np.max(np.abs(A))))
        if np.max(np.abs(A - A.T)) > 1e-10 * scale:
            raise ValueError("coefficient matrix must be symmetric")
        A = 0.5 * (A + A.T)
        ev = np.linalg.eigvalsh(A)
        if ev[0] < -1e-10 * scale:
            raise ValueError("form is not positive semidefinite")
        # skew matrices must lie in the kernel
        for a in range(n):
            for b in range(a + 1, n):
                S = np.zeros((n, n))
                S[a, b], S[b, a] = 1.0, -1.0
                if np.linalg.norm(A @ S.reshape(-1)) > 1e-8 * scale:
                    raise ValueError("form does not vanish on skew-symmetric matrices")
        # positive definite on the symmetric subspace
        basis = []
        for a in range(n):
            for b in range(a, n):
                S = np.zeros((n, n))
                S[a, b] = S[b, a] = 1.0
                basis.append(S.reshape(-1) / np.linalg.norm(S))
        E = np.stack(basis, axis=1)
        if np.min(np.linalg.eigvalsh(E.T @ A @ E)) <= 1e-12 * scale:
            raise ValueError("form is not positive definite on symmetric matrices")
        self.A = A

    @classmethod
    def from_evaluator(cls, q):
        """Build the coefficient matrix from a scalar evaluator by polarization."""
        n = cls._n
        m = n * n
        A = np.zeros((m, m))
        basis = [np.zeros((n, n)) for _ in range(m)]
        for k in range(m):
            basis[k][divmod(k, n)] = 1.0
        for a in range(m):
            for b in range(a, m):
                val = 0.25 * (q(basis[a] + basis[b]) - q(basis[a] - basis[b]))
                A[a, b] = A[b, a] = val
        return cls(A)

    def __call__(self, H):
        H = np.asarray(H, dtype=float)
        n = self._n
        if H.shape[-2:] != (n, n):
            raise ValueError(f"argument must have trailing shape ({n}, {n})")
        v = H.reshape(H.shape[:-2] + (n * n,))
        return np.einsum("...i,ij,...j->...", v, self.A, v)


class QuadForm3(_QuadFormBase):
    _n = 3


class QuadForm2(_QuadFormBase):
    _n = 2
