"""Thickness relaxation of the elastic quadratic form and of the permittivity.

Three eliminations produce the effective 2D model:

* relax_over_z: minimize Q3(X^0 + z (x) e3) over z in R^3, where X^0 embeds
  a 2x2 matrix into the upper-left block. The minimizer is linear in X.
* RelaxedQ2.qbar2: average the relaxed form over the thickness and minimize
  over a constant 2x2 offset s, against an affine-in-thickness prestrain.
* effective_permittivity / m_out_of_plane: rotate the averaged permittivity
  into a deformed frame and eliminate the out-of-plane field component,
  which yields the Schur complement of the out-of-plane diagonal entry.
"""

import numpy as np

from .smallmat import PartitionedSym3, QuadForm2, schur_effective

__all__ = [
    "relax_over_z",
    "RelaxedQ2",
    "effective_permittivity",
    "m_out_of_plane",
]

# 4-point Gauss-Legendre rule on (-1/2, 1/2); exact through degree 7
_T_GAUSS = 0.5 * np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_W_GAUSS = 0.5 * np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


def _embed_indices():
    # vec positions of the upper-left 2x2 block inside a row-major 3x3 vec
    return np.array([0, 1, 3, 4])


def _coupling_basis():
    # vec(z (x) e3) = S z with S the 9x3 selector of the third column
    S = np.zeros((9, 3))
    S[2, 0] = 1.0  # entry (0,2)
    S[5, 1] = 1.0  # entry (1,2)
    S[8, 2] = 1.0  # entry (2,2)
    return S


def relax_over_z(q3, X):
    """Minimize Q3 over the appended column: returns (z_star, value).

    X is a 2x2 matrix; X^0 places it in the upper-left 3x3 block. The
    stationarity system is linear with the (cached-free) 3x3 matrix
    S^T A S; a singular system means Q3 degenerates on the coupling
    subspace and is rejected.
    """
    X = np.asarray(X, dtype=float).reshape(2, 2)
    A = q3.A
    S = _coupling_basis()
    idx = _embed_indices()
    x = np.zeros(9)
    x[idx] = X.reshape(-1)
    M = S.T @ A @ S
    if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.linalg.norm(M) ** 3):
        raise ValueError("relax_over_z: quadratic form degenerate on the coupling subspace")
    z = -np.linalg.solve(M, S.T @ (A @ x))
    v = x + S @ z
    return z, float(v @ A @ v)


class RelaxedQ2:
    """Relaxed in-plane quadratic form and its thickness average.

    Built from a 3x3-matrix quadratic form (typically the expansion of the
    elastic density at the identity) and an affine-in-thickness prestrain.
    Caches the factorized column-relaxation system, the linear minimizer
    map, and the resulting 2x2-form coefficient matrix.
    """

    def __init__(self, q3, prestrain=None):
        self.q3 = q3
        self.prestrain = prestrain
        A = q3.A
        S = _coupling_basis()
        idx = _embed_indices()
        M = S.T @ A @ S
        if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.linalg.norm(M) ** 3):
            raise ValueError("RelaxedQ2: quadratic form degenerate on the coupling subspace")
        E = np.zeros((9, 4))
        E[idx, np.arange(4)] = 1.0
        # minimizer map z(X) = L vec(X) and Schur-reduced coefficient matrix
        self._zmap = -np.linalg.solve(M, S.T @ A @ E)
        A2 = E.T @ (A - A @ S @ np.linalg.solve(M, S.T @ A)) @ E
        self.q2 = QuadForm2(A2)

    # -- pointwise relaxed form -------------------------------------------

    def minimizer_z(self, X):
        """Optimal appended column for the in-plane matrix X (linear in X). Batched."""
        X = np.asarray(X, dtype=float)
        v = X.reshape(X.shape[:-2] + (4,))
        return np.einsum("za,...a->...z", self._zmap, v)

    def q2_eval(self, X, t=0.0):
        """Relaxed in-plane quadratic form. The thickness coordinate must lie in [-1/2, 1/2].

        The underlying 3x3 form carries no thickness dependence here, so the
        value does not depend on t; the argument is validated for interface
        parity with thickness-resolved densities.
        """
        if np.any(np.abs(t) > 0.5 + 1e-14):
            raise ValueError("q2_eval: |t| must not exceed 1/2")
        return self.q2(X)

    # -- thickness average -------------------------------------------------

    def qbar2(self, G, xp=None):
        """Thickness-averaged relaxed form at in-plane matrix G.

        Minimizes int_{-1/2}^{1/2} Q2(t G + s - B_2x2(t)) dt over constant
        2x2 offsets s (4-point Gauss rule in t, exact for this quadratic
        integrand). The skew part of s is unconstrained because Q2 kills
        skew inputs; the least-norm stationary point pins it to zero.
        Returns (s_star, value).
        """
        G = np.asarray(G, dtype=float).reshape(2, 2)
        A2 = self.q2.A
        g = G.reshape(-1)
        bq = self._prestrain_blocks()
        # stationarity: A2 (s + sum_q w_q (t_q g - b_q)) = 0
        rhs = A2 @ sum(w * (t * g - b) for w, t, b in zip(_W_GAUSS, _T_GAUSS, bq))
        s, *_ = np.linalg.lstsq(A2, -rhs, rcond=None)
        val = 0.0
        for w, t, b in zip(_W_GAUSS, _T_GAUSS, bq):
            v = t * g + s - b
            val += w * float(v @ A2 @ v)
        return s.reshape(2, 2), val

    def _prestrain_blocks(self):
        if self.prestrain is None:
            return [np.zeros(4) for _ in _T_GAUSS]
        return [self.prestrain.B(t)[:2, :2].reshape(-1) for t in _T_GAUSS]

    def qbar2_coefficients(self):
        """Quadratic polynomial Qbar2(G) = vec(G)^T P vec(G) + q . vec(G) + r."""
        _, r = self.qbar2(np.zeros((2, 2)))
        P = np.zeros((4, 4))
        q = np.zeros(4)
        basis = np.eye(4)
        for a in range(4):
            _, plus = self.qbar2(basis[a].reshape(2, 2))
            _, minus = self.qbar2(-basis[a].reshape(2, 2))
            P[a, a] = 0.5 * (plus + minus) - r
            q[a] = 0.5 * (plus - minus)
        for a in range(4):
            for b in range(a + 1, 4):
                _, pp = self.qbar2((basis[a] + basis[b]).reshape(2, 2))
                cross = 0.5 * (pp - r - q[a] - q[b] - P[a, a] - P[b, b])
                P[a, b] = P[b, a] = cross
        return P, q, r


def effective_permittivity(kbar, R):
    """Rotate the averaged permittivity into the frame R and reduce it.

    Returns (PartitionedSym3 of R^T kbar R, 2x2 Schur complement). The frame
    must be orthonormal to 1e-8. Batched over leading axes of R, in which
    case the partition is returned as a plain tuple of arrays.
    """
    kbar = np.asarray(kbar, dtype=float).reshape(3, 3)
    R = np.asarray(R, dtype=float)
    RtR = np.swapaxes(R, -1, -2) @ R
    if np.max(np.abs(RtR - np.eye(3))) > 1e-8:
        raise ValueError("effective_permittivity: frame not orthonormal")
    K = np.swapaxes(R, -1, -2) @ kbar @ R
    if R.ndim == 2:
        part = PartitionedSym3.from_matrix(K)
        return part, schur_effective(part)
    kb = K[..., :2, :2]
    kv = K[..., :2, 2]
    kz = K[..., 2, 2]
    keff = kb - kv[..., :, None] * kv[..., None, :] / kz[..., None, None]
    return (kb, kv, kz), keff


def m_out_of_plane(K, gradphi):
    """Optimal out-of-plane field component -kv . grad / kz for a reduced tensor."""
    if isinstance(K, PartitionedSym3):
        kv, kz = K.kv, K.kz
    else:
        kv, kz = K
    g = np.asarray(gradphi, dtype=float)
    return -np.einsum("...i,...i->...", kv, g) / kz
