"""Effective thin-plate model on the unit square.

Deformations come from a cylindrical bending ansatz driven by a nodal angle
profile theta(x1): the midsurface is an exact isometry for every profile, its
curvature tensor is diag(theta', 0), and the attached orthonormal frame
carries the permittivity reduction. The potential solves a 2D pure-Neumann
problem with the reduced in-plane permittivity, discretized like the 3D one
(cell-center coefficient, 2x2 Gauss quadratic terms, center-rule charge).
"""

import numpy as np

from . import fields
from .cg import pcg
from .material import Q3_form
from .relaxation import RelaxedQ2, effective_permittivity

__all__ = [
    "CylindricalIsometry",
    "M0",
    "grad_M0_theta",
    "solve_potential2",
    "E0",
    "F0",
    "saddle_iterate_2d",
    "check_virial",
    "keff_and_derivative",
]


def _relaxed_form(mat):
    return RelaxedQ2(Q3_form(mat.elastic), mat.prestrain)


class CylindricalIsometry:
    """Bending deformation y(x) = (int_0^{x1} cos theta, x2, -int_0^{x1} sin theta).

    theta lives at the x1-nodes of a Grid2. The tangent/normal pair
    t = (cos theta, 0, -sin theta), nu = (sin theta, 0, cos theta) makes
    (t, e2, nu) a rotation and the curvature tensor grad'y^T grad'nu equal to
    diag(theta', 0) with no sign flip. Nodal midsurface values integrate
    cos/sin exactly on each cell for the linear-in-x1 interpolant of theta.
    """

    def __init__(self, grid, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (grid.n1,):
            raise ValueError("theta must carry one value per x1 node")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        self.grid = grid
        self.theta = theta.copy()

    # -- angle samples -------------------------------------------------------

    def theta_cells(self):
        return 0.5 * (self.theta[:-1] + self.theta[1:])

    def curvature_cells(self):
        """theta' at cell midpoints, centered two-node difference."""
        return np.diff(self.theta) / self.grid.h1

    def curvature_nodes(self):
        ops = fields._make_axis_ops(self.grid.n1, self.grid.h1)
        return ops["D1"] @ self.theta

    # -- geometry ------------------------------------------------------------

    @staticmethod
    def tangent_of(theta):
        th = np.asarray(theta, dtype=float)
        return np.stack([np.cos(th), np.zeros_like(th), -np.sin(th)], axis=-1)

    @staticmethod
    def normal_of(theta):
        th = np.asarray(theta, dtype=float)
        return np.stack([np.sin(th), np.zeros_like(th), np.cos(th)], axis=-1)

    @staticmethod
    def frame_of(theta):
        """Rotation with columns (tangent, e2, normal), batched over theta."""
        th = np.asarray(theta, dtype=float)
        R = np.zeros(th.shape + (3, 3))
        R[..., 0, 0] = np.cos(th)
        R[..., 2, 0] = -np.sin(th)
        R[..., 1, 1] = 1.0
        R[..., 0, 2] = np.sin(th)
        R[..., 2, 2] = np.cos(th)
        return R

    def frame_nodes(self):
        return self.frame_of(self.theta)

    def frame_cells(self):
        return self.frame_of(self.theta_cells())

    def _arc_coords(self):
        """Cumulative (int cos theta, -int sin theta) at x1 nodes.

        Per-cell integrals are exact for piecewise-linear theta; the
        constant-slope degenerate case falls back to the midpoint value.
        """
        th0, th1 = self.theta[:-1], self.theta[1:]
        dth = th1 - th0
        small = np.abs(dth) < 1e-12
        safe = np.where(small, 1.0, dth)
        c = np.where(small, np.cos(0.5 * (th0 + th1)), (np.sin(th1) - np.sin(th0)) / safe)
        s = np.where(small, np.sin(0.5 * (th0 + th1)), (np.cos(th0) - np.cos(th1)) / safe)
        y1 = np.concatenate([[0.0], np.cumsum(self.grid.h1 * c)])
        y3 = np.concatenate([[0.0], np.cumsum(-self.grid.h1 * s)])
        return y1, y3

    def deformation_nodes(self):
        """Midsurface nodal values on the Grid2, weighted zero mean per component."""
        y1, y3 = self._arc_coords()
        y = np.zeros(self.grid.shape + (3,))
        y[..., 0] = y1[:, None]
        y[..., 1] = self.grid.x2[None, :]
        y[..., 2] = y3[:, None]
        return fields.zero_mean_project(y, self.grid)


# ---------------------------------------------------------------------------
# bending energy


def _curvature_polynomial(rq):
    """qbar(kappa) for the curvature tensor diag(kappa, 0) as (a, b, c)."""
    P, q, r = rq.qbar2_coefficients()
    return P[0, 0], q[0], r


def M0(y0, rq):
    """Effective bending energy (1/2) int qbar2(diag(theta',0)) dx'."""
    a, b, c = _curvature_polynomial(rq)
    kap = y0.curvature_cells()
    return 0.5 * y0.grid.h1 * float(np.sum(a * kap * kap + b * kap + c))


def grad_M0_theta(y0, rq):
    """Exact derivative of M0 with respect to the nodal angles."""
    a, b, _ = _curvature_polynomial(rq)
    kap = y0.curvature_cells()
    cellwise = 0.5 * (2.0 * a * kap + b)
    g = np.zeros_like(y0.theta)
    g[1:] += cellwise
    g[:-1] -= cellwise
    return g


# ---------------------------------------------------------------------------
# reduced permittivity and its angle derivative


def keff_and_derivative(theta, k):
    """Reduced in-plane permittivity and its theta-derivative, batched.

    Rotates k into the bending frame, reduces out the normal component by a
    Schur complement, and differentiates the whole chain in theta. Returns
    (keff, dkeff) with trailing shape (2, 2).
    """
    theta = np.asarray(theta, dtype=float)
    R = CylindricalIsometry.frame_of(theta)
    dR = np.zeros_like(R)
    dR[..., 0, 0] = -np.sin(theta)
    dR[..., 2, 0] = -np.cos(theta)
    dR[..., 0, 2] = np.cos(theta)
    dR[..., 2, 2] = -np.sin(theta)
    k = np.asarray(k, dtype=float)
    K = np.swapaxes(R, -1, -2) @ k @ R
    dK = np.swapaxes(dR, -1, -2) @ k @ R + np.swapaxes(R, -1, -2) @ k @ dR
    kb, kv, kz = K[..., :2, :2], K[..., :2, 2], K[..., 2, 2]
    dkb, dkv, dkz = dK[..., :2, :2], dK[..., :2, 2], dK[..., 2, 2]
    kzi = 1.0 / kz[..., None, None]
    outer = kv[..., :, None] * kv[..., None, :]
    keff = kb - outer * kzi
    dkeff = (
        dkb
        - (dkv[..., :, None] * kv[..., None, :] + kv[..., :, None] * dkv[..., None, :]) * kzi
        + outer * (dkz[..., None, None] * kzi * kzi)
    )
    return keff, dkeff


def _keff_cells(y0, mat):
    kbar = mat.permittivity.kbar()
    _, keff = effective_permittivity(kbar, y0.frame_cells())
    return keff  # (nc1, 2, 2)


# ---------------------------------------------------------------------------
# 2D pure-Neumann potential problem


def _local_stiffness2(coef, grid):
    w = grid.cell_area / 4.0
    K = None
    for pt in fields.gauss_points2():
        V = fields.shape_gradients2(grid, pt)
        contrib = w * np.einsum("ai,...ij,bj->...ab", V, coef, V, optimize=True)
        K = contrib if K is None else K + contrib
    return K


def _node_weights2(grid):
    w = grid.w1[:, None] * grid.w2[None, :]
    return w / w.sum()


class PoissonSystem2:
    """Assembled reduced-permittivity operator and charge load on the midsurface."""

    def __init__(self, grid, coef, load, weights):
        self.grid = grid
        self.coef = coef
        self.Kloc = _local_stiffness2(coef, grid)
        U = np.einsum("...aa->...a", self.Kloc)
        self.diag = fields.corner_scatter2(U, grid)
        self.weights = weights
        self.b = load - load.sum() * weights

    def apply(self, phi):
        U = fields.corner_gather2(phi, self.grid)
        return fields.corner_scatter2(np.einsum("...ab,...b->...a", self.Kloc, U), self.grid)

    def matvec(self, x):
        return self.apply(x.reshape(self.grid.shape)).ravel()


def _charge_load2(grid, mat):
    nb = mat.charge.nbar(grid.c1)[:, None]
    w = mat.coupling.gamma * grid.cell_area / 4.0
    U = np.broadcast_to((w * np.broadcast_to(nb, grid.cshape))[..., None], grid.cshape + (4,))
    return fields.corner_scatter2(U, grid)


def assemble_poisson2(y0, mat):
    grid = y0.grid
    keff = _keff_cells(y0, mat)
    coef = mat.coupling.beta * np.broadcast_to(keff[:, None], grid.cshape + (2, 2))
    return PoissonSystem2(grid, coef, _charge_load2(grid, mat), _node_weights2(grid))


def solve_potential2(y0, mat, tol=1e-10, max_iter=None):
    """Solve the reduced potential problem; weighted zero-mean nodal field."""
    system = assemble_poisson2(y0, mat)
    x, _ = pcg(system.matvec, system.b.ravel(), system.diag.ravel(), tol=tol, max_iter=max_iter)
    phi = x.reshape(system.grid.shape)
    return phi - float(np.sum(system.weights * phi))


# ---------------------------------------------------------------------------
# energies


def dielectric_second_moments(phi, grid):
    """Per-cell Gauss second moments of the in-plane gradient, (nc1,nc2,2,2)."""
    w = grid.cell_area / 4.0
    U = fields.corner_gather2(np.asarray(phi, dtype=float), grid)
    G2 = np.zeros(grid.cshape + (2, 2))
    for pt in fields.gauss_points2():
        V = fields.shape_gradients2(grid, pt)
        g = np.einsum("...a,aj->...j", U, V)
        G2 += w * g[..., :, None] * g[..., None, :]
    return G2


def _energy_parts2(y0, phi, mat):
    grid = y0.grid
    keff = _keff_cells(y0, mat)
    G2 = dielectric_second_moments(phi, grid).sum(axis=1)  # x2-summed per x1-cell
    quad = float(np.einsum("cij,cji->", keff, G2))
    U = fields.corner_gather2(np.asarray(phi, dtype=float), grid)
    nb = mat.charge.nbar(grid.c1)[:, None]
    moment = grid.cell_area * float(np.sum(nb * U.mean(axis=2)))
    return quad, moment


def E0(y0, phi, mat):
    """Effective electrostatic energy (beta/2) int Keff grad'phi . grad'phi - gamma int nbar phi."""
    quad, moment = _energy_parts2(y0, phi, mat)
    return 0.5 * mat.coupling.beta * quad - mat.coupling.gamma * moment


def F0(y0, phi, mat, rq=None):
    """Effective total energy M0 - E0."""
    if rq is None:
        rq = _relaxed_form(mat)
    return M0(y0, rq) - E0(y0, phi, mat)


def check_virial(y0, phi, mat):
    """Relative residual of the weak-form identity at a solved potential."""
    quad, moment = _energy_parts2(y0, phi, mat)
    lhs = mat.coupling.beta * quad
    rhs = mat.coupling.gamma * moment
    return abs(lhs - rhs) / (1.0 + abs(rhs))


# ---------------------------------------------------------------------------
# alternating saddle iteration


def _theta_objective_and_grad(theta, grid, mat, rq, G2x1):
    """J(theta) = M0 - (beta/2) sum_c tr(Keff(theta_c) G2x1[c]) and its gradient."""
    y0 = CylindricalIsometry(grid, theta)
    tc = y0.theta_cells()
    keff, dkeff = keff_and_derivative(tc, mat.permittivity.kbar())
    quad = float(np.einsum("cij,cji->", keff, G2x1))
    J = M0(y0, rq) - 0.5 * mat.coupling.beta * quad
    g = grad_M0_theta(y0, rq)
    dq = 0.5 * mat.coupling.beta * np.einsum("cij,cji->c", dkeff, G2x1)
    g[1:] -= 0.5 * dq
    g[:-1] -= 0.5 * dq
    return J, g


def _bending_hessian(grid, rq):
    """Exact Hessian of M0 in the nodal angles: (a/h1) * second-difference matrix."""
    a, _, _ = _curvature_polynomial(rq)
    n = grid.n1
    T = np.zeros((n, n))
    idx = np.arange(n - 1)
    T[idx, idx] += 1.0
    T[idx + 1, idx + 1] += 1.0
    T[idx, idx + 1] -= 1.0
    T[idx + 1, idx] -= 1.0
    return (a / grid.h1) * T


def saddle_iterate_2d(theta0, grid, mat, iters=200, tol=1e-8, rq=None, solver_tol=1e-12):
    """Alternate an exact potential solve with a descent step in the angle profile.

    The potential step maximizes the total energy over phi (it minimizes the
    concave-side objective exactly); the angle step takes one damped Newton
    step on theta at frozen phi, preconditioned by the exact bending Hessian
    plus an adaptive ridge, with Armijo backtracking. Returns
    (y0, phi, history, converged) where history rows hold
    (F0 after the phi-step, F0 after the theta-step, gradient norm, step size).
    """
    if rq is None:
        rq = _relaxed_form(mat)
    theta = np.asarray(theta0, dtype=float).copy()
    H = _bending_hessian(grid, rq)
    scale = max(np.abs(np.diag(H)).max(), 1.0)
    ridge = 1e-2 * scale
    eye = np.eye(grid.n1)
    history = []
    converged = False
    phi = None
    for _ in range(iters):
        y0 = CylindricalIsometry(grid, theta)
        phi = solve_potential2(y0, mat, tol=solver_tol)
        f_after_phi = F0(y0, phi, mat, rq)
        G2x1 = dielectric_second_moments(phi, grid).sum(axis=1)
        J, g = _theta_objective_and_grad(theta, grid, mat, rq, G2x1)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            history.append((f_after_phi, f_after_phi, gnorm, 0.0))
            converged = True
            break
        d = np.linalg.solve(H + ridge * eye, -g)
        slope = -float(g @ d)
        step = 1.0
        accepted = False
        for _ in range(60):
            cand = theta + step * d
            Jc, _ = _theta_objective_and_grad(cand, grid, mat, rq, G2x1)
            if Jc <= J - 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            history.append((f_after_phi, f_after_phi, gnorm, 0.0))
            break
        ridge = ridge * 0.25 if step == 1.0 else ridge * 4.0
        ridge = min(max(ridge, 1e-12 * scale), 1e12 * scale)
        theta = cand
        y0 = CylindricalIsometry(grid, theta)
        f_after_theta = F0(y0, phi, mat, rq)
        history.append((f_after_phi, f_after_theta, gnorm, step))
    y0 = CylindricalIsometry(grid, theta)
    phi = solve_potential2(y0, mat, tol=solver_tol)
    return y0, phi, np.array(history), converged
