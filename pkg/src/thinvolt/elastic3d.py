"""Mechanical energy of the thin plate and the coupled saddle functional.

The scaled mechanical energy per unit thickness is

    M_eps(y) = eps^{-2} int [ W(grad_eps y M^{-1}) det M + H(hess_eps y) ],

with M = I + eps B the prestrain factor and H the second-gradient penalty.
The elastic term uses a two-point Gauss rule across the thickness (exact on
the quadratic through-thickness strain profile of bent states, which a
single center point systematically underintegrates) and the cell center in
plane; the second-gradient term stays on cell centers. Gradients are exact
derivatives of the discrete energies (verified against finite differences
in the test-suite), so descent methods and optimality probes agree.
"""

from dataclasses import dataclass

import numpy as np

from . import electro3d, fields
from .material import H_hyper, W_el, dH_hyper, dW_el, kappa_pullback, maxwell_stress_moment
from .smallmat import det3, dist_SO3_sq, inv3

__all__ = [
    "flat_deformation",
    "M_eps",
    "grad_M_eps",
    "F_eps",
    "grad_y_F_eps",
    "AprioriReport",
    "apriori_report",
]

_EYE3 = np.eye(3)


def flat_deformation(grid, eps):
    """Flat reference deformation (x1, x2, eps*x3), gauged to zero mean."""
    y = np.zeros(grid.shape + (3,))
    y[..., 0] = grid.x1[:, None, None]
    y[..., 1] = grid.x2[None, :, None]
    y[..., 2] = eps * grid.x3[None, None, :]
    return fields.zero_mean_project(y, grid)


# through-thickness Gauss rule for the elastic term: local x3 points and weights
_Z_GAUSS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
_W_GAUSS = (0.5, 0.5)


def _prestrain_cells(grid, eps, mat, z=0.5):
    """M = I + eps B at the local x3 coordinate z of every cell, with exact inverse."""
    t = grid.c3 + (z - 0.5) * grid.h3
    B = mat.prestrain.B(t)  # (nc3, 3, 3)
    M = _EYE3 + eps * B
    Minv = inv3(M)
    detM = det3(M)
    if np.min(detM) <= 0.0:
        raise ValueError("prestrain factor loses orientation at this eps")
    shape = (1, 1, grid.cshape[2])
    return (
        np.broadcast_to(M, shape + (3, 3)),
        np.broadcast_to(Minv, shape + (3, 3)),
        np.broadcast_to(detM, shape),
    )


def _elastic_integral(y, grid, eps, mat):
    """Two-point thickness quadrature of W(grad_eps y M^-1) det M; nan-safe."""
    total = 0.0
    for z, w in zip(_Z_GAUSS, _W_GAUSS):
        F = fields.scaled_gradient(y, grid, eps, point=(0.5, 0.5, z))
        _, Minv, detM = _prestrain_cells(grid, eps, mat, z)
        Wd = W_el(F @ Minv, mat.elastic)
        if not np.all(np.isfinite(Wd)):
            return np.inf
        total += w * fields.integrate3(Wd * detM, grid)
    return total


def M_eps(y, grid, eps, mat):
    """Scaled mechanical energy; +inf if the prestrain-adjusted gradient loses orientation."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    elastic = _elastic_integral(y, grid, eps, mat)
    if not np.isfinite(elastic):
        return np.inf
    G = fields.scaled_hessian(y, grid, eps)
    hyper = fields.integrate3(H_hyper(G, eps, mat.hyper), grid)
    return (elastic + hyper) / (eps * eps)


def M_eps_parts(y, grid, eps, mat):
    """(elastic, hyper) parts of M_eps, both already carrying the eps^-2 factor."""
    elastic = _elastic_integral(y, grid, eps, mat) / (eps * eps)
    G = fields.scaled_hessian(y, grid, eps)
    hyper = fields.integrate3(H_hyper(G, eps, mat.hyper), grid) / (eps * eps)
    return elastic, hyper


def grad_M_eps(y, grid, eps, mat):
    """Exact gradient of M_eps with respect to the nodal deformation.

    Raises if the energy is infinite at y. The translation component is
    projected out (it is already zero up to roundoff).
    """
    scale = grid.cell_volume / (eps * eps)
    g = None
    for z, w in zip(_Z_GAUSS, _W_GAUSS):
        F = fields.scaled_gradient(y, grid, eps, point=(0.5, 0.5, z))
        _, Minv, detM = _prestrain_cells(grid, eps, mat, z)
        arg = F @ Minv
        if np.min(det3(arg)) <= 0.0:
            raise ValueError("grad_M_eps: energy is infinite at this deformation")
        S = dW_el(arg, mat.elastic) @ np.swapaxes(Minv, -1, -2) * (detM * w * scale)[..., None, None]
        piece = fields.gradient_scatter(S, grid, eps, point=(0.5, 0.5, z))
        g = piece if g is None else g + piece
    G = fields.scaled_hessian(y, grid, eps)
    g += fields.hessian_scatter(dH_hyper(G, eps, mat.hyper) * scale, grid, eps)
    return g - g.mean(axis=(0, 1, 2))


def F_eps(y, phi, grid, eps, mat):
    """Coupled saddle functional M_eps - E_eps; +inf propagates from the mechanical part."""
    m = M_eps(y, grid, eps, mat)
    if not np.isfinite(m):
        return np.inf
    return m - electro3d.E_eps(y, phi, grid, eps, mat)


def grad_y_F_eps(y, phi, grid, eps, mat):
    """Deformation gradient of F_eps at a frozen potential.

    The dielectric contribution is minus the derivative of the coefficient
    quadratic term, assembled from the electrostatic stress against the
    per-cell Gauss second moment of the potential gradient.
    """
    g = grad_M_eps(y, grid, eps, mat)
    F = fields.scaled_gradient(y, grid, eps)
    G2 = electro3d.gradient_second_moments(y, phi, grid, eps)
    P = mat.coupling.beta * maxwell_stress_moment(F, mat.permittivity.k, G2)
    g += fields.gradient_scatter(P, grid, eps)
    return g - g.mean(axis=(0, 1, 2))


@dataclass
class AprioriReport:
    """Compactness-style diagnostics of a deformation/potential pair at one eps."""

    eps: float
    dist2_so3: float
    dist2_so3_prestrain: float
    grad_qw_norm: float
    det_inv_norm: float
    weighted_flux: float
    grad_phi_pw: float
    p_w: float
    min_det: float

    def row(self):
        return [
            self.eps,
            self.dist2_so3,
            self.dist2_so3_prestrain,
            self.grad_qw_norm,
            self.det_inv_norm,
            self.weighted_flux,
            self.grad_phi_pw,
            self.min_det,
        ]


def apriori_report(y, phi, grid, eps, mat):
    """Scaling diagnostics: rigidity distances, growth norms, weighted flux."""
    F = fields.scaled_gradient(y, grid, eps)
    _, Minv, detM = _prestrain_cells(grid, eps, mat)
    arg = F @ Minv
    d = det3(F)
    dist2 = fields.integrate3(dist_SO3_sq(F), grid)
    dist2_pre = fields.integrate3(dist_SO3_sq(arg) * detM, grid)
    qw = mat.elastic.q_w
    grad_qw = fields.integrate3(np.sum(F * F, axis=(-2, -1)) ** (qw / 2.0), grid)
    darg = det3(arg)
    det_inv = fields.integrate3(np.where(darg > 0, darg, np.nan) ** (-qw / 2.0), grid) if np.min(darg) > 0 else np.inf
    # weighted flux and potential-gradient norm share the assembly quadratures
    quad, _ = electro3d._energy_parts(y, phi, grid, eps, mat)
    p_w = mat.elastic.conjugate_exponent()
    gp = fields.scaled_gradient(phi, grid, eps)
    gp_norm = fields.integrate3(np.sum(gp * gp, axis=-1) ** (p_w / 2.0), grid) ** (1.0 / p_w)
    return AprioriReport(
        eps=eps,
        dist2_so3=dist2,
        dist2_so3_prestrain=dist2_pre,
        grad_qw_norm=grad_qw,
        det_inv_norm=det_inv,
        weighted_flux=quad,
        grad_phi_pw=gp_norm,
        p_w=p_w,
        min_det=float(np.min(d)),
    )
