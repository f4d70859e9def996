"""Recovery constructions: lift a 2D bending state to a 3D trial pair.

Given a cylindrical midsurface, a prestrain model and an in-plane vector
potential, the module assembles the thickness corrector that makes the
quadratic elastic energy of the lifted deformation reproduce the relaxed
bending density, lifts the reduced potential with its optimal out-of-plane
slope, and measures convergence of the scaled 3D energies toward the 2D
targets along a decreasing thickness sweep.
"""

from dataclasses import dataclass, field

import numpy as np

from . import bending2d, elastic3d, electro3d, fields
from .bending2d import CylindricalIsometry
from .material import Q3_form
from .relaxation import RelaxedQ2, effective_permittivity, m_out_of_plane

__all__ = [
    "RecoveryInputs",
    "optimal_corrector",
    "lift_deformation",
    "lift_potential",
    "out_of_plane_profile",
    "mollify_field",
    "mollifier_objective",
    "recovery_sweep",
    "SweepRow",
    "SWEEP_COLUMNS",
]


@dataclass
class RecoveryInputs:
    """Bundle of lift ingredients with the compatibility tie between g and B.

    g is the linear in-plane field g(x') = g_matrix x'; its symmetric gradient
    must equal the thickness-averaged in-plane prestrain block, which pins
    the mean block of B0 to sym(g_matrix).
    """

    isometry: CylindricalIsometry
    prestrain: object
    g_matrix: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        S = np.asarray(self.g_matrix, dtype=float).reshape(2, 2)
        self.g_matrix = S
        gap = 0.5 * (S + S.T) - self.prestrain.mean_inplane()
        if np.max(np.abs(gap)) > 1e-10:
            raise ValueError("sym(g_matrix) must equal the averaged in-plane prestrain block")

    def g_values(self, grid):
        """Nodal samples of g on the (x1, x2) nodes, shape (n1, n2, 2)."""
        X1 = grid.x1[:, None]
        X2 = grid.x2[None, :]
        S = self.g_matrix
        g = np.zeros((grid.n1, grid.n2, 2))
        g[..., 0] = S[0, 0] * X1 + S[0, 1] * X2
        g[..., 1] = S[1, 0] * X1 + S[1, 1] * X2
        return g


def _relaxed_form(mat):
    return RelaxedQ2(Q3_form(mat.elastic), mat.prestrain)


def optimal_corrector(inputs, grid, rq):
    """Thickness corrector profile on the 3D nodes, shape (n1, n2, n3, 3).

    Pointwise it rotates into the bending frame the stationary out-of-plane
    column of the relaxed quadratic form at the in-plane strain
    X = t curvature + sym(grad g) - B_2x2(t), corrects for the curvature of
    the g-transport along the midsurface, and adds the out-of-plane prestrain
    column. The lifted deformation built from it reproduces the relaxed
    bending density in the small-thickness quadratic regime.
    """
    y0 = inputs.isometry
    theta = y0.theta
    kap = y0.curvature_nodes()  # (n1,)
    t = grid.x3  # (n3,)
    B = inputs.prestrain.B(t)  # (n3, 3, 3)

    # in-plane strain; (n1, n3, 2, 2)
    X = np.zeros((grid.n1, grid.n3, 2, 2))
    X[..., 0, 0] = kap[:, None] * t[None, :]
    S = inputs.g_matrix
    X += (0.5 * (S + S.T))[None, None]
    X -= B[None, :, :2, :2]
    z = rq.minimizer_z(X)  # (n1, n3, 3)

    # transport curvature term ((grad'(grad'y g))^T nu, 0) = (-g1 theta', 0, 0)
    g1 = inputs.g_values(grid)[..., 0]  # (n1, n2)
    inner = np.zeros((grid.n1, grid.n2, grid.n3, 3))
    inner += z[:, None, :, :]
    inner[..., 0] += g1[:, :, None] * kap[:, None, None]
    inner[..., 0] += 2.0 * B[None, None, :, 0, 2]
    inner[..., 1] += 2.0 * B[None, None, :, 1, 2]
    inner[..., 2] += B[None, None, :, 2, 2]
    R = CylindricalIsometry.frame_of(theta)  # (n1, 3, 3)
    return np.einsum("ikl,ijnl->ijnk", R, inner)


def _cumulative_from_zero(d, grid):
    """Trapezoid primitive of d along x3 with basepoint x3 = 0.

    When 0 is not a node the basepoint value is linearly interpolated
    between the straddling nodes.
    """
    h = grid.h3
    avg = 0.5 * (d[:, :, 1:] + d[:, :, :-1]) * h
    C = np.concatenate([np.zeros_like(d[:, :, :1]), np.cumsum(avg, axis=2)], axis=2)
    x3 = grid.x3
    i = int(np.searchsorted(x3, 0.0, side="right") - 1)
    i = min(max(i, 0), grid.n3 - 2)
    w = (0.0 - x3[i]) / h
    C0 = (1.0 - w) * C[:, :, i] + w * C[:, :, i + 1]
    return C - C0[:, :, None]


def lift_deformation(y0, eps, grid, g_matrix=None, d=None):
    """Thickness lift y0 + eps (x3 nu + grad'y g) + eps^2 int_0^{x3} d.

    d is a nodal (n1,n2,n3,3) corrector profile (omitted: zero). Returns a
    zero-mean nodal deformation on the 3D grid.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if grid.n1 != y0.grid.n1 or grid.n2 != y0.grid.n2:
        raise ValueError("3D grid must share the in-plane nodes of the midsurface grid")
    ymid = y0.deformation_nodes()  # (n1, n2, 3)
    nu = CylindricalIsometry.normal_of(y0.theta)  # (n1, 3)
    tang = CylindricalIsometry.tangent_of(y0.theta)
    y = np.zeros(grid.shape + (3,))
    y += ymid[:, :, None, :]
    y += eps * grid.x3[None, None, :, None] * nu[:, None, None, :]
    if g_matrix is not None and np.any(np.asarray(g_matrix) != 0.0):
        S = np.asarray(g_matrix, dtype=float).reshape(2, 2)
        g1 = S[0, 0] * grid.x1[:, None] + S[0, 1] * grid.x2[None, :]
        g2 = S[1, 0] * grid.x1[:, None] + S[1, 1] * grid.x2[None, :]
        trans = g1[..., None] * tang[:, None, :] + g2[..., None] * np.array([0.0, 1.0, 0.0])
        y += eps * trans[:, :, None, :]
    if d is not None:
        y += eps * eps * _cumulative_from_zero(np.asarray(d, dtype=float), grid)
    return fields.zero_mean_project(y, grid)


def out_of_plane_profile(y0, phi0, mat):
    """Optimal out-of-plane potential slope m(x') on the midsurface nodes.

    Uses nodal central differences for grad'phi0 (one-sided at the edges)
    and the bending-frame reduced permittivity blocks at the nodal angles.
    """
    grid = y0.grid
    d1 = fields._make_axis_ops(grid.n1, grid.h1)["D1"]
    d2 = fields._make_axis_ops(grid.n2, grid.h2)["D1"]
    phi0 = np.asarray(phi0, dtype=float)
    grad = np.stack([d1 @ phi0, phi0 @ d2.T], axis=-1)  # (n1, n2, 2)
    R = CylindricalIsometry.frame_of(y0.theta)
    (_, kv, kz), _ = effective_permittivity(mat.permittivity.kbar(), R)
    return m_out_of_plane((kv[:, None, :], kz[:, None]), grad)


def lift_potential(phi0, m, eps, grid):
    """Thickness lift phi0(x') + eps m(x') x3 on the 3D nodes, zero-mean gauged."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    phi0 = np.asarray(phi0, dtype=float)
    m = np.asarray(m, dtype=float)
    phi = phi0[:, :, None] + eps * m[:, :, None] * grid.x3[None, None, :]
    return fields.zero_mean_project(phi, grid)


def mollifier_objective(v, d, grid, eps, tau, q_h):
    """Smoothing objective: derivative penalties plus L2 fidelity to d."""
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    G = fields.scaled_gradient(v, grid, 1.0)
    H = fields.scaled_hessian(v, grid, 1.0)
    gn = np.sum(G * G, axis=(-2, -1)) ** (q_h / 2.0)
    hn = np.sum(H * H, axis=(-3, -2, -1)) ** (q_h / 2.0)
    pen = (eps**tau / q_h) * fields.integrate3(gn + hn, grid)
    wn = np.einsum("i,j,k->ijk", grid.w1, grid.w2, grid.w3)
    fid = 0.5 * float(np.sum(wn[..., None] * (v - d) ** 2))
    return pen + fid


def _mollifier_gradient(v, d, grid, eps, tau, q_h):
    v = np.asarray(v, dtype=float)
    vol = grid.cell_volume
    G = fields.scaled_gradient(v, grid, 1.0)
    gn2 = np.sum(G * G, axis=(-2, -1))
    wG = np.where(gn2 > 0, gn2, 1.0) ** (q_h / 2.0 - 1.0) * (gn2 > 0)
    out = fields.gradient_scatter(eps**tau * vol * wG[..., None, None] * G, grid, 1.0)
    H = fields.scaled_hessian(v, grid, 1.0)
    hn2 = np.sum(H * H, axis=(-3, -2, -1))
    wH = np.where(hn2 > 0, hn2, 1.0) ** (q_h / 2.0 - 1.0) * (hn2 > 0)
    out += fields.hessian_scatter(eps**tau * vol * wH[..., None, None, None] * H, grid, 1.0)
    wn = np.einsum("i,j,k->ijk", grid.w1, grid.w2, grid.w3)
    out += wn[..., None] * (v - d)
    return out


def mollify_field(d, grid, eps, tau=None, q_h=4.0, iters=500, grad_tol=1e-8):
    """Minimize the smoothing objective by descent from the raw field.

    Returns (smoothed field, info dict). The penalty exponent tau defaults
    to q_h / 2; it must stay inside (0, q_h) for the fidelity term to win
    in the small-eps limit.
    """
    if tau is None:
        tau = 0.5 * q_h
    if not 0.0 < tau < q_h:
        raise ValueError("tau must lie in (0, q_h)")
    d = np.asarray(d, dtype=float)
    if d.ndim != 4 or d.shape[-1] != 3:
        raise ValueError("mollify_field expects a nodal (n1,n2,n3,3) field")
    v = d.copy()
    obj = mollifier_objective(v, d, grid, eps, tau, q_h)
    step = 1.0
    gnorm = np.inf
    it = 0
    for it in range(1, iters + 1):
        g = _mollifier_gradient(v, d, grid, eps, tau, q_h)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            break
        step = min(4.0 * step, 1e6)
        accepted = False
        for _ in range(80):
            cand = v - step * g
            cobj = mollifier_objective(cand, d, grid, eps, tau, q_h)
            if cobj <= obj - 1e-4 * step * gnorm * gnorm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        v = cand
        obj = cobj
    wn = np.einsum("i,j,k->ijk", grid.w1, grid.w2, grid.w3)
    l2 = float(np.sqrt(np.sum(wn[..., None] * (v - d) ** 2)))
    H = fields.scaled_hessian(v, grid, 1.0)
    semi = fields.integrate3(np.sum(H * H, axis=(-3, -2, -1)) ** (q_h / 2.0), grid) ** (1.0 / q_h)
    info = {
        "iters": it,
        "grad_norm": gnorm,
        "objective": obj,
        "l2_gap": l2,
        "seminorm_scaled": eps ** (1.0 - tau / q_h) * semi,
    }
    return v, info


SWEEP_COLUMNS = [
    "eps",
    "Mel_scaled",
    "hyper",
    "M_eps",
    "E_eps",
    "F_eps",
    "M0",
    "E0",
    "F0",
    "d2_ratio",
    "pW_norm",
    "min_det",
    "pg0_res",
]


@dataclass
class SweepRow:
    eps: float
    Mel_scaled: float = np.nan
    hyper: float = np.nan
    M_eps: float = np.nan
    E_eps: float = np.nan
    F_eps: float = np.nan
    M0: float = np.nan
    E0: float = np.nan
    F0: float = np.nan
    d2_ratio: float = np.nan
    pW_norm: float = np.nan
    min_det: float = np.nan
    pg0_res: float = np.nan
    ok: bool = False

    def values(self):
        return [getattr(self, name) for name in SWEEP_COLUMNS]


def recovery_sweep(inputs, mat, grid, eps_list, use_mollifier=False, solver_tol=1e-9, rq=None):
    """Evaluate the lifted trial pair along a decreasing thickness sweep.

    For each eps: build the corrector (optionally smoothed), lift the
    deformation, solve the 3D potential on it, and record scaled energies
    next to the 2D targets. A row whose deformation loses orientation is
    kept with NaN entries and ok = False; the sweep continues.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    if rq is None:
        rq = _relaxed_form(mat)
    y0 = inputs.isometry
    grid2 = y0.grid
    dbar = optimal_corrector(inputs, grid, rq)
    m0 = bending2d.M0(y0, rq)
    phi0 = bending2d.solve_potential2(y0, mat, tol=solver_tol)
    e0 = bending2d.E0(y0, phi0, mat)
    rows = []
    for eps in eps_list:
        row = SweepRow(eps=eps)
        rows.append(row)
        d = dbar
        if use_mollifier:
            d, _ = mollify_field(dbar, grid, eps, q_h=mat.hyper.q_h)
        try:
            y = lift_deformation(y0, eps, grid, inputs.g_matrix, d)
            mel, hyp = elastic3d.M_eps_parts(y, grid, eps, mat)
            if not np.isfinite(mel):
                raise ValueError("lifted deformation loses orientation")
            system = electro3d.assemble_poisson3(y, grid, eps, mat)
            phi = electro3d.solve_potential3(system, tol=solver_tol)
        except (ValueError, electro3d.SolverError):
            continue
        report = elastic3d.apriori_report(y, phi, grid, eps, mat)
        row.Mel_scaled = mel
        row.hyper = hyp
        row.M_eps = mel + hyp
        row.E_eps = electro3d.E_eps(y, phi, grid, eps, mat)
        row.F_eps = row.M_eps - row.E_eps
        row.M0 = m0
        row.E0 = e0
        row.F0 = m0 - e0
        row.d2_ratio = report.dist2_so3 / (eps * eps)
        row.pW_norm = report.grad_phi_pw
        row.min_det = report.min_det
        row.pg0_res = electro3d.check_pg0(y, phi, grid, eps, mat)
        row.ok = True
    return rows
