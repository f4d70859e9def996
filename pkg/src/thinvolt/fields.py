"""Tensor-product grids on the unit-square plate and discrete field operators.

Conventions used throughout the package:

* 3D fields live on the closed plate (0,1)^2 x (-1/2, 1/2). Axis 0 is x1,
  axis 1 is x2, axis 2 is x3 (the thickness variable). Nodal scalar fields
  have shape (n1, n2, n3); nodal vector fields append a component axis.
* Cell quantities live at the (n1-1, n2-1, n3-1) cell centers.
* Serialization flattens nodes in C order, so x3 varies fastest, then x2,
  then x1. Vector components are separate columns.
* A "scaled" gradient or Hessian multiplies every x3 derivative by 1/eps.

The discrete gradient at a cell point is the gradient of the cell's
trilinear interpolant; second derivatives use nodal finite differences
(one-sided at the boundary) averaged to cell centers. Both are exact on
quadratic polynomials.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid3",
    "Grid2",
    "corner_gather3",
    "corner_scatter3",
    "shape_gradients3",
    "gauss_points3",
    "scaled_gradient",
    "gradient_scatter",
    "scaled_hessian",
    "hessian_scatter",
    "integrate3",
    "integrate2",
    "zero_mean_project",
    "node_mean",
    "corner_gather2",
    "corner_scatter2",
    "shape_gradients2",
    "gauss_points2",
    "gradient2",
    "gradient2_scatter",
    "save_field_csv",
    "load_field_csv",
]

_GAUSS_LO = 0.5 - 0.5 / np.sqrt(3.0)
_GAUSS_HI = 0.5 + 0.5 / np.sqrt(3.0)


def _axes_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass
class Grid3:
    """Uniform tensor-product grid on (0,1)^2 x (-1/2,1/2). At least 3 nodes per axis."""

    n1: int
    n2: int
    n3: int
    _ops: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if n < 3:
                raise ValueError("Grid3: need at least 3 nodes per axis")
        self.x1 = np.linspace(0.0, 1.0, self.n1)
        self.x2 = np.linspace(0.0, 1.0, self.n2)
        self.x3 = np.linspace(-0.5, 0.5, self.n3)
        self.h1 = 1.0 / (self.n1 - 1)
        self.h2 = 1.0 / (self.n2 - 1)
        self.h3 = 1.0 / (self.n3 - 1)
        self.c1 = 0.5 * (self.x1[:-1] + self.x1[1:])
        self.c2 = 0.5 * (self.x2[:-1] + self.x2[1:])
        self.c3 = 0.5 * (self.x3[:-1] + self.x3[1:])
        self.cell_volume = self.h1 * self.h2 * self.h3
        total = self.cell_volume * (self.n1 - 1) * (self.n2 - 1) * (self.n3 - 1)
        if abs(total - 1.0) > 1e-12:
            raise ValueError("Grid3: cell volumes do not sum to the domain volume")
        self.w1 = _axes_weights(self.n1, self.h1)
        self.w2 = _axes_weights(self.n2, self.h2)
        self.w3 = _axes_weights(self.n3, self.h3)

    @property
    def shape(self):
        return (self.n1, self.n2, self.n3)

    @property
    def cshape(self):
        return (self.n1 - 1, self.n2 - 1, self.n3 - 1)

    def axis_ops(self, axis):
        """Cached 1D difference/averaging matrices for this axis."""
        if axis not in self._ops:
            n = self.shape[axis]
            h = (self.h1, self.h2, self.h3)[axis]
            self._ops[axis] = _make_axis_ops(n, h)
        return self._ops[axis]


@dataclass
class Grid2:
    """Uniform grid on the unit square (0,1)^2. At least 3 nodes per axis."""

    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if n < 3:
                raise ValueError("Grid2: need at least 3 nodes per axis")
        self.x1 = np.linspace(0.0, 1.0, self.n1)
        self.x2 = np.linspace(0.0, 1.0, self.n2)
        self.h1 = 1.0 / (self.n1 - 1)
        self.h2 = 1.0 / (self.n2 - 1)
        self.c1 = 0.5 * (self.x1[:-1] + self.x1[1:])
        self.c2 = 0.5 * (self.x2[:-1] + self.x2[1:])
        self.cell_area = self.h1 * self.h2
        self.w1 = _axes_weights(self.n1, self.h1)
        self.w2 = _axes_weights(self.n2, self.h2)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def cshape(self):
        return (self.n1 - 1, self.n2 - 1)


def _make_axis_ops(n, h):
    D1 = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    D1[idx, idx - 1] = -0.5
    D1[idx, idx + 1] = 0.5
    D1[0, :3] = (-1.5, 2.0, -0.5)
    D1[-1, -3:] = (0.5, -2.0, 1.5)
    D1 /= h

    D2 = np.zeros((n, n))
    D2[idx, idx - 1] = 1.0
    D2[idx, idx] = -2.0
    D2[idx, idx + 1] = 1.0
    D2[0, :3] = (1.0, -2.0, 1.0)
    D2[-1, -3:] = (1.0, -2.0, 1.0)
    D2 /= h * h

    C = np.zeros((n - 1, n))
    j = np.arange(n - 1)
    C[j, j] = 0.5
    C[j, j + 1] = 0.5
    return {"D1": D1, "D2": D2, "C": C}


# ---------------------------------------------------------------------------
# corner gather / scatter (3D)

_CORNERS3 = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]


def corner_gather3(f, grid):
    """Stack the 8 corner values of every cell: (n1,n2,n3,*) -> (nc1,nc2,nc3,8,*)."""
    slabs = []
    for a, b, c in _CORNERS3:
        s1 = slice(a, grid.n1 - 1 + a)
        s2 = slice(b, grid.n2 - 1 + b)
        s3 = slice(c, grid.n3 - 1 + c)
        slabs.append(f[s1, s2, s3])
    return np.stack(slabs, axis=3)


def corner_scatter3(U, grid, out_trailing=()):
    """Adjoint of corner_gather3: add per-cell corner values into a nodal array."""
    out = np.zeros((grid.n1, grid.n2, grid.n3) + tuple(out_trailing))
    for k, (a, b, c) in enumerate(_CORNERS3):
        s1 = slice(a, grid.n1 - 1 + a)
        s2 = slice(b, grid.n2 - 1 + b)
        s3 = slice(c, grid.n3 - 1 + c)
        out[s1, s2, s3] += U[:, :, :, k]
    return out


def _lin(t, bit):
    return t if bit else 1.0 - t


def shape_gradients3(grid, eps, point=(0.5, 0.5, 0.5)):
    """Scaled trilinear shape-function gradients at a local cell point.

    Returns an (8, 3) array V with V[corner, j] = d N_corner / d x_j, the x3
    column multiplied by 1/eps. The corner order matches corner_gather3.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    xi, eta, zeta = point
    V = np.empty((8, 3))
    for k, (a, b, c) in enumerate(_CORNERS3):
        sa, sb, sc = 2 * a - 1, 2 * b - 1, 2 * c - 1
        V[k, 0] = sa / grid.h1 * _lin(eta, b) * _lin(zeta, c)
        V[k, 1] = _lin(xi, a) * sb / grid.h2 * _lin(zeta, c)
        V[k, 2] = _lin(xi, a) * _lin(eta, b) * sc / (grid.h3 * eps)
    return V


def gauss_points3():
    """The 8 tensor-product Gauss points of a cell in local coordinates."""
    g = (_GAUSS_LO, _GAUSS_HI)
    return [(x, y, z) for x in g for y in g for z in g]


def scaled_gradient(y, grid, eps, point=(0.5, 0.5, 0.5)):
    """Per-cell scaled gradient of a nodal field at a local cell point.

    For a vector field y of shape (n1,n2,n3,3) returns G of shape
    (nc1,nc2,nc3,3,3) with G[..., k, j] = d y_k / d x_j at the given local
    point (default: cell center), the j = x3 column scaled by 1/eps.
    A scalar field returns (nc1,nc2,nc3,3).
    """
    V = shape_gradients3(grid, eps, point)
    U = corner_gather3(np.asarray(y, dtype=float), grid)
    if U.ndim == 5:
        return np.einsum("...ak,aj->...kj", U, V)
    return np.einsum("...a,aj->...j", U, V)


def gradient_scatter(P, grid, eps, point=(0.5, 0.5, 0.5)):
    """Adjoint of scaled_gradient at the same local cell point.

    P has shape (nc1,nc2,nc3,3,3) (or (...,3) for scalar fields); the result
    is the nodal field ``dE/dy`` for E = sum_cells P : scaled_gradient(y).
    """
    V = shape_gradients3(grid, eps, point)
    if P.ndim == 5:
        U = np.einsum("...kj,aj->...ak", P, V)
        return corner_scatter3(U, grid, out_trailing=(3,))
    U = np.einsum("...j,aj->...a", P, V)
    return corner_scatter3(U, grid)


# ---------------------------------------------------------------------------
# scaled Hessian (second differences averaged to cells)


def _apply_axis(arr, M, axis):
    return np.moveaxis(np.tensordot(M, arr, axes=(1, axis)), 0, axis)


def _alpha(i, j, eps):
    if i == 2 and j == 2:
        return 1.0 / (eps * eps)
    if i == 2 or j == 2:
        return 1.0 / eps
    return 1.0


def _hessian_axis_matrices(grid, i, j):
    Ms = []
    for axis in range(3):
        ops = grid.axis_ops(axis)
        if axis == i and axis == j:
            Ms.append(ops["C"] @ ops["D2"])
        elif axis in (i, j):
            Ms.append(ops["C"] @ ops["D1"])
        else:
            Ms.append(ops["C"])
    return Ms


def scaled_hessian(y, grid, eps):
    """Cell-averaged scaled second derivatives of a nodal vector field.

    Returns H of shape (nc1,nc2,nc3,3,3,3) with
    H[..., i, j, k] = alpha_ij(eps) * d^2 y_k / dx_i dx_j, where alpha is
    1/eps^2 for i=j=3, 1/eps when exactly one index is 3, and 1 otherwise.
    Nodal second differences are central in the interior and one-sided at
    the boundary (exact on quadratics), then averaged over cell corners.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    y = np.asarray(y, dtype=float)
    H = np.empty(grid.cshape + (3, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            T = y
            for axis, M in enumerate(_hessian_axis_matrices(grid, i, j)):
                T = _apply_axis(T, M, axis)
            T = T * _alpha(i, j, eps)
            H[..., i, j, :] = T
            if i != j:
                H[..., j, i, :] = T
    return H


def hessian_scatter(W, grid, eps):
    """Adjoint of scaled_hessian: nodal dE/dy for E = sum_cells W : scaled_hessian(y)."""
    out = np.zeros((grid.n1, grid.n2, grid.n3, 3))
    for i in range(3):
        for j in range(3):
            ii, jj = min(i, j), max(i, j)
            T = W[..., i, j, :] * _alpha(i, j, eps)
            for axis, M in enumerate(_hessian_axis_matrices(grid, ii, jj)):
                T = _apply_axis(T, M.T, axis)
            out += T
    return out


# ---------------------------------------------------------------------------
# quadrature, means, gauge


def integrate3(cell_values, grid):
    """Midpoint-rule integral of a cellwise quantity over the plate."""
    return float(np.sum(cell_values) * grid.cell_volume)


def integrate2(cell_values, grid):
    """Midpoint-rule integral of a cellwise quantity over the unit square."""
    return float(np.sum(cell_values) * grid.cell_area)


def node_mean(f, grid):
    """Volume-weighted nodal mean (trapezoid rule), per trailing component."""
    f = np.asarray(f, dtype=float)
    if isinstance(grid, Grid3):
        return np.einsum("i,j,k,ijk...->...", grid.w1, grid.w2, grid.w3, f)
    return np.einsum("i,j,ij...->...", grid.w1, grid.w2, f)


def zero_mean_project(f, grid):
    """Subtract the volume-weighted mean from a nodal field (idempotent)."""
    return np.asarray(f, dtype=float) - node_mean(f, grid)


# ---------------------------------------------------------------------------
# 2D counterparts

_CORNERS2 = [(a, b) for a in (0, 1) for b in (0, 1)]


def corner_gather2(f, grid):
    slabs = []
    for a, b in _CORNERS2:
        slabs.append(f[a : grid.n1 - 1 + a, b : grid.n2 - 1 + b])
    return np.stack(slabs, axis=2)


def corner_scatter2(U, grid, out_trailing=()):
    out = np.zeros((grid.n1, grid.n2) + tuple(out_trailing))
    for k, (a, b) in enumerate(_CORNERS2):
        out[a : grid.n1 - 1 + a, b : grid.n2 - 1 + b] += U[:, :, k]
    return out


def shape_gradients2(grid, point=(0.5, 0.5)):
    """Bilinear shape-function gradients at a local cell point, (4, 2) array."""
    xi, eta = point
    V = np.empty((4, 2))
    for k, (a, b) in enumerate(_CORNERS2):
        V[k, 0] = (2 * a - 1) / grid.h1 * _lin(eta, b)
        V[k, 1] = _lin(xi, a) * (2 * b - 1) / grid.h2
    return V


def gauss_points2():
    g = (_GAUSS_LO, _GAUSS_HI)
    return [(x, y) for x in g for y in g]


def gradient2(f, grid):
    """Cell-centered gradient of a nodal scalar field on a Grid2, shape (nc1,nc2,2)."""
    V = shape_gradients2(grid)
    U = corner_gather2(np.asarray(f, dtype=float), grid)
    return np.einsum("...a,aj->...j", U, V)


def gradient2_scatter(P, grid):
    V = shape_gradients2(grid)
    U = np.einsum("...j,aj->...a", P, V)
    return corner_scatter2(U, grid)


# ---------------------------------------------------------------------------
# serialization


def save_field_csv(path, f, grid):
    """Write a nodal field as CSV, one node per row, x3 fastest, then x2, then x1.

    Vector fields get one column per component. Full double precision.
    """
    f = np.asarray(f, dtype=float)
    ncomp = 1 if f.ndim == len(grid.shape) else f.shape[-1]
    flat = f.reshape(-1, ncomp)
    header = ",".join(f"c{k}" for k in range(ncomp))
    np.savetxt(path, flat, delimiter=",", header=header, comments="", fmt="%.17g")


def load_field_csv(path, grid, ncomp=1):
    flat = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if ncomp == 1:
        return flat.reshape(grid.shape)
    return flat.reshape(grid.shape + (ncomp,))
