"""Constitutive models: elastic density, hyperstress, permittivity, charge, prestrain.

The elastic density combines a quartic Saint Venant-Kirchhoff term with a
convex determinant barrier,

    W(F) = mu/4 |F^T F - I|^2 + gamma_d * h(det F),
    h(d) = d^(-q_w/2) - 1 + (q_w/2) (d - 1)   for d > 0, else +inf,

so W >= 0, W = 0 exactly on rotations, and W blows up as det F -> 0+. The
weight gamma_d is tied to the second Lame parameter through h''(1) so that
the quadratic expansion at the identity is

    Q3(H) = 2 mu |sym H|^2 + lam (tr H)^2.

All matrix-valued functions accept leading batch axes.
"""

from dataclasses import dataclass, field

import numpy as np

from .smallmat import QuadForm3, cofactor3, det3, inv3, sym_part

__all__ = [
    "ElasticParams",
    "HyperParams",
    "PrestrainModel",
    "PermittivityModel",
    "ChargeModel",
    "CouplingConstants",
    "Material",
    "W_el",
    "dW_el",
    "Q3_form",
    "quadratic_expansion_check",
    "H_hyper",
    "dH_hyper",
    "kappa_pullback",
    "maxwell_stress",
    "maxwell_stress_moment",
]

_EYE3 = np.eye(3)


@dataclass(frozen=True)
class ElasticParams:
    """Quartic-plus-barrier elastic density parameters.

    mu > 0 is the shear modulus, lam >= 0 the second quadratic-expansion
    coefficient, q_w > 6 the barrier exponent. The barrier weight is derived:
    gamma_d = lam / h''(1) with h''(1) = (q_w/2)(q_w/2 + 1).
    """

    mu: float = 1.0
    lam: float = 1.0
    q_w: float = 26.0

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")
        if self.q_w <= 6.0:
            raise ValueError("q_w must exceed 6")

    @property
    def hpp1(self):
        return (self.q_w / 2.0) * (self.q_w / 2.0 + 1.0)

    @property
    def gamma_d(self):
        return self.lam / self.hpp1

    def h(self, d):
        q = self.q_w / 2.0
        return d ** (-q) - 1.0 + q * (d - 1.0)

    def hp(self, d):
        q = self.q_w / 2.0
        return -q * d ** (-q - 1.0) + q

    def conjugate_exponent(self):
        """Integrability exponent of the scaled potential gradient, 2 / (1 + 4/q_w)."""
        return 2.0 / (1.0 + 4.0 / self.q_w)


@dataclass(frozen=True)
class HyperParams:
    """Second-gradient penalty H(G) = eps^alpha_h * (c_h / q_h) |G|^q_h."""

    q_h: float = 4.0
    alpha_h: float = 10.5
    c_h: float = 1.0

    def __post_init__(self):
        if self.q_h <= 3.0:
            raise ValueError("q_h must exceed 3")
        if self.alpha_h <= 2.0 + 2.0 * self.q_h:
            raise ValueError("alpha_h must exceed 2 + 2 q_h")
        if self.c_h <= 0.0:
            raise ValueError("c_h must be positive")


def check_exponent_compatibility(elastic, hyper):
    """Joint growth condition linking the barrier and penalty exponents."""
    bound = 3.0 * hyper.q_h / (hyper.q_h - 3.0)
    if not elastic.q_w / 2.0 > bound:
        raise ValueError(
            f"q_w/2 = {elastic.q_w / 2.0} must exceed 3 q_h / (q_h - 3) = {bound}"
        )


@dataclass(frozen=True)
class PrestrainModel:
    """Affine-in-thickness prestrain B(x3) = B0 + x3 * B1 with symmetric parts."""

    B0: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    B1: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        for name in ("B0", "B1"):
            M = np.asarray(getattr(self, name), dtype=float).reshape(3, 3)
            if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
                raise ValueError(f"{name} must be symmetric")
            object.__setattr__(self, name, M)

    def B(self, t):
        t = np.asarray(t, dtype=float)
        return self.B0 + t[..., None, None] * self.B1

    def mean_inplane(self):
        """Thickness average of the 2x2 in-plane block (the B1 part integrates to zero)."""
        return self.B0[:2, :2].copy()


@dataclass(frozen=True)
class PermittivityModel:
    """Spatially constant symmetric positive definite permittivity tensor."""

    k: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 4.0]))

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float).reshape(3, 3)
        if np.max(np.abs(k - k.T)) > 1e-12 * max(1.0, np.max(np.abs(k))):
            raise ValueError("k must be symmetric")
        if np.min(np.linalg.eigvalsh(k)) <= 0.0:
            raise ValueError("k must be positive definite")
        object.__setattr__(self, "k", k)

    def kbar(self):
        """Thickness average; equals k for a constant tensor."""
        return self.k.copy()


@dataclass(frozen=True)
class ChargeModel:
    """Reference charge density, constant in the thickness variable.

    mode "constant": n(x) = amplitude. mode "cosine": n(x) = amplitude*cos(pi x1),
    which has zero total charge on the unit square.
    """

    mode: str = "cosine"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.mode not in ("constant", "cosine"):
            raise ValueError("charge mode must be 'constant' or 'cosine'")

    def n_ch(self, x1):
        x1 = np.asarray(x1, dtype=float)
        if self.mode == "constant":
            return np.full_like(x1, self.amplitude)
        return self.amplitude * np.cos(np.pi * x1)

    def nbar(self, x1):
        return self.n_ch(x1)


@dataclass(frozen=True)
class CouplingConstants:
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class Material:
    """Bundle of all constitutive pieces used by the energy evaluators."""

    elastic: ElasticParams = field(default_factory=ElasticParams)
    hyper: HyperParams = field(default_factory=HyperParams)
    prestrain: PrestrainModel = field(default_factory=PrestrainModel)
    permittivity: PermittivityModel = field(default_factory=PermittivityModel)
    charge: ChargeModel = field(default_factory=ChargeModel)
    coupling: CouplingConstants = field(default_factory=CouplingConstants)

    def __post_init__(self):
        check_exponent_compatibility(self.elastic, self.hyper)


# ---------------------------------------------------------------------------
# elastic density


def W_el(F, params):
    """Elastic energy density; +inf where det F <= 0. Batched."""
    F = np.asarray(F, dtype=float)
    C = np.swapaxes(F, -1, -2) @ F - _EYE3
    quart = 0.25 * params.mu * np.sum(C * C, axis=(-2, -1))
    d = det3(F)
    good = d > 0.0
    dsafe = np.where(good, d, 1.0)
    out = quart + params.gamma_d * params.h(dsafe)
    return np.where(good, out, np.inf)


def dW_el(F, params):
    """Derivative of W_el with respect to F. Requires det F > 0 everywhere."""
    F = np.asarray(F, dtype=float)
    d = det3(F)
    if np.any(d <= 0.0):
        raise ValueError("dW_el: det F must be positive")
    C = np.swapaxes(F, -1, -2) @ F - _EYE3
    return params.mu * (F @ C) + (params.gamma_d * params.hp(d))[..., None, None] * cofactor3(F)


def Q3_form(params):
    """Quadratic expansion of W_el at the identity, Q3(H) = 2 mu |sym H|^2 + lam (tr H)^2."""

    def q(H):
        S = sym_part(H)
        tr = np.trace(H)
        return 2.0 * params.mu * float(np.sum(S * S)) + params.lam * tr * tr

    return QuadForm3.from_evaluator(q)


def quadratic_expansion_check(params, n_samples=200, scales=(1e-2, 1e-3, 1e-4), rng=None):
    """Sampled sup of |W(I + F) - Q3(F)/2| / |F|^2 at several perturbation norms.

    Returns a dict mapping each norm to the observed sup; the values should
    decay roughly linearly with the norm.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    q3 = Q3_form(params)
    out = {}
    for s in scales:
        worst = 0.0
        for _ in range(n_samples):
            F = rng.standard_normal((3, 3))
            F *= s / np.linalg.norm(F)
            dev = abs(W_el(_EYE3 + F, params) - 0.5 * q3(F)) / (s * s)
            worst = max(worst, float(dev))
        out[s] = worst
    return out


# ---------------------------------------------------------------------------
# hyperstress


def H_hyper(G, eps, params):
    """Hyperstress density eps^alpha_h * (c_h/q_h) |G|^q_h for a third-order tensor field."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    G = np.asarray(G, dtype=float)
    nrm = np.sqrt(np.sum(G * G, axis=(-3, -2, -1)))
    return eps**params.alpha_h * (params.c_h / params.q_h) * nrm**params.q_h


def dH_hyper(G, eps, params):
    """Derivative of H_hyper with respect to G (zero-safe at G = 0 for q_h > 2)."""
    G = np.asarray(G, dtype=float)
    nrm = np.sqrt(np.sum(G * G, axis=(-3, -2, -1)))
    w = eps**params.alpha_h * params.c_h * np.where(nrm > 0.0, nrm, 1.0) ** (params.q_h - 2.0)
    w = np.where(nrm > 0.0, w, 0.0)
    return w[..., None, None, None] * G


# ---------------------------------------------------------------------------
# electrostatics


def kappa_pullback(F, k):
    """Pulled-back permittivity det(F) F^{-1} k F^{-T}. Requires det F > 0. Batched."""
    F = np.asarray(F, dtype=float)
    d = det3(F)
    if np.any(d <= 0.0):
        raise ValueError("kappa_pullback: det F must be positive")
    Fi = inv3(F)
    return d[..., None, None] * (Fi @ k @ np.swapaxes(Fi, -1, -2))


def maxwell_stress_moment(F, k, G2):
    """Electrostatic stress for a symmetric gradient second moment G2.

    Returns minus the derivative with respect to F of
    (1/2) tr(kappa_pullback(F, k) G2) at a frozen referential potential:
    with T = F^{-T} G2 F^{-1},

        T k Cof F - (1/2) tr(k T) Cof F.

    For a rank-one moment G2 = g (x) g this is the classical electrostatic
    stress contribution entering the deformation equation. Batched.
    """
    F = np.asarray(F, dtype=float)
    G2 = np.asarray(G2, dtype=float)
    k = np.asarray(k, dtype=float)
    Fi = inv3(F)
    Fit = np.swapaxes(Fi, -1, -2)
    T = Fit @ G2 @ Fi
    Cof = cofactor3(F)
    tr = np.einsum("ij,...ji->...", k, T)
    return T @ k @ Cof - 0.5 * tr[..., None, None] * Cof


def maxwell_stress(F, k, gradphi):
    """Electrostatic stress for a single referential potential gradient.

    Equals maxwell_stress_moment with G2 = gradphi (x) gradphi; vanishes for
    a zero gradient, and for F = I, k = I, gradphi = e3 it is
    diag(-1/2, -1/2, 1/2).
    """
    g = np.asarray(gradphi, dtype=float)
    G2 = g[..., :, None] * g[..., None, :]
    return maxwell_stress_moment(F, k, G2)
