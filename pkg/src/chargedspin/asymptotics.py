"""ADM energy-momentum, total charge, radius extrapolation, and the Witten
boundary form.

The surface integrals use the Euclidean ("barred") normal and measure of the
coordinate sphere throughout:

    E_adm = (1/(2(n-1) w)) lim int sum_{ij} (g_{ij,i} - g_{ii,j}) nubar^j
    P_i   = (1/((n-1) w))  lim int sum_j (K_{ij} - Tr(K) g_{ij}) nubar^j
    Q     = (1/w)          lim int E^j nubar_j

with ``w = omega_{n-1}`` the area of the unit round sphere. Limits are
realized by a least-squares fit ``v(r) = v_inf + c r^{-p}`` over a radius
ladder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .chargedata import ChargedInitialData
from .cliffalg import CliffordRep, momentum_charge_operator
from .errors import ExtrapolationError, QuadratureError
from .grids import grad_all_axes, interpolate_to_points
from .spheres import (SphereQuadrature, SurfaceSphere, sphere_quadrature,
                      unit_sphere_area)

__all__ = [
    "SphereQuadrature", "SurfaceSphere", "sphere_quadrature",
    "unit_sphere_area", "AdmReport", "adm_energy_momentum", "total_charge",
    "richardson_extrapolate", "witten_boundary_form",
    "witten_boundary_integral", "default_radii",
]


def default_radii(grid, count: int = 6, ratio: float = 1.25,
                  margin_cells: int = 3):
    """Geometric radius ladder ``r_k = r_max ratio^{k - count + 1}`` fitting
    inside the grid with a stencil margin."""
    half = min((s - 1) * grid.spacing / 2.0 for s in grid.shape)
    r_max = half - margin_cells * grid.spacing
    if r_max <= 0:
        raise QuadratureError("grid too small for any sphere")
    return [r_max * ratio ** (k - count + 1) for k in range(count)]


@dataclass
class ExtrapolationResult:
    limit: float
    exponent: float
    residual: float
    degenerate: bool = False


def richardson_extrapolate(radii, values, terms: int = 1) -> ExtrapolationResult:
    """Fit ``v(r) = v_inf + c r^{-p}`` by least squares over the radii.

    For fixed p the problem is linear; p itself is optimized by a bounded
    scalar search. With ``terms=2`` the model gains a second term
    ``c2 r^{-2p}``, which absorbs the series curvature of slowly decaying
    integrands (the ADM ladders use this). A (numerically) constant sequence
    has no identifiable p and is returned with the degenerate flag set and
    ``p = inf``.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.shape != values.shape:
        raise ExtrapolationError("radii and values must be equal-length 1d")
    if len(radii) < 3:
        raise ExtrapolationError("need at least 3 radii to extrapolate")
    if np.any(np.diff(radii) <= 0):
        raise ExtrapolationError("radii must be strictly increasing")

    scale = max(np.max(np.abs(values)), 1e-300)
    if np.ptp(values) <= 1e-13 * scale:
        return ExtrapolationResult(limit=float(np.mean(values)),
                                   exponent=np.inf, residual=0.0,
                                   degenerate=True)

    if terms < 1 or len(radii) < terms + 2:
        raise ExtrapolationError("too few radii for the requested model")

    def solve_for(p):
        cols = [np.ones_like(radii)]
        cols += [radii ** (-(k + 1) * p) for k in range(terms)]
        A = np.stack(cols, axis=1)
        coef, res, _, _ = np.linalg.lstsq(A, values, rcond=None)
        r = float(np.sqrt(np.sum((A @ coef - values) ** 2)))
        return coef, r

    opt = minimize_scalar(lambda p: solve_for(p)[1], bounds=(0.1, 2.0 * len(radii)),
                          method="bounded", options={"xatol": 1e-8})
    p = float(opt.x)
    coef, resid = solve_for(p)
    return ExtrapolationResult(limit=float(coef[0]), exponent=p,
                               residual=resid, degenerate=False)


@dataclass
class AdmReport:
    n: int
    radii: list
    energy_at_r: list
    momentum_at_r: list          # list of length-n arrays
    charge_at_r: list
    energy: float = 0.0
    momentum: np.ndarray = field(default_factory=lambda: np.zeros(0))
    charge: float = 0.0
    energy_fit: ExtrapolationResult | None = None
    momentum_fits: list | None = None
    charge_fit: ExtrapolationResult | None = None

    @property
    def momentum_norm(self) -> float:
        return float(np.linalg.norm(self.momentum))

    @property
    def mass(self) -> float:
        """ADM mass ``sqrt(E^2 - |P|^2)``; nan when the vector is spacelike."""
        s = self.energy ** 2 - self.momentum_norm ** 2
        return float(np.sqrt(s)) if s >= 0 else float("nan")

    @property
    def energy_margin(self) -> float:
        """``E - sqrt(|P|^2 + Q^2)``, the quantity the main theorem bounds."""
        return float(self.energy
                     - np.sqrt(self.momentum_norm ** 2 + self.charge ** 2))

    @property
    def mass_charge_margin(self) -> float:
        return float(self.mass - abs(self.charge))

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "radii": [float(r) for r in self.radii],
            "energy_at_r": [float(v) for v in self.energy_at_r],
            "momentum_at_r": [[float(c) for c in v] for v in self.momentum_at_r],
            "charge_at_r": [float(v) for v in self.charge_at_r],
            "energy": self.energy,
            "momentum": [float(c) for c in self.momentum],
            "momentum_norm": self.momentum_norm,
            "charge": self.charge,
            "mass": self.mass,
            "energy_margin": self.energy_margin,
            "mass_charge_margin": self.mass_charge_margin,
            "energy_fit": _fit_dict(self.energy_fit),
            "charge_fit": _fit_dict(self.charge_fit),
        }


def _fit_dict(fit):
    if fit is None:
        return None
    return {"limit": fit.limit, "exponent": float(fit.exponent),
            "residual": fit.residual, "degenerate": fit.degenerate}


def _sphere_set(data: ChargedInitialData, radii, resolution, center):
    if center is None:
        center = tuple(data.grid.origin[i]
                       + (data.grid.shape[i] - 1) * data.grid.spacing / 2.0
                       for i in range(data.grid.n))
    return [sphere_quadrature(data.grid.n, r, resolution, center=center)
            for r in radii]


def adm_energy_momentum(data: ChargedInitialData, radii=None,
                        resolution: int = 24, center=None) -> AdmReport:
    """Per-radius and extrapolated ADM energy and linear momentum."""
    grid = data.grid
    n = grid.n
    if radii is None:
        radii = default_radii(grid)
    radii = sorted(float(r) for r in radii)
    quads = _sphere_set(data, radii, resolution, center)
    w = unit_sphere_area(n)

    dg = grad_all_axes(grid, data.g)       # (*shape, i, j, k) = d_k g_ij
    trK = np.einsum("...ij,...ij->...", np.linalg.inv(data.g), data.K)
    PK = data.K - trK[..., None, None] * data.g

    e_vals, p_vals, q_vals = [], [], []
    for quad in quads:
        dg_b = interpolate_to_points(grid, dg, quad.nodes)
        nu = quad.normals
        integ = (np.einsum("piji,pj->p", dg_b, nu)
                 - np.einsum("piij,pj->p", dg_b, nu))
        e_vals.append(float(np.sum(integ * quad.weights))
                      / (2.0 * (n - 1) * w))
        PK_b = interpolate_to_points(grid, PK, quad.nodes)
        p_int = np.einsum("pij,pj->pi", PK_b, nu)
        p_vals.append(np.einsum("pi,p->i", p_int, quad.weights) / ((n - 1) * w))
        E_b = interpolate_to_points(grid, data.E, quad.nodes)
        q_vals.append(float(np.sum(np.einsum("pj,pj->p", E_b, nu)
                                   * quad.weights)) / w)

    terms = min(3, max(1, len(radii) - 3))
    e_fit = richardson_extrapolate(radii, e_vals, terms=terms)
    p_fits = [richardson_extrapolate(radii, [p[i] for p in p_vals],
                                     terms=terms)
              for i in range(n)]
    q_fit = richardson_extrapolate(radii, q_vals, terms=terms)
    return AdmReport(n=n, radii=list(radii), energy_at_r=e_vals,
                     momentum_at_r=p_vals, charge_at_r=q_vals,
                     energy=e_fit.limit,
                     momentum=np.array([f.limit for f in p_fits]),
                     charge=q_fit.limit, energy_fit=e_fit,
                     momentum_fits=p_fits, charge_fit=q_fit)


def total_charge(data: ChargedInitialData, radii=None, resolution: int = 24,
                 center=None):
    """Per-radius flux charge and its extrapolated limit."""
    grid = data.grid
    if radii is None:
        radii = default_radii(grid)
    radii = sorted(float(r) for r in radii)
    quads = _sphere_set(data, radii, resolution, center)
    w = unit_sphere_area(grid.n)
    vals = []
    for quad in quads:
        E_b = interpolate_to_points(grid, data.E, quad.nodes)
        vals.append(float(np.sum(np.einsum("pj,pj->p", E_b, quad.normals)
                                 * quad.weights)) / w)
    fit = richardson_extrapolate(radii, vals,
                                 terms=min(3, max(1, len(radii) - 3)))
    return vals, fit


def witten_boundary_form(rep: CliffordRep, E_adm: float, P_adm, Q: float):
    """Hermitian fiber form whose minimum is ``E - sqrt(|P|^2 + Q^2)``.

    Returns ``(form, min_eigenvalue, psi0)`` where ``form = E Id + M`` with
    ``M = sum_j P_j gamma_j chi + Q chi`` (Hermitian, ``M^2 = (|P|^2+Q^2) Id``)
    and ``psi0`` a unit eigenvector of the minimum eigenvalue, the natural
    asymptotic constant spinor for the Witten solve.
    """
    P_adm = np.asarray(P_adm, dtype=float)
    M = momentum_charge_operator(rep, P_adm, float(Q))
    form = float(E_adm) * np.eye(rep.N) + M
    evals, evecs = np.linalg.eigh(form)
    return form, float(evals[0]), evecs[:, 0].astype(complex)


def witten_boundary_integral(calc, sphere: SurfaceSphere, psi) -> float:
    """``int <Lbar_nu psi, psi> dsigma_r`` over a coordinate sphere."""
    from .spinops import flux_integral, make_sphere_geometry
    sgeom = make_sphere_geometry(calc, sphere)
    return flux_integral(calc, sgeom, psi)
