"""Charged initial data sets (g, K, E): generators, densities, energy
conditions, constraint residuals, and null expansions of coordinate spheres.

Density conventions:
    2 mu   = R - |K|^2 + Tr(K)^2 - (n-1)(n-2) |E|^2
    J      = div(K) - grad Tr(K)            (a vector field; |J| uses g)
    varpi  = (n-1) div(E)
and the dominant energy condition is ``mu >= sqrt(|J|^2 + varpi^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import geom
from .errors import GeometryError, ShapeError
from .grids import Excision, Field, Grid, central_diff, grad_all_axes, shrink_mask
from .spheres import SurfaceSphere, sphere_geometry


@dataclass(frozen=True)
class ChargedInitialData:
    """Fields (g, K, E) sampled on a grid, with provenance metadata."""

    grid: Grid
    g: np.ndarray   # (*shape, n, n)
    K: np.ndarray   # (*shape, n, n)
    E: np.ndarray   # (*shape, n) contravariant components
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        n = self.grid.n
        if self.g.shape != self.grid.shape + (n, n):
            raise ShapeError("metric shape does not match grid")
        if self.K.shape != self.grid.shape + (n, n):
            raise ShapeError("extrinsic curvature shape does not match grid")
        if self.E.shape != self.grid.shape + (n,):
            raise ShapeError("electric field shape does not match grid")
        m = self.mask
        for name, arr in (("g", self.g), ("K", self.K), ("E", self.E)):
            if not np.all(np.isfinite(arr[m])):
                raise GeometryError(f"non-finite entries in {name} at live points")
        geom.validate_metric(self.grid, self.g, m)

    @property
    def mask(self) -> np.ndarray:
        return self.grid.live_mask()

    def geometry(self) -> geom.FrameGeometry:
        return geom.frame_geometry(self.grid, self.g, self.mask)


@dataclass(frozen=True)
class DensityFields:
    mu: Field
    J: Field          # vector components
    varpi: Field
    dec_margin: Field


@dataclass
class DecReport:
    min_margin: float
    tol: float
    n_violations: int
    violating_points: list
    asserted: bool
    time_symmetric: dict | None = None


# ---------------------------------------------------------------------------
# generators

def generate_flat(grid: Grid) -> ChargedInitialData:
    n = grid.n
    g = np.zeros(grid.shape + (n, n))
    g[...] = np.eye(n)
    K = np.zeros(grid.shape + (n, n))
    E = np.zeros(grid.shape + (n,))
    return ChargedInitialData(grid, g, K, E,
                              metadata={"generator": "flat", "params": {}})


def mp_potential(points: np.ndarray, centers, masses, n: int,
                 clip: float = 1e-6):
    """Harmonic potential ``U = 1 + sum_j m_j / |x - x_j|^(n-2)`` and its
    Euclidean gradient. Distances are clipped away from the centers; callers
    mask those points."""
    U = np.ones(points.shape[:-1])
    dU = np.zeros_like(points)
    for c, m in zip(centers, masses):
        d = points - np.asarray(c)
        r = np.maximum(np.sqrt(np.sum(d ** 2, axis=-1)), clip)
        U += m / r ** (n - 2)
        dU += (-(n - 2) * m / r ** n)[..., None] * d
    return U, dU


def generate_majumdar_papapetrou(grid: Grid, centers, masses,
                                 excision_radii=None) -> ChargedInitialData:
    """Time-symmetric multi-center electrovacuum data.

    ``g = U^{2/(n-2)} delta``, ``K = 0`` and ``E`` the gradient-type field
    whose normalization and sign are fixed by the Gauss and Hamiltonian
    constraints together with ``Q > 0`` for positive masses:
    ``E^i = -(1/(n-2)) U^{-2/(n-2)} d_i U / U``.
    """
    n = grid.n
    centers = [tuple(float(v) for v in c) for c in centers]
    masses = [float(m) for m in masses]
    if len(centers) != len(masses):
        raise ValueError("need one mass per center")
    if any(m <= 0 for m in masses):
        raise ValueError("masses must be positive")
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if np.allclose(centers[i], centers[j]):
                raise GeometryError("coincident centers")
    if excision_radii is None:
        excision_radii = [0.5 * m ** (1.0 / (n - 2)) for m in masses]
    excs = tuple(Excision(c, r) for c, r in zip(centers, excision_radii))
    grid = Grid(grid.origin, grid.spacing, grid.shape, grid.excisions + excs)

    pts = grid.points()
    U, dU = mp_potential(pts, centers, masses, n)
    conf = U ** (2.0 / (n - 2))
    g = conf[..., None, None] * np.eye(n)
    E = -(1.0 / (n - 2)) * (1.0 / (conf * U))[..., None] * dU
    K = np.zeros_like(g)

    mask = grid.live_mask()
    g[~mask] = np.eye(n)
    E[~mask] = 0.0
    meta = {"generator": "majumdar_papapetrou",
            "params": {"centers": centers, "masses": masses,
                       "excision_radii": [float(r) for r in excision_radii]},
            "e_sign": "Q>0 for positive masses (E = -grad(log U)/(n-2), raised)"}
    return ChargedInitialData(grid, g, K, E, metadata=meta)


def schwarzschild_minimal_radius(n: int, mass: float) -> float:
    return (mass / 2.0) ** (1.0 / (n - 2))


def generate_schwarzschild_slice(grid: Grid, mass: float,
                                 excision_radius: float | None = None
                                 ) -> ChargedInitialData:
    """Vacuum conformally flat slice ``g = (1 + m/(2 r^{n-2}))^{4/(n-2)} delta``."""
    n = grid.n
    if mass <= 0:
        raise ValueError("mass must be positive")
    r_min = schwarzschild_minimal_radius(n, mass)
    if excision_radius is None:
        excision_radius = 0.6 * r_min
    if excision_radius >= r_min:
        raise GeometryError(
            f"excision radius {excision_radius} not inside the minimal sphere "
            f"(r={r_min})")
    exc = Excision(tuple([0.0] * n), excision_radius)
    grid = Grid(grid.origin, grid.spacing, grid.shape, grid.excisions + (exc,))
    r = np.maximum(grid.radii(), 1e-6)
    u = 1.0 + mass / (2.0 * r ** (n - 2))
    g = (u ** (4.0 / (n - 2)))[..., None, None] * np.eye(n)
    mask = grid.live_mask()
    g[~mask] = np.eye(n)
    meta = {"generator": "schwarzschild_slice",
            "params": {"mass": mass, "excision_radius": float(excision_radius),
                       "minimal_radius": r_min}}
    return ChargedInitialData(grid, g, np.zeros_like(g),
                              np.zeros(grid.shape + (n,)), metadata=meta)


# ---------------------------------------------------------------------------
# densities and constraints

def _kinematic_scalars(data: ChargedInitialData, geo: geom.FrameGeometry):
    """|K|^2, Tr(K), |E|^2 with the metric g."""
    Ksq = np.einsum("...ik,...jl,...ij,...kl->...",
                    geo.ginv, geo.ginv, data.K, data.K)
    trK = np.einsum("...ij,...ij->...", geo.ginv, data.K)
    Esq = np.einsum("...ij,...i,...j->...", geo.g, data.E, data.E)
    return Ksq, trK, Esq


def compute_densities(data: ChargedInitialData,
                      geo: geom.FrameGeometry | None = None) -> DensityFields:
    if geo is None:
        geo = data.geometry()
    grid, n = data.grid, data.grid.n
    gamma = Field(geo.Gamma, geo.mask1)

    R = geom.scalar_curvature(grid, data.g, geo.mask0, gamma=gamma, ginv=geo.ginv)
    Ksq, trK, Esq = _kinematic_scalars(data, geo)
    mu = 0.5 * (R.values - Ksq + trK ** 2 - (n - 1) * (n - 2) * Esq)

    divK = geom.divergence_symtensor(grid, data.g, data.K, geo.mask0,
                                     gamma=gamma, ginv=geo.ginv)
    dtrK = grad_all_axes(grid, trK)
    gradtrK = np.einsum("...ij,...j->...i", geo.ginv, dtrK)
    J = divK.values - gradtrK

    varpi = geom.divergence_vector(grid, data.g, data.E, geo.mask0)
    varpi_vals = (n - 1) * varpi.values

    Jsq = np.einsum("...ij,...i,...j->...", geo.g, J, J)
    margin = mu - np.sqrt(Jsq + varpi_vals ** 2)

    mask2 = R.mask
    mask1 = divK.mask
    return DensityFields(mu=Field(mu, mask2),
                         J=Field(J, mask1),
                         varpi=Field(varpi_vals, mask1),
                         dec_margin=Field(margin, mask2))


def default_dec_tol(data: ChargedInitialData) -> float:
    """Truncation-error proxy: ``10 h^2 max |second difference of g| / h^2``."""
    h = data.grid.spacing
    mask = shrink_mask(data.mask, 1)
    proxy = 0.0
    for axis in range(data.grid.n):
        d2 = np.zeros_like(data.g)
        sl_m = [slice(1, -1) if a == axis else slice(None)
                for a in range(data.grid.n)]
        sl_l = [slice(0, -2) if a == axis else slice(None)
                for a in range(data.grid.n)]
        sl_h = [slice(2, None) if a == axis else slice(None)
                for a in range(data.grid.n)]
        d2[tuple(sl_m)] = (data.g[tuple(sl_h)] - 2 * data.g[tuple(sl_m)]
                           + data.g[tuple(sl_l)]) / h ** 2
        proxy = max(proxy, float(np.max(np.abs(d2[mask]))))
    return 10.0 * h ** 2 * proxy


def check_dec(dens: DensityFields, data: ChargedInitialData,
              tol: float | None = None, max_report: int = 20) -> DecReport:
    """Report the pointwise DEC margin ``mu - sqrt(|J|^2 + varpi^2)``."""
    if tol is None:
        tol = default_dec_tol(data)
    margin = dens.dec_margin
    valid = margin.mask
    vals = margin.values[valid]
    min_margin = float(vals.min()) if vals.size else 0.0
    viol = valid & (margin.values < -tol)
    pts = [tuple(int(v) for v in idx) for idx in np.argwhere(viol)[:max_report]]

    ts = None
    if float(np.max(np.abs(data.K))) == 0.0:
        # K == 0: DEC reads R >= (n-1)(n-2)|E|^2 + 2(n-1)|div E|
        n = data.grid.n
        geo = data.geometry()
        R = geom.scalar_curvature(data.grid, data.g, geo.mask0, ginv=geo.ginv)
        divE = geom.divergence_vector(data.grid, data.g, data.E, geo.mask0)
        Esq = np.einsum("...ij,...i,...j->...", data.g, data.E, data.E)
        lhs = R.values - (n - 1) * (n - 2) * Esq - 2 * (n - 1) * np.abs(divE.values)
        m2 = R.mask
        ts = {"min_margin": float(lhs[m2].min()) if np.any(m2) else 0.0}

    return DecReport(min_margin=min_margin, tol=float(tol),
                     n_violations=int(np.count_nonzero(viol)),
                     violating_points=pts,
                     asserted=bool(np.count_nonzero(viol) == 0),
                     time_symmetric=ts)


def constraint_residuals(data: ChargedInitialData,
                         geo: geom.FrameGeometry | None = None):
    """Einstein-Maxwell constraint residual fields (hamiltonian, momentum, gauss)."""
    if geo is None:
        geo = data.geometry()
    n = data.grid.n
    gamma = Field(geo.Gamma, geo.mask1)
    R = geom.scalar_curvature(data.grid, data.g, geo.mask0, gamma=gamma,
                              ginv=geo.ginv)
    Ksq, trK, Esq = _kinematic_scalars(data, geo)
    ham = Field(R.values - Ksq + trK ** 2 - (n - 1) * (n - 2) * Esq, R.mask)

    divK = geom.divergence_symtensor(data.grid, data.g, data.K, geo.mask0,
                                     gamma=gamma, ginv=geo.ginv)
    gradtrK = np.einsum("...ij,...j->...i", geo.ginv, grad_all_axes(data.grid, trK))
    mom = Field(divK.values - gradtrK, divK.mask)

    gauss = geom.divergence_vector(data.grid, data.g, data.E, geo.mask0)
    return ham, mom, gauss


# ---------------------------------------------------------------------------
# null expansions

def null_expansions(data: ChargedInitialData, sphere: SurfaceSphere,
                    geo: geom.FrameGeometry | None = None, trap_tol: float = 0.0):
    """Null expansions ``theta_pm = H +- Tr_Sigma K`` on a coordinate sphere.

    ``H`` is the mean curvature with respect to the outward (toward-infinity)
    unit normal and ``Tr_Sigma K = Tr(K) - K(nu, nu)``. Returns
    ``(theta_plus, theta_minus, flags)`` as per-node arrays plus a dict with
    the trapped-surface classification.
    """
    if geo is None:
        geo = data.geometry()
    sg = sphere_geometry(data.grid, data.g, geo, sphere)
    trK_full = np.einsum("...ij,...ij->...", geo.ginv, data.K)
    from .grids import interpolate_to_points
    trK = interpolate_to_points(data.grid, trK_full, sg.nodes).real
    K_nodes = interpolate_to_points(data.grid, data.K, sg.nodes).real
    Knn = np.einsum("pi,pij,pj->p", sg.nu_coord, K_nodes, sg.nu_coord)
    # nu_coord are contravariant; K(nu,nu) needs lowered slots: K_ij nu^i nu^j
    tr_sigma = trK - Knn
    theta_plus = sg.H + tr_sigma
    theta_minus = sg.H - tr_sigma
    flags = {
        "future_trapped": bool(np.all(theta_plus <= trap_tol)),
        "past_trapped": bool(np.all(theta_minus <= trap_tol)),
        "max_abs_theta_plus": float(np.max(np.abs(theta_plus))),
        "max_abs_theta_minus": float(np.max(np.abs(theta_minus))),
    }
    return theta_plus, theta_minus, flags
