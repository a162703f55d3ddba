"""Coordinate-sphere quadrature and surface geometry.

Quadrature nodes come from a product angular grid: Gauss-Jacobi rules in the
cosines of the polar angles (so the Euclidean area invariant holds to
round-off) and a uniform periodic rule in the azimuth. Surface quantities
(unit normal, Weingarten map, mean curvature, area weights) are computed from
the ambient metric by level-set stencils on the grid and interpolated to the
nodes; no intrinsic meshing.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as gamma_fn, pi

import numpy as np
from scipy.special import roots_jacobi

from .errors import QuadratureError
from .geom import FrameGeometry, metric_sqrt_pair
from .grids import (Grid, central_diff, grad_all_axes, interpolate_to_points,
                    shrink_mask)


def unit_sphere_area(n: int) -> float:
    """Area of the unit (n-1)-sphere, ``2 pi^{n/2} / Gamma(n/2)``."""
    return 2.0 * pi ** (n / 2.0) / gamma_fn(n / 2.0)


@dataclass(frozen=True)
class SurfaceSphere:
    center: tuple[float, ...]
    radius: float
    resolution: int = 24

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise QuadratureError("sphere radius must be positive")


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes/weights for the Euclidean round sphere ``|x - c| = r``.

    ``weights`` carry the full Euclidean surface measure (they sum to
    ``omega_{n-1} r^{n-1}``); ``normals`` are the outward Euclidean unit
    normals ``(x - c)/r``.
    """

    n: int
    center: tuple[float, ...]
    radius: float
    nodes: np.ndarray      # (npts, n)
    weights: np.ndarray    # (npts,)
    normals: np.ndarray    # (npts, n)


def sphere_quadrature(n: int, radius: float, resolution: int = 24,
                      center=None) -> SphereQuadrature:
    """Product-angle quadrature on the round sphere in dimension ``n >= 2``."""
    if resolution < 8:
        raise QuadratureError(f"resolution {resolution} too coarse (need >= 8)")
    if radius <= 0:
        raise QuadratureError("radius must be positive")
    if center is None:
        center = tuple([0.0] * n)

    # Azimuth: uniform midpoint rule on [0, 2 pi).
    q = resolution
    az = 2.0 * pi * (np.arange(q) + 0.5) / q
    dirs = np.stack([np.cos(az), np.sin(az)], axis=-1)  # (q, 2)
    w = np.full(q, 2.0 * pi / q)

    # Prepend polar angles: x -> (cos th, sin th * x) lifts S^{m-1} to S^m with
    # measure sin^{m-1} th dth = (1 - t^2)^{(m-2)/2} dt for t = cos th.
    for m in range(2, n):
        alpha = (m - 2) / 2.0
        t, wt = roots_jacobi(q, alpha, alpha)
        sin_t = np.sqrt(1.0 - t ** 2)
        new_dirs = np.concatenate(
            [np.repeat(t, dirs.shape[0])[:, None],
             np.einsum("a,bi->abi", sin_t, dirs).reshape(-1, dirs.shape[1])],
            axis=1)
        w = np.einsum("a,b->ab", wt, w).reshape(-1)
        dirs = new_dirs

    nodes = np.asarray(center) + radius * dirs
    return SphereQuadrature(n=n, center=tuple(float(c) for c in center),
                            radius=float(radius), nodes=nodes,
                            weights=w * radius ** (n - 1), normals=dirs)


@dataclass(frozen=True)
class SphereGeometry:
    """Metric surface data at the quadrature nodes of a coordinate sphere."""

    sphere: SurfaceSphere
    quad: SphereQuadrature
    nodes: np.ndarray          # (npts, n)
    g: np.ndarray              # metric at nodes
    ginv: np.ndarray
    Sinv: np.ndarray           # g^{1/2}: coordinate -> frame components
    nu_coord: np.ndarray       # outward unit normal, contravariant
    nu_frame: np.ndarray       # frame components of nu (unit Euclidean-wise)
    area_weights: np.ndarray   # Riemannian surface measure weights
    H: np.ndarray              # mean curvature wrt outward normal
    weingarten: np.ndarray     # (npts, i, k): nabla_i nu^k at the nodes
    tangent_frame: np.ndarray  # (npts, n-1, n): g-orthonormal tangent vectors


def level_set_normal(grid: Grid, g: np.ndarray, ginv: np.ndarray, center,
                     clip: float = 1e-10):
    """Unit (w.r.t. g) outward normal field of the spheres around ``center``.

    Returns ``(nu, norm_drho)`` with ``nu`` contravariant and ``norm_drho``
    the g-norm of the Euclidean radial coordinate differential.
    """
    pts = grid.points() - np.asarray(center)
    rho = np.maximum(np.sqrt(np.sum(pts ** 2, axis=-1)), clip)
    drho = pts / rho[..., None]                       # covariant components
    raised = np.einsum("...ij,...j->...i", ginv, drho)
    norm = np.sqrt(np.einsum("...i,...i->...", drho, raised))
    safe = np.maximum(norm, clip)
    return raised / safe[..., None], norm


def _central_diff_2h(values: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    """Centered difference over the doubled stencil width; zero near edges."""
    out = np.zeros_like(values)
    mid = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    hi = [slice(None)] * values.ndim
    mid[axis] = slice(2, -2)
    lo[axis] = slice(0, -4)
    hi[axis] = slice(4, None)
    out[tuple(mid)] = (values[tuple(hi)] - values[tuple(lo)]) / (4.0 * spacing)
    return out


def _tangent_basis(g_nodes: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """g-orthonormal tangent frame at each node by modified Gram-Schmidt."""
    npts, n = nu.shape
    order = np.argsort(np.abs(nu), axis=1)  # drop the axis most aligned with nu
    frame = np.empty((npts, n - 1, n))
    basis = [nu]
    for k in range(n - 1):
        cand = np.zeros((npts, n))
        cand[np.arange(npts), order[:, k]] = 1.0
        for b in basis:
            proj = np.einsum("pi,pij,pj->p", cand, g_nodes, b)
            cand = cand - proj[:, None] * b
        norm = np.sqrt(np.einsum("pi,pij,pj->p", cand, g_nodes, cand))
        cand = cand / norm[:, None]
        frame[:, k, :] = cand
        basis.append(cand)
    return frame


def sphere_geometry(grid: Grid, g: np.ndarray, geo: FrameGeometry,
                    sphere: SurfaceSphere) -> SphereGeometry:
    """Assemble the surface data needed by boundary operators and expansions."""
    quad = sphere_quadrature(grid.n, sphere.radius, sphere.resolution,
                             center=sphere.center)
    mask1 = shrink_mask(geo.mask0, 1)

    nu_field, norm_drho = level_set_normal(grid, g, geo.ginv, sphere.center)
    # Mean curvature: div_g(nu) = (1/sqrt g) d_i (sqrt g nu^i). The plain
    # centered stencil carries a large error constant where the metric is
    # steep (near minimal spheres), so where the width-2h stencil also fits we
    # Richardson-combine the two, (4 D_h - D_2h)/3, killing the h^2 term.
    flux = geo.sqrtg[..., None] * nu_field
    div = np.zeros(grid.shape)
    div_wide = np.zeros(grid.shape)
    for i in range(grid.n):
        div += central_diff(flux[..., i], i, grid.spacing)
        div_wide += _central_diff_2h(flux[..., i], i, grid.spacing)
    H_field = div / geo.sqrtg
    mask2 = shrink_mask(geo.mask0, 2)
    H_field[mask2] = ((4.0 * div - div_wide) / (3.0 * geo.sqrtg))[mask2]

    # Weingarten: nabla_i nu^k = d_i nu^k + Gamma^k_ij nu^j.
    dnu = grad_all_axes(grid, nu_field)  # (*shape, k, i)
    wein_field = (np.einsum("...ki->...ik", dnu)
                  + np.einsum("...kij,...j->...ik", geo.Gamma, nu_field))
    del dnu

    nodes = quad.nodes
    g_nodes = interpolate_to_points(grid, g, nodes, mask=mask1)
    ginv_nodes = np.linalg.inv(g_nodes)
    Sinv_nodes, _ = metric_sqrt_pair(g_nodes)
    nu_nodes = interpolate_to_points(grid, nu_field, nodes, mask=mask1)
    # Renormalize after interpolation so |nu|_g = 1 holds at nodes.
    norm = np.sqrt(np.einsum("pi,pij,pj->p", nu_nodes, g_nodes, nu_nodes))
    nu_nodes = nu_nodes / norm[:, None]

    H_nodes = interpolate_to_points(grid, H_field, nodes, mask=mask1)
    wein_nodes = interpolate_to_points(grid, wein_field, nodes, mask=mask1)
    sg_nodes = np.sqrt(np.linalg.det(g_nodes))
    norm_drho_nodes = interpolate_to_points(grid, norm_drho, nodes)
    area_w = quad.weights * sg_nodes * norm_drho_nodes

    nu_frame = np.einsum("pki,pi->pk", Sinv_nodes, nu_nodes)
    tangent = _tangent_basis(g_nodes, nu_nodes)

    return SphereGeometry(sphere=sphere, quad=quad, nodes=nodes, g=g_nodes,
                          ginv=ginv_nodes, Sinv=Sinv_nodes, nu_coord=nu_nodes,
                          nu_frame=nu_frame, area_weights=area_w,
                          H=H_nodes, weingarten=wein_nodes,
                          tangent_frame=tangent)
