"""Structured-grid Riemannian geometry: frames, Christoffels, curvature,
divergences, and the spinor covariant derivative.

All derivative stencils are the centered second-order differences from
:mod:`chargedspin.grids`; validity masks shrink accordingly and are carried
explicitly. Index conventions: ``g[..., i, j]`` coordinate metric,
``S[..., a, i]`` frame vectors ``e_a = S_a^i d/dx^i`` (``S`` is the symmetric
inverse square root of ``g``, so the frame index can be read on either slot),
``Gamma[..., k, i, j]`` is ``Gamma^k_ij``, ``omega[..., i, a, b]`` the spin
connection coefficients ``g(nabla_i e_a, e_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cliffalg import CliffordRep
from .errors import GeometryError, ShapeError
from .grids import Field, Grid, central_diff, grad_all_axes, shrink_mask


def _check_metric_shape(grid: Grid, g: np.ndarray):
    if g.shape != grid.shape + (grid.n, grid.n):
        raise ShapeError(f"metric shape {g.shape} does not match grid {grid.shape}")


def validate_metric(grid: Grid, g: np.ndarray, mask: np.ndarray,
                    floor: float = 1e-12) -> None:
    """Fail fast if the metric is not symmetric positive definite on live points."""
    _check_metric_shape(grid, g)
    if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-12):
        raise GeometryError("metric is not symmetric")
    eigmin = np.linalg.eigvalsh(g).min(axis=-1)
    bad = mask & (eigmin <= floor)
    if np.any(bad):
        idx = tuple(int(v) for v in np.argwhere(bad)[0])
        x = grid.index_to_coord(idx)
        raise GeometryError(
            f"metric not positive definite at index {idx}, x={np.round(x, 6)} "
            f"(min eigenvalue {eigmin[idx]:.3e})")


def metric_sqrt_pair(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root and inverse square root of the metric per point."""
    w, v = np.linalg.eigh(g)
    if np.any(w <= 0):
        w = np.clip(w, 1e-300, None)
    sq = np.einsum("...ik,...k,...jk->...ij", v, np.sqrt(w), v)
    isq = np.einsum("...ik,...k,...jk->...ij", v, 1.0 / np.sqrt(w), v)
    return sq, isq


def build_frame(grid: Grid, g: np.ndarray, mask: np.ndarray | None = None) -> Field:
    """Orthonormal frame ``e_a = S_a^i d_i`` with ``S = g^{-1/2}``."""
    _check_metric_shape(grid, g)
    if mask is None:
        mask = grid.live_mask()
    validate_metric(grid, g, mask)
    _, S = metric_sqrt_pair(g)
    return Field(S, mask)


def christoffels(grid: Grid, g: np.ndarray, mask: np.ndarray,
                 ginv: np.ndarray | None = None) -> Field:
    """Christoffel symbols ``Gamma^k_ij`` from centered differences of ``g``."""
    _check_metric_shape(grid, g)
    if ginv is None:
        ginv = np.linalg.inv(g)
    dg = grad_all_axes(grid, g)  # (*shape, i, j, k) = d_k g_ij
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    gamma = 0.5 * (np.einsum("...kl,...jli->...kij", ginv, dg)
                   + np.einsum("...kl,...ilj->...kij", ginv, dg)
                   - np.einsum("...kl,...ijl->...kij", ginv, dg))
    del dg
    return Field(gamma, shrink_mask(mask, 1))


def scalar_curvature(grid: Grid, g: np.ndarray, mask: np.ndarray,
                     gamma: Field | None = None,
                     ginv: np.ndarray | None = None) -> Field:
    """Scalar curvature from Christoffels and their first differences."""
    if ginv is None:
        ginv = np.linalg.inv(g)
    if gamma is None:
        gamma = christoffels(grid, g, mask, ginv=ginv)
    dgam = grad_all_axes(grid, gamma.values)  # (*shape, k, i, j, l) = d_l Gamma^k_ij
    ric = (np.einsum("...kijk->...ij", dgam)
           - np.einsum("...kkji->...ij", dgam)
           + np.einsum("...kkl,...lij->...ij", gamma.values, gamma.values)
           - np.einsum("...kil,...lkj->...ij", gamma.values, gamma.values))
    del dgam
    R = np.einsum("...ij,...ij->...", ginv, ric)
    return Field(R, shrink_mask(gamma.mask, 1))


def sqrt_det(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(g))


def divergence_vector(grid: Grid, g: np.ndarray, E: np.ndarray,
                      mask: np.ndarray) -> Field:
    """Metric divergence of a vector field: ``(1/sqrt g) d_i (sqrt g E^i)``."""
    if E.shape != grid.shape + (grid.n,):
        raise ShapeError(f"vector field shape {E.shape} does not match grid")
    sg = sqrt_det(g)
    flux = sg[..., None] * E
    div = np.zeros(grid.shape)
    for i in range(grid.n):
        div += central_diff(flux[..., i], i, grid.spacing)
    return Field(div / sg, shrink_mask(mask, 1))


def divergence_symtensor(grid: Grid, g: np.ndarray, K: np.ndarray,
                         mask: np.ndarray,
                         gamma: Field | None = None,
                         ginv: np.ndarray | None = None) -> Field:
    """Metric divergence of a symmetric (0,2)-tensor, returned as a vector.

    ``(div K)^m = g^{mj} g^{ik} (d_k K_ij - Gamma^l_ki K_lj - Gamma^l_kj K_il)``.
    """
    if K.shape != grid.shape + (grid.n, grid.n):
        raise ShapeError(f"tensor field shape {K.shape} does not match grid")
    if ginv is None:
        ginv = np.linalg.inv(g)
    if gamma is None:
        gamma = christoffels(grid, g, mask, ginv=ginv)
    dK = grad_all_axes(grid, K)  # (*shape, i, j, k) = d_k K_ij
    covdiv = (np.einsum("...ik,...ijk->...j", ginv, dK)
              - np.einsum("...ik,...lki,...lj->...j", ginv, gamma.values, K)
              - np.einsum("...ik,...lkj,...il->...j", ginv, gamma.values, K))
    del dK
    vec = np.einsum("...mj,...j->...m", ginv, covdiv)
    return Field(vec, gamma.mask)


def spin_connection(grid: Grid, g: np.ndarray, S: np.ndarray, mask: np.ndarray,
                    gamma: Field | None = None) -> Field:
    """Spin connection coefficients ``omega[..., i, a, b] = g(nabla_i e_a, e_b)``.

    Antisymmetrized exactly in (a, b); the raw finite-difference expression is
    antisymmetric only to O(h^2).
    """
    if gamma is None:
        gamma = christoffels(grid, g, mask)
    dS = grad_all_axes(grid, S)  # (*shape, a, k, i) = d_i S_a^k
    cov = (np.einsum("...aki->...iak", dS)
           + np.einsum("...kim,...am->...iak", gamma.values, S))
    del dS
    # e_b^l g_lk = (S g)_bk = (g^{1/2})_bk
    omega = np.einsum("...bk,...iak->...iab", S @ g, cov)
    omega = 0.5 * (omega - np.swapaxes(omega, -1, -2))
    return Field(omega, gamma.mask)


def connection_term(rep: CliffordRep, omega: np.ndarray, phi: np.ndarray,
                    gamma_pairs: np.ndarray | None = None) -> np.ndarray:
    """The fiber part of the spinor derivative: ``(1/4) omega_iab gamma_a gamma_b phi``.

    Output shape ``(*shape, n, N)`` with the coordinate direction before the
    spinor index.
    """
    if gamma_pairs is None:
        gamma_pairs = gamma_pair_products(rep)
    return 0.25 * np.einsum("...iab,abjk,...k->...ij", omega, gamma_pairs, phi)


def gamma_pair_products(rep: CliffordRep) -> np.ndarray:
    """All products ``gamma_a gamma_b`` as an ``(n, n, N, N)`` array."""
    return np.einsum("aij,bjk->abik", rep.gammas, rep.gammas)


def spinor_cov_deriv(rep: CliffordRep, grid: Grid, omega: Field,
                     phi: np.ndarray, direction: int) -> Field:
    """Coordinate-direction spinor covariant derivative ``nabla_i phi``."""
    if phi.shape != grid.shape + (rep.N,):
        raise ShapeError(f"spinor field shape {phi.shape} does not match grid/rep")
    dphi = central_diff(phi, direction, grid.spacing)
    gp = gamma_pair_products(rep)
    corr = 0.25 * np.einsum("...ab,abjk,...k->...j",
                            omega.values[..., direction, :, :], gp, phi)
    return Field(dphi + corr, shrink_mask(omega.mask, 1))


@dataclass(frozen=True)
class FrameGeometry:
    """Cached per-grid geometry shared by the spinor operators.

    ``mask0`` marks live points, ``mask1`` points where first-difference
    quantities (Christoffels, spin connection) are valid.
    """

    grid: Grid
    g: np.ndarray
    ginv: np.ndarray
    sqrtg: np.ndarray
    S: np.ndarray        # g^{-1/2}: frame vectors
    Sinv: np.ndarray     # g^{1/2}: coordinate -> frame components
    Gamma: np.ndarray
    omega: np.ndarray
    mask0: np.ndarray
    mask1: np.ndarray


def frame_geometry(grid: Grid, g: np.ndarray, mask: np.ndarray | None = None) -> FrameGeometry:
    if mask is None:
        mask = grid.live_mask()
    validate_metric(grid, g, mask)
    ginv = np.linalg.inv(g)
    Sinv, S = metric_sqrt_pair(g)
    gam = christoffels(grid, g, mask, ginv=ginv)
    om = spin_connection(grid, g, S, mask, gamma=gam)
    return FrameGeometry(grid=grid, g=g, ginv=ginv, sqrtg=sqrt_det(g), S=S,
                         Sinv=Sinv, Gamma=gam.values, omega=om.values,
                         mask0=mask, mask1=om.mask)
