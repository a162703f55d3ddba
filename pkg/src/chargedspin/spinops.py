"""Spinorial operators for charged initial data.

Implements the modified connection

    nbar_X phi = nabla_X phi - (1/2) E.X.chi phi
                 + ((n-3)/2) g(E,X) chi phi + (1/2) K(X).chi phi

its Dirac operator ``Dbar`` (two independent fiber-algebra routes), the
rough and modified connection Laplacians, the curvature endomorphism
``R phi = (1/2)(mu phi + varpi chi phi + J.chi phi)``, and the boundary
operators on coordinate spheres (extrinsic Dirac, mean-curvature
endomorphism, chirality projections).

All grid derivatives share one centered first-difference stencil, so
identities that are exact in the fiber algebra hold to round-off while
genuinely differential identities converge at second order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .chargedata import ChargedInitialData, DensityFields, compute_densities
from .cliffalg import CliffordRep, build_clifford_rep
from .errors import ShapeError
from .grids import Field, central_diff, interpolate_to_points, shrink_mask
from .spheres import SphereGeometry, SurfaceSphere, sphere_geometry


class SpinorCalculus:
    """Shared precomputation for the spinor operators on one data set."""

    def __init__(self, data: ChargedInitialData,
                 rep: CliffordRep | None = None,
                 geo: geom.FrameGeometry | None = None):
        self.data = data
        self.grid = data.grid
        self.n = data.grid.n
        self.rep = rep if rep is not None else build_clifford_rep(self.n)
        if self.rep.n != self.n:
            raise ShapeError("Clifford representation dimension mismatch")
        self.geo = geo if geo is not None else data.geometry()
        self.gp = geom.gamma_pair_products(self.rep)   # gamma_a gamma_b
        # Frame components: E_a = g(E, e_a) = (g^{1/2} E)_a, K_ab = (S K S)_ab.
        self.E_frame = np.einsum("...ai,...i->...a", self.geo.Sinv, data.E)
        self.K_frame = np.einsum("...ai,...ij,...bj->...ab",
                                 self.geo.S, data.K, self.geo.S)
        self.trK = np.einsum("...aa->...", self.K_frame)
        self.mask0 = self.geo.mask0
        self.mask1 = self.geo.mask1            # first-difference quantities
        self.mask2 = shrink_mask(self.mask1, 1)
        self._dens = None

    # -- fiber helpers ----------------------------------------------------

    def chi(self, phi):
        return np.einsum("ij,...j->...i", self.rep.chi, phi)

    def cliff(self, vec_frame, phi):
        """Clifford action of a vector given in frame components."""
        return np.einsum("...a,aij,...j->...i", vec_frame, self.rep.gammas, phi)

    def frame_components(self, vec):
        """Coordinate vector field -> frame components (g(V, e_a))."""
        return np.einsum("...ai,...i->...a", self.geo.Sinv, vec)

    def densities(self) -> DensityFields:
        if self._dens is None:
            self._dens = compute_densities(self.data, geo=self.geo)
        return self._dens

    def _check(self, phi):
        if phi.shape != self.grid.shape + (self.rep.N,):
            raise ShapeError(
                f"spinor field shape {phi.shape}, expected "
                f"{self.grid.shape + (self.rep.N,)}")

    # -- covariant derivatives -------------------------------------------

    def cov_deriv(self, phi) -> np.ndarray:
        """Coordinate-direction spin derivative, shape ``(*shape, n, N)``."""
        self._check(phi)
        h = self.grid.spacing
        dphi = np.stack([central_diff(phi, i, h) for i in range(self.n)], axis=-2)
        dphi += 0.25 * np.einsum("...iab,abjk,...k->...ij",
                                 self.geo.omega, self.gp, phi)
        return dphi

    def frame_cov_deriv(self, phi, cd=None) -> np.ndarray:
        """``nabla_{e_a} phi = S_a^i nabla_i phi``, shape ``(*shape, n, N)``."""
        if cd is None:
            cd = self.cov_deriv(phi)
        return np.einsum("...ai,...ij->...aj", self.geo.S, cd)

    def modified_cov_deriv(self, phi, cd=None) -> np.ndarray:
        """Frame-direction modified derivative ``nbar_{e_a} phi``."""
        fcd = self.frame_cov_deriv(phi, cd=cd)
        chiphi = self.chi(phi)
        # -(1/2) E . e_a . chi phi  = -(1/2) E_b gamma_b gamma_a chi phi
        fcd = fcd - 0.5 * np.einsum("...b,baij,...j->...ai",
                                    self.E_frame, self.gp, chiphi)
        fcd = fcd + 0.5 * (self.n - 3) * self.E_frame[..., None] * chiphi[..., None, :]
        fcd = fcd + 0.5 * np.einsum("...ab,bij,...j->...ai",
                                    self.K_frame, self.rep.gammas, chiphi)
        return fcd

    # -- Dirac operators --------------------------------------------------

    def dirac(self, phi, cd=None) -> np.ndarray:
        fcd = self.frame_cov_deriv(phi, cd=cd)
        return np.einsum("aij,...aj->...i", self.rep.gammas, fcd)

    def modified_dirac(self, phi, method: str = "frame", cd=None) -> np.ndarray:
        """``Dbar phi`` via the frame sum (``method='frame'``) or via the
        zero-order identity ``D phi - (1/2)(E + Tr K).chi phi``."""
        if method == "frame":
            mcd = self.modified_cov_deriv(phi, cd=cd)
            return np.einsum("aij,...aj->...i", self.rep.gammas, mcd)
        if method == "zero_order":
            chiphi = self.chi(phi)
            out = self.dirac(phi, cd=cd)
            out = out - 0.5 * self.cliff(self.E_frame, chiphi)
            out = out - 0.5 * self.trK[..., None] * chiphi
            return out
        raise ValueError(f"unknown method {method!r}")

    def dirac_K(self, phi, cd=None) -> np.ndarray:
        """``D_K phi = sum_a K(e_a) . nabla_{e_a} phi``."""
        fcd = self.frame_cov_deriv(phi, cd=cd)
        return np.einsum("...ab,bij,...aj->...i", self.K_frame,
                         self.rep.gammas, fcd)

    # -- Laplacians -------------------------------------------------------

    def rough_laplacian(self, phi) -> np.ndarray:
        """``nabla* nabla phi = -g^{ij}(nabla_i nabla_j - Gamma^k_ij nabla_k) phi``."""
        cd = self.cov_deriv(phi)                      # (*shape, j, N)
        h = self.grid.spacing
        second = np.stack([central_diff(cd, i, h) for i in range(self.n)], axis=-3)
        second += 0.25 * np.einsum("...iab,abjk,...mk->...imj",
                                   self.geo.omega, self.gp, cd)
        # second[..., i, j, :] = nabla_i (nabla_j phi)
        out = -np.einsum("...ij,...ijk->...k", self.geo.ginv, second)
        out += np.einsum("...ij,...kij,...km->...m",
                         self.geo.ginv, self.geo.Gamma, cd)
        return out

    def modified_laplacian(self, phi) -> np.ndarray:
        """Right-hand side of the adjoint-connection expansion:

        ``nabla*nabla phi - (1/2){D, E.chi} phi - ((n-1)/2) div(E) chi phi
        - (1/2) div(K).chi phi + (1/4)(|K|^2 + ((n-1)(n-2)+1)|E|^2) phi``.
        """
        n = self.n
        out = self.rough_laplacian(phi)
        chiphi = self.chi(phi)
        Echi = self.cliff(self.E_frame, chiphi)
        out -= 0.5 * (self.dirac(Echi) + self.cliff(self.E_frame,
                                                    self.chi(self.dirac(phi))))
        divE = geom.divergence_vector(self.grid, self.geo.g, self.data.E,
                                      self.mask0)
        out -= 0.5 * (n - 1) * divE.values[..., None] * chiphi
        divK = geom.divergence_symtensor(self.grid, self.geo.g, self.data.K,
                                         self.mask0,
                                         gamma=Field(self.geo.Gamma, self.mask1),
                                         ginv=self.geo.ginv)
        out -= 0.5 * self.cliff(self.frame_components(divK.values), chiphi)
        Ksq = np.einsum("...ab,...ab->...", self.K_frame, self.K_frame)
        Esq = np.einsum("...a,...a->...", self.E_frame, self.E_frame)
        out += 0.25 * (Ksq + ((n - 1) * (n - 2) + 1) * Esq)[..., None] * phi
        return out

    def curvature_endo_apply(self, phi, dens: DensityFields | None = None):
        if dens is None:
            dens = self.densities()
        chiphi = self.chi(phi)
        Jf = self.frame_components(dens.J.values)
        out = 0.5 * (dens.mu.values[..., None] * phi
                     + dens.varpi.values[..., None] * chiphi
                     + self.cliff(Jf, chiphi))
        return out

    def curvature_endo_lower_bound(self, dens: DensityFields | None = None) -> Field:
        if dens is None:
            dens = self.densities()
        Jsq = np.einsum("...ij,...i,...j->...", self.geo.g,
                        dens.J.values, dens.J.values)
        bound = 0.5 * (dens.mu.values - np.sqrt(Jsq + dens.varpi.values ** 2))
        return Field(bound, dens.mu.mask)

    # -- integrals --------------------------------------------------------

    def volume_weights(self) -> np.ndarray:
        return self.grid.spacing ** self.n * self.geo.sqrtg

    def integrate(self, scalar_values, region=None) -> float:
        m = self.mask0 if region is None else (self.mask0 & region)
        return float(np.sum(scalar_values[m] * self.volume_weights()[m]))

    def energy_density_of(self, phi) -> tuple[np.ndarray, np.ndarray]:
        """Pointwise ``|nbar phi|^2 + <R phi, phi>`` and its validity mask."""
        mcd = self.modified_cov_deriv(phi)
        grad2 = np.einsum("...ai,...ai->...", mcd.conj(), mcd).real
        rphi = self.curvature_endo_apply(phi)
        rq = np.einsum("...i,...i->...", phi.conj(), rphi).real
        return grad2 + rq, self.mask1 & self.densities().mu.mask


# ---------------------------------------------------------------------------
# boundary operators on coordinate spheres

@dataclass(frozen=True)
class BoundarySpinorData:
    """Everything interpolated to the quadrature nodes of one sphere."""

    sgeom: SphereGeometry
    phi: np.ndarray          # (npts, N)
    trK: np.ndarray
    Knn: np.ndarray
    K_nu_tan: np.ndarray     # tangential part of K(nu), coordinate components
    E_nu: np.ndarray


def _interp(calc: SpinorCalculus, values, nodes):
    return interpolate_to_points(calc.grid, values, nodes)


def restrict_to_sphere(calc: SpinorCalculus, sgeom: SphereGeometry,
                       phi) -> BoundarySpinorData:
    nodes = sgeom.nodes
    phi_b = _interp(calc, phi, nodes)
    K_b = _interp(calc, calc.data.K, nodes)
    E_b = _interp(calc, calc.data.E, nodes)
    ginv_trK = np.einsum("pij,pij->p", sgeom.ginv, K_b)
    nu = sgeom.nu_coord
    Knn = np.einsum("pi,pij,pj->p", nu, K_b, nu)
    K_nu = np.einsum("pij,pjk,pk->pi", sgeom.ginv, K_b, nu)  # raised K(nu)
    K_nu_tan = K_nu - Knn[:, None] * nu
    E_nu = np.einsum("pij,pi,pj->p", sgeom.g, E_b, nu)
    return BoundarySpinorData(sgeom=sgeom, phi=phi_b, trK=ginv_trK, Knn=Knn,
                              K_nu_tan=K_nu_tan, E_nu=E_nu)


def boundary_flux_operator(calc: SpinorCalculus, sgeom: SphereGeometry,
                           phi) -> np.ndarray:
    """``Lbar_nu phi = nbar_nu phi + nu . Dbar phi`` at the quadrature nodes."""
    mcd = calc.modified_cov_deriv(phi)               # (*shape, a, N)
    dbar = calc.modified_dirac(phi, method="frame")
    nodes = sgeom.nodes
    mcd_b = _interp(calc, mcd, nodes)                # (npts, a, N)
    dbar_b = _interp(calc, dbar, nodes)
    nu_f = sgeom.nu_frame
    out = np.einsum("pa,paj->pj", nu_f, mcd_b)
    out += np.einsum("pa,aij,pj->pi", nu_f, calc.rep.gammas, dbar_b)
    return out


def flux_integral(calc: SpinorCalculus, sgeom: SphereGeometry, phi) -> float:
    """``int <Lbar_nu phi, phi> dsigma`` over the sphere (real part)."""
    lphi = boundary_flux_operator(calc, sgeom, phi)
    phi_b = _interp(calc, phi, sgeom.nodes)
    dens = np.einsum("pi,pi->p", phi_b.conj(), lphi).real
    return float(np.sum(dens * sgeom.area_weights))


def extrinsic_dirac(calc: SpinorCalculus, sgeom: SphereGeometry,
                    phi) -> np.ndarray:
    """Boundary Dirac operator ``sum_i e_i . nu . (nabla_{e_i} + A(e_i).nu/2) phi``
    over a g-orthonormal tangent frame ``{e_i}`` at each node."""
    cd = calc.cov_deriv(phi)                          # coordinate directions
    nodes = sgeom.nodes
    cd_b = _interp(calc, cd, nodes)                   # (npts, i, N)
    phi_b = _interp(calc, phi, nodes)
    tan = sgeom.tangent_frame                         # (npts, n-1, n) coord comps
    nu_f = sgeom.nu_frame
    tan_f = np.einsum("pak,ptk->pta", sgeom.Sinv, tan)  # frame comps of e_t

    # nabla_{e_t} phi = e_t^k nabla_k phi
    d_t = np.einsum("ptk,pkj->ptj", tan, cd_b)
    # A(e_t) = e_t^m W_m^k (coordinate components), then frame components.
    A_t = np.einsum("ptm,pmk->ptk", tan, sgeom.weingarten)
    A_t_f = np.einsum("pak,ptk->pta", sgeom.Sinv, A_t)
    nu_phi = np.einsum("pa,aij,pj->pi", nu_f, calc.rep.gammas, phi_b)
    slash = d_t + 0.5 * np.einsum("pta,aij,pj->pti", A_t_f,
                                  calc.rep.gammas, nu_phi)
    e_slash = np.einsum("pta,aij,ptj->pti", tan_f, calc.rep.gammas,
                        np.einsum("pa,aij,ptj->pti", nu_f, calc.rep.gammas, slash))
    return np.einsum("pti->pi", e_slash)


def H_endo(calc: SpinorCalculus, sgeom: SphereGeometry, phi) -> np.ndarray:
    """Mean-curvature endomorphism
    ``H phi + Tr_S(K) nu.chi phi - K(nu)^T.chi phi - (n-1) E_nu chi phi``."""
    b = restrict_to_sphere(calc, sgeom, phi)
    n = calc.n
    chiphi = np.einsum("ij,pj->pi", calc.rep.chi, b.phi)
    nu_f = sgeom.nu_frame
    out = sgeom.H[:, None] * b.phi
    tr_s = b.trK - b.Knn
    out += tr_s[:, None] * np.einsum("pa,aij,pj->pi", nu_f,
                                     calc.rep.gammas, chiphi)
    Ktan_f = np.einsum("pak,pk->pa", sgeom.Sinv, b.K_nu_tan)
    out -= np.einsum("pa,aij,pj->pi", Ktan_f, calc.rep.gammas, chiphi)
    out -= (n - 1) * b.E_nu[:, None] * chiphi
    return out


def boundary_projections(rep: CliffordRep, nu_frame, phi):
    """Chirality projections ``pi_pm phi = (phi +- nu.chi phi)/2`` per node."""
    nu_frame = np.asarray(nu_frame, dtype=float)
    norm = np.sqrt(np.sum(nu_frame ** 2, axis=-1))
    if np.any(np.abs(norm - 1.0) > 1e-8):
        raise ShapeError("normal is not unit to 1e-8")
    nu_chi = np.einsum("...a,aij,jk,...k->...i", nu_frame, rep.gammas,
                       rep.chi, phi)
    return 0.5 * (phi + nu_chi), 0.5 * (phi - nu_chi)


def sl_estimate_probe(calc: SpinorCalculus, phi, region=None,
                      slack_coeff: float = 20.0):
    """Compare ``int |nbar phi|^2`` with ``int |Dbar phi|^2`` for a compactly
    supported test spinor. Returns a dict with both numbers, the O(h^2)
    slack used, and whether the estimate was asserted (DEC must hold)."""
    from .chargedata import check_dec
    dens = calc.densities()
    dec = check_dec(dens, calc.data)
    mcd = calc.modified_cov_deriv(phi)
    grad2 = np.einsum("...ai,...ai->...", mcd.conj(), mcd).real
    dbar = calc.modified_dirac(phi, method="frame")
    d2 = np.einsum("...i,...i->...", dbar.conj(), dbar).real
    lhs = calc.integrate(grad2, region=region)
    rhs = calc.integrate(d2, region=region)
    h = calc.grid.spacing
    slack = slack_coeff * h ** 2 * (lhs + rhs + 1e-30)
    return {"lhs": lhs, "rhs": rhs, "slack": slack,
            "dec_ok": dec.asserted,
            "asserted": bool(dec.asserted),
            "satisfied": bool(lhs <= rhs + slack)}


# ---------------------------------------------------------------------------
# Weitzenboeck convergence study

@dataclass
class ConvergenceReport:
    spacings: list
    residuals: list
    orders: list

    @property
    def fitted_order(self) -> float:
        """Least-squares slope of log(residual) against log(h)."""
        lh = np.log(np.asarray(self.spacings))
        lr = np.log(np.asarray(self.residuals))
        A = np.stack([lh, np.ones_like(lh)], axis=1)
        slope, _ = np.linalg.lstsq(A, lr, rcond=None)[0]
        return float(slope)


def weitzenbock_residual(calc: SpinorCalculus, phi, region=None) -> float:
    """RMS of ``Dbar^2 phi - (nbar* nbar phi + R phi)`` over valid points.

    The left side is computed by composing the first-order operator with
    itself, the right side from the adjoint-connection expansion; agreement
    is a genuine second-order consistency statement on curved data.
    """
    lhs = calc.modified_dirac(calc.modified_dirac(phi, method="frame"),
                              method="frame")
    rhs = calc.modified_laplacian(phi) + calc.curvature_endo_apply(phi)
    mask = calc.mask2 & calc.densities().mu.mask
    if region is not None:
        mask = mask & region
    resid = lhs - rhs
    return float(np.sqrt(np.mean(np.abs(resid[mask]) ** 2)))


def verify_weitzenbock(data_factory, spinor_factory, resolutions,
                       region_fn=None) -> ConvergenceReport:
    """Run the identity residual over a refinement ladder.

    ``data_factory(res) -> ChargedInitialData`` and
    ``spinor_factory(grid, rep) -> phi`` must evaluate the *same* analytic
    fields at every resolution. ``region_fn(grid) -> bool array`` optionally
    fixes the comparison region across levels.
    """
    if len(resolutions) < 2:
        raise ValueError("need at least two refinement levels")
    spacings, residuals = [], []
    for res in resolutions:
        data = data_factory(res)
        calc = SpinorCalculus(data)
        phi = spinor_factory(data.grid, calc.rep)
        region = region_fn(data.grid) if region_fn is not None else None
        residuals.append(weitzenbock_residual(calc, phi, region=region))
        spacings.append(data.grid.spacing)
    orders = [float(np.log(residuals[i] / residuals[i + 1])
                    / np.log(spacings[i] / spacings[i + 1]))
              for i in range(len(residuals) - 1)]
    return ConvergenceReport(spacings=spacings, residuals=residuals,
                             orders=orders)


def make_sphere_geometry(calc: SpinorCalculus, sphere: SurfaceSphere
                         ) -> SphereGeometry:
    return sphere_geometry(calc.grid, calc.geo.g, calc.geo, sphere)
