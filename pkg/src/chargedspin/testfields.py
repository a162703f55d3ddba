"""Analytic test fields: spinor profiles and smooth synthetic data.

Everything here is a closed-form function of the coordinates, so the same
field can be sampled at any resolution (needed for convergence studies).
Random families are seeded and draw their shape parameters independently of
the grid, so refining the grid refines the *same* field.
"""

from __future__ import annotations

import numpy as np

from .cliffalg import CliffordRep
from .grids import Grid


def constant_spinor(grid: Grid, rep: CliffordRep, phi0=None) -> np.ndarray:
    if phi0 is None:
        phi0 = np.zeros(rep.N, dtype=complex)
        phi0[0] = 1.0
    phi0 = np.asarray(phi0, dtype=complex)
    out = np.empty(grid.shape + (rep.N,), dtype=complex)
    out[...] = phi0
    return out


def random_unit_spinor(rep: CliffordRep, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(rep.N) + 1j * rng.standard_normal(rep.N)
    return v / np.linalg.norm(v)


def plane_wave_spinor(grid: Grid, rep: CliffordRep, k, phi0=None) -> np.ndarray:
    """``exp(i k.x) phi0`` sampled on the grid."""
    k = np.asarray(k, dtype=float)
    pts = grid.points()
    phase = np.exp(1j * np.tensordot(pts, k, axes=([-1], [0])))
    return phase[..., None] * constant_spinor(grid, rep, phi0)


def bump_weight(points: np.ndarray, center, width: float) -> np.ndarray:
    """C^2 compactly supported bump ``((1 - s^2)_+)^3`` with ``s = |x-c|/w``."""
    d = points - np.asarray(center)
    s2 = np.sum(d ** 2, axis=-1) / width ** 2
    return np.clip(1.0 - s2, 0.0, None) ** 3


def bump_spinor(grid: Grid, rep: CliffordRep, center, width: float,
                phi0=None) -> np.ndarray:
    w = bump_weight(grid.points(), center, width)
    return w[..., None] * constant_spinor(grid, rep, phi0)


def gaussian_spinor(grid: Grid, rep: CliffordRep, center, width: float,
                    phi0=None) -> np.ndarray:
    d = grid.points() - np.asarray(center)
    w = np.exp(-np.sum(d ** 2, axis=-1) / (2.0 * width ** 2))
    return w[..., None] * constant_spinor(grid, rep, phi0)


class SmoothModeData:
    """Seeded low-frequency trigonometric perturbations of flat data.

    Produces smooth (g, K, E) fields that do *not* satisfy any constraint;
    useful because the Weitzenboeck identity is unconditional.
    """

    def __init__(self, n: int, seed: int, amplitude: float = 0.05,
                 box_scale: float = 1.0, nmodes: int = 3):
        rng = np.random.default_rng(seed)
        self.n = n
        self.amp = amplitude
        # Low wavenumbers relative to the box so coarse grids resolve them.
        self.kg = rng.uniform(0.3, 0.9, size=(nmodes, n)) / box_scale
        self.pg = rng.uniform(0, 2 * np.pi, size=(nmodes, n, n))
        self.ag = rng.uniform(-1, 1, size=(nmodes, n, n))
        self.kK = rng.uniform(0.3, 0.9, size=(nmodes, n)) / box_scale
        self.pK = rng.uniform(0, 2 * np.pi, size=(nmodes, n, n))
        self.aK = rng.uniform(-1, 1, size=(nmodes, n, n))
        self.kE = rng.uniform(0.3, 0.9, size=(nmodes, n)) / box_scale
        self.pE = rng.uniform(0, 2 * np.pi, size=(nmodes, n))
        self.aE = rng.uniform(-1, 1, size=(nmodes, n))

    def sample(self, grid: Grid):
        if grid.n != self.n:
            raise ValueError("grid dimension mismatch")
        pts = grid.points()
        n = self.n
        g = np.zeros(grid.shape + (n, n))
        K = np.zeros(grid.shape + (n, n))
        E = np.zeros(grid.shape + (n,))
        for m in range(self.kg.shape[0]):
            ph = np.tensordot(pts, self.kg[m], axes=([-1], [0]))
            g += self.amp * np.sin(ph)[..., None, None] * np.cos(self.pg[m]) \
                * self.ag[m]
            ph = np.tensordot(pts, self.kK[m], axes=([-1], [0]))
            K += self.amp * np.sin(ph)[..., None, None] * np.cos(self.pK[m]) \
                * self.aK[m]
            ph = np.tensordot(pts, self.kE[m], axes=([-1], [0]))
            E += self.amp * np.sin(ph)[..., None] * np.cos(self.pE[m]) * self.aE[m]
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        K = 0.5 * (K + np.swapaxes(K, -1, -2))
        g += np.eye(n)
        return g, K, E


def perturbed_flat_metric(grid: Grid, eps: float, tau: float) -> np.ndarray:
    """Flat metric pulled back by the diffeomorphism ``x -> x + eps f(x)``
    with ``f_i = x_i (1 + |x|^2)^{-(tau+1)/2}``, applied analytically.

    The ADM charges of this data are exactly zero; only chart gauge changes.
    """
    pts = grid.points()
    n = grid.n
    rho2 = np.sum(pts ** 2, axis=-1)
    u = (1.0 + rho2) ** (-(tau + 1.0) / 2.0)
    du = -(tau + 1.0) * (1.0 + rho2) ** (-(tau + 3.0) / 2.0)  # d u / d(rho^2)
    # Jacobian J_ij = d y_i / d x_j = delta_ij (1 + eps u) + eps x_i * 2 x_j du
    J = (np.eye(n) * (1.0 + eps * u)[..., None, None]
         + 2.0 * eps * du[..., None, None] * pts[..., :, None] * pts[..., None, :])
    return np.einsum("...ki,...kj->...ij", J, J)
