"""Structured Cartesian grids in asymptotic coordinates, with excised balls.

Fields live on the full index box; an excision/stencil mask tracks which
points carry data. Derivative stencils are centered and second order; points
whose stencil would touch a masked point or the box edge are themselves
masked in the result, never extrapolated one-sidedly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import GeometryError, ShapeError, StencilError


@dataclass(frozen=True)
class Excision:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid: ``x(idx) = origin + spacing * idx``."""

    origin: tuple[float, ...]
    spacing: float
    shape: tuple[int, ...]
    excisions: tuple[Excision, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "excisions", tuple(self.excisions))
        if self.spacing <= 0:
            raise GeometryError(f"spacing must be positive, got {self.spacing}")
        if len(self.origin) != len(self.shape):
            raise ShapeError("origin and shape dimensionality differ")
        if any(s < 3 for s in self.shape):
            raise GeometryError("each axis needs at least 3 points for stencils")
        lo = np.asarray(self.origin)
        hi = lo + self.spacing * (np.asarray(self.shape) - 1)
        for exc in self.excisions:
            c = np.asarray(exc.center)
            if exc.radius <= 0:
                raise GeometryError("excision radius must be positive")
            if np.any(c - exc.radius <= lo) or np.any(c + exc.radius >= hi):
                raise GeometryError(
                    f"excised ball at {exc.center} (r={exc.radius}) not strictly "
                    "inside the grid box")

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """Coordinates of every grid point, shape ``(*shape, n)``."""
        axes = [self.origin[i] + self.spacing * np.arange(self.shape[i])
                for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def radii(self, center=None) -> np.ndarray:
        """Euclidean distance of every point from ``center`` (default origin 0)."""
        pts = self.points()
        if center is not None:
            pts = pts - np.asarray(center)
        return np.sqrt(np.sum(pts ** 2, axis=-1))

    def live_mask(self) -> np.ndarray:
        """True where a point carries data (outside every excised ball)."""
        mask = np.ones(self.shape, dtype=bool)
        for exc in self.excisions:
            mask &= self.radii(exc.center) > exc.radius
        return mask

    def index_to_coord(self, idx) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * np.asarray(idx)

    def coord_to_index(self, x) -> np.ndarray:
        """Fractional index coordinates of physical points ``x`` (..., n)."""
        x = np.asarray(x, dtype=float)
        return (x - np.asarray(self.origin)) / self.spacing


def centered_box_grid(n: int, half_width: float, points_per_axis: int,
                      excisions: tuple[Excision, ...] = ()) -> Grid:
    """Grid covering ``[-half_width, half_width]^n``, centered on the origin."""
    h = 2.0 * half_width / (points_per_axis - 1)
    origin = tuple([-half_width] * n)
    return Grid(origin=origin, spacing=h, shape=tuple([points_per_axis] * n),
                excisions=tuple(excisions))


class Field(NamedTuple):
    """Values on a grid plus the mask of points where they are valid.

    ``values`` has shape ``(*grid.shape, ...)``; ``mask`` has shape
    ``grid.shape`` with True marking valid points. Masked entries hold
    unspecified (finite) filler.
    """

    values: np.ndarray
    mask: np.ndarray

    def masked_norm(self, region=None) -> float:
        """RMS of all components over valid points (optionally intersected
        with a boolean ``region``)."""
        m = self.mask if region is None else (self.mask & region)
        if not np.any(m):
            return 0.0
        vals = self.values[m]
        return float(np.sqrt(np.mean(np.abs(vals) ** 2)))


@lru_cache(maxsize=32)
def _cross_structure(n: int):
    return ndimage.generate_binary_structure(n, 1)


def shrink_mask(mask: np.ndarray, depth: int = 1) -> np.ndarray:
    """Erode ``mask`` so every surviving point has a full centered stencil of
    the given depth (all +-depth neighbors along each axis valid)."""
    out = mask
    struct = _cross_structure(mask.ndim)
    for _ in range(depth):
        out = ndimage.binary_erosion(out, structure=struct, border_value=0)
    return out


def central_diff(values: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    """Second-order centered first difference along a grid axis.

    Edge planes are filled with zeros; validity bookkeeping is the caller's
    job (via :func:`shrink_mask`).
    """
    out = np.zeros_like(values)
    lo = [slice(None)] * values.ndim
    hi = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    lo[axis] = slice(0, -2)
    hi[axis] = slice(2, None)
    mid[axis] = slice(1, -1)
    out[tuple(mid)] = (values[tuple(hi)] - values[tuple(lo)]) / (2.0 * spacing)
    return out


def grad_all_axes(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Stack centered differences along every grid axis into a trailing axis.

    Output shape ``(*shape, ..., n)`` with the derivative index last.
    """
    parts = [central_diff(values, axis, grid.spacing) for axis in range(grid.n)]
    return np.stack(parts, axis=-1)


def interpolate_to_points(grid: Grid, values: np.ndarray, coords: np.ndarray,
                          mask: np.ndarray | None = None,
                          margin: float = 1.0) -> np.ndarray:
    """Multilinear interpolation of a grid field at physical coordinates.

    Parameters
    ----------
    values : shape ``(*grid.shape, *comp)``; complex allowed.
    coords : shape ``(npts, n)`` physical coordinates.
    mask : if given, raise :class:`StencilError` when the interpolation cell
        touches an invalid point (``margin > 1`` widens the checked cell).
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    idx = grid.coord_to_index(coords)  # (npts, n)
    if np.any(idx < 0) or np.any(idx > np.asarray(grid.shape) - 1):
        raise StencilError("interpolation point outside the grid box")
    if mask is not None:
        extra = int(np.ceil(margin)) - 1
        base = np.floor(idx).astype(int)
        lo = np.maximum(base - extra, 0)
        hi = np.minimum(base + 1 + extra, np.asarray(grid.shape) - 1)
        for a, b in zip(lo, hi):
            cell = mask[tuple(slice(int(a[i]), int(b[i]) + 1) for i in range(grid.n))]
            if not np.all(cell):
                raise StencilError("interpolation cell touches a masked point")

    comp_shape = values.shape[grid.n:]
    flat = values.reshape(grid.shape + (-1,))
    ncomp = flat.shape[-1]
    out = np.empty((coords.shape[0], ncomp), dtype=values.dtype)
    ic = idx.T  # (n, npts) as required by map_coordinates
    for c in range(ncomp):
        comp = flat[..., c]
        if np.iscomplexobj(comp):
            re = ndimage.map_coordinates(comp.real, ic, order=1, mode="nearest")
            im = ndimage.map_coordinates(comp.imag, ic, order=1, mode="nearest")
            out[:, c] = re + 1j * im
        else:
            out[:, c] = ndimage.map_coordinates(comp, ic, order=1, mode="nearest")
    return out.reshape((coords.shape[0],) + comp_shape)
