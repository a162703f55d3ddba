import numpy as np
import pytest

from chargedspin.chargedata import (ChargedInitialData, check_dec,
                                    compute_densities, constraint_residuals,
                                    default_dec_tol, generate_flat,
                                    generate_majumdar_papapetrou,
                                    generate_schwarzschild_slice,
                                    null_expansions,
                                    schwarzschild_minimal_radius)
from chargedspin.errors import GeometryError, ShapeError
from chargedspin.grids import centered_box_grid
from chargedspin.spheres import SurfaceSphere


def test_data_validation():
    grid = centered_box_grid(2, 1.0, 5)
    flat = generate_flat(grid)
    with pytest.raises(ShapeError):
        ChargedInitialData(grid, flat.g[..., :1, :1], flat.K, flat.E)
    with pytest.raises(ShapeError):
        ChargedInitialData(grid, flat.g, flat.K, flat.E[..., :1])
    bad = flat.E.copy()
    bad[2, 2, 0] = np.nan
    with pytest.raises(GeometryError):
        ChargedInitialData(grid, flat.g, flat.K, bad)


def test_flat_everything_vanishes():
    flat = generate_flat(centered_box_grid(3, 2.0, 13))
    dens = compute_densities(flat)
    for f in (dens.mu, dens.J, dens.varpi, dens.dec_margin):
        assert np.abs(f.values[f.mask]).max() == 0.0
    rep = check_dec(dens, flat)
    assert rep.asserted and rep.n_violations == 0
    assert default_dec_tol(flat) == 0.0


def test_mp_generator_input_checks():
    grid = centered_box_grid(3, 4.0, 17)
    with pytest.raises(ValueError):
        generate_majumdar_papapetrou(grid, [(0, 0, 0)], [1.0, 2.0])
    with pytest.raises(ValueError):
        generate_majumdar_papapetrou(grid, [(0, 0, 0)], [-1.0])
    with pytest.raises(GeometryError):
        generate_majumdar_papapetrou(grid, [(0, 0, 0), (0, 0, 0)], [1.0, 1.0])


def test_mp_excises_centers_and_records_metadata():
    grid = centered_box_grid(3, 4.0, 17)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [1.0])
    assert data.metadata["generator"] == "majumdar_papapetrou"
    assert len(data.grid.excisions) == 1
    assert not data.mask[8, 8, 8]


def _mp_residual_norms(npts):
    grid = centered_box_grid(3, 3.0, npts)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [1.0])
    ham, mom, gauss = constraint_residuals(data)
    r = grid.radii()
    region = ham.mask & (r > 1.2) & (r < 2.5)
    return (np.abs(ham.values[region]).max(),
            np.abs(mom.values[region]).max(),
            np.abs(gauss.values[region]).max())


def test_mp_constraints_converge():
    coarse = _mp_residual_norms(25)
    fine = _mp_residual_norms(49)
    for c, f in zip(coarse, fine):
        if c < 1e-12:            # momentum residual is exactly zero (K = 0)
            assert f < 1e-12
        else:
            assert np.log2(c / f) > 1.6


def test_mp_dec_saturated():
    # electrovacuum: mu = sqrt(|J|^2 + varpi^2) pointwise up to truncation
    grid = centered_box_grid(3, 3.0, 33)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [1.0])
    dens = compute_densities(data)
    rep = check_dec(dens, data)
    assert rep.asserted
    assert rep.time_symmetric is not None
    r = grid.radii()
    region = dens.dec_margin.mask & (r > 1.2) & (r < 2.5)
    assert np.abs(dens.dec_margin.values[region]).max() < 5 * grid.spacing ** 2


def test_schwarzschild_generator():
    assert np.isclose(schwarzschild_minimal_radius(3, 1.0), 0.5)
    assert np.isclose(schwarzschild_minimal_radius(4, 2.0), 1.0)
    grid = centered_box_grid(3, 3.0, 25)
    with pytest.raises(GeometryError):
        generate_schwarzschild_slice(grid, 1.0, excision_radius=0.7)
    with pytest.raises(ValueError):
        generate_schwarzschild_slice(grid, -1.0)
    data = generate_schwarzschild_slice(grid, 1.0)
    assert np.abs(data.K).max() == 0.0 and np.abs(data.E).max() == 0.0
    # vacuum: R = 0, the residual must converge at second order
    errs = []
    for npts in (25, 49):
        grid = centered_box_grid(3, 3.0, npts)
        ham, _, _ = constraint_residuals(generate_schwarzschild_slice(grid, 1.0))
        r = grid.radii()
        region = ham.mask & (r > 1.2) & (r < 2.5)
        errs.append(np.abs(ham.values[region]).max())
    assert np.log2(errs[0] / errs[1]) > 1.6


def test_null_expansions_flat_sphere():
    # theta_pm = (n-1)/r to O(h^2) on round spheres in flat data
    for n, npts in ((3, 33), (4, 21)):
        flat = generate_flat(centered_box_grid(n, 4.0, npts))
        h = flat.grid.spacing
        r = 2.0
        tp, tm, flags = null_expansions(flat, SurfaceSphere([0.0] * n, r, 12))
        exact = (n - 1) / r
        assert np.abs(tp - exact).max() < 10 * h ** 2
        assert np.abs(tm - exact).max() < 10 * h ** 2
        assert not flags["future_trapped"] and not flags["past_trapped"]


def test_null_expansions_umbilic_shift():
    # K = lam g shifts theta_pm by +-(n-1) lam exactly (up to stencil error)
    n, lam, r = 3, 0.3, 2.0
    flat = generate_flat(centered_box_grid(n, 4.0, 33))
    h = flat.grid.spacing
    data = ChargedInitialData(flat.grid, flat.g, lam * flat.g, flat.E)
    tp, tm, flags = null_expansions(data, SurfaceSphere([0.0] * n, r, 12))
    base = (n - 1) / r
    shift = (n - 1) * lam
    assert np.abs(tp - (base + shift)).max() < 10 * h ** 2
    assert np.abs(tm - (base - shift)).max() < 10 * h ** 2


def test_null_expansions_trapped_flag():
    # strong uniform contraction makes the sphere future trapped
    n, r = 3, 2.0
    flat = generate_flat(centered_box_grid(n, 4.0, 33))
    data = ChargedInitialData(flat.grid, flat.g, -2.0 * flat.g, flat.E)
    tp, tm, flags = null_expansions(data, SurfaceSphere([0.0] * n, r, 12))
    assert flags["future_trapped"] and not flags["past_trapped"]


def test_schwarzschild_minimal_sphere_marginal():
    grid = centered_box_grid(3, 2.0, 41)
    data = generate_schwarzschild_slice(grid, 1.0, excision_radius=0.2)
    h = grid.spacing
    r_min = schwarzschild_minimal_radius(3, 1.0)
    tp, tm, _ = null_expansions(data, SurfaceSphere((0.0, 0.0, 0.0), r_min, 12))
    assert np.abs(tp).max() < 10 * h ** 2
    assert np.abs(tm).max() < 10 * h ** 2
    # slightly outside the minimal sphere both expansions turn positive
    tp, tm, _ = null_expansions(data, SurfaceSphere((0.0, 0.0, 0.0), 0.9, 12))
    assert tp.min() > 0 and tm.min() > 0


def test_check_dec_flags_violation():
    # hand-built violating data: flat metric with a strong charge density
    grid = centered_box_grid(3, 2.0, 17)
    pts = grid.points()
    flat = generate_flat(grid)
    E = 0.8 * pts                       # div E = 2.4, mu stays 0
    data = ChargedInitialData(grid, flat.g, flat.K, E)
    dens = compute_densities(data)
    rep = check_dec(dens, data, tol=1e-8)
    assert not rep.asserted
    assert rep.n_violations > 0
    assert len(rep.violating_points) <= 20
    assert rep.min_margin < -1.0
