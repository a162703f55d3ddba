import numpy as np
import pytest

from chargedspin.asymptotics import (adm_energy_momentum, default_radii,
                                     richardson_extrapolate, total_charge,
                                     unit_sphere_area, witten_boundary_form)
from chargedspin.chargedata import (ChargedInitialData, generate_flat,
                                    generate_majumdar_papapetrou,
                                    generate_schwarzschild_slice)
from chargedspin.cliffalg import build_clifford_rep
from chargedspin.errors import ExtrapolationError, QuadratureError
from chargedspin.grids import centered_box_grid
from chargedspin.spheres import sphere_quadrature


def test_unit_sphere_area_values():
    assert np.isclose(unit_sphere_area(2), 2 * np.pi)
    assert np.isclose(unit_sphere_area(3), 4 * np.pi)
    assert np.isclose(unit_sphere_area(4), 2 * np.pi ** 2)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_quadrature_total_area(n):
    r = 1.7
    quad = sphere_quadrature(n, r, resolution=12)
    assert abs(quad.weights.sum()
               - unit_sphere_area(n) * r ** (n - 1)) < 1e-12 * r ** (n - 1) * 30


@pytest.mark.parametrize("n", [2, 3, 4])
def test_quadrature_moments(n):
    # odd moments vanish, int x_i x_j dA = (omega r^{n+1}/n) delta_ij
    r = 2.0
    quad = sphere_quadrature(n, r, resolution=16)
    first = np.einsum("p,pi->i", quad.weights, quad.nodes)
    assert np.abs(first).max() < 1e-10
    second = np.einsum("p,pi,pj->ij", quad.weights, quad.nodes, quad.nodes)
    exact = unit_sphere_area(n) * r ** (n + 1) / n * np.eye(n)
    assert np.abs(second - exact).max() < 1e-9 * r ** (n + 1)


def test_quadrature_input_checks():
    with pytest.raises(QuadratureError):
        sphere_quadrature(3, 1.0, resolution=4)
    with pytest.raises(QuadratureError):
        sphere_quadrature(3, -1.0)


def test_richardson_exact_recovery():
    radii = np.array([2.0, 2.5, 3.2, 4.0, 5.0, 6.4])
    values = 3.7 - 1.9 * radii ** -1.3
    fit = richardson_extrapolate(radii, values)
    assert abs(fit.limit - 3.7) < 1e-6
    assert abs(fit.exponent - 1.3) < 1e-4
    assert not fit.degenerate


def test_richardson_two_term_recovery():
    radii = np.array([2.0, 2.5, 3.2, 4.0, 5.0, 6.4])
    values = 1.0 + 0.8 / radii + 0.4 / radii ** 2
    fit = richardson_extrapolate(radii, values, terms=2)
    assert abs(fit.limit - 1.0) < 1e-6


def test_richardson_constant_degenerate():
    radii = [1.0, 2.0, 3.0, 4.0]
    fit = richardson_extrapolate(radii, [5.0] * 4)
    assert fit.degenerate and fit.limit == 5.0 and np.isinf(fit.exponent)


def test_richardson_input_checks():
    with pytest.raises(ExtrapolationError):
        richardson_extrapolate([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ExtrapolationError):
        richardson_extrapolate([1.0, 3.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ExtrapolationError):
        richardson_extrapolate([1.0, 2.0, 3.0], [1.0, 1.5, 2.0], terms=2)


def test_default_radii_too_small():
    with pytest.raises(QuadratureError):
        default_radii(centered_box_grid(3, 0.5, 5))


def test_adm_flat_zero():
    data = generate_flat(centered_box_grid(3, 4.0, 33))
    rep = adm_energy_momentum(data)
    assert abs(rep.energy) < 1e-10
    assert rep.momentum_norm < 1e-10
    assert abs(rep.charge) < 1e-10


def test_adm_gauge_sanity():
    # flat data in a deformed chart: all charges must still vanish
    from chargedspin.testfields import perturbed_flat_metric
    grid = centered_box_grid(3, 8.0, 49)
    g = perturbed_flat_metric(grid, eps=0.1, tau=1.0)
    data = ChargedInitialData(grid, g, np.zeros_like(g),
                              np.zeros(grid.shape + (3,)))
    rep = adm_energy_momentum(data)
    assert abs(rep.energy) < 0.02
    assert rep.momentum_norm < 0.02


def test_adm_schwarzschild_radius_profile():
    # closed form at finite radius: E(r) = m u(r)^3 with u = 1 + m/(2r)
    grid = centered_box_grid(3, 8.0, 65)
    data = generate_schwarzschild_slice(grid, 1.0)
    radii = [3.0, 4.0, 5.0, 6.0, 7.0]
    rep = adm_energy_momentum(data, radii=radii)
    for r, e in zip(rep.radii, rep.energy_at_r):
        exact = (1.0 + 0.5 / r) ** 3
        assert abs(e - exact) < 0.01 * exact
    assert abs(rep.energy - 1.0) < 0.03
    assert rep.momentum_norm < 1e-8
    assert abs(rep.charge) < 1e-12
    assert abs(rep.mass - rep.energy) < 1e-8


def test_adm_mp_charge_radius_profile():
    # single center: the flux charge at finite radius is m U(r)^{-3} exactly
    grid = centered_box_grid(3, 8.0, 65)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [1.0])
    radii = [3.0, 4.0, 5.0, 6.0, 7.0]
    rep = adm_energy_momentum(data, radii=radii)
    for r, q in zip(rep.radii, rep.charge_at_r):
        exact = (1.0 + 1.0 / r) ** -3
        assert abs(q - exact) < 0.01 * exact
    assert rep.momentum_norm < 1e-10
    vals, fit = total_charge(data, radii=radii)
    assert np.abs(np.asarray(vals) - rep.charge_at_r).max() < 1e-12
    assert abs(fit.limit - rep.charge) < 1e-10


def test_adm_angular_resolution_insensitive():
    grid = centered_box_grid(3, 8.0, 49)
    data = generate_schwarzschild_slice(grid, 1.0)
    radii = [3.0, 4.0, 5.0, 6.5]
    a = adm_energy_momentum(data, radii=radii, resolution=16)
    b = adm_energy_momentum(data, radii=radii, resolution=32)
    assert abs(a.energy - b.energy) < 0.005 * abs(b.energy)


def test_adm_report_serializes():
    data = generate_flat(centered_box_grid(3, 4.0, 25))
    rep = adm_energy_momentum(data)
    d = rep.as_dict()
    import json
    json.dumps(d)
    assert d["n"] == 3 and len(d["radii"]) == len(d["energy_at_r"])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_witten_boundary_form_min_eig(n):
    rep = build_clifford_rep(n)
    rng = np.random.default_rng(n * 101)
    for _ in range(25):
        E = float(rng.uniform(0.5, 3.0))
        P = rng.standard_normal(n)
        Q = float(rng.standard_normal())
        form, min_eig, psi0 = witten_boundary_form(rep, E, P, Q)
        expect = E - np.sqrt(np.dot(P, P) + Q ** 2)
        assert abs(min_eig - expect) < 1e-12
        assert np.abs(form @ psi0 - min_eig * psi0).max() < 1e-10
        assert abs(np.linalg.norm(psi0) - 1.0) < 1e-12


def test_witten_boundary_form_extremal_case():
    # (E, P, Q) = (1, 0, 1): the bound saturates exactly
    rep = build_clifford_rep(3)
    _, min_eig, _ = witten_boundary_form(rep, 1.0, np.zeros(3), 1.0)
    assert min_eig == 0.0
