import numpy as np
import pytest

from chargedspin.chargedata import (generate_flat,
                                    generate_majumdar_papapetrou,
                                    generate_schwarzschild_slice)
from chargedspin.diracsolve import (DiracOperator, TruncatedDomain, cgls,
                                    mass_formula_audit, solve_witten)
from chargedspin.errors import SolverError
from chargedspin.grids import centered_box_grid
from chargedspin.spinops import SpinorCalculus


def test_domain_validation():
    with pytest.raises(SolverError):
        TruncatedDomain((0.0, 0.0, 0.0), 3.0, bc="sideways")
    with pytest.raises(SolverError):
        TruncatedDomain((0.0, 0.0, 0.0), 3.0, bc="future")   # needs r_in
    with pytest.raises(SolverError):
        TruncatedDomain((0.0, 0.0, 0.0), 1.0, r_in=2.0)


@pytest.fixture(scope="module")
def mp_op():
    grid = centered_box_grid(3, 3.0, 21)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [0.8])
    dom = TruncatedDomain((0.0, 0.0, 0.0), r_out=2.3, r_in=0.7, bc="future")
    return DiracOperator(data, dom)


def _rand_spinor(op, seed):
    rng = np.random.default_rng(seed)
    shape = op.grid.shape + (op.N,)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_adjoint_is_exact(mp_op):
    # <A phi, psi> = <phi, A^H psi> to round-off, including the band rows
    phi = _rand_spinor(mp_op, 1)
    psi = _rand_spinor(mp_op, 2)
    lhs = np.vdot(psi, mp_op.apply(phi))
    rhs = np.vdot(mp_op.apply_adjoint(psi), phi)
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(lhs))


def test_operator_linear_and_deterministic(mp_op):
    phi = _rand_spinor(mp_op, 3)
    psi = _rand_spinor(mp_op, 4)
    a = mp_op.apply(phi + 2.5j * psi)
    b = mp_op.apply(phi) + 2.5j * mp_op.apply(psi)
    assert np.abs(a - b).max() < 1e-11 * (1 + np.abs(a).max())
    assert np.array_equal(mp_op.apply(phi), mp_op.apply(phi))


def test_band_projection_idempotent(mp_op):
    p = mp_op.band_proj
    assert np.abs(np.einsum("pij,pjk->pik", p, p) - p).max() < 1e-12
    assert np.abs(p - p.conj().swapaxes(-1, -2)).max() < 1e-12


def test_flat_solve_is_trivial():
    data = generate_flat(centered_box_grid(3, 3.0, 17))
    dom = TruncatedDomain((0.0, 0.0, 0.0), r_out=2.5)
    res = solve_witten(data, dom, tol=1e-10)
    assert res.converged
    assert res.iterations == 0
    assert np.abs(res.phi).max() == 0.0
    assert np.abs(res.psi - res.psi0).max() == 0.0


def test_cgls_deterministic_history():
    grid = centered_box_grid(3, 3.0, 21)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [0.8])
    dom = TruncatedDomain((0.0, 0.0, 0.0), r_out=2.3, r_in=0.7, bc="future")
    a = solve_witten(data, dom, tol=1e-6, max_iter=400)
    b = solve_witten(data, dom, tol=1e-6, max_iter=400)
    assert a.history == b.history
    assert np.array_equal(a.psi, b.psi)


def test_solve_and_audit_schwarzschild_small():
    grid = centered_box_grid(3, 3.0, 25)
    data = generate_schwarzschild_slice(grid, 1.0, excision_radius=0.2)
    calc = SpinorCalculus(data)
    dom = TruncatedDomain((0.0, 0.0, 0.0), r_out=2.4, r_in=0.5, bc="future")
    res = solve_witten(data, dom, tol=1e-7, max_iter=3000, calc=calc)
    assert res.converged
    assert res.relative_residual < 1e-7
    assert res.dec_asserted
    audit = mass_formula_audit(res, data, inner_margin_cells=2.0, calc=calc)
    assert audit.bulk > 0
    assert audit.bulk_total > audit.bulk          # inner L-flux is positive
    assert audit.outer_flux > 0
    assert np.isfinite(audit.inner_form)
    # pi_- psi = 0 on the bc sphere makes the weighted expansion term small
    assert abs(audit.theta_term) < 0.3 * audit.outer_flux
    assert audit.audit_r_out == pytest.approx(2.4 - 3 * grid.spacing)


def test_audit_requires_convergence():
    grid = centered_box_grid(3, 3.0, 21)
    data = generate_majumdar_papapetrou(grid, [(0.0, 0.0, 0.0)], [0.8])
    dom = TruncatedDomain((0.0, 0.0, 0.0), r_out=2.3, r_in=0.7, bc="future")
    res = solve_witten(data, dom, tol=1e-12, max_iter=3)
    assert not res.converged
    with pytest.raises(SolverError):
        mass_formula_audit(res, data)


def test_empty_solve_region_rejected():
    data = generate_flat(centered_box_grid(3, 3.0, 17))
    dom = TruncatedDomain((20.0, 0.0, 0.0), r_out=0.5)
    with pytest.raises(SolverError):
        DiracOperator(data, dom)
