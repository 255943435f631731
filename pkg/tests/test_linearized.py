"""Perturbed solves, the partial-data boundary map, and its derivative."""

import math

import numpy as np
import pytest
from scipy import sparse

from bical import assemble_bilaplacian, standard_configuration
from bical.core import SolverError
from bical.fields import BoundaryData, Field
from bical.linearized import (
    CauchyQuadruple,
    PerturbationQ,
    apply_Q,
    bilinear_form,
    boundary_map,
    check_invertible,
    duality_check,
    frechet_derivative_B,
    linearization_order,
    perturbed_operator,
    random_perturbation,
    random_sigma_data,
    solve_P_Q,
    _a3_margin_mask,
)
from bical.special import isotropic_from_imag, make_special_solution, standard_amplitudes


# ---------------------------------------------------------------------------
# applying a perturbation
# ---------------------------------------------------------------------------


def test_zero_perturbation_maps_to_zero(config48):
    dom = config48.domain
    u = np.sin(dom.points[:, 0]) * np.cos(2.0 * dom.points[:, 1])
    out = apply_Q(PerturbationQ.zero(dom), u)
    assert np.max(np.abs(out.values)) == 0.0


def test_order_zero_is_pointwise_multiplication(config48):
    dom = config48.domain
    u = Field(dom, np.cosh(dom.points[:, 0] * 0.5))
    q = PerturbationQ(dom, a0=np.ones(dom.n_interior))
    assert np.max(np.abs(apply_Q(q, u).values - u.values)) == 0.0


def test_second_order_term_is_laplacian(config48):
    # Lap |x|^2 = 4 exactly for every centered or shifted second difference
    dom = config48.domain
    q = PerturbationQ(dom, a2=np.ones(dom.n_interior))
    sq = dom.points[:, 0] ** 2 + dom.points[:, 1] ** 2
    assert np.max(np.abs(apply_Q(q, sq).values - 4.0)) < 1e-9


def test_first_order_term_on_a_plane(config48):
    dom = config48.domain
    N = dom.n_interior
    q = PerturbationQ(dom, a1=np.column_stack([np.full(N, 0.5), np.full(N, -1.5)]))
    plane = 3.0 * dom.points[:, 0] - 2.0 * dom.points[:, 1]
    # (0.5, -1.5) . (3, -2) = 4.5
    assert np.max(np.abs(apply_Q(q, plane).values - 4.5)) < 1e-10


def test_third_order_term_on_a_cubic(config48):
    dom = config48.domain
    N = dom.n_interior
    margin = _a3_margin_mask(dom)
    a3 = np.zeros((N, 4))
    a3[margin, 0] = 2.0  # xxx
    a3[margin, 3] = -1.0  # yyy
    q = PerturbationQ(dom, a3=a3)
    cubic = dom.points[:, 0] ** 3 + dom.points[:, 1] ** 3
    got = apply_Q(q, cubic).values
    want = np.where(margin, 6.0 * 2.0 - 6.0, 0.0)
    assert np.max(np.abs(got - want)) < 1e-7


def test_third_order_requires_stencil_margin(config48):
    dom = config48.domain
    N = dom.n_interior
    margin = _a3_margin_mask(dom)
    a3 = np.zeros((N, 4))
    a3[~margin, 1] = 1.0
    with pytest.raises(ValueError, match="margin"):
        apply_Q(PerturbationQ(dom, a3=a3), np.zeros(N))


def test_coefficient_shape_validation(config48):
    dom = config48.domain
    N = dom.n_interior
    with pytest.raises(ValueError):
        PerturbationQ(dom, a0=np.zeros(N + 1))
    with pytest.raises(ValueError):
        PerturbationQ(dom, a1=np.zeros(N))  # missing the component axis
    with pytest.raises(ValueError):
        PerturbationQ(dom, a3=np.zeros((N, 3)))


def test_perturbation_algebra(config48, rng):
    dom = config48.domain
    Q = random_perturbation(dom, rng)
    H = random_perturbation(dom, rng, orders=(0, 2))
    S = Q + 2.0 * H
    u = rng.normal(size=dom.n_interior)
    direct = apply_Q(Q, u).values + 2.0 * apply_Q(H, u).values
    scale = np.max(np.abs(direct))
    assert np.max(np.abs(apply_Q(S, u).values - direct)) < 1e-12 * scale
    assert (Q - Q).sup_norm == 0.0
    assert Q.order == 2 and PerturbationQ.zero(dom).order == -1


# ---------------------------------------------------------------------------
# perturbed solves
# ---------------------------------------------------------------------------


def test_solve_requires_accessible_support(config48, op48, rng):
    dom = config48.domain
    g = random_sigma_data(dom, rng)
    bad = BoundaryData(dom, np.ones(dom.n_boundary), g.g1)
    with pytest.raises(ValueError, match="inaccessible"):
        solve_P_Q(op48, bad)


def test_perturbed_solve_residual(config48, op48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    Q = random_perturbation(dom, rng, scale=0.5)
    opQ = perturbed_operator(op48, Q)
    u = solve_P_Q(opQ, f, check_condition=True)
    assert opQ.residual_norm(u, bc=f) < 1e-9


def test_small_perturbation_response_is_linear(config48, op48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    H = random_perturbation(dom, rng)
    H = (1.0 / H.sup_norm) * H
    u0 = solve_P_Q(op48, f)
    deltas = []
    for eps in (1e-2, 1e-3):
        uQ = solve_P_Q(perturbed_operator(op48, eps * H), f)
        deltas.append(Field(dom, uQ.values - u0.values).norm_l2())
    ratio = deltas[0] / deltas[1]
    assert 9.0 < ratio < 11.0
    # response small relative to the solution, of the size of the coefficients
    assert deltas[0] < 10.0 * 1e-2 * u0.norm_l2()


def test_singular_operator_is_reported(config48, op48):
    A = op48.A.tolil(copy=True)
    A[0, :] = A[1, :]  # duplicate a row: exactly singular
    from bical.core import DiscreteOperator

    bad = DiscreteOperator(config48.domain, A.tocsc(), op48.Rg0, op48.Rg1)
    with pytest.raises(SolverError):
        check_invertible(bad)


def test_healthy_operator_passes_condition_screen(config48, op48, rng):
    Q = random_perturbation(config48.domain, rng, scale=0.5)
    kappa = check_invertible(perturbed_operator(op48, Q))
    assert np.isfinite(kappa) and kappa < 1e14


# ---------------------------------------------------------------------------
# the boundary map and its derivative
# ---------------------------------------------------------------------------


def test_boundary_map_reproduces_prescribed_data(config48, op48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    quad = boundary_map(op48, f)
    sm = dom.sigma_mask
    scale = np.max(np.abs(f.g0)) + np.max(np.abs(f.g1))
    assert quad.sigma_only
    assert np.max(np.abs(quad.t0[sm] - f.g0[sm])) < 2e-2 * scale
    assert np.max(np.abs(quad.t1[sm] - f.g1[sm])) < 2e-2 * scale
    assert np.max(np.abs(quad.t2[~sm])) == 0.0  # flagged quadruple is zero on gamma


def test_linearization_order_is_quadratic(config48, op48, rng):
    for _ in range(2):
        Q = random_perturbation(config48.domain, rng, scale=0.5)
        H = random_perturbation(config48.domain, rng)
        f = random_sigma_data(config48.domain, rng)
        study = linearization_order(op48, Q, H, f, ts=(1e-2, 5e-3))
        assert 1.7 <= study.order <= 2.3, study


def test_derivative_is_linear_in_direction_and_data(config48, op48, rng):
    dom = config48.domain
    Q = random_perturbation(dom, rng, scale=0.3)
    opQ = perturbed_operator(op48, Q)
    H = random_perturbation(dom, rng)
    f = random_sigma_data(dom, rng)
    g = random_sigma_data(dom, rng)
    Bf = frechet_derivative_B(opQ, H, f)
    scale = Bf.pair_norm()
    doubled = frechet_derivative_B(opQ, 2.0 * H, f)
    assert (doubled - 2.0 * Bf).pair_norm() <= 1e-10 * scale
    Bg = frechet_derivative_B(opQ, H, g)
    Bsum = frechet_derivative_B(opQ, H, f + g)
    assert (Bsum - Bf - Bg).pair_norm() <= 1e-8 * scale


def test_quadruple_csv_roundtrip(config48, op48, rng, tmp_path):
    f = random_sigma_data(config48.domain, rng)
    quad = boundary_map(op48, f)
    path = tmp_path / "trace.csv"
    quad.save_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "s,label,t0,t1,t2,t3"
    assert len(lines) == 1 + config48.domain.n_boundary


# ---------------------------------------------------------------------------
# bilinear form and duality
# ---------------------------------------------------------------------------


def test_bilinear_form_measures_area(config48):
    dom = config48.domain
    one = np.ones(dom.n_interior)
    area = bilinear_form(PerturbationQ(dom, a0=one), one, one)
    assert abs(area - math.pi) < 0.01 * math.pi


def test_bilinear_form_rejects_third_order(config48):
    dom = config48.domain
    N = dom.n_interior
    margin = _a3_margin_mask(dom)
    a3 = np.zeros((N, 4))
    a3[margin, 0] = 1.0
    with pytest.raises(ValueError, match="order"):
        bilinear_form(PerturbationQ(dom, a3=a3), np.zeros(N), np.zeros(N))


def test_duality_zero_perturbation(config48, op48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    g = random_sigma_data(dom, rng)
    res = duality_check(op48, PerturbationQ.zero(dom), f, g)
    assert res.volume == 0.0 and res.boundary == 0.0


def test_duality_requires_sigma_test_data(config48, op48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    bad = BoundaryData(dom, np.ones(dom.n_boundary), np.zeros(dom.n_boundary))
    H = random_perturbation(dom, rng)
    with pytest.raises(ValueError, match="inaccessible"):
        duality_check(op48, H, f, bad)


def test_duality_gap_small(config48, op48, rng):
    dom = config48.domain
    for _ in range(3):
        H = random_perturbation(dom, rng)
        f = random_sigma_data(dom, rng)
        g = random_sigma_data(dom, rng)
        res = duality_check(op48, H, f, g)
        assert res.gap < 0.015, (res.volume, res.boundary)


def test_duality_gap_refines_at_first_order():
    gaps = []
    for res in (32, 64):
        cfg = standard_configuration(res)
        op = assemble_bilaplacian(cfg.domain)
        r = np.random.default_rng(123)
        H = random_perturbation(cfg.domain, r)
        f = random_sigma_data(cfg.domain, r)
        g = random_sigma_data(cfg.domain, r)
        gaps.append(duality_check(op, H, f, g).gap)
    order = math.log(gaps[0] / gaps[1]) / math.log(2.0)
    assert order >= 1.0, gaps


def test_volume_pairing_matches_boundary_for_special_solutions(config48, op48):
    # u, v oscillating solutions with vanishing data on the inaccessible arc:
    # int (H u) v equals a pairing of v's data with the Laplacian traces of
    # the zero-data solve driven by -H u, supported on the accessible arc.
    cfg, op = config48, op48
    dom = cfg.domain
    amps = standard_amplitudes()
    u = make_special_solution(cfg, op, amps[0], isotropic_from_imag((0.75, 0.3)), 0.25)
    v = make_special_solution(cfg, op, amps[1], isotropic_from_imag((0.75, -0.3)), 0.25)
    H = random_perturbation(dom, np.random.default_rng(5))

    lhs = bilinear_form(H, u.field(), v.field())
    w = op.solve(f=-apply_Q(H, u.field()).values)
    T2, T3 = op.laplacian_traces(w.values)
    cd = v.cauchy_data()
    wgt = dom.boundary.weights
    rhs = complex(np.sum(wgt * (cd.g1 * T2 - cd.g0 * T3)))
    assert abs(lhs - rhs) / max(abs(lhs), abs(rhs)) < 5e-3

    # the inaccessible arc contributes exactly nothing
    gm = dom.gamma_mask
    assert np.max(np.abs(cd.g0[gm])) == 0.0 and np.max(np.abs(cd.g1[gm])) == 0.0


# ---------------------------------------------------------------------------
# random input helpers
# ---------------------------------------------------------------------------


def test_random_sigma_data_is_smoothly_windowed(config48, rng):
    dom = config48.domain
    f = random_sigma_data(dom, rng)
    assert f.supported_in_sigma(tol=0.0)
    assert np.max(np.abs(f.g0)) > 0.1  # actually carries signal


def test_random_perturbation_orders_and_clearance(config48, rng):
    dom = config48.domain
    H = random_perturbation(dom, rng, orders=(0, 2))
    assert H.a1 is None and H.a0 is not None and H.a2 is not None
    # support stays away from the boundary
    live = (H.a0 != 0) | (H.a2 != 0)
    _, _, sd = dom.curve.project(dom.points[live])
    assert np.max(sd) < -0.1


def test_seeded_inputs_are_resolution_consistent():
    # the same seed must describe the same continuous data on finer grids
    vals = []
    for res in (32, 64):
        cfg = standard_configuration(res)
        r = np.random.default_rng(77)
        H = random_perturbation(cfg.domain, r)
        f = random_sigma_data(cfg.domain, r)
        vals.append((float(np.max(np.abs(H.a0))), float(np.max(np.abs(f.g0)))))
    a, b = vals
    assert abs(a[0] - b[0]) < 0.05 * max(abs(a[0]), 1e-9)
    assert abs(a[1] - b[1]) < 0.05 * max(abs(a[1]), 1e-9)
