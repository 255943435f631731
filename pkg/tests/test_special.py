"""Oscillating solutions: phase exactness, cutoffs, and remainder decay."""

import math

import numpy as np
import pytest

from bical.geometry import GeometryError
from bical.special import (
    DEFAULT_H_LADDER,
    Amplitude,
    CgoProfile,
    admissible_h,
    cgo_defect,
    isotropic_from_imag,
    isotropic_pair,
    isotropy_defect,
    make_cutoff,
    make_special_solution,
    prefactor_study,
    standard_amplitudes,
    verify_decay,
)


# ---------------------------------------------------------------------------
# phase vectors
# ---------------------------------------------------------------------------


def test_isotropic_from_imag_hits_target(rng):
    for _ in range(10):
        p, q = rng.normal(size=2)
        xi = isotropic_from_imag((p, q))
        assert np.allclose(np.imag(xi), [p, q], rtol=0, atol=1e-15)
        assert isotropy_defect(xi) < 1e-14


def test_isotropic_pair_scales_homogeneously():
    xi = isotropic_pair(0.3 - 1.7j)
    assert np.allclose(isotropic_pair(2.0 * (0.3 - 1.7j)), 2.0 * xi)


# ---------------------------------------------------------------------------
# profile exactness
# ---------------------------------------------------------------------------


def test_quadratic_profiles_are_annihilated(config48, rng):
    """The fourth-order operator kills a e^(-i x.xi/h) for isotropic xi."""
    dom = config48.domain
    pts = dom.points[rng.choice(dom.n_interior, size=300, replace=False)]
    worst = 0.0
    for _ in range(20):
        mu = complex(rng.normal(), rng.normal()) * rng.uniform(0.3, 3.0)
        xi = isotropic_pair(mu)
        h = rng.uniform(0.05, 0.5)
        for amp in standard_amplitudes():
            worst = max(worst, cgo_defect(amp, xi, h, pts))
    # exact cancellation up to FMA-level rounding in the dot products
    assert worst <= 1e-9


def test_anisotropic_vector_leaves_large_defect(config48):
    pts = config48.domain.points[:200]
    d = cgo_defect(Amplitude.norm_squared(), np.array([1.0 + 0j, 0.5j]), 0.2, pts)
    assert d > 1e-3


def test_profile_gradient_matches_finite_differences(rng):
    xi = isotropic_from_imag((0.7, -0.4))
    prof = CgoProfile(Amplitude.norm_squared(), xi, 0.23)
    pts = rng.uniform(-1.5, -0.5, size=(5, 2))
    g = prof.gradient(pts)
    eps = 1e-6
    for k in range(2):
        step = np.zeros(2)
        step[k] = eps
        fd = (prof.values(pts + step) - prof.values(pts - step)) / (2 * eps)
        assert np.allclose(fd, g[:, k], rtol=1e-7)


# ---------------------------------------------------------------------------
# cutoff geometry
# ---------------------------------------------------------------------------


def test_cutoff_is_one_on_gamma_and_zero_far_away(config48):
    cut = make_cutoff(config48)
    dom = config48.domain
    assert cut.values[dom.gamma_mask].min() == 1.0
    rightmost = int(np.argmax(dom.boundary.points[:, 0]))
    assert cut.values[rightmost] == 0.0
    assert cut.support_x1_max < -config48.c
    for t in (0.25, 1.0, 3.0):
        assert cut.support_h((t, 0.0)) <= -config48.c * t


def test_cutoff_support_matches_chord_geometry(config48):
    """Band edge on the unit circle: gamma arc plus chord-length 2*width."""
    cut = make_cutoff(config48)
    edge = 0.65 + 2.0 * math.asin(cut.width)
    expected = -1.0 - math.cos(edge)
    assert abs(cut.support_h((1.0, 0.0)) - expected) <= 2.0 * config48.domain.dx


def test_cutoff_rejects_band_leaking_right(config48):
    with pytest.raises(GeometryError):
        make_cutoff(config48, width=1.0)


def test_cutoff_evaluate_agrees_with_sample_values(config48):
    cut = make_cutoff(config48)
    bpts = config48.domain.boundary.points
    assert np.allclose(cut.evaluate(bpts), cut.values)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


def test_resolution_rule_rejects_fast_oscillation(config48, op48):
    xi = isotropic_from_imag((1.0, 0.0))
    with pytest.raises(ValueError, match="under-resolves"):
        make_special_solution(config48, op48, Amplitude.one(), xi, h=0.03)


def test_anisotropic_profile_needs_explicit_flag(config48, op48):
    xi = np.array([1.0 + 0j, 0.0j])
    with pytest.raises(ValueError, match="isotropic"):
        make_special_solution(config48, op48, Amplitude.one(), xi, h=0.3)
    sol = make_special_solution(
        config48, op48, Amplitude.one(), xi, h=0.3, allow_anisotropic=True
    )
    assert np.isfinite(sol.remainder_h2())


def test_solution_has_zero_cauchy_data_on_inaccessible_arc(config96, op96):
    cut = make_cutoff(config96)
    xi = isotropic_from_imag((1.0, 0.0))
    sol = make_special_solution(
        config96, op96, Amplitude.coordinate(0), xi, 0.16, cutoff=cut
    )
    scale = math.exp(cut.support_h((1.0, 0.0)) / 0.16)
    assert sol.gamma_cauchy_defect(op96) <= 0.05 * scale


def test_remainders_superpose_linearly(config48, op48):
    cut = make_cutoff(config48)
    xi = isotropic_from_imag((0.8, 0.0))
    h = 0.3
    d1 = CgoProfile(Amplitude.one(), xi, h).boundary_data(cut)
    d2 = CgoProfile(Amplitude.coordinate(1), xi, h).boundary_data(cut)
    r1 = op48.solve(bc=d1)
    r2 = op48.solve(bc=d2)
    r12 = op48.solve(bc=d1 + d2)
    gap = np.max(np.abs(r12.values - r1.values - r2.values))
    assert gap <= 1e-10 * max(r1.norm_max(), r2.norm_max())


# ---------------------------------------------------------------------------
# decay studies
# ---------------------------------------------------------------------------


def test_decay_rate_matches_support_function(config96, op96):
    cut = make_cutoff(config96)
    study = verify_decay(config96, op96, Amplitude.one(), (1.0, 0.0), cutoff=cut)
    assert study.relative_gap <= 0.15
    # the measured remainder has an essentially flat polynomial factor
    assert abs(study.power_free) < 0.5


def test_doubling_the_direction_doubles_the_rate(config96, op96):
    cut = make_cutoff(config96)
    s1 = verify_decay(config96, op96, Amplitude.one(), (0.5, 0.0), cutoff=cut)
    s2 = verify_decay(config96, op96, Amplitude.one(), (1.0, 0.0), cutoff=cut)
    assert abs(s2.rate / s1.rate - 2.0) <= 0.15 * 2.0


def test_real_direction_grows_at_most_polynomially(config96, op96):
    cut = make_cutoff(config96)
    pre = prefactor_study(config96, op96, Amplitude.one(), 1.0, cutoff=cut)
    assert pre.growth_power <= 2.3


def test_ladder_needs_four_points(config48, op48):
    with pytest.raises(ValueError, match="4 ladder points"):
        verify_decay(
            config48, op48, Amplitude.one(), (0.5, 0.0), h_values=(0.4, 0.3, 0.22)
        )


def test_admissible_h_filters_by_oscillation(config48):
    xi = isotropic_from_imag((1.2, -0.2))
    hs = admissible_h(config48, xi, DEFAULT_H_LADDER)
    floor = 6.0 * config48.domain.dx * math.sqrt(float(np.sum(np.abs(xi) ** 2)))
    assert all(h >= floor for h in hs)
    assert len(hs) < len(DEFAULT_H_LADDER)
