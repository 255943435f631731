"""Analytic-transform module: quadrature routes, identities, bounds."""

import math

import numpy as np
import pytest

from bical import Disk, build_domain
from bical.bargmann import (
    LogComplex,
    bound_chain,
    inversion_limit,
    kernel_identity_gap,
    moment_function,
    synthesize_transform,
    transform_complex,
    transform_complex_log,
    transform_points,
    transform_real,
)


def _gaussian(domain, center, s2):
    p = domain.points
    return np.exp(-((p[:, 0] - center[0]) ** 2 + (p[:, 1] - center[1]) ** 2) / (2 * s2))


def _bump(domain, center, R):
    p = domain.points
    r2 = ((p[:, 0] - center[0]) ** 2 + (p[:, 1] - center[1]) ** 2) / R ** 2
    v = np.zeros(len(p))
    m = r2 < 1.0
    v[m] = np.exp(1.0 - 1.0 / (1.0 - r2[m]))
    return v


# ---------------------------------------------------------------------------
# real slice
# ---------------------------------------------------------------------------


def test_real_transform_matches_gaussian_closed_form(config48):
    """Gaussian in, Gaussian out: variances add, peak scales by 2*pi*h*s/(h+s)."""
    dom = config48.domain
    s = 0.01
    y0 = (-1.0, 0.1)
    g = _gaussian(dom, y0, s)
    for h in (0.05, 0.2):
        T = transform_real(dom, g, h).values
        pref = 2 * math.pi * h * s / (h + s)
        exact = pref * _gaussian(dom, y0, h + s)
        assert np.max(np.abs(T - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_fft_route_matches_direct_quadrature(config48, rng):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    h = 0.17
    T = transform_real(dom, f, h).values
    probe = rng.choice(dom.n_interior, size=6, replace=False)
    direct = transform_points(dom, f, dom.points[probe], h)
    assert np.max(np.abs(T[probe] - direct)) <= 1e-8 * np.max(np.abs(direct))


def test_sampling_rule_rejects_coarse_grid(config48):
    dom = config48.domain
    with pytest.raises(ValueError, match="too coarse"):
        transform_real(dom, np.ones(dom.n_interior), 1e-4)


def test_transform_is_linear(config48):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.5)
    g = _gaussian(dom, (-1.2, 0.3), 0.03)
    h = 0.12
    lhs = transform_real(dom, 2.0 * f - 3.0 * g, h).values
    rhs = 2.0 * transform_real(dom, f, h).values - 3.0 * transform_real(dom, g, h).values
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


# ---------------------------------------------------------------------------
# complex points
# ---------------------------------------------------------------------------


def test_complex_point_agrees_on_real_slice(config48, rng):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    h = 0.17
    T = transform_real(dom, f, h).values
    for k in rng.choice(dom.n_interior, size=4, replace=False):
        z = dom.points[k].astype(complex)
        v = transform_complex(dom, f, z, h)
        assert abs(v - T[k]) <= 1e-8 * abs(T[k])


def test_complex_point_matches_analytic_continuation(config48):
    """The Gaussian closed form continues holomorphically off the real slice."""
    dom = config48.domain
    s = 0.01
    y0 = np.array([-1.0, 0.1])
    g = _gaussian(dom, y0, s)
    h = 0.17
    z = np.array([0.4 + 0.8j, -0.3 + 0.5j])
    v = transform_complex(dom, g, z, h)
    zz = (z[0] - y0[0]) ** 2 + (z[1] - y0[1]) ** 2
    exact = 2 * math.pi * h * s / (h + s) * np.exp(-zz / (2 * (h + s)))
    assert abs(v - exact) <= 1e-6 * abs(exact)


def test_overflow_guard_switches_to_log_pair(config48):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    res = transform_complex(dom, f, np.array([30j, 0j]), 0.05)
    assert isinstance(res, LogComplex)
    assert np.isfinite(res.log_abs) and res.log_abs > 700
    with pytest.raises(OverflowError):
        res.value


def test_log_form_is_consistent_with_value(config48):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    z = np.array([0.5 + 0.4j, -0.1 - 0.2j])
    lc = transform_complex_log(dom, f, z, 0.2)
    v = transform_complex(dom, f, z, 0.2)
    assert abs(lc.value - v) <= 1e-12 * abs(v)


def test_log_complex_roundtrip():
    v = 3.7e-5 * np.exp(1.2j)
    lc = LogComplex.from_value(v)
    assert abs(lc.value - v) <= 1e-15 * abs(v)
    assert LogComplex.from_value(0).value == 0


# ---------------------------------------------------------------------------
# kernel identity and synthesis
# ---------------------------------------------------------------------------


def test_window_identity_against_line_quadrature(rng):
    worst = 0.0
    for _ in range(10):
        y = rng.uniform(-2, 0, size=2)
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        h = rng.uniform(0.08, 0.4)
        worst = max(worst, kernel_identity_gap(y, z, h))
    assert worst <= 1e-6


def test_synthesis_from_moments_matches_direct(config48):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    h = 0.17
    mom = moment_function(dom, f, h)
    z = np.array([0.5 + 0.6j, -0.2 - 0.3j])
    syn = synthesize_transform(mom, z, h)
    ref = transform_complex(dom, f, z, h)
    assert abs(syn - ref) <= 1e-6 * abs(ref)


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------


def test_inversion_error_halves_with_h(config96):
    dom = config96.domain
    f = _gaussian(dom, (-1.0, 0.0), 0.08)
    inv = inversion_limit(dom, f, (0.08, 0.04, 0.02, 0.01, 0.005))
    assert np.all(np.diff(inv.errors) < 0)
    for r in inv.ratios[-2:]:
        assert 1.7 <= r <= 2.3


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def test_bound_sweep_holds_pointwise(config48, rng):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    N = 60
    zs = np.stack(
        [
            rng.uniform(0.0, 2.5, N) + 1j * rng.uniform(-2.0, 2.0, N),
            rng.uniform(-1.2, 1.2, N) + 1j * rng.uniform(-2.0, 2.0, N),
        ],
        axis=1,
    )
    sweep = bound_chain(
        dom,
        f,
        zs,
        rng.uniform(0.1, 0.45, N),
        rng.uniform(0.05, 0.25, N),
        rng.uniform(0.6, 2.0, N),
    )
    assert sweep.all_ok
    assert np.min(sweep.log_rhs_modulus - sweep.log_lhs) > 0
    assert np.min(sweep.log_rhs_intermediate - sweep.log_lhs) > 0


def test_bound_sweep_validates_halfplane(config48):
    dom = config48.domain
    f = _bump(dom, (-0.9, -0.2), 0.55)
    with pytest.raises(ValueError, match="Re z1"):
        bound_chain(dom, f, np.array([[-0.5 + 0j, 0j]]), [0.2])
    wrong = build_domain(Disk(center=(0.0, 0.0), radius=1.0), 32)
    g = _bump(wrong, (0.0, 0.0), 0.5)  # support crosses {y1 = 0}
    with pytest.raises(ValueError, match="y1"):
        bound_chain(wrong, g, np.array([[0.5 + 0j, 0j]]), [0.2])
