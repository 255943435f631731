"""Domain construction, normalization, support geometry, and the inversion pullback."""

import math

import numpy as np
import pytest

from bical.core import apply_biharmonic_stencil
from bical.fields import Field
from bical.geometry import (
    ConformalMap,
    DentedDisk,
    Disk,
    GeometryError,
    NormalizedConfiguration,
    SigmaArc,
    SmoothedStadium,
    StarCurve,
    build_aligned_rectangle,
    build_domain,
    enclosing_rectangle,
    image_disk,
    kelvin_image_domain,
    kelvin_transform,
    lattice_injection,
    shape_from_params,
    standard_configuration,
    support_function,
    tangent_exterior_map,
)
from bical.interp import evaluate, tensor_stencil_flags


# ---------------------------------------------------------------------------
# shapes and curves
# ---------------------------------------------------------------------------


def test_shape_params_roundtrip():
    shapes = [
        Disk((0.25, -1.5), 0.75),
        SmoothedStadium((0.0, 0.3), 1.2, 0.5, 6),
        DentedDisk((-1.0, 0.0), 1.0, 0.4, 0.7, 0.25),
    ]
    for s in shapes:
        back = shape_from_params(s.params())
        assert type(back) is type(s)
        assert back.params() == s.params()
    with pytest.raises(GeometryError):
        shape_from_params({"kind": "pentagon"})


def test_circle_curve_geometry():
    """All StarCurve quantities reduce to closed forms on a circle."""
    c = np.array([0.5, -0.3])
    curve = StarCurve(Disk(tuple(c), 2.0))
    th = np.linspace(0.0, 2.0 * math.pi, 41)[:-1]
    p = curve.point(th)
    assert np.max(np.abs(np.hypot(p[:, 0] - c[0], p[:, 1] - c[1]) - 2.0)) < 1e-12
    nrm = curve.outward_normal(th)
    assert np.max(np.abs(nrm - (p - c) / 2.0)) < 1e-10
    assert np.max(np.abs(curve.curvature(th) - 0.5)) < 1e-9
    assert abs(curve.perimeter - 4.0 * math.pi) < 1e-10


def test_arclength_parameterization_inverts():
    curve = StarCurve(SmoothedStadium((0.0, 0.0), 1.1, 0.6))
    th = np.array([0.1, 1.7, 3.0, 5.5])
    s = curve.arclength_of(th)
    assert np.max(np.abs(curve.theta_of_arclength(s) - th)) < 1e-9
    assert np.all(np.diff(s) > 0) and np.all((s >= 0) & (s < curve.perimeter))


def test_signed_projection_distance():
    c = np.array([0.5, -0.3])
    curve = StarCurve(Disk(tuple(c), 2.0))
    probes = c + np.array([[3.0, 0.0], [0.5, 0.2], [0.0, -1.99]])
    _, foot, dist = curve.project(probes)
    exact = np.hypot(probes[:, 0] - c[0], probes[:, 1] - c[1]) - 2.0
    assert np.max(np.abs(dist - exact)) < 1e-9
    # feet lie on the curve
    assert np.max(np.abs(np.hypot(foot[:, 0] - c[0], foot[:, 1] - c[1]) - 2.0)) < 1e-9
    inside = curve.contains(probes)
    assert list(inside) == [False, True, True]


def test_dented_disk_pockets_inward():
    shape = DentedDisk((0.0, 0.0), 1.0, dent_angle=0.3, dent_half_width=0.6, dent_depth=0.2)
    assert shape.radius_of(np.array([0.3]))[0] == pytest.approx(0.8)
    # away from the dent the circle is untouched
    assert shape.radius_of(np.array([0.3 + math.pi]))[0] == pytest.approx(1.0)
    r = shape.radius_of(np.linspace(0, 2 * math.pi, 720))
    assert np.all(r <= 1.0 + 1e-14) and np.all(r >= 0.8 - 1e-14)


# ---------------------------------------------------------------------------
# domain embedding
# ---------------------------------------------------------------------------


def test_build_domain_rejects_bad_inputs():
    with pytest.raises(GeometryError):
        build_domain(Disk(), 8)
    with pytest.raises(GeometryError):
        build_domain(Disk(), 32, SigmaArc(0.0, 0.0))


def test_boundary_quadrature_is_exact_for_perimeter():
    dom = build_domain(Disk((0.0, 0.0), 1.0), 32)
    assert abs(dom.perimeter - 2.0 * math.pi) < 1e-10
    # midpoint weights tile the curve exactly
    assert abs(float(np.sum(dom.boundary.weights)) - dom.perimeter) < 1e-12 * dom.perimeter


def test_cell_fractions_converge_to_the_area():
    """Clipped cell sums approach the disk area, and only rim cells shrink."""
    exact = math.pi
    errs = {}
    for res in (32, 64):
        dom = build_domain(Disk((0.0, 0.0), 1.0), res)
        kappa = dom.cell_fractions()
        assert np.all((kappa >= 0.0) & (kappa <= 1.0 + 1e-12))
        _, _, sd = dom.curve.project(dom.points)
        assert np.all(kappa[sd < -2.0 * dom.dx] == 1.0)
        clipped = dom.dx ** 2 * float(np.sum(kappa))
        errs[res] = abs(clipped - exact) / exact
    assert errs[32] < 1.5e-2
    assert errs[64] < 7e-3
    assert errs[32] / errs[64] > 1.7


def test_arc_labels_partition_boundary():
    sigma = SigmaArc(center_angle=0.0, half_width=2.0)
    dom = build_domain(Disk((0.0, 0.0), 1.0), 32, sigma)
    sm, gm = dom.sigma_mask, dom.gamma_mask
    assert np.all(sm ^ gm)
    assert np.any(sm) and np.any(gm)
    assert np.all(sigma.contains(dom.boundary.theta[sm]))
    assert not np.any(sigma.contains(dom.boundary.theta[gm]))
    # default arc is the whole boundary
    full = build_domain(Disk((0.0, 0.0), 1.0), 32)
    assert np.all(full.sigma_mask)


def test_domain_save_load_roundtrip(tmp_path):
    sigma = SigmaArc(0.4, 2.2)
    dom = build_domain(DentedDisk((-0.2, 0.1), 0.9, 1.0, 0.7, 0.15), 24, sigma)
    path = tmp_path / "dom.txt"
    dom.save(str(path))
    back = dom.load(str(path))
    assert back.resolution == dom.resolution
    assert back.dx == dom.dx
    assert back.n_interior == dom.n_interior
    assert np.array_equal(back.interior, dom.interior)
    assert np.array_equal(back.points, dom.points)
    b0, b1 = dom.boundary, back.boundary
    for name in ("theta", "s", "points", "normals", "curvature", "weights"):
        assert np.array_equal(getattr(b0, name), getattr(b1, name)), name
    assert np.array_equal(back.sigma_mask, dom.sigma_mask)
    # the rebuilt curve is live, not just stored samples
    assert abs(back.perimeter - dom.perimeter) < 1e-12


def test_load_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("some-other-format v7\n")
    from bical.geometry import Domain

    with pytest.raises(GeometryError):
        Domain.load(str(path))


# ---------------------------------------------------------------------------
# aligned rectangles
# ---------------------------------------------------------------------------


def test_rectangle_lattice_and_quadrature():
    rect = build_aligned_rectangle((0.0, 0.0), 1.0, 0.5, 32)
    assert rect.nx == 33 and rect.ny == 17
    assert np.all(rect.cell_fractions() == 1.0)
    assert abs(float(np.sum(rect.boundary.weights)) - 3.0) < 1e-12
    inside = rect.contains(np.array([[0.5, 0.25], [1.5, 0.25], [0.5, -0.1]]))
    assert list(inside) == [True, False, False]


def test_enclosing_rectangle_shares_lattice():
    dom = standard_configuration(32).domain
    rect = enclosing_rectangle(dom)
    inj = lattice_injection(rect, dom)
    assert np.max(np.abs(rect.points[inj] - dom.points)) < 1e-12
    assert rect.dx == dom.dx
    # every domain node is strictly interior to the rectangle
    assert np.all(rect.contains(dom.points))


def test_lattice_injection_rejects_misaligned_grids():
    dom = standard_configuration(32).domain
    rect = build_aligned_rectangle((-2.501, -1.5), 3.0, 3.0, 32)
    with pytest.raises(GeometryError):
        lattice_injection(rect, dom)


# ---------------------------------------------------------------------------
# normalized configuration and support function
# ---------------------------------------------------------------------------


def test_standard_configuration_invariants(config48):
    dom = config48.domain
    r = np.hypot(dom.points[:, 0] + 1.0, dom.points[:, 1])
    assert np.all(r < 1.0)
    assert config48.c > 0.0
    gpts = dom.boundary.points[dom.gamma_mask]
    assert gpts.shape[0] > 0
    assert np.all(gpts[:, 0] < -2.0 * config48.c)
    assert np.any(dom.sigma_mask)


def test_normalization_rejects_bad_domains():
    # interior pokes outside the unit ball about -e1
    dom = build_domain(Disk((0.0, 0.0), 1.0), 32)
    with pytest.raises(GeometryError):
        NormalizedConfiguration.from_domain(dom)
    # no gamma arc at all
    shifted = build_domain(Disk((-1.0, 0.0), 0.9), 32)
    with pytest.raises(GeometryError):
        NormalizedConfiguration.from_domain(shifted)
    # requested separation larger than the arc allows
    cfg = standard_configuration(32)
    with pytest.raises(GeometryError):
        NormalizedConfiguration.from_domain(cfg.domain, c=10.0 * cfg.c)


def test_support_function_closed_forms():
    dom = build_domain(Disk((0.0, 0.0), 1.0), 32)
    pts = dom.boundary.points
    # unit circle: H(y) = |y|
    assert abs(support_function(pts, np.array([0.0, 1.0])) - 1.0) < 1e-3
    h1 = support_function(pts, np.array([0.3, -0.8]))
    assert abs(h1 - math.hypot(0.3, 0.8)) < 1e-3
    # positive homogeneity
    h3 = support_function(pts, 3.0 * np.array([0.3, -0.8]))
    assert h3 == pytest.approx(3.0 * h1, rel=1e-12)
    with pytest.raises(GeometryError):
        support_function(np.empty((0, 2)), np.array([1.0, 0.0]))


def test_gamma_support_sits_left_of_separation(config48):
    """The inaccessible arc stays in {x1 < -2c}, uniformly in the direction scale."""
    dom = config48.domain
    gpts = dom.boundary.points[dom.gamma_mask]
    for t in (1.0, 2.5):
        assert support_function(gpts, np.array([t, 0.0])) <= -2.0 * config48.c * t


# ---------------------------------------------------------------------------
# off-lattice interpolation
# ---------------------------------------------------------------------------


def _smooth(p):
    return np.sin(1.3 * p[:, 0]) * np.cos(0.9 * p[:, 1]) + 0.2 * p[:, 0] * p[:, 1]


def _probe_points(dom, rng):
    cand = rng.uniform([-2.0, -1.0], [0.0, 1.0], size=(4000, 2))
    _, _, sd = dom.curve.project(cand)
    deep = cand[sd <= -6.0 * dom.dx][:300]
    rim = cand[(sd <= -0.6 * dom.dx) & (sd >= -2.0 * dom.dx)][:150]
    return deep, rim


def test_interpolation_order_ladder(config48, rng):
    dom = config48.domain
    vals = _smooth(dom.points)
    deep, rim = _probe_points(dom, rng)
    assert len(deep) > 100 and len(rim) > 30
    err = {}
    for order in (2, 3, 5):
        err[order] = np.max(np.abs(evaluate(dom, vals, deep, order=order) - _smooth(deep)))
    assert err[5] < err[3] < err[2]
    assert err[2] < 5e-5
    assert err[3] < 5e-7
    assert err[5] < 1e-10


def test_interpolation_stays_stable_at_the_rim(config48, rng):
    """One-sided fallback sampling loses order but never blows up."""
    dom = config48.domain
    vals = _smooth(dom.points)
    _, rim = _probe_points(dom, rng)
    for order in (2, 3, 5):
        e = np.max(np.abs(evaluate(dom, vals, rim, order=order) - _smooth(rim)))
        assert e < 1e-4, (order, e)


def test_tensor_stencil_flags_mark_the_collar(config48, rng):
    dom = config48.domain
    deep, rim = _probe_points(dom, rng)
    assert np.all(tensor_stencil_flags(dom, deep, order=5))
    assert np.all(tensor_stencil_flags(dom, deep, order=2))
    rim5 = tensor_stencil_flags(dom, rim, order=5)
    rim2 = tensor_stencil_flags(dom, rim, order=2)
    assert not np.any(rim5)
    # the smaller tensor block survives closer to the boundary
    assert np.count_nonzero(rim2) >= np.count_nonzero(rim5)


# ---------------------------------------------------------------------------
# inversion map and weighted pullback
# ---------------------------------------------------------------------------

# gentle test inversion: |x - a| stays within [4/3, 3] on the source disk
_CMAP = ConformalMap(center=(1.0, 0.0), radius=2.0, fixed_direction=(-1.0, 0.0))


def _biharm(p):
    # x^3 y + x y / 2 - y^2 / 5: annihilated by the squared Laplacian
    return p[:, 0] ** 3 * p[:, 1] + 0.5 * p[:, 0] * p[:, 1] - 0.2 * p[:, 1] ** 2


_STENCIL_OFFSETS = [
    (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
    (2, 0), (-2, 0), (0, 2), (0, -2),
]


def _tensor_core(domain, flags):
    """Nodes whose whole 13-point neighborhood carries tensor-quality samples."""
    ok = np.zeros((domain.nx, domain.ny), dtype=bool)
    ii, jj = np.nonzero(domain.interior)
    ok[ii, jj] = flags
    core = np.ones_like(ok)
    for di, dj in _STENCIL_OFFSETS:
        core &= np.roll(np.roll(ok, -di, axis=0), -dj, axis=1)
    return core[ii, jj]


def test_inversion_map_pointwise_identities(rng):
    pts = rng.uniform([-2.0, -1.0], [0.0, 1.0], size=(64, 2))
    assert np.max(np.abs(_CMAP.psi(_CMAP.psi(pts)) - pts)) < 1e-12
    fp = _CMAP.fixed_point
    assert np.max(np.abs(_CMAP.psi(fp[None, :]) - fp)) < 1e-12
    # weight telescopes to one under the double map
    w1 = _CMAP.kelvin_weight(pts)
    w2 = _CMAP.kelvin_weight(_CMAP.psi(pts))
    assert np.max(np.abs(w1 * w2 - 1.0)) < 1e-12
    # in the weight-free dimension the pullback is unweighted
    assert np.max(np.abs(_CMAP.kelvin_weight(pts, n=4) - 1.0)) < 1e-14


def test_image_disk_matches_mapped_circle():
    disk = Disk((-1.0, 0.0), 1.0)
    img = image_disk(_CMAP, disk)
    th = np.linspace(0.0, 2.0 * math.pi, 33)[:-1]
    circle = np.stack([disk.center[0] + np.cos(th), disk.center[1] + np.sin(th)], axis=-1)
    mapped = _CMAP.psi(circle)
    dist = np.hypot(mapped[:, 0] - img.center[0], mapped[:, 1] - img.center[1])
    assert np.max(np.abs(dist - img.radius)) < 1e-12
    through = ConformalMap(center=(0.0, 0.0), radius=1.0, fixed_direction=(1.0, 0.0))
    with pytest.raises(GeometryError):
        image_disk(through, disk)


def test_tangent_exterior_map_touches_sigma(config48):
    dom = config48.domain
    cm = tangent_exterior_map(dom, radius=0.25)
    fp = cm.fixed_point
    _, _, sd = dom.curve.project(fp[None, :])
    assert abs(sd[0]) < 1e-9
    # center sits outside, one radius away from the touch point
    _, _, sdc = dom.curve.project(np.asarray(cm.center)[None, :])
    assert sdc[0] > 0.2


def test_kelvin_transform_is_an_involution(config48, config96):
    errs = {}
    for cfg in (config48, config96):
        dom = cfg.domain
        u = Field(dom, _biharm(dom.points))
        img = kelvin_image_domain(_CMAP, dom)
        ustar = kelvin_transform(u, _CMAP, image=img)
        back = kelvin_transform(ustar, _CMAP, image=dom)
        scale = float(np.max(np.abs(u.values)))
        errs[dom.resolution] = float(np.max(np.abs(back.values - u.values))) / scale
        assert errs[dom.resolution] <= dom.dx ** 2
    # double interpolation error drops at least quadratically
    assert errs[96] <= errs[48] / 3.0


def test_kelvin_transform_preserves_biharmonicity(config48, config96):
    """The pulled-back field passes the fourth-order stencil test on the tensor core.

    One-sided collar samples are accurate pointwise but rough between
    neighbors, so the O(dx^2) stencil consistency is asserted where the
    full tensor interpolation block backed every node of the stencil.
    """
    c2 = {}
    for cfg in (config48, config96):
        dom = cfg.domain
        img = kelvin_image_domain(_CMAP, dom)
        u = Field(dom, _biharm(dom.points))
        ustar, flags = kelvin_transform(u, _CMAP, image=img, with_flags=True)
        resid, smask = apply_biharmonic_stencil(img, ustar.values)
        core = _tensor_core(img, flags) & smask
        assert np.count_nonzero(core) > 0.3 * img.n_interior
        worst = float(np.max(np.abs(resid[core])))
        assert worst <= 2000.0 * img.dx ** 2
        c2[dom.resolution] = worst / img.dx ** 2
        # scale control: a quartic with constant fourth-order signal
        control, _ = apply_biharmonic_stencil(img, np.sum(img.points ** 2, axis=1) ** 2)
        assert np.max(np.abs(control[core] - 64.0)) < 1e-4
        assert worst < 0.05 * 64.0
    # the stencil constant stays bounded under refinement
    assert c2[96] <= 1.5 * c2[48]


def test_kelvin_transform_rejects_bad_inputs(config48):
    dom = config48.domain
    u = Field(dom, _biharm(dom.points))
    with pytest.raises(GeometryError):
        kelvin_transform(u.values, _CMAP)
    # an inversion centered inside the source disk folds the image onto itself
    folded = ConformalMap(center=(-0.5, 0.0), radius=1.0, fixed_direction=(1.0, 0.0))
    with pytest.raises(GeometryError):
        kelvin_transform(u, folded)
    with pytest.raises(GeometryError):
        kelvin_image_domain(_CMAP, build_aligned_rectangle((0.0, 0.0), 1.0, 1.0, 32))
