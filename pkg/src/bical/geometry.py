"""Grid-embedded smooth 2D domains with a partitioned boundary.

A domain is a smooth closed curve, star-shaped about its center, embedded in
a uniform Cartesian lattice.  The boundary is sampled at (approximately)
equal arclength spacing matching the lattice pitch; every boundary sample
carries its parameter angle, arclength coordinate, outward unit normal,
curvature, a quadrature weight, and an accessibility label: ``sigma`` for
the accessible part of the boundary, ``gamma`` for the inaccessible
remainder.  Interior nodes are lattice nodes strictly inside the curve.

The module also provides the inversion map fixing a chosen boundary point,
the weight-conjugated pullback that preserves biharmonic functions (the
fourth-order analogue of the Kelvin transform), the support function
``H_K(y) = max_{x in K} x . y`` of finite node sets, and a versioned text
serialization of domains (format documented in docs/domain-file-format.md).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

SIGMA = "sigma"
GAMMA = "gamma"

_DENSE_THETA = 8192  # samples for spline/arclength tables

DOMAIN_FORMAT_VERSION = 1


class GeometryError(ValueError):
    """Raised for malformed shapes, arcs, resolutions or map evaluations."""


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------


def _smoothstep5(t: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 monotone in between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class Disk:
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def radius_of(self, theta: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(theta, dtype=float), self.radius)

    def params(self) -> dict:
        return {"kind": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class SmoothedStadium:
    """Stadium-like smooth oval: polar superellipse |x/a|^p + |y/b|^p = 1."""

    center: Tuple[float, float] = (0.0, 0.0)
    half_length: float = 1.0
    half_width: float = 0.6
    power: int = 4

    def radius_of(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        p = float(self.power)
        c = np.abs(np.cos(theta)) ** p / self.half_length ** p
        s = np.abs(np.sin(theta)) ** p / self.half_width ** p
        return (c + s) ** (-1.0 / p)

    def params(self) -> dict:
        return {
            "kind": "smoothed-stadium",
            "center": list(self.center),
            "half_length": self.half_length,
            "half_width": self.half_width,
            "power": self.power,
        }


@dataclass(frozen=True)
class DentedDisk:
    """Disk with a smooth radial dent; realizes nested-domain pockets."""

    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    dent_angle: float = 0.0
    dent_half_width: float = 0.8
    dent_depth: float = 0.2

    def radius_of(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        d = np.angle(np.exp(1j * (theta - self.dent_angle)))
        bump = _smoothstep5(1.0 - np.abs(d) / self.dent_half_width)
        return self.radius * (1.0 - self.dent_depth * bump)

    def params(self) -> dict:
        return {
            "kind": "dented-disk",
            "center": list(self.center),
            "radius": self.radius,
            "dent_angle": self.dent_angle,
            "dent_half_width": self.dent_half_width,
            "dent_depth": self.dent_depth,
        }


SHAPE_KINDS = {"disk": Disk, "smoothed-stadium": SmoothedStadium, "dented-disk": DentedDisk}


def shape_from_params(params: dict):
    kind = params.get("kind")
    if kind == "disk":
        return Disk(tuple(params["center"]), float(params["radius"]))
    if kind == "smoothed-stadium":
        return SmoothedStadium(
            tuple(params["center"]),
            float(params["half_length"]),
            float(params["half_width"]),
            int(params.get("power", 4)),
        )
    if kind == "dented-disk":
        return DentedDisk(
            tuple(params["center"]),
            float(params["radius"]),
            float(params["dent_angle"]),
            float(params["dent_half_width"]),
            float(params["dent_depth"]),
        )
    raise GeometryError(f"unknown shape kind {kind!r}")


# ---------------------------------------------------------------------------
# star-shaped curve machinery
# ---------------------------------------------------------------------------


class StarCurve:
    """Closed curve r(theta) about a center, with spline-backed calculus.

    Provides points, tangents, outward normals, curvature, an arclength
    table, nearest-point projection and a star-shaped interior test.  All
    shapes in this module are star-shaped about their center, which keeps
    the interior test exact and the projection Newton solve well seeded.
    """

    def __init__(self, shape):
        self.shape = shape
        self.center = np.asarray(shape.center, dtype=float)
        theta = np.linspace(0.0, 2.0 * math.pi, _DENSE_THETA + 1)
        r = shape.radius_of(theta)
        r[-1] = r[0]
        self._spline = CubicSpline(theta, r, bc_type="periodic")
        self._dspline = self._spline.derivative(1)
        self._d2spline = self._spline.derivative(2)
        # arclength table on a finer grid
        tf = np.linspace(0.0, 2.0 * math.pi, 4 * _DENSE_THETA + 1)
        rf = self._spline(tf)
        drf = self._dspline(tf)
        speed = np.sqrt(rf * rf + drf * drf)
        ds = np.diff(tf) * 0.5 * (speed[:-1] + speed[1:])
        s = np.concatenate([[0.0], np.cumsum(ds)])
        self.perimeter = float(s[-1])
        self._theta_table = tf
        self._s_table = s

    # -- wrapped radius helpers -------------------------------------------
    def _wrap(self, theta):
        return np.mod(theta, 2.0 * math.pi)

    def radius(self, theta):
        return self._spline(self._wrap(theta))

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        return self.center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def velocity(self, theta):
        theta = np.asarray(theta, dtype=float)
        tw = self._wrap(theta)
        r = self._spline(tw)
        dr = self._dspline(tw)
        ct, st = np.cos(theta), np.sin(theta)
        vx = dr * ct - r * st
        vy = dr * st + r * ct
        return np.stack([vx, vy], axis=-1)

    def acceleration(self, theta):
        theta = np.asarray(theta, dtype=float)
        tw = self._wrap(theta)
        r = self._spline(tw)
        dr = self._dspline(tw)
        d2r = self._d2spline(tw)
        ct, st = np.cos(theta), np.sin(theta)
        ax = (d2r - r) * ct - 2.0 * dr * st
        ay = (d2r - r) * st + 2.0 * dr * ct
        return np.stack([ax, ay], axis=-1)

    def outward_normal(self, theta):
        v = self.velocity(theta)
        n = np.stack([v[..., 1], -v[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def curvature(self, theta):
        theta = np.asarray(theta, dtype=float)
        tw = self._wrap(theta)
        r = self._spline(tw)
        dr = self._dspline(tw)
        d2r = self._d2spline(tw)
        num = r * r + 2.0 * dr * dr - r * d2r
        den = (r * r + dr * dr) ** 1.5
        return num / den

    def arclength_of(self, theta):
        return np.interp(self._wrap(theta), self._theta_table, self._s_table)

    def theta_of_arclength(self, s):
        s = np.mod(s, self.perimeter)
        return np.interp(s, self._s_table, self._theta_table)

    def contains(self, points) -> np.ndarray:
        """Star-shaped interior test (strict)."""
        points = np.asarray(points, dtype=float)
        d = points - self.center
        rho = np.hypot(d[..., 0], d[..., 1])
        theta = np.arctan2(d[..., 1], d[..., 0])
        return rho < self.radius(theta)

    def project(self, points, newton_iters: int = 8):
        """Nearest boundary point.

        Returns (theta, foot, signed_distance); the distance is negative
        inside the curve, positive outside.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = points - self.center
        theta = np.arctan2(d[:, 1], d[:, 0])
        for _ in range(newton_iters):
            p = self.point(theta)
            v = self.velocity(theta)
            a = self.acceleration(theta)
            diff = points - p
            f = np.einsum("ij,ij->i", diff, v)
            vv = np.einsum("ij,ij->i", v, v)
            fp = -vv + np.einsum("ij,ij->i", diff, a)
            # fp ~ -|v|^2 near the optimum; guard the deep-interior nodes
            # where the second term can cancel it
            fp = np.where(np.abs(fp) < 0.1 * vv, -vv, fp)
            step = np.clip(f / fp, -0.5, 0.5)
            theta = theta - step
        foot = self.point(theta)
        normal = self.outward_normal(theta)
        diff = points - foot
        dist = np.einsum("ij,ij->i", diff, normal)
        return theta, foot, dist

    def bbox(self):
        th = self._theta_table
        pts = self.point(th)
        return (
            float(pts[:, 0].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].min()),
            float(pts[:, 1].max()),
        )


# ---------------------------------------------------------------------------
# boundary arcs and labels
# ---------------------------------------------------------------------------


def _clipped_cell_fraction(
    centers: np.ndarray, feet: np.ndarray, outward: np.ndarray, dx: float
) -> np.ndarray:
    """Fraction of each square cell on the inner side of a tangent line.

    Each cell is the axis-aligned square of side ``dx`` around ``centers[k]``;
    the line passes through ``feet[k]`` with outward normal ``outward[k]``.
    The square is clipped against the inner halfplane and the remaining
    polygon area is returned relative to ``dx**2``.
    """
    h = 0.5 * dx
    corner_off = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
    frac = np.empty(len(centers))
    for k, (c, ft, nrm) in enumerate(zip(centers, feet, outward)):
        poly = c + corner_off
        side = (poly - ft) @ nrm  # > 0 means outside
        clipped: list = []
        m = len(poly)
        for i in range(m):
            p, q = poly[i], poly[(i + 1) % m]
            sp, sq = side[i], side[(i + 1) % m]
            if sp <= 0.0:
                clipped.append(p)
            if (sp < 0.0) != (sq < 0.0) and sp != sq:
                t = sp / (sp - sq)
                clipped.append(p + t * (q - p))
        if len(clipped) < 3:
            frac[k] = 0.0
            continue
        v = np.asarray(clipped)
        area = 0.5 * abs(
            np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        )
        frac[k] = area / (dx * dx)
    return frac


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(a, dtype=float)))


@dataclass(frozen=True)
class SigmaArc:
    """Accessible boundary arc, as an angular interval of the curve parameter.

    ``half_width >= pi`` marks the whole boundary accessible (full data);
    the inaccessible arc gamma is the complement.
    """

    center_angle: float = 0.0
    half_width: float = math.pi / 2

    def contains(self, theta) -> np.ndarray:
        if self.half_width >= math.pi:
            return np.ones_like(np.asarray(theta, dtype=float), dtype=bool)
        return np.abs(wrap_angle(np.asarray(theta) - self.center_angle)) <= self.half_width

    @property
    def gamma_center(self) -> float:
        return float(wrap_angle(self.center_angle + math.pi))

    @property
    def gamma_half_width(self) -> float:
        return max(math.pi - self.half_width, 0.0)


@dataclass
class BoundaryTable:
    theta: np.ndarray
    s: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    weights: np.ndarray
    labels: np.ndarray  # array of str, SIGMA or GAMMA


# ---------------------------------------------------------------------------
# the embedded Domain
# ---------------------------------------------------------------------------


@dataclass
class Domain:
    """A smooth domain embedded in a uniform lattice.

    Attributes
    ----------
    shape : one of the shape dataclasses above
    sigma : SigmaArc
    resolution : nodes per unit length (dx = 1/resolution)
    origin : coordinates of lattice node (0, 0)
    nx, ny : lattice extents
    interior : bool (nx, ny), True on interior nodes
    ordinal : int (nx, ny), ordinal of interior nodes, -1 elsewhere
    points : (N, 2) coordinates of interior nodes in ordinal order
    boundary : BoundaryTable of curve samples
    curve : StarCurve backing the shape
    """

    shape: object
    sigma: SigmaArc
    resolution: int
    dx: float
    origin: Tuple[float, float]
    nx: int
    ny: int
    interior: np.ndarray
    ordinal: np.ndarray
    points: np.ndarray
    boundary: BoundaryTable
    curve: StarCurve = field(repr=False)

    # -- basic props ---------------------------------------------------------
    @property
    def n_interior(self) -> int:
        return self.points.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.points.shape[0]

    @property
    def perimeter(self) -> float:
        return self.curve.perimeter

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.curve.bbox()
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def sigma_mask(self) -> np.ndarray:
        return self.boundary.labels == SIGMA

    @property
    def gamma_mask(self) -> np.ndarray:
        return self.boundary.labels == GAMMA

    def grid_axes(self):
        x = self.origin[0] + self.dx * np.arange(self.nx)
        y = self.origin[1] + self.dx * np.arange(self.ny)
        return x, y

    def cell_fractions(self) -> np.ndarray:
        """Inside-area fraction of each interior node's lattice cell.

        Cells cut by the boundary are clipped against the tangent line at
        the node's boundary projection, so node sums ``dx^2 sum(kappa * g)``
        integrate over the domain without the O(dx) staircase error of the
        plain lattice sum.  Computed once and cached on the domain.
        """
        cached = getattr(self, "_cell_fractions", None)
        if cached is not None:
            return cached
        kappa = np.ones(self.n_interior)
        # only cells whose center is within half a diagonal of the curve
        # can be cut
        reach = self.dx * math.sqrt(0.5) * 1.0001
        theta, foot, dist = self.curve.project(self.points)
        near = dist > -reach  # dist is negative inside
        if np.any(near):
            normals = self.curve.outward_normal(theta[near])
            kappa[near] = _clipped_cell_fraction(
                self.points[near], foot[near], normals, self.dx
            )
        object.__setattr__(self, "_cell_fractions", kappa)
        return kappa

    def node_point(self, i, j):
        return np.array([self.origin[0] + self.dx * i, self.origin[1] + self.dx * j])

    def lattice_points(self):
        x, y = self.grid_axes()
        return np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1)

    # -- boundary interpolation ----------------------------------------------
    def boundary_interp_rows(self, s_query: np.ndarray):
        """Periodic cubic Lagrange weights in arclength.

        Returns (idx (m,4), w (m,4)) such that value(s_query) ~= sum w * g[idx].
        Handles the (mildly) non-uniform sample spacing of hybrid samplings.
        """
        s = self.boundary.s
        P = self.perimeter
        m = len(s)
        sq = np.mod(np.asarray(s_query, dtype=float), P)
        k = np.searchsorted(s, sq, side="right") - 1
        k = np.clip(k, 0, m - 1)
        idx = np.stack([(k - 1) % m, k % m, (k + 1) % m, (k + 2) % m], axis=-1)
        # unwrap the bracket abscissae relative to the base sample
        sk = s[idx]
        base = s[k]
        for c in range(4):
            col = sk[..., c]
            col = np.where(col - base > P / 2, col - P, col)
            col = np.where(col - base < -P / 2, col + P, col)
            sk[..., c] = col
        sq_un = np.where(sq - base > P / 2, sq - P, sq)
        sq_un = np.where(sq_un - base < -P / 2, sq_un + P, sq_un)
        w = np.ones_like(sk)
        for a in range(4):
            for b in range(4):
                if a == b:
                    continue
                w[..., a] *= (sq_un - sk[..., b]) / (sk[..., a] - sk[..., b])
        return idx, w

    def interp_boundary_values(self, values: np.ndarray, s_query: np.ndarray):
        idx, w = self.boundary_interp_rows(s_query)
        return np.sum(values[idx] * w, axis=-1)

    # -- serialization ---------------------------------------------------------
    def save(self, path: str) -> None:
        b = self.boundary
        with open(path, "w") as fh:
            fh.write(f"bical-domain v{DOMAIN_FORMAT_VERSION}\n")
            fh.write("shape " + json.dumps(self.shape.params(), sort_keys=True) + "\n")
            fh.write(
                "sigma "
                + json.dumps(
                    {"center_angle": self.sigma.center_angle, "half_width": self.sigma.half_width}
                )
                + "\n"
            )
            fh.write(f"resolution {self.resolution}\n")
            fh.write(f"dx {float(self.dx)!r}\n")
            fh.write(f"origin {float(self.origin[0])!r} {float(self.origin[1])!r}\n")
            fh.write(f"lattice {self.nx} {self.ny}\n")
            fh.write(f"interior-nodes {self.n_interior}\n")
            ii, jj = np.nonzero(self.interior)
            for i, j in zip(ii, jj):
                fh.write(f"{i} {j}\n")
            fh.write(f"boundary-nodes {self.n_boundary}\n")
            for k in range(self.n_boundary):
                row = (
                    b.theta[k], b.s[k], b.points[k, 0], b.points[k, 1],
                    b.normals[k, 0], b.normals[k, 1], b.curvature[k], b.weights[k],
                )
                fh.write(" ".join(repr(float(v)) for v in row) + f" {b.labels[k]}\n")

    @staticmethod
    def load(path: str) -> "Domain":
        with open(path) as fh:
            header = fh.readline().split()
            if header[:1] != ["bical-domain"] or header[1] != f"v{DOMAIN_FORMAT_VERSION}":
                raise GeometryError(f"unsupported domain file header: {header}")
            shape = shape_from_params(json.loads(fh.readline()[len("shape "):]))
            sg = json.loads(fh.readline()[len("sigma "):])
            sigma = SigmaArc(sg["center_angle"], sg["half_width"])
            resolution = int(fh.readline().split()[1])
            dx = float(fh.readline().split()[1])
            parts = fh.readline().split()
            origin = (float(parts[1]), float(parts[2]))
            parts = fh.readline().split()
            nx, ny = int(parts[1]), int(parts[2])
            n_int = int(fh.readline().split()[1])
            interior = np.zeros((nx, ny), dtype=bool)
            for _ in range(n_int):
                i, j = fh.readline().split()
                interior[int(i), int(j)] = True
            n_bnd = int(fh.readline().split()[1])
            rows = [fh.readline().split() for _ in range(n_bnd)]
        theta = np.array([float(r[0]) for r in rows])
        s = np.array([float(r[1]) for r in rows])
        pts = np.array([[float(r[2]), float(r[3])] for r in rows])
        nrm = np.array([[float(r[4]), float(r[5])] for r in rows])
        curv = np.array([float(r[6]) for r in rows])
        wts = np.array([float(r[7]) for r in rows])
        labels = np.array([r[8] for r in rows])
        boundary = BoundaryTable(theta, s, pts, nrm, curv, wts, labels)
        curve = StarCurve(shape)
        ordinal = -np.ones((nx, ny), dtype=np.int64)
        ii, jj = np.nonzero(interior)
        ordinal[ii, jj] = np.arange(len(ii))
        points = np.stack([origin[0] + dx * ii, origin[1] + dx * jj], axis=-1)
        return Domain(
            shape, sigma, resolution, dx, origin, nx, ny, interior, ordinal, points, boundary, curve
        )


def _sample_boundary(curve: StarCurve, sigma: SigmaArc, dx: float) -> BoundaryTable:
    m = max(16, int(round(curve.perimeter / dx)))
    s = (np.arange(m) + 0.5) * curve.perimeter / m
    theta = curve.theta_of_arclength(s)
    return _boundary_table_from_theta(curve, sigma, theta, s)


def _boundary_table_from_theta(curve, sigma, theta, s) -> BoundaryTable:
    pts = curve.point(theta)
    nrm = curve.outward_normal(theta)
    curv = curve.curvature(theta)
    # midpoint weights from the (periodic) arclength gaps
    P = curve.perimeter
    sp = np.concatenate([s, [s[0] + P]])
    gaps = np.diff(sp)
    w = 0.5 * (gaps + np.roll(gaps, 1))
    labels = np.where(sigma.contains(theta), SIGMA, GAMMA)
    return BoundaryTable(theta, s, pts, nrm, curv, w, labels.astype(object))


def build_domain(shape, resolution: int, sigma: Optional[SigmaArc] = None) -> Domain:
    """Embed a shape into a uniform lattice at the given resolution.

    ``resolution`` is the node count per unit length (dx = 1/resolution).
    ``sigma`` defaults to the full boundary.
    """
    if resolution < 16:
        raise GeometryError(f"resolution {resolution} too coarse; need >= 16")
    if sigma is None:
        sigma = SigmaArc(0.0, math.pi)
    if sigma.half_width <= 0:
        raise GeometryError("empty accessible arc")
    curve = StarCurve(shape)
    dx = 1.0 / float(resolution)
    x0, x1, y0, y1 = curve.bbox()
    margin = 3.0 * dx
    ox = x0 - margin
    oy = y0 - margin
    nx = int(math.ceil((x1 + margin - ox) / dx)) + 1
    ny = int(math.ceil((y1 + margin - oy) / dx)) + 1
    xs = ox + dx * np.arange(nx)
    ys = oy + dx * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    interior = curve.contains(pts).reshape(nx, ny)
    ordinal = -np.ones((nx, ny), dtype=np.int64)
    ii, jj = np.nonzero(interior)
    if len(ii) == 0:
        raise GeometryError("no interior nodes; shape degenerate at this resolution")
    ordinal[ii, jj] = np.arange(len(ii))
    points = np.stack([ox + dx * ii, oy + dx * jj], axis=-1)
    boundary = _sample_boundary(curve, sigma, dx)
    if not np.any(boundary.labels == SIGMA):
        raise GeometryError("sigma arc contains no boundary nodes")
    return Domain(
        shape, sigma, resolution, dx, (ox, oy), nx, ny, interior, ordinal, points, boundary, curve
    )


# ---------------------------------------------------------------------------
# lattice-aligned rectangles
# ---------------------------------------------------------------------------


@dataclass
class GridRectangle:
    """Rectangle whose boundary lies exactly on lattice lines.

    Interior nodes are the strictly inside lattice nodes; the outline
    nodes are not unknowns but carry Dirichlet data, and the normal slope
    is imposed by reflection across the outline, so the discrete clamped
    operator on this domain is exactly symmetric.  Used as the enlarged
    hold-all domain for kernel columns; shares lattice pitch and phase
    with the embedded curved domains so nodal values inject directly.
    """

    resolution: int
    dx: float
    origin: Tuple[float, float]
    nx: int
    ny: int
    interior: np.ndarray
    ordinal: np.ndarray
    points: np.ndarray
    boundary: BoundaryTable
    outline_ordinal: np.ndarray
    curve: object = field(default=None, repr=False)

    @property
    def n_interior(self) -> int:
        return self.points.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.points.shape[0]

    def grid_axes(self):
        x = self.origin[0] + self.dx * np.arange(self.nx)
        y = self.origin[1] + self.dx * np.arange(self.ny)
        return x, y

    def cell_fractions(self) -> np.ndarray:
        return np.ones(self.n_interior)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x1 = self.origin[0] + (self.nx - 1) * self.dx
        y1 = self.origin[1] + (self.ny - 1) * self.dx
        return (
            (p[:, 0] > self.origin[0])
            & (p[:, 0] < x1)
            & (p[:, 1] > self.origin[1])
            & (p[:, 1] < y1)
        )


def build_aligned_rectangle(
    origin: Tuple[float, float], width: float, height: float, resolution: int
) -> GridRectangle:
    """Rectangle [x0, x0+width] x [y0, y0+height] on the lattice.

    Width and height are rounded up to whole lattice pitches.
    """
    if resolution < 4:
        raise GeometryError(f"resolution {resolution} too coarse for a rectangle")
    dx = 1.0 / float(resolution)
    nx = int(math.ceil(width / dx - 1e-12)) + 1
    ny = int(math.ceil(height / dx - 1e-12)) + 1
    if nx < 5 or ny < 5:
        raise GeometryError("rectangle too small: needs >= 5 lattice lines per side")
    interior = np.zeros((nx, ny), dtype=bool)
    interior[1:-1, 1:-1] = True
    ordinal = -np.ones((nx, ny), dtype=np.int64)
    ii, jj = np.nonzero(interior)
    ordinal[ii, jj] = np.arange(len(ii))
    points = np.stack([origin[0] + dx * ii, origin[1] + dx * jj], axis=-1)

    # outline nodes, counterclockwise from the lower-left corner
    oi = np.concatenate(
        [
            np.arange(nx),
            np.full(ny - 2, nx - 1),
            np.arange(nx - 1, -1, -1),
            np.zeros(ny - 2, dtype=int),
        ]
    )
    oj = np.concatenate(
        [
            np.zeros(nx, dtype=int),
            np.arange(1, ny - 1),
            np.full(nx, ny - 1),
            np.arange(ny - 2, 0, -1),
        ]
    )
    outline_ordinal = -np.ones((nx, ny), dtype=np.int64)
    outline_ordinal[oi, oj] = np.arange(len(oi))
    opts = np.stack([origin[0] + dx * oi, origin[1] + dx * oj], axis=-1)
    normals = np.zeros_like(opts)
    normals[oj == 0, 1] = -1.0
    normals[oi == nx - 1, 0] = 1.0
    normals[oj == ny - 1, 1] = 1.0
    normals[oi == 0, 0] = -1.0
    nr = np.linalg.norm(normals, axis=1)
    normals /= nr[:, None]
    # the outline is a closed polyline with uniform node spacing dx, so the
    # periodic midpoint rule weights every node (corners included) by dx
    weights = np.full(len(oi), dx)
    s = np.concatenate([[0.0], np.cumsum(np.full(len(oi) - 1, dx))])
    table = BoundaryTable(
        theta=np.zeros(len(oi)),
        s=s,
        points=opts,
        normals=normals,
        curvature=np.zeros(len(oi)),
        weights=weights,
        labels=np.array([SIGMA] * len(oi)),
    )
    return GridRectangle(
        resolution, dx, tuple(origin), nx, ny, interior, ordinal, points, table,
        outline_ordinal,
    )


def enclosing_rectangle(domain: Domain, margin: float = 0.4) -> GridRectangle:
    """Aligned rectangle containing the domain, on the same lattice.

    The rectangle's lattice coincides with the domain's (same pitch and
    phase), so interior nodes of the domain are nodes of the rectangle.
    """
    dx = domain.dx
    x0, x1, y0, y1 = domain.curve.bbox()
    i0 = int(math.floor((x0 - margin - domain.origin[0]) / dx))
    i1 = int(math.ceil((x1 + margin - domain.origin[0]) / dx))
    j0 = int(math.floor((y0 - margin - domain.origin[1]) / dx))
    j1 = int(math.ceil((y1 + margin - domain.origin[1]) / dx))
    origin = (domain.origin[0] + i0 * dx, domain.origin[1] + j0 * dx)
    rect = build_aligned_rectangle(
        origin, (i1 - i0) * dx, (j1 - j0) * dx, domain.resolution
    )
    return rect


def lattice_injection(rect: GridRectangle, domain: Domain) -> np.ndarray:
    """Rectangle ordinals of the domain's interior nodes.

    Requires the shared-lattice alignment guaranteed by
    ``enclosing_rectangle``.
    """
    dx = rect.dx
    i = np.rint((domain.points[:, 0] - rect.origin[0]) / dx).astype(int)
    j = np.rint((domain.points[:, 1] - rect.origin[1]) / dx).astype(int)
    if (
        np.max(np.abs(rect.origin[0] + i * dx - domain.points[:, 0])) > 1e-9 * dx
        or np.max(np.abs(rect.origin[1] + j * dx - domain.points[:, 1])) > 1e-9 * dx
    ):
        raise GeometryError("lattices are not aligned; cannot inject nodal values")
    ords = rect.ordinal[i, j]
    if np.any(ords < 0):
        raise GeometryError("domain node falls outside the rectangle interior")
    return ords


# ---------------------------------------------------------------------------
# normalized configuration
# ---------------------------------------------------------------------------


@dataclass
class NormalizedConfiguration:
    """Domain in the normalized chart: interior inside B(-e1, 1), gamma far left.

    ``c`` is the separation constant: every gamma-labeled boundary node has
    x1 < -2c, and cutoffs built for this configuration must be supported in
    {x1 < -c} on the boundary.
    """

    domain: Domain
    c: float

    @classmethod
    def from_domain(cls, domain: Domain, c: Optional[float] = None) -> "NormalizedConfiguration":
        pts = domain.points
        r = np.hypot(pts[:, 0] + 1.0, pts[:, 1])
        if np.any(r >= 1.0):
            raise GeometryError("interior nodes must satisfy |x + e1| < 1")
        gm = domain.gamma_mask
        if not np.any(gm):
            raise GeometryError("normalized configuration needs a non-empty gamma arc")
        gx_max = float(domain.boundary.points[gm, 0].max())
        c_max = -gx_max / 2.0
        if c_max <= 0:
            raise GeometryError("gamma arc reaches x1 >= 0; cannot normalize")
        if c is None:
            c = c_max * (1.0 - 1e-9)
        if c <= 0 or c > c_max:
            raise GeometryError(f"c = {c} incompatible with gamma arc (max usable {c_max})")
        if np.any(domain.boundary.points[gm, 0] >= -2.0 * c):
            raise GeometryError("gamma nodes must satisfy x1 < -2c")
        return cls(domain, float(c))


def standard_configuration(
    resolution: int,
    gamma_half_width: float = 0.65,
    radius: float = 1.0,
) -> NormalizedConfiguration:
    """Disk at (-1, 0) with gamma centered on the far-left boundary point."""
    shape = Disk(center=(-1.0, 0.0), radius=radius)
    sigma = SigmaArc(center_angle=0.0, half_width=math.pi - gamma_half_width)
    dom = build_domain(shape, resolution, sigma)
    return NormalizedConfiguration.from_domain(dom)


# ---------------------------------------------------------------------------
# support function
# ---------------------------------------------------------------------------


def support_function(points: np.ndarray, y: np.ndarray) -> float:
    """H_K(y) = max over the node set K of x . y."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise GeometryError("support function of an empty set")
    y = np.asarray(y, dtype=float)
    return float(np.max(points @ y))


# ---------------------------------------------------------------------------
# conformal (inversion) map and biharmonic Kelvin pullback
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalMap:
    """Inversion in the circle of radius r about a, fixing x0 = a + r*u.

    psi(x) = a + r^2 (x - a) / |x - a|^2.  The map is an involution and
    maps the exterior tangent configuration used by the normalization into
    the ball B(a, r).
    """

    center: Tuple[float, float]
    radius: float
    fixed_direction: Tuple[float, float]

    @property
    def fixed_point(self) -> np.ndarray:
        u = np.asarray(self.fixed_direction, dtype=float)
        u = u / np.linalg.norm(u)
        return np.asarray(self.center, dtype=float) + self.radius * u

    def psi(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        a = np.asarray(self.center, dtype=float)
        d = points - a
        q = np.sum(d * d, axis=-1, keepdims=True)
        if np.any(q < 1e-28):
            raise GeometryError("conformal map evaluated at its center")
        return a + (self.radius ** 2) * d / q

    def kelvin_weight(self, points: np.ndarray, n: int = 2) -> np.ndarray:
        """Weight r^(n-4) |x - a|^(4-n) multiplying the pullback."""
        points = np.asarray(points, dtype=float)
        a = np.asarray(self.center, dtype=float)
        dist = np.linalg.norm(points - a, axis=-1)
        if np.any(dist < 1e-14):
            raise GeometryError("Kelvin weight evaluated at the map center")
        return self.radius ** (n - 4) * dist ** (4 - n)


def tangent_exterior_map(domain: Domain, radius: Optional[float] = None) -> ConformalMap:
    """Exterior ball tangent to the domain at the sigma point nearest the origin.

    Picks the boundary point of the sigma arc closest to the origin as the
    fixed point x0 and centers the inversion ball outside the domain along
    the outward normal there.
    """
    b = domain.boundary
    sm = domain.sigma_mask
    if not np.any(sm):
        raise GeometryError("domain has no sigma nodes")
    k = int(np.argmin(np.hypot(b.points[sm, 0], b.points[sm, 1])))
    idx = np.nonzero(sm)[0][k]
    x0 = b.points[idx]
    nu = b.normals[idx]
    if radius is None:
        radius = 0.25
    center = x0 + radius * nu
    return ConformalMap(tuple(center), float(radius), tuple(-nu))


def image_disk(cmap: ConformalMap, disk: Disk) -> Disk:
    """The inversion image of a circle not through the map center."""
    a = np.asarray(cmap.center, dtype=float)
    c0 = np.asarray(disk.center, dtype=float)
    d = c0 - a
    s = float(d @ d) - disk.radius ** 2
    if abs(s) < 1e-14:
        raise GeometryError("circle passes through the inversion center")
    center = a + (cmap.radius ** 2 / s) * d
    radius = cmap.radius ** 2 * disk.radius / abs(s)
    return Disk(tuple(center), radius)


def kelvin_image_domain(cmap: ConformalMap, domain: Domain) -> Domain:
    """Image of a disk domain under the inversion, on the same lattice pitch.

    The image of a circle avoiding the map center is again a circle, so the
    image domain is rebuilt exactly; labels keep the full boundary
    accessible (arc labels do not transport through an inversion).
    """
    shape = getattr(domain, "shape", None)
    if not isinstance(shape, Disk):
        raise GeometryError("image domains are built for disk shapes only")
    return build_domain(image_disk(cmap, shape), domain.resolution)


def kelvin_transform(
    u,
    cmap: ConformalMap,
    n: int = 2,
    image: Optional[Domain] = None,
    order: int = 5,
    with_flags: bool = False,
):
    """Weight-conjugated inversion pullback of an interior field.

    Returns the field ``u*(x) = r^(n-4) |x - a|^(4-n) u(psi(x))`` sampled on
    the interior nodes of the image domain; a biharmonic input stays
    biharmonic up to the interpolation error.  ``u`` must be a Field; the
    image domain defaults to the rebuilt inversion image of its disk and
    the off-lattice values of u come from interpolation of order >= 2
    (default 5, which keeps the image's fourth-order stencil residual at
    the O(dx^2) consistency level instead of being swamped by rough
    interpolation error).

    The map center must lie outside the closed image; otherwise some image
    node would invert to an unbounded or exterior position.

    With ``with_flags`` the returned pair carries a boolean vector marking
    the image nodes whose preimage had the full tensor interpolation
    stencil; only there does the sampled field support high-order
    difference stencils at full consistency (one-sided fallback sampling
    in the collar is accurate but rough between neighboring nodes).
    """
    from .fields import Field as _Field
    from .interp import evaluate as _evaluate, tensor_stencil_flags as _flags

    if not isinstance(u, _Field):
        raise GeometryError("kelvin_transform expects an interior Field")
    domain = u.domain
    if image is None:
        image = kelvin_image_domain(cmap, domain)
    a = np.asarray(cmap.center, dtype=float)
    _, _, sd = image.curve.project(a[None, :])
    if sd[0] <= image.dx:
        raise GeometryError(
            "inversion center lies inside (or touches) the image domain"
        )
    pre = cmap.psi(image.points)
    vals = _evaluate(domain, u.values, pre, order=order)
    weight = cmap.kelvin_weight(image.points, n=n)
    out = _Field(image, weight * vals)
    if not with_flags:
        return out
    return out, _flags(domain, pre, order=order)
