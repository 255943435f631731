"""Gaussian-windowed analytic transform of compactly supported grid fields.

The transform is ``Tf(z) = ∫ exp(-(z-y).(z-y)/2h) f(y) dy`` with the
holomorphic (unconjugated) square in the exponent; for real z it is the
heat extension of f scaled by 2*pi*h, for complex z an entire function.
Everything here is two-dimensional.

Three evaluation routes cross-check one another:

* :func:`transform_real` — FFT convolution on the enclosing rectangle
  lattice, evaluating the whole real slice at once;
* :func:`transform_complex` — direct stabilized quadrature at one complex
  point;
* :func:`synthesize_transform` — the Fourier-side synthesis through the
  moment function F(w) = ∫ f(y) exp(-i y.w / h) dy, which is how moment
  data recovered from boundary pairings is turned back into transform
  values.

Quadratures accumulate with the largest exponent factored out; a value
whose magnitude cannot live in a double is returned as a
(log-magnitude, phase) pair instead of overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import fftconvolve

from .fields import Field
from .geometry import Domain, enclosing_rectangle

__all__ = [
    "OVERFLOW_LOG",
    "BoundSweep",
    "InversionStudy",
    "LogComplex",
    "MomentFunction",
    "bound_chain",
    "inversion_limit",
    "kernel_identity_gap",
    "moment_function",
    "synthesize_transform",
    "synthesize_transform_log",
    "transform_complex",
    "transform_complex_log",
    "transform_points",
    "transform_real",
]

# largest exponent we allow into exp() before switching to log form
OVERFLOW_LOG = 700.0


# ---------------------------------------------------------------------------
# log-space complex values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as (log of magnitude, phase).

    ``log_abs = -inf`` encodes an exact zero.  ``value`` materializes the
    double-precision complex number and raises when the magnitude
    overflows instead of silently returning inf.
    """

    log_abs: float
    phase: float

    @property
    def value(self) -> complex:
        if self.log_abs == -math.inf:
            return 0.0j
        if self.log_abs > OVERFLOW_LOG:
            raise OverflowError(
                f"magnitude exp({self.log_abs:.1f}) does not fit in a double"
            )
        return complex(math.exp(self.log_abs) * np.exp(1j * self.phase))

    @classmethod
    def from_value(cls, v: complex) -> "LogComplex":
        v = complex(v)
        if v == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(v)), math.atan2(v.imag, v.real))

    def scaled(self, log_factor: float, phase_shift: float = 0.0) -> "LogComplex":
        return LogComplex(self.log_abs + log_factor, self.phase + phase_shift)


def _stabilized_sum(weights: np.ndarray, exponents: np.ndarray) -> LogComplex:
    """log-form of sum(weights * exp(exponents)) with the peak factored out."""
    re = np.real(exponents)
    M = float(np.max(re)) if len(re) else -math.inf
    if M == -math.inf:
        return LogComplex(-math.inf, 0.0)
    s = complex(np.sum(weights * np.exp(exponents - M)))
    if s == 0:
        return LogComplex(-math.inf, 0.0)
    return LogComplex(M + math.log(abs(s)), math.atan2(s.imag, s.real))


# ---------------------------------------------------------------------------
# sampling rule
# ---------------------------------------------------------------------------


def _check_sampling(domain: Domain, h: float) -> None:
    if h <= 0:
        raise ValueError("window parameter h must be positive")
    if math.sqrt(h) < 6.0 * domain.dx:
        raise ValueError(
            f"grid too coarse for h = {h:g}: need sqrt(h) >= 6 dx = {6 * domain.dx:.4g}"
        )


def _quadrature(domain: Domain, values: np.ndarray) -> np.ndarray:
    """Cut-cell quadrature weights times the field: dx^2 kappa f."""
    v = np.asarray(values)
    if v.shape != (domain.n_interior,):
        raise ValueError("field length mismatch with domain interior")
    return domain.dx ** 2 * domain.cell_fractions() * v


# ---------------------------------------------------------------------------
# real slice: FFT convolution
# ---------------------------------------------------------------------------


def transform_real(domain: Domain, values: np.ndarray, h: float) -> Field:
    """Transform on the real slice, evaluated at every interior node.

    Embeds the quadrature-weighted field in the enclosing rectangle
    lattice, convolves with the sampled Gaussian window by zero-padded
    FFT, and restricts back to the domain nodes.  Identical quadrature to
    :func:`transform_points`, just evaluated everywhere at once.
    """
    _check_sampling(domain, h)
    rect = enclosing_rectangle(domain)
    dx = domain.dx
    i = np.rint((domain.points[:, 0] - rect.origin[0]) / dx).astype(int)
    j = np.rint((domain.points[:, 1] - rect.origin[1]) / dx).astype(int)

    wf = _quadrature(domain, values) / dx ** 2  # embed kappa*f, weight in kernel
    grid = np.zeros((rect.nx, rect.ny), dtype=wf.dtype)
    grid[i, j] = wf

    reach = int(math.ceil(9.5 * math.sqrt(h) / dx))
    offs = dx * np.arange(-reach, reach + 1)
    K = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * h)) * dx ** 2
    out = fftconvolve(grid, K, mode="same")
    return Field(domain, out[i, j])


def transform_points(
    domain: Domain, values: np.ndarray, points: np.ndarray, h: float
) -> np.ndarray:
    """Direct quadrature of the transform at arbitrary real points."""
    _check_sampling(domain, h)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    wf = _quadrature(domain, values)
    ys = domain.points
    out = np.empty(len(pts), dtype=complex if np.iscomplexobj(wf) else float)
    for k, p in enumerate(pts):
        d2 = (p[0] - ys[:, 0]) ** 2 + (p[1] - ys[:, 1]) ** 2
        out[k] = np.sum(wf * np.exp(-d2 / (2.0 * h)))
    return out


# ---------------------------------------------------------------------------
# complex points: stabilized quadrature
# ---------------------------------------------------------------------------


def transform_complex_log(
    domain: Domain, values: np.ndarray, z: Sequence[complex], h: float
) -> LogComplex:
    """Transform at one complex point, always in log form."""
    _check_sampling(domain, h)
    z = np.asarray(z, dtype=complex)
    if z.shape != (2,):
        raise ValueError("evaluation point must be a complex 2-vector")
    wf = _quadrature(domain, values)
    ys = domain.points
    expo = -((z[0] - ys[:, 0]) ** 2 + (z[1] - ys[:, 1]) ** 2) / (2.0 * h)
    return _stabilized_sum(wf, expo)


def transform_complex(
    domain: Domain, values: np.ndarray, z: Sequence[complex], h: float
) -> Union[complex, LogComplex]:
    """Transform at one complex point.

    Returns an ordinary complex number when the magnitude fits in a
    double; beyond exponent ~700 the (log-magnitude, phase) pair is
    returned instead.
    """
    lc = transform_complex_log(domain, values, z, h)
    if abs(lc.log_abs) <= OVERFLOW_LOG or lc.log_abs == -math.inf:
        return lc.value
    return lc


# ---------------------------------------------------------------------------
# moment function and Fourier-side synthesis
# ---------------------------------------------------------------------------


@dataclass
class MomentFunction:
    """F(w) = ∫ f(y) exp(-i y.w / h) dy restricted to the support of f.

    Entire in w; for w = t + i z with real t the modulus of the integrand
    is exp(y . Re z / h) uniformly in t, so batch evaluation over a real
    t-lattice splits into one amplitude vector and a pure-phase matrix.
    """

    points: np.ndarray  # support nodes (m, 2)
    weights: np.ndarray  # quadrature weights times f at the support (m,)
    h: float

    @property
    def l1(self) -> float:
        """Quadrature of |f| over the support."""
        return float(np.sum(np.abs(self.weights)))

    def __call__(self, w: Sequence[complex]) -> complex:
        return self.log_eval(w).value

    def log_eval(self, w: Sequence[complex]) -> LogComplex:
        w = np.asarray(w, dtype=complex)
        expo = (-1j / self.h) * (self.points @ w)
        return _stabilized_sum(self.weights, expo)

    def on_lattice(self, ts: np.ndarray, z: np.ndarray) -> np.ndarray:
        """F(t + i z) for every real t in ``ts`` (shape (N, 2)) at once."""
        z = np.asarray(z, dtype=complex)
        amp = self.weights * np.exp(self.points @ np.real(z) / self.h)
        shift = ts - np.imag(z)[None, :]
        out = np.empty(len(ts), dtype=complex)
        step = max(1, int(2**22 / max(1, len(self.points))))
        for k0 in range(0, len(ts), step):
            blk = shift[k0 : k0 + step]
            E = np.exp((-1j / self.h) * (self.points @ blk.T))
            out[k0 : k0 + step] = amp @ E
        return out


def moment_function(domain: Domain, values: np.ndarray, h: float) -> MomentFunction:
    """Moment function of a grid field, restricted to its support."""
    wf = _quadrature(domain, values)
    mask = np.abs(wf) > 0
    return MomentFunction(domain.points[mask], wf[mask], float(h))


def synthesize_transform_log(
    moment: MomentFunction,
    z: Sequence[complex],
    h: float,
    radius: Optional[float] = None,
    spacing: Optional[float] = None,
) -> LogComplex:
    """Transform value rebuilt from the moment function alone.

    Implements ``Tf(z) = e^{-z.z/2h} (2 pi h)^{-1} ∫ e^{-t.t/2h} F(t+iz) dt``
    on a square t-lattice.  The default spacing resolves both the Gaussian
    window (sqrt(h)/4) and the oscillation of F (pi h / 4); the default
    radius 12 sqrt(h) pushes the Gaussian tail to machine level.
    """
    z = np.asarray(z, dtype=complex)
    if radius is None:
        radius = 12.0 * math.sqrt(h)
    if spacing is None:
        spacing = min(math.sqrt(h) / 4.0, math.pi * h / 4.0)
    t1 = np.arange(-radius, radius + 0.5 * spacing, spacing)
    T = np.stack(
        [np.repeat(t1, len(t1)), np.tile(t1, len(t1))], axis=1
    )
    F = moment.on_lattice(T, z)
    gausslog = -np.sum(T ** 2, axis=1) / (2.0 * h)
    # peak-stabilized sum of exp(gausslog) * F
    mag = np.abs(F)
    nz = mag > 0
    if not np.any(nz):
        return LogComplex(-math.inf, 0.0)
    tot = gausslog[nz] + np.log(mag[nz])
    M = float(np.max(tot))
    s = complex(np.sum(np.exp(tot - M) * (F[nz] / mag[nz])))
    if s == 0:
        return LogComplex(-math.inf, 0.0)
    zz = complex(z @ z)
    log_abs = (
        -zz.real / (2.0 * h)
        + M
        + math.log(abs(s))
        + 2.0 * math.log(spacing)
        - math.log(2.0 * math.pi * h)
    )
    phase = -zz.imag / (2.0 * h) + math.atan2(s.imag, s.real)
    return LogComplex(log_abs, phase)


def synthesize_transform(
    moment: MomentFunction,
    z: Sequence[complex],
    h: float,
    radius: Optional[float] = None,
    spacing: Optional[float] = None,
) -> Union[complex, LogComplex]:
    lc = synthesize_transform_log(moment, z, h, radius, spacing)
    if abs(lc.log_abs) <= OVERFLOW_LOG or lc.log_abs == -math.inf:
        return lc.value
    return lc


def kernel_identity_gap(
    y: Sequence[float], z: Sequence[complex], h: float, n_points: int = 4001
) -> float:
    """Relative gap in the window identity, checked dimension by dimension.

    Per coordinate the window factorizes, and the claim is

        e^{-(z_k - y_k)^2 / 2h}
            = e^{-z_k^2/2h} (2 pi h)^{-1/2} ∫ e^{-t^2/2h} e^{-i y_k (t + i z_k)/h} dt

    with the integral over the real line; it is evaluated here by
    trapezoid quadrature on [-14 sqrt(h), 14 sqrt(h)].
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=complex)
    t = np.linspace(-14.0 * math.sqrt(h), 14.0 * math.sqrt(h), n_points)
    worst = 0.0
    for k in range(2):
        lhs = np.exp(-((z[k] - y[k]) ** 2) / (2.0 * h))
        integrand = np.exp(-(t ** 2) / (2.0 * h) - 1j * y[k] * (t + 1j * z[k]) / h)
        rhs = (
            np.exp(-(z[k] ** 2) / (2.0 * h))
            / math.sqrt(2.0 * math.pi * h)
            * np.trapezoid(integrand, t)
        )
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst


# ---------------------------------------------------------------------------
# inversion on the real slice
# ---------------------------------------------------------------------------


@dataclass
class InversionStudy:
    """Relative L2 error of (2 pi h)^{-1} Tf against f along an h-ladder."""

    h: np.ndarray
    errors: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        """Successive error ratios; ~2 on a halving ladder for the O(h) law."""
        return self.errors[:-1] / self.errors[1:]


def inversion_limit(
    domain: Domain, values: np.ndarray, h_values: Sequence[float]
) -> InversionStudy:
    """Heat-extension inversion study: the normalized real slice tends to f."""
    hs = np.asarray(sorted(h_values, reverse=True), dtype=float)
    kappa = domain.cell_fractions()
    v = np.asarray(values)
    ref = math.sqrt(float(np.sum(kappa * np.abs(v) ** 2)))
    errs = np.empty(len(hs))
    for k, h in enumerate(hs):
        g = transform_real(domain, v, float(h)).values / (2.0 * math.pi * h)
        errs[k] = math.sqrt(float(np.sum(kappa * np.abs(g - v) ** 2))) / ref
    return InversionStudy(hs, errs)


# ---------------------------------------------------------------------------
# the bound chain
# ---------------------------------------------------------------------------


@dataclass
class BoundSweep:
    """Pointwise log-space check of the two displayed transform bounds.

    For each sweep point the arrays hold log |Tf(z)|, the log of the
    modulus bound e^{|Im z|^2/2h} sup|f| (2 pi h), and the log of the
    split estimate

        e^{-(|Re z|^2 - |Im z|^2)/2h} ( sup_{|t| < eps a} |F(t + iz)|
            + sqrt(2) e^{|Re z_2|/h} e^{-eps^2 a^2 / 4h} ∫|f| ).

    ``log_floor`` is the triangle-inequality magnitude of the defining
    quadrature — the scale at which cancellation noise lives; the pass
    predicates allow rhs*(1+1e-6) plus 1e-3 of that floor.
    """

    z: np.ndarray
    h: np.ndarray
    log_lhs: np.ndarray
    log_rhs_modulus: np.ndarray
    log_rhs_intermediate: np.ndarray
    log_floor: np.ndarray

    def _ok(self, rhs: np.ndarray) -> np.ndarray:
        slack = np.logaddexp(rhs + math.log1p(1e-6), math.log(1e-3) + self.log_floor)
        return self.log_lhs <= slack

    @property
    def modulus_ok(self) -> np.ndarray:
        return self._ok(self.log_rhs_modulus)

    @property
    def intermediate_ok(self) -> np.ndarray:
        return self._ok(self.log_rhs_intermediate)

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.modulus_ok) and np.all(self.intermediate_ok))


def _t_ball_lattice(radius: float, spacing: float) -> np.ndarray:
    """Real t-lattice of spacing ``spacing`` filling |t| < radius (0 included)."""
    if radius <= 0:
        return np.zeros((1, 2))
    n = int(math.floor(radius / spacing))
    t1 = spacing * np.arange(-n, n + 1)
    T = np.stack([np.repeat(t1, len(t1)), np.tile(t1, len(t1))], axis=1)
    keep = np.sum(T ** 2, axis=1) < radius ** 2
    if not np.any(keep):
        return np.zeros((1, 2))
    return T[keep]


def bound_chain(
    domain: Domain,
    values: np.ndarray,
    zs: np.ndarray,
    hs: Sequence[float],
    eps: Union[float, Sequence[float]] = 0.15,
    a: Union[float, Sequence[float]] = 1.0,
) -> BoundSweep:
    """Check the modulus and split bounds at each (z, h) sweep point.

    The split bound holds for fields supported in {y1 <= 0} and is used
    with Re z1 >= 0; both prerequisites are validated.  The sup over the
    t-ball is taken on a lattice of spacing sqrt(h)/4, which can only
    under-estimate the true sup, so the check is conservative.
    """
    zs = np.atleast_2d(np.asarray(zs, dtype=complex))
    hs = np.broadcast_to(np.asarray(hs, dtype=float), (len(zs),))
    epss = np.broadcast_to(np.asarray(eps, dtype=float), (len(zs),))
    aas = np.broadcast_to(np.asarray(a, dtype=float), (len(zs),))

    wf_abs = np.abs(_quadrature(domain, values))
    support = domain.points[wf_abs > 0]
    if len(support) and support[:, 0].max() > 1e-12:
        raise ValueError("split bound needs the field supported in {y1 <= 0}")
    sup_f = float(np.max(np.abs(values)))
    l1_f = float(np.sum(wf_abs))
    ys = domain.points

    log_lhs = np.empty(len(zs))
    log_mod = np.empty(len(zs))
    log_int = np.empty(len(zs))
    log_floor = np.empty(len(zs))

    for k, z in enumerate(zs):
        h = float(hs[k])
        _check_sampling(domain, h)
        if z[0].real < 0:
            raise ValueError("split bound is used with Re z1 >= 0")
        lc = transform_complex_log(domain, values, z, h)
        log_lhs[k] = lc.log_abs

        expo_re = -np.real((z[0] - ys[:, 0]) ** 2 + (z[1] - ys[:, 1]) ** 2) / (2.0 * h)
        M = float(np.max(expo_re))
        log_floor[k] = M + math.log(
            float(np.sum(wf_abs * np.exp(expo_re - M))) + 1e-300
        )

        imz2 = float(np.sum(np.imag(z) ** 2))
        rez2 = float(np.sum(np.real(z) ** 2))
        log_mod[k] = imz2 / (2.0 * h) + math.log(sup_f * 2.0 * math.pi * h)

        mom = moment_function(domain, values, h)
        T = _t_ball_lattice(epss[k] * aas[k], math.sqrt(h) / 4.0)
        F = mom.on_lattice(T, z)
        sup_F = float(np.max(np.abs(F)))
        log_near = math.log(sup_F) if sup_F > 0 else -math.inf
        log_far = (
            0.5 * math.log(2.0)
            + abs(z[1].real) / h
            - (epss[k] * aas[k]) ** 2 / (4.0 * h)
            + math.log(l1_f)
        )
        log_int[k] = (imz2 - rez2) / (2.0 * h) + np.logaddexp(log_near, log_far)

    return BoundSweep(zs, np.asarray(hs, float), log_lhs, log_mod, log_int, log_floor)
