"""Perturbed fourth-order solves and the linearized boundary map.

The forward problem is ``Lap^2 u + Q u = 0`` with clamped Cauchy data
``(u, du/dn)`` prescribed on the boundary and supported on the accessible
arc sigma.  The perturbation ``Q`` is a differential operator of order at
most two (an optional third-order part is carried for forward evaluation
only),

    Q u = a0 u + a1 . grad u + a2 Lap u  (+ a3 : D^3 u),

with coefficient fields living on the interior lattice nodes.  This module
assembles the perturbed collocation matrix, exposes the boundary map

    f = (f0, f1) |-> (d^2 u/dn^2, d^3 u/dn^3) restricted to sigma,

its derivative in Q, the volume bilinear form of a perturbation, and the
volume-versus-boundary duality identity that the derivative satisfies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .core import DiscreteOperator, SolverError, diff_ops
from .fields import BoundaryData, Field
from .geometry import Domain

__all__ = [
    "PerturbationQ",
    "CauchyQuadruple",
    "DualityResult",
    "LinearizationStudy",
    "apply_Q",
    "perturbation_matrix",
    "perturbed_operator",
    "solve_P_Q",
    "boundary_map",
    "frechet_derivative_B",
    "bilinear_form",
    "duality_check",
    "linearization_order",
    "random_perturbation",
    "random_sigma_data",
]

# condition estimate above which a factorization is treated as singular
# (zero sitting in the spectrum of the perturbed operator)
CONDITION_LIMIT = 1e14

# multi-index order of the four independent third-derivative components
A3_MULTI_INDEX = ("xxx", "xxy", "xyy", "yyy")
_A3_MULTIPLICITY = np.array([1.0, 3.0, 3.0, 1.0])


@dataclass
class PerturbationQ:
    """Coefficient bundle of a lower-order perturbation.

    Parameters
    ----------
    domain : Domain
    a0 : (N,) array or None
        Zeroth-order coefficient on interior nodes.
    a1 : (N, 2) array or None
        First-order coefficient (vector field).
    a2 : (N,) array or None
        Second-order coefficient; acts through the Laplacian.
    a3 : (N, 4) array or None, optional
        Symmetric third-order coefficient stored by multi-index in the
        order ``xxx, xxy, xyy, yyy`` (symmetry is implied by the storage).
        Forward application only; solves and bilinear forms reject it.

    Missing components are treated as zero.  Because coefficients are
    stored per interior node they vanish outside the interior mask by
    construction.
    """

    domain: Domain
    a0: Optional[np.ndarray] = None
    a1: Optional[np.ndarray] = None
    a2: Optional[np.ndarray] = None
    a3: Optional[np.ndarray] = None

    def __post_init__(self):
        N = self.domain.n_interior
        if self.a0 is not None:
            self.a0 = np.asarray(self.a0)
            if self.a0.shape != (N,):
                raise ValueError(f"a0 must have shape ({N},), got {self.a0.shape}")
        if self.a1 is not None:
            self.a1 = np.asarray(self.a1)
            if self.a1.shape != (N, 2):
                raise ValueError(f"a1 must have shape ({N}, 2), got {self.a1.shape}")
        if self.a2 is not None:
            self.a2 = np.asarray(self.a2)
            if self.a2.shape != (N,):
                raise ValueError(f"a2 must have shape ({N},), got {self.a2.shape}")
        if self.a3 is not None:
            self.a3 = np.asarray(self.a3)
            if self.a3.shape != (N, 4):
                raise ValueError(
                    f"a3 must have shape ({N}, 4) in multi-index storage "
                    f"{A3_MULTI_INDEX}, got {self.a3.shape}"
                )

    @classmethod
    def zero(cls, domain: Domain) -> "PerturbationQ":
        return cls(domain)

    @property
    def order(self) -> int:
        """Highest differential order with a nonzero coefficient."""
        for k, a in ((3, self.a3), (2, self.a2), (1, self.a1), (0, self.a0)):
            if a is not None and np.any(a != 0):
                return k
        return -1  # the zero perturbation

    @property
    def sup_norm(self) -> float:
        out = 0.0
        for a in (self.a0, self.a1, self.a2, self.a3):
            if a is not None and a.size:
                out = max(out, float(np.max(np.abs(a))))
        return out

    @property
    def is_complex(self) -> bool:
        return any(
            a is not None and np.iscomplexobj(a)
            for a in (self.a0, self.a1, self.a2, self.a3)
        )

    def _binary(self, other: "PerturbationQ", op) -> "PerturbationQ":
        if other.domain is not self.domain:
            raise ValueError("perturbations live on different domains")

        def comb(a, b):
            if a is None and b is None:
                return None
            if a is None:
                return op(0.0, b)
            if b is None:
                return op(a, 0.0)
            return op(a, b)

        return PerturbationQ(
            self.domain,
            comb(self.a0, other.a0),
            comb(self.a1, other.a1),
            comb(self.a2, other.a2),
            comb(self.a3, other.a3),
        )

    def __add__(self, other: "PerturbationQ") -> "PerturbationQ":
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other: "PerturbationQ") -> "PerturbationQ":
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, scalar) -> "PerturbationQ":
        return PerturbationQ(
            self.domain,
            None if self.a0 is None else scalar * self.a0,
            None if self.a1 is None else scalar * self.a1,
            None if self.a2 is None else scalar * self.a2,
            None if self.a3 is None else scalar * self.a3,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "PerturbationQ":
        return self * (-1.0)


def _third_derivative_ops(domain: Domain):
    """Composed third-derivative matrices (xxx, xxy, xyy, yyy), cached."""
    hit = getattr(domain, "_third_ops", None)
    if hit is not None:
        return hit
    ops = diff_ops(domain)
    out = (
        (ops.Dx @ ops.Dxx).tocsr(),
        (ops.Dy @ ops.Dxx).tocsr(),
        (ops.Dx @ ops.Dyy).tocsr(),
        (ops.Dy @ ops.Dyy).tocsr(),
    )
    domain._third_ops = out
    return out


def _a3_margin_mask(domain: Domain) -> np.ndarray:
    """Interior nodes with a full two-node margin along both axes.

    Third derivatives are formed by composing one-sided first and second
    difference operators; within this margin every factor is centered and
    the composition keeps second-order accuracy.
    """
    hit = getattr(domain, "_a3_margin", None)
    if hit is not None:
        return hit
    inter = domain.interior
    nx, ny = domain.nx, domain.ny
    ii, jj = np.nonzero(inter)
    ok = np.ones(ii.shape, dtype=bool)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        for k in (1, 2):
            i2, j2 = ii + k * di, jj + k * dj
            inb = (0 <= i2) & (i2 < nx) & (0 <= j2) & (j2 < ny)
            here = np.zeros(ii.shape, dtype=bool)
            here[inb] = inter[i2[inb], j2[inb]]
            ok &= here
    domain._a3_margin = ok
    return ok


def perturbation_matrix(Q: PerturbationQ) -> sparse.csr_matrix:
    """Sparse matrix of ``u -> Q u`` on interior nodes.

    First and second derivatives come from the masked interior difference
    operators (centered with one-sided fallback), so rows near the boundary
    never reference ghost values and the bilaplacian's boundary elimination
    is untouched by the perturbation.
    """
    domain = Q.domain
    N = domain.n_interior
    dtype = complex if Q.is_complex else float
    M = sparse.csr_matrix((N, N), dtype=dtype)
    ops = diff_ops(domain)
    if Q.a0 is not None:
        M = M + sparse.diags(Q.a0.astype(dtype))
    if Q.a1 is not None:
        M = M + sparse.diags(Q.a1[:, 0].astype(dtype)) @ ops.Dx
        M = M + sparse.diags(Q.a1[:, 1].astype(dtype)) @ ops.Dy
    if Q.a2 is not None:
        M = M + sparse.diags(Q.a2.astype(dtype)) @ ops.Lap
    if Q.a3 is not None:
        margin = _a3_margin_mask(domain)
        bad = ~margin & np.any(Q.a3 != 0, axis=1)
        if np.any(bad):
            raise ValueError(
                f"a3 is nonzero at {int(bad.sum())} node(s) without the "
                "two-node stencil margin needed for third differences"
            )
        third = _third_derivative_ops(domain)
        for k in range(4):
            coeff = _A3_MULTIPLICITY[k] * Q.a3[:, k]
            if np.any(coeff != 0):
                M = M + sparse.diags(coeff.astype(dtype)) @ third[k]
    return M.tocsr()


def apply_Q(Q: PerturbationQ, u: Union[Field, np.ndarray]) -> Field:
    """Evaluate ``Q u`` on interior nodes."""
    uv = u.values if isinstance(u, Field) else np.asarray(u)
    if uv.shape != (Q.domain.n_interior,):
        raise ValueError("field length mismatch with the perturbation's domain")
    return Field(Q.domain, perturbation_matrix(Q) @ uv)


def perturbed_operator(op: DiscreteOperator, Q: PerturbationQ) -> DiscreteOperator:
    """Collocation operator of ``Lap^2 + Q`` with its own factorization.

    The boundary-elimination blocks are shared with the unperturbed
    operator: the perturbation rows only touch interior nodes.  The
    result is nonsymmetric whenever Q is nonzero.
    """
    if Q.domain is not op.domain:
        raise ValueError("perturbation and operator live on different domains")
    if Q.is_complex:
        raise ValueError("perturbed solves require real coefficients")
    M = perturbation_matrix(Q)
    A_Q = (op.A + M).tocsc()
    out = DiscreteOperator(op.domain, A_Q, op.Rg0, op.Rg1, symmetric=False)
    out._jets = op._jets  # share the boundary jets if already built
    return out


def check_invertible(op: DiscreteOperator, limit: float = CONDITION_LIMIT) -> float:
    """Factorize and estimate conditioning; raise if zero looks like an eigenvalue.

    Returns the 1-norm condition estimate.  A factorization failure or an
    estimate above ``limit`` raises SolverError: for the clamped problem
    this signals that zero is (numerically) an eigenvalue of the perturbed
    operator, so the boundary map is not defined at this Q.
    """
    op.lu  # factorize now; raises SolverError on breakdown
    kappa = op.condition_estimate()
    if not np.isfinite(kappa) or kappa > limit:
        raise SolverError(
            f"perturbed operator is numerically singular "
            f"(condition estimate {kappa:.2e} exceeds {limit:.0e}); "
            "zero appears to be an eigenvalue"
        )
    return kappa


def solve_P_Q(
    opQ: DiscreteOperator,
    f: BoundaryData,
    check_condition: bool = False,
) -> Field:
    """Clamped solve of the perturbed problem with sigma-supported data.

    Parameters
    ----------
    opQ : DiscreteOperator
        Output of perturbed_operator (or the unperturbed assembly for Q=0).
    f : BoundaryData
        Cauchy pair; must vanish on the inaccessible arc.
    check_condition : bool
        Run the conditioning screen before the first solve with this
        factorization (cached on the operator).
    """
    if f.domain is not opQ.domain:
        raise ValueError("boundary data lives on a different domain")
    if not f.supported_in_sigma(tol=0.0):
        raise ValueError("Cauchy data must vanish on the inaccessible arc")
    if check_condition and not getattr(opQ, "_condition_ok", False):
        check_invertible(opQ)
        opQ._condition_ok = True
    return opQ.solve(bc=f)


@dataclass
class CauchyQuadruple:
    """Boundary jet (u, du/dn, d2u/dn2, d3u/dn3) at the boundary samples.

    When ``sigma_only`` is True all four rows are zero on the inaccessible
    arc: the quadruple represents data measured on sigma alone.
    """

    domain: Domain
    t0: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    sigma_only: bool = False

    @classmethod
    def from_field(
        cls,
        op: DiscreteOperator,
        u: Union[Field, np.ndarray],
        sigma_only: bool = False,
    ) -> "CauchyQuadruple":
        uv = u.values if isinstance(u, Field) else np.asarray(u)
        jets = op.trace_jets
        rows = (
            jets.trace_rows(),
            jets.normal_derivative_rows(),
            jets.second_normal_rows(),
            jets.third_normal_rows(),
        )
        t = [R @ uv for R in rows]
        if sigma_only:
            sm = op.domain.sigma_mask
            t = [np.where(sm, tk, 0.0) for tk in t]
        return cls(op.domain, *t, sigma_only=sigma_only)

    def restricted_to_sigma(self) -> "CauchyQuadruple":
        sm = self.domain.sigma_mask
        return CauchyQuadruple(
            self.domain,
            np.where(sm, self.t0, 0.0),
            np.where(sm, self.t1, 0.0),
            np.where(sm, self.t2, 0.0),
            np.where(sm, self.t3, 0.0),
            sigma_only=True,
        )

    def __sub__(self, other: "CauchyQuadruple") -> "CauchyQuadruple":
        return CauchyQuadruple(
            self.domain,
            self.t0 - other.t0,
            self.t1 - other.t1,
            self.t2 - other.t2,
            self.t3 - other.t3,
            sigma_only=self.sigma_only and other.sigma_only,
        )

    def __add__(self, other: "CauchyQuadruple") -> "CauchyQuadruple":
        return CauchyQuadruple(
            self.domain,
            self.t0 + other.t0,
            self.t1 + other.t1,
            self.t2 + other.t2,
            self.t3 + other.t3,
            sigma_only=self.sigma_only and other.sigma_only,
        )

    def __mul__(self, scalar) -> "CauchyQuadruple":
        return CauchyQuadruple(
            self.domain,
            self.t0 * scalar,
            self.t1 * scalar,
            self.t2 * scalar,
            self.t3 * scalar,
            sigma_only=self.sigma_only,
        )

    __rmul__ = __mul__

    def pair_norm(self) -> float:
        """Weighted L2 norm of the measured pair (t2, t3) on the boundary."""
        w = self.domain.boundary.weights
        return float(
            math.sqrt(np.sum(w * (np.abs(self.t2) ** 2 + np.abs(self.t3) ** 2)))
        )

    def save_csv(self, path: str) -> None:
        b = self.domain.boundary
        cols = (self.t0, self.t1, self.t2, self.t3)
        with open(path, "w") as fh:
            fh.write("s,label,t0,t1,t2,t3\n")
            for k in range(self.domain.n_boundary):
                row = ",".join("%.12g" % np.real(c[k]) for c in cols)
                fh.write(f"{'%.12g' % b.s[k]},{b.labels[k]},{row}\n")


def boundary_map(opQ: DiscreteOperator, f: BoundaryData) -> CauchyQuadruple:
    """Partial-data boundary map: solve, then read traces on sigma.

    The measured components are the second and third normal derivatives
    (slots t2, t3 of the quadruple); t0, t1 reproduce the prescribed data
    up to extraction error and are kept for diagnostics.
    """
    u = solve_P_Q(opQ, f)
    return CauchyQuadruple.from_field(opQ, u, sigma_only=True)


def frechet_derivative_B(
    opQ: DiscreteOperator,
    H: PerturbationQ,
    f: BoundaryData,
    u: Optional[Field] = None,
) -> CauchyQuadruple:
    """Derivative of the boundary map at Q in direction H, applied to f.

    Computes ``w`` solving the perturbed problem with volume source
    ``-H u`` and zero Cauchy data, where ``u`` is the perturbed solve with
    data f, and returns the boundary quadruple of w on sigma.  Passing a
    precomputed ``u`` skips the inner solve.
    """
    if u is None:
        u = solve_P_Q(opQ, f)
    Hu = apply_Q(H, u)
    w = opQ.solve(f=-Hu.values)
    return CauchyQuadruple.from_field(opQ, w, sigma_only=True)


@dataclass
class LinearizationStudy:
    """Finite-difference probe of the boundary-map derivative."""

    ts: Tuple[float, ...]
    defects: Tuple[float, ...]
    orders: Tuple[float, ...]

    @property
    def order(self) -> float:
        return self.orders[-1]


def linearization_order(
    op: DiscreteOperator,
    Q: PerturbationQ,
    H: PerturbationQ,
    f: BoundaryData,
    ts: Sequence[float] = (1e-2, 5e-3),
) -> LinearizationStudy:
    """Ratio test of the derivative: defect(t) = |N(Q+tH)f - N(Q)f - t BHf|.

    The defect should shrink like t^2; consecutive orders are
    log(defect ratio)/log(t ratio).
    """
    ts = tuple(float(t) for t in ts)
    if len(ts) < 2:
        raise ValueError("need at least two step sizes")
    opQ = op if Q.order < 0 else perturbed_operator(op, Q)
    u = solve_P_Q(opQ, f)
    base = CauchyQuadruple.from_field(opQ, u, sigma_only=True)
    deriv = frechet_derivative_B(opQ, H, f, u=u)
    defects = []
    for t in ts:
        opT = perturbed_operator(op, Q + t * H)
        stepped = boundary_map(opT, f)
        defects.append((stepped - base - t * deriv).pair_norm())
    orders = tuple(
        math.log(defects[k] / defects[k + 1]) / math.log(ts[k] / ts[k + 1])
        for k in range(len(ts) - 1)
    )
    return LinearizationStudy(ts, tuple(defects), orders)


def bilinear_form(
    H: PerturbationQ,
    u: Union[Field, np.ndarray],
    v: Union[Field, np.ndarray],
) -> complex:
    """Volume pairing  integral of (a2 Lap u + a1 . grad u + a0 u) v.

    Restricted to perturbations of order at most two.  Quadrature uses the
    cut-cell weights, so fields sampled on interior nodes integrate with
    second-order accuracy.
    """
    if H.a3 is not None and np.any(H.a3 != 0):
        raise ValueError("bilinear form is defined for orders <= 2 only")
    domain = H.domain
    uv = u.values if isinstance(u, Field) else np.asarray(u)
    vv = v.values if isinstance(v, Field) else np.asarray(v)
    Hu = perturbation_matrix(H) @ uv
    kappa = domain.cell_fractions()
    out = domain.dx ** 2 * np.sum(kappa * Hu * vv)
    return complex(out) if np.iscomplexobj(out) else float(out)


@dataclass
class DualityResult:
    """Volume and boundary evaluations of the derivative pairing."""

    volume: float
    boundary: float

    @property
    def gap(self) -> float:
        scale = max(abs(self.volume), abs(self.boundary), 1e-300)
        return abs(self.volume - self.boundary) / scale


def duality_check(
    op: DiscreteOperator,
    H: PerturbationQ,
    f: BoundaryData,
    g: BoundaryData,
) -> DualityResult:
    """Volume-versus-boundary identity for the derivative at Q = 0.

    With u = P0 f, v = P0 g and w the zero-data solve with source -H u,

        - int_Omega (H u) v
            = int_sigma [ -g1 . Lap w + g0 . d(Lap w)/dn ] ds ,

    both sides being the pairing of the derivative with g.  The integrand
    on the right vanishes identically on the inaccessible arc because g
    does, so the integral runs over sigma-labelled samples only.
    """
    if H.a3 is not None and np.any(H.a3 != 0):
        raise ValueError("duality pairing is defined for orders <= 2 only")
    if not g.supported_in_sigma(tol=0.0):
        raise ValueError("test data must vanish on the inaccessible arc")
    domain = op.domain
    u = solve_P_Q(op, f)
    v = solve_P_Q(op, g)
    Hu = apply_Q(H, u)
    w = op.solve(f=-Hu.values)
    T2, T3 = op.laplacian_traces(w.values)
    sm = domain.sigma_mask
    wgt = domain.boundary.weights[sm]
    boundary = float(np.sum(wgt * (-g.g1[sm] * T2[sm] + g.g0[sm] * T3[sm])))
    kappa = domain.cell_fractions()
    volume = -float(domain.dx ** 2 * np.sum(kappa * Hu.values * v.values))
    return DualityResult(volume, boundary)


# ---------------------------------------------------------------------------
# study helpers: random smooth inputs
# ---------------------------------------------------------------------------


def _interior_bump(domain: Domain, center, radius: float) -> np.ndarray:
    p = domain.points
    r2 = ((p[:, 0] - center[0]) ** 2 + (p[:, 1] - center[1]) ** 2) / radius ** 2
    out = np.zeros(domain.n_interior)
    m = r2 < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - r2[m]))
    return out


def random_perturbation(
    domain: Domain,
    rng: np.random.Generator,
    orders: Sequence[int] = (0, 1, 2),
    scale: float = 1.0,
    clearance: float = 0.2,
) -> PerturbationQ:
    """Smooth compactly supported perturbation with the requested orders.

    Each requested coefficient is a pair of interior bump functions with
    random centers, radii and signs.  Supports keep ``clearance`` away
    from the boundary so high-order boundary extraction never touches the
    coefficients.
    """
    curve = domain.curve
    center = np.asarray(curve.center, dtype=float)

    def draw_scalar():
        out = np.zeros(domain.n_interior)
        for _ in range(2):
            for _try in range(256):
                rad = rng.uniform(0.2, 0.4)
                ang = rng.uniform(0.0, 2.0 * math.pi)
                room = float(curve.radius(ang)) - 1.1 * (rad + clearance)
                if room <= 0.0:
                    continue
                c = center + rng.uniform(0.0, room) * np.array(
                    [math.cos(ang), math.sin(ang)]
                )
                _, _, sd = curve.project(c[None, :])
                if sd[0] <= -(rad + clearance):
                    break
            else:
                raise RuntimeError("could not place a bump inside the domain")
            out += rng.uniform(0.4, 1.0) * rng.choice([-1.0, 1.0]) * _interior_bump(
                domain, c, rad
            )
        return scale * out

    a0 = draw_scalar() if 0 in orders else None
    a1 = np.column_stack([draw_scalar(), draw_scalar()]) if 1 in orders else None
    a2 = draw_scalar() if 2 in orders else None
    return PerturbationQ(domain, a0, a1, a2)


def random_sigma_data(
    domain: Domain,
    rng: np.random.Generator,
    margin: float = 0.15,
) -> BoundaryData:
    """Smooth random Cauchy pair supported strictly inside sigma.

    Both components are windowed trigonometric polynomials in arclength;
    the window is a C^2 bump vanishing within ``margin`` (arclength) of
    the arc endpoints, so refinement never moves support onto the
    inaccessible arc.
    """
    b = domain.boundary
    sm = domain.sigma_mask
    if not np.any(sm):
        raise ValueError("domain has no accessible arc")
    s = b.s
    per = domain.perimeter
    # the inaccessible arc is an s-interval; sigma wraps around it
    gs = np.sort(s[~sm])
    if gs.size:
        gaps = np.diff(np.concatenate([gs, [gs[0] + per]]))
        k = int(np.argmax(gaps))
        lo = (gs[k] + margin) % per          # sigma start, with margin
        span = gaps[k] - 2.0 * margin
    else:
        lo, span = 0.0, per
    if span <= 0:
        raise ValueError("margin eats the whole accessible arc")
    tau = ((s - lo) % per) / span            # in [0, 1] on the window
    window = np.zeros_like(s)
    m = (tau > 0.0) & (tau < 1.0)
    x = tau[m]
    window[m] = (x * (1.0 - x) * 4.0) ** 3   # C^2 at the endpoints

    def trig():
        out = np.zeros_like(s)
        for k in range(1, 4):
            amp = rng.normal(size=2) / k
            out += amp[0] * np.cos(2.0 * math.pi * k * tau) + amp[1] * np.sin(
                2.0 * math.pi * k * tau
            )
        return out + rng.normal()

    g0 = window * trig()
    g1 = window * trig()
    g0[~m] = 0.0
    g1[~m] = 0.0
    return BoundaryData(domain, g0, g1)
