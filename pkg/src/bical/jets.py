"""Local polynomial jets at boundary points.

A jet is a weighted least-squares polynomial fit of an interior grid field
in a local frame (tangent, inward normal) anchored at a boundary point.
All boundary quantities the solver and the trace extraction need — the
trace, the normal derivative, the Laplacian trace and its normal
derivative, higher normal derivatives, and extrapolated exterior (ghost)
values — are linear functionals of the fitted coefficients, so each one
becomes a sparse row over the interior nodes.  Fitting once per boundary
point and reading every functional off the same jet keeps the extracted
quantities mutually consistent and smooth along the boundary.

Coordinates are scaled by the lattice pitch, so a degree-p jet reproduces
degree-p polynomials exactly and carries O(dx^(p+1-k)) error in its k-th
derivatives for smooth fields.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import sparse

from .geometry import Domain, GeometryError

# gather semi-axes (tangential, inward-normal) in lattice units; deeper in the
# normal direction so that near lattice-aligned normals still see enough
# distinct normal-depth stations to pin the normal-degree coefficients
_GATHER_LADDER = ((4.5, 6.5), (5.5, 7.5), (7.0, 9.0), (9.0, 11.5))


def _monomial_powers(degree: int) -> List[Tuple[int, int]]:
    return [(a, b) for tot in range(degree + 1) for a in range(tot + 1) for b in [tot - a]]


def gather_interior(domain: Domain, p: np.ndarray, n_in: np.ndarray, need: int):
    """Interior nodes around an anchor, in the anchor's local frame.

    Returns ``(idx, xi, eta, w)``: node ordinals, coordinates along the
    tangent / inward normal in lattice units, and plateau fitting weights.
    The gather ellipse grows through ``_GATHER_LADDER`` until at least
    ``need`` nodes fall inside it.
    """
    dx = domain.dx
    tau = np.array([-n_in[1], n_in[0]])
    i0 = int(round((p[0] - domain.origin[0]) / dx))
    j0 = int(round((p[1] - domain.origin[1]) / dx))
    for rxi, reta in _GATHER_LADDER:
        k = int(np.ceil(max(rxi, reta))) + 1
        ilo, ihi = max(i0 - k, 0), min(i0 + k, domain.nx - 1)
        jlo, jhi = max(j0 - k, 0), min(j0 + k, domain.ny - 1)
        sub = domain.ordinal[ilo : ihi + 1, jlo : jhi + 1]
        ii, jj = np.nonzero(sub >= 0)
        if len(ii) < need:
            continue
        gx = domain.origin[0] + (ii + ilo) * dx - p[0]
        gy = domain.origin[1] + (jj + jlo) * dx - p[1]
        xi = (gx * tau[0] + gy * tau[1]) / dx
        eta = (gx * n_in[0] + gy * n_in[1]) / dx
        rho = np.hypot(xi / rxi, eta / reta)
        keep = rho < 1.0
        if np.count_nonzero(keep) < need:
            continue
        idx = sub[ii[keep], jj[keep]]
        # plateau weight: near-uniform over most of the gather ellipse,
        # smooth roll-off at the rim — a sharply peaked weight would
        # shrink the effective sample below the basis size
        w = (1.0 - rho[keep] ** 6) ** 2
        return idx, xi[keep], eta[keep], w
    raise GeometryError(f"too few interior nodes near anchor {tuple(p)} for a local fit")


class LocalJets:
    """Degree-p least-squares jets at a family of anchor points.

    Parameters
    ----------
    domain : Domain
    anchors : (m, 2) anchor points (on or near the boundary).
    inward : (m, 2) unit vectors pointing into the domain at each anchor.
    degree : polynomial degree of the fit (default 4).
    """

    def __init__(
        self,
        domain: Domain,
        anchors: np.ndarray,
        inward: np.ndarray,
        degree: int = 4,
    ):
        self.domain = domain
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        self.inward = np.atleast_2d(np.asarray(inward, dtype=float))
        self.degree = degree
        self.powers = _monomial_powers(degree)
        self.n_terms = len(self.powers)
        self._fit_all()

    # -- fitting ------------------------------------------------------------
    def _fit_all(self) -> None:
        dom = self.domain
        need = int(1.3 * self.n_terms) + 1
        self._node_idx: List[np.ndarray] = []
        self._coef_map: List[np.ndarray] = []
        pw = np.asarray(self.powers)
        for p, n_in in zip(self.anchors, self.inward):
            idx, xi, eta, w = gather_interior(dom, p, n_in, need)
            P = xi[:, None] ** pw[None, :, 0] * eta[:, None] ** pw[None, :, 1]
            sw = np.sqrt(w)
            # coefficient map: c = pinv(sqrt(W) P) sqrt(W) u
            Cmap = np.linalg.pinv(sw[:, None] * P, rcond=1e-11) * sw[None, :]
            self._node_idx.append(idx)
            self._coef_map.append(Cmap)

    # -- row assembly ---------------------------------------------------------
    def _rows_from_functional(self, func_of_coeffs: np.ndarray) -> sparse.csr_matrix:
        """Assemble rows l^T c_k for a fixed coefficient functional l."""
        m = len(self._node_idx)
        rows = []
        cols = []
        vals = []
        for k in range(m):
            r = func_of_coeffs @ self._coef_map[k]
            rows.append(np.full(len(r), k))
            cols.append(self._node_idx[k])
            vals.append(r)
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, self.domain.n_interior),
        )

    def _rows_varying(self, func_rows: np.ndarray) -> sparse.csr_matrix:
        """Assemble rows with a per-anchor coefficient functional."""
        m = len(self._node_idx)
        rows = []
        cols = []
        vals = []
        for k in range(m):
            r = func_rows[k] @ self._coef_map[k]
            rows.append(np.full(len(r), k))
            cols.append(self._node_idx[k])
            vals.append(r)
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, self.domain.n_interior),
        )

    def derivative_rows(self, a: int, b: int) -> sparse.csr_matrix:
        """Rows of d^(a+b) u / d tau^a d n_in^b at the anchors (physical units)."""
        if a + b > self.degree:
            raise ValueError("derivative order exceeds jet degree")
        import math

        l = np.zeros(self.n_terms)
        for t, (pa, pb) in enumerate(self.powers):
            if pa == a and pb == b:
                l[t] = math.factorial(a) * math.factorial(b)
        return self._rows_from_functional(l / self.domain.dx ** (a + b))

    def value_rows_at(self, offsets: np.ndarray) -> sparse.csr_matrix:
        """Rows evaluating the jet at per-anchor physical offsets from anchors.

        ``offsets`` is (m, 2) in physical coordinates; each is decomposed in
        the anchor's local frame, so mild extrapolation beyond the boundary
        (ghost values) is supported.
        """
        offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        dx = self.domain.dx
        pw = np.asarray(self.powers)
        m = len(self._node_idx)
        func = np.empty((m, self.n_terms))
        for k in range(m):
            n_in = self.inward[k]
            tau = np.array([-n_in[1], n_in[0]])
            xi = (offsets[k] @ tau) / dx
            eta = (offsets[k] @ n_in) / dx
            func[k] = xi ** pw[:, 0] * eta ** pw[:, 1]
        return self._rows_varying(func)

    # -- named boundary functionals -------------------------------------------
    def trace_rows(self) -> sparse.csr_matrix:
        """u at the anchors."""
        return self.derivative_rows(0, 0)

    def normal_derivative_rows(self) -> sparse.csr_matrix:
        """Outward normal derivative: -d/dn_in."""
        return (-self.derivative_rows(0, 1)).tocsr()

    def laplacian_rows(self) -> sparse.csr_matrix:
        """Lap u at the anchors (rotation invariant)."""
        return (self.derivative_rows(2, 0) + self.derivative_rows(0, 2)).tocsr()

    def laplacian_normal_derivative_rows(self) -> sparse.csr_matrix:
        """Outward normal derivative of Lap u at the anchors."""
        return (
            -(self.derivative_rows(2, 1) + self.derivative_rows(0, 3))
        ).tocsr()

    def second_normal_rows(self) -> sparse.csr_matrix:
        """d^2 u / d nu^2 (outward normal, twice)."""
        return self.derivative_rows(0, 2)

    def third_normal_rows(self) -> sparse.csr_matrix:
        """d^3 u / d nu^3 (outward normal, three times)."""
        return (-self.derivative_rows(0, 3)).tocsr()


def boundary_jets(domain: Domain, degree: int = 4) -> LocalJets:
    """Jets anchored at the boundary samples, inward = -outward normal."""
    b = domain.boundary
    return LocalJets(domain, b.points, -b.normals, degree=degree)
