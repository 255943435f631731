"""Field containers: interior grid functions and boundary Cauchy pairs.

A ``Field`` stores one value per interior lattice node of a ``Domain`` in
ordinal order (real or complex).  ``BoundaryData`` stores a Cauchy pair
(g0, g1) = (trace, normal-derivative trace) on the boundary samples.

Both ship deterministic text/binary serialization: CSV with fixed "%.12g"
formatting for human-facing output, and a raw little-endian dump with a
one-line header for exact round-trips.  No timestamps are written anywhere,
so byte-identical reruns produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import Domain

_FMT = "%.12g"


def domain_signature(domain: Domain) -> str:
    """Short stable hash of the lattice + interior mask + boundary table."""
    h = hashlib.sha256()
    h.update(np.int64([domain.nx, domain.ny]).tobytes())
    h.update(np.float64([domain.dx, *domain.origin]).tobytes())
    h.update(domain.interior.tobytes())
    h.update(np.ascontiguousarray(domain.boundary.points, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


@dataclass
class Field:
    """Values on the interior nodes of a domain, ordinal order."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.domain.n_interior,):
            raise ValueError(
                f"field length {self.values.shape} != interior count {self.domain.n_interior}"
            )

    @classmethod
    def zeros(cls, domain: Domain, dtype=float) -> "Field":
        return cls(domain, np.zeros(domain.n_interior, dtype=dtype))

    @classmethod
    def from_function(cls, domain: Domain, fn) -> "Field":
        pts = domain.points
        return cls(domain, np.asarray(fn(pts[:, 0], pts[:, 1])))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def on_grid(self, fill=np.nan) -> np.ndarray:
        """Scatter values onto the (nx, ny) lattice; exterior filled."""
        g = np.full((self.domain.nx, self.domain.ny), fill, dtype=self.values.dtype)
        ii, jj = np.nonzero(self.domain.interior)
        g[ii, jj] = self.values
        return g

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Field):
            return Field(self.domain, self.values + other.values)
        return Field(self.domain, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            return Field(self.domain, self.values - other.values)
        return Field(self.domain, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            return Field(self.domain, self.values * other.values)
        return Field(self.domain, self.values * other)

    __rmul__ = __mul__

    def conj(self) -> "Field":
        return Field(self.domain, np.conj(self.values))

    # -- norms ---------------------------------------------------------------
    def norm_l2(self) -> float:
        """Grid L2 norm: dx * sqrt(sum |u|^2)."""
        return float(self.domain.dx * np.linalg.norm(self.values))

    def norm_max(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def inner(self, other) -> complex:
        """Domain L2 pairing dx^2 * sum(kappa * u * v)  (no conjugation).

        kappa are the cut-cell quadrature weights of the domain, so the
        pairing is a second-order quadrature of the area integral of u*v.
        `other` may be a Field on the same domain or a bare nodal vector.
        """
        ov = other.values if isinstance(other, Field) else np.asarray(other)
        kappa = self.domain.cell_fractions()
        return complex(self.domain.dx ** 2 * np.sum(kappa * self.values * ov))

    # -- io --------------------------------------------------------------------
    def save_csv(self, path: str) -> None:
        pts = self.domain.points
        v = self.values
        with open(path, "w") as fh:
            fh.write("x,y,re,im\n")
            re = np.real(v)
            im = np.imag(v)
            for k in range(len(v)):
                fh.write(
                    f"{_FMT % pts[k,0]},{_FMT % pts[k,1]},{_FMT % re[k]},{_FMT % im[k]}\n"
                )

    def save_raw(self, path: str) -> None:
        """Exact binary dump: one header line, then little-endian values."""
        v = np.ascontiguousarray(self.values)
        kind = "c16" if self.is_complex else "f8"
        data = v.astype("<" + kind).tobytes()
        header = (
            f"bical-field v1 dtype={kind} n={len(v)} "
            f"domain={domain_signature(self.domain)}\n"
        )
        with open(path, "wb") as fh:
            fh.write(header.encode())
            fh.write(data)

    @classmethod
    def load_raw(cls, domain: Domain, path: str) -> "Field":
        with open(path, "rb") as fh:
            header = fh.readline().decode().split()
            raw = fh.read()
        meta = dict(kv.split("=") for kv in header[2:])
        if header[:2] != ["bical-field", "v1"]:
            raise ValueError(f"bad field header {header}")
        if meta["domain"] != domain_signature(domain):
            raise ValueError("field file belongs to a different domain")
        v = np.frombuffer(raw, dtype="<" + meta["dtype"]).copy()
        return cls(domain, v)


@dataclass
class BoundaryData:
    """Cauchy pair on the boundary samples: trace g0 and normal trace g1."""

    domain: Domain
    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        self.g0 = np.asarray(self.g0)
        self.g1 = np.asarray(self.g1)
        m = self.domain.n_boundary
        if self.g0.shape != (m,) or self.g1.shape != (m,):
            raise ValueError("Cauchy data length mismatch with boundary sampling")

    @classmethod
    def zeros(cls, domain: Domain, dtype=float) -> "BoundaryData":
        m = domain.n_boundary
        return cls(domain, np.zeros(m, dtype=dtype), np.zeros(m, dtype=dtype))

    @classmethod
    def from_functions(cls, domain: Domain, f0, f1) -> "BoundaryData":
        p = domain.boundary.points
        return cls(
            domain,
            np.asarray(f0(p[:, 0], p[:, 1])),
            np.asarray(f1(p[:, 0], p[:, 1])),
        )

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.g0) or np.iscomplexobj(self.g1)

    def restricted_to_sigma(self) -> "BoundaryData":
        """Zero out the gamma arc (data supported on sigma only)."""
        m = self.domain.sigma_mask
        return BoundaryData(self.domain, np.where(m, self.g0, 0.0), np.where(m, self.g1, 0.0))

    def supported_in_sigma(self, tol: float = 0.0) -> bool:
        gm = self.domain.gamma_mask
        return bool(
            np.all(np.abs(self.g0[gm]) <= tol) and np.all(np.abs(self.g1[gm]) <= tol)
        )

    def __add__(self, other: "BoundaryData") -> "BoundaryData":
        return BoundaryData(self.domain, self.g0 + other.g0, self.g1 + other.g1)

    def __sub__(self, other: "BoundaryData") -> "BoundaryData":
        return BoundaryData(self.domain, self.g0 - other.g0, self.g1 - other.g1)

    def __mul__(self, scalar) -> "BoundaryData":
        return BoundaryData(self.domain, self.g0 * scalar, self.g1 * scalar)

    __rmul__ = __mul__

    def save_csv(self, path: str) -> None:
        b = self.domain.boundary
        with open(path, "w") as fh:
            fh.write("s,x,y,label,g0_re,g0_im,g1_re,g1_im\n")
            for k in range(self.domain.n_boundary):
                fh.write(
                    f"{_FMT % b.s[k]},{_FMT % b.points[k,0]},{_FMT % b.points[k,1]},"
                    f"{b.labels[k]},"
                    f"{_FMT % np.real(self.g0[k])},{_FMT % np.imag(self.g0[k])},"
                    f"{_FMT % np.real(self.g1[k])},{_FMT % np.imag(self.g1[k])}\n"
                )
