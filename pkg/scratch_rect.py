import sys, time

sys.path.insert(0, "src")
import numpy as np
from bical.geometry import (
    Disk,
    build_domain,
    build_aligned_rectangle,
    enclosing_rectangle,
    lattice_injection,
)
from bical.core import (
    assemble_bilaplacian,
    solve_dirichlet,
    green_kernel,
    delta_source,
    nearest_interior_node,
)
from bical.fields import BoundaryData

# --- rectangle convergence ---
for res in (32, 64):
    rect = build_aligned_rectangle((0.0, 0.0), 1.0, 1.0, res)
    op = assemble_bilaplacian(rect)
    asym = abs(op.A - op.A.T).max()
    x, y = rect.points.T
    ue = np.sin(np.pi * x) * np.sin(np.pi * y)  # clamped-ish: zero bc values
    f = 4 * np.pi ** 4 * ue
    bx, by = rect.boundary.points.T
    g0 = np.sin(np.pi * bx) * np.sin(np.pi * by)
    gx = np.pi * np.cos(np.pi * bx) * np.sin(np.pi * by)
    gy = np.pi * np.sin(np.pi * bx) * np.cos(np.pi * by)
    g1 = gx * rect.boundary.normals[:, 0] + gy * rect.boundary.normals[:, 1]
    u = op.solve(f, BoundaryData(rect, g0, g1))
    err = rect.dx * np.linalg.norm(u.values - ue)
    print(f"rect res={res}: N={rect.n_interior} asym={asym:.2e} L2err={err:.3e}")

# nonzero bc on rectangle: u* = x^3 y^3-ish smooth
res = 48
rect = build_aligned_rectangle((-0.25, 0.1), 1.5, 1.0, res)
op = assemble_bilaplacian(rect)
x, y = rect.points.T


def ustar(x, y):
    return np.exp(0.7 * x) * np.sin(1.3 * y + 0.4) + 0.3 * x ** 2 * y


def lap2(x, y):
    # Delta^2 of exp(.7x) sin(1.3y+.4): (0.7^2 - 1.3^2)^2 factor... compute directly
    a, b = 0.7, 1.3
    return (a ** 2 - b ** 2) ** 2 * np.exp(a * x) * np.sin(b * y + 0.4)


bx, by = rect.boundary.points.T
a, b = 0.7, 1.3
g0 = ustar(bx, by)
gx = a * np.exp(a * bx) * np.sin(b * by + 0.4) + 0.6 * bx * by
gy = b * np.exp(a * bx) * np.cos(b * by + 0.4) + 0.3 * bx ** 2
g1 = gx * rect.boundary.normals[:, 0] + gy * rect.boundary.normals[:, 1]
u = op.solve(lap2(x, y), BoundaryData(rect, g0, g1))
err = rect.dx * np.linalg.norm(u.values - ustar(x, y))
rel = err / (rect.dx * np.linalg.norm(ustar(x, y)))
print(f"rect nonzero-bc res={res}: relL2={rel:.3e}")

# --- reciprocity on the rectangle ---
rect = build_aligned_rectangle((0.0, 0.0), 1.0, 1.0, 40)
op = assemble_bilaplacian(rect)
rng = np.random.default_rng(7)
nodes = rng.choice(rect.n_interior, size=6, replace=False)
worst = 0.0
cols = {n: green_kernel(op, int(n)).values for n in nodes}
for i in nodes:
    for j in nodes:
        if i < j:
            gij = cols[i][j]
            gji = cols[j][i]
            worst = max(worst, abs(gij - gji) / max(abs(gij), 1e-300))
print(f"reciprocity worst rel: {worst:.2e}")

# --- exact pairing: dx^2 sum(G(x,.) phi) == solve(phi)(x) ---
phi = rng.standard_normal(rect.n_interior)
uphi = op.solve(phi).values
x0 = int(nodes[0])
pair = rect.dx ** 2 * np.dot(cols[x0], phi)
print(f"pairing rel err: {abs(pair - uphi[x0]) / abs(uphi[x0]):.2e}")

# --- zero Cauchy data of kernel columns: ends at boundary? check decay
col = cols[x0]
# value at nodes adjacent to outline should be O(dx^2)-small * curvature... just print max near-edge value
ii, jj = np.nonzero(rect.interior)
edge = (ii == 1) | (ii == rect.nx - 2) | (jj == 1) | (jj == rect.ny - 2)
print(f"kernel near-edge max: {np.abs(col[edge]).max():.2e} (interior max {np.abs(col).max():.2e})")

# --- lattice injection round trip ---
dom = build_domain(Disk((-1.0, 0.0), 1.0), resolution=40)
rect2 = enclosing_rectangle(dom, margin=0.4)
inj = lattice_injection(rect2, dom)
print(f"injection ok: {inj.shape == (dom.n_interior,)} min={inj.min()} max={inj.max()} unique={len(np.unique(inj)) == dom.n_interior}")
