import sys

sys.path.insert(0, "src")
import numpy as np
from bical.geometry import Disk, build_domain
from bical.core import (
    assemble_bilaplacian,
    green_kernel,
    delta_source,
    nearest_interior_node,
)
from bical.fields import BoundaryData

for res in (32, 64, 96):
    dom = build_domain(Disk((0.0, 0.0), 1.0), resolution=res)
    op = assemble_bilaplacian(dom)
    x, y = dom.points.T
    ue = np.sin(np.pi * x) * np.sin(np.pi * y)
    f = 4 * np.pi ** 4 * ue
    bx, by = dom.boundary.points.T
    g0 = np.sin(np.pi * bx) * np.sin(np.pi * by)
    gx = np.pi * np.cos(np.pi * bx) * np.sin(np.pi * by)
    gy = np.pi * np.sin(np.pi * bx) * np.cos(np.pi * by)
    nrm = dom.boundary.normals
    g1 = gx * nrm[:, 0] + gy * nrm[:, 1]
    u = op.solve(f, BoundaryData(dom, g0, g1))
    t0, t1 = op.cauchy_traces(u)
    e0 = np.abs(t0 - g0).max()
    e1 = np.abs(t1 - g1).max()
    print(f"res={res}: bc errors T0={e0:.2e} T1={e1:.2e}")

# green kernel on curved domain: pairing + zero Cauchy + reciprocity order
for res in (32, 64):
    dom = build_domain(Disk((0.0, 0.0), 1.0), resolution=res)
    op = assemble_bilaplacian(dom)
    rng = np.random.default_rng(3)
    yi = nearest_interior_node(dom, (0.31, -0.12))
    xj = nearest_interior_node(dom, (-0.4, 0.33))
    gy = green_kernel(op, yi)
    gx_ = green_kernel(op, xj)
    rec = abs(gy.values[xj] - gx_.values[yi]) / abs(gy.values[xj])
    phi = rng.standard_normal(dom.n_interior)
    pair = gy.inner(phi)
    direct = op.solve(phi).values[yi]
    t0, t1 = op.cauchy_traces(gy)
    print(
        f"res={res}: reciprocity rel={rec:.2e} pairing rel="
        f"{abs(pair - direct)/abs(direct):.2e} "
        f"kernel bc: |T0|max={np.abs(t0).max():.2e} |T1|max={np.abs(t1).max():.2e}"
    )
