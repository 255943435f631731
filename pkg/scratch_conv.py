import sys, time

sys.path.insert(0, "src")
import numpy as np
from bical.geometry import Disk, build_domain
from bical.core import assemble_bilaplacian, solve_dirichlet
from bical.fields import BoundaryData


def run(res):
    t0 = time.time()
    dom = build_domain(Disk((0.0, 0.0), 1.0), resolution=res)
    op = assemble_bilaplacian(dom)
    x, y = dom.points.T
    ue = np.sin(np.pi * x) * np.sin(np.pi * y)
    f = 4 * np.pi ** 4 * ue
    bx, by = dom.boundary.points.T
    g0 = np.sin(np.pi * bx) * np.sin(np.pi * by)
    gx = np.pi * np.cos(np.pi * bx) * np.sin(np.pi * by)
    gy = np.pi * np.sin(np.pi * bx) * np.cos(np.pi * by)
    g1 = gx * dom.boundary.normals[:, 0] + gy * dom.boundary.normals[:, 1]
    bc = BoundaryData(dom, g0, g1)
    u = op.solve(f, bc)
    err = u.values - ue
    l2 = dom.dx * np.linalg.norm(err)
    linf = np.abs(err).max()
    print(
        f"res={res:4d}  N={dom.n_interior:7d}  L2={l2:.3e}  Linf={linf:.3e}"
        f"  resid={op.residual_norm(u, f, bc):.2e}  t={time.time()-t0:.1f}s"
    )
    return l2


errs = []
resolutions = [32, 64, 128]
for r in resolutions:
    errs.append(run(r))
for k in range(1, len(errs)):
    print(f"slope {resolutions[k-1]}->{resolutions[k]}: {np.log2(errs[k-1]/errs[k]):.3f}")
