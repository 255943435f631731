import sys, time

sys.path.insert(0, "src")
import numpy as np
from bical.geometry import Disk, DentedDisk, SmoothedStadium, build_domain
from bical.core import assemble_bilaplacian, green_kernel
from bical.fields import BoundaryData

# superposition pairing: dx^2 sum_y kappa_y G(x,y) phi_y == solve(phi)(x), any A
dom = build_domain(Disk((0.0, 0.0), 1.0), resolution=48)
op = assemble_bilaplacian(dom)
rng = np.random.default_rng(11)
support = rng.choice(dom.n_interior, size=20, replace=False)
phi = np.zeros(dom.n_interior)
phi[support] = rng.standard_normal(20)
u = op.solve(phi).values
kap = dom.cell_fractions()
acc = np.zeros(dom.n_interior)
for y in support:
    acc += dom.dx ** 2 * kap[y] * phi[y] * green_kernel(op, int(y)).values
probes = rng.choice(dom.n_interior, size=8, replace=False)
rel = np.abs(acc[probes] - u[probes]) / np.abs(u[probes]).max()
print(f"superposition pairing worst rel: {rel.max():.2e}")

# nonconvex / varying-curvature convergence
for shape, name in (
    (DentedDisk((0.0, 0.0), 1.0, dent_angle=0.4, dent_half_width=0.9, dent_depth=0.25), "dented"),
    (SmoothedStadium((0.0, 0.0), 0.8, 0.5), "stadium"),
):
    errs = []
    for res in (32, 64):
        t0 = time.time()
        dom = build_domain(shape, resolution=res)
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
        errs.append(dom.dx * np.linalg.norm(u.values - ue))
        print(f"{name} res={res}: L2={errs[-1]:.3e} t={time.time()-t0:.1f}s")
    print(f"{name} slope: {np.log2(errs[0]/errs[1]):.3f}")
