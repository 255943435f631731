import math
import time

import numpy as np

from bical import standard_configuration
from bical.bargmann import (
    bound_chain,
    inversion_limit,
    kernel_identity_gap,
    moment_function,
    synthesize_transform,
    transform_complex,
    transform_complex_log,
    transform_points,
    transform_real,
)

rng = np.random.default_rng(11)
t0 = time.time()
cfg = standard_configuration(48)
dom = cfg.domain
pts = dom.points


def bump(c, R):
    r2 = ((pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2) / R ** 2
    v = np.zeros(len(pts))
    m = r2 < 1.0
    v[m] = np.exp(1.0 - 1.0 / (1.0 - r2[m]))
    return v


# 1) Gaussian closed form (tight Gaussian, tail below 1e-20 at the boundary)
s = 0.01
y0 = np.array([-1.0, 0.1])
g = np.exp(-((pts[:, 0] - y0[0]) ** 2 + (pts[:, 1] - y0[1]) ** 2) / (2 * s))
for h in (0.05, 0.2):
    Tg = transform_real(dom, g, h).values
    pref = 2 * math.pi * h * s / (h + s)
    exact = pref * np.exp(
        -((pts[:, 0] - y0[0]) ** 2 + (pts[:, 1] - y0[1]) ** 2) / (2 * (h + s))
    )
    rel = np.max(np.abs(Tg - exact)) / np.max(np.abs(exact))
    print(f"gaussian closed form h={h}: rel {rel:.3e}")

# 2) FFT vs direct quadrature
f = bump((-0.9, -0.2), 0.55)
h = 0.17
Tf = transform_real(dom, f, h).values
probe = rng.choice(dom.n_interior, size=6, replace=False)
direct = transform_points(dom, f, pts[probe], h)
print(f"fft vs direct: {np.max(np.abs(Tf[probe] - direct)) / np.max(np.abs(direct)):.3e}")

# 3) complex consistency at real z + closed form at complex z
zr = np.array([pts[probe[0], 0] + 0j, pts[probe[0], 1] + 0j])
vc = transform_complex(dom, f, zr, h)
print(f"complex at real z vs fft: {abs(vc - Tf[probe[0]]) / abs(Tf[probe[0]]):.3e}")

z = np.array([0.4 + 0.8j, -0.3 + 0.5j])
vg = transform_complex(dom, g, z, h)
zz = (z[0] - y0[0]) ** 2 + (z[1] - y0[1]) ** 2
exactc = 2 * math.pi * h * s / (h + s) * np.exp(-zz / (2 * (h + s)))
print(f"complex gaussian closed form: {abs(vg - exactc) / abs(exactc):.3e}")

# 4) kernel identity
worst = 0.0
for _ in range(10):
    y = rng.uniform(-2, 0, size=2)
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    hh = rng.uniform(0.08, 0.4)
    worst = max(worst, kernel_identity_gap(y, z, hh))
print(f"kernel identity worst gap: {worst:.3e}")

# 5) synthesis vs direct complex
mom = moment_function(dom, f, h)
for z in (np.array([0.5 + 0.6j, -0.2 - 0.3j]), np.array([1.2 + 0.1j, 0.0 + 0.9j])):
    ts = time.time()
    syn = synthesize_transform(mom, z, h)
    ref = transform_complex(dom, f, z, h)
    print(
        f"synthesis at z={z}: rel {abs(syn - ref) / abs(ref):.3e} ({time.time()-ts:.1f}s)"
    )

# 6) inversion ladder
ladder = (0.32, 0.16, 0.08, 0.04, 0.02)
inv = inversion_limit(dom, f, ladder)
print("inversion errors:", " ".join(f"{e:.4e}" for e in inv.errors))
print("inversion ratios:", " ".join(f"{r:.3f}" for r in inv.ratios))

# 7) bound sweep
N = 60
zs = np.stack(
    [
        rng.uniform(0.0, 2.5, N) + 1j * rng.uniform(-2.0, 2.0, N),
        rng.uniform(-1.2, 1.2, N) + 1j * rng.uniform(-2.0, 2.0, N),
    ],
    axis=1,
)
hsw = rng.uniform(0.1, 0.45, N)
epsw = rng.uniform(0.05, 0.25, N)
asw = rng.uniform(0.6, 2.0, N)
ts = time.time()
sweep = bound_chain(dom, f, zs, hsw, epsw, asw)
print(
    f"bound sweep: modulus ok {int(np.sum(sweep.modulus_ok))}/{N}, "
    f"intermediate ok {int(np.sum(sweep.intermediate_ok))}/{N} ({time.time()-ts:.1f}s)"
)
mm = np.min(sweep.log_rhs_modulus - sweep.log_lhs)
mi = np.min(sweep.log_rhs_intermediate - sweep.log_lhs)
print(f"min log margins: modulus {mm:.3f}, intermediate {mi:.3f}")
print(f"total {time.time()-t0:.1f}s")
