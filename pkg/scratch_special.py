import time

import numpy as np

from bical import standard_configuration, assemble_bilaplacian
from bical.special import (
    Amplitude,
    standard_amplitudes,
    isotropic_pair,
    isotropic_from_imag,
    isotropy_defect,
    cgo_defect,
    make_cutoff,
    make_special_solution,
    verify_decay,
    prefactor_study,
    admissible_h,
    DEFAULT_H_LADDER,
)

rng = np.random.default_rng(7)

# --- criterion-2 style exactness -------------------------------------------
cfg = standard_configuration(48)
dom = cfg.domain
print(f"config: c = {cfg.c:.6f}, n_interior = {dom.n_interior}, dx = {dom.dx:.5f}")

pts = dom.points[rng.choice(dom.n_interior, size=400, replace=False)]
worst = 0.0
for _ in range(20):
    mu = complex(rng.normal(), rng.normal()) * rng.uniform(0.3, 3.0)
    xi = isotropic_pair(mu)
    assert isotropy_defect(xi) < 1e-14, isotropy_defect(xi)
    h = rng.uniform(0.05, 0.5)
    for amp in standard_amplitudes():
        d = cgo_defect(amp, xi, h, pts)
        worst = max(worst, d)
print(f"cgo exactness worst relative defect over 20 xi x 4 amplitudes: {worst:.3e}")

# non-isotropic control: defect should be O(1)
bad = cgo_defect(Amplitude.norm_squared(), np.array([1.0 + 0j, 0.5j]), 0.2, pts)
print(f"anisotropic control defect: {bad:.3e}")

# --- cutoff -----------------------------------------------------------------
cut = make_cutoff(cfg)
b = dom.boundary
gm = dom.gamma_mask
print(f"cutoff width = {cut.width:.4f}")
print(f"chi on gamma: min = {cut.values[gm].min():.3e} (want 1)")
origin = np.argmin(np.sum((b.points - np.array([0.0, 0.0])) ** 2, axis=1))
print(f"chi at rightmost sample x = {b.points[origin]}: {cut.values[origin]:.3e}")
print(f"support x1 max = {cut.support_x1_max:.4f} vs -c = {-cfg.c:.4f}")
for t in (0.3, 1.0, 2.0):
    hk = cut.support_h((t, 0.0))
    print(f"H_K(({t},0)) = {hk:.4f}  (<= -c t = {-cfg.c * t:.4f}? {hk <= -cfg.c * t})")

# --- decay sweep at res 96 ---------------------------------------------------
t0 = time.time()
cfg96 = standard_configuration(96)
op96 = assemble_bilaplacian(cfg96.domain)
op96.lu  # force factorization
t1 = time.time()
print(f"\nres 96: assemble+factorize {t1 - t0:.1f}s, n = {cfg96.domain.n_interior}")

cut96 = make_cutoff(cfg96)
print(f"H_K((1,0)) on res-96 cutoff = {cut96.support_h((1.0, 0.0)):.4f}")

for im in [(1.0, 0.0), (0.5, 0.0), (0.75, 0.3)]:
    xi = isotropic_from_imag(im)
    hs = admissible_h(cfg96, xi, DEFAULT_H_LADDER)
    ts = time.time()
    study = verify_decay(cfg96, op96, Amplitude.one(), im, hs, cutoff=cut96)
    te = time.time()
    print(
        f"im_xi={im}: expected {study.expected_rate:.4f} | raw {study.rate_raw:.4f} "
        f"comp {study.rate_compensated:.4f} free {study.rate_free:.4f} "
        f"(power {study.power_free:.2f}) | gap(comp) {study.relative_gap:.3f} "
        f"| {te - ts:.1f}s, {len(hs)} pts"
    )
    print("   norms:", " ".join(f"{n:.3e}" for n in study.norms))

# doubling check
s1 = verify_decay(cfg96, op96, Amplitude.one(), (0.5, 0.0), cutoff=cut96)
s2 = verify_decay(cfg96, op96, Amplitude.one(), (1.0, 0.0), cutoff=cut96)
print(f"doubling: rate(2y)/rate(y) = {s2.rate / s1.rate:.4f} (want 2 within 15%)")

# gamma Cauchy defect of one solution
sol = make_special_solution(cfg96, op96, Amplitude.coordinate(0), isotropic_from_imag((1.0, 0.0)), 0.16, cutoff=cut96)
print(f"gamma cauchy defect at h=0.16: {sol.gamma_cauchy_defect(op96):.3e} "
      f"(data scale ~ {np.exp(cut96.support_h((1.0,0.0))/0.16):.3e})")

# --- prefactor study ---------------------------------------------------------
ts = time.time()
pre = prefactor_study(cfg96, op96, Amplitude.one(), 1.0, cutoff=cut96)
print(f"prefactor growth power = {pre.growth_power:.3f} (want <= 2.3), {time.time()-ts:.1f}s")
print("   norms:", " ".join(f"{n:.3e}" for n in pre.norms))
print(f"\ntotal {time.time() - t0:.1f}s")
