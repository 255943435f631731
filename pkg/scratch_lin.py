import time

import numpy as np

from bical.core import assemble_bilaplacian as assemble, diff_ops
from bical.fields import BoundaryData, Field
from bical.geometry import standard_configuration
from bical.linearized import (
    CauchyQuadruple,
    PerturbationQ,
    apply_Q,
    bilinear_form,
    boundary_map,
    duality_check,
    frechet_derivative_B,
    linearization_order,
    perturbed_operator,
    random_perturbation,
    random_sigma_data,
    solve_P_Q,
)

rng = np.random.default_rng(7)

t0 = time.time()
cfg48 = standard_configuration(48)
dom = cfg48.domain
op = assemble(dom)
op.lu
print(f"setup res48: {time.time()-t0:.2f}s  N={dom.n_interior}")

# --- trivial examples -------------------------------------------------------
u = Field(dom, np.sin(dom.points[:, 0]) * np.cos(dom.points[:, 1]))
z = apply_Q(PerturbationQ.zero(dom), u)
print("Q=0:", np.max(np.abs(z.values)))

q0 = PerturbationQ(dom, a0=np.ones(dom.n_interior))
print("a0=1 max|Qu-u|:", np.max(np.abs(apply_Q(q0, u).values - u.values)))

q2 = PerturbationQ(dom, a2=np.ones(dom.n_interior))
r2 = dom.points[:, 0] ** 2 + dom.points[:, 1] ** 2
print("a2=1 on |x|^2 -> 4:", np.max(np.abs(apply_Q(q2, r2).values - 4.0)))

# a1 on a plane: a1 . grad(3x - 2y) = 3a - 2b
q1 = PerturbationQ(dom, a1=np.column_stack([np.full(dom.n_interior, 0.5), np.full(dom.n_interior, -1.5)]))
plane = 3.0 * dom.points[:, 0] - 2.0 * dom.points[:, 1]
print("a1 plane:", np.max(np.abs(apply_Q(q1, plane).values - (1.5 + 3.0))))

# a3: constant coefficient on cubic x^3 + y^3 -> 6(a_xxx + a_yyy)
N = dom.n_interior
from bical.linearized import _a3_margin_mask
marg = _a3_margin_mask(dom)
a3 = np.zeros((N, 4))
a3[marg, 0] = 2.0
a3[marg, 3] = -1.0
q3 = PerturbationQ(dom, a3=a3)
cub = dom.points[:, 0] ** 3 + dom.points[:, 1] ** 3
got = apply_Q(q3, cub).values
want = np.where(marg, 6.0 * 2.0 - 6.0, 0.0)
print("a3 cubic err:", np.max(np.abs(got - want)))

# a3 margin rejection
a3bad = np.zeros((N, 4)); a3bad[~marg, 0] = 1.0
try:
    apply_Q(PerturbationQ(dom, a3=a3bad), cub)
    print("a3 margin rejection: FAILED (no error)")
except ValueError as e:
    print("a3 margin rejection ok:", str(e)[:60])

# --- solve_P_Q: residual + small-Q ratio ------------------------------------
f = random_sigma_data(dom, rng)
H = random_perturbation(dom, rng)
print("H sup:", H.sup_norm)

u0 = solve_P_Q(op, f)
print("u0 norm:", u0.norm_l2(), " residual:", op.residual_norm(u0, bc=f))

for eps in (1e-2, 1e-3):
    opE = perturbed_operator(op, eps / H.sup_norm * H)
    uE = solve_P_Q(opE, f, check_condition=True)
    d = Field(dom, uE.values - u0.values).norm_l2()
    print(f"||P_Q f - P_0 f|| at ||Q||={eps:g}: {d:.6e}  ratio-to-norm {d/eps/u0.norm_l2():.3f}")

# --- linearization order (criterion 6 oracle) -------------------------------
t0 = time.time()
for trial in range(5):
    Q = random_perturbation(dom, rng, scale=0.5)
    Ht = random_perturbation(dom, rng)
    ft = random_sigma_data(dom, rng)
    st = linearization_order(op, Q, Ht, ft, ts=(1e-2, 5e-3))
    print(f"trial {trial}: defects {st.defects[0]:.3e} {st.defects[1]:.3e}  order {st.order:.3f}")
print(f"linearization: {time.time()-t0:.1f}s")

# linearity of B in H and f
opQ = perturbed_operator(op, random_perturbation(rng=rng, domain=dom, scale=0.3))
H2 = random_perturbation(dom, rng)
g2 = random_sigma_data(dom, rng)
B1 = frechet_derivative_B(opQ, Ht, ft)
B1d = frechet_derivative_B(opQ, 2.0 * Ht, ft)
print("B(2H) - 2B(H):", (B1d - 2.0 * B1).pair_norm() / B1.pair_norm())
Bsum = frechet_derivative_B(opQ, Ht, BoundaryData(dom, ft.g0 + g2.g0, ft.g1 + g2.g1))
B2 = frechet_derivative_B(opQ, Ht, g2)
print("B(f+g) - Bf - Bg:", (Bsum - B1 - B2).pair_norm() / B1.pair_norm())

# --- bilinear form ----------------------------------------------------------
one = np.ones(dom.n_interior)
area = bilinear_form(PerturbationQ(dom, a0=one), one, one)
print(f"area: {area:.6f} vs pi {np.pi:.6f}  rel {abs(area-np.pi)/np.pi:.2e}")

# --- duality ----------------------------------------------------------------
t0 = time.time()
gaps = []
for trial in range(5):
    Hd = random_perturbation(dom, rng)
    fd = random_sigma_data(dom, rng)
    gd = random_sigma_data(dom, rng)
    res = duality_check(op, Hd, fd, gd)
    gaps.append(res.gap)
    print(f"duality {trial}: vol {res.volume:+.6e}  bnd {res.boundary:+.6e}  gap {res.gap:.2%}")
print(f"duality at 48: {time.time()-t0:.1f}s")

# refinement: same (H, f, g) at 32 / 64 via function-driven data
t0 = time.time()
for res_pair in ((32, 64),):
    gaps_pair = []
    for R in res_pair:
        cfgR = standard_configuration(R)
        dR = cfgR.domain
        opR = assemble(dR)
        rngR = np.random.default_rng(123)
        HR = random_perturbation(dR, rngR)
        fR = random_sigma_data(dR, rngR)
        gR = random_sigma_data(dR, rngR)
        rr = duality_check(opR, HR, fR, gR)
        gaps_pair.append(rr.gap)
        print(f"res {R}: gap {rr.gap:.3%}")
    import math
    print("refinement order:", math.log(gaps_pair[0] / gaps_pair[1]) / math.log(2))
print(f"refinement block: {time.time()-t0:.1f}s")
