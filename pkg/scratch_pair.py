import numpy as np

from bical.core import assemble_bilaplacian as assemble
from bical.geometry import standard_configuration
from bical.linearized import apply_Q, bilinear_form, random_perturbation
from bical.special import isotropic_from_imag, make_special_solution, standard_amplitudes

rng = np.random.default_rng(11)

for res in (48, 96):
    cfg = standard_configuration(res)
    dom = cfg.domain
    op = assemble(dom)
    amps = standard_amplitudes()
    xi = isotropic_from_imag((0.75, 0.3))
    eta = isotropic_from_imag((0.75, -0.3))
    h = 0.25
    u = make_special_solution(cfg, op, amps[0], xi, h)
    v = make_special_solution(cfg, op, amps[1], eta, h)
    H = random_perturbation(dom, np.random.default_rng(5))

    uf, vf = u.field(), v.field()
    lhs = bilinear_form(H, uf, vf)

    Hu = apply_Q(H, uf)
    w = op.solve(f=-Hu.values)
    T2, T3 = op.laplacian_traces(w.values)
    cd = v.cauchy_data()
    wgt = dom.boundary.weights
    rhs = np.sum(wgt * (cd.g1 * T2 - cd.g0 * T3))
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    print(f"res {res}: lhs {lhs:+.6e}  rhs {rhs:+.6e}  gap {gap:.3%}")

    # restricting the pairing to sigma must not change it (data vanish on gamma)
    sm = dom.sigma_mask
    rhs_sigma = np.sum(wgt[sm] * (cd.g1[sm] * T2[sm] - cd.g0[sm] * T3[sm]))
    print("   gamma contribution:", abs(rhs - rhs_sigma))
