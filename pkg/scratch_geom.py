import math

import numpy as np

from bical.geometry import (
    ConformalMap,
    Disk,
    build_domain,
    image_disk,
    standard_configuration,
)
from bical.interp import evaluate, tensor_stencil_flags

for res in (32, 64):
    dom = build_domain(Disk((0.0, 0.0), 1.0), res)
    P = float(np.sum(dom.boundary.weights))
    print(f"res {res}: perim sum = {P!r}  vs 2pi err {abs(P - 2 * math.pi):.3e}",
          f" curve.perimeter err {abs(dom.perimeter - 2 * math.pi):.3e}")
    area = dom.dx ** 2 * float(np.sum(dom.cell_fractions()))
    print(f"   cell area = {area!r} rel err {abs(area - math.pi) / math.pi:.3e}")

# interpolation accuracy by order
cfg = standard_configuration(48)
dom = cfg.domain
f = lambda p: np.sin(1.3 * p[:, 0]) * np.cos(0.9 * p[:, 1]) + 0.2 * p[:, 0] * p[:, 1]
vals = f(dom.points)
rng = np.random.default_rng(7)
# deep points: signed distance <= -6 dx
cand = rng.uniform([-2.0, -1.0], [0.0, 1.0], size=(4000, 2))
_, _, sd = dom.curve.project(cand)
deep = cand[sd <= -6 * dom.dx][:300]
rim = cand[(sd <= -0.6 * dom.dx) & (sd >= -2.0 * dom.dx)][:150]
print("deep", len(deep), "rim", len(rim))
for order in (2, 3, 5):
    ed = np.max(np.abs(evaluate(dom, vals, deep, order=order) - f(deep)))
    er = np.max(np.abs(evaluate(dom, vals, rim, order=order) - f(rim)))
    fd = tensor_stencil_flags(dom, deep, order=order)
    fr = tensor_stencil_flags(dom, rim, order=order)
    print(f"order {order}: deep {ed:.3e} rim {er:.3e} flags deep {fd.mean():.2f} rim {fr.mean():.2f}")

# image disk geometry sanity
cm = ConformalMap((1.0, 0.0), 2.0, (-1.0, 0.0))
img = image_disk(cm, Disk((-1.0, 0.0), 1.0))
print("image disk:", img)
th = np.linspace(0, 2 * np.pi, 17)[:-1]
src = np.stack([-1 + np.cos(th), np.sin(th)], axis=-1)
mapped = cm.psi(src)
print("circle->circle err:", np.max(np.abs(np.hypot(mapped[:, 0] - img.center[0], mapped[:, 1] - img.center[1]) - img.radius)))
print("double psi err:", np.max(np.abs(cm.psi(cm.psi(src)) - src)))
print("fixed point:", cm.fixed_point, "psi(fp):", cm.psi(cm.fixed_point[None, :]))
