import time

import numpy as np

from bical import standard_configuration
from bical.bargmann import inversion_limit

t0 = time.time()
cfg = standard_configuration(128)
dom = cfg.domain
pts = dom.points
print(f"domain build {time.time()-t0:.1f}s, n={dom.n_interior}")

f = np.exp(-((pts[:, 0] + 1.0) ** 2 + pts[:, 1] ** 2) / (2 * 0.08))
t0 = time.time()
inv = inversion_limit(dom, f, (0.08, 0.04, 0.02, 0.01, 0.005, 0.0025))
print("errors", " ".join(f"{e:.4e}" for e in inv.errors))
print("ratios", " ".join(f"{r:.3f}" for r in inv.ratios))
print(f"ladder time {time.time()-t0:.1f}s")
