import time

import numpy as np

from bical import standard_configuration, assemble_bilaplacian
from bical.special import (
    DEFAULT_H_LADDER,
    Amplitude,
    admissible_h,
    isotropic_from_imag,
    make_cutoff,
    verify_decay,
)

t0 = time.time()
cfg = standard_configuration(96)
op = assemble_bilaplacian(cfg.domain)
op.lu
cut = make_cutoff(cfg)
print(f"setup {time.time()-t0:.1f}s")

configs = [
    ((1.0, 0.0), Amplitude.one()),
    ((0.5, 0.0), Amplitude.one()),
    ((0.75, 0.3), Amplitude.coordinate(0)),
    ((0.75, -0.3), Amplitude.coordinate(1)),
    ((0.6, 0.45), Amplitude.norm_squared()),
    ((1.2, -0.2), Amplitude.one()),
]
worst = 0.0
for im, amp in configs:
    ts = time.time()
    hs = admissible_h(cfg, isotropic_from_imag(im), DEFAULT_H_LADDER)
    st = verify_decay(cfg, op, amp, im, hs, cutoff=cut)
    gap = st.relative_gap
    worst = max(worst, gap)
    print(
        f"im={im} amp={amp.tag}: H_K = {-st.expected_rate:.4f}, raw {st.rate_raw:.4f} "
        f"free {st.rate_free:.4f} pw {st.power_free:+.2f} gap {gap:.3f} {time.time()-ts:.2f}s"
    )
print(f"worst gap {worst:.3f}; total {time.time()-t0:.1f}s")
