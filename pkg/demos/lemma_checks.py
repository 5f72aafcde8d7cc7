"""Each step of the divergence argument, checked numerically."""
import numpy as np

from deffuant_ar import CANONICAL, analysis as an, experiments as ex

rng = np.random.default_rng(11)

est = an.initial_gap_event_mc(1.0, 10**6, rng)
print(f"initial gap event: {est.p_hat:.4f} >= {est.bound:.5f}")

print("align 2 > 1 > 0:", an.align_transform(2.0, 1.0, 0.0, 0.25))
print("align on the equality locus:", an.align_transform(2.75, 1.0, 0.0, 0.25)[2], "=", 6 / 7)

for case in an.CONTROL_GAP_CASES:
    x, side = an.control_gap_instances(case, CANONICAL, 100_000, rng)
    print(f"control gap {case:16s} all hold: {an.check_control_gap(x, side, CANONICAL).all()}")

fi = ex.forced_increase(CANONICAL)
print("forced increase gaps:", fi["gaps"], "tracker stayed:", fi["tracker_stayed"])
