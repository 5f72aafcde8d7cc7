"""The dominating jump process X and its supermartingale certificate.

X is multiplied by rho_minus at rate 2 and by rho_plus at rate 1. Its log
drifts upward, and c0 ** log(X) is a supermartingale once phi(c0) < 0.
"""
import math

import numpy as np

from deffuant_ar import CANONICAL, analysis as an

cert = an.find_c0(CANONICAL)
print(f"c* = {cert.c_star:.12f}  (1/e = {math.exp(-1):.12f})")
print(f"phi(c0) = {cert.phi_value:.3e}, escape bound = {cert.escape_bound:.6f}")

rng = np.random.default_rng(7)
log_x = an.sample_log_x(CANONICAL, [50.0], 100_000, rng)[0]
print(f"drift of log X: {log_x.mean() / 50:.5f} vs {an.log_drift(CANONICAL):.5f}")

est = an.escape_probability_mc(CANONICAL, 2.001, 1000.0, 100_000, rng, cert.c0)
print(f"P(escape) = {est.p_hat:.4f}  95% CI [{est.ci_low:.4f}, {est.ci_high:.4f}]  bound {est.bound:.4f}")

print(f"lower bound on divergence probability: {an.theorem_lower_bound(CANONICAL, cert):.3e}")
