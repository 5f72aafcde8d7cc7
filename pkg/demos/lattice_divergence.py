"""Ring of 1000 opinions with trackers that follow the largest local gap.

Trackers start on every edge and coalesce. After t = 200 some class usually
sits on a gap that has grown by dozens of orders of magnitude.
"""
import numpy as np

from deffuant_ar import CANONICAL, LatticeSimulation, divergence_stats, initial_config

rng = np.random.default_rng(2024)
sim = LatticeSimulation.create(CANONICAL, initial_config(1000, "ring", rng), rng)

for t in (10, 50, 100, 200):
    sim.advance(t)
    max_gap, n_big, mean_abs = sim.observables()
    print(f"t={t:4d}  max gap {max_gap:9.3g}  gaps above theta {n_big:4d}  mean |x| {mean_abs:9.3g}")

report = divergence_stats(sim.trackers, [1e1, 1e2, 1e3, 1e4]).as_dict()
print("surviving classes:", report["n_classes"])
print("classes above each threshold:", report["n_exceeding"])
print("live checks:", sim.checks.as_dict())
