"""Attraction and repulsion on a single pair of neighbours."""
from deffuant_ar import CANONICAL, interact

# close opinions meet halfway
print(interact(0.5, 0.3, CANONICAL))

# far opinions push apart; the gap grows by a factor 1 + 2 * mu_plus
out = interact(1.0, -1.0, CANONICAL)
print(out, "gap:", out.new_left - out.new_right)

# a gap exactly at the threshold still attracts
print(interact(0.0, CANONICAL.theta, CANONICAL).branch)

print("rho_minus", CANONICAL.rho_minus, "rho_plus", CANONICAL.rho_plus,
      "D", CANONICAL.D, "K", CANONICAL.K)
