"""Mean-field density started uniform on [-1, 1]: repulsion feeds mass
beyond the initial support while attraction alone cannot."""
from deffuant_ar import meanfield as mf

for mu_plus in (0.25, 0.0):
    run = mf.run_meanfield(1.0, mu_plus, t_max=20.0)
    print(f"mu_plus={mu_plus}:")
    for t, r, m in list(zip(run.t, run.support_radius, run.mass_total))[::8]:
        print(f"  t={t:5.1f}  support radius {r:5.2f}  mass {m:.4f}")

w = mf.escalation_witness("0.25", "0.5", "0.25")
print("escalation witness:", w.as_dict())
print("intervals hold exactly:", mf.check_escalation_intervals(1, "0.25", "0.5", "0.25"))
