"""Purcell enhancement, cooperativity and fabrication numbers in one place.

Takes a cavity quality factor and mode volume, converts them into the
emitter's Purcell factor and cooperativity over a range of emitter
parameters, then prints the deposition and etch plan for the device layer.

    python demos/emitter_budget.py
"""

from resforge.analysis import process_plan, scattering_loss_ratio
from resforge.resonator import cooperativity, purcell_factor

q, volume = 4400.0, 2.0  # volume in (lambda/n)^3
F = purcell_factor(q, volume)
print(f"Q = {q:.0f}, V = {volume} (lambda/n)^3  ->  F = {F:.1f}")

print("\nDebye-Waller  QE    C")
for dw in (0.6, 0.7, 0.8):
    for qe in (0.05, 0.1, 0.3):
        print(f"   {dw:.1f}       {qe:.2f}  {cooperativity(F, dw, qe).c:6.2f}")

plan = process_plan(250.0, 150.0, thin_from=500.0, thin_to=50.0)
print(f"\nALD cycles for 250 nm + 150 nm overfill: {plan.ald_cycles}")
print(f"TiO2 etch-back: {plan.tio2_etch_time[0]:.0f}-{plan.tio2_etch_time[1]:.0f} s")
print(f"membrane thinning 500 -> 50 nm: {plan.membrane_etch_time[0]:.1f}-{plan.membrane_etch_time[1]:.1f} s")
print(f"scattering penalty at 602 nm vs 737 nm, equal roughness: x{scattering_loss_ratio(1, 602, 1, 737):.3f}")
