"""Three successive position readings of a free particle: the third one
fires near the straight-line extrapolation of the first two.

Run: python demos/03_trajectory.py
"""
from modalsim.config import validate_mapping
from modalsim.scenarios import run_scenario

res = run_scenario(validate_mapping({}, scenario="trajectory"))
for m in res.metrics:
    print(f"{m.name:<26} {m.value!s:>24}  {m.verdict}")

print("\nThird-display probabilities around the classical endpoint:")
peak = max(range(len(res.rows)), key=lambda i: res.rows[i][2])
for n, x, q in res.rows[max(peak - 3, 0): peak + 4]:
    print(f"  block {n:>3} at x = {x:8.2f}: {q:.6f}")
for note in res.notes:
    print("note:", note)
