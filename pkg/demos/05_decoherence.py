"""Display sectors coupled to an environment: coherences between sectors
shrink as the environment grows, and the display's eigenvectors settle into
single sectors.

Run: python demos/05_decoherence.py   (about half a minute)
"""
import numpy as np

from modalsim import decoherence as dec

res = dec.scaling_experiment([16, 32, 64, 128, 256], trials=10, seed=1, haar_trials=500)
print("   D   mean max|rho12|   D * E|<a|b>|^2")
for D, m, h in zip(res.D, res.mean_max, res.haar_mean):
    print(f"{D:4d}   {m:15.5f}   {D * h:14.3f}")
print(f"fitted exponent {res.exponent:.3f} (random-vector overlap predicts -0.5)")

for D, weights in ((2, (0.5, 0.5)), (512, (0.8, 0.2))):
    model = dec.build_sector_model(4, 4, D, seed=3)
    phi = dec.uniform_display_state(model.dims, weights)
    xi = dec.haar_vector(D, np.random.default_rng(3))
    rep = dec.definiteness_check(dec.reduced_display(dec.evolve_sector(model, phi, xi, 10.0)), model.dims)
    verdict = "definite" if rep.definite else "indefinite"
    print(f"\nK = 8, D = {D}: max coherence {rep.offdiag_max:.4f} = {rep.spacing_ratio:.2f} level spacings, "
          f"min eigenvector sector purity {rep.occupied_purities.min():.4f} -> {verdict}")
