"""The arithmetic side: thresholds, resonant-function bounds, dyadic
estimates.

Run:  python demos/resonance_scan_tour.py
"""

import numpy as np

from gnlslab.resonance import (
    sp_threshold,
    threshold_equivalence_scan,
    omega_lower_bound_scan,
    psi_upper_bound_scan,
    remark_scan,
    dyadic_estimate_scan,
)

print("regularity thresholds s_p and the 3/2 - 1/p asymptote:")
for p in (5, 7, 9, 21, 99):
    print(f"  p = {p:3d}:  s_p = {sp_threshold(p):.6f}   3/2 - 1/p = {1.5 - 1/p:.6f}")

rep = threshold_equivalence_scan(5, np.linspace(0.01, 1.5, 500))
print(f"\npolynomial criterion equivalent to s > s_p on {rep.tuples_checked} "
      f"grid points: violated = {rep.violated}")

low = omega_lower_bound_scan(5, 12)
print(f"\nresonant-function lower bound, p=5, K=12:")
print(f"  min |Omega| / (|k_(1)| |k_(3)|) = {low.extremal_value:.4f} "
      f"at k = {low.witness.k} ({low.tuples_checked} tuples)")

rem = remark_scan(5, 10)
print(f"resonant separation remark, p=5, K=10: counterexamples = "
      f"{rem.violated} over {rem.tuples_checked} resonant tuples")

psi = psi_upper_bound_scan(5, 1.3, 12)
print(f"\nsymmetrized-derivative bounds, p=5, s=1.3, K=12 (empirical extremal"
      f" constants):")
for key in ("ratio_full", "ratio_psi0", "ratio_psi1"):
    print(f"  {key}: {psi.extra[key]:.4f}")

dy = dyadic_estimate_scan(5, 1.3, max_dyad=64, trials=20, permutations=3)
print(f"\ndyadic estimates up to blocks of 64: max LHS/RHS = "
      f"{dy.extremal_value:.3f}, asymptotic slope = {dy.extra['slope']:.3f} "
      f"(bounded iff <= 0.1); worst dyads {dy.extra['worst_dyads']}")
