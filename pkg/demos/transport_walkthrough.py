"""Measure transport under the truncated flow, end to end.

Draws an ensemble, pushes it through the flow, and compares both sides of
the plain / cutoff / weighted transport identities, printing the z-scores
and the importance-sampling health diagnostics (E[g] coverage, effective
sample size).  Small sizes so it finishes in about a minute; crank
n_samples for real runs.

Run:  python demos/transport_walkthrough.py
"""

import numpy as np

from gnlslab.spectral import ModelParams
from gnlslab.sampling import EnsembleSpec, CutoffSpec, sample_block, ensemble_mean
from gnlslab.flow import evolve_batch
from gnlslab.transport import transport_battery, default_cutoff_R

params = ModelParams.make(p=5, s=1.3, N=2, tol=1e-7)
spec = EnsembleSpec(master_seed=7, n_samples=4000, s=1.3, n_ambient=2)

# how healthy is the plain density at this (N, s, t)?  E[g] = 1 exactly;
# a Monte Carlo estimate far below 1 means the mass sits in an
# under-sampled importance tail and plain-mode tests are underpowered.
t = 0.3
C0 = sample_block(spec, 0, spec.n_samples)
Cb = evolve_batch(C0, spec.n_ambient, [-t], params)[0]
n = np.arange(-2, 3)
w = (1.0 + n.astype(float) ** 2) ** spec.s
g = np.exp(-0.5 * (np.sum(w * np.abs(Cb) ** 2, 1) - np.sum(w * np.abs(C0) ** 2, 1)))
m, se = ensemble_mean(g)
print(f"E[g] = {m:.3f} +- {se:.3f}  (exact value 1; coverage diagnostic)")
print(f"log g quantiles (1%, 50%, 99%): "
      f"{np.quantile(np.log(g), [0.01, 0.5, 0.99]).round(2)}")

R = default_cutoff_R(params, spec)
cut = CutoffSpec(R=R, N=params.N, s=params.s)
print(f"\ncutoff scale R = {R:.2f} (twice the ensemble median energy)\n")

reports = transport_battery(params, [t], spec,
                            modes=("plain", "cutoff", "weighted"), cut=cut)
print(f"{'mode':9s} {'observable':18s} {'z':>6s} {'ESS':>10s}")
for r in reports:
    print(f"{r.mode:9s} {r.observable_id:18s} {r.z_score:6.2f} {r.ess:10.1f}")
print("\nz <= 3 supports the identity at Monte Carlo resolution; a tiny ESS")
print("says the configuration is statistically degenerate, not wrong.")
