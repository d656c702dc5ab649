"""Calibrate the Picard contraction window constant.

Sweeps delta * ||u0||_{H^sigma}^{p-1} upward over random unit-norm states
until the fixed-point iteration stops contracting, reports the largest
value that contracted on every trial, and prints half of it -- the value
shipped as flow.PICARD_C1.

Run:  python demos/calibrate_picard.py
"""

import numpy as np

from gnlslab.spectral import FourierState, ModelParams, sobolev_norm
from gnlslab.sampling import EnsembleSpec, sample_mu_s
from gnlslab.flow import picard_local, NonContractionError, FlowError


def unit_state(seed, N, s, sigma):
    spec = EnsembleSpec(master_seed=seed, n_samples=1, s=s, n_ambient=N)
    u = sample_mu_s(spec, 0)
    return FourierState(u.coeffs / sobolev_norm(u, sigma), N)


def contracts(u, c, params):
    delta = c * sobolev_norm(u, params.sigma) ** (1 - params.p)
    try:
        _, info = picard_local(u, delta, params, max_iter=60,
                               return_info=True, enforce_window=False)
    except (NonContractionError, FlowError):
        return False
    ratios = info["ratios"]
    return bool(ratios) and max(ratios) < 1.0 and info["iterations"] < 60


def main():
    grid = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.4, 2.0]
    cases = [(p, N) for p in (5, 7) for N in (2, 4, 8)]
    best_c = None
    for c in grid:
        ok = True
        trial = 0
        for p, N in cases:
            params = ModelParams.make(p=p, s=1.3, N=N)
            for k in range(100 // len(cases) + 1):
                trial += 1
                u = unit_state(1000 * p + 10 * N + k, N, 1.3, params.sigma)
                if not contracts(u, c, params):
                    ok = False
                    break
            if not ok:
                break
        print(f"c = {c:5.2f}: {'contracts on all trials' if ok else 'fails'}")
        if ok:
            best_c = c
        else:
            break
    print(f"\nlargest passing c: {best_c}")
    print(f"shipped constant (halved): PICARD_C1 = {best_c / 2}")


if __name__ == "__main__":
    main()
