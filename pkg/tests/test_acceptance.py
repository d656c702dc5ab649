"""Acceptance suite: one test per criterion, at the stated sizes and
tolerances, each printing a PASS/FAIL line (run with -s to stream them).

The Monte Carlo criteria use a fixed master seed so every run of this
suite is bit-reproducible.
"""

import numpy as np
import pytest

from gnlslab.spectral import FourierState, ModelParams, sobolev_norm
from gnlslab.sampling import EnsembleSpec, CutoffSpec, sample_mu_s
from gnlslab.functionals import (
    energy_correction,
    modified_energy,
    modified_energy_derivative,
    multilinear_forms,
    multilinear_form_multi,
    log_density_f,
    log_density_g,
    renormalized_energy,
    truncated_energy,
)
from gnlslab.flow import evolve, conservation_report
from gnlslab import resonance as rs
from gnlslab import transport as tp

SEED = 1


def report(num, ok, detail):
    print(f"ACCEPTANCE {num:2d} [{'PASS' if ok else 'FAIL'}] {detail}")
    return ok


def mu_sample(N, s, index, seed=SEED):
    spec = EnsembleSpec(master_seed=seed, n_samples=max(64, index + 1), s=s, n_ambient=N)
    return sample_mu_s(spec, index)


def test_c01_normal_form_identity():
    """d/dt E_{s,N}(flow) = Q_{s,N}(flow), 20 samples, p=5, N in {2,4,6},
    s in {1.3,1.5}, Richardson-extrapolated central difference, <= 1e-6."""
    worst = 0.0
    fd_all, q_all = [], []
    for s in (1.3, 1.5):
        for N in (2, 4, 6):
            params = ModelParams.make(p=5, s=s, N=N, tol=1e-12)
            for i in range(20):
                u = mu_sample(N, s, i)
                Q = modified_energy_derivative(u, params)
                hs = [1e-3 * 2.0**-k for k in range(4)]
                row = [
                    (modified_energy(evolve(u, h, params), params)
                     - modified_energy(evolve(u, -h, params), params)) / (2 * h)
                    for h in hs
                ]
                for lev in range(1, len(hs)):
                    fac = 4.0**lev
                    row = [(fac * row[j + 1] - row[j]) / (fac - 1)
                           for j in range(len(row) - 1)]
                worst = max(worst, abs(row[0] - Q) / abs(Q))
                fd_all.append(row[0])
                q_all.append(Q)
    fd_all, q_all = np.array(fd_all), np.array(q_all)
    fitted = float(np.dot(fd_all, q_all) / np.dot(q_all, q_all))
    ok = worst <= 1e-6
    assert report(1, ok, f"normal-form identity: max rel err {worst:.2e} <= 1e-6 "
                         f"(LS fitted constant {fitted:.8f})"), worst


def test_c02_conservation():
    """Mass, E_N and the renormalized energy drift <= 1e-8 over T = 1,
    p in {5,7}, N = 8, tol = 1e-10."""
    worst_m = worst_e = worst_r = 0.0
    for p in (5, 7):
        params = ModelParams.make(p=p, s=1.3, N=8, tol=1e-10)
        u = mu_sample(8, 1.3, 0)
        u = FourierState(u.coeffs / sobolev_norm(u, params.sigma), 8)
        rec = conservation_report(u, 1.0, 9, params)
        worst_m = max(worst_m, rec.drift_M)
        worst_e = max(worst_e, rec.drift_EN)
        e0 = renormalized_energy(u, params)
        drift_r = max(
            abs(renormalized_energy(st, params) - e0) / (1.0 + abs(e0))
            for st in rec.states
        )
        worst_r = max(worst_r, drift_r)
    ok = worst_m <= 1e-8 and worst_e <= 1e-8 and worst_r <= 1e-8
    assert report(2, ok, f"conservation: drift M {worst_m:.2e}, E_N {worst_e:.2e}, "
                         f"renormalized {worst_r:.2e} <= 1e-8"), (worst_m, worst_e, worst_r)


@pytest.fixture(scope="module")
def transport_battery_results():
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-5)
    spec = EnsembleSpec(master_seed=SEED, n_samples=100_000, s=1.3, n_ambient=4)
    R = tp.default_cutoff_R(params, spec)
    cut = CutoffSpec(R=R, N=4, s=1.3)
    zero = tp.transport_battery(params, [0.0], spec,
                                modes=("plain", "cutoff", "weighted"), cut=cut)
    reps = tp.transport_battery(params, [0.25, 0.5], spec,
                                modes=("plain", "cutoff", "weighted"), cut=cut)
    return zero, reps


def test_c03_exact_transport(transport_battery_results):
    """Plain, cutoff and weighted transport at 1e5 samples, p=5, N=4,
    s=1.3, t in {0.25,0.5}: every z <= 3 except at most one <= 4.5;
    t=0 z-scores exactly zero."""
    zero, reps = transport_battery_results
    assert all(r.z_score == 0.0 and r.lhs_mean == r.rhs_mean for r in zero)
    zs = [(r.mode, r.t, r.observable_id, r.z_score, r.ess) for r in reps]
    over3 = [z for z in zs if z[3] > 3.0]
    ok = len(over3) <= 1 and all(z[3] <= 4.5 for z in zs)
    lines = "; ".join(f"{m}/{t}/{o}: z={z:.2f}" for m, t, o, z, _ in zs)
    report(3, ok, f"transport battery (t=0 exact zeros OK): {lines}")
    assert ok, (
        "KNOWN STRUCTURAL FAILURE, not a code defect: at these parameters the "
        "plain/cutoff importance weights are degenerate (E[g] Monte Carlo "
        "coverage ~0.36 where the exact value is 1; z jitters across seeds "
        "3.9 .. 28). The identity itself verifies at N=1 (all z<=0.5), at "
        "t=0 (bitwise zero) and pointwise (criterion 4). See "
        "notes/decisions.md, 'ACCEPTANCE CRITERION 3'. z-scores: " + lines
    )


def test_c04_pointwise_density_identity():
    """f = g * exp(-(R(back) - R(u))) to 1e-9 relative, 20 samples."""
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-8)
    worst = 0.0
    for i in range(20):
        u = mu_sample(4, 1.3, i)
        t = 0.5
        lg = log_density_g(u, t, params)
        lf = log_density_f(u, t, params)
        back = evolve(u, -t, params)
        dr = energy_correction(back, params) - energy_correction(u, params)
        # compare densities relatively: |log f - (log g - dR)| bounds the
        # relative error of f against g exp(-dR)
        worst = max(worst, abs(lf - (lg - dr)) / max(1.0, abs(lf)))
    ok = worst <= 1e-9
    assert report(4, ok, f"pointwise density identity: max rel defect {worst:.2e} <= 1e-9"), worst


def test_c05_resonance_theorems():
    """omega lower bound (p=5 K=20; p=7 K=8) and the resonant-separation
    remark (p=5 K=15): zero violations; c_p stable within 2x across K."""
    low5 = rs.omega_lower_bound_scan(5, 20)
    low5b = rs.omega_lower_bound_scan(5, 10)
    low7 = rs.omega_lower_bound_scan(7, 8)
    low7b = rs.omega_lower_bound_scan(7, 4)
    rem = rs.remark_scan(5, 15)
    stab5 = max(low5.extremal_value, low5b.extremal_value) / min(
        low5.extremal_value, low5b.extremal_value)
    stab7 = max(low7.extremal_value, low7b.extremal_value) / min(
        low7.extremal_value, low7b.extremal_value)
    ok = (not low5.violated and not low7.violated and not rem.violated
          and low5.extremal_value > 0 and low7.extremal_value > 0
          and stab5 <= 2.0 and stab7 <= 2.0)
    assert report(5, ok, f"resonance theorems: c_5 = {low5.extremal_value:.3f} "
                         f"(stab {stab5:.2f}x), c_7 = {low7.extremal_value:.3f} "
                         f"(stab {stab7:.2f}x), remark violations 0"), (low5, low7, rem)


def test_c06_psi_and_dyadic_estimates():
    """psi-bound ratio stable within 1.25x from K=10 to K=20 (p=5, s=1.3);
    dyadic-estimate log-log ratio slope <= 0.1 over dyads up to 64."""
    a = rs.psi_upper_bound_scan(5, 1.3, 10)
    b = rs.psi_upper_bound_scan(5, 1.3, 20)
    stab = b.extremal_value / a.extremal_value
    dy = rs.dyadic_estimate_scan(5, 1.3, max_dyad=64, trials=50, permutations=10)
    ok = stab <= 1.25 and not dy.violated and dy.extra["slope"] <= 0.1
    assert report(6, ok, f"psi bound stability {stab:.3f}x <= 1.25; dyadic slope "
                         f"{dy.extra['slope']:.3f} <= 0.1 (max ratio {dy.extremal_value:.2f})"), (stab, dy.extra["slope"])


def test_c07_renormalized_energy_convergence():
    """q=2 kinetic distance within [2/3,3/2] of the chi-square oracle at
    1e5 samples (s=1.3, N=8, M_ref=64); full distances decrease along
    N = 4, 8, 16, 32."""
    spec = EnsembleSpec(master_seed=SEED, n_samples=100_000, s=1.3, n_ambient=64)
    rep = tp.energy_convergence_experiment(1.3, 2.0, [4, 8, 16, 32], 64, spec)
    rows = {r["N"]: r for r in rep["rows"]}
    ratio = rows[8]["kinetic_ratio"]
    dists = [rows[N]["distance_Lq"] for N in (4, 8, 16, 32)]
    ok = (2 / 3 <= ratio <= 3 / 2) and all(a > b for a, b in zip(dists, dists[1:]))
    assert report(7, ok, f"energy convergence: kinetic ratio {ratio:.3f} in [0.667,1.5]; "
                         f"distances {['%.3f' % d for d in dists]} monotone"), (ratio, dists)


def test_c08_flow_tail_estimate():
    """log P(sup norm > M) vs M^2: negative slope, R^2 >= 0.9
    (p=5, N=8, s=1.3, T=1, 1e4 samples)."""
    params = ModelParams.make(p=5, s=1.3, N=8, tol=1e-5)
    spec = EnsembleSpec(master_seed=SEED, n_samples=10_000, s=1.3, n_ambient=8)
    R = tp.default_cutoff_R(params, spec)
    cut = CutoffSpec(R=R, N=8, s=1.3)
    rep = tp.tail_experiment(params, 1.0, None, spec, cut)
    ok = rep.slope < 0 and rep.r_squared >= 0.9
    assert report(8, ok, f"tail estimate: slope {rep.slope:.4f} < 0, "
                         f"R^2 {rep.r_squared:.3f} >= 0.9"), (rep.slope, rep.r_squared)


def test_c09_sp_threshold():
    """Closed form s_5 = 1.2807764 +- 1e-6; s_p < 3/2 - 1/p up to p = 99;
    exhaustive equivalence on 1000-point grids for p in {5,7,9}."""
    ok = abs(rs.sp_threshold(5) - 1.2807764) <= 1e-6
    ok = ok and all(rs.sp_threshold(p) < 1.5 - 1.0 / p for p in range(5, 100, 2))
    for p in (5, 7, 9):
        rep = rs.threshold_equivalence_scan(p, np.linspace(1e-3, 1.5, 1000))
        ok = ok and not rep.violated
    assert report(9, ok, f"s_p threshold: s_5 = {rs.sp_threshold(5):.7f}; "
                         f"equivalence exhaustive on p in {{5,7,9}}")


def test_c10_multilinear_oracle():
    """Diagonal forms at p=5, N=2 match the naive full-enumeration oracle
    to 1e-10 relative on 20 random states."""
    from gnlslab.spectral import nonlinearity

    params = ModelParams.make(p=5, s=1.3, N=2)
    worst = 0.0
    for i in range(20):
        u = mu_sample(2, 1.3, i)
        m_f, t_f, n_f = multilinear_forms(u, params)
        us = [u] * 6
        m_o = multilinear_form_multi(us, 1.3, "M", 2)
        t_o = multilinear_form_multi(us, 1.3, "T", 2)
        g = nonlinearity(u, params)
        n_o = multilinear_form_multi([g, u, u, u, u, u], 1.3, "T", 2)
        for fast, oracle in ((m_f, m_o), (t_f, t_o), (n_f, n_o)):
            worst = max(worst, abs(fast - oracle) / max(1.0, abs(oracle)))
    ok = worst <= 1e-10
    assert report(10, ok, f"multilinear oracle equivalence: max rel {worst:.2e} <= 1e-10"), worst
