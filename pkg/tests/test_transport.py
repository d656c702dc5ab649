import numpy as np
import pytest

from gnlslab.spectral import ModelParams
from gnlslab.sampling import EnsembleSpec, CutoffSpec
from gnlslab.transport import (
    transport_test,
    transport_battery,
    tail_experiment,
    energy_convergence_experiment,
    growth_experiment,
    chaos_moment_check,
    default_cutoff_R,
    _stiffness_order,
    OBSERVABLES,
)


P1 = ModelParams.make(p=5, s=1.3, N=1, tol=1e-8)
SPEC1 = EnsembleSpec(master_seed=303, n_samples=20_000, s=1.3, n_ambient=1)


def test_zero_time_is_bitwise_exact():
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-6)
    spec = EnsembleSpec(master_seed=5, n_samples=500, s=1.3, n_ambient=4)
    R = default_cutoff_R(params, spec)
    cut = CutoffSpec(R=R, N=4, s=1.3)
    reps = transport_battery(params, [0.0], spec,
                             modes=("plain", "cutoff", "weighted"), cut=cut)
    for r in reps:
        assert r.lhs_mean == r.rhs_mean and r.z_score == 0.0


def test_plain_transport_mild_regime():
    # N = 1: the importance weights are tame and the identity is visible
    # at Monte Carlo resolution
    reps = transport_battery(P1, [0.3], SPEC1, modes=("plain",))
    assert len(reps) == 3
    for r in reps:
        assert r.z_score <= 3.0, (r.observable_id, r.z_score)


def test_linear_diagnostic_mode():
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-8, linear=True)
    spec = EnsembleSpec(master_seed=6, n_samples=2000, s=1.3, n_ambient=4)
    logg = []
    reps = transport_test(params, 0.5, spec,
                          per_sample_sink=lambda rec: logg.append(rec["log_g"]))
    assert np.max(np.abs(np.concatenate(logg))) < 1e-10
    assert all(r.z_score <= 3.0 for r in reps)


def test_transport_requires_matching_window():
    spec = EnsembleSpec(master_seed=7, n_samples=10, s=1.3, n_ambient=6)
    with pytest.raises(ValueError):
        transport_test(ModelParams.make(p=5, s=1.3, N=4), 0.1, spec)


def test_weighted_needs_cutoff():
    spec = EnsembleSpec(master_seed=7, n_samples=10, s=1.3, n_ambient=4)
    with pytest.raises(ValueError):
        transport_test(ModelParams.make(p=5, s=1.3, N=4), 0.1, spec, weighted=True)


def test_reports_carry_diagnostics():
    params = ModelParams.make(p=5, s=1.3, N=2, tol=1e-6)
    spec = EnsembleSpec(master_seed=8, n_samples=300, s=1.3, n_ambient=2)
    cut = CutoffSpec(R=default_cutoff_R(params, spec), N=2, s=1.3)
    reps = transport_battery(params, [0.2], spec, modes=("weighted",), cut=cut)
    for r in reps:
        assert np.isfinite(r.lhs_mean) and np.isfinite(r.rhs_mean)
        assert r.ess >= 1.0
        doc = r.to_json()
        assert "log_scale" in doc and "ess" in doc


def test_stiffness_order_is_deterministic_permutation():
    spec = EnsembleSpec(master_seed=9, n_samples=777, s=1.3, n_ambient=3)
    a = _stiffness_order(spec)
    b = _stiffness_order(spec)
    assert np.array_equal(a, b)
    assert sorted(a.tolist()) == list(range(777))


def test_tail_experiment_shape_and_censoring():
    params = ModelParams.make(p=5, s=1.3, N=2, tol=1e-6)
    spec = EnsembleSpec(master_seed=10, n_samples=1500, s=1.3, n_ambient=2)
    cut = CutoffSpec(R=default_cutoff_R(params, spec), N=2, s=1.3)
    rep = tail_experiment(params, 0.25, [1.0, 2.0, 3.0, 500.0], spec, cut,
                          grid_per_unit=16)
    assert rep.censored[-1]  # no sample reaches M = 500: censored, not failed
    assert np.isnan(rep.log_probabilities[-1])
    low = rep.log_probabilities[0]
    assert np.exp(low) <= 1.0
    assert rep.slope < 0


def test_tail_low_threshold_probability_near_mass():
    params = ModelParams.make(p=5, s=1.3, N=2, tol=1e-6)
    spec = EnsembleSpec(master_seed=11, n_samples=800, s=1.3, n_ambient=2)
    cut = CutoffSpec(R=1e9, N=2, s=1.3)  # cutoff inactive: weights all 1
    rep = tail_experiment(params, 0.2, [1e-6], spec, cut, grid_per_unit=8)
    assert np.exp(rep.log_probabilities[0]) > 0.999


def test_energy_convergence_oracle_band():
    spec = EnsembleSpec(master_seed=12, n_samples=20_000, s=1.3, n_ambient=32)
    rep = energy_convergence_experiment(1.3, 2.0, [4, 8], 32, spec)
    dists = [r["distance_Lq"] for r in rep["rows"]]
    assert dists[0] > dists[1]  # monotone in N
    for row in rep["rows"]:
        assert 2 / 3 <= row["kinetic_ratio"] <= 3 / 2
    # reference case N = M_ref: distance identically zero
    rep0 = energy_convergence_experiment(
        1.3, 2.0, [32], 32,
        EnsembleSpec(master_seed=12, n_samples=100, s=1.3, n_ambient=32))
    assert rep0["rows"][0]["distance_Lq"] == 0.0


def test_energy_convergence_validates_inputs():
    spec = EnsembleSpec(master_seed=1, n_samples=10, s=1.3, n_ambient=8)
    with pytest.raises(ValueError):
        energy_convergence_experiment(1.3, 2.0, [16], 8, spec)
    with pytest.raises(ValueError):
        energy_convergence_experiment(1.3, 2.0, [4], 16, spec)


def test_growth_linear_mode_flat():
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-8, linear=True)
    spec = EnsembleSpec(master_seed=13, n_samples=20, s=1.3, n_ambient=4)
    rep = growth_experiment(params, [1.0, 2.0, 4.0], spec, grid_per_unit=8)
    assert abs(rep["exponent_median"]) < 1e-10


def test_growth_reports_finite_exponents():
    params = ModelParams.make(p=5, s=1.3, N=4, tol=1e-6)
    spec = EnsembleSpec(master_seed=14, n_samples=12, s=1.3, n_ambient=4)
    rep = growth_experiment(params, [0.5, 1.0, 2.0], spec, grid_per_unit=16)
    assert np.all(np.isfinite(rep["exponents"]))
    assert len(rep["exponents"]) == 12


def test_chaos_moment_check():
    spec = EnsembleSpec(master_seed=15, n_samples=200_000, s=1.3, n_ambient=8)
    rep = chaos_moment_check(1.3, 8, [2, 4, 6, 8], spec)
    assert rep["ratios"][0] == 1.0  # q = 2 by definition
    assert rep["slope"] <= 1.2
    with pytest.raises(ValueError):
        chaos_moment_check(1.3, 8, [1, 2], spec)


def test_observable_library():
    params = ModelParams.make(p=5, s=1.3, N=2)
    n = np.arange(-2, 3)
    C = np.zeros((1, 5), dtype=complex)
    C[0, 2] = 2.0  # c_0 = 2
    assert OBSERVABLES["capped_mass"](C, n, params)[0] == 4.0
    C[0, 2] = 100.0
    assert OBSERVABLES["capped_mass"](C, n, params)[0] == 10.0
    C = np.zeros((1, 5), dtype=complex)
    C[0, 3] = np.pi  # c_1 real part pi
    assert abs(OBSERVABLES["cos_re_c1"](C, n, params)[0] + 1.0) < 1e-12
