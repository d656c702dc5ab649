import itertools

import numpy as np
import pytest

from gnlslab.resonance import (
    ScanReport,
    sp_threshold,
    threshold_equivalence_scan,
    omega_lower_bound_scan,
    psi_upper_bound_scan,
    remark_scan,
    dyadic_estimate_scan,
    count_zero_sum_tuples,
    _dyadic_block,
)
from gnlslab.functionals import FrequencyTuple, omega


def test_sp_threshold_closed_form():
    assert abs(sp_threshold(5) - 1.2807764) < 1e-6
    with pytest.raises(ValueError):
        sp_threshold(4)
    with pytest.raises(ValueError):
        sp_threshold(3)


def test_sp_threshold_below_asymptote():
    gaps = []
    for p in range(5, 100, 2):
        sp = sp_threshold(p)
        assert sp < 1.5 - 1.0 / p
        gaps.append(1.5 - 1.0 / p - sp)
    # gap shrinks monotonically: s_p ~ 3/2 - 1/p for large p
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_threshold_equivalence_hand_value():
    # p=5, s=1.29: polynomial side (3-2s)(2s+2) = 1.9236 < 2 and s > s_5
    s = 1.29
    assert (3 - 2 * s) * (2 * s + 2) == pytest.approx(1.9236)
    assert s > sp_threshold(5)


@pytest.mark.parametrize("p", [5, 7, 9])
def test_threshold_equivalence_scan(p):
    rep = threshold_equivalence_scan(p, np.linspace(1e-3, 1.5, 1000))
    assert not rep.violated
    assert rep.tuples_checked >= 999  # boundary band may drop one point


def test_tuple_count_matches_naive():
    def naive(p, K):
        count = 0
        for k in itertools.product(range(-K, K + 1), repeat=p):
            k1 = sum((-1) ** j * kj for j, kj in enumerate(k))
            if abs(k1) <= K:
                count += 1
        return count

    for K in (1, 2, 3):
        assert count_zero_sum_tuples(5, K) == naive(5, K)


def test_omega_lower_bound_scan():
    rep = omega_lower_bound_scan(5, 8)
    assert not rep.violated
    assert rep.extremal_value > 0
    # the witness attains the reported extremal value
    k = rep.witness
    mags = k.sorted_magnitudes
    assert mags[2] > 0 and 10 * 5 * mags[3] <= mags[2]
    assert abs(abs(k.omega) / (mags[0] * mags[2]) - rep.extremal_value) < 1e-12


def test_omega_scan_stability_across_K():
    a = omega_lower_bound_scan(5, 6).extremal_value
    b = omega_lower_bound_scan(5, 12).extremal_value
    assert max(a, b) / min(a, b) <= 2.0


def test_remark_scan_no_counterexample():
    rep = remark_scan(5, 8)
    assert not rep.violated and rep.witness is None
    assert rep.tuples_checked > 0


def test_remark_pairing_tuple_obeys_bound():
    # (a,a,b,b,c,c): resonant, k_(3) = k_(4) = |b|, bound trivially holds
    k = FrequencyTuple((9, 9, 4, 4, 2, 2))
    assert k.omega == 0 and k.linear_sum == 0
    mags = k.sorted_magnitudes
    assert mags[2] < 10 * 5 * mags[3]


def test_remark_larger_scan_monotone_count():
    small = remark_scan(5, 5)
    large = remark_scan(5, 7)
    assert not large.violated
    assert large.tuples_checked > small.tuples_checked


def test_psi_upper_bound_scan_stability():
    a = psi_upper_bound_scan(5, 1.3, 6)
    b = psi_upper_bound_scan(5, 1.3, 12)
    assert a.extremal_value > 0 and np.isfinite(b.extremal_value)
    assert b.extremal_value / a.extremal_value <= 1.25
    # psi0 ratio uses only resonant tuples; pairing tuples give 0 and are
    # never extremal
    assert b.extra["ratio_psi0"] > 0


def test_psi_scan_requires_s_above_one():
    with pytest.raises(ValueError):
        psi_upper_bound_scan(5, 0.9, 4)


def test_psi1_bound_on_enumerated_tuples():
    # |Psi^(1)(k)| <= C (k1^{2(s-1)} + k1^{2(s-1)} k3^2/|Omega|) with the
    # scan-reported constant, re-verified tuple by tuple at small K
    s, K = 1.3, 4
    C = psi_upper_bound_scan(5, s, K).extra["ratio_psi1"]
    for k in itertools.product(range(-K, K + 1), repeat=5):
        k1 = k[0] - k[1] + k[2] - k[3] + k[4]
        if abs(k1) > K:
            continue
        tup = (k1,) + tuple(k)
        om = omega(tup)
        if om == 0:
            continue
        mags = sorted((abs(x) for x in tup), reverse=True)
        if mags[0] == 0:
            continue
        psi = sum((-1) ** j * abs(x) ** (2 * s) for j, x in enumerate(tup))
        lhs = abs(psi / om)
        rhs = C * (mags[0] ** (2 * (s - 1)) * (1.0 + mags[2] ** 2 / abs(om)))
        assert lhs <= rhs * (1 + 1e-9)


def test_dyadic_block_definition():
    assert list(_dyadic_block(1)) == [-1, 0, 1]
    assert sorted(abs(x) for x in _dyadic_block(4)) == [3, 3, 4, 4]
    assert len(_dyadic_block(64)) == 64


def test_dyadic_refined_gate():
    # at p=5 the refined regime needs N_(3) >= 50 N_(4): (8,8,8,1,1,1) is
    # general, (64,64,64,1,1,1) is refined
    rep = dyadic_estimate_scan(
        5, 1.3,
        dyad_list=[(8, 8, 8, 1, 1, 1), (64, 64, 64, 1, 1, 1)],
        trials=5, permutations=0,
    )
    regimes = {tuple(r["dyads"]): r["regime"] for r in rep.extra["rows"]}
    assert regimes[(8, 8, 8, 1, 1, 1)] == "general"
    assert regimes[(64, 64, 64, 1, 1, 1)] == "refined"


def test_dyadic_degenerate_block_excluded():
    # all blocks = 1 with u supported on n = 0 only: the flat sequence is
    # still admissible; rows exist and ratios are finite
    rep = dyadic_estimate_scan(5, 1.3, dyad_list=[(1, 1, 1, 1, 1, 1)],
                               trials=2, permutations=0)
    assert all(np.isfinite(r["ratio"]) for r in rep.extra["rows"])


def test_scan_reports_are_deterministic():
    a = dyadic_estimate_scan(5, 1.3, max_dyad=8, trials=5, permutations=2, seed=3)
    b = dyadic_estimate_scan(5, 1.3, max_dyad=8, trials=5, permutations=2, seed=3)
    assert a.extremal_value == b.extremal_value
    assert a.extra["slope"] == b.extra["slope"]
    assert a.tuples_checked == b.tuples_checked


def test_scan_report_serialization():
    rep = omega_lower_bound_scan(5, 4)
    doc = rep.to_json()
    assert doc["scan_id"] == "omega-lower-bound"
    assert isinstance(doc["witness"], list) and len(doc["witness"]) == 6
