import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnlslab.spectral import (
    FourierState,
    ModelParams,
    project,
    dyadic_project,
    sobolev_norm,
    lebesgue_norm,
    grid_values,
    state_from_grid,
    nonlinearity,
    state_to_json,
    state_from_json,
    write_states,
    read_states,
)


def random_state(rng, n_ambient, decay=0.0):
    n = np.arange(-n_ambient, n_ambient + 1)
    c = (rng.standard_normal(2 * n_ambient + 1)
         + 1j * rng.standard_normal(2 * n_ambient + 1))
    return FourierState(c / (1.0 + n**2) ** (decay / 2), n_ambient)


def test_state_invariants():
    with pytest.raises(ValueError):
        FourierState(np.array([np.nan + 0j]), 0)
    with pytest.raises(ValueError):
        FourierState(np.zeros(4, dtype=complex), 2)  # wrong length
    u = FourierState.from_dict({2: 1j}, n_ambient=3)
    assert u.coeff(2) == 1j
    assert u.coeff(5) == 0  # outside the window is implicitly zero


def test_project_definition():
    u = FourierState.from_dict({0: 1, 3: 5}, n_ambient=5)
    pu = project(u, 2)
    assert pu.coeff(0) == 1 and pu.coeff(3) == 0


def test_project_idempotent_and_nested():
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = random_state(rng, 8)
        assert project(project(u, 4), 4) == project(u, 4)
        assert project(project(u, 5), 2) == project(u, 2)


def test_dyadic_blocks():
    u = FourierState(np.ones(129, dtype=complex), 64)
    b1 = dyadic_project(u, 1)
    assert all(b1.coeff(n) == (1 if abs(n) <= 1 else 0) for n in range(-5, 6))
    b4 = dyadic_project(u, 4)
    kept = [n for n in range(-64, 65) if b4.coeff(n) != 0]
    assert sorted(abs(n) for n in kept) == [3, 3, 4, 4]
    with pytest.raises(ValueError):
        dyadic_project(u, 3)


def test_dyadic_partition_of_unity():
    rng = np.random.default_rng(1)
    u = random_state(rng, 64)
    total = np.zeros_like(u.coeffs)
    L = 1
    while L <= 64:
        total = total + dyadic_project(u, L).coeffs
        L *= 2
    assert np.allclose(total, u.coeffs, rtol=0, atol=1e-15)


def test_sobolev_norm_values():
    assert sobolev_norm(FourierState.from_dict({0: 3}), 2.2) == 3.0
    assert abs(sobolev_norm(FourierState.from_dict({1: 1}), 1.0) - np.sqrt(2)) < 1e-15


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_sobolev_monotone_in_r(r1, r2):
    rng = np.random.default_rng(7)
    u = random_state(rng, 6)
    lo, hi = min(r1, r2), max(r1, r2)
    assert sobolev_norm(u, lo) <= sobolev_norm(u, hi) * (1 + 1e-12)


def test_lebesgue_norm():
    assert abs(lebesgue_norm(FourierState.from_dict({0: 2}), 6) - 2) < 1e-12
    u = FourierState.from_dict({0: 1, 1: 1})
    assert abs(lebesgue_norm(u, 2) - np.sqrt(2)) < 1e-12


def test_parseval():
    rng = np.random.default_rng(2)
    for _ in range(10):
        u = random_state(rng, 12)
        l2 = lebesgue_norm(u, 2)
        assert abs(l2 - sobolev_norm(u, 0)) < 1e-12 * max(1, l2)


def test_grid_roundtrip():
    rng = np.random.default_rng(3)
    u = random_state(rng, 10)
    vals = grid_values(u, 64)
    v = state_from_grid(vals, 10)
    assert np.allclose(v.coeffs, u.coeffs, rtol=1e-12)


@pytest.mark.parametrize("p,N", [(5, 2), (5, 3), (7, 2)])
def test_nonlinearity_matches_direct_convolution(p, N):
    rng = np.random.default_rng(10 * p + N)
    params = ModelParams.make(p=p, s=1.3, N=N)
    for _ in range(20 if N <= 2 else 3):
        u = random_state(rng, N)
        G = nonlinearity(u, params)
        c = u.coeffs
        direct = np.zeros(2 * N + 1, dtype=complex)
        for k in itertools.product(range(-N, N + 1), repeat=p):
            n = sum((-1) ** j * kj for j, kj in enumerate(k))
            if abs(n) <= N:
                prod = 1.0 + 0j
                for j, kj in enumerate(k):
                    prod *= np.conj(c[kj + N]) if j % 2 else c[kj + N]
                direct[n + N] += prod
        scale = np.abs(direct).max()
        assert np.abs(G.coeffs - direct).max() < 1e-12 * max(scale, 1.0)


def test_nonlinearity_constant_field():
    params = ModelParams.make(p=5, s=1.3, N=2)
    g = nonlinearity(FourierState.from_dict({0: 1}, 2), params)
    assert abs(g.coeff(0) - 1) < 1e-14


def test_nonlinearity_gauge_covariance():
    rng = np.random.default_rng(4)
    params = ModelParams.make(p=5, s=1.3, N=3)
    for _ in range(5):
        u = random_state(rng, 3)
        theta = rng.uniform(0, 2 * np.pi)
        g1 = nonlinearity(FourierState(np.exp(1j * theta) * u.coeffs, 3), params)
        g2 = nonlinearity(u, params)
        assert np.allclose(g1.coeffs, np.exp(1j * theta) * g2.coeffs, rtol=1e-12)


def test_grid_size_guard():
    params = ModelParams.make(p=5, s=1.3, N=2)
    with pytest.raises(ValueError):
        ModelParams(p=5, s=1.3, sigma=0.7, N=2, grid_size=10)
    u = FourierState.from_dict({0: 1}, 2)
    assert nonlinearity(u, params) is not None


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(p=4, s=1.3, sigma=0.7, N=2)
    with pytest.raises(ValueError):
        ModelParams(p=5, s=1.3, sigma=0.9, N=2)  # sigma >= s - 1/2
    p = ModelParams.make(p=5, s=1.3, N=4)
    assert p.grid_size >= 2 * 5 * 4 + 2


def test_json_roundtrip():
    rng = np.random.default_rng(5)
    u = random_state(rng, 4)
    v = state_from_json(state_to_json(u))
    assert v == u


def test_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    states = [random_state(rng, 3), random_state(rng, 5)]
    path = tmp_path / "states.bin"
    write_states(path, states)
    back = read_states(path)
    assert len(back) == 2
    assert back[0] == states[0] and back[1] == states[1]
    # header is 16 bytes: magic, version, ambient window
    raw = path.read_bytes()
    assert raw[:7] == b"GNLSSTA"
