"""Reproducible sampling of the Gaussian ensemble and cutoff weights.

The mode-n coefficient of a sample is c_n = (a_n + i b_n) / <n>^s with
a_n, b_n independent standard normals, so E|<n>^s c_n|^2 = 2 and the law of
the coefficient vector has density proportional to
exp(-1/2 sum <n>^(2s) |c_n|^2).  Under this normalization the transport
density of the truncated flow is exact at finite truncation, and the
Gaussian mean of the kinetic energy equals sum_{|n|<=N} n^2/<n>^(2s)
(see functionals.counterterm).

Randomness is counter based: sample ``i`` of an ensemble is a pure function
of (master_seed, i), generated by a Philox4x64-10 bit generator keyed by
the pair, with the 2*(2*n_ambient+1) normal draws consumed in the fixed
order a_{-N}, b_{-N}, a_{-N+1}, ..., b_{N}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .spectral import FourierState

__all__ = [
    "RNG_ID",
    "EnsembleSpec",
    "CutoffSpec",
    "sample_mu_s",
    "sample_block",
    "smooth_cutoff",
    "cutoff_weight",
    "ensemble_mean",
    "write_manifest",
]

RNG_ID = "philox4x64-10/ziggurat-normal/v1"


@dataclass(frozen=True)
class EnsembleSpec:
    """Deterministic description of a Monte Carlo ensemble."""

    master_seed: int
    n_samples: int
    s: float
    n_ambient: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.n_ambient < 0:
            raise ValueError("n_ambient must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth renormalized-energy cutoff chi(E_N(u)/R)."""

    R: float
    N: int
    s: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")


def _generator(master_seed: int, index: int) -> np.random.Generator:
    # 128-bit Philox key = (master_seed << 64) | index: a pure function of
    # the pair, independent of generation order or thread count.
    return np.random.Generator(np.random.Philox(key=(master_seed << 64) + index))


def sample_mu_s(spec: EnsembleSpec, index: int) -> FourierState:
    """Draw sample ``index`` of the ensemble (bit-reproducible)."""
    if not 0 <= index < spec.n_samples:
        raise IndexError(f"index {index} outside [0, {spec.n_samples})")
    m = 2 * spec.n_ambient + 1
    g = _generator(spec.master_seed, index)
    ab = g.standard_normal(2 * m)
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    decay = (1.0 + n.astype(float) ** 2) ** (spec.s / 2.0)
    coeffs = (ab[0::2] + 1j * ab[1::2]) / decay
    return FourierState(coeffs, spec.n_ambient)


def sample_block(spec: EnsembleSpec, start: int, stop: int) -> np.ndarray:
    """Coefficient rows for samples start..stop-1, shape (stop-start, 2*n_ambient+1).

    Row i equals sample_mu_s(spec, start + i) bit for bit.
    """
    if not 0 <= start <= stop <= spec.n_samples:
        raise IndexError("block outside the ensemble")
    return sample_block_rows(spec, np.arange(start, stop))


def sample_block_rows(spec: EnsembleSpec, indices) -> np.ndarray:
    """Coefficient rows for an arbitrary index sequence (each row is the
    same pure function of (master_seed, index) whatever the order)."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= spec.n_samples):
        raise IndexError("index outside the ensemble")
    m = 2 * spec.n_ambient + 1
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    decay = (1.0 + n.astype(float) ** 2) ** (spec.s / 2.0)
    out = np.empty((indices.size, m), dtype=np.complex128)
    for row, i in enumerate(indices):
        ab = _generator(spec.master_seed, int(i)).standard_normal(2 * m)
        out[row] = (ab[0::2] + 1j * ab[1::2]) / decay
    return out


def smooth_cutoff(x) -> np.ndarray | float:
    """C-infinity bump: 1 on |x| <= 1/2, 0 on |x| >= 1.

    On the transition 1/2 < |x| < 1 the value is
    h(2(1-|x|)) / (h(2(1-|x|)) + h(2(|x|-1/2))) with h(t) = exp(-1/t) for
    t > 0 and h = 0 otherwise.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    scalar = ax.ndim == 0
    ax = np.atleast_1d(ax)

    def h(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    up = h(2.0 * (1.0 - ax))
    down = h(2.0 * (ax - 0.5))
    denom = up + down
    val = np.where(ax <= 0.5, 1.0, np.where(ax >= 1.0, 0.0, 0.0))
    trans = (ax > 0.5) & (ax < 1.0)
    val = val.astype(float)
    val[trans] = up[trans] / denom[trans]
    return float(val[0]) if scalar else val


def cutoff_weight(u: FourierState, cut: CutoffSpec, p: int = 5) -> float:
    """chi(E_N(u)/R) with the renormalized energy from functionals.

    The renormalized energy needs the nonlinearity power for its potential
    term; CutoffSpec does not carry it, so it is taken as a keyword.
    """
    from .functionals import renormalized_energy_value

    return float(smooth_cutoff(renormalized_energy_value(u, cut.N, cut.s, p) / cut.R))


def ensemble_mean(values, weights=None) -> tuple[float, float]:
    """Weighted mean sum(w v)/sum(w) and its linearized standard error.

    Without weights this is the plain mean with SE = sd/sqrt(n) (n-1
    normalization).  With weights the SE comes from the delta method for
    the ratio estimator, with the matching small-sample correction
    n_eff/(n_eff - 1), n_eff = (sum w)^2 / sum w^2.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape:
            raise ValueError("weights length must match values length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    sw = float(np.sum(w))
    if sw == 0.0:
        raise ValueError("all weights are zero")
    mean = float(np.sum(w * v) / sw)
    resid = np.sum((w * (v - mean)) ** 2)
    if resid == 0.0:
        return mean, 0.0
    n_eff = sw**2 / float(np.sum(w**2))
    se = float(np.sqrt(resid * n_eff / (n_eff - 1.0)) / sw)
    return mean, se


def write_manifest(path, spec: EnsembleSpec, code_version: str) -> None:
    doc = {
        "master_seed": spec.master_seed,
        "n_samples": spec.n_samples,
        "s": spec.s,
        "N_ambient": spec.n_ambient,
        "rng_id": RNG_ID,
        "code_version": code_version,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
