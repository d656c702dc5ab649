"""Fourier-side representation of complex fields on the circle.

Conventions used throughout the package:

* the circle is [0, 2*pi) with periodic identification, and every integral
  is taken against the normalized measure dx/(2*pi);
* a field is u(x) = sum_n c_n exp(i n x), so Parseval reads
  (1/2pi) int |u|^2 dx = sum_n |c_n|^2 and pointwise products of fields
  are plain convolutions of coefficient sequences;
* <n> = (1 + n^2)^(1/2) is the Japanese bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "FourierState",
    "ModelParams",
    "japanese_bracket",
    "project",
    "dyadic_project",
    "sobolev_norm",
    "lebesgue_norm",
    "grid_values",
    "state_from_grid",
    "nonlinearity",
    "state_to_json",
    "state_from_json",
    "write_states",
    "read_states",
]

BINARY_MAGIC = b"GNLSSTA\x00"
BINARY_VERSION = 1


def next_pow2(m: int) -> int:
    """Smallest power of two >= m."""
    g = 1
    while g < m:
        g *= 2
    return g


def japanese_bracket(n) -> np.ndarray:
    return np.sqrt(1.0 + np.asarray(n, dtype=float) ** 2)


@dataclass(frozen=True)
class FourierState:
    """Immutable vector of Fourier coefficients c_n, |n| <= n_ambient.

    ``coeffs[k]`` holds c_n for n = k - n_ambient (centered order).
    Coefficients outside the ambient window are implicitly zero; there is
    no conjugate symmetry (the field is complex valued).
    """

    coeffs: np.ndarray
    n_ambient: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if self.n_ambient < 0:
            raise ValueError("n_ambient must be >= 0")
        if c.shape != (2 * self.n_ambient + 1,):
            raise ValueError(
                f"expected {2 * self.n_ambient + 1} coefficients, got {c.shape}"
            )
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("coefficients must be finite")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dict(cls, entries: Mapping[int, complex], n_ambient: int | None = None):
        if n_ambient is None:
            n_ambient = max((abs(n) for n in entries), default=0)
        c = np.zeros(2 * n_ambient + 1, dtype=np.complex128)
        for n, v in entries.items():
            if abs(n) > n_ambient:
                raise ValueError(f"frequency {n} outside ambient window {n_ambient}")
            c[n + n_ambient] = v
        return cls(c, n_ambient)

    @classmethod
    def zero(cls, n_ambient: int):
        return cls(np.zeros(2 * n_ambient + 1, dtype=np.complex128), n_ambient)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.n_ambient, self.n_ambient + 1)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.n_ambient:
            return 0.0 + 0.0j
        return complex(self.coeffs[n + self.n_ambient])

    def with_coeffs(self, coeffs: np.ndarray) -> "FourierState":
        return FourierState(coeffs, self.n_ambient)

    def __eq__(self, other):
        if not isinstance(other, FourierState):
            return NotImplemented
        return self.n_ambient == other.n_ambient and np.array_equal(
            self.coeffs, other.coeffs
        )


@dataclass(frozen=True)
class ModelParams:
    """Pins every convention of a single model instance.

    ``grid_size`` must be at least 2*p*N + 2 so that the projected
    nonlinearity is evaluated without aliasing (the product of p factors of
    bandwidth N has bandwidth p*N).  ``linear`` switches the nonlinearity
    off for diagnostic runs.
    """

    p: int = 5
    s: float = 1.3
    sigma: float = 0.75
    N: int = 4
    grid_size: int = 0
    dt: float = 1e-2
    tol: float = 1e-9
    linear: bool = False

    def __post_init__(self):
        if self.p < 5 or self.p % 2 == 0:
            raise ValueError("p must be an odd integer >= 5")
        if not self.sigma < self.s - 0.5:
            raise ValueError("sigma must satisfy sigma < s - 1/2")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.grid_size == 0:
            object.__setattr__(
                self, "grid_size", next_pow2(2 * self.p * self.N + 2)
            )
        if self.grid_size < 2 * self.p * self.N + 2:
            raise ValueError(
                f"grid_size must be >= 2*p*N + 2 = {2 * self.p * self.N + 2}"
            )
        if self.dt <= 0 or self.tol <= 0:
            raise ValueError("dt and tol must be positive")

    @classmethod
    def make(cls, p: int, s: float, N: int, sigma: float | None = None, **kw):
        """Params with the default sigma = s - 0.55 when not given."""
        if sigma is None:
            sigma = s - 0.55
        return cls(p=p, s=s, sigma=sigma, N=N, **kw)


def project(u: FourierState, N: int) -> FourierState:
    """Sharp frequency cutoff: zero every coefficient with |n| > N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N >= u.n_ambient:
        return u
    c = u.coeffs.copy()
    mask = np.abs(u.frequencies) > N
    c[mask] = 0.0
    return u.with_coeffs(c)


def dyadic_project(u: FourierState, L: int) -> FourierState:
    """Dyadic block projector.

    L = 1 keeps |n| <= 1; L >= 2 (a power of two) keeps L/2 < |n| <= L.
    The blocks partition the integers.
    """
    if L < 1 or (L & (L - 1)) != 0:
        raise ValueError(f"L must be a dyadic integer (1, 2, 4, ...), got {L}")
    absn = np.abs(u.frequencies)
    if L == 1:
        mask = absn <= 1
    else:
        mask = (absn > L // 2) & (absn <= L)
    c = np.where(mask, u.coeffs, 0.0)
    return u.with_coeffs(c)


def sobolev_norm(u: FourierState, r: float) -> float:
    """H^r norm: (sum <n>^(2r) |c_n|^2)^(1/2)."""
    w = (1.0 + u.frequencies.astype(float) ** 2) ** r
    return float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def grid_values(u: FourierState, grid_size: int) -> np.ndarray:
    """Values of u at x_j = 2*pi*j/grid_size, j = 0..grid_size-1.

    Exact for grid_size > 2*n_ambient.
    """
    if grid_size <= 2 * u.n_ambient:
        raise ValueError("grid_size must exceed 2*n_ambient to avoid aliasing")
    spec = np.zeros(grid_size, dtype=np.complex128)
    n = u.frequencies
    spec[np.mod(n, grid_size)] = u.coeffs
    return np.fft.ifft(spec) * grid_size


def state_from_grid(values: np.ndarray, n_ambient: int) -> FourierState:
    """Coefficients c_n, |n| <= n_ambient, of a field sampled on a grid."""
    g = len(values)
    if g <= 2 * n_ambient:
        raise ValueError("grid too small for the requested ambient window")
    spec = np.fft.fft(values) / g
    n = np.arange(-n_ambient, n_ambient + 1)
    return FourierState(spec[np.mod(n, g)], n_ambient)


def lebesgue_norm(u: FourierState, q: float, grid_size: int | None = None) -> float:
    """L^q norm against the normalized measure dx/(2*pi).

    For even integer q the result is exact (up to roundoff) whenever
    grid_size > q*n_ambient; the default grid satisfies this.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if grid_size is None:
        grid_size = next_pow2(int(np.ceil(q)) * max(u.n_ambient, 1) + 2)
    grid_size = max(grid_size, 2 * u.n_ambient + 2)
    vals = grid_values(u, grid_size)
    return float(np.mean(np.abs(vals) ** q) ** (1.0 / q))


def _nonlinearity_grid(vals: np.ndarray, p: int) -> np.ndarray:
    # |v|^(p-1) v with (p-1)/2 an integer power of |v|^2: exact in exact
    # arithmetic, no fractional powers involved.
    a2 = vals.real**2 + vals.imag**2
    return a2 ** ((p - 1) // 2) * vals


def nonlinearity(u: FourierState, params: ModelParams) -> FourierState:
    """Exact coefficients of pi_N(|pi_N u|^(p-1) pi_N u).

    Evaluated by zero-padded collocation on params.grid_size points; the
    product of p factors of bandwidth N has bandwidth p*N < grid_size/2,
    so the transform back is alias-free.
    """
    p, N, g = params.p, params.N, params.grid_size
    if g < 2 * p * N + 2:
        raise ValueError("grid_size too small for exact nonlinearity")
    # only the modes |n| <= N enter; re-window so the grid constraint is on N
    nlow = min(N, u.n_ambient)
    low = u.coeffs[np.abs(u.frequencies) <= nlow]
    vals = grid_values(FourierState(low, nlow), g)
    w = _nonlinearity_grid(vals, p)
    spec = np.fft.fft(w) / g
    n = u.frequencies
    out = np.zeros_like(u.coeffs)
    keep = np.abs(n) <= N
    out[keep] = spec[np.mod(n[keep], g)]
    return u.with_coeffs(out)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def state_to_json(u: FourierState) -> list:
    """JSON-ready list of (n, re, im) triples (zero modes included)."""
    return [
        [int(n), float(c.real), float(c.imag)]
        for n, c in zip(u.frequencies, u.coeffs)
    ]


def state_from_json(triples: Iterable) -> FourierState:
    entries = {int(n): complex(re, im) for n, re, im in triples}
    return FourierState.from_dict(entries)


def write_states(path, states: Iterable[FourierState]) -> None:
    """Binary checkpoint stream: per state a 16-byte header
    (8-byte magic, u32 version, u32 n_ambient) followed by little-endian
    f64 (re, im) pairs ordered n = -n_ambient .. n_ambient.
    """
    with open(path, "wb") as fh:
        for u in states:
            fh.write(BINARY_MAGIC)
            fh.write(np.array([BINARY_VERSION, u.n_ambient], dtype="<u4").tobytes())
            pairs = np.empty((len(u.coeffs), 2), dtype="<f8")
            pairs[:, 0] = u.coeffs.real
            pairs[:, 1] = u.coeffs.imag
            fh.write(pairs.tobytes())


def read_states(path) -> list[FourierState]:
    states = []
    with open(path, "rb") as fh:
        while True:
            head = fh.read(16)
            if not head:
                break
            if len(head) != 16 or head[:8] != BINARY_MAGIC:
                raise ValueError("corrupt state stream: bad header")
            version, n_amb = np.frombuffer(head[8:], dtype="<u4")
            if version != BINARY_VERSION:
                raise ValueError(f"unsupported state format version {version}")
            m = 2 * int(n_amb) + 1
            raw = fh.read(16 * m)
            if len(raw) != 16 * m:
                raise ValueError("corrupt state stream: truncated payload")
            pairs = np.frombuffer(raw, dtype="<f8").reshape(m, 2)
            states.append(FourierState(pairs[:, 0] + 1j * pairs[:, 1], int(n_amb)))
    return states
