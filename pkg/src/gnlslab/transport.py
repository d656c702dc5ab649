"""Monte Carlo experiments on measure transport under the truncated flow.

Every experiment draws its ensemble from the deterministic Philox stream,
works on batched coefficient arrays, and reduces with order-fixed sums,
so a (seed, config) pair pins the output exactly.

In a transport test the two sides of the identity

    E[ w(u) psi(flow_t u) ]  =  E[ w(u) psi(u) d(u) ]

are estimated from the *same* sample stream: (w, d) = (1, g) for the
plain Gaussian ensemble, (chi_R(E_N), g) with the conserved cutoff, and
(chi_R(E_N) exp(-R_{s,N}), f) for the weighted ensemble.  At finite
truncation the identities are exact (the truncated flow preserves phase
volume), so disagreement beyond Monte Carlo noise indicates a bug.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ModelParams
from .sampling import (
    EnsembleSpec,
    CutoffSpec,
    sample_block,
    sample_block_rows,
    smooth_cutoff,
    ensemble_mean,
)
from .functionals import (
    counterterm,
    energy_correction_batch,
    renormalized_energy_batch,
)
from .flow import evolve_batch

__all__ = [
    "TransportReport",
    "TailReport",
    "OBSERVABLES",
    "transport_test",
    "tail_experiment",
    "energy_convergence_experiment",
    "growth_experiment",
    "chaos_moment_check",
    "default_cutoff_R",
]

# Ensemble batches are deliberately small: the shared adaptive step of a
# batch is set by its stiffest member, and stiffness varies steeply across
# the Gaussian ensemble even after sorting by mass.
BATCH = 32


# ---------------------------------------------------------------------------
# observables: bounded measurable functionals of pi_N u
# ---------------------------------------------------------------------------

def _obs_exp_hsig(C: np.ndarray, n: np.ndarray, params: ModelParams) -> np.ndarray:
    w = (1.0 + n.astype(float) ** 2) ** params.sigma
    low = np.abs(n) <= params.N
    return np.exp(-np.sum(w[low] * (np.abs(C[:, low]) ** 2), axis=1))

def _obs_cos_re_c1(C: np.ndarray, n: np.ndarray, params: ModelParams) -> np.ndarray:
    i1 = int(np.nonzero(n == 1)[0][0])
    return np.cos(C[:, i1].real)

def _obs_capped_mass(C: np.ndarray, n: np.ndarray, params: ModelParams) -> np.ndarray:
    low = np.abs(n) <= params.N
    return np.minimum(np.sum(np.abs(C[:, low]) ** 2, axis=1), 10.0)

OBSERVABLES = {
    "exp_neg_hsig_sq": _obs_exp_hsig,
    "cos_re_c1": _obs_cos_re_c1,
    "capped_mass": _obs_capped_mass,
}


@dataclass(frozen=True)
class TransportReport:
    """Two estimates of one transported average, with their agreement z.

    For the weighted mode the means carry a common factor exp(log_scale)
    (the identities are between unnormalized measures and the raw weights
    overflow doubles); the z-score is scale invariant.  ``ess`` is the
    effective sample size (sum w)^2 / sum w^2 of the right-hand side's
    importance weights: a tiny value flags an estimate dominated by a few
    samples, i.e. a statistically degenerate configuration.
    """

    observable_id: str
    mode: str
    t: float
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    n_samples: int
    params: dict
    log_scale: float = 0.0
    ess: float = float("nan")

    @property
    def z_score(self) -> float:
        denom = np.hypot(self.lhs_se, self.rhs_se)
        if denom == 0.0:
            return 0.0 if self.lhs_mean == self.rhs_mean else float("inf")
        return abs(self.lhs_mean - self.rhs_mean) / denom

    def to_json(self) -> dict:
        return {
            "observable_id": self.observable_id,
            "mode": self.mode,
            "t": self.t,
            "lhs_mean": self.lhs_mean,
            "lhs_se": self.lhs_se,
            "rhs_mean": self.rhs_mean,
            "rhs_se": self.rhs_se,
            "z_score": self.z_score,
            "log_scale": self.log_scale,
            "ess": self.ess,
            "n_samples": self.n_samples,
            "params": self.params,
        }


@dataclass(frozen=True)
class TailReport:
    T: float
    M_grid: tuple
    log_probabilities: tuple
    log_prob_ses: tuple
    censored: tuple
    slope: float
    intercept: float
    r_squared: float
    n_samples: int
    params: dict

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "M_grid": list(self.M_grid),
            "log_probabilities": list(self.log_probabilities),
            "log_prob_ses": list(self.log_prob_ses),
            "censored": list(self.censored),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_samples": self.n_samples,
            "params": self.params,
        }


def default_cutoff_R(params: ModelParams, spec: EnsembleSpec, probe: int = 2048) -> float:
    """Twice the ensemble median of the renormalized energy (active cutoff
    that does not starve the sample)."""
    m = min(probe, spec.n_samples)
    C = sample_block(spec, 0, m)
    e = renormalized_energy_batch(C, spec.n_ambient, params)
    return 2.0 * float(np.median(e))


def _params_snapshot(params: ModelParams, spec: EnsembleSpec, cut: CutoffSpec | None) -> dict:
    d = {
        "p": params.p, "s": params.s, "sigma": params.sigma, "N": params.N,
        "grid_size": params.grid_size, "tol": params.tol, "linear": params.linear,
        "master_seed": spec.master_seed, "n_samples": spec.n_samples,
        "N_ambient": spec.n_ambient,
    }
    if cut is not None:
        d["cutoff_R"] = cut.R
    return d


def _stiffness_order(spec: EnsembleSpec) -> np.ndarray:
    """Sample order sorted by conserved mass (the nonlinear rotation rate
    grows like a power of the mass, so mass-homogeneous batches keep the
    shared adaptive step from being dragged down by one stiff member)."""
    masses = np.empty(spec.n_samples)
    for start in range(0, spec.n_samples, 8192):
        stop = min(start + 8192, spec.n_samples)
        C = sample_block(spec, start, stop)
        masses[start:stop] = np.sum(C.real**2 + C.imag**2, axis=1)
    return np.argsort(masses, kind="stable")


def transport_battery(
    params: ModelParams,
    t_list,
    spec: EnsembleSpec,
    modes=("plain",),
    cut: CutoffSpec | None = None,
    observables=None,
    per_sample_sink=None,
) -> list[TransportReport]:
    """Transport identity tests for several times and measure modes in one
    sampling sweep (one forward and one backward integration per sample).

    ``per_sample_sink(t, dict_of_columns)`` receives per-sample records
    batch by batch when given.
    """
    if any(m not in ("plain", "cutoff", "weighted") for m in modes):
        raise ValueError(f"unknown mode in {modes}")
    if ("cutoff" in modes or "weighted" in modes) and cut is None:
        raise ValueError("cutoff/weighted modes need a CutoffSpec")
    if spec.n_ambient != params.N:
        raise ValueError("transport tests sample on exactly the truncated modes")
    names = list(observables or OBSERVABLES)
    t_list = [float(t) for t in t_list]
    if any(t < 0 for t in t_list) or t_list != sorted(t_list):
        raise ValueError("t_list must be nonnegative and increasing")
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    ws = (1.0 + n.astype(float) ** 2) ** params.s
    low = np.abs(n) <= params.N
    needs_R = "weighted" in modes

    order = _stiffness_order(spec)
    B = spec.n_samples
    cols: dict = {}
    for t in t_list:
        for mode in modes:
            for name in names:
                cols[("lhs", t, mode, name)] = np.empty(B)
                cols[("rhs", t, mode, name)] = np.empty(B)
        # log importance factors, for scaling and ESS diagnostics
        for part in ("logw", "logwd"):
            for mode in modes:
                cols[(part, t, mode)] = np.empty(B)
        for name in names:
            cols[("psifwd", t, name)] = np.empty(B)
            cols[("psibase", t, name)] = np.empty(B)

    times_pos = [t for t in t_list if t > 0.0]
    for start in range(0, B, BATCH):
        idx = order[start : start + BATCH]
        C0 = sample_block_rows(spec, idx)
        fwd = {0.0: C0}
        back = {0.0: C0}
        if times_pos:
            for t, Ct in zip(times_pos, evolve_batch(C0, spec.n_ambient, times_pos, params)):
                fwd[t] = Ct
            for t, Ct in zip(
                times_pos,
                evolve_batch(C0, spec.n_ambient, [-t for t in times_pos], params),
            ):
                back[t] = Ct
        hs_base = np.sum(ws[low] * np.abs(C0[:, low]) ** 2, axis=1)
        r_base = (
            energy_correction_batch(C0, spec.n_ambient, params) if needs_R else None
        )
        if cut is not None:
            en = renormalized_energy_batch(C0, spec.n_ambient, params)
            w_cut = np.asarray(smooth_cutoff(en / cut.R))
        psi_base = {name: OBSERVABLES[name](C0, n, params) for name in names}
        for t in t_list:
            if t == 0.0:
                log_g = np.zeros(C0.shape[0])
                log_f = np.zeros(C0.shape[0])
                psi_fwd = psi_base
            else:
                hs_back = np.sum(ws[low] * np.abs(back[t][:, low]) ** 2, axis=1)
                log_g = -0.5 * (hs_back - hs_base)
                if needs_R:
                    r_back = energy_correction_batch(back[t], spec.n_ambient, params)
                    log_f = log_g - (r_back - r_base)
                psi_fwd = {name: OBSERVABLES[name](fwd[t], n, params) for name in names}
            with np.errstate(divide="ignore"):
                log_wcut = np.log(w_cut) if cut is not None else None
            for mode in modes:
                if mode == "plain":
                    logw = np.zeros(C0.shape[0])
                    logwd = log_g
                elif mode == "cutoff":
                    logw = log_wcut
                    logwd = log_wcut + log_g
                else:
                    logw = log_wcut - r_base
                    logwd = logw + log_f
                cols[("logw", t, mode)][idx] = logw
                cols[("logwd", t, mode)][idx] = logwd
            for name in names:
                cols[("psifwd", t, name)][idx] = psi_fwd[name]
                cols[("psibase", t, name)][idx] = psi_base[name]
            if per_sample_sink is not None:
                rec = {"sample_index": idx, "log_g": log_g}
                if needs_R:
                    rec["log_f"] = log_f
                if cut is not None:
                    rec["cutoff_weight"] = w_cut
                per_sample_sink(t, rec)

    reports = []
    snap = _params_snapshot(params, spec, cut)
    for t in t_list:
        for mode in modes:
            logw = cols[("logw", t, mode)]
            logwd = cols[("logwd", t, mode)]
            finite = np.isfinite(logw) | np.isfinite(logwd)
            if not np.any(finite):
                raise ValueError(f"all weights vanish in mode {mode!r}")
            mf = max(logw[np.isfinite(logw)].max(initial=-np.inf),
                     logwd[np.isfinite(logwd)].max(initial=-np.inf))
            # headroom so squared residuals in the SE stay representable
            scale = max(0.0, float(mf) - 150.0)
            w_l = np.exp(logw - scale)
            w_r = np.exp(logwd - scale)
            ess = float(np.sum(w_r) ** 2 / np.sum(w_r**2)) if np.any(w_r > 0) else 0.0
            for name in names:
                lm, ls = ensemble_mean(w_l * cols[("psifwd", t, name)])
                rm, rs = ensemble_mean(w_r * cols[("psibase", t, name)])
                reports.append(
                    TransportReport(
                        observable_id=name, mode=mode, t=t,
                        lhs_mean=lm, lhs_se=ls, rhs_mean=rm, rhs_se=rs,
                        n_samples=spec.n_samples, params=snap,
                        log_scale=scale, ess=ess,
                    )
                )
    return reports


def transport_test(
    params: ModelParams,
    t: float,
    spec: EnsembleSpec,
    cut: CutoffSpec | None = None,
    weighted: bool = False,
    observables=None,
    per_sample_sink=None,
) -> list[TransportReport]:
    """Transport identity test for one time t.

    mode: plain (cut None), cutoff (cut given), weighted (cut given and
    weighted=True).
    """
    if weighted and cut is None:
        raise ValueError("weighted mode needs a CutoffSpec")
    mode = "weighted" if weighted else ("cutoff" if cut is not None else "plain")
    sink = None
    if per_sample_sink is not None:
        sink = lambda _t, rec: per_sample_sink(rec)
    return transport_battery(
        params, [t], spec, modes=(mode,), cut=cut, observables=observables,
        per_sample_sink=sink,
    )


# ---------------------------------------------------------------------------
# flow tail estimate
# ---------------------------------------------------------------------------

def _sup_norms(
    spec: EnsembleSpec, params: ModelParams, T: float, grid_per_unit: int = 64,
    two_sided: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """(sup_t ||flow_t u||_{H^sigma} over the checkpoint grid, weights' energy).

    The grid covers [-T, T] (or [0, T]) with grid_per_unit points per unit
    time; the continuous sup is under-estimated consistently.
    """
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    wsig = (1.0 + n.astype(float) ** 2) ** params.sigma
    ncheck = max(2, int(np.ceil(grid_per_unit * T)))
    times = np.linspace(0.0, T, ncheck + 1)[1:]
    order = _stiffness_order(spec)
    sups = np.empty(spec.n_samples)
    energies = np.empty(spec.n_samples)
    for start in range(0, spec.n_samples, BATCH):
        idx = order[start : start + BATCH]
        C0 = sample_block_rows(spec, idx)
        sup = np.sqrt(np.sum(wsig * np.abs(C0) ** 2, axis=1))
        for sign in (+1.0, -1.0) if two_sided else (+1.0,):
            for Ct in evolve_batch(C0, spec.n_ambient, sign * times, params):
                nrm = np.sqrt(np.sum(wsig * np.abs(Ct) ** 2, axis=1))
                sup = np.maximum(sup, nrm)
        sups[idx] = sup
        energies[idx] = renormalized_energy_batch(C0, spec.n_ambient, params)
    return sups, energies


def tail_experiment(
    params: ModelParams,
    T: float,
    M_grid,
    spec: EnsembleSpec,
    cut: CutoffSpec,
    grid_per_unit: int = 64,
    min_hits: int = 10,
) -> TailReport:
    """Cutoff-weighted tail of sup_{|t|<=T} ||flow_t u||_{H^sigma}.

    Estimates mu_{s,R,N}(sup > M) for each M, fits log P against M^2 over
    the points with at least ``min_hits`` tail samples (the rest are
    reported censored, never extrapolated).  M_grid None picks quantiles
    of the observed sup distribution (one trajectory sweep either way).
    """
    sups, energies = _sup_norms(spec, params, T, grid_per_unit)
    w = np.asarray(smooth_cutoff(energies / cut.R))
    if M_grid is None:
        M_grid = np.quantile(sups, [0.5, 0.65, 0.78, 0.88, 0.95, 0.985, 0.997])
    M_grid = np.asarray(sorted(M_grid), dtype=float)
    logp, ses, censored = [], [], []
    for M in M_grid:
        hit = sups > M
        hits = int(np.sum(hit))
        p_est = float(np.sum(w * hit) / len(w))
        if hits < min_hits or p_est <= 0.0:
            censored.append(True)
            logp.append(float("nan"))
            ses.append(float("nan"))
            continue
        censored.append(False)
        se = float(np.sqrt(np.sum((w * hit - p_est) ** 2)) / len(w))
        logp.append(float(np.log(p_est)))
        ses.append(se / p_est)  # delta method on log
    ok = ~np.asarray(censored)
    if int(np.sum(ok)) >= 2:
        x = M_grid[ok] ** 2
        y = np.asarray(logp)[ok]
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    else:
        slope, intercept, r2 = float("nan"), float("nan"), float("nan")
    return TailReport(
        T=T,
        M_grid=tuple(float(m) for m in M_grid),
        log_probabilities=tuple(float(v) for v in logp),
        log_prob_ses=tuple(float(v) for v in ses),
        censored=tuple(bool(c) for c in censored),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        n_samples=spec.n_samples,
        params=_params_snapshot(params, spec, cut),
    )


# ---------------------------------------------------------------------------
# renormalized-energy convergence
# ---------------------------------------------------------------------------

def energy_convergence_experiment(
    s: float,
    q: float,
    N_list,
    M_ref: int,
    spec: EnsembleSpec,
    p: int = 5,
) -> dict:
    """L^q distances ||E_{M_ref} - E_N||_{L^q(mu_s)} against N.

    Also reports, for each N: the theoretical tail sum
    (sum_{N<|n|<=M} <n>^{4(1-s)})^{1/2}, the empirical q=2 distance of the
    centered kinetic parts alone, and its closed-form chi-square oracle
    sqrt(sum_{N<|n|<=M} n^4/<n>^{4s}) (termwise variance of
    (n^2/<n>^{2s})(|g_n|^2 - 2), Var |g_n|^2 = 4).
    """
    N_list = sorted(int(N) for N in N_list)
    if M_ref < max(N_list):
        raise ValueError("M_ref must dominate N_list")
    if spec.n_ambient < M_ref:
        raise ValueError("ensemble must sample modes up to M_ref")
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    params_ref = ModelParams.make(p=p, s=s, N=M_ref)

    diffs = {N: [] for N in N_list}
    kin_diffs = {N: [] for N in N_list}
    for start in range(0, spec.n_samples, BATCH):
        stop = min(start + BATCH, spec.n_samples)
        C = sample_block(spec, start, stop)
        e_ref = renormalized_energy_batch(C, spec.n_ambient, params_ref)
        a2 = C.real**2 + C.imag**2
        kin_ref = 0.5 * np.sum(
            (n.astype(float) ** 2)[np.abs(n) <= M_ref] * a2[:, np.abs(n) <= M_ref],
            axis=1,
        ) - counterterm(M_ref, s)
        for N in N_list:
            params_n = ModelParams.make(p=p, s=s, N=N)
            e_n = renormalized_energy_batch(C, spec.n_ambient, params_n)
            diffs[N].append(np.abs(e_ref - e_n))
            kin_n = 0.5 * np.sum(
                (n.astype(float) ** 2)[np.abs(n) <= N] * a2[:, np.abs(n) <= N], axis=1
            ) - counterterm(N, s)
            kin_diffs[N].append(np.abs(kin_ref - kin_n))

    rows = []
    for N in N_list:
        d = np.concatenate(diffs[N])
        kd = np.concatenate(kin_diffs[N])
        nn = np.arange(-M_ref, M_ref + 1)
        band = (np.abs(nn) > N) & (np.abs(nn) <= M_ref)
        tail = float(np.sqrt(np.sum((1.0 + nn[band].astype(float) ** 2) ** (2 * (1 - s)))))
        oracle = float(
            np.sqrt(np.sum(nn[band].astype(float) ** 4 / (1.0 + nn[band].astype(float) ** 2) ** (2 * s)))
        )
        emp_q = float(np.mean(d**q) ** (1.0 / q))
        emp_kin2 = float(np.sqrt(np.mean(kd**2)))
        rows.append(
            {
                "N": N,
                "distance_Lq": emp_q,
                "tail_sum": tail,
                "kinetic_L2": emp_kin2,
                "kinetic_oracle": oracle,
                "kinetic_ratio": emp_kin2 / oracle if oracle > 0 else float("nan"),
            }
        )
    return {
        "s": s,
        "q": q,
        "p": p,
        "M_ref": M_ref,
        "n_samples": spec.n_samples,
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# Sobolev-norm growth
# ---------------------------------------------------------------------------

def growth_experiment(
    params: ModelParams,
    T_checkpoints,
    spec: EnsembleSpec,
    grid_per_unit: int = 64,
) -> dict:
    """Per-sample fits of log sup-norm against log(1+T).

    Purely descriptive: the polynomial-growth exponent is not quantified,
    so the report carries the exponent distribution, no pass/fail.
    """
    T_checkpoints = sorted(float(T) for T in T_checkpoints)
    Tmax = T_checkpoints[-1]
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    wsig = (1.0 + n.astype(float) ** 2) ** params.sigma
    ncheck = max(2, int(np.ceil(grid_per_unit * Tmax)))
    times = np.linspace(0.0, Tmax, ncheck + 1)[1:]
    order = _stiffness_order(spec)
    exponents = np.empty(spec.n_samples)
    sups_all = np.empty((spec.n_samples, len(T_checkpoints)))
    x = np.log1p(np.asarray(T_checkpoints))
    for start in range(0, spec.n_samples, BATCH):
        idx = order[start : start + BATCH]
        C0 = sample_block_rows(spec, idx)
        run_sup = np.sqrt(np.sum(wsig * np.abs(C0) ** 2, axis=1))
        sups = np.empty((len(idx), len(T_checkpoints)))
        ci = 0
        for t, Ct in zip(times, evolve_batch(C0, spec.n_ambient, times, params)):
            nrm = np.sqrt(np.sum(wsig * np.abs(Ct) ** 2, axis=1))
            run_sup = np.maximum(run_sup, nrm)
            while ci < len(T_checkpoints) and t >= T_checkpoints[ci] - 1e-12:
                sups[:, ci] = run_sup
                ci += 1
        while ci < len(T_checkpoints):
            sups[:, ci] = run_sup
            ci += 1
        logs = np.log(sups)
        for r, row in enumerate(logs):
            exponents[idx[r]] = float(np.polyfit(x, row, 1)[0])
        sups_all[idx] = sups
    exponents = np.asarray(exponents)
    return {
        "T_checkpoints": T_checkpoints,
        "exponents": exponents.tolist(),
        "exponent_median": float(np.median(exponents)),
        "exponent_iqr": [float(np.percentile(exponents, 25)),
                         float(np.percentile(exponents, 75))],
        "sup_norms": sups_all.tolist(),
        "n_samples": spec.n_samples,
        "params": _params_snapshot(params, spec, None),
    }


# ---------------------------------------------------------------------------
# Wiener-chaos moment growth
# ---------------------------------------------------------------------------

def chaos_moment_check(s: float, N: int, q_list, spec: EnsembleSpec) -> dict:
    """Moment growth of the quadratic chaos
    S = sum_{|n|<=N} (n^2/<n>^{2s}) (|g_n|^2 - 2).

    ||S||_q / ||S||_2 should grow no faster than ~q (order-2 chaos);
    checked via the log-log slope across q_list.
    """
    q_list = sorted(float(q) for q in q_list)
    if q_list[0] < 2 or q_list[-1] > 12:
        raise ValueError("q_list must lie in [2, 12]")
    if spec.n_ambient < N:
        raise ValueError("ensemble must cover |n| <= N")
    n = np.arange(-spec.n_ambient, spec.n_ambient + 1)
    low = np.abs(n) <= N
    coef = n.astype(float) ** 2 / (1.0 + n.astype(float) ** 2) ** s
    vals = []
    for start in range(0, spec.n_samples, BATCH):
        stop = min(start + BATCH, spec.n_samples)
        C = sample_block(spec, start, stop)
        g2 = (C.real**2 + C.imag**2) * (1.0 + n.astype(float) ** 2) ** s
        vals.append(np.sum(coef[low] * (g2[:, low] - 2.0), axis=1))
    S = np.concatenate(vals)
    l2 = float(np.sqrt(np.mean(S**2)))
    ratios = [float(np.mean(np.abs(S) ** q) ** (1.0 / q)) / l2 for q in q_list]
    slope = float(np.polyfit(np.log(q_list), np.log(ratios), 1)[0]) if len(q_list) > 1 else 0.0
    return {
        "s": s,
        "N": N,
        "q_list": q_list,
        "ratios": ratios,
        "slope": slope,
        "n_samples": spec.n_samples,
    }
