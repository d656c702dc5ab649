"""Command-line surface: every experiment behind one entry point.

Exit codes: 0 success; 2 validation error (bad arguments or config);
3 theorem-check violation (a resonance scan found a counterexample,
which contradicts a proved lemma and demands human eyes); 4 numerical
accuracy failure (an identity check missed its tolerance or the
integrator exhausted its accuracy budget).

Configuration files are flat `key = value` text (UTF-8, '#' comments);
unknown keys and duplicates are rejected, and command-line flags override
file values.  The effective configuration is echoed into every output's
provenance block.  See docs/formats.md for the schemas.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .spectral import FourierState, ModelParams, sobolev_norm, state_to_json, write_states
from .sampling import EnsembleSpec, CutoffSpec, sample_mu_s, write_manifest
from .functionals import mass, truncated_energy, modified_energy, modified_energy_derivative
from .flow import evolve, conservation_report, AccuracyError, FlowError
from . import resonance as rs
from . import transport as tp
from .reporting import write_report, write_csv
from . import __version__

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_THEOREM = 3
EXIT_ACCURACY = 4

COMMANDS = (
    "sample", "evolve", "conserve", "normal-form", "transport", "tail",
    "energy-convergence", "growth", "resonance", "dyadic", "chaos", "selftest",
)


class ConfigError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_list(conv):
    def parse(v: str):
        return [conv(x) for x in v.replace(" ", "").split(",") if x]
    return parse


# key -> (parser, default); the single source of truth for the config schema
SCHEMA = {
    "p": (int, 5),
    "s": (float, 1.3),
    "sigma": (float, None),
    "N": (int, 4),
    "grid_size": (int, 0),
    "dt": (float, 1e-2),
    "tol": (float, 1e-9),
    "linear": (_parse_bool, False),
    "master_seed": (int, 20260101),
    "n_samples": (int, 1000),
    "n_ambient": (int, None),
    "index": (int, 0),
    "t": (float, 0.5),
    "times": (_parse_list(float), None),
    "T": (float, 1.0),
    "checkpoints": (int, 17),
    "K": (int, 10),
    "K_stability": (int, 0),
    "q": (float, 2.0),
    "q_list": (_parse_list(float), None),
    "N_list": (_parse_list(int), None),
    "M_ref": (int, 64),
    "M_grid": (_parse_list(float), None),
    "cutoff_R": (float, 0.0),
    "mode": (str, "plain"),
    "trials": (int, 50),
    "permutations": (int, 10),
    "max_dyad": (int, 64),
    "grid_per_unit": (int, 64),
    "samples": (int, 20),
    "output_dir": (str, "."),
    "emit_json": (_parse_bool, True),
    "emit_csv": (_parse_bool, True),
    "emit_binary": (_parse_bool, False),
    "threads": (int, 0),
}


def load_config(path: str) -> dict:
    """Parse a flat key = value config file (fail-closed)."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            parser, _ = SCHEMA[key]
            try:
                out[key] = parser(val)
            except Exception as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return out


def save_config(path: str, config: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(config):
            v = config[key]
            if v is None:
                continue
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            fh.write(f"{key} = {v}\n")


def effective_config(args) -> dict:
    """File config overlaid with command-line flags (flags win)."""
    cfg = {k: d for k, (_, d) in SCHEMA.items()}
    if args.config:
        cfg.update(load_config(args.config))
    for key in SCHEMA:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    cfg["command"] = args.command
    return cfg


def _params(cfg: dict) -> ModelParams:
    sigma = cfg["sigma"]
    if sigma is None:
        sigma = cfg["s"] - 0.55
    return ModelParams(
        p=cfg["p"], s=cfg["s"], sigma=sigma, N=cfg["N"],
        grid_size=cfg["grid_size"], dt=cfg["dt"], tol=cfg["tol"],
        linear=cfg["linear"],
    )


def _spec(cfg: dict, n_ambient: int | None = None) -> EnsembleSpec:
    amb = n_ambient if n_ambient is not None else cfg["n_ambient"]
    if amb is None:
        amb = cfg["N"]
    return EnsembleSpec(
        master_seed=cfg["master_seed"], n_samples=cfg["n_samples"],
        s=cfg["s"], n_ambient=amb,
    )


def _outpath(cfg: dict, name: str) -> str:
    os.makedirs(cfg["output_dir"], exist_ok=True)
    return os.path.join(cfg["output_dir"], name)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sample(cfg: dict) -> int:
    spec = _spec(cfg)
    write_manifest(_outpath(cfg, "ensemble_manifest.json"), spec, __version__)
    states = [sample_mu_s(spec, i) for i in range(min(spec.n_samples, 1024))]
    if cfg["emit_binary"]:
        write_states(_outpath(cfg, "samples.bin"), states)
    if cfg["emit_json"]:
        doc = [state_to_json(u) for u in states[: min(len(states), 16)]]
        write_report(
            _outpath(cfg, "sample_report.json"), "sample", cfg,
            {"n_written": len(states), "first_states": doc},
        )
    return EXIT_OK


def cmd_evolve(cfg: dict) -> int:
    import time as _time

    from .functionals import (
        energy_correction,
        modified_energy,
        modified_energy_derivative,
        renormalized_energy,
    )

    params = _params(cfg)
    spec = _spec(cfg)
    u0 = sample_mu_s(spec, cfg["index"])
    u1 = evolve(u0, cfg["t"], params)
    if cfg["emit_binary"]:
        write_states(_outpath(cfg, "evolved.bin"), [u0, u1])
    if cfg["emit_csv"]:
        evals = {
            "mass": mass,
            "E_N": lambda u: truncated_energy(u, params).E_N,
            "renormalized_energy": lambda u: renormalized_energy(u, params),
            "energy_correction": lambda u: energy_correction(u, params),
            "modified_energy": lambda u: modified_energy(u, params),
            "modified_energy_derivative": lambda u: modified_energy_derivative(u, params),
        }
        rows = []
        for tag, state in (("before", u0), ("after", u1)):
            for fid, fn in evals.items():
                t0 = _time.perf_counter()
                val = fn(state)
                ms = (_time.perf_counter() - t0) * 1e3
                rows.append(
                    (f"{fid}_{tag}", params.p, params.s, params.N,
                     cfg["index"], float(np.real(val)), float(np.imag(val)), ms)
                )
        write_csv(
            _outpath(cfg, "functional_evaluations.csv"),
            ("functional_id", "p", "s", "N", "sample_index",
             "value_re", "value_im", "wall_time_ms"),
            rows, cfg,
        )
    write_report(
        _outpath(cfg, "evolve_report.json"), "evolve", cfg,
        {
            "t": cfg["t"],
            "mass_before": mass(u0),
            "mass_after": mass(u1),
            "state": state_to_json(u1),
        },
    )
    return EXIT_OK


def cmd_conserve(cfg: dict) -> int:
    params = _params(cfg)
    spec = _spec(cfg)
    u0 = sample_mu_s(spec, cfg["index"])
    rec = conservation_report(u0, cfg["T"], cfg["checkpoints"], params)
    rows = []
    for t, state in zip(rec.times, rec.states):
        b = truncated_energy(state, params)
        rows.append((t, b.mass, b.E_N, sobolev_norm(state, params.sigma)))
    if cfg["emit_csv"]:
        write_csv(
            _outpath(cfg, "trajectory.csv"),
            ("time", "mass", "E_N", "H_sigma_norm"), rows, cfg,
        )
    if cfg["emit_binary"]:
        write_states(_outpath(cfg, "trajectory.bin"), rec.states)
    ok = rec.drift_M <= 10 * params.tol and rec.drift_EN <= 10 * params.tol
    write_report(
        _outpath(cfg, "conserve_report.json"), "conserve", cfg,
        {"drift_M": rec.drift_M, "drift_EN": rec.drift_EN, "T": cfg["T"]},
        passed=ok,
        criteria={"drift_budget": 10 * params.tol},
    )
    return EXIT_OK if ok else EXIT_ACCURACY


def cmd_normal_form(cfg: dict) -> int:
    params = _params(cfg)
    spec = _spec(cfg, n_ambient=cfg["N"])
    tight = ModelParams(
        p=params.p, s=params.s, sigma=params.sigma, N=params.N,
        grid_size=params.grid_size, dt=params.dt, tol=1e-12, linear=params.linear,
    )
    rels, fits = [], []
    for i in range(cfg["samples"]):
        u = sample_mu_s(
            EnsembleSpec(spec.master_seed, max(cfg["samples"], spec.n_samples),
                         spec.s, spec.n_ambient), i)
        Q = modified_energy_derivative(u, params)
        hs = [1e-3 * 2.0**-k for k in range(4)]
        D = [
            (modified_energy(evolve(u, h, tight), params)
             - modified_energy(evolve(u, -h, tight), params)) / (2 * h)
            for h in hs
        ]
        row = D
        for lev in range(1, len(hs)):
            fac = 4.0**lev
            row = [(fac * row[i + 1] - row[i]) / (fac - 1) for i in range(len(row) - 1)]
        rels.append(abs(row[0] - Q) / abs(Q))
        fits.append((row[0], Q))
    fd = np.array([f[0] for f in fits])
    qs = np.array([f[1] for f in fits])
    fitted_constant = float(np.dot(fd, qs) / np.dot(qs, qs))
    max_rel = float(max(rels))
    ok = max_rel <= 1e-6
    write_report(
        _outpath(cfg, "normal_form_report.json"), "normal-form", cfg,
        {
            "max_rel_error": max_rel,
            "rel_errors": [float(r) for r in rels],
            "fitted_constant": fitted_constant,
        },
        passed=ok,
        criteria={"max_rel_error_budget": 1e-6},
    )
    return EXIT_OK if ok else EXIT_ACCURACY


def cmd_transport(cfg: dict) -> int:
    params = _params(cfg)
    spec = _spec(cfg, n_ambient=cfg["N"])
    modes = tuple(m.strip() for m in cfg["mode"].split(",") if m.strip())
    cut = None
    if set(modes) & {"cutoff", "weighted"}:
        R = cfg["cutoff_R"] or tp.default_cutoff_R(params, spec)
        cut = CutoffSpec(R=R, N=params.N, s=params.s)
    times = cfg["times"] if cfg["times"] is not None else [cfg["t"]]
    csv_rows = []

    def sink(t, rec):
        if not cfg["emit_csv"]:
            return
        for i in range(len(rec["sample_index"])):
            csv_rows.append(
                (t, int(rec["sample_index"][i]), rec["log_g"][i],
                 rec.get("log_f", rec["log_g"])[i],
                 rec.get("cutoff_weight", np.ones(1))[i] if "cutoff_weight" in rec else 1.0)
            )

    reports = tp.transport_battery(
        params, times, spec, modes=modes, cut=cut, per_sample_sink=sink
    )
    zs = [r.z_score for r in reports]
    n_over3 = sum(1 for z in zs if z > 3.0)
    ok = n_over3 <= 1 and all(z <= 4.5 for z in zs)
    # histogram of log g for the plotter (presentation data, computed here
    # so the plotter never recomputes statistics)
    hist = None
    if csv_rows:
        logg = np.array([r[2] for r in csv_rows])
        edges = np.linspace(logg.min(), logg.max(), 41)
        counts, _ = np.histogram(logg, bins=edges)
        hist = {"edges": edges.tolist(), "counts": counts.tolist(), "quantity": "log_g"}
    if cfg["emit_csv"]:
        csv_rows.sort(key=lambda r: (r[0], r[1]))
        write_csv(
            _outpath(cfg, "transport_samples.csv"),
            ("t", "sample_index", "log_g", "log_f", "cutoff_weight"),
            csv_rows, cfg,
        )
    write_report(
        _outpath(cfg, "transport_report.json"), "transport", cfg,
        {
            "reports": [r.to_json() for r in reports],
            "density_histogram": hist,
        },
        passed=ok,
        criteria={"z_soft": 3.0, "z_hard": 4.5, "max_soft_violations": 1},
    )
    return EXIT_OK if ok else EXIT_ACCURACY


def cmd_tail(cfg: dict) -> int:
    params = _params(cfg)
    spec = _spec(cfg, n_ambient=cfg["N"])
    R = cfg["cutoff_R"] or tp.default_cutoff_R(params, spec)
    cut = CutoffSpec(R=R, N=params.N, s=params.s)
    rep = tp.tail_experiment(params, cfg["T"], cfg["M_grid"], spec, cut,
                             grid_per_unit=cfg["grid_per_unit"])
    ok = rep.slope < 0 and rep.r_squared >= 0.9
    if cfg["emit_csv"]:
        rows = [
            (m, lp, se, int(c))
            for m, lp, se, c in zip(rep.M_grid, rep.log_probabilities,
                                    rep.log_prob_ses, rep.censored)
        ]
        write_csv(_outpath(cfg, "tail_points.csv"),
                  ("M", "log_probability", "log_prob_se", "censored"), rows, cfg)
    write_report(
        _outpath(cfg, "tail_report.json"), "tail", cfg, rep.to_json(),
        passed=ok, criteria={"slope": "negative", "r_squared_min": 0.9},
    )
    return EXIT_OK


def cmd_energy_convergence(cfg: dict) -> int:
    N_list = cfg["N_list"] or [4, 8, 16, 32]
    spec = _spec(cfg, n_ambient=cfg["M_ref"])
    rep = tp.energy_convergence_experiment(
        cfg["s"], cfg["q"], N_list, cfg["M_ref"], spec, p=cfg["p"]
    )
    dists = [row["distance_Lq"] for row in rep["rows"]]
    ratios = [row["kinetic_ratio"] for row in rep["rows"]]
    ok = all(d1 > d2 for d1, d2 in zip(dists, dists[1:])) and all(
        2 / 3 <= r <= 3 / 2 for r in ratios
    )
    if cfg["emit_csv"]:
        write_csv(
            _outpath(cfg, "energy_convergence.csv"),
            ("N", "distance_Lq", "tail_sum", "kinetic_L2", "kinetic_oracle", "kinetic_ratio"),
            [(r["N"], r["distance_Lq"], r["tail_sum"], r["kinetic_L2"],
              r["kinetic_oracle"], r["kinetic_ratio"]) for r in rep["rows"]],
            cfg,
        )
    write_report(
        _outpath(cfg, "energy_convergence_report.json"), "energy-convergence",
        cfg, rep, passed=ok,
        criteria={"kinetic_ratio_band": [2 / 3, 3 / 2], "monotone": True},
    )
    return EXIT_OK if ok else EXIT_ACCURACY


def cmd_growth(cfg: dict) -> int:
    params = _params(cfg)
    spec = _spec(cfg)
    T_checkpoints = cfg["times"] or [1.0, 2.0, 4.0, 8.0]
    rep = tp.growth_experiment(params, T_checkpoints, spec,
                               grid_per_unit=cfg["grid_per_unit"])
    if cfg["emit_csv"]:
        rows = []
        for i, sups in enumerate(rep["sup_norms"]):
            for T, sup in zip(rep["T_checkpoints"], sups):
                rows.append((i, T, sup))
        write_csv(_outpath(cfg, "growth_curves.csv"),
                  ("sample_index", "T", "sup_norm"), rows, cfg)
    slim = dict(rep)
    slim.pop("sup_norms")
    write_report(_outpath(cfg, "growth_report.json"), "growth", cfg, slim,
                 passed=None, criteria={"descriptive": True})
    return EXIT_OK


def cmd_resonance(cfg: dict) -> int:
    p, K = cfg["p"], cfg["K"]
    sp = rs.sp_threshold(p)
    grid = np.linspace(1e-3, 1.5, 1000)
    thr = rs.threshold_equivalence_scan(p, grid)
    low = rs.omega_lower_bound_scan(p, K)
    rem = rs.remark_scan(p, min(K, 15))
    stability = None
    K2 = cfg["K_stability"] or max(2, K // 2)
    low2 = rs.omega_lower_bound_scan(p, K2)
    if low.extremal_value > 0 and low2.extremal_value > 0:
        stability = max(low.extremal_value, low2.extremal_value) / min(
            low.extremal_value, low2.extremal_value
        )
    violated = thr.violated or low.violated or rem.violated
    write_report(
        _outpath(cfg, "resonance_report.json"), "resonance", cfg,
        {
            "s_p": float(sp),
            "threshold_scan": thr.to_json(),
            "omega_lower_bound": low.to_json(),
            "omega_lower_bound_halfK": low2.to_json(),
            "remark_scan": rem.to_json(),
            "c_p_stability_factor": stability,
        },
        passed=not violated,
        criteria={"no_counterexample": True, "c_p_stability_max": 2.0},
    )
    print(f"{'scan':26s} {'tuples':>12s} {'extremal':>12s} {'violated':>9s}  witness")
    for rep in (thr, low, low2, rem):
        wit = list(rep.witness.k) if rep.witness is not None else "-"
        print(f"{rep.scan_id:26s} {rep.tuples_checked:12d} "
              f"{rep.extremal_value:12.5g} {str(rep.violated):>9s}  {wit}")
    print(f"s_{p} = {sp:.7f}; c_p stability across K: "
          f"{stability:.3f}x" if stability else "")
    return EXIT_THEOREM if violated else EXIT_OK


def cmd_dyadic(cfg: dict) -> int:
    psi = rs.psi_upper_bound_scan(cfg["p"], cfg["s"], cfg["K"])
    psi_half = rs.psi_upper_bound_scan(cfg["p"], cfg["s"], max(2, cfg["K"] // 2))
    dy = rs.dyadic_estimate_scan(
        cfg["p"], cfg["s"], trials=cfg["trials"],
        permutations=cfg["permutations"], max_dyad=cfg["max_dyad"],
    )
    stab = psi.extremal_value / psi_half.extremal_value if psi_half.extremal_value else float("inf")
    ok = not dy.violated and stab <= 1.25
    extra = dict(dy.to_json())
    extra.pop("rows", None)
    write_report(
        _outpath(cfg, "dyadic_report.json"), "dyadic", cfg,
        {
            "psi_scan": psi.to_json(),
            "psi_scan_halfK": psi_half.to_json(),
            "psi_stability_factor": stab,
            "dyadic_scan": extra,
        },
        passed=ok,
        criteria={"slope_max": 0.1, "psi_stability_max": 1.25},
    )
    return EXIT_THEOREM if dy.violated else EXIT_OK


def cmd_chaos(cfg: dict) -> int:
    spec = _spec(cfg, n_ambient=cfg["N"])
    q_list = cfg["q_list"] or [2, 3, 4, 6, 8, 10, 12]
    rep = tp.chaos_moment_check(cfg["s"], cfg["N"], q_list, spec)
    ok = rep["slope"] <= 1.2
    write_report(_outpath(cfg, "chaos_report.json"), "chaos", cfg, rep,
                 passed=ok, criteria={"slope_max": 1.2})
    return EXIT_OK


def cmd_selftest(cfg: dict) -> int:
    """Quick smoke pass over the definitional examples of every module."""
    from .spectral import project, dyadic_project, lebesgue_norm, nonlinearity
    from .functionals import psi_2s, omega, Psi1, counterterm
    from .sampling import smooth_cutoff, ensemble_mean

    u = FourierState.from_dict({0: 1, 3: 5}, n_ambient=8)
    assert project(u, 2).coeff(3) == 0 and project(u, 2).coeff(0) == 1
    assert dyadic_project(u, 4).coeff(3) == 5
    assert abs(lebesgue_norm(FourierState.from_dict({0: 2}), 6) - 2) < 1e-12
    params = ModelParams.make(p=5, s=1.5, N=2)
    g = nonlinearity(FourierState.from_dict({0: 1}, 2), params)
    assert abs(g.coeff(0) - 1) < 1e-12
    assert psi_2s([2, 1, 0, 1, 0, 0], 1.5) == 6.0
    assert omega([2, 1, 0, 1, 0, 0]) == 2
    assert Psi1([2, 1, 0, 1, 0, 0], 1.5) == 3.0
    assert counterterm(0, 1.5) == 0.0
    assert smooth_cutoff(0.3) == 1.0 and smooth_cutoff(1.2) == 0.0
    m, se = ensemble_mean([1.0, 1.0, 1.0])
    assert m == 1.0 and se == 0.0
    u0 = FourierState.from_dict({0: 0.1}, 4)
    p4 = ModelParams.make(p=5, s=1.3, N=4, tol=1e-8)
    assert evolve(u0, 0.0, p4) is u0
    b = truncated_energy(FourierState.from_dict({0: 1}, 2), ModelParams.make(p=5, s=1.3, N=2))
    assert abs(b.E_N - 7.0 / 6.0) < 1e-12
    write_report(_outpath(cfg, "selftest_report.json"), "selftest", cfg,
                 {"checks": "definitional examples"}, passed=True)
    return EXIT_OK


HANDLERS = {
    "sample": cmd_sample,
    "evolve": cmd_evolve,
    "conserve": cmd_conserve,
    "normal-form": cmd_normal_form,
    "transport": cmd_transport,
    "tail": cmd_tail,
    "energy-convergence": cmd_energy_convergence,
    "growth": cmd_growth,
    "resonance": cmd_resonance,
    "dyadic": cmd_dyadic,
    "chaos": cmd_chaos,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gnlslab",
        description="Spectral laboratory for the truncated generalized NLS on the circle",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value configuration file")
    for key, (parser, _) in SCHEMA.items():
        flag = "--" + key.replace("_", "-")
        if parser is _parse_bool:
            ap.add_argument(flag, type=_parse_bool, default=None, metavar="BOOL")
        elif isinstance(parser, type) or callable(parser):
            ap.add_argument(flag, type=parser, default=None)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else 0
    try:
        cfg = effective_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if cfg["threads"]:
        import numba

        numba.set_num_threads(cfg["threads"])
    try:
        return HANDLERS[cfg["command"]](cfg)
    except (ConfigError, ValueError, IndexError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (AccuracyError, FlowError) as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
