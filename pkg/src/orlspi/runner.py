"""Experiment execution: per-seed runs, bound verdicts, CSV/JSON artifacts.

Each (config, seed) run writes a trace CSV (byte-identical across repeated
executions) and a summary JSON with the realized norms, the persistency
certificate found on the realized regressors, and a pass/fail/not-applicable
verdict for each checkable error bound. A multi-seed aggregate CSV holds the
median and min/max envelope per timestep.
"""

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import backend, loop, noise, rls
from .errors import OrlspiError

TRACE_COLUMNS = (
    "t",
    "err_p",
    "err_theta",
    "err_k",
    "x_norm",
    "u_norm",
    "w_norm",
    "lambda_min_h",
    "breakdown_flag",
)

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_NA = "not-applicable"


def _fmt(x):
    """Fixed-width scientific form, 17 significant digits (round-trip exact)."""
    return format(float(x), ".16e")


def emit_trace_csv(trace, path):
    """Write the per-timestep trace; one row per step, stable formatting."""
    rows = [",".join(TRACE_COLUMNS)]
    x_norm = np.linalg.norm(trace.x, axis=1)
    u_norm = np.linalg.norm(trace.u, axis=1)
    w_norm = np.linalg.norm(trace.w, axis=1)
    for i in range(trace.horizon):
        rows.append(
            ",".join(
                (
                    str(i + 1),
                    _fmt(trace.err_p[i]),
                    _fmt(trace.err_theta[i]),
                    _fmt(trace.err_k[i]),
                    _fmt(x_norm[i]),
                    _fmt(u_norm[i]),
                    _fmt(w_norm[i]),
                    _fmt(trace.lambda_min_h[i]),
                    str(int(trace.breakdown[i])),
                )
            )
        )
    _write_text(path, "\n".join(rows) + "\n")


def emit_summary_json(summary, path):
    _write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def emit_aggregate_csv(traces, path):
    """Median and min/max envelope of the error columns across seeds."""
    err_p = np.stack([t.err_p for t in traces])
    err_th = np.stack([t.err_theta for t in traces])
    rows = [
        "t,err_p_median,err_p_min,err_p_max,err_theta_median,err_theta_min,err_theta_max"
    ]
    for i in range(err_p.shape[1]):
        rows.append(
            ",".join(
                (
                    str(i + 1),
                    _fmt(np.median(err_p[:, i])),
                    _fmt(err_p[:, i].min()),
                    _fmt(err_p[:, i].max()),
                    _fmt(np.median(err_th[:, i])),
                    _fmt(err_th[:, i].min()),
                    _fmt(err_th[:, i].max()),
                )
            )
        )
    _write_text(path, "\n".join(rows) + "\n")


def _write_text(path, text):
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OrlspiError(f"cannot write {path}: {exc}") from exc


def bound_verdicts(exp, trace):
    """Check every applicable error bound along one realized run."""
    n, m = exp.plant.n_x, exp.plant.n_u
    d_bar = float(np.max(np.linalg.norm(trace.d, axis=1)))
    w_sup = noise.sup_norm(trace.w)
    w_energy = noise.energy_norm(trace.w)
    s0 = float(np.linalg.norm(exp.theta0 - np.hstack([exp.plant.a, exp.plant.b])))
    a = exp.h0_scale()

    m_interval = 2 * (n + m)
    pers = rls.find_persistency_params(trace.d, m_interval=m_interval, n_max=4 * (n + m))

    checks = {}
    if pers is None or a is None:
        reason = "no persistency certificate found" if pers is None else "H0 is not a scaled identity"
        for key in ("pointwise_iss", "energy_iss", "h_min_eig_growth"):
            checks[key] = {"verdict": VERDICT_NA, "reason": reason}
        return d_bar, w_sup, w_energy, pers, checks

    params = rls.RlsBoundParams(a=a, pers=pers, d_bar=d_bar, n_x=n, n_u=m)
    t_arr = np.arange(1, trace.horizon + 1, dtype=float)
    beta = np.array([rls.beta_theta(s0, t, params) for t in range(1, trace.horizon + 1)])

    pointwise = beta + rls.gamma_theta(w_sup, params)
    worst_pw = float(np.max(trace.err_theta - pointwise))
    checks["pointwise_iss"] = {
        "verdict": VERDICT_PASS if worst_pw <= 0.0 else VERDICT_FAIL,
        "max_violation": worst_pw,
    }

    if exp.schedule_kind == "EB" or (exp.schedule_kind == "constant" and exp.schedule_magnitude == 0.0):
        energy = beta + params.d_bar * rls.eta(params) * w_energy / np.sqrt(t_arr)
        worst_en = float(np.max(trace.err_theta - energy))
        checks["energy_iss"] = {
            "verdict": VERDICT_PASS if worst_en <= 0.0 else VERDICT_FAIL,
            "max_violation": worst_en,
        }
    else:
        checks["energy_iss"] = {"verdict": VERDICT_NA, "reason": "schedule is not energy bounded"}

    growth_ok = rls.h_min_eig_growth_check(trace.lambda_min_h, params)
    checks["h_min_eig_growth"] = {"verdict": VERDICT_PASS if growth_ok else VERDICT_FAIL}
    return d_bar, w_sup, w_energy, pers, checks


def summarize(exp, seed, algorithm, trace, wall_clock):
    d_bar, w_sup, w_energy, pers, checks = bound_verdicts(exp, trace)
    return {
        "name": exp.name,
        "preset": exp.preset,
        "algorithm": algorithm,
        "backend": backend.active_name(),
        "seed": seed,
        "horizon": trace.horizon,
        "schedule": exp.schedule_kind,
        "excitation": exp.excitation,
        "final_err_p": float(trace.err_p[-1]),
        "final_err_theta": float(trace.err_theta[-1]),
        "final_err_k": float(trace.err_k[-1]),
        "breakdown_events": trace.breakdown_count(),
        "d_bar": d_bar,
        "w_sup": w_sup,
        "w_energy": w_energy,
        "persistency": None
        if pers is None
        else {"n_window": pers.n_window, "m_interval": pers.m_interval, "alpha": pers.alpha},
        "bound_checks": checks,
        "wall_clock_s": wall_clock,
    }


def _artifact_paths(out_dir, name, algorithm, seed):
    stem = f"{name}_{algorithm}_seed{seed}"
    return (
        os.path.join(out_dir, f"{stem}_trace.csv"),
        os.path.join(out_dir, f"{stem}_summary.json"),
    )


def run_one(exp, seed, algorithm, out_dir):
    """Execute one (config, seed) run and write its artifacts."""
    cfg = exp.orls_config(seed)
    schedule = exp.schedule(seed)
    started = time.perf_counter()
    if algorithm == "pi":
        trace = loop.orls_pi_run(cfg, schedule)
    elif algorithm == "pg":
        trace = loop.orls_pg_run(cfg, schedule)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    wall = time.perf_counter() - started
    summary = summarize(exp, seed, algorithm, trace, wall)
    if out_dir is not None:
        trace_path, summary_path = _artifact_paths(out_dir, exp.name, algorithm, seed)
        emit_trace_csv(trace, trace_path)
        emit_summary_json(summary, summary_path)
    return trace, summary


def max_workers():
    raw = os.environ.get("ORLSPI_MAX_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise OrlspiError(f"ORLSPI_MAX_WORKERS must be an integer, got {raw!r}")
    return max(1, value)


def execute(exp, algorithm="pi", out_dir=None, seeds=None):
    """Run every seed (parallelism capped by ORLSPI_MAX_WORKERS); aggregate."""
    seeds = list(exp.seeds if seeds is None else seeds)
    out_dir = out_dir or exp.out_dir
    workers = min(max_workers(), len(seeds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_star, [(exp, s, algorithm, out_dir) for s in seeds]))
    else:
        results = [run_one(exp, s, algorithm, out_dir) for s in seeds]
    traces = [r[0] for r in results]
    summaries = [r[1] for r in results]
    if out_dir is not None and len(traces) > 1:
        emit_aggregate_csv(traces, os.path.join(out_dir, f"{exp.name}_{algorithm}_aggregate.csv"))
    return traces, summaries


def _run_one_star(args):
    return run_one(*args)


def first_crossing(err_p, threshold):
    """First step t with err_p[t] <= threshold, or None."""
    idx = np.nonzero(np.asarray(err_p) <= threshold)[0]
    return int(idx[0]) + 1 if idx.size else None


def compare(exp, out_dir=None, seeds=None):
    """Run both gain-update rules on matched seeds and report crossings."""
    if exp.pg_stepsize is None:
        raise OrlspiError("compare needs pg_stepsize in the configuration")
    seeds = list(exp.seeds if seeds is None else seeds)
    out_dir = out_dir or exp.out_dir
    pi_traces, pi_summaries = execute(exp, "pi", out_dir, seeds)
    pg_traces, pg_summaries = execute(exp, "pg", out_dir, seeds)
    thr = exp.compare_threshold
    per_seed = []
    for seed, tr_pi, tr_pg in zip(seeds, pi_traces, pg_traces):
        c_pi = first_crossing(tr_pi.err_p, thr)
        c_pg = first_crossing(tr_pg.err_p, thr)
        per_seed.append(
            {
                "seed": seed,
                "pi_first_step": c_pi,
                "pg_first_step": c_pg,
                "pi_final_err_p": float(tr_pi.err_p[-1]),
                "pg_final_err_p": float(tr_pg.err_p[-1]),
            }
        )
    pi_faster = all(
        row["pi_first_step"] is not None
        and (row["pg_first_step"] is None or row["pi_first_step"] < row["pg_first_step"])
        for row in per_seed
    )
    report = {
        "name": exp.name,
        "threshold": thr,
        "pg_stepsize": exp.pg_stepsize,
        "schedule": exp.schedule_kind,
        "seeds": seeds,
        "per_seed": per_seed,
        "pi_faster_on_all_seeds": pi_faster,
    }
    if out_dir is not None:
        emit_summary_json(report, os.path.join(out_dir, f"{exp.name}_compare.json"))
    return report, (pi_traces, pi_summaries), (pg_traces, pg_summaries)
