"""Command-line experiment runner.

    ncnet run --config cfg.json --out results/ --seed 7

The config is a JSON object with keys ``experiment``, ``params``, ``seed`` and
``output_path``. Each experiment writes ``<experiment>.csv`` whose first line
is ``# config: <resolved json>``, plus ``manifest.txt``. Nothing time- or
host-dependent is written, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds, fading, mapping, simkernel
from .special import EULER_GAMMA

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

TOP_LEVEL_KEYS = ("experiment", "params", "seed", "output_path")


def _unit_grid(n: int = 99) -> list[float]:
    return [round(x, 12) for x in np.linspace(0.01, 0.99, n)]


DEFAULTS: dict[str, dict] = {
    "fig3a_bound_vs_delta": {
        "n_T": 2,
        "n_R": 2,
        "rho": [0.1, 0.5, 0.9],
        "alpha1": None,
        "delta": None,  # 99 points on [0.01, 0.99] plus 1.0
    },
    "fig3b_bound_vs_rho": {
        "n_T": 2,
        "n_R": 2,
        "delta": [0.1, 0.5, 1.0],
        "alpha1": None,
        "rho": None,  # 99 points, descending from 0.99 to 0.01
    },
    "fig4_decay_patterns": {
        "eta": 3.2,
        "n_cells": 200,
        "freq_hz": 2.4e9,
        "gain_G": 1e-4,
        "h_b": 50.0,
        "h_m": 1.5,
        "crossover_m": None,
        "freq_mhz": 1500.0,
        "ref_scale": 1e-18,
        "ref_rho": 0.9,
    },
    "lp_growth": {
        "sigma2": 1.0,
        "snr_exponents": list(range(1, 13)),
        "rho": [0.3, 0.5, 0.9],
        "a": [1.0, 1.5, 2.0],
    },
    "thm2_sweep": {
        "n_T": 1,
        "n_R": 1,
        "delta": 1.0,
        "sigma2": 1.0,
        "rho": 0.9,
        "P": [1e3, 1e6, 1e9, 1e12],
        "xi_points": 200,
    },
    "cor2_growth": {
        "a": 2.0,
        "eps": 0.5,
        "delta": 1.0,
        "sigma2": 1.0,
        "loglog_start": 10.0,
        "decades": 6.0,
        "points": 13,
    },
    "mapping_audit": {"max_length": 16},
    "identity_audit": {
        "fading_samples": 1_000_000,
        "chi_square_samples": 200_000,
        "chi_square_n_R": [1, 2, 4],
        "chi_square_K": 2.0,
        "cauchy_beta": [0.1, 1.0, 10.0],
        "cauchy_n_R": [1, 2, 4],
        "geometric_p": [0.05, 0.3, 0.5, 0.9],
        "telescoping_max_n_T": 8,
        "telescoping_delta": None,  # 99-point unit grid
    },
}


class ConfigError(ValueError):
    pass


# --- config loading ----------------------------------------------------------


def _key_line(text: str, key: str) -> str:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if m is None:
        return ""
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - text.rfind("\n", 0, m.start())
    return f"line {line} column {col}: "


def parse_config(text: str, source: str = "<config>") -> dict:
    """Validate a JSON config and return it with defaults filled in."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(f"{source}: {_key_line(text, key)}unknown key {key!r}")
    exp = raw.get("experiment")
    if exp not in DEFAULTS:
        raise ConfigError(
            f"{source}: {_key_line(text, 'experiment')}experiment must be one of {sorted(DEFAULTS)}"
        )
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{source}: {_key_line(text, 'params')}params must be an object")
    for key in params:
        if key not in DEFAULTS[exp]:
            raise ConfigError(f"{source}: {_key_line(text, key)}unknown parameter {key!r} for {exp}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"{source}: {_key_line(text, 'seed')}seed must be an unsigned 64-bit integer")
    out = raw.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"{source}: {_key_line(text, 'output_path')}output_path must be a string")
    return {"experiment": exp, "params": {**DEFAULTS[exp], **params}, "seed": seed, "output_path": out}


def _listify(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


# --- experiments ---------------------------------------------------------------
# each returns (columns, rows, passed) with passed None when there is no check


def _bound_row(n_T, n_R, delta, rho, alpha1):
    cfg = bounds.NetworkConfig(n_T=n_T, n_R=n_R, delta=delta)
    t1 = bounds.theorem1_upper_bound(cfg, rho, alpha1)
    c1 = bounds.corollary1_upper_bound(cfg, rho, alpha1)
    a1 = rho if alpha1 is None else alpha1
    return [n_T, n_R, delta, rho, a1, t1.bits, c1.bits, t1.nats, c1.nats]


_BOUND_COLS = ["n_T", "n_R", "delta", "rho", "alpha1",
               "theorem1_bits", "corollary1_bits", "theorem1_nats", "corollary1_nats"]


def _sweep(points, fn):
    # evaluated concurrently; map keeps input order
    with ThreadPoolExecutor() as pool:
        return list(pool.map(lambda args: fn(*args), points))


def run_fig3a(p, seed):
    deltas = _unit_grid() + [1.0] if p["delta"] is None else _listify(p["delta"])
    pts = [(p["n_T"], p["n_R"], d, r, p["alpha1"]) for r in _listify(p["rho"]) for d in deltas]
    return _BOUND_COLS, _sweep(pts, _bound_row), None


def run_fig3b(p, seed):
    rhos = _unit_grid()[::-1] if p["rho"] is None else _listify(p["rho"])
    pts = [(p["n_T"], p["n_R"], d, r, p["alpha1"]) for d in _listify(p["delta"]) for r in rhos]
    return _BOUND_COLS, _sweep(pts, _bound_row), None


def run_fig4(p, seed):
    dep = fading.sample_deployment(p["eta"], seed=seed, min_points=p["n_cells"])
    models = {
        "fspl_db": fading.FreeSpace(p["freq_hz"], p["gain_G"], p["h_b"], p["h_m"]),
        "two_ray_db": fading.TwoRay(p["freq_hz"], p["gain_G"], p["h_b"], p["h_m"], p["crossover_m"]),
        "okumura_hata_db": fading.OkumuraHataSuburban(p["freq_mhz"], p["h_b"], p["h_m"]),
    }
    n = p["n_cells"]
    prof = {k: fading.profile_from_deployment(dep, m).values(n) for k, m in models.items()}
    rows = []
    for ell in range(1, n + 1):
        ref = math.log10(p["ref_scale"]) + ell * math.log10(p["ref_rho"])
        rows.append(
            [ell, float(dep.distances[ell - 1])]
            + [10.0 * math.log10(prof[k][ell - 1]) for k in models]
            + [10.0 * ref]
        )
    return ["ell", "distance_km", *models, "exponential_ref_db"], rows, None


def run_lp_growth(p, seed):
    s2 = p["sigma2"]
    rows = []
    for e in p["snr_exponents"]:
        P = 10.0**e * s2
        for r in _listify(p["rho"]):
            L = bounds.min_LP(fading.ExponentialProfile(r), P, s2)
            rows.append([e, P, "exponential", r, L, bounds.LP_exponential_closed_form(r, P, s2), ""])
        for a in _listify(p["a"]):
            L = bounds.LP_double_exponential(a, P, s2)
            scale = math.log(math.log(P / s2)) ** (1.0 / a) if P / s2 > math.e else math.nan
            rows.append([e, P, "double_exponential", a, bounds.min_LP(fading.DoubleExponentialProfile(a), P, s2),
                         L, L / scale])
    cols = ["snr_exponent", "P", "profile", "parameter", "min_LP", "closed_form_LP", "lemma1_ratio"]
    return cols, rows, None


def run_thm2(p, seed):
    cfg = bounds.NetworkConfig(n_T=p["n_T"], n_R=p["n_R"], delta=p["delta"], sigma2=p["sigma2"])
    prof = fading.ExponentialProfile(p["rho"])
    grid = bounds.default_xi_grid(p["xi_points"])
    rows = []
    for P in _listify(p["P"]):
        pt = bounds.theorem2_optimized(cfg, prof, P, grid)
        rows.append([P, pt.xi, pt.L_P, pt.value_nats, pt.value_bits, int(pt.flagged)])
    return ["P", "xi", "L_P", "theorem2_nats", "theorem2_bits", "flagged"], rows, None


def run_cor2(p, seed):
    grid = bounds.double_exponential_loglog_grid(p["loglog_start"], p["decades"], p["points"])
    series = bounds.corollary2_growth_check(p["a"], p["eps"], p["delta"], p["sigma2"], grid)
    rows = series.rows()
    cols = list(rows[0])
    return cols, [[r[c] for c in cols] for r in rows], series.positive and series.sustained


def run_mapping_audit(p, seed):
    results = mapping.audit_mapping(p["max_length"])
    cols = ["L", "n_words", "bijective", "weight_preserving", "structure", "round_trip", "passed"]
    rows = [
        [r.length, r.n_words, int(r.bijective), int(r.weight_preserving), int(r.structure),
         int(r.round_trip), int(r.passed)]
        for r in results
    ]
    return cols, rows, all(r.passed for r in results)


def identity_checks(p, seed) -> list[list]:
    """Rows of (check, parameter, value, target, tolerance, passed)."""
    rows = []
    est = simkernel.verify_exp_log_fading(p["fading_samples"], seed)
    rows.append(["exp_log_fading", "", est.mean, -EULER_GAMMA, 3 * est.std_error, est.within(-EULER_GAMMA)])
    for i, n_R in enumerate(p["chi_square_n_R"]):
        est, exact = simkernel.chi_square_log_identity(n_R, p["chi_square_K"], p["chi_square_samples"], seed + 1 + i)
        rows.append(["chi_square_log", f"n_R={n_R}", est.mean, exact, 3 * est.std_error, est.within(exact)])
    for beta in p["cauchy_beta"]:
        for n_R in p["cauchy_n_R"]:
            mass = simkernel.cauchy_density_mass(beta, n_R)
            rows.append(["cauchy_mass", f"beta={beta};n_R={n_R}", mass, 1.0, 1e-6, abs(mass - 1.0) <= 1e-6])
    for q in p["geometric_p"]:
        g = mapping.geometric_sum_identities(q)
        for name in ("mass", "mean"):
            v, t = g[f"{name}_partial"], g[f"{name}_closed"]
            rows.append([f"geometric_{name}", f"p={q}", v, t, 1e-12, abs(v - t) <= 1e-12 * max(1.0, abs(t))])
    deltas = _unit_grid() if p["telescoping_delta"] is None else _listify(p["telescoping_delta"])
    for n_T in range(1, p["telescoping_max_n_T"] + 1):
        worst = max(bounds.binomial_ratio_sum(n_T, d) - n_T * (1.0 - d) for d in deltas)
        rows.append(["binomial_telescoping", f"n_T={n_T}", worst, 0.0, 1e-12, worst <= 1e-12])
    return rows


def run_identity_audit(p, seed):
    rows = identity_checks(p, seed)
    cols = ["check", "parameter", "value", "target", "tolerance", "passed"]
    return cols, [r[:5] + [int(bool(r[5]))] for r in rows], all(bool(r[5]) for r in rows)


EXPERIMENTS = {
    "fig3a_bound_vs_delta": run_fig3a,
    "fig3b_bound_vs_rho": run_fig3b,
    "fig4_decay_patterns": run_fig4,
    "lp_growth": run_lp_growth,
    "thm2_sweep": run_thm2,
    "cor2_growth": run_cor2,
    "mapping_audit": run_mapping_audit,
    "identity_audit": run_identity_audit,
}


# --- output -----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _header_config(config: dict) -> str:
    # the output location is left out so identical runs match byte for byte
    return json.dumps({k: v for k, v in config.items() if k != "output_path"}, sort_keys=True)


def render_csv(config: dict, cols: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# config: " + _header_config(config) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_result_csv(path) -> tuple[dict, list[dict]]:
    """Parse a CSV written by ``run`` into (config, rows as string dicts)."""
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("# config: "):
            raise ValueError("missing config header")
        return json.loads(header[len("# config: "):]), list(csv.DictReader(fh))


def run(config: dict, out_dir: Path) -> tuple[int, Path]:
    cols, rows, passed = EXPERIMENTS[config["experiment"]](config["params"], config["seed"])
    out_dir.mkdir(parents=True, exist_ok=True)
    body = render_csv(config, cols, rows)
    path = out_dir / f"{config['experiment']}.csv"
    path.write_text(body)
    status = "n/a" if passed is None else ("PASS" if passed else "FAIL")
    manifest = "\n".join([
        f"experiment: {config['experiment']}",
        f"seed: {config['seed']}",
        f"config: {_header_config(config)}",
        f"file: {path.name} rows={len(rows)} sha256={hashlib.sha256(body.encode()).hexdigest()}",
        f"status: {status}",
        "",
    ])
    (out_dir / "manifest.txt").write_text(manifest)
    return (EXIT_FAILED if passed is False else EXIT_OK), path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ncnet", description="Run capacity-bound experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, default=None, help="output directory (overrides output_path)")
    r.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides config)")
    args = ap.parse_args(argv)

    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        config = parse_config(text, str(args.config))
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            config["seed"] = args.seed
        out = args.out if args.out is not None else config["output_path"]
        if out is None:
            raise ConfigError("no output directory: pass --out or set output_path")
        config["output_path"] = str(out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, path = run(config, Path(out))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
