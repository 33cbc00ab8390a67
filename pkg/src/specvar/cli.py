"""Batch front end: ``specvar <command> --config <path> [--assert] [--seed S] [--out DIR]``.

A config is a JSON object with ``schema_version``, a ``measure`` (or
``chain``) section, command parameters under ``params``, an optional
``seed`` and an optional ``expect`` block checked under ``--assert``.
Every command writes ``summary.json`` plus one or more CSV series.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, brownian, chain, cts, spectral, variance_class
from .errors import ConfigError, Divergent, SpecvarError
from .measures import measure_from_dict, measure_to_dict

SCHEMA_VERSION = 1
COMMANDS = ("spectrum", "variance", "classify", "nsc", "tauberian", "chain-clt", "harmonic",
            "cts", "karamata")
STOCHASTIC = ("chain-clt", "harmonic")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENT, EXIT_ASSERT = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    command: str
    measure: dict | None = None
    chain: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int | None = None
    expect: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def parse_config(doc: dict, command: str | None = None) -> ExperimentConfig:
    """Validate a config document; ``command`` from the command line wins if given."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    cmd = doc.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"command: config says {cmd!r} but {command!r} was requested")
    if cmd not in COMMANDS:
        raise ConfigError(f"command: unknown command {cmd!r}")
    known = {"schema_version", "command", "measure", "chain", "params", "seed", "expect"}
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigError(f"{extra[0]}: unknown top-level field")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: must be an object")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed: must be a nonnegative integer")
    expect = doc.get("expect", {})
    if not isinstance(expect, dict):
        raise ConfigError("expect: must be an object")
    measure = doc.get("measure")
    if measure is not None:
        _check_measure(measure)
    chain_doc = doc.get("chain")
    if chain_doc is not None and not isinstance(chain_doc, dict):
        raise ConfigError("chain: must be an object")
    if cmd == "chain-clt":
        if chain_doc is None:
            raise ConfigError("chain: required for chain-clt")
    elif cmd != "karamata" and measure is None:
        raise ConfigError(f"measure: required for {cmd}")
    return ExperimentConfig(cmd, measure, chain_doc, dict(params), seed, dict(expect), version)


def _check_measure(doc):
    try:
        measure_from_dict(doc)
    except ConfigError as exc:
        comps = doc.get("components") if isinstance(doc, dict) else None
        where = "measure"
        if isinstance(comps, list):
            for i, c in enumerate(comps):
                try:
                    measure_from_dict({"domain": doc.get("domain", "disk"), "components": [c]})
                except ConfigError:
                    where = f"measure.components[{i}]"
                    break
        raise ConfigError(f"{where}: {exc}") from exc


def config_to_dict(cfg: ExperimentConfig) -> dict:
    doc = {"schema_version": cfg.schema_version, "command": cfg.command}
    if cfg.measure is not None:
        doc["measure"] = measure_to_dict(measure_from_dict(cfg.measure))
    if cfg.chain is not None:
        doc["chain"] = cfg.chain
    if cfg.params:
        doc["params"] = cfg.params
    if cfg.seed is not None:
        doc["seed"] = cfg.seed
    if cfg.expect:
        doc["expect"] = cfg.expect
    return doc


# ----------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return '"nan"'
        if math.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return "%.17g" % v
    if v is None:
        return "null"
    return json.dumps(str(v))


def dump_json(obj, indent: int = 0) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dump_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return json.dumps(obj.value)
    return _fmt(obj)


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(getattr(v, "value", v))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_csv_cell(v) for v in r])


# --------------------------------------------------------------- commands

def _p(cfg: ExperimentConfig, key: str, default, kind=float):
    v = cfg.params.get(key, default)
    try:
        if kind is list:
            return [float(x) for x in v]
        if kind is int:
            if isinstance(v, bool) or float(v) != int(v):
                raise ValueError
            return int(v)
        if kind is str:
            return str(v)
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"params.{key}: bad value {v!r}") from None


def _measure(cfg):
    return measure_from_dict(cfg.measure)


def cmd_spectrum(cfg):
    m = _measure(cfg)
    points = _p(cfg, "points", 65, int)
    lags = _p(cfg, "lags", 16, int)
    ts = np.linspace(0.0, math.pi, points)[1:]
    dens = spectral.spectral_density(m, ts) if m.interior().components else np.zeros(ts.size)
    cdf = [spectral.spectral_cdf(m, float(t)) for t in ts]
    ks = np.arange(lags + 1)
    cov = [spectral.covariance(m, int(k)) for k in ks]
    four = spectral.fourier_coefficients(m, ks)
    summary = {"sigma2": spectral.sigma_squared(m), "total_mass": m.total_mass,
               "max_fourier_gap": float(np.max(np.abs(np.array(cov) - four)))}
    return summary, {"spectrum.csv": (("t", "density", "F"), zip(ts, dens, cdf)),
                     "covariance.csv": (("n", "covariance", "fourier"), zip(ks, cov, four))}


def cmd_variance(cfg):
    m = _measure(cfg)
    n_max = _p(cfg, "n_max", 64, int)
    rows, worst = [], 0.0
    for n in range(1, n_max + 1):
        r = variance_class.variance_routes(m, n)
        a, b, c = r["covariance-sum"], r["kernel"], r["martingale"]
        scale = max(abs(a), 1e-300)
        worst = max(worst, abs(a - b) / scale, abs(a - c) / scale)
        rows.append((n, a, b, c))
    summary = {"n_max": n_max, "max_relative_disagreement": worst,
               "verdict": "PASS" if worst <= 1e-9 else "FAIL"}
    return summary, {"variance.csv": (("n", "var_covariance", "var_kernel", "var_martingale"), rows)}


def cmd_classify(cfg):
    m = _measure(cfg)
    N = _p(cfg, "N", 2 ** 20, int)
    rep = variance_class.classify_growth(m, N)
    grid = rep.diagnostics["grid"]
    var = rep.diagnostics["variance"]
    h = [v / n ** rep.alpha_hat if v > 0 else 0.0 for n, v in zip(grid, var)]
    summary = {"verdict": rep.verdict, "alpha_hat": rep.alpha_hat, "K": rep.K,
               "alpha": rep.alpha, "sigma2": spectral.sigma_squared(m)}
    return summary, {"classify.csv": (("n", "var", "var_over_n", "h_hat"),
                                      [(n, v, v / n, hh) for n, v, hh in zip(grid, var, h)])}


def cmd_nsc(cfg):
    m = _measure(cfg)
    rep = variance_class.check_nsc(m, _p(cfg, "N", 2 ** 16, int))
    summary = {"verdict": rep.verdict, "sigma2": rep.sigma2, "C": rep.C, "C_wedge": rep.C_wedge,
               "C_box": rep.C_box, "K_pred": rep.K_pred, "K_obs": rep.K_obs}
    return summary, {"wedge.csv": (("x", "mass_over_x"), rep.wedge_profile),
                     "box.csv": (("n", "n_times_mass"), rep.box_profile)}


def cmd_tauberian(cfg):
    m = _measure(cfg)
    rep = variance_class.tauberian_reversible(m, _p(cfg, "alpha", 1.5), _p(cfg, "N", 2 ** 20, int))
    summary = {"verdict": rep.verdict, "alpha": rep.alpha, "V_ratio": rep.V_ratio,
               "r_ratio": rep.r_ratio}
    return summary, {"tauberian.csv": (("n", "var", "V_ratio", "r_ratio"), rep.rows)}


def cmd_chain_clt(cfg):
    try:
        model = chain.chain_from_dict(cfg.chain)
    except TypeError as exc:
        raise ConfigError(f"chain: {exc}") from exc
    n = _p(cfg, "n", 10 ** 6, int)
    reps = _p(cfg, "replications", 2000, int)
    norm = _p(cfg, "normalization", "solve_bn", str)
    rep = chain.clt_experiment(model, n, reps, cfg.seed, normalization=norm)
    summary = {"theta": model.theta, "n": n, "b": rep.b, "replications": reps, "ks": rep.ks,
               "ks_pvalue": rep.ks_pvalue, "mean": rep.mean, "variance": rep.variance,
               "seed": rep.seed, "empirical_var_Sn": rep.empirical_var_Sn,
               "spectral_var_Sn": rep.spectral_var_Sn,
               "var_ratio": rep.empirical_var_Sn / rep.spectral_var_Sn,
               "b2_over_var": rep.b ** 2 / rep.spectral_var_Sn, "normalization": norm}
    return summary, {"clt.csv": (("n", "replication", "S_n", "normalized"), rep.rows())}


def cmd_harmonic(cfg):
    m = _measure(cfg)
    xs = _p(cfg, "x", [0.1, 0.3, 1.0], list)
    wc = brownian.WosConfig(_p(cfg, "epsilon", 1e-6), _p(cfg, "max_steps", 10 ** 6, int), cfg.seed)
    est = brownian.harmonic_estimate(m, xs, _p(cfg, "paths", 10 ** 5, int), wc)
    rows, worst = [], 0.0
    for e in est:
        q = brownian.harmonic_oracle(m, e.x)
        z = abs(e.value - q) / e.stderr if e.stderr > 0 else (0.0 if e.value == q else math.inf)
        worst = max(worst, z)
        rows.append((e.x, e.value, e.stderr, q))
    summary = {"seed": cfg.seed, "paths": est[0].paths, "max_z": worst,
               "verdict": "PASS" if worst <= 3.5 else "FAIL"}
    return summary, {"harmonic.csv": (("x", "estimate", "stderr", "quadrature_value"), rows)}


def cmd_cts(cfg):
    m = _measure(cfg)
    grid = cfg.params.get("T_grid")
    rep = cts.cts_classify(m, None if grid is None else _p(cfg, "T_grid", None, list))
    summary = {"verdict": rep.verdict, "varsigma2": rep.varsigma2, "C": rep.C,
               "L_pred": rep.L_pred, "L_obs": rep.L_obs, "alpha_hat": rep.alpha_hat}
    return summary, {"cts.csv": (("T", "var", "var_over_T"), rep.rows)}


def cmd_karamata(cfg):
    pair = variance_class.PowerPair(_p(cfg, "A", 1.0), _p(cfg, "p", 1.0))
    mode = _p(cfg, "mode", "laplace", str)
    rep = variance_class.karamata_check(pair, _p(cfg, "rho", pair.p), _p(cfg, "L", 1.0), mode=mode)
    summary = {"verdict": rep.verdict, **rep.final}
    header = ("x", "w_ratio", "U_ratio") if mode == "laplace" else ("x", "u_ratio")
    return summary, {"karamata.csv": (header, rep.rows)}


HANDLERS = {"spectrum": cmd_spectrum, "variance": cmd_variance, "classify": cmd_classify,
            "nsc": cmd_nsc, "tauberian": cmd_tauberian, "chain-clt": cmd_chain_clt,
            "harmonic": cmd_harmonic, "cts": cmd_cts, "karamata": cmd_karamata}


# ------------------------------------------------------------- assertions

def check_expect(summary: dict, expect: dict) -> list[str]:
    """Failed expectations; each entry is an exact value or {value, rtol, atol} or {min, max}."""
    failures = []
    for key, want in sorted(expect.items()):
        if key not in summary:
            failures.append(f"{key}: not in summary")
            continue
        got = summary[key]
        got = getattr(got, "value", got)
        if isinstance(want, dict):
            try:
                g = float(got)
            except (TypeError, ValueError):
                failures.append(f"{key}: {got!r} is not numeric")
                continue
            if "value" in want:
                tol = want.get("atol", 0.0) + want.get("rtol", 0.0) * abs(want["value"])
                if not abs(g - want["value"]) <= tol:
                    failures.append(f"{key}: {g!r} not within {tol!r} of {want['value']!r}")
            if "min" in want and not g >= want["min"]:
                failures.append(f"{key}: {g!r} < {want['min']!r}")
            if "max" in want and not g <= want["max"]:
                failures.append(f"{key}: {g!r} > {want['max']!r}")
        elif got != want:
            failures.append(f"{key}: {got!r} != {want!r}")
    if not expect and summary.get("verdict") in ("FAIL", "INCONSISTENT"):
        failures.append(f"verdict: {summary['verdict']}")
    return failures


def run_config(cfg: ExperimentConfig, out: Path, assert_mode: bool = False) -> int:
    """Run one experiment, write its reports to ``out`` and return the exit status."""
    if cfg.command in STOCHASTIC and cfg.seed is None:
        raise ConfigError("seed: required for stochastic commands")
    summary, series = HANDLERS[cfg.command](cfg)
    summary = dict(summary)
    summary.update({"schema_version": SCHEMA_VERSION, "command": cfg.command,
                    "tool_version": __version__})
    if cfg.seed is not None:
        summary["seed"] = cfg.seed
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in series.items():
        write_csv(out / name, header, rows)
    failures = check_expect(summary, cfg.expect) if assert_mode else []
    summary["assert_failures"] = failures
    (out / "summary.json").write_text(dump_json(summary) + "\n")
    for f in failures:
        print(f"assert failed: {f}", file=sys.stderr)
    return EXIT_ASSERT if failures else EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="specvar", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--assert", dest="assert_mode", action="store_true",
                    help="check the config's expect block; exit 3 on failure")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", type=Path, default=Path("specvar-out"))
    args = ap.parse_args(argv)
    try:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        cfg = parse_config(doc, args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: must be nonnegative")
            cfg.seed = args.seed
        return run_config(cfg, args.out, args.assert_mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Divergent as exc:
        print(f"divergent: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except SpecvarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
