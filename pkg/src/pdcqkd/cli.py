"""Batch front-end: single-point runs, parameter sweeps and Monte-Carlo
versus closed-form comparison reports.

Configuration comes from an INI-style file (sections ``[experiment]``,
``[attack]``, ``[sweep]``, ``[output]``) and/or long-name flags; flags
override file values.  Output is data-only CSV or JSON for external
plotting; every result file echoes the fully resolved configuration so it is
self-describing and reproducible.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import math
import sys
from typing import Optional

from . import analytics
from .config import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DEFAULT_TRUNCATION,
    ConfigError,
    ExperimentConfig,
    SweepSpec,
)
from .engine import RateReport, run_experiment
from .eve import AUTO, PnsConfig
from .source import Scheme, mean_pairs, single_arm_mean

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "sweep_param",
    "sweep_value",
    "r_key_mc",
    "r_key_se",
    "r_key_oracle",
    "r_key_z",
    "r_err_mc",
    "r_err_se",
    "r_err_oracle",
    "r_err_z",
    "epsilon_mc",
    "epsilon_se",
    "epsilon_oracle",
    "epsilon_z",
    "r_key_formula",
    "r_err_formula",
    "epsilon_formula",
    "r_exp",
    "r_multi",
    "i_e",
    "i_e_saturated",
    "double_click_matched_mc",
    "double_click_matched_oracle",
    "double_click_mismatched_mc",
    "bob_no_click_mc",
    "eve_touched_fraction",
    "p_ae_hat",
    "p_eb_hat",
    "i_ae_mc",
    "i_eb_mc",
    "block_probability",
    "truncation_exceeded",
    "sifted_count",
    "trials",
]

_SCHEME_NAMES = {s.value: s for s in Scheme}

_EXPERIMENT_KEYS = {
    "scheme",
    "g",
    "mu",
    "mu_prime",
    "eta_a",
    "eta_b",
    "eta_l",
    "trials",
    "seed",
    "truncation",
    "workers",
}
_ATTACK_KEYS = {"enabled", "block_probability", "guarantee_delivery"}
_SWEEP_KEYS = {"param", "start", "stop", "steps", "scale"}
_OUTPUT_KEYS = {"format", "path"}


def _parse_bool(raw: str, field: str, errors: list[str]) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    errors.append(f"{field}: expected a boolean, got {raw!r}")
    return False


def _parse_number(raw: str, field: str, errors: list[str], kind=float):
    try:
        return kind(raw)
    except ValueError:
        errors.append(f"{field}: expected a {kind.__name__}, got {raw!r}")
        return None


def read_config_file(path: str) -> dict:
    """Parse the flat key-value config file into override-style values.

    Unknown sections or keys are rejected with their names.
    """
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh, source=path)
    errors: list[str] = []
    values: dict = {}
    known = {
        "experiment": _EXPERIMENT_KEYS,
        "attack": _ATTACK_KEYS,
        "sweep": _SWEEP_KEYS,
        "output": _OUTPUT_KEYS,
    }
    for section in parser.sections():
        if section not in known:
            errors.append(f"{path}: unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in known[section]:
                errors.append(f"{path}: unknown key '{key}' in section [{section}]")
    if errors:
        raise ConfigError(errors)

    exp = parser["experiment"] if parser.has_section("experiment") else {}
    if "scheme" in exp:
        values["scheme"] = exp["scheme"]
    for key in ("g", "mu", "mu_prime", "eta_a", "eta_b", "eta_l"):
        if key in exp:
            values[key] = _parse_number(exp[key], key, errors)
    for key, name in (("trials", "trials"), ("seed", "seed"), ("truncation", "truncation"), ("workers", "workers")):
        if key in exp:
            values[name] = _parse_number(exp[key], key, errors, int)
    if parser.has_section("attack"):
        sec = parser["attack"]
        enabled = _parse_bool(sec.get("enabled", "true"), "attack.enabled", errors)
        if enabled:
            block = sec.get("block_probability", AUTO)
            if block != AUTO:
                block = _parse_number(block, "attack.block_probability", errors)
            values["attack"] = {
                "block_probability": block,
                "guarantee_delivery": _parse_bool(
                    sec.get("guarantee_delivery", "true"),
                    "attack.guarantee_delivery",
                    errors,
                ),
            }
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        missing = [k for k in ("param", "start", "stop", "steps") if k not in sec]
        if missing:
            errors.append(f"sweep: missing keys {missing}")
        else:
            values["sweep"] = {
                "param": sec["param"],
                "start": _parse_number(sec["start"], "sweep.start", errors),
                "stop": _parse_number(sec["stop"], "sweep.stop", errors),
                "steps": _parse_number(sec["steps"], "sweep.steps", errors, int),
                "scale": sec.get("scale", "linear"),
            }
    if parser.has_section("output"):
        sec = parser["output"]
        if "format" in sec:
            values["format"] = sec["format"]
        if "path" in sec:
            values["path"] = sec["path"]
    if errors:
        raise ConfigError(errors)
    return values


def build_config(file_values: dict, flag_values: dict) -> ExperimentConfig:
    """Merge file values with flag overrides into a validated config."""
    merged = dict(file_values)
    for key, value in flag_values.items():
        if value is not None:
            merged[key] = value
    errors: list[str] = []
    scheme_name = merged.get("scheme")
    if scheme_name is None:
        errors.append("scheme: required (one of ep, wcs, pdc)")
        raise ConfigError(errors)
    scheme = _SCHEME_NAMES.get(str(scheme_name))
    if scheme is None:
        raise ConfigError([f"scheme: must be one of {sorted(_SCHEME_NAMES)}, got {scheme_name!r}"])
    attack = None
    raw_attack = merged.get("attack")
    if raw_attack is not None:
        attack = PnsConfig(
            block_probability=raw_attack.get("block_probability", AUTO),
            guarantee_delivery=raw_attack.get("guarantee_delivery", True),
        )
    sweep = None
    raw_sweep = merged.get("sweep")
    if raw_sweep is not None:
        sweep = SweepSpec(
            param=raw_sweep["param"],
            start=raw_sweep["start"],
            stop=raw_sweep["stop"],
            steps=raw_sweep["steps"],
            scale=raw_sweep.get("scale", "linear"),
        )
    config = ExperimentConfig(
        scheme=scheme,
        g=merged.get("g"),
        mu=merged.get("mu"),
        mu_prime=merged.get("mu_prime"),
        eta_a=merged.get("eta_a", 1.0),
        eta_b=merged.get("eta_b", 1.0),
        eta_l=merged.get("eta_l", 1.0),
        trials=merged.get("trials", DEFAULT_TRIALS),
        master_seed=merged.get("seed", DEFAULT_SEED),
        truncation_order=merged.get("truncation", DEFAULT_TRUNCATION),
        attack=attack,
        workers=merged.get("workers", 1),
        sweep=sweep,
        out_format=merged.get("format", "csv"),
        out_path=merged.get("path"),
    )
    return config.validated()


def parse_config(
    path: Optional[str] = None, flags: Optional[dict] = None
) -> ExperimentConfig:
    """Load the config file (if any) and apply flag overrides."""
    file_values = read_config_file(path) if path else {}
    return build_config(file_values, flags or {})


# ---------------------------------------------------------------------------
# Analytic and sweep rows
# ---------------------------------------------------------------------------


def analytic_row(config: ExperimentConfig) -> dict:
    """Closed-form / oracle quantities for one parameter point."""
    row: dict = {}
    eta_bl = config.eta_b * config.eta_l
    if config.scheme is Scheme.ENTANGLED_PAIRS:
        g = config.resolved_gain()
        oracle = analytics.exact_rates_oracle(
            g, config.eta_a, eta_bl, config.truncation_order
        )
        fk, fe, feps = analytics.ep_rates_approx(g, config.eta_a, eta_bl)
        row.update(
            r_key_oracle=oracle.r_key,
            r_err_oracle=oracle.r_err,
            epsilon_oracle=oracle.epsilon,
            r_key_formula=fk,
            r_err_formula=fe,
            epsilon_formula=feps,
            double_click_matched_oracle=oracle.dc_matched,
            double_click_mismatched_oracle=oracle.dc_mismatched,
            bob_no_click_oracle=oracle.bob_no_click,
        )
        if config.attack is not None:
            q = analytics.ep_pns_quantities(g, config.eta_a, eta_bl)
            row.update(
                r_exp=q.r_exp,
                r_multi=q.r_double,
                i_e=q.i_ae,
                i_ae_oracle=q.i_ae,
                i_eb_oracle=q.i_eb,
                p_ae_oracle=q.p_ae,
                p_eb_oracle=q.p_eb,
                eps_prime_oracle=q.eps_prime,
                i_ab_oracle=q.i_ab,
                i_e_saturated=q.saturated,
            )
            row["r_key_oracle"] = q.r_exp if not q.saturated else q.r_double
            row["epsilon_oracle"] = q.eps_prime
    elif config.scheme is Scheme.WEAK_COHERENT:
        leak = analytics.wcs_leakage(config.mu_prime, eta_bl)
        row.update(
            r_exp=leak.r_exp,
            r_multi=leak.r_multi,
            i_e=leak.i_e,
            i_e_saturated=leak.saturated,
            r_key_oracle=leak.r_exp,
            r_err_oracle=0.0,
            epsilon_oracle=0.0 if leak.r_exp > 0 else None,
        )
        if config.attack is not None and leak.saturated:
            row["r_key_oracle"] = leak.r_multi
    else:
        g = config.resolved_gain()
        leak = analytics.pdc_leakage(g, config.eta_a, eta_bl)
        row.update(
            r_exp=leak.r_exp,
            r_multi=leak.r_multi,
            i_e=leak.i_e,
            i_e_saturated=leak.saturated,
            r_key_oracle=leak.r_exp,
            r_err_oracle=0.0,
            epsilon_oracle=0.0 if leak.r_exp > 0 else None,
        )
        if config.attack is not None and leak.saturated:
            row["r_key_oracle"] = leak.r_multi
    return row


def _z_score(mc: Optional[float], se: Optional[float], oracle: Optional[float]):
    if mc is None or se is None or oracle is None or not se > 0:
        return None
    return (mc - oracle) / se


def point_row(config: ExperimentConfig, sweep_param: str = "", sweep_value=None) -> dict:
    """One result row: analytics always, Monte Carlo when trials > 0."""
    row = {"sweep_param": sweep_param, "sweep_value": sweep_value}
    row.update(analytic_row(config))
    if config.trials > 0:
        report = run_experiment(config)
        row.update(
            r_key_mc=report.r_key,
            r_key_se=report.r_key_se,
            r_err_mc=report.r_err,
            r_err_se=report.r_err_se,
            epsilon_mc=report.epsilon,
            epsilon_se=report.epsilon_se,
            double_click_matched_mc=report.double_click_matched,
            double_click_mismatched_mc=report.double_click_mismatched,
            bob_no_click_mc=report.bob_no_click_rate,
            eve_touched_fraction=report.eve_touched_fraction,
            p_ae_hat=report.p_ae_hat,
            p_eb_hat=report.p_eb_hat,
            i_ae_mc=report.i_ae,
            i_eb_mc=report.i_eb,
            block_probability=report.block_probability,
            truncation_exceeded=report.truncation_exceeded_count,
            sifted_count=report.sifted_count,
            trials=report.trials,
        )
        row["r_key_z"] = _z_score(report.r_key, report.r_key_se, row.get("r_key_oracle"))
        row["r_err_z"] = _z_score(report.r_err, report.r_err_se, row.get("r_err_oracle"))
        row["epsilon_z"] = _z_score(
            report.epsilon, report.epsilon_se, row.get("epsilon_oracle")
        )
    return row


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """Evaluate every sweep point, ordered by swept value."""
    if config.sweep is None:
        return [point_row(config)]
    param = config.sweep.param
    rows = []
    for value in sorted(config.sweep.values()):
        point = dataclasses.replace(config, sweep=None, **{param: value})
        if param == "g":
            point = dataclasses.replace(point, mu=None)
        elif param == "mu":
            point = dataclasses.replace(point, g=None)
        try:
            point = point.validated()
            rows.append(point_row(point, sweep_param=param, sweep_value=value))
        except Exception as exc:
            raise RuntimeError(f"sweep point {param}={value!r} failed: {exc}") from exc
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(rows: list[dict], fmt: str, path: Optional[str], config: ExperimentConfig) -> str:
    """Serialize rows to CSV or JSON; returns the rendered text (also written
    to ``path`` when given)."""
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": config.to_dict(),
            "rows": rows,
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write output file {path!r}: {exc}") from exc
    return text


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="configuration file")
    p.add_argument("--scheme", choices=sorted(_SCHEME_NAMES))
    p.add_argument("--g", type=float, help="down-conversion gain")
    p.add_argument("--mu", type=float, help="mean pair number (converted to gain)")
    p.add_argument("--mu-prime", dest="mu_prime", type=float, help="WCS mean photon number")
    p.add_argument("--eta-a", dest="eta_a", type=float)
    p.add_argument("--eta-b", dest="eta_b", type=float)
    p.add_argument("--eta-l", dest="eta_l", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--attack", choices=["none", "pns"])
    p.add_argument("--block-probability", dest="block_probability")
    p.add_argument("--sweep", help="param:start:stop:steps[:log]")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--output", dest="path")


def _flags_to_values(args: argparse.Namespace) -> dict:
    values: dict = {}
    for key in (
        "scheme",
        "g",
        "mu",
        "mu_prime",
        "eta_a",
        "eta_b",
        "eta_l",
        "trials",
        "seed",
        "truncation",
        "workers",
        "format",
        "path",
    ):
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    if getattr(args, "attack", None) == "pns":
        block = getattr(args, "block_probability", None)
        if block is not None and block != AUTO:
            block = float(block)
        values["attack"] = {
            "block_probability": AUTO if block is None else block,
            "guarantee_delivery": True,
        }
    elif getattr(args, "attack", None) == "none":
        values["attack"] = None
    if getattr(args, "sweep", None):
        parts = args.sweep.split(":")
        if len(parts) not in (4, 5):
            raise ConfigError(["sweep: expected param:start:stop:steps[:log]"])
        values["sweep"] = {
            "param": parts[0],
            "start": float(parts[1]),
            "stop": float(parts[2]),
            "steps": int(parts[3]),
            "scale": parts[4] if len(parts) == 5 else "linear",
        }
    return values


def _error_block(exc: Exception) -> str:
    errors = getattr(exc, "errors", None) or [str(exc)]
    return json.dumps({"error": True, "messages": errors}, indent=2)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pdcqkd",
        description="Monte Carlo and analytic rates for QKD with imperfect pair sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("analytic", "closed forms and exact oracle only"),
        ("simulate", "single-point Monte Carlo plus oracle"),
        ("sweep", "sweep one parameter"),
        ("compare", "Monte Carlo vs oracle with z-score verdict"),
    ):
        p = sub.add_parser(name, help=desc)
        _add_common_flags(p)
        if name == "compare":
            p.add_argument("--sigma", type=float, default=3.0, help="z-score threshold")
    args = parser.parse_args(argv)

    try:
        flags = _flags_to_values(args)
        config = parse_config(getattr(args, "config", None), flags)
        if args.command == "analytic":
            config = dataclasses.replace(config, trials=0).validated()
            rows = run_sweep(config)
            print(emit(rows, config.out_format, config.out_path, config), end="")
            return 0
        if args.command in ("simulate", "sweep"):
            rows = run_sweep(config)
            print(emit(rows, config.out_format, config.out_path, config), end="")
            return 0
        # compare
        rows = run_sweep(config)
        failed = False
        for row in rows:
            for key in ("r_key_z", "r_err_z", "epsilon_z"):
                z = row.get(key)
                status = "n/a"
                if z is not None:
                    ok = abs(z) <= args.sigma
                    failed = failed or not ok
                    status = f"{'PASS' if ok else 'FAIL'} z={z:+.3f}"
                label = f"{row.get('sweep_param') or 'point'}={row.get('sweep_value')}"
                print(f"{label} {key[:-2]}: {status}")
        print(emit(rows, config.out_format, config.out_path, config), end="")
        return 1 if failed else 0
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(_error_block(exc), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
