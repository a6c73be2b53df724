"""Command-line entry points: estimate | verify | sweep | oracle.

Outputs are deterministic for a fixed config and seed: CSV tables use
RFC-4180 quoting, JSON reports are sorted-key with a schema_version field.
Every refusal exits nonzero with a machine-readable reason code on stderr.
"""

from __future__ import annotations

import csv
import json
import sys as _sys
from pathlib import Path

import click
import numpy as np

from .config import (
    SCHEMA_VERSION,
    RunConfig,
    build_chart,
    build_potential,
    build_system,
    load_config,
)
from .errors import ConfigError, LeafpressError, UnsupportedPropertyError
from .measures import default_registry
from .potentials import AdditiveBirkhoff, check_subadditivity
from .pressure import (
    brute_force_oracle,
    build_pressure_table,
    conflicts_from_positions,
    estimate_pressure,
    max_weight_separated_dp,
    min_weight_spanning_dp,
    ball_sup_weights,
)
from .presets import load_preset, preset_names
from .variational import (
    check_properties,
    power_rule_check,
    stage_limit_check,
    variational_certificate,
)

CSV_COLUMNS = ["n", "epsilon", "m", "logP", "logQ", "logGreedy"]


def _fail(exc):
    payload = {"error": exc.reason, "detail": str(exc)}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    _sys.exit(2)


def _resolve_config(config, preset, seed):
    if (config is None) == (preset is None):
        raise ConfigError("provide exactly one of --config and --preset")
    cfg = load_config(config) if config else load_preset(preset)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _write_json(path, payload):
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _table_rows(table):
    return [
        {
            "n": r.n,
            "epsilon": r.epsilon,
            "m": r.m,
            "logP": repr(r.log_packing),
            "logQ": repr(r.log_spanning),
            "logGreedy": repr(r.log_greedy),
        }
        for r in table.rows
    ]


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, quoting=csv.QUOTE_MINIMAL)
        writer.writeheader()
        writer.writerows(rows)


def _run_pipeline(cfg):
    sysm = build_system(cfg)
    chart = build_chart(cfg, sysm)
    G = build_potential(cfg.potential)
    table = build_pressure_table(sysm, chart, G, cfg.n_values, cfg.epsilons)
    report = estimate_pressure(table)
    return sysm, chart, G, table, report


@click.group()
def main():
    """Unstable-pressure estimation on partially hyperbolic torus maps."""


_shared = [
    click.option("--config", type=click.Path(exists=True), default=None, help="TOML/JSON config"),
    click.option("--preset", type=click.Choice(preset_names()), default=None),
    click.option("--out", type=click.Path(), default=".", help="output directory"),
    click.option("--seed", type=int, default=None),
    click.option("--jobs", type=int, default=1),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@main.command()
@shared_options
def estimate(config, preset, out, seed, jobs):
    """Finite-stage pressure table plus growth-rate estimate."""
    try:
        cfg = _resolve_config(config, preset, seed)
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        _, _, _, table, report = _run_pipeline(cfg)
        _write_csv(outdir / "table.csv", CSV_COLUMNS, _table_rows(table))
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "estimate": report.estimate,
            "q_estimate": report.q_estimate,
            "per_eps": {repr(k): v for k, v in report.per_eps.items()},
            "diagnostics": report.diagnostics,
            "seed": cfg.seed,
        }
        _write_json(outdir / "report.json", payload)
        click.echo(f"estimate {report.estimate:.6f} -> {outdir / 'report.json'}")
    except LeafpressError as exc:
        _fail(exc)


@main.command()
@shared_options
def verify(config, preset, out, seed, jobs):
    """Variational certificate, property suite, power rule, stage limit."""
    try:
        cfg = _resolve_config(config, preset, seed)
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        sysm, chart, G, table, report = _run_pipeline(cfg)
        registry = default_registry(sysm)
        cert = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "pressure_estimate": report.estimate,
            "checks": {},
        }
        hard_fail = False
        audit = check_subadditivity(G, sysm, trials=100, max_n=8, seed=cfg.seed)
        cert["checks"]["subadditivity"] = {
            "passed": audit.passed,
            "max_violation": audit.max_violation,
        }
        hard_fail |= not audit.passed
        if "variational" in cfg.checks:
            vrep = variational_certificate(
                sysm, chart, G, registry, cfg.n_values, cfg.epsilons,
                tol=cfg.tol, seed=cfg.seed, estimate=report.estimate,
            )
            cert["checks"]["variational"] = {
                "verdict": vrep.verdict,
                "gap": vrep.gap,
                "best_sum": vrep.best_sum,
                "one_sided_ok": vrep.one_sided_ok,
                "candidates": vrep.candidates,
            }
            hard_fail |= (not vrep.one_sided_ok) or vrep.verdict == "violation"
        if "properties" in cfg.checks:
            H = build_potential(cfg.properties_h)
            try:
                prep = check_properties(sysm, chart, G, H, tol=cfg.tol)
                cert["checks"]["properties"] = {
                    "passed": prep.passed,
                    "items": {str(k): v for k, v in prep.items.items()},
                }
                exact_ok = all(prep.items[k]["passed"] for k in range(1, 6))
                hard_fail |= not exact_ok
            except UnsupportedPropertyError as exc:
                cert["checks"]["properties"] = {"notice": exc.reason, "detail": str(exc)}
        if "power" in cfg.checks:
            prep = power_rule_check(sysm, chart, G, k=2, tol=cfg.tol)
            cert["checks"]["power_rule"] = {
                "passed": prep.passed,
                "defect": prep.defect,
                "hu_defect": prep.hu_defect,
            }
            hard_fail |= prep.hu_defect > 1e-9
        if "stage" in cfg.checks:
            srep = stage_limit_check(sysm, chart, G, eps_values=cfg.epsilons)
            cert["checks"]["stage_limit"] = {
                "passed": srep.passed,
                "stage_estimates": srep.stage_estimates,
                "subadditive_estimate": srep.subadditive_estimate,
            }
        oracle_defect = _oracle_battery(instances=25, max_m=10, seed=cfg.seed)
        cert["checks"]["oracle"] = {"max_defect": oracle_defect, "passed": oracle_defect <= 1e-9}
        hard_fail |= oracle_defect > 1e-9
        cert["hard_fail"] = hard_fail
        _write_json(outdir / "certificate.json", cert)
        click.echo(f"certificate -> {outdir / 'certificate.json'} (hard_fail={hard_fail})")
        if hard_fail:
            _sys.exit(1)
    except LeafpressError as exc:
        _fail(exc)


def _apply_sweep(cfg, axis, value):
    cfg = RunConfig.from_dict(json.loads(cfg.dumps()))
    if axis == "epsilon":
        cfg.epsilons = [float(value)]
    elif axis == "delta":
        cfg.delta = float(value)
    elif axis == "n":
        cfg.n_max = int(value)
    elif axis == "magnitude":
        cfg.system["kind"] = "perturbed-cat-rotation"
        cfg.system["magnitude"] = float(value)
    elif axis == "exponent":
        cfg.potential = {"kind": "cocycle", "exponent": float(value)}
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return cfg.validate()


@main.command()
@shared_options
@click.option("--axis", default=None, help="epsilon | delta | n | magnitude | exponent")
@click.option("--values", default=None, help="comma-separated sweep values")
def sweep(config, preset, out, seed, jobs, axis, values):
    """Cross-product runs along one axis; one tidy CSV."""
    try:
        cfg = _resolve_config(config, preset, seed)
        axis = axis or cfg.sweep_axis
        vals = (
            [float(v) for v in values.split(",")] if values else list(cfg.sweep_values)
        )
        if not axis or not vals:
            raise ConfigError("sweep needs an axis and a nonempty value list")
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        rows, summary = [], []
        for v in vals:
            run = _apply_sweep(cfg, axis, v)
            _, _, _, table, report = _run_pipeline(run)
            for r in _table_rows(table):
                rows.append({"label": cfg.label, "axis": axis, "value": repr(v), **r})
            summary.append({"axis": axis, "value": v, "estimate": report.estimate})
        _write_csv(outdir / "sweep.csv", ["label", "axis", "value"] + CSV_COLUMNS, rows)
        _write_json(
            outdir / "sweep.json",
            {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "runs": summary},
        )
        click.echo(f"{len(vals)} runs -> {outdir / 'sweep.csv'}")
    except LeafpressError as exc:
        _fail(exc)


class _SyntheticSample:
    def __init__(self, params):
        self.params = params


def _random_instance(rng, max_m):
    """Synthetic monotone Bowen positions + log weights for oracle validation."""
    m = int(rng.integers(4, max_m + 1))
    depth = int(rng.integers(1, 5))
    params = np.cumsum(rng.random(m) + 0.05)
    rates = 1.0 + 2.0 * rng.random(depth)
    positions = np.cumprod(rates)[:, None] * params[None, :]
    eps = float(rng.uniform(0.2, 2.0) * np.median(np.diff(positions[-1])))
    cs = conflicts_from_positions(_SyntheticSample(params), positions, eps)
    lw = rng.normal(scale=1.5, size=m)
    return cs, lw


def _oracle_battery(instances, max_m, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        cs, lw = _random_instance(rng, max_m)
        pack = max_weight_separated_dp(cs, lw)
        span = min_weight_spanning_dp(cs, ball_sup_weights(cs, lw))
        worst = max(
            worst,
            abs(pack.log_total - brute_force_oracle(cs, lw, "packing").log_total),
            abs(span.log_total - brute_force_oracle(cs, lw, "covering").log_total),
        )
    return float(worst)


@main.command()
@click.option("--instances", type=int, default=200)
@click.option("--max-m", type=int, default=14)
@click.option("--seed", type=int, default=0)
def oracle(instances, max_m, seed):
    """Validate the packing/covering DP against brute-force enumeration."""
    try:
        worst = _oracle_battery(instances, max_m, seed)
        ok = worst <= 1e-9
        click.echo(
            json.dumps(
                {
                    "schema_version": SCHEMA_VERSION,
                    "instances": instances,
                    "max_m": max_m,
                    "max_defect": worst,
                    "passed": ok,
                },
                sort_keys=True,
            )
        )
        if not ok:
            _sys.exit(1)
    except LeafpressError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
