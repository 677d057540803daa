"""Command-line harness: configuration, experiment dispatch, persistence.

Subcommands: verify-lemmas, blowup, lifespan, testfn, decay, figures,
selftest.  Each reads an optional JSON config file, applies one-to-one
flag overrides (``--set key=value``), runs the experiment, and writes
CSV tables, a metadata sidecar, run-record JSONs, and (for ``figures``)
SVG plots into the output directory.  When ``--out`` is absent the
FRACDAMP_OUT environment variable is honored.

Exit codes: 0 all-pass, 1 assertion failure, 2 usage/config error,
3 numerical non-convergence.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .experiments import (
    DEFAULT_CONFIGS,
    EXIT_ASSERTION,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    run_experiment,
)
from .figures import emit_figures
from .quadrature import QuadratureFailure
from .tables import ResultTable, SchemaError, canonical_hash, write_metadata

OUT_ENV = "FRACDAMP_OUT"


def _parse_override(item: str) -> tuple:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _resolve_config(name, config_path, overrides, seed, tolerance_scale):
    config = dict(DEFAULT_CONFIGS[name])
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        config.update(loaded)
    for item in overrides:
        key, value = _parse_override(item)
        config[key] = value
    config["seed"] = seed
    config["tolerance_scale"] = tolerance_scale
    return config


def _resolve_out(out) -> Path:
    import os

    if out is None:
        out = os.environ.get(OUT_ENV, "fracdamp-out")
    return Path(out)


def _write_outputs(name, result, config, out_dir) -> None:
    cfg_hash = canonical_hash({k: v for k, v in config.items() if k != "out"})
    out_dir.mkdir(parents=True, exist_ok=True)
    for table in result.tables:
        table.config_hash = cfg_hash
        table.write_csv(out_dir / f"{table.name}.csv")
    for i, rec in enumerate(result.records):
        rec_path = out_dir / f"run_{i:03d}.json"
        payload = rec.to_dict()
        payload["config_hash"] = cfg_hash
        rec_path.write_text(json.dumps(payload, indent=1, default=str) + "\n")
    write_metadata(
        out_dir / "metadata.json", config, cfg_hash,
        extra={"experiment": name, "exit_code": result.exit_code,
               "messages": result.messages, **{"summary": result.metadata}},
    )


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="JSON experiment config")(fn)
    fn = click.option("--out", default=None, help=f"output directory (or ${OUT_ENV})")(fn)
    fn = click.option("--seed", default=0, type=int, help="seed for randomized suites")(fn)
    fn = click.option("--workers", default=1, type=int, help="worker-pool size")(fn)
    fn = click.option("--tolerance-scale", default=1.0, type=float,
                      help="scale factor applied to pass/fail tolerances")(fn)
    fn = click.option("--set", "overrides", multiple=True,
                      help="override a config field, key=value (repeatable)")(fn)
    return fn


def _run(name, config_path, out, seed, workers, tolerance_scale, overrides):
    try:
        config = _resolve_config(name, config_path, overrides, seed, tolerance_scale)
        result = run_experiment(name, config, workers=workers)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except QuadratureFailure as exc:
        click.echo(f"numerical non-convergence: {exc}", err=True)
        sys.exit(EXIT_NONCONVERGENCE)
    except Exception as exc:  # assumption violations from the pipeline
        click.echo(f"failure: {exc}", err=True)
        sys.exit(EXIT_ASSERTION)
    out_dir = _resolve_out(out)
    _write_outputs(name, result, config, out_dir)
    status = {EXIT_OK: "all-pass", EXIT_ASSERTION: "FAIL",
              EXIT_NONCONVERGENCE: "non-convergence"}[result.exit_code]
    click.echo(f"{name}: {status} ({len(result.tables)} tables -> {out_dir})")
    for msg in result.messages:
        click.echo(f"  {msg}")
    sys.exit(result.exit_code)


@click.group()
def main():
    """Verification suites and simulations for damped sigma-evolution models."""


for _name in ("verify-lemmas", "blowup", "lifespan", "testfn", "decay", "selftest"):

    def _make(name):
        @_common_options
        def cmd(config_path, out, seed, workers, tolerance_scale, overrides):
            _run(name, config_path, out, seed, workers, tolerance_scale, overrides)

        cmd.__name__ = name.replace("-", "_")
        cmd.__doc__ = f"Run the {name} experiment."
        return cmd

    main.command(name=_name)(_make(_name))


@main.command(name="figures")
@_common_options
def figures_cmd(config_path, out, seed, workers, tolerance_scale, overrides):
    """Emit SVG figures (plus plot scripts) from result tables."""
    try:
        config = _resolve_config("figures", config_path, overrides, seed, tolerance_scale)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    out_dir = _resolve_out(out)
    tables_dir = Path(config.get("tables_dir") or out_dir)
    if not tables_dir.exists():
        click.echo(f"config error: tables dir {tables_dir} does not exist", err=True)
        sys.exit(EXIT_USAGE)
    tables = []
    try:
        for csv_path in sorted(tables_dir.glob("*.csv")):
            tables.append(ResultTable.from_csv(csv_path))
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    written = emit_figures(tables, out_dir)
    click.echo(f"figures: wrote {len(written)} SVG file(s) -> {out_dir}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
