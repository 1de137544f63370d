"""Command line entry point: ``hartree-lab <subcommand> [--config FILE] [--seed N] [--out DIR]``."""

import json
import sys
from pathlib import Path

import click

from .errors import ConfigInvalid, HartreeLabError
from .harness import OUT_ENV, Experiment, config_reference, default_output_root, load_config, run

# exit codes: 0 pass, 1 assertion failure, 2 invalid configuration, 3 other library error
EXIT_FAIL, EXIT_CONFIG, EXIT_ERROR = 1, 2, 3


def _common(fn):
    fn = click.option("--out", type=click.Path(file_okay=False), envvar=OUT_ENV,
                      help=f"Output root (default ${OUT_ENV} or ./hartree_runs).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="YAML experiment file.")(fn)
    return fn


def _execute(experiments, config_path, seed, out):
    worst = 0
    for exp in experiments:
        try:
            cfg = load_config(config_path or {}, seed=seed, output_dir=out,
                              experiment=exp.value)
            record = run(cfg)
        except ConfigInvalid as exc:
            click.echo(f"config-invalid: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except HartreeLabError as exc:
            click.echo(f"{exc.code}: {exc}", err=True)
            sys.exit(EXIT_ERROR)
        for res in record.results:
            click.echo(res.summary())
        click.echo(f"run directory: {record.run_dir}")
        worst = max(worst, record.exit_code)
    sys.exit(EXIT_FAIL if worst else 0)


@click.group()
def main():
    """Numerical verification harness for long-range Hartree scattering."""


@main.command("verify-weights")
@_common
def verify_weights(config_path, seed, out):
    """Weight inequalities on random frequency pairs."""
    _execute([Experiment.WEIGHTS], config_path, seed, out)


@main.command("verify-appendix")
@click.option("--part", type=click.Choice(["a", "b", "both"]), default="both",
              help="A: weight family inequalities and ratios; B: product constant.")
@_common
def verify_appendix(part, config_path, seed, out):
    """Series weight family (part a) and the product-norm constant (part b)."""
    exps = {"a": [Experiment.APPENDIX_A], "b": [Experiment.APPENDIX_B],
            "both": [Experiment.APPENDIX_A, Experiment.APPENDIX_B]}[part]
    _execute(exps, config_path, seed, out)


@main.command("verify-estimators")
@_common
def verify_estimators(config_path, seed, out):
    """Identities and inequalities among the estimating functions."""
    _execute([Experiment.ESTIMATORS], config_path, seed, out)


@main.command("expand")
@_common
def expand(config_path, seed, out):
    """Asymptotic hierarchy: closed forms and decay shapes."""
    _execute([Experiment.HIERARCHY], config_path, seed, out)


@main.command("solve")
@_common
def solve(config_path, seed, out):
    """Auxiliary system: residual, convergence order, viscosity limit."""
    _execute([Experiment.AUX_SOLVE], config_path, seed, out)


@main.command("wave-op")
@_common
def wave_op(config_path, seed, out):
    """Wave operator ladder, estimates on its range and the equation residual."""
    _execute([Experiment.WAVE_OP], config_path, seed, out)


@main.command("gauge")
@_common
def gauge(config_path, seed, out):
    """Gauge invariance of the hierarchy phases."""
    _execute([Experiment.GAUGE], config_path, seed, out)


@main.command("report")
@click.argument("run_dirs", nargs=-1, type=click.Path(file_okay=False))
@click.option("--reference", is_flag=True, help="Print the configuration reference instead.")
def report(run_dirs, reference):
    """Summarise run directories (default: every run under the output root)."""
    if reference:
        click.echo(config_reference())
        return
    dirs = [Path(d) for d in run_dirs] or sorted(
        p.parent for p in default_output_root().glob("*/manifest.json"))
    if not dirs:
        click.echo("no runs found", err=True)
        sys.exit(EXIT_ERROR)
    failed = False
    for d in dirs:
        mpath = d / "manifest.json"
        if not mpath.exists():
            click.echo(f"{d}: no manifest.json", err=True)
            failed = True
            continue
        manifest = json.loads(mpath.read_text())
        click.echo(f"{d} (config {manifest['config_hash'][:12]})")
        for entry in manifest["suites"]:
            click.echo(f"  {entry['summary']}")
        failed = failed or not manifest["passed"]
    sys.exit(EXIT_FAIL if failed else 0)


if __name__ == "__main__":
    main()
