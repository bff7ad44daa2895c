"""Command line surface: `bgk run` and `bgk verify`."""
import logging
import os

import click

from app.batteries import SUITES, run_suite
from app.config import Config
from app.experiment import run_experiment
from app.schemas import dump_report
from bgk.errors import CheckFailure

logger = logging.getLogger(__name__)


@click.command("run")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Artifact directory.")
@click.option("--seed", type=int, default=None, help="Overrides stochastic.seed.")
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE", help="Override one config value.")
def run_command(config_file, out_dir, seed, overrides):
    """Run one experiment file and write its CSV, JSON and manifest artifacts."""
    result = run_experiment(config_file, out_dir=out_dir, seed=seed, overrides=overrides)
    click.echo(f"Wrote {len(result.artifacts)} artifacts to {result.out_dir}")


@click.command("verify")
@click.argument("suite", type=click.Choice([*SUITES, "all"]))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Report directory.")
def verify_command(suite, out_dir):
    """Run a canned verification battery; exits 1 if any check fails."""
    out_dir = os.path.join(out_dir or Config.OUTPUT_DIR, "verify", suite)
    os.makedirs(out_dir, exist_ok=True)
    failed = []
    for result in run_suite(suite):
        path = os.path.join(out_dir, f"{result.name}.json")
        with open(path, "w") as handle:
            handle.write(dump_report(result.name, result.report, result.passed, suite=suite))
        click.echo(f"{'PASS' if result.passed else 'FAIL'} {result.name}")
        if not result.passed:
            failed.append(result.name)
    logger.info(f"Suite {suite}: {len(failed)} failed checks, reports in {out_dir}")
    if failed:
        raise CheckFailure(
            description=f"{len(failed)} checks failed in suite {suite}",
            errors={name: ["failed"] for name in failed},
        )
