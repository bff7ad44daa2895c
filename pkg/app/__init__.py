"""Command line application for the BGK solver."""
import json
import logging

import click
from marshmallow import ValidationError

from bgk import __version__
from bgk.errors import BgkError, ConfigError

from .commands import run_command, verify_command

logger = logging.getLogger(__name__)


def error_body(err: BgkError) -> dict:
    return {
        "code": err.code,
        "status": err.name,
        "message": err.description,
        "errors": err.errors,
    }


class BgkGroup(click.Group):
    """Click group that turns library errors into a JSON body on stderr and an exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ValidationError as err:
            self.handle_error(ctx, ConfigError(description="Invalid experiment configuration.", errors=err.messages))
        except BgkError as err:
            self.handle_error(ctx, err)

    @staticmethod
    def handle_error(ctx, err: BgkError):
        logger.error(f"{err.name}: {err.description}")
        click.echo(json.dumps(error_body(err), sort_keys=True), err=True)
        ctx.exit(err.code)


def create_cli() -> click.Group:
    """Initial command group creation."""
    logger.debug("Initializing cli")

    @click.group(cls=BgkGroup)
    @click.version_option(__version__, prog_name="bgk")
    def cli():
        """BGK kinetic solver for scalar balance laws with transport noise."""

    cli.add_command(run_command)
    cli.add_command(verify_command)
    return cli
