import functools
import logging
import os
import sys
from typing import Dict, Optional

import click

from .__init__ import __version__
from .config import (
    ConfigError,
    get_config,
    initialize_logging,
    load_world_spec,
    resolve_sim_config,
)
from .experiments import (
    EnsembleRunError,
    benchmark,
    policy_experiment,
    record_from_series,
    run_ensemble,
    save_run,
    scaling_ratios,
    sensitivity_sweep,
)
from .geo import generate_world
from .packages.formatter.report import format_table, key_value_table
from .scheduler import run_simulation
from .stats import SeriesWriteError
from .world import load_world as read_snapshot
from .world import save_world as write_snapshot

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

logger = logging.getLogger(__name__)


PACKAGE_ROOT = os.path.dirname(__file__)


def bundled_world(name: str = "ride-default") -> str:
    return os.path.join(PACKAGE_ROOT, "worlds", name)


def resolve_world_path(world: str) -> str:
    """Path of the world file named on the command line or in the rc file.

    ``default`` is the bundled ride-default world. A name that is not an
    existing file is looked up among the bundled worlds, bare
    (``ride-default``) or with its ``worlds/`` prefix.
    """
    if world == "default":
        return bundled_world()
    if os.path.exists(world):
        return world
    for candidate in (os.path.join(PACKAGE_ROOT, world), bundled_world(world)):
        if os.path.isfile(candidate):
            return candidate
    return world


class MetroSim:
    """Everything a subcommand needs: rc file, world spec, resolved config."""

    def __init__(
        self,
        config_path: Optional[str],
        rc_file: Optional[str] = None,
        output_dir: Optional[str] = None,
        overrides: Optional[Dict[str, object]] = None,
        workers: Optional[int] = None,
        table_format: Optional[str] = None,
        quiet: bool = False,
        verbose: bool = False,
    ):
        self.rc = get_config(rc_file)
        initialize_logging(self.rc, verbose=verbose)
        main = self.rc["main"]

        world = config_path or main.get("world", "default")
        self.world_path = resolve_world_path(world)
        self.spec, world_overrides = load_world_spec(self.world_path)
        self.overrides = dict(overrides or {})
        self.config = resolve_sim_config(self.rc, world_overrides, self.overrides)

        self.output_dir = output_dir or main.get("output_dir", "metrosim-output")
        try:
            self.workers = workers if workers is not None else main.as_int("workers")
        except (KeyError, ValueError):
            raise ConfigError("workers", "must be an integer") from None
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        self.table_format = table_format or main.get("table_format", "psql")
        progress = main.as_bool("progress") if "progress" in main else True
        self.quiet = quiet or not progress
        logger.debug("world %s, config %r", self.world_path, self.config)

    def prepare_output_dir(self) -> str:
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise ConfigError("output_dir", f"cannot create {self.output_dir}: {e.strerror or e}") from None
        if not os.access(self.output_dir, os.W_OK):
            raise ConfigError("output_dir", f"{self.output_dir} is not writable")
        return self.output_dir

    def progress(self, run_id: str):
        if self.quiet:
            return None

        def report(year, row):
            click.echo(
                f"{run_id}: {year} qli={row.qli:.4f} unemployment={row.unemployment:.3f} gini={row.gini:.3f}",
                err=True,
            )

        return report

    def echo_table(self, rows, headers):
        click.echo(format_table(rows, headers, self.table_format))

    def echo_mapping(self, values):
        click.echo(key_value_table(values, self.table_format))


def echo_error(msg: str):
    click.secho(str(msg), err=True, fg="red")


class MetroSimGroup(click.Group):
    """Exit 1 on usage errors (unknown flags, bad values), 2 on runtime failures."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_CONFIG)
        except click.exceptions.Abort:
            echo_error("Aborted!")
            sys.exit(EXIT_CONFIG)


def parse_assignments(values) -> Dict[str, str]:
    out = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError("set", f"expected field=value, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def shared_options(f):
    options = [
        click.option(
            "-c",
            "--config",
            "config_path",
            type=click.Path(dir_okay=False),
            help="World file (geography, demography and an optional [simulation] section) or the name of a bundled world. Defaults to ride-default.",
        ),
        click.option(
            "--metrosimrc",
            "rc_file",
            default=None,
            envvar="METROSIMRC",
            type=click.Path(dir_okay=False),
            help="Location of the metrosimrc file.",
        ),
        click.option(
            "-o",
            "--output-dir",
            default=None,
            envvar="METROSIM_OUTPUT_DIR",
            type=click.Path(file_okay=False),
            help="Directory that receives one subdirectory per run.",
        ),
        click.option("-s", "--seed", type=click.INT, default=None, help="Random seed (first seed of an ensemble)."),
        click.option("-m", "--months", type=click.INT, default=None, help="Months to simulate (240 is 2000-2020)."),
        click.option(
            "--mode",
            type=click.Choice(["individual", "unified"]),
            default=None,
            help="Municipal governments (individual) or one metropolitan government (unified).",
        ),
        click.option(
            "--set",
            "assignments",
            multiple=True,
            metavar="FIELD=VALUE",
            help="Override any simulation parameter. Multiple --set options are allowed.",
        ),
        click.option("-w", "--workers", type=click.INT, default=None, help="Worker processes for multi-run commands."),
        click.option("--table-format", default=None, help="Table format for reports on standard output."),
        click.option("-q", "--quiet", is_flag=True, default=False, help="No progress lines on standard error."),
        click.option("-v", "--verbose", is_flag=True, default=False, help="Log debug messages to standard error."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def build_app(config_path, rc_file, output_dir, seed, months, mode, assignments, workers, table_format, quiet, verbose):
    overrides: Dict[str, object] = parse_assignments(assignments)
    if seed is not None:
        overrides["seed"] = seed
    if months is not None:
        overrides["months"] = months
    if mode is not None:
        overrides["government_mode"] = mode
    return MetroSim(config_path, rc_file, output_dir, overrides, workers, table_format, quiet, verbose)


def guarded(command):
    """Map failures of a subcommand body onto exit codes."""

    @functools.wraps(command)
    def wrapper(**kwargs):
        try:
            command(**kwargs)
        except (ConfigError, SeriesWriteError) as e:
            logger.error("configuration error", exc_info=True)
            echo_error(e)
            sys.exit(EXIT_CONFIG)
        except EnsembleRunError as e:
            logger.error("ensemble aborted", exc_info=True)
            echo_error(e)
            sys.exit(EXIT_RUNTIME)
        except Exception as e:
            logger.error("run failed", exc_info=True)
            echo_error(f"{type(e).__name__}: {e}")
            sys.exit(EXIT_RUNTIME)

    return wrapper


@click.group(cls=MetroSimGroup)
@click.version_option(__version__, "-V", "--version", prog_name="metrosim")
def cli():
    """Spatial agent-based simulation of a metropolitan economy."""


@cli.command()
@shared_options
@click.option("--transactions", is_flag=True, default=False, help="Also write purchase, house sale and hire logs.")
@click.option("--save-world", type=click.Path(dir_okay=False), default=None, help="Write the starting world to a .npz snapshot.")
@click.option("--load-world", type=click.Path(dir_okay=False, exists=True), default=None, help="Start from a .npz snapshot instead of generating.")
@guarded
def run(transactions, save_world, load_world, **options):
    """Run a single simulation."""
    app = build_app(**options)
    output_dir = app.prepare_output_dir()
    config = app.config
    run_id = f"{config.government_mode.value}-s{config.seed}"
    if load_world:
        try:
            world = read_snapshot(load_world, app.spec, mode=config.government_mode)
        except (OSError, KeyError, ValueError) as e:
            raise ConfigError("load_world", f"cannot load {load_world}: {e}") from None
    else:
        world = generate_world(app.spec, config)
    if save_world:
        write_snapshot(world, save_world)

    series = run_simulation(app.spec, config, run_id, world=world, progress=app.progress(run_id), transactions=transactions)
    record = record_from_series(series, config, app.overrides)
    run_dir = save_run(series, record, config, output_dir)
    logger.info("run %s written to %s", run_id, run_dir)
    app.echo_mapping(record.summary())


@cli.command()
@shared_options
@click.option("-n", "--runs", type=click.IntRange(min=1), default=10, show_default=True, help="Number of runs.")
@click.option("--transactions", is_flag=True, default=False, help="Also write purchase, house sale and hire logs.")
@guarded
def ensemble(runs, transactions, **options):
    """Run an ensemble on consecutive seeds."""
    app = build_app(**options)
    output_dir = app.prepare_output_dir()
    result = run_ensemble(
        app.spec, app.config, runs, workers=app.workers, output_dir=output_dir, transactions=transactions
    )
    headers = ("run_id", "final_weighted_qli", "last_year_weighted_qli", "final_gini", "mean_unemployment", "gdp_per_capita_growth")
    app.echo_table(([getattr(r, h) for h in headers] for r in result.records), headers)


@cli.command()
@shared_options
@click.option("-n", "--runs-per-arm", type=click.IntRange(min=2), default=10, show_default=True, help="Runs per government mode.")
@click.option("--unmatched", is_flag=True, default=False, help="Use distinct seeds in the two arms instead of common seeds.")
@guarded
def policy(runs_per_arm, unmatched, **options):
    """Compare individual and unified governments."""
    app = build_app(**options)
    output_dir = app.prepare_output_dir()
    report = policy_experiment(
        app.spec, app.config, runs_per_arm, workers=app.workers, matched=not unmatched, output_dir=output_dir
    )
    app.echo_mapping(report.summary())


@cli.command()
@shared_options
@click.option("-p", "--param", "parameter", required=True, help="Simulation parameter to vary.")
@click.option("--values", required=True, help="Comma separated values of the parameter.")
@click.option("-n", "--runs", type=click.IntRange(min=1), default=1, show_default=True, help="Runs per value.")
@guarded
def sweep(parameter, values, runs, **options):
    """Vary one parameter, keeping the others fixed."""
    app = build_app(**options)
    output_dir = app.prepare_output_dir()
    choices = [v.strip() for v in values.split(",") if v.strip()]
    try:
        table = sensitivity_sweep(app.spec, app.config, parameter, choices, runs, app.workers, output_dir)
    except ValueError as e:
        raise ConfigError("param", str(e)) from None
    app.echo_table(table.rows(), table.headers)


@cli.command("validate-config")
@shared_options
@guarded
def validate_config(**options):
    """Check the world file and parameters without running anything."""
    app = build_app(**options)
    values = {"world": app.world_path, "municipalities": len(app.spec.municipalities)}
    values.update(app.config.as_dict())
    app.echo_mapping(values)


@cli.command()
@shared_options
@click.option(
    "--agents",
    default="25000,50000,100000,200000",
    show_default=True,
    help="Comma separated agent counts.",
)
@guarded
def bench(agents, **options):
    """Time single runs at growing agent counts."""
    app = build_app(**options)
    try:
        counts = [int(a) for a in agents.split(",") if a.strip()]
    except ValueError:
        raise ConfigError("agents", f"expected integers, got {agents!r}") from None
    results = benchmark(app.spec, app.config, counts)
    ratios = [None, *scaling_ratios(results)]
    app.echo_table(([r.agents, r.seconds, ratio] for r, ratio in zip(results, ratios)), ("agents", "seconds", "scaling"))


if __name__ == "__main__":
    cli()
