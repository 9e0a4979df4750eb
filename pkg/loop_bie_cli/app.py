from typing import (
    Optional
)

import sys

if sys.version_info >= (3, 9):
    from typing import Annotated
else:
    from typing_extensions import Annotated

import logging

import typer

from rich import print
from rich.logging import RichHandler
from rich.traceback import install

from loop_bie import (
    __version__,
    ContainerFormatError,
    ConvergenceError,
    DegenerateFaceError,
    EigensolverError,
    ErrorGroup,
    GramSolveError,
    MeshFormatError,
    NonManifoldError,
    OrientationError,
    PolarizationError,
    PrecisionError,
    QuadratureError,
    TopologyError,
    ZeroEigenvalueError,
)

from .commands import (
    CoefficientsMismatchError,
    run
)
from .config import (
    Command,
    ConfigError,
    RunConfig
)
from .outputs import config_hash
from .print import (
    print_error,
    print_reports,
    style_bold,
    style_dim
)

install(show_locals=True)

logging.basicConfig(
    level="WARNING", format="%(message)s", datefmt="\t", handlers=[RichHandler()]
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

INPUT_ERRORS = (
    ConfigError,
    FileNotFoundError,
    MeshFormatError,
    DegenerateFaceError,
    NonManifoldError,
    OrientationError,
    TopologyError,
    PolarizationError,
    ContainerFormatError,
    CoefficientsMismatchError,
)

NUMERICAL_ERRORS = (
    EigensolverError,
    ZeroEigenvalueError,
    ConvergenceError,
    GramSolveError,
    QuadratureError,
    PrecisionError,
)

ConfigArgument = Annotated[
    str,
    typer.Argument(help="Run file (TOML).")
]
DebugOption = Annotated[
    bool,
    typer.Option(help="Log every stage detail and show tracebacks.")
]
VerboseOption = Annotated[
    bool,
    typer.Option(help="Log stage boundaries (assembly, eigensolver bands, GMRES).")
]


def configure_logging(debug: bool = False, verbose: bool = False):
    logging.getLogger().setLevel("DEBUG" if debug else "INFO" if verbose else "WARNING")


def module_context(error: BaseException) -> str:
    """`loop_bie.solver.gmres` becomes `solver.gmres`."""
    module = type(error).__module__
    return module.split(".", 1)[1] if module.startswith("loop_bie.") else module


def load_config(file: str, command: Optional[Command] = None, debug: bool = False) -> RunConfig:
    try:
        return RunConfig.load(file, command=command)
    except ConfigError as error:
        print_error(error, no_traceback=not debug)
        raise typer.Exit(EXIT_CONFIG)


def execute(config: RunConfig, debug: bool = False):
    try:
        print_reports(
            run(config),
            operation_name="{0} ({1})".format(config.command, config_hash(config))
        )
    except INPUT_ERRORS as error:
        print_error(f"{module_context(error)}: {str(error)}", error=error, no_traceback=not debug)
        raise typer.Exit(EXIT_CONFIG)
    except NUMERICAL_ERRORS as error:
        print_error(f"{module_context(error)}: {str(error)}", error=error, no_traceback=not debug)
        raise typer.Exit(EXIT_NUMERICAL)
    except ErrorGroup as errors:
        print(f"\nErrors : \n")
        print_error(errors, no_traceback=(*INPUT_ERRORS, *NUMERICAL_ERRORS) if not debug else False)
        raise typer.Exit(EXIT_NUMERICAL)

    print(style_dim(f"Outputs in {config.output_dir}"))


def command(name: Command, file: str, debug: bool, verbose: bool):
    configure_logging(debug, verbose)
    execute(load_config(file, name, debug), debug)


app = typer.Typer(no_args_is_help=True)


@app.callback()
def callback():
    """Loop-subdivision isogeometric boundary integral solver

    Electromagnetic scattering by perfectly conducting closed surfaces, with manifold-harmonic
    compression. Every command reads a TOML run file and writes its artifacts to `output_dir`.
    """


@app.command()
def version():
    """Shows loop-bie version number.
    """
    print(__version__)


@app.command("run")
def run_file(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Runs the command named in the run file.
    """
    configure_logging(debug, verbose)
    execute(load_config(file, debug=debug), debug)


@app.command()
def validate(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Checks the control mesh (manifold, oriented, closed genus 0) and reports its electrical size.
    """
    command("validate", file, debug, verbose)


@app.command()
def subdivide(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Writes the control mesh after `geometry.refine` Loop subdivisions (at least one).
    """
    command("subdivide", file, debug, verbose)


@app.command()
def eigs(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Computes the smallest Laplace-Beltrami eigenpairs and exports selected eigenvectors.
    """
    command("eigs", file, debug, verbose)


@app.command("mht-study")
def mht_study(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Reconstructs the induced current from M manifold harmonics for each M of the sweep.
    """
    command("mht-study", file, debug, verbose)


@app.command()
def solve(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Solves the plane-wave scattering problem and writes the pattern cut and the summary.

    Spheres are compared against the Mie series. A `study.harmonics` list adds compressed solves.
    """
    command("solve", file, debug, verbose)


@app.command()
def rcs(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Recomputes the pattern cut from the coefficients saved by `solve`.
    """
    command("rcs", file, debug, verbose)


@app.command("fmm-study")
def fmm_study(file: ConfigArgument, debug: DebugOption = False, verbose: VerboseOption = False):
    """Measures the FMM error against direct sums as the expansion order grows.
    """
    command("fmm-study", file, debug, verbose)


@app.command()
def show_config(file: ConfigArgument, debug: DebugOption = False):
    """Prints the validated run file with every default filled in.
    """
    config = load_config(file, debug=debug)
    print(style_bold(f"{config.command} ({config_hash(config)})"))
    typer.echo(config.model_dump_json(indent=2))
