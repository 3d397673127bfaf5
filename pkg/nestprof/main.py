# run with python -m nestprof mine --input data.jsonl --kind ind --algorithm spider
# reports go to stdout (or --output), logs to stderr

import logging
import sys
from contextlib import contextmanager
from typing import Iterator, Optional, Sequence, TextIO

import click
from pydantic import ValidationError

from nestprof.config import get_settings
from nestprof.core.approx import Threshold
from nestprof.core.datagen import generate, load_gen_spec
from nestprof.core.json_model import write_json_lines
from nestprof.exceptions import NestprofError, UsageError
from nestprof.models.schemas import (
    Algorithm,
    BenchRequest,
    DependencyKind,
    GenSpec,
    InputFormat,
    MiningRequest,
    PlantedDependency,
    UnrollMode,
)
from nestprof.services.bench_service import BenchService
from nestprof.services.profiling_service import ProfilingService, write_records

logger = logging.getLogger(__name__)

DEFAULT_ALGORITHM = {DependencyKind.IND: Algorithm.SPIDER, DependencyKind.FD: Algorithm.TANE}

THRESHOLD = click.FloatRange(0.0, 1.0, min_open=True)


def configure_logging(verbosity: int) -> None:
    settings = get_settings()
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=settings.log_format, stream=sys.stderr, force=True)


@contextmanager
def report_stream(output: Optional[str]) -> Iterator[TextIO]:
    if output is None:
        yield sys.stdout
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as stream:
            yield stream


def _choice(enum) -> click.Choice:
    return click.Choice([member.value for member in enum])


def _input_options(command):
    command = click.option(
        "--format", "input_format", type=_choice(InputFormat), default=InputFormat.JSON_LINES.value, show_default=True,
        help="Input layout: one document per line, or a single JSON array.",
    )(command)
    return click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False), help="Input file.")(command)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output.")
@click.version_option(get_settings().version, prog_name=get_settings().app_name)
def cli(verbose: int) -> None:
    """Discover nested inclusion and functional dependencies in JSON collections."""
    configure_logging(verbose)


@cli.command()
@_input_options
@click.option("--kind", type=_choice(DependencyKind), default=None, help="Dependency kind, inferred from --algorithm when omitted.")
@click.option("--algorithm", type=_choice(Algorithm), default=None, help="Defaults to spider for ind and tane for fd.")
@click.option("--unroll", type=_choice(UnrollMode), default=UnrollMode.DYNAMIC.value, show_default=True)
@click.option("--threshold", type=THRESHOLD, default=None, help="Minimum strength in (0, 1]; 1 mines exact dependencies.")
@click.option("--max-lhs", type=click.IntRange(min=1), default=None, help="Largest FD left-hand side.")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Workers for the collect phase.")
@click.option("--timing", is_flag=True, help="Append a phase timing record.")
@click.option("--include-unsatisfied", is_flag=True, help="Also emit dependencies below the threshold.")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write records here instead of stdout.")
def mine(input_path, input_format, kind, algorithm, unroll, threshold, max_lhs, threads, timing, include_unsatisfied, output):
    """Mine dependencies and emit one JSON record per dependency."""
    settings = get_settings()
    if kind is None and algorithm is None:
        raise click.UsageError("pass --kind, --algorithm or both")
    algorithm = Algorithm(algorithm) if algorithm else DEFAULT_ALGORITHM[DependencyKind(kind)]
    try:
        request = MiningRequest(
            kind=DependencyKind(kind) if kind else algorithm.kind,
            algorithm=algorithm,
            unroll=UnrollMode(unroll),
            threshold=threshold if threshold is not None else settings.default_threshold,
            max_lhs=max_lhs or settings.default_max_lhs,
            threads=threads or settings.default_threads,
            include_unsatisfied=include_unsatisfied,
        )
    except ValidationError as exc:
        raise UsageError(_first_error(exc)) from exc

    service = ProfilingService(settings)
    collection = service.load(input_path, InputFormat(input_format))
    result = service.mine(collection, request)
    with report_stream(output) as stream:
        write_records(result.records, stream, result.timing if timing else None)


@cli.command()
@click.argument("expression")
@_input_options
@click.option("--threshold", type=THRESHOLD, default=None, help="Strength needed to report satisfied.")
def verify(expression, input_path, input_format, threshold):
    """Check one dependency, 'P1 < P2' or 'P1, P2 -> P3', against a collection."""
    settings = get_settings()
    service = ProfilingService(settings)
    collection = service.load(input_path, InputFormat(input_format))
    limit = Threshold.parse(threshold if threshold is not None else settings.default_threshold)
    record = service.verify(collection, expression, limit)
    click.echo(record.to_json_line())


def _parse_plant(text: str) -> PlantedDependency:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"planted dependency {text!r} must look like KIND:LHS:RHS, e.g. ind:s1:s0")
    kind, lhs, rhs = parts
    try:
        return PlantedDependency(kind=kind, lhs=lhs, rhs=rhs)
    except ValidationError as exc:
        raise UsageError(_first_error(exc)) from exc


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="GenSpec as YAML or JSON.")
@click.option("--seed", type=int, default=None)
@click.option("--n-docs", type=int, default=None)
@click.option("--n-scalar-keys", type=int, default=None)
@click.option("--n-array-keys", type=int, default=None)
@click.option("--array-len", type=int, default=None)
@click.option("--nesting-depth", type=int, default=None)
@click.option("--domain-size", type=int, default=None)
@click.option("--violation-rate", type=float, default=None)
@click.option("--plant", "plants", multiple=True, help="KIND:LHS:RHS over generated keys, e.g. fd:s0:a1. Repeatable.")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write JSON Lines here instead of stdout.")
def gen(config_path, plants, output, **overrides):
    """Generate a synthetic collection as JSON Lines."""
    spec = load_gen_spec(config_path) if config_path else GenSpec()
    updates = {name: value for name, value in overrides.items() if value is not None}
    if plants:
        updates["planted"] = [_parse_plant(text) for text in plants]
    try:
        spec = GenSpec.model_validate({**spec.model_dump(), **updates})
    except ValidationError as exc:
        raise UsageError(_first_error(exc)) from exc

    collection = generate(spec)
    with report_stream(output) as stream:
        write_json_lines(collection, stream)


@cli.command()
@click.option("--size", "sizes", type=click.IntRange(min=1), multiple=True, help="Collection size. Repeatable.")
@click.option("--array-len", "array_lens", type=click.IntRange(min=1), multiple=True, help="Generated array length. Repeatable; 10 by default.")
@click.option("--nesting-depth", "nesting_depths", type=click.IntRange(min=1), multiple=True, help="Generated object depth. Repeatable; 1 by default.")
@click.option("--algorithm", "algorithms", type=_choice(Algorithm), multiple=True, help="Repeatable; all by default.")
@click.option("--unroll", "unroll_modes", type=_choice(UnrollMode), multiple=True, help="Repeatable; both by default.")
@click.option("--n-array-keys", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--threshold", type=THRESHOLD, default=0.99, show_default=True)
@click.option("--max-lhs", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--fd-size-limit", type=click.IntRange(min=2), default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write the raw runs as CSV.")
def bench(sizes, array_lens, nesting_depths, algorithms, unroll_modes, output, **options):
    """Time every algorithm under both unrolling strategies on generated data.

    Sweeps collection size and document complexity (array length, nesting depth).
    """
    fields = dict(options)
    for name, values in (("sizes", sizes), ("array_lens", array_lens), ("nesting_depths", nesting_depths)):
        if values:
            fields[name] = list(values)
    if algorithms:
        fields["algorithms"] = [Algorithm(a) for a in algorithms]
    if unroll_modes:
        fields["unroll_modes"] = [UnrollMode(m) for m in unroll_modes]
    request = BenchRequest(**fields)

    service = BenchService(get_settings())
    runs = service.run(request)
    if output:
        runs.to_csv(output, index=False)
    click.echo(service.summarize(runs).to_string(index=False, float_format=lambda v: f"{v:.3f}"))


@cli.command()
@_input_options
def stats(input_path, input_format):
    """Describe a collection: size, attribute values per document, nesting and expansion factor."""
    service = ProfilingService(get_settings())
    collection = service.load(input_path, InputFormat(input_format))
    click.echo(service.describe(collection).to_json_line())


@cli.command()
@_input_options
@click.option("--doc-id", is_flag=True, help="Prefix every row with its document id.")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write CSV here instead of stdout.")
def flatten(input_path, input_format, doc_id, output):
    """Statically unroll a collection into relational rows (CSV)."""
    service = ProfilingService(get_settings())
    collection = service.load(input_path, InputFormat(input_format))
    with report_stream(output) as stream:
        rows = service.flatten(collection, stream, include_doc_id=doc_id)
    logger.info(f"Wrote {rows} rows")


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"])
    return f"{location}: {error['msg']}" if location else error["msg"]


def run(args: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        result = cli.main(args=list(args) if args is not None else None, prog_name="nestprof", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except NestprofError as exc:
        logger.debug("Command failed", exc_info=True)
        click.echo(f"Error: {exc}", err=True)
        return exc.exit_code
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
