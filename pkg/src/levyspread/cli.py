"""CLI interface for levyspread."""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import logging
import os
import sys
from typing import Iterator, List, NoReturn, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.stats import multivariate_normal

from levyspread.config import RunConfig, load_config
from levyspread.density import (
    IntArray,
    LatticeSpec,
    balanced_lattice,
    box_lattice,
    build_density,
    cross_lattice,
    eval_density_grid,
)
from levyspread.errors import (
    ConfigurationError,
    NoSolutionError,
    PricerError,
    UnsupportedOracleError,
)
from levyspread.martingale import emm_drift_adjust, esscher_theta
from levyspread.models import (
    BasketModel,
    FloatArray,
    decay_constant,
    gaussian_law,
    gbm_basket,
    lattice_orders,
)
from levyspread.payoff import DampingVector, default_damping
from levyspread.pricer import (
    PricingResult,
    SpreadContract,
    auto_lattice,
    black_scholes_call,
    enforce_emm,
    gbm_parameters,
    margrabe_exchange,
    monte_carlo_oracle,
    price_spread,
    quadrature_price_oracle,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 25
QUADRATURE_TOLERANCE = 1e-3
FOURIER_TOLERANCE = 1e-3
STANDARD_ERRORS = 3.0


def error(message: str) -> None:
    """Print error message."""
    print("\033[31mError:\033[m", message, file=sys.stderr)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise ConfigurationError(message)


def _configure_logging() -> logging.Handler:
    name = os.environ.get("PRICER_LOG", "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigurationError(f"PRICER_LOG: unknown log level {name!r}")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package_logger = logging.getLogger("levyspread")
    package_logger.setLevel(level)
    package_logger.addHandler(handler)
    return handler


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    try:
        file = open(path, "w", newline="")
    except OSError as exc:
        raise ConfigurationError(f"unable to write {path}: {exc.strerror}") from exc
    with file:
        yield file


def _damping(config: RunConfig, model: BasketModel) -> DampingVector:
    if config.pricing.damping is None:
        return default_damping(model)
    return DampingVector(config.pricing.damping)


def _explicit_spec(config: RunConfig, model: BasketModel) -> LatticeSpec:
    grid = config.grid
    assert grid.period is not None and grid.log_radius is not None
    decay = grid.decay if grid.decay is not None else decay_constant(model, grid.overrides)
    return LatticeSpec(
        period=grid.period,
        log_radius=grid.log_radius,
        decay=decay,
        orders=lattice_orders(model, grid.overrides),
        maturity=config.contract.maturity,
        max_points=grid.max_points,
    )


def _pricing_setup(config: RunConfig) -> Tuple[BasketModel, DampingVector, LatticeSpec]:
    """Risk-neutral model, damping and lattice exactly as `price` uses them."""
    if config.grid.square is not None:
        raise ConfigurationError("grid.square: a square lattice is only used by `density`")
    model = config.model
    damping = _damping(config, model)
    damping.check_strips(model)
    model = enforce_emm(model, config.contract, config.pricing.emm_policy, config.pricing.leg_rates)
    if config.grid.auto:
        spec = auto_lattice(
            config.contract,
            model,
            damping,
            config.grid.target,
            config.grid.overrides,
            config.grid.max_points,
        )
    else:
        spec = _explicit_spec(config, model)
    return model, damping, spec


def _price(config: RunConfig, threads: int) -> PricingResult:
    model, damping, spec = _pricing_setup(config)
    return price_spread(
        config.contract,
        model,
        spec=spec,
        eps=damping,
        policy=config.pricing.emm_policy,
        rates=config.pricing.leg_rates,
        threads=threads,
    )


def cmd_price(config_path: str, out: Optional[str] = None, threads: int = 1) -> int:
    config = load_config(config_path)
    result = _price(config, threads)
    with _output(out) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["value", "imag_residue", "lattice_size", "tail_bound", "trunc_bound"])
        writer.writerow(
            [
                _fmt(result.value),
                _fmt(result.imag_residue),
                result.lattice_size,
                _fmt(result.tail_bound),
                _fmt(result.trunc_bound),
            ]
        )
    print(
        f"value {result.value:.10g} over {result.lattice_size} lattice points"
        f" (P = {result.spec.period:.6g}, ln R = {result.spec.log_radius:.6g},"
        f" eps = {result.damping.eps}); tail bound {result.tail_bound:.3g},"
        f" truncation bound {result.trunc_bound:.3g}",
        file=sys.stderr,
    )
    return 0


def _density_lattice(config: RunConfig, model: BasketModel) -> Tuple[LatticeSpec, Optional[IntArray]]:
    grid = config.grid
    n = model.dimension
    if grid.auto:
        spec = balanced_lattice(
            model,
            config.contract.maturity,
            grid.target,
            overrides=grid.overrides,
            max_points=grid.max_points,
        )
        return spec, None
    spec = _explicit_spec(config, model)
    if grid.square is not None:
        return spec, box_lattice(n, grid.square)
    return spec, None


def _grid_axis(extent: float, points: int) -> FloatArray:
    if points == 1:
        return np.zeros(1, dtype=np.float64)
    return np.asarray(np.linspace(-extent, extent, points), dtype=np.float64)


def cmd_density(
    config_path: str,
    out: Optional[str] = None,
    grid_points: int = DEFAULT_GRID_POINTS,
    extent: Optional[float] = None,
    reference: bool = False,
    dump_lattice: Optional[str] = None,
    threads: int = 1,
) -> int:
    """CSV of the density of U_T for the configured model on a tensor grid."""
    if grid_points < 1:
        raise ConfigurationError(f"--points: need at least one grid point, got {grid_points}")
    config = load_config(config_path)
    model = config.model
    n = model.dimension
    maturity = config.contract.maturity
    spec, points = _density_lattice(config, model)
    approx = build_density(model, spec, points=points, threads=threads)

    half_width = spec.period / 2 if extent is None else extent
    axis = _grid_axis(half_width, grid_points)
    grid = eval_density_grid(approx, [axis] * n)

    header = [f"x{s + 1}" for s in range(n)] + ["density", "imag_residue", "outside_box"]
    reference_values = None
    if reference:
        mean, covariance = gaussian_law(model)
        mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1)
        law = multivariate_normal(mean=maturity * mean, cov=maturity * covariance)
        reference_values = np.reshape(law.pdf(mesh.reshape(-1, n)), grid.values.shape)
        header.append("reference")

    with _output(out) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for index in np.ndindex(*grid.values.shape):
            row = [_fmt(axis[i]) for i in index]
            row += [
                _fmt(grid.values[index]),
                _fmt(grid.imag_residues[index]),
                str(int(grid.outside_box[index])),
            ]
            if reference_values is not None:
                row.append(_fmt(reference_values[index]))
            writer.writerow(row)

    if dump_lattice is not None:
        with _output(dump_lattice) as file:
            _write_lattice(file, approx.points)
    if reference_values is not None:
        worst = float(np.abs(grid.values - reference_values).max())
        print(f"max |density - reference| = {worst:.6g}", file=sys.stderr)
    return 0


def _write_lattice(file: TextIO, points: IntArray) -> None:
    for point in points:
        file.write(",".join(str(int(value)) for value in point) + "\n")


def cmd_lattice(config_path: str, out: Optional[str] = None) -> int:
    config = load_config(config_path)
    _, _, spec = _pricing_setup(config)
    points = cross_lattice(spec)
    with _output(out) as file:
        _write_lattice(file, points)
    print(f"{len(points)} lattice points, P = {spec.period:.6g}", file=sys.stderr)
    return 0


def cmd_calibrate_emm(config_path: str, out: Optional[str] = None) -> int:
    """Adjusted drifts and Esscher parameters per component; writes the adjusted config."""
    config = load_config(config_path)
    model = config.model
    rate = config.contract.rate
    rates = config.pricing.leg_rates or (rate,) * model.dimension
    adjusted = emm_drift_adjust(model, rate, config.pricing.leg_rates)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["component", "kind", "mu", "adjusted_mu", "esscher_theta", "esscher_residual"])
    for s, (spec, new_spec) in enumerate(zip(model.diag, adjusted.diag)):
        try:
            solution = esscher_theta(spec, rates[s])
            theta, residual = _fmt(solution.theta), _fmt(solution.residual)
        except NoSolutionError as exc:
            logger.warning("component %d: %s", s, exc)
            theta = residual = ""
        writer.writerow([s, spec.kind.value, _fmt(spec.mu), _fmt(new_spec.mu), theta, residual])

    target = out if out is not None else f"{config_path}.emm.json"
    with _output(target) as file:
        file.write(config.to_json(adjusted) + "\n")
    print(f"adjusted config written to {target}", file=sys.stderr)
    return 0


ValidationRow = Tuple[str, float, float, float]


def _validation_rows(config: RunConfig, threads: int) -> List[ValidationRow]:
    contract = config.contract
    model = config.model
    n = model.dimension
    rows: List[ValidationRow] = []
    priced = contract.strike > 0
    result = _price(config, threads) if priced else None

    if model.is_gaussian:
        parameters = gbm_parameters(model)
        seed, paths = config.output.seed, config.output.paths
        if result is not None:
            leg = SpreadContract(contract.spot[:1], contract.strike, contract.maturity, contract.rate)
            sigma = parameters.sigmas[0]
            marginal = emm_drift_adjust(gbm_basket([sigma]), contract.rate)
            fourier = price_spread(leg, marginal, target=config.grid.target, threads=threads)
            closed = black_scholes_call(
                contract.spot[0], contract.strike, contract.maturity, contract.rate, sigma
            )
            rows.append(("black-scholes", fourier.value, closed, FOURIER_TOLERANCE * abs(closed)))
        if n == 2:
            exchange = SpreadContract(contract.spot, 0.0, contract.maturity, contract.rate)
            estimate = monte_carlo_oracle(exchange, parameters, paths, seed)
            closed = margrabe_exchange(
                contract.spot[0],
                contract.spot[1],
                contract.maturity,
                parameters.sigmas[0],
                parameters.sigmas[1],
                parameters.correlation[0][1],
            )
            rows.append(("margrabe", estimate.mean, closed, STANDARD_ERRORS * estimate.std_error))
        if result is not None:
            estimate = monte_carlo_oracle(contract, parameters, paths, seed)
            rows.append(
                ("monte-carlo", result.value, estimate.mean, STANDARD_ERRORS * estimate.std_error)
            )

    if n <= 2 and result is not None:
        adjusted, damping, _ = _pricing_setup(config)
        reference = quadrature_price_oracle(
            contract,
            adjusted,
            eps=damping,
            points_per_axis=config.output.quadrature_points,
            threads=threads,
            overrides=config.grid.overrides,
            max_points=config.grid.max_points,
        )
        rows.append(("quadrature", result.value, reference, QUADRATURE_TOLERANCE * abs(reference)))

    if not rows:
        raise UnsupportedOracleError("no oracle applies to the configured model and contract")
    return rows


def cmd_validate(
    config_path: str, out: Optional[str] = None, seed: Optional[int] = None, threads: int = 1
) -> int:
    config = load_config(config_path)
    if seed is not None:
        config = _with_seed(config, seed)
    rows = _validation_rows(config, threads)

    failed = []
    with _output(out) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["check", "value", "reference", "tolerance", "passed"])
        for check, value, reference, tolerance in rows:
            passed = abs(value - reference) <= tolerance
            if not passed:
                failed.append(check)
            writer.writerow([check, _fmt(value), _fmt(reference), _fmt(tolerance), int(passed)])

    if failed:
        error(f"parity check failed: {', '.join(failed)}")
        print("error_code=parity", file=sys.stderr)
        return 1
    return 0


def _with_seed(config: RunConfig, seed: int) -> RunConfig:
    return dataclasses.replace(config, output=dataclasses.replace(config.output, seed=seed))


def _threads(args: argparse.Namespace) -> int:
    if args.serial:
        return 1
    if args.threads < 0:
        raise ConfigurationError(f"--threads: must be non-negative, got {args.threads}")
    if args.threads == 0:
        return os.cpu_count() or 1
    return int(args.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="levyspread",
        description="Price spread options under multivariate Levy models by Fourier series.",
    )
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores")
    common.add_argument("--serial", action="store_true", help="single-threaded, bit-exact run")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (overrides the config)")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("price", parents=[common], help="price the configured contract")
    density = commands.add_parser("density", parents=[common], help="recover the density of U_T")
    density.add_argument("--points", type=int, default=DEFAULT_GRID_POINTS, help="grid points per axis")
    density.add_argument("--extent", type=float, help="grid half-width (default: P / 2)")
    density.add_argument("--reference", action="store_true", help="append the Gaussian density")
    density.add_argument("--dump-lattice", help="write the lattice to this path")
    commands.add_parser(
        "calibrate-emm", parents=[common], help="risk-neutral drifts and Esscher parameters"
    )
    commands.add_parser("validate", parents=[common], help="run the applicable oracle checks")
    commands.add_parser("lattice", parents=[common], help="dump the pricing lattice")
    return parser


def cli(argv: Optional[Sequence[str]] = None) -> int:
    handler: Optional[logging.Handler] = None
    try:
        handler = _configure_logging()
        args = build_parser().parse_args(argv)
        threads = _threads(args)
        if args.command == "price":
            return cmd_price(args.config, args.out, threads)
        if args.command == "density":
            return cmd_density(
                args.config,
                args.out,
                args.points,
                args.extent,
                args.reference,
                args.dump_lattice,
                threads,
            )
        if args.command == "calibrate-emm":
            return cmd_calibrate_emm(args.config, args.out)
        if args.command == "validate":
            return cmd_validate(args.config, args.out, args.seed, threads)
        return cmd_lattice(args.config, args.out)
    except PricerError as exc:
        error(str(exc))
        print(f"error_code={exc.error_code}", file=sys.stderr)
        return exc.exit_code
    finally:
        if handler is not None:
            logging.getLogger("levyspread").removeHandler(handler)


if __name__ == "__main__":
    raise SystemExit(cli())
