"""
Spread option pricing series and the oracles it is validated against.

Input:
    contract = SpreadContract(spot=(110.0, 10.0), strike=90.0, maturity=0.5, rate=0.05)
    price_spread(contract, gbm_basket([0.2, 0.2]))
Output:
    PricingResult(value=..., imag_residue=..., lattice_size=..., ...)
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from levyspread.complexmath import ComplexArray
from levyspread.density import (
    DEFAULT_MAX_POINTS,
    IntArray,
    LatticeSpec,
    balanced_lattice,
    build_density,
    cross_cardinality_estimate,
    cross_lattice,
    density_width,
    eval_density_grid,
)
from levyspread.errors import (
    BudgetError,
    DomainError,
    EmmViolationError,
    UnsupportedOracleError,
)
from levyspread.martingale import EMM_TOLERANCE, emm_deviation, emm_drift_adjust
from levyspread.models import BasketModel, DecayOverride, FloatArray, gaussian_law
from levyspread.payoff import (
    DampingVector,
    contract_shift,
    default_damping,
    payoff_coefficient,
    payoff_l1_constant,
)

logger = logging.getLogger(__name__)

DEFAULT_TARGET = 1e-8
DEFAULT_PATHS = 1_000_000
MONTE_CARLO_BATCH = 250_000
DEFAULT_QUADRATURE_POINTS = 1025
QUADRATURE_TARGET = 1e-8
# Multiple of the law's effective half-width covered by the quadrature grid.
QUADRATURE_WIDTH_FACTOR = 2.0
RELAXED_TARGET_LIMIT = 1e-4
BUDGET_FILL = 0.5


@dataclass(frozen=True)
class SpreadContract:
    """Pays (S_1,T - sum_{j>=2} S_j,T - K)_+ at maturity T."""

    spot: Tuple[float, ...]
    strike: float
    maturity: float
    rate: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "spot", tuple(float(value) for value in self.spot))
        if not self.spot:
            raise DomainError("a contract needs at least one leg")
        if not all(math.isfinite(value) and value > 0 for value in self.spot):
            raise DomainError(f"spot prices must be positive, got {self.spot}")
        if not (math.isfinite(self.strike) and self.strike >= 0):
            raise DomainError(f"strike must be non-negative, got {self.strike}")
        if not (math.isfinite(self.maturity) and self.maturity > 0):
            raise DomainError(f"maturity must be positive, got {self.maturity}")
        if not math.isfinite(self.rate):
            raise DomainError(f"rate must be finite, got {self.rate}")

    @property
    def dimension(self) -> int:
        return len(self.spot)

    def payoff(self, terminal: FloatArray) -> FloatArray:
        """Payoff for rows of terminal prices."""
        spread = terminal[..., 0] - terminal[..., 1:].sum(axis=-1) - self.strike
        return np.asarray(np.maximum(spread, 0.0), dtype=np.float64)


class EmmPolicy(str, enum.Enum):
    AUTO_ADJUST = "auto-adjust"
    STRICT = "strict"


class BoundComponents(NamedTuple):
    """Diagnostic error terms; not a certificate."""

    tail: float
    truncation: float


@dataclass(frozen=True)
class PricingResult:
    value: float
    imag_residue: float
    lattice_size: int
    bounds: BoundComponents
    spec: LatticeSpec
    damping: DampingVector

    @property
    def tail_bound(self) -> float:
        return self.bounds.tail

    @property
    def trunc_bound(self) -> float:
        return self.bounds.truncation


def enforce_emm(
    model: BasketModel,
    contract: SpreadContract,
    policy: EmmPolicy = EmmPolicy.AUTO_ADJUST,
    rates: Optional[Sequence[float]] = None,
) -> BasketModel:
    """Return a model satisfying Phi(-i e_s, T) = exp(r_s T), or raise under `strict`."""
    policy = EmmPolicy(policy)
    deviation = emm_deviation(model, contract.rate, contract.maturity, rates)
    if deviation < EMM_TOLERANCE:
        if model.emm_rates is None:
            return emm_drift_adjust(model, contract.rate, rates)
        return model
    if policy is EmmPolicy.STRICT:
        raise EmmViolationError(
            f"model is not risk neutral: relative deviation {deviation:.3g} of Phi(-i e_s, T)"
        )
    logger.warning("model is not risk neutral (deviation %.3g); adjusting drifts", deviation)
    return emm_drift_adjust(model, contract.rate, rates)


def _payoff_decay_rate(damping: DampingVector) -> float:
    """Exponential decay rate of the damped payoff H(y) exp(<y, eps>)."""
    eps = damping.eps
    return min([*eps[1:], -1 - sum(eps)])


def auto_lattice(
    contract: SpreadContract,
    model: BasketModel,
    damping: DampingVector,
    target: float = DEFAULT_TARGET,
    overrides: Optional[Mapping[int, DecayOverride]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> LatticeSpec:
    """
    Balanced grid for pricing: the density terms of `balanced_lattice` plus
    a period long enough for the damped payoff's periodic images to fall
    below `target`.

    When the cross for `target` would exceed `max_points`, the target is
    relaxed tenfold at a time, no further than RELAXED_TARGET_LIMIT, until
    the estimate fills at most BUDGET_FILL of the cap.
    """
    shift = contract_shift(contract.spot, contract.strike)
    offset = float(np.abs(shift).max())
    tilt = max(0.0, -float(shift @ damping.array))
    decay_rate = _payoff_decay_rate(damping)

    def sized(goal: float) -> LatticeSpec:
        return balanced_lattice(
            model,
            contract.maturity,
            goal,
            shift=damping.eps,
            offset=offset,
            min_period=offset + (-math.log(goal) + tilt) / decay_rate,
            overrides=overrides,
            max_points=max_points,
        )

    spec = sized(target)
    estimate = cross_cardinality_estimate(spec)
    if estimate <= max_points:
        return spec
    goal = target
    while goal < RELAXED_TARGET_LIMIT:
        goal = min(goal * 10, RELAXED_TARGET_LIMIT)
        spec = sized(goal)
        estimate = cross_cardinality_estimate(spec)
        if estimate <= BUDGET_FILL * max_points:
            logger.warning(
                "target %.3g needs more than %d lattice points; relaxed to %.3g (about %.3g points)",
                target,
                max_points,
                goal,
                estimate,
            )
            return spec
    raise BudgetError(
        f"target {goal:.3g} still needs about {estimate:.3g} lattice points, cap is {max_points}",
        estimate=estimate,
    )


def _damping(eps: Union[DampingVector, Sequence[float], None], model: BasketModel) -> DampingVector:
    if eps is None:
        damping = default_damping(model)
    elif isinstance(eps, DampingVector):
        damping = eps
    else:
        damping = DampingVector(tuple(eps))
    damping.check_strips(model)
    return damping


def _map_chunks(
    function: Callable[[IntArray], ComplexArray], points: IntArray, threads: int
) -> ComplexArray:
    if threads <= 1 or len(points) < 2:
        return function(points)
    edges = np.linspace(0, len(points), threads * 4 + 1).astype(int)
    parts = [points[start:stop] for start, stop in zip(edges[:-1], edges[1:]) if stop > start]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return np.concatenate(list(executor.map(function, parts)))


def price_spread(
    contract: SpreadContract,
    model: BasketModel,
    spec: Optional[LatticeSpec] = None,
    eps: Union[DampingVector, Sequence[float], None] = None,
    policy: EmmPolicy = EmmPolicy.AUTO_ADJUST,
    rates: Optional[Sequence[float]] = None,
    target: float = DEFAULT_TARGET,
    threads: int = 1,
    overrides: Optional[Mapping[int, DecayOverride]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> PricingResult:
    """
    V ~ K exp(-rT - <d, eps>) / P^n
          sum_m Phi(-(2 pi / P) m + i eps, T) exp(-(2 pi i / P) <m, d>) g(m),

    with g the payoff transform at -(2 pi / P) m + i eps. Without `spec`
    the grid is chosen by `auto_lattice` for `target`.
    """
    n = model.dimension
    if contract.dimension != n:
        raise DomainError(f"contract has {contract.dimension} legs, model has {n} components")
    if not contract.strike > 0:
        raise DomainError("the pricing series needs a positive strike")

    damping = _damping(eps, model)
    model = enforce_emm(model, contract, policy, rates)

    if spec is None:
        spec = auto_lattice(contract, model, damping, target, overrides, max_points)
    if spec.dimension != n:
        raise DomainError(f"lattice has {spec.dimension} axes, model has {n} components")

    shift = contract_shift(contract.spot, contract.strike)
    points = cross_lattice(spec)
    approx = build_density(model, spec, shift=damping.eps, points=points, threads=threads)
    period = spec.period

    def payoff_terms(chunk: IntArray) -> ComplexArray:
        phases = np.exp(-2j * np.pi / period * (chunk @ shift))
        return np.asarray(phases * payoff_coefficient(chunk, damping, period), dtype=np.complex128)

    terms = approx.coefficients * _map_chunks(payoff_terms, points, threads)
    prefactor = contract.strike * math.exp(
        -contract.rate * contract.maturity - float(shift @ damping.array)
    )
    real = math.fsum(terms.real.tolist())
    imag = math.fsum(terms.imag.tolist())
    value = prefactor * real
    if not math.isfinite(value):
        raise DomainError(f"pricing series did not produce a finite value ({value})")

    bounds = _bound_components(model, spec, damping, shift, prefactor, approx.coefficients)
    logger.info("priced over %d lattice points: %r", len(points), value)
    return PricingResult(
        value=value,
        imag_residue=abs(prefactor * imag),
        lattice_size=len(points),
        bounds=bounds,
        spec=spec,
        damping=damping,
    )


def _bound_components(
    model: BasketModel,
    spec: LatticeSpec,
    damping: DampingVector,
    shift: FloatArray,
    prefactor: float,
    coefficients: ComplexArray,
) -> BoundComponents:
    eps = damping.eps
    lower, upper = model.strips
    strip_distance = min(min(upper[s] - eps[s], eps[s] - lower[s]) for s in range(len(eps)))
    truncation = (
        prefactor
        * payoff_l1_constant(damping)
        * (math.exp(-spec.period / 2 * strip_distance) + math.exp(-spec.log_radius))
    )
    density_sup = float(np.abs(coefficients).sum())
    exterior = spec.period / 2 - float(np.abs(shift).max())
    exponent = max([-value for value in eps[1:]] + [1 + sum(eps)])
    tail = prefactor * density_sup * math.exp(exterior * exponent)
    return BoundComponents(tail=tail, truncation=truncation)


def black_scholes_call(S0: float, K: float, T: float, r: float, sigma: float) -> float:
    """S0 N(b1) - K exp(-rT) N(b2), b1,2 = [ln(S0/K) + (r +- sigma^2/2) T] / (sigma sqrt T)."""
    if not sigma > 0:
        raise DomainError(f"volatility must be positive, got {sigma}")
    if not T > 0:
        raise DomainError(f"maturity must be positive, got {T}")
    if not S0 > 0 or K < 0:
        raise DomainError(f"invalid spot/strike ({S0}, {K})")
    if K == 0:
        return S0
    root = sigma * math.sqrt(T)
    b1 = (math.log(S0 / K) + (r + 0.5 * sigma**2) * T) / root
    b2 = b1 - root
    return float(S0 * norm.cdf(b1) - K * math.exp(-r * T) * norm.cdf(b2))


def margrabe_exchange(
    S01: float,
    S02: float,
    T: float,
    sigma1: float,
    sigma2: float,
    rho: float,
    q1: float = 0.0,
    q2: float = 0.0,
) -> float:
    """Value of exchanging asset 2 for asset 1 at T."""
    if not T > 0:
        raise DomainError(f"maturity must be positive, got {T}")
    if S01 < 0 or S02 < 0:
        raise DomainError(f"spot prices must be non-negative, got ({S01}, {S02})")
    if not -1 <= rho <= 1:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho}")
    forward1 = S01 * math.exp(-q1 * T)
    forward2 = S02 * math.exp(-q2 * T)
    if forward2 == 0:
        return forward1
    sigma = math.sqrt(max(sigma1**2 + sigma2**2 - 2 * rho * sigma1 * sigma2, 0.0))
    if sigma == 0 or forward1 == 0:
        return max(forward1 - forward2, 0.0)
    root = sigma * math.sqrt(T)
    d1 = (math.log(S01 / S02) + (q2 - q1 + 0.5 * sigma**2) * T) / root
    d2 = d1 - root
    return float(forward1 * norm.cdf(d1) - forward2 * norm.cdf(d2))


@dataclass(frozen=True)
class GbmParameters:
    """Volatilities and correlation matrix of correlated geometric Brownian legs."""

    sigmas: Tuple[float, ...]
    correlation: Tuple[Tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigmas", tuple(float(value) for value in self.sigmas))
        object.__setattr__(
            self,
            "correlation",
            tuple(tuple(float(value) for value in row) for row in self.correlation),
        )
        n = len(self.sigmas)
        matrix = np.array(self.correlation)
        if matrix.shape != (n, n):
            raise DomainError(f"correlation must be {n}x{n}")
        if any(value < 0 for value in self.sigmas):
            raise DomainError(f"volatilities must be non-negative, got {self.sigmas}")
        if not np.allclose(matrix, matrix.T) or not np.allclose(np.diag(matrix), 1.0):
            raise DomainError("correlation must be symmetric with a unit diagonal")


def gbm_parameters(model: BasketModel) -> GbmParameters:
    """Volatilities and correlations of an all-Gaussian basket."""
    _, covariance = gaussian_law(model)
    sigmas = np.sqrt(np.diag(covariance))
    scale = np.where(sigmas > 0, sigmas, 1.0)
    correlation = covariance / np.outer(scale, scale)
    np.fill_diagonal(correlation, 1.0)
    return GbmParameters(tuple(sigmas.tolist()), tuple(map(tuple, correlation.tolist())))


class MonteCarloEstimate(NamedTuple):
    mean: float
    std_error: float


def monte_carlo_oracle(
    contract: SpreadContract,
    gbm: Union[GbmParameters, BasketModel],
    paths: int = DEFAULT_PATHS,
    seed: int = 0,
) -> MonteCarloEstimate:
    """
    Discounted payoff mean and standard error over `paths` risk-neutral
    terminal samples of correlated geometric Brownian legs.
    """
    if isinstance(gbm, BasketModel):
        if not gbm.is_gaussian:
            raise UnsupportedOracleError("the Monte Carlo oracle only covers Gaussian log-returns")
        gbm = gbm_parameters(gbm)
    n = contract.dimension
    if len(gbm.sigmas) != n:
        raise DomainError(f"expected {n} volatilities, got {len(gbm.sigmas)}")
    if paths < 2:
        raise DomainError(f"need at least two paths, got {paths}")
    try:
        factor = np.linalg.cholesky(np.array(gbm.correlation))
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"correlation matrix is not positive definite: {exc}") from exc

    sigmas = np.array(gbm.sigmas)
    spot = np.array(contract.spot)
    drift = (contract.rate - 0.5 * sigmas**2) * contract.maturity
    volatility = sigmas * math.sqrt(contract.maturity)
    rng = np.random.default_rng(seed)
    batches = []
    for start in range(0, paths, MONTE_CARLO_BATCH):
        size = min(MONTE_CARLO_BATCH, paths - start)
        normals = rng.standard_normal((size, n)) @ factor.T
        terminal = spot * np.exp(drift + volatility * normals)
        batches.append(contract.payoff(terminal))
    discounted = math.exp(-contract.rate * contract.maturity) * np.concatenate(batches)
    mean = float(discounted.mean())
    std_error = float(discounted.std(ddof=1) / math.sqrt(paths))
    return MonteCarloEstimate(mean, std_error)


def quadrature_price_oracle(
    contract: SpreadContract,
    model: BasketModel,
    spec: Optional[LatticeSpec] = None,
    eps: Union[DampingVector, Sequence[float], None] = None,
    points_per_axis: int = DEFAULT_QUADRATURE_POINTS,
    threads: int = 1,
    half_width: Optional[float] = None,
    target: float = QUADRATURE_TARGET,
    overrides: Optional[Mapping[int, DecayOverride]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> float:
    """
    K exp(-rT) times the trapezoid sum of H(x + d) p(x) over the cube of
    `half_width`.

    p is recovered as exp(<x, eps>) q(x), with q the density tilted by the
    damping vector. Wherever H(x + d) > 0 the factor H(x + d) exp(<x, eps>)
    is bounded, so the error of q cannot be amplified by the growing payoff.
    q lives on its own lattice, auto-sized for `target`, unless `spec` is
    given. The cube defaults to QUADRATURE_WIDTH_FACTOR times the effective
    half-width of the law, capped at the box (P/2) Q_n.
    """
    n = model.dimension
    if n > 2:
        raise UnsupportedOracleError("the quadrature oracle covers at most two legs")
    if contract.dimension != n:
        raise DomainError(f"contract has {contract.dimension} legs, model has {n} components")
    if not contract.strike > 0:
        raise DomainError("the quadrature oracle needs a positive strike")
    if points_per_axis < 3:
        raise DomainError(f"need at least three points per axis, got {points_per_axis}")

    damping = _damping(eps, model)
    if spec is None:
        spec = auto_lattice(contract, model, damping, target, overrides, max_points)
    if spec.dimension != n:
        raise DomainError(f"lattice has {spec.dimension} axes, model has {n} components")

    shift = contract_shift(contract.spot, contract.strike)
    approx = build_density(model, spec, shift=damping.eps, threads=threads)
    if half_width is None:
        half_width = min(
            spec.period / 2, QUADRATURE_WIDTH_FACTOR * density_width(model, spec.maturity)
        )
    if not 0 < half_width <= spec.period / 2:
        raise DomainError(f"integration half-width must lie in (0, P/2], got {half_width}")
    axis = np.linspace(-half_width, half_width, points_per_axis)
    step = axis[1] - axis[0]
    weights = np.full(points_per_axis, step)
    weights[[0, -1]] = step / 2

    density = eval_density_grid(approx, [axis] * n).values
    growth = [np.exp(axis + d) for d in shift]
    if n == 1:
        spread = growth[0] - 1
        weight = weights
    else:
        spread = np.subtract.outer(growth[0], growth[1]) - 1
        weight = np.multiply.outer(weights, weights)
    integral = float(np.sum(weight * np.maximum(spread, 0.0) * density))
    return contract.strike * math.exp(-contract.rate * contract.maturity) * integral
