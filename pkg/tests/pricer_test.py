from __future__ import annotations

import logging
import math

import pytest
from scipy.stats import norm

from levyspread.density import DEFAULT_MAX_POINTS, cross_cardinality_estimate, cross_lattice
from levyspread.errors import (
    AdaptednessError,
    BudgetError,
    DomainError,
    EmmViolationError,
    UnsupportedOracleError,
)
from levyspread.martingale import emm_drift_adjust
from levyspread.models import BasketModel, LevyExponentSpec, gbm_basket, independent_basket
from levyspread.payoff import default_damping
from levyspread.pricer import (
    RELAXED_TARGET_LIMIT,
    EmmPolicy,
    GbmParameters,
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

MONTE_CARLO_SIGMAS = 3.0
LADDER_TOLERANCE = 1e-8


def _non_increasing(values: list[float]) -> bool:
    return all(later <= earlier + LADDER_TOLERANCE for earlier, later in zip(values, values[1:]))


def test_single_leg_matches_black_scholes() -> None:
    contract = SpreadContract(spot=(100.0,), strike=100.0, maturity=1.0, rate=0.05)
    result = price_spread(contract, gbm_basket([0.2]))
    expected = black_scholes_call(100.0, 100.0, 1.0, 0.05, 0.2)
    assert expected == pytest.approx(10.4506, abs=1e-4)
    assert result.value == pytest.approx(expected, rel=1e-5)
    assert result.damping.eps == (-2.0,)
    assert result.spec.period == pytest.approx(math.log(1e8))


@pytest.mark.parametrize("strike", [80.0, 100.0, 125.0])
def test_single_leg_across_strikes(strike: float) -> None:
    contract = SpreadContract(spot=(100.0,), strike=strike, maturity=0.5, rate=0.02)
    result = price_spread(contract, gbm_basket([0.3]))
    assert result.value == pytest.approx(
        black_scholes_call(100.0, strike, 0.5, 0.02, 0.3), rel=1e-5
    )


def test_two_legs_match_monte_carlo(gbm_contract: SpreadContract, gbm_model: BasketModel) -> None:
    result = price_spread(gbm_contract, gbm_model)
    estimate = monte_carlo_oracle(gbm_contract, gbm_model, seed=11)
    assert abs(result.value - estimate.mean) <= MONTE_CARLO_SIGMAS * estimate.std_error
    assert result.imag_residue < 1e-9


def test_independent_legs_match_monte_carlo() -> None:
    contract = SpreadContract(spot=(110.0, 10.0), strike=90.0, maturity=0.5, rate=0.05)
    model = gbm_basket([0.2, 0.2])
    result = price_spread(contract, model)
    estimate = monte_carlo_oracle(contract, model, seed=2)
    assert abs(result.value - estimate.mean) <= MONTE_CARLO_SIGMAS * estimate.std_error


def test_three_legs_fit_the_default_budget(caplog: pytest.LogCaptureFixture) -> None:
    contract = SpreadContract(spot=(110.0, 10.0, 5.0), strike=80.0, maturity=1.0, rate=0.05)
    model = gbm_basket([0.3, 0.2, 0.25], rho=0.3)
    with caplog.at_level(logging.WARNING, logger="levyspread"):
        result = price_spread(contract, model, threads=4)
    assert "relaxed to" in caplog.text
    assert result.lattice_size <= DEFAULT_MAX_POINTS
    assert result.spec.log_radius < -math.log(1e-8)
    estimate = monte_carlo_oracle(contract, model, seed=4)
    assert abs(result.value - estimate.mean) <= MONTE_CARLO_SIGMAS * estimate.std_error


def test_auto_lattice_relaxes_the_target(
    kobol_contract: SpreadContract, kobol_model: BasketModel, caplog: pytest.LogCaptureFixture
) -> None:
    adjusted = emm_drift_adjust(kobol_model, kobol_contract.rate)
    damping = default_damping(adjusted)
    full = auto_lattice(kobol_contract, adjusted, damping, 1e-8)
    assert full.log_radius == pytest.approx(-math.log(1e-8))
    assert "relaxed to" not in caplog.text

    cap = 20_000
    assert cross_cardinality_estimate(full) > cap
    with caplog.at_level(logging.WARNING, logger="levyspread"):
        relaxed = auto_lattice(kobol_contract, adjusted, damping, 1e-8, max_points=cap)
    assert "relaxed to" in caplog.text
    assert -math.log(RELAXED_TARGET_LIMIT) <= relaxed.log_radius < full.log_radius
    assert cross_cardinality_estimate(relaxed) <= cap / 2
    assert len(cross_lattice(relaxed)) <= cap


def test_auto_lattice_gives_up_past_the_relaxation_limit(
    kobol_contract: SpreadContract, kobol_model: BasketModel
) -> None:
    adjusted = emm_drift_adjust(kobol_model, kobol_contract.rate)
    with pytest.raises(BudgetError, match="cap is 50") as info:
        auto_lattice(kobol_contract, adjusted, default_damping(adjusted), 1e-8, max_points=50)
    assert info.value.estimate > 50


def test_margrabe_matches_monte_carlo() -> None:
    contract = SpreadContract(spot=(100.0, 90.0), strike=0.0, maturity=1.0, rate=0.05)
    gbm = GbmParameters((0.3, 0.2), ((1.0, 0.4), (0.4, 1.0)))
    estimate = monte_carlo_oracle(contract, gbm, seed=3)
    expected = margrabe_exchange(100.0, 90.0, 1.0, 0.3, 0.2, 0.4)
    assert abs(expected - estimate.mean) <= MONTE_CARLO_SIGMAS * estimate.std_error


def test_margrabe_with_equal_dividends() -> None:
    plain = margrabe_exchange(100.0, 90.0, 1.0, 0.3, 0.2, 0.4)
    carried = margrabe_exchange(100.0, 90.0, 1.0, 0.3, 0.2, 0.4, q1=0.02, q2=0.02)
    assert carried == pytest.approx(math.exp(-0.02) * plain, rel=1e-12)

    sigma = math.sqrt(0.3**2 + 0.2**2 - 2 * 0.4 * 0.3 * 0.2)
    d1 = (math.log(100.0 / 90.0) + 0.5 * sigma**2) / sigma
    d2 = d1 - sigma
    expected = math.exp(-0.02) * (100.0 * norm.cdf(d1) - 90.0 * norm.cdf(d2))
    assert carried == pytest.approx(expected, rel=1e-12)


def test_margrabe_with_dividends_matches_monte_carlo() -> None:
    # legs paying q1, q2 are simulated from spots discounted by their yields
    q1, q2 = 0.03, 0.01
    contract = SpreadContract(
        spot=(100.0 * math.exp(-q1), 90.0 * math.exp(-q2)), strike=0.0, maturity=1.0, rate=0.05
    )
    gbm = GbmParameters((0.3, 0.2), ((1.0, 0.4), (0.4, 1.0)))
    estimate = monte_carlo_oracle(contract, gbm, seed=8)
    expected = margrabe_exchange(100.0, 90.0, 1.0, 0.3, 0.2, 0.4, q1=q1, q2=q2)
    assert abs(expected - estimate.mean) <= MONTE_CARLO_SIGMAS * estimate.std_error


def test_kobol_matches_quadrature(kobol_contract: SpreadContract, kobol_model: BasketModel) -> None:
    adjusted = emm_drift_adjust(kobol_model, kobol_contract.rate)
    result = price_spread(kobol_contract, adjusted, target=1e-6)
    reference = quadrature_price_oracle(kobol_contract, adjusted)
    assert result.value > 0
    assert result.value == pytest.approx(reference, rel=1e-3)
    assert result.imag_residue <= 1e-6 * max(1.0, result.value)


def test_quadrature_converges_with_the_grid(
    kobol_contract: SpreadContract, kobol_model: BasketModel
) -> None:
    adjusted = emm_drift_adjust(kobol_model, kobol_contract.rate)
    spec = auto_lattice(kobol_contract, adjusted, default_damping(adjusted), 1e-8)
    by_width = [
        quadrature_price_oracle(kobol_contract, adjusted, spec, half_width=half_width)
        for half_width in (3.0, 4.5, 6.0)
    ]
    finer = quadrature_price_oracle(
        kobol_contract, adjusted, spec, points_per_axis=2049, half_width=6.0
    )
    assert max(by_width) - min(by_width) <= 3e-4 * by_width[-1]
    assert finer == pytest.approx(by_width[-1], rel=3e-4)
    converged = price_spread(kobol_contract, adjusted, target=1e-8).value
    assert finer == pytest.approx(converged, rel=5e-4)


def test_quadrature_matches_black_scholes() -> None:
    contract = SpreadContract(spot=(100.0,), strike=100.0, maturity=1.0, rate=0.05)
    model = emm_drift_adjust(gbm_basket([0.2]), 0.05)
    value = quadrature_price_oracle(contract, model)
    assert value == pytest.approx(black_scholes_call(100.0, 100.0, 1.0, 0.05, 0.2), rel=1e-3)

    unreachable = SpreadContract(spot=(100.0,), strike=1e6, maturity=1.0, rate=0.05)
    assert quadrature_price_oracle(unreachable, model) == pytest.approx(0.0, abs=1e-10)


def test_price_converges_as_the_target_shrinks(
    kobol_contract: SpreadContract, kobol_model: BasketModel
) -> None:
    adjusted = emm_drift_adjust(kobol_model, kobol_contract.rate)
    values = [
        price_spread(kobol_contract, adjusted, target=target).value
        for target in (1e-2, 1e-4, 1e-6, 1e-8)
    ]
    changes = [abs(later - earlier) for earlier, later in zip(values, values[1:])]
    assert changes[0] > changes[1] > changes[2]


@pytest.mark.parametrize(
    ("contract", "model"),
    [
        (
            SpreadContract(spot=(1.0, 0.5), strike=1e4, maturity=1.0, rate=0.05),
            gbm_basket([0.2, 0.2]),
        ),
        (
            SpreadContract(spot=(110.0, 10.0), strike=90.0, maturity=1.0, rate=0.05),
            gbm_basket([0.3, 0.2], rho=0.4),
        ),
        (
            SpreadContract(spot=(100.0, 10.0), strike=1.0, maturity=2.0, rate=0.05),
            gbm_basket([0.3, 0.2], rho=0.4),
        ),
    ],
)
def test_price_bounds(contract: SpreadContract, model: BasketModel) -> None:
    value = price_spread(contract, model).value
    assert -LADDER_TOLERANCE <= value <= contract.spot[0]


def test_deep_out_of_the_money_is_worthless() -> None:
    contract = SpreadContract(spot=(1.0, 0.5), strike=1e4, maturity=1.0, rate=0.05)
    assert price_spread(contract, gbm_basket([0.2, 0.2])).value == pytest.approx(0.0, abs=1e-8)


def test_monotone_in_strike(gbm_model: BasketModel) -> None:
    values = [
        price_spread(
            SpreadContract(spot=(110.0, 10.0), strike=strike, maturity=1.0, rate=0.05), gbm_model
        ).value
        for strike in (70.0, 80.0, 90.0, 100.0, 110.0)
    ]
    assert _non_increasing(values)
    assert values[0] > values[-1] > 0


def test_monotone_in_the_first_spot(gbm_model: BasketModel) -> None:
    values = [
        price_spread(
            SpreadContract(spot=(spot, 10.0), strike=90.0, maturity=1.0, rate=0.05), gbm_model
        ).value
        for spot in (90.0, 100.0, 110.0, 120.0, 130.0)
    ]
    assert _non_increasing(values[::-1])
    assert values[-1] > values[0]


def test_monotone_in_the_second_spot(gbm_model: BasketModel) -> None:
    values = [
        price_spread(
            SpreadContract(spot=(110.0, spot), strike=90.0, maturity=1.0, rate=0.05), gbm_model
        ).value
        for spot in (5.0, 7.5, 10.0, 12.5, 15.0)
    ]
    assert _non_increasing(values)
    assert values[0] > values[-1]


def test_strict_policy_rejects_a_drifting_model(
    gbm_contract: SpreadContract, gbm_model: BasketModel
) -> None:
    with pytest.raises(EmmViolationError):
        price_spread(gbm_contract, gbm_model, policy=EmmPolicy.STRICT)
    adjusted = emm_drift_adjust(gbm_model, gbm_contract.rate)
    strict = price_spread(gbm_contract, adjusted, policy=EmmPolicy.STRICT)
    assert strict.value == pytest.approx(price_spread(gbm_contract, gbm_model).value, rel=1e-12)


def test_enforce_emm_warns_and_adjusts(
    gbm_contract: SpreadContract, gbm_model: BasketModel, caplog: pytest.LogCaptureFixture
) -> None:
    adjusted = enforce_emm(gbm_model, gbm_contract)
    assert adjusted.emm_rates == (0.05, 0.05)
    assert "not risk neutral" in caplog.text
    assert enforce_emm(adjusted, gbm_contract, EmmPolicy.STRICT) is adjusted


def test_adaptedness_is_checked_before_the_martingale_condition(
    kobol_contract: SpreadContract, kobol_spec: LevyExponentSpec
) -> None:
    light = LevyExponentSpec.kobol(0.35, 1.0, 1.0, -0.9, 12.0)
    model = independent_basket([light, kobol_spec])
    with pytest.raises(AdaptednessError):
        price_spread(kobol_contract, model)
    with pytest.raises(AdaptednessError):
        price_spread(kobol_contract, model, eps=(-2.0, 0.5))


def test_contract_and_model_must_agree(gbm_model: BasketModel) -> None:
    with pytest.raises(DomainError):
        price_spread(SpreadContract(spot=(100.0,), strike=90.0, maturity=1.0), gbm_model)
    with pytest.raises(DomainError):
        price_spread(SpreadContract(spot=(100.0, 10.0), strike=0.0, maturity=1.0), gbm_model)


def test_contract_validation() -> None:
    with pytest.raises(DomainError):
        SpreadContract(spot=(), strike=1.0, maturity=1.0)
    with pytest.raises(DomainError):
        SpreadContract(spot=(100.0, 0.0), strike=1.0, maturity=1.0)
    with pytest.raises(DomainError):
        SpreadContract(spot=(100.0,), strike=-1.0, maturity=1.0)
    with pytest.raises(DomainError):
        SpreadContract(spot=(100.0,), strike=1.0, maturity=0.0)


def test_threads_do_not_change_the_price(
    gbm_contract: SpreadContract, gbm_model: BasketModel
) -> None:
    serial = price_spread(gbm_contract, gbm_model, threads=1)
    parallel = price_spread(gbm_contract, gbm_model, threads=4)
    assert parallel.value == pytest.approx(serial.value, rel=1e-14)
    assert parallel.lattice_size == serial.lattice_size


def test_bounds_are_reported(gbm_contract: SpreadContract, gbm_model: BasketModel) -> None:
    result = price_spread(gbm_contract, gbm_model, target=1e-6)
    assert result.tail_bound >= 0
    assert result.trunc_bound > 0
    assert math.isfinite(result.tail_bound + result.trunc_bound)


def test_black_scholes_limits() -> None:
    assert black_scholes_call(100.0, 0.0, 1.0, 0.05, 0.2) == 100.0
    deep = black_scholes_call(100.0, 1.0, 1.0, 0.05, 0.2)
    assert deep == pytest.approx(100.0 - math.exp(-0.05), rel=1e-12)
    assert black_scholes_call(100.0, 1e-12, 1.0, 0.05, 0.2) == pytest.approx(100.0, abs=1e-9)
    forward = black_scholes_call(100.0, 90.0, 1.0, 0.05, 1e-9)
    assert forward == pytest.approx(100.0 - 90.0 * math.exp(-0.05), rel=1e-12)
    with pytest.raises(DomainError):
        black_scholes_call(100.0, 100.0, 1.0, 0.05, 0.0)


def test_margrabe_limits() -> None:
    assert margrabe_exchange(100.0, 0.0, 1.0, 0.3, 0.2, 0.4) == 100.0
    assert margrabe_exchange(100.0, 90.0, 1.0, 0.2, 0.2, 1.0) == pytest.approx(10.0)
    with pytest.raises(DomainError):
        margrabe_exchange(100.0, 90.0, 1.0, 0.3, 0.2, 1.5)


def test_monte_carlo_is_reproducible(gbm_contract: SpreadContract, gbm_model: BasketModel) -> None:
    first = monte_carlo_oracle(gbm_contract, gbm_model, paths=10_000, seed=5)
    second = monte_carlo_oracle(gbm_contract, gbm_model, paths=10_000, seed=5)
    other = monte_carlo_oracle(gbm_contract, gbm_model, paths=10_000, seed=6)
    assert first == second
    assert first != other


def test_monte_carlo_without_volatility() -> None:
    contract = SpreadContract(spot=(100.0, 10.0), strike=80.0, maturity=1.0, rate=0.05)
    gbm = GbmParameters((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0)))
    estimate = monte_carlo_oracle(contract, gbm, paths=100)
    assert estimate.mean == pytest.approx(90.0 - 80.0 * math.exp(-0.05), rel=1e-12)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-12)


def test_monte_carlo_rejects_other_laws(
    kobol_contract: SpreadContract, kobol_model: BasketModel
) -> None:
    with pytest.raises(UnsupportedOracleError):
        monte_carlo_oracle(kobol_contract, kobol_model)
    with pytest.raises(DomainError):
        monte_carlo_oracle(
            kobol_contract, GbmParameters((0.2, 0.2), ((1.0, 1.2), (1.2, 1.0))), paths=10
        )


def test_gbm_parameters_round_trip(gbm_model: BasketModel) -> None:
    parameters = gbm_parameters(gbm_model)
    assert parameters.sigmas == pytest.approx((0.3, 0.2))
    assert parameters.correlation[0][1] == pytest.approx(0.4)


def test_quadrature_oracle_limits(
    kobol_contract: SpreadContract, kobol_model: BasketModel
) -> None:
    result = price_spread(kobol_contract, kobol_model, target=1e-2)
    with pytest.raises(DomainError):
        quadrature_price_oracle(
            kobol_contract, kobol_model, result.spec, half_width=result.spec.period
        )
    three = gbm_basket([0.2, 0.2, 0.2])
    contract = SpreadContract(spot=(100.0, 10.0, 10.0), strike=70.0, maturity=1.0)
    with pytest.raises(UnsupportedOracleError):
        quadrature_price_oracle(contract, three, result.spec)
    with pytest.raises(DomainError):
        quadrature_price_oracle(kobol_contract, kobol_model, result.spec, points_per_axis=2)
