"""Independent quadrature oracles and the model fixtures shared by the tests."""
from __future__ import annotations

import cmath
import math
from typing import Any, Callable

import numpy as np
import pytest
from scipy import integrate

from levyspread.models import BasketModel, LevyExponentSpec, gbm_basket
from levyspread.pricer import SpreadContract

QUAD_OPTIONS: dict[str, Any] = {"epsabs": 1e-14, "epsrel": 1e-12, "limit": 400}


def complex_quad(
    function: Callable[[float], complex], lower: float, upper: float, **options: Any
) -> complex:
    real = integrate.quad(lambda x: function(x).real, lower, upper, **options)[0]
    imag = integrate.quad(lambda x: function(x).imag, lower, upper, **options)[0]
    return complex(real, imag)


def _expm1_over_x(rate: complex, x: float) -> complex:
    """(exp(rate x) - 1) / x with a series for small |rate x|."""
    w = rate * x
    if abs(w) < 1e-3:
        return rate * (1 + w / 2 + w**2 / 6 + w**3 / 24)
    return (cmath.exp(w) - 1) / x


def kobol_levy_khintchine(xi: complex, spec: LevyExponentSpec) -> complex:
    """
    -i mu xi - int (exp(i xi x) - 1) Pi(dx), with Pi the KoBoL Levy measure

        c_- x^(-nu-1) exp(lambda_- x)       for x > 0
        c_+ |x|^(-nu-1) exp(-lambda_+ |x|)  for x < 0

    integrated numerically. The singular part near 0 uses an algebraic weight.
    """
    nu = spec.nu
    total = 0j
    sides = ((spec.c_minus, -spec.lambda_minus, 1.0), (spec.c_plus, spec.lambda_plus, -1.0))
    for intensity, rate, sign in sides:
        frequency = 1j * sign * xi

        def near(x: float) -> complex:
            return intensity * _expm1_over_x(frequency, x) * math.exp(-rate * x)

        def far(x: float) -> complex:
            tilted = cmath.exp((frequency - rate) * x) - math.exp(-rate * x)
            return intensity * tilted * x ** (-nu - 1)

        total += complex_quad(near, 0.0, 1.0, weight="alg", wvar=(-nu, 0.0), **QUAD_OPTIONS)
        total += complex_quad(far, 1.0, math.inf, **QUAD_OPTIONS)
    return -1j * spec.mu * xi - total


def spread_transform_quadrature(u: complex, v: complex) -> complex:
    """
    int int exp(-i (u x_1 + v x_2)) (exp(x_1) - exp(x_2) - 1)_+ dx, with the
    x_1 integral done in closed form and the x_2 integral by quadrature.
    """
    w = -1j * u
    tilt = -1j * v

    def integrand(x: float) -> complex:
        log_level = float(np.logaddexp(0.0, x))
        return cmath.exp(tilt * x + (1 + w) * log_level)

    edges = np.linspace(-60.0, 60.0, 61)
    total = sum(
        complex_quad(integrand, float(lower), float(upper), epsabs=1e-15, epsrel=1e-12)
        for lower, upper in zip(edges[:-1], edges[1:])
    )
    return total / (w * (1 + w))


@pytest.fixture
def kobol_spec() -> LevyExponentSpec:
    return LevyExponentSpec.kobol(
        nu=0.35, c_plus=1.0, c_minus=1.0, lambda_minus=-15.0, lambda_plus=12.0
    )


@pytest.fixture
def kobol_model(kobol_spec: LevyExponentSpec) -> BasketModel:
    coupling = LevyExponentSpec.gaussian(0.1)
    return BasketModel(
        diag=(kobol_spec, kobol_spec),
        coupling=(coupling, coupling),
        coupling_matrix=((0.5, 0.5), (0.5, 0.5)),
    )


@pytest.fixture
def kobol_contract() -> SpreadContract:
    return SpreadContract(spot=(100.0, 10.0), strike=90.0, maturity=1.0, rate=0.05)


@pytest.fixture
def gbm_model() -> BasketModel:
    return gbm_basket([0.3, 0.2], rho=0.4)


@pytest.fixture
def gbm_contract() -> SpreadContract:
    return SpreadContract(spot=(110.0, 10.0), strike=90.0, maturity=1.0, rate=0.05)
