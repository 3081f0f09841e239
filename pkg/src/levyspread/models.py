"""
Characteristic exponents of one-dimensional Levy processes and of the
coupled basket U_t = X_t + B Z_t.

Convention: E[exp(i xi X_t)] = exp(-t psi(xi)).
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from levyspread.complexmath import ComplexArray, ComplexLike, as_complex, principal_power
from levyspread.errors import (
    ConfigurationError,
    DomainError,
    UnsupportedOracleError,
    UnsupportedOrderError,
)

FloatArray = npt.NDArray[np.float64]

DEFAULT_STRIP_MARGIN = 0.95


class ExponentKind(str, enum.Enum):
    KOBOL = "kobol"
    VARIANCE_GAMMA = "variance_gamma"
    NIG = "nig"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class LevyExponentSpec:
    """
    Parametric description of a one-dimensional characteristic exponent.

    Only the fields of the chosen `kind` are meaningful; use the
    classmethod constructors instead of filling fields by hand.
    """

    kind: ExponentKind
    mu: float = 0.0
    c_plus: float = 0.0
    c_minus: float = 0.0
    lambda_minus: float = -math.inf
    lambda_plus: float = math.inf
    nu: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    delta: float = 0.0
    sigma: float = 0.0
    strip_margin: float = DEFAULT_STRIP_MARGIN

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExponentKind(self.kind))
        if not math.isfinite(self.mu):
            raise DomainError(f"drift must be finite, got {self.mu}")
        if not 0 < self.strip_margin < 1:
            raise DomainError(f"strip margin must lie in (0, 1), got {self.strip_margin}")

        if self.kind in (ExponentKind.KOBOL, ExponentKind.VARIANCE_GAMMA):
            if self.c_plus < 0 or self.c_minus < 0:
                raise DomainError("intensities c_plus, c_minus must be non-negative")
            if not -math.inf < self.lambda_minus < 0 < self.lambda_plus < math.inf:
                raise DomainError(
                    "steepness parameters must satisfy lambda_minus < 0 < lambda_plus,"
                    f" got ({self.lambda_minus}, {self.lambda_plus})"
                )
            if self.kind is ExponentKind.KOBOL and not 0 <= self.nu <= 1:
                raise UnsupportedOrderError(f"KoBoL order must lie in (0, 1), got {self.nu}")
        elif self.kind is ExponentKind.NIG:
            if not self.alpha > abs(self.beta):
                raise DomainError(f"NIG needs alpha > |beta|, got ({self.alpha}, {self.beta})")
            if self.delta < 0:
                raise DomainError(f"NIG delta must be non-negative, got {self.delta}")
            if not 0 < self.nu <= 2:
                raise UnsupportedOrderError(f"NIG order must lie in (0, 2], got {self.nu}")
        elif self.kind is ExponentKind.GAUSSIAN:
            if not self.sigma > 0:
                raise DomainError(f"volatility must be positive, got {self.sigma}")

    @classmethod
    def kobol(
        cls,
        nu: float,
        c_plus: float,
        c_minus: float,
        lambda_minus: float,
        lambda_plus: float,
        mu: float = 0.0,
        strip_margin: float = DEFAULT_STRIP_MARGIN,
    ) -> LevyExponentSpec:
        return cls(
            ExponentKind.KOBOL,
            mu=mu,
            c_plus=c_plus,
            c_minus=c_minus,
            lambda_minus=lambda_minus,
            lambda_plus=lambda_plus,
            nu=nu,
            strip_margin=strip_margin,
        )

    @classmethod
    def variance_gamma(
        cls,
        c_plus: float,
        c_minus: float,
        lambda_minus: float,
        lambda_plus: float,
        mu: float = 0.0,
        strip_margin: float = DEFAULT_STRIP_MARGIN,
    ) -> LevyExponentSpec:
        return cls(
            ExponentKind.VARIANCE_GAMMA,
            mu=mu,
            c_plus=c_plus,
            c_minus=c_minus,
            lambda_minus=lambda_minus,
            lambda_plus=lambda_plus,
            strip_margin=strip_margin,
        )

    @classmethod
    def nig(
        cls,
        alpha: float,
        beta: float,
        delta: float,
        nu: float = 1.0,
        mu: float = 0.0,
        strip_margin: float = DEFAULT_STRIP_MARGIN,
    ) -> LevyExponentSpec:
        return cls(
            ExponentKind.NIG,
            mu=mu,
            alpha=alpha,
            beta=beta,
            delta=delta,
            nu=nu,
            strip_margin=strip_margin,
        )

    @classmethod
    def gaussian(cls, sigma: float, mu: float = 0.0) -> LevyExponentSpec:
        return cls(ExponentKind.GAUSSIAN, mu=mu, sigma=sigma)

    @property
    def analytic_strip(self) -> Tuple[float, float]:
        """Open interval of Im xi on which psi is analytic."""
        if self.kind is ExponentKind.GAUSSIAN:
            return -math.inf, math.inf
        if self.kind is ExponentKind.NIG:
            return self.beta - self.alpha, self.beta + self.alpha
        return self.lambda_minus, self.lambda_plus

    @property
    def strip(self) -> Tuple[float, float]:
        """Closed sub-strip [kappa_-, kappa_+] used for evaluation."""
        lower, upper = self.analytic_strip
        return self.strip_margin * lower, self.strip_margin * upper

    def with_mu(self, mu: float) -> LevyExponentSpec:
        return dataclasses.replace(self, mu=mu)


def _check_open_strip(xi: ComplexArray, lower: float, upper: float, name: str) -> None:
    outside = (xi.imag <= lower) | (xi.imag >= upper)
    if outside.any():
        bad = complex(xi[outside].flat[0])
        raise DomainError(
            f"{name} exponent: Im xi = {bad.imag:g} outside the strip ({lower:g}, {upper:g})"
        )


def kobol_exponent(xi: ComplexLike, spec: LevyExponentSpec) -> ComplexArray:
    """
    psi(xi) = -i mu xi + c_- G(-nu)[(-l_-)^nu - (-l_- - i xi)^nu]
                       + c_+ G(-nu)[l_+^nu - (l_+ + i xi)^nu]
    """
    if spec.kind is not ExponentKind.KOBOL:
        raise DomainError(f"expected a KoBoL spec, got {spec.kind.value}")
    if spec.nu in (0.0, 1.0):
        raise UnsupportedOrderError(f"KoBoL order {spec.nu} (logarithmic case) is not supported")
    z = as_complex(xi)
    _check_open_strip(z, spec.lambda_minus, spec.lambda_plus, "KoBoL")

    nu = spec.nu
    gamma_nu = math.gamma(-nu)
    right = -spec.lambda_minus
    left = spec.lambda_plus
    result = -1j * spec.mu * z
    if spec.c_minus:
        result = result + spec.c_minus * gamma_nu * (right**nu - principal_power(right - 1j * z, nu))
    if spec.c_plus:
        result = result + spec.c_plus * gamma_nu * (left**nu - principal_power(left + 1j * z, nu))
    return np.asarray(result, dtype=np.complex128)


def vg_exponent(xi: ComplexLike, spec: LevyExponentSpec) -> ComplexArray:
    if spec.kind is not ExponentKind.VARIANCE_GAMMA:
        raise DomainError(f"expected a variance gamma spec, got {spec.kind.value}")
    z = as_complex(xi)
    _check_open_strip(z, spec.lambda_minus, spec.lambda_plus, "variance gamma")

    right = -spec.lambda_minus
    left = spec.lambda_plus
    result = (
        -1j * spec.mu * z
        + spec.c_plus * (np.log(right - 1j * z) - math.log(right))
        + spec.c_minus * (np.log(left + 1j * z) - math.log(left))
    )
    return np.asarray(result, dtype=np.complex128)


def nig_exponent(xi: ComplexLike, spec: LevyExponentSpec) -> ComplexArray:
    """psi(xi) = -i mu xi + delta[(a^2 - (b + i xi)^2)^(nu/2) - (a^2 - b^2)^(nu/2)]"""
    if spec.kind is not ExponentKind.NIG:
        raise DomainError(f"expected a NIG spec, got {spec.kind.value}")
    z = as_complex(xi)
    lower, upper = spec.analytic_strip
    _check_open_strip(z, lower, upper, "NIG")

    half_order = spec.nu / 2
    base = (spec.alpha**2 - spec.beta**2) ** half_order
    power = principal_power(spec.alpha**2 - (spec.beta + 1j * z) ** 2, half_order)
    result = -1j * spec.mu * z + spec.delta * (power - base)
    return np.asarray(result, dtype=np.complex128)


def gaussian_exponent(xi: ComplexLike, spec: LevyExponentSpec) -> ComplexArray:
    if spec.kind is not ExponentKind.GAUSSIAN:
        raise DomainError(f"expected a Gaussian spec, got {spec.kind.value}")
    z = as_complex(xi)
    return np.asarray(-1j * spec.mu * z + 0.5 * spec.sigma**2 * z**2, dtype=np.complex128)


EXPONENTS: Dict[ExponentKind, Callable[[ComplexLike, LevyExponentSpec], ComplexArray]] = {
    ExponentKind.KOBOL: kobol_exponent,
    ExponentKind.VARIANCE_GAMMA: vg_exponent,
    ExponentKind.NIG: nig_exponent,
    ExponentKind.GAUSSIAN: gaussian_exponent,
}


def exponent(xi: ComplexLike, spec: LevyExponentSpec) -> ComplexArray:
    return EXPONENTS[spec.kind](xi, spec)


@dataclass(frozen=True)
class BasketModel:
    """
    n diagonal exponents, n coupling exponents and the coupling matrix B.

    `emm_rates` is set by `martingale.emm_drift_adjust` and records the
    per-leg rates the diagonal drifts were solved for.
    """

    diag: Tuple[LevyExponentSpec, ...]
    coupling: Tuple[LevyExponentSpec, ...]
    coupling_matrix: Tuple[Tuple[float, ...], ...]
    emm_rates: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "diag", tuple(self.diag))
        object.__setattr__(self, "coupling", tuple(self.coupling))
        object.__setattr__(
            self,
            "coupling_matrix",
            tuple(tuple(float(entry) for entry in row) for row in self.coupling_matrix),
        )
        n = len(self.diag)
        if n == 0:
            raise DomainError("a basket needs at least one component")
        if len(self.coupling) != n:
            raise DomainError(f"expected {n} coupling exponents, got {len(self.coupling)}")
        matrix = np.array(self.coupling_matrix, dtype=np.float64)
        if matrix.shape != (n, n):
            raise DomainError(f"coupling matrix must be {n}x{n}, got shape {matrix.shape}")
        if not np.isfinite(matrix).all() or (matrix < 0).any():
            raise DomainError("coupling matrix entries must be finite and non-negative")

    @property
    def dimension(self) -> int:
        return len(self.diag)

    @property
    def b_matrix(self) -> FloatArray:
        return np.array(self.coupling_matrix, dtype=np.float64)

    @functools.cached_property
    def strips(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """
        (b_-, b_+): per-component bounds on Im z_s that keep every diagonal
        and coupled argument inside its closed strip.
        """
        matrix = self.b_matrix
        column_sums = matrix.sum(axis=0)
        lower_bounds = []
        upper_bounds = []
        for s, spec in enumerate(self.diag):
            lower, upper = spec.strip
            for m, coupling in enumerate(self.coupling):
                if matrix[s, m] > 0:
                    coupling_lower, coupling_upper = coupling.strip
                    lower = max(lower, coupling_lower / column_sums[m])
                    upper = min(upper, coupling_upper / column_sums[m])
            lower_bounds.append(lower)
            upper_bounds.append(upper)
        return tuple(lower_bounds), tuple(upper_bounds)

    @property
    def strip_lower(self) -> Tuple[float, ...]:
        return self.strips[0]

    @property
    def strip_upper(self) -> Tuple[float, ...]:
        return self.strips[1]

    @property
    def is_gaussian(self) -> bool:
        matrix = self.b_matrix
        return all(spec.kind is ExponentKind.GAUSSIAN for spec in self.diag) and all(
            spec.kind is ExponentKind.GAUSSIAN or not matrix[:, m].any()
            for m, spec in enumerate(self.coupling)
        )

    def with_diag(self, diag: Sequence[LevyExponentSpec]) -> BasketModel:
        return dataclasses.replace(self, diag=tuple(diag), emm_rates=None)


def independent_basket(diag: Sequence[LevyExponentSpec]) -> BasketModel:
    """Basket without coupling: B = 0, placeholder unit Gaussian couplings."""
    n = len(diag)
    return BasketModel(
        diag=tuple(diag),
        coupling=tuple(LevyExponentSpec.gaussian(1.0) for _ in range(n)),
        coupling_matrix=tuple((0.0,) * n for _ in range(n)),
    )


def gbm_basket(sigmas: Sequence[float], rho: float = 0.0) -> BasketModel:
    """
    Gaussian legs with volatilities `sigmas` and pairwise correlation `rho`,
    built from one common Gaussian factor.
    """
    if not 0 <= rho < 1:
        raise DomainError(f"common-factor correlation must lie in [0, 1), got {rho}")
    n = len(sigmas)
    diag = tuple(LevyExponentSpec.gaussian(sigma * math.sqrt(1 - rho)) for sigma in sigmas)
    rows = tuple(
        (sigma * math.sqrt(rho),) + (0.0,) * (n - 1) for sigma in sigmas
    )
    return BasketModel(
        diag=diag,
        coupling=tuple(LevyExponentSpec.gaussian(1.0) for _ in range(n)),
        coupling_matrix=rows,
    )


def gaussian_law(model: BasketModel) -> Tuple[FloatArray, FloatArray]:
    """Mean vector and covariance matrix of U_1 for an all-Gaussian basket."""
    if not model.is_gaussian:
        raise UnsupportedOracleError("the Gaussian law is only defined for all-Gaussian baskets")
    matrix = model.b_matrix
    diag_mu = np.array([spec.mu for spec in model.diag])
    coupling_mu = np.array([spec.mu for spec in model.coupling])
    diag_var = np.array([spec.sigma**2 for spec in model.diag])
    coupling_var = np.array([spec.sigma**2 for spec in model.coupling])
    mean = diag_mu + matrix @ coupling_mu
    covariance = np.diag(diag_var) + matrix @ np.diag(coupling_var) @ matrix.T
    return mean, covariance


def _check_closed_strip(
    arguments: ComplexArray, strip: Tuple[float, float], label: str
) -> None:
    lower, upper = strip
    outside = (arguments.imag < lower) | (arguments.imag > upper)
    if outside.any():
        bad = complex(arguments[outside].flat[0])
        raise DomainError(
            f"{label}: Im = {bad.imag:g} outside the strip [{lower:g}, {upper:g}]"
        )


def multivariate_exponent(z: ComplexLike, model: BasketModel) -> ComplexArray:
    """
    sum_s psi_s(z_s) + sum_m psi'_m(sum_k b_km z_k), vectorised over the
    leading axes of `z` (last axis has length n).
    """
    points = as_complex(z)
    n = model.dimension
    if points.shape[-1:] != (n,):
        raise DomainError(f"expected argument vectors of length {n}, got shape {points.shape}")

    total = np.zeros(points.shape[:-1], dtype=np.complex128)
    for s, spec in enumerate(model.diag):
        argument = points[..., s]
        _check_closed_strip(argument, spec.strip, f"component {s}")
        total = total + exponent(argument, spec)

    matrix = model.b_matrix
    coupled = points @ matrix
    for m, spec in enumerate(model.coupling):
        if not matrix[:, m].any():
            continue
        argument = coupled[..., m]
        _check_closed_strip(argument, spec.strip, f"coupled argument {m}")
        total = total + exponent(argument, spec)
    return total


def characteristic_function(z: ComplexLike, t: float, model: BasketModel) -> ComplexArray:
    """Phi(z, t) = exp(-t psi(z))."""
    if not t > 0:
        raise DomainError(f"time horizon must be positive, got {t}")
    return np.asarray(np.exp(-t * multivariate_exponent(z, model)), dtype=np.complex128)


class DecayOverride(NamedTuple):
    """|Phi(xi, t)| <= exp(-constant * t * |xi|^order) for one component."""

    constant: float
    order: float


def component_decay(spec: LevyExponentSpec) -> DecayOverride:
    if spec.kind is ExponentKind.KOBOL:
        nu = spec.nu
        if nu <= 0:
            raise UnsupportedOrderError(f"KoBoL order {nu} (logarithmic case) is not supported")
        if nu >= 0.5:
            raise UnsupportedOrderError(
                f"KoBoL order {nu} >= 1/2 has no decay bound usable for lattice sizing"
            )
        intensity = min(spec.c_plus, spec.c_minus)
        constant = (
            2 * intensity * -math.gamma(-nu) * math.cos(math.pi * nu / 2)
            * min(1.0, math.cos(nu * math.pi))
        )
        if not constant > 0:
            raise ConfigurationError(
                "KoBoL component with a zero intensity needs a decay override"
            )
        return DecayOverride(constant, nu)
    if spec.kind is ExponentKind.GAUSSIAN:
        return DecayOverride(0.5 * spec.sigma**2, 2.0)
    if spec.kind is ExponentKind.NIG and spec.delta > 0:
        return DecayOverride(spec.delta, spec.nu)
    raise ConfigurationError(
        f"no built-in decay constant for a {spec.kind.value} component; configure an override"
    )


def _component_decays(
    model: BasketModel, overrides: Optional[Mapping[int, DecayOverride]]
) -> Tuple[DecayOverride, ...]:
    overrides = overrides or {}
    decays = []
    for s, spec in enumerate(model.diag):
        if s in overrides:
            decays.append(DecayOverride(*overrides[s]))
            continue
        try:
            decays.append(component_decay(spec))
        except ConfigurationError as exc:
            raise ConfigurationError(f"component {s}: {exc}") from exc
    return tuple(decays)


def decay_constant(
    model: BasketModel, overrides: Optional[Mapping[int, DecayOverride]] = None
) -> float:
    """Aggregate decay constant C: the minimum over the diagonal components."""
    return min(decay.constant for decay in _component_decays(model, overrides))


def lattice_orders(
    model: BasketModel, overrides: Optional[Mapping[int, DecayOverride]] = None
) -> Tuple[float, ...]:
    """Per-axis orders nu_s for the truncation lattice."""
    return tuple(decay.order for decay in _component_decays(model, overrides))
