"""
Density recovery by Poisson summation, truncated to the exponential
hyperbolic cross

    { m in Z^n : C T sum_s |2 pi m_s / P|^nu_s <= ln R }.

Input:
    spec = LatticeSpec(period=10, log_radius=4, decay=1, orders=(0.4, 0.4), maturity=1)
    cross_lattice(spec)
Output:
    array of integer vectors, lexicographically ordered, symmetric under m -> -m
"""
from __future__ import annotations

import functools
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import sparse

from levyspread.complexmath import ComplexArray
from levyspread.errors import BudgetError, DomainError
from levyspread.models import (
    BasketModel,
    DecayOverride,
    FloatArray,
    characteristic_function,
    decay_constant,
    lattice_orders,
    multivariate_exponent,
)

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]

DEFAULT_MAX_POINTS = 10_000_000
# Half-width of the tilted law, in standard deviations, that the box must hold.
WIDTH_STANDARD_DEVIATIONS = 12.0
DIFFERENCE_STEP = 1e-4
GRID_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class LatticeSpec:
    """
    Period P (the box is (P/2) Q_n), truncation ln R, decay constant C,
    per-axis orders nu_s and maturity T.

    Gaussian axes use order 2, which makes the membership test the exact
    bound |Phi| = exp(-C T |xi|^2).
    """

    period: float
    log_radius: float
    decay: float
    orders: Tuple[float, ...]
    maturity: float
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(float(order) for order in self.orders))
        if not (math.isfinite(self.period) and self.period > 0):
            raise DomainError(f"period must be positive, got {self.period}")
        if not (math.isfinite(self.log_radius) and self.log_radius >= 0):
            raise DomainError(f"ln R must be non-negative (R >= 1), got {self.log_radius}")
        if not (math.isfinite(self.decay) and self.decay > 0):
            raise DomainError(f"decay constant must be positive, got {self.decay}")
        if not self.orders:
            raise DomainError("a lattice needs at least one axis")
        for order in self.orders:
            if not 0 < order <= 2:
                raise DomainError(f"lattice orders must lie in (0, 2], got {order}")
        if not self.maturity > 0:
            raise DomainError(f"maturity must be positive, got {self.maturity}")
        if self.max_points < 1:
            raise DomainError(f"max_points must be positive, got {self.max_points}")

    @classmethod
    def from_radius(
        cls,
        period: float,
        radius: float,
        decay: float,
        orders: Sequence[float],
        maturity: float,
        max_points: int = DEFAULT_MAX_POINTS,
    ) -> LatticeSpec:
        if not radius >= 1:
            raise DomainError(f"truncation parameter R must be at least 1, got {radius}")
        return cls(period, math.log(radius), decay, tuple(orders), maturity, max_points)

    @property
    def dimension(self) -> int:
        return len(self.orders)

    @property
    def axis_bounds(self) -> Tuple[int, ...]:
        """M_s = ceil((P / 2 pi) (ln R / (C T))^(1 / nu_s))."""
        scale = self.log_radius / (self.decay * self.maturity)
        return tuple(
            int(math.ceil(self.period / (2 * math.pi) * scale ** (1 / order)))
            for order in self.orders
        )


def cross_cost(points: npt.ArrayLike, spec: LatticeSpec) -> FloatArray:
    """C T sum_s |2 pi m_s / P|^nu_s for each row of `points`."""
    lattice = np.asarray(points, dtype=np.float64)
    orders = np.array(spec.orders)
    cost = spec.decay * spec.maturity * np.sum(
        np.abs(2 * np.pi * lattice / spec.period) ** orders, axis=-1
    )
    return np.asarray(cost, dtype=np.float64)


def cross_cardinality_estimate(spec: LatticeSpec) -> float:
    """
    (C T)^(-sum 1/nu) (P / 2 pi)^n Vol (ln R)^(sum 1/nu), where
    Vol = 2^n prod G(1 + 1/nu_s) / G(1 + sum 1/nu_s) is the volume of
    the unit ball of sum |y_s|^nu_s <= 1.
    """
    if spec.log_radius == 0:
        return 0.0
    inverse_orders = [1 / order for order in spec.orders]
    total = sum(inverse_orders)
    n = spec.dimension
    log_volume = (
        n * math.log(2)
        + sum(math.lgamma(1 + inverse) for inverse in inverse_orders)
        - math.lgamma(1 + total)
    )
    log_estimate = (
        -total * math.log(spec.decay * spec.maturity)
        + n * math.log(spec.period / (2 * math.pi))
        + log_volume
        + total * math.log(spec.log_radius)
    )
    return math.exp(log_estimate)


def cross_lattice(spec: LatticeSpec) -> IntArray:
    """
    Integer points of the hyperbolic cross, in lexicographic order.

    Axes are expanded one at a time; each prefix only receives the range of
    m_s its remaining budget allows, then an exact membership filter runs.
    """
    estimate = cross_cardinality_estimate(spec)
    if estimate > spec.max_points:
        raise BudgetError(
            f"hyperbolic cross holds about {estimate:.3g} points, cap is {spec.max_points}",
            estimate=estimate,
        )

    scale = spec.decay * spec.maturity
    frequency = 2 * math.pi / spec.period
    budget = spec.log_radius * (1 + 1e-9)
    prefixes = np.zeros((1, 0), dtype=np.int64)
    costs = np.zeros(1)
    for order in spec.orders:
        remaining = np.maximum(budget - costs, 0.0)
        reach = np.floor((remaining / scale) ** (1 / order) / frequency).astype(np.int64) + 1
        counts = 2 * reach + 1
        size = int(counts.sum())
        if size > 3 * spec.max_points:
            raise BudgetError(
                f"lattice expansion reached {size} candidates, cap is {spec.max_points}",
                estimate=estimate,
            )
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        axis = np.repeat(-reach, counts) + (np.arange(size) - offsets)
        prefixes = np.column_stack([np.repeat(prefixes, counts, axis=0), axis])
        costs = np.repeat(costs, counts) + scale * np.abs(frequency * axis) ** order
        keep = costs <= budget
        prefixes, costs = prefixes[keep], costs[keep]

    points = prefixes[cross_cost(prefixes, spec) <= spec.log_radius]
    if len(points) > spec.max_points:
        raise BudgetError(
            f"hyperbolic cross holds {len(points)} points, cap is {spec.max_points}",
            estimate=float(len(points)),
        )
    return np.ascontiguousarray(points, dtype=np.int64)


def box_lattice(n: int, half_width: int) -> IntArray:
    """All m with |m_k| <= half_width, lexicographic."""
    if n < 1 or half_width < 0:
        raise DomainError(f"invalid square lattice ({n}, {half_width})")
    axis = range(-half_width, half_width + 1)
    return np.array(list(itertools.product(axis, repeat=n)), dtype=np.int64).reshape(-1, n)


@dataclass(frozen=True, eq=False)
class DensityApproximant:
    """Coefficients Phi(-(2 pi / P) m + i shift, T) / P^n over a lattice."""

    spec: LatticeSpec
    points: IntArray
    coefficients: ComplexArray
    shift: FloatArray

    def coefficient(self, m: Sequence[int]) -> complex:
        matches = np.flatnonzero((self.points == np.asarray(m)).all(axis=1))
        if len(matches) == 0:
            raise KeyError(tuple(m))
        return complex(self.coefficients[matches[0]])


def _chunks(size: int, parts: int) -> List[slice]:
    edges = np.linspace(0, size, parts + 1).astype(int)
    return [slice(start, stop) for start, stop in zip(edges[:-1], edges[1:]) if stop > start]


def build_density(
    model: BasketModel,
    spec: LatticeSpec,
    shift: Optional[Sequence[float]] = None,
    points: Optional[npt.ArrayLike] = None,
    threads: int = 1,
) -> DensityApproximant:
    """
    Fourier coefficients of the (shifted) periodised density over `points`
    (the hyperbolic cross of `spec` by default).
    """
    n = model.dimension
    if spec.dimension != n:
        raise DomainError(f"lattice has {spec.dimension} axes, model has {n} components")
    if model.emm_rates is None:
        logger.warning("building a density for a model whose drifts were not EMM-adjusted")

    shift_vector = np.zeros(n) if shift is None else np.array(shift, dtype=np.float64)
    if shift_vector.shape != (n,):
        raise DomainError(f"shift must have {n} entries")
    lattice = cross_lattice(spec) if points is None else np.array(points, dtype=np.int64)
    if lattice.ndim != 2 or lattice.shape[1] != n:
        raise DomainError(f"lattice points must be rows of length {n}")

    arguments = -(2 * np.pi / spec.period) * lattice + 1j * shift_vector
    evaluate = functools.partial(characteristic_function, t=spec.maturity, model=model)
    if threads > 1 and len(lattice) > 1:
        parts = _chunks(len(lattice), threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as executor:
            values = np.concatenate(list(executor.map(evaluate, [arguments[part] for part in parts])))
    else:
        values = evaluate(arguments)

    coefficients = values / spec.period**n
    lattice.setflags(write=False)
    coefficients.setflags(write=False)
    shift_vector.setflags(write=False)
    logger.info("built density approximant over %d lattice points", len(lattice))
    return DensityApproximant(spec, lattice, coefficients, shift_vector)


class DensityValue(NamedTuple):
    value: float
    imag_residue: float
    outside_box: bool


def eval_density(approx: DensityApproximant, x: Sequence[float]) -> DensityValue:
    """
    exp(<x, shift>) sum_m c_m exp((2 pi i / P) <m, x>), summed with
    math.fsum; the imaginary part is reported as a residue.
    """
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (approx.spec.dimension,):
        raise DomainError(f"expected a point with {approx.spec.dimension} coordinates")
    outside = bool((np.abs(point) > approx.spec.period / 2).any())
    if outside:
        logger.warning("x = %s lies outside the fundamental box; values are periodic images", point)

    phases = np.exp(2j * np.pi / approx.spec.period * (approx.points @ point))
    terms = approx.coefficients * phases
    scale = math.exp(float(point @ approx.shift))
    real = math.fsum(terms.real.tolist())
    imag = math.fsum(terms.imag.tolist())
    return DensityValue(scale * real, abs(scale * imag), outside)


class DensityGrid(NamedTuple):
    values: FloatArray
    imag_residues: FloatArray
    outside_box: npt.NDArray[np.bool_]


def _row_chunks(rows: int, width: int) -> List[slice]:
    step = max(1, GRID_CHUNK_ELEMENTS // max(width, 1))
    return [slice(start, min(start + step, rows)) for start in range(0, rows, step)]


def _merge_axis(
    values: ComplexArray,
    harmonics: IntArray,
    axis: FloatArray,
    frequency: float,
    groups: IntArray,
    count: int,
) -> ComplexArray:
    """Rows of `values` times their phases on `axis`, summed within `groups`."""
    rows = len(values)
    scatter = sparse.csc_matrix(
        (np.ones(rows), (groups, np.arange(rows))), shape=(count, rows)
    )
    width = len(axis) * values.shape[1]
    merged = np.zeros((count, width), dtype=np.complex128)
    for part in _row_chunks(rows, width):
        phases = np.exp(1j * frequency * np.outer(harmonics[part], axis))
        block = (phases[:, :, None] * values[part][:, None, :]).reshape(-1, width)
        merged += scatter[:, part] @ block
    return merged


def _sum_axis(
    values: ComplexArray, harmonics: IntArray, axis: FloatArray, frequency: float
) -> ComplexArray:
    total = np.zeros((len(axis), values.shape[1]), dtype=np.complex128)
    for part in _row_chunks(len(values), len(axis)):
        phases = np.exp(1j * frequency * np.outer(harmonics[part], axis))
        total += phases.T @ values[part]
    return total


def eval_density_grid(approx: DensityApproximant, axes: Sequence[npt.ArrayLike]) -> DensityGrid:
    """
    The approximant on the tensor grid axes[0] x ... x axes[n-1].

    The lattice is contracted one axis at a time, last axis first: rows
    sharing the prefix (m_1, ..., m_{s-1}) are merged once the phases of
    axis s are applied. Temporaries stay below GRID_CHUNK_ELEMENTS entries
    per chunk of rows.
    """
    n = approx.spec.dimension
    grid_axes = [np.asarray(axis, dtype=np.float64).reshape(-1) for axis in axes]
    if len(grid_axes) != n:
        raise DomainError(f"expected {n} grid axes, got {len(grid_axes)}")

    frequency = 2 * np.pi / approx.spec.period
    keys = approx.points
    values = approx.coefficients.reshape(-1, 1)
    for s in range(n - 1, 0, -1):
        prefixes, groups = np.unique(keys[:, :s], axis=0, return_inverse=True)
        values = _merge_axis(
            values, keys[:, s], grid_axes[s], frequency, groups.reshape(-1), len(prefixes)
        )
        keys = prefixes
    result = _sum_axis(values, keys[:, 0], grid_axes[0], frequency)
    result = result.reshape(tuple(len(axis) for axis in grid_axes))

    scale = functools.reduce(
        np.multiply.outer, [np.exp(s * axis) for s, axis in zip(approx.shift, grid_axes)]
    )
    half_period = approx.spec.period / 2
    outside = functools.reduce(
        np.logical_or.outer, [np.abs(axis) > half_period for axis in grid_axes]
    )
    if np.any(outside):
        logger.warning("%d grid points lie outside the fundamental box", int(np.sum(outside)))
    return DensityGrid(
        np.asarray(scale * result.real, dtype=np.float64),
        np.asarray(np.abs(scale * result.imag), dtype=np.float64),
        np.asarray(outside, dtype=np.bool_),
    )


def density_width(
    model: BasketModel, maturity: float, shift: Optional[Sequence[float]] = None
) -> float:
    """
    max_s |mean_s| + k sd_s of the exponentially tilted law, from central
    differences of psi at i * shift.
    """
    n = model.dimension
    base = 1j * (np.zeros(n) if shift is None else np.asarray(shift, dtype=np.float64))
    centre = complex(multivariate_exponent(base, model))
    width = 0.0
    for s in range(n):
        step = np.zeros(n)
        step[s] = DIFFERENCE_STEP
        plus = complex(multivariate_exponent(base + step, model))
        minus = complex(multivariate_exponent(base - step, model))
        mean = (1j * maturity * (plus - minus) / (2 * DIFFERENCE_STEP)).real
        variance = (maturity * (plus - 2 * centre + minus) / DIFFERENCE_STEP**2).real
        width = max(width, abs(mean) + WIDTH_STANDARD_DEVIATIONS * math.sqrt(max(variance, 0.0)))
    return width


def balanced_lattice(
    model: BasketModel,
    maturity: float,
    target: float,
    shift: Optional[Sequence[float]] = None,
    offset: float = 0.0,
    min_period: float = 0.0,
    overrides: Optional[Mapping[int, DecayOverride]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> LatticeSpec:
    """
    Auto grid: ln R = ln(1 / target), and P large enough that the
    periodisation term exp(-(P/2) b) matches the truncation term and the
    box (P/2) Q_n holds the tilted law shifted by `offset`.
    """
    if not 0 < target < 1:
        raise DomainError(f"target error must lie in (0, 1), got {target}")
    n = model.dimension
    shift_vector = np.zeros(n) if shift is None else np.asarray(shift, dtype=np.float64)
    log_radius = -math.log(target)

    lower, upper = model.strips
    half_width = min(
        min(upper[s] - shift_vector[s], shift_vector[s] - lower[s]) for s in range(n)
    )
    if not half_width > 0:
        raise DomainError("the shift lies on the boundary of the analyticity strip")
    period = 2 * log_radius / half_width if math.isfinite(half_width) else 0.0
    width = density_width(model, maturity, shift_vector)
    period = max(period, 2 * (offset + width), min_period)

    spec = LatticeSpec(
        period=period,
        log_radius=log_radius,
        decay=decay_constant(model, overrides),
        orders=lattice_orders(model, overrides),
        maturity=maturity,
        max_points=max_points,
    )
    logger.info(
        "auto grid: P = %.6g, ln R = %.6g, about %.3g lattice points",
        spec.period,
        spec.log_radius,
        cross_cardinality_estimate(spec),
    )
    return spec
