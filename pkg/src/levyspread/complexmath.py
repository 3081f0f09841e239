"""
Principal-branch complex powers and the complex gamma function.

Every function is vectorised over numpy arrays and returns a complex128
array of the input's shape (0-d for scalar input).

Input:
    log_gamma(0.5)
Output:
    array(0.57236494+0.j)    # ln(sqrt(pi))
"""
from __future__ import annotations

import math
from typing import Union

import numpy as np
import numpy.typing as npt

from levyspread.errors import DomainError, GammaOverflowError, PoleError

ComplexArray = npt.NDArray[np.complex128]
ComplexLike = Union[complex, float, npt.ArrayLike]

LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
HALF_LOG_TWO_PI = 0.5 * math.log(2 * math.pi)
# Largest argument exp() accepts without overflowing a float64.
LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


def as_complex(z: ComplexLike) -> ComplexArray:
    """Copy `z` into a complex128 array, rejecting NaN."""
    array = np.array(z, dtype=np.complex128)
    if np.isnan(array).any():
        raise DomainError("NaN in complex argument")
    return array


def principal_power(z: ComplexLike, nu: float) -> ComplexArray:
    """exp(nu * Log z) with Log the principal logarithm, Im in (-pi, pi]."""
    if not math.isfinite(nu):
        raise DomainError(f"power order must be finite, got {nu}")
    array = as_complex(z)
    on_cut = (array.imag == 0) & (array.real <= 0)
    if on_cut.any():
        bad = complex(array[on_cut].flat[0])
        raise DomainError(f"{bad} lies on the branch cut (-inf, 0]")
    return np.asarray(np.exp(nu * np.log(array)), dtype=np.complex128)


def pole_distance(z: ComplexLike) -> npt.NDArray[np.float64]:
    """Distance from each `z` to the nearest pole of gamma."""
    array = as_complex(z)
    nearest = np.minimum(np.round(array.real), 0.0)
    return np.asarray(np.abs(array - nearest), dtype=np.float64)


def _lanczos_log_gamma(z: ComplexArray) -> ComplexArray:
    """log Gamma(z) for Re z >= 0.5."""
    w = z - 1.0
    series = np.full_like(w, LANCZOS_COEFFICIENTS[0])
    for k, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        series = series + coefficient / (w + k)
    t = w + LANCZOS_G + 0.5
    result = HALF_LOG_TWO_PI + (w + 0.5) * np.log(t) - t + np.log(series)
    return np.asarray(result, dtype=np.complex128)


def log_gamma(z: ComplexLike) -> ComplexArray:
    """
    Branch-continuous log Gamma(z), matching log Gamma(z+1) = log Gamma(z) + Log z.

    The lower half plane is computed as the conjugate of the upper one, so
    log_gamma(conj z) == conj(log_gamma(z)) holds exactly.
    """
    array = as_complex(z)
    shape = array.shape
    flat = array.reshape(-1)

    is_pole = (flat.imag == 0) & (flat.real <= 0) & (flat.real == np.floor(flat.real))
    if is_pole.any():
        raise PoleError(f"gamma has a pole at {flat[is_pole][0].real:g}")

    lower = flat.imag < 0
    work = np.where(lower, np.conj(flat), flat)
    offset = np.zeros_like(work)
    # Shift left-half-plane arguments right: log G(z) = log G(z+N) - sum Log(z+k).
    needs_shift = work.real < 0.5
    while needs_shift.any():
        offset[needs_shift] -= np.log(work[needs_shift])
        work[needs_shift] += 1.0
        needs_shift = work.real < 0.5

    result = _lanczos_log_gamma(work) + offset
    result = np.where(lower, np.conj(result), result)
    return np.asarray(result.reshape(shape), dtype=np.complex128)


def gamma(z: ComplexLike) -> ComplexArray:
    """Gamma(z) as exp(log_gamma(z))."""
    log_value = log_gamma(z)
    overflow = log_value.real > LOG_FLOAT_MAX
    if overflow.any():
        bad = complex(log_value[overflow].flat[0])
        raise GammaOverflowError(f"gamma overflows, log value {bad}", log_value=bad)
    return np.asarray(np.exp(log_value), dtype=np.complex128)
