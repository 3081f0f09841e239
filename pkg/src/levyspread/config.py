"""
JSON run configuration for the CLI.

Input:
    {"model": {"gbm": {"sigmas": [0.2, 0.2], "rho": 0.0}},
     "contract": {"spot": [110, 10], "strike": 90, "maturity": 0.5, "rate": 0.05}}
Output:
    RunConfig(model=BasketModel(...), contract=SpreadContract(...), ...)
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from levyspread.density import DEFAULT_MAX_POINTS
from levyspread.errors import ConfigurationError, PricerError
from levyspread.models import (
    BasketModel,
    DecayOverride,
    ExponentKind,
    LevyExponentSpec,
    gbm_basket,
    independent_basket,
)
from levyspread.pricer import (
    DEFAULT_PATHS,
    DEFAULT_QUADRATURE_POINTS,
    DEFAULT_TARGET,
    EmmPolicy,
    SpreadContract,
)

KIND_FIELDS: Dict[ExponentKind, Tuple[str, ...]] = {
    ExponentKind.KOBOL: ("nu", "c_plus", "c_minus", "lambda_minus", "lambda_plus"),
    ExponentKind.VARIANCE_GAMMA: ("c_plus", "c_minus", "lambda_minus", "lambda_plus"),
    ExponentKind.NIG: ("alpha", "beta", "delta"),
    ExponentKind.GAUSSIAN: ("sigma",),
}
OPTIONAL_FIELDS: Dict[ExponentKind, Tuple[str, ...]] = {
    ExponentKind.KOBOL: ("mu", "strip_margin"),
    ExponentKind.VARIANCE_GAMMA: ("mu", "strip_margin"),
    ExponentKind.NIG: ("mu", "nu", "strip_margin"),
    ExponentKind.GAUSSIAN: ("mu",),
}


def _mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise ConfigurationError(f"{path}: expected an object")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigurationError(f"{path}: expected a finite number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
    return value


def _numbers(value: Any, path: str) -> Tuple[float, ...]:
    if not isinstance(value, list):
        raise ConfigurationError(f"{path}: expected a list of numbers")
    return tuple(_number(item, f"{path}[{index}]") for index, item in enumerate(value))


def _required(section: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in section:
        raise ConfigurationError(f"{path}.{key}: missing required field")
    return section[key]


def _reject_unknown(section: Mapping[str, Any], allowed: Sequence[str], path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigurationError(f"{path}.{key}: unknown field")


def parse_component(data: Any, path: str) -> LevyExponentSpec:
    section = _mapping(data, path)
    kind_name = _required(section, "kind", path)
    try:
        kind = ExponentKind(kind_name)
    except ValueError:
        choices = ", ".join(option.value for option in ExponentKind)
        raise ConfigurationError(f"{path}.kind: expected one of {choices}, got {kind_name!r}") from None
    required = KIND_FIELDS[kind]
    _reject_unknown(section, ("kind", *required, *OPTIONAL_FIELDS[kind]), path)
    values = {key: _number(_required(section, key, path), f"{path}.{key}") for key in required}
    for key in OPTIONAL_FIELDS[kind]:
        if key in section:
            values[key] = _number(section[key], f"{path}.{key}")
    try:
        return LevyExponentSpec(kind, **values)
    except PricerError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def parse_model(data: Any, path: str = "model") -> BasketModel:
    section = _mapping(data, path)
    try:
        if "gbm" in section:
            _reject_unknown(section, ("gbm",), path)
            gbm = _mapping(section["gbm"], f"{path}.gbm")
            _reject_unknown(gbm, ("sigmas", "rho"), f"{path}.gbm")
            sigmas = _numbers(_required(gbm, "sigmas", f"{path}.gbm"), f"{path}.gbm.sigmas")
            rho = _number(gbm.get("rho", 0.0), f"{path}.gbm.rho")
            return gbm_basket(sigmas, rho)

        _reject_unknown(section, ("diag", "coupling", "coupling_matrix"), path)
        diag_data = _required(section, "diag", path)
        if not isinstance(diag_data, list) or not diag_data:
            raise ConfigurationError(f"{path}.diag: expected a non-empty list")
        diag = [parse_component(item, f"{path}.diag[{index}]") for index, item in enumerate(diag_data)]
        if "coupling" not in section:
            if "coupling_matrix" in section:
                raise ConfigurationError(f"{path}.coupling: required with coupling_matrix")
            return independent_basket(diag)
        coupling_data = section["coupling"]
        if not isinstance(coupling_data, list):
            raise ConfigurationError(f"{path}.coupling: expected a list")
        coupling = [
            parse_component(item, f"{path}.coupling[{index}]")
            for index, item in enumerate(coupling_data)
        ]
        matrix_data = _required(section, "coupling_matrix", path)
        if not isinstance(matrix_data, list):
            raise ConfigurationError(f"{path}.coupling_matrix: expected a list of rows")
        matrix = [
            _numbers(row, f"{path}.coupling_matrix[{index}]") for index, row in enumerate(matrix_data)
        ]
        return BasketModel(tuple(diag), tuple(coupling), tuple(matrix))
    except ConfigurationError:
        raise
    except PricerError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def parse_contract(data: Any, path: str = "contract") -> SpreadContract:
    section = _mapping(data, path)
    _reject_unknown(section, ("spot", "strike", "maturity", "rate"), path)
    spot = _numbers(_required(section, "spot", path), f"{path}.spot")
    strike = _number(_required(section, "strike", path), f"{path}.strike")
    maturity = _number(_required(section, "maturity", path), f"{path}.maturity")
    rate = _number(section.get("rate", 0.0), f"{path}.rate")
    try:
        return SpreadContract(spot, strike, maturity, rate)
    except PricerError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class GridConfig:
    """Either `auto` with a target error, or an explicit period and ln R."""

    auto: bool = True
    target: float = DEFAULT_TARGET
    period: Optional[float] = None
    log_radius: Optional[float] = None
    square: Optional[int] = None
    decay: Optional[float] = None
    overrides: Mapping[int, DecayOverride] = field(default_factory=dict)
    max_points: int = DEFAULT_MAX_POINTS


def parse_grid(data: Any, path: str = "grid") -> GridConfig:
    section = _mapping(data, path)
    _reject_unknown(
        section,
        ("auto", "target", "period", "log_radius", "square", "decay", "overrides", "max_points"),
        path,
    )
    explicit = "period" in section
    auto = section.get("auto", not explicit)
    if not isinstance(auto, bool):
        raise ConfigurationError(f"{path}.auto: expected true or false")
    target = _number(section.get("target", DEFAULT_TARGET), f"{path}.target")
    if not 0 < target < 1:
        raise ConfigurationError(f"{path}.target: must lie in (0, 1), got {target}")

    period: Optional[float] = None
    log_radius: Optional[float] = None
    decay: Optional[float] = None
    square: Optional[int] = None
    if not auto:
        period = _number(_required(section, "period", path), f"{path}.period")
        if not period > 0:
            raise ConfigurationError(f"{path}.period: must be positive, got {period}")
        if "square" in section:
            square = _integer(section["square"], f"{path}.square")
            if square < 0:
                raise ConfigurationError(f"{path}.square: must be non-negative")
        if "log_radius" in section:
            log_radius = _number(section["log_radius"], f"{path}.log_radius")
        elif square is not None:
            log_radius = 0.0
        else:
            raise ConfigurationError(f"{path}.log_radius: missing required field")
        if log_radius < 0:
            raise ConfigurationError(f"{path}.log_radius: must be non-negative, got {log_radius}")
    if "decay" in section:
        decay = _number(section["decay"], f"{path}.decay")
        if not decay > 0:
            raise ConfigurationError(f"{path}.decay: must be positive, got {decay}")

    overrides: Dict[int, DecayOverride] = {}
    for key, value in _mapping(section.get("overrides", {}), f"{path}.overrides").items():
        entry_path = f"{path}.overrides.{key}"
        if not key.isdigit():
            raise ConfigurationError(f"{entry_path}: keys are component indices")
        entry = _mapping(value, entry_path)
        _reject_unknown(entry, ("constant", "order"), entry_path)
        constant = _number(_required(entry, "constant", entry_path), f"{entry_path}.constant")
        order = _number(_required(entry, "order", entry_path), f"{entry_path}.order")
        if not constant > 0 or not 0 < order <= 2:
            raise ConfigurationError(f"{entry_path}: need constant > 0 and order in (0, 2]")
        overrides[int(key)] = DecayOverride(constant, order)

    max_points = _integer(section.get("max_points", DEFAULT_MAX_POINTS), f"{path}.max_points")
    if max_points < 1:
        raise ConfigurationError(f"{path}.max_points: must be positive")
    return GridConfig(auto, target, period, log_radius, square, decay, overrides, max_points)


@dataclass(frozen=True)
class PricingConfig:
    damping: Optional[Tuple[float, ...]] = None
    emm_policy: EmmPolicy = EmmPolicy.AUTO_ADJUST
    leg_rates: Optional[Tuple[float, ...]] = None


def parse_pricing(data: Any, path: str = "pricing") -> PricingConfig:
    section = _mapping(data, path)
    _reject_unknown(section, ("damping", "emm_policy", "leg_rates"), path)
    damping = _numbers(section["damping"], f"{path}.damping") if "damping" in section else None
    policy_name = section.get("emm_policy", EmmPolicy.AUTO_ADJUST.value)
    try:
        policy = EmmPolicy(policy_name)
    except ValueError:
        raise ConfigurationError(
            f"{path}.emm_policy: expected 'auto-adjust' or 'strict', got {policy_name!r}"
        ) from None
    rates = _numbers(section["leg_rates"], f"{path}.leg_rates") if "leg_rates" in section else None
    return PricingConfig(damping, policy, rates)


@dataclass(frozen=True)
class OutputConfig:
    seed: int = 0
    paths: int = DEFAULT_PATHS
    quadrature_points: int = DEFAULT_QUADRATURE_POINTS


def parse_output(data: Any, path: str = "output") -> OutputConfig:
    section = _mapping(data, path)
    _reject_unknown(section, ("seed", "paths", "quadrature_points"), path)
    seed = _integer(section.get("seed", 0), f"{path}.seed")
    paths = _integer(section.get("paths", DEFAULT_PATHS), f"{path}.paths")
    points = _integer(
        section.get("quadrature_points", DEFAULT_QUADRATURE_POINTS), f"{path}.quadrature_points"
    )
    if paths < 2:
        raise ConfigurationError(f"{path}.paths: need at least 2, got {paths}")
    if points < 3:
        raise ConfigurationError(f"{path}.quadrature_points: need at least 3, got {points}")
    return OutputConfig(seed, paths, points)


@dataclass(frozen=True)
class RunConfig:
    model: BasketModel
    contract: SpreadContract
    grid: GridConfig
    pricing: PricingConfig
    output: OutputConfig
    raw: Mapping[str, Any]

    def to_json(self, model: Optional[BasketModel] = None) -> str:
        """The configuration as JSON, with `model` written in place of the original."""
        document = copy.deepcopy(dict(self.raw))
        if model is not None:
            document["model"] = model_to_json(model)
        return json.dumps(document, indent=2)


def parse_config(document: Any) -> RunConfig:
    section = _mapping(document, "config")
    for key in section:
        if key not in ("model", "contract", "grid", "pricing", "output"):
            raise ConfigurationError(f"{key}: unknown section")
    model = parse_model(_required(section, "model", "config"))
    contract = parse_contract(_required(section, "contract", "config"))
    if contract.dimension != model.dimension:
        raise ConfigurationError(
            f"contract.spot: {contract.dimension} legs for a {model.dimension}-component model"
        )
    grid = parse_grid(section.get("grid", {}))
    for index in sorted(grid.overrides):
        if index >= model.dimension:
            raise ConfigurationError(
                f"grid.overrides.{index}: no component {index} in a {model.dimension}-component model"
            )
    pricing = parse_pricing(section.get("pricing", {}))
    if pricing.damping is not None and len(pricing.damping) != model.dimension:
        raise ConfigurationError(f"pricing.damping: expected {model.dimension} entries")
    if pricing.leg_rates is not None and len(pricing.leg_rates) != model.dimension:
        raise ConfigurationError(f"pricing.leg_rates: expected {model.dimension} entries")
    output = parse_output(section.get("output", {}))
    return RunConfig(model, contract, grid, pricing, output, section)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as file:
            contents = file.read()
    except OSError as exc:
        raise ConfigurationError(f"unable to read {path}: {exc.strerror}") from exc
    try:
        document = json.loads(contents)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"unable to parse {path}:{exc.lineno}:{exc.colno} - {exc.msg}") from exc
    return parse_config(document)


def component_to_json(spec: LevyExponentSpec) -> Dict[str, Any]:
    document: Dict[str, Any] = {"kind": spec.kind.value}
    for key in (*KIND_FIELDS[spec.kind], *OPTIONAL_FIELDS[spec.kind]):
        document[key] = getattr(spec, key)
    return document


def model_to_json(model: BasketModel) -> Dict[str, Any]:
    return {
        "diag": [component_to_json(spec) for spec in model.diag],
        "coupling": [component_to_json(spec) for spec in model.coupling],
        "coupling_matrix": [list(row) for row in model.coupling_matrix],
    }

