from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from levyspread.config import load_config, parse_config
from levyspread.errors import ConfigurationError
from levyspread.models import DecayOverride, ExponentKind
from levyspread.pricer import EmmPolicy


def _document(**sections: Any) -> dict[str, Any]:
    document: dict[str, Any] = {
        "model": {"gbm": {"sigmas": [0.3, 0.2], "rho": 0.4}},
        "contract": {"spot": [110, 10], "strike": 90, "maturity": 1.0},
    }
    document.update(sections)
    return document


def test_defaults() -> None:
    config = parse_config(_document())
    assert config.grid.auto
    assert config.grid.target == 1e-8
    assert config.pricing.emm_policy is EmmPolicy.AUTO_ADJUST
    assert config.output.seed == 0
    assert config.output.paths == 1_000_000
    assert config.output.quadrature_points == 1025
    assert config.contract.rate == 0.0


def test_component_model() -> None:
    model = {
        "diag": [
            {"kind": "kobol", "nu": 0.35, "c_plus": 1, "c_minus": 1, "lambda_minus": -15, "lambda_plus": 12},
            {"kind": "nig", "alpha": 2.0, "beta": 0.5, "delta": 0.4, "mu": 0.1},
        ]
    }
    config = parse_config(_document(model=model))
    assert [spec.kind for spec in config.model.diag] == [ExponentKind.KOBOL, ExponentKind.NIG]
    assert config.model.diag[1].mu == 0.1
    assert not any(any(row) for row in config.model.coupling_matrix)


@pytest.mark.parametrize(
    ("sections", "message"),
    [
        ({"model": {"diag": [{"kind": "kobol", "nu": "x"}]}}, "model.diag[0].nu: expected a number"),
        ({"model": {"diag": [{"kind": "levy"}]}}, "model.diag[0].kind"),
        ({"model": {"diag": [{"kind": "gaussian", "sigma": 0.2, "rho": 1}]}}, "model.diag[0].rho: unknown field"),
        ({"model": {"diag": [{"kind": "gaussian", "sigma": -0.2}]}}, "model.diag[0]"),
        ({"contract": {"spot": [110], "strike": 90, "maturity": 1.0}}, "contract.spot"),
        ({"contract": {"spot": [110, 10], "strike": 90, "maturity": 0}}, "contract"),
        ({"grid": {"target": 2}}, "grid.target"),
        ({"grid": {"auto": False}}, "grid.period: missing required field"),
        ({"grid": {"auto": False, "period": 6}}, "grid.log_radius: missing required field"),
        ({"grid": {"overrides": {"first": {"constant": 1, "order": 1}}}}, "grid.overrides.first"),
        ({"grid": {"overrides": {"2": {"constant": 1, "order": 1}}}}, "grid.overrides.2: no component 2"),
        ({"pricing": {"emm_policy": "lenient"}}, "pricing.emm_policy"),
        ({"pricing": {"damping": [-3.0]}}, "pricing.damping"),
        ({"output": {"paths": 1}}, "output.paths"),
        ({"output": {"seed": 1.5}}, "output.seed: expected an integer"),
    ],
)
def test_errors_name_the_field(sections: dict[str, Any], message: str) -> None:
    with pytest.raises(ConfigurationError, match=message.replace("[", r"\[").replace("]", r"\]")):
        parse_config(_document(**sections))


def test_explicit_grid() -> None:
    grid = {
        "auto": False,
        "period": 12,
        "log_radius": 9,
        "overrides": {"1": {"constant": 0.3, "order": 0.5}},
        "max_points": 5000,
    }
    config = parse_config(_document(grid=grid))
    assert not config.grid.auto
    assert config.grid.period == 12.0
    assert config.grid.log_radius == 9.0
    assert config.grid.overrides == {1: DecayOverride(0.3, 0.5)}
    assert config.grid.max_points == 5000

    square = parse_config(_document(grid={"auto": False, "period": 6, "square": 3})).grid
    assert square.square == 3
    assert square.log_radius == 0.0


def test_to_json_replaces_the_model(tmp_path: Path) -> None:
    config = parse_config(_document(output={"seed": 4}))
    path = tmp_path / "config.json"
    path.write_text(config.to_json())
    assert load_config(str(path)).output.seed == 4

    document = json.loads(config.to_json(config.model))
    assert set(document["model"]) == {"diag", "coupling", "coupling_matrix"}
    assert load_config(str(path)).contract == config.contract


def test_unreadable_files(tmp_path: Path) -> None:
    path = tmp_path / "broken.json"
    path.write_text("{\"model\": ")
    with pytest.raises(ConfigurationError, match="unable to parse"):
        load_config(str(path))
    with pytest.raises(ConfigurationError, match="unable to read"):
        load_config(str(tmp_path / "missing.json"))
