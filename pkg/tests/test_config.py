"""
RunConfig: defaults, file + override layering, validation and the echo file.
"""

import math

import pytest

from utils.config import RunConfig, parse_overrides
from utils.constants import DEFAULT_CELLS, NOISE_LEVELS
from utils.errors import ConfigError


def test_defaults():
    cfg = RunConfig.load()
    assert cfg.kind == "lse"
    assert cfg.steps is None and cfg.eta0 is None, "steps / eta0 default to the protocol values"
    assert cfg.cells == DEFAULT_CELLS
    assert cfg.lam is None and cfg.epsilon is None
    assert cfg.noise_levels == NOISE_LEVELS


def test_solver_defaults_fill_only_unset_values():
    cfg = RunConfig.load().with_solver_defaults(4000, 0.0005)
    assert cfg.steps == 4000 and cfg.eta0 == pytest.approx(0.0005)
    explicit = RunConfig.load(None, ["steps=30"]).with_solver_defaults(4000, 0.0005)
    assert explicit.steps == 30, "explicit steps must win over the protocol default"
    assert explicit.eta0 == pytest.approx(0.0005)


def test_unset_steps_are_not_echoed(tmp_path):
    path = RunConfig.load().write(str(tmp_path / "echo.ini"))
    text = open(path, encoding="utf-8").read()
    assert "steps" not in text and "eta0" not in text
    assert RunConfig.load(path).steps is None


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[problem]\nkind = rfda\nlam = 2.5\nr = inf\n\n[solver]\nsteps = 30\n")
    cfg = RunConfig.load(str(path), ["steps=40", "quadrature.rule=midpoint"])
    assert cfg.kind == "rfda"
    assert cfg.lam == 2.5
    assert math.isinf(cfg.r)
    assert cfg.steps == 40
    assert cfg.rule == "midpoint"


def test_typed_parsing():
    cfg = RunConfig.load(None, ["resolve_ties=yes", "noise_levels=0.1, 2", "gamma=none", "B=200"])
    assert cfg.resolve_ties is True
    assert cfg.noise_levels == (0.1, 2.0)
    assert cfg.gamma is None
    assert cfg.B == 200.0


@pytest.mark.parametrize("override, key", [
    ("unknown_knob=1", "unknown_knob"),
    ("solver.cells=3", "solver.cells"),
    ("steps=ten", "steps"),
    ("schedule=cosine", "schedule"),
    ("eta0=-1", "eta0"),
    ("corrupt_fraction=2", "corrupt_fraction"),
])
def test_bad_values_name_the_key(override, key):
    with pytest.raises(ConfigError) as info:
        RunConfig.load(None, [override])
    assert info.value.key == key


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[solver]\nstepz = 3\n")
    with pytest.raises(ConfigError) as info:
        RunConfig.load(str(path))
    assert "solver.stepz" in str(info.value)


def test_unknown_section_and_missing_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[gui]\ntheme = dark\n")
    with pytest.raises(ConfigError):
        RunConfig.load(str(path))
    with pytest.raises(ConfigError):
        RunConfig.load(str(tmp_path / "missing.ini"))


def test_override_needs_equals():
    with pytest.raises(ConfigError):
        RunConfig.load(None, ["steps"])


def test_echo_reloads_to_same_config(tmp_path):
    cfg = RunConfig.load(None, ["kind=rfda", "lam=0.1", "r=inf", "eta0=0.05",
                                "noise_levels=0.1,0.5", "saturated=true"])
    path = cfg.write(str(tmp_path / "echo" / "effective_config.ini"))
    assert RunConfig.load(path) == cfg


def test_with_overrides_revalidates():
    cfg = RunConfig()
    assert cfg.with_overrides(steps=7).steps == 7
    with pytest.raises(ConfigError):
        cfg.with_overrides(workers=0)


def test_parse_overrides_drops_blanks():
    assert parse_overrides(["a=1", "", "  ", "b=2"]) == ["a=1", "b=2"]
