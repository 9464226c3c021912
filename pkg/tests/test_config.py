import pytest

from prune_lab.config import config_hash, format_value, load_config, parse_config, parse_scalar, parse_value
from prune_lab.errors import ConfigError
from prune_lab.runner import validate


def test_scalar_types():
    assert parse_scalar("3") == 3 and isinstance(parse_scalar("3"), int)
    assert parse_scalar("2.5") == 2.5
    assert parse_scalar("5/3") == pytest.approx(5 / 3, rel=1e-15)
    assert parse_scalar("1e-3") == 1e-3
    assert parse_scalar("TRUE") is True and parse_scalar("false") is False
    assert parse_scalar('"12"') == "12"
    assert parse_scalar("cross_entropy") == "cross_entropy"
    with pytest.raises(ValueError):
        parse_scalar("1/0")


def test_lists():
    assert parse_value("[0.5, 1, 5]") == [0.5, 1, 5]
    assert parse_value("[]") == []
    assert parse_value("[MP, HP]") == ["MP", "HP"]
    for bad in ("[1, 2", "[[1], 2]", ""):
        with pytest.raises(ValueError):
            parse_value(bad)


def test_parse_config_comments_and_reserved():
    cfg = parse_config("""
# header
experiment = aux-prune-curve   # trailing
seed = 7
kappa = 5/3
label = "a # b"
output_dir = out
""")
    assert cfg.experiment == "aux-prune-curve" and cfg.seed == 7 and cfg.output_dir == "out"
    assert cfg.params == {"kappa": pytest.approx(5 / 3), "label": "a # b"}
    assert cfg.lines["kappa"] == 5


def test_parse_errors_collected_with_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("seed = -1\nnot a pair\nx = 1\nx = 2\n9bad = 3\ny = [1, 2\n", "cfg.txt")
    probs = info.value.problems
    text = "\n".join(probs)
    assert "cfg.txt:2" in text and "cfg.txt:4: duplicate key 'x'" in text
    assert "cfg.txt:5" in text and "cfg.txt:6" in text
    assert "missing required key 'experiment'" in text
    assert "seed must be a non-negative integer" in text
    assert len(probs) == 6


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_validate_derived_and_unknown_keys():
    check = validate(parse_config("experiment = aux-prune-curve\nlambdas = [1, 5]\n"))
    assert check.ok
    assert check.derived["n"] == 600 and check.derived["head_size"] == 100
    assert len(check.cells) == 2
    check = validate(parse_config("experiment = aux-prune-curve\nsigma = -0.1\nbogus = 3\n", "c"))
    assert not check.ok
    text = "\n".join(check.problems)
    assert "c:3: unknown key 'bogus'" in text
    assert "c:2: sigma must be ≥ 0" in text


def test_validate_type_error_and_unknown_experiment():
    check = validate(parse_config("experiment = ppls-bounds\nn = abc\n"))
    assert not check.ok and "'n'" in check.problems[0]
    check = validate(parse_config("experiment = nothing\n"))
    assert "unknown experiment" in check.problems[0]


def test_config_hash_canonical():
    a = config_hash("e", {"b": 1.0, "a": [1, 2]}, 0)
    b = config_hash("e", {"a": [1, 2], "b": 1.0}, 0)
    assert a == b and len(a) == 16
    assert a != config_hash("e", {"a": [1, 2], "b": 1.0}, 1)
    assert format_value(0.1) == "0.1" and format_value(True) == "true"
