import pytest

from satfolio.util.config import dump_config, load_config, merge_overrides, parse_config, subsection
from satfolio.util.misc import round_ms, stable_hash64, stopwatch
from satfolio.util.type_casting import cast


@pytest.mark.parametrize(
    "value, expected",
    [
        ("42", 42),
        ("-1.5", -1.5),
        ("1e-3", 0.001),
        ("True", True),
        ("false", False),
        ("kissat", "kissat"),
        ("0.2, 0.8", [0.2, 0.8]),
        ("a,b,", ["a", "b"]),
    ],
)
def test_cast(value, expected):
    assert cast(value) == expected


def test_cast_containers():
    assert cast({"a": "1", "b": ["2", "x"]}) == {"a": 1, "b": [2, "x"]}
    first = cast("1,2")
    first.append(3)
    assert cast("1,2") == [1, 2]


def test_parse_config():
    config = parse_config(
        """
        # comment
        train.learning_rate = 0.01   # trailing comment
        train.homogeneous = true

        label.solvers = kissat, cadical
        """
    )
    assert config == {
        "train.learning_rate": 0.01,
        "train.homogeneous": True,
        "label.solvers": ["kissat", "cadical"],
    }
    with pytest.raises(ValueError):
        parse_config("no separator here")
    with pytest.raises(ValueError):
        parse_config("= 3")


def test_subsection_and_overrides():
    config = {"train.seed": 1, "train.hidden": 8, "generate.seed": 2}
    section = subsection(config, "train")
    assert section == {"seed": 1, "hidden": 8}
    assert merge_overrides(section, seed=5, hidden=None) == {"seed": 5, "hidden": 8}


def test_dump_and_load(tmp_path):
    path = tmp_path / "run.cfg"
    config = {"cutoff": 500.0, "solvers": ["a", "b"], "homogeneous": False, "n_folds": 5}
    dump_config(config, path, header="run")
    assert path.read_text().startswith("# run\n")
    assert load_config(path) == config
    assert load_config(None) == {}


def test_stable_hash():
    assert stable_hash64(("x", 1, [2, 3])) == stable_hash64(("x", 1, (2, 3)))
    assert stable_hash64({"b": 1, "a": 2}) == stable_hash64({"a": 2, "b": 1})
    assert stable_hash64("a") != stable_hash64("b")
    assert 0 <= stable_hash64("a") < 2**64


def test_timing_helpers():
    assert round_ms(1.23456) == 1.235
    with stopwatch() as elapsed:
        pass
    assert elapsed["seconds"] >= 0
