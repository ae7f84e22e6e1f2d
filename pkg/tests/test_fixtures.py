import json

import pytest

from src.fixtures import FixtureLibrary
from src.schemas import Classification


def test_default_library(library):
    assert set(library.equation_names()) == {"trivial", "nil", "dkp", "cubic"}
    assert set(library.map_names()) == {"identity", "x_shift", "mobius", "mixing"}
    assert library.expected_classification("nil") is Classification.HYPER_CR_EINSTEIN_WEYL


def test_maps_are_cached(library, plan):
    assert library.point_map("mobius", plan) is library.point_map("mobius", plan)


def test_unknown_name(library):
    with pytest.raises(KeyError):
        library.equation("nope")


def test_missing_file_gives_empty_library(tmp_path):
    empty = FixtureLibrary(tmp_path / "absent.json")
    assert empty.equation_names() == []
    assert empty.get_summary()["maps"] == {}


def test_custom_file(tmp_path):
    path = tmp_path / "fixtures.json"
    path.write_text(
        json.dumps(
            {"equations": {"linear": {"rhs": "x0", "expected_classification": "NotWunschmann"}}}
        )
    )
    custom = FixtureLibrary(path)
    assert str(custom.equation("linear").rhs) == "x0"
    assert custom.get_summary()["equations"] == {"linear": "NotWunschmann"}
    assert custom.map_names() == []
