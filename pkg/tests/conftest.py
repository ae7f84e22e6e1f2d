"""Shared fixtures: a fixed sampling plan, the reference library and seeded random expressions."""
import numpy as np
import pytest
import sympy as sp

from src.expr_core import JET_SYMBOLS
from src.fixtures import FixtureLibrary
from src.schemas import SamplePlan

SEED = 0xDA7A


def random_expression(rng: np.random.Generator, depth: int = 2, radicals: bool = True) -> sp.Expr:
    """Integer-coefficient expression tree; radicals appear as sqrt(1 + a^2) * b."""
    if depth == 0:
        choice = int(rng.integers(5))
        if choice == 4:
            return sp.Integer(int(rng.integers(-3, 4)))
        return JET_SYMBOLS[choice]
    a = random_expression(rng, depth - 1, radicals)
    b = random_expression(rng, depth - 1, radicals)
    kind = int(rng.integers(5 if radicals else 4))
    if kind == 0:
        return a + b
    if kind == 1:
        return a - b
    if kind == 2:
        return a * b
    if kind == 3:
        return a**2 + b
    return sp.sqrt(1 + a**2) * b


@pytest.fixture
def plan() -> SamplePlan:
    return SamplePlan(count=12, seed=SEED, tolerance=1e-9, box=(-2.0, 2.0), margin=0.05)


@pytest.fixture(scope="session")
def random_expressions():
    rng = np.random.default_rng(SEED)
    return [random_expression(rng) for _ in range(25)]


@pytest.fixture(scope="session")
def random_polynomials():
    rng = np.random.default_rng(SEED + 1)
    return [random_expression(rng, radicals=False) for _ in range(16)]


@pytest.fixture(scope="session")
def library() -> FixtureLibrary:
    return FixtureLibrary()


@pytest.fixture(scope="session")
def cubic(library):
    return library.equation("cubic")


@pytest.fixture(scope="session")
def nil(library):
    return library.equation("nil")


@pytest.fixture(scope="session")
def trivial(library):
    return library.equation("trivial")


@pytest.fixture(scope="session")
def dkp(library):
    return library.equation("dkp")


@pytest.fixture(scope="session")
def fixture_maps(library):
    session_plan = SamplePlan(count=12, seed=SEED, tolerance=1e-9)
    return {name: library.point_map(name, session_plan) for name in library.map_names()}
