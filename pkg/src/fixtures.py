"""JSON-backed library of reference equations and point transformations."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.jet_calculus import Equation, PointMap
from src.parser import parse_equation, parse_transformation
from src.schemas import Classification, SamplePlan

logger = logging.getLogger(__name__)

DEFAULT_FIXTURE_FILE = Path(__file__).resolve().parent.parent / "data" / "fixtures.json"


class FixtureLibrary:
    """Reference equations (with expected classifications) and maps with inverses."""

    def __init__(self, fixture_file: Optional[Path] = None):
        """Initialize the library from the specified file path."""
        self.fixture_file = Path(fixture_file or DEFAULT_FIXTURE_FILE)
        self.fixtures = self.load()
        self._maps: Dict[str, PointMap] = {}

    def load(self) -> Dict[str, Any]:
        """Load fixtures from the JSON file."""
        try:
            with open(self.fixture_file, "r") as f:
                data = json.load(f)
        except (json.JSONDecodeError, FileNotFoundError) as exc:
            logger.warning("⚠️ Could not load fixtures from %s: %s", self.fixture_file, exc)
            return {"equations": {}, "maps": {}}
        data.setdefault("equations", {})
        data.setdefault("maps", {})
        return data

    def equation_names(self) -> List[str]:
        return list(self.fixtures["equations"])

    def map_names(self) -> List[str]:
        return list(self.fixtures["maps"])

    def equation(self, name: str) -> Equation:
        entry = self._entry("equations", name)
        return parse_equation(entry["rhs"])

    def expected_classification(self, name: str) -> Classification:
        return Classification(self._entry("equations", name)["expected_classification"])

    def point_map(self, name: str, plan: Optional[SamplePlan] = None) -> PointMap:
        """Parsed and validated map; validation runs once per name."""
        if name not in self._maps:
            entry = self._entry("maps", name)
            self._maps[name] = parse_transformation(
                entry["t"], entry["x"], entry["inverse_t"], entry["inverse_x"], plan=plan, name=name
            )
        return self._maps[name]

    def point_maps(self, plan: Optional[SamplePlan] = None) -> List[PointMap]:
        return [self.point_map(name, plan) for name in self.map_names()]

    def _entry(self, section: str, name: str) -> Dict[str, Any]:
        try:
            return self.fixtures[section][name]
        except KeyError:
            known = ", ".join(self.fixtures[section]) or "none"
            raise KeyError(f"no {section[:-1]} fixture {name!r}; known: {known}") from None

    def get_summary(self) -> Dict[str, Any]:
        """Summary of the available fixtures."""
        return {
            "fixture_file": str(self.fixture_file),
            "equations": {
                name: entry.get("expected_classification")
                for name, entry in self.fixtures["equations"].items()
            },
            "maps": {name: entry.get("kind", "point") for name, entry in self.fixtures["maps"].items()},
        }
