"""Scenario loading, validation and the built-in five-node examples."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Union

from pydantic import ValidationError

from bivirus_hoi.domain.model_core import BivirusModel, validate_model
from bivirus_hoi.exceptions import ScenarioParseError, ScenarioValidationError, UnknownScenarioError
from bivirus_hoi.schemas.scenario import Hyperedge, ScenarioConfig, SimulationSettings, VirusConfig
from bivirus_hoi.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class LoadedScenario:
    """A validated scenario with its dense model"""
    config: ScenarioConfig
    model: BivirusModel

    @property
    def simulation(self) -> SimulationSettings:
        return self.config.simulation

    @property
    def name(self) -> str:
        return self.config.name or "scenario"


def _format_location(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _validation_issues(exc: ValidationError) -> List[str]:
    issues = []
    for error in exc.errors():
        message = error["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        where = _format_location(error["loc"])
        for line in message.splitlines():
            issues.append(f"{where}: {line}" if where else line)
    return issues


def parse_config(text: str) -> ScenarioConfig:
    """Parse JSON text into a ScenarioConfig, without model assumptions"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from exc
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ScenarioValidationError(_validation_issues(exc)) from exc


def load_scenario(config: ScenarioConfig) -> LoadedScenario:
    """Build the model and require every model assumption to hold"""
    model = config.to_model()
    violations = validate_model(model)
    if violations:
        raise ScenarioValidationError([str(v) for v in violations])
    logger.info(f"Loaded scenario {config.name or '<unnamed>'}: n={config.n}, "
                f"hyperedges={config.hyperedge_count(1)}/{config.hyperedge_count(2)}")
    return LoadedScenario(config=config, model=model)


def load_config(source: Union[str, Path]) -> LoadedScenario:
    """Load a scenario from a path or from JSON text (a string starting with ``{``)"""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioParseError(f"cannot read {path}: {exc.strerror}", 0, 0) from exc
    return load_scenario(parse_config(text))


def serialize(config: ScenarioConfig) -> str:
    return config.model_dump_json(indent=2)


def _cycle_with_self_loops(n: int) -> List[List[float]]:
    """a[i][i] = a[i][i-1] = 1"""
    return [[1.0 if j in (i, (i - 1) % n) else 0.0 for j in range(n)] for i in range(n)]


def _hyperedges(triples) -> List[Hyperedge]:
    return [Hyperedge(head=i, pair=(j, l), weight=1.0) for i, j, l in triples]


_VIRUS1_HYPEREDGES = ((1, 2, 3), (2, 3, 1), (3, 2, 1), (1, 4, 5), (4, 5, 1), (5, 4, 1))
_VIRUS2_HYPEREDGES = ((1, 2, 4), (2, 4, 1), (4, 2, 1), (1, 3, 5), (3, 5, 1), (5, 3, 1))


def _five_node_example(name: str, description: str, beta_pair: float, beta_hoi: tuple) -> ScenarioConfig:
    n = 5
    a1 = _cycle_with_self_loops(n)
    a2 = [list(row) for row in zip(*a1)]
    return ScenarioConfig(
        name=name,
        description=description,
        n=n,
        viruses=[
            VirusConfig(delta=[1.0] * n, beta_pair=beta_pair, beta_hoi=beta_hoi[0], a=a1,
                        hyperedges=_hyperedges(_VIRUS1_HYPEREDGES)),
            VirusConfig(delta=[1.0] * n, beta_pair=beta_pair, beta_hoi=beta_hoi[1], a=a2,
                        hyperedges=_hyperedges(_VIRUS2_HYPEREDGES)),
        ],
    )


def _example1() -> ScenarioConfig:
    return _five_node_example(
        "example1",
        "Five-node cycles with self-loops (virus 2 on the reversed cycle), unit healing, "
        "pairwise rate 0.2 and higher-order rate 5 for both viruses: DFE and both boundary "
        "equilibria are locally stable.",
        beta_pair=0.2,
        beta_hoi=(5.0, 5.0),
    )


def _example2() -> ScenarioConfig:
    return _five_node_example(
        "example2",
        "Same network as example1 with pairwise rate 2 for both viruses and higher-order "
        "rates 3 (virus 1) and 2.4 (virus 2): the DFE is unstable and both boundary "
        "equilibria are locally stable.",
        beta_pair=2.0,
        beta_hoi=(3.0, 2.4),
    )


BUILTINS: Dict[str, Callable[[], ScenarioConfig]] = {
    "example1": _example1,
    "example2": _example2,
}


def builtin(name: str) -> ScenarioConfig:
    """Built-in scenario by name.

    Rates follow the reading in which example1 has a stable DFE and example2
    an unstable one: pairwise first, higher-order second.
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise UnknownScenarioError(name, sorted(BUILTINS)) from None
    return factory()
