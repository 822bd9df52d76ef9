import dataclasses
from importlib import resources

import pytest

from cyberdef_sim.scenario import ScenarioConfig, load_scenario


def shipped(name: str) -> ScenarioConfig:
    with resources.as_file(resources.files("cyberdef_sim") / "data" / "scenarios" / f"{name}.json") as p:
        return load_scenario(p)


@pytest.fixture
def minimal():
    return shipped("minimal")


@pytest.fixture
def default_scenario():
    return shipped("default")


@pytest.fixture
def no_red():
    return shipped("no_red")


def with_(scenario, **changes):
    return dataclasses.replace(scenario, **changes)
