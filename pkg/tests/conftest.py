import pytest

from gridweaver.blueprint import parse_blueprint
from gridweaver.fixtures import fixture_text
from gridweaver.grid_io import parse_grid
from gridweaver.pipeline import run_pipeline

FIXTURE_GRIDS = ("grid_4bus", "grid_12bus", "grid_cigre_mv")


@pytest.fixture(scope="session")
def default_blueprint_text():
    return fixture_text("blueprint_default")


@pytest.fixture(scope="session")
def default_blueprint(default_blueprint_text):
    return parse_blueprint(default_blueprint_text)


@pytest.fixture(scope="session")
def cigre_grid():
    return parse_grid(fixture_text("grid_cigre_mv"))


@pytest.fixture(scope="session")
def grid_4bus():
    return parse_grid(fixture_text("grid_4bus"))


@pytest.fixture(scope="session")
def models(default_blueprint_text):
    """Fully generated models for all bundled grids (session-cached)."""
    built = {}
    for name in FIXTURE_GRIDS:
        model, report = run_pipeline(fixture_text(name), default_blueprint_text)
        built[name] = (model, report)
    return built


@pytest.fixture(scope="session")
def cigre_model(models):
    return models["grid_cigre_mv"][0]


@pytest.fixture(scope="session")
def model_4bus(models):
    return models["grid_4bus"][0]


@pytest.fixture(scope="session")
def model_12bus(models):
    return models["grid_12bus"][0]
