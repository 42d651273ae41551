import os
import pathlib

import pytest
from typer.testing import CliRunner

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Settings must not leak in from the developer's shell."""
    for name in list(os.environ):
        if name.startswith("HARMONIC_PRODUCT_"):
            monkeypatch.delenv(name)


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()
