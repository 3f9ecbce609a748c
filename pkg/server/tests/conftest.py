from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from distserver.app import create_app
from distserver.backend import ModelBackend, ServerConfig
from distserver.tinymodel import build_tiny_model


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("tiny-model")
    return build_tiny_model(str(path), seed=0, context=512)


@pytest.fixture(scope="session")
def backend(model_dir) -> ModelBackend:
    return ModelBackend(ServerConfig(model_path=model_dir))


@pytest.fixture(scope="session")
def client(backend) -> TestClient:
    return TestClient(create_app(backend))
