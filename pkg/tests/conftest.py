"""Fixtures shared across the suite: a scratch store and a service factory
wired with the standard 2-group, 4-user roster."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from preplearn.api import create_app
from preplearn.config import ServiceConfig
from preplearn.gateway import AnswerService, CompletionProviderConfig
from preplearn.models import User
from preplearn.store import Store

ROSTER = [
    User("u_teach", "teacher", frozenset({"g1", "g2"})),
    User("u_ada", "student", frozenset({"g1"})),
    User("u_bo", "student", frozenset({"g2"})),
    User("u_cy", "student", frozenset({"g1", "g2"})),
]
TOKENS = {
    "tok-teach": "u_teach",
    "tok-ada": "u_ada",
    "tok-bo": "u_bo",
    "tok-cy": "u_cy",
}


@pytest.fixture
def store(tmp_path):
    with Store(tmp_path / "data") as s:
        yield s


@pytest.fixture
def make_service(tmp_path):
    """Factory returning (client, answer_service, store) per configuration.

    Everything built here is torn down after the test; pass `completion_fn`
    or `sleep_fn` to stub the provider, `llm_enabled=False` for base mode.
    """
    created = []

    def build(
        llm_enabled: bool = True,
        completion_fn=None,
        sleep_fn=None,
        provider: CompletionProviderConfig | None = None,
        max_workers: int = 4,
    ):
        config = ServiceConfig(
            data_dir=str(tmp_path / f"data{len(created)}"),
            tokens=dict(TOKENS),
            users=list(ROSTER),
            llm_enabled=llm_enabled,
            provider=provider or CompletionProviderConfig(),
        )
        service_store = Store(config.data_dir)
        extra = {}
        if completion_fn is not None:
            extra["completion_fn"] = completion_fn
        if sleep_fn is not None:
            extra["sleep_fn"] = sleep_fn
        answers = AnswerService(
            service_store,
            config.provider,
            template=config.template,
            llm_enabled=llm_enabled,
            budget_tokens=config.budget_tokens,
            window_radius_s=config.window_radius_s,
            max_workers=max_workers,
            **extra,
        )
        app = create_app(config, store=service_store, answer_service=answers)
        client = TestClient(app)
        created.append((answers, service_store))
        return client, answers, service_store

    yield build
    for answers, service_store in created:
        answers.close()
        service_store.close()
