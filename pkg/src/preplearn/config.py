"""Service configuration: listen address, token roster, LLM settings,
window radius, token budget, and template texts, loaded from a JSON file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .gateway import CompletionProviderConfig
from .models import DEFAULT_MAX_QUESTION_CHARS, User
from .prompts import DEFAULT_BUDGET_TOKENS, PromptTemplate
from .subtitles import DEFAULT_WINDOW_RADIUS_S


@dataclass
class ServiceConfig:
    data_dir: str = "data"
    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    tokens: dict[str, str] = field(default_factory=dict)  # bearer token -> user_id
    users: list[User] = field(default_factory=list)
    llm_enabled: bool = True
    provider: CompletionProviderConfig = field(default_factory=CompletionProviderConfig)
    template: PromptTemplate = field(default_factory=PromptTemplate)
    window_radius_s: float = DEFAULT_WINDOW_RADIUS_S
    budget_tokens: int = DEFAULT_BUDGET_TOKENS
    max_question_chars: int = DEFAULT_MAX_QUESTION_CHARS
    caption_server_url: Optional[str] = None
    static_dir: Optional[str] = None


def load_config(path: str | Path) -> ServiceConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))

    listen = raw.get("listen", {})
    llm = raw.get("llm", {})
    template_raw = raw.get("template", {})

    provider = CompletionProviderConfig(
        provider_kind=llm.get("provider_kind", "deterministic_mock"),
        endpoint_url=llm.get("endpoint_url"),
        api_key_ref=llm.get("api_key_env"),
        model_id=llm.get("model_id", CompletionProviderConfig.model_id),
        timeout_s=float(llm.get("timeout_s", CompletionProviderConfig.timeout_s)),
        max_attempts=int(llm.get("max_attempts", CompletionProviderConfig.max_attempts)),
        backoff_base_ms=float(llm.get("backoff_base_ms", CompletionProviderConfig.backoff_base_ms)),
    )
    template = PromptTemplate(
        system_preamble=template_raw.get(
            "system_preamble", PromptTemplate.system_preamble
        ),
        no_subtitle_variant=template_raw.get(
            "no_subtitle_variant", PromptTemplate.no_subtitle_variant
        ),
        language_tag=template_raw.get("language_tag", PromptTemplate.language_tag),
    )
    users = [
        User(
            user_id=u["user_id"],
            role=u["role"],
            group_ids=frozenset(u.get("group_ids") or ()),
        )
        for u in raw.get("users", [])
    ]
    return ServiceConfig(
        data_dir=raw.get("data_dir", "data"),
        listen_host=listen.get("host", "127.0.0.1"),
        listen_port=int(listen.get("port", 8000)),
        tokens=dict(raw.get("tokens", {})),
        users=users,
        llm_enabled=bool(llm.get("enabled", True)),
        provider=provider,
        template=template,
        window_radius_s=float(raw.get("window_radius_s", DEFAULT_WINDOW_RADIUS_S)),
        budget_tokens=int(raw.get("budget_tokens", DEFAULT_BUDGET_TOKENS)),
        max_question_chars=int(
            raw.get("max_question_chars", DEFAULT_MAX_QUESTION_CHARS)
        ),
        caption_server_url=raw.get("caption_server_url"),
        static_dir=raw.get("static_dir"),
    )


def example_config() -> dict:
    """A complete config document with the mock provider; safe to run offline."""
    return {
        "data_dir": "data",
        "listen": {"host": "127.0.0.1", "port": 8000},
        "tokens": {
            "token-teacher": "u_teacher",
            "token-alice": "u_alice",
            "token-bob": "u_bob",
        },
        "users": [
            {"user_id": "u_teacher", "role": "teacher", "group_ids": ["g1", "g2"]},
            {"user_id": "u_alice", "role": "student", "group_ids": ["g1"]},
            {"user_id": "u_bob", "role": "student", "group_ids": ["g2"]},
        ],
        "llm": {
            "enabled": True,
            "provider_kind": "deterministic_mock",
            "endpoint_url": None,
            "api_key_env": None,
            "model_id": "gpt-3.5-turbo",
            "timeout_s": 30.0,
            "max_attempts": 3,
            "backoff_base_ms": 500.0,
        },
        "window_radius_s": 30.0,
        "budget_tokens": 3000,
        "max_question_chars": 2000,
        "template": {
            "system_preamble": PromptTemplate.system_preamble,
            "no_subtitle_variant": PromptTemplate.no_subtitle_variant,
            "language_tag": "en",
        },
    }
