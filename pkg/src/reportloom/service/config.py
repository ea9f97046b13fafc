"""Service configuration from the environment.

Everything is overridable with REPORTLOOM_* variables so deployments and
tests never edit code to change wiring.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from ..agents.backends import CountingBackend, RemoteBackend
from ..agents.mock import RuleBackend

BACKEND_MOCK = "mock"
BACKEND_REMOTE = "remote"


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path = Path("reportloom-data")
    backend: str = BACKEND_MOCK
    host: str = "127.0.0.1"
    port: int = 8080

    @classmethod
    def from_env(cls, env=None) -> "ServiceConfig":
        env = os.environ if env is None else env
        return cls(
            data_dir=Path(env.get("REPORTLOOM_DATA_DIR", "reportloom-data")),
            backend=env.get("REPORTLOOM_BACKEND", BACKEND_MOCK),
            host=env.get("REPORTLOOM_HOST", "127.0.0.1"),
            port=int(env.get("REPORTLOOM_PORT", "8080")),
        )


def build_backend(config: ServiceConfig) -> CountingBackend:
    """Counting wrapper over the configured backend; the counter is what
    lets tests assert no completion happens outside explicit triggers."""
    if config.backend == BACKEND_MOCK:
        inner = RuleBackend()
    elif config.backend == BACKEND_REMOTE:
        inner = RemoteBackend.from_env()
    else:
        raise ValueError(f"unknown backend {config.backend!r}")
    return CountingBackend(inner)
