"""Prompt assets, one markdown file per call site."""

from __future__ import annotations

import importlib.resources
from functools import lru_cache


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    resource = importlib.resources.files(__package__).joinpath(f"{name}.md")
    return resource.read_text(encoding="utf-8")
