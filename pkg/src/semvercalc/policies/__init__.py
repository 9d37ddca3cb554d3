"""Bundled versioning policies."""

from __future__ import annotations

from importlib import resources

BUNDLED = ("pessimistic", "optimistic")


def policy_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled policy named {name!r}")
    return resources.files(__name__).joinpath(f"{name}.pol").read_text(encoding="utf-8")
