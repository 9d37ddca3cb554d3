"""Which declarations count as API surface under a given world assumption."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import ComponentModel, UsageProfile

__all__ = ["OpenWorld", "DeclaredExports", "ClosedWorld", "WorldMode", "surface_names", "surface_facts"]


@dataclass(frozen=True)
class OpenWorld:
    """Every public declaration is reachable by some client."""

    tag = "open"


@dataclass(frozen=True)
class DeclaredExports:
    tag = "exports"


@dataclass(frozen=True)
class ClosedWorld:
    """Only exported declarations that known clients actually use."""

    usage: UsageProfile
    tag = "closed"


WorldMode = Union[OpenWorld, DeclaredExports, ClosedWorld]


def _names(model: ComponentModel, mode: WorldMode) -> set[str]:
    if isinstance(mode, OpenWorld):
        return model.public_names()
    exported = model.exported_names()
    if isinstance(mode, ClosedWorld):
        return exported & mode.usage.used
    return exported


def surface_names(old: ComponentModel, new: ComponentModel, mode: WorldMode) -> list[str]:
    # Union over both versions, so a name removed in ``new`` stays reportable.
    return sorted(_names(old, mode) | _names(new, mode))


def surface_facts(old: ComponentModel, new: ComponentModel, mode: WorldMode) -> list[tuple[str, tuple[str]]]:
    """``inSurface(name)`` facts for the union of both versions' surfaces."""
    return [("inSurface", (name,)) for name in surface_names(old, new, mode)]
