"""A local registry of SDL files: constraint resolution and upgrade advice."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .diff import DiffConfig
from .pipeline import calculate
from .provenance import Policy
from .sdl import SdlError, load_sdl
from .surface import OpenWorld, WorldMode
from .versions import ImpactLevel, SemVer, VersionError, VersionReq, declared_bump, parse_version

__all__ = ["RegistryError", "RegistryIndex", "UpgradeAdvice", "load_index", "resolve", "advise"]

_FILENAME = re.compile(r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)-(?P<version>[0-9]+\.[0-9]+\.[0-9]+)\.sdl\Z")


class RegistryError(LookupError):
    pass


@dataclass(frozen=True)
class RegistryIndex:
    """``components`` maps a name to its ``(version, path)`` list, ascending."""

    components: dict = field(default_factory=dict)
    problems: tuple[str, ...] = ()

    def versions(self, name: str) -> list[SemVer]:
        return [v for v, _ in self._entries(name)]

    def path(self, name: str, version: SemVer) -> Path:
        for v, p in self._entries(name):
            if v == version:
                return p
        raise RegistryError(f"{name} {version} is not in the registry")

    def _entries(self, name: str) -> list[tuple[SemVer, Path]]:
        try:
            return self.components[name]
        except KeyError:
            raise RegistryError(f"unknown component {name!r}") from None


def load_index(root_path: Union[str, Path]) -> RegistryIndex:
    """Index ``<name>-<major>.<minor>.<patch>.sdl`` files under ``root_path``.

    Files with an unrecognised name, unparsable content, or content whose
    header disagrees with the file name are listed in ``problems`` and skipped.
    Two files for the same component version are an error.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise RegistryError(f"registry root {root} is not a readable directory")
    entries: dict[str, dict[SemVer, Path]] = {}
    problems: list[str] = []
    for path in sorted(root.rglob("*.sdl")):
        m = _FILENAME.match(path.name)
        if not m:
            problems.append(f"{path}: file name is not <component>-<major>.<minor>.<patch>.sdl")
            continue
        name = m.group("name")
        try:
            version = parse_version(m.group("version"))
            model = load_sdl(path)
        except (SdlError, VersionError, OSError, UnicodeDecodeError) as exc:
            problems.append(f"{path}: {exc}")
            continue
        if (model.name, model.version) != (name, version):
            problems.append(f"{path}: declares {model.name} {model.version}, "
                            f"file name says {name} {version}")
            continue
        versions = entries.setdefault(name, {})
        if version in versions:
            raise RegistryError(f"duplicate version {name} {version}: {versions[version]} and {path}")
        versions[version] = path
    components = {name: sorted(vs.items()) for name, vs in sorted(entries.items())}
    return RegistryIndex(components, tuple(problems))


def resolve(index: RegistryIndex, name: str, req: VersionReq) -> SemVer:
    """The greatest indexed version of ``name`` matching ``req``."""
    candidates = [v for v in index.versions(name) if req.matches(v)]
    if not candidates:
        raise RegistryError(f"no version of {name} matches {req}")
    return max(candidates)


@dataclass(frozen=True)
class UpgradeAdvice:
    from_version: SemVer
    to_version: SemVer
    verdict: ImpactLevel
    declared_bump: ImpactLevel

    @property
    def agreement(self) -> bool:
        """Whether the release's version jump covers the computed impact."""
        return self.verdict <= self.declared_bump


def advise(index: RegistryIndex, name: str, current: SemVer, candidate_req: VersionReq,
           policy: Optional[Policy] = None, mode: Optional[WorldMode] = None,
           config: Optional[DiffConfig] = None) -> list[UpgradeAdvice]:
    """Pre-classify every matching release above ``current``, ascending."""
    policy = policy or Policy.bundled()
    mode = mode or OpenWorld()
    base = load_sdl(index.path(name, current))
    advice = []
    for v in index.versions(name):
        if v <= current or not candidate_req.matches(v):
            continue
        calc = calculate(base, load_sdl(index.path(name, v)), policy, mode, config)
        advice.append(UpgradeAdvice(current, v, calc.level, declared_bump(current, v)))
    return advice
