"""Version numbers, flexible requirements, impact levels and the bump calculus."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Union

__all__ = [
    "VersionError",
    "SemVer",
    "ImpactLevel",
    "Exact",
    "WildcardPatch",
    "WildcardMinor",
    "Range",
    "VersionReq",
    "parse_version",
    "parse_req",
    "matches",
    "bump",
    "join_levels",
    "declared_bump",
]

_SEGMENT = re.compile(r"[0-9]+\Z")


class VersionError(ValueError):
    """Raised for malformed version or requirement text."""


@dataclass(frozen=True, order=True)
class SemVer:
    major: int
    minor: int
    patch: int

    def __post_init__(self) -> None:
        for part in (self.major, self.minor, self.patch):
            if not isinstance(part, int) or isinstance(part, bool) or part < 0:
                raise VersionError(f"version components must be non-negative integers: {part!r}")

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"

    @classmethod
    def parse(cls, text: str) -> SemVer:
        return parse_version(text)


class ImpactLevel(IntEnum):
    """Compatibility verdict lattice, ordered NONE < PATCH < MINOR < MAJOR."""

    NONE = 0
    PATCH = 1
    MINOR = 2
    MAJOR = 3

    def __str__(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> ImpactLevel:
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise VersionError(f"unknown impact level {text!r}") from None

    def join(self, other: ImpactLevel) -> ImpactLevel:
        return max(self, other)


@dataclass(frozen=True)
class Exact:
    version: SemVer

    def matches(self, v: SemVer) -> bool:
        return v == self.version

    def __str__(self) -> str:
        return str(self.version)


@dataclass(frozen=True)
class WildcardPatch:
    """``x.y.*``: any patch release of one minor line."""

    major: int
    minor: int

    def matches(self, v: SemVer) -> bool:
        return v.major == self.major and v.minor == self.minor

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.*"


@dataclass(frozen=True)
class WildcardMinor:
    major: int

    def matches(self, v: SemVer) -> bool:
        return v.major == self.major

    def __str__(self) -> str:
        return f"{self.major}.*"


@dataclass(frozen=True)
class Range:
    """Half-open interval ``[lower, upper)``."""

    lower: SemVer
    upper: SemVer

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise VersionError(f"empty range: {self.lower} is not below {self.upper}")

    def matches(self, v: SemVer) -> bool:
        return self.lower <= v < self.upper

    def __str__(self) -> str:
        return f">={self.lower} <{self.upper}"


VersionReq = Union[Exact, WildcardPatch, WildcardMinor, Range]


def _parse_int(segment: str, text: str) -> int:
    if not _SEGMENT.match(segment):
        raise VersionError(f"malformed version {text!r}: bad segment {segment!r}")
    return int(segment)


def parse_version(text: str) -> SemVer:
    """Parse ``major.minor.patch``; signs, tags and missing segments are rejected."""
    parts = text.split(".")
    if len(parts) != 3:
        missing = ("major", "minor", "patch")[len(parts)] if len(parts) < 3 else None
        if missing:
            raise VersionError(f"malformed version {text!r}: missing {missing} segment")
        raise VersionError(f"malformed version {text!r}: unexpected segment {parts[3]!r}")
    major, minor, patch = (_parse_int(p, text) for p in parts)
    return SemVer(major, minor, patch)


def parse_req(text: str) -> VersionReq:
    """Parse one of ``1.2.3``, ``1.2.*``, ``1.*`` or ``>=1.0.0 <2.0.0``."""
    stripped = text.strip()
    bounds = stripped.split()
    if len(bounds) == 2:
        low, high = bounds
        if not (low.startswith(">=") and high.startswith("<") and not high.startswith("<=")):
            raise VersionError(f"malformed range {text!r}: expected '>=X.Y.Z <X.Y.Z'")
        return Range(parse_version(low[2:]), parse_version(high[1:]))
    if len(bounds) != 1:
        raise VersionError(f"malformed requirement {text!r}")
    parts = stripped.split(".")
    if parts[-1] == "*":
        if len(parts) == 2:
            return WildcardMinor(_parse_int(parts[0], text))
        if len(parts) == 3:
            return WildcardPatch(_parse_int(parts[0], text), _parse_int(parts[1], text))
        raise VersionError(f"malformed wildcard {text!r}")
    return Exact(parse_version(stripped))


def matches(req: VersionReq, v: SemVer) -> bool:
    return req.matches(v)


def bump(old: SemVer, level: ImpactLevel) -> SemVer:
    """Smallest version above ``old`` that is compliant with ``level``.

    ``ImpactLevel.NONE`` returns ``old`` itself: no release is needed.
    """
    if level is ImpactLevel.MAJOR:
        return SemVer(old.major + 1, 0, 0)
    if level is ImpactLevel.MINOR:
        return SemVer(old.major, old.minor + 1, 0)
    if level is ImpactLevel.PATCH:
        return SemVer(old.major, old.minor, old.patch + 1)
    return old


def join_levels(levels: Iterable[ImpactLevel]) -> ImpactLevel:
    return max(levels, default=ImpactLevel.NONE)


def declared_bump(old: SemVer, new: SemVer) -> ImpactLevel:
    """The level a consumer reads off the jump from ``old`` to ``new``."""
    if new.major != old.major:
        return ImpactLevel.MAJOR
    if new.minor != old.minor:
        return ImpactLevel.MINOR
    if new.patch != old.patch:
        return ImpactLevel.PATCH
    return ImpactLevel.NONE
