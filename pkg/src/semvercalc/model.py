"""In-memory model of one component version's declared interface."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

from .contracts import Contract
from .versions import SemVer, VersionReq

__all__ = [
    "ModelError",
    "Visibility",
    "TypeKind",
    "LicenseClass",
    "TypeRef",
    "Param",
    "CostProfile",
    "FunctionDecl",
    "TypeDecl",
    "Dependency",
    "Metadata",
    "AllPublic",
    "Named",
    "ExportSpec",
    "ComponentModel",
    "UsageProfile",
    "SurfaceReport",
    "parse_usage",
    "load_usage",
    "union_usage",
    "surface_report",
]

RESULT = "result"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ModelError(ValueError):
    pass


class Visibility(Enum):
    PUBLIC = "public"
    INTERNAL = "internal"

    def __str__(self) -> str:
        return self.value


class TypeKind(Enum):
    INTERFACE = "interface"
    ABSTRACT = "abstract"
    CONCRETE = "concrete"
    ENUM = "enum"

    def __str__(self) -> str:
        return self.value


class LicenseClass(IntEnum):
    """License classes ordered by protectiveness (least protective first)."""

    PUBLIC_DOMAIN = 0
    PERMISSIVE = 1
    WEAK_COPYLEFT = 2
    STRONG_COPYLEFT = 3
    PROPRIETARY = 4

    def __str__(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> LicenseClass:
        try:
            return cls[text.upper()]
        except KeyError:
            raise ModelError(f"unknown license class {text!r}") from None


@dataclass(frozen=True)
class TypeRef:
    base: str
    nullable: bool = False

    def __post_init__(self) -> None:
        if not self.base:
            raise ModelError("type reference with empty base")

    def __str__(self) -> str:
        return self.base + ("?" if self.nullable else "")


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeRef


@dataclass(frozen=True)
class CostProfile:
    runtime_ms: Fraction
    memory_kb: Fraction

    def __post_init__(self) -> None:
        for name in ("runtime_ms", "memory_kb"):
            value = Fraction(getattr(self, name))
            if value < 0:
                raise ModelError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple[Param, ...] = ()
    return_type: TypeRef = TypeRef("Unit")
    visibility: Visibility = Visibility.PUBLIC
    pure: bool = False
    deprecated: bool = False
    impl_hash: Optional[str] = None
    cost: Optional[CostProfile] = None
    precondition: Contract = field(default_factory=Contract)
    postcondition: Contract = field(default_factory=Contract)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ModelError(f"function {self.name}: duplicate parameter name")
        allowed = set(names)
        for atom in self.precondition.atoms:
            if atom.var not in allowed:
                raise ModelError(f"function {self.name}: precondition atom {atom} "
                                 f"references unknown name {atom.var!r}")
        for atom in self.postcondition.atoms:
            if atom.var not in allowed and atom.var != RESULT:
                raise ModelError(f"function {self.name}: postcondition atom {atom} "
                                 f"references unknown name {atom.var!r}")

    @property
    def is_public(self) -> bool:
        return self.visibility is Visibility.PUBLIC

    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class TypeDecl:
    name: str
    kind: TypeKind
    visibility: Visibility = Visibility.PUBLIC

    @property
    def is_public(self) -> bool:
        return self.visibility is Visibility.PUBLIC


@dataclass(frozen=True)
class Dependency:
    name: str
    req: VersionReq


@dataclass(frozen=True)
class Metadata:
    """``license`` is ``None`` when the description does not declare one."""

    license: Optional[LicenseClass] = None
    platforms: tuple[tuple[str, SemVer], ...] = ()
    dependencies: tuple[Dependency, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "platforms", tuple(self.platforms))
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        for label, names in (("platform", [p for p, _ in self.platforms]),
                             ("dependency", [d.name for d in self.dependencies])):
            if len(set(names)) != len(names):
                raise ModelError(f"duplicate {label} name")

    def platform_map(self) -> dict[str, SemVer]:
        return dict(self.platforms)

    def dependency_map(self) -> dict[str, VersionReq]:
        return {d.name: d.req for d in self.dependencies}


@dataclass(frozen=True)
class AllPublic:
    def __str__(self) -> str:
        return "*"


@dataclass(frozen=True)
class Named:
    names: frozenset

    def __init__(self, names: Iterable[str]) -> None:
        names = frozenset(names)
        if not names:
            raise ModelError("named export list must not be empty")
        object.__setattr__(self, "names", names)

    def __str__(self) -> str:
        return "{ " + ", ".join(sorted(self.names)) + " }"


ExportSpec = Union[AllPublic, Named]


@dataclass(frozen=True)
class ComponentModel:
    name: str
    version: SemVer
    metadata: Metadata = field(default_factory=Metadata)
    functions: tuple[FunctionDecl, ...] = ()
    types: tuple[TypeDecl, ...] = ()
    exports: ExportSpec = field(default_factory=AllPublic)

    def __post_init__(self) -> None:
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "types", tuple(self.types))
        names = [d.name for d in self.functions] + [t.name for t in self.types]
        seen: set[str] = set()
        for name in names:
            if name in seen:
                raise ModelError(f"duplicate declaration {name!r}")
            seen.add(name)
        if isinstance(self.exports, Named):
            missing = sorted(self.exports.names - seen)
            if missing:
                raise ModelError(f"export of undeclared name {missing[0]!r}")

    def function(self, name: str) -> Optional[FunctionDecl]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def type(self, name: str) -> Optional[TypeDecl]:
        for ty in self.types:
            if ty.name == name:
                return ty
        return None

    def public_names(self) -> set[str]:
        return {d.name for d in (*self.functions, *self.types) if d.is_public}

    def exported_names(self) -> set[str]:
        """Public declarations reachable through the export specification.

        Exporting an internal declaration does not make it visible.
        """
        public = self.public_names()
        if isinstance(self.exports, Named):
            return public & self.exports.names
        return public


@dataclass(frozen=True)
class UsageProfile:
    client_name: str
    used: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "used", frozenset(self.used))


def parse_usage(text: str, client_name: str = "client") -> UsageProfile:
    """Read a usage profile: one identifier per line, ``#`` comments."""
    used = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if not _IDENT.match(line):
            raise ModelError(f"usage line {lineno}: {line!r} is not an identifier")
        used.add(line)
    return UsageProfile(client_name, frozenset(used))


def load_usage(path: Union[str, Path]) -> UsageProfile:
    path = Path(path)
    return parse_usage(path.read_text(encoding="utf-8"), path.stem)


def union_usage(profiles: Iterable[UsageProfile]) -> UsageProfile:
    profiles = list(profiles)
    used = frozenset().union(*(p.used for p in profiles))
    return UsageProfile("+".join(p.client_name for p in profiles), used)


@dataclass(frozen=True)
class SurfaceReport:
    total_functions: int
    public_functions: int
    exported_functions: int
    used_functions: Optional[int] = None


def surface_report(model: ComponentModel, usage: Optional[UsageProfile] = None) -> SurfaceReport:
    """Count the component's functions at each level of API exposure.

    ``used_functions`` counts exported functions the usage profile touches;
    names unknown to the model are ignored.
    """
    exported = model.exported_names()
    fn_names = [fn.name for fn in model.functions]
    exported_fns = [n for n in fn_names if n in exported]
    return SurfaceReport(
        total_functions=len(fn_names),
        public_functions=sum(fn.is_public for fn in model.functions),
        exported_functions=len(exported_fns),
        used_functions=None if usage is None else sum(n in usage.used for n in exported_fns),
    )

