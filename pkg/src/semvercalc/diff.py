"""Compare two component models and emit taxonomy-classified change facts."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal
from enum import Enum
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Optional

from .contracts import Mode, Relation, compare_post, compare_pre
from .model import ComponentModel, FunctionDecl, LicenseClass

__all__ = [
    "Category",
    "FactKind",
    "ChangeFact",
    "DiffConfig",
    "FactsFileError",
    "PAIRED_KINDS",
    "diff",
    "license_direction",
    "format_ratio",
    "format_fact",
    "render_facts",
    "parse_facts",
]


class Category(Enum):
    STRUCTURAL = "structural"
    BEHAVIOURAL = "behavioural"
    RESOURCING = "resourcing"
    AUXILIARY = "auxiliary"


class FactKind(Enum):
    """Fact kinds; the value is the predicate name used in facts files and policies."""

    # (predicate, category, total arity including the subject)
    FUNCTION_ADDED = ("functionAdded", Category.STRUCTURAL, 1)
    FUNCTION_REMOVED = ("functionRemoved", Category.STRUCTURAL, 1)
    PARAM_ADDED = ("paramAdded", Category.STRUCTURAL, 2)
    PARAM_REMOVED = ("paramRemoved", Category.STRUCTURAL, 2)
    PARAM_ORDER_CHANGED = ("paramOrderChanged", Category.STRUCTURAL, 1)
    PARAM_TYPE_CHANGED = ("paramTypeChanged", Category.STRUCTURAL, 4)
    RETURN_TYPE_CHANGED = ("returnTypeChanged", Category.STRUCTURAL, 3)
    RETURN_NULLABILITY_DROPPED = ("returnNullabilityDropped", Category.STRUCTURAL, 1)
    TYPE_KIND_CHANGED = ("typeKindChanged", Category.STRUCTURAL, 3)
    EXPORT_REMOVED = ("exportRemoved", Category.STRUCTURAL, 1)
    EXPORT_ADDED = ("exportAdded", Category.STRUCTURAL, 1)
    DEPRECATED_ADDED = ("deprecatedAdded", Category.STRUCTURAL, 1)
    IMPL_CHANGED = ("implChanged", Category.STRUCTURAL, 1)
    PRE_STRENGTHENED = ("preStrengthened", Category.BEHAVIOURAL, 1)
    PRE_WEAKENED = ("preWeakened", Category.BEHAVIOURAL, 1)
    PRE_INCOMPARABLE = ("preIncomparable", Category.BEHAVIOURAL, 1)
    POST_WEAKENED = ("postWeakened", Category.BEHAVIOURAL, 1)
    POST_STRENGTHENED = ("postStrengthened", Category.BEHAVIOURAL, 1)
    POST_INCOMPARABLE = ("postIncomparable", Category.BEHAVIOURAL, 1)
    SIDE_EFFECT_ADDED = ("sideEffectAdded", Category.BEHAVIOURAL, 1)
    SIDE_EFFECT_REMOVED = ("sideEffectRemoved", Category.BEHAVIOURAL, 1)
    RUNTIME_INCREASED = ("runtimeIncreased", Category.RESOURCING, 2)
    MEMORY_INCREASED = ("memoryIncreased", Category.RESOURCING, 2)
    LICENSE_RELAXED = ("licenseRelaxed", Category.AUXILIARY, 3)
    LICENSE_TIGHTENED = ("licenseTightened", Category.AUXILIARY, 3)
    PLATFORM_STRENGTHENED = ("platformStrengthened", Category.AUXILIARY, 3)
    PLATFORM_WEAKENED = ("platformWeakened", Category.AUXILIARY, 3)
    DEPENDENCY_ADDED = ("dependencyAdded", Category.AUXILIARY, 2)
    DEPENDENCY_REMOVED = ("dependencyRemoved", Category.AUXILIARY, 2)
    DEPENDENCY_REQ_CHANGED = ("dependencyReqChanged", Category.AUXILIARY, 3)

    def __init__(self, predicate: str, category: Category, arity: int) -> None:
        self.predicate = predicate
        self.category = category
        self.arity = arity

    def __str__(self) -> str:
        return self.predicate

    @classmethod
    def from_predicate(cls, name: str) -> Optional[FactKind]:
        return _BY_PREDICATE.get(name)


_BY_PREDICATE = {k.predicate: k for k in FactKind}

# Direction-paired kinds: diff(a, b) has one iff diff(b, a) has the other.
PAIRED_KINDS: dict[FactKind, FactKind] = {}
for _a, _b in [
    (FactKind.FUNCTION_ADDED, FactKind.FUNCTION_REMOVED),
    (FactKind.PARAM_ADDED, FactKind.PARAM_REMOVED),
    (FactKind.EXPORT_ADDED, FactKind.EXPORT_REMOVED),
    (FactKind.SIDE_EFFECT_ADDED, FactKind.SIDE_EFFECT_REMOVED),
    (FactKind.DEPENDENCY_ADDED, FactKind.DEPENDENCY_REMOVED),
    (FactKind.PRE_STRENGTHENED, FactKind.PRE_WEAKENED),
    (FactKind.POST_STRENGTHENED, FactKind.POST_WEAKENED),
    (FactKind.PLATFORM_STRENGTHENED, FactKind.PLATFORM_WEAKENED),
    (FactKind.LICENSE_RELAXED, FactKind.LICENSE_TIGHTENED),
]:
    PAIRED_KINDS[_a] = _b
    PAIRED_KINDS[_b] = _a
for _k in (FactKind.PRE_INCOMPARABLE, FactKind.POST_INCOMPARABLE,
           FactKind.PARAM_ORDER_CHANGED, FactKind.TYPE_KIND_CHANGED,
           FactKind.PARAM_TYPE_CHANGED, FactKind.RETURN_TYPE_CHANGED,
           FactKind.DEPENDENCY_REQ_CHANGED):
    PAIRED_KINDS[_k] = _k


@total_ordering
@dataclass(frozen=True, eq=False)
class ChangeFact:
    kind: FactKind
    subject: str
    detail: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "detail", tuple(self.detail))
        if 1 + len(self.detail) != self.kind.arity:
            raise ValueError(f"{self.kind} takes {self.kind.arity} arguments, "
                             f"got {1 + len(self.detail)}")

    # ordering and equality must include the kind; FactKind itself is unordered
    def _key(self) -> tuple:
        return (self.kind.predicate, self.subject, self.detail)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChangeFact):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other: ChangeFact) -> bool:
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    @property
    def args(self) -> tuple[str, ...]:
        return (self.subject, *self.detail)

    def __str__(self) -> str:
        return format_fact(self.kind.predicate, self.args)


@dataclass(frozen=True)
class DiffConfig:
    mode: Mode = Mode.PESSIMISTIC
    runtime_ratio_threshold: Fraction = Fraction(5, 4)
    memory_ratio_threshold: Fraction = Fraction(5, 4)

    def __post_init__(self) -> None:
        for name in ("runtime_ratio_threshold", "memory_ratio_threshold"):
            value = Fraction(getattr(self, name))
            if value <= 1:
                raise ValueError(f"{name} must be greater than 1, got {value}")
            object.__setattr__(self, name, value)


def license_direction(old: LicenseClass, new: LicenseClass) -> str:
    """``relaxed``, ``tightened`` or ``same`` along the protectiveness order."""
    if new < old:
        return "relaxed"
    if new > old:
        return "tightened"
    return "same"


def format_ratio(ratio: Optional[Fraction]) -> str:
    """Decimal text for a cost ratio, rounded up to six places; ``None`` is infinite."""
    if ratio is None:
        return "inf"
    value = Decimal(ratio.numerator) / Decimal(ratio.denominator)
    value = value.quantize(Decimal("0.000001"), rounding=ROUND_CEILING).normalize()
    return format(value, "f")


def _cost_ratio(old: Fraction, new: Fraction) -> Optional[Fraction]:
    if old == 0:
        return None if new > 0 else Fraction(1)
    return new / old


def _function_facts(old: FunctionDecl, new: FunctionDecl, config: DiffConfig) -> list[ChangeFact]:
    name = old.name
    facts: list[ChangeFact] = []
    old_params = {p.name: p for p in old.params}
    new_params = {p.name: p for p in new.params}
    for p in new.params:
        if p.name not in old_params:
            facts.append(ChangeFact(FactKind.PARAM_ADDED, name, (p.name,)))
    for p in old.params:
        if p.name not in new_params:
            facts.append(ChangeFact(FactKind.PARAM_REMOVED, name, (p.name,)))
    if set(old_params) == set(new_params) and old.param_names() != new.param_names():
        facts.append(ChangeFact(FactKind.PARAM_ORDER_CHANGED, name))
    for p in old.params:
        q = new_params.get(p.name)
        if q is not None and q.type.base != p.type.base:
            facts.append(ChangeFact(FactKind.PARAM_TYPE_CHANGED, name,
                                    (p.name, p.type.base, q.type.base)))
    if old.return_type.base != new.return_type.base:
        facts.append(ChangeFact(FactKind.RETURN_TYPE_CHANGED, name,
                                (old.return_type.base, new.return_type.base)))
    if not old.return_type.nullable and new.return_type.nullable:
        facts.append(ChangeFact(FactKind.RETURN_NULLABILITY_DROPPED, name))
    if old.pure and not new.pure:
        facts.append(ChangeFact(FactKind.SIDE_EFFECT_ADDED, name))
    if not old.pure and new.pure:
        facts.append(ChangeFact(FactKind.SIDE_EFFECT_REMOVED, name))
    if not old.deprecated and new.deprecated:
        facts.append(ChangeFact(FactKind.DEPRECATED_ADDED, name))

    pre = compare_pre(old.precondition, new.precondition, config.mode)
    pre_kind = {
        Relation.STRENGTHENED: FactKind.PRE_STRENGTHENED,
        Relation.WEAKENED: FactKind.PRE_WEAKENED,
        Relation.INCOMPARABLE: FactKind.PRE_INCOMPARABLE,
    }.get(pre)
    if pre_kind:
        facts.append(ChangeFact(pre_kind, name))
    post = compare_post(old.postcondition, new.postcondition, config.mode)
    post_kind = {
        Relation.STRENGTHENED: FactKind.POST_STRENGTHENED,
        Relation.WEAKENED: FactKind.POST_WEAKENED,
        Relation.INCOMPARABLE: FactKind.POST_INCOMPARABLE,
    }.get(post)
    if post_kind:
        facts.append(ChangeFact(post_kind, name))

    if old.cost is not None and new.cost is not None:
        for kind, attr, threshold in (
            (FactKind.RUNTIME_INCREASED, "runtime_ms", config.runtime_ratio_threshold),
            (FactKind.MEMORY_INCREASED, "memory_kb", config.memory_ratio_threshold),
        ):
            ratio = _cost_ratio(getattr(old.cost, attr), getattr(new.cost, attr))
            if ratio is None or ratio > threshold:
                facts.append(ChangeFact(kind, name, (format_ratio(ratio),)))

    if (not facts and old.impl_hash is not None and new.impl_hash is not None
            and old.impl_hash != new.impl_hash):
        facts.append(ChangeFact(FactKind.IMPL_CHANGED, name))
    return facts


def diff(old: ComponentModel, new: ComponentModel, config: Optional[DiffConfig] = None) -> list[ChangeFact]:
    """All change facts from ``old`` to ``new``, sorted and duplicate-free.

    Functions and types are matched by name; renames therefore surface as a
    removal plus an addition.
    """
    config = config or DiffConfig()
    facts: set[ChangeFact] = set()

    old_fns = {fn.name: fn for fn in old.functions}
    new_fns = {fn.name: fn for fn in new.functions}
    old_types = {t.name: t for t in old.types}
    new_types = {t.name: t for t in new.types}
    # One namespace: a name that moves between function and type is a
    # removal plus an addition, like any other name that disappears.
    old_decls = {**{n: "fn" for n in old_fns}, **{n: "type" for n in old_types}}
    new_decls = {**{n: "fn" for n in new_fns}, **{n: "type" for n in new_types}}
    for name, what in old_decls.items():
        if new_decls.get(name) != what:
            facts.add(ChangeFact(FactKind.FUNCTION_REMOVED, name))
    for name, what in new_decls.items():
        if old_decls.get(name) != what:
            facts.add(ChangeFact(FactKind.FUNCTION_ADDED, name))
    for name in old_fns.keys() & new_fns.keys():
        facts.update(_function_facts(old_fns[name], new_fns[name], config))

    for name in old_types.keys() & new_types.keys():
        before, after = old_types[name].kind, new_types[name].kind
        if before != after:
            facts.add(ChangeFact(FactKind.TYPE_KIND_CHANGED, name, (str(before), str(after))))

    old_exports, new_exports = old.exported_names(), new.exported_names()
    for name in old_exports - new_exports:
        facts.add(ChangeFact(FactKind.EXPORT_REMOVED, name))
    for name in new_exports - old_exports:
        facts.add(ChangeFact(FactKind.EXPORT_ADDED, name))

    facts.update(_metadata_facts(old, new))
    return sorted(facts)


def _metadata_facts(old: ComponentModel, new: ComponentModel) -> Iterable[ChangeFact]:
    om, nm = old.metadata, new.metadata
    if om.license is not None and nm.license is not None:
        direction = license_direction(om.license, nm.license)
        if direction != "same":
            kind = FactKind.LICENSE_RELAXED if direction == "relaxed" else FactKind.LICENSE_TIGHTENED
            yield ChangeFact(kind, new.name, (str(om.license), str(nm.license)))

    old_plat, new_plat = om.platform_map(), nm.platform_map()
    for plat in old_plat.keys() | new_plat.keys():
        before, after = old_plat.get(plat), new_plat.get(plat)
        if before == after:
            continue
        strengthened = after is None or (before is not None and after > before)
        kind = FactKind.PLATFORM_STRENGTHENED if strengthened else FactKind.PLATFORM_WEAKENED
        yield ChangeFact(kind, plat, (str(before or "none"), str(after or "none")))

    old_deps, new_deps = om.dependency_map(), nm.dependency_map()
    for dep in old_deps.keys() - new_deps.keys():
        yield ChangeFact(FactKind.DEPENDENCY_REMOVED, dep, (str(old_deps[dep]),))
    for dep in new_deps.keys() - old_deps.keys():
        yield ChangeFact(FactKind.DEPENDENCY_ADDED, dep, (str(new_deps[dep]),))
    for dep in old_deps.keys() & new_deps.keys():
        if old_deps[dep] != new_deps[dep]:
            yield ChangeFact(FactKind.DEPENDENCY_REQ_CHANGED, dep,
                             (str(old_deps[dep]), str(new_deps[dep])))


# facts files ---------------------------------------------------------------

_BARE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_FACT_LINE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*\.?\s*\Z")
_ARG = re.compile(r'\s*(?:"((?:[^"\\]|\\.)*)"|([A-Za-z0-9_][A-Za-z0-9_.\-]*))\s*(,|\Z)')


class FactsFileError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def _quote(arg: str) -> str:
    if _BARE.match(arg):
        return arg
    return '"' + arg.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_fact(predicate: str, args: Iterable[str]) -> str:
    return f"{predicate}({', '.join(_quote(a) for a in args)})"


def render_facts(facts: Iterable[tuple[str, tuple[str, ...]]]) -> str:
    """One fact per line, sorted; accepts ``(predicate, args)`` pairs."""
    lines = sorted(format_fact(pred, args) for pred, args in facts)
    return "".join(line + "\n" for line in lines)


def _split_args(text: str, lineno: int) -> tuple[str, ...]:
    if not text.strip():
        return ()
    args, pos = [], 0
    while pos < len(text):
        m = _ARG.match(text, pos)
        if not m:
            raise FactsFileError(f"malformed argument near {text[pos:].strip()!r}", lineno)
        quoted, bare, sep = m.groups()
        args.append(re.sub(r"\\(.)", r"\1", quoted) if quoted is not None else bare)
        pos = m.end()
        if sep == "" and pos < len(text):
            raise FactsFileError("trailing text after arguments", lineno)
        if sep == "," and pos == len(text):
            raise FactsFileError("missing argument after ','", lineno)
    return tuple(args)


def parse_facts(text: str, arities: Optional[dict[str, int]] = None) -> list[tuple[str, tuple[str, ...]]]:
    """Read a facts file into ``(predicate, args)`` pairs.

    Taxonomy predicates and ``inSurface`` are checked against their fixed
    arity; unknown predicates must be listed in ``arities`` or are rejected.
    """
    known = {k.predicate: k.arity for k in FactKind}
    known["inSurface"] = 1
    known.update(arities or {})
    facts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0] if '"' not in raw else _strip_comment(raw)
        if not line.strip():
            continue
        m = _FACT_LINE.match(line)
        if not m:
            raise FactsFileError(f"expected 'kind(arg, ...)', got {line.strip()!r}", lineno)
        pred, args = m.group(1), _split_args(m.group(2), lineno)
        if pred not in known:
            raise FactsFileError(f"unknown fact kind {pred!r}", lineno)
        if len(args) != known[pred]:
            raise FactsFileError(f"{pred} takes {known[pred]} arguments, got {len(args)}", lineno)
        facts.append((pred, args))
    return facts


def _strip_comment(line: str) -> str:
    in_str = escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\":
            escaped = in_str
        elif ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line
