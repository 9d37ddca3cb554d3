"""Lightweight contracts: conjunctions of decidable atoms, with implication.

Contract variables range over the integers.  Comparison atoms against a
non-integral constant are normalised accordingly (``a < 2.5`` is ``a <= 2``,
``a == 2.5`` is unsatisfiable).  Nullness and opaque predicates are
independent of the integer value: ``nonnull(a)`` and ``valid(a)`` are only
entailed by themselves, or by an unsatisfiable contract.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Union

__all__ = [
    "ContractError",
    "NonNull",
    "Cmp",
    "Opaque",
    "Atom",
    "Contract",
    "Mode",
    "Relation",
    "PreRelation",
    "PostRelation",
    "Region",
    "parse_atom",
    "parse_contract",
    "format_number",
    "implies",
    "compare_pre",
    "compare_post",
    "is_satisfiable",
]

OPS = ("<", "<=", ">", ">=", "==", "!=")


class ContractError(ValueError):
    pass


class Mode(Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"

    def __str__(self) -> str:
        return self.value


class Relation(Enum):
    EQUAL = "equal"
    STRENGTHENED = "strengthened"
    WEAKENED = "weakened"
    INCOMPARABLE = "incomparable"

    def __str__(self) -> str:
        return self.value


PreRelation = Relation
PostRelation = Relation


def format_number(k: Fraction) -> str:
    """Render a constant as a plain decimal literal."""
    if k.denominator == 1:
        return str(k.numerator)
    den = k.denominator
    # Terminating decimals only; anything else falls back to a rounded form.
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den != 1:
        return format(Decimal(k.numerator) / Decimal(k.denominator), "f")
    digits = 0
    scaled = k
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
    sign = "-" if scaled < 0 else ""
    mag = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{mag[:-digits]}.{mag[-digits:]}"


@dataclass(frozen=True, order=True)
class NonNull:
    var: str

    def __str__(self) -> str:
        return f"nonnull({self.var})"


@dataclass(frozen=True, order=True)
class Cmp:
    var: str
    op: str
    k: Fraction

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ContractError(f"unknown comparison operator {self.op!r}")
        object.__setattr__(self, "k", Fraction(self.k))

    def __str__(self) -> str:
        return f"{self.var} {self.op} {format_number(self.k)}"


@dataclass(frozen=True, order=True)
class Opaque:
    pred: str
    var: str

    def __str__(self) -> str:
        return f"{self.pred}({self.var})"


Atom = Union[NonNull, Cmp, Opaque]


def _atom_key(atom: Atom) -> tuple:
    return (type(atom).__name__, str(atom))


@dataclass(frozen=True)
class Contract:
    """A conjunction of atoms; the empty contract is ``true``."""

    atoms: frozenset = field(default_factory=frozenset)

    def __init__(self, atoms: Iterable[Atom] = ()) -> None:
        object.__setattr__(self, "atoms", frozenset(atoms))

    def __iter__(self):
        return iter(sorted(self.atoms, key=_atom_key))

    def __len__(self) -> int:
        return len(self.atoms)

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __str__(self) -> str:
        return ", ".join(str(a) for a in self) or "true"

    def variables(self) -> set[str]:
        return {a.var for a in self.atoms}


_ATOM_RE = re.compile(
    r"""\s*(?:
        nonnull\s*\(\s*(?P<nn>[A-Za-z_]\w*)\s*\)
      | (?P<pred>[A-Za-z_]\w*)\s*\(\s*(?P<pvar>[A-Za-z_]\w*)\s*\)
      | (?P<var>[A-Za-z_]\w*)\s*(?P<op><=|>=|==|!=|<|>)\s*(?P<num>-?\d+(?:\.\d+)?)
    )\s*\Z""",
    re.VERBOSE,
)


def parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text)
    if not m:
        raise ContractError(f"malformed contract atom {text.strip()!r}")
    if m.group("nn"):
        return NonNull(m.group("nn"))
    if m.group("pred"):
        return Opaque(m.group("pred"), m.group("pvar"))
    return Cmp(m.group("var"), m.group("op"), Fraction(Decimal(m.group("num"))))


def parse_contract(text: str) -> Contract:
    """Parse a comma-separated atom list; blank text is ``true``."""
    if not text.strip():
        return Contract()
    return Contract(parse_atom(part) for part in text.split(","))


@dataclass(frozen=True)
class Region:
    """Integer feasible set: ``[lo, hi]`` minus finitely many excluded points.

    ``None`` bounds are unbounded; ``empty`` marks an unsatisfiable region.
    """

    lo: Optional[int] = None
    hi: Optional[int] = None
    excluded: frozenset = frozenset()
    empty: bool = False

    @classmethod
    def of(cls, atom: Cmp) -> Region:
        k, op = atom.k, atom.op
        integral = k.denominator == 1
        if op == "<":
            return cls(hi=math.ceil(k) - 1)
        if op == "<=":
            return cls(hi=math.floor(k))
        if op == ">":
            return cls(lo=math.floor(k) + 1)
        if op == ">=":
            return cls(lo=math.ceil(k))
        if op == "==":
            if not integral:
                return cls(empty=True)
            return cls(lo=int(k), hi=int(k))
        return cls(excluded=frozenset({int(k)}) if integral else frozenset())

    def meet(self, other: Region) -> Region:
        if self.empty or other.empty:
            return Region(empty=True)
        lo = _pick(self.lo, other.lo, max)
        hi = _pick(self.hi, other.hi, min)
        return Region(lo, hi, self.excluded | other.excluded).normalized()

    def normalized(self) -> Region:
        """Trim excluded endpoints so ``lo``/``hi`` are members, detect emptiness."""
        if self.empty:
            return self
        lo, hi = self.lo, self.hi
        if lo is not None:
            while lo in self.excluded and (hi is None or lo <= hi):
                lo += 1
        if hi is not None:
            while hi in self.excluded and (lo is None or lo <= hi):
                hi -= 1
        if lo is not None and hi is not None and lo > hi:
            return Region(empty=True)
        inside = frozenset(
            x for x in self.excluded
            if (lo is None or x >= lo) and (hi is None or x <= hi)
        )
        return Region(lo, hi, inside)

    def contains(self, x: int) -> bool:
        if self.empty:
            return False
        return (
            (self.lo is None or x >= self.lo)
            and (self.hi is None or x <= self.hi)
            and x not in self.excluded
        )

    def subset_of(self, atom: Cmp) -> bool:
        """True iff every integer in this region satisfies ``atom``."""
        if self.empty:
            return True
        target = Region.of(atom)
        if target.empty:
            return False
        if atom.op == "==":
            return self.lo == self.hi == target.lo
        if atom.op == "!=":
            return all(not self.contains(x) for x in target.excluded)
        if target.lo is not None:
            return self.lo is not None and self.lo >= target.lo
        return self.hi is not None and self.hi <= target.hi


def _pick(a: Optional[int], b: Optional[int], fn) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return fn(a, b)


def _regions(c: Contract) -> dict[str, Region]:
    regions: dict[str, Region] = {}
    for atom in c.atoms:
        if isinstance(atom, Cmp):
            regions[atom.var] = regions.get(atom.var, Region()).meet(Region.of(atom))
    return {v: r.normalized() for v, r in regions.items()}


def is_satisfiable(c: Contract) -> bool:
    return not any(r.empty for r in _regions(c).values())


def implies(c1: Contract, c2: Contract, mode: Mode = Mode.PESSIMISTIC) -> bool:
    """Decide whether ``c1`` entails every atom of ``c2``.

    ``mode`` does not change entailment; it is accepted so callers can thread
    one configuration through.  Optimistic and pessimistic calculations differ
    in how incomparable relations are classified by policy.
    """
    regions = _regions(c1)
    if any(r.empty for r in regions.values()):
        return True
    for atom in c2.atoms:
        if isinstance(atom, Cmp):
            if not regions.get(atom.var, Region()).subset_of(atom):
                return False
        elif atom not in c1.atoms:
            return False
    return True


def _relation(old: Contract, new: Contract, mode: Mode) -> tuple[bool, bool]:
    return implies(old, new, mode), implies(new, old, mode)


def compare_pre(old: Contract, new: Contract, mode: Mode = Mode.PESSIMISTIC) -> Relation:
    """Classify a precondition change; ``STRENGTHENED`` means callers must do more."""
    old_to_new, new_to_old = _relation(old, new, mode)
    if old_to_new and new_to_old:
        return Relation.EQUAL
    if new_to_old:
        return Relation.STRENGTHENED
    if old_to_new:
        return Relation.WEAKENED
    return Relation.INCOMPARABLE


def compare_post(old: Contract, new: Contract, mode: Mode = Mode.PESSIMISTIC) -> Relation:
    """Classify a postcondition change; ``WEAKENED`` means the new version promises less."""
    old_to_new, new_to_old = _relation(old, new, mode)
    if old_to_new and new_to_old:
        return Relation.EQUAL
    if old_to_new:
        return Relation.WEAKENED
    if new_to_old:
        return Relation.STRENGTHENED
    return Relation.INCOMPARABLE
