"""Stratified Datalog with semi-naive evaluation and why-provenance.

Rule files look like::

    % a comment
    major r_removed: impact_major(F) :- functionRemoved(F), inSurface(F).
    public(F) :- inSurface(F), not internalOnly(F).
    major r_slow: impact_major(F) :- runtimeIncreased(F, R), inSurface(F), gt(R, 1.25).

The optional ``level id:`` prefix names the rule and registers its head
predicate as an impact predicate of that level.  ``gt(A, B)`` is the only
built-in: a strict comparison of decimal literals.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, NamedTuple, Optional, Union

from .diff import format_fact
from .versions import ImpactLevel

__all__ = [
    "PolicyError",
    "Variable",
    "Constant",
    "Term",
    "Literal",
    "Rule",
    "RuleSet",
    "GroundFact",
    "Derivation",
    "Evaluation",
    "DEFAULT_IMPACT_MAP",
    "parse_rules",
    "evaluate",
    "verdict",
    "replay",
    "ground",
]

BUILTINS = {"gt": 2}
LEVEL_WORDS = {"major": ImpactLevel.MAJOR, "minor": ImpactLevel.MINOR, "patch": ImpactLevel.PATCH}
DEFAULT_IMPACT_MAP = {
    "impact_major": ImpactLevel.MAJOR,
    "impact_minor": ImpactLevel.MINOR,
    "impact_patch": ImpactLevel.PATCH,
}


class PolicyError(ValueError):
    def __init__(self, message: str, rule_id: Optional[str] = None,
                 line: Optional[int] = None, col: Optional[int] = None) -> None:
        where = ""
        if line is not None:
            where = f"{line}:{col}: " if col is not None else f"line {line}: "
        who = f"rule {rule_id}: " if rule_id else ""
        super().__init__(f"{where}{who}{message}")
        self.rule_id = rule_id
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    value: str

    def __str__(self) -> str:
        return format_fact("", [self.value])[1:-1]


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[Term, ...] = ()
    negated: bool = False

    def variables(self) -> set[str]:
        return {t.name for t in self.args if isinstance(t, Variable)}

    @property
    def is_builtin(self) -> bool:
        return self.predicate in BUILTINS

    def __str__(self) -> str:
        inner = f"{self.predicate}({', '.join(map(str, self.args))})" if self.args else self.predicate
        return f"not {inner}" if self.negated else inner


@dataclass(frozen=True)
class Rule:
    id: str
    head: Literal
    body: tuple[Literal, ...] = ()
    level: Optional[ImpactLevel] = None
    line: Optional[int] = None

    def positives(self) -> list[Literal]:
        return [lit for lit in self.body if not lit.negated and not lit.is_builtin]

    def __str__(self) -> str:
        prefix = f"{self.level} {self.id}: " if self.level is not None else f"{self.id}: "
        body = f" :- {', '.join(map(str, self.body))}" if self.body else ""
        return f"{prefix}{self.head}{body}."


class GroundFact(NamedTuple):
    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return format_fact(self.predicate, self.args)


@dataclass(frozen=True)
class Derivation:
    """Why a fact holds: an input, or one rule instantiation over premises.

    ``absent`` lists the ground negated literals that were checked absent and
    ``checks`` the satisfied built-in comparisons; neither has a sub-derivation.
    """

    fact: GroundFact
    rule_id: Optional[str] = None
    premises: tuple[Derivation, ...] = ()
    absent: tuple[GroundFact, ...] = ()
    checks: tuple[GroundFact, ...] = ()

    @property
    def is_input(self) -> bool:
        return self.rule_id is None

    def walk(self) -> Iterator[Derivation]:
        yield self
        for p in self.premises:
            yield from p.walk()


@dataclass(frozen=True, eq=False)
class RuleSet:
    rules: tuple[Rule, ...]
    impact_map: dict = field(default_factory=lambda: dict(DEFAULT_IMPACT_MAP))
    signature: dict = field(default_factory=dict)
    strata: tuple[tuple[str, ...], ...] = ()

    @classmethod
    def build(cls, rules: Iterable[Rule], impact_map: Optional[dict] = None) -> RuleSet:
        """Validate rules (ids, arities, safety, stratification) and stratify."""
        rules = tuple(rules)
        impact = dict(DEFAULT_IMPACT_MAP)
        impact.update(impact_map or {})
        ids: set[str] = set()
        signature: dict[str, int] = {}
        for rule in rules:
            if rule.id in ids:
                raise PolicyError("duplicate rule id", rule.id, rule.line)
            ids.add(rule.id)
            _check_arity(rule, signature)
            if rule.level is not None:
                pred = rule.head.predicate
                if impact.get(pred, rule.level) != rule.level:
                    raise PolicyError(
                        f"head {pred} is already an impact predicate of level {impact[pred]}",
                        rule.id, rule.line)
                impact[pred] = rule.level
        strata = _stratify(rules)
        for rule in rules:
            _check_safety(rule)
        return cls(rules, impact, signature, strata)

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RuleSet):
            return NotImplemented
        return self.rules == other.rules and self.impact_map == other.impact_map


def _check_arity(rule: Rule, signature: dict[str, int]) -> None:
    head = rule.head
    if head.negated:
        raise PolicyError("rule head cannot be negated", rule.id, rule.line)
    if head.is_builtin:
        raise PolicyError(f"built-in {head.predicate} cannot be defined", rule.id, rule.line)
    for lit in (head, *rule.body):
        if lit.is_builtin:
            if len(lit.args) != BUILTINS[lit.predicate]:
                raise PolicyError(f"built-in {lit.predicate} takes {BUILTINS[lit.predicate]} "
                                  f"arguments", rule.id, rule.line)
            continue
        known = signature.setdefault(lit.predicate, len(lit.args))
        if known != len(lit.args):
            raise PolicyError(f"arity conflict for {lit.predicate}: {len(lit.args)} "
                              f"vs {known}", rule.id, rule.line)


def _check_safety(rule: Rule) -> None:
    head = rule.head
    bound: set[str] = set()
    for lit in rule.positives():
        bound |= lit.variables()
    unsafe = head.variables() - bound
    if unsafe:
        raise PolicyError(f"unsafe rule: head variable {sorted(unsafe)[0]} does not occur "
                          f"in a positive body literal", rule.id, rule.line)
    for lit in rule.body:
        if lit.negated or lit.is_builtin:
            loose = lit.variables() - bound
            if loose:
                raise PolicyError(f"unsafe rule: variable {sorted(loose)[0]} in {lit} does not "
                                  f"occur in a positive body literal", rule.id, rule.line)


def _stratify(rules: tuple[Rule, ...]) -> tuple[tuple[str, ...], ...]:
    """Group head predicates into strata; raise on recursion through negation."""
    preds: set[str] = set()
    edges: dict[str, set[tuple[str, bool]]] = defaultdict(set)  # body pred -> (head pred, negative)
    for rule in rules:
        preds.add(rule.head.predicate)
        for lit in rule.body:
            if lit.is_builtin:
                continue
            preds.add(lit.predicate)
            edges[lit.predicate].add((rule.head.predicate, lit.negated))

    component = _scc({p: {h for h, _ in edges[p]} for p in preds})
    for rule in rules:
        for lit in rule.body:
            if lit.negated and component[lit.predicate] == component[rule.head.predicate]:
                raise PolicyError(f"unstratifiable: {rule.head.predicate} depends negatively on "
                                  f"{lit.predicate} through a cycle", rule.id, rule.line)

    # Longest path over the component DAG, counting negative edges.
    level = {p: 0 for p in preds}
    changed = True
    while changed:
        changed = False
        for src in sorted(preds):
            for dst, negative in edges[src]:
                want = level[src] + (1 if negative else 0)
                if level[dst] < want:
                    level[dst] = want
                    changed = True
    heads = {r.head.predicate for r in rules}
    strata: dict[int, list[str]] = defaultdict(list)
    for p in sorted(heads):
        strata[level[p]].append(p)
    return tuple(tuple(strata[k]) for k in sorted(strata))


def _scc(graph: dict[str, set[str]]) -> dict[str, int]:
    """Tarjan's algorithm (iterative); maps each node to a component id."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comp: dict[str, int] = {}
    counter = 0
    for root in sorted(graph):
        if root in index:
            continue
        work = [(root, iter(sorted(graph[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, children = work[-1]
            advanced = False
            for child in children:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(graph.get(child, ())))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                cid = len(set(comp.values()))
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp[member] = cid
                    if member == node:
                        break
    return comp


# parsing -------------------------------------------------------------------

_RULE_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?[0-9]+(?:\.[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:-|[(),.:])
    """,
    re.VERBOSE,
)


class _Tok(NamedTuple):
    kind: str
    value: str
    line: int
    col: int


def _lex_rules(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _RULE_TOKEN.match(text, pos)
        if not m:
            raise PolicyError(f"unexpected character {text[pos]!r}", None, line, pos - line_start + 1)
        kind, value = m.lastgroup, m.group()
        if kind != "ws":
            toks.append(_Tok(kind, value, line, pos - line_start + 1))
        if "\n" in value:
            line += value.count("\n")
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _RuleParser:
    def __init__(self, text: str) -> None:
        self.toks = _lex_rules(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i = min(self.i + 1, len(self.toks) - 1)
        return tok

    def fail(self, message: str, rule_id: Optional[str] = None) -> PolicyError:
        return PolicyError(message, rule_id, self.tok.line, self.tok.col)

    def expect(self, value: str, rule_id: Optional[str]) -> None:
        if self.tok.kind != "op" or self.tok.value != value:
            raise self.fail(f"expected {value!r}, found {self.tok.value or 'end of input'!r}", rule_id)
        self.next()

    def rules(self) -> list[Rule]:
        out = []
        while self.tok.kind != "eof":
            out.append(self.rule(len(out)))
        return out

    def rule(self, index: int) -> Rule:
        start = self.tok
        level = None
        rule_id = None
        t1, t2, t3 = self.toks[self.i:self.i + 3] + [_Tok("eof", "", 0, 0)] * (3 - len(self.toks[self.i:self.i + 3]))
        if t1.kind == "ident" and t2.kind == "ident" and t3.value == ":" and t3.kind == "op":
            if t1.value not in LEVEL_WORDS:
                raise self.fail(f"unknown level {t1.value!r}; expected major, minor or patch")
            level = LEVEL_WORDS[t1.value]
            rule_id = t2.value
            self.i += 3
        elif t1.kind == "ident" and t2.kind == "op" and t2.value == ":":
            rule_id = t1.value
            self.i += 2
        if rule_id is None:
            rule_id = f"rule{index + 1}"
        head = self.literal(rule_id, allow_negation=False)
        body: list[Literal] = []
        if self.tok.kind == "op" and self.tok.value == ":-":
            self.next()
            body.append(self.literal(rule_id))
            while self.tok.kind == "op" and self.tok.value == ",":
                self.next()
                body.append(self.literal(rule_id))
        self.expect(".", rule_id)
        return Rule(rule_id, head, tuple(body), level, start.line)

    def literal(self, rule_id: str, allow_negation: bool = True) -> Literal:
        negated = False
        if self.tok.kind == "ident" and self.tok.value == "not" and self.toks[self.i + 1].kind == "ident":
            if not allow_negation:
                raise self.fail("rule head cannot be negated", rule_id)
            self.next()
            negated = True
        if self.tok.kind != "ident" or not self.tok.value[0].islower():
            raise self.fail(f"expected predicate name, found {self.tok.value or 'end of input'!r}", rule_id)
        pred = self.next().value
        args: list[Term] = []
        if self.tok.kind == "op" and self.tok.value == "(":
            self.next()
            args.append(self.term(rule_id))
            while self.tok.kind == "op" and self.tok.value == ",":
                self.next()
                args.append(self.term(rule_id))
            self.expect(")", rule_id)
        return Literal(pred, tuple(args), negated)

    def term(self, rule_id: str) -> Term:
        tok = self.next()
        if tok.kind == "ident":
            if tok.value[0].isupper() or tok.value[0] == "_":
                return Variable(tok.value)
            return Constant(tok.value)
        if tok.kind == "number":
            return Constant(tok.value)
        if tok.kind == "string":
            return Constant(re.sub(r"\\(.)", r"\1", tok.value[1:-1]))
        raise PolicyError(f"expected term, found {tok.value or 'end of input'!r}", rule_id, tok.line, tok.col)


def parse_rules(text: str) -> RuleSet:
    """Parse and validate a policy; errors carry the rule id and location."""
    return RuleSet.build(_RuleParser(text).rules())


# evaluation ----------------------------------------------------------------

def ground(lit: Literal, subst: dict[str, str]) -> GroundFact:
    return GroundFact(lit.predicate, tuple(
        subst[t.name] if isinstance(t, Variable) else t.value for t in lit.args))


def _gt(a: str, b: str) -> bool:
    try:
        return Decimal(a) > Decimal(b)
    except InvalidOperation:
        return False


def _unify(lit: Literal, fact: GroundFact, subst: dict[str, str]) -> Optional[dict[str, str]]:
    if len(lit.args) != len(fact.args):
        return None
    out = subst
    for term, value in zip(lit.args, fact.args):
        if isinstance(term, Constant):
            if term.value != value:
                return None
        else:
            bound = out.get(term.name)
            if bound is None:
                if out is subst:
                    out = dict(subst)
                out[term.name] = value
            elif bound != value:
                return None
    return out


class _Store:
    """Facts per predicate, iterated in lexicographic order of their text."""

    def __init__(self) -> None:
        self.derivs: dict[GroundFact, Derivation] = {}
        self.by_pred: dict[str, list[GroundFact]] = defaultdict(list)
        self._sorted: dict[str, list[GroundFact]] = {}

    def add(self, d: Derivation) -> bool:
        if d.fact in self.derivs:
            return False
        self.derivs[d.fact] = d
        self.by_pred[d.fact.predicate].append(d.fact)
        self._sorted.pop(d.fact.predicate, None)
        return True

    def facts(self, pred: str) -> list[GroundFact]:
        if pred not in self._sorted:
            self._sorted[pred] = sorted(self.by_pred.get(pred, ()), key=str)
        return self._sorted[pred]


class Evaluation:
    """The stratified least model with one retained derivation per fact."""

    def __init__(self, derivations: dict[GroundFact, Derivation], inputs: frozenset) -> None:
        self.derivations = derivations
        self.inputs = inputs

    def __contains__(self, fact: object) -> bool:
        return fact in self.derivations

    def __iter__(self) -> Iterator[GroundFact]:
        return iter(sorted(self.derivations, key=str))

    def __len__(self) -> int:
        return len(self.derivations)

    @property
    def facts(self) -> frozenset:
        return frozenset(self.derivations)

    def derived(self) -> frozenset:
        """Facts produced by rules rather than supplied as input."""
        return frozenset(f for f in self.derivations if f not in self.inputs)

    def derivation(self, fact: GroundFact) -> Derivation:
        return self.derivations[fact]

    def query(self, predicate: str) -> list[GroundFact]:
        return [f for f in self if f.predicate == predicate]


def _matches(rule: Rule, store: _Store, delta_pos: Optional[int],
             delta: dict[str, list[GroundFact]]) -> Iterator[tuple[dict, list[GroundFact]]]:
    positives = rule.positives()

    def extend(i: int, subst: dict, chosen: list[GroundFact]):
        if i == len(positives):
            yield subst, chosen
            return
        lit = positives[i]
        source = delta.get(lit.predicate, []) if i == delta_pos else store.facts(lit.predicate)
        for fact in source:
            s = _unify(lit, fact, subst)
            if s is not None:
                yield from extend(i + 1, s, chosen + [fact])

    yield from extend(0, {}, [])


def _fire(rule: Rule, store: _Store, subst: dict, chosen: list[GroundFact]) -> Optional[Derivation]:
    absent, checks = [], []
    for lit in rule.body:
        if lit.is_builtin:
            g = ground(lit, subst)
            if not _gt(*g.args):
                return None
            checks.append(g)
        elif lit.negated:
            g = ground(lit, subst)
            if g in store.derivs:
                return None
            absent.append(g)
    return Derivation(
        ground(rule.head, subst), rule.id,
        tuple(store.derivs[f] for f in chosen), tuple(absent), tuple(checks))


def _round(stratum_rules: list[Rule], members: set[str], store: _Store,
           delta: Optional[dict[str, list[GroundFact]]]) -> dict[GroundFact, Derivation]:
    """One iteration; ``delta=None`` means a full (naive) pass."""
    pending: dict[GroundFact, Derivation] = {}
    for rule in stratum_rules:
        if delta is None:
            variants = [None]
        else:
            variants = [i for i, lit in enumerate(rule.positives())
                        if lit.predicate in members and lit.predicate in delta]
        for pos in variants:
            for subst, chosen in _matches(rule, store, pos, delta or {}):
                d = _fire(rule, store, subst, chosen)
                if d is not None and d.fact not in store.derivs and d.fact not in pending:
                    pending[d.fact] = d
    return pending


def _commit(store: _Store, pending: dict[GroundFact, Derivation]) -> dict[str, list[GroundFact]]:
    delta: dict[str, list[GroundFact]] = defaultdict(list)
    for fact in sorted(pending, key=str):
        store.add(pending[fact])
        delta[fact.predicate].append(fact)
    return dict(delta)


def evaluate(rules: RuleSet, facts: Iterable) -> Evaluation:
    """Compute the stratified least model by semi-naive iteration per stratum.

    ``facts`` may hold :class:`GroundFact` values or ``(predicate, args)``
    pairs.  Rules fire in file order and facts are scanned in lexicographic
    order, so the derivation retained for each fact is reproducible.
    """
    store = _Store()
    inputs = sorted({GroundFact(p, tuple(a)) for p, a in facts}, key=str)
    for fact in inputs:
        known = rules.signature.get(fact.predicate)
        if known is not None and known != len(fact.args):
            raise PolicyError(f"input fact {fact} has arity {len(fact.args)}, "
                              f"but {fact.predicate} has arity {known}")
        store.add(Derivation(fact))

    for stratum in rules.strata:
        members = set(stratum)
        stratum_rules = [r for r in rules.rules if r.head.predicate in members]
        delta = _commit(store, _round(stratum_rules, members, store, None))
        while delta:
            delta = _commit(store, _round(stratum_rules, members, store, delta))
    return Evaluation(dict(store.derivs), frozenset(inputs))


def verdict(derived: Evaluation, rules: RuleSet) -> tuple[ImpactLevel, list[Derivation]]:
    """Join the levels of all derived impact facts.

    Returns the level and the derivations of every impact fact at that level.
    """
    level = ImpactLevel.NONE
    support: dict[ImpactLevel, list[Derivation]] = defaultdict(list)
    for fact in derived:
        fact_level = rules.impact_map.get(fact.predicate)
        if fact_level is None or fact_level is ImpactLevel.NONE:
            continue
        level = max(level, fact_level)
        support[fact_level].append(derived.derivation(fact))
    return level, support.get(level, [])


def replay(derivation: Derivation, rules: RuleSet, model: Iterable[GroundFact],
           inputs: Optional[Iterable[GroundFact]] = None) -> None:
    """Re-check a derivation tree step by step; raise :class:`PolicyError` if invalid.

    Every rule step must be an instantiation of the named rule whose positive
    premises match the recorded sub-derivations, whose negated literals are
    absent from ``model`` and whose built-in checks hold.  Leaves must be in
    ``inputs`` when given.
    """
    model = frozenset(model)
    inputs = None if inputs is None else frozenset(inputs)
    for step in derivation.walk():
        if step.is_input:
            if inputs is not None and step.fact not in inputs:
                raise PolicyError(f"leaf {step.fact} is not an input fact")
            continue
        try:
            rule = rules.rule(step.rule_id)
        except KeyError:
            raise PolicyError(f"derivation of {step.fact} cites unknown rule", step.rule_id) from None
        positives = rule.positives()
        if len(positives) != len(step.premises):
            raise PolicyError(f"derivation of {step.fact} has {len(step.premises)} premises, "
                              f"rule needs {len(positives)}", rule.id)
        subst: Optional[dict[str, str]] = {}
        for lit, premise in zip(positives, step.premises):
            subst = _unify(lit, premise.fact, subst)
            if subst is None:
                raise PolicyError(f"premise {premise.fact} does not match {lit}", rule.id)
        if ground(rule.head, subst) != step.fact:
            raise PolicyError(f"rule does not conclude {step.fact}", rule.id)
        negs = [ground(lit, subst) for lit in rule.body if lit.negated]
        if tuple(negs) != step.absent or any(g in model for g in negs):
            raise PolicyError(f"negated premise violated for {step.fact}", rule.id)
        builtins = [ground(lit, subst) for lit in rule.body if lit.is_builtin]
        if tuple(builtins) != step.checks or not all(_gt(*g.args) for g in builtins):
            raise PolicyError(f"built-in check failed for {step.fact}", rule.id)
        for premise in step.premises:
            if premise.fact not in model:
                raise PolicyError(f"premise {premise.fact} is not in the model", rule.id)
