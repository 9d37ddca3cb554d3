"""Provenance records: which checks ran, which facts were found, which rules fired.

Inputs and policies are identified by ``sha256:<hex>`` digests of their
canonical text: UTF-8, ``\\r\\n`` and ``\\r`` normalised to ``\\n``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .datalog import Derivation, Evaluation, GroundFact, PolicyError, RuleSet, evaluate, parse_rules, replay, verdict
from .diff import render_facts
from .policies import BUNDLED, policy_text
from .versions import ImpactLevel, SemVer, bump, parse_version

__all__ = [
    "FORMAT_ID",
    "ProvenanceError",
    "Policy",
    "Step",
    "ProvenanceRecord",
    "digest_text",
    "assemble",
    "render",
    "parse_record",
    "load_record",
    "replay_record",
    "render_derivation",
]

FORMAT_ID = "semvercalc-provenance/1"


class ProvenanceError(ValueError):
    pass


def digest_text(text: str) -> str:
    canonical = text.replace("\r\n", "\n").replace("\r", "\n")
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class Policy:
    """A parsed rule set together with the name and text it came from."""

    name: str
    text: str
    rules: RuleSet

    @property
    def digest(self) -> str:
        return digest_text(self.text)

    @classmethod
    def from_text(cls, text: str, name: str = "policy") -> Policy:
        return cls(name, text, parse_rules(text))

    @classmethod
    def load(cls, path: Union[str, Path]) -> Policy:
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), path.stem)

    @classmethod
    def bundled(cls, name: str = "pessimistic") -> Policy:
        return cls.from_text(policy_text(name), name)

    @classmethod
    def resolve(cls, source: Union[str, Path, None]) -> Policy:
        """A path, or the name of a bundled policy when no such file exists."""
        if source is None:
            return cls.bundled()
        if str(source) in BUNDLED and not Path(source).exists():
            return cls.bundled(str(source))
        return cls.load(source)


@dataclass(frozen=True)
class Step:
    """One check in the pipeline, with the digests of what it consumed."""

    name: str
    inputs: tuple[tuple[str, str], ...] = ()
    params: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(sorted(dict(self.inputs).items())))
        object.__setattr__(self, "params", tuple(sorted(dict(self.params).items())))


@dataclass(frozen=True)
class ProvenanceRecord:
    component: str
    old_version: SemVer
    new_version_recommended: SemVer
    verdict: ImpactLevel
    world_mode: str
    policy_name: str
    policy_digest: str
    checks_performed: tuple[Step, ...]
    facts: tuple[GroundFact, ...]
    supporting_derivations: tuple[Derivation, ...]
    annotations: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.new_version_recommended != bump(self.old_version, self.verdict):
            raise ProvenanceError(
                f"recommended {self.new_version_recommended} is not the {self.verdict} bump "
                f"of {self.old_version}")
        object.__setattr__(self, "annotations", tuple(sorted(dict(self.annotations).items())))


def assemble(old_model, new_model, facts: Iterable, evaluated: Evaluation,
             verdict_result: tuple[ImpactLevel, list[Derivation]], policy: Policy,
             mode, *, steps: Iterable[Step] = (),
             annotations: Optional[Mapping[str, str]] = None) -> ProvenanceRecord:
    """Build a record and check it against the evaluation it summarises."""
    level, support = verdict_result
    facts = tuple(sorted({GroundFact(p, tuple(a)) for p, a in facts}, key=str))
    if set(facts) != set(evaluated.inputs):
        raise ProvenanceError("fact list does not match the evaluated input facts")
    expected_level, _ = verdict(evaluated, policy.rules)
    if expected_level != level:
        raise ProvenanceError(f"verdict {level} disagrees with the evaluation ({expected_level})")
    if level is ImpactLevel.NONE and support:
        raise ProvenanceError("a 'none' verdict cannot have supporting derivations")
    for d in support:
        if policy.rules.impact_map.get(d.fact.predicate) != level:
            raise ProvenanceError(f"supporting fact {d.fact} is not at level {level}")
        try:
            replay(d, policy.rules, evaluated.facts, facts)
        except PolicyError as exc:
            raise ProvenanceError(f"derivation of {d.fact} does not replay: {exc}") from None
    if level is not ImpactLevel.NONE and not support:
        raise ProvenanceError(f"verdict {level} has no supporting derivation")
    return ProvenanceRecord(
        component=new_model.name,
        old_version=old_model.version,
        new_version_recommended=bump(old_model.version, level),
        verdict=level,
        world_mode=mode.tag,
        policy_name=policy.name,
        policy_digest=policy.digest,
        checks_performed=tuple(steps),
        facts=facts,
        supporting_derivations=tuple(sorted(support, key=lambda d: str(d.fact))),
        annotations=tuple((annotations or {}).items()),
    )


def replay_record(record: ProvenanceRecord, policy: Policy) -> ImpactLevel:
    """Re-evaluate the recorded facts under ``policy`` and confirm the verdict."""
    if policy.digest != record.policy_digest:
        raise ProvenanceError(f"policy digest {policy.digest} does not match the record "
                              f"({record.policy_digest})")
    evaluated = evaluate(policy.rules, record.facts)
    level, support = verdict(evaluated, policy.rules)
    if level != record.verdict:
        raise ProvenanceError(f"replay gives {level}, record says {record.verdict}")
    if tuple(sorted(support, key=lambda d: str(d.fact))) != record.supporting_derivations:
        raise ProvenanceError("replayed derivations differ from the recorded ones")
    return level


# rendering -----------------------------------------------------------------

def render_derivation(d: Derivation, indent: str = "") -> list[str]:
    how = "input" if d.is_input else f"rule {d.rule_id}"
    lines = [f"{indent}{d.fact}  [{how}]"]
    for p in d.premises:
        lines.extend(render_derivation(p, indent + "  "))
    for g in d.absent:
        lines.append(f"{indent}  not {g}  [absent]")
    for g in d.checks:
        lines.append(f"{indent}  {g}  [built-in]")
    return lines


def _render_text(r: ProvenanceRecord) -> str:
    lines = [
        f"component: {r.component}",
        f"old version: {r.old_version}",
        f"verdict: {r.verdict}",
        f"recommended version: {r.new_version_recommended}",
        f"world: {r.world_mode}",
        f"policy: {r.policy_name} {r.policy_digest}",
        "checks:",
    ]
    for step in r.checks_performed:
        parts = [f"{k}={v}" for k, v in step.inputs + step.params]
        lines.append(f"  {step.name}: " + " ".join(parts))
    lines.append(f"facts ({len(r.facts)}):")
    lines.extend(f"  {f}" for f in r.facts)
    lines.append("supporting derivations:" if r.supporting_derivations else "supporting derivations: none")
    for d in r.supporting_derivations:
        lines.extend(render_derivation(d, "  "))
    for k, v in r.annotations:
        lines.append(f"note {k}: {v}")
    return "\n".join(lines) + "\n"


def _fact_json(f: GroundFact) -> dict:
    return {"predicate": f.predicate, "args": list(f.args)}


def _derivation_json(d: Derivation) -> dict:
    return {
        "fact": _fact_json(d.fact),
        "rule": d.rule_id,
        "premises": [_derivation_json(p) for p in d.premises],
        "absent": [_fact_json(g) for g in d.absent],
        "checks": [_fact_json(g) for g in d.checks],
    }


def _to_json(r: ProvenanceRecord) -> dict:
    return {
        "format": FORMAT_ID,
        "component": r.component,
        "old_version": str(r.old_version),
        "new_version_recommended": str(r.new_version_recommended),
        "verdict": str(r.verdict),
        "world_mode": r.world_mode,
        "policy": {"name": r.policy_name, "digest": r.policy_digest},
        "checks_performed": [
            {"step": s.name, "inputs": dict(s.inputs), "params": dict(s.params)}
            for s in r.checks_performed
        ],
        "facts": [_fact_json(f) for f in r.facts],
        "supporting_derivations": [_derivation_json(d) for d in r.supporting_derivations],
        "annotations": dict(r.annotations),
    }


def render(record: ProvenanceRecord, format: str = "text") -> str:
    """``text``: an indented human-readable tree.  ``structured``: canonical JSON
    (sorted keys, two-space indent, trailing newline), byte-stable per record."""
    if format == "text":
        return _render_text(record)
    if format == "structured":
        return json.dumps(_to_json(record), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown render format {format!r}")


def _fact_from(obj: dict) -> GroundFact:
    return GroundFact(obj["predicate"], tuple(obj["args"]))


def _derivation_from(obj: dict) -> Derivation:
    return Derivation(
        _fact_from(obj["fact"]),
        obj["rule"],
        tuple(_derivation_from(p) for p in obj["premises"]),
        tuple(_fact_from(g) for g in obj["absent"]),
        tuple(_fact_from(g) for g in obj["checks"]),
    )


def parse_record(text: str) -> ProvenanceRecord:
    """Read the structured form back into a record."""
    try:
        obj = json.loads(text)
        if obj.get("format") != FORMAT_ID:
            raise ProvenanceError(f"not a {FORMAT_ID} record")
        return ProvenanceRecord(
            component=obj["component"],
            old_version=parse_version(obj["old_version"]),
            new_version_recommended=parse_version(obj["new_version_recommended"]),
            verdict=ImpactLevel.parse(obj["verdict"]),
            world_mode=obj["world_mode"],
            policy_name=obj["policy"]["name"],
            policy_digest=obj["policy"]["digest"],
            checks_performed=tuple(
                Step(s["step"], tuple(s["inputs"].items()), tuple(s["params"].items()))
                for s in obj["checks_performed"]
            ),
            facts=tuple(_fact_from(f) for f in obj["facts"]),
            supporting_derivations=tuple(_derivation_from(d) for d in obj["supporting_derivations"]),
            annotations=tuple(obj.get("annotations", {}).items()),
        )
    except (KeyError, TypeError, AttributeError, json.JSONDecodeError) as exc:
        raise ProvenanceError(f"malformed provenance record: {exc}") from None


def load_record(path: Union[str, Path]) -> ProvenanceRecord:
    return parse_record(Path(path).read_text(encoding="utf-8"))


def facts_digest(facts: Iterable) -> str:
    return digest_text(render_facts(facts))
