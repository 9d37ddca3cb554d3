"""End-to-end calculation: parse, diff, scope, evaluate, decide, record."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .datalog import Derivation, Evaluation, evaluate, verdict
from .diff import ChangeFact, DiffConfig, diff, format_ratio
from .model import ComponentModel
from .provenance import Policy, ProvenanceRecord, Step, assemble, digest_text, facts_digest
from .sdl import parse_sdl, render_sdl
from .surface import ClosedWorld, OpenWorld, WorldMode, surface_facts
from .versions import ImpactLevel, SemVer

__all__ = ["Calculation", "extract_facts", "calculate", "calculate_text"]


@dataclass(frozen=True, eq=False)
class Calculation:
    old: ComponentModel
    new: ComponentModel
    changes: list[ChangeFact]
    facts: list[tuple[str, tuple[str, ...]]]
    evaluation: Evaluation
    level: ImpactLevel
    support: list[Derivation]
    record: ProvenanceRecord

    @property
    def recommended(self) -> SemVer:
        return self.record.new_version_recommended


def extract_facts(old: ComponentModel, new: ComponentModel, mode: WorldMode,
                  config: Optional[DiffConfig] = None) -> tuple[list[ChangeFact], list[tuple[str, tuple[str, ...]]]]:
    """Change facts plus ``inSurface`` facts: the full input to a policy."""
    changes = diff(old, new, config or DiffConfig())
    facts = [(c.kind.predicate, c.args) for c in changes] + surface_facts(old, new, mode)
    return changes, sorted(facts)


def calculate(old: ComponentModel, new: ComponentModel, policy: Optional[Policy] = None,
              mode: Optional[WorldMode] = None, config: Optional[DiffConfig] = None, *,
              old_text: Optional[str] = None, new_text: Optional[str] = None,
              annotations: Optional[Mapping[str, str]] = None) -> Calculation:
    """Run the calculator on two parsed models.

    ``old_text``/``new_text`` are the SDL sources, used only for digests; when
    omitted the canonical rendering of each model is digested instead.
    """
    policy = policy or Policy.bundled()
    mode = mode or OpenWorld()
    config = config or DiffConfig()
    changes, facts = extract_facts(old, new, mode, config)
    evaluation = evaluate(policy.rules, facts)
    level, support = verdict(evaluation, policy.rules)

    old_digest = digest_text(render_sdl(old))
    new_digest = digest_text(render_sdl(new))
    surface_params = [("mode", mode.tag)]
    if isinstance(mode, ClosedWorld):
        surface_params.append(("usage", digest_text("\n".join(sorted(mode.usage.used)))))
    steps = [
        Step("parse", (("old", digest_text(old_text if old_text is not None else render_sdl(old))),
                       ("new", digest_text(new_text if new_text is not None else render_sdl(new))))),
        Step("diff", (("old_model", old_digest), ("new_model", new_digest)),
             (("mode", str(config.mode)),
              ("runtime_threshold", format_ratio(config.runtime_ratio_threshold)),
              ("memory_threshold", format_ratio(config.memory_ratio_threshold)))),
        Step("surface", (("old_model", old_digest), ("new_model", new_digest)), tuple(surface_params)),
        Step("evaluate", (("facts", facts_digest(facts)), ("policy", policy.digest)),
             (("policy_name", policy.name),)),
    ]
    record = assemble(old, new, facts, evaluation, (level, support), policy, mode,
                      steps=steps, annotations=annotations)
    return Calculation(old, new, changes, facts, evaluation, level, support, record)


def calculate_text(old_text: str, new_text: str, policy: Optional[Policy] = None,
                   mode: Optional[WorldMode] = None, config: Optional[DiffConfig] = None) -> Calculation:
    return calculate(parse_sdl(old_text), parse_sdl(new_text), policy, mode, config,
                     old_text=old_text, new_text=new_text)

