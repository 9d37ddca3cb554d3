"""Semantic version calculator.

Compares two Surface Description Language files, turns the differences
into facts, and lets a Datalog policy decide the version bump.
"""

from __future__ import annotations

from .contracts import Contract, Mode, Relation, compare_post, compare_pre, implies, parse_contract
from .datalog import Derivation, Evaluation, PolicyError, RuleSet, evaluate, parse_rules, replay, verdict
from .diff import ChangeFact, DiffConfig, FactKind, diff, parse_facts, render_facts
from .model import ComponentModel, UsageProfile, load_usage, surface_report
from .pipeline import Calculation, calculate, calculate_text, extract_facts
from .provenance import Policy, ProvenanceRecord, parse_record, render, replay_record
from .registry import advise, load_index, resolve
from .sdl import SdlError, load_sdl, parse_sdl, render_sdl
from .surface import ClosedWorld, DeclaredExports, OpenWorld
from .versions import ImpactLevel, SemVer, bump, matches, parse_req, parse_version

__version__ = "0.1.0"
