from __future__ import annotations

import json
import threading

import pytest
from hypothesis import given, settings

from generators import model_pairs
from semvercalc.datalog import GroundFact, evaluate, verdict
from semvercalc.pipeline import calculate, calculate_text
from semvercalc.provenance import (
    FORMAT_ID,
    Policy,
    ProvenanceError,
    assemble,
    digest_text,
    parse_record,
    render,
    replay_record,
)
from semvercalc.sdl import parse_sdl
from semvercalc.surface import OpenWorld
from semvercalc.versions import ImpactLevel, SemVer

OLD = "component demo 1.2.3 { fn f(a: Int) -> Int fn g() -> Int }"
REMOVED = "component demo 1.2.3 { fn g() -> Int }"
IMPL_OLD = "component demo 1.2.3 { @impl(h1) fn f(a: Int) -> Int }"
IMPL_NEW = "component demo 1.2.3 { @impl(h2) fn f(a: Int) -> Int }"


def test_empty_diff_records_nothing():
    m = parse_sdl("component demo 1.2.3 { }")
    policy = Policy.bundled()
    ev = evaluate(policy.rules, [])
    record = assemble(m, m, [], ev, verdict(ev, policy.rules), policy, OpenWorld())
    assert record.facts == () and record.verdict is ImpactLevel.NONE
    assert record.new_version_recommended == SemVer(1, 2, 3)


def test_identical_models_record_only_surface_facts():
    calc = calculate_text(OLD, OLD)
    assert calc.level is ImpactLevel.NONE and calc.recommended == SemVer(1, 2, 3)
    assert {f.predicate for f in calc.record.facts} == {"inSurface"}


def test_removed_function_names_rule_and_premises():
    record = calculate_text(OLD, REMOVED).record
    assert record.verdict is ImpactLevel.MAJOR
    assert record.new_version_recommended == SemVer(2, 0, 0)
    (d,) = [d for d in record.supporting_derivations if d.fact == GroundFact("impact_major", ("f",))]
    assert d.rule_id == "removed_function"
    assert Policy.bundled().rules.rule(d.rule_id).level is ImpactLevel.MAJOR
    assert [p.fact for p in d.premises] == [GroundFact("functionRemoved", ("f",)),
                                            GroundFact("inSurface", ("f",))]


def test_impl_change_recommends_patch():
    record = calculate_text(IMPL_OLD, IMPL_NEW).record
    assert record.verdict is ImpactLevel.PATCH
    assert record.new_version_recommended == SemVer(1, 2, 4)


def test_text_render_of_none_verdict():
    text = render(calculate_text(OLD, OLD).record, "text")
    assert "verdict: none" in text.splitlines()


def test_structured_round_trip():
    record = calculate_text(OLD, REMOVED).record
    text = render(record, "structured")
    assert parse_record(text) == record
    assert render(parse_record(text), "structured") == text


def test_render_is_deterministic():
    a = render(calculate_text(OLD, REMOVED).record, "structured")
    b = render(calculate_text(OLD, REMOVED).record, "structured")
    assert a == b


def test_structured_keys_are_fixed():
    obj = json.loads(render(calculate_text(OLD, REMOVED).record, "structured"))
    assert obj["format"] == FORMAT_ID
    assert set(obj) == {"format", "component", "old_version", "new_version_recommended", "verdict",
                        "world_mode", "policy", "checks_performed", "facts",
                        "supporting_derivations", "annotations"}
    assert [s["step"] for s in obj["checks_performed"]] == ["parse", "diff", "surface", "evaluate"]


def test_replay_reproduces_verdict():
    record = calculate_text(OLD, REMOVED).record
    assert replay_record(record, Policy.bundled()) is ImpactLevel.MAJOR


def test_replay_rejects_other_policy():
    record = calculate_text(OLD, REMOVED).record
    with pytest.raises(ProvenanceError, match="digest"):
        replay_record(record, Policy.bundled("optimistic"))


def test_tampered_record_fails_replay():
    text = render(calculate_text(OLD, REMOVED).record, "structured")
    obj = json.loads(text)
    obj["facts"] = [f for f in obj["facts"] if f["predicate"] != "functionRemoved"]
    with pytest.raises(ProvenanceError):
        replay_record(parse_record(json.dumps(obj)), Policy.bundled())


def test_inconsistent_recommendation_is_rejected():
    obj = json.loads(render(calculate_text(OLD, REMOVED).record, "structured"))
    obj["new_version_recommended"] = "1.3.0"
    with pytest.raises(ProvenanceError, match="bump"):
        parse_record(json.dumps(obj))


def test_malformed_record():
    with pytest.raises(ProvenanceError):
        parse_record("{}")
    with pytest.raises(ProvenanceError):
        parse_record("not json")


def test_digest_ignores_line_endings():
    assert digest_text("a\r\nb\n") == digest_text("a\nb\n") == digest_text("a\rb\n")
    assert digest_text("a") != digest_text("b")


def test_identical_inputs_give_identical_digests():
    a = calculate_text(OLD, REMOVED).record.checks_performed
    b = calculate_text(OLD, REMOVED).record.checks_performed
    assert a == b


def test_annotations_are_recorded():
    calc = calculate(parse_sdl(OLD), parse_sdl(REMOVED), annotations={"author": "release bot"})
    text = render(calc.record, "text")
    assert "note author: release bot" in text
    assert parse_record(render(calc.record, "structured")).annotations == (("author", "release bot"),)


def test_assembly_is_thread_safe():
    results = []

    def work():
        results.append(render(calculate_text(OLD, REMOVED).record, "structured"))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


@settings(max_examples=60, deadline=None)
@given(model_pairs())
def test_random_records_replay_and_round_trip(pair):
    old, new = pair
    for name in ("pessimistic", "optimistic"):
        policy = Policy.bundled(name)
        record = calculate(old, new, policy).record
        assert replay_record(record, policy) is record.verdict
        text = render(record, "structured")
        assert render(parse_record(text), "structured") == text
