from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings

from generators import model_pairs, models
from semvercalc.diff import (
    PAIRED_KINDS,
    ChangeFact,
    DiffConfig,
    FactKind,
    FactsFileError,
    diff,
    format_ratio,
    license_direction,
    parse_facts,
    render_facts,
)
from semvercalc.model import LicenseClass
from semvercalc.sdl import parse_sdl

K = FactKind


def facts_between(old_body: str, new_body: str, config=None):
    old = parse_sdl(f"component demo 1.0.0 {{ {old_body} }}")
    new = parse_sdl(f"component demo 1.0.0 {{ {new_body} }}")
    return diff(old, new, config)


def kinds(facts):
    return {(f.kind, f.subject, f.detail) for f in facts}


def test_function_removed():
    assert kinds(facts_between("fn f(a: Int) -> Int", "")) == {
        (K.FUNCTION_REMOVED, "f", ()), (K.EXPORT_REMOVED, "f", ())}


def test_function_removed_with_named_exports_elsewhere():
    facts = facts_between("exports { g } fn f(a: Int) -> Int fn g() -> Int",
                          "exports { g } fn g() -> Int")
    assert kinds(facts) == {(K.FUNCTION_REMOVED, "f", ())}


def test_license_relaxed():
    facts = facts_between("meta { license weak_copyleft }", "meta { license permissive }")
    assert kinds(facts) == {(K.LICENSE_RELAXED, "demo", ("weak_copyleft", "permissive"))}


def test_type_kind_changed():
    facts = facts_between("interface type ClassVisitor", "abstract type ClassVisitor")
    assert kinds(facts) == {(K.TYPE_KIND_CHANGED, "ClassVisitor", ("interface", "abstract"))}


def test_pre_strengthened():
    facts = facts_between("@pre(a >= 0) fn f(a: Int) -> Int", "@pre(a >= 1) fn f(a: Int) -> Int")
    assert kinds(facts) == {(K.PRE_STRENGTHENED, "f", ())}


def test_identical_models_have_no_facts():
    body = "meta { license permissive dep json 1.* } @pre(a >= 0) fn f(a: Int) -> Int"
    assert facts_between(body, body) == []


def test_license_direction():
    assert license_direction(LicenseClass.WEAK_COPYLEFT, LicenseClass.PERMISSIVE) == "relaxed"
    assert license_direction(LicenseClass.PERMISSIVE, LicenseClass.STRONG_COPYLEFT) == "tightened"
    assert license_direction(LicenseClass.PERMISSIVE, LicenseClass.PERMISSIVE) == "same"


def test_parameter_changes():
    f = facts_between("fn f(a: Int, b: Str) -> Int", "fn f(b: Str, a: Int) -> Int")
    assert kinds(f) == {(K.PARAM_ORDER_CHANGED, "f", ())}
    f = facts_between("fn f(a: Int) -> Int", "fn f(a: Str, b: Int) -> Int")
    assert kinds(f) == {(K.PARAM_TYPE_CHANGED, "f", ("a", "Int", "Str")), (K.PARAM_ADDED, "f", ("b",))}
    f = facts_between("fn f(a: Int) -> Int", "fn f() -> Int")
    assert kinds(f) == {(K.PARAM_REMOVED, "f", ("a",))}


def test_return_changes():
    f = facts_between("fn f() -> Int", "fn f() -> Str")
    assert kinds(f) == {(K.RETURN_TYPE_CHANGED, "f", ("Int", "Str"))}
    f = facts_between("fn f() -> Int", "fn f() -> Int?")
    assert kinds(f) == {(K.RETURN_NULLABILITY_DROPPED, "f", ())}


def test_attribute_changes():
    assert kinds(facts_between("@pure fn f() -> Int", "fn f() -> Int")) == {(K.SIDE_EFFECT_ADDED, "f", ())}
    assert kinds(facts_between("fn f() -> Int", "@pure fn f() -> Int")) == {(K.SIDE_EFFECT_REMOVED, "f", ())}
    assert kinds(facts_between("fn f() -> Int", "@deprecated fn f() -> Int")) == {(K.DEPRECATED_ADDED, "f", ())}


def test_impl_changed_only_when_nothing_else_changed():
    a = "@impl(h1) fn f(a: Int) -> Int"
    assert kinds(facts_between(a, "@impl(h2) fn f(a: Int) -> Int")) == {(K.IMPL_CHANGED, "f", ())}
    assert kinds(facts_between(a, "@impl(h2) @pure fn f(a: Int) -> Int")) == {(K.SIDE_EFFECT_REMOVED, "f", ())}
    # a hash on only one side is not evidence of a change
    assert facts_between(a, "fn f(a: Int) -> Int") == []


def test_cost_thresholds():
    old = "@cost(runtime_ms=4, memory_kb=10) fn f() -> Int"
    assert facts_between(old, "@cost(runtime_ms=5, memory_kb=10) fn f() -> Int") == []
    f = facts_between(old, "@cost(runtime_ms=6, memory_kb=10) fn f() -> Int")
    assert kinds(f) == {(K.RUNTIME_INCREASED, "f", ("1.5",))}
    f = facts_between(old, "@cost(runtime_ms=5, memory_kb=10) fn f() -> Int",
                      DiffConfig(runtime_ratio_threshold=Fraction(11, 10)))
    assert kinds(f) == {(K.RUNTIME_INCREASED, "f", ("1.25",))}
    f = facts_between("@cost(runtime_ms=0, memory_kb=0) fn f() -> Int",
                      "@cost(runtime_ms=0, memory_kb=1) fn f() -> Int")
    assert kinds(f) == {(K.MEMORY_INCREASED, "f", ("inf",))}


def test_thresholds_must_exceed_one():
    with pytest.raises(ValueError):
        DiffConfig(runtime_ratio_threshold=Fraction(1))


def test_ratio_formatting_rounds_up():
    assert format_ratio(Fraction(4, 3)) == "1.333334"
    assert format_ratio(Fraction(10)) == "10"
    assert format_ratio(None) == "inf"


def test_platform_and_dependency_facts():
    old = "meta { platform jvm 11.0.0 platform linux 5.0.0 dep json 1.* dep log 2.* }"
    new = "meta { platform jvm 17.0.0 platform mac 12.0.0 dep json 2.* dep yaml 1.* }"
    assert kinds(facts_between(old, new)) == {
        (K.PLATFORM_STRENGTHENED, "jvm", ("11.0.0", "17.0.0")),
        (K.PLATFORM_STRENGTHENED, "linux", ("5.0.0", "none")),
        (K.PLATFORM_WEAKENED, "mac", ("none", "12.0.0")),
        (K.DEPENDENCY_REQ_CHANGED, "json", ("1.*", "2.*")),
        (K.DEPENDENCY_REMOVED, "log", ("2.*",)),
        (K.DEPENDENCY_ADDED, "yaml", ("1.*",)),
    }


def test_types_share_the_function_namespace():
    f = facts_between("interface type T fn g() -> Int", "fn T() -> Int fn g() -> Int")
    assert kinds(f) == {(K.FUNCTION_REMOVED, "T", ()), (K.FUNCTION_ADDED, "T", ())}


def test_rename_is_removal_plus_addition():
    f = facts_between("exports { keep } fn keep() -> Int fn old() -> Int",
                      "exports { keep } fn keep() -> Int fn new() -> Int")
    assert kinds(f) == {(K.FUNCTION_REMOVED, "old", ()), (K.FUNCTION_ADDED, "new", ())}


def test_facts_file_round_trip():
    facts = [("typeKindChanged", ("ClassVisitor", "interface", "abstract")),
             ("runtimeIncreased", ("f", "1.5")), ("inSurface", ("f",)),
             ("dependencyAdded", ("json", ">=1.0.0 <2.0.0"))]
    text = render_facts(facts)
    assert 'typeKindChanged("ClassVisitor", interface, abstract)' in text
    assert sorted(parse_facts(text)) == sorted(facts)


@pytest.mark.parametrize("line", ["functionRemoved(f, g)", "noSuchFact(f)", "functionRemoved(f", "inSurface()"])
def test_facts_file_errors_carry_line(line):
    with pytest.raises(FactsFileError) as err:
        parse_facts("inSurface(f)\n" + line + "\n")
    assert err.value.line == 2


def test_change_facts_order_and_equality():
    a = ChangeFact(K.FUNCTION_ADDED, "f")
    b = ChangeFact(K.FUNCTION_ADDED, "f")
    assert a == b and hash(a) == hash(b)
    assert str(ChangeFact(K.PARAM_ADDED, "f", ("x",))) == "paramAdded(f, x)"


@settings(max_examples=200, deadline=None)
@given(models())
def test_diff_is_reflexive(m):
    assert diff(m, m) == []


@settings(max_examples=200, deadline=None)
@given(model_pairs())
def test_paired_facts_are_symmetric(pair):
    a, b = pair
    forward, backward = diff(a, b), diff(b, a)
    back = {(f.kind, f.subject, tuple(sorted(f.detail))) for f in backward}
    for f in forward:
        if f.kind in PAIRED_KINDS:
            assert (PAIRED_KINDS[f.kind], f.subject, tuple(sorted(f.detail))) in back, f


@settings(max_examples=100, deadline=None)
@given(model_pairs())
def test_diff_is_deterministic_and_sorted(pair):
    a, b = pair
    facts = diff(a, b)
    assert facts == sorted(facts) == diff(a, b)
    assert len(set(facts)) == len(facts)


@settings(max_examples=100, deadline=None)
@given(model_pairs())
def test_fact_subjects_name_something(pair):
    a, b = pair
    known = ({d.name for m in pair for d in (*m.functions, *m.types)}
             | {a.name, b.name}
             | {p for m in pair for p, _ in m.metadata.platforms}
             | {d.name for m in pair for d in m.metadata.dependencies})
    for f in diff(a, b):
        assert f.subject in known
