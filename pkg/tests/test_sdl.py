from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings

from generators import models
from semvercalc.contracts import Cmp, Contract, NonNull
from semvercalc.model import (
    AllPublic,
    CostProfile,
    LicenseClass,
    ModelError,
    Named,
    TypeKind,
    TypeRef,
    Visibility,
    parse_usage,
    surface_report,
    union_usage,
)
from semvercalc.sdl import SdlError, parse_sdl, render_sdl, tokenize
from semvercalc.versions import SemVer, WildcardPatch


def test_minimal_component():
    m = parse_sdl("component demo 1.0.0 { fn f(a: Int) -> Int }")
    assert m.name == "demo" and m.version == SemVer(1, 0, 0)
    (f,) = m.functions
    assert f.name == "f" and f.visibility is Visibility.PUBLIC
    assert not f.precondition and not f.postcondition
    assert isinstance(m.exports, AllPublic)


def test_unresolved_export_is_located():
    with pytest.raises(SdlError) as err:
        parse_sdl("component demo 1.0.0 { exports { f } fn g() -> Int }")
    assert err.value.kind == "unresolved-export"
    assert (err.value.line, err.value.col) == (1, 24)


def test_precondition_atom():
    m = parse_sdl("component demo 1.0.0 { @pre(a >= 0) fn f(a: Int) -> Int }")
    assert m.functions[0].precondition == Contract([Cmp("a", ">=", 0)])


def test_full_grammar():
    text = """
    # a comment
    component demo 2.1.0 {
      meta { license weak_copyleft  platform jvm 11.0.0  dep json 2.3.* }
      exports { parse, Node }
      interface type Node
      internal concrete type Cache
      @pure
      @deprecated
      @impl(sha256:abc123)
      @cost(runtime_ms=2.5, memory_kb=100)
      @pre(a >= 0, a < 10, nonnull(s))
      @post(nonnull(result), sorted(result))
      fn parse(a: Int, s: Str?) -> Node?
      internal fn helper() -> Unit
    }
    """
    m = parse_sdl(text)
    assert m.metadata.license is LicenseClass.WEAK_COPYLEFT
    assert m.metadata.platform_map() == {"jvm": SemVer(11, 0, 0)}
    assert m.metadata.dependency_map() == {"json": WildcardPatch(2, 3)}
    assert m.exports == Named({"parse", "Node"})
    assert m.type("Node").kind is TypeKind.INTERFACE
    assert m.type("Cache").visibility is Visibility.INTERNAL
    f = m.function("parse")
    assert f.pure and f.deprecated and f.impl_hash == "sha256:abc123"
    assert f.cost == CostProfile(Fraction(5, 2), Fraction(100))
    assert f.params[1].type == TypeRef("Str", True)
    assert f.return_type == TypeRef("Node", True)
    assert NonNull("s") in f.precondition.atoms
    assert m.function("helper").visibility is Visibility.INTERNAL


@pytest.mark.parametrize("text, kind", [
    ("component demo 1.0.0 { fn f() -> Int fn f() -> Int }", "duplicate"),
    ("component demo 1.0.0 { fn f() -> Int interface type f }", "duplicate"),
    ("component demo 1.0.0 { fn f() -> Int $ }", "lexical"),
    ("component demo 1.2 { }", "syntax"),
    ("component demo 1.0.0 { fn f( -> Int }", "syntax"),
    ("component demo 1.0.0 { @pre(b > 0) fn f(a: Int) -> Int }", "contract"),
    ("component demo 1.0.0 { @pre(result > 0) fn f(a: Int) -> Int }", "contract"),
    ("component demo 1.0.0 { @pre(a >> 0) fn f(a: Int) -> Int }", "contract"),
    ("component demo 1.0.0 { fn f(a: Int, a: Str) -> Int }", "duplicate"),
    ("component demo 1.0.0 { @cost(runtime_ms=-1, memory_kb=0) fn f() -> Int }", "syntax"),
    ("component demo 1.0.0 { meta { license gpl } }", "syntax"),
    ("component demo 1.0.0 { } trailing", "syntax"),
])
def test_errors_carry_kind_and_location(text, kind):
    with pytest.raises(SdlError) as err:
        parse_sdl(text)
    assert err.value.kind == kind
    assert err.value.line >= 1 and err.value.col >= 1
    assert str(err.value).startswith(f"{err.value.line}:{err.value.col}: {kind} error")


def test_error_location_spans_lines():
    with pytest.raises(SdlError) as err:
        parse_sdl("component demo 1.0.0 {\n  fn f() -> Int\n  fn f() -> Int\n}")
    assert (err.value.line, err.value.col) == (3, 3)
    assert "first declared at 2:3" in str(err.value)


def test_version_error_names_segment():
    with pytest.raises(SdlError, match="missing patch segment"):
        parse_sdl("component demo 1.2 { }")


def test_tokenize_keeps_impl_body_whole():
    tokens = tokenize("@impl(sha1:ab/cd+ef=) fn")
    assert tokens[0].kind == "IMPL" and tokens[0].value == "sha1:ab/cd+ef="


def test_render_is_canonical():
    a = parse_sdl("component d 1.0.0 { fn g() -> Int interface type T }")
    b = parse_sdl("component d 1.0.0 {\n interface type T\n\n fn g() -> Int\n}")
    assert render_sdl(a) == render_sdl(b)


@settings(max_examples=150)
@given(models())
def test_render_parse_round_trip(model):
    assert parse_sdl(render_sdl(model)) == model


@settings(max_examples=60)
@given(models())
def test_render_is_a_fixpoint(model):
    text = render_sdl(model)
    assert render_sdl(parse_sdl(text)) == text


# model -----------------------------------------------------------------------

FOUR = """component demo 1.0.0 {
  exports { f }
  fn f() -> Int
  fn g() -> Int
  fn h() -> Int
  internal fn i() -> Int
}"""


def test_surface_report_counts():
    m = parse_sdl(FOUR)
    r = surface_report(m)
    assert (r.total_functions, r.public_functions, r.exported_functions) == (4, 3, 1)
    assert r.used_functions is None


def test_surface_report_all_public():
    m = parse_sdl(FOUR.replace("  exports { f }\n", ""))
    assert surface_report(m).exported_functions == 3


def test_surface_report_usage_counts_two_of_ten():
    body = "\n".join(f"fn f{i}() -> Int" for i in range(10))
    m = parse_sdl(f"component demo 1.0.0 {{ {body} }}")
    usage = parse_usage("f3\nf7\n# other libraries\nunrelated\n")
    assert surface_report(m, usage).used_functions == 2


def test_exporting_an_internal_name_does_not_expose_it():
    m = parse_sdl(FOUR.replace("exports { f }", "exports { f, i }"))
    assert m.exported_names() == {"f"}


def test_usage_profiles_union():
    u = union_usage([parse_usage("a\nb"), parse_usage("b\nc")])
    assert u.used == {"a", "b", "c"}


def test_usage_rejects_bad_identifiers():
    with pytest.raises(ModelError):
        parse_usage("ok\nnot valid\n")


def test_named_exports_must_not_be_empty():
    with pytest.raises(ModelError):
        Named([])


def test_license_order_is_protectiveness():
    order = [LicenseClass.parse(x) for x in
             ("public_domain", "permissive", "weak_copyleft", "strong_copyleft", "proprietary")]
    assert order == sorted(order)
