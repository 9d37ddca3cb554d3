from __future__ import annotations

import json
import subprocess
import sys

import pytest

from semvercalc.cli import EXIT_ERROR, EXIT_MAJOR, EXIT_MINOR, EXIT_OK, exit_code, main
from semvercalc.versions import ImpactLevel

BASE = "component demo 1.2.3 {\n  fn f(a: Int) -> Int\n  fn g() -> Int\n}\n"


@pytest.fixture
def files(tmp_path):
    def make(name: str, text: str):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return make


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_identical_files(files, capsys):
    old = files("old.sdl", BASE)
    code, out, _ = run(capsys, "check", old, old)
    assert code == EXIT_OK
    assert "verdict: none" in out.splitlines()


def test_removed_function_is_major(files, capsys):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("  fn f(a: Int) -> Int\n", ""))
    code, out, _ = run(capsys, "check", old, new)
    assert code == EXIT_MAJOR
    assert "recommended version: 2.0.0" in out


def test_added_function_is_minor(files, capsys):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("}\n", "  fn h() -> Int\n}\n"))
    code, out, _ = run(capsys, "check", old, new)
    assert code == EXIT_MINOR
    assert "recommended version: 1.3.0" in out


def test_exit_codes_follow_the_verdict():
    assert [exit_code(l) for l in ImpactLevel] == [0, 0, 2, 3]


def test_exit_zero_flag(files, capsys):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("  fn f(a: Int) -> Int\n", ""))
    assert run(capsys, "check", old, new, "--exit-zero")[0] == EXIT_OK


def test_parse_error_exits_one_with_location(files, capsys):
    old = files("old.sdl", BASE)
    bad = files("bad.sdl", "component demo 1.2 { }")
    code, out, err = run(capsys, "check", old, bad)
    assert code == EXIT_ERROR and out == ""
    assert "1:16: syntax error" in err


def test_missing_file_and_bad_flags(files, capsys):
    old = files("old.sdl", BASE)
    assert run(capsys, "check", old, old + ".missing")[0] == EXIT_ERROR
    assert run(capsys, "check", old, old, "--mode", "closed")[0] == EXIT_ERROR
    assert run(capsys, "check", old, old, "--runtime-threshold", "1")[0] == EXIT_ERROR
    assert run(capsys, "check", old, old, "--policy", "no-such-policy")[0] == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["check", old])
    assert exc.value.code == EXIT_ERROR


def test_structured_output_and_prov_file(files, capsys, tmp_path):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("  fn g() -> Int\n", ""))
    prov = tmp_path / "out.prov"
    code, out, _ = run(capsys, "check", old, new, "--output", "structured", "--prov-out", str(prov))
    assert code == EXIT_MAJOR
    assert json.loads(out)["verdict"] == "major"
    assert prov.read_text() == out


def test_explain_and_verify(files, capsys, tmp_path):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("  fn g() -> Int\n", ""))
    prov = tmp_path / "out.prov"
    run(capsys, "check", old, new, "--prov-out", str(prov))
    code, out, _ = run(capsys, "explain", str(prov), "--verify", "pessimistic")
    assert code == EXIT_OK
    assert "verdict: major" in out and "replay: verdict reproduced" in out
    assert run(capsys, "explain", str(prov), "--verify", "optimistic")[0] == EXIT_ERROR


def test_policy_from_environment(files, capsys, monkeypatch):
    old = files("old.sdl", "component s 1.0.0 { @pre(valid(a)) fn f(a: Int) -> Int }")
    new = files("new.sdl", "component s 1.0.0 { @pre(sorted(a)) fn f(a: Int) -> Int }")
    assert run(capsys, "check", old, new)[0] == EXIT_MAJOR
    monkeypatch.setenv("SEMVERCALC_POLICY", "optimistic")
    assert run(capsys, "check", old, new)[0] == EXIT_MINOR
    assert run(capsys, "check", old, new, "--policy", "pessimistic")[0] == EXIT_MAJOR


def test_world_modes(files, capsys):
    old = files("old.sdl", "component d 1.0.0 { exports { g } fn f() -> Int fn g() -> Int }")
    new = files("new.sdl", "component d 1.0.0 { exports { g } fn g() -> Int }")
    use = files("client.use", "g\n")
    assert run(capsys, "check", old, new)[0] == EXIT_MAJOR
    assert run(capsys, "check", old, new, "--mode", "exports")[0] == EXIT_OK
    assert run(capsys, "check", old, new, "--mode", "closed", "--usage", use)[0] == EXIT_OK


def test_facts_then_classify(files, capsys):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("  fn f(a: Int) -> Int\n", ""))
    code, facts_out, _ = run(capsys, "facts", old, new)
    assert code == EXIT_OK and "functionRemoved(f)" in facts_out
    facts = files("change.facts", facts_out)
    code, out, _ = run(capsys, "classify", facts, "--version", "1.2.3")
    assert code == EXIT_MAJOR
    assert out.splitlines()[:2] == ["verdict: major", "recommended version: 2.0.0"]
    code, out, _ = run(capsys, "classify", facts, "--output", "structured")
    assert json.loads(out)["verdict"] == "major"


def test_classify_reports_bad_facts(files, capsys):
    bad = files("bad.facts", "inSurface(f)\nfunctionRemoved(f, g)\n")
    code, _, err = run(capsys, "classify", bad)
    assert code == EXIT_ERROR and "line 2" in err


def test_pipe_through_processes(files):
    old = files("old.sdl", BASE)
    new = files("new.sdl", BASE.replace("}\n", "  fn h() -> Int\n}\n"))
    cli = [sys.executable, "-m", "semvercalc.cli"]
    facts = subprocess.run(cli + ["facts", old, new], capture_output=True, text=True, check=True)
    classify = subprocess.run(cli + ["classify", "-"], input=facts.stdout, capture_output=True, text=True)
    assert classify.returncode == EXIT_MINOR
    assert classify.stdout.startswith("verdict: minor")


def test_bump(capsys):
    assert run(capsys, "bump", "1.2.3", "major")[1] == "2.0.0\n"
    assert run(capsys, "bump", "1.2", "major")[0] == EXIT_ERROR


def test_surface(files, capsys):
    sdl = files("m.sdl", "component d 1.0.0 { exports { f } fn f() -> Int fn g() -> Int internal fn h() -> Int }")
    use = files("u.use", "f\ng\n")
    code, out, _ = run(capsys, "surface", sdl, "--usage", use)
    assert code == EXIT_OK
    assert out.splitlines() == ["total functions: 3", "public functions: 2",
                                "exported functions: 1", "used functions: 1"]


def test_resolve_and_advise(tmp_path, capsys):
    reg = tmp_path / "registry"
    reg.mkdir()
    for v, body in [("1.0.0", "fn f() -> Int fn g() -> Int"), ("1.1.0", "fn f() -> Int"),
                    ("1.2.0", "fn f() -> Int fn g() -> Int fn h() -> Int")]:
        (reg / f"lib-{v}.sdl").write_text(f"component lib {v} {{ {body} }}")
    (reg / "README.sdl").write_text("not a component")
    code, out, err = run(capsys, "resolve", str(reg), "lib", "1.*")
    assert (code, out) == (EXIT_OK, "1.2.0\n")
    assert "warning:" in err
    code, out, _ = run(capsys, "advise", str(reg), "lib", "1.0.0", ">=1.0.0 <2.0.0")
    assert out.splitlines() == ["1.0.0 -> 1.1.0: verdict major, declared minor, UNDER-DECLARED",
                                "1.0.0 -> 1.2.0: verdict minor, declared minor, ok"]
    code, out, _ = run(capsys, "advise", str(reg), "lib", "1.0.0", "1.*", "--output", "structured")
    assert [row["agreement"] for row in json.loads(out)] == [False, True]
    assert run(capsys, "resolve", str(reg), "lib", "3.*")[0] == EXIT_ERROR


def test_lint(files, capsys):
    clean = files("clean.sdl", BASE)
    assert run(capsys, "lint", clean) == (EXIT_OK, "", "")
    dirty = files("dirty.sdl", "component d 1.0.0 { exports { f, h } @pre(a > 3, a < 4) fn f(a: Int) -> Int "
                               "fn g() -> Int internal fn h() -> Int }")
    use = files("u.use", "g\n")
    code, out, _ = run(capsys, "lint", dirty, "--usage", use)
    assert code == EXIT_MINOR
    assert out.splitlines() == [
        "f: precondition is unsatisfiable: a < 4, a > 3",
        "exports: h is internal and is not visible to clients",
        "exports: f is not used by any client",
    ]
