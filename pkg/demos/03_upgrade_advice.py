"""Checking a dependency's releases before upgrading to them.

A small registry holds four releases of ``jsonp``.  One of them claims to be
a minor release but removes a function.  ``advise`` recomputes the verdict
for each candidate and flags the release whose version number under-declares
its impact.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

from semvercalc import advise, load_index, parse_req, parse_version, resolve

RELEASES = {
    "1.0.0": "@impl(slow) fn parse(s: Str) -> Json  fn emit(j: Json) -> Str",
    "1.0.1": "@impl(fast) fn parse(s: Str) -> Json  fn emit(j: Json) -> Str",
    "1.1.0": "@impl(fast) fn parse(s: Str) -> Json",
    "1.2.0": "@impl(fast) fn parse(s: Str) -> Json  fn emit(j: Json) -> Str  fn validate(s: Str) -> Bool",
}

if __name__ == "__main__":
    with tempfile.TemporaryDirectory() as root:
        for version, body in RELEASES.items():
            Path(root, f"jsonp-{version}.sdl").write_text(f"component jsonp {version} {{ {body} }}\n")
        index = load_index(root)
        print("indexed:", ", ".join(map(str, index.versions("jsonp"))))
        print("1.0.*  resolves to", resolve(index, "jsonp", parse_req("1.0.*")))
        print("1.*    resolves to", resolve(index, "jsonp", parse_req("1.*")))
        print()
        for a in advise(index, "jsonp", parse_version("1.0.0"), parse_req("1.*")):
            status = "ok" if a.agreement else "UNDER-DECLARED"
            print(f"{a.from_version} -> {a.to_version}: computed {a.verdict!s:<6} "
                  f"declared {a.declared_bump!s:<6} {status}")
