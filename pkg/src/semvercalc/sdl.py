"""Surface Description Language: lexer, recursive-descent parser, renderer.

Example::

    component demo 1.0.0 {
      meta { license permissive  platform jvm 11.0.0  dep json 2.* }
      exports { parse }
      interface type Visitor
      @pure
      @pre(a >= 0)
      @post(nonnull(result))
      fn parse(a: Int, s: Str?) -> Node
    }
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .contracts import Atom, Cmp, Contract, NonNull, Opaque, format_number
from .model import (
    RESULT,
    AllPublic,
    ComponentModel,
    CostProfile,
    Dependency,
    FunctionDecl,
    LicenseClass,
    Metadata,
    Named,
    Param,
    TypeDecl,
    TypeKind,
    TypeRef,
    Visibility,
)
from .versions import SemVer, VersionError, VersionReq, parse_req, parse_version

__all__ = ["SdlError", "Token", "tokenize", "parse_sdl", "load_sdl", "render_sdl"]

KIND_WORDS = {k.value: k for k in TypeKind}
VIS_WORDS = {v.value: v for v in Visibility}
CMP_OPS = ("<=", ">=", "==", "!=", "<", ">")
IMPL_TOKEN = re.compile(r"[A-Za-z0-9_.:+/=\-]+\Z")


class SdlError(ValueError):
    """A located SDL error.  ``kind`` is one of ``lexical``, ``syntax``,
    ``duplicate``, ``unresolved-export`` or ``contract``."""

    def __init__(self, kind: str, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {kind} error: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUM OP IMPL ATTR EOF
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<impl>@impl[ \t]*\([ \t]*(?P<impl_body>[^)\n]*?)[ \t]*\))
  | (?P<attr>@[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<num>-?[0-9]+(?:\.(?:[0-9]+|\*))*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|<|>|[{}(),:?*=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise SdlError("lexical", f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup if m.lastgroup != "impl_body" else "impl"
        value = m.group()
        if kind == "impl":
            body = m.group("impl_body")
            if not IMPL_TOKEN.match(body):
                raise SdlError("lexical", f"malformed @impl token {body!r}", line, col)
            tokens.append(Token("IMPL", body, line, col))
        elif kind == "attr":
            tokens.append(Token("ATTR", value[1:], line, col))
        elif kind == "arrow":
            tokens.append(Token("OP", value, line, col))
        elif kind != "ws":
            tokens.append(Token(kind.upper(), value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None, kind: str = "syntax") -> SdlError:
        tok = tok or self.tok
        return SdlError(kind, message, tok.line, tok.col)

    def at(self, value: str, kind: Optional[str] = None) -> bool:
        return self.tok.value == value and (kind is None or self.tok.kind == kind)

    def expect(self, value: str) -> Token:
        if self.tok.value != value or self.tok.kind in ("NUM", "EOF"):
            found = self.tok.value or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            found = self.tok.value or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def version(self) -> SemVer:
        tok = self.tok
        if tok.kind != "NUM":
            raise self.error(f"expected version, found {tok.value or 'end of input'!r}")
        self.advance()
        try:
            return parse_version(tok.value)
        except VersionError as exc:
            raise self.error(str(exc), tok) from None

    def number(self) -> Fraction:
        tok = self.tok
        if tok.kind != "NUM" or not re.fullmatch(r"-?[0-9]+(?:\.[0-9]+)?", tok.value):
            raise self.error(f"expected number, found {tok.value or 'end of input'!r}")
        self.advance()
        return Fraction(Decimal(tok.value))

    def requirement(self) -> VersionReq:
        tok = self.tok
        try:
            if tok.kind == "OP" and tok.value == ">=":
                self.advance()
                low = self.version()
                if not self.at("<", "OP"):
                    raise self.error("expected '<' upper bound in range")
                self.advance()
                high = self.version()
                return parse_req(f">={low} <{high}")
            if tok.kind != "NUM":
                raise self.error(f"expected version requirement, found {tok.value or 'end of input'!r}")
            self.advance()
            return parse_req(tok.value)
        except VersionError as exc:
            raise self.error(str(exc), tok) from None

    # grammar

    def component(self) -> ComponentModel:
        self.expect("component")
        name = self.ident("component name").value
        version = self.version()
        self.expect("{")
        metadata = Metadata()
        if self.at("meta", "IDENT") and self.peek().value == "{":
            metadata = self.metadata()
        exports = AllPublic()
        exports_tok = None
        if self.at("exports", "IDENT") and self.peek().value in ("{", "*"):
            exports_tok = self.tok
            exports = self.exports()
        functions: list[FunctionDecl] = []
        types: list[TypeDecl] = []
        seen: dict[str, Token] = {}
        while not self.at("}", "OP"):
            if self.tok.kind == "EOF":
                raise self.error("expected '}' closing component")
            start = self.tok
            decl = self.declaration()
            if decl.name in seen:
                first = seen[decl.name]
                raise self.error(
                    f"duplicate declaration {decl.name!r} (first declared at {first.line}:{first.col})",
                    start, kind="duplicate")
            seen[decl.name] = start
            (functions if isinstance(decl, FunctionDecl) else types).append(decl)
        self.expect("}")
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.value!r} after component")
        if isinstance(exports, Named):
            for export_name in sorted(exports.names):
                if export_name not in seen:
                    raise self.error(f"export of undeclared name {export_name!r}",
                                     exports_tok, kind="unresolved-export")
        return ComponentModel(name, version, metadata, tuple(functions), tuple(types), exports)

    def metadata(self) -> Metadata:
        self.expect("meta")
        self.expect("{")
        license_ = None
        platforms: dict[str, SemVer] = {}
        deps: dict[str, VersionReq] = {}
        if self.at("license", "IDENT"):
            self.advance()
            tok = self.ident("license class")
            try:
                license_ = LicenseClass.parse(tok.value)
            except ValueError as exc:
                raise self.error(str(exc), tok) from None
        while self.at("platform", "IDENT"):
            self.advance()
            tok = self.ident("platform name")
            if tok.value in platforms:
                raise self.error(f"duplicate platform {tok.value!r}", tok, kind="duplicate")
            platforms[tok.value] = self.version()
        while self.at("dep", "IDENT"):
            self.advance()
            tok = self.ident("dependency name")
            if tok.value in deps:
                raise self.error(f"duplicate dependency {tok.value!r}", tok, kind="duplicate")
            deps[tok.value] = self.requirement()
        self.expect("}")
        return Metadata(
            license_,
            tuple(platforms.items()),
            tuple(Dependency(n, r) for n, r in deps.items()),
        )

    def exports(self) -> Union[AllPublic, Named]:
        self.expect("exports")
        if self.at("*", "OP"):
            self.advance()
            return AllPublic()
        self.expect("{")
        names = [self.ident("exported name").value]
        while self.at(",", "OP"):
            self.advance()
            names.append(self.ident("exported name").value)
        self.expect("}")
        return Named(names)

    def declaration(self) -> Union[FunctionDecl, TypeDecl]:
        attrs: list[tuple[Token, object]] = []
        while self.tok.kind in ("ATTR", "IMPL"):
            attrs.append(self.attribute())
        visibility = Visibility.PUBLIC
        if self.tok.kind == "IDENT" and self.tok.value in VIS_WORDS and self.peek().kind == "IDENT":
            visibility = VIS_WORDS[self.advance().value]
        if self.tok.kind == "IDENT" and self.tok.value in KIND_WORDS and self.peek().value == "type":
            if attrs:
                raise self.error("attributes are only allowed on functions", attrs[0][0])
            kind = KIND_WORDS[self.advance().value]
            self.advance()
            return TypeDecl(self.ident("type name").value, kind, visibility)
        if not self.at("fn", "IDENT"):
            raise self.error(f"expected declaration, found {self.tok.value or 'end of input'!r}")
        return self.function(attrs, visibility)

    def attribute(self) -> tuple[Token, object]:
        tok = self.advance()
        if tok.kind == "IMPL":
            return tok, ("impl", tok.value)
        name = tok.value
        if name in ("pure", "deprecated"):
            return tok, (name, True)
        if name == "cost":
            self.expect("(")
            values = {}
            for i, key in enumerate(("runtime_ms", "memory_kb")):
                if i:
                    self.expect(",")
                self.expect(key)
                self.expect("=")
                values[key] = self.number()
            self.expect(")")
            if any(v < 0 for v in values.values()):
                raise self.error("@cost values must be non-negative", tok)
            return tok, ("cost", CostProfile(**values))
        if name in ("pre", "post"):
            self.expect("(")
            atoms = [self.atom()]
            while self.at(",", "OP"):
                self.advance()
                atoms.append(self.atom())
            self.expect(")")
            return tok, (name, atoms)
        raise self.error(f"unknown attribute @{name}", tok)

    def atom(self) -> tuple[Token, Atom]:
        start = self.tok
        if start.kind != "IDENT":
            raise self.error(f"malformed contract atom at {start.value or 'end of input'!r}",
                             kind="contract")
        self.advance()
        if self.at("(", "OP"):
            self.advance()
            if self.tok.kind != "IDENT":
                raise self.error("malformed contract atom: expected a name", kind="contract")
            var = self.advance().value
            self.expect(")")
            if start.value == "nonnull":
                return start, NonNull(var)
            return start, Opaque(start.value, var)
        if self.tok.kind == "OP" and self.tok.value in CMP_OPS:
            op = self.advance().value
            num_tok = self.tok
            try:
                k = self.number()
            except SdlError:
                raise self.error(f"malformed contract atom: expected number after {op!r}",
                                 num_tok, kind="contract") from None
            return start, Cmp(start.value, op, k)
        raise self.error(f"malformed contract atom starting at {start.value!r}", start,
                         kind="contract")

    def function(self, attrs: list, visibility: Visibility) -> FunctionDecl:
        self.expect("fn")
        name = self.ident("function name").value
        self.expect("(")
        params: list[Param] = []
        seen: set[str] = set()
        if not self.at(")", "OP"):
            while True:
                ptok = self.ident("parameter name")
                if ptok.value in seen:
                    raise self.error(f"duplicate parameter {ptok.value!r}", ptok, kind="duplicate")
                seen.add(ptok.value)
                self.expect(":")
                params.append(Param(ptok.value, self.typeref()))
                if not self.at(",", "OP"):
                    break
                self.advance()
        self.expect(")")
        self.expect("->")
        return_type = self.typeref()

        fields: dict[str, object] = {}
        pre: list[Atom] = []
        post: list[Atom] = []
        for tok, (key, value) in attrs:
            if key in ("pre", "post"):
                for atom_tok, atom in value:
                    ok = atom.var in seen or (key == "post" and atom.var == RESULT)
                    if not ok:
                        raise self.error(
                            f"contract atom {atom} references unknown name {atom.var!r}",
                            atom_tok, kind="contract")
                    target = pre if key == "pre" else post
                    if atom not in target:
                        target.append(atom)
                continue
            if key in fields:
                raise self.error(f"repeated attribute @{key}", tok)
            fields[key] = value
        return FunctionDecl(
            name=name,
            params=tuple(params),
            return_type=return_type,
            visibility=visibility,
            pure=bool(fields.get("pure", False)),
            deprecated=bool(fields.get("deprecated", False)),
            impl_hash=fields.get("impl"),
            cost=fields.get("cost"),
            precondition=Contract(pre),
            postcondition=Contract(post),
        )

    def typeref(self) -> TypeRef:
        base = self.ident("type name").value
        nullable = False
        if self.at("?", "OP"):
            self.advance()
            nullable = True
        return TypeRef(base, nullable)


def parse_sdl(text: str) -> ComponentModel:
    """Parse SDL text into a :class:`ComponentModel`.

    Raises :class:`SdlError` carrying the line and column of the problem.
    """
    return _Parser(text).component()


def load_sdl(path: Union[str, Path]) -> ComponentModel:
    return parse_sdl(Path(path).read_text(encoding="utf-8"))


def _render_function(fn: FunctionDecl, indent: str) -> list[str]:
    lines = []
    if fn.pure:
        lines.append("@pure")
    if fn.deprecated:
        lines.append("@deprecated")
    if fn.impl_hash is not None:
        lines.append(f"@impl({fn.impl_hash})")
    if fn.cost is not None:
        lines.append(f"@cost(runtime_ms={format_number(fn.cost.runtime_ms)}, "
                     f"memory_kb={format_number(fn.cost.memory_kb)})")
    if fn.precondition:
        lines.append(f"@pre({fn.precondition})")
    if fn.postcondition:
        lines.append(f"@post({fn.postcondition})")
    vis = "internal " if fn.visibility is Visibility.INTERNAL else ""
    params = ", ".join(f"{p.name}: {p.type}" for p in fn.params)
    lines.append(f"{vis}fn {fn.name}({params}) -> {fn.return_type}")
    return [indent + line for line in lines]


def render_sdl(model: ComponentModel) -> str:
    """Emit canonical SDL; ``parse_sdl(render_sdl(m)) == m``."""
    out = [f"component {model.name} {model.version} {{"]
    meta = model.metadata
    if meta.license is not None or meta.platforms or meta.dependencies:
        out.append("  meta {")
        if meta.license is not None:
            out.append(f"    license {meta.license}")
        out.extend(f"    platform {name} {ver}" for name, ver in meta.platforms)
        out.extend(f"    dep {dep.name} {dep.req}" for dep in meta.dependencies)
        out.append("  }")
    if isinstance(model.exports, Named):
        out.append(f"  exports {model.exports}")
    for ty in model.types:
        vis = "internal " if ty.visibility is Visibility.INTERNAL else ""
        out.append(f"  {vis}{ty.kind} type {ty.name}")
    for fn in model.functions:
        out.extend(_render_function(fn, "  "))
    out.append("}")
    return "\n".join(out) + "\n"
