"""Recursive descent parser for the C-subset/EDL declaration language.

The accepted grammar is documented in docs/grammar.md.  ``parse`` turns source
text into a :class:`~padguard.model.Program`; ``format_program`` prints one
back in canonical form such that ``parse(format_program(p)) == p``.
"""

from __future__ import annotations

import bisect
import re
from typing import List, Optional, Tuple

from .errors import DeclSyntaxError, DuplicateName, RecursiveType, UnsupportedFeature
from .model import (
    SCALAR_SPELLINGS,
    Array,
    Direction,
    InterfaceDef,
    Member,
    Param,
    Program,
    Scalar,
    ScalarKind,
    Span,
    StructDef,
    StructRef,
    TypeExpr,
    struct_refs,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<directive>\#[^\n]*)
  | (?P<int>0[xX][0-9a-fA-F]+|[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}()\[\];,*:=])
    """,
    re.VERBOSE | re.DOTALL,
)

KEYWORDS = {"struct", "typedef", "trusted", "untrusted", "enclave", "void"}

# C words outside the subset; seeing one is a feature error, not a typo.
_UNSUPPORTED_WORDS = {
    "union": "unions",
    "enum": "enums",
    "unsigned": "multi-word scalar types (use uint*_t)",
    "signed": "multi-word scalar types (use int*_t)",
    "long": "multi-word scalar types (use int64_t)",
    "short": "multi-word scalar types (use int16_t)",
    "const": "type qualifiers",
    "volatile": "type qualifiers",
    "public": "EDL attributes",
    "include": "preprocessor directives",
    "from": "EDL imports",
    "import": "EDL imports",
}

RESERVED = KEYWORDS | set(SCALAR_SPELLINGS) | set(_UNSUPPORTED_WORDS)

_PACK_VALUES = (1, 2, 4, 8, 16)


class Token:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind: str, text: str, span: Span):
        self.kind = kind
        self.text = text
        self.span = span

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return repr(self.text)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.span})"


class _Positions:
    def __init__(self, text: str):
        self.starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def span(self, offset: int) -> Span:
        line = bisect.bisect_right(self.starts, offset) - 1
        return Span(line + 1, offset - self.starts[line] + 1, offset)


def tokenize(text: str) -> List[Token]:
    pos = _Positions(text)
    tokens: List[Token] = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            span = pos.span(i)
            if text.startswith("/*", i):
                raise DeclSyntaxError(span, {"'*/'"}, "unterminated comment")
            raise DeclSyntaxError(span, {"token"}, repr(text[i]))
        kind = m.lastgroup
        if kind == "int":
            tokens.append(Token("int", m.group(), pos.span(i)))
        elif kind == "ident":
            tokens.append(Token("ident", m.group(), pos.span(i)))
        elif kind == "directive":
            tokens.append(Token("#", m.group().rstrip(), pos.span(i)))
        elif kind == "punct":
            tokens.append(Token(m.group(), m.group(), pos.span(i)))
        i = m.end()
    tokens.append(Token("eof", "", pos.span(n)))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.structs: List[StructDef] = []
        self.interfaces: List[InterfaceDef] = []
        self._struct_names: dict = {}
        self._iface_names: set = set()

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("ident", text)

    def fail(self, *expected: str):
        t = self.tok
        if t.kind == "ident" and t.text in _UNSUPPORTED_WORDS:
            raise UnsupportedFeature(_UNSUPPORTED_WORDS[t.text], t.span)
        raise DeclSyntaxError(t.span, expected, t.describe())

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"'{text}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in RESERVED:
            self.fail(what)
        return self.advance()

    def integer(self) -> Tuple[int, Span]:
        t = self.tok
        if t.kind != "int":
            self.fail("integer")
        self.advance()
        return int(t.text, 0), t.span

    # -- top level ---------------------------------------------------------

    def parse_program(self) -> Program:
        self.items(top=True)
        self.expect_eof()
        return Program(tuple(self.structs), tuple(self.interfaces))

    def expect_eof(self):
        if self.tok.kind != "eof":
            self.fail("'struct'", "'typedef'", "'#'", "'trusted'", "'untrusted'", "end of input")

    def items(self, top: bool):
        while True:
            t = self.tok
            if t.kind == "#":
                pack = self.pragma_pack()
                if not (self.at("struct") or self.at("typedef")):
                    self.fail("'struct'", "'typedef'")
                self.struct_decl(pack)
            elif self.at("struct") or self.at("typedef"):
                self.struct_decl(None)
            elif self.at("trusted") or self.at("untrusted"):
                self.interface_block()
            elif top and self.at("enclave"):
                self.advance()
                self.expect("{")
                self.items(top=False)
                self.expect("}")
                self.expect(";")
            elif t.kind == "ident" and t.text in ("union", "enum"):
                self.fail()
            else:
                return

    def pragma_pack(self) -> int:
        tok = self.advance()
        body = tok.text[1:]
        if "//" in body:
            body = body[:body.index("//")]
        if not re.match(r"\s*pragma\b", body):
            raise UnsupportedFeature("preprocessor directives other than #pragma pack(n)",
                                     tok.span)
        if not re.match(r"\s*pragma\s+pack\b", body):
            raise UnsupportedFeature("pragmas other than pack(n)", tok.span)
        m = re.fullmatch(r"\s*pragma\s+pack\s*\(\s*(0[xX][0-9a-fA-F]+|[0-9]+)\s*\)\s*"
                         r"(?:/\*.*?\*/\s*)*", body)
        if m is None:
            raise UnsupportedFeature("only the #pragma pack(n) form is supported", tok.span)
        value = int(m.group(1), 0)
        if value not in _PACK_VALUES:
            raise UnsupportedFeature(f"pack value {value} (must be 1, 2, 4, 8 or 16)", tok.span)
        return value

    # -- structs -----------------------------------------------------------

    def struct_decl(self, pack: Optional[int]):
        start = self.tok.span
        typedef = False
        tag = None
        if self.at("typedef"):
            typedef = True
            self.advance()
            self.expect("struct")
            if self.tok.kind == "ident" and not self.at("{"):
                tag = self.ident("struct tag").text
        else:
            self.expect("struct")
            tag = self.ident("struct name").text
        members = self.member_block()
        if typedef:
            name_tok = self.ident("typedef name")
            name = name_tok.text
            if tag == name:
                tag = None
        else:
            name_tok = None
            name = tag
            tag = None
        self.expect(";")

        for alias in filter(None, (name, tag)):
            if alias in self._struct_names:
                raise DuplicateName("struct", alias, name_tok.span if name_tok else start)
        for m in members:
            for ref in struct_refs(m.type):
                if ref in (name, tag):
                    raise RecursiveType([name, name], m.span)
        sdef = StructDef(name, tuple(members), pack, typedef, tag, start)
        self._struct_names[name] = sdef
        if tag:
            self._struct_names[tag] = sdef
        self.structs.append(sdef)

    def member_block(self) -> List[Member]:
        open_tok = self.expect("{")
        members: List[Member] = []
        seen = set()
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("member declaration", "'}'")
            m = self.member()
            if m.name in seen:
                raise DuplicateName("member", m.name, m.span)
            seen.add(m.name)
            members.append(m)
        if not members:
            raise UnsupportedFeature("empty struct", open_tok.span)
        self.advance()
        return members

    def member(self) -> Member:
        start = self.tok.span
        if self.at("struct") and self.peek().kind == "{":
            raise UnsupportedFeature("anonymous struct members", start)
        base = self.type_spec(allow_void=True)
        t, name_tok = self.declarator(base, start)
        if self.tok.kind == ":":
            raise UnsupportedFeature("bitfields", self.tok.span)
        self.expect(";")
        return Member(name_tok.text, t, name_tok.span)

    def type_spec(self, allow_void: bool) -> Optional[TypeExpr]:
        """Parse a type specifier. Returns None for ``void``."""
        t = self.tok
        if self.at("struct"):
            self.advance()
            name = self.ident("struct name")
            return StructRef(name.text, t.span)
        if self.at("void"):
            if not allow_void:
                self.fail("type")
            self.advance()
            return None
        if t.kind == "ident" and t.text in SCALAR_SPELLINGS:
            self.advance()
            return Scalar(SCALAR_SPELLINGS[t.text], span=t.span)
        if t.kind == "ident" and t.text not in RESERVED:
            self.advance()
            return StructRef(t.text, t.span)
        self.fail("type")

    def pointers(self, base: Optional[TypeExpr], start: Span) -> Optional[TypeExpr]:
        while self.tok.kind == "*":
            self.advance()
            base = Scalar(ScalarKind.POINTER, base, start)
        return base

    def declarator(self, base: Optional[TypeExpr], start: Span) -> Tuple[TypeExpr, Token]:
        if self.tok.kind == "(":
            raise UnsupportedFeature("function pointers", self.tok.span)
        t = self.pointers(base, start)
        if t is None:
            raise UnsupportedFeature("void members", start)
        name_tok = self.ident("member name")
        if self.tok.kind == "(":
            raise UnsupportedFeature("function declarations in structs", self.tok.span)
        dims = []
        while self.tok.kind == "[":
            self.advance()
            count, span = self.integer()
            if count < 1:
                raise UnsupportedFeature("zero-length arrays", span)
            dims.append((count, span))
            self.expect("]")
        for count, span in reversed(dims):
            t = Array(t, count, start)
        return t, name_tok

    # -- interfaces --------------------------------------------------------

    def interface_block(self):
        kw = self.advance()
        direction = Direction.ECALL if kw.text == "trusted" else Direction.OCALL
        self.expect("{")
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("function declaration", "'}'")
            if self.tok.kind == "[":
                raise UnsupportedFeature("EDL attributes", self.tok.span)
            self.function(direction)
        self.advance()
        self.expect(";")

    def function(self, direction: Direction):
        start = self.tok.span
        ret = self.pointers(self.type_spec(allow_void=True), start)
        name_tok = self.ident("function name")
        self.expect("(")
        params: List[Param] = []
        if self.at("void") and self.peek().kind == ")":
            self.advance()
        elif self.tok.kind != ")":
            while True:
                params.append(self.param())
                if self.tok.kind != ",":
                    break
                self.advance()
        self.expect(")")
        self.expect(";")

        seen = set()
        for p in params:
            if p.name in seen:
                raise DuplicateName("parameter", p.name, p.span)
            seen.add(p.name)
        if name_tok.text in self._iface_names:
            raise DuplicateName("interface", name_tok.text, name_tok.span)
        self._iface_names.add(name_tok.text)
        self.interfaces.append(
            InterfaceDef(name_tok.text, direction, ret, tuple(params), start)
        )

    def param(self) -> Param:
        start = self.tok.span
        if self.tok.kind == "[":
            raise UnsupportedFeature("EDL attributes", start)
        base = self.type_spec(allow_void=True)
        t = self.pointers(base, start)
        if t is None:
            self.fail("'*'")
        name_tok = self.ident("parameter name")
        if self.tok.kind == "[":
            raise UnsupportedFeature("array parameters", self.tok.span)
        return Param(name_tok.text, t, name_tok.span)


def parse(source_text: str) -> Program:
    return Parser(source_text).parse_program()


# -- printing ---------------------------------------------------------------


def format_type(t: Optional[TypeExpr], name: str = "") -> str:
    """Render a declaration of ``name`` with type ``t`` in C syntax."""
    dims = ""
    while isinstance(t, Array):
        dims += f"[{t.count}]"
        t = t.element
    stars = ""
    while isinstance(t, Scalar) and t.kind is ScalarKind.POINTER:
        stars += "*"
        t = t.pointee
    if t is None:
        base = "void"
    elif isinstance(t, StructRef):
        base = t.name
    else:
        base = t.kind.c_name
    decl = f"{stars}{name}{dims}"
    if not decl:
        return base
    return f"{base} {decl}"


def format_struct(s: StructDef) -> str:
    lines = []
    if s.pack is not None:
        lines.append(f"#pragma pack({s.pack})")
    if s.typedef:
        head = f"typedef struct {s.tag} {{" if s.tag else "typedef struct {"
    else:
        head = f"struct {s.name} {{"
    lines.append(head)
    for m in s.members:
        lines.append(f"    {format_type(m.type, m.name)};")
    lines.append(f"}} {s.name};" if s.typedef else "};")
    return "\n".join(lines)


def format_signature(f: InterfaceDef) -> str:
    params = ", ".join(format_type(p.type, p.name) for p in f.params)
    return f"{format_type(f.return_type, f.name)}({params or 'void'})"


def format_program(program: Program) -> str:
    chunks = [format_struct(s) for s in program.structs]
    block: List[str] = []
    current = None
    for f in program.interfaces:
        if f.direction is not current:
            if block:
                block.append("};")
                chunks.append("\n".join(block))
            current = f.direction
            block = ["trusted {" if current is Direction.ECALL else "untrusted {"]
        block.append(f"    {format_signature(f)};")
    if block:
        block.append("};")
        chunks.append("\n".join(block))
    return "\n\n".join(chunks) + ("\n" if chunks else "")
