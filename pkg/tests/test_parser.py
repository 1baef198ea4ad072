import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TEST_STRUCT
from oracles import random_program
from padguard import (
    DeclSyntaxError,
    DuplicateName,
    PadguardError,
    RecursiveType,
    UnsupportedFeature,
    format_program,
    parse,
)
from padguard.model import Array, Direction, Scalar, ScalarKind, StructRef


def test_test_struct_decl():
    prog = parse(TEST_STRUCT)
    assert len(prog.structs) == 1
    s = prog.structs[0]
    assert s.name == "test_struct"
    assert s.pack is None
    assert [m.name for m in s.members] == ["val1", "val2", "val3"]
    assert [m.type.kind for m in s.members] == [ScalarKind.U64, ScalarKind.U8, ScalarKind.U64]


def test_empty_input():
    prog = parse("")
    assert prog.structs == () and prog.interfaces == ()


def test_only_comments():
    assert parse("// nothing\n/* still nothing */\n").structs == ()


def test_self_reference_by_value_rejected():
    with pytest.raises(RecursiveType) as exc:
        parse("struct S { struct S x; };")
    assert exc.value.cycle == ["S", "S"]


def test_self_reference_through_pointer_is_fine():
    prog = parse("struct node { uint32_t v; struct node *next; };")
    nxt = prog.structs[0].members[1].type
    assert nxt.kind is ScalarKind.POINTER and nxt.pointee == StructRef("node")


def test_sample_program(sample_text):
    prog = parse(sample_text)
    ecall, ocall = prog.interfaces
    assert ecall.direction is Direction.ECALL
    assert ecall.return_type == StructRef("test_struct")
    assert [p.name for p in ecall.params] == ["encrypted_input", "input_size"]
    assert ecall.params[0].type == Scalar(ScalarKind.POINTER, Scalar(ScalarKind.CHAR))
    assert ocall.direction is Direction.OCALL
    assert ocall.return_type is None
    assert [p.type for p in ocall.params] == [StructRef("test_struct"), Scalar(ScalarKind.INT)]


def test_pragma_pack_scopes_to_next_struct():
    prog = parse("#pragma pack(1)\nstruct a { uint8_t x; uint64_t y; };\n"
                 "struct b { uint8_t x; uint64_t y; };")
    assert [s.pack for s in prog.structs] == [1, None]


def test_arrays_nest_outer_first():
    t = parse("struct m { uint16_t grid[2][3]; };").structs[0].members[0].type
    assert t == Array(Array(Scalar(ScalarKind.U16), 3), 2)


def test_short_scalar_names_and_hex_counts():
    t = parse("struct s { u32 a[0x10]; };").structs[0].members[0].type
    assert t == Array(Scalar(ScalarKind.U32), 16)


def test_tagged_typedef():
    s = parse("typedef struct tag { int a; } alias;").structs[0]
    assert (s.name, s.tag, s.typedef) == ("alias", "tag", True)


def test_void_param_list():
    f = parse("trusted { void ecall_nop(void); };").interfaces[0]
    assert f.params == () and f.return_type is None


def test_spans_point_into_source():
    text = "\n\nstruct  s {\n  int a;\n};"
    s = parse(text).structs[0]
    assert (s.span.line, s.span.column) == (3, 1)
    m = s.members[0]
    assert (m.span.line, m.span.column) == (4, 7)
    assert text[m.span.offset] == "a"


@pytest.mark.parametrize("text, expected_fragment", [
    ("struct s { int a }", "';'"),
    ("struct { int a; };", "struct name"),
    ("trusted { int f(int a) };", "';'"),
    ("struct s { int a; ", "'}'"),
    ("int x;", "end of input"),
])
def test_syntax_errors(text, expected_fragment):
    with pytest.raises(DeclSyntaxError) as exc:
        parse(text)
    err = exc.value
    assert any(expected_fragment in e for e in err.expected)
    assert 0 <= err.span.offset <= len(text)
    assert err.line >= 1 and err.column >= 1


@pytest.mark.parametrize("text, feature", [
    ("union u { int a; };", "unions"),
    ("enum e { A };", "enums"),
    ("struct s { int a : 3; };", "bitfields"),
    ("struct s { void (*fn)(int); };", "function pointers"),
    ("struct s { struct { int a; } inner; };", "anonymous struct members"),
    ("struct s { };", "empty struct"),
    ("struct s { unsigned int a; };", "multi-word"),
    ("#include <stdint.h>", "preprocessor"),
    ("#pragma pack(3)\nstruct s { int a; };", "pack value 3"),
    ("#pragma once", "pragmas other than pack"),
    ("trusted { public void f(void); };", "EDL attributes"),
    ("trusted { void f([in] char *p); };", "EDL attributes"),
    ("struct s { int a[0]; };", "zero-length"),
    ("trusted { void f(int a[4]); };", "array parameters"),
])
def test_unsupported_features(text, feature):
    with pytest.raises(UnsupportedFeature) as exc:
        parse(text)
    assert feature in str(exc.value)
    assert 0 <= exc.value.span.offset <= len(text)


@pytest.mark.parametrize("text, kind", [
    ("struct a { int x; };\nstruct a { int y; };", "struct"),
    ("struct a { int x; int x; };", "member"),
    ("trusted { void f(void); };\nuntrusted { void f(void); };", "interface"),
    ("trusted { void f(int a, int a); };", "parameter"),
    ("typedef struct t { int x; } a;\nstruct t { int y; };", "struct"),
])
def test_duplicate_names(text, kind):
    with pytest.raises(DuplicateName) as exc:
        parse(text)
    assert exc.value.kind == kind


def test_unterminated_comment_reports_its_start():
    with pytest.raises(DeclSyntaxError) as exc:
        parse("struct s { int a; };\n/* open")
    assert (exc.value.line, exc.value.column) == (2, 1)


def test_roundtrip_sample(sample_text):
    prog = parse(sample_text)
    assert parse(format_program(prog)) == prog


def test_printer_is_canonical(sample_text):
    once = format_program(parse(sample_text))
    assert format_program(parse(once)) == once


@given(st.data())
def test_roundtrip_random_programs(data):
    prog = random_program(lambda lo, hi: data.draw(st.integers(lo, hi)))
    assert parse(format_program(prog)) == prog


_FRAGMENTS = ["struct", "typedef", "trusted", "untrusted", "{", "}", ";", "(", ")", "*",
              "[", "]", "2", "uint8_t", "int", "x", "y", "#pragma pack(4)", ",", "void",
              "/* c */", "\n", "union", ":"]


@given(st.lists(st.sampled_from(_FRAGMENTS), max_size=30))
def test_errors_have_spans_within_input(parts):
    text = " ".join(parts)
    try:
        prog = parse(text)
    except PadguardError as e:
        if e.span is not None:
            assert 0 <= e.span.offset <= len(text)
            assert e.span.line >= 1
    else:
        assert parse(format_program(prog)) == prog
