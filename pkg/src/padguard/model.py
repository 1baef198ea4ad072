"""Typed AST for the declaration language: scalars, arrays, struct references,
struct definitions and ECALL/OCALL interface signatures."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NO_SPAN = Span(0, 0, 0)


class ScalarKind(enum.Enum):
    U8 = "u8"
    U16 = "u16"
    U32 = "u32"
    U64 = "u64"
    I8 = "i8"
    I16 = "i16"
    I32 = "i32"
    I64 = "i64"
    F32 = "f32"
    F64 = "f64"
    CHAR = "char"
    INT = "int"
    SIZE_T = "size_t"
    POINTER = "pointer"

    @property
    def c_name(self) -> str:
        return _C_NAMES[self]


_C_NAMES = {
    ScalarKind.U8: "uint8_t",
    ScalarKind.U16: "uint16_t",
    ScalarKind.U32: "uint32_t",
    ScalarKind.U64: "uint64_t",
    ScalarKind.I8: "int8_t",
    ScalarKind.I16: "int16_t",
    ScalarKind.I32: "int32_t",
    ScalarKind.I64: "int64_t",
    ScalarKind.F32: "float",
    ScalarKind.F64: "double",
    ScalarKind.CHAR: "char",
    ScalarKind.INT: "int",
    ScalarKind.SIZE_T: "size_t",
}

# Spellings accepted in type position. Both the C names and the short names work.
SCALAR_SPELLINGS = {name: kind for kind, name in _C_NAMES.items()}
SCALAR_SPELLINGS.update(
    {k.value: k for k in ScalarKind if k not in (ScalarKind.POINTER,)}
)


@dataclass(frozen=True)
class Scalar:
    kind: ScalarKind
    # Only for POINTER: the pointed-to type, None meaning void. Opaque to layout.
    pointee: Optional["TypeExpr"] = None
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Array:
    element: "TypeExpr"
    count: int
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class StructRef:
    name: str
    span: Span = field(default=NO_SPAN, compare=False)


TypeExpr = Union[Scalar, Array, StructRef]


def is_pointer(t: TypeExpr) -> bool:
    return isinstance(t, Scalar) and t.kind is ScalarKind.POINTER


def struct_refs(t: TypeExpr):
    """Yield the names of structs a type embeds by value (pointees excluded)."""
    while isinstance(t, Array):
        t = t.element
    if isinstance(t, StructRef):
        yield t.name


@dataclass(frozen=True)
class Member:
    name: str
    type: TypeExpr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class StructDef:
    name: str
    members: Tuple[Member, ...]
    pack: Optional[int] = None
    # `typedef struct [tag] {...} name;` vs `struct name {...};`
    typedef: bool = False
    tag: Optional[str] = None
    span: Span = field(default=NO_SPAN, compare=False)

    def member(self, name: str) -> Member:
        for m in self.members:
            if m.name == name:
                return m
        raise KeyError(name)


class Direction(enum.Enum):
    ECALL = "Ecall"
    OCALL = "Ocall"


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class InterfaceDef:
    name: str
    direction: Direction
    return_type: Optional[TypeExpr]  # None is void
    params: Tuple[Param, ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Program:
    structs: Tuple[StructDef, ...] = ()
    interfaces: Tuple[InterfaceDef, ...] = ()

    def struct(self, name: str) -> StructDef:
        for s in self.structs:
            if s.name == name:
                return s
        raise KeyError(name)

    def interface(self, name: str) -> InterfaceDef:
        for i in self.interfaces:
            if i.name == name:
                return i
        raise KeyError(name)
