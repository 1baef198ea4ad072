from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import RecursiveType, UnresolvedType
from .model import Array, Program, StructDef, StructRef, TypeExpr


@dataclass(frozen=True)
class ResolvedProgram:
    program: Program
    # name or tag -> definition
    structs: Dict[str, StructDef]
    # dependencies before dependents
    order: Tuple[str, ...]

    def struct(self, name: str) -> StructDef:
        return self.structs[name]

    @property
    def interfaces(self):
        return self.program.interfaces


def _check_type(t: Optional[TypeExpr], table: Dict[str, StructDef]):
    while isinstance(t, Array):
        t = t.element
    if isinstance(t, StructRef) and t.name not in table:
        raise UnresolvedType(t.name, t.span)


def resolve(program: Program) -> ResolvedProgram:
    """Bind struct references and order structs so dependencies come first.

    Raises UnresolvedType for a by-value reference to an undefined struct and
    RecursiveType (with the cycle path) when structs embed each other.
    Pointer targets are opaque and are not resolved.
    """
    table: Dict[str, StructDef] = {}
    for s in program.structs:
        table[s.name] = s
        if s.tag:
            table[s.tag] = s

    for s in program.structs:
        for m in s.members:
            _check_type(m.type, table)
    for f in program.interfaces:
        _check_type(f.return_type, table)
        for p in f.params:
            _check_type(p.type, table)

    order: List[str] = []
    state: Dict[str, int] = {}  # 1 = on stack, 2 = done
    stack: List[str] = []

    def visit(s: StructDef):
        state[s.name] = 1
        stack.append(s.name)
        for m in s.members:
            t = m.type
            while isinstance(t, Array):
                t = t.element
            if not isinstance(t, StructRef):
                continue
            dep = table[t.name]
            st = state.get(dep.name)
            if st == 1:
                cycle = stack[stack.index(dep.name):] + [dep.name]
                raise RecursiveType(cycle, m.span)
            if st is None:
                visit(dep)
        stack.pop()
        state[s.name] = 2
        order.append(s.name)

    for s in program.structs:
        if s.name not in state:
            visit(s)

    return ResolvedProgram(program, table, tuple(order))


def canonical_name(resolved: ResolvedProgram, t: TypeExpr) -> Optional[str]:
    """Struct definition name for a StructRef (which may use a tag), else None."""
    if isinstance(t, StructRef):
        return resolved.structs[t.name].name
    return None


def is_struct(t: Optional[TypeExpr]) -> bool:
    return isinstance(t, StructRef)

