from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .model import Span


class PadguardError(Exception):
    """Base class for every diagnostic the toolchain raises on bad input."""

    span: Optional[Span] = None

    def diagnostic(self, filename: str = "<input>") -> str:
        if self.span is not None:
            return f"{filename}:{self.span.line}:{self.span.column}: error: {self}"
        return f"{filename}: error: {self}"


class DeclSyntaxError(PadguardError):
    def __init__(self, span: Span, expected: Iterable[str], found: str):
        self.span = span
        self.line = span.line
        self.column = span.column
        self.expected = frozenset(expected)
        self.found = found
        wanted = ", ".join(sorted(self.expected))
        super().__init__(f"expected one of {{{wanted}}}, found {found}")


class DuplicateName(PadguardError):
    def __init__(self, kind: str, name: str, span: Span):
        self.span = span
        self.kind = kind
        self.name = name
        super().__init__(f"duplicate {kind} name '{name}'")


class UnsupportedFeature(PadguardError):
    def __init__(self, feature: str, span: Span):
        self.span = span
        self.feature = feature
        super().__init__(f"unsupported: {feature}")


class UnresolvedType(PadguardError):
    def __init__(self, name: str, span: Span):
        self.span = span
        self.name = name
        super().__init__(f"unknown struct type '{name}'")


class RecursiveType(PadguardError):
    def __init__(self, cycle: Sequence[str], span: Optional[Span] = None):
        self.span = span
        self.cycle = list(cycle)
        super().__init__("struct contains itself by value: " + " -> ".join(self.cycle))


class UnsupportedStrategy(PadguardError):
    pass


class OutOfBounds(PadguardError):
    """A copy step leaves its buffer. Indicates a plan bug, not bad input."""

    def __init__(self, step_index: int, detail: str):
        self.step_index = step_index
        super().__init__(f"step {step_index} out of bounds: {detail}")


class InitPolicyError(PadguardError):
    pass
