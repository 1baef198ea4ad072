"""padguard: find and fix uninitialized struct padding that leaks across
ECALL/OCALL boundaries."""

from .analyzer import LeakChannel, LeakFinding, analyze
from .codegen import GeneratedSource, generate, generate_all, types_header
from .copyplan import CopyPlan, Move, Region, Strategy, Zero, plan
from .errors import (
    DeclSyntaxError,
    DuplicateName,
    OutOfBounds,
    PadguardError,
    RecursiveType,
    UnresolvedType,
    UnsupportedFeature,
    UnsupportedStrategy,
)
from .layout import (
    DEFAULT_ABI,
    AbiModel,
    ByteRange,
    HoleKind,
    LayoutEngine,
    StructLayout,
    layout_struct,
    occupied_ranges,
    padded_bytes,
)
from .parser import format_program, parse
from .resolve import ResolvedProgram, resolve
from .taint import ByteTag, InitPolicy, TaintReport, Verdict, simulate, verify_strategy

__version__ = "0.1.0"
