"""Byte-granular taint simulation of a copy plan.

Trusted bytes start out ``SECRET`` (whatever the enclave heap held before),
untrusted bytes start out ``UNTRUSTED_JUNK``.  Member initialization marks the
scalar bytes it writes ``INITIALIZED`` and leaves padding alone; ``Zero``
steps mark their range ``INITIALIZED``; ``Move`` steps copy tags.  Whatever is
still ``SECRET`` on the untrusted side afterwards has escaped.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Tuple

from .copyplan import CopyPlan, Move, Region, Strategy, Zero, plan
from .errors import InitPolicyError, OutOfBounds
from .layout import DEFAULT_ABI, AbiModel, ByteRange, LayoutEngine, ScalarSlot
from .model import InterfaceDef
from .resolve import ResolvedProgram


class ByteTag(enum.IntEnum):
    SECRET = 0
    INITIALIZED = 1
    UNTRUSTED_JUNK = 2


class InitMode(enum.Enum):
    ALL_MEMBERS = "all"
    NONE = "none"
    PARTIAL = "partial"


@dataclass(frozen=True)
class InitPolicy:
    mode: InitMode
    members: FrozenSet[str] = frozenset()

    @classmethod
    def all_members(cls) -> "InitPolicy":
        return cls(InitMode.ALL_MEMBERS)

    @classmethod
    def none(cls) -> "InitPolicy":
        return cls(InitMode.NONE)

    @classmethod
    def partial(cls, members: Iterable[str]) -> "InitPolicy":
        return cls(InitMode.PARTIAL, frozenset(members))

    @classmethod
    def parse(cls, text: str) -> "InitPolicy":
        """Parse ``all``, ``none`` or ``partial=a,b.c``."""
        if text == "all":
            return cls.all_members()
        if text == "none":
            return cls.none()
        if text.startswith("partial="):
            members = [m.strip() for m in text[len("partial="):].split(",") if m.strip()]
            return cls.partial(members)
        raise InitPolicyError(f"bad init policy {text!r}; use all, none or partial=<members>")

    def selected(self, scalars: Tuple[ScalarSlot, ...]) -> List[ScalarSlot]:
        if self.mode is InitMode.ALL_MEMBERS:
            return list(scalars)
        if self.mode is InitMode.NONE:
            return []
        chosen = {}
        for path in sorted(self.members):
            hits = [s for s in scalars if _covers(path, s.path)]
            if not hits:
                raise InitPolicyError(f"no member {path!r} in carrier")
            chosen.update((s.path, s) for s in hits)
        return list(chosen.values())


def _covers(member: str, scalar_path: str) -> bool:
    return (scalar_path == member or scalar_path.startswith(member + ".")
            or scalar_path.startswith(member + "["))


@dataclass
class SimState:
    trusted: bytearray
    untrusted: bytearray
    write_log: List = field(default_factory=list)

    def buffer(self, region: Region) -> bytearray:
        return self.trusted if region is Region.TRUSTED else self.untrusted


@dataclass(frozen=True)
class TaintReport:
    interface_name: str
    strategy: Strategy
    carrier_slot: str
    escaped: Tuple[ByteRange, ...]
    escaped_total: int
    member_init_coverage: float

    def to_json(self) -> dict:
        return {
            "interface": self.interface_name,
            "strategy": self.strategy.value,
            "carrier": self.carrier_slot,
            "escaped": [{"offset": r.start, "length": r.length} for r in self.escaped],
            "escaped_total": self.escaped_total,
            "member_init_coverage": self.member_init_coverage,
        }


def tag_runs(buf: bytearray, tag: ByteTag) -> List[ByteRange]:
    """Maximal runs of ``tag`` in ``buf``, sorted."""
    pattern = re.compile(re.escape(bytes([tag])) + b"+")
    return [ByteRange(m.start(), m.end() - m.start()) for m in pattern.finditer(buf)]


def execute(p: CopyPlan, member_init: InitPolicy) -> SimState:
    size = p.carrier_layout.size
    state = SimState(bytearray([ByteTag.SECRET]) * size,
                     bytearray([ByteTag.UNTRUSTED_JUNK]) * size)
    for s in member_init.selected(p.carrier_layout.scalars):
        state.trusted[s.offset:s.offset + s.size] = bytes([ByteTag.INITIALIZED]) * s.size
    for i, step in enumerate(p.steps):
        if step.length < 1:
            raise OutOfBounds(i, "empty step")
        if isinstance(step, Zero):
            buf = state.buffer(step.region)
            if step.offset < 0 or step.offset + step.length > len(buf):
                raise OutOfBounds(i, f"zero {step.offset}+{step.length} > {len(buf)}")
            buf[step.offset:step.offset + step.length] = bytes([ByteTag.INITIALIZED]) * step.length
        elif isinstance(step, Move):
            src = state.buffer(step.src_region)
            dst = state.buffer(step.dst_region)
            if (step.src_offset < 0 or step.src_offset + step.length > len(src)
                    or step.dst_offset < 0 or step.dst_offset + step.length > len(dst)):
                raise OutOfBounds(i, f"move of {step.length} byte(s) leaves a buffer")
            dst[step.dst_offset:step.dst_offset + step.length] = \
                src[step.src_offset:step.src_offset + step.length]
        else:
            raise TypeError(f"unknown step {step!r}")
        state.write_log.append(step)
    return state


def simulate(p: CopyPlan, member_init: Optional[InitPolicy] = None) -> TaintReport:
    member_init = member_init or InitPolicy.all_members()
    scalars = p.carrier_layout.scalars
    total_scalar = sum(s.size for s in scalars)
    initialized = sum(s.size for s in member_init.selected(scalars))
    state = execute(p, member_init)
    escaped = tag_runs(state.untrusted, ByteTag.SECRET)
    return TaintReport(
        p.interface_name, p.strategy, p.carrier.slot, tuple(escaped),
        sum(r.length for r in escaped),
        initialized / total_scalar if total_scalar else 1.0,
    )


@dataclass(frozen=True)
class Verdict:
    """Outcome of simulating every carrier of an interface with all members set."""

    interface_name: str
    strategy: Strategy
    reports: Tuple[TaintReport, ...]

    @property
    def clean(self) -> bool:
        return all(r.escaped_total == 0 for r in self.reports)

    @property
    def leaks(self) -> dict:
        """Carrier slot -> escaped ranges, for carriers that leak."""
        return {r.carrier_slot: r.escaped for r in self.reports if r.escaped_total}


def verify_strategy(interface: InterfaceDef, strategy: Strategy, resolved: ResolvedProgram,
                    abi: AbiModel = DEFAULT_ABI,
                    engine: Optional[LayoutEngine] = None) -> Verdict:
    reports = tuple(simulate(p, InitPolicy.all_members())
                    for p in plan(interface, strategy, resolved, abi, engine))
    return Verdict(interface.name, strategy, reports)
