"""Declarative marshalling plans.

A :class:`CopyPlan` lists the byte traffic a proxy performs for one outward
struct carrier: ``Move`` steps between the trusted copy and the untrusted
marshalling slot, and ``Zero`` steps that clear trusted bytes first.  The
code generator renders plans as C; the taint simulator executes them.
Offsets are in the carrier struct's coordinates on both sides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .analyzer import Carrier, LeakChannel, outward_carriers
from .errors import UnsupportedStrategy
from .layout import DEFAULT_ABI, AbiModel, LayoutEngine, StructLayout, hole_ranges, occupied_ranges
from .model import InterfaceDef
from .resolve import ResolvedProgram


class Strategy(enum.Enum):
    SHALLOW_VULNERABLE = "ShallowVulnerable"
    DEEP_COPY = "DeepCopy"
    PACKED = "Packed"
    FULL_MEMSET = "FullMemset"
    SELECTIVE_PADDING_CLEAR = "SelectivePaddingClear"

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[self]

    @classmethod
    def from_cli(cls, name: str) -> "Strategy":
        for k, v in _CLI_NAMES.items():
            if v == name:
                return k
        return cls(name)


_CLI_NAMES = {
    Strategy.SHALLOW_VULNERABLE: "shallow",
    Strategy.DEEP_COPY: "deep",
    Strategy.PACKED: "packed",
    Strategy.FULL_MEMSET: "memset",
    Strategy.SELECTIVE_PADDING_CLEAR: "selective",
}

HARDENED = (Strategy.DEEP_COPY, Strategy.PACKED, Strategy.FULL_MEMSET,
            Strategy.SELECTIVE_PADDING_CLEAR)


class Region(enum.Enum):
    TRUSTED = "Trusted"
    UNTRUSTED = "Untrusted"


T = Region.TRUSTED
U = Region.UNTRUSTED


@dataclass(frozen=True)
class Move:
    src_region: Region
    src_offset: int
    dst_region: Region
    dst_offset: int
    length: int


@dataclass(frozen=True)
class Zero:
    region: Region
    offset: int
    length: int


CopyStep = Union[Move, Zero]


@dataclass(frozen=True)
class CopyPlan:
    interface_name: str
    channel: LeakChannel
    strategy: Strategy
    carrier: Carrier
    carrier_layout: StructLayout
    steps: Tuple[CopyStep, ...]


def carrier_abi(strategy: Strategy, abi: AbiModel) -> AbiModel:
    return abi.packed(1) if strategy is Strategy.PACKED else abi


def plan_carrier(carrier: Carrier, strategy: Strategy, layout: StructLayout) -> CopyPlan:
    size = layout.size
    whole = Move(T, 0, U, 0, size)
    if strategy is Strategy.SHALLOW_VULNERABLE:
        steps: List[CopyStep] = [whole]
    elif strategy is Strategy.DEEP_COPY:
        steps = [Move(T, r.start, U, r.start, r.length) for r in occupied_ranges(layout)]
    elif strategy is Strategy.PACKED:
        if layout.holes:
            raise UnsupportedStrategy(
                f"struct {layout.struct_name} still has padding after packing")
        steps = [whole]
    elif strategy is Strategy.FULL_MEMSET:
        steps = [Zero(T, 0, size), whole]
    elif strategy is Strategy.SELECTIVE_PADDING_CLEAR:
        steps = [Zero(T, r.start, r.length) for r in hole_ranges(layout)] + [whole]
    else:
        raise UnsupportedStrategy(str(strategy))
    return CopyPlan(carrier.interface_name, carrier.channel, strategy, carrier, layout,
                    tuple(steps))


def plan(interface: InterfaceDef, strategy: Strategy, resolved: ResolvedProgram,
         abi: AbiModel = DEFAULT_ABI, engine: Optional[LayoutEngine] = None) -> List[CopyPlan]:
    """One plan per outward struct carrier of ``interface`` (possibly none)."""
    carriers = outward_carriers(interface, resolved)
    if not carriers:
        return []
    cabi = carrier_abi(strategy, abi)
    if engine is None or engine.abi != cabi:
        engine = LayoutEngine(resolved, cabi)
    return [plan_carrier(c, strategy, engine.layout(c.type_name)) for c in carriers]
