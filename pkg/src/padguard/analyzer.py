"""Detection of the two outward leak channels: an ECALL returning a padded
struct, and an OCALL taking a padded struct by value."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .layout import DEFAULT_ABI, AbiModel, ByteRange, LayoutEngine, hole_ranges, padded_bytes
from .model import Direction, InterfaceDef, StructRef, is_pointer
from .resolve import ResolvedProgram

log = logging.getLogger(__name__)


class LeakChannel(enum.Enum):
    ECALL_RETURN = "EcallReturn"
    OCALL_INPUT = "OcallInput"


@dataclass(frozen=True)
class Carrier:
    """A struct value that the proxy copies from enclave memory to untrusted memory."""

    interface_name: str
    channel: LeakChannel
    slot: str  # "retval" or the parameter name
    position: int  # -1 for the return value, else parameter index
    type_name: str

    @property
    def ms_member(self) -> str:
        return f"ms_{self.slot}"


def outward_carriers(iface: InterfaceDef, resolved: ResolvedProgram) -> List[Carrier]:
    if iface.direction is Direction.ECALL:
        t = iface.return_type
        if isinstance(t, StructRef):
            name = resolved.structs[t.name].name
            return [Carrier(iface.name, LeakChannel.ECALL_RETURN, "retval", -1, name)]
        return []
    out = []
    for i, p in enumerate(iface.params):
        if isinstance(p.type, StructRef):
            name = resolved.structs[p.type.name].name
            out.append(Carrier(iface.name, LeakChannel.OCALL_INPUT, p.name, i, name))
    return out


def pointer_params(resolved: ResolvedProgram) -> List[Tuple[str, str]]:
    """(interface, parameter) pairs passing pointers; their pointees are not modeled."""
    return [(f.name, p.name) for f in resolved.interfaces for p in f.params
            if is_pointer(p.type)]


@dataclass(frozen=True)
class LeakFinding:
    interface_name: str
    channel: LeakChannel
    carrier_slot: str
    carrier_type: str
    position: int
    escaping_ranges: Tuple[ByteRange, ...]
    total_bytes: int
    severity: str = "Leak"

    def to_json(self) -> dict:
        return {
            "interface": self.interface_name,
            "channel": self.channel.value,
            "carrier": {"slot": self.carrier_slot, "type": self.carrier_type},
            "escaping_ranges": [{"start": r.start, "length": r.length}
                                for r in self.escaping_ranges],
            "total_bytes": self.total_bytes,
            "severity": self.severity,
        }


def analyze(resolved: ResolvedProgram, abi: AbiModel = DEFAULT_ABI,
            engine: Optional[LayoutEngine] = None) -> List[LeakFinding]:
    """Return one finding per outward struct carrier that has padding.

    Findings follow interface declaration order, then parameter position
    (the return value first).
    """
    engine = engine or LayoutEngine(resolved, abi)
    findings = []
    for iface in resolved.interfaces:
        for c in outward_carriers(iface, resolved):
            lay = engine.layout(c.type_name)
            total = padded_bytes(lay)
            if total == 0:
                continue
            findings.append(LeakFinding(iface.name, c.channel, c.slot, c.type_name,
                                        c.position, tuple(hole_ranges(lay)), total))
    if pointer_params(resolved):
        log.info("pointer parameters are passed through opaquely; pointee contents "
                 "are not analyzed")
    return findings
