"""Struct layout under a configurable ABI model.

The engine follows the usual sequential rule: each member is placed at the
cursor rounded up to its effective alignment (natural alignment, capped by the
struct's pack value), the struct is aligned to its most aligned member, and
the size is rounded up to that alignment.  Every skipped byte becomes a
:class:`PaddingHole`, including holes inside nested structs and inside each
array element, re-expressed in the outer struct's coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

from .model import Array, Scalar, ScalarKind, StructDef, StructRef, TypeExpr
from .resolve import ResolvedProgram

DEFAULT_SCALARS: Dict[ScalarKind, Tuple[int, int]] = {
    ScalarKind.U8: (1, 1),
    ScalarKind.U16: (2, 2),
    ScalarKind.U32: (4, 4),
    ScalarKind.U64: (8, 8),
    ScalarKind.I8: (1, 1),
    ScalarKind.I16: (2, 2),
    ScalarKind.I32: (4, 4),
    ScalarKind.I64: (8, 8),
    ScalarKind.F32: (4, 4),
    ScalarKind.F64: (8, 8),
    ScalarKind.CHAR: (1, 1),
    ScalarKind.INT: (4, 4),
    ScalarKind.SIZE_T: (8, 8),
    ScalarKind.POINTER: (8, 8),
}


def _pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def round_up(n: int, align: int) -> int:
    return (n + align - 1) // align * align


@dataclass(frozen=True)
class AbiModel:
    """Size/alignment table plus packing policy.

    ``default_pack`` applies to structs without their own pack directive;
    ``force_pack`` overrides every struct (used by the packed strategy).
    """

    scalar_table: Mapping[ScalarKind, Tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_SCALARS)
    )
    max_align: int = 16
    default_pack: Optional[int] = None
    force_pack: Optional[int] = None

    def __post_init__(self):
        for kind, (size, align) in self.scalar_table.items():
            if size < 1 or not _pow2(align):
                raise ValueError(f"bad ABI entry for {kind.value}: size={size} align={align}")
        for name in ("max_align", "default_pack", "force_pack"):
            value = getattr(self, name)
            if value is not None and not _pow2(value):
                raise ValueError(f"{name} must be a power of two, got {value}")

    def __hash__(self):
        return hash((tuple(sorted((k.value, v) for k, v in self.scalar_table.items())),
                     self.max_align, self.default_pack, self.force_pack))

    def scalar(self, kind: ScalarKind) -> Tuple[int, int]:
        size, align = self.scalar_table[kind]
        return size, min(align, self.max_align)

    def pack_for(self, sdef: StructDef) -> Optional[int]:
        if self.force_pack is not None:
            return self.force_pack
        if sdef.pack is not None:
            return sdef.pack
        return self.default_pack

    def packed(self, n: int = 1) -> "AbiModel":
        return replace(self, force_pack=n)


DEFAULT_ABI = AbiModel()


class HoleKind(enum.Enum):
    INTER_FIELD = "InterField"
    TRAILING = "Trailing"
    NESTED_INTER_FIELD = "NestedInterField"
    NESTED_TRAILING = "NestedTrailing"
    ARRAY_ELEMENT_INTERNAL = "ArrayElementInternal"


_NESTED = {
    HoleKind.INTER_FIELD: HoleKind.NESTED_INTER_FIELD,
    HoleKind.TRAILING: HoleKind.NESTED_TRAILING,
}


class ByteRange(NamedTuple):
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class PaddingHole:
    start: int
    length: int
    kind: HoleKind

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class FieldSlot:
    name: str
    offset: int
    size: int
    type: TypeExpr = field(compare=False)


@dataclass(frozen=True)
class ScalarSlot:
    """A run of scalar data. ``path`` is a member path such as ``inner.arr[1].x``;
    arrays of scalars form a single slot."""

    path: str
    offset: int
    size: int


@dataclass(frozen=True)
class StructLayout:
    struct_name: str
    size: int
    align: int
    fields: Tuple[FieldSlot, ...]
    holes: Tuple[PaddingHole, ...]
    scalars: Tuple[ScalarSlot, ...]
    pack: Optional[int] = None

    def field(self, name: str) -> FieldSlot:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "name": self.struct_name,
            "size": self.size,
            "align": self.align,
            "fields": [{"name": f.name, "offset": f.offset, "size": f.size} for f in self.fields],
            "holes": [{"start": h.start, "length": h.length, "kind": h.kind.value}
                      for h in self.holes],
        }


class _TypeInfo(NamedTuple):
    size: int
    align: int
    holes: Tuple[PaddingHole, ...]
    scalars: Tuple[ScalarSlot, ...]  # paths are suffixes: "", ".x", "[0].x"


class LayoutEngine:
    """Computes and caches layouts for all structs of one resolved program."""

    def __init__(self, resolved: ResolvedProgram, abi: AbiModel = DEFAULT_ABI):
        self.resolved = resolved
        self.abi = abi
        self._cache: Dict[str, StructLayout] = {}
        self._infos: Dict[TypeExpr, _TypeInfo] = {}

    def layout(self, name: str) -> StructLayout:
        sdef = self.resolved.structs[name]
        cached = self._cache.get(sdef.name)
        if cached is None:
            cached = self._cache[sdef.name] = self._compute(sdef)
        return cached

    def type_size(self, t: TypeExpr) -> int:
        return self._info(t).size

    def type_holes(self, t: TypeExpr) -> Tuple[PaddingHole, ...]:
        """Holes of a value of type ``t``, relative to its own start."""
        return self._info(t).holes

    def _info(self, t: TypeExpr) -> _TypeInfo:
        info = self._infos.get(t)
        if info is None:
            info = self._infos[t] = self._type_info(t)
        return info

    def _type_info(self, t: TypeExpr) -> _TypeInfo:
        if isinstance(t, Scalar):
            size, align = self.abi.scalar(t.kind)
            return _TypeInfo(size, align, (), (ScalarSlot("", 0, size),))
        if isinstance(t, StructRef):
            lay = self.layout(t.name)
            holes = tuple(PaddingHole(h.start, h.length, _NESTED.get(h.kind, h.kind))
                          for h in lay.holes)
            scalars = tuple(ScalarSlot("." + s.path, s.offset, s.size) for s in lay.scalars)
            return _TypeInfo(lay.size, lay.align, holes, scalars)
        if isinstance(t, Array):
            el = self._info(t.element)
            size = el.size * t.count
            if _is_scalar_array(t):
                return _TypeInfo(size, el.align, (), (ScalarSlot("", 0, size),))
            holes = []
            scalars = []
            for i in range(t.count):
                base = i * el.size
                holes.extend(PaddingHole(base + h.start, h.length, HoleKind.ARRAY_ELEMENT_INTERNAL)
                             for h in el.holes)
                scalars.extend(ScalarSlot(f"[{i}]{s.path}", base + s.offset, s.size)
                               for s in el.scalars)
            return _TypeInfo(size, el.align, tuple(holes), tuple(scalars))
        raise TypeError(f"not a type: {t!r}")

    def _compute(self, sdef: StructDef) -> StructLayout:
        pack = self.abi.pack_for(sdef)
        cursor = 0
        struct_align = 1
        fields: List[FieldSlot] = []
        holes: List[PaddingHole] = []
        scalars: List[ScalarSlot] = []
        for m in sdef.members:
            info = self._info(m.type)
            align = min(info.align, pack) if pack else info.align
            offset = round_up(cursor, align)
            if offset > cursor:
                holes.append(PaddingHole(cursor, offset - cursor, HoleKind.INTER_FIELD))
            fields.append(FieldSlot(m.name, offset, info.size, m.type))
            holes.extend(PaddingHole(offset + h.start, h.length, h.kind) for h in info.holes)
            scalars.extend(ScalarSlot(m.name + s.path, offset + s.offset, s.size)
                           for s in info.scalars)
            cursor = offset + info.size
            struct_align = max(struct_align, align)
        size = round_up(cursor, struct_align)
        if size > cursor:
            holes.append(PaddingHole(cursor, size - cursor, HoleKind.TRAILING))
        return StructLayout(sdef.name, size, struct_align, tuple(fields), tuple(holes),
                            tuple(scalars), pack)


def _is_scalar_array(t: TypeExpr) -> bool:
    while isinstance(t, Array):
        t = t.element
    return isinstance(t, Scalar)


def layout_struct(def_: StructDef, resolved: ResolvedProgram,
                  abi: AbiModel = DEFAULT_ABI) -> StructLayout:
    return LayoutEngine(resolved, abi).layout(def_.name)


def padded_bytes(layout: StructLayout) -> int:
    return sum(h.length for h in layout.holes)


def coalesce(ranges) -> List[ByteRange]:
    """Merge overlapping or adjacent (start, length) ranges; result is sorted."""
    out: List[ByteRange] = []
    for start, length in sorted((r[0], r[1]) for r in ranges if r[1] > 0):
        if out and start <= out[-1].end:
            last = out[-1]
            out[-1] = ByteRange(last.start, max(last.end, start + length) - last.start)
        else:
            out.append(ByteRange(start, length))
    return out


def occupied_ranges(layout: StructLayout) -> List[ByteRange]:
    return coalesce((s.offset, s.size) for s in layout.scalars)


def hole_ranges(layout: StructLayout) -> List[ByteRange]:
    return coalesce((h.start, h.length) for h in layout.holes)


def hole_map(layout: StructLayout, width: int = 64) -> str:
    """ASCII ruler of the layout: one character per byte, ``#`` for padding.

    Top-level fields are lettered a, b, c, ... in declaration order.
    """
    cells = ["?"] * layout.size
    legend = []
    for i, f in enumerate(layout.fields):
        ch = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"[i % 52]
        legend.append(f"  {ch} = {f.name} @ {f.offset} (+{f.size})")
        for b in range(f.offset, f.offset + f.size):
            cells[b] = ch
    for h in layout.holes:
        for b in range(h.start, h.end):
            cells[b] = "#"
    rows = []
    for base in range(0, max(layout.size, 1), width):
        ruler = "".join(str((base + k) // 10 % 10) if (base + k) % 10 == 0 else "."
                        for k in range(min(width, layout.size - base)))
        rows.append(f"  {base:6d}  {ruler}")
        rows.append(f"          {''.join(cells[base:base + width])}")
    head = (f"struct {layout.struct_name}: size {layout.size}, align {layout.align}, "
            f"padding {padded_bytes(layout)} byte(s)")
    hole_lines = [f"  hole {h.start}..{h.end - 1} ({h.length} byte(s), {h.kind.value})"
                  for h in layout.holes]
    return "\n".join([head, *rows, *legend, *hole_lines])
