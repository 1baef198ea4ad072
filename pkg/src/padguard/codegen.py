"""C text generation for marshalling structs and proxy functions.

The copy statements are a rendering of the :class:`~padguard.copyplan.CopyPlan`
for each carrier; the surrounding skeleton follows the shape Edger8r emits
(``ms_<name>_t`` wrapper, ``CHECK_REF_POINTER`` / ``SGX_CAST`` for ECALLs,
``sgx_ocalloc`` / ``sgx_ocall`` / ``sgx_ocfree`` for OCALLs).  Runtime symbols
come from a stub header, ``sgx_stub.h``, not the SDK.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Set

from .analyzer import Carrier, outward_carriers
from .copyplan import Strategy, Zero, carrier_abi, plan_carrier
from .layout import DEFAULT_ABI, AbiModel, LayoutEngine
from .model import Array, Direction, InterfaceDef, Scalar, ScalarKind, StructRef, TypeExpr
from .resolve import ResolvedProgram

STUB_HEADER = "sgx_stub.h"
BANNER = "/* Generated by padguard. Do not edit. */"


@dataclass(frozen=True)
class GeneratedSource:
    interface_name: str
    strategy: Strategy
    marshalling_struct_text: str
    proxy_text: str
    includes: str
    language_dialect: str = "C99 text output"

    def file_text(self) -> str:
        return "\n".join([
            BANNER,
            f"/* interface: {self.interface_name}, strategy: {self.strategy.value} */",
            self.includes,
            "",
            self.marshalling_struct_text,
            self.proxy_text,
        ]).rstrip("\n") + "\n"


def c_decl(t: Optional[TypeExpr], name: str, resolved: ResolvedProgram) -> str:
    """C declaration of ``name``; struct references use their typedef name."""
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
        base = resolved.structs[t.name].name if t.name in resolved.structs else t.name
    else:
        base = t.kind.c_name
    if not name:
        return base + stars
    return f"{base}{stars} {name}{dims}"


def _guard(program_name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]", "_", program_name).upper() + "_TYPES_H"


def _reachable(resolved: ResolvedProgram, roots) -> Set[str]:
    seen: Set[str] = set()
    todo = list(roots)
    while todo:
        name = resolved.structs[todo.pop()].name
        if name in seen:
            continue
        seen.add(name)
        for m in resolved.structs[name].members:
            t = m.type
            while isinstance(t, Array):
                t = t.element
            if isinstance(t, StructRef):
                todo.append(t.name)
    return seen


def types_header(resolved: ResolvedProgram, strategy: Strategy, program_name: str) -> str:
    """``<program>_types.h``: every struct in dependency order.

    Under the packed strategy, structs reachable from an outward carrier are
    wrapped in ``#pragma pack(1)``.
    """
    packed: Set[str] = set()
    if strategy is Strategy.PACKED:
        roots = [c.type_name for f in resolved.interfaces for c in outward_carriers(f, resolved)]
        packed = _reachable(resolved, roots)
    guard = _guard(program_name)
    out = [BANNER, f"#ifndef {guard}", f"#define {guard}", "",
           "#include <stddef.h>", "#include <stdint.h>", ""]
    for name in resolved.order:
        s = resolved.structs[name]
        pack = 1 if name in packed else s.pack
        if pack is not None:
            out.append(f"#pragma pack({pack})")
        out.append(f"typedef struct {s.name} {{")
        out.extend(f"\t{c_decl(m.type, m.name, resolved)};" for m in s.members)
        out.append(f"}} {s.name};")
        if pack is not None:
            out.append("#pragma pack()")
        out.append("")
    out.append(f"#endif /* {guard} */")
    return "\n".join(out) + "\n"


class _Renderer:
    def __init__(self, resolved: ResolvedProgram, engine: LayoutEngine):
        self.resolved = resolved
        self.engine = engine

    def has_holes(self, t: TypeExpr) -> bool:
        return bool(self.engine.type_holes(t))

    def member_copy(self, dst: str, src: str, t: TypeExpr) -> List[str]:
        """Flattened per-member assignments that never touch a padding byte."""
        if isinstance(t, Scalar) or not self.has_holes(t):
            if isinstance(t, Array):
                return [f"memcpy({dst}, {src}, sizeof({src}));"]
            return [f"{dst} = {src};"]
        if isinstance(t, StructRef):
            lines = []
            for m in self.resolved.structs[t.name].members:
                lines += self.member_copy(f"{dst}.{m.name}", f"{src}.{m.name}", m.type)
            return lines
        lines = []
        for i in range(t.count):
            lines += self.member_copy(f"{dst}[{i}]", f"{src}[{i}]", t.element)
        return lines

    def carrier_copy(self, c: Carrier, strategy: Strategy, src: str,
                     declare_src: Optional[str] = None) -> List[str]:
        """Statements moving carrier value ``src`` into ``ms->ms_<slot>``.

        ``declare_src`` is an initializer expression when ``src`` must first be
        declared as a local holding the callee's result.
        """
        type_name = c.type_name
        layout = self.engine.layout(type_name)
        dst = f"ms->{c.ms_member}"
        p = plan_carrier(c, strategy, layout)
        lines = []
        if declare_src is not None and strategy not in (Strategy.SHALLOW_VULNERABLE,
                                                         Strategy.PACKED):
            lines.append(f"{type_name} {src} = {declare_src};")
        if strategy is Strategy.SHALLOW_VULNERABLE:
            expr = declare_src if declare_src is not None else src
            lines.append(f"{dst} = {expr}; /* whole-struct copy, padding included */")
        elif strategy is Strategy.PACKED:
            expr = declare_src if declare_src is not None else src
            lines.append(f"{dst} = {expr}; /* packed: no padding */")
        elif strategy is Strategy.DEEP_COPY:
            lines += self.member_copy(dst, src, StructRef(type_name))
        elif strategy is Strategy.FULL_MEMSET:
            buf = f"_in_{c.slot}"
            lines.append(f"{type_name} {buf};")
            lines.append(f"memset(&{buf}, 0, sizeof({type_name}));")
            lines += self.member_copy(buf, src, StructRef(type_name))
            lines.append(f"{dst} = {buf};")
        elif strategy is Strategy.SELECTIVE_PADDING_CLEAR:
            for step in p.steps:
                if isinstance(step, Zero):
                    lines.append(f"memset((uint8_t*)&{src} + {step.offset}, 0, {step.length});"
                                 f" /* padding {step.offset}..{step.offset + step.length - 1} */")
            lines.append(f"{dst} = {src};")
        return lines


def _uses_string_h(lines: List[str]) -> bool:
    return any(line.lstrip().startswith(("memset(", "memcpy(")) for line in lines)


def _ms_struct(iface: InterfaceDef, resolved: ResolvedProgram) -> Optional[str]:
    members = []
    if iface.return_type is not None:
        members.append(c_decl(iface.return_type, "ms_retval", resolved))
    members += [c_decl(p.type, f"ms_{p.name}", resolved) for p in iface.params]
    if not members:
        return None
    name = f"ms_{iface.name}_t"
    body = "".join(f"\t{m};\n" for m in members)
    return f"typedef struct {name} {{\n{body}}} {name};\n"


def _ecall_proxy(iface, strategy, resolved, r: _Renderer, has_ms: bool) -> List[str]:
    ms_t = f"ms_{iface.name}_t"
    out = [f"static sgx_status_t SGX_CDECL sgx_{iface.name}(void* pms)", "{"]
    body: List[str] = []
    if has_ms:
        body += [f"CHECK_REF_POINTER(pms, sizeof({ms_t}));",
                 f"{ms_t}* ms = SGX_CAST({ms_t}*, pms);",
                 "sgx_status_t status = SGX_SUCCESS;", ""]
    else:
        body += ["sgx_status_t status = SGX_SUCCESS;",
                 "if (pms != NULL) return SGX_ERROR_INVALID_PARAMETER;", ""]
    call = f"{iface.name}({', '.join(f'ms->ms_{p.name}' for p in iface.params)})"
    carriers = outward_carriers(iface, resolved)
    if carriers:
        c = carriers[0]
        if strategy is Strategy.FULL_MEMSET:
            body.append(f"{c.type_name} _tmp_retval = {call};")
            body += r.carrier_copy(c, strategy, "_tmp_retval")
        else:
            body += r.carrier_copy(c, strategy, "_in_retval", declare_src=call)
    elif iface.return_type is not None:
        body.append(f"ms->ms_retval = {call};")
    else:
        body.append(f"{call};")
    body.append("return status;")
    out += [f"\t{line}" if line else "" for line in body]
    out.append("}")
    return out


def _ocall_proxy(iface, strategy, resolved, r: _Renderer, has_ms: bool,
                 index: int) -> List[str]:
    ms_t = f"ms_{iface.name}_t"
    params = [c_decl(p.type, p.name, resolved) for p in iface.params]
    if iface.return_type is not None:
        params.insert(0, c_decl(iface.return_type, "", resolved) + "* retval")
    out = [f"sgx_status_t SGX_CDECL {iface.name}({', '.join(params) or 'void'})", "{"]
    body = ["sgx_status_t status = SGX_SUCCESS;"]
    if not has_ms:
        body += ["", f"status = sgx_ocall({index}, NULL);", "", "return status;"]
        out += [f"\t{line}" if line else "" for line in body]
        out.append("}")
        return out
    body += [
        f"{ms_t}* ms = NULL;",
        f"size_t ocalloc_size = sizeof({ms_t});",
        "void *__tmp = NULL;",
        "",
        "__tmp = sgx_ocalloc(ocalloc_size);",
        "if (__tmp == NULL) {",
        "\tsgx_ocfree();",
        "\treturn SGX_ERROR_UNEXPECTED;",
        "}",
        f"ms = ({ms_t}*)__tmp;",
        f"__tmp = (void *)((size_t)__tmp + sizeof({ms_t}));",
    ]
    carriers = {c.slot: c for c in outward_carriers(iface, resolved)}
    for p in iface.params:
        if p.name in carriers:
            body += r.carrier_copy(carriers[p.name], strategy, p.name)
        else:
            body.append(f"ms->ms_{p.name} = {p.name};")
    body.append(f"status = sgx_ocall({index}, ms);")
    if iface.return_type is not None:
        body.append("if (retval) *retval = ms->ms_retval;")
    body += ["sgx_ocfree();", "return status;"]
    out += [f"\t{line}" if line else "" for line in body]
    out.append("}")
    return out


def generate(interface: InterfaceDef, strategy: Strategy, resolved: ResolvedProgram,
             abi: AbiModel = DEFAULT_ABI, program_name: str = "program") -> GeneratedSource:
    engine = LayoutEngine(resolved, carrier_abi(strategy, abi))
    r = _Renderer(resolved, engine)
    ms = _ms_struct(interface, resolved)
    if interface.direction is Direction.ECALL:
        proto = f"{c_decl(interface.return_type, interface.name, resolved)}(" + (
            ", ".join(c_decl(p.type, p.name, resolved) for p in interface.params) or "void"
        ) + ");"
        proxy = [proto, ""] + _ecall_proxy(interface, strategy, resolved, r, ms is not None)
    else:
        ocalls = [f for f in resolved.interfaces if f.direction is Direction.OCALL]
        index = ocalls.index(interface)
        proxy = _ocall_proxy(interface, strategy, resolved, r, ms is not None, index)
    includes = [f'#include "{STUB_HEADER}"', f'#include "{program_name}_types.h"']
    if _uses_string_h(proxy):
        includes.insert(0, "#include <string.h>")
    return GeneratedSource(
        interface.name,
        strategy,
        ms if ms is not None else f"/* {interface.name}: nothing to marshal */\n",
        "\n".join(proxy) + "\n",
        "\n".join(includes),
    )


def generate_all(resolved: ResolvedProgram, strategy: Strategy, abi: AbiModel = DEFAULT_ABI,
                 program_name: str = "program") -> dict:
    """Map of output file name -> text, in declaration order."""
    files = {f"{program_name}_types.h": types_header(resolved, strategy, program_name)}
    for iface in resolved.interfaces:
        files[f"{iface.name}_proxy.c"] = generate(iface, strategy, resolved, abi,
                                                  program_name).file_text()
    return files
