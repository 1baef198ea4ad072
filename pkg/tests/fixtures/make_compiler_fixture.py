"""Regenerate compiler_layouts.json from a real C compiler.

Each case is a small set of struct declarations.  The script writes a C probe
that prints sizeof/_Alignof of the last struct, offsetof/sizeof of every
top-level member, and offsetof/sizeof of every scalar leaf (recursing through
nested structs and array elements), compiles it with $CC (default gcc), and
stores the results next to the declaration source.  It does not import padguard.

    python tests/fixtures/make_compiler_fixture.py
"""

import json
import os
import platform
import random
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "compiler_layouts.json")

SCALARS = {
    "uint8_t": 1, "uint16_t": 2, "uint32_t": 4, "uint64_t": 8,
    "int8_t": 1, "int16_t": 2, "int32_t": 4, "int64_t": 8,
    "float": 4, "double": 8, "char": 1, "int": 4, "size_t": 8,
}

# name -> (pack or None, [(member, type, dims)])
HAND = [
    [("test_struct", None, [("val1", "uint64_t", []), ("val2", "uint8_t", []),
                            ("val3", "uint64_t", [])])],
    [("test_struct", 1, [("val1", "uint64_t", []), ("val2", "uint8_t", []),
                         ("val3", "uint64_t", [])])],
    [("one_byte", None, [("a", "uint8_t", [])])],
    [("tail_pad", None, [("a", "uint64_t", []), ("b", "uint8_t", [])])],
    [("two_bytes", None, [("a", "uint8_t", []), ("b", "uint8_t", [])])],
    [("cic", None, [("c", "char", []), ("i", "int", []), ("d", "char", [])])],
    [("test_struct", None, [("val1", "uint64_t", []), ("val2", "uint8_t", []),
                            ("val3", "uint64_t", [])]),
     ("ts_array", None, [("arr", "test_struct", [2])])],
    [("inner", None, [("x", "uint32_t", []), ("y", "uint8_t", [])]),
     ("outer", None, [("a", "uint8_t", []), ("in", "inner", []), ("b", "uint16_t", [])])],
    [("inner", 1, [("x", "uint32_t", []), ("y", "uint8_t", [])]),
     ("outer", None, [("a", "uint8_t", []), ("in", "inner", []), ("b", "uint64_t", [])])],
    [("p2", 2, [("a", "uint8_t", []), ("b", "uint64_t", []), ("c", "uint32_t", [])])],
    [("p4", 4, [("a", "uint8_t", []), ("b", "uint64_t", []), ("c", "uint16_t", [])])],
    [("ptrs", None, [("tag", "char", []), ("p", "char*", []), ("n", "size_t", [])])],
    [("mat", None, [("flag", "uint8_t", []), ("m", "uint16_t", [3, 3])])],
    [("floats", None, [("f", "float", []), ("d", "double", []), ("i", "int16_t", [])])],
    [("inner", None, [("x", "uint64_t", []), ("y", "uint8_t", [])]),
     ("mid", None, [("i", "inner", [2]), ("z", "uint8_t", [])]),
     ("top", None, [("c", "char", []), ("m", "mid", []), ("q", "uint32_t", [])])],
]


def random_case(rng, idx):
    structs = []
    for level in range(rng.randint(1, 3)):
        name = f"r{idx}_{level}"
        members = []
        for k in range(rng.randint(1, 7)):
            if structs and rng.random() < 0.3:
                typ = rng.choice(structs)[0]
            else:
                typ = rng.choice(sorted(SCALARS))
            dims = [rng.randint(1, 3)] if rng.random() < 0.25 else []
            members.append((f"m{k}", typ, dims))
        pack = rng.choice([None, None, None, 1, 2, 4, 8])
        structs.append((name, pack, members))
    return structs


def declaration(struct, c_dialect):
    name, pack, members = struct
    lines = []
    if pack is not None:
        lines.append(f"#pragma pack({pack})")
    lines.append("typedef struct {")
    for m, typ, dims in members:
        star = "*" if typ.endswith("*") else ""
        base = typ.rstrip("*")
        lines.append(f"    {base} {star}{m}{''.join(f'[{d}]' for d in dims)};")
    lines.append(f"}} {name};")
    if pack is not None and c_dialect:
        lines.append("#pragma pack()")
    return "\n".join(lines)


def leaves(case, struct_name, prefix=""):
    """Scalar leaf designators (offsetof syntax) of a struct, in declaration order."""
    table = {s[0]: s for s in case}
    out = []
    for m, typ, dims in table[struct_name][2]:
        paths = [prefix + m]
        for d in dims:
            paths = [f"{p}[{i}]" for p in paths for i in range(d)]
        for p in paths:
            if typ in table:
                out += leaves(case, typ, p + ".")
            else:
                out.append(p)
    return out


def probe_source(case):
    top = case[-1][0]
    src = ["#include <stddef.h>", "#include <stdint.h>", "#include <stdio.h>", ""]
    src += [declaration(s, True) for s in case]
    src += ["", "int main(void) {"]
    src.append(f'    printf("size %zu\\n", sizeof({top}));')
    src.append(f'    printf("align %zu\\n", (size_t)_Alignof({top}));')
    for m, _, _ in case[-1][2]:
        src.append(f'    printf("field {m} %zu %zu\\n", offsetof({top}, {m}), '
                   f"sizeof((({top} *)0)->{m}));")
    for path in leaves(case, top):
        src.append(f'    printf("leaf {path} %zu %zu\\n", offsetof({top}, {path}), '
                   f"sizeof((({top} *)0)->{path}));")
    src += ["    return 0;", "}"]
    return "\n".join(src) + "\n"


def run_probe(cc, source, workdir):
    c_path = os.path.join(workdir, "probe.c")
    exe = os.path.join(workdir, "probe")
    with open(c_path, "w") as fh:
        fh.write(source)
    subprocess.run([cc, "-std=c11", "-O0", "-o", exe, c_path], check=True)
    result = {"fields": [], "leaves": []}
    for line in subprocess.run([exe], check=True, capture_output=True,
                               text=True).stdout.splitlines():
        kind, *rest = line.split()
        if kind in ("size", "align"):
            result[kind] = int(rest[0])
        else:
            name, off, size = rest
            key = "fields" if kind == "field" else "leaves"
            result[key].append({"name": name, "offset": int(off), "size": int(size)})
    return result


def main():
    cc = os.environ.get("CC", "gcc")
    version = subprocess.run([cc, "--version"], capture_output=True,
                             text=True).stdout.splitlines()[0]
    rng = random.Random(20170623)
    cases = list(HAND)
    while len(cases) < 50:
        cases.append(random_case(rng, len(cases)))
    records = []
    with tempfile.TemporaryDirectory() as tmp:
        for case in cases:
            measured = run_probe(cc, probe_source(case), tmp)
            records.append({
                "name": case[-1][0],
                "source": "\n\n".join(declaration(s, False) for s in case) + "\n",
                **measured,
            })
    doc = {
        "provenance": {
            "generator": "tests/fixtures/make_compiler_fixture.py",
            "compiler": version,
            "flags": "-std=c11 -O0",
            "machine": platform.machine(),
            "method": "sizeof/_Alignof/offsetof printed by a compiled probe program",
        },
        "cases": records,
    }
    with open(OUT, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(records)} cases to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
