"""Command-line entry point.

Exit codes: 0 clean, 1 input/usage error, 2 findings (leaks detected).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .analyzer import analyze, pointer_params
from .codegen import generate_all
from .copyplan import Strategy, plan
from .errors import PadguardError
from .layout import DEFAULT_ABI, AbiModel, LayoutEngine, hole_map
from .parser import parse
from .resolve import resolve
from .taint import InitPolicy, simulate, verify_strategy

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FINDINGS = 2

STRATEGY_CHOICES = [s.cli_name for s in Strategy]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which would read as "findings".
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    input_path: str
    subcommand: str
    format: str = "json"
    strategy: Optional[Strategy] = None
    out_dir: Optional[str] = None
    init: str = "all"
    pack: Optional[int] = None
    interface: Optional[str] = None

    def __post_init__(self):
        needs = self.subcommand in ("generate", "simulate")
        if needs != (self.strategy is not None):
            raise UsageError("--strategy is required for generate and simulate only")

    @property
    def abi(self) -> AbiModel:
        if self.pack is None:
            return DEFAULT_ABI
        return AbiModel(default_pack=self.pack)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="padguard",
                     description="Find and fix struct padding leaks across ECALL/OCALL proxies.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", help="declaration file (structs + trusted/untrusted blocks)")
        p.add_argument("--format", choices=["json", "text"], default="json")
        p.add_argument("--pack", type=int, choices=[1, 2, 4, 8, 16], default=None,
                       help="pack value for structs without their own #pragma pack")
        return p

    add("layout", "print struct layouts and padding holes")
    add("analyze", "report padded structs leaving the enclave")
    p = add("generate", "write proxy sources for one marshalling strategy")
    p.add_argument("--strategy", choices=STRATEGY_CHOICES, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p = add("simulate", "taint-simulate the marshalling of each carrier")
    p.add_argument("--strategy", choices=STRATEGY_CHOICES, required=True)
    p.add_argument("--init", default="all", help="all | none | partial=<member,...>")
    p.add_argument("--interface", help="only this interface")
    add("check", "analyze and cross-check against the simulator")
    return parser


def _emit(obj, out: TextIO):
    json.dump(obj, out, indent=2)
    out.write("\n")


def _source_excerpt(text: str, err: PadguardError) -> str:
    if err.span is None or err.span.line < 1:
        return ""
    lines = text.splitlines()
    if err.span.line > len(lines):
        return ""
    line = lines[err.span.line - 1]
    return f"  {line}\n  {' ' * (err.span.column - 1)}^\n"


def run(config: RunConfig, stdout: Optional[TextIO] = None,
        stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text = Path(config.input_path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        stderr.write(f"padguard: error: cannot read {config.input_path}: {e}\n")
        return EXIT_ERROR
    try:
        return _dispatch(config, text, stdout, stderr)
    except PadguardError as e:
        stderr.write(e.diagnostic(config.input_path) + "\n" + _source_excerpt(text, e))
        return EXIT_ERROR
    except OSError as e:
        stderr.write(f"padguard: error: {e}\n")
        return EXIT_ERROR


def _dispatch(config: RunConfig, text: str, stdout: TextIO, stderr: TextIO) -> int:
    resolved = resolve(parse(text))
    abi = config.abi
    engine = LayoutEngine(resolved, abi)
    cmd = config.subcommand
    if cmd in ("analyze", "check") and pointer_params(resolved):
        stderr.write("note: pointer parameters are passed through opaquely; "
                     "their pointees are not analyzed\n")

    if cmd == "layout":
        layouts = [engine.layout(name) for name in
                   [s.name for s in resolved.program.structs]]
        if config.format == "json":
            _emit([lay.to_json() for lay in layouts], stdout)
        else:
            stdout.write("\n\n".join(hole_map(lay) for lay in layouts) + ("\n" if layouts else ""))
        return EXIT_OK

    if cmd == "analyze":
        findings = analyze(resolved, abi, engine)
        if config.format == "json":
            _emit([f.to_json() for f in findings], stdout)
        else:
            stdout.write(_findings_table(findings))
        return EXIT_FINDINGS if findings else EXIT_OK

    if cmd == "generate":
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        program_name = Path(config.input_path).stem
        files = generate_all(resolved, config.strategy, abi, program_name)
        for name, body in files.items():
            with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(body)
        if config.format == "json":
            _emit(sorted(files), stdout)
        else:
            stdout.write("".join(f"wrote {out_dir / name}\n" for name in files))
        return EXIT_OK

    if cmd == "simulate":
        policy = InitPolicy.parse(config.init)
        ifaces = resolved.interfaces
        if config.interface is not None:
            ifaces = [f for f in ifaces if f.name == config.interface]
            if not ifaces:
                stderr.write(f"padguard: error: no interface named {config.interface!r}\n")
                return EXIT_ERROR
        reports = [simulate(p, policy) for f in ifaces
                   for p in plan(f, config.strategy, resolved, abi)]
        if config.format == "json":
            _emit([r.to_json() for r in reports], stdout)
        else:
            for r in reports:
                ranges = ", ".join(f"{x.start}..{x.end - 1}" for x in r.escaped) or "-"
                stdout.write(f"{r.interface_name} [{r.carrier_slot}] {r.strategy.value}: "
                             f"{r.escaped_total} secret byte(s) escaped ({ranges})\n")
        return EXIT_FINDINGS if any(r.escaped_total for r in reports) else EXIT_OK

    # check
    findings = analyze(resolved, abi, engine)
    verdicts = [verify_strategy(f, Strategy.SHALLOW_VULNERABLE, resolved, abi)
                for f in resolved.interfaces]
    from_findings = {(f.interface_name, f.carrier_slot): tuple(f.escaping_ranges)
                     for f in findings}
    from_sim = {(v.interface_name, slot): tuple(ranges)
                for v in verdicts for slot, ranges in v.leaks.items()}
    agree = from_findings == from_sim
    if config.format == "json":
        _emit({
            "findings": [f.to_json() for f in findings],
            "simulation": [
                {"interface": v.interface_name, "strategy": v.strategy.value,
                 "clean": v.clean, "reports": [r.to_json() for r in v.reports]}
                for v in verdicts
            ],
            "agree": agree,
        }, stdout)
    else:
        stdout.write(_findings_table(findings))
        stdout.write("analyzer and simulator " + ("agree\n" if agree else "DISAGREE\n"))
    if not agree:
        stderr.write("padguard: error: analyzer and simulator disagree\n")
    return EXIT_FINDINGS if findings or not agree else EXIT_OK


def _findings_table(findings) -> str:
    if not findings:
        return "no leaks found\n"
    rows = [("INTERFACE", "CHANNEL", "CARRIER", "BYTES", "RANGES")]
    for f in findings:
        ranges = ", ".join(f"{r.start}..{r.end - 1}" for r in f.escaping_ranges)
        rows.append((f.interface_name, f.channel.value, f"{f.carrier_slot}: {f.carrier_type}",
                     str(f.total_bytes), ranges))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n"
                   for r in rows)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = RunConfig(
            input_path=args.input,
            subcommand=args.subcommand,
            format=args.format,
            strategy=Strategy.from_cli(args.strategy) if getattr(args, "strategy", None) else None,
            out_dir=getattr(args, "out", None),
            init=getattr(args, "init", "all"),
            pack=args.pack,
            interface=getattr(args, "interface", None),
        )
    except UsageError as e:
        sys.stderr.write(f"padguard: error: {e}\n")
        return EXIT_ERROR
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
