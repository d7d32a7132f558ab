"""Batch driver: parse, well-formedness, obligations, certificate checking,
monitored runs, and differential testing.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error,
3 monitor violation. The environment variable XRL_DOMAIN_CAP overrides the
exhaustive-enumeration cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .checker import check_method_specs
from .derivation import load_certificates
from .diagnostics import Diagnostic
from .domain import BoundedDomain
from .effects import locs, mod_vars
from .gen import generated_entry_states, method_entry_state
from .interp import inter_p, inter_t, oracle_run
from .obligations import (DischargePolicy, ObligationReport,
                          build_entry_obligations, discharge)
from .parser import parse_program
from .printer import print_program
from .runtime import Monitors, MonitorViolation, Ok, Timeout, outcome_to_json
from .state import State, lookup, state_from_json, state_to_json
from .syntax import MSE_VAR, cmd_vars

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_MONITOR = 3

SCHEMA = "xrlreport@1"


def _die(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _read(path: str) -> str | None:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError:
        return None


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _domain(args) -> BoundedDomain:
    cap = int(os.environ.get("XRL_DOMAIN_CAP", args.cap))
    return BoundedDomain(addresses=args.addresses,
                         max_region=args.region_card, cap=cap,
                         samples=args.samples, seed=args.seed)


def _load(prog_path: str, cert_paths: list[str]):
    text = _read(prog_path)
    if text is None:
        return None, None, [Diagnostic("io", f"cannot read {prog_path}")]
    res = parse_program(text)
    if res.program is None or res.diagnostics:
        return None, None, res.diagnostics
    certs = []
    for cp in cert_paths:
        ctext = _read(cp)
        if ctext is None:
            return None, None, [Diagnostic("io", f"cannot read {cp}")]
        try:
            certs.append(load_certificates(ctext, res.program))
        except Exception as err:
            return None, None, [Diagnostic("certificate-format",
                                           f"{cp}: {err}")]
    return res.program, certs, []


def _merged_certfile(certs):
    from .derivation import CertificateFile
    merged = CertificateFile(dialect="xrl")
    for cf in certs:
        merged.certificates.extend(cf.certificates)
    return merged


def _check_report(prog, certs, domain, policy):
    from .wellformed import check_wellformed
    diagnostics = list(check_wellformed(prog))
    obligations = build_entry_obligations(prog, domain)
    table = None
    if not diagnostics:
        table = check_method_specs(prog, _merged_certfile(certs))
        diagnostics.extend(table.diagnostics)
        obligations.extend(table.obligations)
    report = discharge(obligations, prog, domain, policy)
    return diagnostics, report, table


def cmd_check(args) -> int:
    prog, certs, diags = _load(args.program, args.certificates)
    if prog is None:
        if any(d.code == "io" for d in diags):
            return _die("; ".join(str(d) for d in diags))
        _emit({"schema": SCHEMA, "diagnostics": [d.to_json() for d in diags],
               "obligations": [], "summary": {}}, args.report)
        return EXIT_VERIFICATION
    domain = _domain(args)
    diagnostics, report, _ = _check_report(prog, certs, domain,
                                           DischargePolicy(args.budget))
    payload = report.to_json()
    payload["diagnostics"] = [d.to_json() for d in diagnostics]
    _emit(payload, args.report)
    ok = not diagnostics and report.ok
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_obligations(args) -> int:
    return cmd_check(args)


def cmd_fmt(args) -> int:
    text = _read(args.program)
    if text is None:
        return _die(f"cannot read {args.program}")
    res = parse_program(text)
    if res.program is None:
        for d in res.diagnostics:
            print(str(d), file=sys.stderr)
        return EXIT_VERIFICATION
    print(print_program(res.program), end="")
    return EXIT_OK


def _method_arg(prog, text: str):
    cls, _, m = text.partition(".")
    if not m or not prog.is_class(cls) or not prog.has_m(cls, m):
        return None
    return cls, m


ENTRY_EVENTS = ("enter", "call", "fcall", "cast")


def _trace_sink(path: str | None, entries_path: str | None):
    handles = []
    sinks = []
    if path is not None:
        fh = open(path, "w", encoding="utf-8")
        handles.append(fh)
        sinks.append(lambda ev, fh=fh: fh.write(json.dumps(ev, sort_keys=True)
                                                + "\n"))
    if entries_path is not None:
        fh = open(entries_path, "w", encoding="utf-8")
        handles.append(fh)

        def entries_only(ev, fh=fh):
            if ev.get("event") in ENTRY_EVENTS:
                fh.write(json.dumps(ev, sort_keys=True) + "\n")

        sinks.append(entries_only)
    if not sinks:
        return None, handles

    def sink(event: dict) -> None:
        for s in sinks:
            s(event)

    return sink, handles


def cmd_run(args) -> int:
    prog, certs, diags = _load(args.program, [args.certificate])
    if prog is None:
        return _die("; ".join(str(d) for d in diags))
    target = _method_arg(prog, args.method)
    if target is None:
        return _die(f"unknown method {args.method!r} (use Class.method)")
    cls, m = target
    if args.judgment == "total" and args.fuel is not None:
        return _die("total runs take no fuel; use --judgment partial")
    if args.judgment == "partial" and args.fuel is None:
        return _die("partial runs need --fuel")
    table = check_method_specs(prog, _merged_certfile(certs))
    if table.diagnostics:
        for d in table.diagnostics:
            print(str(d), file=sys.stderr)
        return EXIT_VERIFICATION
    key = (cls, m)
    checked = (table.total if args.judgment == "total" else table.partial).get(key)
    if checked is None:
        return _die(f"no {args.judgment} certificate for {args.method}")
    if args.state:
        text = _read(args.state)
        if text is None:
            return _die(f"cannot read {args.state}")
        s = state_from_json(json.loads(text))
    else:
        s = State()
    sink, handles = _trace_sink(args.trace, args.trace_entries)
    mon = Monitors(trace=sink)
    if args.judgment == "total":
        s = method_entry_state(prog, cls, m, s, with_mse=True)
        outcome = inter_t(checked, s, mon)
    else:
        s = method_entry_state(prog, cls, m, s, with_mse=False)
        outcome = inter_p(checked, args.fuel, s, mon)
    for fh in handles:
        fh.close()
    print(json.dumps(outcome_to_json(outcome), indent=1, sort_keys=True))
    if isinstance(outcome, MonitorViolation):
        return EXIT_MONITOR
    return EXIT_OK


def _stack_agreement(prog, cmd, a: State, b: State) -> bool:
    relevant = (mod_vars(cmd) | cmd_vars(cmd)) - {MSE_VAR, "alloc"}
    return all(lookup(a, x) == lookup(b, x) for x in relevant)


def cmd_diff(args) -> int:
    prog, certs, diags = _load(args.program, [args.certificate])
    if prog is None:
        return _die("; ".join(str(d) for d in diags))
    table = check_method_specs(prog, _merged_certfile(certs))
    if table.diagnostics:
        for d in table.diagnostics:
            print(str(d), file=sys.stderr)
        return EXIT_VERIFICATION
    if args.method:
        target = _method_arg(prog, args.method)
        if target is None:
            return _die(f"unknown method {args.method!r}")
        targets = [target]
    else:
        targets = sorted(table.total) + [k for k in sorted(table.partial)
                                         if k not in table.total]
    results = {}
    disagreements = 0
    for cls, m in targets:
        body = prog.method(cls, m).body
        runs = skipped = bad = 0
        first = None
        for s in generated_entry_states(prog, cls, m, args.seed, args.count):
            if (cls, m) in table.total:
                outcome = inter_t(table.total[(cls, m)], s)
            else:
                outcome = inter_p(table.partial[(cls, m)], args.fuel, s)
            oracle = oracle_run(body, args.fuel, s, prog)
            if not isinstance(oracle, Ok):
                skipped += 1
                continue
            runs += 1
            agree = (isinstance(outcome, Ok)
                     and outcome.state.heap == oracle.state.heap
                     and outcome.state.alloc == oracle.state.alloc
                     and _stack_agreement(prog, body, outcome.state,
                                          oracle.state))
            if not agree:
                bad += 1
                if first is None:
                    first = {"state": state_to_json(s),
                             "interpreter": outcome_to_json(outcome),
                             "oracle": outcome_to_json(oracle)}
        disagreements += bad
        results[f"{cls}.{m}"] = {"runs": runs, "skipped": skipped,
                                 "disagreements": bad,
                                 **({"first": first} if first else {})}
    _emit({"schema": SCHEMA, "seed": args.seed, "count": args.count,
           "methods": results, "disagreements": disagreements}, args.report)
    return EXIT_OK if disagreements == 0 else EXIT_VERIFICATION


def _add_domain_args(p) -> None:
    p.add_argument("--addresses", type=int, default=3,
                   help="bounded domain address count (default 3)")
    p.add_argument("--region-card", type=int, default=2,
                   help="max region cardinality in generated heaps")
    p.add_argument("--cap", type=int, default=1_000_000,
                   help="exhaustive enumeration cap")
    p.add_argument("--samples", type=int, default=2000,
                   help="sample budget above the cap")
    p.add_argument("--budget", type=int, default=3000,
                   help="bounded budget for certificate obligations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report to a file")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="xrl",
        description="checker and derivation-guided interpreters for the "
                    "executable region logic")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check certificates and discharge "
                                     "obligations")
    p.add_argument("program")
    p.add_argument("certificates", nargs="*")
    _add_domain_args(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("obligations", help="like check; reports every "
                                           "obligation with mode and verdict")
    p.add_argument("program")
    p.add_argument("certificates", nargs="*")
    _add_domain_args(p)
    p.set_defaults(fn=cmd_obligations)

    p = sub.add_parser("run", help="run a method certificate on a state")
    p.add_argument("program")
    p.add_argument("certificate")
    p.add_argument("--method", required=True, help="Class.method")
    p.add_argument("--state", help="initial state JSON file")
    p.add_argument("--judgment", choices=("total", "partial"),
                   default="total")
    p.add_argument("--fuel", type=int, default=None,
                   help="fuel for partial runs (rejected for total runs)")
    p.add_argument("--trace", help="write JSON-lines events to a file")
    p.add_argument("--trace-entries",
                   help="write only call-entry events (head, measure)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diff", help="differential runs against the plain "
                                    "big-step oracle")
    p.add_argument("program")
    p.add_argument("certificate")
    p.add_argument("--method", help="Class.method (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--report", help="write the JSON report to a file")
    p.set_defaults(fn=cmd_diff)

    p = sub.add_parser("fmt", help="canonical pretty-print of a program")
    p.add_argument("program")
    p.set_defaults(fn=cmd_fmt)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
