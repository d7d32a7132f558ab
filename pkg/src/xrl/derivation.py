"""Derivation certificates: tree nodes mirroring the logic's rules, plus the
JSON certificate format (.xrlproof).

A node records its rule name and the rule's instantiation; conclusions are
never stored, the checker recomputes them. Certificate files carry
expressions and commands as surface-syntax strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .effects import EffectList, effects_from_json, effects_to_json
from .entries import EntryHead
from .parser import parse_cmd_text, parse_expr_text
from .printer import print_cmd, print_expr
from .syntax import Cmd, Expr, Program

RULES = ("assign", "write", "skip", "alloc", "if", "seq", "frame", "conseq",
         "call", "cast")


@dataclass
class DNode:
    rule: str
    cmd: Cmd | None = None
    P: Expr | None = None
    Q: Expr | None = None
    eps: EffectList | None = None
    guard: Expr | None = None
    R: Expr | None = None
    snap: str | None = None
    carry: int | None = None
    head: EntryHead | None = None       # cast: entry head of the total child
    children: tuple["DNode", ...] = ()


def derivation_size(node: DNode) -> int:
    """Node count of a derivation (the structural measure of interpretation)."""
    return 1 + sum(derivation_size(c) for c in node.children)


@dataclass
class Certificate:
    owner: str
    member: str
    judgment: str            # "total" | "partial"
    derivation: DNode


@dataclass
class CertificateFile:
    dialect: str
    certificates: list[Certificate] = field(default_factory=list)

    def find(self, owner: str, member: str, judgment: str) -> Certificate | None:
        for c in self.certificates:
            if (c.owner, c.member, c.judgment) == (owner, member, judgment):
                return c
        return None


SCHEMA = "xrlproof@1"


def node_to_json(node: DNode) -> dict:
    out: dict = {"rule": node.rule}
    if node.cmd is not None:
        out["cmd"] = print_cmd(node.cmd)
    if node.P is not None:
        out["P"] = print_expr(node.P)
    if node.Q is not None:
        out["Q"] = print_expr(node.Q)
    if node.eps is not None:
        out["eps"] = effects_to_json(node.eps)
    if node.guard is not None:
        out["guard"] = print_expr(node.guard)
    if node.R is not None:
        out["R"] = print_expr(node.R)
    meta: dict = {}
    if node.snap is not None:
        meta["snap"] = node.snap
    if node.carry is not None:
        meta["carry"] = node.carry
    if node.head is not None:
        meta["entryHead"] = str(node.head)
    if meta:
        out["meta"] = meta
    if node.children:
        out["children"] = [node_to_json(c) for c in node.children]
    return out


def node_from_json(obj: dict, prog: Program) -> DNode:
    rule = obj.get("rule")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}")
    meta = obj.get("meta", {})
    head = None
    if "entryHead" in meta:
        head = EntryHead.parse(meta["entryHead"])
    return DNode(
        rule=rule,
        cmd=parse_cmd_text(obj["cmd"], prog) if "cmd" in obj else None,
        P=parse_expr_text(obj["P"], prog) if "P" in obj else None,
        Q=parse_expr_text(obj["Q"], prog) if "Q" in obj else None,
        eps=effects_from_json(obj["eps"], prog) if "eps" in obj else None,
        guard=parse_expr_text(obj["guard"], prog) if "guard" in obj else None,
        R=parse_expr_text(obj["R"], prog) if "R" in obj else None,
        snap=meta.get("snap"),
        carry=meta.get("carry"),
        head=head,
        children=tuple(node_from_json(c, prog) for c in obj.get("children", ())),
    )


def _resolve_refs(obj: dict, siblings: dict[str, dict]) -> dict:
    """Replace {"ref": "total"} children with the sibling derivation."""
    if "ref" in obj:
        target = siblings.get(obj["ref"])
        if target is None:
            raise ValueError(f"unresolved certificate reference {obj['ref']!r}")
        return target
    if "children" in obj:
        obj = dict(obj)
        obj["children"] = [_resolve_refs(c, siblings) for c in obj["children"]]
    return obj


def load_certificates(text: str, prog: Program) -> CertificateFile:
    data = json.loads(text)
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported certificate schema {data.get('schema')!r}")
    out = CertificateFile(dialect=data.get("dialect", "xrl"))
    entries = data.get("certificates", [])
    by_member: dict[tuple[str, str], dict[str, dict]] = {}
    for item in entries:
        key = (item["owner"], item["member"])
        by_member.setdefault(key, {})[item["judgment"]] = item["derivation"]
    for item in entries:
        key = (item["owner"], item["member"])
        deriv = _resolve_refs(item["derivation"], by_member[key])
        out.certificates.append(Certificate(
            owner=item["owner"], member=item["member"],
            judgment=item["judgment"],
            derivation=node_from_json(deriv, prog)))
    return out


def dump_certificates(cf: CertificateFile) -> str:
    data = {
        "schema": SCHEMA,
        "dialect": cf.dialect,
        "certificates": [
            {"owner": c.owner, "member": c.member, "judgment": c.judgment,
             "derivation": node_to_json(c.derivation)}
            for c in cf.certificates
        ],
    }
    return json.dumps(data, indent=1, sort_keys=True)
