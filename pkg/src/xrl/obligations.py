"""Obligations and their discharge.

An obligation is one semantic side condition: an implication between
assertions, an effect inclusion or separation, a measure decrease, or one
of the per-program entry conditions (totality abstraction, virtual-entry
soundness, well-definedness of function bodies). Each carries a discharge
mode:

  syntactic  decided exactly by structure (reflexivity-style shortcuts);
  bounded    checked over a bounded state domain, exhaustively when the
             candidate count fits the budget and by deterministic seeded
             sampling otherwise;
  runtime    deferred to the interpreter monitors;
  trusted    assumed by policy; always listed in the final report.

Bounded checking binds stack variables that the hypothesis pins by
equality conjuncts (e.g. `n == this.nt`) and enumerates the rest from a
small value pool, so counterexamples with consistent bindings are found
quickly.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .callfree import eval_alpha, eval_bool_alpha
from .domain import (BoundedDomain, base_states, random_base_state,
                     reduced_value_pool, value_pool)
from .effects import (EffectList, disjoint_from_region, effects_to_json,
                      immune, locs, reff, separates, subeffect)
from .entries import Entry, EntryHead, ReducedEntry, TOP_HEAD, f_v, m_v
from .printer import print_expr
from .state import State, lookup, state_to_json, trunc_subst, update
from .syntax import (Binary, Expr, Program, TRUE_EXPR, TypeTest, Var,
                     call_free, conj, free_vars)
from .values import DEFAULT_VALUE, Ptr, cast_bool, cast_ptr
from .runtime import MonitorViolationError
from .wd import (WellDefinednessDefect, df, df2, eval_a2, eval_b, eval_b2,
                 top_entry)

PASS = "pass"
FAIL = "fail"
TRUSTED = "trusted"
SAMPLED = "sampled"

SEMANTIC_KINDS = ("IMPLIES", "SUBEFFECT", "IMMUNE", "DISJOINT", "SEPARATES",
                  "MEASURE_DECREASE", "DF_HOLDS")
ENTRY_KINDS = ("TOTAL_ABSTRACTION", "VIRTUAL_ENTRY_F", "VIRTUAL_ENTRY_M",
               "P1", "P2", "FDF1", "FDF2", "WELL_FOUNDED_F", "WELL_FOUNDED_M")


@dataclass
class Obligation:
    id: str
    kind: str
    payload: dict = field(default_factory=dict)
    mode: str = "bounded"
    status: Optional[str] = None
    witness: Optional[State] = None
    note: str = ""
    #: bounded checks: predicate over one state
    check: Optional[Callable[[State], bool]] = None
    #: hypothesis driving hypothesis-aware bindings (may be None)
    hyp: Optional[Expr] = None
    #: stack variables to bind beyond `this`
    stack_vars: tuple[str, ...] = ()
    #: restrict `this` to pointers of these classes (None = any)
    this_classes: Optional[tuple[str, ...]] = None
    #: fully custom discharge (entry-order obligations over entry pairs)
    custom_run: Optional[Callable[["Program", "BoundedDomain"],
                                  tuple[str, Optional[State], str]]] = None

    def to_json(self) -> dict:
        out = {"id": self.id, "kind": self.kind, "mode": self.mode,
               "status": self.status}
        if self.witness is not None:
            out["witness"] = state_to_json(self.witness)
        if self.note:
            out["note"] = self.note
        payload = {k: v for k, v in self.payload.items() if isinstance(v, str)}
        if payload:
            out["detail"] = payload
        return out


@dataclass
class DischargePolicy:
    """Per-kind budgets; entry obligations are governed by the domain cap."""

    bounded_budget: int = 3000
    runtime_kinds: frozenset[str] = frozenset()
    trusted_ids: frozenset[str] = frozenset()

    def budget(self, ob: Obligation, domain: BoundedDomain) -> int:
        if ob.kind in ENTRY_KINDS:
            return domain.cap
        return min(self.bounded_budget, domain.cap)


@dataclass
class ObligationReport:
    obligations: list[Obligation]

    @property
    def ok(self) -> bool:
        return all(ob.status != FAIL for ob in self.obligations)

    def summary(self) -> dict:
        out = {PASS: 0, FAIL: 0, TRUSTED: 0, SAMPLED: 0}
        for ob in self.obligations:
            out[ob.status] = out.get(ob.status, 0) + 1
        return out

    def failures(self) -> list[Obligation]:
        return [ob for ob in self.obligations if ob.status == FAIL]

    def to_json(self) -> dict:
        return {
            "schema": "xrlreport@1",
            "obligations": [ob.to_json() for ob in
                            sorted(self.obligations, key=lambda o: o.id)],
            "summary": self.summary(),
        }


# ---------------------------------------------------------------------------
# Obligation constructors for the rule checker
# ---------------------------------------------------------------------------


def _conjuncts(e: Expr):
    if isinstance(e, Binary) and e.op == "&&":
        yield from _conjuncts(e.lhs)
        yield from _conjuncts(e.rhs)
    else:
        yield e


def _vars_of(*exprs: Expr | None) -> tuple[str, ...]:
    out: set[str] = set()
    for e in exprs:
        if e is not None:
            out |= free_vars(e)
    out.discard("alloc")
    return tuple(sorted(out))


def _effect_vars(effects: EffectList) -> tuple[Expr, ...]:
    return tuple(eff.region for eff in effects)


def implies_ob(oid: str, hyp: Expr, concl: Expr, prog: Program) -> Obligation:
    ob = Obligation(
        oid, "IMPLIES",
        payload={"hyp": print_expr(hyp), "concl": print_expr(concl)},
        hyp=hyp, stack_vars=_vars_of(hyp, concl),
        check=lambda s: (not eval_b2(hyp, s, prog)) or eval_b2(concl, s, prog))
    hyp_parts = set(_conjuncts(hyp))
    if all(c in hyp_parts or c == TRUE_EXPR for c in _conjuncts(concl)):
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "conclusion conjuncts contained in hypothesis"
    return ob


def subeffect_ob(oid: str, pre: Expr, sub: EffectList, sup: EffectList,
                 prog: Program) -> Obligation:
    ob = Obligation(
        oid, "SUBEFFECT",
        payload={"pre": print_expr(pre), "sub": str(effects_to_json(sub)),
                 "sup": str(effects_to_json(sup))},
        hyp=pre, stack_vars=_vars_of(pre, *_effect_vars(sub), *_effect_vars(sup)),
        check=lambda s: (not eval_b2(pre, s, prog)) or subeffect(sub, sup, s, prog))
    if all(eff in sup for eff in sub):
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "every effect occurs in the superlist"
    return ob


def immune_ob(oid: str, eps2: EffectList, pre: Expr, eps1: EffectList,
              prog: Program) -> Obligation:
    ob = Obligation(
        oid, "IMMUNE",
        payload={"pre": print_expr(pre), "eps2": str(effects_to_json(eps2)),
                 "eps1": str(effects_to_json(eps1))},
        hyp=pre,
        stack_vars=_vars_of(pre, *_effect_vars(eps1), *_effect_vars(eps2)),
        check=lambda s: (not eval_b2(pre, s, prog)) or immune(eps2, eps1, s, prog))
    if not eps1 or not eps2 or all(not reff(eff.region) for eff in eps2):
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "region expressions read no written locations"
    return ob


def disjoint_ob(oid: str, pre: Expr, eps: EffectList, region: Expr,
                prog: Program) -> Obligation:
    ob = Obligation(
        oid, "DISJOINT",
        payload={"pre": print_expr(pre), "eps": str(effects_to_json(eps)),
                 "region": print_expr(region)},
        hyp=pre, stack_vars=_vars_of(pre, region, *_effect_vars(eps)),
        check=lambda s: ((not eval_b2(pre, s, prog))
                         or disjoint_from_region(eps, region, s, prog)))
    if not eps:
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "empty effect list"
    return ob


def separates_ob(oid: str, pre: Expr, eps: EffectList, eta: EffectList,
                 prog: Program) -> Obligation:
    ob = Obligation(
        oid, "SEPARATES",
        payload={"pre": print_expr(pre), "eps": str(effects_to_json(eps)),
                 "eta": str(effects_to_json(eta))},
        hyp=pre,
        stack_vars=_vars_of(pre, *_effect_vars(eps), *_effect_vars(eta)),
        check=lambda s: (not eval_b2(pre, s, prog)) or separates(eps, eta, s, prog))
    if not eps or not eta:
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "one side empty"
    elif all(a.fname != b.fname for a in eps for b in eta):
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "field sets disjoint"
    return ob


def df_holds_ob(oid: str, pre: Expr, expr: Expr, prog: Program) -> Obligation:
    ob = Obligation(
        oid, "DF_HOLDS",
        payload={"pre": print_expr(pre), "expr": print_expr(expr)},
        hyp=pre, stack_vars=_vars_of(pre, expr),
        check=lambda s: (not eval_b2(pre, s, prog))
                        or df2(top_entry(s), expr, s, prog))
    if call_free(expr):
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "call-free expressions are well-defined everywhere"
    return ob


def measure_decrease_ob(oid: str, pre: Expr, callee: EntryHead,
                        measure: Expr, recv: str, args: tuple[str, ...],
                        params: tuple[str, ...], caller: EntryHead,
                        prog: Program) -> Obligation:
    def check(s: State) -> bool:
        if not eval_b2(pre, s, prog):
            return True
        bindings = [("this", lookup(s, recv))]
        bindings += [(p, lookup(s, z)) for p, z in zip(params, args)]
        ens = trunc_subst(s, bindings)
        val = eval_alpha(measure, ens, prog)
        return m_v(prog, ReducedEntry(callee, val),
                   ReducedEntry(caller, lookup(s, "mse")))

    return Obligation(
        oid, "MEASURE_DECREASE",
        payload={"pre": print_expr(pre), "callee": str(callee),
                 "caller": str(caller), "measure": print_expr(measure),
                 "recv": recv, "args": ", ".join(args)},
        hyp=pre,
        stack_vars=tuple(sorted(set(_vars_of(pre)) | {recv, *args, "mse"})),
        check=check)


# ---------------------------------------------------------------------------
# Entry obligations (per-program conditions behind dispatch and recursion)
# ---------------------------------------------------------------------------


def _alpha_bool(e: Expr, s: State, prog: Program) -> bool:
    return eval_bool_alpha(e, s, prog)


def check_entry_obligations(prog: Program, domain: BoundedDomain,
                            policy: "DischargePolicy | None" = None
                            ) -> ObligationReport:
    """Build and discharge the per-program entry obligations."""
    obs = build_entry_obligations(prog, domain)
    return discharge(obs, prog, domain, policy or DischargePolicy())


def build_entry_obligations(prog: Program,
                            domain: BoundedDomain) -> list[Obligation]:
    obs: list[Obligation] = []
    for tname, trait in prog.traits.items():
        impls = prog.implementers(tname)
        for m, sig in trait.methods.items():
            for cname in impls:
                ob = Obligation(
                    f"entry/TotalAbstraction/{tname}.{m}/{cname}",
                    "TOTAL_ABSTRACTION",
                    payload={"trait": tname, "method": m, "class": cname},
                    mode="syntactic")
                if sig.total and not prog.total(cname, m):
                    ob.status = FAIL
                    ob.note = (f"trait method {tname}.{m} is total but "
                               f"{cname}.{m} is declared decreases *")
                else:
                    ob.status = PASS
                obs.append(ob)
            obs.append(_virtual_entry_ob(prog, tname, m, impls, is_func=False))
        for g, sig in trait.funcs.items():
            obs.append(_virtual_entry_ob(prog, tname, g, impls, is_func=True))
            for cname in impls:
                if not prog.has_f(cname, g):
                    continue
                obs.extend(_func_entry_obs(prog, tname, g, cname))
    obs.append(_wellfounded_ob(prog, "WELL_FOUNDED_F",
                               lambda a, b: f_v(prog, a, b), func_heads(prog)))
    obs.append(_wellfounded_ob(prog, "WELL_FOUNDED_M",
                               lambda a, b: m_v(prog, a, b), method_heads(prog)))
    return obs


def func_heads(prog: Program) -> list[EntryHead]:
    out = []
    for owner in (*prog.traits.values(), *prog.classes.values()):
        for g in owner.funcs:
            out.append(EntryHead(owner.name, g))
    return out


def method_heads(prog: Program) -> list[EntryHead]:
    out = []
    for owner in (*prog.traits.values(), *prog.classes.values()):
        for m in owner.methods:
            if prog.total(owner.name, m):
                out.append(EntryHead(owner.name, m))
    return out


def _virtual_entry_ob(prog: Program, tname: str, member: str,
                      impls: list[str], is_func: bool) -> Obligation:
    kind = "VIRTUAL_ENTRY_F" if is_func else "VIRTUAL_ENTRY_M"
    oid = f"entry/{'VirtualEntrySoundF' if is_func else 'VirtualEntrySoundM'}/{tname}.{member}"
    ob = Obligation(oid, kind, payload={"trait": tname, "member": member})
    t_measure = prog.member_measure(tname, member)
    mismatched = [c for c in impls
                  if prog.member_measure(c, member) != t_measure]
    if not mismatched:
        ob.mode, ob.status = "syntactic", PASS
        ob.note = "class measures syntactically equal the trait measure"
        return ob
    order = f_v if is_func else m_v

    def run(p: Program, dom: BoundedDomain):
        heads = func_heads(p) if is_func else method_heads(p)
        heads = heads + [TOP_HEAD]
        values = reduced_value_pool(p, dom)
        states = base_states(p, dom)
        stride = max(1, len(states) // 200)
        probe_states = states[::stride]
        for cname in mismatched:
            cm = p.member_measure(cname, member)
            if cm is None or t_measure is None:
                return FAIL, None, (f"{cname}.{member} and {tname}.{member} "
                                    "disagree on totality")
            for s in probe_states:
                for ptr in sorted(s.alloc, key=lambda q: (q.addr, q.cls)):
                    st = update(s, "this", ptr)
                    ts = trunc_subst(st, [("this", ptr)])
                    tv = eval_alpha(t_measure, ts, p)
                    cv = eval_alpha(cm, ts, p)
                    for h in heads:
                        for val in values:
                            upper = ReducedEntry(h, val)
                            if (order(p, ReducedEntry(EntryHead(tname, member), tv), upper)
                                    and not order(p, ReducedEntry(EntryHead(cname, member), cv), upper)):
                                return FAIL, ts, (f"virtual entry {tname};{member} "
                                                  f"decreases but {cname};{member} does not")
        return SAMPLED, None, "no counterexample over the probe states"

    ob.custom_run = run
    return ob


def _func_entry_obs(prog: Program, tname: str, g: str,
                    cname: str) -> list[Obligation]:
    tdecl = prog.func(tname, g)
    cdecl = prog.func(cname, g)
    obs: list[Obligation] = []
    k1 = tdecl.kind == 1
    tag = "1" if k1 else "2"

    # P: the trait's well-definedness precondition transfers to the class's.
    pid = f"entry/P{tag}/{tname}.{g}/{cname}"
    hyp = conj(tdecl.dfc, TypeTest(Var("this"), cname))
    if tdecl.dfc == cdecl.dfc:
        obs.append(Obligation(pid, f"P{tag}",
                              payload={"trait": tname, "func": g, "class": cname},
                              mode="syntactic", status=PASS,
                              note="class and trait share the precondition text"))
    else:
        if k1:
            def pcheck(s, hyp=hyp, cd=cdecl.dfc):
                return (not _alpha_bool(hyp, s, prog)) or _alpha_bool(cd, s, prog)
        else:
            def pcheck(s, hyp=hyp, cd=cdecl.dfc):
                return (not eval_b(hyp, s, prog)) or eval_b(cd, s, prog)
        obs.append(Obligation(pid, f"P{tag}",
                              payload={"trait": tname, "func": g, "class": cname},
                              hyp=hyp, this_classes=(cname,),
                              stack_vars=_vars_of(hyp, cdecl.dfc),
                              check=pcheck))

    # FDF: the class's precondition makes the class body well-defined.
    fid = f"entry/FDF{tag}/{tname}.{g}/{cname}"
    body = cdecl.body
    if body is None:
        return obs
    if call_free(body):
        obs.append(Obligation(fid, f"FDF{tag}",
                              payload={"trait": tname, "func": g, "class": cname},
                              mode="syntactic", status=PASS,
                              note="call-free bodies are well-defined everywhere"))
        return obs
    if k1:
        def fcheck(s, cd=cdecl.dfc, body=body, head=EntryHead(cname, g)):
            return (not _alpha_bool(cd, s, prog)) or df(Entry(head, s), body, s, prog)
    else:
        def fcheck(s, cd=cdecl.dfc, body=body, head=EntryHead(cname, g)):
            return (not eval_b(cd, s, prog)) or df2(Entry(head, s), body, s, prog)
    obs.append(Obligation(fid, f"FDF{tag}",
                          payload={"trait": tname, "func": g, "class": cname},
                          hyp=cdecl.dfc, this_classes=(cname,),
                          stack_vars=_vars_of(cdecl.dfc, body) or ("this",),
                          check=fcheck))
    return obs


def _wellfounded_ob(prog: Program, kind: str, order, heads) -> Obligation:
    def run(p: Program, dom: BoundedDomain):
        return check_wellfoundedness(order, heads, p, dom)

    ob = Obligation(f"entry/{kind}", kind, custom_run=run)
    return ob


def check_wellfoundedness(order, heads: list[EntryHead], prog: Program,
                          domain: BoundedDomain):
    """Irreflexivity, transitivity and acyclicity of a reduced-entry order
    over the bounded value pool. The verdict is "no counterexample found",
    not a proof."""
    values = reduced_value_pool(prog, domain)
    nodes = [ReducedEntry(h, v) for h in [*heads, TOP_HEAD] for v in values]
    if len(nodes) > 2000:
        rng = random.Random(domain.seed)
        nodes = rng.sample(nodes, 2000)
        exact = False
    else:
        exact = True
    n = len(nodes)
    # masks[i] holds the set of j with nodes[i] strictly below nodes[j]
    masks = []
    for a in nodes:
        m = 0
        for j, b in enumerate(nodes):
            if order(a, b):
                m |= 1 << j
        masks.append(m)
    for i in range(n):
        if masks[i] >> i & 1:
            return FAIL, None, f"1-cycle: reflexive at {nodes[i].head}"
    for i in range(n):
        mm = masks[i]
        while mm:
            j = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            if masks[j] & ~masks[i]:
                k = ((masks[j] & ~masks[i]) & -(masks[j] & ~masks[i])).bit_length() - 1
                return FAIL, None, (
                    f"not transitive: {nodes[i].head} < {nodes[j].head} < "
                    f"{nodes[k].head} without {nodes[i].head} < {nodes[k].head}")
    # irreflexive + transitive on a finite set rules out descending cycles;
    # keep an explicit cycle scan so a broken order reports a chain.
    color = [0] * n
    for start in range(n):
        if color[start]:
            continue
        stack = [(start, masks[start])]
        color[start] = 1
        trail = [start]
        while stack:
            i, rest = stack[-1]
            if rest:
                j = (rest & -rest).bit_length() - 1
                stack[-1] = (i, rest & (rest - 1))
                if color[j] == 1:
                    chain = " < ".join(str(nodes[k].head) for k in trail[-3:])
                    return FAIL, None, f"descending cycle near {chain}"
                if color[j] == 0:
                    color[j] = 1
                    trail.append(j)
                    stack.append((j, masks[j]))
            else:
                color[i] = 2
                trail.pop()
                stack.pop()
    return (PASS if exact else SAMPLED), None, \
        f"no cycle among {n} reduced entries"


# ---------------------------------------------------------------------------
# Discharge engine
# ---------------------------------------------------------------------------


def _binding_plan(ob: Obligation) -> tuple[list[tuple[str, Expr]], list[str]]:
    """Split stack variables into equality-seeded and pool-enumerated ones."""
    needed = [v for v in ob.stack_vars if v != "this"]
    candidates: dict[str, Expr] = {}
    if ob.hyp is not None:
        for c in _conjuncts(ob.hyp):
            if isinstance(c, Binary) and c.op == "==":
                for v, rhs in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                    if (isinstance(v, Var) and v.name in needed
                            and v.name not in candidates
                            and v.name not in free_vars(rhs)):
                        candidates[v.name] = rhs
    ordered: list[tuple[str, Expr]] = []
    placed: set[str] = set()
    changed = True
    while changed:
        changed = False
        for v, rhs in candidates.items():
            if v in placed:
                continue
            deps = free_vars(rhs) & set(candidates) - placed
            if not deps - {v}:
                ordered.append((v, rhs))
                placed.add(v)
                changed = True
    hard = [v for v in needed if v not in placed]
    return ordered, hard


def _apply_plan(plan: list[tuple[str, Expr]], s: State, prog: Program) -> State:
    for v, rhs in plan:
        try:
            if df2(top_entry(s), rhs, s, prog):
                val = eval_a2(rhs, top_entry(s), s, prog)
            else:
                val = DEFAULT_VALUE
        except Exception:
            val = DEFAULT_VALUE
        s = update(s, v, val)
    return s


def _this_choices(ob: Obligation, base: State) -> list:
    if "this" not in ob.stack_vars and ob.this_classes is None:
        return [None]
    ptrs = sorted(base.alloc, key=lambda p: (p.addr, p.cls))
    if ob.this_classes is not None:
        ptrs = [p for p in ptrs if p.cls in ob.this_classes]
    return ptrs or [None]


def _candidates(ob: Obligation, bases: list[State], prog: Program,
                domain: BoundedDomain, budget: int):
    """Deterministic candidate-state stream and whether it was exhaustive."""
    plan, hard = _binding_plan(ob)

    def expand(base: State, limit_combos: int | None):
        world = sorted(base.alloc, key=lambda p: (p.addr, p.cls))
        pool = value_pool(world, domain)
        for this_v in _this_choices(ob, base):
            stacked = base if this_v is None else update(base, "this", this_v)
            combos = itertools.product(pool, repeat=len(hard))
            if limit_combos is not None:
                combos = itertools.islice(combos, limit_combos)
            for combo in combos:
                s = stacked
                for v, val in zip(hard, combo):
                    s = update(s, v, val)
                yield _apply_plan(plan, s, prog)

    # exact-count check for exhaustive mode
    total = 0
    exhaustive = True
    for base in bases:
        world = sorted(base.alloc, key=lambda p: (p.addr, p.cls))
        pool_n = len(value_pool(world, domain))
        total += len(_this_choices(ob, base)) * (pool_n ** len(hard))
        if total > budget:
            exhaustive = False
            break

    if exhaustive:
        def stream():
            for base in bases:
                yield from expand(base, None)
        return stream(), True

    rng = random.Random((domain.seed, ob.id).__repr__())

    def stream():
        yielded = 0
        stride = max(1, len(bases) // max(1, budget // 8))
        for base in bases[::stride]:
            for s in expand(base, 4):
                yield s
                yielded += 1
                if yielded >= budget // 2:
                    break
            if yielded >= budget // 2:
                break
        while yielded < budget:
            base = random_base_state(prog, domain, rng)
            world = sorted(base.alloc, key=lambda p: (p.addr, p.cls))
            pool = value_pool(world, domain)
            choices = _this_choices(ob, base)
            s = base
            if choices and choices[0] is not None:
                s = update(s, "this", rng.choice(choices))
            for v in hard:
                s = update(s, v, rng.choice(pool))
            yield _apply_plan(plan, s, prog)
            yielded += 1
    return stream(), False


def discharge(obligations: list[Obligation], prog: Program,
              domain: BoundedDomain,
              policy: DischargePolicy | None = None) -> ObligationReport:
    """Decide every obligation; deterministic given (obligations, domain, seed)."""
    policy = policy or DischargePolicy()
    bases: list[State] | None = None
    seen: dict[tuple, Obligation] = {}
    for ob in obligations:
        if ob.status is not None:
            continue
        key = (ob.kind, tuple(sorted((k, v) for k, v in ob.payload.items()
                                     if isinstance(v, str))))
        prior = seen.get(key) if ob.payload else None
        if prior is not None:
            ob.status, ob.witness = prior.status, prior.witness
            ob.note = prior.note or "shared verdict with " + prior.id
            continue
        if ob.id in policy.trusted_ids or ob.mode == "trusted":
            ob.mode, ob.status = "trusted", TRUSTED
            continue
        if ob.kind in policy.runtime_kinds or ob.mode == "runtime":
            ob.mode, ob.status = "runtime", TRUSTED
            ob.note = ob.note or "deferred to interpreter monitors"
            continue
        if ob.custom_run is not None:
            try:
                status, witness, note = ob.custom_run(prog, domain)
            except MonitorViolationError as violation:
                status, witness = FAIL, None
                note = f"evaluation tripped a monitor: {violation}"
            ob.status, ob.witness = status, witness
            ob.note = ob.note or note
            continue
        if ob.check is None:
            raise ValueError(f"obligation {ob.id} has no discharge method")
        if bases is None:
            bases = base_states(prog, domain)
        budget = policy.budget(ob, domain)
        stream, exhaustive = _candidates(ob, bases, prog, domain, budget)
        ob.status = PASS if exhaustive else SAMPLED
        for s in stream:
            try:
                ok = ob.check(s)
            except MonitorViolationError as violation:
                ok = False
                ob.note = f"evaluation tripped a monitor: {violation}"
            except WellDefinednessDefect as defect:
                ok = False
                ob.note = f"evaluation not well-defined: {defect}"
            if not ok:
                ob.status = FAIL
                ob.witness = s
                break
        if ob.payload:
            seen[key] = ob
    return ObligationReport(list(obligations))
