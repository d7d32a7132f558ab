"""Abstract syntax for the object language: expressions, commands, declarations.

Expression operators are dynamically overloaded: `+`, `-`, `<`, `<=` act on
regions when both operands are regions and on naturals otherwise. The unary
operators are boolean negation and singleton-region formation; region
displays `{e1, e2}` desugar to unions of singletons at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .values import EMPTY_REGION, TRUE, Value, VNat

# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

NOT = "!"
SING = "sing"

UNARY_OPS = (NOT, SING)
BINARY_OPS = ("+", "-", "*", "<", "<=", "==", "in", "&&", "||")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class FieldAcc:
    obj: "Expr"
    fname: str


@dataclass(frozen=True)
class Ite:
    guard: "Expr"
    then: "Expr"
    els: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    e: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class TypeTest:
    e: "Expr"
    tname: str


@dataclass(frozen=True)
class Call:
    """Function call e.g@N(e'). N is the static class or trait name."""

    recv: "Expr"
    func: str
    at: str
    args: tuple["Expr", ...]


Expr = Union[Var, Lit, FieldAcc, Ite, Unary, Binary, TypeTest, Call]

TRUE_EXPR = Lit(TRUE)
ZERO_EXPR = Lit(VNat(0))
EMPTY_REGION_EXPR = Lit(EMPTY_REGION)

THIS = Var("this")
RET_VAR = "ret"
MSE_VAR = "mse"

#: Names with fixed meaning that programs may not assign.
RESERVED_ASSIGN = ("this", "alloc", MSE_VAR)


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, FieldAcc):
        return free_vars(e.obj)
    if isinstance(e, Ite):
        return free_vars(e.guard) | free_vars(e.then) | free_vars(e.els)
    if isinstance(e, Unary):
        return free_vars(e.e)
    if isinstance(e, Binary):
        return free_vars(e.lhs) | free_vars(e.rhs)
    if isinstance(e, TypeTest):
        return free_vars(e.e)
    if isinstance(e, Call):
        out = free_vars(e.recv)
        for a in e.args:
            out |= free_vars(a)
        return out
    raise TypeError(f"not an expression: {e!r}")


def subst_vars(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Simultaneous substitution of expressions for variables (no binders)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Lit):
        return e
    if isinstance(e, FieldAcc):
        return FieldAcc(subst_vars(e.obj, mapping), e.fname)
    if isinstance(e, Ite):
        return Ite(subst_vars(e.guard, mapping), subst_vars(e.then, mapping),
                   subst_vars(e.els, mapping))
    if isinstance(e, Unary):
        return Unary(e.op, subst_vars(e.e, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, subst_vars(e.lhs, mapping), subst_vars(e.rhs, mapping))
    if isinstance(e, TypeTest):
        return TypeTest(subst_vars(e.e, mapping), e.tname)
    if isinstance(e, Call):
        return Call(subst_vars(e.recv, mapping), e.func, e.at,
                    tuple(subst_vars(a, mapping) for a in e.args))
    raise TypeError(f"not an expression: {e!r}")


def call_free(e: Expr) -> bool:
    """True iff no function-call construct occurs anywhere in `e`."""
    if isinstance(e, Call):
        return False
    if isinstance(e, (Var, Lit)):
        return True
    if isinstance(e, FieldAcc):
        return call_free(e.obj)
    if isinstance(e, Ite):
        return call_free(e.guard) and call_free(e.then) and call_free(e.els)
    if isinstance(e, Unary):
        return call_free(e.e)
    if isinstance(e, Binary):
        return call_free(e.lhs) and call_free(e.rhs)
    if isinstance(e, TypeTest):
        return call_free(e.e)
    raise TypeError(f"not an expression: {e!r}")


def pure(e: Expr) -> bool:
    """Call-free and field-access-free: the value depends on the stack only."""
    if isinstance(e, (Call, FieldAcc)):
        return False
    if isinstance(e, (Var, Lit)):
        return True
    if isinstance(e, Ite):
        return pure(e.guard) and pure(e.then) and pure(e.els)
    if isinstance(e, Unary):
        return pure(e.e)
    if isinstance(e, Binary):
        return pure(e.lhs) and pure(e.rhs)
    if isinstance(e, TypeTest):
        return pure(e.e)
    raise TypeError(f"not an expression: {e!r}")


def subexprs(e: Expr):
    """All subexpressions of `e`, including `e` itself (preorder)."""
    yield e
    if isinstance(e, FieldAcc):
        yield from subexprs(e.obj)
    elif isinstance(e, Ite):
        yield from subexprs(e.guard)
        yield from subexprs(e.then)
        yield from subexprs(e.els)
    elif isinstance(e, Unary):
        yield from subexprs(e.e)
    elif isinstance(e, Binary):
        yield from subexprs(e.lhs)
        yield from subexprs(e.rhs)
    elif isinstance(e, TypeTest):
        yield from subexprs(e.e)
    elif isinstance(e, Call):
        yield from subexprs(e.recv)
        for a in e.args:
            yield from subexprs(a)


def expr_height(e: Expr) -> int:
    kids = []
    if isinstance(e, FieldAcc):
        kids = [e.obj]
    elif isinstance(e, Ite):
        kids = [e.guard, e.then, e.els]
    elif isinstance(e, Unary):
        kids = [e.e]
    elif isinstance(e, Binary):
        kids = [e.lhs, e.rhs]
    elif isinstance(e, TypeTest):
        kids = [e.e]
    elif isinstance(e, Call):
        kids = [e.recv, *e.args]
    return 1 + max((expr_height(k) for k in kids), default=0)


def conj(*parts: Expr) -> Expr:
    """Left-associated conjunction, matching how `&&` parses."""
    if not parts:
        return TRUE_EXPR
    out = parts[0]
    for p in parts[1:]:
        out = Binary("&&", out, p)
    return out


def neg(e: Expr) -> Expr:
    return Unary(NOT, e)


def eq(a: Expr, b: Expr) -> Expr:
    return Binary("==", a, b)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    x: str
    e: Expr


@dataclass(frozen=True)
class FieldWrite:
    x: str
    fname: str
    e: Expr


@dataclass(frozen=True)
class AllocCmd:
    x: str
    cls: str


@dataclass(frozen=True)
class IfCmd:
    guard: Expr
    then: "Cmd"
    els: "Cmd"


@dataclass(frozen=True)
class SeqCmd:
    c1: "Cmd"
    c2: "Cmd"


@dataclass(frozen=True)
class CallCmd:
    """Method call x := y.m@N(z...); receiver and arguments are variables."""

    x: str
    recv: str
    method: str
    at: str
    args: tuple[str, ...]


Cmd = Union[Skip, Assign, FieldWrite, AllocCmd, IfCmd, SeqCmd, CallCmd]

SKIP = Skip()


def cmd_exprs(c: Cmd):
    """Expressions occurring directly in a command tree."""
    if isinstance(c, Assign):
        yield c.e
    elif isinstance(c, FieldWrite):
        yield c.e
    elif isinstance(c, IfCmd):
        yield c.guard
        yield from cmd_exprs(c.then)
        yield from cmd_exprs(c.els)
    elif isinstance(c, SeqCmd):
        yield from cmd_exprs(c.c1)
        yield from cmd_exprs(c.c2)


def cmd_vars(c: Cmd) -> frozenset[str]:
    """All variables syntactically mentioned by a command."""
    if isinstance(c, Skip):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset((c.x,)) | free_vars(c.e)
    if isinstance(c, FieldWrite):
        return frozenset((c.x,)) | free_vars(c.e)
    if isinstance(c, AllocCmd):
        return frozenset((c.x,))
    if isinstance(c, IfCmd):
        return free_vars(c.guard) | cmd_vars(c.then) | cmd_vars(c.els)
    if isinstance(c, SeqCmd):
        return cmd_vars(c.c1) | cmd_vars(c.c2)
    if isinstance(c, CallCmd):
        return frozenset((c.x, c.recv, *c.args))
    raise TypeError(f"not a command: {c!r}")


def assigned_vars(c: Cmd) -> frozenset[str]:
    """Stack variables a command may assign (allocation and calls included)."""
    if isinstance(c, (Skip, FieldWrite)):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset((c.x,))
    if isinstance(c, (AllocCmd, CallCmd)):
        return frozenset((c.x,))
    if isinstance(c, IfCmd):
        return assigned_vars(c.then) | assigned_vars(c.els)
    if isinstance(c, SeqCmd):
        return assigned_vars(c.c1) | assigned_vars(c.c2)
    raise TypeError(f"not a command: {c!r}")


# ---------------------------------------------------------------------------
# Declarations and programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderSpec:
    """A well-founded order on measure values, drawn from a fixed catalogue.

    kind is "nat" (less-than on the natural cast), "subset" (proper subset on
    the region cast) or "lex" with two sub-orders compared lexicographically.
    """

    kind: str
    sub: tuple["OrderSpec", "OrderSpec"] | None = None

    def __str__(self) -> str:
        if self.kind == "lex":
            return f"lex({self.sub[0]}, {self.sub[1]})"
        return self.kind


NAT_ORDER = OrderSpec("nat")
SUBSET_ORDER = OrderSpec("subset")


@dataclass
class FuncDecl:
    name: str
    param: str = "x"
    kind: int = 1
    dfc: Expr = TRUE_EXPR          # well-definedness precondition
    pre: Expr = TRUE_EXPR          # semantic precondition
    reads: Expr = EMPTY_REGION_EXPR
    measure: Expr = EMPTY_REGION_EXPR
    post: Expr = TRUE_EXPR
    body: Optional[Expr] = None
    #: clauses given in the source (inheritance bookkeeping, not identity)
    explicit: frozenset[str] = field(default=frozenset(), compare=False)


@dataclass
class MethodDecl:
    name: str
    params: tuple[str, ...] = ()
    pre: Expr = TRUE_EXPR
    wrt: Expr = EMPTY_REGION_EXPR
    measure: Optional[Expr] = None  # None encodes "decreases *"
    post: Expr = TRUE_EXPR
    body: Optional[Cmd] = None
    explicit: frozenset[str] = field(default=frozenset(), compare=False)

    @property
    def total(self) -> bool:
        return self.measure is not None


@dataclass
class TraitDecl:
    name: str
    fields: dict[str, str] = field(default_factory=dict)
    funcs: dict[str, FuncDecl] = field(default_factory=dict)
    methods: dict[str, MethodDecl] = field(default_factory=dict)


@dataclass
class ClassDecl:
    name: str
    extends: str
    fields: dict[str, str] = field(default_factory=dict)
    funcs: dict[str, FuncDecl] = field(default_factory=dict)
    methods: dict[str, MethodDecl] = field(default_factory=dict)


@dataclass
class Program:
    traits: dict[str, TraitDecl] = field(default_factory=dict)
    classes: dict[str, ClassDecl] = field(default_factory=dict)
    func_order: OrderSpec = NAT_ORDER
    method_order: OrderSpec = NAT_ORDER
    func_order_overrides: dict[str, OrderSpec] = field(default_factory=dict)
    method_order_overrides: dict[str, OrderSpec] = field(default_factory=dict)

    @property
    def field_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for t in self.traits.values():
            for f in t.fields:
                seen.setdefault(f)
        for c in self.classes.values():
            for f in c.fields:
                seen.setdefault(f)
        return tuple(seen)

    def field_type(self, fname: str) -> str | None:
        for t in self.traits.values():
            if fname in t.fields:
                return t.fields[fname]
        for c in self.classes.values():
            if fname in c.fields:
                return c.fields[fname]
        return None

    def is_class(self, name: str) -> bool:
        return name in self.classes

    def is_trait(self, name: str) -> bool:
        return name in self.traits

    def is_t(self, cls: str, trait: str) -> bool:
        """IsT: class `cls` extends trait `trait`."""
        c = self.classes.get(cls)
        return c is not None and c.extends == trait

    def implementers(self, trait: str) -> list[str]:
        return [c.name for c in self.classes.values() if c.extends == trait]

    def _owner(self, name: str):
        return self.classes.get(name) or self.traits.get(name)

    def has_f(self, owner: str, g: str) -> bool:
        o = self._owner(owner)
        return o is not None and g in o.funcs

    def has_m(self, owner: str, m: str) -> bool:
        o = self._owner(owner)
        return o is not None and m in o.methods

    def func(self, owner: str, g: str) -> FuncDecl:
        return self._owner(owner).funcs[g]

    def method(self, owner: str, m: str) -> MethodDecl:
        return self._owner(owner).methods[m]

    def member_measure(self, owner: str, name: str) -> Optional[Expr]:
        o = self._owner(owner)
        if o is not None and name in o.funcs:
            return o.funcs[name].measure
        if o is not None and name in o.methods:
            return o.methods[name].measure
        return None

    def total(self, owner: str, m: str) -> bool:
        return self.has_m(owner, m) and self.method(owner, m).total
