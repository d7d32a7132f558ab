"""Surface parser for .xrl sources.

The surface syntax is Dafny-flavored. Sugar handled here:
  - `return e` becomes `ret := e`; `var x := e` is a plain assignment;
  - `a ==> b` becomes `if a then b else true`;
  - `a != b` and `a !in b` become negations;
  - region displays `{e1, e2}` become unions of singleton regions;
  - nullable markers `T?` in type annotations are recorded but carry no
    semantics (null is an ordinary pointer value);
  - class members may omit spec clauses, inheriting the trait's text.

Two constructs need name resolution after all declarations are known:
`x := C` is an allocation when C is a declared class, and an assignment
whose right-hand side is a call resolves to a method-call command when the
callee is a method.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic
from .syntax import (AllocCmd, Assign, Binary, Call, CallCmd, ClassDecl, Cmd,
                     EMPTY_REGION_EXPR, Expr, FieldAcc, FieldWrite, FuncDecl,
                     IfCmd, Ite, Lit, MethodDecl, NAT_ORDER, NOT, OrderSpec,
                     Program, SKIP, SeqCmd, SING, Skip, TraitDecl, TRUE_EXPR,
                     TypeTest, Unary, Var)
from .values import NULL, TRUE, FALSE, VNat

KEYWORDS = {
    "trait", "class", "extends", "var", "function", "method", "returns",
    "requires", "reads", "modifies", "decreases", "ensures", "kind", "order",
    "if", "then", "else", "skip", "return", "true", "false", "null", "in",
    "is",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<nat>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==>|==|!=|<=|:=|&&|\|\||[-+*<>!(){},;.@:?=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # "nat" | "name" | "op" | "eof"
    text: str
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.diagnostic = Diagnostic("syntax-error", message, line, col)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class ParseResult:
    program: Program | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None and not self.diagnostics


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def eat(self, text: str) -> Token:
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {self.tok.text!r}",
                             self.tok.line, self.tok.col)
        return self.advance()

    def eat_name(self, what: str = "name") -> str:
        if self.tok.kind != "name" or self.tok.text in KEYWORDS:
            raise ParseError(f"expected {what}, found {self.tok.text!r}",
                             self.tok.line, self.tok.col)
        return self.advance().text

    # -- expressions --------------------------------------------------------

    def expr(self) -> Expr:
        left = self.or_expr()
        if self.at("==>"):
            self.advance()
            return Ite(left, self.expr(), TRUE_EXPR)
        return left

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.at("||"):
            self.advance()
            left = Binary("||", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.cmp_expr()
        while self.at("&&"):
            self.advance()
            left = Binary("&&", left, self.cmp_expr())
        return left

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        if self.at("is"):
            self.advance()
            return TypeTest(left, self.eat_name("type name"))
        if self.at("!") and self.peek().text == "in":
            self.advance()
            self.advance()
            return Unary(NOT, Binary("in", left, self.add_expr()))
        for op in ("==", "!=", "<=", "<", "in"):
            if self.at(op):
                self.advance()
                right = self.add_expr()
                if op == "!=":
                    return Unary(NOT, Binary("==", left, right))
                return Binary(op, left, right)
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            left = Binary(op, left, self.mul_expr())
        return left

    def mul_expr(self) -> Expr:
        left = self.unary_expr()
        while self.at("*"):
            self.advance()
            left = Binary("*", left, self.unary_expr())
        return left

    def unary_expr(self) -> Expr:
        if self.at("!"):
            self.advance()
            return Unary(NOT, self.unary_expr())
        return self.postfix_expr()

    def postfix_expr(self) -> Expr:
        e = self.atom()
        while self.at("."):
            self.advance()
            name = self.eat_name("field or function name")
            if self.at("@"):
                self.advance()
                at = self.eat_name("class or trait name")
                self.eat("(")
                args: list[Expr] = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.eat(")")
                e = Call(e, name, at, tuple(args))
            else:
                e = FieldAcc(e, name)
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "nat":
            self.advance()
            return Lit(VNat(int(t.text)))
        if self.at("true"):
            self.advance()
            return Lit(TRUE)
        if self.at("false"):
            self.advance()
            return Lit(FALSE)
        if self.at("null"):
            self.advance()
            return Lit(NULL)
        if self.at("if"):
            self.advance()
            guard = self.expr()
            self.eat("then")
            then = self.expr()
            self.eat("else")
            return Ite(guard, then, self.expr())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.eat(")")
            return e
        if self.at("{"):
            self.advance()
            if self.at("}"):
                self.advance()
                return EMPTY_REGION_EXPR
            parts = [Unary(SING, self.expr())]
            while self.at(","):
                self.advance()
                parts.append(Unary(SING, self.expr()))
            self.eat("}")
            out = parts[0]
            for p in parts[1:]:
                out = Binary("+", out, p)
            return out
        if t.kind == "name" and t.text not in KEYWORDS:
            self.advance()
            return Var(t.text)
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col)

    # -- commands -----------------------------------------------------------

    def stmts(self) -> Cmd:
        if self.at("}"):
            return SKIP
        parts = [self.stmt()]
        while self.at(";"):
            self.advance()
            if self.at("}") or self.tok.kind == "eof":
                break
            parts.append(self.stmt())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = SeqCmd(p, out)
        return out

    def stmt(self) -> Cmd:
        if self.at("skip"):
            self.advance()
            return SKIP
        if self.at("if"):
            self.advance()
            guard = self.expr()
            self.eat("{")
            then = self.stmts()
            self.eat("}")
            els: Cmd = SKIP
            if self.at("else"):
                self.advance()
                self.eat("{")
                els = self.stmts()
                self.eat("}")
            return IfCmd(guard, then, els)
        if self.at("return"):
            self.advance()
            return Assign("ret", self.expr())
        if self.at("var"):
            self.advance()
            x = self.eat_name("variable")
            self.eat(":=")
            return Assign(x, self.expr())
        x = self.eat_name("variable")
        if self.at("."):
            self.advance()
            fname = self.eat_name("field name")
            self.eat(":=")
            return FieldWrite(x, fname, self.expr())
        self.eat(":=")
        return Assign(x, self.expr())

    # -- declarations ---------------------------------------------------------

    def type_ann(self) -> str:
        if self.tok.kind != "name":
            raise ParseError(f"expected type, found {self.tok.text!r}",
                             self.tok.line, self.tok.col)
        name = self.advance().text
        if name == "set" and self.at("<"):
            self.advance()
            inner = self.eat_name("element type")
            self.eat(">")
            return f"set<{inner}>"
        if self.at("?"):
            self.advance()
            return f"{name}?"
        return name

    def order_spec(self) -> OrderSpec:
        name = self.eat_name("order kind")
        if name == "nat":
            return OrderSpec("nat")
        if name == "subset":
            return OrderSpec("subset")
        if name == "lex":
            self.eat("(")
            a = self.order_spec()
            self.eat(",")
            b = self.order_spec()
            self.eat(")")
            return OrderSpec("lex", (a, b))
        raise ParseError(f"unknown order {name!r} (expected nat, subset or lex)",
                         self.tok.line, self.tok.col)

    def clause_block(self, is_method: bool, diags: list[Diagnostic]) -> dict:
        got: dict = {}
        while True:
            t = self.tok
            if self.at("kind") and not is_method:
                self.advance()
                if self.tok.kind != "nat" or self.tok.text not in ("1", "2"):
                    raise ParseError("kind must be 1 or 2", t.line, t.col)
                self._set_once(got, "kind", int(self.advance().text), t, diags)
            elif self.at("requires"):
                self.advance()
                e = self.expr()
                got["requires"] = Binary("&&", got["requires"], e) if "requires" in got else e
            elif self.at("ensures"):
                self.advance()
                e = self.expr()
                got["ensures"] = Binary("&&", got["ensures"], e) if "ensures" in got else e
            elif self.at("reads") and not is_method:
                self.advance()
                self._set_once(got, "reads", self.expr(), t, diags)
            elif self.at("modifies") and is_method:
                self.advance()
                self._set_once(got, "modifies", self.expr(), t, diags)
            elif self.at("decreases"):
                self.advance()
                if self.at("*"):
                    if not is_method:
                        raise ParseError("only methods may have decreases *",
                                         t.line, t.col)
                    self.advance()
                    self._set_once(got, "decreases", None, t, diags)
                else:
                    self._set_once(got, "decreases", self.expr(), t, diags)
            else:
                return got

    def _set_once(self, got: dict, key: str, value, t: Token,
                  diags: list[Diagnostic]) -> None:
        if key in got:
            diags.append(Diagnostic("duplicate-clause", f"duplicate {key} clause",
                                    t.line, t.col))
        got[key] = value

    def func_decl(self, in_trait: bool, diags: list[Diagnostic]) -> FuncDecl:
        t = self.tok
        name = self.eat_name("function name")
        self.eat("(")
        param = "x"
        if not self.at(")"):
            param = self.eat_name("parameter")
            if self.at(":"):
                self.advance()
                self.type_ann()
        self.eat(")")
        if self.at(":"):
            self.advance()
            self.eat("(")
            rname = self.eat_name("result name")
            if rname != "ret":
                diags.append(Diagnostic("bad-result-name",
                                        f"function result must be named ret, got {rname}",
                                        t.line, t.col))
            self.eat(":")
            self.type_ann()
            self.eat(")")
        got = self.clause_block(is_method=False, diags=diags)
        body = None
        if self.at("{"):
            if in_trait:
                diags.append(Diagnostic("trait-member-body",
                                        f"trait function {name} may not have a body",
                                        t.line, t.col))
            self.advance()
            body = self.expr()
            self.eat("}")
        elif not in_trait:
            diags.append(Diagnostic("missing-body",
                                    f"class function {name} needs a body",
                                    t.line, t.col))
        d = FuncDecl(name=name, param=param)
        d.explicit = frozenset(got)
        if "kind" in got:
            d.kind = got["kind"]
        if "requires" in got:
            d.dfc = got["requires"]
        if "reads" in got:
            d.reads = got["reads"]
        if "decreases" in got:
            d.measure = got["decreases"]
        if "ensures" in got:
            d.post = got["ensures"]
        d.body = body
        return d

    def method_decl(self, in_trait: bool, diags: list[Diagnostic]) -> MethodDecl:
        t = self.tok
        name = self.eat_name("method name")
        self.eat("(")
        params: list[str] = []
        if not self.at(")"):
            while True:
                params.append(self.eat_name("parameter"))
                if self.at(":"):
                    self.advance()
                    self.type_ann()
                if not self.at(","):
                    break
                self.advance()
        self.eat(")")
        if self.at("returns"):
            self.advance()
            self.eat("(")
            rname = self.eat_name("result name")
            if rname != "ret":
                diags.append(Diagnostic("bad-result-name",
                                        f"method result must be named ret, got {rname}",
                                        t.line, t.col))
            self.eat(":")
            self.type_ann()
            self.eat(")")
        got = self.clause_block(is_method=True, diags=diags)
        body = None
        if self.at("{"):
            if in_trait:
                diags.append(Diagnostic("trait-member-body",
                                        f"trait method {name} may not have a body",
                                        t.line, t.col))
            self.advance()
            body = self.stmts()
            self.eat("}")
        elif not in_trait:
            diags.append(Diagnostic("missing-body",
                                    f"class method {name} needs a body",
                                    t.line, t.col))
        d = MethodDecl(name=name, params=tuple(params))
        d.explicit = frozenset(got)
        if "requires" in got:
            d.pre = got["requires"]
        if "modifies" in got:
            d.wrt = got["modifies"]
        d.measure = got.get("decreases", None)
        if "ensures" in got:
            d.post = got["ensures"]
        d.body = body
        return d

    def members(self, owner, in_trait: bool, diags: list[Diagnostic]) -> None:
        while not self.at("}"):
            t = self.tok
            if self.at("var"):
                self.advance()
                fname = self.eat_name("field name")
                self.eat(":")
                ann = self.type_ann()
                if fname in owner.fields:
                    diags.append(Diagnostic("duplicate-declaration",
                                            f"duplicate field {fname}", t.line, t.col))
                owner.fields[fname] = ann
            elif self.at("function"):
                self.advance()
                d = self.func_decl(in_trait, diags)
                if d.name in owner.funcs or d.name in owner.methods:
                    diags.append(Diagnostic("duplicate-declaration",
                                            f"duplicate member {d.name}", t.line, t.col))
                owner.funcs[d.name] = d
            elif self.at("method"):
                self.advance()
                d = self.method_decl(in_trait, diags)
                if d.name in owner.funcs or d.name in owner.methods:
                    diags.append(Diagnostic("duplicate-declaration",
                                            f"duplicate member {d.name}", t.line, t.col))
                owner.methods[d.name] = d
            else:
                raise ParseError(f"expected member declaration, found {t.text!r}",
                                 t.line, t.col)

    def program(self, diags: list[Diagnostic]) -> Program:
        prog = Program()
        saw_order = {"functions": False, "methods": False}
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("order"):
                self.advance()
                which = self.eat_name("'functions' or 'methods'")
                if which not in ("functions", "methods"):
                    raise ParseError("expected 'functions' or 'methods' after order",
                                     t.line, t.col)
                member = None
                if self.tok.kind == "name" and self.tok.text not in ("nat", "subset", "lex"):
                    member = self.eat_name("member name")
                spec = self.order_spec()
                if member is None:
                    if saw_order[which]:
                        diags.append(Diagnostic("duplicate-declaration",
                                                f"duplicate order {which}", t.line, t.col))
                    saw_order[which] = True
                    if which == "functions":
                        prog.func_order = spec
                    else:
                        prog.method_order = spec
                else:
                    target = (prog.func_order_overrides if which == "functions"
                              else prog.method_order_overrides)
                    if member in target:
                        diags.append(Diagnostic("duplicate-declaration",
                                                f"duplicate order for {member}",
                                                t.line, t.col))
                    target[member] = spec
            elif self.at("trait"):
                self.advance()
                name = self.eat_name("trait name")
                if name in prog.traits or name in prog.classes:
                    diags.append(Diagnostic("duplicate-declaration",
                                            f"duplicate declaration {name}",
                                            t.line, t.col))
                decl = TraitDecl(name)
                self.eat("{")
                self.members(decl, in_trait=True, diags=diags)
                self.eat("}")
                prog.traits[name] = decl
            elif self.at("class"):
                self.advance()
                name = self.eat_name("class name")
                if name in prog.traits or name in prog.classes:
                    diags.append(Diagnostic("duplicate-declaration",
                                            f"duplicate declaration {name}",
                                            t.line, t.col))
                self.eat("extends")
                ext = self.eat_name("trait name")
                decl = ClassDecl(name, ext)
                self.eat("{")
                self.members(decl, in_trait=False, diags=diags)
                self.eat("}")
                prog.classes[name] = decl
            else:
                raise ParseError(f"expected declaration, found {t.text!r}",
                                 t.line, t.col)
        return prog


# ---------------------------------------------------------------------------
# Name resolution and spec inheritance
# ---------------------------------------------------------------------------


def _resolve_expr(e: Expr, prog: Program, diags: list[Diagnostic]) -> Expr:
    if isinstance(e, (Var, Lit)):
        return e
    if isinstance(e, FieldAcc):
        return FieldAcc(_resolve_expr(e.obj, prog, diags), e.fname)
    if isinstance(e, Ite):
        return Ite(_resolve_expr(e.guard, prog, diags),
                   _resolve_expr(e.then, prog, diags),
                   _resolve_expr(e.els, prog, diags))
    if isinstance(e, Unary):
        return Unary(e.op, _resolve_expr(e.e, prog, diags))
    if isinstance(e, Binary):
        return Binary(e.op, _resolve_expr(e.lhs, prog, diags),
                      _resolve_expr(e.rhs, prog, diags))
    if isinstance(e, TypeTest):
        return TypeTest(_resolve_expr(e.e, prog, diags), e.tname)
    if isinstance(e, Call):
        recv = _resolve_expr(e.recv, prog, diags)
        args = tuple(_resolve_expr(a, prog, diags) for a in e.args)
        if prog.has_m(e.at, e.func):
            diags.append(Diagnostic("method-in-expression",
                                    f"method {e.at}.{e.func} used as an expression"))
        elif len(args) == 0:
            args = (Lit(VNat(0)),)
        elif len(args) > 1:
            diags.append(Diagnostic("function-arity",
                                    f"function {e.at}.{e.func} takes one argument"))
        return Call(recv, e.func, e.at, args)
    raise TypeError(f"not an expression: {e!r}")


def _resolve_cmd(c: Cmd, prog: Program, diags: list[Diagnostic]) -> Cmd:
    if isinstance(c, Skip):
        return c
    if isinstance(c, Assign):
        if isinstance(c.e, Var) and prog.is_class(c.e.name):
            return AllocCmd(c.x, c.e.name)
        if isinstance(c.e, Call) and prog.has_m(c.e.at, c.e.func):
            recv = c.e.recv
            if not isinstance(recv, Var):
                diags.append(Diagnostic("call-receiver",
                                        "method call receiver must be a variable"))
                return c
            argnames = []
            for a in c.e.args:
                if not isinstance(a, Var):
                    diags.append(Diagnostic("call-argument",
                                            "method call arguments must be variables"))
                    return c
                argnames.append(a.name)
            return CallCmd(c.x, recv.name, c.e.func, c.e.at, tuple(argnames))
        return Assign(c.x, _resolve_expr(c.e, prog, diags))
    if isinstance(c, FieldWrite):
        return FieldWrite(c.x, c.fname, _resolve_expr(c.e, prog, diags))
    if isinstance(c, AllocCmd):
        return c
    if isinstance(c, IfCmd):
        return IfCmd(_resolve_expr(c.guard, prog, diags),
                     _resolve_cmd(c.then, prog, diags),
                     _resolve_cmd(c.els, prog, diags))
    if isinstance(c, SeqCmd):
        return SeqCmd(_resolve_cmd(c.c1, prog, diags), _resolve_cmd(c.c2, prog, diags))
    if isinstance(c, CallCmd):
        return c
    raise TypeError(f"not a command: {c!r}")


_FUNC_CLAUSES = (("kind", "kind"), ("requires", "dfc"), ("reads", "reads"),
                 ("decreases", "measure"), ("ensures", "post"))
_METHOD_CLAUSES = (("requires", "pre"), ("modifies", "wrt"),
                   ("decreases", "measure"), ("ensures", "post"))


def _inherit_specs(prog: Program) -> None:
    """Fill omitted clauses of class members from the trait's declaration."""
    for c in prog.classes.values():
        trait = prog.traits.get(c.extends)
        if trait is None:
            continue
        for g, d in c.funcs.items():
            sig = trait.funcs.get(g)
            if sig is None:
                continue
            for clause, attr in _FUNC_CLAUSES:
                if clause not in d.explicit:
                    setattr(d, attr, getattr(sig, attr))
        for m, d in c.methods.items():
            sig = trait.methods.get(m)
            if sig is None:
                continue
            for clause, attr in _METHOD_CLAUSES:
                if clause not in d.explicit:
                    setattr(d, attr, getattr(sig, attr))


def _resolve_program(prog: Program, diags: list[Diagnostic]) -> None:
    _inherit_specs(prog)
    for owner in (*prog.traits.values(), *prog.classes.values()):
        for d in owner.funcs.values():
            d.dfc = _resolve_expr(d.dfc, prog, diags)
            d.pre = _resolve_expr(d.pre, prog, diags)
            d.reads = _resolve_expr(d.reads, prog, diags)
            d.measure = _resolve_expr(d.measure, prog, diags)
            d.post = _resolve_expr(d.post, prog, diags)
            if d.body is not None:
                d.body = _resolve_expr(d.body, prog, diags)
        for d in owner.methods.values():
            d.pre = _resolve_expr(d.pre, prog, diags)
            d.wrt = _resolve_expr(d.wrt, prog, diags)
            if d.measure is not None:
                d.measure = _resolve_expr(d.measure, prog, diags)
            d.post = _resolve_expr(d.post, prog, diags)
            if d.body is not None:
                d.body = _resolve_cmd(d.body, prog, diags)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_program(text: str) -> ParseResult:
    """Parse a full .xrl source. Well-formedness is a separate pass."""
    diags: list[Diagnostic] = []
    try:
        tokens = tokenize(text)
        parser = _Parser(tokens)
        prog = parser.program(diags)
    except ParseError as err:
        return ParseResult(None, diags + [err.diagnostic])
    if not prog.traits and not prog.classes:
        return ParseResult(None, diags + [Diagnostic("no-declarations",
                                                     "no declarations in source")])
    _resolve_program(prog, diags)
    if any(d.code == "duplicate-declaration" for d in diags):
        return ParseResult(None, diags)
    return ParseResult(prog, diags)


def parse_expr_text(text: str, prog: Program | None = None) -> Expr:
    """Parse a standalone expression (certificate assertions, regions)."""
    parser = _Parser(tokenize(text))
    e = parser.expr()
    if parser.tok.kind != "eof":
        raise ParseError(f"trailing input {parser.tok.text!r}",
                         parser.tok.line, parser.tok.col)
    if prog is not None:
        diags: list[Diagnostic] = []
        e = _resolve_expr(e, prog, diags)
        if diags:
            raise ParseError(str(diags[0]))
    return e


def parse_cmd_text(text: str, prog: Program) -> Cmd:
    """Parse a standalone command (certificate command references)."""
    parser = _Parser(tokenize(text))
    c = parser.stmts()
    if parser.tok.kind != "eof":
        raise ParseError(f"trailing input {parser.tok.text!r}",
                         parser.tok.line, parser.tok.col)
    diags: list[Diagnostic] = []
    c = _resolve_cmd(c, prog, diags)
    if diags:
        raise ParseError(str(diags[0]))
    return c
