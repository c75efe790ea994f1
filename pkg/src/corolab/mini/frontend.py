"""MiniLang frontend: AST, parser, canonicalizer, and the direct interpreter
used as the differential oracle.

Values are ints, bools, unit, and immutable lists (with head/tail/isNil);
arrays are modeled as lists of lists. Direct coroutine calls share the yield
sink with their caller. Exceptions carry a single value and unwind to the
nearest enclosing try across call frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class MiniError(Exception):
    pass


class MiniSyntaxError(MiniError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class OutOfFuelError(MiniError):
    pass


# ---------------------------------------------------------------------------
# Values


class UnitVal:
    _instance: Optional["UnitVal"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"

    def __eq__(self, other):
        return isinstance(other, UnitVal)

    def __hash__(self):
        return hash("unit")


UNIT_V = UnitVal()


class MiniList:
    """Immutable list view: shared backing tuple plus an offset, so tail is O(1)."""

    __slots__ = ("backing", "off")

    def __init__(self, backing: tuple, off: int = 0):
        self.backing = backing
        self.off = off

    @property
    def is_nil(self) -> bool:
        return self.off >= len(self.backing)

    def head(self):
        if self.is_nil:
            raise MiniError("head of nil")
        return self.backing[self.off]

    def tail(self) -> "MiniList":
        if self.is_nil:
            raise MiniError("tail of nil")
        return MiniList(self.backing, self.off + 1)

    def items(self) -> tuple:
        return self.backing[self.off :]

    def __eq__(self, other):
        if not isinstance(other, MiniList):
            return False
        if len(self.backing) - self.off != len(other.backing) - other.off:
            return False
        return self.items() == other.items()

    def __hash__(self):
        return hash(self.items())

    def __repr__(self):
        return "[" + ", ".join(repr(x) for x in self.items()) + "]"


NIL = MiniList(())


def show_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, UnitVal):
        return "unit"
    if isinstance(v, MiniList):
        return "[" + ", ".join(show_value(x) for x in v.items()) + "]"
    return str(v)


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class MiniType:
    name: str  # Int | Bool | Unit | List

    def __str__(self):
        return self.name


class Expr:
    __slots__ = ()


@dataclass(eq=False)
class IntE(Expr):
    value: int


@dataclass(eq=False)
class BoolE(Expr):
    value: bool


@dataclass(eq=False)
class UnitE(Expr):
    pass


@dataclass(eq=False)
class NilE(Expr):
    pass


@dataclass(eq=False)
class ListE(Expr):
    items: list


@dataclass(eq=False)
class VarE(Expr):
    name: str


@dataclass(eq=False)
class BinE(Expr):
    op: str  # + - == != < && ||
    lhs: Expr
    rhs: Expr


@dataclass(eq=False)
class SelE(Expr):
    target: Expr
    field: str  # head | tail | isNil


@dataclass(eq=False)
class CallE(Expr):
    name: str
    args: list


@dataclass(eq=False)
class YieldE(Expr):
    arg: Expr


@dataclass(eq=False)
class TakeResultE(Expr):
    """Reads a completed callee's result slot (segment bodies only)."""


class Stmt:
    __slots__ = ()


@dataclass(eq=False)
class DeclS(Stmt):
    name: str
    init: Optional[Expr]  # None only in normalized output


@dataclass(eq=False)
class AssignS(Stmt):
    name: str
    expr: Expr


@dataclass(eq=False)
class WhileS(Stmt):
    cond: Expr
    body: "Block"


@dataclass(eq=False)
class IfS(Stmt):
    cond: Expr
    then: "Block"
    els: "Block"


@dataclass(eq=False)
class ThrowS(Stmt):
    expr: Expr


@dataclass(eq=False)
class TryS(Stmt):
    body: "Block"
    var: str
    handler: "Block"


@dataclass(eq=False)
class ExprS(Stmt):
    expr: Expr


@dataclass(eq=False)
class BlockS(Stmt):
    """Explicit nested block; introduced by segment reconstruction."""

    block: "Block"


@dataclass(eq=False)
class RethrowPendingS(Stmt):
    """Re-raise a callee's pending exception (segment bodies only)."""


@dataclass(eq=False)
class Block:
    stmts: list
    result: Optional[Expr] = None


@dataclass(eq=False)
class CoroutineDef:
    name: str
    params: list  # [(name, MiniType)]
    ret: MiniType
    yld: MiniType
    body: Block


@dataclass(eq=False)
class MiniProgram:
    coroutines: dict  # name -> CoroutineDef

    def order(self) -> list:
        return list(self.coroutines.values())


@dataclass(frozen=True)
class RunOutcome:
    yields: tuple
    result: object = None
    exception: object = None

    @property
    def raised(self) -> bool:
        return self.exception is not None


# ---------------------------------------------------------------------------
# Parser


_M_PUNCT = [
    "==", "!=", "&&", "||", "(", ")", "{", "}", "[", "]",
    ":", ";", ",", "+", "-", "<", "=", ".",
]

_M_KEYWORDS = {
    "coroutine", "var", "while", "if", "else", "yieldval", "throw", "try",
    "catch", "true", "false", "nil", "yields", "Int", "Bool", "Unit", "List",
}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i) or src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        matched = False
        for p in _M_PUNCT:
            if src.startswith(p, i):
                toks.append(_Tok(p, p, line, col))
                i += len(p)
                col += len(p)
                matched = True
                break
        if matched:
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Tok("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            toks.append(_Tok("kw" if word in _M_KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        raise MiniSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise MiniSyntaxError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def expect_kw(self, word: str) -> _Tok:
        t = self.peek()
        if not (t.kind == "kw" and t.text == word):
            raise MiniSyntaxError(f"expected {word!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text == word

    def program(self) -> MiniProgram:
        coroutines: dict = {}
        while not self.peek().kind == "eof":
            c = self.coroutine()
            if c.name in coroutines:
                t = self.peek()
                raise MiniSyntaxError(f"duplicate coroutine {c.name!r}", t.line, t.col)
            coroutines[c.name] = c
        prog = MiniProgram(coroutines)
        _resolve_calls(prog)
        return prog

    def coroutine(self) -> CoroutineDef:
        self.expect_kw("coroutine")
        name = self.expect("ident").text
        self.expect("(")
        params = []
        if self.peek().kind != ")":
            while True:
                p = self.expect("ident").text
                self.expect(":")
                params.append((p, self.type_()))
                if self.peek().kind == ",":
                    self.next()
                    continue
                break
        self.expect(")")
        self.expect(":")
        ret = self.type_()
        self.expect_kw("yields")
        yld = self.type_()
        body = self.block()
        return CoroutineDef(name, params, ret, yld, body)

    def type_(self) -> MiniType:
        t = self.peek()
        if t.kind == "kw" and t.text in ("Int", "Bool", "Unit", "List"):
            self.next()
            return MiniType(t.text)
        raise MiniSyntaxError(f"expected a type, found {t.text or 'end of input'!r}", t.line, t.col)

    def block(self) -> Block:
        self.expect("{")
        stmts: list = []
        result: Optional[Expr] = None
        while self.peek().kind != "}":
            item = self.statement_or_expr()
            if isinstance(item, Stmt):
                stmts.append(item)
            else:
                # a trailing expression (no semicolon) is the block result
                if self.peek().kind == ";":
                    self.next()
                    stmts.append(ExprS(item))
                    continue
                result = item
                break
        self.expect("}")
        return Block(stmts, result)

    def statement_or_expr(self):
        t = self.peek()
        if t.kind == "kw" and t.text == "var":
            self.next()
            name = self.expect("ident").text
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return DeclS(name, e)
        if t.kind == "kw" and t.text == "while":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return WhileS(cond, self.block())
        if t.kind == "kw" and t.text == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            els = Block([], None)
            if self.at_kw("else"):
                self.next()
                els = self.block()
            return IfS(cond, then, els)
        if t.kind == "kw" and t.text == "throw":
            self.next()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            return ThrowS(e)
        if t.kind == "kw" and t.text == "try":
            self.next()
            body = self.block()
            self.expect_kw("catch")
            var = self.expect("ident").text
            handler = self.block()
            return TryS(body, var, handler)
        if t.kind == "ident" and self.peek(1).kind == "=":
            name = self.next().text
            self.next()
            e = self.expr()
            self.expect(";")
            return AssignS(name, e)
        return self.expr()

    # expression precedence: || < && < (== != <) < (+ -) < postfix < atom
    def expr(self) -> Expr:
        return self.expr_or()

    def expr_or(self) -> Expr:
        left = self.expr_and()
        while self.peek().kind == "||":
            self.next()
            left = BinE("||", left, self.expr_and())
        return left

    def expr_and(self) -> Expr:
        left = self.expr_cmp()
        while self.peek().kind == "&&":
            self.next()
            left = BinE("&&", left, self.expr_cmp())
        return left

    def expr_cmp(self) -> Expr:
        left = self.expr_add()
        while self.peek().kind in ("==", "!=", "<"):
            op = self.next().kind
            left = BinE(op, left, self.expr_add())
        return left

    def expr_add(self) -> Expr:
        left = self.expr_postfix()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            left = BinE(op, left, self.expr_postfix())
        return left

    def expr_postfix(self) -> Expr:
        left = self.expr_atom()
        while self.peek().kind == ".":
            self.next()
            field = self.expect("ident").text
            if field not in ("head", "tail", "isNil"):
                t = self.peek()
                raise MiniSyntaxError(f"unknown selection .{field}", t.line, t.col)
            left = SelE(left, field)
        return left

    def expr_atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntE(int(t.text))
        if t.kind == "-" and self.peek(1).kind == "int":
            self.next()
            tok = self.next()
            return IntE(-int(tok.text))
        if t.kind == "kw" and t.text == "true":
            self.next()
            return BoolE(True)
        if t.kind == "kw" and t.text == "false":
            self.next()
            return BoolE(False)
        if t.kind == "kw" and t.text == "nil":
            self.next()
            return NilE()
        if t.kind == "kw" and t.text == "yieldval":
            self.next()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return YieldE(e)
        if t.kind == "[":
            self.next()
            items = []
            if self.peek().kind != "]":
                while True:
                    items.append(self.expr())
                    if self.peek().kind == ",":
                        self.next()
                        continue
                    break
            self.expect("]")
            return ListE(items)
        if t.kind == "(":
            self.next()
            if self.peek().kind == ")":
                self.next()
                return UnitE()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            name = self.next().text
            if self.peek().kind == "(":
                self.next()
                args = []
                if self.peek().kind != ")":
                    while True:
                        args.append(self.expr())
                        if self.peek().kind == ",":
                            self.next()
                            continue
                        break
                self.expect(")")
                return CallE(name, args)
            return VarE(name)
        raise MiniSyntaxError(f"expected an expression, found {t.text or 'end of input'!r}", t.line, t.col)


def _resolve_calls(prog: MiniProgram) -> None:
    def walk_expr(e: Expr):
        if isinstance(e, CallE):
            if e.name not in prog.coroutines:
                raise MiniError(f"call to undefined coroutine {e.name!r}")
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, BinE):
            walk_expr(e.lhs)
            walk_expr(e.rhs)
        elif isinstance(e, SelE):
            walk_expr(e.target)
        elif isinstance(e, YieldE):
            walk_expr(e.arg)
        elif isinstance(e, ListE):
            for a in e.items:
                walk_expr(a)

    def walk_block(b: Block):
        for s in b.stmts:
            if isinstance(s, DeclS) and s.init is not None:
                walk_expr(s.init)
            elif isinstance(s, AssignS):
                walk_expr(s.expr)
            elif isinstance(s, WhileS):
                walk_expr(s.cond)
                walk_block(s.body)
            elif isinstance(s, IfS):
                walk_expr(s.cond)
                walk_block(s.then)
                walk_block(s.els)
            elif isinstance(s, ThrowS):
                walk_expr(s.expr)
            elif isinstance(s, TryS):
                walk_block(s.body)
                walk_block(s.handler)
            elif isinstance(s, ExprS):
                walk_expr(s.expr)
            elif isinstance(s, BlockS):
                walk_block(s.block)
        if b.result is not None:
            walk_expr(b.result)

    for c in prog.coroutines.values():
        walk_block(c.body)


def parse_mini(src: str) -> MiniProgram:
    return _Parser(_lex(src)).program()


# ---------------------------------------------------------------------------
# Printing (used by dumps and tests)


def print_expr(e: Expr) -> str:
    if isinstance(e, IntE):
        return str(e.value)
    if isinstance(e, BoolE):
        return "true" if e.value else "false"
    if isinstance(e, UnitE):
        return "()"
    if isinstance(e, NilE):
        return "nil"
    if isinstance(e, ListE):
        return "[" + ", ".join(print_expr(x) for x in e.items) + "]"
    if isinstance(e, VarE):
        return e.name
    if isinstance(e, BinE):
        return f"({print_expr(e.lhs)} {e.op} {print_expr(e.rhs)})"
    if isinstance(e, SelE):
        return f"{print_expr(e.target)}.{e.field}"
    if isinstance(e, CallE):
        return f"{e.name}(" + ", ".join(print_expr(a) for a in e.args) + ")"
    if isinstance(e, YieldE):
        return f"yieldval({print_expr(e.arg)})"
    if isinstance(e, TakeResultE):
        return "<call-result>"
    raise TypeError(f"unknown expr {e!r}")


def print_block(b: Block, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for s in b.stmts:
        lines.append(print_stmt(s, indent))
    if b.result is not None:
        lines.append(f"{pad}{print_expr(b.result)}")
    return "\n".join(lines)


def print_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, DeclS):
        if s.init is None:
            return f"{pad}var {s.name};"
        return f"{pad}var {s.name} = {print_expr(s.init)};"
    if isinstance(s, AssignS):
        return f"{pad}{s.name} = {print_expr(s.expr)};"
    if isinstance(s, WhileS):
        return f"{pad}while ({print_expr(s.cond)}) {{\n{print_block(s.body, indent + 1)}\n{pad}}}"
    if isinstance(s, IfS):
        out = f"{pad}if ({print_expr(s.cond)}) {{\n{print_block(s.then, indent + 1)}\n{pad}}}"
        if s.els.stmts or s.els.result is not None:
            out += f" else {{\n{print_block(s.els, indent + 1)}\n{pad}}}"
        return out
    if isinstance(s, ThrowS):
        return f"{pad}throw({print_expr(s.expr)});"
    if isinstance(s, TryS):
        return (
            f"{pad}try {{\n{print_block(s.body, indent + 1)}\n{pad}}} "
            f"catch {s.var} {{\n{print_block(s.handler, indent + 1)}\n{pad}}}"
        )
    if isinstance(s, ExprS):
        return f"{pad}{print_expr(s.expr)};"
    if isinstance(s, BlockS):
        return f"{pad}{{\n{print_block(s.block, indent + 1)}\n{pad}}}"
    if isinstance(s, RethrowPendingS):
        return f"{pad}<rethrow-pending>;"
    raise TypeError(f"unknown stmt {s!r}")


def print_program(p: MiniProgram) -> str:
    parts = []
    for c in p.coroutines.values():
        params = ", ".join(f"{n}: {t}" for n, t in c.params)
        parts.append(
            f"coroutine {c.name}({params}): {c.ret} yields {c.yld} {{\n"
            f"{print_block(c.body, 1)}\n}}"
        )
    return "\n\n".join(parts)


# ---------------------------------------------------------------------------
# Canonicalization


class _Normalizer:
    def __init__(self):
        self.counter = 0

    def fresh(self) -> str:
        name = f"x_{self.counter}"
        self.counter += 1
        return name

    def block(self, b: Block) -> Block:
        out: list = []
        for s in b.stmts:
            out.extend(self.stmt(s))
        result = None
        if b.result is not None:
            prelude, atom = self.expr(b.result)
            out.extend(prelude)
            result = atom
        return Block(out, result)

    def stmt(self, s: Stmt) -> list:
        if isinstance(s, DeclS):
            if s.init is None:
                return [DeclS(s.name, None)]
            if isinstance(s.init, BinE) and s.init.op in ("&&", "||"):
                prelude, _ = self.shortcircuit(s.init, s.name)
                return prelude
            prelude, rhs = self.rhs(s.init, s.name)
            return prelude + [DeclS(s.name, rhs)]
        if isinstance(s, AssignS):
            prelude, atom = self.expr(s.expr)
            return prelude + [AssignS(s.name, atom)]
        if isinstance(s, ExprS):
            prelude, atom = self.expr(s.expr)
            # a bare constant or identifier has no effect
            return prelude
        if isinstance(s, ThrowS):
            prelude, atom = self.expr(s.expr)
            return prelude + [ThrowS(atom)]
        if isinstance(s, WhileS):
            if _is_atom(s.cond):
                return [WhileS(_copy_atom(s.cond), self.block(s.body))]
            prelude, atom = self.expr(s.cond)
            cv = self.fresh()
            body = self.block(s.body)
            prelude2, atom2 = self.expr(s.cond)
            loop_body = Block(
                body.stmts + prelude2 + [AssignS(cv, atom2)], body.result
            )
            return prelude + [DeclS(cv, atom), WhileS(VarE(cv), loop_body)]
        if isinstance(s, IfS):
            if _is_atom(s.cond):
                return [IfS(_copy_atom(s.cond), self.block(s.then), self.block(s.els))]
            prelude, atom = self.expr(s.cond)
            cv = self.fresh()
            return prelude + [DeclS(cv, atom), IfS(VarE(cv), self.block(s.then), self.block(s.els))]
        if isinstance(s, TryS):
            return [TryS(self.block(s.body), s.var, self.block(s.handler))]
        if isinstance(s, BlockS):
            return [BlockS(self.block(s.block))]
        raise TypeError(f"unknown stmt {s!r}")

    def rhs(self, e: Expr, into: str):
        """Normalize a declaration right-hand side, folding the final step
        into the declaration itself (matching the canonical listings)."""
        if _is_atom(e):
            return [], _copy_atom(e)
        if isinstance(e, BinE) and e.op in ("&&", "||"):
            prelude, t = self.shortcircuit(e, None)
            return prelude, VarE(t)
        if isinstance(e, BinE):
            p1, a1 = self.expr(e.lhs)
            p2, a2 = self.expr(e.rhs)
            return p1 + p2, BinE(e.op, a1, a2)
        if isinstance(e, SelE):
            p, a = self.expr(e.target)
            return p, SelE(a, e.field)
        if isinstance(e, CallE):
            ps: list = []
            atoms = []
            for arg in e.args:
                p, a = self.expr(arg)
                ps.extend(p)
                atoms.append(a)
            return ps, CallE(e.name, atoms)
        if isinstance(e, YieldE):
            p, a = self.expr(e.arg)
            return p, YieldE(a)
        if isinstance(e, ListE):
            ps = []
            atoms = []
            for item in e.items:
                p, a = self.expr(item)
                ps.extend(p)
                atoms.append(a)
            return ps, ListE(atoms)
        raise TypeError(f"unknown expr {e!r}")

    def expr(self, e: Expr):
        """Normalize an expression to (prelude statements, atom)."""
        if _is_atom(e):
            return [], _copy_atom(e)
        if isinstance(e, BinE) and e.op in ("&&", "||"):
            prelude, t = self.shortcircuit(e, None)
            return prelude, VarE(t)
        prelude, rhs = self.rhs(e, "")
        t = self.fresh()
        return prelude + [DeclS(t, rhs)], VarE(t)

    def shortcircuit(self, e: BinE, into: Optional[str]):
        p1, a1 = self.expr(e.lhs)
        t = into if into is not None else self.fresh()
        p2, a2 = self.expr(e.rhs)
        if e.op == "||":
            then = Block([AssignS(t, BoolE(True))], None)
            els = Block(p2 + [AssignS(t, a2)], None)
        else:
            then = Block(p2 + [AssignS(t, a2)], None)
            els = Block([AssignS(t, BoolE(False))], None)
        return p1 + [DeclS(t, None), IfS(a1, then, els)], t


def _is_atom(e: Expr) -> bool:
    return isinstance(e, (IntE, BoolE, UnitE, NilE, VarE))


def _copy_atom(e: Expr) -> Expr:
    if isinstance(e, IntE):
        return IntE(e.value)
    if isinstance(e, BoolE):
        return BoolE(e.value)
    if isinstance(e, UnitE):
        return UnitE()
    if isinstance(e, NilE):
        return NilE()
    if isinstance(e, VarE):
        return VarE(e.name)
    raise TypeError(f"not an atom: {e!r}")


def normalize(p: MiniProgram) -> MiniProgram:
    out = {}
    for name, c in p.coroutines.items():
        norm = _Normalizer()
        out[name] = CoroutineDef(c.name, list(c.params), c.ret, c.yld, norm.block(c.body))
    return MiniProgram(out)


def is_normalized(p: MiniProgram) -> bool:
    """The restricted-form predicate over every coroutine body."""

    def ok_rhs(e: Expr) -> bool:
        if _is_atom(e):
            return True
        if isinstance(e, BinE):
            return e.op not in ("&&", "||") and _is_atom(e.lhs) and _is_atom(e.rhs)
        if isinstance(e, SelE):
            return _is_atom(e.target)
        if isinstance(e, (CallE, ListE)):
            args = e.args if isinstance(e, CallE) else e.items
            return all(_is_atom(a) for a in args)
        if isinstance(e, YieldE):
            return _is_atom(e.arg)
        if isinstance(e, TakeResultE):
            return True
        return False

    def ok_block(b: Block) -> bool:
        for s in b.stmts:
            if isinstance(s, DeclS):
                if s.init is not None and not ok_rhs(s.init):
                    return False
            elif isinstance(s, AssignS):
                if not _is_atom(s.expr):
                    return False
            elif isinstance(s, WhileS):
                if not (_is_atom(s.cond) and ok_block(s.body)):
                    return False
            elif isinstance(s, IfS):
                if not (_is_atom(s.cond) and ok_block(s.then) and ok_block(s.els)):
                    return False
            elif isinstance(s, ThrowS):
                if not _is_atom(s.expr):
                    return False
            elif isinstance(s, TryS):
                if not (ok_block(s.body) and ok_block(s.handler)):
                    return False
            elif isinstance(s, BlockS):
                if not ok_block(s.block):
                    return False
            elif isinstance(s, (ExprS,)):
                return False
            elif isinstance(s, RethrowPendingS):
                pass
            else:
                return False
        if b.result is not None and not _is_atom(b.result):
            return False
        return True

    return all(ok_block(c.body) for c in p.coroutines.values())


# ---------------------------------------------------------------------------
# Direct interpreter (the oracle)


class MiniThrow(Exception):
    def __init__(self, payload):
        self.payload = payload


class _Env:
    __slots__ = ("scopes",)

    def __init__(self):
        self.scopes: list[dict] = [dict()]

    def push(self):
        self.scopes.append({})

    def pop(self):
        self.scopes.pop()

    def declare(self, name, value):
        self.scopes[-1][name] = value

    def assign(self, name, value):
        for sc in reversed(self.scopes):
            if name in sc:
                sc[name] = value
                return
        raise MiniError(f"assignment to undeclared variable {name!r}")

    def lookup(self, name):
        for sc in reversed(self.scopes):
            if name in sc:
                return sc[name]
        raise MiniError(f"undefined variable {name!r}")


class _Runner:
    def __init__(self, prog: MiniProgram, fuel: int):
        self.prog = prog
        self.fuel = fuel
        self.yields: list = []

    def burn(self):
        self.fuel -= 1
        if self.fuel <= 0:
            raise OutOfFuelError("out of fuel")

    def call(self, name: str, args: list):
        c = self.prog.coroutines[name]
        if len(args) != len(c.params):
            raise MiniError(f"{name} expects {len(c.params)} arguments, got {len(args)}")
        env = _Env()
        for (pname, _), v in zip(c.params, args):
            env.declare(pname, v)
        return self.block(c.body, env, push_scope=False)

    def block(self, b: Block, env: _Env, push_scope: bool = True):
        if push_scope:
            env.push()
        try:
            for s in b.stmts:
                self.stmt(s, env)
            if b.result is not None:
                return self.expr(b.result, env)
            return UNIT_V
        finally:
            if push_scope:
                env.pop()

    def stmt(self, s: Stmt, env: _Env):
        self.burn()
        if isinstance(s, DeclS):
            env.declare(s.name, self.expr(s.init, env) if s.init is not None else UNIT_V)
        elif isinstance(s, AssignS):
            env.assign(s.name, self.expr(s.expr, env))
        elif isinstance(s, ExprS):
            self.expr(s.expr, env)
        elif isinstance(s, WhileS):
            while self.truth(self.expr(s.cond, env)):
                self.burn()
                self.block(s.body, env)
        elif isinstance(s, IfS):
            if self.truth(self.expr(s.cond, env)):
                self.block(s.then, env)
            else:
                self.block(s.els, env)
        elif isinstance(s, ThrowS):
            raise MiniThrow(self.expr(s.expr, env))
        elif isinstance(s, TryS):
            try:
                self.block(s.body, env)
            except MiniThrow as ex:
                env.push()
                env.declare(s.var, ex.payload)
                try:
                    for st in s.handler.stmts:
                        self.stmt(st, env)
                    if s.handler.result is not None:
                        self.expr(s.handler.result, env)
                finally:
                    env.pop()
        elif isinstance(s, BlockS):
            self.block(s.block, env)
        else:
            raise MiniError(f"cannot interpret {type(s).__name__}")

    def truth(self, v) -> bool:
        if not isinstance(v, bool):
            raise MiniError(f"condition is not a boolean: {show_value(v)}")
        return v

    def expr(self, e: Expr, env: _Env):
        if isinstance(e, IntE):
            return e.value
        if isinstance(e, BoolE):
            return e.value
        if isinstance(e, UnitE):
            return UNIT_V
        if isinstance(e, NilE):
            return NIL
        if isinstance(e, ListE):
            return MiniList(tuple(self.expr(x, env) for x in e.items))
        if isinstance(e, VarE):
            return env.lookup(e.name)
        if isinstance(e, BinE):
            if e.op == "&&":
                return self.truth(self.expr(e.lhs, env)) and self.truth(self.expr(e.rhs, env))
            if e.op == "||":
                return self.truth(self.expr(e.lhs, env)) or self.truth(self.expr(e.rhs, env))
            l = self.expr(e.lhs, env)
            r = self.expr(e.rhs, env)
            if e.op == "==":
                return l == r
            if e.op == "!=":
                return l != r
            if e.op == "+":
                return self.arith(l) + self.arith(r)
            if e.op == "-":
                return self.arith(l) - self.arith(r)
            if e.op == "<":
                return self.arith(l) < self.arith(r)
            raise MiniError(f"unknown operator {e.op}")
        if isinstance(e, SelE):
            v = self.expr(e.target, env)
            if not isinstance(v, MiniList):
                raise MiniError(f".{e.field} on a non-list: {show_value(v)}")
            if e.field == "head":
                return v.head()
            if e.field == "tail":
                return v.tail()
            return v.is_nil
        if isinstance(e, CallE):
            args = [self.expr(a, env) for a in e.args]
            return self.call(e.name, args)
        if isinstance(e, YieldE):
            self.yields.append(self.expr(e.arg, env))
            return UNIT_V
        raise MiniError(f"cannot evaluate {type(e).__name__}")

    def arith(self, v) -> int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise MiniError(f"arithmetic on a non-integer: {show_value(v)}")
        return v


def direct_run(p: MiniProgram, entry: str, args: list, fuel: int = 1_000_000) -> RunOutcome:
    """Run a coroutine to completion in one pass, collecting every yield."""
    if entry not in p.coroutines:
        raise MiniError(f"unknown coroutine {entry!r}")
    runner = _Runner(p, fuel)
    try:
        result = runner.call(entry, list(args))
    except MiniThrow as ex:
        return RunOutcome(tuple(runner.yields), None, ex.payload)
    return RunOutcome(tuple(runner.yields), result, None)
