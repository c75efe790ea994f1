"""The transformation target: simply typed lambda calculus with references
and a restricted sum.

`Out[Ty,Tr]` values describe one resumption round: `Ret(x)` carries a normal
return, `Yield(x)` a yielded value, `Term` a completed instance. Tags are
annotated with both Out parameters so checking stays syntax-directed. `Never`
is the uninhabited image of the source bottom type; match arms that can only
be reached with a `Never` payload are kept total with canonical default
values, which no well-typed run ever observes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class TargetError(Exception):
    pass


# ---------------------------------------------------------------------------
# Types


class TargetType:
    __slots__ = ()


@dataclass(frozen=True)
class TUnit(TargetType):
    def __str__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class TInt(TargetType):
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class TNever(TargetType):
    def __str__(self) -> str:
        return "Never"


@dataclass(frozen=True)
class TFun(TargetType):
    param: TargetType
    ret: TargetType

    def __str__(self) -> str:
        p = str(self.param)
        if isinstance(self.param, TFun):
            p = f"({p})"
        return f"{p} => {self.ret}"


@dataclass(frozen=True)
class TRef(TargetType):
    of: TargetType

    def __str__(self) -> str:
        return f"Ref[{self.of}]"


@dataclass(frozen=True)
class TOut(TargetType):
    yld: TargetType
    ret: TargetType

    def __str__(self) -> str:
        return f"Out[{self.yld},{self.ret}]"


T_UNIT = TUnit()
T_INT = TInt()
T_NEVER = TNever()


def kappa(t: TargetType, ty: TargetType, tr: TargetType) -> TargetType:
    """Continuation type: T => Out[Ty,Tr]."""
    return TFun(t, TOut(ty, tr))


def rho(ty: TargetType, tr: TargetType) -> TargetType:
    """Evaluation state type: Ref[Unit => Out[Ty,Tr]]."""
    return TRef(kappa(T_UNIT, ty, tr))


def sigma_t(ty: TargetType, tr: TargetType) -> TargetType:
    """Store function type: (Unit => Out[Ty,Tr]) => Unit."""
    return TFun(kappa(T_UNIT, ty, tr), T_UNIT)


def gamma_t(t1: TargetType, ty: TargetType, tr: TargetType) -> TargetType:
    """Translated coroutine type: store function, then argument, then Out."""
    return TFun(sigma_t(ty, tr), TFun(t1, TOut(ty, tr)))


def phi_t(ty: TargetType, tr: TargetType, tq: TargetType) -> TargetType:
    """Output transformer type: Out[Ty,Tr] => Out[Ty,Tq]."""
    return TFun(TOut(ty, tr), TOut(ty, tq))


# ---------------------------------------------------------------------------
# Terms


class TargetTerm:
    __slots__ = ()

    def __str__(self) -> str:
        return print_target(self)


@dataclass(frozen=True)
class TVar(TargetTerm):
    name: str


@dataclass(frozen=True)
class TAbs(TargetTerm):
    var: str
    annot: TargetType
    body: TargetTerm


@dataclass(frozen=True)
class TApp(TargetTerm):
    fn: TargetTerm
    arg: TargetTerm


@dataclass(frozen=True)
class TUnitLit(TargetTerm):
    pass


@dataclass(frozen=True)
class TLit(TargetTerm):
    value: int


@dataclass(frozen=True)
class TAdd(TargetTerm):
    lhs: TargetTerm
    rhs: TargetTerm


@dataclass(frozen=True)
class RefNew(TargetTerm):
    init: TargetTerm


@dataclass(frozen=True)
class Deref(TargetTerm):
    ref: TargetTerm


@dataclass(frozen=True)
class Assign(TargetTerm):
    ref: TargetTerm
    value: TargetTerm


@dataclass(frozen=True)
class RetTag(TargetTerm):
    yld: TargetType
    ret: TargetType
    arg: TargetTerm


@dataclass(frozen=True)
class YieldTag(TargetTerm):
    yld: TargetType
    ret: TargetType
    arg: TargetTerm


@dataclass(frozen=True)
class TermTag(TargetTerm):
    yld: TargetType
    ret: TargetType


@dataclass(frozen=True)
class MatchOut(TargetTerm):
    scrutinee: TargetTerm
    ret_var: str
    ret_body: TargetTerm
    yield_var: str
    yield_body: TargetTerm
    term_body: TargetTerm


@dataclass(frozen=True)
class Cell(TargetTerm):
    """Runtime heap location."""

    id: int


@dataclass(frozen=True)
class FixBp(TargetTerm):
    """Recursion by reference backpatching; annot is the full T1 => T2 type."""

    arg: TargetTerm
    annot: TargetType


T_UNIT_LIT = TUnitLit()


def t_seq(first: TargetTerm, second: TargetTerm, unit_var: str = "%u") -> TargetTerm:
    """first ; second  ==  ((u:Unit) => second)(first)"""
    return TApp(TAbs(unit_var, T_UNIT, second), first)


def t_let(var: str, annot: TargetType, bound: TargetTerm, body: TargetTerm) -> TargetTerm:
    return TApp(TAbs(var, annot, body), bound)


def default_value(t: TargetType) -> TargetTerm:
    """A canonical inhabitant, used for statically unreachable match arms."""
    if isinstance(t, TUnit):
        return T_UNIT_LIT
    if isinstance(t, TInt):
        return TLit(0)
    if isinstance(t, TFun):
        return TAbs("%d", t.param, default_value(t.ret))
    if isinstance(t, TRef):
        return RefNew(default_value(t.of))
    if isinstance(t, TOut):
        return TermTag(t.yld, t.ret)
    raise TargetError(f"type {t} has no canonical inhabitant")


# ---------------------------------------------------------------------------
# Term algebra


def t_children(t: TargetTerm) -> tuple[TargetTerm, ...]:
    if isinstance(t, (TVar, TUnitLit, TLit, Cell, TermTag)):
        return ()
    if isinstance(t, TAbs):
        return (t.body,)
    if isinstance(t, TApp):
        return (t.fn, t.arg)
    if isinstance(t, TAdd):
        return (t.lhs, t.rhs)
    if isinstance(t, (RefNew, Deref)):
        return (t.init,) if isinstance(t, RefNew) else (t.ref,)
    if isinstance(t, Assign):
        return (t.ref, t.value)
    if isinstance(t, (RetTag, YieldTag)):
        return (t.arg,)
    if isinstance(t, MatchOut):
        return (t.scrutinee, t.ret_body, t.yield_body, t.term_body)
    if isinstance(t, FixBp):
        return (t.arg,)
    raise TypeError(f"unknown target term: {t!r}")


def t_free_vars(t: TargetTerm) -> frozenset[str]:
    if isinstance(t, TVar):
        return frozenset((t.name,))
    if isinstance(t, TAbs):
        return t_free_vars(t.body) - {t.var}
    if isinstance(t, MatchOut):
        out = t_free_vars(t.scrutinee)
        out |= t_free_vars(t.ret_body) - {t.ret_var}
        out |= t_free_vars(t.yield_body) - {t.yield_var}
        out |= t_free_vars(t.term_body)
        return out
    out: frozenset[str] = frozenset()
    for c in t_children(t):
        out |= t_free_vars(c)
    return out


def t_is_value(t: TargetTerm) -> bool:
    if isinstance(t, (TAbs, TUnitLit, TLit, Cell)):
        return True
    if isinstance(t, (RetTag, YieldTag)):
        return t_is_value(t.arg)
    if isinstance(t, TermTag):
        return True
    return False


def t_substitute(t: TargetTerm, x: str, v: TargetTerm) -> TargetTerm:
    if isinstance(t, TVar):
        return v if t.name == x else t
    if isinstance(t, (TUnitLit, TLit, Cell, TermTag)):
        return t
    if isinstance(t, TAbs):
        if t.var == x:
            return t
        return TAbs(t.var, t.annot, t_substitute(t.body, x, v))
    if isinstance(t, TApp):
        return TApp(t_substitute(t.fn, x, v), t_substitute(t.arg, x, v))
    if isinstance(t, TAdd):
        return TAdd(t_substitute(t.lhs, x, v), t_substitute(t.rhs, x, v))
    if isinstance(t, RefNew):
        return RefNew(t_substitute(t.init, x, v))
    if isinstance(t, Deref):
        return Deref(t_substitute(t.ref, x, v))
    if isinstance(t, Assign):
        return Assign(t_substitute(t.ref, x, v), t_substitute(t.value, x, v))
    if isinstance(t, RetTag):
        return RetTag(t.yld, t.ret, t_substitute(t.arg, x, v))
    if isinstance(t, YieldTag):
        return YieldTag(t.yld, t.ret, t_substitute(t.arg, x, v))
    if isinstance(t, MatchOut):
        return MatchOut(
            t_substitute(t.scrutinee, x, v),
            t.ret_var,
            t.ret_body if t.ret_var == x else t_substitute(t.ret_body, x, v),
            t.yield_var,
            t.yield_body if t.yield_var == x else t_substitute(t.yield_body, x, v),
            t_substitute(t.term_body, x, v),
        )
    if isinstance(t, FixBp):
        return FixBp(t_substitute(t.arg, x, v), t.annot)
    raise TypeError(f"unknown target term: {t!r}")


def t_alpha_eq(a: TargetTerm, b: TargetTerm) -> bool:
    return _t_alpha(a, b, {}, {}, [0])


def _t_alpha(a, b, ea, eb, ctr) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, TVar):
        ia, ib = ea.get(a.name), eb.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, TUnitLit):
        return True
    if isinstance(a, TLit):
        return a.value == b.value
    if isinstance(a, Cell):
        return a.id == b.id
    if isinstance(a, TermTag):
        return (a.yld, a.ret) == (b.yld, b.ret)
    if isinstance(a, (RetTag, YieldTag)):
        if (a.yld, a.ret) != (b.yld, b.ret):
            return False
        return _t_alpha(a.arg, b.arg, ea, eb, ctr)
    if isinstance(a, TAbs):
        if a.annot != b.annot:
            return False
        idx = ctr[0]
        ctr[0] += 1
        return _t_alpha(a.body, b.body, {**ea, a.var: idx}, {**eb, b.var: idx}, ctr)
    if isinstance(a, MatchOut):
        if not _t_alpha(a.scrutinee, b.scrutinee, ea, eb, ctr):
            return False
        i1 = ctr[0]
        ctr[0] += 1
        if not _t_alpha(a.ret_body, b.ret_body, {**ea, a.ret_var: i1}, {**eb, b.ret_var: i1}, ctr):
            return False
        i2 = ctr[0]
        ctr[0] += 1
        if not _t_alpha(
            a.yield_body, b.yield_body, {**ea, a.yield_var: i2}, {**eb, b.yield_var: i2}, ctr
        ):
            return False
        return _t_alpha(a.term_body, b.term_body, ea, eb, ctr)
    if isinstance(a, FixBp):
        if a.annot != b.annot:
            return False
        return _t_alpha(a.arg, b.arg, ea, eb, ctr)
    ca, cb = t_children(a), t_children(b)
    return len(ca) == len(cb) and all(_t_alpha(x, y, ea, eb, ctr) for x, y in zip(ca, cb))


# ---------------------------------------------------------------------------
# Typechecking


class TargetTypeError(TargetError):
    pass


def typecheck_target(
    t: TargetTerm,
    env: Optional[dict[str, TargetType]] = None,
    heap_types: Optional[dict[int, TargetType]] = None,
) -> TargetType:
    env = env or {}
    heap_types = heap_types or {}

    def check(t: TargetTerm, env: dict[str, TargetType]) -> TargetType:
        if isinstance(t, TVar):
            if t.name not in env:
                raise TargetTypeError(f"unbound variable {t.name}")
            return env[t.name]
        if isinstance(t, TUnitLit):
            return T_UNIT
        if isinstance(t, TLit):
            return T_INT
        if isinstance(t, TAbs):
            ret = check(t.body, {**env, t.var: t.annot})
            return TFun(t.annot, ret)
        if isinstance(t, TApp):
            fn = check(t.fn, env)
            arg = check(t.arg, env)
            if not isinstance(fn, TFun):
                raise TargetTypeError(f"cannot apply {fn}")
            if fn.param != arg:
                raise TargetTypeError(f"argument mismatch: expected {fn.param}, got {arg}")
            return fn.ret
        if isinstance(t, TAdd):
            for side in (t.lhs, t.rhs):
                if check(side, env) != T_INT:
                    raise TargetTypeError("+ expects Int")
            return T_INT
        if isinstance(t, RefNew):
            return TRef(check(t.init, env))
        if isinstance(t, Deref):
            r = check(t.ref, env)
            if not isinstance(r, TRef):
                raise TargetTypeError(f"! expects a reference, got {r}")
            return r.of
        if isinstance(t, Assign):
            r = check(t.ref, env)
            v = check(t.value, env)
            if not isinstance(r, TRef):
                raise TargetTypeError(f":= expects a reference, got {r}")
            if r.of != v:
                raise TargetTypeError(f"assignment mismatch: cell {r.of}, value {v}")
            return T_UNIT
        if isinstance(t, RetTag):
            a = check(t.arg, env)
            if a != t.ret:
                raise TargetTypeError(f"Ret payload has type {a}, annotation says {t.ret}")
            return TOut(t.yld, t.ret)
        if isinstance(t, YieldTag):
            a = check(t.arg, env)
            if a != t.yld:
                raise TargetTypeError(f"Yield payload has type {a}, annotation says {t.yld}")
            return TOut(t.yld, t.ret)
        if isinstance(t, TermTag):
            return TOut(t.yld, t.ret)
        if isinstance(t, MatchOut):
            s = check(t.scrutinee, env)
            if not isinstance(s, TOut):
                raise TargetTypeError(f"match expects an Out value, got {s}")
            r1 = check(t.ret_body, {**env, t.ret_var: s.ret})
            r2 = check(t.yield_body, {**env, t.yield_var: s.yld})
            r3 = check(t.term_body, env)
            if not (r1 == r2 == r3):
                raise TargetTypeError(f"match arms disagree: {r1} / {r2} / {r3}")
            return r1
        if isinstance(t, Cell):
            if t.id not in heap_types:
                raise TargetTypeError(f"unknown cell #{t.id}")
            return TRef(heap_types[t.id])
        if isinstance(t, FixBp):
            a = check(t.arg, env)
            if not isinstance(t.annot, TFun):
                raise TargetTypeError("fixbp needs a function type annotation")
            if a != TFun(t.annot, t.annot):
                raise TargetTypeError(f"fixbp argument has type {a}, expected {TFun(t.annot, t.annot)}")
            return t.annot
        raise TargetTypeError(f"cannot type {t!r}")

    return check(t, env)


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class Heap:
    cells: dict[int, TargetTerm] = field(default_factory=dict)
    next_cell: int = 0

    def alloc(self, v: TargetTerm) -> int:
        i = self.next_cell
        self.next_cell += 1
        self.cells[i] = v
        return i


@dataclass(frozen=True)
class TFinished:
    value: TargetTerm
    heap: Heap
    steps: int


@dataclass(frozen=True)
class TStuck:
    reason: str


@dataclass(frozen=True)
class TOutOfFuel:
    pass


class _TStuckSignal(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def _t_step(t: TargetTerm, heap: Heap) -> TargetTerm:
    """One deterministic left-to-right call-by-value step."""
    if isinstance(t, TVar):
        raise _TStuckSignal(f"free variable {t.name}")

    if isinstance(t, TApp):
        if not t_is_value(t.fn):
            return TApp(_t_step(t.fn, heap), t.arg)
        if not t_is_value(t.arg):
            return TApp(t.fn, _t_step(t.arg, heap))
        if isinstance(t.fn, TAbs):
            return t_substitute(t.fn.body, t.fn.var, t.arg)
        raise _TStuckSignal(f"cannot apply {type(t.fn).__name__}")

    if isinstance(t, TAdd):
        if not t_is_value(t.lhs):
            return TAdd(_t_step(t.lhs, heap), t.rhs)
        if not t_is_value(t.rhs):
            return TAdd(t.lhs, _t_step(t.rhs, heap))
        if isinstance(t.lhs, TLit) and isinstance(t.rhs, TLit):
            return TLit(t.lhs.value + t.rhs.value)
        raise _TStuckSignal("+ on non-integers")

    if isinstance(t, RefNew):
        if not t_is_value(t.init):
            return RefNew(_t_step(t.init, heap))
        return Cell(heap.alloc(t.init))

    if isinstance(t, Deref):
        if not t_is_value(t.ref):
            return Deref(_t_step(t.ref, heap))
        if not isinstance(t.ref, Cell):
            raise _TStuckSignal("! on a non-reference")
        if t.ref.id not in heap.cells:
            raise _TStuckSignal(f"dangling cell #{t.ref.id}")
        return heap.cells[t.ref.id]

    if isinstance(t, Assign):
        if not t_is_value(t.ref):
            return Assign(_t_step(t.ref, heap), t.value)
        if not t_is_value(t.value):
            return Assign(t.ref, _t_step(t.value, heap))
        if not isinstance(t.ref, Cell):
            raise _TStuckSignal(":= on a non-reference")
        heap.cells[t.ref.id] = t.value
        return T_UNIT_LIT

    if isinstance(t, RetTag):
        return RetTag(t.yld, t.ret, _t_step(t.arg, heap))

    if isinstance(t, YieldTag):
        return YieldTag(t.yld, t.ret, _t_step(t.arg, heap))

    if isinstance(t, MatchOut):
        if not t_is_value(t.scrutinee):
            return MatchOut(
                _t_step(t.scrutinee, heap),
                t.ret_var,
                t.ret_body,
                t.yield_var,
                t.yield_body,
                t.term_body,
            )
        s = t.scrutinee
        if isinstance(s, RetTag):
            return t_substitute(t.ret_body, t.ret_var, s.arg)
        if isinstance(s, YieldTag):
            return t_substitute(t.yield_body, t.yield_var, s.arg)
        if isinstance(s, TermTag):
            return t.term_body
        raise _TStuckSignal("match on a non-Out value")

    if isinstance(t, FixBp):
        if not t_is_value(t.arg):
            return FixBp(_t_step(t.arg, heap), t.annot)
        fn_ty = t.annot
        if not isinstance(fn_ty, TFun):
            raise _TStuckSignal("fixbp on a non-function type")
        cell_var, forward_var = "%fixc", "%fixx"
        placeholder = TAbs(forward_var, fn_ty.param, default_value(fn_ty.ret))
        forwarder = TAbs(
            forward_var, fn_ty.param, TApp(Deref(TVar(cell_var)), TVar(forward_var))
        )
        return t_let(
            cell_var,
            TRef(fn_ty),
            RefNew(placeholder),
            t_seq(
                Assign(TVar(cell_var), TApp(t.arg, forwarder)),
                Deref(TVar(cell_var)),
            ),
        )

    raise _TStuckSignal(f"cannot step {type(t).__name__}")


def eval_target(
    t: TargetTerm, fuel: int = 100_000, heap: Optional[Heap] = None
) -> TFinished | TStuck | TOutOfFuel:
    heap = heap if heap is not None else Heap()
    steps = 0
    while not t_is_value(t):
        try:
            t = _t_step(t, heap)
        except _TStuckSignal as s:
            return TStuck(s.reason)
        steps += 1
        if steps >= fuel:
            return TOutOfFuel()
    return TFinished(t, heap, steps)


# ---------------------------------------------------------------------------
# Printing and parsing (.tgt)


def print_target(t: TargetTerm) -> str:
    return _tp(t, 3)


def _twrap(s: str, level: int, limit: int) -> str:
    return s if level <= limit else f"({s})"


def _tp(t: TargetTerm, limit: int) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TUnitLit):
        return "()"
    if isinstance(t, TLit):
        return str(t.value)
    if isinstance(t, Cell):
        return f"#cell<{t.id}>"
    if isinstance(t, TAbs):
        return _twrap(f"({t.var}: {t.annot}) => {_tp(t.body, 3)}", 3, limit)
    if isinstance(t, TApp):
        return _twrap(f"{_tp(t.fn, 1)}({_tp(t.arg, 3)})", 1, limit)
    if isinstance(t, TAdd):
        return _twrap(f"{_tp(t.lhs, 2)} + {_tp(t.rhs, 1)}", 2, limit)
    if isinstance(t, RefNew):
        return f"ref({_tp(t.init, 3)})"
    if isinstance(t, Deref):
        return _twrap(f"!{_tp(t.ref, 0)}", 1, limit)
    if isinstance(t, Assign):
        return _twrap(f"{_tp(t.ref, 1)} := {_tp(t.value, 2)}", 3, limit)
    if isinstance(t, RetTag):
        return f"Ret[{t.yld},{t.ret}]({_tp(t.arg, 3)})"
    if isinstance(t, YieldTag):
        return f"Yield[{t.yld},{t.ret}]({_tp(t.arg, 3)})"
    if isinstance(t, TermTag):
        return f"Term[{t.yld},{t.ret}]"
    if isinstance(t, MatchOut):
        return _twrap(
            f"{_tp(t.scrutinee, 1)} match {{ "
            f"case Ret({t.ret_var}) => {_tp(t.ret_body, 3)}; "
            f"case Yield({t.yield_var}) => {_tp(t.yield_body, 3)}; "
            f"case Term => {_tp(t.term_body, 3)} }}",
            2,
            limit,
        )
    if isinstance(t, FixBp):
        return f"fixbp[{t.annot}]({_tp(t.arg, 3)})"
    raise TypeError(f"unknown target term: {t!r}")


class TargetSyntaxError(TargetError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_T_PUNCT = [
    "=>", ":=", "()", "(", ")", "[", "]", "{", "}", ":", ",", ";", "+", "!", "=",
]

_T_KEYWORDS = {"ref", "match", "case", "Ret", "Yield", "Term", "fixbp", "Unit", "Int", "Never", "Ref", "Out"}


@dataclass
class _TTok:
    kind: str
    text: str
    line: int
    col: int


def _t_lex(src: str) -> list[_TTok]:
    toks: list[_TTok] = []
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
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        matched = False
        for p in _T_PUNCT:
            if src.startswith(p, i):
                toks.append(_TTok(p, p, line, col))
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
            toks.append(_TTok("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c in "_%":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_%"):
                j += 1
            word = src[i:j]
            kind = "kw" if word in _T_KEYWORDS else "ident"
            toks.append(_TTok(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise TargetSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_TTok("eof", "", line, col))
    return toks


class _TParser:
    def __init__(self, toks: list[_TTok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _TTok:
        return self.toks[self.pos]

    def next(self) -> _TTok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _TTok:
        t = self.peek()
        if t.kind != kind:
            raise TargetSyntaxError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def expect_kw(self, word: str) -> _TTok:
        t = self.peek()
        if not (t.kind == "kw" and t.text == word):
            raise TargetSyntaxError(f"expected {word!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str) -> TargetSyntaxError:
        t = self.peek()
        return TargetSyntaxError(msg, t.line, t.col)

    def type_atom(self) -> TargetType:
        t = self.peek()
        if t.kind == "kw" and t.text == "Unit":
            self.next()
            return T_UNIT
        if t.kind == "kw" and t.text == "Int":
            self.next()
            return T_INT
        if t.kind == "kw" and t.text == "Never":
            self.next()
            return T_NEVER
        if t.kind == "kw" and t.text == "Ref":
            self.next()
            self.expect("[")
            inner = self.type_()
            self.expect("]")
            return TRef(inner)
        if t.kind == "kw" and t.text == "Out":
            self.next()
            self.expect("[")
            y = self.type_()
            self.expect(",")
            r = self.type_()
            self.expect("]")
            return TOut(y, r)
        if t.kind == "(":
            self.next()
            inner = self.type_()
            self.expect(")")
            return inner
        raise self.err(f"expected a type, found {t.text or 'end of input'!r}")

    def type_(self) -> TargetType:
        left = self.type_atom()
        if self.peek().kind == "=>":
            self.next()
            return TFun(left, self.type_())
        return left

    def term(self) -> TargetTerm:
        left = self.term_assign()
        if self.peek().kind == ";":
            self.next()
            rest = self.term()
            return t_seq(left, rest)
        return left

    def term_assign(self) -> TargetTerm:
        left = self.term_add()
        if self.peek().kind == ":=":
            self.next()
            return Assign(left, self.term_add())
        return left

    def term_add(self) -> TargetTerm:
        left = self.term_match()
        while self.peek().kind == "+":
            self.next()
            left = TAdd(left, self.term_match())
        return left

    def term_match(self) -> TargetTerm:
        left = self.term_app()
        while self.peek().kind == "kw" and self.peek().text == "match":
            self.next()
            self.expect("{")
            self.expect_kw("case")
            self.expect_kw("Ret")
            self.expect("(")
            rv = self.expect("ident").text
            self.expect(")")
            self.expect("=>")
            rb = self.term()
            self.expect(";")
            self.expect_kw("case")
            self.expect_kw("Yield")
            self.expect("(")
            yv = self.expect("ident").text
            self.expect(")")
            self.expect("=>")
            yb = self.term()
            self.expect(";")
            self.expect_kw("case")
            self.expect_kw("Term")
            self.expect("=>")
            tb = self.term()
            self.expect("}")
            left = MatchOut(left, rv, rb, yv, yb, tb)
        return left

    def term_app(self) -> TargetTerm:
        left = self.term_atom()
        while self.peek().kind == "(":
            self.next()
            arg = self.term()
            self.expect(")")
            left = TApp(left, arg)
        return left

    def term_atom(self) -> TargetTerm:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return TLit(int(t.text))
        if t.kind == "()":
            self.next()
            return T_UNIT_LIT
        if t.kind == "!":
            self.next()
            return Deref(self.term_atom())
        if t.kind == "ident":
            self.next()
            return TVar(t.text)
        if t.kind == "(":
            # either a parenthesized term or a lambda "(x: T) => body"
            if (
                self.toks[self.pos + 1].kind == "ident"
                and self.toks[self.pos + 2].kind == ":"
            ):
                self.next()
                x = self.expect("ident").text
                self.expect(":")
                ty = self.type_()
                self.expect(")")
                self.expect("=>")
                return TAbs(x, ty, self.term())
            self.next()
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "kw" and t.text == "ref":
            self.next()
            self.expect("(")
            init = self.term()
            self.expect(")")
            return RefNew(init)
        if t.kind == "kw" and t.text in ("Ret", "Yield"):
            self.next()
            self.expect("[")
            y = self.type_()
            self.expect(",")
            r = self.type_()
            self.expect("]")
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return RetTag(y, r, arg) if t.text == "Ret" else YieldTag(y, r, arg)
        if t.kind == "kw" and t.text == "Term":
            self.next()
            self.expect("[")
            y = self.type_()
            self.expect(",")
            r = self.type_()
            self.expect("]")
            return TermTag(y, r)
        if t.kind == "kw" and t.text == "fixbp":
            self.next()
            self.expect("[")
            ty = self.type_()
            self.expect("]")
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return FixBp(arg, ty)
        raise self.err(f"expected a term, found {t.text or 'end of input'!r}")


def parse_target(text: str) -> TargetTerm:
    p = _TParser(_t_lex(text))
    t = p.term()
    tok = p.peek()
    if tok.kind != "eof":
        raise TargetSyntaxError(f"trailing input starting at {tok.text!r}", tok.line, tok.col)
    return t
