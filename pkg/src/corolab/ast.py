"""Abstract syntax for the coroutine calculus: types, terms, and the term algebra.

Terms split into user forms (what a parser may produce) and runtime forms
(instance labels, resumptions, suspensions, the empty term), which only arise
during evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator


# ---------------------------------------------------------------------------
# Types


class Type:
    """Base class for calculus types; structural equality via dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class UnitT(Type):
    def __str__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class IntT(Type):
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class BotT(Type):
    """Bottom: the yield type of a term that never yields."""

    def __str__(self) -> str:
        return "Bot"


@dataclass(frozen=True)
class TopT(Type):
    """Top: only meaningful in subtyping mode (join fallback)."""

    def __str__(self) -> str:
        return "Top"


@dataclass(frozen=True)
class FunT(Type):
    param: Type
    ret: Type

    def __str__(self) -> str:
        return f"{_paren_left(self.param)} -> {self.ret}"


@dataclass(frozen=True)
class CorT(Type):
    """Coroutine type: input, yield, return."""

    param: Type
    yld: Type
    ret: Type

    def __str__(self) -> str:
        return f"{_paren_left(self.param)} ~{_paren_mid(self.yld)}~> {self.ret}"


@dataclass(frozen=True)
class InstT(Type):
    """Coroutine instance type: yield, return."""

    yld: Type
    ret: Type

    def __str__(self) -> str:
        return f"{_paren_left(self.yld)} <~> {self.ret}"


UNIT_T = UnitT()
INT_T = IntT()
BOT = BotT()
TOP = TopT()

_ATOMIC_TYPES = (UnitT, IntT, BotT, TopT)


def _paren_left(t: Type) -> str:
    # arrows are right-associative, so compound left operands need parens
    if isinstance(t, _ATOMIC_TYPES):
        return str(t)
    return f"({t})"


def _paren_mid(t: Type) -> str:
    # the yield slot of a coroutine arrow is parsed at atom level
    if isinstance(t, _ATOMIC_TYPES):
        return str(t)
    return f"({t})"


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:  # pragma: no cover - overridden via printer
        from .syntax import print_term

        return print_term(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Abs(Term):
    var: str
    annot: Type
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Unit(Term):
    pass


@dataclass(frozen=True)
class Lit(Term):
    value: int


@dataclass(frozen=True)
class Add(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Cor(Term):
    """Coroutine literal: declared input annotation and yield type."""

    var: str
    annot: Type
    yld: Type
    body: Term


@dataclass(frozen=True)
class Yield(Term):
    arg: Term


@dataclass(frozen=True)
class Start(Term):
    coroutine: Term
    arg: Term


@dataclass(frozen=True)
class Resume(Term):
    target: Term
    ret_handler: Term
    yield_handler: Term
    dead_handler: Term


@dataclass(frozen=True)
class Snapshot(Term):
    target: Term


@dataclass(frozen=True)
class Fix(Term):
    arg: Term


# Runtime forms -------------------------------------------------------------


@dataclass(frozen=True)
class Label(Term):
    """Instance label; ids come from the evaluation configuration's counter."""

    id: int


@dataclass(frozen=True)
class Resumption(Term):
    """A running resume of instance `label` with its three handlers."""

    body: Term
    ret_handler: Term
    yield_handler: Term
    dead_handler: Term
    label: int


@dataclass(frozen=True)
class Suspension(Term):
    """A paused computation with a pending yielded value (or Empty)."""

    body: Term
    pending: Term


@dataclass(frozen=True)
class Empty(Term):
    pass


UNIT = Unit()
EMPTY = Empty()

RUNTIME_FORMS = (Label, Resumption, Suspension, Empty)


def is_user_term(t: Term) -> bool:
    """True iff no runtime form occurs anywhere in t."""
    return all(not isinstance(s, RUNTIME_FORMS) for s in subterms(t))


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for child in children(t):
        yield from subterms(child)


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (Var, Unit, Lit, Label, Empty)):
        return ()
    if isinstance(t, Abs):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Add):
        return (t.lhs, t.rhs)
    if isinstance(t, Cor):
        return (t.body,)
    if isinstance(t, Yield):
        return (t.arg,)
    if isinstance(t, Start):
        return (t.coroutine, t.arg)
    if isinstance(t, Resume):
        return (t.target, t.ret_handler, t.yield_handler, t.dead_handler)
    if isinstance(t, Snapshot):
        return (t.target,)
    if isinstance(t, Fix):
        return (t.arg,)
    if isinstance(t, Resumption):
        return (t.body, t.ret_handler, t.yield_handler, t.dead_handler)
    if isinstance(t, Suspension):
        return (t.body, t.pending)
    raise TypeError(f"unknown term: {t!r}")


def is_value(t: Term) -> bool:
    """Values: abstraction, unit, integer, coroutine, instance label, empty."""
    return isinstance(t, (Abs, Unit, Lit, Cor, Label, Empty))


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, (Abs, Cor)):
        return free_vars(t.body) - {t.var}
    out: frozenset[str] = frozenset()
    for child in children(t):
        out |= free_vars(child)
    return out


def substitute(t: Term, x: str, v: Term) -> Term:
    """Replace free occurrences of x in t by v.

    v must be closed (the machine only ever substitutes closed values, plus
    closed fix terms), which makes capture impossible; binders shadowing x
    stop the traversal.
    """
    if isinstance(t, Var):
        return v if t.name == x else t
    if isinstance(t, (Unit, Lit, Label, Empty)):
        return t
    if isinstance(t, Abs):
        if t.var == x:
            return t
        return Abs(t.var, t.annot, substitute(t.body, x, v))
    if isinstance(t, Cor):
        if t.var == x:
            return t
        return Cor(t.var, t.annot, t.yld, substitute(t.body, x, v))
    if isinstance(t, App):
        return App(substitute(t.fn, x, v), substitute(t.arg, x, v))
    if isinstance(t, Add):
        return Add(substitute(t.lhs, x, v), substitute(t.rhs, x, v))
    if isinstance(t, Yield):
        return Yield(substitute(t.arg, x, v))
    if isinstance(t, Start):
        return Start(substitute(t.coroutine, x, v), substitute(t.arg, x, v))
    if isinstance(t, Resume):
        return Resume(
            substitute(t.target, x, v),
            substitute(t.ret_handler, x, v),
            substitute(t.yield_handler, x, v),
            substitute(t.dead_handler, x, v),
        )
    if isinstance(t, Snapshot):
        return Snapshot(substitute(t.target, x, v))
    if isinstance(t, Fix):
        return Fix(substitute(t.arg, x, v))
    if isinstance(t, Resumption):
        return Resumption(
            substitute(t.body, x, v),
            substitute(t.ret_handler, x, v),
            substitute(t.yield_handler, x, v),
            substitute(t.dead_handler, x, v),
            t.label,
        )
    if isinstance(t, Suspension):
        return Suspension(substitute(t.body, x, v), substitute(t.pending, x, v))
    raise TypeError(f"unknown term: {t!r}")


def alpha_eq(a: Term, b: Term) -> bool:
    """Structural equality up to renaming of bound variables."""
    return _alpha(a, b, {}, {}, [0])


def _alpha(a: Term, b: Term, ea: dict[str, int], eb: dict[str, int], ctr: list[int]) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        assert isinstance(b, Var)
        ia, ib = ea.get(a.name), eb.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, (Unit, Empty)):
        return True
    if isinstance(a, Lit):
        assert isinstance(b, Lit)
        return a.value == b.value
    if isinstance(a, Label):
        assert isinstance(b, Label)
        return a.id == b.id
    if isinstance(a, Abs):
        assert isinstance(b, Abs)
        if a.annot != b.annot:
            return False
        return _alpha_under(a.var, a.body, b.var, b.body, ea, eb, ctr)
    if isinstance(a, Cor):
        assert isinstance(b, Cor)
        if a.annot != b.annot or a.yld != b.yld:
            return False
        return _alpha_under(a.var, a.body, b.var, b.body, ea, eb, ctr)
    if isinstance(a, Resumption):
        assert isinstance(b, Resumption)
        if a.label != b.label:
            return False
    ca, cb = children(a), children(b)
    return len(ca) == len(cb) and all(
        _alpha(x, y, ea, eb, ctr) for x, y in zip(ca, cb)
    )


def _alpha_under(va, ba, vb, bb, ea, eb, ctr) -> bool:
    idx = ctr[0]
    ctr[0] += 1
    ea2 = dict(ea)
    eb2 = dict(eb)
    ea2[va] = idx
    eb2[vb] = idx
    return _alpha(ba, bb, ea2, eb2, ctr)


def rename_bound(t: Term, suffix: str) -> Term:
    """Alpha-rename every binder in t by appending a suffix (test helper)."""
    if isinstance(t, Abs):
        new = t.var + suffix
        body = substitute(rename_bound(t.body, suffix), t.var, Var(new))
        return Abs(new, t.annot, body)
    if isinstance(t, Cor):
        new = t.var + suffix
        body = substitute(rename_bound(t.body, suffix), t.var, Var(new))
        return Cor(new, t.annot, t.yld, body)
    if isinstance(t, (Var, Unit, Lit, Label, Empty)):
        return t
    reb = [rename_bound(c, suffix) for c in children(t)]
    if isinstance(t, App):
        return App(*reb)
    if isinstance(t, Add):
        return Add(*reb)
    if isinstance(t, Yield):
        return Yield(*reb)
    if isinstance(t, Start):
        return Start(*reb)
    if isinstance(t, Resume):
        return Resume(*reb)
    if isinstance(t, Snapshot):
        return Snapshot(*reb)
    if isinstance(t, Fix):
        return Fix(*reb)
    if isinstance(t, Resumption):
        return Resumption(*reb, t.label)
    if isinstance(t, Suspension):
        return Suspension(*reb)
    raise TypeError(f"unknown term: {t!r}")
