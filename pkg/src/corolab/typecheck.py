"""Algorithmic typing for the coroutine calculus.

Judgments synthesize a pair (type, yield type). Yields combine bottom-up with
Bot as the identity: base mode demands all non-Bot yields be equal, subtyping
mode joins them. The subtype lattice lives here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

from .ast import (
    BOT,
    INT_T,
    TOP,
    UNIT_T,
    Abs,
    Add,
    App,
    BotT,
    Cor,
    CorT,
    Empty,
    Fix,
    FunT,
    InstT,
    Label,
    Lit,
    Resume,
    Resumption,
    Snapshot,
    Start,
    Suspension,
    Term,
    TopT,
    Type,
    Unit,
    Var,
    Yield,
)

Mode = Literal["base", "subtyping"]


class TypeError_(Exception):
    """Raised when a term does not typecheck."""


class NonBottomYield(TypeError_):
    """A user program whose top-level yield type is not Bot."""


@dataclass(frozen=True)
class Judgment:
    type: Type
    yld: Type


class TypingContext:
    """Ordered variable bindings; innermost binding wins on lookup."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: tuple[tuple[str, Type], ...] = ()):
        self._bindings = bindings

    def extend(self, name: str, ty: Type) -> "TypingContext":
        return TypingContext(self._bindings + ((name, ty),))

    def lookup(self, name: str) -> Type:
        for n, ty in reversed(self._bindings):
            if n == name:
                return ty
        raise TypeError_(f"unbound variable: {name}")

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self._bindings)


EMPTY_CTX = TypingContext()

# Instance typing Sigma: label id -> instance type
InstanceTyping = Mapping[int, InstT]


# ---------------------------------------------------------------------------
# Subtype lattice (subtyping mode)


def subtype(s: Type, t: Type) -> bool:
    if s == t:
        return True
    if isinstance(s, BotT):
        return True
    if isinstance(t, TopT):
        return True
    if isinstance(s, FunT) and isinstance(t, FunT):
        return subtype(t.param, s.param) and subtype(s.ret, t.ret)
    if isinstance(s, CorT) and isinstance(t, CorT):
        return (
            subtype(t.param, s.param)
            and subtype(s.yld, t.yld)
            and subtype(s.ret, t.ret)
        )
    if isinstance(s, InstT) and isinstance(t, InstT):
        return subtype(s.yld, t.yld) and subtype(s.ret, t.ret)
    return False


def join(s: Type, t: Type) -> Type:
    if s == t:
        return s
    if isinstance(s, BotT):
        return t
    if isinstance(t, BotT):
        return s
    if isinstance(s, TopT) or isinstance(t, TopT):
        return TOP
    if isinstance(s, FunT) and isinstance(t, FunT):
        return FunT(meet(s.param, t.param), join(s.ret, t.ret))
    if isinstance(s, CorT) and isinstance(t, CorT):
        return CorT(meet(s.param, t.param), join(s.yld, t.yld), join(s.ret, t.ret))
    if isinstance(s, InstT) and isinstance(t, InstT):
        return InstT(join(s.yld, t.yld), join(s.ret, t.ret))
    # incompatible shapes have no smaller upper bound
    return TOP


def meet(s: Type, t: Type) -> Type:
    if s == t:
        return s
    if isinstance(s, TopT):
        return t
    if isinstance(t, TopT):
        return s
    if isinstance(s, BotT) or isinstance(t, BotT):
        return BOT
    if isinstance(s, FunT) and isinstance(t, FunT):
        return FunT(join(s.param, t.param), meet(s.ret, t.ret))
    if isinstance(s, CorT) and isinstance(t, CorT):
        return CorT(join(s.param, t.param), meet(s.yld, t.yld), meet(s.ret, t.ret))
    if isinstance(s, InstT) and isinstance(t, InstT):
        return InstT(meet(s.yld, t.yld), meet(s.ret, t.ret))
    return BOT


# ---------------------------------------------------------------------------
# Yield combination


def _combine_yields(mode: Mode, *ys: Type) -> Type:
    out: Type = BOT
    for y in ys:
        if isinstance(y, BotT):
            continue
        if isinstance(out, BotT):
            out = y
        elif mode == "subtyping":
            out = join(out, y)
        elif out != y:
            raise TypeError_(f"conflicting yield types: {out} vs {y}")
    return out


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise TypeError_(msg)


def _fits(mode: Mode, actual: Type, expected: Type) -> bool:
    if mode == "subtyping":
        return subtype(actual, expected)
    return actual == expected


# ---------------------------------------------------------------------------
# Inference


def infer(
    sigma: InstanceTyping,
    gamma: TypingContext,
    t: Term,
    mode: Mode = "base",
) -> Judgment:
    if isinstance(t, Var):
        return Judgment(gamma.lookup(t.name), BOT)

    if isinstance(t, Unit):
        return Judgment(UNIT_T, BOT)

    if isinstance(t, Lit):
        return Judgment(INT_T, BOT)

    if isinstance(t, Add):
        j1 = infer(sigma, gamma, t.lhs, mode)
        j2 = infer(sigma, gamma, t.rhs, mode)
        _require(_fits(mode, j1.type, INT_T), f"+ expects Int, got {j1.type}")
        _require(_fits(mode, j2.type, INT_T), f"+ expects Int, got {j2.type}")
        return Judgment(INT_T, _combine_yields(mode, j1.yld, j2.yld))

    if isinstance(t, Abs):
        j = infer(sigma, gamma.extend(t.var, t.annot), t.body, mode)
        _require(
            isinstance(j.yld, BotT),
            f"function body may not yield (yields {j.yld})",
        )
        return Judgment(FunT(t.annot, j.type), BOT)

    if isinstance(t, Cor):
        j = infer(sigma, gamma.extend(t.var, t.annot), t.body, mode)
        if mode == "subtyping":
            _require(
                subtype(j.yld, t.yld),
                f"coroutine body yields {j.yld}, declared {t.yld}",
            )
        else:
            _require(
                isinstance(j.yld, BotT) or j.yld == t.yld,
                f"coroutine body yields {j.yld}, declared {t.yld}",
            )
        return Judgment(CorT(t.annot, t.yld, j.type), BOT)

    if isinstance(t, App):
        j1 = infer(sigma, gamma, t.fn, mode)
        j2 = infer(sigma, gamma, t.arg, mode)
        fn_ty = j1.type
        if isinstance(fn_ty, FunT):
            _require(
                _fits(mode, j2.type, fn_ty.param),
                f"argument has type {j2.type}, expected {fn_ty.param}",
            )
            return Judgment(fn_ty.ret, _combine_yields(mode, j1.yld, j2.yld))
        if isinstance(fn_ty, CorT):
            # direct coroutine call: the callee's yield joins the ambient one
            _require(
                _fits(mode, j2.type, fn_ty.param),
                f"argument has type {j2.type}, expected {fn_ty.param}",
            )
            return Judgment(
                fn_ty.ret, _combine_yields(mode, j1.yld, j2.yld, fn_ty.yld)
            )
        if mode == "subtyping" and isinstance(fn_ty, BotT):
            return Judgment(BOT, _combine_yields(mode, j1.yld, j2.yld))
        raise TypeError_(f"cannot apply a value of type {fn_ty}")

    if isinstance(t, Yield):
        j = infer(sigma, gamma, t.arg, mode)
        y = _combine_yields(mode, j.yld, j.type)
        return Judgment(UNIT_T, y)

    if isinstance(t, Start):
        j1 = infer(sigma, gamma, t.coroutine, mode)
        j2 = infer(sigma, gamma, t.arg, mode)
        if mode == "subtyping" and isinstance(j1.type, BotT):
            return Judgment(BOT, _combine_yields(mode, j1.yld, j2.yld))
        _require(isinstance(j1.type, CorT), f"start expects a coroutine, got {j1.type}")
        cty: CorT = j1.type  # type: ignore[assignment]
        _require(
            _fits(mode, j2.type, cty.param),
            f"start argument has type {j2.type}, expected {cty.param}",
        )
        return Judgment(InstT(cty.yld, cty.ret), _combine_yields(mode, j1.yld, j2.yld))

    if isinstance(t, Snapshot):
        j = infer(sigma, gamma, t.target, mode)
        if mode == "subtyping" and isinstance(j.type, BotT):
            return Judgment(BOT, j.yld)
        _require(isinstance(j.type, InstT), f"snapshot expects an instance, got {j.type}")
        return Judgment(j.type, j.yld)

    if isinstance(t, Resume):
        j1 = infer(sigma, gamma, t.target, mode)
        _require(isinstance(j1.type, InstT), f"resume expects an instance, got {j1.type}")
        ity: InstT = j1.type  # type: ignore[assignment]
        handlers = [
            (t.ret_handler, ity.ret, "return handler"),
            (t.yield_handler, ity.yld, "yield handler"),
            (t.dead_handler, UNIT_T, "dead handler"),
        ]
        hjs = [infer(sigma, gamma, h, mode) for h, _, _ in handlers]
        for (h, want_param, what), hj in zip(handlers, hjs):
            _require(
                isinstance(hj.type, CorT),
                f"{what} must be a coroutine, got {hj.type}",
            )
            hty: CorT = hj.type  # type: ignore[assignment]
            _require(
                _fits(mode, want_param, hty.param),
                f"{what} takes {hty.param}, expected {want_param}",
            )
        h_types: list[CorT] = [hj.type for hj in hjs]  # type: ignore[assignment]
        if mode == "subtyping":
            ret_ty = join(join(h_types[0].ret, h_types[1].ret), h_types[2].ret)
            tw = join(join(h_types[0].yld, h_types[1].yld), h_types[2].yld)
        else:
            _require(
                h_types[0].ret == h_types[1].ret == h_types[2].ret,
                "resume handler return types unequal",
            )
            _require(
                h_types[0].yld == h_types[1].yld == h_types[2].yld,
                "resume handler yield types unequal",
            )
            ret_ty = h_types[0].ret
            tw = h_types[0].yld
        ys = [j1.yld] + [hj.yld for hj in hjs] + [tw]
        return Judgment(ret_ty, _combine_yields(mode, *ys))

    if isinstance(t, Fix):
        j = infer(sigma, gamma, t.arg, mode)
        _require(isinstance(j.yld, BotT), "fix argument may not yield")
        _require(isinstance(j.type, FunT), f"fix expects a function, got {j.type}")
        fty: FunT = j.type  # type: ignore[assignment]
        if mode == "subtyping":
            _require(
                subtype(fty.ret, fty.param),
                f"fix argument must have type T -> T, got {fty}",
            )
            return Judgment(fty.ret, BOT)
        _require(
            fty.param == fty.ret,
            f"fix argument must have type T -> T, got {fty}",
        )
        return Judgment(fty.param, BOT)

    # runtime forms ---------------------------------------------------------

    if isinstance(t, Label):
        if t.id not in sigma:
            raise TypeError_(f"unbound instance label #{t.id}")
        return Judgment(sigma[t.id], BOT)

    if isinstance(t, Empty):
        # the empty term can be assumed to have any type; Bot subsumes in
        # subtyping mode and the suspension rule special-cases it in base mode
        return Judgment(BOT, BOT)

    if isinstance(t, Suspension):
        j = infer(sigma, gamma, t.body, mode)
        if isinstance(t.pending, Empty):
            return Judgment(j.type, j.yld)
        jp = infer(sigma, gamma, t.pending, mode)
        _require(isinstance(jp.yld, BotT), "pending yield value must not itself yield")
        return Judgment(j.type, _combine_yields(mode, j.yld, jp.type))

    if isinstance(t, Resumption):
        if t.label not in sigma:
            raise TypeError_(f"unbound instance label #{t.label}")
        ity = sigma[t.label]
        j1 = infer(sigma, gamma, t.body, mode)
        _require(
            _fits(mode, j1.type, ity.ret),
            f"resumption body has type {j1.type}, instance returns {ity.ret}",
        )
        if mode == "subtyping":
            _require(
                subtype(j1.yld, ity.yld),
                f"resumption body yields {j1.yld}, instance yields {ity.yld}",
            )
        else:
            _require(
                isinstance(j1.yld, BotT) or j1.yld == ity.yld,
                f"resumption body yields {j1.yld}, instance yields {ity.yld}",
            )
        shim = Resume(Label(t.label), t.ret_handler, t.yield_handler, t.dead_handler)
        jr = infer({t.label: ity, **dict(sigma)}, gamma, shim, mode)
        return jr

    raise TypeError_(f"cannot type term: {t!r}")


def check_user_program(t: Term, mode: Mode = "base") -> Type:
    """Typecheck a user program; its yield type must be Bot."""
    j = infer({}, EMPTY_CTX, t, mode)
    if not isinstance(j.yld, BotT):
        raise NonBottomYield(f"program yields {j.yld}; user programs must not yield")
    return j.type


def store_well_typed(sigma: InstanceTyping, mu: Mapping[int, Term], mode: Mode = "base") -> bool:
    """Domains match and every stored term checks against its instance type."""
    if set(sigma.keys()) != set(mu.keys()):
        return False
    for i, ity in sigma.items():
        try:
            j = infer(sigma, EMPTY_CTX, mu[i], mode)
        except TypeError_:
            return False
        if mode == "subtyping":
            if not (subtype(j.type, ity.ret) and subtype(j.yld, ity.yld)):
                return False
        else:
            if j.type != ity.ret:
                return False
            if not (isinstance(j.yld, BotT) or j.yld == ity.yld):
                return False
    return True
