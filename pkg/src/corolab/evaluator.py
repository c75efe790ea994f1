"""Deterministic small-step machine for the coroutine calculus.

A configuration pairs a term with the instance store. One call to `step`
performs exactly one transition: either a redex rule at the call-by-value
focus, or a single suspension-propagation frame (the pause rule). Resumption
frames are evaluation contexts but not suspension contexts, so suspensions
are captured at resumption boundaries instead of propagating past them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .ast import (
    BOT,
    EMPTY,
    UNIT,
    UNIT_T,
    Abs,
    Add,
    App,
    Cor,
    CorT,
    Empty,
    Fix,
    InstT,
    IntT,
    Label,
    Lit,
    Resume,
    Resumption,
    Snapshot,
    Start,
    Suspension,
    Term,
    Type,
    Unit,
    Var,
    Yield,
    is_value,
    substitute,
)
from .typecheck import EMPTY_CTX, Judgment, Mode, TypeError_, infer


class EvalError(Exception):
    pass


@dataclass
class InstanceStore:
    """Mutable map label -> term plus the freshness counter for labels."""

    bindings: dict[int, Term] = field(default_factory=dict)
    next_label: int = 0

    def fresh(self) -> int:
        i = self.next_label
        self.next_label += 1
        return i

    def copy(self) -> "InstanceStore":
        return InstanceStore(dict(self.bindings), self.next_label)


@dataclass
class Configuration:
    term: Term
    store: InstanceStore = field(default_factory=InstanceStore)
    # optional typing shadow, maintained when `track_types` is set
    sigma: Optional[dict[int, InstT]] = None
    mode: Mode = "base"

    def with_term(self, t: Term) -> "Configuration":
        return Configuration(t, self.store, self.sigma, self.mode)


@dataclass(frozen=True)
class Stepped:
    next: Configuration
    rule: str


@dataclass(frozen=True)
class Finished:
    value: Term


@dataclass(frozen=True)
class SuspendedAtTop:
    value: Term
    rest: Term


@dataclass(frozen=True)
class Stuck:
    reason: str


@dataclass(frozen=True)
class OutOfFuel:
    pass


class _StuckSignal(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def step(c: Configuration) -> Stepped | Finished | SuspendedAtTop | Stuck:
    t = c.term
    if is_value(t):
        return Finished(t)
    if isinstance(t, Suspension):
        return SuspendedAtTop(t.pending, t.body)
    try:
        t2, rule = _step_term(t, c)
    except _StuckSignal as s:
        return Stuck(s.reason)
    return Stepped(c.with_term(t2), rule)


def _step_term(t: Term, c: Configuration) -> tuple[Term, str]:
    """Rewrite the focused redex; mutates the store on the coroutine rules."""
    store = c.store

    if isinstance(t, Var):
        raise _StuckSignal(f"free variable {t.name}")

    if isinstance(t, App):
        if not is_value(t.fn):
            if isinstance(t.fn, Suspension):
                return Suspension(App(t.fn.body, t.arg), t.fn.pending), "E-Pause"
            sub, rule = _step_term(t.fn, c)
            return App(sub, t.arg), rule
        if not is_value(t.arg):
            if isinstance(t.arg, Suspension):
                return Suspension(App(t.fn, t.arg.body), t.arg.pending), "E-Pause"
            sub, rule = _step_term(t.arg, c)
            return App(t.fn, sub), rule
        if isinstance(t.fn, Abs):
            return substitute(t.fn.body, t.fn.var, t.arg), "E-AppAbs"
        if isinstance(t.fn, Cor):
            return substitute(t.fn.body, t.fn.var, t.arg), "E-AppCor"
        raise _StuckSignal(f"cannot apply {type(t.fn).__name__}")

    if isinstance(t, Add):
        if not is_value(t.lhs):
            if isinstance(t.lhs, Suspension):
                return Suspension(Add(t.lhs.body, t.rhs), t.lhs.pending), "E-Pause"
            sub, rule = _step_term(t.lhs, c)
            return Add(sub, t.rhs), rule
        if not is_value(t.rhs):
            if isinstance(t.rhs, Suspension):
                return Suspension(Add(t.lhs, t.rhs.body), t.rhs.pending), "E-Pause"
            sub, rule = _step_term(t.rhs, c)
            return Add(t.lhs, sub), rule
        if isinstance(t.lhs, Lit) and isinstance(t.rhs, Lit):
            return Lit(t.lhs.value + t.rhs.value), "E-Add"
        raise _StuckSignal("+ on non-integers")

    if isinstance(t, Yield):
        if not is_value(t.arg):
            if isinstance(t.arg, Suspension):
                return Suspension(Yield(t.arg.body), t.arg.pending), "E-Pause"
            sub, rule = _step_term(t.arg, c)
            return Yield(sub), rule
        return Suspension(UNIT, t.arg), "E-Yield"

    if isinstance(t, Start):
        if not is_value(t.coroutine):
            if isinstance(t.coroutine, Suspension):
                return (
                    Suspension(Start(t.coroutine.body, t.arg), t.coroutine.pending),
                    "E-Pause",
                )
            sub, rule = _step_term(t.coroutine, c)
            return Start(sub, t.arg), rule
        if not is_value(t.arg):
            if isinstance(t.arg, Suspension):
                return Suspension(Start(t.coroutine, t.arg.body), t.arg.pending), "E-Pause"
            sub, rule = _step_term(t.arg, c)
            return Start(t.coroutine, sub), rule
        if not isinstance(t.coroutine, Cor):
            raise _StuckSignal("start on a non-coroutine")
        i = store.fresh()
        store.bindings[i] = substitute(t.coroutine.body, t.coroutine.var, t.arg)
        if c.sigma is not None:
            c.sigma[i] = _instance_type_of(t.coroutine, c)
        return Label(i), "E-Start"

    if isinstance(t, Snapshot):
        if not is_value(t.target):
            if isinstance(t.target, Suspension):
                return Suspension(Snapshot(t.target.body), t.target.pending), "E-Pause"
            sub, rule = _step_term(t.target, c)
            return Snapshot(sub), rule
        if not isinstance(t.target, Label):
            raise _StuckSignal("snapshot on a non-instance")
        i1 = t.target.id
        if i1 not in store.bindings:
            raise _StuckSignal(f"unbound instance label #{i1}")
        i2 = store.fresh()
        store.bindings[i2] = store.bindings[i1]
        if c.sigma is not None:
            c.sigma[i2] = c.sigma[i1]
        return Label(i2), "E-Snapshot"

    if isinstance(t, Fix):
        if not is_value(t.arg):
            if isinstance(t.arg, Suspension):
                return Suspension(Fix(t.arg.body), t.arg.pending), "E-Pause"
            sub, rule = _step_term(t.arg, c)
            return Fix(sub), rule
        if not isinstance(t.arg, Abs):
            raise _StuckSignal("fix on a non-abstraction")
        return substitute(t.arg.body, t.arg.var, Fix(t.arg)), "E-Fix"

    if isinstance(t, Resume):
        parts = [t.target, t.ret_handler, t.yield_handler, t.dead_handler]
        for idx, sub in enumerate(parts):
            if not is_value(sub):
                if isinstance(sub, Suspension):
                    parts[idx] = sub.body
                    return Suspension(Resume(*parts), sub.pending), "E-Pause"
                stepped, rule = _step_term(sub, c)
                parts[idx] = stepped
                return Resume(*parts), rule
        if not isinstance(t.target, Label):
            raise _StuckSignal("resume on a non-instance")
        i = t.target.id
        if i not in store.bindings:
            raise _StuckSignal(f"unbound instance label #{i}")
        bound = store.bindings[i]
        if isinstance(bound, Suspension) and isinstance(bound.pending, Empty):
            # executing or terminated: invoke the dead handler
            return App(t.dead_handler, UNIT), "E-Resume2"
        store.bindings[i] = Suspension(bound, EMPTY)
        return (
            Resumption(bound, t.ret_handler, t.yield_handler, t.dead_handler, i),
            "E-Resume1",
        )

    if isinstance(t, Resumption):
        i = t.label
        if isinstance(t.body, Suspension):
            if i not in store.bindings:
                raise _StuckSignal(f"unbound instance label #{i}")
            if not isinstance(store.bindings[i], Suspension):
                raise _StuckSignal("resumption of an instance not marked executing")
            store.bindings[i] = t.body.body
            return App(t.yield_handler, t.body.pending), "E-Capture"
        if is_value(t.body):
            if i not in store.bindings:
                raise _StuckSignal(f"unbound instance label #{i}")
            if not isinstance(store.bindings[i], Suspension):
                raise _StuckSignal("resumption of an instance not marked executing")
            store.bindings[i] = Suspension(t.body, EMPTY)
            return App(t.ret_handler, t.body), "E-Terminate"
        sub, rule = _step_term(t.body, c)
        return (
            Resumption(sub, t.ret_handler, t.yield_handler, t.dead_handler, i),
            rule,
        )

    raise _StuckSignal(f"cannot step {type(t).__name__}")


def _instance_type_of(cor: Cor, c: Configuration) -> InstT:
    sigma = c.sigma or {}
    j: Judgment = infer(sigma, EMPTY_CTX, cor, c.mode)
    assert isinstance(j.type, CorT)
    return InstT(j.type.yld, j.type.ret)


@dataclass(frozen=True)
class EvalResult:
    outcome: Finished | SuspendedAtTop | Stuck | OutOfFuel
    store: InstanceStore
    steps: int


def evaluate(
    c: Configuration,
    fuel: int = 10_000,
    on_step: Optional[Callable[[str, Term], None]] = None,
) -> EvalResult:
    """Iterate `step` until a value, suspension, stuck state, or fuel runs out."""
    steps = 0
    while True:
        out = step(c)
        if isinstance(out, (Finished, SuspendedAtTop, Stuck)):
            return EvalResult(out, c.store, steps)
        assert isinstance(out, Stepped)
        steps += 1
        c = out.next
        if on_step is not None:
            on_step(out.rule, c.term)
        if steps >= fuel:
            return EvalResult(OutOfFuel(), c.store, steps)


# ---------------------------------------------------------------------------
# Whole-run driver


@dataclass(frozen=True)
class DriveResult:
    yields: tuple[Term, ...]
    outcome: str  # 'result' | 'still-live' | 'dead' | 'stuck' | 'out-of-fuel'
    value: Optional[Term] = None


def _identity_handler(param: Type) -> Cor:
    if isinstance(param, IntT):
        return Cor("x", param, BOT, Var("x"))
    return Cor("x", param, BOT, Lit(0))


def drive(
    coroutine: Term,
    arg: Term,
    max_resumes: int = 64,
    fuel: int = 10_000,
    mode: Mode = "base",
) -> DriveResult:
    """Start one instance and resume it with identity-shaped handlers.

    After each resume the store classifies the round: a binding that became an
    empty-pending suspension means the instance terminated (its value sits
    inside), anything else means it yielded. Yielded values are collected in
    order. The handlers only exist to keep every driver term well-typed; the
    interesting data is read from the store.
    """
    j = infer({}, EMPTY_CTX, coroutine, mode)
    if not isinstance(j.type, CorT):
        raise EvalError(f"drive expects a coroutine, got {j.type}")
    cty = j.type

    cfg = Configuration(Start(coroutine, arg), InstanceStore(), None, mode)
    res = evaluate(cfg, fuel)
    if not isinstance(res.outcome, Finished):
        return DriveResult((), _outcome_name(res.outcome))
    label = res.outcome.value
    assert isinstance(label, Label)

    h_ret = _identity_handler(cty.ret)
    h_yield = _identity_handler(cty.yld)
    h_dead = Cor("u", UNIT_T, BOT, Lit(0))

    yields: list[Term] = []
    store = res.store
    for _ in range(max_resumes):
        cfg = Configuration(Resume(label, h_ret, h_yield, h_dead), store, None, mode)
        res = evaluate(cfg, fuel)
        if isinstance(res.outcome, Stuck):
            return DriveResult(tuple(yields), "stuck")
        if isinstance(res.outcome, OutOfFuel):
            return DriveResult(tuple(yields), "out-of-fuel")
        assert isinstance(res.outcome, Finished)
        store = res.store
        bound = store.bindings[label.id]
        if isinstance(bound, Suspension) and isinstance(bound.pending, Empty):
            return DriveResult(tuple(yields), "result", bound.body)
        yields.append(res.outcome.value)
    return DriveResult(tuple(yields), "still-live")


def _outcome_name(o: object) -> str:
    if isinstance(o, Stuck):
        return "stuck"
    if isinstance(o, OutOfFuel):
        return "out-of-fuel"
    return "still-live"
