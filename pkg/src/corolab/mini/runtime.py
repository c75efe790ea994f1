"""Trampolined coroutine instances: growable stacks, the resume loop, and
snapshots.

Entry-point bodies are compiled once into closure trees over a per-activation
locals dict; the only effects available to them are the instance-slot
primitives (slot load/store, pc write, frame push/pop, value/result/exception
writes, and the call flag).
"""

from __future__ import annotations

from dataclasses import dataclass

from .codegen import CompiledCoroutine, CompiledProgram, EntryPoint
from .frontend import (
    AssignS,
    BinE,
    Block,
    BlockS,
    BoolE,
    CallE,
    DeclS,
    IfS,
    IntE,
    ListE,
    MiniError,
    MiniList,
    MiniThrow,
    NilE,
    RethrowPendingS,
    RunOutcome,
    SelE,
    TakeResultE,
    ThrowS,
    TryS,
    UNIT_V,
    UnitE,
    VarE,
    WhileS,
    YieldE,
    show_value,
)


class ResumeOnDead(MiniError):
    """Resumed an instance whose root frame already terminated."""


class FieldUnset(MiniError):
    pass


_MISSING = object()
_EXIT = object()  # control code: the entry point returned

INITIAL_CAPACITY = 4


class GrowArray:
    """Doubling array with explicit capacity; tracks total copy work so the
    reallocation bound is testable."""

    __slots__ = ("data", "top", "copies")

    def __init__(self):
        self.data = [None] * INITIAL_CAPACITY
        self.top = 0  # number of live entries
        self.copies = 0

    @property
    def capacity(self) -> int:
        return len(self.data)

    def ensure(self, n: int) -> None:
        if n <= len(self.data):
            return
        cap = len(self.data)
        while cap < n:
            cap *= 2
        new = [None] * cap
        new[: self.top] = self.data[: self.top]
        self.copies += self.top
        self.data = new

    def push(self, v) -> None:
        self.ensure(self.top + 1)
        self.data[self.top] = v
        self.top += 1

    def pop(self):
        self.top -= 1
        v = self.data[self.top]
        self.data[self.top] = None
        return v

    def clone(self) -> "GrowArray":
        g = GrowArray.__new__(GrowArray)
        g.data = list(self.data)
        g.top = self.top
        g.copies = self.copies
        return g


class Instance:
    """A started coroutine: descriptor/pc/value stacks plus the flag and
    value/result/exception slots."""

    __slots__ = (
        "live", "call", "value", "result", "exception",
        "cstack", "pstack", "bstack", "vstack", "enter_depth", "max_enter_depth",
    )

    def __init__(self):
        self.live = True
        self.call = False
        self.value = _MISSING
        self.result = _MISSING
        self.exception = _MISSING
        self.cstack = GrowArray()  # compiled coroutine refs
        self.pstack = GrowArray()  # pcs
        self.bstack = GrowArray()  # per-frame slot bases
        self.vstack = GrowArray()  # tagged value slots
        self.enter_depth = 0
        self.max_enter_depth = 0

    # frame layout: the callee's slots sit above the caller's
    def push_frame(self, callee: CompiledCoroutine, args: list) -> None:
        if self.cstack.top == 0:
            base = 0
        else:
            prev: CompiledCoroutine = self.cstack.data[self.cstack.top - 1]
            base = self.bstack.data[self.bstack.top - 1] + prev.slot_count
        self.cstack.push(callee)
        self.pstack.push(0)
        self.bstack.push(base)
        self.vstack.ensure(base + callee.slot_count)
        if self.vstack.top < base + callee.slot_count:
            self.vstack.top = base + callee.slot_count
        for i, v in enumerate(args):
            self.vstack.data[base + i] = v

    def pop_frame(self) -> None:
        self.cstack.pop()
        self.pstack.pop()
        base = self.bstack.pop()
        self.vstack.top = base

    def frames(self) -> int:
        return self.cstack.top

    def snapshot(self) -> "Instance":
        c = Instance.__new__(Instance)
        c.live = self.live
        c.call = self.call
        c.value = self.value
        c.result = self.result
        c.exception = self.exception
        c.cstack = self.cstack.clone()
        c.pstack = self.pstack.clone()
        c.bstack = self.bstack.clone()
        c.vstack = self.vstack.clone()
        c.enter_depth = 0
        c.max_enter_depth = 0
        return c


def start_instance(cc: CompiledCoroutine, args: list) -> Instance:
    if len(args) != cc.arity:
        raise MiniError(f"{cc.name} expects {cc.arity} arguments, got {len(args)}")
    inst = Instance()
    inst.push_frame(cc, list(args))
    return inst


def resume_instance(inst: Instance) -> bool:
    """The trampoline: enter the topmost frame's entry point while the call
    flag stays set; returns True iff the instance yielded."""
    if not inst.live:
        raise ResumeOnDead("resume on a terminated instance")
    inst.value = _MISSING
    cstack = inst.cstack
    pstack = inst.pstack
    while True:
        cc: CompiledCoroutine = cstack.data[cstack.top - 1]
        ep: EntryPoint = cc.dispatch[pstack.data[pstack.top - 1]]
        inst.enter_depth += 1
        if inst.enter_depth > inst.max_enter_depth:
            inst.max_enter_depth = inst.enter_depth
        ep.run(inst)
        inst.enter_depth -= 1
        if not inst.call:
            break
    return inst.live


def snapshot_instance(inst: Instance) -> Instance:
    return inst.snapshot()


def read_value(inst: Instance):
    if inst.value is _MISSING:
        raise FieldUnset("no value: the last resume did not yield")
    return inst.value


def read_result(inst: Instance):
    if inst.result is _MISSING:
        raise FieldUnset("no result: the instance has not returned")
    return inst.result


def read_exception(inst: Instance):
    if inst.exception is _MISSING:
        raise FieldUnset("no exception")
    return inst.exception


# ---------------------------------------------------------------------------
# Closure compilation of entry points


def install_closures(cc: CompiledCoroutine) -> None:
    for ep in cc.dispatch.values():
        ep.run = _compile_entry(cc, ep)


def _compile_expr(e, cc: CompiledCoroutine):
    if isinstance(e, IntE):
        v = e.value
        return lambda env, inst: v
    if isinstance(e, BoolE):
        v = e.value
        return lambda env, inst: v
    if isinstance(e, UnitE):
        return lambda env, inst: UNIT_V
    if isinstance(e, NilE):
        return lambda env, inst: MiniList(())
    if isinstance(e, VarE):
        name = e.name
        return lambda env, inst: env[name]
    if isinstance(e, ListE):
        items = [_compile_expr(x, cc) for x in e.items]
        return lambda env, inst: MiniList(tuple(f(env, inst) for f in items))
    if isinstance(e, SelE):
        tgt = _compile_expr(e.target, cc)
        if e.field == "head":
            def head(env, inst):
                v = tgt(env, inst)
                if not isinstance(v, MiniList):
                    raise MiniError(".head on a non-list")
                return v.head()
            return head
        if e.field == "tail":
            def tail(env, inst):
                v = tgt(env, inst)
                if not isinstance(v, MiniList):
                    raise MiniError(".tail on a non-list")
                return v.tail()
            return tail
        def isnil(env, inst):
            v = tgt(env, inst)
            if not isinstance(v, MiniList):
                raise MiniError(".isNil on a non-list")
            return v.is_nil
        return isnil
    if isinstance(e, BinE):
        l = _compile_expr(e.lhs, cc)
        r = _compile_expr(e.rhs, cc)
        op = e.op
        if op == "+":
            return lambda env, inst: l(env, inst) + r(env, inst)
        if op == "-":
            return lambda env, inst: l(env, inst) - r(env, inst)
        if op == "<":
            return lambda env, inst: l(env, inst) < r(env, inst)
        if op == "==":
            return lambda env, inst: l(env, inst) == r(env, inst)
        if op == "!=":
            return lambda env, inst: l(env, inst) != r(env, inst)
        raise MiniError(f"operator {op} must not survive normalization")
    if isinstance(e, TakeResultE):
        def take(env, inst):
            v = inst.result
            if v is _MISSING:
                raise MiniError("no callee result to take")
            inst.result = _MISSING
            return v
        return take
    raise MiniError(f"cannot compile expression {type(e).__name__}")


def _compile_entry(cc: CompiledCoroutine, ep: EntryPoint):
    slot_index = cc.slot_index
    loads = [(name, slot_index[name]) for name in ep.loads]
    body_run = _compile_block(ep.body, cc, ep, top_level=True)

    def run(inst: Instance) -> None:
        env: dict = {}
        base = inst.bstack.data[inst.bstack.top - 1]
        data = inst.vstack.data
        for name, idx in loads:
            env[name] = data[base + idx]
        try:
            body_run(env, inst)
        except MiniThrow as ex:
            # unwind: record the exception, pop the frame, and let the
            # caller's after-call entry (if any) rethrow it
            inst.exception = ex.payload
            inst.pop_frame()
            if inst.frames() == 0:
                inst.live = False
                inst.call = False
            else:
                inst.call = True

    return run


def _compile_block(b: Block, cc: CompiledCoroutine, ep: EntryPoint, top_level: bool = False):
    runners = [_compile_stmt(s, cc, ep) for s in b.stmts]
    if top_level:
        result_fn = _compile_expr(b.result, cc) if b.result is not None else None

        def run_top(env, inst):
            for f in runners:
                if f(env, inst) is _EXIT:
                    return _EXIT
            # terminal: write the result and pop this frame
            inst.result = result_fn(env, inst) if result_fn is not None else UNIT_V
            inst.pop_frame()
            if inst.frames() == 0:
                inst.live = False
                inst.call = False
            else:
                inst.call = True
            return _EXIT

        return run_top

    def run(env, inst):
        for f in runners:
            if f(env, inst) is _EXIT:
                return _EXIT
        return None

    return run


def _compile_stmt(s, cc: CompiledCoroutine, ep: EntryPoint):
    if isinstance(s, DeclS):
        if isinstance(s.init, YieldE):
            return _compile_yield_exit(s, cc, ep)
        if isinstance(s.init, CallE):
            return _compile_call_exit(s, cc, ep)
        name = s.name
        if s.init is None:
            def decl0(env, inst):
                env[name] = UNIT_V
                return None
            return decl0
        init = _compile_expr(s.init, cc)
        def decl(env, inst):
            env[name] = init(env, inst)
            return None
        return decl
    if isinstance(s, AssignS):
        name = s.name
        val = _compile_expr(s.expr, cc)
        def assign(env, inst):
            env[name] = val(env, inst)
            return None
        return assign
    if isinstance(s, WhileS):
        cond = _compile_expr(s.cond, cc)
        body = _compile_block(s.body, cc, ep)
        def loop(env, inst):
            while cond(env, inst):
                if body(env, inst) is _EXIT:
                    return _EXIT
            return None
        return loop
    if isinstance(s, IfS):
        cond = _compile_expr(s.cond, cc)
        then = _compile_block(s.then, cc, ep)
        els = _compile_block(s.els, cc, ep)
        def branch(env, inst):
            if cond(env, inst):
                return then(env, inst)
            return els(env, inst)
        return branch
    if isinstance(s, ThrowS):
        val = _compile_expr(s.expr, cc)
        def throw(env, inst):
            raise MiniThrow(val(env, inst))
        return throw
    if isinstance(s, TryS):
        body = _compile_block(s.body, cc, ep)
        handler = _compile_block(s.handler, cc, ep)
        var = s.var
        def tryrun(env, inst):
            try:
                return body(env, inst)
            except MiniThrow as ex:
                env[var] = ex.payload
                return handler(env, inst)
        return tryrun
    if isinstance(s, BlockS):
        return _compile_block(s.block, cc, ep)
    if isinstance(s, RethrowPendingS):
        def rethrow(env, inst):
            if inst.exception is not _MISSING:
                payload = inst.exception
                inst.exception = _MISSING
                raise MiniThrow(payload)
            return None
        return rethrow
    raise MiniError(f"cannot compile statement {type(s).__name__}")


def _unreachable(env, inst):
    raise MiniError("entered statically unreachable code")


def _compile_yield_exit(s: DeclS, cc: CompiledCoroutine, ep: EntryPoint):
    if id(s) not in ep.resume_pc:
        return _unreachable  # dead in this segment (e.g. a handler that cannot fire)
    value = _compile_expr(s.init.arg, cc)
    stores = [(n, cc.slot_index[n]) for n in ep.stores.get(id(s), ())]
    pc = ep.resume_pc[id(s)]

    def yield_exit(env, inst):
        data = inst.vstack.data
        base = inst.bstack.data[inst.bstack.top - 1]
        for name, idx in stores:
            # absent from the frame: unchanged on this path, slot still current
            v = env.get(name, _MISSING)
            if v is not _MISSING:
                data[base + idx] = v
        inst.value = value(env, inst)
        inst.pstack.data[inst.pstack.top - 1] = pc
        inst.call = False
        return _EXIT

    return yield_exit


def _compile_call_exit(s: DeclS, cc: CompiledCoroutine, ep: EntryPoint):
    if id(s) not in ep.resume_pc:
        return _unreachable
    call: CallE = s.init
    args = [_compile_expr(a, cc) for a in call.args]
    stores = [(n, cc.slot_index[n]) for n in ep.stores.get(id(s), ())]
    pc = ep.resume_pc[id(s)]
    callee_name = call.name

    def call_exit(env, inst):
        data = inst.vstack.data
        base = inst.bstack.data[inst.bstack.top - 1]
        for name, idx in stores:
            v = env.get(name, _MISSING)
            if v is not _MISSING:
                data[base + idx] = v
        inst.pstack.data[inst.pstack.top - 1] = pc
        callee = cc.program[callee_name]
        argv = [f(env, inst) for f in args]
        if len(argv) != callee.arity:
            raise MiniError(f"{callee_name} expects {callee.arity} arguments")
        inst.push_frame(callee, argv)
        inst.call = True
        return _EXIT

    return call_exit


# ---------------------------------------------------------------------------
# Whole-run collection (mirrors the oracle's outcome shape)


def collect_run(
    prog: CompiledProgram,
    entry: str,
    args: list,
    max_resumes: int = 1_000_000,
    snapshot_at: int | None = None,
):
    """Resume until termination, collecting yields; optionally snapshots at
    resume index `snapshot_at` and returns the copy's independent tail too."""
    inst = start_instance(prog[entry], list(args))
    yields: list = []
    snap_tail = None
    count = 0
    while count < max_resumes:
        if snapshot_at is not None and count == snapshot_at:
            snap = snapshot_instance(inst)
            snap_tail = _drain(snap, max_resumes)
        if not resume_instance(inst):
            break
        yields.append(read_value(inst))
        count += 1
    exception = inst.exception if inst.exception is not _MISSING else None
    result = inst.result if inst.result is not _MISSING else None
    outcome = RunOutcome(tuple(yields), result, exception)
    return (outcome, snap_tail) if snapshot_at is not None else (outcome, None)


def _drain(inst: Instance, max_resumes: int) -> RunOutcome:
    yields: list = []
    count = 0
    while count < max_resumes and inst.live:
        if not resume_instance(inst):
            break
        yields.append(read_value(inst))
        count += 1
    exception = inst.exception if inst.exception is not _MISSING else None
    result = inst.result if inst.result is not _MISSING else None
    return RunOutcome(tuple(yields), result, exception)
