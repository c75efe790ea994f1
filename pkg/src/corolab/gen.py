"""Seeded random generation: well-typed calculus programs, random types for
the lattice laws, and terminating MiniLang programs.

Generation is type-directed, so every program typechecks by construction;
the generators still assert that as a guard. Recursion is kept degenerate
(the fixpoint argument never calls itself) because the calculus has no
conditional to stop an unfolding, and MiniLang loops are of the bounded
counter shape, so every generated program terminates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .ast import (
    BOT,
    INT_T,
    TOP,
    UNIT,
    UNIT_T,
    Abs,
    Add,
    App,
    BotT,
    Cor,
    CorT,
    Fix,
    FunT,
    InstT,
    IntT,
    Lit,
    Resume,
    Snapshot,
    Start,
    Term,
    Type,
    UnitT,
    Var,
    Yield,
)
from .typecheck import Mode, check_user_program

INT_FUN = FunT(INT_T, INT_T)


# ---------------------------------------------------------------------------
# Random types (lattice tests)


def gen_type(rng: random.Random, depth: int = 3, with_top: bool = True) -> Type:
    leaves = [UNIT_T, INT_T, BOT] + ([TOP] if with_top else [])
    if depth <= 0:
        return rng.choice(leaves)
    pick = rng.randrange(6)
    if pick == 0:
        return FunT(gen_type(rng, depth - 1, with_top), gen_type(rng, depth - 1, with_top))
    if pick == 1:
        return CorT(
            gen_type(rng, depth - 1, with_top),
            gen_type(rng, depth - 1, with_top),
            gen_type(rng, depth - 1, with_top),
        )
    if pick == 2:
        return InstT(gen_type(rng, depth - 1, with_top), gen_type(rng, depth - 1, with_top))
    return rng.choice(leaves)


# ---------------------------------------------------------------------------
# Well-typed calculus programs


@dataclass
class _Gen:
    rng: random.Random
    fresh: int = 0

    def name(self, base: str = "v") -> str:
        self.fresh += 1
        return f"{base}{self.fresh}"


def gen_well_typed(seed: int, size: int = 8, mode: Mode = "base") -> Term:
    """A closed user program of type Int or Unit with yield type bottom."""
    rng = random.Random(seed)
    g = _Gen(rng)
    goal = rng.choice([INT_T, INT_T, UNIT_T])
    t = _gen_term(g, goal, {}, BOT, size)
    check_user_program(t, mode)  # construction guard
    return t


def _vars_of(ctx: dict, ty: Type) -> list:
    return [n for n, t in ctx.items() if t == ty]


def _gen_term(g: _Gen, goal: Type, ctx: dict, ambient: Type, size: int) -> Term:
    rng = g.rng
    if size <= 0:
        return _gen_leaf(g, goal, ctx, ambient)

    if isinstance(goal, IntT):
        choices = ["add", "leaf", "app", "let"]
        if not isinstance(ambient, BotT):
            choices += ["appcor"]
        choices += ["appcor-bot", "resume", "fix"]
        pick = rng.choice(choices)
        if pick == "add":
            return Add(
                _gen_term(g, INT_T, ctx, ambient, size - 1),
                _gen_term(g, INT_T, ctx, ambient, size - 1),
            )
        if pick == "app":
            return App(
                _gen_term(g, INT_FUN, ctx, ambient, size - 1),
                _gen_term(g, INT_T, ctx, ambient, size - 1),
            )
        if pick == "appcor":
            cty = CorT(INT_T, ambient, INT_T)
            return App(
                _gen_term(g, cty, ctx, ambient, size - 1),
                _gen_term(g, INT_T, ctx, ambient, size - 1),
            )
        if pick == "appcor-bot":
            cty = CorT(INT_T, BOT, INT_T)
            return App(
                _gen_term(g, cty, ctx, ambient, size - 1),
                _gen_term(g, INT_T, ctx, ambient, size - 1),
            )
        if pick == "resume":
            return _gen_resume(g, goal, ctx, ambient, size)
        if pick == "fix":
            x, f = g.name("x"), g.name("f")
            body = _gen_term(g, INT_T, {**ctx, x: INT_T}, BOT, size - 2)
            fn = Fix(Abs(f, INT_FUN, Abs(x, INT_T, body)))
            return App(fn, _gen_term(g, INT_T, ctx, ambient, size - 1))
        if pick == "let":
            x = g.name("x")
            bound_ty = rng.choice([INT_T, UNIT_T, INT_FUN])
            bound = _gen_term(g, bound_ty, ctx, ambient, size // 2)
            body = _gen_term(g, INT_T, {**ctx, x: bound_ty}, BOT, size - 1)
            return App(Abs(x, bound_ty, body), bound)
        return _gen_leaf(g, goal, ctx, ambient)

    if isinstance(goal, UnitT):
        choices = ["leaf", "leaf", "app"]
        if not isinstance(ambient, BotT):
            choices += ["yield", "yield"]
        pick = rng.choice(choices)
        if pick == "yield":
            return Yield(_gen_term(g, ambient, ctx, ambient, size - 1))
        if pick == "app":
            x = g.name("u")
            bound = _gen_term(g, INT_T, ctx, ambient, size // 2)
            body = _gen_term(g, UNIT_T, {**ctx, x: INT_T}, BOT, size - 1)
            return App(Abs(x, INT_T, body), bound)
        return _gen_leaf(g, goal, ctx, ambient)

    if isinstance(goal, FunT):
        x = g.name("x")
        body = _gen_term(g, goal.ret, {**ctx, x: goal.param}, BOT, size - 1)
        return Abs(x, goal.param, body)

    if isinstance(goal, CorT):
        x = g.name("x")
        body = _gen_term(g, goal.ret, {**ctx, x: goal.param}, goal.yld, size - 1)
        return Cor(x, goal.param, goal.yld, body)

    if isinstance(goal, InstT):
        if g.rng.random() < 0.3:
            return Snapshot(_gen_term(g, goal, ctx, ambient, size - 1))
        param = INT_T
        cty = CorT(param, goal.yld, goal.ret)
        return Start(
            _gen_term(g, cty, ctx, ambient, size - 1),
            _gen_term(g, param, ctx, ambient, size - 1),
        )

    raise ValueError(f"no generator for goal {goal}")


def _gen_resume(g: _Gen, goal: Type, ctx: dict, ambient: Type, size: int) -> Term:
    rng = g.rng
    ity = rng.choice([InstT(INT_T, INT_T), InstT(INT_T, UNIT_T), InstT(BOT, INT_T)])
    target = _gen_term(g, ity, ctx, ambient, size - 2)
    tw = ambient if not isinstance(ambient, BotT) and rng.random() < 0.5 else BOT

    def handler(param: Type) -> Term:
        x = g.name("h")
        body = _gen_term(g, goal, {**ctx, x: param}, tw, max(0, size - 3))
        return Cor(x, param, tw, body)

    return Resume(target, handler(ity.ret), handler(ity.yld), handler(UNIT_T))


def _gen_leaf(g: _Gen, goal: Type, ctx: dict, ambient: Type) -> Term:
    rng = g.rng
    if isinstance(goal, IntT):
        vs = _vars_of(ctx, INT_T)
        if vs and rng.random() < 0.5:
            return Var(rng.choice(vs))
        return Lit(rng.randrange(0, 100))
    if isinstance(goal, UnitT):
        vs = _vars_of(ctx, UNIT_T)
        if vs and rng.random() < 0.3:
            return Var(rng.choice(vs))
        return UNIT
    if isinstance(goal, FunT):
        vs = _vars_of(ctx, goal)
        if vs and rng.random() < 0.5:
            return Var(rng.choice(vs))
        x = g.name("x")
        return Abs(x, goal.param, _gen_leaf(g, goal.ret, {**ctx, x: goal.param}, BOT))
    if isinstance(goal, CorT):
        vs = _vars_of(ctx, goal)
        if vs and rng.random() < 0.5:
            return Var(rng.choice(vs))
        x = g.name("x")
        return Cor(x, goal.param, goal.yld, _gen_leaf(g, goal.ret, {**ctx, x: goal.param}, goal.yld))
    if isinstance(goal, InstT):
        vs = _vars_of(ctx, goal)
        if vs and rng.random() < 0.5:
            return Var(rng.choice(vs))
        x = g.name("x")
        cor = Cor(x, INT_T, goal.yld, _gen_leaf(g, goal.ret, {x: INT_T}, goal.yld))
        return Start(cor, Lit(rng.randrange(0, 100)))
    raise ValueError(f"no leaf for {goal}")


def construct_census(t: Term) -> set:
    """Which coroutine-calculus constructs appear in a term."""
    from .ast import subterms
    from .typecheck import EMPTY_CTX, infer

    out = set()
    for s in subterms(t):
        if isinstance(s, Start):
            out.add("start")
        elif isinstance(s, Resume):
            out.add("resume")
        elif isinstance(s, Snapshot):
            out.add("snapshot")
        elif isinstance(s, Yield):
            out.add("yield")
        elif isinstance(s, Fix):
            out.add("fix")
        elif isinstance(s, Cor):
            out.add("coroutine")
        elif isinstance(s, Abs):
            out.add("fun")
    # direct coroutine calls need types, so detect them structurally:
    # an application whose function position is a coroutine literal/variable
    for s in subterms(t):
        if isinstance(s, App) and isinstance(s.fn, Cor):
            out.add("direct-call")
    return out


# ---------------------------------------------------------------------------
# MiniLang generation


def gen_mini(seed: int, size: int = 6):
    """A terminating MiniLang program plus (entry name, argument values)."""
    from .mini.frontend import (
        AssignS,
        BinE,
        Block,
        BoolE,
        CallE,
        CoroutineDef,
        DeclS,
        IfS,
        IntE,
        ListE,
        MiniList,
        MiniProgram,
        MiniType,
        SelE,
        ThrowS,
        TryS,
        UNIT_V,
        UnitE,
        VarE,
        WhileS,
        YieldE,
        ExprS,
    )

    rng = random.Random(seed)
    n_coroutines = rng.randrange(1, 4)
    defs: list = []
    counter = [0]

    def fresh(base="t"):
        counter[0] += 1
        return f"{base}{counter[0]}"

    def int_expr(scope: list, depth: int = 2):
        ints = [v for v, k in scope if k == "Int"]
        if depth <= 0 or (ints and rng.random() < 0.4):
            if ints and rng.random() < 0.6:
                return VarE(rng.choice(ints))
            return IntE(rng.randrange(0, 20))
        op = rng.choice(["+", "-", "+"])
        return BinE(op, int_expr(scope, depth - 1), int_expr(scope, depth - 1))

    def bool_expr(scope: list):
        l = int_expr(scope, 1)
        r = int_expr(scope, 1)
        op = rng.choice(["<", "==", "!="])
        base = BinE(op, l, r)
        if rng.random() < 0.3:
            return BinE(rng.choice(["&&", "||"]), base, BinE("<", int_expr(scope, 1), IntE(10)))
        return base

    def gen_stmts(scope: list, budget: int, callees: list, in_try: bool) -> list:
        stmts: list = []
        while budget > 0:
            budget -= 1
            kind = rng.choice(
                ["decl", "decl", "assign", "yield", "loop", "if", "call", "listloop", "throw"]
            )
            if kind == "decl":
                v = fresh("v")
                stmts.append(DeclS(v, int_expr(scope)))
                scope.append((v, "Int"))
            elif kind == "assign":
                # loop counters stay monotone so every loop terminates
                ints = [v for v, k in scope if k == "Int" and not v.startswith("i")]
                if ints:
                    stmts.append(AssignS(rng.choice(ints), int_expr(scope)))
            elif kind == "yield":
                stmts.append(ExprS(YieldE(int_expr(scope))))
            elif kind == "loop":
                i = fresh("i")
                bound = rng.randrange(1, 4)
                inner_scope = list(scope) + [(i, "Int")]
                body = gen_stmts(inner_scope, min(2, budget), callees, in_try)
                body.append(AssignS(i, BinE("+", VarE(i), IntE(1))))
                stmts.append(DeclS(i, IntE(0)))
                scope.append((i, "Int"))
                stmts.append(WhileS(BinE("<", VarE(i), IntE(bound)), Block(body)))
            elif kind == "if":
                then = gen_stmts(list(scope), min(2, budget), callees, in_try)
                els = gen_stmts(list(scope), min(2, budget), callees, in_try)
                stmts.append(IfS(bool_expr(scope), Block(then), Block(els)))
            elif kind == "call" and callees:
                callee = rng.choice(callees)
                args = [
                    int_expr(scope) if k.name == "Int" else ListE([IntE(rng.randrange(9)) for _ in range(rng.randrange(3))])
                    for _, k in callee.params
                ]
                call = ExprS(CallE(callee.name, args))
                if rng.random() < 0.5:
                    h = fresh("e")
                    handler = [ExprS(YieldE(BinE("+", VarE(h), IntE(100))))]
                    stmts.append(TryS(Block([call]), h, Block(handler)))
                else:
                    stmts.append(call)
            elif kind == "listloop":
                lists = [v for v, k in scope if k == "List"]
                if lists:
                    lv = rng.choice(lists)
                    cur = fresh("c")
                    stmts.append(DeclS(cur, VarE(lv)))
                    scope.append((cur, "List"))
                    body = [
                        ExprS(YieldE(SelE(VarE(cur), "head"))),
                        AssignS(cur, SelE(VarE(cur), "tail")),
                    ]
                    stmts.append(
                        WhileS(BinE("==", SelE(VarE(cur), "isNil"), BoolE(False)), Block(body))
                    )
            elif kind == "throw":
                if in_try or rng.random() < 0.15:
                    payload = int_expr(scope)
                    if rng.random() < 0.7:
                        h = fresh("e")
                        stmts.append(
                            TryS(
                                Block([ThrowS(payload)]),
                                h,
                                Block([ExprS(YieldE(VarE(h)))]),
                            )
                        )
                    else:
                        stmts.append(ThrowS(payload))
        return stmts

    for ci in range(n_coroutines):
        params = []
        n_params = rng.randrange(1, 3)
        for pi in range(n_params):
            if rng.random() < 0.3:
                params.append((f"p{ci}_{pi}", MiniType("List")))
            else:
                params.append((f"p{ci}_{pi}", MiniType("Int")))
        scope = [(n, t.name) for n, t in params]
        callees = list(defs)
        body = gen_stmts(scope, size, callees, in_try=False)
        ints = [v for v, k in scope if k == "Int"]
        result = VarE(rng.choice(ints)) if ints and rng.random() < 0.7 else None
        defs.append(
            CoroutineDef(
                f"c{ci}", params, MiniType("Int" if result else "Unit"), MiniType("Int"), Block(body, result)
            )
        )

    prog = MiniProgram({d.name: d for d in defs})
    entry = defs[-1]
    args = []
    for _, ty in entry.params:
        if ty.name == "List":
            args.append(MiniList(tuple(rng.randrange(9) for _ in range(rng.randrange(4)))))
        else:
            args.append(rng.randrange(0, 20))
    return prog, entry.name, args
