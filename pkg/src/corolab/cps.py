"""Source-to-source transformation of the coroutine calculus into the
reference-based target calculus.

Terms inside coroutine bodies go through a delimited CPS transform: each
translates to a function taking a store function `s` and a continuation `k`
(a xi-shaped term). Terms outside coroutines stay in direct style; coroutine
operations become reference manipulation. Subterms that are already values
are inlined straight into their continuations, which keeps the output free
of administrative redexes for the simple cases and reproduces the known
translations of the non-yielding and once-yielding coroutines verbatim.

The source bottom type maps to the uninhabited target type Never; match arms
whose payload would have to inhabit Never are statically unreachable and are
kept total with canonical default values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
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
    Suspension,
    Term,
    TopT,
    Type,
    Unit,
    UnitT,
    Var,
    Yield,
)
from .target import (
    T_INT,
    T_NEVER,
    T_UNIT,
    T_UNIT_LIT,
    Assign,
    Deref,
    FixBp,
    MatchOut,
    RefNew,
    RetTag,
    TAbs,
    TAdd,
    TApp,
    TFun,
    TLit,
    TOut,
    TRef,
    TVar,
    TargetTerm,
    TargetType,
    TermTag,
    YieldTag,
    default_value,
    gamma_t,
    kappa,
    rho,
    sigma_t,
    t_let,
    t_seq,
)
from .typecheck import EMPTY_CTX, TypingContext, infer


class TransformError(Exception):
    pass


class UnsupportedAtBottom(TransformError):
    """The CPS rules need a non-bottom ambient yield type."""


class FreeYield(TransformError):
    """A yielding term reached the outside-of-coroutines rules."""


# ---------------------------------------------------------------------------
# Type translation


def translate_type(t: Type) -> TargetType:
    if isinstance(t, UnitT):
        return T_UNIT
    if isinstance(t, IntT):
        return T_INT
    if isinstance(t, BotT):
        # bottom only survives in coroutine yield slots; the target renders it
        # as the uninhabited marker type
        return T_NEVER
    if isinstance(t, TopT):
        raise TransformError("Top has no target counterpart")
    if isinstance(t, FunT):
        return TFun(translate_type(t.param), translate_type(t.ret))
    if isinstance(t, CorT):
        return gamma_t(translate_type(t.param), translate_type(t.yld), translate_type(t.ret))
    if isinstance(t, InstT):
        return rho(translate_type(t.yld), translate_type(t.ret))
    raise TransformError(f"cannot translate type {t}")


# ---------------------------------------------------------------------------
# Helper constructors


def _phi(
    ty_in: TargetType,
    tr_in: TargetType,
    ty_out: TargetType,
    tq: TargetType,
    k: TargetTerm,
    var: str,
) -> TargetTerm:
    """Output transformer: maps Out[ty_in,tr_in] to Out[ty_out,tq].

    Ret feeds the continuation, Yield is re-tagged and forwarded, Term stays.
    When the input yield type is Never the Yield arm is unreachable and holds
    a default value instead (the payload cannot be re-tagged).
    """
    if ty_in == ty_out:
        yield_body: TargetTerm = YieldTag(ty_out, tq, TVar("%y"))
    else:
        yield_body = default_value(TOut(ty_out, tq))
    return TAbs(
        var,
        TOut(ty_in, tr_in),
        MatchOut(
            TVar(var),
            "%r",
            TApp(k, TVar("%r")),
            "%y",
            yield_body,
            TermTag(ty_out, tq),
        ),
    )


def build_output_transformer(ty: Type, tr: Type, tq: Type, k: TargetTerm) -> TargetTerm:
    """The paper-shaped output transformer over source types."""
    y, r, q = translate_type(ty), translate_type(tr), translate_type(tq)
    return _phi(y, r, y, q, k, "%o")


def build_store_constructor(ty: Type, tr: Type) -> TargetTerm:
    """Store function constructor: a reference becomes the function k => ref := k."""
    y, r = translate_type(ty), translate_type(tr)
    return TAbs("%c", rho(y, r), TAbs("%k", kappa(T_UNIT, y, r), Assign(TVar("%c"), TVar("%k"))))


def _term_thunk(ty: TargetType, tr: TargetType) -> TargetTerm:
    return TAbs("%u", T_UNIT, TermTag(ty, tr))


# ---------------------------------------------------------------------------
# Transformation proper


@dataclass
class TransformEnv:
    gamma: TypingContext = field(default_factory=lambda: EMPTY_CTX)
    yld: Type = field(default_factory=BotT)
    ret: Type = field(default_factory=BotT)
    counter: list[int] = field(default_factory=lambda: [0])

    def fresh(self, base: str) -> str:
        n = self.counter[0]
        self.counter[0] += 1
        return f"%{base}{n}"

    def sub(self, gamma: TypingContext, yld: Type, ret: Type) -> "TransformEnv":
        return TransformEnv(gamma, yld, ret, self.counter)

    def type_of(self, t: Term) -> Type:
        return infer({}, self.gamma, t, "base").type


@dataclass(frozen=True)
class _Atom:
    term: TargetTerm


@dataclass(frozen=True)
class _Wrapped:
    term: TargetTerm  # a full xi-shaped function (s => k => body)


_Res = _Atom | _Wrapped


def transform(env: TransformEnv, t: Term) -> TargetTerm:
    """CPS-transform a term inside a coroutine into its xi-shaped function."""
    if isinstance(env.yld, BotT):
        raise UnsupportedAtBottom("transform requires a non-bottom ambient yield type")
    return _force_xi(env, _trans(env, t), env.type_of(t))


def _force_xi(env: TransformEnv, res: _Res, src_type: Type) -> TargetTerm:
    if isinstance(res, _Wrapped):
        return res.term
    ty, tr = translate_type(env.yld), translate_type(env.ret)
    sv, kv = env.fresh("s"), env.fresh("k")
    return TAbs(
        sv,
        sigma_t(ty, tr),
        TAbs(kv, kappa(translate_type(src_type), ty, tr), TApp(TVar(kv), res.term)),
    )


def _bind(env: TransformEnv, res: _Res, src_type: Type, s_var: str, cont) -> TargetTerm:
    """Feed the value of a translated subterm to `cont`.

    Atoms are inlined; wrapped terms are applied to the ambient store function
    and a continuation lambda whose parameter carries the value.
    """
    if isinstance(res, _Atom):
        return cont(res.term)
    xv = env.fresh("x")
    return TApp(
        TApp(res.term, TVar(s_var)),
        TAbs(xv, translate_type(src_type), cont(TVar(xv))),
    )


def _xi(env: TransformEnv, body_of) -> TargetTerm:
    """Build s => k => body where body may mention both binders."""
    raise NotImplementedError  # only the explicit variants below are used


def _trans(env: TransformEnv, t: Term) -> _Res:
    ty_t, tr_t = translate_type(env.yld), translate_type(env.ret)

    if isinstance(t, Var):
        return _Atom(TVar(t.name))
    if isinstance(t, Unit):
        return _Atom(T_UNIT_LIT)
    if isinstance(t, Lit):
        return _Atom(TLit(t.value))

    if isinstance(t, Add):
        rl = _trans(env, t.lhs)
        rr = _trans(env, t.rhs)
        if isinstance(rl, _Atom) and isinstance(rr, _Atom):
            return _Atom(TAdd(rl.term, rr.term))
        lty, rty = env.type_of(t.lhs), env.type_of(t.rhs)
        sv, kv = env.fresh("s"), env.fresh("k")
        body = _bind(
            env, rl, lty, sv,
            lambda a1: _bind(
                env, rr, rty, sv,
                lambda a2: TApp(TVar(kv), TAdd(a1, a2)),
            ),
        )
        return _Wrapped(
            TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(T_INT, ty_t, tr_t), body))
        )

    if isinstance(t, Abs):
        body = transform_free(env.gamma.extend(t.var, t.annot), t.body, env.counter)
        return _Atom(TAbs(t.var, translate_type(t.annot), body))

    if isinstance(t, Cor):
        return _Atom(_translate_coroutine(env, t))

    if isinstance(t, Yield):
        arg_ty = env.type_of(t.arg)
        r = _trans(env, t.arg)
        sv, kv = env.fresh("s"), env.fresh("k")
        body = _bind(
            env, r, arg_ty, sv,
            lambda a: t_seq(
                TApp(TVar(sv), TVar(kv)), YieldTag(ty_t, tr_t, a)
            ),
        )
        return _Wrapped(
            TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(T_UNIT, ty_t, tr_t), body))
        )

    if isinstance(t, App):
        fn_ty = env.type_of(t.fn)
        if isinstance(fn_ty, CorT):
            return _trans_appcor(env, t, fn_ty)
        assert isinstance(fn_ty, FunT)
        rf = _trans(env, t.fn)
        ra = _trans(env, t.arg)
        arg_ty = env.type_of(t.arg)
        sv, kv = env.fresh("s"), env.fresh("k")
        body = _bind(
            env, rf, fn_ty, sv,
            lambda f: _bind(env, ra, arg_ty, sv, lambda a: TApp(TVar(kv), TApp(f, a))),
        )
        return _Wrapped(
            TAbs(
                sv,
                sigma_t(ty_t, tr_t),
                TAbs(kv, kappa(translate_type(fn_ty.ret), ty_t, tr_t), body),
            )
        )

    if isinstance(t, Start):
        cty = env.type_of(t.coroutine)
        assert isinstance(cty, CorT)
        y2, r2 = translate_type(cty.yld), translate_type(cty.ret)
        rc = _trans(env, t.coroutine)
        ra = _trans(env, t.arg)
        sv, kv = env.fresh("s"), env.fresh("k")
        cv = env.fresh("c")
        kv2 = env.fresh("k")

        def alloc(c: TargetTerm, a: TargetTerm) -> TargetTerm:
            store_fn = TAbs(kv2, kappa(T_UNIT, y2, r2), Assign(TVar(cv), TVar(kv2)))
            thunk = TAbs("%u", T_UNIT, TApp(TApp(c, store_fn), a))
            return t_let(
                cv,
                rho(y2, r2),
                RefNew(_term_thunk(y2, r2)),
                t_seq(Assign(TVar(cv), thunk), TApp(TVar(kv), TVar(cv))),
            )

        body = _bind(
            env, rc, cty, sv,
            lambda c: _bind(env, ra, cty.param, sv, lambda a: alloc(c, a)),
        )
        return _Wrapped(
            TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(rho(y2, r2), ty_t, tr_t), body))
        )

    if isinstance(t, Snapshot):
        ity = env.type_of(t.target)
        assert isinstance(ity, InstT)
        r = _trans(env, t.target)
        sv, kv = env.fresh("s"), env.fresh("k")
        body = _bind(env, r, ity, sv, lambda c: TApp(TVar(kv), RefNew(Deref(c))))
        return _Wrapped(
            TAbs(
                sv,
                sigma_t(ty_t, tr_t),
                TAbs(kv, kappa(translate_type(ity), ty_t, tr_t), body),
            )
        )

    if isinstance(t, Resume):
        return _trans_resume(env, t)

    if isinstance(t, Fix):
        fty = env.type_of(t.arg)
        assert isinstance(fty, FunT)
        res_ty = translate_type(fty.ret)
        r = _trans(env, t.arg)
        sv, kv = env.fresh("s"), env.fresh("k")
        body = _bind(
            env, r, fty, sv, lambda f: TApp(TVar(kv), FixBp(f, res_ty))
        )
        return _Wrapped(
            TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(res_ty, ty_t, tr_t), body))
        )

    if isinstance(t, Suspension):
        raise TransformError("runtime terms cannot be transformed")
    raise TransformError(f"cannot transform {type(t).__name__}")


def _translate_coroutine(env: TransformEnv, t: Cor) -> TargetTerm:
    """A coroutine literal becomes its store-function-and-argument lambda."""
    ret_ty = infer({}, env.gamma.extend(t.var, t.annot), t.body, "base").type
    inner_env = env.sub(env.gamma.extend(t.var, t.annot), t.yld, ret_ty)
    y2, r2 = translate_type(t.yld), translate_type(ret_ty)
    body_res = _trans(inner_env, t.body)
    sv = env.fresh("s")

    def finish(a: TargetTerm) -> TargetTerm:
        return t_seq(TApp(TVar(sv), _term_thunk(y2, r2)), RetTag(y2, r2, a))

    if isinstance(body_res, _Atom):
        inner = finish(body_res.term)
    else:
        xv = env.fresh("x")
        inner = TApp(
            TApp(body_res.term, TVar(sv)),
            TAbs(xv, r2, finish(TVar(xv))),
        )
    return TAbs(sv, sigma_t(y2, r2), TAbs(t.var, translate_type(t.annot), inner))


def _trans_appcor(env: TransformEnv, t: App, cty: CorT) -> _Res:
    """Direct coroutine call inside a coroutine: adapt callee output with an
    output transformer and chain the store functions."""
    ty_t, tr_t = translate_type(env.yld), translate_type(env.ret)
    yc, rc = translate_type(cty.yld), translate_type(cty.ret)
    rf = _trans(env, t.fn)
    ra = _trans(env, t.arg)
    sv, kv = env.fresh("s"), env.fresh("k")
    fv, sv2, kv2 = env.fresh("f"), env.fresh("s"), env.fresh("k")

    def call(f: TargetTerm, a: TargetTerm) -> TargetTerm:
        f_def = _phi(yc, rc, ty_t, tr_t, TVar(kv), env.fresh("o"))
        s2_def = TAbs(
            kv2,
            kappa(T_UNIT, yc, rc),
            TApp(
                TVar(sv),
                TAbs("%u", T_UNIT, TApp(TVar(fv), TApp(TVar(kv2), T_UNIT_LIT))),
            ),
        )
        return t_let(
            fv,
            TFun(TOut(yc, rc), TOut(ty_t, tr_t)),
            f_def,
            t_let(
                sv2,
                sigma_t(yc, rc),
                s2_def,
                TApp(TVar(fv), TApp(TApp(f, TVar(sv2)), a)),
            ),
        )

    body = _bind(
        env, rf, cty, sv, lambda f: _bind(env, ra, cty.param, sv, lambda a: call(f, a))
    )
    return _Wrapped(
        TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(rc, ty_t, tr_t), body))
    )


def _trans_resume(env: TransformEnv, t: Resume) -> _Res:
    ty_t, tr_t = translate_type(env.yld), translate_type(env.ret)
    ity = env.type_of(t.target)
    assert isinstance(ity, InstT)
    h2ty = env.type_of(t.ret_handler)
    assert isinstance(h2ty, CorT)
    tw, trr = translate_type(h2ty.yld), translate_type(h2ty.ret)
    yi, ri = translate_type(ity.yld), translate_type(ity.ret)

    subterms = [t.target, t.ret_handler, t.yield_handler, t.dead_handler]
    types = [env.type_of(s) for s in subterms]
    results = [_trans(env, s) for s in subterms]

    sv, kv = env.fresh("s"), env.fresh("k")
    fv, sv2, kv2 = env.fresh("f"), env.fresh("s"), env.fresh("k")

    def finish(vals: list[TargetTerm]) -> TargetTerm:
        x1, x2, x3, x4 = vals
        f_def = _phi(tw, trr, ty_t, tr_t, TVar(kv), env.fresh("o"))
        s2_def = TAbs(
            kv2,
            kappa(T_UNIT, tw, trr),
            TApp(
                TVar(sv),
                TAbs("%u", T_UNIT, TApp(TVar(fv), TApp(TVar(kv2), T_UNIT_LIT))),
            ),
        )
        dispatch = MatchOut(
            TApp(Deref(x1), T_UNIT_LIT),
            "%r",
            TApp(TVar(fv), TApp(TApp(x2, TVar(sv2)), TVar("%r"))),
            "%y",
            TApp(TVar(fv), TApp(TApp(x3, TVar(sv2)), TVar("%y"))),
            TApp(TVar(fv), TApp(TApp(x4, TVar(sv2)), T_UNIT_LIT)),
        )
        return t_let(
            fv,
            TFun(TOut(tw, trr), TOut(ty_t, tr_t)),
            f_def,
            t_let(sv2, sigma_t(tw, trr), s2_def, dispatch),
        )

    def chain(i: int, acc: list[TargetTerm]) -> TargetTerm:
        if i == 4:
            return finish(acc)
        return _bind(
            env, results[i], types[i], sv, lambda v: chain(i + 1, acc + [v])
        )

    body = chain(0, [])
    return _Wrapped(
        TAbs(sv, sigma_t(ty_t, tr_t), TAbs(kv, kappa(trr, ty_t, tr_t), body))
    )


# ---------------------------------------------------------------------------
# Outside of coroutines


def transform_free(
    gamma: TypingContext, t: Term, counter: list[int] | None = None
) -> TargetTerm:
    """Translate a non-yielding term; coroutine-free code is left unchanged."""
    env = TransformEnv(gamma, BotT(), BotT(), counter if counter is not None else [0])
    j = infer({}, gamma, t, "base")
    if not isinstance(j.yld, BotT):
        raise FreeYield(f"term yields {j.yld} outside any coroutine")
    return _free(env, t)


def _free(env: TransformEnv, t: Term) -> TargetTerm:
    if isinstance(t, Var):
        return TVar(t.name)
    if isinstance(t, Unit):
        return T_UNIT_LIT
    if isinstance(t, Lit):
        return TLit(t.value)
    if isinstance(t, Add):
        return TAdd(_free(env, t.lhs), _free(env, t.rhs))
    if isinstance(t, Abs):
        sub = env.sub(env.gamma.extend(t.var, t.annot), env.yld, env.ret)
        return TAbs(t.var, translate_type(t.annot), _free(sub, t.body))
    if isinstance(t, Cor):
        return _translate_coroutine(env, t)
    if isinstance(t, Yield):
        raise FreeYield("yield cannot occur outside a coroutine")

    if isinstance(t, App):
        fn_ty = env.type_of(t.fn)
        if isinstance(fn_ty, FunT):
            return TApp(_free(env, t.fn), _free(env, t.arg))
        assert isinstance(fn_ty, CorT)
        # direct call of a never-yielding coroutine at top level
        yc, rc = translate_type(fn_ty.yld), translate_type(fn_ty.ret)
        x1, x2 = env.fresh("x"), env.fresh("x")
        ds = TAbs("%k", kappa(T_UNIT, yc, rc), T_UNIT_LIT)
        call = TApp(TApp(TVar(x1), ds), TVar(x2))
        return t_let(
            x1,
            translate_type(fn_ty),
            _free(env, t.fn),
            t_let(x2, translate_type(fn_ty.param), _free(env, t.arg), _extract(call, rc)),
        )

    if isinstance(t, Start):
        cty = env.type_of(t.coroutine)
        assert isinstance(cty, CorT)
        y2, r2 = translate_type(cty.yld), translate_type(cty.ret)
        x1, x2, cv, kv = env.fresh("x"), env.fresh("x"), env.fresh("c"), env.fresh("k")
        store_fn = TAbs(kv, kappa(T_UNIT, y2, r2), Assign(TVar(cv), TVar(kv)))
        thunk = TAbs("%u", T_UNIT, TApp(TApp(TVar(x1), store_fn), TVar(x2)))
        return t_let(
            x1,
            translate_type(cty),
            _free(env, t.coroutine),
            t_let(
                x2,
                translate_type(cty.param),
                _free(env, t.arg),
                t_let(
                    cv,
                    rho(y2, r2),
                    RefNew(_term_thunk(y2, r2)),
                    t_seq(Assign(TVar(cv), thunk), TVar(cv)),
                ),
            ),
        )

    if isinstance(t, Snapshot):
        ity = env.type_of(t.target)
        assert isinstance(ity, InstT)
        xv = env.fresh("x")
        return t_let(
            xv, translate_type(ity), _free(env, t.target), RefNew(Deref(TVar(xv)))
        )

    if isinstance(t, Resume):
        ity = env.type_of(t.target)
        assert isinstance(ity, InstT)
        h2ty = env.type_of(t.ret_handler)
        assert isinstance(h2ty, CorT)
        trr = translate_type(h2ty.ret)
        yi, ri = translate_type(ity.yld), translate_type(ity.ret)
        x1, x2 = env.fresh("x"), env.fresh("x")
        x3, x4 = env.fresh("x"), env.fresh("x")
        ds = TAbs("%k", kappa(T_UNIT, T_NEVER, trr), T_UNIT_LIT)

        def h_call(h: str, payload: TargetTerm) -> TargetTerm:
            return _extract(TApp(TApp(TVar(h), ds), payload), trr)

        dispatch = MatchOut(
            TApp(Deref(TVar(x1)), T_UNIT_LIT),
            "%r",
            h_call(x2, TVar("%r")),
            "%y",
            h_call(x3, TVar("%y")),
            h_call(x4, T_UNIT_LIT),
        )
        out = dispatch
        for var, sub in [
            (x4, t.dead_handler),
            (x3, t.yield_handler),
            (x2, t.ret_handler),
            (x1, t.target),
        ]:
            out = t_let(var, translate_type(env.type_of(sub)), _free(env, sub), out)
        return out

    if isinstance(t, Fix):
        fty = env.type_of(t.arg)
        assert isinstance(fty, FunT)
        return FixBp(_free(env, t.arg), translate_type(fty.ret))

    raise TransformError(f"cannot transform {type(t).__name__} outside a coroutine")


def _extract(call: TargetTerm, result_ty: TargetType) -> TargetTerm:
    """Pull the returned value out of a never-yielding call's Out value."""
    return MatchOut(
        call,
        "%r",
        TVar("%r"),
        "%y",
        default_value(result_ty),
        default_value(result_ty),
    )
