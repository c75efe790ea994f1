import random

from corolab.ast import (
    BOT,
    EMPTY,
    INT_T,
    UNIT,
    UNIT_T,
    Abs,
    App,
    Cor,
    Lit,
    Suspension,
    Var,
    Yield,
    alpha_eq,
    free_vars,
    is_value,
    rename_bound,
    substitute,
)
from corolab.gen import gen_well_typed
from corolab.syntax import parse_term


def test_values():
    assert is_value(Abs("x", UNIT_T, Var("x")))
    assert is_value(UNIT)
    assert is_value(Lit(3))
    assert is_value(Cor("x", INT_T, INT_T, Yield(Var("x"))))
    assert is_value(EMPTY)
    # yields and suspensions are not in the value subset
    assert not is_value(Yield(UNIT))
    assert not is_value(Suspension(UNIT, Lit(7)))
    assert not is_value(App(Abs("x", UNIT_T, Var("x")), UNIT))


def test_substitute_basics():
    assert substitute(Var("x"), "x", UNIT) == UNIT
    # shadowing binder blocks substitution
    inner = Abs("x", UNIT_T, Var("x"))
    assert substitute(inner, "x", UNIT) == inner


def test_substitute_rep_body():
    # instantiating the two-yield coroutine body with 7 reaches the
    # worked-example form: a unit-coroutine applied to yield(7)
    rep = parse_term(
        "cor (x: Int) yields Int => (cor (u: Unit) yields Int => yield(x))(yield(x))"
    )
    body = rep.body
    inst = substitute(body, "x", Lit(7))
    expected = parse_term("(cor (u: Unit) yields Int => yield(7))(yield(7))")
    assert alpha_eq(inst, expected)


def test_free_vars():
    assert free_vars(Var("x")) == {"x"}
    assert free_vars(Abs("x", UNIT_T, Var("x"))) == frozenset()
    assert free_vars(App(Var("f"), Yield(Var("y")))) == {"f", "y"}


def test_substitute_identity_when_not_free():
    rng = random.Random(5)
    for seed in range(40):
        t = gen_well_typed(seed, size=5)
        name = f"zz{rng.randrange(100)}"
        assert name not in free_vars(t)
        assert substitute(t, name, Lit(1)) == t


def test_alpha_rename_preserves_free_vars():
    for seed in range(40):
        t = gen_well_typed(seed, size=5)
        renamed = rename_bound(t, "_r")
        assert free_vars(renamed) == free_vars(t)
        assert alpha_eq(renamed, t)
