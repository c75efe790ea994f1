import pytest

from corolab.ast import (
    BOT,
    INT_T,
    UNIT_T,
    Add,
    Cor,
    CorT,
    EMPTY,
    InstT,
    Label,
    Lit,
    Resumption,
    Suspension,
    UNIT,
    Var,
    Yield,
    alpha_eq,
)
from corolab.gen import gen_well_typed
from corolab.syntax import SyntaxError_, parse_term, parse_type, print_term


def test_parse_dup():
    t = parse_term("cor (x: Int) yields Bot => x + x")
    assert t == Cor("x", INT_T, BOT, Add(Var("x"), Var("x")))


def test_parse_unit():
    assert parse_term("()") == UNIT


def test_print_once():
    t = Cor("x", INT_T, INT_T, Yield(Var("x")))
    assert print_term(t) == "cor (x: Int) yields Int => yield(x)"


def test_types():
    assert str(parse_type("Int ~Int~> Unit")) == "Int ~Int~> Unit"
    assert parse_type("Int <~> Unit") == InstT(INT_T, UNIT_T)
    # arrows associate to the right
    assert parse_type("Int -> Int -> Int") == parse_type("Int -> (Int -> Int)")
    assert parse_type("Int ~Bot~> Int ~Int~> Unit") == CorT(
        INT_T, BOT, parse_type("Int ~Int~> Unit")
    )


def test_runtime_forms_print_but_do_not_parse():
    assert print_term(Suspension(UNIT, Lit(7))) == "[[ () ]]^7"
    assert print_term(Label(3)) == "#inst<3>"
    assert print_term(EMPTY) == "%empty"
    assert print_term(Resumption(UNIT, UNIT, UNIT, UNIT, 2)) == "<| (), (), (), () |>#2"
    for frag in ["#inst<0>", "[[ () ]]^7", "%empty"]:
        with pytest.raises(SyntaxError_):
            parse_term(frag)


def test_error_positions():
    with pytest.raises(SyntaxError_) as e:
        parse_term("fun (x: Int) =>\n  yield(")
    assert e.value.line == 2


def test_sequencing_and_let_desugar():
    t = parse_term("let x: Int = 3 in x + x")
    assert print_term(t) == "(fun (x: Int) => x + x)(3)"
    s = parse_term("(); 4")
    assert print_term(s) == "(fun (u: Unit) => 4)(())"


def test_roundtrip_corpus_and_generated():
    for seed in range(120):
        t = gen_well_typed(seed, size=7)
        assert alpha_eq(parse_term(print_term(t)), t), seed


def test_unbound_resume_reference_is_flagged_by_typechecker():
    # parses fine, but the variable is unbound at typechecking time
    from corolab.typecheck import TypeError_, check_user_program

    t = parse_term("resume(i, fun (x: Int) => x, fun (x: Int) => x, fun (x: Unit) => x)")
    with pytest.raises(TypeError_):
        check_user_program(t)
