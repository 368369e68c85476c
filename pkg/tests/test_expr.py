# tests/test_expr.py
import numpy as np
import pytest

from custom.expr import (
    BinOp, Call, Name, Neg, Num, evaluate, free_names, parse, parse_prep, to_source, tokenize,
)
from errors import ExprEvalError, ExprSyntaxError


def test_leading_sign_applies_to_whole_product():
    tree = parse("-mu*time**alpha")
    assert tree == Neg(BinOp("*", Name("mu"), BinOp("**", Name("time"), Name("alpha"))))


@pytest.mark.parametrize("text,expected", [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ** 3 ** 2", 512.0),
    ("-2 ** 2", -4.0),
    ("2 * -3", -6.0),
    ("10 / 4 - 1", 1.5),
    ("pow(2, 10)", 1024.0),
    ("exp(log(3.5))", 3.5),
    ("abs(-2) + sqrt(16)", 6.0),
    ("1.5e2", 150.0),
])
def test_arithmetic(text, expected):
    assert evaluate(parse(text), {}) == pytest.approx(expected)


def test_vectorized_bindings():
    t = np.array([1.0, 2.0, 4.0])
    value = evaluate(parse("alpha * time ** (alpha - 1)"), {"time": t, "alpha": 2.0})
    assert np.allclose(value, 2.0 * t)


def test_to_source_round_trip():
    tree = parse("-a*b + exp(c / 2) ** -d")
    assert parse(to_source(tree)) == tree


def test_free_names():
    assert free_names(parse("exp(-beta) * time + pow(k, 2)")) == {"beta", "time", "k"}


@pytest.mark.parametrize("text,position", [
    ("1 +", 3),
    ("a $ b", 2),
    ("foo(1)", 0),
    ("exp(1, 2)", 0),
    ("(1 + 2", 6),
    ("1 2", 2),
])
def test_syntax_errors_report_position(text, position):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.position == position


def test_empty_expression():
    with pytest.raises(ExprSyntaxError):
        parse("   ")


@pytest.mark.parametrize("text,bindings", [
    ("1 / x", {"x": 0.0}),
    ("log(x)", {"x": np.array([1.0, -1.0])}),
    ("sqrt(x)", {"x": -4.0}),
    ("x ** 0.5", {"x": -4.0}),
    ("y + 1", {}),
])
def test_domain_errors(text, bindings):
    with pytest.raises(ExprEvalError):
        evaluate(parse(text), bindings)


def test_existing_nan_is_propagated_not_reported():
    value = evaluate(parse("x + 1"), {"x": np.array([np.nan, 1.0])})
    assert np.isnan(value[0]) and value[1] == 2.0


def test_prep_program_runs_in_order():
    prep = parse_prep("mu = exp(-beta); k = 2; scale = mu * k;")
    assert prep.names == ["mu", "k", "scale"]
    env = prep.run({"beta": 0.0})
    assert env["scale"] == pytest.approx(2.0)
    assert parse_prep("").assignments == ()


def test_prep_program_syntax():
    with pytest.raises(ExprSyntaxError):
        parse_prep("mu exp(beta)")
    with pytest.raises(ExprSyntaxError):
        parse_prep("exp = 1")


def test_tokenize():
    kinds = [tok.kind for tok in tokenize("a**2;")]
    assert kinds == ["name", "op", "num", "op", "end"]
    assert isinstance(parse("f"), Name)
    assert isinstance(parse("3"), Num)
    assert isinstance(parse("exp(1)"), Call)
