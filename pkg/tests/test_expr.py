import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radmass.expr import (
    BinOp,
    Call,
    ExprDomainError,
    ExprSyntaxError,
    Name,
    Neg,
    Num,
    UnknownIdentifier,
    evaluate,
    evaluate_matrix,
    names,
    parse_expression,
    parse_matrix,
    to_text,
)


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + 2*3", 7.0),
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("(1 + 2)*3", 9.0),
        ("8/4/2", 1.0),
        ("2*pi", 2 * math.pi),
        ("sqrt(16) + exp(0)", 5.0),
        ("1e-3*1000", 1.0),
        ("-(-3)", 3.0),
    ],
)
def test_evaluation(text, value):
    assert evaluate(parse_expression(text)) == pytest.approx(value)


def test_vectorised_over_arrays():
    r = np.linspace(0, 1, 5)
    out = evaluate(parse_expression("exp(r)*(1 + a*x1)"), {"r": r, "x1": 2.0, "a": 0.5})
    np.testing.assert_allclose(out, 2 * np.exp(r))


@pytest.mark.parametrize("text, offset", [("sin(", 4), ("1 +", 3), ("(1", 2), ("2 $ 3", 2), ("", 0)])
def test_syntax_errors_report_offset(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expression(text)
    assert info.value.position == offset
    assert f"offset {offset}" in str(info.value)


def test_unknown_names_and_domain():
    with pytest.raises(UnknownIdentifier):
        evaluate(parse_expression("foo + 1"))
    with pytest.raises(ExprDomainError):
        evaluate(parse_expression("log(r)"), {"r": np.array([1.0, 0.0])})
    with pytest.raises(ExprDomainError):
        evaluate(parse_expression("1/r"), {"r": 0.0})
    with pytest.raises(ExprDomainError):
        evaluate(parse_expression("sqrt(-1)"))


def test_names_collects_every_identifier():
    assert names(parse_expression("a*sin(r) + x1^b - pi")) == {"a", "r", "x1", "b", "pi"}


def test_matrix_parsing():
    m = parse_matrix("1, r; r, 2")
    assert len(m) == 2
    out = evaluate_matrix("1, r; r, 2", {"r": np.array([0.0, 3.0])})
    assert out.shape == (2, 2, 2)
    assert out[1, 0, 1] == 3.0
    with pytest.raises(ValueError):
        parse_matrix("1, 2; 3")


leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.sampled_from(["r", "x1", "x2", "a"]).map(Name),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["sin", "exp", "cosh"]), children).map(lambda t: Call(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    assert parse_expression(to_text(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(trees)
def test_printing_is_idempotent(tree):
    text = to_text(tree)
    assert to_text(parse_expression(text)) == text
