import numpy as np
import pytest

from s2xs2.errors import DegreeTooHigh, ExpressionSyntaxError, UnknownVariable
from s2xs2.expressions import Add, Mul, Neg, Num, Sub, Var, parse_hamiltonian
from s2xs2.hamiltonian import VARIABLES


def poly_eval(text, X):
    return parse_hamiltonian(text).polynomial().value(X)


def python_eval(text, row):
    env = dict(zip(VARIABLES, row))
    return eval(text, {"__builtins__": {}}, env)


class TestParsing:
    def test_zero(self):
        expr = parse_hamiltonian("0")
        assert expr.terms == ()
        assert expr.polynomial().terms == {}

    def test_single_variable(self):
        expr = parse_hamiltonian("z1")
        assert expr.ast == Var("z1")
        grad = expr.polynomial().gradient(np.zeros((1, 6)))[0]
        assert np.array_equal(grad, [0, 0, 1, 0, 0, 0])

    def test_two_term_expression(self):
        expr = parse_hamiltonian("0.3*z1*z2 + 0.2*x1")
        assert expr.ast == Add(Mul(Mul(Num(0.3), Var("z1")), Var("z2")), Mul(Num(0.2), Var("x1")))
        H = expr.polynomial()
        rng = np.random.default_rng(0)
        X = rng.normal(size=(100, 6))
        G = H.gradient(X)
        eps = 1e-6
        for j in range(6):
            step = np.zeros(6)
            step[j] = eps
            fd = (H.value(X + step) - H.value(X - step)) / (2 * eps)
            assert np.abs(fd - G[:, j]).max() < 1e-8

    def test_precedence_and_unary_minus(self):
        expr = parse_hamiltonian("-x1*y1")
        assert expr.ast == Mul(Neg(Var("x1")), Var("y1"))
        expr2 = parse_hamiltonian("x1 - y1 - z1")
        assert expr2.ast == Sub(Sub(Var("x1"), Var("y1")), Var("z1"))

    def test_parenthesized_grouping(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 6))
        for text in ("(x1 + y1)*z2", "x1*(y1 - z1) + 0.5", "-(x1 + y2)", "2*-x1", "x2*-(-y2)"):
            vals = poly_eval(text, X)
            expected = [python_eval(text.replace("*-", "* -"), row) for row in X]
            assert np.abs(vals - np.array(expected)).max() < 1e-12

    def test_number_formats(self):
        for text, value in (("1.5", 1.5), (".5", 0.5), ("2e-3", 2e-3), ("1.25E+2", 125.0)):
            expr = parse_hamiltonian(text)
            assert expr.ast == Num(value)


class TestPrinting:
    CASES = (
        "0.3*z1*z2 + 0.2*x1",
        "-(x1 + y1)*z2",
        "x1 - (y1 - z1)",
        "-x1*-y1",
        "((x1))",
        "1.5*x2*y2*z2 - 0.25",
    )

    @pytest.mark.parametrize("text", CASES)
    def test_parse_print_parse_fixpoint(self, text):
        once = parse_hamiltonian(text)
        printed = once.to_text()
        twice = parse_hamiltonian(printed)
        assert twice.ast == once.ast
        assert twice.to_text() == printed


class TestErrors:
    def test_syntax_error_position_and_expected(self):
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_hamiltonian("x1 + * y1")
        assert err.value.position == 5
        assert "number" in err.value.expected

    def test_unbalanced_paren(self):
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_hamiltonian("(x1 + y1")
        assert err.value.position == 8

    def test_trailing_garbage(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_hamiltonian("x1 y1")

    def test_unknown_variable(self):
        with pytest.raises(UnknownVariable) as err:
            parse_hamiltonian("x1 + q3")
        assert err.value.name == "q3"
        assert err.value.position == 5

    def test_byte_offsets_with_multibyte_prefix(self):
        # a two-byte UTF-8 character before the bad token shifts byte offsets
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_hamiltonian("é + x1")
        assert err.value.position == 0

    def test_degree_cap(self):
        with pytest.raises(DegreeTooHigh):
            parse_hamiltonian("x1*x1*x1*x1")
        with pytest.raises(DegreeTooHigh):
            parse_hamiltonian("(x1*x1)*(y1*y1)")

    def test_source_size_cap(self):
        text = "x1 + " * 1000 + "x1"
        with pytest.raises(ExpressionSyntaxError):
            parse_hamiltonian(text)

    def test_division_not_in_grammar(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_hamiltonian("x1 / y1")


class TestExpansion:
    def test_cancellation(self):
        expr = parse_hamiltonian("x1*y1 - x1*y1 + z2")
        assert expr.polynomial().terms == {(0, 0, 0, 0, 0, 1): 1.0}

    def test_degree_three_allowed(self):
        expr = parse_hamiltonian("x1*y1*z1")
        assert expr.polynomial().terms == {(1, 1, 1, 0, 0, 0): 1.0}
