import json
from fractions import Fraction

import pytest

from hypoflow.formfile import FormParseError, parse_compact, parse_expression, parse_form_file
from hypoflow.liealg import iso_class
from hypoflow.su2 import check_triple

STD_TEXT = """\
# standard structure
omega1 = e12 + e34
psi2   = e135 + e425
psi3   = e145 + e235
"""


@pytest.mark.parametrize("text, terms", [
    ("e12", {(1, 2): 1}),
    ("-1/2 e125", {(1, 2, 5): Fraction(-1, 2)}),
    ("3*e34 - e^{1 2}", {(3, 4): 3, (1, 2): -1}),
    ("2e12", {(1, 2): 2}),
    ("e^13 + e13", {(1, 3): 2}),
    ("0", {}),
])
def test_expressions(text, terms):
    got, exact = parse_expression(text)
    assert exact and got == terms


def test_decimal_switches_to_float():
    got, exact = parse_expression("0.25e^{15}")
    assert not exact and got == {(1, 5): 0.25}


@pytest.mark.parametrize("text, col, fragment", [
    ("e12 +", 6, "expected a monomial"),
    ("e16", 1, "index out of range"),
    ("e11", 1, "repeated index"),
    ("e12 e34", 5, "expected '+' or '-'"),
    ("e12 + e123", 7, "different degree"),
    ("e12 $ e34", 5, "unexpected character"),
    ("", 1, "empty expression"),
    ("2 *", 4, "after '*'"),
])
def test_expression_errors_have_columns(text, col, fragment):
    with pytest.raises(FormParseError) as exc:
        parse_expression(text, line=3, source="f.txt")
    err = exc.value
    assert (err.line, err.column) == (3, col)
    assert fragment in str(err) and str(err).startswith(f"f.txt:3:{col}:")


@pytest.mark.parametrize("text, rows", [
    ("(0,0,0,0,12+34)", ["", "", "", "", "e12 + e34"]),
    ("(0,0,0,12,13+24)", ["", "", "", "e12", "e13 + e24"]),
    ("(0,0,0,0,2*12)", ["", "", "", "", "2 * e12"]),
])
def test_compact(text, rows):
    got = parse_compact(text)
    norm = lambda s: s.replace(" ", "")
    assert [norm(g) if g != "0" else "" for g in got] == [norm(r) for r in rows]


def test_compact_errors():
    with pytest.raises(FormParseError):
        parse_compact("0,0,0,0,12")
    with pytest.raises(FormParseError):
        parse_compact("(0,0,12)")


def test_standard_file():
    ff = parse_form_file(STD_TEXT, "std.txt")
    assert ff.exact
    assert check_triple(ff.triple()).accepted


def test_aliases_and_comments():
    text = "ω1 = e12 + e34  # comment\nψ2 = e135 + e425\nw1x = e12\n"
    with pytest.raises(FormParseError) as exc:
        parse_form_file(text, "a.txt")
    assert exc.value.line == 3 and "unknown name" in str(exc.value)


def test_differential_in_file():
    ff = parse_form_file("d = (0,0,0,12,13+24)\n")
    assert ff.has_differential
    assert iso_class(ff.differential()) == "(0,0,0,12,13+24)"
    ff = parse_form_file("de5 = e12 + e34\n")
    assert iso_class(ff.differential()) == "(0,0,0,0,12+34)"


def test_json_form_file():
    data = {"omega1": "e12 + e34", "psi2": "e135 + e425", "psi3": "e145 + e235",
            "d": [0, 0, 0, 0, "12+34"], "_comment": "ignored"}
    ff = parse_form_file(json.dumps(data))
    assert check_triple(ff.triple()).accepted
    assert iso_class(ff.differential()) == "(0,0,0,0,12+34)"


def test_json_errors():
    with pytest.raises(FormParseError) as exc:
        parse_form_file('{"omega1": ', "j.json")
    assert exc.value.source == "j.json"
    with pytest.raises(FormParseError):
        parse_form_file("[1, 2]")


@pytest.mark.parametrize("text, fragment", [
    ("omega1 = e12 + e34\n", "missing psi2, psi3"),
    ("omega1 = e123\npsi2 = e135\npsi3 = e145\n", "degree 2"),
    ("omega1 = 0\npsi2 = e135\npsi3 = e145\n", "omega1 is zero"),
])
def test_triple_errors(text, fragment):
    with pytest.raises(FormParseError) as exc:
        parse_form_file(text).triple()
    assert fragment in str(exc.value)


def test_file_level_errors():
    with pytest.raises(FormParseError, match="no assignments"):
        parse_form_file("# nothing\n\n")
    with pytest.raises(FormParseError, match="assigned twice"):
        parse_form_file("psi2 = e135\npsi2 = e145\n")
    with pytest.raises(FormParseError, match="name = expression"):
        parse_form_file("e12 + e34\n")
    with pytest.raises(FormParseError, match="2-form"):
        parse_form_file("de1 = e123\n").differential()


def test_error_position_on_bad_line():
    with pytest.raises(FormParseError) as exc:
        parse_form_file("omega1 = e12 + e34\npsi2 = e135 +\n", "bad.txt")
    assert str(exc.value).startswith("bad.txt:2:")
