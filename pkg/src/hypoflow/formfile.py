"""Reader for human-written form files.

A form file holds one assignment per line::

    # standard SU(2)-structure
    omega1 = e12 + e34
    psi2   = e135 + e425
    psi3   = e145 + e235

Coefficients precede monomials (``-1/2 e125``, ``3*e34``, ``0.25e^{15}``); there
is no exponent notation, so ``2e12`` reads as 2·e¹².
Integer and p/q literals stay exact; a decimal literal switches the whole file
to floating point. A differential is given as ``de1 = ...`` through ``de5 = ...``
(missing lines mean 0) or in one line as ``d = (0,0,0,0,12+34)``. A file whose
first non-blank character is ``{`` is read as JSON mapping the same names to
expression strings.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .exterior import Form
from .liealg import LieDifferential
from .su2 import SU2Triple

__all__ = ["FormParseError", "FormFile", "parse_expression", "parse_form_file", "read_form_file",
           "parse_compact"]

_ALIASES = {"omega1": "omega1", "ω1": "omega1", "ω₁": "omega1", "w1": "omega1",
            "psi2": "psi2", "ψ2": "psi2", "ψ₂": "psi2",
            "psi3": "psi3", "ψ3": "psi3", "ψ₃": "psi3",
            "d": "d", **{f"de{i}": f"de{i}" for i in range(1, 6)}}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<mono>e\^?\{[1-9\s]+\}|e\^?[1-9]+)
  | (?P<num>\d+\.\d*|\.\d+|\d+(?:/\d+)?)
  | (?P<op>[-+*])
  | (?P<bad>.)
""", re.VERBOSE)


class FormParseError(ValueError):
    def __init__(self, message: str, line: int, column: int, source: str = "<input>"):
        self.line, self.column, self.source = line, column, source
        super().__init__(f"{source}:{line}:{column}: {message}")


def _number(text: str):
    if "." in text:
        return float(text), False
    return Fraction(text), True


def parse_expression(text: str, line: int = 1, col0: int = 1, source: str = "<input>",
                     dim: int = 5):
    """Parse a signed monomial sum. Returns ({index tuple: coeff}, all_exact)."""
    toks = []
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "bad":
            raise FormParseError(f"unexpected character {m.group()!r}", line, col0 + m.start(), source)
        toks.append((kind, m.group(), col0 + m.start()))
    if not toks:
        raise FormParseError("empty expression", line, col0, source)

    terms: dict[tuple[int, ...], object] = {}
    exact = True
    i, n = 0, len(toks)
    end_col = col0 + len(text)

    def peek():
        return toks[i] if i < n else ("end", "", end_col)

    first = True
    while i < n:
        sign = 1
        kind, val, col = peek()
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
        elif not first:
            raise FormParseError(f"expected '+' or '-', got {val!r}", line, col, source)
        first = False
        coeff, coeff_exact = Fraction(1), True
        kind, val, col = peek()
        if kind == "num":
            coeff, coeff_exact = _number(val)
            i += 1
            if peek()[0] == "op" and peek()[1] == "*":
                i += 1
                if peek()[0] != "mono":
                    raise FormParseError("expected a monomial after '*'", line, peek()[2], source)
        kind, val, col = peek()
        if kind == "mono":
            digits = re.sub(r"[^1-9]", "", val[1:])
            idx = tuple(int(c) for c in digits)
            if any(c > dim for c in idx):
                raise FormParseError(f"index out of range 1..{dim} in {val!r}", line, col, source)
            if len(set(idx)) != len(idx):
                raise FormParseError(f"repeated index in {val!r}", line, col, source)
            i += 1
        elif coeff == 0 and not (kind == "op" and val == "*"):
            idx = None  # literal zero
        else:
            raise FormParseError(f"expected a monomial such as e12, got {val or 'end of line'!r}",
                                 line, col, source)
        exact = exact and coeff_exact
        if idx is None:
            continue
        if terms and len(next(iter(terms))) != len(idx):
            raise FormParseError("terms of different degree", line, col, source)
        terms[idx] = terms.get(idx, 0) + sign * coeff
    return terms, exact


def parse_compact(text: str, line: int = 1, col0: int = 1, source: str = "<input>") -> list[str]:
    """``(0,0,0,12,13+24)`` → five expression strings in e-notation."""
    s = text.strip()
    lead = len(text) - len(text.lstrip())
    if not (s.startswith("(") and s.endswith(")")):
        raise FormParseError("compact notation must be parenthesised", line, col0 + lead, source)
    parts = s[1:-1].split(",")
    if len(parts) != 5:
        raise FormParseError(f"compact notation needs 5 entries, got {len(parts)}", line, col0 + lead, source)
    # an index pair is a bare two-digit group; a coefficient is followed by '*'
    out = []
    for p in parts:
        toks = re.findall(r"\d+(?:/\d+|\.\d*)?|\S", p)
        words = []
        for j, t in enumerate(toks):
            nxt = toks[j + 1] if j + 1 < len(toks) else ""
            if re.fullmatch(r"[1-5]{2}", t) and nxt != "*":
                words.append("e" + t)
            else:
                words.append(t)
        out.append(" ".join(words) if words else "")
    return out


@dataclass(frozen=True)
class FormFile:
    forms: dict
    exact: bool
    source: str = "<input>"

    def _form(self, name: str) -> Form:
        terms = self.forms[name]
        return Form.from_terms(5, terms, exact=self.exact) if terms else None

    def triple(self) -> SU2Triple:
        missing = [k for k in ("omega1", "psi2", "psi3") if k not in self.forms]
        if missing:
            raise FormParseError(f"missing {', '.join(missing)}", 0, 0, self.source)
        forms = [self._form(k) for k in ("omega1", "psi2", "psi3")]
        for name, f, g in zip(("omega1", "psi2", "psi3"), forms, (2, 3, 3)):
            if f is None:
                raise FormParseError(f"{name} is zero", 0, 0, self.source)
            if f.grade != g:
                raise FormParseError(f"{name} must have degree {g}, got {f.grade}", 0, 0, self.source)
        return SU2Triple(*forms)

    @property
    def has_differential(self) -> bool:
        return any(k.startswith("de") for k in self.forms)

    def differential(self) -> LieDifferential:
        rows = []
        for i in range(1, 6):
            terms = self.forms.get(f"de{i}", {})
            if terms and len(next(iter(terms))) != 2:
                raise FormParseError(f"de{i} must be a 2-form", 0, 0, self.source)
            rows.append({k: v for k, v in terms.items()})
        return LieDifferential.from_terms(rows, exact=self.exact)


def _assign(forms, exact_flags, name, rhs, line, col, source):
    key = _ALIASES.get(name.strip())
    if key is None:
        raise FormParseError(f"unknown name {name.strip()!r}", line, 1, source)
    if key == "d":
        for i, expr in enumerate(parse_compact(rhs, line, col, source), start=1):
            _assign(forms, exact_flags, f"de{i}", expr, line, col, source)
        return
    if key in forms:
        raise FormParseError(f"{key} assigned twice", line, 1, source)
    terms, ex = parse_expression(rhs, line, col, source)
    forms[key] = terms
    exact_flags.append(ex)


def parse_form_file(text: str, source: str = "<input>") -> FormFile:
    forms: dict = {}
    flags: list[bool] = []
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormParseError(exc.msg, exc.lineno, exc.colno, source) from None
        if not isinstance(data, dict):
            raise FormParseError("top level must be an object", 1, 1, source)
        for name, rhs in data.items():
            if name.startswith("_"):
                continue
            if isinstance(rhs, list):
                rhs = "(" + ",".join(str(x) for x in rhs) + ")"
            _assign(forms, flags, name, str(rhs), 1, 1, source)
    else:
        for ln, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            if not body.strip():
                continue
            if "=" not in body:
                raise FormParseError("expected 'name = expression'", ln, len(body) - len(body.lstrip()) + 1, source)
            name, rhs = body.split("=", 1)
            _assign(forms, flags, name, rhs, ln, len(name) + 2, source)
    if not forms:
        raise FormParseError("no assignments found", 1, 1, source)
    return FormFile(forms, all(flags), source)


def read_form_file(path) -> FormFile:
    p = Path(path)
    return parse_form_file(p.read_text(encoding="utf-8"), source=str(p))
