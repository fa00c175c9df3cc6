"""Problem-description language.

A document is line-oriented:

    dim 2; unknowns 1; order 2
    P = x1*x2
    L 2 : (2,0) -> x1^2; (0,2) -> x2^2; (1,1) -> 2
    F 1 = 2*y1 + 2*x1*x2
    option degree = 12

Polynomial expressions allow rational literals (p/q), the variables
x1..xd and y1..yN (the latter only in F lines), + - * ^ and parentheses.
Omitted L lines mean the zero operator at that order.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .diffops import DiffOperator
from .errors import ParseError, SemanticError
from .series import Series, SeriesMatrix, format_rational, grlex_key
from .solver import ProblemSpec

_TOKEN = re.compile(r"""
    (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<arrow>->)
  | (?P<sym>[=:;,()+\-*^/])
  | (?P<ws>[ \t]+)
  | (?P<bad>.)
""", re.VERBOSE)

_KEYWORDS = {"dim", "unknowns", "order", "P", "L", "F", "option"}

DEFAULT_OPTIONS = {
    "degree": 10,
    "order": 10,
    "rho": Fraction(1, 2),
    "window": Fraction(1, 2),
}


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.text!r})@{self.line}:{self.col}"


def _tokenize(text: str) -> list[_Token]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for m in _TOKEN.finditer(body):
            kind = m.lastgroup
            if kind == "ws":
                continue
            if kind == "bad":
                raise ParseError(lineno, m.start() + 1,
                                 ("number", "name", "operator"),
                                 f"line {lineno}, column {m.start() + 1}: "
                                 f"unexpected character {m.group()!r}")
            out.append(_Token(kind if kind != "sym" else m.group(),
                              m.group(), lineno, m.start() + 1))
        out.append(_Token("newline", "\n", lineno, len(body) + 1))
    out.append(_Token("eof", "", len(text.splitlines()) + 1, 1))
    return out


# polynomials are kept as dicts (x-exponent, y-exponent) -> Fraction while
# parsing, and converted to Series data once dim and unknowns are known
Poly = dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction]


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dim = None
        self.unknowns = None
        self.order = None
        self.P_poly: Poly | None = None
        self.P_line = 0
        self.L_terms: dict[int, dict[tuple[int, ...], Poly]] = {}
        self.L_lines: dict[int, int] = {}
        self.F_polys: dict[int, Poly] = {}
        self.F_lines: dict[int, int] = {}
        self.options: dict = dict(DEFAULT_OPTIONS)

    # -- token plumbing ------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, *kinds) -> _Token:
        tok = self.peek()
        if tok.kind not in kinds:
            raise ParseError(tok.line, tok.col, kinds)
        return self.next()

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    def end_statement(self):
        tok = self.peek()
        if tok.kind in ("newline", ";", "eof"):
            if tok.kind != "eof":
                self.next()
            return
        raise ParseError(tok.line, tok.col, ("newline", ";"))

    # -- statements ----------------------------------------------------------

    def parse(self) -> None:
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind != "name" or tok.text not in _KEYWORDS:
                raise ParseError(tok.line, tok.col, sorted(_KEYWORDS))
            getattr(self, "stmt_" + tok.text)()

    def _int(self) -> int:
        return int(self.expect("num").text)

    def stmt_dim(self):
        self.next()
        self.dim = self._int()
        if self.dim < 1:
            raise SemanticError(self.tokens[self.pos - 1].line, "bad-dim",
                                "dim must be >= 1")
        self.end_statement()

    def stmt_unknowns(self):
        self.next()
        self.unknowns = self._int()
        if self.unknowns < 1:
            raise SemanticError(self.tokens[self.pos - 1].line, "bad-dim",
                                "unknowns must be >= 1")
        self.end_statement()

    def stmt_order(self):
        self.next()
        self.order = self._int()
        if self.order < 1:
            raise SemanticError(self.tokens[self.pos - 1].line, "bad-order",
                                "order must be >= 1")
        self.end_statement()

    def stmt_P(self):
        tok = self.next()
        self.expect("=")
        self.P_line = tok.line
        self.P_poly = self.polyexpr(allow_y=False)
        self.end_statement()

    def stmt_L(self):
        tok = self.next()
        j = self._int()
        if self.order is not None and not 1 <= j <= self.order:
            raise SemanticError(tok.line, "order-range",
                                f"L {j} outside 1..{self.order}")
        self.expect(":")
        self.L_lines.setdefault(j, tok.line)
        terms = self.L_terms.setdefault(j, {})
        while True:
            alpha_tok = self.peek()
            alpha = self.alpha_tuple()
            if sum(alpha) != j:
                raise SemanticError(alpha_tok.line, "alpha-order",
                                    f"|{alpha}| = {sum(alpha)} != {j}")
            if alpha in terms:
                raise SemanticError(alpha_tok.line, "dup-alpha",
                                    f"duplicate index {alpha} for L {j}")
            self.expect("arrow")
            terms[alpha] = self.polyexpr(allow_y=False)
            if self.peek().kind == ";" and self.tokens[self.pos + 1].kind == "(":
                self.next()
                continue
            break
        self.end_statement()

    def stmt_F(self):
        tok = self.next()
        i = self._int()
        if self.unknowns is not None and not 1 <= i <= self.unknowns:
            raise SemanticError(tok.line, "component-range",
                                f"F {i} outside 1..{self.unknowns}")
        if i in self.F_polys:
            raise SemanticError(tok.line, "dup-component",
                                f"duplicate line for F {i}")
        self.expect("=")
        self.F_lines[i] = tok.line
        self.F_polys[i] = self.polyexpr(allow_y=True)
        self.end_statement()

    def stmt_option(self):
        self.next()
        name_tok = self.expect("name")
        self.expect("=")
        value = self.rational()
        name = name_tok.text
        if name not in DEFAULT_OPTIONS:
            raise SemanticError(name_tok.line, "unknown-option",
                                f"unknown option {name!r}")
        if name in ("degree", "order"):
            if value.denominator != 1 or value < 0:
                raise SemanticError(name_tok.line, "bad-option",
                                    f"option {name} must be a non-negative integer")
            self.options[name] = int(value)
        else:
            self.options[name] = value
        self.end_statement()

    # -- expressions ---------------------------------------------------------

    def alpha_tuple(self) -> tuple[int, ...]:
        self.expect("(")
        out = [self._int()]
        while self.peek().kind == ",":
            self.next()
            if self.peek().kind == ")":  # tolerate a trailing comma
                break
            out.append(self._int())
        tok = self.expect(")")
        if self.dim is not None and len(out) != self.dim:
            raise SemanticError(tok.line, "bad-dim",
                                f"index has {len(out)} entries, dim is {self.dim}")
        return tuple(out)

    def rational(self) -> Fraction:
        sign = 1
        while self.peek().kind == "-":
            self.next()
            sign = -sign
        num = int(self.expect("num").text)
        if self.peek().kind == "/":
            self.next()
            den = int(self.expect("num").text)
            if den == 0:
                tok = self.tokens[self.pos - 1]
                raise SemanticError(tok.line, "zero-denominator",
                                    "denominator must be nonzero")
            return Fraction(sign * num, den)
        return Fraction(sign * num)

    def polyexpr(self, allow_y: bool) -> Poly:
        out = self._sum(allow_y)
        return {k: v for k, v in out.items() if v != 0}

    def _sum(self, allow_y: bool) -> Poly:
        out = self._product(allow_y)
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self._product(allow_y)
            for k, v in rhs.items():
                out[k] = out.get(k, Fraction(0)) + (v if op == "+" else -v)
        return out

    def _product(self, allow_y: bool) -> Poly:
        out = self._power(allow_y)
        while self.peek().kind in ("num", "name", "(") :
            # implicit multiplication is not in the grammar; require '*'
            tok = self.peek()
            raise ParseError(tok.line, tok.col, ("*", "+", "-", "^", "newline"))
        while self.peek().kind == "*":
            self.next()
            rhs = self._power(allow_y)
            out = _poly_mul(out, rhs)
            tok = self.peek()
            if tok.kind in ("num", "name", "("):
                raise ParseError(tok.line, tok.col, ("*", "+", "-", "newline"))
        return out

    def _power(self, allow_y: bool) -> Poly:
        base = self._atom(allow_y)
        if self.peek().kind == "^":
            self.next()
            exp = self._int()
            out = _poly_const(Fraction(1), self.dim or 0, self.unknowns or 0)
            for _ in range(exp):
                out = _poly_mul(out, base)
            return out
        return base

    def _atom(self, allow_y: bool) -> Poly:
        tok = self.peek()
        if tok.kind == "-":
            self.next()
            inner = self._power(allow_y)
            return {k: -v for k, v in inner.items()}
        if tok.kind == "num":
            value = self.rational()
            return _poly_const(value, self.dim or 0, self.unknowns or 0)
        if tok.kind == "name":
            self.next()
            return self._variable(tok, allow_y)
        if tok.kind == "(":
            self.next()
            inner = self._sum(allow_y)
            self.expect(")")
            return inner
        raise ParseError(tok.line, tok.col, ("number", "variable", "("))

    def _variable(self, tok: _Token, allow_y: bool) -> Poly:
        m = re.fullmatch(r"([xy])(\d+)", tok.text)
        if not m:
            raise ParseError(tok.line, tok.col, ("x<i>", "y<i>"))
        kind, idx = m.group(1), int(m.group(2))
        d = self.dim or 0
        N = self.unknowns or 0
        if kind == "x":
            if not 1 <= idx <= d:
                raise SemanticError(tok.line, "unknown-var",
                                    f"x{idx} outside x1..x{d}")
            xe = tuple(int(i == idx - 1) for i in range(d))
            return {(xe, (0,) * N): Fraction(1)}
        if not allow_y:
            raise SemanticError(tok.line, "y-in-coefficient",
                                "y variables are only allowed in F lines")
        if not 1 <= idx <= N:
            raise SemanticError(tok.line, "unknown-var",
                                f"y{idx} outside y1..y{N}")
        ye = tuple(int(i == idx - 1) for i in range(N))
        return {((0,) * d, ye): Fraction(1)}


def _poly_const(value: Fraction, d: int, N: int) -> Poly:
    if value == 0:
        return {}
    return {((0,) * d, (0,) * N): value}


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (xa, ya), ca in a.items():
        for (xb, yb), cb in b.items():
            key = (tuple(p + q for p, q in zip(xa, xb)),
                   tuple(p + q for p, q in zip(ya, yb)))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


class ProblemDocument:
    """A parsed problem file: the ProblemSpec plus run options."""

    __slots__ = ("raw", "spec", "options")

    def __init__(self, raw: str, spec: ProblemSpec, options: dict):
        self.raw = raw
        self.spec = spec
        self.options = options

    def serialize(self) -> str:
        """Canonical text form; re-parsing yields an identical ProblemSpec."""
        spec = self.spec
        d, N = spec.dim, spec.unknowns
        lines = [f"dim {d}; unknowns {N}; order {spec.order}"]
        lines.append(f"P = {_format_series(spec.P)}")
        for pos, L in enumerate(spec.operators):
            if L is None or L.is_zero:
                continue
            parts = [f"({','.join(map(str, a))}) -> {_format_series(c)}"
                     for a, c in L.sorted_terms()]
            lines.append(f"L {pos + 1} : " + "; ".join(parts))
        for i in range(N):
            lines.append(f"F {i + 1} = {_format_F(spec, i)}")
        for name in ("degree", "order", "rho", "window"):
            value = self.options[name]
            if value != DEFAULT_OPTIONS[name]:
                text = format_rational(Fraction(value)) \
                    if name in ("rho", "window") else str(value)
                lines.append(f"option {name} = {text}")
        return "\n".join(lines) + "\n"


def _format_series(s: Series) -> str:
    if s.is_zero:
        return "0"
    parts = []
    for e, c in s.sorted_terms():
        mono = "*".join(
            f"x{i + 1}" + (f"^{p}" if p > 1 else "")
            for i, p in enumerate(e) if p
        )
        coef = format_rational(c)
        parts.append(f"{coef}*{mono}" if mono else coef)
    return " + ".join(parts)


def _format_F(spec: ProblemSpec, i: int) -> str:
    d, N = spec.dim, spec.unknowns
    terms: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction] = {}

    def add(xe, ye, c):
        key = (xe, ye)
        terms[key] = terms.get(key, Fraction(0)) + c

    for e, c in spec.f[i].terms.items():
        add(e, (0,) * N, c)
    for col in range(N):
        ye = tuple(int(q == col) for q in range(N))
        for e, c in spec.A.entry(i, col).terms.items():
            add(e, ye, c)
    for gamma, vec in sorted(spec.H.items()):
        for e, c in vec[i].terms.items():
            add(e, tuple(gamma), c)
    terms = {k: v for k, v in terms.items() if v != 0}
    if not terms:
        return "0"
    parts = []
    for (xe, ye), c in sorted(
            terms.items(),
            key=lambda kv: (grlex_key(kv[0][1]), grlex_key(kv[0][0]))):
        factors = [f"x{q + 1}" + (f"^{p}" if p > 1 else "")
                   for q, p in enumerate(xe) if p]
        factors += [f"y{q + 1}" + (f"^{p}" if p > 1 else "")
                    for q, p in enumerate(ye) if p]
        mono = "*".join(factors)
        coef = format_rational(c)
        parts.append(f"{coef}*{mono}" if mono else coef)
    return " + ".join(parts)


def parse_problem(text: str) -> ProblemDocument:
    """Parse a problem document into a ProblemSpec plus options."""
    parser = _Parser(text)
    parser.parse()
    for field in ("dim", "unknowns", "order"):
        if getattr(parser, field) is None:
            tok = parser.peek()
            raise SemanticError(tok.line, "missing",
                                f"document never declares {field}")
    d, N, k = parser.dim, parser.unknowns, parser.order
    if parser.P_poly is None:
        raise SemanticError(parser.peek().line, "missing", "no P line")
    all_polys = [parser.P_poly] + list(parser.F_polys.values())
    for raw in parser.L_terms.values():
        all_polys.extend(raw.values())
    trunc = max(
        parser.options["degree"],
        max((sum(xe) for poly in all_polys for (xe, _ye) in poly), default=0),
    )

    def to_series(poly: Poly, line: int) -> Series:
        terms = {}
        for (xe, ye), c in poly.items():
            if any(ye):
                raise SemanticError(line, "y-in-coefficient",
                                    "y variables are only allowed in F lines")
            if len(xe) != d:
                raise SemanticError(line, "bad-dim", "wrong arity")
            terms[xe] = c
        hi = max((sum(e) for e in terms), default=0)
        return Series(d, max(trunc, hi), terms)

    P = to_series(parser.P_poly, parser.P_line)
    if P.is_zero:
        raise SemanticError(parser.P_line, "P-zero", "P must be nonzero")
    if P.constant_term() != 0:
        raise SemanticError(parser.P_line, "P-constant",
                            "P(0) must vanish")
    operators: list[DiffOperator | None] = []
    for j in range(1, k + 1):
        raw = parser.L_terms.get(j)
        if not raw:
            operators.append(None)
            continue
        operators.append(DiffOperator(
            d, j, {a: to_series(p, parser.L_lines[j]) for a, p in raw.items()}))
    for j in parser.L_terms:
        if j > k:
            raise SemanticError(parser.L_lines[j], "order-range",
                                f"L {j} outside 1..{k}")
    f = [Series.zero(d, trunc) for _ in range(N)]
    A_entries = [[Series.zero(d, trunc) for _ in range(N)] for _ in range(N)]
    H: dict[tuple[int, ...], list[Series]] = {}
    for i in range(1, N + 1):
        poly = parser.F_polys.get(i, {})
        for (xe, ye), c in poly.items():
            ydeg = sum(ye)
            if ydeg == 0:
                if sum(xe) == 0:
                    raise SemanticError(parser.F_lines[i], "F-constant",
                                        f"F {i} has a constant term: F(0,0) != 0")
                f[i - 1] = f[i - 1] + Series.monomial(d, trunc, xe, c)
            elif ydeg == 1:
                col = ye.index(1)
                A_entries[i - 1][col] = (
                    A_entries[i - 1][col] + Series.monomial(d, trunc, xe, c))
            else:
                vec = H.setdefault(
                    ye, [Series.zero(d, trunc) for _ in range(N)])
                vec[i - 1] = vec[i - 1] + Series.monomial(d, trunc, xe, c)
    H = {g: v for g, v in H.items() if any(not s.is_zero for s in v)}
    spec = ProblemSpec(d, N, k, P, operators, f, SeriesMatrix(A_entries), H)
    return ProblemDocument(text, spec, parser.options)
