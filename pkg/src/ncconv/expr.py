"""Measure-expression language: tokenizer, parser, printer, typing, evaluation.

Grammar::

    expr    := operand (INFIX operand)*          left associative
    operand := call | "(" expr ")"
    call    := IDENT "(" [arg ("," arg)*] ")"
    arg     := expr | NUMBER | NUMBER ":" NUMBER
    INFIX   := "|>" (mono_add) | "(+)" (free_add) | "(u)" (bool_add)

Literals are ``dirac(x)``, ``atoms(x:w, ...)``, ``bern(p, a, b)``
(``p delta_a + (1-p) delta_b``), ``uniform_circle()`` and
``semicircle(m, v)``.  Every operation keeps the domain of its operands, so
one domain is inferred for the whole expression: the first of real,
half-line, circle that all literals and operations admit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import convolutions as conv
from .errors import DomainError, ParseError
from .measures import (AtomicMeasure, Dilate, Domain, Rotate, TWO_PI, Translate, bernoulli,
                       dirac, make_atomic, push_map)
from .transforms import (TransformHandle, dilate_handle, haar_circle, rotate_handle,
                         semicircle, translate_handle)

LITERALS = {"dirac": 1, "atoms": None, "bern": 3, "uniform_circle": 0, "semicircle": 2}
UNARY = {"translate", "dilate", "rotate"}
BINARY = ("mono_add", "bool_add", "free_add", "mono_mult", "mono_mult_alt",
          "bool_mult", "bool_mult_new", "free_mult")
INFIX = {"|>": "mono_add", "(+)": "free_add", "(u)": "bool_add"}
INFIX_SYMBOL = {v: k for k, v in INFIX.items()}

PREFERENCE = (Domain.REAL, Domain.POSITIVE, Domain.CIRCLE)
OP_DOMAINS = {
    "mono_add": {Domain.REAL},
    "bool_add": {Domain.REAL},
    "free_add": {Domain.REAL},
    "mono_mult": {Domain.POSITIVE, Domain.CIRCLE},
    "bool_mult": {Domain.POSITIVE, Domain.CIRCLE},
    "free_mult": {Domain.POSITIVE, Domain.CIRCLE},
    "mono_mult_alt": {Domain.POSITIVE},
    "bool_mult_new": {Domain.POSITIVE},
    "translate": {Domain.REAL},
    "dilate": {Domain.POSITIVE},
    "rotate": {Domain.CIRCLE},
}


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    kind: str
    args: tuple  # numbers, or (x, w) pairs for atoms


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    param: float


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: object
    rhs: object
    infix: bool = False


# -- tokenizer ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<infix>\|>|\(\s*\+\s*\)|\(\s*u\s*\))
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[(),:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "infix":
                chunk = re.sub(r"\s+", "", chunk)
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        for k, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + k + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser ------------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected):
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(t.line, t.col, f"expected {expected}, got {got}")

    def take(self, kind, text=None, expected=None):
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            self.fail(expected or (repr(text) if text else kind))
        self.i += 1
        return t

    def parse(self):
        node = self.expr()
        if self.tok.kind != "eof":
            self.fail("one of '|>', '(+)', '(u)' or end of input")
        return node

    def expr(self):
        node = self.operand()
        while self.tok.kind == "infix":
            op = INFIX[self.take("infix").text]
            node = Binary(op, node, self.operand(), infix=True)
        return node

    def operand(self):
        t = self.tok
        if t.kind == "punct" and t.text == "(":
            self.i += 1
            node = self.expr()
            self.take("punct", ")", "')'")
            return node
        if t.kind == "ident":
            return self.call()
        self.fail("a measure (literal, call or '(')")

    def number(self):
        return float(self.take("number", expected="a number").text)

    def call(self):
        name_tok = self.take("ident")
        name = name_tok.text
        self.take("punct", "(", "'('")
        if name in LITERALS:
            node = self.literal(name, name_tok)
        elif name in UNARY:
            operand = self.expr()
            self.take("punct", ",", "','")
            node = Unary(name, operand, self.number())
        elif name in BINARY:
            lhs = self.expr()
            self.take("punct", ",", "','")
            node = Binary(name, lhs, self.expr())
        else:
            known = sorted(set(LITERALS) | UNARY | set(BINARY))
            raise ParseError(name_tok.line, name_tok.col,
                             f"unknown function {name!r}; expected one of {', '.join(known)}")
        self.take("punct", ")", "')'")
        return node

    def literal(self, name, name_tok):
        args = []
        if name == "atoms":
            while True:
                x = self.number()
                self.take("punct", ":", "':'")
                args.append((x, self.number()))
                if self.tok.kind == "punct" and self.tok.text == ",":
                    self.i += 1
                    continue
                break
            return Literal(name, tuple(args))
        arity = LITERALS[name]
        for k in range(arity):
            if k:
                self.take("punct", ",", "','")
            args.append(self.number())
        return Literal(name, tuple(args))


def parse_expression(text):
    """Parse ``text`` into an AST; raises :class:`ParseError` with line and column."""
    return _Parser(text).parse()


# -- printer ---------------------------------------------------------------------------

def format_number(x):
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def to_text(node):
    """Canonical text of an AST; ``parse_expression(to_text(n)) == n``."""
    if isinstance(node, Literal):
        if node.kind == "atoms":
            body = ", ".join(f"{format_number(x)}:{format_number(w)}" for x, w in node.args)
        else:
            body = ", ".join(format_number(a) for a in node.args)
        return f"{node.kind}({body})"
    if isinstance(node, Unary):
        return f"{node.op}({to_text(node.operand)}, {format_number(node.param)})"
    if node.infix:
        rhs = to_text(node.rhs)
        if isinstance(node.rhs, Binary) and node.rhs.infix:
            rhs = f"({rhs})"
        return f"{to_text(node.lhs)} {INFIX_SYMBOL[node.op]} {rhs}"
    return f"{node.op}({to_text(node.lhs)}, {to_text(node.rhs)})"


# -- domain inference ----------------------------------------------------------------------

def _eligible_values(values):
    out = {Domain.REAL}
    if all(v >= 0 for v in values):
        out.add(Domain.POSITIVE)
    if all(0 <= v < TWO_PI for v in values):
        out.add(Domain.CIRCLE)
    return out


def eligible_domains(node):
    if isinstance(node, Literal):
        if node.kind == "dirac":
            return _eligible_values(node.args)
        if node.kind == "atoms":
            return _eligible_values([x for x, _ in node.args])
        if node.kind == "bern":
            return _eligible_values(node.args[1:])
        if node.kind == "uniform_circle":
            return {Domain.CIRCLE}
        return {Domain.REAL}
    if isinstance(node, Unary):
        return OP_DOMAINS[node.op] & eligible_domains(node.operand)
    return OP_DOMAINS[node.op] & eligible_domains(node.lhs) & eligible_domains(node.rhs)


def infer_domain(node, override=None):
    """Domain of the expression, or :class:`DomainError` if none fits."""
    ok = eligible_domains(node)
    if override is not None:
        d = Domain.parse(override)
        if d not in ok:
            raise DomainError(f"expression cannot be typed on the {d.value} domain")
        return d
    for d in PREFERENCE:
        if d in ok:
            return d
    raise DomainError("no domain admits every operand and operation of the expression")


# -- evaluation ------------------------------------------------------------------------------

CONCRETE_OP = {
    ("mono_mult", Domain.POSITIVE): "mono_mult_pos",
    ("mono_mult", Domain.CIRCLE): "mono_mult_circle",
    ("bool_mult", Domain.POSITIVE): "bool_mult_bercovici_pos",
    ("bool_mult", Domain.CIRCLE): "bool_mult_circle",
    ("free_mult", Domain.POSITIVE): "free_mult_pos",
    ("free_mult", Domain.CIRCLE): "free_mult_circle",
}


def concrete_op(op, domain):
    return CONCRETE_OP.get((op, domain), op)


def _literal_value(node, domain):
    if node.kind == "dirac":
        return dirac(node.args[0], domain)
    if node.kind == "atoms":
        return make_atomic(domain, node.args)
    if node.kind == "bern":
        p, a, b = node.args
        return bernoulli(p, a, b, domain)
    if node.kind == "uniform_circle":
        return haar_circle()
    return semicircle(*node.args)


def evaluate(node, domain, seed=None):
    """Value of an expression: an atomic measure, a transform handle or :class:`conv.Undefined`."""
    if isinstance(node, Literal):
        return _literal_value(node, domain)
    if isinstance(node, Unary):
        inner = evaluate(node.operand, domain, seed)
        if isinstance(inner, conv.Undefined):
            return inner
        if isinstance(inner, AtomicMeasure):
            mapping = {"translate": Translate, "dilate": Dilate, "rotate": Rotate}[node.op]
            return push_map(inner, mapping(node.param))
        fn = {"translate": translate_handle, "dilate": dilate_handle,
              "rotate": rotate_handle}[node.op]
        return fn(inner, node.param)
    lhs = evaluate(node.lhs, domain, seed)
    if isinstance(lhs, conv.Undefined):
        return lhs
    rhs = evaluate(node.rhs, domain, seed)
    if isinstance(rhs, conv.Undefined):
        return rhs
    op = concrete_op(node.op, domain)
    fn = conv.OPERATIONS[op]
    result = fn(lhs, rhs, seed=seed) if op == "bool_mult_bercovici_pos" else fn(lhs, rhs)
    if isinstance(result, conv.Undefined):
        return result
    return result.measure


def is_value_handle(value):
    return isinstance(value, TransformHandle)


__all__ = [
    "Literal", "Unary", "Binary", "parse_expression", "to_text", "tokenize",
    "eligible_domains", "infer_domain", "evaluate", "concrete_op", "format_number",
]
