"""Tiny arithmetic grammar for user-specified tail functions.

Config files describe custom jump-size tails as expressions in the variable
x with the operators + - * /, numeric literals, parentheses, and the two
functions ln(e) and pow(b, e). Expressions compile to closures that accept
scalars or numpy arrays.

Grammar:
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | 'x' | 'ln' '(' expr ')'
             | 'pow' '(' expr ',' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import numpy as np

__all__ = ["TailExprError", "parse_tail_expr"]


class TailExprError(ValueError):
    """Raised for malformed tail expressions, with the offending position."""


_TWO_CHAR = ()
_SINGLE = set("+-*/(),")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append((c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE" or
                             (text[j] in "+-" and j > i and text[j - 1] in "eE")):
                j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise TailExprError(f"bad number at position {i}: {text[i:j]!r}")
            tokens.append(("num", i, value))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and text[j].isalpha():
                j += 1
            word = text[i:j]
            if word not in ("x", "ln", "pow"):
                raise TailExprError(f"unknown name {word!r} at position {i}")
            tokens.append((word, i))
            i = j
            continue
        raise TailExprError(f"unexpected character {c!r} at position {i}")
    tokens.append(("end", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise TailExprError(
                f"expected {kind!r} at position {tok[1]} in {self.text!r}, "
                f"found {tok[0]!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise TailExprError(
                f"trailing input at position {tok[1]} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            node = (node, rhs, np.add if op == "+" else np.subtract)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            node = (node, rhs, np.multiply if op == "*" else np.divide)
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            inner = self.unary()
            return (inner, None, np.negative)
        return self.primary()

    def primary(self):
        tok = self.peek()
        kind = tok[0]
        if kind == "num":
            self.take()
            return ("const", tok[2])
        if kind == "x":
            self.take()
            return ("var",)
        if kind == "ln":
            self.take()
            self.take("(")
            inner = self.expr()
            self.take(")")
            return (inner, None, np.log)
        if kind == "pow":
            self.take()
            self.take("(")
            base = self.expr()
            self.take(",")
            expo = self.expr()
            self.take(")")
            return (base, expo, np.power)
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        raise TailExprError(
            f"expected a value at position {tok[1]} in {self.text!r}")


def _eval(node, x):
    head = node[0]
    if head == "const":
        return node[1]
    if head == "var":
        return x
    lhs, rhs, op = node
    if rhs is None:
        return op(_eval(lhs, x))
    return op(_eval(lhs, x), _eval(rhs, x))


def parse_tail_expr(text: str):
    """Compile an expression in x to a scalar/array callable."""
    tree = _Parser(text).parse()

    def fn(x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _eval(tree, x)

    fn.source = text
    return fn
