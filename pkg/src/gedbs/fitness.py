"""Domain fitness: RMSE over arithmetic phenotypes for regression, and
hit-count over boolean phenotypes for circuits.

Regression phenotypes are infix expressions over features ``x0..x{d-1}``,
numeric constants, the operators ``+ - * /`` and unary functions.
Division is protected (anything divided by exact zero yields 1); every
other non-finite result (overflow, NaN, domain errors) makes the whole
individual score the penalty value.

Circuit phenotypes carry one boolean expression per output bit over
input bits ``i0..i{n-1}`` and the gates AND, OR, NOT, XOR, with multiple
outputs separated by ``;``.  Gate precedence is NOT > AND > XOR > OR.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, TYPE_CHECKING

from .selection import LengthMismatch

if TYPE_CHECKING:
    from .datasets import Dataset

#: Fitness for individuals that cannot be scored (also the RMSE clamp).
PENALTY_FITNESS = 1e12


class PhenotypeParseError(ValueError):
    pass


class UnknownInputBit(PhenotypeParseError):
    pass


class EmptyInput(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar metrics


def rmse(predicted, observed) -> float:
    """Root-mean-square error between two equal-length value lists."""
    predicted = list(predicted)
    observed = list(observed)
    if len(predicted) != len(observed):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(observed)} observations")
    if not predicted:
        raise EmptyInput("rmse of empty lists")
    total = sum((p - o) ** 2 for p, o in zip(predicted, observed))
    return math.sqrt(total / len(predicted))


def hit_count(predicted_rows, observed_rows) -> int:
    """Rows whose full output vector matches the expectation."""
    predicted_rows = list(predicted_rows)
    observed_rows = list(observed_rows)
    if len(predicted_rows) != len(observed_rows):
        raise ShapeMismatch(
            f"{len(predicted_rows)} predicted rows vs {len(observed_rows)} observed"
        )
    hits = 0
    for p, o in zip(predicted_rows, observed_rows):
        p = tuple(p)
        o = tuple(o)
        if len(p) != len(o):
            raise ShapeMismatch(f"row widths {len(p)} and {len(o)} differ")
        if p == o:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# arithmetic expressions

_SR_FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
    "abs": abs,
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/();]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise PhenotypeParseError(f"bad character {text[pos]!r} at offset {pos}")
        if m.group("num") is not None:
            tokens.append(("num", m.group("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


class _Tokens:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind, value=None):
        got_kind, got_value = self.next()
        if got_kind != kind or (value is not None and got_value != value):
            raise PhenotypeParseError(f"expected {value or kind}, got {got_value!r}")
        return got_value

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


_VAR_RE = re.compile(r"x(\d+)$")
_BIT_RE = re.compile(r"i(\d+)$")

CaseFn = Callable[[tuple], float]


@dataclass(frozen=True)
class SrExpression:
    """A compiled arithmetic phenotype."""

    text: str
    max_feature: int  # highest feature index referenced, -1 if none
    _fn: CaseFn

    def evaluate_case(self, inputs) -> float:
        """May raise OverflowError/ValueError on non-finite intermediates."""
        return self._fn(inputs)


def _parse_sum(ts: _Tokens, feature_count) -> tuple[CaseFn, int]:
    fn, hi = _parse_term(ts, feature_count)
    while ts.peek() == ("op", "+") or ts.peek() == ("op", "-"):
        _, op = ts.next()
        rhs, rhi = _parse_term(ts, feature_count)
        hi = max(hi, rhi)
        lhs = fn
        if op == "+":
            fn = lambda x, a=lhs, b=rhs: a(x) + b(x)
        else:
            fn = lambda x, a=lhs, b=rhs: a(x) - b(x)
    return fn, hi


def _parse_term(ts: _Tokens, feature_count) -> tuple[CaseFn, int]:
    fn, hi = _parse_unary(ts, feature_count)
    while ts.peek() == ("op", "*") or ts.peek() == ("op", "/"):
        _, op = ts.next()
        rhs, rhi = _parse_unary(ts, feature_count)
        hi = max(hi, rhi)
        lhs = fn
        if op == "*":
            fn = lambda x, a=lhs, b=rhs: a(x) * b(x)
        else:
            # protected division: anything over exact zero is 1
            def fn(x, a=lhs, b=rhs):
                den = b(x)
                return 1.0 if den == 0.0 else a(x) / den

    return fn, hi


def _parse_unary(ts: _Tokens, feature_count) -> tuple[CaseFn, int]:
    if ts.peek() == ("op", "-"):
        ts.next()
        inner, hi = _parse_unary(ts, feature_count)
        return (lambda x, f=inner: -f(x)), hi
    return _parse_atom(ts, feature_count)


def _parse_atom(ts: _Tokens, feature_count) -> tuple[CaseFn, int]:
    kind, value = ts.next()
    if kind == "num":
        const = float(value)
        return (lambda x, v=const: v), -1
    if kind == "op" and value == "(":
        fn, hi = _parse_sum(ts, feature_count)
        ts.expect("op", ")")
        return fn, hi
    if kind == "name":
        var = _VAR_RE.fullmatch(value)
        if var:
            idx = int(var.group(1))
            if feature_count is not None and idx >= feature_count:
                raise PhenotypeParseError(
                    f"variable {value} out of range for {feature_count} features"
                )
            return (lambda x, i=idx: x[i]), idx
        if value in _SR_FUNCTIONS:
            ts.expect("op", "(")
            inner, hi = _parse_sum(ts, feature_count)
            ts.expect("op", ")")
            func = _SR_FUNCTIONS[value]
            return (lambda x, f=func, g=inner: f(g(x))), hi
        raise PhenotypeParseError(f"unknown identifier {value!r}")
    raise PhenotypeParseError(f"unexpected token {value!r}")


def parse_sr_expression(text: str, feature_count: int | None = None) -> SrExpression:
    ts = _Tokens(_tokenize(text))
    if ts.done():
        raise PhenotypeParseError("empty expression")
    fn, hi = _parse_sum(ts, feature_count)
    if not ts.done():
        raise PhenotypeParseError(f"trailing tokens from {ts.peek()[1]!r}")
    return SrExpression(text=text, max_feature=hi, _fn=fn)


def eval_sr(phenotype: str, dataset: "Dataset") -> float:
    """RMSE of a regression phenotype over a dataset.

    Any case producing a non-finite value yields the penalty; finite
    scores are clamped at the penalty so it stays the worst fitness.
    """
    expr = parse_sr_expression(phenotype, dataset.feature_count)
    predictions = []
    for case in dataset.cases:
        try:
            value = expr.evaluate_case(case.inputs)
        except (OverflowError, ValueError, ZeroDivisionError):
            return PENALTY_FITNESS
        if not math.isfinite(value):
            return PENALTY_FITNESS
        predictions.append(value)
    observed = [case.outputs[0] for case in dataset.cases]
    score = rmse(predictions, observed)
    return score if score < PENALTY_FITNESS else PENALTY_FITNESS


# ---------------------------------------------------------------------------
# boolean circuit expressions

_GATES = ("AND", "OR", "NOT", "XOR")

BitFn = Callable[[tuple], int]


@dataclass(frozen=True)
class CircuitExpression:
    """Compiled boolean phenotype: one expression per output bit."""

    text: str
    input_count: int
    output_fns: tuple[BitFn, ...]

    @property
    def output_count(self) -> int:
        return len(self.output_fns)

    def evaluate_row(self, bits) -> tuple[int, ...]:
        return tuple(fn(bits) for fn in self.output_fns)


def _parse_or(ts: _Tokens, input_count: int) -> BitFn:
    fn = _parse_xor(ts, input_count)
    while ts.peek() == ("name", "OR"):
        ts.next()
        rhs = _parse_xor(ts, input_count)
        fn = lambda x, a=fn, b=rhs: a(x) | b(x)
    return fn


def _parse_xor(ts: _Tokens, input_count: int) -> BitFn:
    fn = _parse_and(ts, input_count)
    while ts.peek() == ("name", "XOR"):
        ts.next()
        rhs = _parse_and(ts, input_count)
        fn = lambda x, a=fn, b=rhs: a(x) ^ b(x)
    return fn


def _parse_and(ts: _Tokens, input_count: int) -> BitFn:
    fn = _parse_not(ts, input_count)
    while ts.peek() == ("name", "AND"):
        ts.next()
        rhs = _parse_not(ts, input_count)
        fn = lambda x, a=fn, b=rhs: a(x) & b(x)
    return fn


def _parse_not(ts: _Tokens, input_count: int) -> BitFn:
    if ts.peek() == ("name", "NOT"):
        ts.next()
        inner = _parse_not(ts, input_count)
        return lambda x, f=inner: 1 - f(x)
    return _parse_bit_atom(ts, input_count)


def _parse_bit_atom(ts: _Tokens, input_count: int) -> BitFn:
    kind, value = ts.next()
    if kind == "num":
        if value not in ("0", "1"):
            raise PhenotypeParseError(f"only constants 0 and 1 are allowed, got {value!r}")
        const = int(value)
        return lambda x, v=const: v
    if kind == "op" and value == "(":
        fn = _parse_or(ts, input_count)
        ts.expect("op", ")")
        return fn
    if kind == "name":
        bit = _BIT_RE.fullmatch(value)
        if bit:
            idx = int(bit.group(1))
            if idx >= input_count:
                raise UnknownInputBit(
                    f"bit {value} out of range for {input_count} inputs"
                )
            return lambda x, i=idx: x[i]
        if value in _GATES:
            raise PhenotypeParseError(f"misplaced gate {value!r}")
        raise PhenotypeParseError(f"unknown identifier {value!r}")
    raise PhenotypeParseError(f"unexpected token {value!r}")


def parse_circuit_phenotype(
    text: str, input_count: int, output_count: int | None = None
) -> CircuitExpression:
    """Parse ``;``-separated boolean output expressions."""
    parts = text.split(";")
    if output_count is not None and len(parts) != output_count:
        raise PhenotypeParseError(
            f"{len(parts)} output expressions, expected {output_count}"
        )
    fns = []
    for part in parts:
        ts = _Tokens(_tokenize(part))
        if ts.done():
            raise PhenotypeParseError("empty output expression")
        fn = _parse_or(ts, input_count)
        if not ts.done():
            raise PhenotypeParseError(f"trailing tokens from {ts.peek()[1]!r}")
        fns.append(fn)
    return CircuitExpression(text=text, input_count=input_count, output_fns=tuple(fns))


def eval_circuit(phenotype: str, dataset: "Dataset") -> int:
    """Hit-count of a circuit phenotype over a truth-table dataset."""
    expr = parse_circuit_phenotype(phenotype, dataset.feature_count, dataset.output_count)
    predicted = [expr.evaluate_row(case.inputs) for case in dataset.cases]
    observed = [case.outputs for case in dataset.cases]
    return hit_count(predicted, observed)
