"""Shipped BNF grammar files plus template builders for arbitrary arities.

The named benchmark grammars live as ``.bnf`` data files next to this
module; ``sr_grammar_text`` and ``circuit_grammar_text`` build the same
shapes for datasets with other feature counts (e.g. CSV data).
"""

from __future__ import annotations

from importlib import resources

from ..grammar import Grammar, parse_bnf

_SR_CONSTANTS = ("0.5", "1.0", "2.0", "3.0", "5.0", "10.0")


def sr_grammar_text(n_features: int) -> str:
    """Arithmetic grammar over features x0..x{n-1}."""
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    variables = "|".join(f"x{i}" for i in range(n_features))
    constants = "|".join(_SR_CONSTANTS)
    return (
        "<start> ::= <expr><op><expr> | <pre_op>(<expr>) | <var>\n"
        "<expr> ::= (<expr><op><expr>) | <pre_op>(<expr>) | <var>\n"
        "<op> ::= +|-|*|/\n"
        "<pre_op> ::= sin|cos\n"
        f"<var> ::= {variables}|<const>\n"
        f"<const> ::= {constants}\n"
    )


def circuit_grammar_text(n_inputs: int, n_outputs: int = 1) -> str:
    """Boolean grammar over bits i0..i{n-1}, one expression per output."""
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("n_inputs and n_outputs must be >= 1")
    bits = "|".join(f"i{k}" for k in range(n_inputs))
    outputs = " ; ".join("<bexpr>" for _ in range(n_outputs))
    return (
        f"<start> ::= {outputs}\n"
        "<bexpr> ::= (<bexpr> <gate> <bexpr>) | NOT (<bexpr>) | <bit>\n"
        "<gate> ::= AND|OR|XOR\n"
        f"<bit> ::= {bits}\n"
    )


def load_text(name: str) -> str:
    """Read a shipped grammar file by stem, e.g. ``parity5``."""
    return resources.files(__name__).joinpath(f"{name}.bnf").read_text(encoding="utf-8")


def load(name: str) -> Grammar:
    return parse_bnf(load_text(name))


#: benchmark id -> shipped grammar stem
BENCHMARK_GRAMMARS = {
    "keijzer-4": "sr_1var",
    "keijzer-9": "sr_1var",
    "keijzer-10": "sr_2var",
    "keijzer-14": "sr_2var",
    "nguyen-9": "sr_2var",
    "nguyen-10": "sr_2var",
    "keijzer-5": "sr_3var",
    "vladislavleva-5": "sr_3var",
    "korns-11": "sr_5var",
    "korns-12": "sr_5var",
    "comparator5": "comparator5",
    "parity5": "parity5",
    "mux11": "mux11",
    "alu": "alu",
}


def for_benchmark(benchmark_id: str) -> Grammar:
    key = benchmark_id.strip().lower()
    if key not in BENCHMARK_GRAMMARS:
        raise KeyError(f"no shipped grammar for benchmark {benchmark_id!r}")
    return load(BENCHMARK_GRAMMARS[key])
