"""BNF grammar parsing and rule lookup for the genotype-to-phenotype mapper.

A grammar file is UTF-8 text with one rule per logical line::

    <expr> ::= <expr><op><expr> | <var>

Nonterminals are written in angle brackets, everything else on a
right-hand side is terminal text (whitespace inside a terminal is kept
verbatim).  Lines starting with ``#`` are comments.  A rule may continue
onto the next line by ending the current one with ``|``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class GrammarError(ValueError):
    """Base class for grammar construction problems."""


class MissingDefinitionOperator(GrammarError):
    """A rule line does not contain the ``::=`` operator."""


class UndefinedNonterminal(GrammarError):
    """A right-hand side references a nonterminal that has no rule."""


class EmptyAlternative(GrammarError):
    """A ``|``-separated alternative is empty."""


_NT_TOKEN = re.compile(r"<[^<>\s|]+>")


@dataclass(frozen=True)
class Symbol:
    """One token of a production: a nonterminal name or terminal text."""

    text: str
    is_terminal: bool

    def __str__(self) -> str:
        return self.text if self.is_terminal else f"<{self.text}>"


@dataclass(frozen=True)
class Production:
    """A non-empty sequence of symbols forming one rule alternative."""

    symbols: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise EmptyAlternative("a production must contain at least one symbol")

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols)

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(s.text for s in self.symbols if not s.is_terminal)


@dataclass(frozen=True)
class Grammar:
    """A context-free grammar: nonterminals, terminals, axiom, productions.

    Alternative order inside each production list is exactly the textual
    order, which the mapper depends on.  Instances are immutable and safe
    to share between concurrent runs.
    """

    nonterminals: frozenset[str]
    terminals: frozenset[str]
    axiom: str
    productions: dict[str, tuple[Production, ...]] = field(hash=False)

    def __post_init__(self) -> None:
        if self.axiom not in self.nonterminals:
            raise GrammarError(f"axiom <{self.axiom}> has no rule")
        for nt, alts in self.productions.items():
            if not alts:
                raise GrammarError(f"<{nt}> has an empty production list")
            for prod in alts:
                for ref in prod.nonterminals:
                    if ref not in self.productions:
                        raise UndefinedNonterminal(
                            f"<{ref}> is referenced but never defined"
                        )

    def alternatives(self, nonterminal: str) -> tuple[Production, ...]:
        try:
            return self.productions[nonterminal]
        except KeyError:
            raise UndefinedNonterminal(f"<{nonterminal}> is not defined") from None

    def alternative_count(self, nonterminal: str) -> int:
        return len(self.alternatives(nonterminal))

    def pretty(self) -> str:
        """Render the grammar back to parseable BNF text."""
        lines = []
        for nt, alts in self.productions.items():
            rhs = "|".join(str(p) for p in alts)
            lines.append(f"<{nt}> ::= {rhs}")
        return "\n".join(lines) + "\n"


def _logical_lines(text: str) -> list[str]:
    """Strip comments/blank lines and join continuations (trailing ``|``)."""
    logical: list[str] = []
    pending = ""
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        pending = pending + " " + line if pending else line
        if pending.endswith("|"):
            continue
        logical.append(pending)
        pending = ""
    if pending:
        logical.append(pending)
    return logical


def _tokenize_rhs(alt: str, lhs: str) -> Production:
    """Split one alternative into nonterminal and terminal symbols."""
    alt = alt.strip()
    if not alt:
        raise EmptyAlternative(f"rule <{lhs}> has an empty alternative")
    symbols: list[Symbol] = []
    pos = 0
    for m in _NT_TOKEN.finditer(alt):
        if m.start() > pos:
            symbols.append(Symbol(alt[pos : m.start()], is_terminal=True))
        symbols.append(Symbol(m.group()[1:-1], is_terminal=False))
        pos = m.end()
    if pos < len(alt):
        symbols.append(Symbol(alt[pos:], is_terminal=True))
    return Production(tuple(symbols))


def parse_bnf(text: str) -> Grammar:
    """Parse BNF source text into a :class:`Grammar`.

    The left-hand side of the first rule becomes the axiom.  Raises
    :class:`MissingDefinitionOperator`, :class:`UndefinedNonterminal` or
    :class:`EmptyAlternative` on malformed input.
    """
    if not text.strip():
        raise GrammarError("empty grammar text")
    productions: dict[str, tuple[Production, ...]] = {}
    axiom: str | None = None
    for line in _logical_lines(text):
        if "::=" not in line:
            raise MissingDefinitionOperator(f"no '::=' in rule line: {line!r}")
        lhs_text, rhs_text = line.split("::=", 1)
        lhs_text = lhs_text.strip()
        m = _NT_TOKEN.fullmatch(lhs_text)
        if m is None:
            raise GrammarError(f"left-hand side must be a single <name>: {lhs_text!r}")
        lhs = lhs_text[1:-1]
        alts = [_tokenize_rhs(alt, lhs) for alt in rhs_text.split("|")]
        if lhs in productions:
            productions[lhs] = productions[lhs] + tuple(alts)
        else:
            productions[lhs] = tuple(alts)
        if axiom is None:
            axiom = lhs

    assert axiom is not None
    nonterminals = frozenset(productions)
    terminals = frozenset(
        sym.text
        for alts in productions.values()
        for prod in alts
        for sym in prod.symbols
        if sym.is_terminal
    )
    return Grammar(
        nonterminals=nonterminals,
        terminals=terminals,
        axiom=axiom,
        productions=productions,
    )
