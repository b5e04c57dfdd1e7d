"""Exact sparse polynomial arithmetic over the rationals, in tagged variables.

A polynomial is a dictionary mapping monomials to nonzero Fractions.  A
monomial is a tuple of (Var, exponent) pairs sorted by variable, exponents
>= 1; the empty tuple is the constant monomial.  The zero polynomial stores
no terms.  This exact representation makes every identity test in the
package a literal dictionary comparison.

Variables are tagged by kind: base coordinates x1..xn, fiber coordinates
u1..um on the total space (or transverse coordinates on an ambient chart),
and dual-fiber coordinates v1..vm on the dual total space.  Which kinds a
polynomial may contain is decided by its `space` tag:

  E       base + fiber        (total space of the bundle)
  Estar   base + dual fiber   (total space of the dual bundle)
  Ambient base + fiber        (chart around a submanifold {u=0})

Multi-indices are words modulo letter permutations, stored as sorted
tuples; they index iterated partial derivatives everywhere downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from math import comb, factorial

from .errors import (
    ChartMismatch,
    IndexOutOfRange,
    PolySyntaxError,
    SpaceMismatch,
    UnknownVariable,
)

Rational = Fraction  # always lowest terms, positive denominator


class VarKind(IntEnum):
    BASE = 0
    FIBER = 1
    DUAL_FIBER = 2


_KIND_LETTER = {VarKind.BASE: "x", VarKind.FIBER: "u", VarKind.DUAL_FIBER: "v"}
_LETTER_KIND = {v: k for k, v in _KIND_LETTER.items()}


@dataclass(frozen=True, order=True)
class Var:
    kind: VarKind
    index: int  # 1-based

    def __str__(self):
        return f"{_KIND_LETTER[self.kind]}{self.index}"


def base_var(i: int) -> Var:
    return Var(VarKind.BASE, i)


def fiber_var(a: int) -> Var:
    return Var(VarKind.FIBER, a)


def dual_var(a: int) -> Var:
    return Var(VarKind.DUAL_FIBER, a)


class Space(Enum):
    E = "E"
    ESTAR = "Estar"
    AMBIENT = "Ambient"

    @classmethod
    def from_name(cls, name: str) -> "Space":
        for sp in cls:
            if sp.value == name:
                return sp
        raise SpaceMismatch(f"unknown space {name!r}")


# Variable kinds admitted on each space.  The fiber-type kind is the one
# whose exponents define the fiber degree used by all grading logic.
_ALLOWED = {
    Space.E: frozenset({VarKind.BASE, VarKind.FIBER}),
    Space.ESTAR: frozenset({VarKind.BASE, VarKind.DUAL_FIBER}),
    Space.AMBIENT: frozenset({VarKind.BASE, VarKind.FIBER}),
}

_FIBER_KIND = {
    Space.E: VarKind.FIBER,
    Space.ESTAR: VarKind.DUAL_FIBER,
    Space.AMBIENT: VarKind.FIBER,
}


def fiber_kind(space: Space) -> VarKind:
    return _FIBER_KIND[space]


@dataclass(frozen=True)
class Chart:
    base_dim: int
    fiber_rank: int

    def __post_init__(self):
        if self.base_dim < 1 or self.fiber_rank < 1:
            raise ChartMismatch("chart dimensions must be >= 1")

    def check_var(self, v: Var, space: Space):
        if v.kind not in _ALLOWED[space]:
            raise UnknownVariable(f"variable {v} not allowed on space {space.value}")
        bound = self.base_dim if v.kind is VarKind.BASE else self.fiber_rank
        if not 1 <= v.index <= bound:
            raise IndexOutOfRange(f"variable {v} out of range for chart {self}")

    def vars_of(self, kind: VarKind):
        bound = self.base_dim if kind is VarKind.BASE else self.fiber_rank
        return [Var(kind, i) for i in range(1, bound + 1)]


class MultiIndex:
    """A word in positive integers modulo letter permutations.

    Stored as a sorted tuple; two multi-indices are equal iff the sorted
    tuples are.  Concatenation is the commutative monoid operation with
    the empty multi-index as unit.
    """

    __slots__ = ("entries",)

    def __init__(self, entries=()):
        object.__setattr__(self, "entries", tuple(sorted(entries)))

    def __setattr__(self, *a):
        raise AttributeError("MultiIndex is immutable")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __lt__(self, other):
        return (len(self), self.entries) < (len(other), other.entries)

    def __repr__(self):
        return f"MultiIndex({list(self.entries)})"

    def multiplicity(self, letter: int) -> int:
        return self.entries.count(letter)

    def multiplicities(self) -> dict:
        out = {}
        for letter in self.entries:
            out[letter] = out.get(letter, 0) + 1
        return out

    def factorial(self) -> int:
        """Product of the factorials of the letter multiplicities."""
        out = 1
        for mult in self.multiplicities().values():
            out *= factorial(mult)
        return out

    def concat(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(self.entries + other.entries)

    def remove(self, letter: int) -> "MultiIndex":
        entries = list(self.entries)
        entries.remove(letter)
        return MultiIndex(entries)

    def difference(self, other: "MultiIndex") -> "MultiIndex":
        entries = list(self.entries)
        for letter in other:
            entries.remove(letter)
        return MultiIndex(entries)

    def sub_multisets(self):
        """Yield (S, multiset binomial of self over S) for all S <= self."""
        items = sorted(self.multiplicities().items())
        letters = [letter for letter, _ in items]
        ranges = [range(mult + 1) for _, mult in items]
        for picks in itertools.product(*ranges):
            coeff = 1
            chosen = []
            for letter, mult, k in zip(letters, (m for _, m in items), picks):
                coeff *= comb(mult, k)
                chosen.extend([letter] * k)
            yield MultiIndex(chosen), coeff


EMPTY_MI = MultiIndex()


def all_multi_indices(alphabet_size: int, length: int):
    """All sorted words of the given length over 1..alphabet_size."""
    for combo in itertools.combinations_with_replacement(
        range(1, alphabet_size + 1), length
    ):
        yield MultiIndex(combo)


def unshuffles(k: int, h: int):
    """(k, h)-unshuffles of 0..k+h-1 as (first block, second block) pairs.

    Permutations increasing on the first k and on the last h positions,
    i.e. exactly the ways to split k+h slots into an ordered k-subset and
    its ordered complement.
    """
    if k < 0 or h < 0:
        return
    positions = range(k + h)
    for first in itertools.combinations(positions, k):
        chosen = set(first)
        second = tuple(p for p in positions if p not in chosen)
        yield first, second


Monomial = tuple  # tuple[(Var, int), ...] sorted by Var, exponents >= 1


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    exps = dict(m1)
    for v, e in m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _mono_fiber_degree(m: Monomial, kind: VarKind) -> int:
    return sum(e for v, e in m if v.kind is kind)


class Poly:
    """Immutable multivariate polynomial over Q on a tagged chart/space."""

    __slots__ = ("chart", "space", "terms")

    def __init__(self, chart: Chart, space: Space, terms=None):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "space", space)
        canon = {}
        for mono, coeff in (terms or {}).items():
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            mono = tuple(sorted(mono))
            for v, e in mono:
                if e < 1:
                    raise ValueError("monomial exponents must be >= 1")
                chart.check_var(v, space)
            canon[mono] = coeff
        object.__setattr__(self, "terms", canon)

    def __setattr__(self, *a):
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def _raw(cls, chart, space, terms):
        """Bypass validation for terms already in canonical form (internal)."""
        self = object.__new__(cls)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "terms", terms)
        return self

    @classmethod
    def zero(cls, chart, space):
        return cls(chart, space, {})

    @classmethod
    def const(cls, chart, space, value):
        return cls(chart, space, {(): Fraction(value)})

    @classmethod
    def var(cls, chart, space, v: Var):
        return cls(chart, space, {((v, 1),): Fraction(1)})

    def _check_compatible(self, other: "Poly"):
        if self.chart != other.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")
        if self.space != other.space:
            raise SpaceMismatch(f"{self.space.value} vs {other.space.value}")

    # -- ring structure ----------------------------------------------------

    def __add__(self, other):
        self._check_compatible(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            acc = terms.get(mono)
            total = coeff if acc is None else acc + coeff
            if total:
                terms[mono] = total
            elif acc is not None:
                del terms[mono]
        return Poly._raw(self.chart, self.space, terms)

    def __sub__(self, other):
        self._check_compatible(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            acc = terms.get(mono)
            total = -coeff if acc is None else acc - coeff
            if total:
                terms[mono] = total
            elif acc is not None:
                del terms[mono]
        return Poly._raw(self.chart, self.space, terms)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check_compatible(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _mono_mul(m1, m2)
                acc = terms.get(mono)
                total = c1 * c2 if acc is None else acc + c1 * c2
                if total:
                    terms[mono] = total
                elif acc is not None:
                    del terms[mono]
        return Poly._raw(self.chart, self.space, terms)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly._raw(self.chart, self.space, {})
        return Poly._raw(
            self.chart, self.space, {m: c * v for m, v in self.terms.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.chart == other.chart
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart, self.space, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return f"Poly({poly_to_str(self)!r}, space={self.space.value})"

    def is_zero(self) -> bool:
        return not self.terms

    # -- calculus ----------------------------------------------------------

    def partial(self, v: Var) -> "Poly":
        """Exact formal partial derivative with respect to v."""
        if v.kind not in _ALLOWED[self.space]:
            raise SpaceMismatch(
                f"cannot differentiate by {v} on space {self.space.value}"
            )
        self.chart.check_var(v, self.space)
        terms = {}
        for mono, coeff in self.terms.items():
            exps = dict(mono)
            e = exps.get(v, 0)
            if e == 0:
                continue
            if e == 1:
                del exps[v]
            else:
                exps[v] = e - 1
            new = tuple(sorted(exps.items()))
            terms[new] = terms.get(new, Fraction(0)) + coeff * e
        return Poly._raw(self.chart, self.space, terms)

    def partial_multi(self, mi: MultiIndex, kind: VarKind) -> "Poly":
        out = self
        for letter in mi:
            out = out.partial(Var(kind, letter))
        return out

    def fiber_degree_decompose(self) -> dict:
        """Split into fiber-degree homogeneous parts; zero maps to {}."""
        kind = fiber_kind(self.space)
        parts = {}
        for mono, coeff in self.terms.items():
            deg = _mono_fiber_degree(mono, kind)
            parts.setdefault(deg, {})[mono] = coeff
        return {
            deg: Poly._raw(self.chart, self.space, terms)
            for deg, terms in sorted(parts.items())
        }

    def fiber_degree(self):
        """Degree if homogeneous in fiber degree, else None; zero gives None."""
        degs = {
            _mono_fiber_degree(m, fiber_kind(self.space)) for m in self.terms
        }
        if len(degs) == 1:
            return degs.pop()
        return None

    def restrict_fiber_zero(self) -> "Poly":
        """Set all fiber variables to zero (evaluation on the base)."""
        if self.space is Space.ESTAR:
            raise SpaceMismatch("restriction to the zero section needs E or Ambient")
        kind = fiber_kind(self.space)
        terms = {
            mono: coeff
            for mono, coeff in self.terms.items()
            if _mono_fiber_degree(mono, kind) == 0
        }
        return Poly._raw(self.chart, self.space, terms)

    def scale_fiber(self, t) -> "Poly":
        """Substitute u -> t*u (the fiber-rescaling pull-back on functions)."""
        kind = fiber_kind(self.space)
        t = Fraction(t)
        terms = {}
        for mono, coeff in self.terms.items():
            scaled = coeff * t ** _mono_fiber_degree(mono, kind)
            if scaled:
                terms[mono] = scaled
        return Poly._raw(self.chart, self.space, terms)

    def is_base_only(self) -> bool:
        return all(
            v.kind is VarKind.BASE for mono in self.terms for v, _ in mono
        )

    def with_space(self, space: Space) -> "Poly":
        """Re-tag onto another space; every variable must stay legal."""
        return Poly(self.chart, space, dict(self.terms))

    def substitute(self, mapping: dict) -> "Poly":
        """Replace variables by polynomials (all on the result's chart/space)."""
        result = None
        for mono, coeff in self.terms.items():
            term = None
            for v, e in mono:
                factor = mapping.get(v)
                if factor is None:
                    raise KeyError(f"no substitution for {v}")
                piece = factor
                for _ in range(e - 1):
                    piece = piece * factor
                term = piece if term is None else term * piece
            if term is None:
                some = next(iter(mapping.values()))
                term = Poly.const(some.chart, some.space, 1)
            term = term.scale(coeff)
            result = term if result is None else result + term
        if result is None:
            some = next(iter(mapping.values()))
            return Poly.zero(some.chart, some.space)
        return result


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Textual format.  Grammar (whitespace ignored between tokens):
#
#   expr     := ['-'] term { ('+'|'-') term }
#   term     := factor { '*' factor }
#   factor   := rational | var [ '^' nat ]
#   var      := ('x'|'u'|'v') nat          nat >= 1
#   rational := int [ '/' nat ]            denominator > 0
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, chart: Chart, space: Space):
        self.text = text
        self.pos = 0
        self.chart = chart
        self.space = space

    def error(self, message):
        raise PolySyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def digits(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected digits")
        return int(self.text[start : self.pos])

    def nat(self) -> int:
        start = self.pos
        value = self.digits()
        if value < 1:
            self.pos = start
            self.error("expected a positive integer")
        return value

    def parse(self) -> Poly:
        poly = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing input")
        return poly

    def expr(self) -> Poly:
        negate = self.take("-")
        poly = self.term()
        if negate:
            poly = -poly
        while True:
            if self.take("+"):
                poly = poly + self.term()
            elif self.take("-"):
                poly = poly - self.term()
            else:
                return poly

    def term(self) -> Poly:
        poly = self.factor()
        while self.take("*"):
            poly = poly * self.factor()
        return poly

    def factor(self) -> Poly:
        ch = self.peek()
        if ch in _LETTER_KIND:
            self.pos += 1
            kind = _LETTER_KIND[ch]
            index = self.nat()
            v = Var(kind, index)
            self.chart.check_var(v, self.space)
            exp = 1
            if self.take("^"):
                exp = self.nat()
            return Poly(self.chart, self.space, {((v, exp),): Fraction(1)})
        if ch.isdigit() or ch == "-":
            negate = self.take("-")
            numer = self.digits()
            denom = 1
            if self.take("/"):
                denom = self.nat()
            value = Fraction(-numer if negate else numer, denom)
            return Poly.const(self.chart, self.space, value)
        self.error("expected a rational or a variable")


def parse_poly(text: str, chart: Chart, space: Space) -> Poly:
    return _Parser(text, chart, space).parse()


def _mono_to_str(mono: Monomial) -> str:
    return "*".join(
        str(v) if e == 1 else f"{v}^{e}" for v, e in mono
    )


def poly_to_str(p: Poly) -> str:
    """Canonical rendering; parse(poly_to_str(p)) == p."""
    if not p.terms:
        return "0"
    pieces = []
    for mono in sorted(p.terms):
        coeff = p.terms[mono]
        body = _mono_to_str(mono)
        mag = abs(coeff)
        if not body:
            text = str(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{mag}*{body}"
        pieces.append((coeff < 0, text))
    first_neg, first = pieces[0]
    out = ("-" if first_neg else "") + first
    for neg, text in pieces[1:]:
        out += (" - " if neg else " + ") + text
    return out


print_poly = poly_to_str
