"""Scalar differential operators with fiber-wise polynomial coefficients.

An operator is a finite table mapping a pair of multi-indices (I over base
coordinates, B over fiber coordinates) to a nonzero polynomial coefficient:

    op = sum over (I, B) of  coeff_{I,B} * d^|I|/dx^I * d^|B|/du^B

On the dual space the B indices refer to d/dv derivatives instead.  The
representation is unique once multi-indices are canonical, so equality is
table equality.  Composition expands derivative-past-coefficient by the
multiset Leibniz rule; the nested-commutator coefficient recovery provides
an independent oracle for the whole representation.

The weight of a homogeneous term is (fiber degree of the coefficient)
minus |B|; it matches the exponent picked up under conjugation by the
fiber rescaling u -> t*u.  Core operators of order q are the weight -q
part, fiber-wise linear (FWL) operators of order q the weight 1-q part.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import (
    ChartMismatch,
    DocumentError,
    SpaceMismatch,
    ZeroOperator,
)
from .symcore import (
    EMPTY_MI,
    Chart,
    MultiIndex,
    Poly,
    Space,
    Var,
    VarKind,
    all_multi_indices,
    fiber_kind,
    parse_poly,
    poly_to_str,
)

GradedWeight = int  # weight of a homogeneous operator under fiber rescaling


class DiffOp:
    """Immutable scalar differential operator on one chart/space."""

    __slots__ = ("chart", "space", "terms")

    def __init__(self, chart: Chart, space: Space, terms=None):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "space", space)
        canon = {}
        for (mi_base, mi_fiber), coeff in (terms or {}).items():
            if coeff.chart != chart:
                raise ChartMismatch("coefficient chart differs from operator chart")
            if coeff.space != space:
                raise SpaceMismatch("coefficient space differs from operator space")
            if coeff.is_zero():
                continue
            for letter in mi_base:
                if not 1 <= letter <= chart.base_dim:
                    raise ChartMismatch(f"base index {letter} out of range")
            for letter in mi_fiber:
                if not 1 <= letter <= chart.fiber_rank:
                    raise ChartMismatch(f"fiber index {letter} out of range")
            canon[(mi_base, mi_fiber)] = coeff
        object.__setattr__(self, "terms", canon)

    def __setattr__(self, *a):
        raise AttributeError("DiffOp is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def _raw(cls, chart, space, terms):
        """Bypass validation for already-canonical term tables (internal)."""
        self = object.__new__(cls)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "terms", terms)
        return self

    @classmethod
    def zero(cls, chart, space):
        return cls(chart, space, {})

    @classmethod
    def identity(cls, chart, space):
        one = Poly.const(chart, space, 1)
        return cls(chart, space, {(EMPTY_MI, EMPTY_MI): one})

    @classmethod
    def mult(cls, p: Poly):
        """Multiplication by p, as an order-zero operator."""
        return cls(p.chart, p.space, {(EMPTY_MI, EMPTY_MI): p})

    @classmethod
    def monomial(cls, coeff: Poly, mi_base: MultiIndex, mi_fiber: MultiIndex):
        return cls(coeff.chart, coeff.space, {(mi_base, mi_fiber): coeff})

    def _check_compatible(self, other: "DiffOp"):
        if self.chart != other.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")
        if self.space != other.space:
            raise SpaceMismatch(f"{self.space.value} vs {other.space.value}")

    # -- linear structure ----------------------------------------------------

    def __add__(self, other):
        self._check_compatible(other)
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            acc = terms.get(key)
            total = coeff if acc is None else acc + coeff
            if total.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = total
        return DiffOp._raw(self.chart, self.space, terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "DiffOp":
        if c == 0:
            return DiffOp._raw(self.chart, self.space, {})
        return DiffOp._raw(
            self.chart, self.space, {k: p.scale(c) for k, p in self.terms.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, DiffOp)
            and self.chart == other.chart
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(
            (self.chart, self.space, tuple(sorted(self.terms.items(), key=_term_key)))
        )

    def __repr__(self):
        if not self.terms:
            return "DiffOp(0)"
        bits = []
        for (mi_b, mi_f), coeff in sorted(self.terms.items(), key=_term_key):
            part = f"({poly_to_str(coeff)})"
            if len(mi_b):
                part += " dx" + str(list(mi_b.entries))
            if len(mi_f):
                part += " du" + str(list(mi_f.entries))
            bits.append(part)
        return "DiffOp(" + " + ".join(bits) + ")"

    def is_zero(self) -> bool:
        return not self.terms

    def order(self):
        """Max |I|+|B| over stored keys; None for the zero operator."""
        if not self.terms:
            return None
        return max(len(i) + len(b) for i, b in self.terms)

    # -- action and composition ---------------------------------------------

    def apply(self, f: Poly) -> Poly:
        if f.chart != self.chart:
            raise ChartMismatch("function chart differs from operator chart")
        if f.space != self.space:
            raise SpaceMismatch("function space differs from operator space")
        fk = fiber_kind(self.space)
        out = Poly.zero(self.chart, self.space)
        for (mi_b, mi_f), coeff in self.terms.items():
            g = f.partial_multi(mi_b, VarKind.BASE).partial_multi(mi_f, fk)
            if not g.is_zero():
                out = out + coeff * g
        return out

    def compose(self, other: "DiffOp") -> "DiffOp":
        """self after other; derivatives expand past coefficients by the
        multiset Leibniz rule with multinomial(J, S) = prod_i C(J[i], S[i])."""
        self._check_compatible(other)
        fk = fiber_kind(self.space)
        terms = {}
        for (i1, b1), c1 in self.terms.items():
            for (i2, b2), c2 in other.terms.items():
                for s_base, n_base in i1.sub_multisets():
                    dc = c2.partial_multi(s_base, VarKind.BASE)
                    if dc.is_zero():
                        continue
                    for s_fib, n_fib in b1.sub_multisets():
                        dcf = dc.partial_multi(s_fib, fk)
                        if dcf.is_zero():
                            continue
                        key = (
                            i1.difference(s_base).concat(i2),
                            b1.difference(s_fib).concat(b2),
                        )
                        piece = (c1 * dcf).scale(n_base * n_fib)
                        acc = terms.get(key)
                        total = piece if acc is None else acc + piece
                        if total.is_zero():
                            terms.pop(key, None)
                        else:
                            terms[key] = total
        return DiffOp._raw(self.chart, self.space, terms)

    def commutator(self, other: "DiffOp") -> "DiffOp":
        out = self.compose(other) - other.compose(self)
        orders = [self.order(), other.order(), out.order()]
        if None not in orders and orders[2] > orders[0] + orders[1] - 1:
            raise AssertionError("commutator order bound q+r-1 violated")
        return out

    # -- grading and classification -------------------------------------------

    def grade_decompose(self) -> dict:
        """Split into weight-homogeneous operators; parts sum to self."""
        if self.space is Space.AMBIENT:
            raise SpaceMismatch("weight grading lives on the bundle spaces")
        parts = {}
        for (mi_b, mi_f), coeff in self.terms.items():
            for deg, piece in coeff.fiber_degree_decompose().items():
                weight = deg - len(mi_f)
                bucket = parts.setdefault(weight, {})
                key = (mi_b, mi_f)
                if key in bucket:
                    bucket[key] = bucket[key] + piece
                else:
                    bucket[key] = piece
        return {
            w: DiffOp._raw(self.chart, self.space, terms)
            for w, terms in sorted(parts.items())
        }

    def weight(self):
        """Weight if homogeneous, else None; zero operator gives None."""
        grades = self.grade_decompose()
        if len(grades) == 1:
            return next(iter(grades))
        return None

    def is_core(self, q: int) -> bool:
        """Nonzero, order q, and every term is d^q/du^B with base coefficient."""
        if self.space is not Space.E:
            raise SpaceMismatch("core classification lives on space E")
        if self.is_zero():
            return False
        by_shape = self.order() == q and all(
            len(mi_b) == 0 and len(mi_f) == q and coeff.is_base_only()
            for (mi_b, mi_f), coeff in self.terms.items()
        )
        by_weight = self.order() == q and self.weight() == -q
        assert by_shape == by_weight
        return by_shape

    def is_core_sum(self) -> bool:
        """Member of the span of core operators of any orders (zero included)."""
        return all(
            len(mi_b) == 0 and coeff.is_base_only()
            for (mi_b, mi_f), coeff in self.terms.items()
        )

    def is_fwl(self, q: int) -> bool:
        """Order at most q and homogeneous of weight 1-q.

        The zero operator passes at every q.  The weight test and the
        normal-form shape test are both computed and asserted equal.
        """
        if self.space is not Space.E:
            raise SpaceMismatch("FWL classification lives on space E")
        if self.is_zero():
            return True
        order = self.order()
        by_weight = order <= q and self.weight() == 1 - q
        by_shape = order <= q and all(
            self._fwl_term_shape(key, part, q)
            for key, coeff in self.terms.items()
            for part in coeff.fiber_degree_decompose().values()
        )
        assert by_weight == by_shape
        return by_weight

    @staticmethod
    def _fwl_term_shape(key, coeff_part, q):
        mi_b, mi_f = key
        deg = coeff_part.fiber_degree()
        if len(mi_b) == 1 and len(mi_f) == q - 1:
            return deg == 0
        if len(mi_b) == 0 and len(mi_f) == q:
            return deg == 1
        if len(mi_b) == 0 and len(mi_f) == q - 1:
            return deg == 0
        return False

    # -- coefficient recovery and symbol ------------------------------------

    def recover_coefficients(self) -> dict:
        """Rebuild the table from nested commutators with the coordinates.

        coeff_{I,B} = [...[op, z_{j1}], ..., z_{jk}](1) / (I! * B!), the
        letters z running over the I and B coordinate functions.  This is
        the independent oracle for the representation; it never reads the
        stored table directly (only through composition).
        """
        order = self.order()
        if order is None:
            return {}
        fk = fiber_kind(self.space)
        one = Poly.const(self.chart, self.space, 1)
        out = {}
        for total in range(order + 1):
            for nb in range(total + 1):
                for mi_b in all_multi_indices(self.chart.base_dim, nb):
                    for mi_f in all_multi_indices(self.chart.fiber_rank, total - nb):
                        op = self
                        for letter in mi_b:
                            z = Poly.var(self.chart, self.space, Var(VarKind.BASE, letter))
                            op = op.commutator(DiffOp.mult(z))
                        for letter in mi_f:
                            z = Poly.var(self.chart, self.space, Var(fk, letter))
                            op = op.commutator(DiffOp.mult(z))
                        value = op.apply(one)
                        if value.is_zero():
                            continue
                        scale = Fraction(1, mi_b.factorial() * mi_f.factorial())
                        out[(mi_b, mi_f)] = value.scale(scale)
        return out

    def top_table(self, q: int) -> dict:
        """Terms of total length exactly q (the level-q table)."""
        return {
            key: coeff
            for key, coeff in self.terms.items()
            if len(key[0]) + len(key[1]) == q
        }

    def symbol(self):
        """Top-order coefficient table, packaged as a symmetric multivector."""
        from .multivec import SymMultivector

        order = self.order()
        if order is None:
            raise ZeroOperator("the zero operator has no symbol")
        return SymMultivector(self.chart, self.space, order, self.top_table(order))

    def symbol_at(self, q: int):
        """Level-q table as a multivector (empty when the order is below q)."""
        from .multivec import SymMultivector

        return SymMultivector(self.chart, self.space, q, self.top_table(q))

    def with_space(self, space: Space) -> "DiffOp":
        return DiffOp(
            space=space,
            chart=self.chart,
            terms={k: c.with_space(space) for k, c in self.terms.items()},
        )


def _term_key(item):
    (mi_b, mi_f), _ = item
    return (len(mi_b) + len(mi_f), mi_b.entries, mi_f.entries)


def nested_commutator(op: DiffOp, factors) -> DiffOp:
    """[...[op, f1], ..., fk] with the f's acting by multiplication."""
    out = op
    for f in factors:
        out = out.commutator(DiffOp.mult(f))
    return out


# ---------------------------------------------------------------------------
# Operator document (UTF-8 JSON, bit-exact round-trip).  dx/du arrays are
# multisets: order irrelevant, duplicates mean multiplicity.  Unknown keys
# are rejected.
# ---------------------------------------------------------------------------


def _require_keys(doc: dict, keys, what: str):
    if not isinstance(doc, dict):
        raise DocumentError(f"{what} must be a JSON object")
    if set(doc) != set(keys):
        raise DocumentError(
            f"{what} must have exactly the keys {sorted(keys)}, got {sorted(doc)}"
        )


def chart_to_doc(chart: Chart) -> dict:
    return {"base_dim": chart.base_dim, "fiber_rank": chart.fiber_rank}


def chart_from_doc(doc) -> Chart:
    _require_keys(doc, ("base_dim", "fiber_rank"), "chart")
    n, m = doc["base_dim"], doc["fiber_rank"]
    if not (isinstance(n, int) and isinstance(m, int)):
        raise DocumentError("chart dimensions must be integers")
    return Chart(n, m)


def _indices_from_doc(entry, what: str) -> MultiIndex:
    if not isinstance(entry, list) or not all(isinstance(i, int) for i in entry):
        raise DocumentError(f"{what} must be a list of integers")
    return MultiIndex(entry)


def diffop_to_doc(op: DiffOp) -> dict:
    terms = []
    for (mi_b, mi_f), coeff in sorted(op.terms.items(), key=_term_key):
        terms.append(
            {
                "coeff": poly_to_str(coeff),
                "dx": list(mi_b.entries),
                "du": list(mi_f.entries),
            }
        )
    return {
        "chart": chart_to_doc(op.chart),
        "space": op.space.value,
        "terms": terms,
    }


def diffop_from_doc(doc) -> DiffOp:
    _require_keys(doc, ("chart", "space", "terms"), "operator document")
    chart = chart_from_doc(doc["chart"])
    if not isinstance(doc["space"], str):
        raise DocumentError("space must be a string")
    space = Space.from_name(doc["space"])
    if not isinstance(doc["terms"], list):
        raise DocumentError("terms must be a list")
    terms = {}
    for entry in doc["terms"]:
        _require_keys(entry, ("coeff", "dx", "du"), "operator term")
        if not isinstance(entry["coeff"], str):
            raise DocumentError("coeff must be a polynomial string")
        coeff = parse_poly(entry["coeff"], chart, space)
        key = (
            _indices_from_doc(entry["dx"], "dx"),
            _indices_from_doc(entry["du"], "du"),
        )
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff
    return DiffOp(chart, space, terms)


def diffop_dumps(op: DiffOp) -> str:
    return json.dumps(diffop_to_doc(op), separators=(", ", ": "))


def diffop_loads(text: str) -> DiffOp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    return diffop_from_doc(doc)
