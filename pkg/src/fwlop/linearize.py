"""Linearization around the submanifold {u = 0} of an ambient chart.

Ambient data lives on the `Ambient` space tag of a chart (n, m): the base
variables are coordinates along the submanifold, the fiber variables are
the transverse coordinates, and the submanifold is their zero locus.  The
normal bundle reuses the same chart with the `E` tag; the fiber coordinate
u_a on E is the linearization of the transverse coordinate u_a itself.

A function vanishing on the submanifold linearizes to its first-order
transverse part.  A symmetric multivector is linearizable when its
pure-fiber top coefficients vanish on the submanifold (the chart form of
membership in the ideal generated by tangent vector fields); its
linearization keeps one-base-derivative terms restricted to u = 0 and
linearizes the pure-fiber coefficients.  An operator of order at most q
linearizes through its level-q table plus the restricted nested-commutator
values on the transverse coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .diffop import DiffOp, nested_commutator
from .errors import NotLinearizable, OrderExceeded, SpaceMismatch
from .multivec import SymMultivector
from .symcore import (
    EMPTY_MI,
    Chart,
    Poly,
    Space,
    Var,
    VarKind,
    all_multi_indices,
)


@dataclass(frozen=True)
class AmbientContext:
    """Chart convention tying an ambient chart to its normal bundle."""

    chart: Chart

    @property
    def ambient_space(self):
        return Space.AMBIENT

    @property
    def bundle_space(self):
        return Space.E


def linearize_function(f: Poly) -> Poly:
    """First-order transverse part of a function vanishing on {u = 0}."""
    if f.space is not Space.AMBIENT:
        raise SpaceMismatch("function linearization expects ambient data")
    if not f.restrict_fiber_zero().is_zero():
        raise NotLinearizable("function does not vanish on the submanifold")
    chart = f.chart
    out = Poly.zero(chart, Space.E)
    for a in range(1, chart.fiber_rank + 1):
        slope = f.partial(Var(VarKind.FIBER, a)).restrict_fiber_zero()
        if not slope.is_zero():
            out = out + slope.with_space(Space.E) * Poly.var(
                chart, Space.E, Var(VarKind.FIBER, a)
            )
    return out


def is_linearizable_multivector(p: SymMultivector) -> bool:
    """True iff every pure-fiber coefficient vanishes on the submanifold."""
    if p.space is not Space.AMBIENT:
        raise SpaceMismatch("linearizability is asked of ambient multivectors")
    return all(
        len(mi_b) > 0 or coeff.restrict_fiber_zero().is_zero()
        for (mi_b, mi_f), coeff in p.terms.items()
    )


def linearize_multivector(p: SymMultivector) -> SymMultivector:
    """The unique FWL multivector matching p to first transverse order.

    Terms with one base derivative keep their coefficient restricted to
    {u = 0}; pure-fiber terms linearize their coefficient; terms with two
    or more base derivatives drop.
    """
    if not is_linearizable_multivector(p):
        raise NotLinearizable("a pure-fiber top coefficient survives at u = 0")
    terms = {}

    def add(key, coeff):
        if coeff.is_zero():
            return
        terms[key] = terms.get(key, Poly.zero(p.chart, Space.E)) + coeff

    for (mi_b, mi_f), coeff in p.terms.items():
        if len(mi_b) == 1:
            add((mi_b, mi_f), coeff.restrict_fiber_zero().with_space(Space.E))
        elif len(mi_b) == 0:
            add((mi_b, mi_f), linearize_function(coeff))
    return SymMultivector(p.chart, Space.E, p.q, terms)


def is_order_q_linearizable(op: DiffOp, q: int) -> bool:
    """Operators of order below q always pass; at order q the level-q
    table must be a linearizable multivector."""
    if op.space is not Space.AMBIENT:
        raise SpaceMismatch("linearizability is asked of ambient operators")
    order = op.order()
    if order is None:
        return True
    if order > q:
        raise OrderExceeded(f"operator has order {order} > {q}")
    if order < q:
        return True
    return is_linearizable_multivector(op.symbol_at(q))


def linearize_do(op: DiffOp, q: int) -> DiffOp:
    """Order-q linearization: FWL operator on the normal bundle.

    The order-q part is the linearized level-q table.  Each order-(q-1)
    pure-fiber coefficient is recovered from the nested commutator with
    the canonical transverse representatives,

        psi_C = [...[op, u_{c_1}], ..., u_{c_{q-1}}](1) restricted to u=0,

    corrected by the same value of the already-built top part and divided
    by C!.  The result is checked to be FWL of order q.
    """
    if not is_order_q_linearizable(op, q):
        raise NotLinearizable(f"operator is not order-{q} linearizable")
    chart = op.chart
    p_lin = linearize_multivector(op.symbol_at(q))
    top = DiffOp(chart, Space.E, dict(p_lin.terms))
    one_ambient = Poly.const(chart, Space.AMBIENT, 1)
    one_bundle = Poly.const(chart, Space.E, 1)

    terms = dict(top.terms)
    for c_idx in all_multi_indices(chart.fiber_rank, q - 1):
        reps = [
            Poly.var(chart, Space.AMBIENT, Var(VarKind.FIBER, c)) for c in c_idx
        ]
        psi = nested_commutator(op, reps).apply(one_ambient).restrict_fiber_zero()
        lifted = [
            Poly.var(chart, Space.E, Var(VarKind.FIBER, c)) for c in c_idx
        ]
        psi_top = nested_commutator(top, lifted).apply(one_bundle)
        coeff = (psi.with_space(Space.E) - psi_top).scale(
            Fraction(1, c_idx.factorial())
        )
        if coeff.is_zero():
            continue
        key = (EMPTY_MI, c_idx)
        terms[key] = terms.get(key, Poly.zero(chart, Space.E)) + coeff

    result = DiffOp(chart, Space.E, terms)
    if not result.is_fwl(q):
        raise AssertionError("linearization failed the FWL postcondition")
    return result
