"""Bounded random generators for charts, polynomials, operators and pairs.

All generators draw from a caller-supplied random.Random so that every
verification suite is reproducible from its seed.  The default bounds are
desk-scale: charts up to 2x2, orders up to 3, coefficients with numerator
and denominator up to 9, at most 4 terms per polynomial.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .lbundle import LDerivation, LPair
from .diffop import DiffOp
from .multivec import PolyVectorField, Section, SectionRole, SymMultivector
from .symcore import (
    EMPTY_MI,
    Chart,
    MultiIndex,
    Poly,
    Space,
    Var,
    VarKind,
    fiber_kind,
)


@dataclass(frozen=True)
class Bounds:
    n_max: int = 2
    m_max: int = 2
    order_max: int = 3
    coeff_max: int = 9
    terms_max: int = 4
    exp_max: int = 2

    @classmethod
    def parse(cls, text: str) -> "Bounds":
        n, m, q = (int(part) for part in text.split(","))
        return cls(n_max=n, m_max=m, order_max=q)


def rand_fraction(rng: random.Random, bounds: Bounds, nonzero=False) -> Fraction:
    numer = rng.randint(-bounds.coeff_max, bounds.coeff_max)
    while nonzero and numer == 0:
        numer = rng.randint(-bounds.coeff_max, bounds.coeff_max)
    return Fraction(numer, rng.randint(1, bounds.coeff_max))


def rand_chart(rng: random.Random, bounds: Bounds) -> Chart:
    return Chart(rng.randint(1, bounds.n_max), rng.randint(1, bounds.m_max))


def rand_poly(
    rng: random.Random,
    chart: Chart,
    space: Space,
    bounds: Bounds,
    base_only=False,
    fiber_degree=None,
) -> Poly:
    """Random polynomial; `fiber_degree` forces every monomial's degree in
    the fiber-type variables."""
    fk = fiber_kind(space)
    terms = {}
    for _ in range(rng.randint(1, bounds.terms_max)):
        mono = []
        for v in chart.vars_of(VarKind.BASE):
            e = rng.randint(0, bounds.exp_max)
            if e:
                mono.append((v, e))
        if not base_only:
            if fiber_degree is None:
                for v in chart.vars_of(fk):
                    e = rng.randint(0, bounds.exp_max)
                    if e:
                        mono.append((v, e))
            elif fiber_degree > 0:
                exps = {}
                for _ in range(fiber_degree):
                    a = rng.randint(1, chart.fiber_rank)
                    exps[a] = exps.get(a, 0) + 1
                mono.extend((Var(fk, a), e) for a, e in exps.items())
        coeff = rand_fraction(rng, bounds, nonzero=True)
        key = tuple(sorted(mono))
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return Poly(chart, space, terms)


def rand_base_multi_index(rng, chart, length) -> MultiIndex:
    return MultiIndex(rng.randint(1, chart.base_dim) for _ in range(length))


def rand_fiber_multi_index(rng, chart, length) -> MultiIndex:
    return MultiIndex(rng.randint(1, chart.fiber_rank) for _ in range(length))


def rand_diffop(
    rng: random.Random,
    chart: Chart,
    space: Space,
    bounds: Bounds,
    max_keys=3,
    order=None,
) -> DiffOp:
    terms = {}
    top = bounds.order_max if order is None else order
    for _ in range(rng.randint(1, max_keys)):
        total = rng.randint(0, top)
        nb = rng.randint(0, total)
        key = (
            rand_base_multi_index(rng, chart, nb),
            rand_fiber_multi_index(rng, chart, total - nb),
        )
        coeff = rand_poly(rng, chart, space, bounds)
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff
    return DiffOp(chart, space, terms)


def rand_core_op(rng, chart, bounds, q: int) -> DiffOp:
    """Core operator of order exactly q (nonzero)."""
    while True:
        terms = {}
        for _ in range(rng.randint(1, 2)):
            key = (EMPTY_MI, rand_fiber_multi_index(rng, chart, q))
            coeff = rand_poly(rng, chart, Space.E, bounds, base_only=True)
            if key in terms:
                terms[key] = terms[key] + coeff
            else:
                terms[key] = coeff
        op = DiffOp(chart, Space.E, terms)
        if not op.is_zero():
            return op


def rand_fwl_op(rng, chart, bounds, q: int) -> DiffOp:
    """Operator in the order-q FWL normal form (possibly with zero parts)."""
    terms = {}

    def add(key, coeff):
        if coeff.is_zero():
            return
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff

    for _ in range(rng.randint(0, 2)):
        if q >= 1:
            key = (
                rand_base_multi_index(rng, chart, 1),
                rand_fiber_multi_index(rng, chart, q - 1),
            )
            add(key, rand_poly(rng, chart, Space.E, bounds, base_only=True))
    for _ in range(rng.randint(0, 2)):
        key = (EMPTY_MI, rand_fiber_multi_index(rng, chart, q))
        add(key, rand_poly(rng, chart, Space.E, bounds, fiber_degree=1))
    for _ in range(rng.randint(0, 2)):
        if q >= 1:
            key = (EMPTY_MI, rand_fiber_multi_index(rng, chart, q - 1))
            add(key, rand_poly(rng, chart, Space.E, bounds, base_only=True))
    return DiffOp(chart, Space.E, terms)


def rand_multivector(rng, chart, space, bounds, q: int, max_keys=2) -> SymMultivector:
    terms = {}
    for _ in range(rng.randint(1, max_keys)):
        nb = rng.randint(0, q)
        key = (
            rand_base_multi_index(rng, chart, nb),
            rand_fiber_multi_index(rng, chart, q - nb),
        )
        coeff = rand_poly(rng, chart, space, bounds)
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff
    return SymMultivector(chart, space, q, terms)


def rand_fwl_multivector(rng, chart, bounds, q: int) -> SymMultivector:
    op = rand_fwl_op(rng, chart, bounds, q)
    return SymMultivector(chart, Space.E, q, op.top_table(q))


def rand_core_multivector(rng, chart, bounds, q: int) -> SymMultivector:
    op = rand_core_op(rng, chart, bounds, q)
    return SymMultivector(chart, Space.E, q, dict(op.terms))


def rand_section(rng, chart, bounds, role=SectionRole.OF_ESTAR) -> Section:
    comps = tuple(
        rand_poly(rng, chart, Space.E, bounds, base_only=True)
        for _ in range(chart.fiber_rank)
    )
    return Section(role, chart, comps)


def rand_fwl_pair(rng, chart, bounds, q: int) -> LPair:
    p = rand_fwl_multivector(rng, chart, bounds, q)
    rho_terms = {}
    for _ in range(rng.randint(0, 2)):
        key = (EMPTY_MI, rand_fiber_multi_index(rng, chart, q - 1))
        coeff = rand_poly(rng, chart, Space.E, bounds, base_only=True)
        if key in rho_terms:
            rho_terms[key] = rho_terms[key] + coeff
        else:
            rho_terms[key] = coeff
    rho = SymMultivector(chart, Space.E, q - 1, rho_terms)
    return LPair(p, rho)


def rand_homogeneous_field(rng, chart, bounds, degree: int) -> PolyVectorField:
    base = tuple(
        rand_poly(rng, chart, Space.ESTAR, bounds, fiber_degree=degree)
        for _ in range(chart.base_dim)
    )
    dual = tuple(
        rand_poly(rng, chart, Space.ESTAR, bounds, fiber_degree=degree + 1)
        for _ in range(chart.fiber_rank)
    )
    return PolyVectorField(chart, base, dual)


def rand_homogeneous_lderivation(rng, chart, bounds, degree: int) -> LDerivation:
    mult = rand_poly(rng, chart, Space.ESTAR, bounds, fiber_degree=degree)
    return LDerivation(rand_homogeneous_field(rng, chart, bounds, degree), mult)


def rand_linearizable_function(rng, chart, bounds) -> Poly:
    """Ambient function vanishing on the submanifold."""
    p = rand_poly(rng, chart, Space.AMBIENT, bounds)
    return p - p.restrict_fiber_zero()


def rand_second_order_function(rng, chart, bounds) -> Poly:
    """Ambient function vanishing to second transverse order."""
    fk = fiber_kind(Space.AMBIENT)
    p = rand_poly(rng, chart, Space.AMBIENT, bounds)
    kept = {
        mono: coeff
        for mono, coeff in p.terms.items()
        if sum(e for v, e in mono if v.kind is fk) >= 2
    }
    return Poly(chart, Space.AMBIENT, kept)


def rand_linearizable_multivector(rng, chart, bounds, q: int) -> SymMultivector:
    """Ambient multivector whose pure-fiber coefficients vanish at u = 0."""
    terms = {}
    for _ in range(rng.randint(1, 2)):
        nb = rng.randint(0, q)
        key = (
            rand_base_multi_index(rng, chart, nb),
            rand_fiber_multi_index(rng, chart, q - nb),
        )
        coeff = rand_poly(rng, chart, Space.AMBIENT, bounds)
        if nb == 0:
            coeff = coeff - coeff.restrict_fiber_zero()
        if coeff.is_zero():
            continue
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff
    return SymMultivector(chart, Space.AMBIENT, q, terms)


def rand_order_q_linearizable_op(rng, chart, bounds, q: int) -> DiffOp:
    """Ambient operator of order <= q passing the order-q test."""
    top = rand_linearizable_multivector(rng, chart, bounds, q)
    terms = dict(top.terms)
    for _ in range(rng.randint(0, 2)):
        total = rng.randint(0, q - 1) if q > 0 else 0
        nb = rng.randint(0, total)
        key = (
            rand_base_multi_index(rng, chart, nb),
            rand_fiber_multi_index(rng, chart, total - nb),
        )
        coeff = rand_poly(rng, chart, Space.AMBIENT, bounds)
        if coeff.is_zero():
            continue
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff
    return DiffOp(chart, Space.AMBIENT, terms)


def rand_linear_field_op(rng, chart, bounds) -> DiffOp:
    """A fiber-wise linear vector field as a first order operator."""
    terms = {}
    for i in range(1, chart.base_dim + 1):
        coeff = rand_poly(rng, chart, Space.E, bounds, base_only=True)
        if not coeff.is_zero():
            terms[(MultiIndex([i]), EMPTY_MI)] = coeff
    for a in range(1, chart.fiber_rank + 1):
        coeff = rand_poly(rng, chart, Space.E, bounds, fiber_degree=1)
        if not coeff.is_zero():
            key = (EMPTY_MI, MultiIndex([a]))
            terms[key] = terms.get(key, Poly.zero(chart, Space.E)) + coeff
    return DiffOp(chart, Space.E, terms)


def rand_gamma(rng, chart, bounds) -> dict:
    """Symmetric connection coefficient table on a square chart."""
    n = chart.base_dim
    table = {}
    for k in range(1, n + 1):
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                if rng.random() < 0.5:
                    continue
                coeff = rand_poly(rng, chart, Space.E, bounds, base_only=True)
                table[(k, i, j)] = coeff
                table[(k, j, i)] = coeff
    return table
