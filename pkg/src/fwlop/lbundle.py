"""Derivations of bundles in a frame and the operator/derivation bijection.

A derivation of a rank-r bundle is stored in the coordinate frame as a
vector field on the base plus an r x r matrix; duality sends the matrix to
minus its transpose, and the induced action on the top exterior power is
the trace.

A derivation of the pulled-back determinant line bundle over the dual
total space appears in the Vol_u frame as a pair (polynomial vector field,
polynomial multiplication part).  The central construction maps a
fiber-wise linear operator of order q to such a derivation: its level-q
table gives the vector field, and the nested-commutator values

    Psi(phi_1, ..., phi_{q-1}) = [...[op, l_phi_1], ..., l_phi_{q-1}](1)

combined with the trace action of the contracted symbol give the
multiplication part.  Both that construction and an independent closed
coordinate formula are computed on every call and asserted equal.

Rank-1 bundle multivectors are pairs (P, rho) of symmetric multivectors of
orders q and q-1, acting by D(f_1,...,f_{q-1} | g Vol) = (P(f's, g) +
g rho(f's)) Vol; their Poisson-algebra product and bracket are implemented
by the literal unshuffle formulas on evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .diffop import DiffOp, nested_commutator
from .errors import (
    ChartMismatch,
    DocumentError,
    IncompatiblePair,
    NotFWL,
    NotHomogeneous,
    RankMismatch,
    SpaceMismatch,
)
from .multivec import (
    PolyVectorField,
    Section,
    SectionRole,
    SymMultivector,
    core_to_dualpoly,
    fwl_check_multivector,
    hamiltonian_field,
    is_core_multivector,
    multiderivation_D,
    multiderivation_l,
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
    dual_var,
    parse_poly,
    poly_to_str,
    unshuffles,
)


def _base_field_apply(chart: Chart, field, f: Poly) -> Poly:
    """Apply a base vector field (tuple of base-only coefficients) to f."""
    out = Poly.zero(chart, f.space)
    for i, coeff in enumerate(field, start=1):
        out = out + coeff.with_space(f.space) * f.partial(Var(VarKind.BASE, i))
    return out


@dataclass(frozen=True)
class FrameDerivation:
    """Derivation of a rank-r bundle in a fixed frame: symbol + matrix."""

    chart: Chart
    rank: int
    symbol_field: tuple  # base vector field components, length n
    matrix: tuple  # r rows of r base-only polynomials

    def __post_init__(self):
        if len(self.symbol_field) != self.chart.base_dim:
            raise RankMismatch("symbol field needs one component per base dim")
        if len(self.matrix) != self.rank or any(
            len(row) != self.rank for row in self.matrix
        ):
            raise RankMismatch("matrix shape must be rank x rank")
        for p in list(self.symbol_field) + [e for row in self.matrix for e in row]:
            if not p.is_base_only():
                raise SpaceMismatch("frame derivation data must be base-only")

    @classmethod
    def build(cls, chart, rank, symbol_field, matrix):
        return cls(chart, rank, tuple(symbol_field), tuple(tuple(r) for r in matrix))

    def act(self, components) -> tuple:
        """Action on a section given by frame components."""
        if len(components) != self.rank:
            raise RankMismatch("section has the wrong number of components")
        out = []
        for a in range(self.rank):
            val = _base_field_apply(self.chart, self.symbol_field, components[a])
            for b in range(self.rank):
                val = val + self.matrix[a][b].with_space(components[b].space) * components[b]
            out.append(val)
        return tuple(out)

    def dual(self) -> "FrameDerivation":
        """Induced derivation of the dual bundle: same symbol, minus transpose."""
        size = self.rank
        matrix = tuple(
            tuple(-self.matrix[b][a] for b in range(size)) for a in range(size)
        )
        return FrameDerivation(self.chart, size, self.symbol_field, matrix)

    def top_power(self) -> "FrameDerivation":
        """Induced derivation of the top exterior power: matrix becomes trace."""
        trace = self.matrix[0][0]
        for a in range(1, self.rank):
            trace = trace + self.matrix[a][a]
        return FrameDerivation(self.chart, 1, self.symbol_field, ((trace,),))

    def commutator(self, other: "FrameDerivation") -> "FrameDerivation":
        if self.chart != other.chart or self.rank != other.rank:
            raise ChartMismatch("frame derivations are not composable")
        symbol = tuple(
            _base_field_apply(self.chart, self.symbol_field, c2)
            - _base_field_apply(self.chart, other.symbol_field, c1)
            for c1, c2 in zip(self.symbol_field, other.symbol_field)
        )
        size = self.rank
        matrix = []
        for a in range(size):
            row = []
            for b in range(size):
                entry = _base_field_apply(
                    self.chart, self.symbol_field, other.matrix[a][b]
                ) - _base_field_apply(self.chart, other.symbol_field, self.matrix[a][b])
                for k in range(size):
                    entry = entry + self.matrix[a][k] * other.matrix[k][b]
                    entry = entry - other.matrix[a][k] * self.matrix[k][b]
                row.append(entry)
            matrix.append(tuple(row))
        return FrameDerivation(self.chart, size, symbol, tuple(matrix))


def dual_derivation(d: FrameDerivation) -> FrameDerivation:
    return d.dual()


def top_power_action(d: FrameDerivation) -> FrameDerivation:
    return d.top_power()


class LDerivation:
    """Derivation of the pulled-back determinant line bundle, Vol_u frame.

    Acts on a section f(x, v) Vol_u as (W(f) + c f) Vol_u.
    """

    __slots__ = ("field", "mult")

    def __init__(self, field: PolyVectorField, mult: Poly):
        if mult.chart != field.chart:
            raise ChartMismatch("field and multiplication part on different charts")
        if mult.space is not Space.ESTAR:
            raise SpaceMismatch("multiplication part lives on the dual space")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "mult", mult)

    def __setattr__(self, *a):
        raise AttributeError("LDerivation is immutable")

    @property
    def chart(self):
        return self.field.chart

    def __eq__(self, other):
        return (
            isinstance(other, LDerivation)
            and self.field == other.field
            and self.mult == other.mult
        )

    def __hash__(self):
        return hash((self.field, self.mult))

    def __repr__(self):
        return f"LDerivation({self.field!r}, mult={poly_to_str(self.mult)})"

    def act(self, f: Poly) -> Poly:
        """Coefficient of the action on f Vol_u."""
        return self.field.apply(f) + self.mult * f

    def __add__(self, other):
        return LDerivation(self.field + other.field, self.mult + other.mult)

    def __sub__(self, other):
        return LDerivation(self.field - other.field, self.mult - other.mult)

    def scale(self, c) -> "LDerivation":
        return LDerivation(self.field.scale(c), self.mult.scale(c))

    def scale_by_poly(self, f: Poly) -> "LDerivation":
        """Module structure over polynomials on the dual space."""
        field = PolyVectorField(
            self.chart,
            tuple(f * c for c in self.field.base_coeffs),
            tuple(f * c for c in self.field.dual_coeffs),
        )
        return LDerivation(field, f * self.mult)

    def is_homogeneous(self, d: int) -> bool:
        if not self.field.is_homogeneous(d):
            return False
        return self.mult.is_zero() or set(self.mult.fiber_degree_decompose()) == {d}


def lderiv_commutator(d1: LDerivation, d2: LDerivation) -> LDerivation:
    if d1.chart != d2.chart:
        raise ChartMismatch("derivations on different charts")
    field = d1.field.commutator(d2.field)
    mult = d1.field.apply(d2.mult) - d2.field.apply(d1.mult)
    return LDerivation(field, mult)


# ---------------------------------------------------------------------------
# Rank-1 bundle multivectors as (P, rho) pairs.
# ---------------------------------------------------------------------------


class LPair:
    """Pair of multivectors of orders q and q-1 acting on the line bundle.

    The fiber-wise linear pairs are those with P FWL and rho a core
    (q-1)-multivector; for them `phi_table` exposes, per sorted fiber
    multi-index C, the frame data (base vector field from the symbol of P,
    base multiplication part) of the contracted bundle map.
    """

    __slots__ = ("p", "rho")

    def __init__(self, p: SymMultivector, rho: SymMultivector):
        if p.chart != rho.chart:
            raise ChartMismatch("pair components on different charts")
        if p.space is not Space.E or rho.space is not Space.E:
            raise SpaceMismatch("pairs live over the total space")
        if rho.q != p.q - 1:
            raise IncompatiblePair("rho must have order q-1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "rho", rho)

    def __setattr__(self, *a):
        raise AttributeError("LPair is immutable")

    @property
    def chart(self):
        return self.p.chart

    @property
    def q(self):
        return self.p.q

    def __eq__(self, other):
        return isinstance(other, LPair) and self.p == other.p and self.rho == other.rho

    def __repr__(self):
        return f"LPair(P={self.p!r}, rho={self.rho!r})"

    def is_fwl_pair(self) -> bool:
        return fwl_check_multivector(self.p) and is_core_multivector(self.rho)

    @classmethod
    def from_phi_table(cls, p: SymMultivector, phi_table) -> "LPair":
        """Build from frame data {C: (vector field components, mult part)}.

        The vector-field part of each entry must agree with the symbol of P
        contracted with the dual basis sections of C.
        """
        if not fwl_check_multivector(p):
            raise NotFWL("pair needs a FWL multivector part")
        chart = p.chart
        rho_terms = {}
        for c_idx, (field, c_mult) in phi_table.items():
            expected = _symbol_field_on_basis(p, c_idx)
            if tuple(field) != expected:
                raise IncompatiblePair(
                    f"vector field at {c_idx!r} differs from the symbol of P"
                )
            if not c_mult.is_base_only():
                raise IncompatiblePair("multiplication parts must be base-only")
            if not c_mult.is_zero():
                scale = Fraction(1, c_idx.factorial())
                rho_terms[(EMPTY_MI, c_idx)] = c_mult.with_space(Space.E).scale(scale)
        rho = SymMultivector(chart, Space.E, p.q - 1, rho_terms)
        return cls(p, rho)

    @property
    def phi_table(self) -> dict:
        """Frame data per sorted fiber multi-index (FWL pairs only)."""
        if not self.is_fwl_pair():
            raise IncompatiblePair("phi_table exists for FWL pairs only")
        chart = self.chart
        out = {}
        for c_idx in all_multi_indices(chart.fiber_rank, self.q - 1):
            field = _symbol_field_on_basis(self.p, c_idx)
            coeff = self.rho.terms.get((EMPTY_MI, c_idx))
            mult = (
                Poly.zero(chart, Space.E)
                if coeff is None
                else coeff.scale(c_idx.factorial())
            )
            if any(not f.is_zero() for f in field) or not mult.is_zero():
                out[c_idx] = (field, mult)
        return out

    def apply(self, fs, g: Poly) -> Poly:
        """Coefficient of D(f_1, ..., f_{q-1} | g Vol_u)."""
        if len(fs) != self.q - 1:
            raise IncompatiblePair(f"expected {self.q - 1} function slots")
        return self.p.eval(*fs, g) + g * self.rho.eval(*fs)


def _symbol_field_on_basis(p: SymMultivector, c_idx: MultiIndex) -> tuple:
    """l_P contracted with the dual basis sections of C, as components."""
    chart = p.chart
    phis = [Section.basis(chart, SectionRole.OF_ESTAR, a) for a in c_idx]
    comps = []
    for i in range(1, chart.base_dim + 1):
        xi = Poly.var(chart, Space.E, Var(VarKind.BASE, i))
        comps.append(multiderivation_l(p, *phis, xi))
    return tuple(comps)


def _recover_pair(chart, q: int, apply_fn) -> LPair:
    """Rebuild (P, rho) tables of orders q, q-1 from an action functional."""
    from .multivec import _recover_table

    one = Poly.const(chart, Space.E, 1)

    def rho_value(args):
        return apply_fn(args, one)

    def p_value(args):
        *fs, g = args
        return apply_fn(fs, g) - g * apply_fn(fs, one)

    rho = SymMultivector(chart, Space.E, q - 1, _recover_table(chart, Space.E, q - 1, rho_value))
    p = SymMultivector(chart, Space.E, q, _recover_table(chart, Space.E, q, p_value))
    return LPair(p, rho)


def pair_bracket(p1: LPair, p2: LPair) -> LPair:
    """Poisson-Lie bracket of rank-1 bundle multivectors.

    {D1, D2} = D1*D2 - D2*D1 where, on (f_1, ..., f_{k1+k2} | v),

      D1*D2 = sum over (k1, k2)-unshuffles   of D1(block1 | D2(block2 | v))
            + sum over (k1-1, k2+1)-unshuffles of D1(block1, P2(block2) | v).
    """
    if p1.chart != p2.chart:
        raise ChartMismatch("pair operands on different charts")
    k1, k2 = p1.q - 1, p2.q - 1

    def bullet(a: LPair, b: LPair, ka: int, kb: int, fs, g: Poly):
        out = Poly.zero(a.chart, Space.E)
        for first, second in unshuffles(ka, kb):
            inner = b.apply([fs[i] for i in second], g)
            out = out + a.apply([fs[i] for i in first], inner)
        for first, second in unshuffles(ka - 1, kb + 1):
            symbol_arg = b.p.eval(*(fs[i] for i in second))
            out = out + a.apply([fs[i] for i in first] + [symbol_arg], g)
        return out

    def apply_fn(fs, g):
        return bullet(p1, p2, k1, k2, fs, g) - bullet(p2, p1, k2, k1, fs, g)

    return _recover_pair(p1.chart, p1.q + p2.q - 1, apply_fn)


def pair_product(p1: LPair, p2: LPair) -> LPair:
    """Associative product: symbols multiply against complementary actions.

    On (f_1, ..., f_{k1+k2+1} | v),

      D1.D2 = sum over (k1+1, k2)-unshuffles of P1(block1) D2(block2 | v)
            + sum over (k2+1, k1)-unshuffles of P2(block1) D1(block2 | v).
    """
    if p1.chart != p2.chart:
        raise ChartMismatch("pair operands on different charts")
    k1, k2 = p1.q - 1, p2.q - 1

    def apply_fn(fs, g):
        out = Poly.zero(p1.chart, Space.E)
        for first, second in unshuffles(k1 + 1, k2):
            out = out + p1.p.eval(*(fs[i] for i in first)) * p2.apply(
                [fs[i] for i in second], g
            )
        for first, second in unshuffles(k2 + 1, k1):
            out = out + p2.p.eval(*(fs[i] for i in first)) * p1.apply(
                [fs[i] for i in second], g
            )
        return out

    return _recover_pair(p1.chart, p1.q + p2.q, apply_fn)


def pair_to_lderivation(pair: LPair) -> LDerivation:
    """FWL pair to derivation of the pulled-back line bundle.

    The vector field is the hamiltonian field of P; the multiplication part
    transcribes the core multivector rho as a polynomial on the dual space
    (per basis index C this is the frame value divided by C!).
    """
    if not fwl_check_multivector(pair.p):
        raise IncompatiblePair("pair_to_lderivation needs a FWL multivector part")
    if not is_core_multivector(pair.rho):
        raise IncompatiblePair("pair_to_lderivation needs a core rho part")
    return LDerivation(hamiltonian_field(pair.p), core_to_dualpoly(pair.rho))


def lderivation_to_pair(d: LDerivation, q: int) -> LPair:
    """Inverse frame reading: field to (P, trace-corrected rho)."""
    op = a_inverse(d, q)
    return _a_iso_pair(op, q)


# ---------------------------------------------------------------------------
# The operator <-> derivation bijection.
# ---------------------------------------------------------------------------


def psi_values(op: DiffOp, sections) -> Poly:
    """[...[op, l_phi_1], ..., l_phi_{q-1}](1), a base-only polynomial."""
    value = nested_commutator(op, [phi.ell() for phi in sections]).apply(
        Poly.const(op.chart, op.space, 1)
    )
    if not value.is_base_only():
        raise AssertionError("nested-commutator value is not base-only")
    return value


def _contract_trace(p: SymMultivector, c_idx: MultiIndex) -> Poly:
    """Multiplication part, in the Vol_u frame, of the action on the
    determinant line of the derivation P(dual basis of C, ..., -)."""
    chart = p.chart
    m = chart.fiber_rank
    phis = [Section.basis(chart, SectionRole.OF_ESTAR, a) for a in c_idx]
    columns = [
        multiderivation_D(p, *phis, Section.basis(chart, SectionRole.OF_ESTAR, beta))
        for beta in range(1, m + 1)
    ]
    matrix = tuple(
        tuple(columns[beta].components[alpha] for beta in range(m))
        for alpha in range(m)
    )
    symbol = _symbol_field_on_basis(p, c_idx)
    deriv_on_dual = FrameDerivation(chart, m, symbol, matrix)
    return deriv_on_dual.dual().top_power().matrix[0][0]


def _a_iso_pair(op: DiffOp, q: int) -> LPair:
    """The pair (level-q symbol, bundle map) of a FWL operator.

    Per basis multi-index C the multiplication part of the bundle map is
    the trace action of the contracted symbol plus the nested-commutator
    value Psi(C).
    """
    chart = op.chart
    p = op.symbol_at(q)
    phi_table = {}
    for c_idx in all_multi_indices(chart.fiber_rank, q - 1):
        sections = [Section.basis(chart, SectionRole.OF_ESTAR, a) for a in c_idx]
        psi = psi_values(op, sections)
        mult = _contract_trace(p, c_idx) + psi
        phi_table[c_idx] = (_symbol_field_on_basis(p, c_idx), mult)
    return LPair.from_phi_table(p, phi_table)


def _closed_form_mult(op: DiffOp, q: int) -> Poly:
    """Coordinate formula for the multiplication part, read off the table.

    With the order-(q-1) pure-fiber coefficients D^C and the fiber-linear
    top coefficients D^B_b this is

        sum_C [ D^C - sum_b (C[b]+1) D^{C+b}_b ] v_C,

    the second sum being the dual-fiber divergence of the field part.
    """
    chart = op.chart
    out = Poly.zero(chart, Space.ESTAR)
    for (mi_b, mi_f), coeff in op.terms.items():
        if len(mi_b) != 0:
            continue
        if len(mi_f) == q - 1:
            out = out + coeff.with_space(Space.ESTAR) * _dual_monomial(chart, mi_f)
        elif len(mi_f) == q:
            for b, mult in mi_f.multiplicities().items():
                d_b = coeff.partial(Var(VarKind.FIBER, b)).with_space(Space.ESTAR)
                out = out - d_b.scale(mult) * _dual_monomial(chart, mi_f.remove(b))
    return out


def _dual_monomial(chart: Chart, mi: MultiIndex) -> Poly:
    mono = Poly.const(chart, Space.ESTAR, 1)
    for a in mi:
        mono = mono * Poly.var(chart, Space.ESTAR, dual_var(a))
    return mono


def a_iso(op: DiffOp, q: int) -> LDerivation:
    """FWL operator of order q to a derivation of the pulled-back line.

    Computes both the bundle-map path (nested commutators plus trace
    action) and the closed coordinate formula, asserts they agree, and
    returns the result; homogeneous of degree q-1.
    """
    if op.space is not Space.E:
        raise SpaceMismatch("the operator side lives on the total space")
    if not op.is_fwl(q):
        raise NotFWL(f"operator is not FWL of order {q}")
    if q == 0:
        result = LDerivation(
            hamiltonian_field(op.symbol_at(0)), Poly.zero(op.chart, Space.ESTAR)
        )
        closed = result
    else:
        pair = _a_iso_pair(op, q)
        result = pair_to_lderivation(pair)
        closed = LDerivation(hamiltonian_field(op.symbol_at(q)), _closed_form_mult(op, q))
    assert result == closed, "bundle-map path and closed coordinate path disagree"
    if not result.is_homogeneous(q - 1):
        raise AssertionError("image derivation is not homogeneous of degree q-1")
    return result


def a_inverse(d: LDerivation, q: int) -> DiffOp:
    """Derivation of degree q-1 back to the FWL operator of order q.

    Reads the mixed top coefficients off the d/dx part, the fiber-linear
    top coefficients off the d/dv part (with a sign), and the order-(q-1)
    pure-fiber coefficients off the multiplication part after adding back
    the dual-fiber divergence of the field.
    """
    chart = d.chart
    if not d.is_homogeneous(q - 1):
        raise NotHomogeneous(f"derivation is not homogeneous of degree {q - 1}")
    terms = {}

    def add_term(key, coeff):
        if coeff.is_zero():
            return
        if key in terms:
            terms[key] = terms[key] + coeff
        else:
            terms[key] = coeff

    for i, comp in enumerate(d.field.base_coeffs, start=1):
        for mi, base_part in _split_dual(comp).items():
            add_term((MultiIndex([i]), mi), base_part)

    fiber_coeffs = {}
    for alpha, comp in enumerate(d.field.dual_coeffs, start=1):
        for mi, base_part in _split_dual(comp).items():
            coeff = -base_part
            fiber_coeffs[(mi, alpha)] = coeff
            u_alpha = Poly.var(chart, Space.E, Var(VarKind.FIBER, alpha))
            add_term((EMPTY_MI, mi), coeff * u_alpha)

    mult_parts = _split_dual(d.mult)
    for mi in all_multi_indices(chart.fiber_rank, q - 1):
        base_part = mult_parts.get(mi, Poly.zero(chart, Space.E))
        correction = Poly.zero(chart, Space.E)
        for beta in range(1, chart.fiber_rank + 1):
            top = fiber_coeffs.get((mi.concat(MultiIndex([beta])), beta))
            if top is not None:
                correction = correction + top.scale(mi.multiplicity(beta) + 1)
        add_term((EMPTY_MI, mi), base_part + correction)

    return DiffOp(chart, Space.E, terms)


def _split_dual(p: Poly) -> dict:
    """Split a dual-space polynomial by its v-monomial, keeping x-parts on E."""
    out = {}
    for mono, coeff in p.terms.items():
        v_letters = []
        x_part = []
        for var, exp in mono:
            if var.kind is VarKind.DUAL_FIBER:
                v_letters.extend([var.index] * exp)
            else:
                x_part.append((var, exp))
        mi = MultiIndex(v_letters)
        piece = Poly(p.chart, Space.E, {tuple(x_part): coeff})
        if mi in out:
            out[mi] = out[mi] + piece
        else:
            out[mi] = piece
    return out


# ---------------------------------------------------------------------------
# Derivation document.
# ---------------------------------------------------------------------------


def lderivation_to_doc(d: LDerivation) -> dict:
    from .diffop import chart_to_doc

    return {
        "chart": chart_to_doc(d.chart),
        "field": {
            "dx": [poly_to_str(c) for c in d.field.base_coeffs],
            "dv": [poly_to_str(c) for c in d.field.dual_coeffs],
        },
        "mult": poly_to_str(d.mult),
    }


def lderivation_from_doc(doc) -> LDerivation:
    from .diffop import _require_keys, chart_from_doc

    _require_keys(doc, ("chart", "field", "mult"), "derivation document")
    chart = chart_from_doc(doc["chart"])
    _require_keys(doc["field"], ("dx", "dv"), "field")
    dx, dv = doc["field"]["dx"], doc["field"]["dv"]
    if not isinstance(dx, list) or not isinstance(dv, list):
        raise DocumentError("field components must be lists of polynomials")
    if len(dx) != chart.base_dim or len(dv) != chart.fiber_rank:
        raise DocumentError("field component counts must match the chart")
    base = tuple(parse_poly(s, chart, Space.ESTAR) for s in dx)
    dual = tuple(parse_poly(s, chart, Space.ESTAR) for s in dv)
    if not isinstance(doc["mult"], str):
        raise DocumentError("mult must be a polynomial string")
    mult = parse_poly(doc["mult"], chart, Space.ESTAR)
    return LDerivation(PolyVectorField(chart, base, dual), mult)
