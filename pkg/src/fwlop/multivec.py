"""Symmetric multivectors as homogeneous top-order operator tables.

A symmetric q-multivector is stored as an operator table all of whose keys
have total length exactly q.  Its evaluation on q functions is defined by
nested commutators,

    P(f1, ..., fq) = [...[op_P, f1], ..., fq](1),

which makes the top table of an order-q operator literally its symbol and
the coefficient recovery formula the single extraction oracle: for a pure
top table, evaluating on the coordinate functions of a multi-index J and
dividing by J! returns the stored coefficient.

The Poisson bracket is implemented directly from the unshuffle double sum
(never through operator commutators), so its compatibility with the
operator commutator is a genuine cross-check between two code paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .diffop import DiffOp
from .errors import (
    ArityMismatch,
    AsymmetricGamma,
    ChartMismatch,
    NonConstantDeterminant,
    NotCore,
    NotFWL,
    RankMismatch,
    SpaceMismatch,
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
    fiber_kind,
    unshuffles,
)


class SymMultivector:
    """Homogeneous order-q coefficient table with commutator evaluation."""

    __slots__ = ("chart", "space", "q", "terms", "_op", "_eval_cache")

    def __init__(self, chart: Chart, space: Space, q: int, terms=None):
        if q < 0:
            raise ArityMismatch("multivector order must be >= 0")
        op = DiffOp(chart, space, terms or {})
        for mi_b, mi_f in op.terms:
            if len(mi_b) + len(mi_f) != q:
                raise ArityMismatch(
                    f"table key of length {len(mi_b) + len(mi_f)} in an order-{q} multivector"
                )
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "terms", op.terms)
        object.__setattr__(self, "_op", op)
        object.__setattr__(self, "_eval_cache", {})

    def __setattr__(self, *a):
        raise AttributeError("SymMultivector is immutable")

    @classmethod
    def zero(cls, chart, space, q):
        return cls(chart, space, q, {})

    def to_operator(self) -> DiffOp:
        return self._op

    def __eq__(self, other):
        return (
            isinstance(other, SymMultivector)
            and self.q == other.q
            and self._op == other._op
        )

    def __hash__(self):
        return hash((self.q, self._op))

    def __repr__(self):
        return f"SymMultivector(q={self.q}, {self._op!r})"

    def __add__(self, other):
        if self.q != other.q:
            raise ArityMismatch("can only add multivectors of equal order")
        out = self._op + other._op
        return SymMultivector(self.chart, self.space, self.q, out.terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "SymMultivector":
        return SymMultivector(self.chart, self.space, self.q, self._op.scale(c).terms)

    def is_zero(self) -> bool:
        return not self.terms

    def eval(self, *args: Poly) -> Poly:
        """Nested-commutator evaluation on exactly q functions.

        Symmetric in the arguments, so results are cached on the sorted
        argument tuple.
        """
        if len(args) != self.q:
            raise ArityMismatch(f"expected {self.q} arguments, got {len(args)}")
        key = tuple(sorted(args, key=_poly_sort_key))
        cached = self._eval_cache.get(key)
        if cached is not None:
            return cached
        op = self._op
        for f in key:
            op = op.commutator(DiffOp.mult(f))
        value = op.apply(Poly.const(self.chart, self.space, 1))
        self._eval_cache[key] = value
        return value

    def coordinate_functions(self, mi_base: MultiIndex, mi_fiber: MultiIndex):
        fk = fiber_kind(self.space)
        return [
            Poly.var(self.chart, self.space, Var(VarKind.BASE, i)) for i in mi_base
        ] + [Poly.var(self.chart, self.space, Var(fk, a)) for a in mi_fiber]


def _recover_table(chart, space, q, value_fn) -> dict:
    """Build an order-q table from symmetric evaluations on coordinates.

    value_fn(args) must return the multivector value on the q coordinate
    functions of each key; division by I!B! undoes the multiplicities.
    """
    fk = fiber_kind(space)
    terms = {}
    for nb in range(q + 1):
        for mi_b in all_multi_indices(chart.base_dim, nb):
            for mi_f in all_multi_indices(chart.fiber_rank, q - nb):
                args = [
                    Poly.var(chart, space, Var(VarKind.BASE, i)) for i in mi_b
                ] + [Poly.var(chart, space, Var(fk, a)) for a in mi_f]
                value = value_fn(args)
                if value.is_zero():
                    continue
                scale = Fraction(1, mi_b.factorial() * mi_f.factorial())
                terms[(mi_b, mi_f)] = value.scale(scale)
    return terms


def poisson(p1: SymMultivector, p2: SymMultivector) -> SymMultivector:
    """Gerstenhaber-type bracket via the literal unshuffle double sum.

    For orders k1+1 and k2+1 the value on k1+k2+1 functions is

        sum over (k2+1, k1)-unshuffles  of  p1(p2(block1), block2)
      - sum over (k1+1, k2)-unshuffles  of  p2(p1(block1), block2)

    and the order k1+k2+1 result table is recovered from evaluations on
    coordinate functions.  Deliberately independent of the operator
    commutator.
    """
    if p1.chart != p2.chart:
        raise ChartMismatch("poisson operands on different charts")
    if p1.space != p2.space:
        raise SpaceMismatch("poisson operands on different spaces")
    k1, k2 = p1.q - 1, p2.q - 1
    q = k1 + k2 + 1
    if q < 0:
        return SymMultivector.zero(p1.chart, p1.space, 0)

    def value(args):
        out = Poly.zero(p1.chart, p1.space)
        for first, second in unshuffles(k2 + 1, k1):
            inner = p2.eval(*(args[i] for i in first))
            out = out + p1.eval(inner, *(args[i] for i in second))
        for first, second in unshuffles(k1 + 1, k2):
            inner = p1.eval(*(args[i] for i in first))
            out = out - p2.eval(inner, *(args[i] for i in second))
        return out

    terms = _recover_table(p1.chart, p1.space, q, value)
    return SymMultivector(p1.chart, p1.space, q, terms)


def sym_product(p1: SymMultivector, p2: SymMultivector) -> SymMultivector:
    """Symmetric product: unshuffle-split evaluations, coefficients recovered."""
    if p1.chart != p2.chart:
        raise ChartMismatch("product operands on different charts")
    if p1.space != p2.space:
        raise SpaceMismatch("product operands on different spaces")
    q = p1.q + p2.q

    def value(args):
        out = Poly.zero(p1.chart, p1.space)
        for first, second in unshuffles(p1.q, p2.q):
            out = out + p1.eval(*(args[i] for i in first)) * p2.eval(
                *(args[i] for i in second)
            )
        return out

    terms = _recover_table(p1.chart, p1.space, q, value)
    return SymMultivector(p1.chart, p1.space, q, terms)


def fwl_check_multivector(p: SymMultivector) -> bool:
    """True iff every term has weight 1-q (fiber degree of coeff minus |B|)."""
    if p.space is not Space.E:
        raise SpaceMismatch("FWL classification lives on space E")
    return all(
        deg - len(mi_f) == 1 - p.q
        for (mi_b, mi_f), coeff in p.terms.items()
        for deg in coeff.fiber_degree_decompose()
    )


def is_core_multivector(p: SymMultivector) -> bool:
    """True iff every term is pure-fiber with base-only coefficient."""
    return all(
        len(mi_b) == 0 and coeff.is_base_only()
        for (mi_b, mi_f), coeff in p.terms.items()
    )


# ---------------------------------------------------------------------------
# Sections of the bundle and of its dual, in the coordinate frames.
# ---------------------------------------------------------------------------


class SectionRole(Enum):
    OF_E = "OfE"
    OF_ESTAR = "OfEstar"


@dataclass(frozen=True)
class Section:
    """Tuple of base-only component polynomials in the coordinate frame."""

    role: SectionRole
    chart: Chart
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.fiber_rank:
            raise RankMismatch("section needs one component per fiber dimension")
        for comp in self.components:
            if not comp.is_base_only():
                raise SpaceMismatch("section components must be base-only")

    @classmethod
    def basis(cls, chart: Chart, role: SectionRole, alpha: int) -> "Section":
        comps = tuple(
            Poly.const(chart, Space.E, 1 if a == alpha else 0)
            for a in range(1, chart.fiber_rank + 1)
        )
        return cls(role, chart, comps)

    def ell(self) -> Poly:
        """The induced fiber-linear function (on E for dual sections, on
        the dual space for sections of E)."""
        if self.role is SectionRole.OF_ESTAR:
            space, kind = Space.E, VarKind.FIBER
        else:
            space, kind = Space.ESTAR, VarKind.DUAL_FIBER
        out = Poly.zero(self.chart, space)
        for a, comp in enumerate(self.components, start=1):
            out = out + comp.with_space(space) * Poly.var(
                self.chart, space, Var(kind, a)
            )
        return out

    def vertical_lift(self) -> DiffOp:
        """Vertical lift of a section of E, as a first order operator."""
        if self.role is not SectionRole.OF_E:
            raise SpaceMismatch("vertical lifts exist for sections of E only")
        terms = {}
        for a, comp in enumerate(self.components, start=1):
            if not comp.is_zero():
                terms[(EMPTY_MI, MultiIndex([a]))] = comp.with_space(Space.E)
        return DiffOp(self.chart, Space.E, terms)

    def scale(self, f: Poly) -> "Section":
        return Section(
            self.role, self.chart, tuple(f * c for c in self.components)
        )

    def __add__(self, other: "Section") -> "Section":
        if self.role is not other.role:
            raise SpaceMismatch("cannot add sections of different bundles")
        return Section(
            self.role,
            self.chart,
            tuple(a + b for a, b in zip(self.components, other.components)),
        )


def pairing(phi: Section, e: Section) -> Poly:
    """Duality pairing of a dual section with a section, a base function."""
    if phi.role is not SectionRole.OF_ESTAR or e.role is not SectionRole.OF_E:
        raise SpaceMismatch("pairing takes a dual section and a section")
    out = Poly.zero(phi.chart, Space.E)
    for pa, ea in zip(phi.components, e.components):
        out = out + pa * ea
    return out


# ---------------------------------------------------------------------------
# Multiderivation pair (D_P, l_P) of a FWL multivector.
# ---------------------------------------------------------------------------


def multiderivation_D(p: SymMultivector, *phis: Section) -> Section:
    """D with ell(D(phi_1, ..., phi_q)) = P(ell(phi_1), ..., ell(phi_q))."""
    if not fwl_check_multivector(p):
        raise NotFWL("multiderivation pair needs a FWL multivector")
    if len(phis) != p.q:
        raise ArityMismatch(f"expected {p.q} sections, got {len(phis)}")
    value = p.eval(*(phi.ell() for phi in phis))
    parts = value.fiber_degree_decompose()
    if set(parts) - {1}:
        raise AssertionError("evaluation on fiber-linear functions is not fiber-linear")
    comps = tuple(
        value.partial(Var(VarKind.FIBER, a))
        for a in range(1, p.chart.fiber_rank + 1)
    )
    return Section(SectionRole.OF_ESTAR, p.chart, comps)


def multiderivation_l(p: SymMultivector, *args) -> Poly:
    """Symbol part: value on q-1 dual sections and one base function."""
    *phis, f = args
    if not fwl_check_multivector(p):
        raise NotFWL("multiderivation pair needs a FWL multivector")
    if len(phis) != p.q - 1:
        raise ArityMismatch(f"expected {p.q - 1} sections, got {len(phis)}")
    if not f.is_base_only():
        raise SpaceMismatch("the function argument must be fiber-independent")
    value = p.eval(*(phi.ell() for phi in phis), f.with_space(Space.E))
    if not value.is_base_only():
        raise AssertionError("symbol value is not a base function")
    return value


def core_to_dualpoly(p: SymMultivector) -> Poly:
    """Core multivector as a polynomial on the dual space: table transcription."""
    out = Poly.zero(p.chart, Space.ESTAR)
    for (mi_b, mi_f), coeff in p.terms.items():
        if len(mi_b) != 0 or not coeff.is_base_only():
            raise NotCore("table has a non-core term")
        mono = coeff.with_space(Space.ESTAR)
        for a in mi_f:
            mono = mono * Poly.var(p.chart, Space.ESTAR, dual_var(a))
        out = out + mono
    return out


# ---------------------------------------------------------------------------
# Polynomial vector fields on the dual total space.
# ---------------------------------------------------------------------------


class PolyVectorField:
    """Vector field on the dual space with polynomial coefficients."""

    __slots__ = ("chart", "base_coeffs", "dual_coeffs")

    def __init__(self, chart: Chart, base_coeffs, dual_coeffs):
        base_coeffs = tuple(base_coeffs)
        dual_coeffs = tuple(dual_coeffs)
        if len(base_coeffs) != chart.base_dim or len(dual_coeffs) != chart.fiber_rank:
            raise RankMismatch("one coefficient per coordinate required")
        for c in base_coeffs + dual_coeffs:
            if c.chart != chart:
                raise ChartMismatch("field coefficient on the wrong chart")
            if c.space is not Space.ESTAR:
                raise SpaceMismatch("field coefficients live on the dual space")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "base_coeffs", base_coeffs)
        object.__setattr__(self, "dual_coeffs", dual_coeffs)

    def __setattr__(self, *a):
        raise AttributeError("PolyVectorField is immutable")

    @classmethod
    def zero(cls, chart):
        z = Poly.zero(chart, Space.ESTAR)
        return cls(chart, (z,) * chart.base_dim, (z,) * chart.fiber_rank)

    def __eq__(self, other):
        return (
            isinstance(other, PolyVectorField)
            and self.chart == other.chart
            and self.base_coeffs == other.base_coeffs
            and self.dual_coeffs == other.dual_coeffs
        )

    def __hash__(self):
        return hash((self.chart, self.base_coeffs, self.dual_coeffs))

    def __repr__(self):
        from .symcore import poly_to_str

        bits = [
            f"({poly_to_str(c)}) d/dx{i}"
            for i, c in enumerate(self.base_coeffs, start=1)
            if not c.is_zero()
        ] + [
            f"({poly_to_str(c)}) d/dv{a}"
            for a, c in enumerate(self.dual_coeffs, start=1)
            if not c.is_zero()
        ]
        return "PolyVectorField(" + (" + ".join(bits) or "0") + ")"

    def __add__(self, other):
        return PolyVectorField(
            self.chart,
            tuple(a + b for a, b in zip(self.base_coeffs, other.base_coeffs)),
            tuple(a + b for a, b in zip(self.dual_coeffs, other.dual_coeffs)),
        )

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return PolyVectorField(
            self.chart,
            tuple(p.scale(c) for p in self.base_coeffs),
            tuple(p.scale(c) for p in self.dual_coeffs),
        )

    def is_zero(self):
        return all(c.is_zero() for c in self.base_coeffs + self.dual_coeffs)

    def apply(self, f: Poly) -> Poly:
        if f.space is not Space.ESTAR:
            raise SpaceMismatch("fields on the dual space act on dual functions")
        out = Poly.zero(self.chart, Space.ESTAR)
        for i, c in enumerate(self.base_coeffs, start=1):
            out = out + c * f.partial(Var(VarKind.BASE, i))
        for a, c in enumerate(self.dual_coeffs, start=1):
            out = out + c * f.partial(dual_var(a))
        return out

    def commutator(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(
            self.chart,
            tuple(
                self.apply(wc) - other.apply(vc)
                for vc, wc in zip(self.base_coeffs, other.base_coeffs)
            ),
            tuple(
                self.apply(wc) - other.apply(vc)
                for vc, wc in zip(self.dual_coeffs, other.dual_coeffs)
            ),
        )

    def is_homogeneous(self, k: int) -> bool:
        """Degree k: base coefficients of dual-fiber degree k, dual-fiber
        coefficients of degree k+1 (zero components are unconstrained)."""
        for c in self.base_coeffs:
            if not c.is_zero() and set(c.fiber_degree_decompose()) != {k}:
                return False
        for c in self.dual_coeffs:
            if not c.is_zero() and set(c.fiber_degree_decompose()) != {k + 1}:
                return False
        return True

    def degree(self):
        if self.is_zero():
            return None
        degs = set()
        for c in self.base_coeffs:
            degs.update(c.fiber_degree_decompose())
        for c in self.dual_coeffs:
            degs.update(d - 1 for d in c.fiber_degree_decompose())
        if len(degs) == 1:
            return degs.pop()
        return None


def hamiltonian_field(p: SymMultivector) -> PolyVectorField:
    """Derivation {P, -} of the core algebra, as a field on the dual space.

    Mixed terms coeff(x) dx^i du^A give coeff * v_A d/dx^i; pure-fiber terms
    with fiber-linear coefficient sum_a c_a(x) u^a du^B give -c_a * v_B d/dv_a.
    Homogeneous of degree q-1.
    """
    if not fwl_check_multivector(p):
        raise NotFWL("hamiltonian fields are attached to FWL multivectors")
    chart = p.chart
    zero = Poly.zero(chart, Space.ESTAR)
    base = [zero] * chart.base_dim
    dual = [zero] * chart.fiber_rank
    for (mi_b, mi_f), coeff in p.terms.items():
        v_mono = Poly.const(chart, Space.ESTAR, 1)
        for a in mi_f:
            v_mono = v_mono * Poly.var(chart, Space.ESTAR, dual_var(a))
        if len(mi_b) == 1:
            i = mi_b.entries[0]
            base[i - 1] = base[i - 1] + coeff.with_space(Space.ESTAR) * v_mono
        elif len(mi_b) == 0:
            for a in range(1, chart.fiber_rank + 1):
                c_a = coeff.partial(Var(VarKind.FIBER, a))
                if not c_a.is_zero():
                    dual[a - 1] = dual[a - 1] - c_a.with_space(Space.ESTAR) * v_mono
        else:
            raise NotFWL("FWL tables cannot carry two base derivatives")
    return PolyVectorField(chart, base, dual)


# ---------------------------------------------------------------------------
# Laplacian of the fiber-wise linear metric built from a connection table.
# ---------------------------------------------------------------------------


def _det(matrix):
    """Exact determinant by permutation expansion (small matrices only)."""
    import itertools

    size = len(matrix)
    chart, space = matrix[0][0].chart, matrix[0][0].space
    out = Poly.zero(chart, space)
    for perm in itertools.permutations(range(size)):
        sign = 1
        seen = [False] * size
        for start in range(size):
            if seen[start]:
                continue
            length, j = 0, start
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        term = Poly.const(chart, space, sign)
        for row in range(size):
            term = term * matrix[row][perm[row]]
        out = out + term
    return out


def fwl_metric_laplacian(chart: Chart, gamma) -> DiffOp:
    """Laplace-Beltrami operator of the fiber-wise linear split metric.

    `gamma` maps (k, i, j) to base-only polynomials, symmetric in (i, j);
    missing entries are zero.  With the convention a(.)b = a(x)b + b(x)a the
    metric matrix in the (x, u) coordinates is [[-2*Gamma.u, I], [I, 0]];
    its determinant is checked to be a nonzero constant, the blockwise
    polynomial inverse [[0, I], [I, 2*Gamma.u]] is verified by
    multiplication, and the constant-determinant Laplacian

        sum g^{mu nu} d_mu d_nu + sum (d_mu g^{mu nu}) d_nu

    is assembled and checked to be FWL of order 2.
    """
    n = chart.base_dim
    if chart.fiber_rank != n:
        raise RankMismatch("the fiber-wise linear metric needs fiber rank = base dim")
    table = {}
    for (k, i, j), coeff in dict(gamma).items():
        if not (1 <= k <= n and 1 <= i <= n and 1 <= j <= n):
            raise RankMismatch(f"connection index ({k},{i},{j}) out of range")
        if not coeff.is_base_only():
            raise SpaceMismatch("connection coefficients must be base-only")
        if not coeff.is_zero():
            table[(k, i, j)] = coeff.with_space(Space.E)
    zero = Poly.zero(chart, Space.E)
    for (k, i, j), coeff in table.items():
        if table.get((k, j, i), zero) != coeff:
            raise AsymmetricGamma(f"Gamma^{k}_{{{i}{j}}} != Gamma^{k}_{{{j}{i}}}")

    one = Poly.const(chart, Space.E, 1)
    size = 2 * n
    g = [[zero for _ in range(size)] for _ in range(size)]
    for i in range(n):
        for j in range(n):
            acc = zero
            for k in range(1, n + 1):
                coeff = table.get((k, i + 1, j + 1))
                if coeff is not None:
                    acc = acc + coeff * Poly.var(chart, Space.E, Var(VarKind.FIBER, k))
            g[i][j] = acc.scale(-2)
        g[i][n + i] = one
        g[n + i][i] = one

    det = _det(g)
    if det.is_zero() or not det.is_base_only() or det != Poly.const(
        chart, Space.E, det.terms.get((), 0)
    ):
        raise NonConstantDeterminant(f"det(g) = {det!r}")

    ginv = [[zero for _ in range(size)] for _ in range(size)]
    for i in range(n):
        ginv[i][n + i] = one
        ginv[n + i][i] = one
        for j in range(n):
            ginv[n + i][n + j] = -g[i][j]
    for row in range(size):
        for col in range(size):
            entry = sum(
                (g[row][k] * ginv[k][col] for k in range(size)),
                start=zero,
            )
            expected = one if row == col else zero
            assert entry == expected, "blockwise inverse failed verification"

    def coord(mu: int) -> Var:
        if mu < n:
            return Var(VarKind.BASE, mu + 1)
        return Var(VarKind.FIBER, mu - n + 1)

    def key_for(variables) -> tuple:
        mi_b = MultiIndex([v.index for v in variables if v.kind is VarKind.BASE])
        mi_f = MultiIndex([v.index for v in variables if v.kind is VarKind.FIBER])
        return (mi_b, mi_f)

    terms = {}

    def accumulate(key, coeff):
        if coeff.is_zero():
            return
        terms[key] = terms.get(key, zero) + coeff

    for mu in range(size):
        for nu in range(size):
            accumulate(key_for((coord(mu), coord(nu))), ginv[mu][nu])
            accumulate(key_for((coord(nu),)), ginv[mu][nu].partial(coord(mu)))

    result = DiffOp(chart, Space.E, terms)
    if not result.is_fwl(2):
        raise AssertionError("metric Laplacian failed the FWL postcondition")
    return result


def _poly_sort_key(p: Poly):
    return tuple(sorted(
        (tuple((v.kind, v.index, e) for v, e in mono), coeff)
        for mono, coeff in p.terms.items()
    ))
