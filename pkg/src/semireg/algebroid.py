"""Lie algebroids given by structure constants, their de Rham algebras and connections.

Two tiers are supported:

* ``point``: a Lie algebra (zero anchor), coefficients are Fractions;
* ``chart``: a free algebroid over one chart ring ``K[t, 1/t]`` truncated to a
  Laurent window; the anchor sends ``l_i`` to ``alpha_i(t) d/dt``.

A form of degree k stores one coefficient per strictly increasing index tuple.
Coefficients are ring elements (scalar forms), tuples of ring elements
(E-valued forms) or tuples of tuples (End E-valued forms).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

from .dgcore import CochainComplex, complex_from_operator, permutation_sign
from .exactcore import LaurentWindow, rat

# ---------------------------------------------------------------------------
# coefficient values (scalars, vectors, square matrices)
# ---------------------------------------------------------------------------


def _is_matrix(a) -> bool:
    return isinstance(a, tuple) and bool(a) and isinstance(a[0], tuple)


def _is_vector(a) -> bool:
    return isinstance(a, tuple) and not _is_matrix(a)


def vzero(a):
    """Zero of the same shape as a."""
    if _is_matrix(a):
        return tuple(tuple(x * 0 for x in r) for r in a)
    if _is_vector(a):
        return tuple(x * 0 for x in a)
    return a * 0


def viszero(a) -> bool:
    if _is_matrix(a):
        return all(x == 0 for r in a for x in r)
    if _is_vector(a):
        return all(x == 0 for x in a)
    return a == 0


def vadd(a, b):
    if _is_matrix(a):
        return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))
    if _is_vector(a):
        return tuple(x + y for x, y in zip(a, b))
    return a + b


def vscale(c, a):
    if _is_matrix(a):
        return tuple(tuple(c * x for x in r) for r in a)
    if _is_vector(a):
        return tuple(c * x for x in a)
    return c * a


def vmul(a, b):
    """Product of two coefficient values: scalar action, matrix composition or matrix action."""
    if _is_matrix(a) and _is_matrix(b):
        n, m = len(a), len(b[0])
        return tuple(tuple(_dot(a[i], [b[k][j] for k in range(len(b))]) for j in range(m)) for i in range(n))
    if _is_matrix(a) and _is_vector(b):
        return tuple(_dot(r, b) for r in a)
    if _is_matrix(b) or _is_vector(b):
        if _is_matrix(a) or _is_vector(a):
            raise TypeError("incompatible coefficient values")
        return vscale(a, b)
    if _is_matrix(a) or _is_vector(a):
        return vscale(b, a)
    return a * b


def _dot(r, c):
    out = None
    for x, y in zip(r, c):
        if x == 0 or y == 0:
            continue
        out = x * y if out is None else out + x * y
    if out is None:
        return r[0] * 0 if r else Fraction(0)
    return out


def vmap(f: Callable, a):
    if _is_matrix(a):
        return tuple(tuple(f(x) for x in r) for r in a)
    if _is_vector(a):
        return tuple(f(x) for x in a)
    return f(a)


def matrix(rows: Iterable[Iterable]) -> tuple:
    """Square matrix over the rationals as a tuple of tuples."""
    return tuple(tuple(rat(x) for x in r) for r in rows)


def identity_matrix(n: int, one=Fraction(1)) -> tuple:
    return tuple(tuple(one if i == j else one * 0 for j in range(n)) for i in range(n))


def zero_matrix(n: int, zero=Fraction(0)) -> tuple:
    return tuple(tuple(zero for _ in range(n)) for _ in range(n))


def commutator(a, b):
    return vadd(vmul(a, b), vscale(-1, vmul(b, a)))


def trace(a):
    out = a[0][0] * 0
    for i in range(len(a)):
        out = out + a[i][i]
    return out


# ---------------------------------------------------------------------------
# algebroid specs
# ---------------------------------------------------------------------------


@dataclass
class LieAlgebroidSpec:
    """Basis names, bracket table and anchor of a free Lie algebroid.

    ``brackets[(i, j)]`` maps k to the coefficient of l_k in [l_i, l_j]. The table
    is stored as given, so asymmetric input survives until it is checked.
    """

    names: tuple[str, ...]
    brackets: dict[tuple[int, int], dict[int, object]] = field(default_factory=dict)
    tier: str = "point"
    anchor: tuple | None = None
    window: tuple[int, int] = (-8, 8)

    def __post_init__(self):
        self.names = tuple(self.names)
        if self.tier not in ("point", "chart"):
            raise ValueError(f"unknown tier {self.tier!r}")
        if self.tier == "chart" and self.anchor is None:
            self.anchor = tuple(self.zero for _ in self.names)

    @property
    def rank(self) -> int:
        return len(self.names)

    @property
    def zero(self):
        if self.tier == "point":
            return Fraction(0)
        return LaurentWindow({}, *self.window)

    @property
    def one(self):
        return self.const(1)

    def const(self, c):
        if self.tier == "point":
            return rat(c)
        return LaurentWindow({0: c}, *self.window)

    def coeff(self, c):
        """Coerce user data (number, string or exponent->coefficient dict) into the ring."""
        if self.tier == "point":
            return rat(c)
        if isinstance(c, LaurentWindow):
            return c
        if isinstance(c, Mapping):
            return LaurentWindow({int(e): v for e, v in c.items()}, *self.window)
        return self.const(c)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def structure(self, i: int, j: int) -> dict[int, object]:
        return self.brackets.get((i, j), {})

    def bracket_basis(self, i: int, j: int) -> dict[int, object]:
        return {k: c for k, c in self.structure(i, j).items() if c != 0}

    def anchor_of(self, i: int):
        return self.zero if self.tier == "point" else self.anchor[i]

    def apply_anchor(self, i: int, f):
        """a(l_i)(f) for a ring element f."""
        if self.tier == "point":
            return f * 0
        return self.anchor[i] * f.derivative()

    def bracket(self, u: Sequence, v: Sequence) -> tuple:
        """[u, v] for sections given by coefficient vectors over the basis (Leibniz extended)."""
        out = [self.zero for _ in self.names]
        for i, fi in enumerate(u):
            if fi == 0:
                continue
            for j, gj in enumerate(v):
                if gj == 0:
                    continue
                for k, c in self.bracket_basis(i, j).items():
                    out[k] = out[k] + fi * gj * c
                # f a(l_i)(g) l_j - g a(l_j)(f) l_i
                out[j] = out[j] + fi * self.apply_anchor(i, gj)
                out[i] = out[i] - gj * self.apply_anchor(j, fi)
        return tuple(out)

    def unit(self, i: int) -> tuple:
        return tuple(self.one if j == i else self.zero for j in range(self.rank))

    # standard instances -------------------------------------------------

    @classmethod
    def lie_algebra(cls, names: Sequence[str], brackets: Mapping[tuple[str, str], Mapping[str, object]]) -> "LieAlgebroidSpec":
        """Point-tier spec from brackets of pairs of names; [y, x] is filled in as -[x, y]."""
        names = tuple(names)
        idx = {n: i for i, n in enumerate(names)}
        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (a, b), rhs in brackets.items():
            i, j = idx[a], idx[b]
            row = {idx[k]: rat(v) for k, v in rhs.items() if rat(v) != 0}
            table[(i, j)] = row
            table[(j, i)] = {k: -v for k, v in row.items()}
        return cls(names, table)


def abelian(n: int) -> LieAlgebroidSpec:
    return LieAlgebroidSpec(tuple(f"x{i + 1}" for i in range(n)), {})


def sl2() -> LieAlgebroidSpec:
    return LieAlgebroidSpec.lie_algebra(("h", "e", "f"), {("h", "e"): {"e": 2}, ("h", "f"): {"f": -2}, ("e", "f"): {"h": 1}})


def gl2() -> LieAlgebroidSpec:
    """gl2 in the basis h, e, f, z with z the identity matrix."""
    return LieAlgebroidSpec.lie_algebra(("h", "e", "f", "z"), {("h", "e"): {"e": 2}, ("h", "f"): {"f": -2}, ("e", "f"): {"h": 1}})


def aff1() -> LieAlgebroidSpec:
    """The two-dimensional nonabelian Lie algebra, [x, y] = y."""
    return LieAlgebroidSpec.lie_algebra(("x", "y"), {("x", "y"): {"y": 1}})


def heisenberg() -> LieAlgebroidSpec:
    return LieAlgebroidSpec.lie_algebra(("p", "q", "c"), {("p", "q"): {"c": 1}})


def sl2_on_line(window: tuple[int, int] = (-6, 6)) -> LieAlgebroidSpec:
    """Action algebroid of sl2 acting on the affine line by e -> -d/dt, h -> -2t d/dt, f -> t^2 d/dt."""
    lo, hi = window
    W = lambda d: LaurentWindow(d, lo, hi)
    table = {}
    for (i, j, k, c) in [(0, 1, 1, 2), (0, 2, 2, -2), (1, 2, 0, 1)]:
        table[(i, j)] = {k: W({0: c})}
        table[(j, i)] = {k: W({0: -c})}
    anchor = (W({1: -2}), W({0: -1}), W({2: 1}))
    return LieAlgebroidSpec(("h", "e", "f"), table, "chart", anchor, window)


def tangent_line(window: tuple[int, int] = (-6, 6)) -> LieAlgebroidSpec:
    """The tangent algebroid of one chart, basis d/dt with identity anchor."""
    return LieAlgebroidSpec(("dt",), {}, "chart", (LaurentWindow({0: 1}, *window),), window)


# ---------------------------------------------------------------------------
# algebroid axioms
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    ok: bool
    identity: str = ""
    where: tuple = ()
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        return {"ok": self.ok, "identity": self.identity, "where": list(self.where), "detail": self.detail}


def _jacobi_vector(spec: LieAlgebroidSpec, i: int, j: int, k: int) -> tuple:
    e = spec.unit
    terms = [
        spec.bracket(e(i), spec.bracket(e(j), e(k))),
        spec.bracket(e(j), spec.bracket(e(k), e(i))),
        spec.bracket(e(k), spec.bracket(e(i), e(j))),
    ]
    return tuple(a + b + c for a, b, c in zip(*terms))


def check_algebroid(spec: LieAlgebroidSpec) -> CheckReport:
    """Check antisymmetry, Jacobi, anchor compatibility and (chart tier) Leibniz."""
    n = spec.rank
    names = spec.names
    for (i, j) in spec.brackets:
        if not (0 <= i < n and 0 <= j < n) or any(not 0 <= k < n for k in spec.brackets[(i, j)]):
            return CheckReport(False, "basis", (i, j), "bracket refers to an undefined basis element")
    for i in range(n):
        for j in range(i, n):
            a, b = spec.structure(i, j), spec.structure(j, i)
            for k in set(a) | set(b):
                if a.get(k, spec.zero) + b.get(k, spec.zero) != 0:
                    return CheckReport(False, "antisymmetry", (names[i], names[j]),
                                       f"coefficient of {names[k]} in [{names[i]},{names[j]}] + [{names[j]},{names[i]}] is nonzero")
    for i, j, k in combinations(range(n), 3):
        v = _jacobi_vector(spec, i, j, k)
        if any(x != 0 for x in v):
            return CheckReport(False, "jacobi", (names[i], names[j], names[k]), "cyclic sum = (" + ", ".join(str(x) for x in v) + ")")
    if spec.tier == "chart":
        for i in range(n):
            for j in range(i + 1, n):
                ai, aj = spec.anchor[i], spec.anchor[j]
                lhs = ai * aj.derivative() - aj * ai.derivative()
                rhs = spec.zero
                for k, c in spec.bracket_basis(i, j).items():
                    rhs = rhs + c * spec.anchor[k]
                if lhs != rhs:
                    return CheckReport(False, "anchor", (names[i], names[j]), "a([l_i,l_j]) differs from [a(l_i),a(l_j)]")
        t = LaurentWindow({1: 1}, *spec.window)
        for i in range(n):
            for j in range(n):
                direct = spec.bracket(spec.unit(i), tuple(t * x for x in spec.unit(j)))
                expected = [t * x for x in spec.bracket(spec.unit(i), spec.unit(j))]
                expected[j] = expected[j] + spec.apply_anchor(i, t)
                if tuple(direct) != tuple(expected):
                    return CheckReport(False, "leibniz", (names[i], names[j]), "[l, t m] ≠ a(l)(t) m + t [l, m]")
    return CheckReport(True)


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------


class Form:
    """An element of Ω^k(L) with coefficients in scalars, E or End E."""

    __slots__ = ("rank", "degree", "coeffs")

    def __init__(self, rank: int, degree: int, coeffs: Mapping[tuple[int, ...], object] | None = None):
        self.rank, self.degree = rank, degree
        self.coeffs: dict[tuple[int, ...], object] = {}
        for key, v in (coeffs or {}).items():
            key = tuple(key)
            if len(key) != degree or list(key) != sorted(set(key)) or any(not 0 <= i < rank for i in key):
                raise ValueError(f"form coefficient index {key} is not a strictly increasing {degree}-tuple")
            if not viszero(v):
                self.coeffs[key] = v

    @classmethod
    def zero(cls, rank: int, degree: int) -> "Form":
        return cls(rank, degree, {})

    @classmethod
    def function(cls, rank: int, value) -> "Form":
        return cls(rank, 0, {(): value})

    @classmethod
    def dual(cls, rank: int, i: int, value=Fraction(1)) -> "Form":
        return cls(rank, 1, {(i,): value})

    def is_zero(self) -> bool:
        return not self.coeffs

    def items(self):
        return sorted(self.coeffs.items())

    def __add__(self, other: "Form") -> "Form":
        if other.degree != self.degree and not (self.is_zero() or other.is_zero()):
            raise ValueError("adding forms of different degrees")
        degree = self.degree if not self.is_zero() else other.degree
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = vadd(out[k], v) if k in out else v
        return Form(self.rank, degree, out)

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        return Form(self.rank, self.degree, {k: vscale(c, v) for k, v in self.coeffs.items()})

    def map_values(self, f: Callable) -> "Form":
        return Form(self.rank, self.degree, {k: f(v) for k, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        if self.degree != other.degree or set(self.coeffs) != set(other.coeffs):
            return False
        return all(viszero(vadd(v, vscale(-1, other.coeffs[k]))) for k, v in self.coeffs.items())

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"Form(deg {self.degree}: 0)"
        return f"Form(deg {self.degree}: " + ", ".join(f"{k}: {v}" for k, v in self.items()) + ")"

    def evaluate(self, args: Sequence[int]):
        """ω(l_{args[0]}, ..., l_{args[k-1]}) on basis elements (None when zero)."""
        if len(args) != self.degree:
            raise ValueError("wrong number of arguments")
        if len(set(args)) != len(args):
            return None
        key = tuple(sorted(args))
        v = self.coeffs.get(key)
        if v is None:
            return None
        return vscale(permutation_sign(args), v)


def basis_tuples(rank: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(rank), k))


def wedge_basis(I: tuple[int, ...], J: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """φ_I ∧ φ_J = sign · φ_K; sign 0 when the tuples overlap."""
    if set(I) & set(J):
        return 0, ()
    return permutation_sign(I + J), tuple(sorted(I + J))


def wedge(omega: Form, eta: Form) -> Form:
    """Convolution product; End factors compose, scalars act on E or End E."""
    if omega.rank != eta.rank:
        raise ValueError("forms over different algebroids")
    out: dict[tuple[int, ...], object] = {}
    degree = omega.degree + eta.degree
    if degree > omega.rank:
        return Form.zero(omega.rank, degree)
    for I, a in omega.coeffs.items():
        for J, b in eta.coeffs.items():
            s, K = wedge_basis(I, J)
            if s == 0:
                continue
            v = vscale(s, vmul(a, b))
            out[K] = vadd(out[K], v) if K in out else v
    return Form(omega.rank, degree, out)


def compose_wedge(omega: Form, eta: Form) -> Form:
    """Wedge of two End E-valued forms, composing the endomorphisms."""
    for f in (omega, eta):
        if any(not _is_matrix(v) for v in f.coeffs.values()):
            raise TypeError("compose_wedge expects End E-valued forms")
    return wedge(omega, eta)


def graded_commutator(omega: Form, eta: Form) -> Form:
    """[ω, η] = ωη − (−1)^{|ω||η|} ηω."""
    sign = -1 if (omega.degree * eta.degree) % 2 else 1
    return wedge(omega, eta) - wedge(eta, omega).scale(sign)


def contract(l: Sequence, omega: Form) -> Form:
    """Contraction l ⌟ ω with l given by coefficients over the basis."""
    if omega.degree == 0:
        return Form.zero(omega.rank, 0)
    out: dict[tuple[int, ...], object] = {}
    for I, v in omega.coeffs.items():
        for pos, i in enumerate(I):
            c = l[i]
            if c == 0:
                continue
            rest = I[:pos] + I[pos + 1:]
            term = vscale(c * (-1) ** pos, v)
            out[rest] = vadd(out[rest], term) if rest in out else term
    return Form(omega.rank, omega.degree - 1, out)


def derham_differential(spec: LieAlgebroidSpec, omega: Form) -> Form:
    """d_L ω from the anchor and the brackets, coefficientwise on vector or matrix values."""
    k = omega.degree
    r = spec.rank
    if k >= r:
        return Form.zero(r, k + 1)
    out: dict[tuple[int, ...], object] = {}

    def acc(key, v):
        if v is None or viszero(v):
            return
        out[key] = vadd(out[key], v) if key in out else v

    for J in basis_tuples(r, k + 1):
        if spec.tier == "chart":
            for i, li in enumerate(J):
                val = omega.evaluate(J[:i] + J[i + 1:])
                if val is not None:
                    acc(J, vscale((-1) ** i, vmap(lambda f, li=li: spec.apply_anchor(li, f), val)))
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                rest = J[:i] + J[i + 1:j] + J[j + 1:]
                for m, c in spec.bracket_basis(J[i], J[j]).items():
                    val = omega.evaluate((m,) + rest)
                    if val is not None:
                        acc(J, vscale(c * (-1) ** (i + j), val))
    return Form(r, k + 1, out)


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------


@dataclass
class Connection:
    """An L-connection on the free module of rank ``dim``: ∇_{l_i} = a(l_i) + N_i."""

    spec: LieAlgebroidSpec
    dim: int
    matrices: tuple

    def __post_init__(self):
        if len(self.matrices) != self.spec.rank:
            raise ValueError("one matrix per basis element of L is required")
        self.matrices = tuple(tuple(tuple(self.spec.coeff(x) for x in row) for row in M) for M in self.matrices)
        for M in self.matrices:
            if len(M) != self.dim or any(len(row) != self.dim for row in M):
                raise ValueError(f"connection matrices must be {self.dim}x{self.dim}")

    @classmethod
    def trivial(cls, spec: LieAlgebroidSpec, dim: int = 1) -> "Connection":
        z = zero_matrix(dim, spec.zero)
        return cls(spec, dim, tuple(z for _ in range(spec.rank)))

    @classmethod
    def adjoint(cls, spec: LieAlgebroidSpec) -> "Connection":
        """The adjoint representation of a point-tier Lie algebra on itself."""
        r = spec.rank
        mats = []
        for i in range(r):
            M = [[Fraction(0)] * r for _ in range(r)]
            for j in range(r):
                for k, c in spec.bracket_basis(i, j).items():
                    M[k][j] += c
            mats.append(M)
        return cls(spec, r, tuple(mats))

    def theta(self) -> Form:
        """The End E-valued 1-form Σ φ_i ⊗ N_i."""
        return Form(self.spec.rank, 1, {(i,): M for i, M in enumerate(self.matrices)})

    def act(self, i: int, v: Sequence) -> tuple:
        """∇_{l_i} applied to a section given by ring-valued coordinates."""
        out = vmul(self.matrices[i], tuple(v))
        if self.spec.tier == "chart":
            out = vadd(out, tuple(self.spec.apply_anchor(i, x) for x in v))
        return out

    def act_section(self, l: Sequence, v: Sequence) -> tuple:
        out = tuple(self.spec.zero for _ in range(self.dim))
        for i, c in enumerate(l):
            if c != 0:
                out = vadd(out, vscale(c, self.act(i, v)))
        return out

    def is_flat(self) -> bool:
        return curvature(self.spec, self).is_zero()


def curvature_operator(conn: Connection, i: int, j: int, v: Sequence) -> tuple:
    """∇_i∇_j v − ∇_j∇_i v − ∇_{[l_i,l_j]} v."""
    spec = conn.spec
    out = vadd(conn.act(i, conn.act(j, v)), vscale(-1, conn.act(j, conn.act(i, v))))
    return vadd(out, vscale(-1, conn.act_section(spec.bracket(spec.unit(i), spec.unit(j)), v)))


def curvature(spec: LieAlgebroidSpec, conn: Connection) -> Form:
    """∇² as an End E-valued 2-form, read off the operator formula on a frame."""
    n = conn.dim
    out = {}
    for i, j in combinations(range(spec.rank), 2):
        cols = []
        for b in range(n):
            e = tuple(spec.one if a == b else spec.zero for a in range(n))
            Re = curvature_operator(conn, i, j, e)
            if spec.tier == "chart":
                t = LaurentWindow({1: 1}, *spec.window)
                te = tuple(t * x for x in e)
                if curvature_operator(conn, i, j, te) != tuple(t * x for x in Re):
                    raise ValueError(f"curvature is not O-linear at ({spec.names[i]}, {spec.names[j]})")
            cols.append(Re)
        out[(i, j)] = tuple(tuple(cols[b][a] for b in range(n)) for a in range(n))
    return Form(spec.rank, 2, out)


def covariant_derivative(spec: LieAlgebroidSpec, conn: Connection, omega: Form) -> Form:
    """Extension of ∇ to E-valued forms: ∇(f·e) = d f·e + (−1)^{|f|} f·∇e."""
    return derham_differential(spec, omega) + wedge(conn.theta(), omega)


def adjoint_derivative(spec: LieAlgebroidSpec, conn: Connection, alpha: Form) -> Form:
    """[∇, α] on End E-valued forms: d α + [θ, α]."""
    return derham_differential(spec, alpha) + graded_commutator(conn.theta(), alpha)


class FlatnessError(ValueError):
    pass


def standard_complex(spec: LieAlgebroidSpec, module: Connection) -> CochainComplex:
    """(Ω*(L) ⊗ E, ∇) for a flat point-tier connection; basis keys are (I, b)."""
    if spec.tier != "point":
        raise ValueError("standard complexes are built on the point tier only")
    if not module.is_flat():
        raise FlatnessError("the connection is not flat")
    n = module.dim
    bases = {k: [(I, b) for I in basis_tuples(spec.rank, k) for b in range(n)] for k in range(spec.rank + 1)}

    def d(key):
        I, b = key
        e = tuple(Fraction(int(a == b)) for a in range(n))
        image = covariant_derivative(spec, module, Form(spec.rank, len(I), {I: e}))
        return {(J, a): x for J, v in image.coeffs.items() for a, x in enumerate(v) if x != 0}

    return complex_from_operator(bases, d)


def de_rham_complex(spec: LieAlgebroidSpec) -> CochainComplex:
    """(Ω*(L), d_L) on the point tier, basis keys are index tuples."""
    bases = {k: basis_tuples(spec.rank, k) for k in range(spec.rank + 1)}

    def d(I):
        return dict(derham_differential(spec, Form(spec.rank, len(I), {I: Fraction(1)})).coeffs)

    return complex_from_operator(bases, d)
