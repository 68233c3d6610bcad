"""Finite curved DG-algebras, curved ideals, Atiyah classes, twisting and trace maps.

Elements are sparse dictionaries from basis keys to Fractions. An algebra is
given by its basis keys with degrees, a product and a derivation on basis
keys, and a curvature element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .algebroid import (
    CheckReport,
    Connection,
    Form,
    LieAlgebroidSpec,
    adjoint_derivative,
    basis_tuples,
    curvature,
    wedge_basis,
)
from .dgcore import CochainComplex, CohomologyGroup, Subquotient, cohomology
from .exactcore import Matrix, Vector, coordinates_in, is_zero_vector, rank_kernel_image, solve, span_basis

Key = Hashable
Element = dict  # Key -> Fraction


# ---------------------------------------------------------------------------
# sparse element arithmetic
# ---------------------------------------------------------------------------


def clean(x: Mapping) -> Element:
    return {k: v for k, v in x.items() if v != 0}


def eadd(*xs: Mapping) -> Element:
    out: dict = {}
    for x in xs:
        for k, v in x.items():
            out[k] = out.get(k, 0) + v
    return clean(out)


def escale(c, x: Mapping) -> Element:
    if c == 0:
        return {}
    return {k: c * v for k, v in x.items() if v != 0}


def esub(x: Mapping, y: Mapping) -> Element:
    return eadd(x, escale(-1, y))


class CurvedDGA:
    """A finite-dimensional graded algebra with derivation ``d`` and curvature ``R``."""

    def __init__(self, keys: Sequence[Key], degree: Mapping[Key, int],
                 mul_basis: Callable[[Key, Key], Mapping[Key, Fraction]],
                 d_basis: Callable[[Key], Mapping[Key, Fraction]],
                 R: Mapping[Key, Fraction], name: str = ""):
        self.keys = list(keys)
        self.degree = dict(degree)
        self._mul = lru_cache(maxsize=None)(lambda a, b: clean(mul_basis(a, b)))
        self._d = lru_cache(maxsize=None)(lambda a: clean(d_basis(a)))
        self.R = clean(R)
        self.name = name
        self.by_degree: dict[int, list[Key]] = {}
        for k in self.keys:
            self.by_degree.setdefault(self.degree[k], []).append(k)
        self.index = {n: {k: i for i, k in enumerate(ks)} for n, ks in self.by_degree.items()}

    # arithmetic ----------------------------------------------------------
    def mul(self, x: Mapping, y: Mapping) -> Element:
        out: dict = {}
        for a, ca in x.items():
            if ca == 0:
                continue
            for b, cb in y.items():
                if cb == 0:
                    continue
                for k, c in self._mul(a, b).items():
                    out[k] = out.get(k, 0) + ca * cb * c
        return clean(out)

    def d(self, x: Mapping) -> Element:
        out: dict = {}
        for a, ca in x.items():
            for k, c in self._d(a).items():
                out[k] = out.get(k, 0) + ca * c
        return clean(out)

    def bracket(self, x: Mapping, y: Mapping) -> Element:
        """Graded commutator, computed termwise on homogeneous components."""
        out: dict = {}
        for a, ca in x.items():
            for b, cb in y.items():
                sign = -1 if (self.degree[a] * self.degree[b]) % 2 else 1
                for k, c in self._mul(a, b).items():
                    out[k] = out.get(k, 0) + ca * cb * c
                for k, c in self._mul(b, a).items():
                    out[k] = out.get(k, 0) - sign * ca * cb * c
        return clean(out)

    def power(self, x: Mapping, k: int, unit: Mapping | None = None) -> Element:
        if k == 0:
            if unit is None:
                raise ValueError("zeroth power needs the unit")
            return dict(unit)
        out = dict(x)
        for _ in range(k - 1):
            out = self.mul(out, x)
        return out

    def degree_of(self, x: Mapping) -> int | None:
        degs = {self.degree[k] for k in x}
        if len(degs) > 1:
            raise ValueError("inhomogeneous element")
        return degs.pop() if degs else None

    # coordinates ---------------------------------------------------------
    def dim(self, n: int) -> int:
        return len(self.by_degree.get(n, []))

    def to_vector(self, x: Mapping, n: int) -> Vector:
        v = [Fraction(0)] * self.dim(n)
        for k, c in x.items():
            if self.degree[k] != n:
                if c != 0:
                    raise ValueError(f"element has a component outside degree {n}")
                continue
            v[self.index[n][k]] += c
        return tuple(v)

    def from_vector(self, v: Sequence, n: int) -> Element:
        return clean({k: c for k, c in zip(self.by_degree.get(n, []), v)})

    @property
    def degrees(self) -> list[int]:
        return sorted(self.by_degree)


def check_curved(A: CurvedDGA, check_derivation: bool = True) -> CheckReport:
    """Curvature of degree 2, d(R) = 0, d²x = [R, x] and the Leibniz rule on a basis."""
    for k in A.R:
        if A.degree[k] != 2:
            return CheckReport(False, "curvature degree", (k,), "R is not homogeneous of degree 2")
    dR = A.d(A.R)
    if dR:
        return CheckReport(False, "d(R) = 0", (), f"d(R) has {len(dR)} nonzero coefficients")
    for k in A.keys:
        lhs = A.d(A.d({k: Fraction(1)}))
        rhs = A.bracket(A.R, {k: Fraction(1)})
        if esub(lhs, rhs):
            return CheckReport(False, "d² = [R, -]", (k,), "d²x differs from [R, x]")
    if check_derivation:
        for a in A.keys:
            sa = -1 if A.degree[a] % 2 else 1
            xa, da = {a: Fraction(1)}, A.d({a: Fraction(1)})
            for b in A.keys:
                xb = {b: Fraction(1)}
                lhs = A.d(A.mul(xa, xb))
                rhs = eadd(A.mul(da, xb), escale(sa, A.mul(xa, A.d(xb))))
                if esub(lhs, rhs):
                    return CheckReport(False, "Leibniz", (a, b), "d is not a graded derivation")
    return CheckReport(True)


# ---------------------------------------------------------------------------
# the curved algebra of a connection
# ---------------------------------------------------------------------------


def _form_to_element(omega: Form) -> Element:
    out = {}
    for I, M in omega.coeffs.items():
        for a, row in enumerate(M):
            for b, x in enumerate(row):
                if x != 0:
                    out[(I, a, b)] = x
    return out


def element_to_form(rank: int, n: int, x: Mapping, degree: int) -> Form:
    coeffs: dict = {}
    for (I, a, b), c in x.items():
        if len(I) != degree:
            continue
        M = coeffs.setdefault(I, [[Fraction(0)] * n for _ in range(n)])
        M[a][b] += c
    return Form(rank, degree, {I: tuple(tuple(r) for r in M) for I, M in coeffs.items()})


def endomorphism_algebra(spec: LieAlgebroidSpec, conn: Connection) -> CurvedDGA:
    """(Ω*(L) ⊗ End E, [∇, -], ∇²) on the point tier; keys (I, a, b) mean φ_I ⊗ E_ab."""
    r, n = spec.rank, conn.dim
    keys = [(I, a, b) for k in range(r + 1) for I in basis_tuples(r, k) for a in range(n) for b in range(n)]
    degree = {key: len(key[0]) for key in keys}

    def mul(x, y):
        (I, a, b), (J, c, e) = x, y
        if b != c:
            return {}
        s, K = wedge_basis(I, J)
        return {(K, a, e): Fraction(s)} if s else {}

    def d(x):
        I, a, b = x
        E = tuple(tuple(Fraction(int((i, j) == (a, b))) for j in range(n)) for i in range(n))
        return _form_to_element(adjoint_derivative(spec, conn, Form(r, len(I), {I: E})))

    R = _form_to_element(curvature(spec, conn))
    return CurvedDGA(keys, degree, mul, d, R, name="Omega(L) x End(E)")


def unit_element(n: int) -> Element:
    return {((), a, a): Fraction(1) for a in range(n)}


# ---------------------------------------------------------------------------
# curved pairs
# ---------------------------------------------------------------------------


class CurvedPairError(ValueError):
    pass


class CurvedPair:
    """A curved DG-algebra with a curved ideal, given by spanning elements per degree."""

    def __init__(self, A: CurvedDGA, ideal: Mapping[int, Iterable[Mapping]], check: bool = True):
        self.A = A
        self.ideal = {n: span_basis([A.to_vector(x, n) for x in ideal.get(n, [])], A.dim(n)) for n in A.degrees}
        self._powers: dict[int, dict[int, list[Vector]]] = {1: self.ideal}
        if check:
            report = self.check()
            if not report:
                raise CurvedPairError(f"{report.identity}: {report.detail}")

    def contains(self, x: Mapping, basis: Mapping[int, list[Vector]] | None = None) -> bool:
        basis = self.ideal if basis is None else basis
        by_deg: dict[int, dict] = {}
        for k, c in x.items():
            by_deg.setdefault(self.A.degree[k], {})[k] = c
        return all(coordinates_in(self.A.to_vector(part, n), basis.get(n, []), self.A.dim(n)) is not None
                   for n, part in by_deg.items())

    def ideal_elements(self, basis: Mapping[int, list[Vector]]) -> list[Element]:
        return [self.A.from_vector(v, n) for n, vs in basis.items() for v in vs]

    def check(self) -> CheckReport:
        A = self.A
        gens = self.ideal_elements(self.ideal)
        for x in gens:
            for k in A.keys:
                e = {k: Fraction(1)}
                if not self.contains(A.mul(e, x)) or not self.contains(A.mul(x, e)):
                    return CheckReport(False, "bilateral", (k,), "ideal not closed under multiplication")
            if not self.contains(A.d(x)):
                return CheckReport(False, "d(I) ⊆ I", (), "ideal not d-stable")
        if not self.contains(A.R):
            return CheckReport(False, "R ∈ I", (), "curvature outside the ideal")
        return CheckReport(True)

    def power(self, k: int) -> dict[int, list[Vector]]:
        """Basis of I^(k) per degree; I^(0) = A."""
        if k == 0:
            return {n: [tuple(Fraction(int(i == j)) for j in range(self.A.dim(n))) for i in range(self.A.dim(n))]
                    for n in self.A.degrees}
        if k in self._powers:
            return self._powers[k]
        prev = self.power(k - 1)
        left = self.ideal_elements(prev)
        right = self.ideal_elements(self.ideal)
        spans: dict[int, list[Vector]] = {n: [] for n in self.A.degrees}
        for x in left:
            for y in right:
                z = self.A.mul(x, y)
                if z:
                    n = self.A.degree_of(z)
                    spans[n].append(self.A.to_vector(z, n))
        self._powers[k] = {n: span_basis(v, self.A.dim(n)) for n, v in spans.items()}
        return self._powers[k]

    def subquotient_complex(self, upper: int, lower: int) -> tuple[CochainComplex, dict[int, Subquotient]]:
        """I^(upper)/I^(lower) with the induced differential (a genuine complex when lower ≥ upper + 1)."""
        U, W = self.power(upper), self.power(lower)
        sq = {n: Subquotient.build(U.get(n, []), W.get(n, []), self.A.dim(n)) for n in self.A.degrees}
        mats = {}
        for n in self.A.degrees:
            if n + 1 not in sq or not sq[n].dim or not sq[n + 1].dim:
                continue
            cols = [sq[n + 1].coordinates(self.A.to_vector(self.A.d(self.A.from_vector(v, n)), n + 1))
                    for v in sq[n].representatives]
            mats[n] = Matrix.from_columns(cols, sq[n + 1].dim)
        return CochainComplex({n: s.dim for n, s in sq.items()}, mats), sq


def ideal_power(P: CurvedPair, k: int) -> dict[int, list[Vector]]:
    return P.power(k)


@dataclass
class AtiyahClass:
    """Class of R in H²(I/I^(2)) with the data needed to compare and certify it."""

    coordinates: Vector
    representative: Vector
    witness: Element | None
    cohomology: CohomologyGroup = field(repr=False)

    @property
    def is_zero(self) -> bool:
        return is_zero_vector(self.coordinates)


def atiyah_class(P: CurvedPair) -> AtiyahClass:
    """The class of the curvature modulo I^(2), with a witness x ∈ I¹ when it vanishes (R + dx ∈ I^(2))."""
    C, sq = P.subquotient_complex(1, 2)
    A = P.A
    r = sq[2].coordinates(A.to_vector(A.R, 2)) if 2 in sq else ()
    H = cohomology(C)
    if 2 not in H:
        return AtiyahClass((), r, {}, None)
    coords = H[2].project(r)
    witness = None
    if is_zero_vector(coords):
        if is_zero_vector(r):
            witness = {}
        else:
            y = solve(C.differential(1), tuple(-c for c in r))
            x = [Fraction(0)] * A.dim(1)
            for c, rep in zip(y, sq[1].representatives):
                x = [a + c * b for a, b in zip(x, rep)]
            witness = A.from_vector(x, 1)
    return AtiyahClass(coords, r, witness, H[2])


def twist(P: CurvedPair, x: Mapping, check: bool = True) -> CurvedPair:
    """(A, d + [x, -], R + dx + ½[x, x]) with the same ideal; x must be a degree-1 element of I."""
    A = P.A
    if x and A.degree_of(x) != 1:
        raise CurvedPairError("twisting element must have degree 1")
    if not P.contains(x):
        raise CurvedPairError("twisting element is not in the ideal")
    x = dict(x)

    def d_basis(k):
        e = {k: Fraction(1)}
        return eadd(A.d(e), A.bracket(x, e))

    R = eadd(A.R, A.d(x), escale(Fraction(1, 2), A.bracket(x, x)))
    B = CurvedDGA(A.keys, A.degree, A._mul, d_basis, R, name=A.name + " twisted")
    return CurvedPair(B, {n: P.ideal_elements({n: vs}) for n, vs in P.ideal.items()}, check=check)


def same_atiyah_class(P: CurvedPair, Q: CurvedPair) -> bool:
    """Compare classes in a common deterministic basis (Q's complex must equal P's)."""
    C1, _ = P.subquotient_complex(1, 2)
    C2, _ = Q.subquotient_complex(1, 2)
    if C1 != C2:
        raise CurvedPairError("the quotient complexes I/I^(2) differ")
    return atiyah_class(P).coordinates == atiyah_class(Q).coordinates


# ---------------------------------------------------------------------------
# trace maps and the maps σ_k¹
# ---------------------------------------------------------------------------


@dataclass
class TraceData:
    """A chain map Tr: A → C into a DG-algebra C (given as a CurvedDGA with zero curvature)."""

    target: CurvedDGA
    tr_basis: Callable[[Key], Mapping[Key, Fraction]]

    def tr(self, x: Mapping) -> Element:
        out: dict = {}
        for k, c in x.items():
            for k2, v in self.tr_basis(k).items():
                out[k2] = out.get(k2, 0) + c * v
        return clean(out)

    def filtration(self, P: CurvedPair, k: int) -> dict[int, list[Vector]]:
        """C_k = Tr(I^(k)) per degree."""
        C = self.target
        out = {}
        for n, vs in P.power(k).items():
            imgs = [C.to_vector(self.tr(P.A.from_vector(v, n)), n) for v in vs] if C.dim(n) else []
            out[n] = span_basis(imgs, C.dim(n))
        return out


def de_rham_algebra(spec: LieAlgebroidSpec) -> CurvedDGA:
    from .algebroid import derham_differential

    r = spec.rank
    keys = [I for k in range(r + 1) for I in basis_tuples(r, k)]

    def mul(I, J):
        s, K = wedge_basis(I, J)
        return {K: Fraction(s)} if s else {}

    def d(I):
        return dict(derham_differential(spec, Form(r, len(I), {I: Fraction(1)})).coeffs)

    return CurvedDGA(keys, {I: len(I) for I in keys}, mul, d, {}, name="Omega(L)")


def matrix_trace(spec: LieAlgebroidSpec) -> TraceData:
    """Tr(ω ⊗ f) = ω · tr(f) from Ω(L) ⊗ End E to Ω(L)."""
    return TraceData(de_rham_algebra(spec), lambda k: {k[0]: Fraction(1)} if k[1] == k[2] else {})


def check_trace(T: TraceData, P: CurvedPair) -> CheckReport:
    A, C = P.A, T.target
    for k in A.keys:
        e = {k: Fraction(1)}
        if esub(T.tr(A.d(e)), C.d(T.tr(e))):
            return CheckReport(False, "Tr∘d = δ∘Tr", (k,), "trace is not a chain map")
    for a in A.keys:
        for b in A.keys:
            if T.tr(A.bracket({a: Fraction(1)}, {b: Fraction(1)})):
                return CheckReport(False, "Tr([A,A]) = 0", (a, b), "trace does not kill a commutator")
    for k in range(1, 4):
        Ck = T.filtration(P, k)
        for n, vs in Ck.items():
            for v in vs:
                dv = C.d(C.from_vector(v, n))
                if dv and coordinates_in(C.to_vector(dv, n + 1), Ck.get(n + 1, []), C.dim(n + 1)) is None:
                    return CheckReport(False, "δ(C_k) ⊆ C_k", (k, n), "trace filtration is not a subcomplex")
    return CheckReport(True)


@dataclass
class QuotientTarget:
    """C/C_{k+1} as a complex, with coordinates for elements of C."""

    k: int
    complex: CochainComplex
    pieces: dict[int, Subquotient]
    target: CurvedDGA

    def project(self, y: Mapping, n: int) -> Vector:
        return self.pieces[n].coordinates(self.target.to_vector(y, n)) if n in self.pieces else ()

    def primitive(self, y: Mapping, n: int) -> Element | None:
        """Some z in C^{n-1} with δz ≡ y modulo C_{k+1}, or None."""
        coords = self.project(y, n)
        if is_zero_vector(coords):
            return {}
        if (n - 1) not in self.pieces or not self.pieces[n - 1].dim:
            return None
        sol = solve(self.complex.differential(n - 1), coords)
        if sol is None:
            return None
        z = [Fraction(0)] * self.target.dim(n - 1)
        for c, rep in zip(sol, self.pieces[n - 1].representatives):
            z = [a + c * b for a, b in zip(z, rep)]
        return self.target.from_vector(z, n - 1)


def quotient_target(T: TraceData, P: CurvedPair, k: int) -> QuotientTarget:
    C = T.target
    sub = T.filtration(P, k + 1)
    pieces = {n: Subquotient.build([tuple(Fraction(int(i == j)) for j in range(C.dim(n))) for i in range(C.dim(n))],
                                   sub.get(n, []), C.dim(n)) for n in C.degrees}
    mats = {}
    for n in C.degrees:
        if n + 1 not in pieces or not pieces[n].dim or not pieces[n + 1].dim:
            continue
        cols = [pieces[n + 1].coordinates(C.to_vector(C.d(C.from_vector(v, n)), n + 1)) for v in pieces[n].representatives]
        mats[n] = Matrix.from_columns(cols, pieces[n + 1].dim)
    return QuotientTarget(k, CochainComplex({n: p.dim for n, p in pieces.items()}, mats), pieces, C)


def sigma_k1(P: CurvedPair, T: TraceData, k: int, x: Mapping, unit: Mapping | None = None) -> Element:
    """(1/k!) Tr(R^k x) for a lift x ∈ A of an element of A/I (value in C, to be read modulo C_{k+1})."""
    if k < 0:
        raise ValueError("k must be non-negative")
    A = P.A
    y = dict(x) if k == 0 else A.mul(A.power(A.R, k), x)
    return escale(Fraction(1, factorial(k)), T.tr(y))


def sigma_chain_residual(P: CurvedPair, T: TraceData, k: int) -> int:
    """Number of basis elements x of A for which σ(dx) − δσ(x) is nonzero modulo C_{k+1}."""
    Q = quotient_target(T, P, k)
    A, C = P.A, T.target
    bad = 0
    for key in A.keys:
        x = {key: Fraction(1)}
        n = A.degree[key] + 2 * k
        lhs = sigma_k1(P, T, k, A.d(x))
        rhs = C.d(sigma_k1(P, T, k, x))
        diff = esub(lhs, rhs)
        if diff and not is_zero_vector(Q.project(diff, n + 1)):
            bad += 1
    return bad
