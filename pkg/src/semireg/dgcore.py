"""Cochain complexes, cohomology, shifts, Koszul signs and spectral sequences.

A complex is stored as a dimension per degree plus one matrix per degree
(``d[n]`` maps degree ``n`` to degree ``n + 1``). Subspaces are handled as lists
of vectors in the ambient coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .exactcore import (
    Matrix,
    Quotient,
    Vector,
    add_vectors,
    coordinates_in,
    independent_subset,
    is_zero_vector,
    quotient_basis,
    rank_kernel_image,
    scale_vector,
    solve,
    span_basis,
    zero_vector,
)


class ComplexError(ValueError):
    """Raised for malformed complexes (shape mismatch or d∘d ≠ 0)."""


@dataclass
class GradedVectorSpace:
    bases: dict[int, list]

    def __post_init__(self):
        for n, names in self.bases.items():
            if len(set(names)) != len(names):
                raise ValueError(f"repeated basis name in degree {n}")

    def dim(self, n: int) -> int:
        return len(self.bases.get(n, ()))

    @property
    def degrees(self) -> list[int]:
        return sorted(n for n, b in self.bases.items() if b)


class CochainComplex:
    """Finite cochain complex over the rationals."""

    def __init__(self, dims: Mapping[int, int], d: Mapping[int, Matrix] | None = None,
                 names: Mapping[int, list] | None = None, check: bool = True):
        self.dims = {n: k for n, k in dims.items() if k}
        self.d: dict[int, Matrix] = {}
        for n, M in (d or {}).items():
            if M.shape != (self.dim(n + 1), self.dim(n)):
                raise ComplexError(f"d^{n} has shape {M.shape}, expected {(self.dim(n + 1), self.dim(n))}")
            if self.dim(n) and self.dim(n + 1):
                self.d[n] = M
        self.names = {n: list(v) for n, v in (names or {}).items()}
        if check:
            self.check()

    def dim(self, n: int) -> int:
        return self.dims.get(n, 0)

    @property
    def degrees(self) -> list[int]:
        return sorted(self.dims)

    def differential(self, n: int) -> Matrix:
        return self.d.get(n) or Matrix.zeros(self.dim(n + 1), self.dim(n))

    def apply(self, n: int, v: Sequence) -> Vector:
        if self.dim(n + 1) == 0:
            return ()
        return self.differential(n).apply(v)

    def check(self) -> None:
        for n in self.degrees:
            if n in self.d and (n + 1) in self.d:
                if not (self.d[n + 1] @ self.d[n]).is_zero():
                    raise ComplexError(f"d^{n + 1} ∘ d^{n} ≠ 0")

    def space(self) -> GradedVectorSpace:
        return GradedVectorSpace({n: self.names.get(n, [f"e{n}_{i}" for i in range(k)]) for n, k in self.dims.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, CochainComplex) or self.dims != other.dims:
            return False
        return all(self.differential(n) == other.differential(n) for n in self.degrees)

    def __repr__(self) -> str:
        return f"CochainComplex(dims={dict(sorted(self.dims.items()))})"


@dataclass
class CohomologyGroup:
    """H^n with a deterministic basis of representative cocycles."""

    degree: int
    ambient: int
    cocycles: list[Vector]
    coboundaries: list[Vector]
    representatives: list[Vector]
    _quotient: Quotient = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def project(self, v: Sequence) -> Vector:
        """Coordinates of the class of the cocycle v in the representative basis."""
        z = coordinates_in(v, self.cocycles, self.ambient)
        if z is None:
            raise ValueError(f"vector is not a cocycle in degree {self.degree}")
        return self._quotient.coordinates(z)

    def is_exact(self, v: Sequence) -> bool:
        return is_zero_vector(self.project(v))


def cohomology(C: CochainComplex) -> dict[int, CohomologyGroup]:
    """Cohomology in every degree where the complex is nonzero."""
    C.check()
    out = {}
    for n in C.degrees:
        N = C.dim(n)
        if C.dim(n + 1):
            Z = rank_kernel_image(C.differential(n)).kernel
        else:
            Z = [tuple(Fraction(int(i == j)) for j in range(N)) for i in range(N)]
        B = rank_kernel_image(C.differential(n - 1)).image if C.dim(n - 1) else []
        B_in_Z = [coordinates_in(b, Z, N) for b in B]
        Q = quotient_basis(B_in_Z, len(Z))
        reps = [_combine(c, Z, N) for c in Q.representatives]
        out[n] = CohomologyGroup(n, N, Z, span_basis(B, N), reps, Q)
    return out


def betti(C: CochainComplex) -> dict[int, int]:
    return {n: H.dim for n, H in cohomology(C).items()}


def _combine(coeffs: Sequence, vectors: Sequence[Sequence], dim: int) -> Vector:
    out = zero_vector(dim)
    for c, v in zip(coeffs, vectors):
        if c:
            out = add_vectors(out, scale_vector(c, v))
    return out


def primitive(C: CochainComplex, n: int, v: Sequence) -> Vector | None:
    """Some y in degree n-1 with d y = v, or None when v is not exact."""
    if is_zero_vector(v):
        return zero_vector(C.dim(n - 1))
    if C.dim(n - 1) == 0:
        return None
    return solve(C.differential(n - 1), v)


def shift(C: CochainComplex, p: int) -> CochainComplex:
    """C[p]: degree n of the result is degree n+p of C, differential (-1)^p d."""
    sign = -1 if p % 2 else 1
    dims = {n - p: k for n, k in C.dims.items()}
    d = {n - p: M * sign for n, M in C.d.items()}
    names = {n - p: v for n, v in C.names.items()}
    return CochainComplex(dims, d, names, check=False)


def koszul_sign(permutation: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign picked up when reordering graded elements x_0..x_m-1 into x_{perm[0]}, ...

    Each crossing of two elements contributes (-1)^(product of degrees).
    """
    if len(permutation) != len(degrees):
        raise ValueError("permutation and degrees differ in length")
    if sorted(permutation) != list(range(len(permutation))):
        raise ValueError(f"{permutation!r} is not a permutation")
    sign = 1
    m = len(permutation)
    for i in range(m):
        for j in range(i + 1, m):
            a, b = permutation[i], permutation[j]
            if a > b and degrees[a] % 2 and degrees[b] % 2:
                sign = -sign
    return sign


def permutation_sign(seq: Sequence) -> int:
    """Parity sign of the permutation that sorts ``seq`` (entries distinct)."""
    sign = 1
    s = list(seq)
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# building complexes from sparse operators
# ---------------------------------------------------------------------------

Key = Hashable


def complex_from_operator(bases: Mapping[int, Sequence[Key]], d: Callable[[Key], Mapping[Key, Fraction]],
                          check: bool = True) -> CochainComplex:
    """Assemble a complex from basis keys per degree and a sparse differential on keys."""
    index = {n: {k: i for i, k in enumerate(b)} for n, b in bases.items()}
    dims = {n: len(b) for n, b in bases.items()}
    mats = {}
    for n, keys in bases.items():
        if not dims.get(n + 1):
            continue
        rows = [[Fraction(0)] * len(keys) for _ in range(dims[n + 1])]
        for j, k in enumerate(keys):
            for k2, c in d(k).items():
                if c:
                    rows[index[n + 1][k2]][j] += c
        mats[n] = Matrix(rows, len(keys))
    return CochainComplex(dims, mats, {n: list(b) for n, b in bases.items()}, check=check)


@dataclass
class Subquotient:
    """span(U)/span(W) for W ⊆ U inside a fixed ambient space."""

    ambient: int
    W: list[Vector]
    representatives: list[Vector]

    @classmethod
    def build(cls, U: Sequence[Sequence], W: Sequence[Sequence], ambient: int) -> "Subquotient":
        Wb = span_basis(W, ambient)
        cand = Wb + [tuple(u) for u in U]
        chosen = independent_subset(cand, ambient)
        reps = [cand[i] for i in chosen if i >= len(Wb)]
        return cls(ambient, Wb, reps)

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def coordinates(self, v: Sequence) -> Vector:
        c = coordinates_in(v, self.W + self.representatives, self.ambient)
        if c is None:
            raise ValueError("vector outside the subquotient numerator")
        return tuple(c[len(self.W):])


def subcomplex(C: CochainComplex, sub: Mapping[int, Sequence[Sequence]]) -> tuple[CochainComplex, dict[int, list[Vector]]]:
    """The complex carried by a d-stable family of subspaces, with its chosen bases."""
    basis = {n: span_basis(sub.get(n, []), C.dim(n)) for n in C.degrees}
    mats = {}
    for n in C.degrees:
        if not basis[n] or not basis.get(n + 1):
            if basis[n] and C.dim(n + 1):
                for b in basis[n]:
                    if not is_zero_vector(C.apply(n, b)):
                        raise ComplexError(f"subspace not d-stable in degree {n}")
            continue
        cols = []
        for b in basis[n]:
            c = coordinates_in(C.apply(n, b), basis[n + 1], C.dim(n + 1))
            if c is None:
                raise ComplexError(f"subspace not d-stable in degree {n}")
            cols.append(c)
        mats[n] = Matrix.from_columns(cols, len(basis[n + 1]))
    return CochainComplex({n: len(b) for n, b in basis.items()}, mats), basis


@dataclass
class QuotientComplex:
    complex: CochainComplex
    quotients: dict[int, Quotient]

    def project(self, n: int, v: Sequence) -> Vector:
        return self.quotients[n].coordinates(v) if n in self.quotients else ()

    def lift(self, n: int, coords: Sequence) -> Vector:
        return self.quotients[n].lift(coords)


def quotient_complex(C: CochainComplex, sub: Mapping[int, Sequence[Sequence]]) -> QuotientComplex:
    """C / sub for a d-stable family of subspaces."""
    Qs = {n: quotient_basis(sub.get(n, []), C.dim(n)) for n in C.degrees}
    mats = {}
    for n in C.degrees:
        if (n + 1) not in Qs or not Qs[n].dim or not Qs[n + 1].dim:
            continue
        cols = [Qs[n + 1].coordinates(C.apply(n, r)) for r in Qs[n].representatives]
        mats[n] = Matrix.from_columns(cols, Qs[n + 1].dim)
    for n in C.degrees:
        for s in Qs[n].sub_basis:
            if C.dim(n + 1) and (n + 1) in Qs and not is_zero_vector(Qs[n + 1].coordinates(C.apply(n, s))):
                raise ComplexError(f"subspace not d-stable in degree {n}")
    return QuotientComplex(CochainComplex({n: q.dim for n, q in Qs.items()}, mats), Qs)


# ---------------------------------------------------------------------------
# filtered complexes and spectral sequences
# ---------------------------------------------------------------------------


class FilteredComplex:
    """A complex with a finite decreasing filtration F_0 = C ⊇ F_1 ⊇ ... ⊇ F_N = 0.

    ``levels[p][n]`` spans F_p in degree n; F_p = C for p ≤ 0 and F_p = 0 for p ≥ N.
    """

    def __init__(self, C: CochainComplex, levels: Sequence[Mapping[int, Sequence[Sequence]]]):
        self.C = C
        self.levels = [{n: span_basis(lv.get(n, []), C.dim(n)) for n in C.degrees} for lv in levels]
        self.length = len(self.levels)
        self._validate()

    def F(self, p: int, n: int) -> list[Vector]:
        if p <= 0:
            return [tuple(Fraction(int(i == j)) for j in range(self.C.dim(n))) for i in range(self.C.dim(n))]
        if p >= self.length:
            return []
        return self.levels[p].get(n, [])

    def _validate(self) -> None:
        if self.length == 0:
            raise ComplexError("filtration needs at least F_0")
        for n in self.C.degrees:
            if len(self.levels[0].get(n, [])) != self.C.dim(n):
                raise ComplexError(f"F_0 is not the whole complex in degree {n}")
            if self.levels[-1].get(n):
                raise ComplexError("the last filtration level must be zero")
        for p in range(1, self.length):
            for n in self.C.degrees:
                for v in self.F(p, n):
                    if coordinates_in(v, self.F(p - 1, n), self.C.dim(n)) is None:
                        raise ComplexError(f"filtration not decreasing at p={p}, degree {n}")
                    if self.C.dim(n + 1):
                        dv = self.C.apply(n, v)
                        if coordinates_in(dv, self.F(p, n + 1), self.C.dim(n + 1)) is None:
                            raise ComplexError(f"F_{p} is not a subcomplex in degree {n}")


@dataclass
class SpectralPage:
    r: int
    dims: dict[tuple[int, int], int]
    representatives: dict[tuple[int, int], list[Vector]]
    differentials: dict[tuple[int, int], Matrix]

    def total(self, n: int) -> int:
        return sum(k for (p, q), k in self.dims.items() if p + q == n)


@dataclass
class SpectralSequence:
    pages: list[SpectralPage]
    infinity: SpectralPage
    cohomology_dims: dict[int, int]
    degenerates_at_E1: bool

    def page(self, r: int) -> SpectralPage:
        return self.pages[r]


def _zr(F: FilteredComplex, p: int, r: int, n: int) -> list[Vector]:
    """Z_r^{p,n} = {x ∈ F_p^n : dx ∈ F_{p+r}^{n+1}}."""
    C = F.C
    Fp = F.F(p, n)
    if not Fp:
        return []
    if not C.dim(n + 1):
        return Fp
    Q = quotient_basis(F.F(p + r, n + 1), C.dim(n + 1))
    if Q.dim == 0:
        return Fp
    M = Matrix.from_columns([Q.coordinates(C.apply(n, v)) for v in Fp], Q.dim)
    return span_basis([_combine(k, Fp, C.dim(n)) for k in rank_kernel_image(M).kernel], C.dim(n))


def _br(F: FilteredComplex, p: int, r: int, n: int) -> list[Vector]:
    """B_r^{p,n} = d(Z_r^{p-r, n-1})."""
    C = F.C
    if not C.dim(n - 1):
        return []
    return span_basis([C.apply(n - 1, v) for v in _zr(F, p - r, r, n - 1)], C.dim(n))


def _page(F: FilteredComplex, r: int) -> SpectralPage:
    C = F.C
    sq: dict[tuple[int, int], Subquotient] = {}
    for p in range(0, F.length):
        for n in C.degrees:
            U = _zr(F, p, r, n)
            W = _zr(F, p + 1, r - 1, n) + _br(F, p, r - 1, n)
            sq[(p, n)] = Subquotient.build(U, W, C.dim(n))
    dims, reps, diffs = {}, {}, {}
    for (p, n), s in sq.items():
        if s.dim:
            dims[(p, n - p)] = s.dim
            reps[(p, n - p)] = s.representatives
    for (p, n), s in sq.items():
        tgt = sq.get((p + r, n + 1))
        if not s.dim or tgt is None or not tgt.dim:
            continue
        cols = [tgt.coordinates(C.apply(n, v)) for v in s.representatives]
        diffs[(p, n - p)] = Matrix.from_columns(cols, tgt.dim)
    return SpectralPage(r, dims, reps, diffs)


def _check_page_transition(E: SpectralPage, E_next: SpectralPage) -> None:
    r = E.r
    for (p, q), k in list(E.dims.items()) + [(key, 0) for key in E_next.dims if key not in E.dims]:
        out = E.differentials.get((p, q))
        inn = E.differentials.get((p - r, q + r - 1))
        if out is not None and inn is not None and not (out @ inn).is_zero():
            raise ComplexError(f"d_{r} ∘ d_{r} ≠ 0 at {(p, q)}")
        ker = E.dims.get((p, q), 0) - (rank_kernel_image(out).rank if out is not None else 0)
        im = rank_kernel_image(inn).rank if inn is not None else 0
        if ker - im != E_next.dims.get((p, q), 0):
            raise ComplexError(f"E_{r + 1}{(p, q)} is not the cohomology of E_{r}")


def spectral_sequence(F: FilteredComplex, r_max: int = 2) -> SpectralSequence:
    """Pages E_0..E_{r_max} of the spectral sequence of a finite filtration."""
    pages = [_page(F, r) for r in range(r_max + 1)]
    for E, E_next in zip(pages, pages[1:]):
        _check_page_transition(E, E_next)
    infinity = _page(F, F.length + 1)
    H = betti(F.C)
    degenerate = True
    if r_max >= 1:
        E1 = pages[1]
    else:
        E1 = _page(F, 1)
    for n in set(H) | {p + q for (p, q) in E1.dims}:
        if E1.total(n) != H.get(n, 0):
            degenerate = False
    return SpectralSequence(pages, infinity, H, degenerate)
