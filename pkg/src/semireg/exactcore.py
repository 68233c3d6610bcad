"""Exact linear algebra over the rationals and Laurent coefficient windows.

Everything here works with :class:`fractions.Fraction`; nothing is ever rounded.
Elimination always takes the first nonzero pivot in column order, so kernels,
images and quotient representatives come out in the same order on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

Vector = tuple  # tuple of Fractions


def rat(value) -> Fraction:
    """Parse ``3/2``, ``-4``, ints or Fractions into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def vec(values: Iterable) -> Vector:
    return tuple(rat(v) for v in values)


def zero_vector(n: int) -> Vector:
    return (Fraction(0),) * n


def unit_vector(n: int, i: int) -> Vector:
    return tuple(Fraction(1) if j == i else Fraction(0) for j in range(n))


def is_zero_vector(v: Sequence) -> bool:
    return all(x == 0 for x in v)


def add_vectors(u: Sequence, v: Sequence) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def scale_vector(c, v: Sequence) -> Vector:
    return tuple(c * a for a in v)


class Matrix:
    """Dense exact matrix stored row by row."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        self.rows = [[rat(x) for x in r] for r in rows]
        self.nrows = len(self.rows)
        if ncols is None:
            ncols = len(self.rows[0]) if self.rows else 0
        self.ncols = ncols
        for r in self.rows:
            if len(r) != ncols:
                raise ValueError("ragged matrix rows")

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "Matrix":
        return cls([[0] * ncols for _ in range(nrows)], ncols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int) -> "Matrix":
        return cls([[c[i] for c in columns] for i in range(nrows)], len(columns))

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.ncols)]

    @property
    def T(self) -> "Matrix":
        return Matrix([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)], self.nrows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def apply(self, v: Sequence) -> Vector:
        if len(v) != self.ncols:
            raise ValueError(f"vector of length {len(v)} against {self.nrows}x{self.ncols} matrix")
        return tuple(sum((a * b for a, b in zip(r, v) if a and b), Fraction(0)) for r in self.rows)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch in product")
        cols = other.columns()
        return Matrix.from_columns([self.apply(c) for c in cols], self.nrows) if cols else Matrix.zeros(self.nrows, 0)

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch in sum")
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)], self.ncols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + other * -1

    def __mul__(self, c) -> "Matrix":
        c = rat(c)
        return Matrix([[c * a for a in r] for r in self.rows], self.ncols)

    __rmul__ = __mul__

    def __neg__(self) -> "Matrix":
        return self * -1

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash((self.shape, tuple(map(tuple, self.rows))))

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.rows for x in r)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in r) for r in self.rows)
        return f"Matrix({self.nrows}x{self.ncols}: [{body}])"


def rref(M: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    rows = [list(r) for r in M.rows]
    pivots: list[int] = []
    lead = 0
    for c in range(M.ncols):
        pivot_row = next((i for i in range(lead, len(rows)) if rows[i][c] != 0), None)
        if pivot_row is None:
            continue
        rows[lead], rows[pivot_row] = rows[pivot_row], rows[lead]
        p = rows[lead][c]
        if p != 1:
            rows[lead] = [x / p for x in rows[lead]]
        for i in range(len(rows)):
            if i != lead and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[lead])]
        pivots.append(c)
        lead += 1
        if lead == len(rows):
            break
    return Matrix(rows, M.ncols), pivots


@dataclass(frozen=True)
class RankData:
    rank: int
    kernel: list[Vector]
    image: list[Vector]
    pivots: list[int] = field(default_factory=list)


def rank_kernel_image(M: Matrix) -> RankData:
    """Rank, a kernel basis and an image basis of ``M``.

    The kernel basis is the standard one read off the reduced echelon form
    (one vector per free column). The image basis is the set of pivot columns
    of ``M`` itself.
    """
    R, pivots = rref(M)
    free = [j for j in range(M.ncols) if j not in pivots]
    kernel = []
    for f in free:
        v = [Fraction(0)] * M.ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R.rows[i][f]
        kernel.append(tuple(v))
    image = [M.column(p) for p in pivots]
    return RankData(len(pivots), kernel, image, pivots)


def rank(M: Matrix) -> int:
    return len(rref(M)[1])


def solve(M: Matrix, b: Sequence) -> Vector | None:
    """A particular solution of ``M x = b`` or ``None`` when b is not in the image."""
    b = vec(b)
    if len(b) != M.nrows:
        raise ValueError(f"right-hand side has length {len(b)}, matrix has {M.nrows} rows")
    aug = Matrix([list(r) + [bi] for r, bi in zip(M.rows, b)], M.ncols + 1)
    R, pivots = rref(aug)
    if M.ncols in pivots:
        return None
    x = [Fraction(0)] * M.ncols
    for i, p in enumerate(pivots):
        x[p] = R.rows[i][M.ncols]
    return tuple(x)


def span_basis(vectors: Sequence[Sequence], dim: int) -> list[Vector]:
    """An independent subset-derived basis of the span (echelon rows, deterministic)."""
    if not vectors:
        return []
    R, pivots = rref(Matrix([list(v) for v in vectors], dim))
    return [tuple(R.rows[i]) for i in range(len(pivots))]


def independent_subset(vectors: Sequence[Sequence], dim: int) -> list[int]:
    """Indices of a maximal independent subset, scanning in input order."""
    if not vectors:
        return []
    _, pivots = rref(Matrix.from_columns(list(vectors), dim))
    return pivots


@dataclass(frozen=True)
class Quotient:
    """Representatives of ambient/sub together with the coordinate projection.

    ``project`` is a matrix of shape (len(representatives), ambient); it kills
    ``sub`` and sends the i-th representative to the i-th unit vector.
    """

    ambient: int
    sub_basis: list[Vector]
    representatives: list[Vector]
    project: Matrix

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def coordinates(self, v: Sequence) -> Vector:
        return self.project.apply(v)

    def lift(self, coords: Sequence) -> Vector:
        out = zero_vector(self.ambient)
        for c, r in zip(coords, self.representatives):
            if c:
                out = add_vectors(out, scale_vector(c, r))
        return out


def quotient_basis(sub: Sequence[Sequence], ambient: int) -> Quotient:
    """Complete a basis of span(sub) by standard unit vectors and project onto them."""
    sub_b = span_basis(sub, ambient)
    candidates = list(sub_b) + [unit_vector(ambient, i) for i in range(ambient)]
    chosen = independent_subset(candidates, ambient)
    reps = [candidates[i] for i in chosen if i >= len(sub_b)]
    basis = sub_b + reps
    if not basis:
        return Quotient(ambient, [], [], Matrix.zeros(0, ambient))
    B = Matrix.from_columns(basis, ambient)
    inv = inverse(B)
    project = Matrix(inv.rows[len(sub_b):], ambient)
    return Quotient(ambient, sub_b, reps, project)


def inverse(M: Matrix) -> Matrix:
    n = M.nrows
    if n != M.ncols:
        raise ValueError("inverse of a non-square matrix")
    aug = Matrix([list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(M.rows)], 2 * n)
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return Matrix([r[n:] for r in R.rows], n)


def in_span(v: Sequence, basis: Sequence[Sequence], dim: int) -> bool:
    if is_zero_vector(v):
        return True
    if not basis:
        return False
    return solve(Matrix.from_columns(list(basis), dim), v) is not None


def coordinates_in(v: Sequence, basis: Sequence[Sequence], dim: int) -> Vector | None:
    """Coefficients of v in terms of an independent ``basis`` (None if outside)."""
    if not basis:
        return () if is_zero_vector(v) else None
    return solve(Matrix.from_columns(list(basis), dim), v)


def intersect(U: Sequence[Sequence], W: Sequence[Sequence], dim: int) -> list[Vector]:
    """Basis of span(U) ∩ span(W)."""
    U = span_basis(U, dim)
    W = span_basis(W, dim)
    if not U or not W:
        return []
    M = Matrix.from_columns(U + [scale_vector(-1, w) for w in W], dim)
    out = []
    for k in rank_kernel_image(M).kernel:
        x = zero_vector(dim)
        for c, u in zip(k[: len(U)], U):
            if c:
                x = add_vectors(x, scale_vector(c, u))
        out.append(x)
    return span_basis(out, dim)


# ---------------------------------------------------------------------------
# Laurent windows
# ---------------------------------------------------------------------------


class LaurentWindow:
    """A Laurent polynomial in one variable, kept inside the exponent range [lo, hi].

    Operations that would create a nonzero coefficient outside the window drop
    it and set ``truncated``; the flag is sticky through further arithmetic.
    """

    __slots__ = ("var", "lo", "hi", "coeffs", "truncated")

    def __init__(self, coeffs: dict[int, object] | None = None, lo: int = -8, hi: int = 8,
                 var: str = "t", truncated: bool = False):
        if lo > hi:
            raise ValueError(f"empty Laurent window [{lo}, {hi}]")
        self.var, self.lo, self.hi = var, lo, hi
        self.truncated = truncated
        self.coeffs: dict[int, Fraction] = {}
        for e, c in (coeffs or {}).items():
            c = rat(c)
            if c == 0:
                continue
            if lo <= e <= hi:
                self.coeffs[e] = c
            else:
                self.truncated = True

    # construction helpers
    @classmethod
    def monomial(cls, exp: int, coeff=1, lo: int = -8, hi: int = 8, var: str = "t") -> "LaurentWindow":
        return cls({exp: coeff}, lo, hi, var)

    @classmethod
    def constant(cls, c, lo: int = -8, hi: int = 8, var: str = "t") -> "LaurentWindow":
        return cls({0: c}, lo, hi, var)

    def _like(self, coeffs, truncated=False, other=None) -> "LaurentWindow":
        flag = truncated or self.truncated or bool(other is not None and getattr(other, "truncated", False))
        return LaurentWindow(coeffs, self.lo, self.hi, self.var, flag)

    def _coerce(self, other) -> "LaurentWindow":
        if isinstance(other, LaurentWindow):
            if (other.lo, other.hi, other.var) != (self.lo, self.hi, self.var):
                raise ValueError("Laurent windows disagree")
            return other
        return LaurentWindow({0: other}, self.lo, self.hi, self.var)

    def __add__(self, other) -> "LaurentWindow":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return self._like(out, other=other)

    __radd__ = __add__

    def __neg__(self) -> "LaurentWindow":
        return self._like({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other) -> "LaurentWindow":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "LaurentWindow":
        return self._coerce(other) - self

    def __mul__(self, other) -> "LaurentWindow":
        other = self._coerce(other)
        out: dict[int, Fraction] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return self._like(out, other=other)

    __rmul__ = __mul__

    def derivative(self) -> "LaurentWindow":
        """d/dvar, exponents shift down by one."""
        return self._like({e - 1: e * c for e, c in self.coeffs.items() if e != 0})

    def invert_variable(self, var: str = "s") -> "LaurentWindow":
        """Substitute var -> 1/var' (the chart gluing s = 1/t), window mirrored."""
        return LaurentWindow({-e: c for e, c in self.coeffs.items()}, -self.hi, -self.lo, var, self.truncated)

    def rewindow(self, lo: int, hi: int) -> "LaurentWindow":
        return LaurentWindow(dict(self.coeffs), lo, hi, self.var, self.truncated)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentWindow):
            return self.coeffs == other.coeffs
        if other == 0:
            return not self.coeffs
        return self.coeffs == ({0: rat(other)} if rat(other) != 0 else {})

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for e in sorted(self.coeffs):
            c = self.coeffs[e]
            terms.append(f"{c}" if e == 0 else f"{c}*{self.var}^{e}")
        return " + ".join(terms)
