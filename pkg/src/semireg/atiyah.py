"""Extending flat A-modules along a Lie pair, and the class obstructing a good extension.

On the point tier everything reduces to Chevalley-Eilenberg algebra: an
extension of a flat A-connection to L is a choice of matrices on the chosen
complement, and the obstruction lives in H¹(A; (L/A)^∨ ⊗ End E).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterator, Sequence

from .algebroid import (
    CheckReport,
    Connection,
    FlatnessError,
    Form,
    LieAlgebroidSpec,
    basis_tuples,
    curvature,
    curvature_operator,
    standard_complex,
)
from .curveddg import (
    AtiyahClass,
    CurvedPair,
    atiyah_class,
    endomorphism_algebra,
    same_atiyah_class,
)
from .dgcore import cohomology
from .exactcore import Vector, is_zero_vector
from .liepair import LiePairSpec, graded_piece


def _zero(n: int) -> tuple:
    return tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))


@dataclass
class AtiyahProblem:
    """A Lie pair with a flat module over the subalgebra (matrices indexed like ``pair.sub``)."""

    pair: LiePairSpec
    module: Connection

    def __post_init__(self):
        report = self.pair.validate()
        if not report:
            raise ValueError(f"invalid pair: {report.identity} at {report.where}")
        if self.module.spec.rank != self.pair.rank_A:
            raise ValueError("the module must be a connection over the subalgebra")
        if not self.module.is_flat():
            raise FlatnessError("the A-connection is not flat")

    @property
    def dim(self) -> int:
        return self.module.dim

    @classmethod
    def from_matrices(cls, pair: LiePairSpec, matrices: Sequence) -> "AtiyahProblem":
        A = pair.sub_spec()
        n = len(matrices[0]) if matrices else 1
        return cls(pair, Connection(A, n, tuple(matrices)))


@dataclass
class ConnectionExtension:
    """An L-connection agreeing with the A-module on A; free matrices on the complement."""

    problem: AtiyahProblem
    complement_matrices: tuple

    def connection(self) -> Connection:
        pair = self.problem.pair
        mats = [None] * pair.rank_L
        for p, a in enumerate(pair.sub):
            mats[a] = self.problem.module.matrices[p]
        for p, m in enumerate(pair.complement):
            mats[m] = self.complement_matrices[p]
        return Connection(pair.ambient, self.problem.dim, tuple(mats))

    def shifted(self, x: dict) -> "ConnectionExtension":
        """Add a degree-1 element Σ φ_m ⊗ X_m (sparse keys ((m,), a, b)) to the complement matrices."""
        n = self.problem.dim
        mats = [[list(row) for row in M] for M in self.complement_matrices]
        cpos = {m: p for p, m in enumerate(self.problem.pair.complement)}
        for (I, a, b), c in x.items():
            if len(I) != 1 or I[0] not in cpos:
                raise ValueError("shift must be supported on complement duals")
            mats[cpos[I[0]]][a][b] += c
        return ConnectionExtension(self.problem, tuple(tuple(tuple(r) for r in M) for M in mats))


def extend_connection(prob: AtiyahProblem, choice: Sequence | None = None) -> ConnectionExtension:
    """The default choice puts the zero matrix on every complement element."""
    pair = prob.pair
    n = prob.dim
    if choice is None:
        mats = tuple(_zero(n) for _ in pair.complement)
    else:
        if len(choice) != pair.corank:
            raise ValueError("one matrix per complement element is required")
        mats = tuple(tuple(tuple(Fraction(x) for x in row) for row in M) for M in choice)
        if any(len(M) != n or any(len(r) != n for r in M) for M in mats):
            raise ValueError(f"complement matrices must be {n}x{n}")
    return ConnectionExtension(prob, mats)


def random_extension(prob: AtiyahProblem, rng: random.Random, bound: int = 3) -> ConnectionExtension:
    n = prob.dim
    return extend_connection(prob, [[[rng.randint(-bound, bound) for _ in range(n)] for _ in range(n)]
                                    for _ in prob.pair.complement])


@dataclass
class PairCurvature:
    """Curvature of an extension, split by the number of complement indices (0, 1 or 2+)."""

    form: Form
    blocks: dict[int, Form]

    def in_G2(self) -> bool:
        return self.blocks[0].is_zero() and self.blocks[1].is_zero()


def pair_curvature(prob: AtiyahProblem, ext: ConnectionExtension) -> PairCurvature:
    R = curvature(prob.pair.ambient, ext.connection())
    rank = prob.pair.rank_L
    parts: dict[int, dict] = {0: {}, 1: {}, 2: {}}
    for I, v in R.coeffs.items():
        parts[min(prob.pair.m_count(I), 2)][I] = v
    return PairCurvature(R, {p: Form(rank, 2, c) for p, c in parts.items()})


def mixed_block(prob: AtiyahProblem, ext: ConnectionExtension, a: int, m: int) -> tuple:
    """[∇_a, ∇'_m] − ∇'_{complement part of [a,m]} − ∇_{A-part of [a,m]}, as a matrix."""
    conn = ext.connection()
    n = prob.dim
    cols = []
    for b in range(n):
        e = tuple(Fraction(int(i == b)) for i in range(n))
        cols.append(curvature_operator(conn, a, m, e))
    return tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))


def end_module(conn: Connection) -> Connection:
    """End E with the adjoint action f ↦ [N, f]; basis E_bc at index b*n + c."""
    n = conn.dim
    mats = []
    for N in conn.matrices:
        M = [[Fraction(0)] * (n * n) for _ in range(n * n)]
        for b2 in range(n):
            for c2 in range(n):
                col = b2 * n + c2
                for b in range(n):
                    if N[b][b2] != 0:
                        M[b * n + c2][col] += N[b][b2]
                for c in range(n):
                    if N[c2][c] != 0:
                        M[b2 * n + c][col] -= N[c2][c]
        mats.append(M)
    return Connection(conn.spec, n * n, tuple(mats))


def leray_pair(prob: AtiyahProblem, ext: ConnectionExtension) -> CurvedPair:
    """(Ω(L) ⊗ End E, [∇', -], ∇'²) with the ideal G_1 ⊗ End E."""
    A = endomorphism_algebra(prob.pair.ambient, ext.connection())
    gens: dict[int, list] = {}
    for k in A.keys:
        if prob.pair.m_count(k[0]) >= 1:
            gens.setdefault(A.degree[k], []).append({k: Fraction(1)})
    return CurvedPair(A, gens, check=False)


@dataclass
class AtiyahClassValue:
    """The pair class in two incarnations, with a witness extension when it vanishes."""

    curved: AtiyahClass
    bott_cocycle: Vector
    bott_class: Vector
    extension: ConnectionExtension
    witness: ConnectionExtension | None
    independent_of_extension: bool | None = None
    pair: CurvedPair | None = field(default=None, repr=False)

    @property
    def is_zero(self) -> bool:
        return self.curved.is_zero

    @property
    def routes_agree(self) -> bool:
        return self.curved.is_zero == is_zero_vector(self.bott_class)


def bott_cocycle(prob: AtiyahProblem, ext: ConnectionExtension):
    """Mixed curvature block as a 1-cochain of A with values in (L/A)^∨ ⊗ End E."""
    gp = graded_piece(prob.pair, end_module(prob.module), 1)
    R = pair_curvature(prob, ext).blocks[1]
    n = prob.dim
    std = gp.standard
    if 1 not in std.names:
        return std, ()
    vec = [Fraction(0)] * std.dim(1)
    index = {k: i for i, k in enumerate(std.names[1])}
    for I, M in R.coeffs.items():
        for b in range(n):
            for c in range(n):
                if M[b][c] == 0:
                    continue
                s, target = gp.key_map[(I, b * n + c)]
                vec[index[target]] += s * M[b][c]
    return std, tuple(vec)


def atiyah_class_pair(prob: AtiyahProblem, ext: ConnectionExtension | None = None,
                      second: ConnectionExtension | None = None, seed: int = 0) -> AtiyahClassValue:
    ext = ext or extend_connection(prob)
    P = leray_pair(prob, ext)
    cls = atiyah_class(P)
    std, cocycle = bott_cocycle(prob, ext)
    if not is_zero_vector(std.apply(1, cocycle)) if std.dim(2) else False:
        raise ArithmeticError("mixed curvature block is not a cocycle")
    H = cohomology(std)
    bott = H[1].project(cocycle) if 1 in H else ()
    witness = ext.shifted(cls.witness) if cls.witness is not None else None
    other = second or random_extension(prob, random.Random(seed))
    independent = same_atiyah_class(P, leray_pair(prob, other))
    return AtiyahClassValue(cls, cocycle, bott, ext, witness, independent, P)


@dataclass
class ProjectionResult:
    ok: bool
    report: CheckReport
    extension: ConnectionExtension | None = None
    curvature: PairCurvature | None = None


def vanishing_by_projection(prob: AtiyahProblem, p: Sequence[Sequence]) -> ProjectionResult:
    """p is a rank_A x rank_L matrix (columns: L-basis) with p = id on A.

    When p commutes with the adjoint action of A, ∇̃ = ∇ ∘ p is an extension
    whose curvature lies in G_2.
    """
    pair = prob.pair
    L = pair.ambient
    P = [[Fraction(x) for x in row] for row in p]
    if len(P) != pair.rank_A or any(len(r) != pair.rank_L for r in P):
        raise ValueError("projection must be rank_A x rank_L")
    for i, a in enumerate(pair.sub):
        for j in range(pair.rank_A):
            if P[j][a] != int(i == j):
                return ProjectionResult(False, CheckReport(False, "p|A = id", (L.names[a],),
                                                           "projection is not the identity on A"))
    spos = {a: i for i, a in enumerate(pair.sub)}

    def proj(vec):
        return tuple(sum((P[j][l] * vec[l] for l in range(pair.rank_L)), Fraction(0)) for j in range(pair.rank_A))

    def incl(vec):
        out = [Fraction(0)] * pair.rank_L
        for j, a in enumerate(pair.sub):
            out[a] = vec[j]
        return out

    for a in pair.sub:
        for y in range(pair.rank_L):
            lhs = proj(L.bracket(L.unit(a), L.unit(y)))
            rhs = proj(L.bracket(L.unit(a), incl(proj(L.unit(y)))))
            if lhs != rhs:
                return ProjectionResult(False, CheckReport(False, "p([x,y]) = [x,p(y)]", (L.names[a], L.names[y]),
                                                           f"{lhs} != {rhs}"))
    if L.tier == "chart":
        for y in range(pair.rank_L):
            ay = sum((P[j][y] * L.anchor_of(a) for j, a in enumerate(pair.sub)), L.zero)
            if ay != L.anchor_of(y):
                return ProjectionResult(False, CheckReport(False, "a∘p = a", (L.names[y],), "anchor not preserved"))
    n = prob.dim
    mats = []
    for m in pair.complement:
        M = [[Fraction(0)] * n for _ in range(n)]
        for j in range(pair.rank_A):
            if P[j][m] != 0:
                N = prob.module.matrices[j]
                for r in range(n):
                    for c in range(n):
                        M[r][c] += P[j][m] * N[r][c]
        mats.append(M)
    ext = extend_connection(prob, mats)
    curv = pair_curvature(prob, ext)
    if not curv.in_G2():
        return ProjectionResult(False, CheckReport(False, "curvature in G_2", (), "mixed block nonzero"), ext, curv)
    return ProjectionResult(True, CheckReport(True), ext, curv)


@dataclass
class ReducedAtiyah:
    """Image of the pair class under the map keeping the form-degree-1 Tot component."""

    coordinates: Vector
    pair_class_zero: bool

    @property
    def is_zero(self) -> bool:
        return is_zero_vector(self.coordinates)


def reduced_atiyah(prob) -> ReducedAtiyah:
    """Point tier: the Tot model has a single simplex level, so the form-degree-1
    component of a degree-2 class is empty and the value is 0 in G_1¹ ⊗ End E.
    Two-chart line bundles (``twtot.LineBundleProblem``) go through the Čech model."""
    from .twtot import LineBundleProblem, line_bundle_atiyah

    if isinstance(prob, LineBundleProblem):
        value = line_bundle_atiyah(prob)
        return ReducedAtiyah(value.coordinates, value.is_zero)
    pair_cls = atiyah_class_pair(prob)
    size = prob.pair.corank * prob.dim * prob.dim
    return ReducedAtiyah(tuple(Fraction(0) for _ in range(size)), pair_cls.is_zero)


# ---------------------------------------------------------------------------
# bounded search for a pair with nonvanishing class
# ---------------------------------------------------------------------------


def _value_order(values: Sequence[int]) -> list[int]:
    return sorted((v for v in values if v != 0), key=lambda v: (abs(v), v < 0))


def _sparse_vectors(length: int, values: Sequence[int], max_nnz: int) -> Iterator[tuple]:
    vals = _value_order(values)
    for k in range(max_nnz + 1):
        for pos in combinations(range(length), k):
            for choice in product(vals, repeat=k):
                v = [0] * length
                for p_, c in zip(pos, choice):
                    v[p_] = c
                yield tuple(v)


def _algebras(dim: int, values: Sequence[int], max_nnz: int) -> Iterator[LieAlgebroidSpec]:
    from .algebroid import check_algebroid

    names = [f"l{i}" for i in range(dim)]
    slots = [(i, j, k) for i, j in combinations(range(dim), 2) for k in range(dim)]
    for v in _sparse_vectors(len(slots), values, max_nnz):
        br: dict = {}
        for (i, j, k), c in zip(slots, v):
            if c:
                br.setdefault((names[i], names[j]), {})[names[k]] = c
        spec = LieAlgebroidSpec.lie_algebra(names, br)
        if check_algebroid(spec):
            yield spec


def _modules(A: LieAlgebroidSpec, n: int, values: Sequence[int], max_nnz: int) -> Iterator[Connection]:
    for v in _sparse_vectors(A.rank * n * n, values, max_nnz):
        if not any(v):
            continue
        mats = [[[v[(a * n + r) * n + c] for c in range(n)] for r in range(n)] for a in range(A.rank)]
        conn = Connection(A, n, tuple(mats))
        if conn.is_flat():
            yield conn


def has_primary_obstruction(prob: AtiyahProblem) -> bool:
    """Whether some first-order deformation x of the A-module has [x, x] non-exact in H²(A; End E)."""
    from .curveddg import endomorphism_algebra as ea

    A = prob.pair.sub_spec()
    D = ea(A, prob.module)
    C = standard_complex(A, end_module(prob.module))
    H = cohomology(C)
    if 2 not in H or not H[2].dim or 1 not in H or not H[1].dim:
        return False
    n = prob.dim
    reps = [D.from_vector(_end_to_alg(C, D, v, 1, n), 1) for v in H[1].representatives]
    for i in range(len(reps)):
        for j in range(i, len(reps)):
            br = D.bracket(reps[i], reps[j])
            vec = _alg_to_end(C, D, br, 2, n)
            if not is_zero_vector(H[2].project(vec)):
                return True
    return False


def _end_to_alg(C, D, v, deg, n):
    out = [Fraction(0)] * D.dim(deg)
    for (I, idx), c in zip(C.names[deg], v):
        if c:
            out[D.index[deg][(I, idx // n, idx % n)]] += c
    return out


def _alg_to_end(C, D, x, deg, n):
    index = {k: i for i, k in enumerate(C.names[deg])}
    out = [Fraction(0)] * C.dim(deg)
    for (I, b, c), val in x.items():
        out[index[(I, b * n + c)]] += val
    return tuple(out)


@dataclass
class SearchHit:
    problem: AtiyahProblem
    value: AtiyahClassValue
    examined: int


def search_nonvanishing(max_dim: int = 4, values: Sequence[int] = range(-2, 3), max_module_dim: int = 2,
                        require_h2: bool = True, require_obstruction: bool = True,
                        algebra_nnz: int = 2, module_nnz: int = 2) -> SearchHit | None:
    """First pair/module (in a fixed sparsity-first order) whose pair class is nonzero.

    Algebras are enumerated by dimension, then by number of nonzero structure
    constants; subalgebras are spanned by basis subsets; modules by number of
    nonzero matrix entries. The optional requirements ask for H²(A; End E) ≠ 0
    and a genuinely obstructed first-order deformation.
    """
    examined = 0
    for dim in range(2, max_dim + 1):
        for L in _algebras(dim, values, algebra_nnz):
            for size in range(dim - 1, 0, -1):
                for sub in combinations(range(dim), size):
                    pair = LiePairSpec(L, sub)
                    if not pair.validate():
                        continue
                    A = pair.sub_spec()
                    if require_h2 and A.rank < 2:
                        continue
                    for n in range(1, max_module_dim + 1):
                        for conn in _modules(A, n, values, module_nnz):
                            examined += 1
                            prob = AtiyahProblem(pair, conn)
                            ext = extend_connection(prob)
                            cls = atiyah_class(leray_pair(prob, ext))
                            if cls.is_zero:
                                continue
                            if require_h2:
                                H = cohomology(standard_complex(A, end_module(conn)))
                                if 2 not in H or H[2].dim == 0:
                                    continue
                            if require_obstruction and not has_primary_obstruction(prob):
                                continue
                            return SearchHit(prob, atiyah_class_pair(prob, ext), examined)
    return None
