"""Lie pairs over a point: restriction, Leray filtration, Bott connection, graded pieces.

A pair is a Lie algebra L with a subalgebra A spanned by a subset of the basis;
the remaining basis vectors span the chosen complement m, which identifies
L/A with m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .algebroid import (
    CheckReport,
    Connection,
    FlatnessError,
    Form,
    LieAlgebroidSpec,
    basis_tuples,
    covariant_derivative,
    de_rham_complex,
    standard_complex,
    wedge,
)
from .dgcore import (
    CochainComplex,
    FilteredComplex,
    betti,
    cohomology,
    complex_from_operator,
    permutation_sign,
    shift,
    spectral_sequence,
)


@dataclass
class LiePairSpec:
    ambient: LieAlgebroidSpec
    sub: tuple[int, ...]
    complement: tuple[int, ...] = ()

    def __post_init__(self):
        self.sub = tuple(sorted(self.sub))
        if not self.complement:
            self.complement = tuple(i for i in range(self.ambient.rank) if i not in self.sub)
        self.complement = tuple(sorted(self.complement))

    @classmethod
    def by_names(cls, ambient: LieAlgebroidSpec, sub_names: Sequence[str]) -> "LiePairSpec":
        return cls(ambient, tuple(ambient.index(n) for n in sub_names))

    @property
    def rank_L(self) -> int:
        return self.ambient.rank

    @property
    def rank_A(self) -> int:
        return len(self.sub)

    @property
    def corank(self) -> int:
        return len(self.complement)

    def validate(self) -> CheckReport:
        L = self.ambient
        if sorted(self.sub + self.complement) != list(range(L.rank)):
            return CheckReport(False, "splitting", (), "sub and complement do not partition the basis")
        for a, b in combinations(self.sub, 2):
            for k, c in L.bracket_basis(a, b).items():
                if k in self.complement and c != 0:
                    return CheckReport(False, "closure", (L.names[a], L.names[b]),
                                       f"[{L.names[a]},{L.names[b]}] has a component along {L.names[k]}")
        return CheckReport(True)

    def sub_spec(self) -> LieAlgebroidSpec:
        """A as a Lie algebra in its own basis (positions in ``sub``)."""
        L = self.ambient
        pos = {i: p for p, i in enumerate(self.sub)}
        table = {}
        for a in self.sub:
            for b in self.sub:
                row = {pos[k]: c for k, c in L.bracket_basis(a, b).items() if k in pos}
                if row:
                    table[(pos[a], pos[b])] = row
        return LieAlgebroidSpec(tuple(L.names[i] for i in self.sub), table)

    def m_count(self, I: Sequence[int]) -> int:
        return sum(1 for i in I if i in self.complement)


def restrict(pair: LiePairSpec, omega: Form) -> Form:
    """ρ: Ω(L) → Ω(A), evaluate on elements of A only."""
    pos = {i: p for p, i in enumerate(pair.sub)}
    out = {}
    for I, v in omega.coeffs.items():
        if all(i in pos for i in I):
            out[tuple(pos[i] for i in I)] = v
    return Form(pair.rank_A, omega.degree, out)


# ---------------------------------------------------------------------------
# Leray filtration
# ---------------------------------------------------------------------------


@dataclass
class LerayFiltration:
    """G_p^k as lists of basis keys (I, b) of Ω^k(L) ⊗ E, with |I ∩ m| ≥ p."""

    pair: LiePairSpec
    module_dim: int
    levels: dict[int, dict[int, list[tuple]]]

    def dim(self, p: int, k: int) -> int:
        return len(self.levels.get(p, {}).get(k, []))

    def contains(self, p: int, omega: Form) -> bool:
        return all(self.pair.m_count(I) >= p for I in omega.coeffs)

    @property
    def length(self) -> int:
        return self.pair.corank + 1


def leray_filtration(pair: LiePairSpec, module_dim: int = 1) -> LerayFiltration:
    r = pair.rank_L
    levels = {}
    for p in range(pair.corank + 2):
        levels[p] = {k: [(I, b) for I in basis_tuples(r, k) for b in range(module_dim) if pair.m_count(I) >= p]
                     for k in range(r + 1)}
    return LerayFiltration(pair, module_dim, levels)


def kernel_power_forms(pair: LiePairSpec, p: int) -> dict[int, list[Form]]:
    """Spanning forms of the p-th power of ker ρ, built by wedging kernel 1-forms with arbitrary forms."""
    r = pair.rank_L
    ker1 = [Form.dual(r, m) for m in pair.complement]
    current = {k: [Form(r, k, {I: Fraction(1)}) for I in basis_tuples(r, k)] for k in range(r + 1)}
    for _ in range(p):
        nxt: dict[int, list[Form]] = {k: [] for k in range(r + 1)}
        for k, forms in current.items():
            for f in forms:
                for g in ker1:
                    h = wedge(g, f)
                    if not h.is_zero():
                        nxt[h.degree].append(h)
        current = nxt
    return current


def in_G1_degree2(pair: LiePairSpec, phi: Form) -> bool:
    """φ(a, b) = 0 for all a, b in A."""
    return all(phi.evaluate((a, b)) in (None, 0) for a, b in combinations(pair.sub, 2))


def in_G2_degree2(pair: LiePairSpec, phi: Form) -> bool:
    """φ(a, l) = 0 for all a in A and l in L."""
    return all(phi.evaluate((a, l)) in (None, 0) for a in pair.sub for l in range(pair.rank_L) if l != a)


# ---------------------------------------------------------------------------
# Bott connection and its exterior powers
# ---------------------------------------------------------------------------


@dataclass
class BottModule:
    """The A-modules L/A, its dual and ⋀^r of the dual, as point-tier connections on A."""

    pair: LiePairSpec
    quotient: Connection
    dual: Connection

    def exterior_dual(self, r: int) -> tuple[Connection, list[tuple[int, ...]]]:
        """⋀^r (L/A)^∨ with its basis of position r-subsets of the complement."""
        A = self.dual.spec
        q = self.pair.corank
        basis = list(combinations(range(q), r))
        idx = {J: i for i, J in enumerate(basis)}
        mats = []
        for a in range(A.rank):
            D = self.dual.matrices[a]
            M = [[Fraction(0)] * len(basis) for _ in basis]
            for col, J in enumerate(basis):
                for s, j in enumerate(J):
                    for j2 in range(q):
                        c = D[j2][j]
                        if c == 0:
                            continue
                        new = J[:s] + (j2,) + J[s + 1:]
                        if len(set(new)) < r:
                            continue
                        sign = permutation_sign(new)
                        M[idx[tuple(sorted(new))]][col] += sign * c
            mats.append(M)
        return Connection(A, len(basis), tuple(mats)), basis


def bott_connection(pair: LiePairSpec) -> BottModule:
    L = pair.ambient
    A = pair.sub_spec()
    q = pair.corank
    cpos = {m: p for p, m in enumerate(pair.complement)}
    mats, duals = [], []
    for a in pair.sub:
        M = [[Fraction(0)] * q for _ in range(q)]
        for col, m in enumerate(pair.complement):
            for k, c in L.bracket_basis(a, m).items():
                if k in cpos:
                    M[cpos[k]][col] += c
        mats.append(M)
        duals.append([[-M[j][i] for j in range(q)] for i in range(q)])
    return BottModule(pair, Connection(A, q, tuple(mats)), Connection(A, q, tuple(duals)))


def tensor_connection(first: Connection, second: Connection) -> Connection:
    """∇ ⊗ 1 + 1 ⊗ ∇ on the tensor product, basis ordered (i, j) lexicographically."""
    n1, n2 = first.dim, second.dim
    mats = []
    for M1, M2 in zip(first.matrices, second.matrices):
        M = [[Fraction(0)] * (n1 * n2) for _ in range(n1 * n2)]
        for i in range(n1):
            for j in range(n2):
                col = i * n2 + j
                for i2 in range(n1):
                    if M1[i2][i] != 0:
                        M[i2 * n2 + j][col] += M1[i2][i]
                for j2 in range(n2):
                    if M2[j2][j] != 0:
                        M[i * n2 + j2][col] += M2[j2][j]
        mats.append(M)
    return Connection(first.spec, n1 * n2, tuple(mats))


# ---------------------------------------------------------------------------
# graded pieces of the Leray filtration
# ---------------------------------------------------------------------------


def extend_by_zero(pair: LiePairSpec, module: Connection) -> Connection:
    """An L-connection restricting to ``module`` on A, zero on the complement."""
    L = pair.ambient
    n = module.dim
    zero = tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))
    mats = [zero] * L.rank
    for p, a in enumerate(pair.sub):
        mats[a] = module.matrices[p]
    return Connection(L, n, tuple(mats))


@dataclass
class GradedPiece:
    r: int
    quotient: CochainComplex
    standard: CochainComplex
    key_map: dict[tuple, tuple[int, tuple]] = field(repr=False)
    residual: int = 0

    @property
    def is_isomorphism(self) -> bool:
        return self.residual == 0 and len(self.key_map) == sum(self.standard.dims.values()) \
            and len(set(k for _, k in self.key_map.values())) == len(self.key_map)


def _split_index(pair: LiePairSpec, I: tuple[int, ...]) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    J = tuple(i for i in I if i in pair.complement)
    K = tuple(i for i in I if i in pair.sub)
    return permutation_sign(J + K), J, K


def graded_piece(pair: LiePairSpec, module: Connection, r: int) -> GradedPiece:
    """G_r(E)/G_{r+1}(E)[r] and the standard complex of ⋀^r(L/A)^∨ ⊗ E over A, compared.

    The comparison map sends φ_I ⊗ e (I = J ⊔ K along m ⊕ A) to
    sign · (φ_J ⊗ e) placed on the A-form φ_K, where φ_I = sign · φ_J ∧ φ_K.
    """
    if not module.is_flat():
        raise FlatnessError("the A-module is not flat")
    L = pair.ambient
    n = module.dim
    ext = extend_by_zero(pair, module)
    bott = bott_connection(pair)
    lam, lam_basis = bott.exterior_dual(r)
    target_module = tensor_connection(lam, module)
    std = standard_complex(pair.sub_spec(), target_module) if lam_basis else CochainComplex({})
    cpos = {m: p for p, m in enumerate(pair.complement)}
    spos = {a: p for p, a in enumerate(pair.sub)}
    jindex = {J: i for i, J in enumerate(lam_basis)}

    keys = {k - r: [(I, b) for I in basis_tuples(L.rank, k) for b in range(n) if pair.m_count(I) == r]
            for k in range(L.rank + 1)}
    keys = {deg: ks for deg, ks in keys.items() if ks}
    sign_r = -1 if r % 2 else 1

    def d_quot(key):
        I, b = key
        e = tuple(Fraction(int(a == b)) for a in range(n))
        image = covariant_derivative(L, ext, Form(L.rank, len(I), {I: e}))
        out = {}
        for J, v in image.coeffs.items():
            if pair.m_count(J) != r:
                continue
            for a, x in enumerate(v):
                if x != 0:
                    out[(J, a)] = sign_r * x
        return out

    quot = complex_from_operator(keys, d_quot)

    key_map = {}
    for deg, ks in keys.items():
        for (I, b) in ks:
            s, J, K = _split_index(pair, I)
            Jpos = tuple(cpos[j] for j in J)
            Kpos = tuple(spos[k] for k in K)
            key_map[(I, b)] = (s, (Kpos, jindex[Jpos] * n + b))

    residual = 0
    if std.dims:
        for deg, ks in keys.items():
            for key in ks:
                lhs: dict = {}
                for k2, c in d_quot(key).items():
                    s2, tk = key_map[k2]
                    lhs[tk] = lhs.get(tk, 0) + s2 * c
                s, tk = key_map[key]
                rhs: dict = {}
                col = std.names[deg].index(tk)
                if std.dim(deg + 1):
                    column = std.differential(deg).column(col)
                    for row, c in enumerate(column):
                        if c != 0:
                            rhs[std.names[deg + 1][row]] = s * c
                diff = {k: lhs.get(k, 0) - rhs.get(k, 0) for k in set(lhs) | set(rhs)}
                residual += sum(1 for v in diff.values() if v != 0)
    return GradedPiece(r, quot, std, key_map, residual)


# ---------------------------------------------------------------------------
# the Leray E_1 page two ways
# ---------------------------------------------------------------------------


@dataclass
class LerayE1:
    spectral: dict[tuple[int, int], int]
    graded: dict[tuple[int, int], int]
    total: dict[int, int]
    degenerates_at_E1: bool
    sequence: object = field(repr=False, default=None)

    @property
    def agree(self) -> bool:
        return self.spectral == self.graded


def leray_complex(pair: LiePairSpec) -> FilteredComplex:
    C = de_rham_complex(pair.ambient)
    F = leray_filtration(pair)
    index = {k: {I: i for i, I in enumerate(C.names.get(k, []))} for k in C.degrees}
    levels = []
    for p in range(F.length + 1):
        lv = {}
        for k in C.degrees:
            vecs = []
            for (I, _b) in F.levels.get(p, {}).get(k, []):
                v = [Fraction(0)] * C.dim(k)
                v[index[k][I]] = Fraction(1)
                vecs.append(tuple(v))
            lv[k] = vecs
        levels.append(lv)
    return FilteredComplex(C, levels)


def leray_E1(pair: LiePairSpec, r_max: int = 2) -> LerayE1:
    """E_1 from the filtered de Rham complex and from the Bott-twisted standard complexes."""
    report = pair.validate()
    if not report:
        raise ValueError(f"invalid pair: {report.identity} at {report.where}")
    ss = spectral_sequence(leray_complex(pair), r_max)
    spectral = dict(ss.pages[1].dims)
    graded = {}
    A = pair.sub_spec()
    bott = bott_connection(pair)
    for p in range(pair.corank + 1):
        lam, basis = bott.exterior_dual(p)
        if not basis:
            continue
        for q, k in betti(standard_complex(A, lam)).items():
            if k:
                graded[(p, q)] = k
    total = betti(de_rham_complex(pair.ambient))
    return LerayE1(spectral, graded, total, ss.degenerates_at_E1, ss)
