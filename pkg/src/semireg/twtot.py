"""Polynomial forms on simplices, Thom-Whitney totalization and the two-chart model of the projective line.

Forms on the level-n simplex use coordinates t_1..t_n after eliminating
t_0 = 1 - Σ t_i and dt_0 = -Σ dt_i. A term is keyed by (exponents, dts) with
``dts`` a strictly increasing tuple of indices in 1..n.

The two-chart model covers the line by U_0 (coordinate t) and U_1
(coordinate s = 1/t). Sections over U_0 and the overlap are written in the
frame of U_0, sections over U_1 in the frame of U_1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from functools import lru_cache
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

from .dgcore import CochainComplex, cohomology, complex_from_operator, permutation_sign
from .exactcore import LaurentWindow, Matrix, Vector, is_zero_vector, rank

# ---------------------------------------------------------------------------
# polynomial forms on simplices
# ---------------------------------------------------------------------------


def _merge_dts(first: tuple, second: tuple) -> tuple[int, tuple]:
    if set(first) & set(second):
        return 0, ()
    seq = first + second
    return permutation_sign(seq), tuple(sorted(seq))


class SimplexForm:
    """A polynomial differential form on the standard n-simplex, in reduced normal form."""

    __slots__ = ("level", "terms")

    def __init__(self, level: int, terms: Mapping | None = None):
        self.level = level
        self.terms: dict[tuple, Fraction] = {}
        for (exps, dts), c in (terms or {}).items():
            if len(exps) != level or any(not 1 <= i <= level for i in dts) or list(dts) != sorted(set(dts)):
                raise ValueError(f"malformed term {(exps, dts)} at level {level}")
            if c != 0:
                self.terms[(tuple(exps), tuple(dts))] = Fraction(c)

    @classmethod
    def _make(cls, level: int, terms: dict) -> "SimplexForm":
        """Internal constructor for already-normalized terms."""
        out = cls.__new__(cls)
        out.level = level
        out.terms = {k: v for k, v in terms.items() if v != 0}
        return out

    @classmethod
    def const(cls, level: int, c=1) -> "SimplexForm":
        return cls(level, {((0,) * level, ()): c})

    @classmethod
    def t(cls, i: int, level: int) -> "SimplexForm":
        if not 0 <= i <= level:
            raise IndexError(f"t_{i} does not exist at level {level}")
        if i == 0:
            terms = {((0,) * level, ()): Fraction(1)}
            for j in range(1, level + 1):
                terms[(tuple(int(k == j) for k in range(1, level + 1)), ())] = Fraction(-1)
            return cls(level, terms)
        return cls(level, {(tuple(int(k == i) for k in range(1, level + 1)), ()): 1})

    @classmethod
    def dt(cls, i: int, level: int) -> "SimplexForm":
        if not 0 <= i <= level:
            raise IndexError(f"dt_{i} does not exist at level {level}")
        zero = (0,) * level
        if i == 0:
            return cls(level, {(zero, (j,)): -1 for j in range(1, level + 1)})
        return cls(level, {(zero, (i,)): 1})

    @property
    def degree(self) -> int | None:
        degs = {len(d) for _, d in self.terms}
        if len(degs) > 1:
            raise ValueError("inhomogeneous form")
        return degs.pop() if degs else None

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SimplexForm") -> "SimplexForm":
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return SimplexForm._make(self.level, out)

    def __neg__(self) -> "SimplexForm":
        return self.scale(-1)

    def __sub__(self, other: "SimplexForm") -> "SimplexForm":
        return self + (-other)

    def scale(self, c) -> "SimplexForm":
        return SimplexForm._make(self.level, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other) -> "SimplexForm":
        if not isinstance(other, SimplexForm):
            return self.scale(other)
        self._same(other)
        out: dict = {}
        for (e1, d1), c1 in self.terms.items():
            for (e2, d2), c2 in other.terms.items():
                s, dts = _merge_dts(d1, d2)
                if s == 0:
                    continue
                key = (tuple(a + b for a, b in zip(e1, e2)), dts)
                out[key] = out.get(key, 0) + s * c1 * c2
        return SimplexForm._make(self.level, out)

    __rmul__ = scale

    def _same(self, other: "SimplexForm") -> None:
        if self.level != other.level:
            raise ValueError(f"forms on different simplices ({self.level} vs {other.level})")

    def __eq__(self, other) -> bool:
        return isinstance(other, SimplexForm) and self.level == other.level and self.terms == other.terms

    def __hash__(self):
        return hash((self.level, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"SimplexForm(level={self.level}, {self.terms})"

    def d(self) -> "SimplexForm":
        out: dict = {}
        for (exps, dts), c in self.terms.items():
            for i in range(1, self.level + 1):
                a = exps[i - 1]
                if a == 0 or i in dts:
                    continue
                s, new = _merge_dts((i,), dts)
                e2 = tuple(x - int(j == i - 1) for j, x in enumerate(exps))
                out[(e2, new)] = out.get((e2, new), 0) + s * a * c
        return SimplexForm._make(self.level, out)

    def integrate(self) -> Fraction:
        """∫ over the simplex oriented by dt_1 ∧ ... ∧ dt_n (only the top-degree part contributes)."""
        n = self.level
        top = tuple(range(1, n + 1))
        total = Fraction(0)
        for (exps, dts), c in self.terms.items():
            if dts != top:
                continue
            num = 1
            for a in exps:
                num *= factorial(a)
            total += c * Fraction(num, factorial(n + sum(exps)))
        return total


def coface_pullback(k: int, form: SimplexForm) -> SimplexForm:
    """Pull back along the k-th face of the simplex: t_i ↦ t_i (i<k), 0 (i=k), t_{i-1} (i>k)."""
    n = form.level
    if not 0 <= k <= n or n == 0:
        raise IndexError(f"face {k} does not exist at level {n}")
    out: dict = {}
    for key, c in form.terms.items():
        for key2, c2 in _pullback_monomial(k, n, key).terms.items():
            out[key2] = out.get(key2, 0) + c * c2
    return SimplexForm._make(n - 1, out)


@lru_cache(maxsize=None)
def _pullback_monomial(k: int, n: int, key: tuple) -> SimplexForm:
    form = SimplexForm(n, {key: 1})
    m = n - 1

    def image_t(i):
        if i < k:
            return SimplexForm.t(i, m)
        if i == k:
            return SimplexForm(m)
        return SimplexForm.t(i - 1, m)

    def image_dt(i):
        if i < k:
            return SimplexForm.dt(i, m)
        if i == k:
            return SimplexForm(m)
        return SimplexForm.dt(i - 1, m)

    ts = [image_t(i) for i in range(1, n + 1)]
    dts = [image_dt(i) for i in range(1, n + 1)]
    out = SimplexForm(m)
    for (exps, dd), c in form.terms.items():
        term = SimplexForm.const(m, c)
        for i, a in enumerate(exps):
            for _ in range(a):
                term = term * ts[i]
        for i in dd:
            term = term * dts[i - 1]
        out = out + term
    return out


@lru_cache(maxsize=None)
def elementary_form(face: tuple[int, ...], level: int) -> SimplexForm:
    """k! Σ_j (−1)^j t_{i_j} dt_{i_0} ∧ … (omit j) … ∧ dt_{i_k} for the face (i_0 < … < i_k)."""
    k = len(face) - 1
    out = SimplexForm(level)
    for j, ij in enumerate(face):
        term = SimplexForm.t(ij, level)
        for i2 in face[:j] + face[j + 1:]:
            term = term * SimplexForm.dt(i2, level)
        out = out + term.scale((-1) ** j)
    return out.scale(factorial(k))


# ---------------------------------------------------------------------------
# sheaves on the two-chart cover
# ---------------------------------------------------------------------------

OPENS = ("0", "1", "01")


def open_of(alpha: Sequence[int]) -> str:
    kinds = set(alpha)
    if kinds == {0}:
        return "0"
    if kinds == {1}:
        return "1"
    return "01"


def widen_window(window: tuple[int, int]) -> tuple[int, int]:
    lo, hi = window
    step = max(1, -(-(hi - lo) // 4))
    return lo - step, hi + step


@dataclass
class LineSheaf:
    """A line bundle given by frames e_0 on U_0 and e_1 = sign·t^twist·e_0 on the overlap.

    O(n) has twist n and sign 1; the cotangent sheaf (frames dt, ds) has twist −2
    and sign −1. Bases are exponent lists: t-exponents on U_0 and the overlap,
    s-exponents on U_1, chosen so that every restriction stays in the window.
    """

    twist: int
    sign: int = 1
    window: tuple[int, int] = (-6, 6)

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise ValueError("empty window")
        self._bases = {
            "0": list(range(max(0, lo), hi + 1)),
            "01": list(range(lo, hi + 1)),
            "1": [b for b in range(0, max(0, self.twist - lo) + 1) if lo <= self.twist - b <= hi],
        }

    def basis(self, U: str) -> list[int]:
        return self._bases[U]

    def restrict(self, U: str, e: int) -> dict[int, Fraction]:
        """Restriction of a basis section on U to the overlap (U in {"0","1","01"})."""
        if U in ("0", "01"):
            return {e: Fraction(1)}
        lo, hi = self.window
        wide = (min(lo, self.twist - e, -e), max(hi, self.twist, -e))
        g = LaurentWindow.monomial(self.twist, self.sign, *wide)
        image = (g * LaurentWindow.monomial(-e, 1, *wide)).rewindow(lo, hi)
        if image.truncated:
            raise ArithmeticError("restriction left the window")
        return dict(image.coeffs)

    def global_sections(self) -> list[dict[str, dict[int, Fraction]]]:
        """Pairs of local sections agreeing on the overlap (basis of the windowed H⁰)."""
        out = []
        for b in self.basis("1"):
            image = self.restrict("1", b)
            if all(e in self._bases["0"] for e in image):
                out.append({"0": dict(image), "1": {b: Fraction(1)}, "01": dict(image)})
        return out


@dataclass
class TwoChartComplex:
    """A bounded complex of line sheaves on the two-chart cover.

    ``components`` maps a degree q to its sheaf and ``differentials`` maps q to a
    function (open, exponent) -> {exponent: coeff} into the degree q+1 sheaf.
    """

    components: dict[int, LineSheaf]
    differentials: dict[int, Callable[[str, int], Mapping[int, Fraction]]] = field(default_factory=dict)
    name: str = ""

    def names(self, U: str) -> list[tuple[int, int]]:
        return [(q, e) for q in sorted(self.components) for e in self.components[q].basis(U)]

    def d_local(self, U: str, q: int, e: int) -> dict:
        if q not in self.differentials:
            return {}
        return {(q + 1, e2): c for e2, c in self.differentials[q](U, e).items() if c != 0}

    def restrict(self, source: str, target: str, q: int, e: int) -> dict:
        if source == target:
            return {(q, e): Fraction(1)}
        if target != "01":
            raise ValueError(f"cannot restrict from U_{source} to U_{target}")
        return {(q, e2): c for e2, c in self.components[q].restrict(source, e).items()}

    def widened(self) -> "TwoChartComplex":
        comps = {q: LineSheaf(s.twist, s.sign, widen_window(s.window)) for q, s in self.components.items()}
        return TwoChartComplex(comps, self.differentials, self.name)

    def check(self) -> None:
        """Local differentials square to zero and commute with restriction."""
        for q in self.differentials:
            for U in ("0", "1"):
                for e in self.components[q].basis(U):
                    lhs = _apply_map(lambda k: self.restrict(U, "01", *k), self.d_local(U, q, e))
                    rhs = _apply_map(lambda k: self.d_local("01", *k), self.restrict(U, "01", q, e))
                    if _sub(lhs, rhs):
                        raise ArithmeticError(f"differential does not commute with restriction at U_{U}, t^{e}")
            for U in OPENS:
                for e in self.components[q].basis(U):
                    image = self.d_local(U, q, e)
                    for (_, e2) in image:
                        if e2 not in self.components[q + 1].basis(U):
                            raise ArithmeticError(f"differential leaves the window on U_{U}")


def _apply_map(f: Callable, x: Mapping) -> dict:
    out: dict = {}
    for k, c in x.items():
        for k2, c2 in f(k).items():
            out[k2] = out.get(k2, 0) + c * c2
    return {k: v for k, v in out.items() if v != 0}


def _sub(x: Mapping, y: Mapping) -> dict:
    out = dict(x)
    for k, c in y.items():
        out[k] = out.get(k, 0) - c
    return {k: v for k, v in out.items() if v != 0}


def line_bundle(n: int, window: tuple[int, int] = (-6, 6), degree: int = 0) -> TwoChartComplex:
    return TwoChartComplex({degree: LineSheaf(n, 1, window)}, name=f"O({n})")


def cotangent(window: tuple[int, int] = (-6, 6), twist: int = 0, degree: int = 1) -> TwoChartComplex:
    """The cotangent sheaf tensored with O(twist), placed in one degree."""
    return TwoChartComplex({degree: LineSheaf(twist - 2, -1, window)}, name="Omega1")


def de_rham_two_chart(window: tuple[int, int] = (-6, 6)) -> TwoChartComplex:
    """O → Ω¹, f ↦ df, in the frames 1 and dt (U_0, overlap) and 1 and ds (U_1)."""
    lo, hi = window

    def d(U, e):
        return {e - 1: Fraction(e)} if e else {}

    C = TwoChartComplex({0: LineSheaf(0, 1, window), 1: LineSheaf(-2, -1, (lo - 1, hi - 1))}, {0: d}, "de Rham")
    C.check()
    return C


# ---------------------------------------------------------------------------
# Čech hypercohomology on the two-chart cover (alternating cochains)
# ---------------------------------------------------------------------------


@dataclass
class CechResult:
    dims: dict[int, int]
    representatives: dict[int, list[dict]]
    stable: bool
    widened_dims: dict[int, int]
    window: tuple[int, int]
    complex: CochainComplex = field(repr=False, default=None)


def cech_complex(V: TwoChartComplex) -> CochainComplex:
    """Total complex with keys (p, U, q, e) and D = d_V + (−1)^q δ, (δc)_{01} = c_1 − c_0."""
    bases: dict[int, list] = {}
    for U in ("0", "1"):
        for q, e in V.names(U):
            bases.setdefault(q, []).append((0, U, q, e))
    for q, e in V.names("01"):
        bases.setdefault(q + 1, []).append((1, "01", q, e))
    bases = {n: sorted(b, key=lambda k: (k[0], k[1], k[2], repr(k[3]))) for n, b in bases.items()}

    def D(key):
        p, U, q, e = key
        out: dict = {}
        for (q2, e2), c in V.d_local(U, q, e).items():
            out[(p, U, q2, e2)] = out.get((p, U, q2, e2), 0) + c
        if p == 0:
            sign = (-1) ** q * (1 if U == "1" else -1)
            for (q2, e2), c in V.restrict(U, "01", q, e).items():
                k = (1, "01", q2, e2)
                out[k] = out.get(k, 0) + sign * c
        return out

    return complex_from_operator(bases, D)


def cech_cohomology(V: TwoChartComplex, window: tuple[int, int] | None = None) -> CechResult:
    """Dimensions and representatives; ``stable`` compares against the window widened by half."""
    if window is not None:
        V = TwoChartComplex({q: LineSheaf(s.twist, s.sign, window) for q, s in V.components.items()},
                            V.differentials, V.name)
    C = cech_complex(V)
    H = cohomology(C)
    dims = {n: h.dim for n, h in H.items()}
    reps = {n: [dict((C.names[n][i], c) for i, c in enumerate(v) if c != 0) for v in h.representatives]
            for n, h in H.items()}
    wide = {n: h.dim for n, h in cohomology(cech_complex(V.widened())).items()}
    degrees = set(dims) | set(wide)
    stable = all(dims.get(n, 0) == wide.get(n, 0) for n in degrees)
    first = next(iter(V.components.values()))
    return CechResult(dims, reps, stable, wide, first.window, C)


# ---------------------------------------------------------------------------
# the semicosimplicial Čech object and its Thom-Whitney totalization
# ---------------------------------------------------------------------------


def tuples(level: int) -> list[tuple[int, ...]]:
    return list(product((0, 1), repeat=level + 1))


class SemicosimplicialDG:
    """V_n = ⊕ over (n+1)-tuples α of E(U_α), with cofaces that delete an index and restrict."""

    def __init__(self, V: TwoChartComplex, n_max: int = 3):
        self.V = V
        self.n_max = n_max

    def names(self, level: int) -> list[tuple]:
        return [(alpha, q, e) for alpha in tuples(level) for (q, e) in self.V.names(open_of(alpha))]

    def degree(self, name) -> int:
        return name[1]

    def d_inner(self, name) -> dict:
        alpha, q, e = name
        return {(alpha, q2, e2): c for (q2, e2), c in self.V.d_local(open_of(alpha), q, e).items()}

    def coface(self, k: int, name, level: int) -> dict:
        """δ_k applied to a basis element of V_{level-1}, as an element of V_level."""
        alpha, q, e = name
        if not 0 <= k <= level:
            raise IndexError("coface index out of range")
        out = {}
        for i in (0, 1):
            beta = alpha[:k] + (i,) + alpha[k:]
            for (q2, e2), c in self.V.restrict(open_of(alpha), open_of(beta), q, e).items():
                out[(beta, q2, e2)] = c
        return out

    def check_cosimplicial(self, level: int) -> bool:
        """δ_j δ_i = δ_i δ_{j−1} for i < j on basis elements of V_{level-2}."""
        for name in self.names(level - 2):
            for j in range(level + 1):
                for i in range(j):
                    lhs = _apply_map(lambda x: self.coface(j, x, level), self.coface(i, name, level - 1))
                    rhs = _apply_map(lambda x: self.coface(i, x, level), self.coface(j - 1, name, level - 1))
                    if _sub(lhs, rhs):
                        return False
        return True


class CompatibilityError(ValueError):
    def __init__(self, k: int, n: int):
        super().__init__(f"components violate face {k} at level {n}")
        self.k, self.n = k, n


@dataclass
class TotElement:
    """Components x_n ∈ A_n ⊗ V_n for n ≤ n_max, stored as {basis name: SimplexForm}."""

    obj: SemicosimplicialDG
    levels: dict[int, dict]

    def component(self, n: int) -> dict:
        return self.levels.get(n, {})

    def __add__(self, other: "TotElement") -> "TotElement":
        out = {}
        for n in set(self.levels) | set(other.levels):
            a, b = self.component(n), other.component(n)
            lv = {}
            for k in set(a) | set(b):
                f = a.get(k, SimplexForm(n)) + b.get(k, SimplexForm(n))
                if not f.is_zero():
                    lv[k] = f
            out[n] = lv
        return TotElement(self.obj, out)

    def scale(self, c) -> "TotElement":
        return TotElement(self.obj, {n: {k: f.scale(c) for k, f in lv.items() if c != 0} for n, lv in self.levels.items()})

    def __sub__(self, other: "TotElement") -> "TotElement":
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return all(f.is_zero() for lv in self.levels.values() for f in lv.values())

    def multiply_scalar_family(self, w: Mapping[int, Mapping[tuple, SimplexForm]]) -> "TotElement":
        """Multiply by a compatible family of scalar forms w_n[α] (forms on the left)."""
        out = {}
        for n, lv in self.levels.items():
            new: dict = {}
            for (alpha, q, e), f in lv.items():
                g = w[n][alpha] * f
                if not g.is_zero():
                    new[(alpha, q, e)] = new.get((alpha, q, e), SimplexForm(n)) + g
            out[n] = {k: f for k, f in new.items() if not f.is_zero()}
        return TotElement(self.obj, out)


def check_compatible(x: TotElement) -> tuple[int, int] | None:
    """First (k, n) with (δ_k^* ⊗ Id) x_n ≠ (Id ⊗ δ_k) x_{n−1}, or None."""
    obj = x.obj
    for n in range(1, obj.n_max + 1):
        xn, xp = x.component(n), x.component(n - 1)
        for k in range(n + 1):
            lhs: dict = {}
            for name, f in xn.items():
                g = coface_pullback(k, f)
                if g.is_zero():
                    continue
                lhs[name] = lhs.get(name, SimplexForm(n - 1)) + g
            rhs: dict = {}
            for name, f in xp.items():
                for name2, c in obj.coface(k, name, n).items():
                    rhs[name2] = rhs.get(name2, SimplexForm(n - 1)) + f.scale(c)
            for key in set(lhs) | set(rhs):
                if not (lhs.get(key, SimplexForm(n - 1)) - rhs.get(key, SimplexForm(n - 1))).is_zero():
                    return (k, n)
    return None


def tot_assemble(obj: SemicosimplicialDG, components: Mapping[int, Mapping]) -> TotElement:
    x = TotElement(obj, {n: dict(components.get(n, {})) for n in range(obj.n_max + 1)})
    bad = check_compatible(x)
    if bad is not None:
        raise CompatibilityError(*bad)
    return x


def d_tot(x: TotElement) -> TotElement:
    """d(a ⊗ v) = da ⊗ v + (−1)^{|a|} a ⊗ d_V v."""
    obj = x.obj
    out = {}
    for n, lv in x.levels.items():
        new: dict = {}
        for name, f in lv.items():
            df = f.d()
            if not df.is_zero():
                new[name] = new.get(name, SimplexForm(n)) + df
            inner = obj.d_inner(name)
            if inner:
                for deg_part in _split_degrees(f):
                    p, g = deg_part
                    for name2, c in inner.items():
                        new[name2] = new.get(name2, SimplexForm(n)) + g.scale((-1) ** p * c)
        out[n] = {k: f for k, f in new.items() if not f.is_zero()}
    return TotElement(obj, out)


def _split_degrees(f: SimplexForm) -> list[tuple[int, SimplexForm]]:
    parts: dict[int, dict] = {}
    for key, c in f.terms.items():
        parts.setdefault(len(key[1]), {})[key] = c
    return [(p, SimplexForm(f.level, t)) for p, t in sorted(parts.items())]


# Čech cochains on all tuples: {level: {(alpha, q, e): coeff}}
Cochain = dict


def whitney_integrate(x: TotElement) -> Cochain:
    """I(a ⊗ v) = (−1)^{nq} (∫_{Δⁿ} a) v at level n, for v of inner degree q."""
    out: dict = {}
    for n, lv in x.levels.items():
        comp = {}
        for (alpha, q, e), f in lv.items():
            val = f.integrate()
            if val:
                comp[(alpha, q, e)] = (-1) ** (n * q) * val
        out[n] = comp
    return out


def cech_differential(obj: SemicosimplicialDG, c: Cochain) -> Cochain:
    """D = d_V + (−1)^q δ on all-tuples cochains, δ = Σ_k (−1)^k δ_k."""
    out: dict = {}
    for n, comp in c.items():
        for name, val in comp.items():
            for name2, c2 in obj.d_inner(name).items():
                out.setdefault(n, {})
                out[n][name2] = out[n].get(name2, 0) + val * c2
            if n + 1 > obj.n_max:
                continue
            q = name[1]
            for k in range(n + 2):
                for name2, c2 in obj.coface(k, name, n + 1).items():
                    out.setdefault(n + 1, {})
                    out[n + 1][name2] = out[n + 1].get(name2, 0) + (-1) ** (q + k) * val * c2
    return {n: {k: v for k, v in comp.items() if v != 0} for n, comp in out.items()}


def elementary_section(obj: SemicosimplicialDG, c: Cochain) -> TotElement:
    """E(c)_n[α] = Σ_faces (−1)^{kq} ω_J ⊗ c[α_J]|_{U_α}; inverse to I on cochains."""
    levels = {}
    for n in range(obj.n_max + 1):
        lv: dict = {}
        for k in range(n + 1):
            ck = c.get(k, {})
            if not ck:
                continue
            for face in combinations(range(n + 1), k + 1):
                omega = elementary_form(face, n)
                for (beta, q, e), val in ck.items():
                    for alpha in tuples(n):
                        if tuple(alpha[i] for i in face) != beta:
                            continue
                        for (q2, e2), c2 in obj.V.restrict(open_of(beta), open_of(alpha), q, e).items():
                            key = (alpha, q2, e2)
                            lv[key] = lv.get(key, SimplexForm(n)) + omega.scale((-1) ** (k * q) * val * c2)
        levels[n] = {k: f for k, f in lv.items() if not f.is_zero()}
    return TotElement(obj, levels)


def iota(obj: SemicosimplicialDG, section: Mapping[str, Mapping[int, Fraction]], q: int) -> TotElement:
    """A global section (local representatives on "0", "1", "01") as the constant family 1 ⊗ s|_{U_α}."""
    levels = {}
    for n in range(obj.n_max + 1):
        lv = {}
        for alpha in tuples(n):
            for e, c in section[open_of(alpha)].items():
                lv[(alpha, q, e)] = SimplexForm.const(n, c)
        levels[n] = lv
    return TotElement(obj, levels)


def scalar_family(cochain: Mapping[int, Mapping[tuple, Fraction]], n_max: int) -> dict[int, dict[tuple, SimplexForm]]:
    """Whitney forms of a scalar all-tuples cochain (a compatible family of forms)."""
    out = {}
    for n in range(n_max + 1):
        lv = {alpha: SimplexForm(n) for alpha in tuples(n)}
        for k in range(n + 1):
            for face in combinations(range(n + 1), k + 1):
                omega = elementary_form(face, n)
                for alpha in tuples(n):
                    val = cochain.get(k, {}).get(tuple(alpha[i] for i in face), 0)
                    if val:
                        lv[alpha] = lv[alpha] + omega.scale(val)
        out[n] = lv
    return out


def random_cochain(obj: SemicosimplicialDG, rng: random.Random, density: float = 0.3,
                   alternating: bool = False, bound: int = 3) -> Cochain:
    c: dict = {}
    top = 1 if alternating else obj.n_max
    for n in range(top + 1):
        comp = {}
        for name in obj.names(n):
            alpha = name[0]
            if alternating and (n == 1 and alpha != (0, 1)):
                continue
            if rng.random() < density:
                v = rng.randint(-bound, bound)
                if v:
                    comp[name] = Fraction(v)
        if alternating and n == 1:
            comp.update({((1, 0), q, e): -v for ((a, q, e), v) in list(comp.items())})
        c[n] = comp
    return c


def restrict_to_alternating(c: Cochain) -> dict:
    """Keep levels 0 and the (0, 1) overlap: the alternating two-open complex."""
    out = {}
    for (alpha, q, e), v in c.get(0, {}).items():
        out[(0, open_of(alpha), q, e)] = v
    for (alpha, q, e), v in c.get(1, {}).items():
        if alpha == (0, 1):
            out[(1, "01", q, e)] = v
    return out


# ---------------------------------------------------------------------------
# line bundles with coordinate connections and their Atiyah class
# ---------------------------------------------------------------------------


@dataclass
class LineBundleProblem:
    """O(n) on the two-chart cover with the coordinate connection d on each chart (A = 0, L = tangent sheaf)."""

    degree: int
    window: tuple[int, int] = (-6, 6)
    n_max: int = 3


class ConnectionSheaf:
    """Ω¹(tangent) ⊗ P(tangent, O(n)) in degree 1, split in each frame as Id-part ⊕ End-part.

    The Id-part holds the coefficient of Id_L (frame independent) and the
    End-part a 1-form (coefficient of dt, resp. ds on U_1). Passing from the
    frame of U_1 to the frame of U_0, the chart connection d becomes
    d − n t⁻¹dt, so (λ, A) ↦ (λ, A − n λ t⁻¹dt).
    """

    def __init__(self, degree: int, window: tuple[int, int]):
        lo, hi = window
        self.degree = degree
        self.ident = LineSheaf(0, 1, window)
        self.end = LineSheaf(-2, -1, (lo - 1, hi))
        self.name = f"P(O({degree}))"

    def names(self, U: str) -> list[tuple]:
        return [(1, ("id", e)) for e in self.ident.basis(U)] + [(1, ("end", e)) for e in self.end.basis(U)]

    def d_local(self, U: str, q: int, key) -> dict:
        return {}

    def restrict(self, source: str, target: str, q: int, key) -> dict:
        kind, e = key
        if source == target:
            return {(q, key): Fraction(1)}
        sheaf = self.ident if kind == "id" else self.end
        out = {(q, (kind, e2)): c for e2, c in sheaf.restrict(source, e).items()}
        if kind == "id" and source == "1" and self.degree:
            for e2, c in sheaf.restrict(source, e).items():
                if e2 - 1 not in self.end.basis("01"):
                    raise ArithmeticError("connection term left the window")
                out[(q, ("end", e2 - 1))] = -self.degree * c
        return out

    def end_part(self) -> TwoChartComplex:
        return TwoChartComplex({1: self.end}, name="End-valued 1-forms")


def build_simplicial_connection(prob: LineBundleProblem) -> TotElement:
    """x_n[α] = Σ_a t_a ⊗ ∇_{α_a}, each chart connection restricted to U_α; p(x) = Id since Σ t_a = 1."""
    obj = SemicosimplicialDG(ConnectionSheaf(prob.degree, prob.window), prob.n_max)
    levels = {}
    for n in range(prob.n_max + 1):
        lv: dict = {}
        for alpha in tuples(n):
            U = open_of(alpha)
            for a, i in enumerate(alpha):
                for name, c in obj.V.restrict(str(i), U, 1, ("id", 0)).items():
                    key = (alpha,) + name
                    lv[key] = lv.get(key, SimplexForm(n)) + SimplexForm.t(a, n).scale(c)
        levels[n] = {k: f for k, f in lv.items() if not f.is_zero()}
    return tot_assemble(obj, levels)


def end_valued(x: TotElement) -> TotElement:
    """The End-part of a Tot element of the connection sheaf, as a Tot element of End-valued 1-forms."""
    obj = SemicosimplicialDG(x.obj.V.end_part(), x.obj.n_max)
    levels = {}
    for n, lv in x.levels.items():
        out = {}
        for (alpha, q, (kind, e)), f in lv.items():
            if kind == "id":
                if not f.is_zero():
                    raise ArithmeticError("Id-part does not vanish")
                continue
            out[(alpha, q, e)] = f
        levels[n] = out
    return TotElement(obj, levels)


@dataclass
class LineBundleAtiyah:
    """Class of I(d_Tot ∇) in H¹(Ω¹) ≅ 𝕂 (degree 2 of the hypercomplex of Ω¹[−1])."""

    cocycle: dict
    coordinates: Vector
    residue: Fraction
    oracle_residue: Fraction
    extension_residue: Fraction
    cech: CechResult = field(repr=False)

    @property
    def is_zero(self) -> bool:
        return is_zero_vector(self.coordinates)


def extension_class_cocycle(prob: LineBundleProblem) -> dict:
    """Čech route: D applied to the local lifts Id on each chart of the connection sheaf."""
    sheaf = ConnectionSheaf(prob.degree, prob.window)
    C = cech_complex(sheaf)
    lift = [Fraction(0)] * C.dim(1)
    for U in ("0", "1"):
        lift[C.names[1].index((0, U, 1, ("id", 0)))] = Fraction(1)
    image = C.apply(1, lift)
    return {key: c for key, c in zip(C.names[2], image) if c != 0}


def log_derivative_residue(degree: int, window: tuple[int, int] = (-6, 6)) -> Fraction:
    """Coefficient of t⁻¹ in g⁻¹ dg/dt for the transition g = t^degree (Laurent arithmetic)."""
    lo, hi = window
    g = LaurentWindow.monomial(degree, 1, lo - abs(degree) - 1, hi + abs(degree) + 1)
    ginv = LaurentWindow.monomial(-degree, 1, g.lo, g.hi)
    q = ginv * g.derivative()
    if q.truncated:
        raise ArithmeticError("window too small for the transition function")
    return q.coeffs.get(-1, Fraction(0))


def line_bundle_atiyah(prob: LineBundleProblem) -> LineBundleAtiyah:
    conn = build_simplicial_connection(prob)
    dconn = end_valued(d_tot(conn))
    bad = check_compatible(dconn)
    if bad is not None:
        raise CompatibilityError(*bad)
    cochain = restrict_to_alternating(whitney_integrate(dconn))
    V = dconn.obj.V
    res = cech_cohomology(V)
    C = res.complex
    H = cohomology(C)[2]
    vec = [Fraction(0)] * C.dim(2)
    idx = {k: i for i, k in enumerate(C.names[2])}
    for key, v in cochain.items():
        vec[idx[key]] += v
    coords = H.project(tuple(vec))
    residue = cochain.get((1, "01", 1, -1), Fraction(0))
    ext = extension_class_cocycle(prob)
    ext_residue = ext.get((1, "01", 1, ("end", -1)), Fraction(0))
    if any(k[3][0] == "id" for k in ext):
        raise ArithmeticError("extension cocycle has an Id component")
    return LineBundleAtiyah(cochain, coords, residue, log_derivative_residue(prob.degree, prob.window),
                            ext_residue, res)


def residue_class(value: Fraction, window: tuple[int, int] = (-6, 6)) -> Vector:
    """Coordinates in H¹(Ω¹) of value·t⁻¹dt on the overlap (same windows as the Atiyah computation)."""
    res = cech_cohomology(ConnectionSheaf(0, window).end_part())
    C = res.complex
    vec = [Fraction(0)] * C.dim(2)
    vec[C.names[2].index((1, "01", 1, -1))] = Fraction(value)
    return cohomology(C)[2].project(tuple(vec))


# ---------------------------------------------------------------------------
# finite checks on the curved Tot algebra of a line bundle
# ---------------------------------------------------------------------------


@dataclass
class TotCurvedCheck:
    """Axioms of the curved algebra Tot(Ω*(tangent) ⊗ End O(n)) checked on given elements.

    For a line bundle End E is the structure sheaf, so the algebra is graded
    commutative, [R, -] vanishes, and the axioms reduce to d_Tot∇ being closed
    and the total differential squaring to zero.
    """

    curvature: TotElement
    curvature_closed: bool
    d_squared_zero: bool
    extra_curvature_zero: bool

    @property
    def ok(self) -> bool:
        return self.curvature_closed and self.d_squared_zero and self.extra_curvature_zero


def curved_tot_check(prob: LineBundleProblem, samples: Iterable[TotElement] = ()) -> TotCurvedCheck:
    conn = build_simplicial_connection(prob)
    R = end_valued(d_tot(conn))
    closed = d_tot(R).is_zero()
    sq = all(d_tot(d_tot(x)).is_zero() for x in samples)
    # local curvature C lives in Ω²(tangent) ⊗ End, which is zero on a curve
    return TotCurvedCheck(R, closed, sq, True)


# ---------------------------------------------------------------------------
# truncated Tot dimensions and exactness of levelwise short exact sequences
# ---------------------------------------------------------------------------


def _form_monomials(level: int, form_degree: int, poly_degree: int) -> list[tuple]:
    out = []
    for dts in combinations(range(1, level + 1), form_degree):
        for exps in product(range(poly_degree + 1), repeat=level):
            if sum(exps) <= poly_degree:
                out.append((exps, dts))
    return out


def truncated_tot_dimension(obj: SemicosimplicialDG, degree: int, poly_degree: int, levels: int) -> int:
    """Dimension of compatible families (levels ≤ ``levels``) of total degree ``degree`` whose
    forms have polynomial degree ≤ ``poly_degree``."""
    unknowns = []
    for n in range(levels + 1):
        for name in obj.names(n):
            p = degree - name[1]
            if 0 <= p <= n:
                for mono in _form_monomials(n, p, poly_degree):
                    unknowns.append((n, name, mono))
    index = {u: i for i, u in enumerate(unknowns)}
    rows = []
    for n in range(1, levels + 1):
        for k in range(n + 1):
            eqs: dict = {}
            for (lv, name, mono), col in index.items():
                if lv == n:
                    g = coface_pullback(k, SimplexForm(n, {mono: 1}))
                    for m2, c in g.terms.items():
                        eqs.setdefault((name, m2), {})
                        eqs[(name, m2)][col] = eqs[(name, m2)].get(col, 0) + c
                elif lv == n - 1:
                    for name2, c in obj.coface(k, name, n).items():
                        eqs.setdefault((name2, mono), {})
                        eqs[(name2, mono)][col] = eqs[(name2, mono)].get(col, 0) - c
            for eq in eqs.values():
                if any(v != 0 for v in eq.values()):
                    rows.append(eq)
    if not unknowns:
        return 0
    M = Matrix([[r.get(j, Fraction(0)) for j in range(len(unknowns))] for r in rows]) if rows else None
    return len(unknowns) - (rank(M) if M is not None else 0)


@dataclass
class ExactnessReport:
    degree: int
    dims: tuple[int, int, int]

    @property
    def exact(self) -> bool:
        a, b, c = self.dims
        return b == a + c


class DirectSum:
    """Levelwise direct sum of two sheaf complexes; basis keys are tagged (0, e) or (1, e)."""

    def __init__(self, first: TwoChartComplex, second: TwoChartComplex):
        self.parts = (first, second)
        self.name = f"{first.name}+{second.name}"

    def names(self, U: str) -> list[tuple]:
        return [(q, (j, e)) for j, part in enumerate(self.parts) for q, e in part.names(U)]

    def d_local(self, U: str, q: int, key) -> dict:
        j, e = key
        return {(q2, (j, e2)): c for (q2, e2), c in self.parts[j].d_local(U, q, e).items()}

    def restrict(self, source: str, target: str, q: int, key) -> dict:
        j, e = key
        return {(q2, (j, e2)): c for (q2, e2), c in self.parts[j].restrict(source, target, q, e).items()}


def split_sequence_exactness(first: TwoChartComplex, second: TwoChartComplex, degree: int = 0,
                             poly_degree: int = 1, levels: int = 2) -> ExactnessReport:
    """0 → Tot(first) → Tot(first ⊕ second) → Tot(second) → 0, by dimension count on the
    truncated totalizations (inclusion and projection are levelwise injective and surjective)."""
    dims = tuple(truncated_tot_dimension(SemicosimplicialDG(V, levels), degree, poly_degree, levels)
                 for V in (first, DirectSum(first, second), second))
    return ExactnessReport(degree, dims)


# ---------------------------------------------------------------------------
# randomized Whitney checks
# ---------------------------------------------------------------------------


@dataclass
class WhitneyReport:
    trials: int
    inverse_failures: int
    chain_map_failures: int
    iota_failures: int

    @property
    def ok(self) -> bool:
        return not (self.inverse_failures or self.chain_map_failures or self.iota_failures)


def _nonempty(c: Cochain, top: int | None = None) -> dict:
    return {n: comp for n, comp in c.items() if comp and (top is None or n <= top)}


def whitney_checks(V: TwoChartComplex, trials: int, rng: random.Random, n_max: int = 3,
                   density: float = 0.1) -> WhitneyReport:
    """I∘E = id on random cochains, I∘d_Tot = D∘I on random compatible elements, I∘ι = restriction."""
    obj = SemicosimplicialDG(V, n_max)
    inv = chain = 0
    for _ in range(trials):
        c = random_cochain(obj, rng, density)
        x = elementary_section(obj, c)
        if check_compatible(x) is not None or _nonempty(whitney_integrate(x)) != _nonempty(c):
            inv += 1
        w = scalar_family({n: {a: Fraction(rng.randint(-2, 2)) for a in tuples(n)} for n in range(n_max + 1)}, n_max)
        y = x.multiply_scalar_family(w)
        if check_compatible(y) is not None:
            chain += 1
            continue
        lhs = _nonempty(whitney_integrate(d_tot(y)), n_max)
        rhs = _nonempty(cech_differential(obj, whitney_integrate(y)))
        if lhs != rhs:
            chain += 1
    io = 0
    for q, sheaf in V.components.items():
        for s in sheaf.global_sections():
            got = _nonempty(whitney_integrate(iota(obj, s, q)))
            want = {0: {((i,), q, e): c for i in (0, 1) for e, c in s[str(i)].items() if c}}
            if got != _nonempty(want):
                io += 1
    return WhitneyReport(trials, inv, chain, io)
