"""Deformations of flat modules over Artin rings: Maurer-Cartan, gauge, obstructions, semiregularity.

The DG-Lie algebra is (Ω*(A) ⊗ End E, [∇, -]) for a flat A-module, stored as a
``CurvedDGA`` with zero curvature. An element over an Artin ring B is a dict
from monomials of B (exponent tuples) to algebra elements.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Mapping, Sequence

from .atiyah import AtiyahProblem, extend_connection, leray_pair
from .curveddg import (
    CurvedDGA,
    Element,
    eadd,
    endomorphism_algebra,
    escale,
    matrix_trace,
    quotient_target,
    sigma_k1,
)
from .dgcore import CochainComplex, CohomologyGroup, cohomology, complex_from_operator, permutation_sign
from .exactcore import Vector, is_zero_vector, solve
from .liepair import graded_piece, leray_E1
from .algebroid import Connection

Monomial = tuple


# ---------------------------------------------------------------------------
# Artin rings
# ---------------------------------------------------------------------------


class ArtinRing:
    """𝕂[u_1..u_m]/J for a monomial ideal J of finite colength, J ⊆ (u)²-or-larger."""

    def __init__(self, names: Sequence[str], ideal: Sequence[Sequence[int]]):
        self.names = tuple(names)
        self.ideal = [tuple(g) for g in ideal]
        m = len(self.names)
        if any(len(g) != m for g in self.ideal):
            raise ValueError("ideal generators must have one exponent per variable")
        if any(sum(g) == 0 for g in self.ideal):
            raise ValueError("the ideal must be proper")
        bounds = []
        for i in range(m):
            pure = [g[i] for g in self.ideal if all(g[j] == 0 for j in range(m) if j != i)]
            if not pure:
                raise ValueError(f"{self.names[i]} is not nilpotent modulo the ideal")
            bounds.append(min(pure))
        self.basis: list[Monomial] = sorted((e for e in product(*(range(b) for b in bounds)) if not self.in_ideal(e)),
                                            key=lambda e: (sum(e), e))
        self.nilpotency = 1
        while any(sum(e) >= self.nilpotency for e in self.basis):
            self.nilpotency += 1

    @classmethod
    def truncated(cls, order: int, name: str = "u") -> "ArtinRing":
        """𝕂[u]/(u^order)."""
        return cls([name], [(order,)])

    def in_ideal(self, e: Monomial) -> bool:
        return any(all(a >= b for a, b in zip(e, g)) for g in self.ideal)

    @property
    def one(self) -> Monomial:
        return (0,) * len(self.names)

    @property
    def maximal(self) -> list[Monomial]:
        return [e for e in self.basis if sum(e) > 0]

    def mul(self, e1: Monomial, e2: Monomial) -> Monomial | None:
        e = tuple(a + b for a, b in zip(e1, e2))
        return None if self.in_ideal(e) else e

    def monomial(self, **powers) -> Monomial:
        return tuple(powers.get(n, 0) for n in self.names)

    def __repr__(self) -> str:
        return f"ArtinRing({self.names}, {self.ideal})"


@dataclass
class SmallExtension:
    """B → B/(μ) with μ·m_B = 0; ``kernel`` is the monomial μ."""

    big: ArtinRing
    kernel: Monomial

    def __post_init__(self):
        B = self.big
        if self.kernel not in B.basis or sum(self.kernel) == 0:
            raise ValueError("the kernel must be a nonconstant basis monomial of B")
        for i in range(len(B.names)):
            u = tuple(int(j == i) for j in range(len(B.names)))
            if B.mul(self.kernel, u) is not None:
                raise ValueError("kernel does not annihilate the maximal ideal")
        self.small = ArtinRing(B.names, B.ideal + [self.kernel])


def tower_step(order: int, name: str = "u") -> SmallExtension:
    """𝕂[u]/(u^{order+1}) → 𝕂[u]/(u^order)."""
    return SmallExtension(ArtinRing.truncated(order + 1, name), (order,))


# ---------------------------------------------------------------------------
# elements over an Artin ring
# ---------------------------------------------------------------------------


def bclean(x: Mapping) -> dict:
    return {m: v for m, v in x.items() if v}


def badd(*xs: Mapping) -> dict:
    out: dict = {}
    for x in xs:
        for m, v in x.items():
            out[m] = eadd(out.get(m, {}), v)
    return bclean(out)


def bscale(c, x: Mapping) -> dict:
    return bclean({m: escale(c, v) for m, v in x.items()})


def bd(L: CurvedDGA, x: Mapping) -> dict:
    return bclean({m: L.d(v) for m, v in x.items()})


def bbracket(L: CurvedDGA, B: ArtinRing, x: Mapping, y: Mapping) -> dict:
    out: dict = {}
    for m1, v1 in x.items():
        for m2, v2 in y.items():
            m = B.mul(m1, m2)
            if m is None:
                continue
            out[m] = eadd(out.get(m, {}), L.bracket(v1, v2))
    return bclean(out)


def in_maximal(B: ArtinRing, x: Mapping) -> bool:
    return all(sum(m) > 0 for m in x)


def module_dgla(prob: AtiyahProblem) -> CurvedDGA:
    return endomorphism_algebra(prob.pair.sub_spec(), prob.module)


def dgla_complex(L: CurvedDGA) -> CochainComplex:
    return complex_from_operator({n: L.by_degree[n] for n in L.degrees}, lambda k: L.d({k: Fraction(1)}))


def mc_residual(L: CurvedDGA, B: ArtinRing, x: Mapping) -> dict:
    """dx + ½[x, x]."""
    if not in_maximal(B, x):
        raise ValueError("Maurer-Cartan elements need coefficients in the maximal ideal")
    return badd(bd(L, x), bscale(Fraction(1, 2), bbracket(L, B, x, x)))


def perturbed_square(L: CurvedDGA, B: ArtinRing, x: Mapping, y: Mapping) -> dict:
    """(d + [x, -])² y, which equals [dx + ½[x,x], y] when d² = 0."""

    def D(z):
        return badd(bd(L, z), bbracket(L, B, x, z))

    return D(D(y))


def _ad_series(L: CurvedDGA, B: ArtinRing, a: Mapping, z: Mapping) -> dict:
    """Σ_{n≥0} ad_a^n z / (n+1)!, finite because coefficients are nilpotent."""
    out, term, n = dict(z), dict(z), 0
    while term:
        n += 1
        term = bbracket(L, B, a, term)
        out = badd(out, bscale(Fraction(1, factorial(n + 1)), term))
        if n > B.nilpotency + 1:
            raise ArithmeticError("gauge series did not terminate")
    return out


def gauge_act(L: CurvedDGA, B: ArtinRing, a: Mapping, x: Mapping) -> dict:
    """e^a ∗ x = x + Σ_n ad_a^n/(n+1)! ([a, x] − da)."""
    if not in_maximal(B, a):
        raise ValueError("gauge parameters need coefficients in the maximal ideal")
    if not a:
        return dict(x)
    seed = badd(bbracket(L, B, a, x), bscale(-1, bd(L, a)))
    return badd(x, _ad_series(L, B, a, seed) if seed else {})


def bch(L: CurvedDGA, B: ArtinRing, a: Mapping, b: Mapping) -> dict:
    """Baker-Campbell-Hausdorff series through degree 4 (exact when m_B^5 = 0)."""
    if B.nilpotency > 5:
        raise ValueError("bch is implemented through degree 4 only")

    def br(x, y):
        return bbracket(L, B, x, y)

    ab = br(a, b)
    terms = [a, b, bscale(Fraction(1, 2), ab),
             bscale(Fraction(1, 12), br(a, ab)), bscale(Fraction(-1, 12), br(b, ab)),
             bscale(Fraction(-1, 24), br(b, br(a, ab)))]
    return badd(*terms)


# ---------------------------------------------------------------------------
# first-order deformations
# ---------------------------------------------------------------------------


@dataclass
class FirstOrderReport:
    h1: CohomologyGroup
    mc_is_cocycles: bool
    orbit_map_well_defined: bool
    injective: bool
    surjective: bool

    @property
    def dim(self) -> int:
        return self.h1.dim

    @property
    def bijection(self) -> bool:
        return self.mc_is_cocycles and self.orbit_map_well_defined and self.injective and self.surjective


def first_order_classes(L: CurvedDGA, seed: int = 0, trials: int = 4) -> FirstOrderReport:
    """H¹ with the first-order identification checked over 𝕂[u]/(u²)."""
    rng = random.Random(seed)
    B = ArtinRing.truncated(2)
    u = (1,)
    C = dgla_complex(L)
    H = cohomology(C)
    h1 = H.get(1) or CohomologyGroup(1, 0, [], [], [], None)
    n1 = L.dim(1)

    def lift(v, deg=1):
        return {u: L.from_vector(v, deg)} if any(v) else {}

    # the MC equation at first order is z ↦ dz; its kernel must be Z¹
    mc_is_cocycles = True
    for i in range(n1):
        e = tuple(Fraction(int(j == i)) for j in range(n1))
        res = mc_residual(L, B, lift(e))
        lin = C.apply(1, e) if C.dim(2) else ()
        expect = {u: L.from_vector(lin, 2)} if lin and any(lin) else {}
        if res != expect:
            mc_is_cocycles = False

    def random_vec(n):
        return tuple(Fraction(rng.randint(-2, 2)) for _ in range(n))

    well_defined = True
    n0 = L.dim(0)
    for rep in (h1.representatives if h1.dim else []) + [tuple(Fraction(0) for _ in range(n1))]:
        for _ in range(trials):
            a = random_vec(n0)
            y = gauge_act(L, B, lift(a, 0), lift(rep))
            if mc_residual(L, B, y):
                well_defined = False
            vy = L.to_vector(y.get(u, {}), 1) if y else tuple(Fraction(0) for _ in range(n1))
            if tuple(p - q for p, q in zip(h1.project(vy), h1.project(rep))) != tuple(Fraction(0) for _ in range(h1.dim)):
                well_defined = False

    injective = True
    reps = h1.representatives if h1.dim else []
    for i, r1 in enumerate(reps + [tuple(Fraction(0) for _ in range(n1))]):
        for j, r2 in enumerate(reps + [tuple(Fraction(0) for _ in range(n1))]):
            diff = tuple(p - q for p, q in zip(r1, r2))
            a = solve(C.differential(0), diff) if n0 else (None if any(diff) else ())
            if (i == j) != (a is not None):
                injective = False
            if a is not None:
                moved = gauge_act(L, B, lift(a, 0), lift(r1))
                if moved != lift(r2):
                    injective = False
        # a random coboundary shift of a representative lands in the same orbit
        if n0:
            a0 = random_vec(n0)
            shifted = tuple(p + q for p, q in zip(r1, C.apply(0, a0)))
            a = solve(C.differential(0), tuple(p - q for p, q in zip(shifted, r1)))
            if a is None or gauge_act(L, B, lift(a, 0), lift(shifted)) != lift(r1):
                injective = False

    surjective = all(not mc_residual(L, B, lift(r)) for r in reps) and len(reps) == h1.dim
    return FirstOrderReport(h1, mc_is_cocycles, well_defined, injective, surjective)


# ---------------------------------------------------------------------------
# obstructions
# ---------------------------------------------------------------------------


@dataclass
class ObstructionClass:
    extension: SmallExtension
    representative: Element
    coordinates: Vector
    lift: dict
    genuine: bool = True

    @property
    def is_zero(self) -> bool:
        return is_zero_vector(self.coordinates)


@dataclass
class Lift:
    extension: SmallExtension
    element: dict
    corrected: bool


def _random_kernel_shift(L: CurvedDGA, ext: SmallExtension, rng: random.Random) -> dict:
    v = tuple(Fraction(rng.randint(-2, 2)) for _ in range(L.dim(1)))
    return {ext.kernel: L.from_vector(v, 1)} if any(v) else {}


def lift_obstruction(L: CurvedDGA, ext: SmallExtension, x: Mapping, rng: random.Random | None = None,
                     check_independence: bool = True) -> Lift | ObstructionClass:
    """Lift a Maurer-Cartan element over B/(μ) to B, or return the class in H² ⊗ (μ) blocking it."""
    small, big = ext.small, ext.big
    if any(m not in small.basis for m in x):
        raise ValueError("element does not live over the quotient ring")
    if mc_residual(L, small, x):
        raise ValueError("element is not Maurer-Cartan over the quotient ring")
    rng = rng or random.Random(0)
    C = dgla_complex(L)
    H = cohomology(C)

    def obstruction_of(xt):
        h = mc_residual(L, big, xt)
        if any(m != ext.kernel for m in h):
            raise ArithmeticError("residual outside the kernel of the small extension")
        rep = h.get(ext.kernel, {})
        vec = L.to_vector(rep, 2) if rep else tuple(Fraction(0) for _ in range(L.dim(2)))
        if C.dim(3) and any(C.apply(2, vec)):
            raise ArithmeticError("obstruction representative is not closed")
        return rep, vec

    xt = dict(x)
    rep, vec = obstruction_of(xt)
    coords = H[2].project(vec) if 2 in H and H[2].dim else ()
    if is_zero_vector(coords):
        if not any(vec):
            return Lift(ext, xt, False)
        y = solve(C.differential(1), vec)
        corrected = badd(xt, {ext.kernel: escale(-1, L.from_vector(y, 1))})
        if mc_residual(L, big, corrected):
            raise ArithmeticError("corrected lift is not Maurer-Cartan")
        return Lift(ext, corrected, True)
    if check_independence:
        other = badd(xt, _random_kernel_shift(L, ext, rng))
        _, vec2 = obstruction_of(other)
        if H[2].project(vec2) != coords:
            raise ArithmeticError("obstruction class depends on the lift")
    return ObstructionClass(ext, rep, coords, xt, True)


def exploratory_class(L: CurvedDGA, vector: Sequence) -> ObstructionClass:
    """Wrap an arbitrary closed degree-2 element; never treated as a genuine obstruction."""
    C = dgla_complex(L)
    H = cohomology(C)
    vec = tuple(Fraction(v) for v in vector)
    return ObstructionClass(tower_step(1), L.from_vector(vec, 2), H[2].project(vec), {}, genuine=False)


# ---------------------------------------------------------------------------
# semiregularity maps and the annihilation check
# ---------------------------------------------------------------------------


def lift_to_ambient(prob: AtiyahProblem, x: Mapping) -> Element:
    """Send φ_K ⊗ f (K in subalgebra positions) to φ_{sub(K)} ⊗ f in Ω(L) ⊗ End E."""
    out: dict = {}
    for (K, a, b), c in x.items():
        image = tuple(prob.pair.sub[i] for i in K)
        sign = permutation_sign(image)
        key = (tuple(sorted(image)), a, b)
        out[key] = out.get(key, 0) + sign * c
    return {k: v for k, v in out.items() if v}


@dataclass
class SemiregularityValue:
    k: int
    cocycle: Vector
    coordinates: Vector
    sigma: Element

    @property
    def is_zero(self) -> bool:
        return is_zero_vector(self.coordinates)


def tau_k(prob: AtiyahProblem, ob: ObstructionClass, k: int) -> SemiregularityValue:
    """(1/k!) Tr(At^k ob) as a class in H^{2+k}(A; ⋀^k (L/A)^∨)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    pair = prob.pair
    P = leray_pair(prob, extend_connection(prob))
    T = matrix_trace(pair.ambient)
    sigma = sigma_k1(P, T, k, lift_to_ambient(prob, ob.representative))
    trivial = Connection.trivial(pair.sub_spec(), 1)
    gp = graded_piece(pair, trivial, k)
    std = gp.standard
    deg = 2 + k
    if not std.dims or std.dim(deg) == 0:
        return SemiregularityValue(k, (), (), sigma)
    vec = [Fraction(0)] * std.dim(deg)
    index = {key: i for i, key in enumerate(std.names[deg])}
    for I, c in sigma.items():
        if pair.m_count(I) != k:
            continue
        s, target = gp.key_map[(I, 0)]
        vec[index[target]] += s * c
    H = cohomology(std)
    coords = H[deg].project(tuple(vec)) if deg in H else ()
    return SemiregularityValue(k, tuple(vec), coords, sigma)


@dataclass
class AnnihilationResult:
    k: int
    passed: bool
    primitive: Element | None
    sigma: Element
    degenerate: bool
    tau: SemiregularityValue
    asserted: bool

    @property
    def tau_zero(self) -> bool:
        return self.tau.is_zero


class NotAnObstruction(ValueError):
    pass


def annihilation_check(prob: AtiyahProblem, ob: ObstructionClass, k: int, exploratory: bool = False) -> AnnihilationResult:
    """σ_k¹(ob) must be exact in (Ω(L)/G_{k+1})[2k]; the primitive is returned as the certificate.

    Under E_1-degeneration of the Leray sequence τ_k(ob) must vanish as well.
    Non-genuine classes are refused unless ``exploratory`` is set, in which
    case the outcome is only reported.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if not ob.genuine and not exploratory:
        raise NotAnObstruction("only classes produced by lift_obstruction are covered")
    P = leray_pair(prob, extend_connection(prob))
    T = matrix_trace(prob.pair.ambient)
    h = lift_to_ambient(prob, ob.representative)
    sigma = sigma_k1(P, T, k, h)
    Q = quotient_target(T, P, k)
    prim = Q.primitive(sigma, 2 + 2 * k)
    passed = prim is not None
    if passed:
        check = eadd(Q.target.d(prim), escale(-1, sigma))
        if check and not is_zero_vector(Q.project(check, 2 + 2 * k)):
            raise ArithmeticError("primitive does not solve the coboundary equation")
    degenerate = leray_E1(prob.pair).degenerates_at_E1
    tau = tau_k(prob, ob, k)
    return AnnihilationResult(k, passed, prim, sigma, degenerate, tau, ob.genuine and not exploratory)
