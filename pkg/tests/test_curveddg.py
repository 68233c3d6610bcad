import random
from fractions import Fraction

import pytest
import sympy

from semireg.algebroid import Connection, abelian, aff1, sl2
from semireg.atiyah import AtiyahProblem, extend_connection, leray_pair, random_extension
from semireg.curveddg import (
    CurvedDGA,
    CurvedPair,
    CurvedPairError,
    TraceData,
    atiyah_class,
    check_curved,
    check_trace,
    eadd,
    endomorphism_algebra,
    escale,
    ideal_power,
    quotient_target,
    matrix_trace,
    same_atiyah_class,
    sigma_chain_residual,
    sigma_k1,
    twist,
    unit_element,
)
from semireg.dgcore import cohomology
from semireg.liepair import LiePairSpec

from curated import fixture_problem

F = Fraction


def nonflat_aff1():
    spec = aff1()
    return spec, Connection(spec, 2, (((F(1), F(2)), (F(0), F(3))), ((F(0), F(1)), (F(1), F(0)))))


def chain_algebra(d_squared_zero: bool) -> CurvedDGA:
    """Basis e0, e1, e2 in degrees 0, 1, 2 with zero products except the unit e0."""
    keys = ["e0", "e1", "e2"]
    deg = {"e0": 0, "e1": 1, "e2": 2}

    def mul(a, b):
        if a == "e0":
            return {b: F(1)}
        if b == "e0":
            return {a: F(1)}
        return {}

    def d(a):
        if a == "e1" and not d_squared_zero:
            return {"e2": F(1)}
        return {}

    def d_bad(a):
        return {"e0": {"e1": F(1)}, "e1": {"e2": F(1)}}.get(a, {})

    return CurvedDGA(keys, deg, mul, d if d_squared_zero else d_bad, {})


def test_flat_dga_valid_iff_d_squared_zero():
    assert check_curved(chain_algebra(True), check_derivation=False)
    report = check_curved(chain_algebra(False), check_derivation=False)
    assert not report and report.identity == "d² = [R, -]"


def test_nonflat_connection_algebra_is_curved():
    spec, conn = nonflat_aff1()
    A = endomorphism_algebra(spec, conn)
    assert A.R and check_curved(A)


def test_unit_shift_of_curvature_is_rejected():
    spec, conn = nonflat_aff1()
    A = endomorphism_algebra(spec, conn)
    B = CurvedDGA(A.keys, A.degree, A._mul, A._d, eadd(A.R, unit_element(2)))
    report = check_curved(B)
    assert not report and report.identity == "curvature degree"


def zero_curvature_algebra():
    spec = abelian(2)
    return endomorphism_algebra(spec, Connection.trivial(spec, 1))


def test_ideal_power_examples():
    A = zero_curvature_algebra()
    P0 = CurvedPair(A, {})
    assert all(not vs for k in (1, 2, 3) for vs in ideal_power(P0, k).values())
    everything = {n: [{k: F(1)} for k in A.by_degree[n]] for n in A.degrees}
    P1 = CurvedPair(A, everything)
    for k in (0, 1, 2):
        assert {n: len(vs) for n, vs in ideal_power(P1, k).items()} == {n: A.dim(n) for n in A.degrees}


def test_leray_ideal_square_vanishes_for_corank_one():
    pair = LiePairSpec(aff1(), (0,))
    prob = AtiyahProblem.from_matrices(pair, [[[2]]])
    P = leray_pair(prob, extend_connection(prob))
    assert all(not vs for vs in ideal_power(P, 2).values())
    assert any(ideal_power(P, 1).values())


def test_powers_decrease_and_multiply():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    A = P.A
    for k in range(3):
        upper, lower = P.power(k), P.power(k + 1)
        for n, vs in lower.items():
            assert all(P.contains(A.from_vector(v, n), upper) for v in vs)
    for x in P.ideal_elements(P.power(1)):
        for y in P.ideal_elements(P.power(1)):
            assert P.contains(A.mul(x, y), P.power(2))


def test_rejects_ideal_missing_curvature():
    spec, conn = nonflat_aff1()
    with pytest.raises(CurvedPairError):
        CurvedPair(endomorphism_algebra(spec, conn), {})


def test_induced_differentials_square_to_zero():
    prob = fixture_problem()
    P = leray_pair(prob, random_extension(prob, random.Random(2)))
    for k in range(3):
        C, _ = P.subquotient_complex(k, k + 1)
        C.check()


def test_class_zero_when_curvature_already_deep():
    pair = LiePairSpec(abelian(3), (0,))
    prob = AtiyahProblem.from_matrices(pair, [[[0]]])
    P = leray_pair(prob, extend_connection(prob))
    cls = atiyah_class(P)
    assert cls.is_zero and cls.witness == {}


def test_exact_curvature_gets_a_witness():
    pair = LiePairSpec(abelian(3), (0,))
    prob = AtiyahProblem.from_matrices(pair, [[[0, 0], [0, 0]]])
    P = leray_pair(prob, extend_connection(prob))
    x0 = {((1,), 0, 1): F(1), ((2,), 1, 0): F(2)}
    Q = twist(P, x0)
    cls = atiyah_class(Q)
    assert cls.is_zero and cls.witness is not None
    A = Q.A
    moved = eadd(A.R, A.d(cls.witness))
    assert Q.contains(moved, Q.power(2))


def test_fixture_class_is_nonzero_and_witness_system_unsolvable():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    cls = atiyah_class(P)
    assert not cls.is_zero and cls.witness is None
    C, _ = P.subquotient_complex(1, 2)
    D = C.differential(1)
    M = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in D.rows])
    rhs = sympy.Matrix([sympy.Rational(-c.numerator, c.denominator) for c in cls.representative])
    assert M.rank() < M.row_join(rhs).rank()


def test_twist_examples():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    same = twist(P, {})
    assert same.A.R == P.A.R
    assert all(same.A.d({k: F(1)}) == P.A.d({k: F(1)}) for k in P.A.keys)
    with pytest.raises(CurvedPairError):
        twist(P, {((0,), 0, 0): F(1)})
    with pytest.raises(CurvedPairError):
        twist(P, {((1, 2), 0, 0): F(1)})


def random_ideal_element(P: CurvedPair, rng: random.Random, degree: int = 1) -> dict:
    A = P.A
    out: dict = {}
    for v in P.ideal.get(degree, []):
        c = rng.randint(-2, 2)
        if c:
            out = eadd(out, escale(c, A.from_vector(v, degree)))
    return out


def test_twist_back_recovers_the_pair():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    rng = random.Random(5)
    for _ in range(5):
        x = random_ideal_element(P, rng)
        Q = twist(twist(P, x), escale(-1, x))
        assert Q.A.R == P.A.R
        assert all(Q.A.d({k: F(1)}) == P.A.d({k: F(1)}) for k in P.A.keys)


def test_twists_keep_axioms_and_class():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    rng = random.Random(9)
    for _ in range(8):
        Q = twist(P, random_ideal_element(P, rng))
        assert check_curved(Q.A, check_derivation=False)
        assert same_atiyah_class(P, Q)


def test_trace_examples():
    point = abelian(0)
    A = endomorphism_algebra(point, Connection.trivial(point, 2))
    P = CurvedPair(A, {})
    assert check_trace(matrix_trace(point), P)
    spec, conn = nonflat_aff1()
    B = endomorphism_algebra(spec, conn)
    Q = CurvedPair(B, {n: [{k: F(1)} for k in B.by_degree[n] if n > 0] for n in B.degrees})
    assert check_trace(matrix_trace(spec), Q)
    good = matrix_trace(point)
    wrong = TraceData(good.target, lambda k: {k[0]: F(int(k[1] == k[2]) + int((k[1], k[2]) == (0, 0)))})
    report = check_trace(wrong, P)
    assert not report and report.identity == "Tr([A,A]) = 0"


def test_sigma_examples():
    prob = fixture_problem()
    P = leray_pair(prob, extend_connection(prob))
    T = matrix_trace(prob.pair.ambient)
    x = {((0, 2), 0, 0): F(1), ((0, 2), 1, 1): F(3)}
    assert sigma_k1(P, T, 0, x) == T.tr(x) == {(0, 2): F(4)}
    assert sigma_k1(P, T, 1, {}) == {}
    with pytest.raises(ValueError):
        sigma_k1(P, T, -1, x)
    for k in range(3):
        assert sigma_chain_residual(P, T, k) == 0


def test_sigma_chain_map_on_sl2_borel():
    pair = LiePairSpec(sl2(), (0, 1))
    prob = AtiyahProblem.from_matrices(pair, [[[1]], [[0]]])
    P = leray_pair(prob, random_extension(prob, random.Random(1)))
    T = matrix_trace(sl2())
    assert check_trace(T, P)
    for k in range(3):
        assert sigma_chain_residual(P, T, k) == 0


def borel_line():
    pair = LiePairSpec(sl2(), (0, 1))
    return AtiyahProblem.from_matrices(pair, [[[1]], [[0]]])


@pytest.mark.parametrize("make,k", [(fixture_problem, 1), (borel_line, 0), (borel_line, 1)])
def test_quotient_primitives_solve_exact_inputs(make, k):
    prob = make()
    P = leray_pair(prob, extend_connection(prob))
    T = matrix_trace(prob.pair.ambient)
    Q = quotient_target(T, P, k)
    C = T.target
    rng = random.Random(k)
    solved = 0
    for n in C.degrees:
        if n + 1 not in C.by_degree:
            continue
        for _ in range(5):
            y = C.from_vector(tuple(F(rng.randint(-2, 2)) for _ in range(C.dim(n))), n)
            target = C.d(y)
            if not any(Q.project(target, n + 1)):
                continue
            z = Q.primitive(target, n + 1)
            assert z is not None
            assert not any(Q.project(eadd(C.d(z), escale(-1, target)), n + 1))
            solved += 1
    assert solved > 0
    H = cohomology(Q.complex)
    for n, h in H.items():
        for rep in h.representatives:
            lifted = [F(0)] * C.dim(n)
            for c, r in zip(rep, Q.pieces[n].representatives):
                lifted = [a + c * b for a, b in zip(lifted, r)]
            assert Q.primitive(C.from_vector(lifted, n), n) is None
