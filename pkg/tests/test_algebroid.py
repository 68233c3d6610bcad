import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semireg.algebroid import (
    Connection,
    FlatnessError,
    Form,
    LieAlgebroidSpec,
    abelian,
    adjoint_derivative,
    aff1,
    check_algebroid,
    contract,
    covariant_derivative,
    curvature,
    graded_commutator,
    de_rham_complex,
    derham_differential,
    gl2,
    heisenberg,
    sl2,
    sl2_on_line,
    standard_complex,
    tangent_line,
    wedge,
)
from semireg.dgcore import betti

from oracles import antisymmetric, ce_dims, jacobi_holds, random_bracket_table

F = Fraction


def scalar_forms(rank):
    def build(degree, values):
        keys = list(combinations(range(rank), degree))
        return Form(rank, degree, {k: F(v) for k, v in zip(keys, values)})

    return st.integers(0, rank).flatmap(
        lambda k: st.lists(st.integers(-3, 3), min_size=10, max_size=10).map(lambda vs: build(k, vs)))


def test_check_algebroid_examples():
    assert check_algebroid(abelian(4))
    assert check_algebroid(sl2())
    bad = LieAlgebroidSpec(("x", "y"), {(0, 1): {1: F(1)}})
    report = check_algebroid(bad)
    assert not report and report.identity == "antisymmetry" and report.where == ("x", "y")


def test_jacobi_failure_is_named():
    spec = LieAlgebroidSpec.lie_algebra(["a", "b", "c"], {("b", "c"): {"a": 1}, ("c", "a"): {"c": 1}})
    report = check_algebroid(spec)
    assert not report and report.identity == "jacobi" and report.where == ("a", "b", "c")


def test_chart_tier_instances_are_valid():
    assert check_algebroid(sl2_on_line())
    assert check_algebroid(tangent_line())


def test_wedge_examples():
    x, y = Form.dual(2, 0), Form.dual(2, 1)
    one = Form.function(2, F(1))
    assert wedge(x, one) == x
    assert wedge(x, y) == -wedge(y, x)
    assert wedge(x, x).is_zero()


def test_contract_examples():
    assert contract((1, 0), Form.dual(2, 0)) == Form.function(2, F(1))
    assert contract((0, 1), Form(2, 2, {(0, 1): F(1)})) == -Form.dual(2, 0)
    assert contract((1, 1), Form.function(2, F(5))).is_zero()


def test_aff1_differential():
    spec = aff1()
    assert derham_differential(spec, Form.dual(2, 1)) == Form(2, 2, {(0, 1): F(-1)})
    assert derham_differential(spec, Form.dual(2, 0)).is_zero()


def test_abelian_differential_vanishes():
    spec = abelian(3)
    for k in range(4):
        for I in combinations(range(3), k):
            assert derham_differential(spec, Form(3, k, {I: F(1)})).is_zero()


@settings(max_examples=50, deadline=None)
@given(scalar_forms(4), scalar_forms(4), st.lists(st.integers(-2, 2), min_size=4, max_size=4))
def test_koszul_identity_for_contraction(omega, eta, l):
    lhs = contract(l, wedge(omega, eta))
    rhs = wedge(contract(l, omega), eta) + wedge(omega, contract(l, eta)).scale((-1) ** omega.degree)
    assert lhs == rhs


@settings(max_examples=50, deadline=None)
@given(scalar_forms(4), scalar_forms(4), scalar_forms(4))
def test_wedge_graded_commutative_and_associative(a, b, c):
    assert wedge(a, b) == wedge(b, a).scale((-1) ** (a.degree * b.degree))
    assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))


@settings(max_examples=40, deadline=None)
@given(scalar_forms(3), scalar_forms(3))
def test_differential_is_a_derivation_and_squares_to_zero(a, b):
    spec = sl2()
    d = lambda w: derham_differential(spec, w)
    assert d(wedge(a, b)) == wedge(d(a), b) + wedge(a, d(b)).scale((-1) ** a.degree)
    assert d(d(a)).is_zero()


def test_curvature_examples():
    # a representation is flat, including the adjoint one
    assert Connection.adjoint(sl2()).is_flat()
    assert Connection.adjoint(gl2()).is_flat()
    A = ((F(0), F(1)), (F(0), F(0)))
    B = ((F(0), F(0)), (F(1), F(0)))
    R = curvature(abelian(2), Connection(abelian(2), 2, (A, B)))
    assert R.coeffs[(0, 1)] == ((F(1), F(0)), (F(0), F(-1)))


def test_squaring_the_extended_operator_gives_curvature():
    spec = aff1()
    conn = Connection(spec, 2, (((F(1), F(2)), (F(0), F(3))), ((F(0), F(1)), (F(1), F(0)))))
    R = curvature(spec, conn)
    assert not R.is_zero()
    rng = random.Random(3)
    for degree in range(3):
        for I in combinations(range(2), degree):
            v = (F(rng.randint(-2, 2)), F(rng.randint(-2, 2)))
            omega = Form(2, degree, {I: v})
            twice = covariant_derivative(spec, conn, covariant_derivative(spec, conn, omega))
            assert twice == wedge(R, omega)


def test_curvature_is_linear_on_the_chart_tier():
    spec = tangent_line((-4, 4))
    conn = Connection(spec, 1, (((spec.coeff({1: 1}),),),))
    assert curvature(spec, conn).is_zero()


def test_standard_complex_examples():
    assert standard_complex(sl2(), Connection.trivial(sl2())).dims == de_rham_complex(sl2()).dims
    assert tuple(betti(standard_complex(aff1(), Connection.trivial(aff1()))).get(n, 0) for n in range(3)) == (1, 1, 0)
    with pytest.raises(FlatnessError):
        standard_complex(abelian(2), Connection(abelian(2), 2, (((0, 1), (0, 0)), ((0, 0), (1, 0)))))


@pytest.mark.parametrize("spec", [sl2(), gl2(), aff1(), heisenberg(), abelian(1), abelian(3), abelian(4)])
def test_cohomology_matches_bruteforce(spec):
    got = tuple(betti(de_rham_complex(spec)).get(n, 0) for n in range(spec.rank + 1))
    assert got == ce_dims(spec.rank, spec.brackets)


def test_adjoint_cohomology_matches_bruteforce():
    spec = aff1()
    conn = Connection.adjoint(spec)
    got = tuple(betti(standard_complex(spec, conn)).get(n, 0) for n in range(3))
    action = [[[conn.matrices[i][a][b] for b in range(2)] for a in range(2)] for i in range(2)]
    assert got == ce_dims(2, spec.brackets, action, 2)


def test_adjoint_derivative_squares_to_curvature_bracket():
    spec = abelian(2)
    conn = Connection(spec, 2, (((F(0), F(1)), (F(0), F(0))), ((F(0), F(0)), (F(1), F(0)))))
    alpha = Form(2, 0, {(): ((F(1), F(2)), (F(3), F(4)))})
    R = curvature(spec, conn)
    twice = adjoint_derivative(spec, conn, adjoint_derivative(spec, conn, alpha))
    assert twice == graded_commutator(R, alpha)


def sweep_specs(count: int = 120, seed: int = 11):
    rng = random.Random(seed)
    for trial in range(count):
        n = rng.choice([2, 3, 3, 4])
        table = random_bracket_table(rng, n, asymmetric=(trial % 7 == 0))
        yield n, table


def test_random_sweep_accepts_exactly_the_lie_algebras():
    accepted = 0
    for n, table in sweep_specs():
        spec = LieAlgebroidSpec(tuple(f"l{i}" for i in range(n)), {k: {m: F(c) for m, c in v.items()} for k, v in table.items()})
        expected = antisymmetric(n, table) and jacobi_holds(n, table)
        assert bool(check_algebroid(spec)) == expected
        if expected:
            accepted += 1
            for k in range(n + 1):
                for I in combinations(range(n), k):
                    w = Form(n, k, {I: F(1)})
                    assert derham_differential(spec, derham_differential(spec, w)).is_zero()
    assert accepted >= 20
