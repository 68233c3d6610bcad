import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from semireg.twtot import (
    CompatibilityError,
    LineBundleProblem,
    SemicosimplicialDG,
    SimplexForm,
    build_simplicial_connection,
    cech_cohomology,
    coface_pullback,
    cotangent,
    curved_tot_check,
    d_tot,
    de_rham_two_chart,
    elementary_form,
    elementary_section,
    end_valued,
    iota,
    line_bundle,
    line_bundle_atiyah,
    log_derivative_residue,
    random_cochain,
    residue_class,
    split_sequence_exactness,
    tot_assemble,
    tuples,
    whitney_checks,
    whitney_integrate,
)

F = Fraction


@st.composite
def forms(draw, level, max_terms=3, max_exp=2):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = tuple(draw(st.integers(0, max_exp)) for _ in range(level))
        dts = tuple(sorted(draw(st.sets(st.integers(1, level), max_size=level)))) if level else ()
        terms[(exps, dts)] = draw(st.integers(-3, 3))
    return SimplexForm(level, terms)


def test_coface_examples():
    assert coface_pullback(0, SimplexForm.t(1, 1)) == SimplexForm.const(0)
    assert coface_pullback(1, SimplexForm.t(1, 1)).is_zero()
    phi = SimplexForm.t(0, 2) * SimplexForm.dt(1, 2)
    assert coface_pullback(1, phi).is_zero()
    assert coface_pullback(2, phi) == SimplexForm.t(0, 1) * SimplexForm.dt(1, 1)
    assert coface_pullback(0, phi).is_zero()
    with pytest.raises(IndexError):
        coface_pullback(3, phi)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_coface_is_a_dg_algebra_map(data):
    n = data.draw(st.integers(1, 3))
    k = data.draw(st.integers(0, n))
    a, b = data.draw(forms(n)), data.draw(forms(n))
    assert coface_pullback(k, a * b) == coface_pullback(k, a) * coface_pullback(k, b)
    assert coface_pullback(k, a.d()) == coface_pullback(k, a).d()
    assert a.d().d().is_zero()


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_cosimplicial_identities_on_forms(data):
    n = data.draw(st.integers(2, 3))
    j = data.draw(st.integers(1, n))
    i = data.draw(st.integers(0, j - 1))
    a = data.draw(forms(n))
    assert coface_pullback(i, coface_pullback(j, a)) == coface_pullback(j - 1, coface_pullback(i, a))


def test_integral_examples():
    assert SimplexForm.dt(1, 1).integrate() == 1
    assert (SimplexForm.t(1, 1) * SimplexForm.dt(1, 1)).integrate() == F(1, 2)
    assert SimplexForm.t(1, 1).integrate() == 0


@pytest.mark.parametrize("a,b", [(0, 0), (1, 0), (2, 1), (3, 2)])
def test_integral_against_symbolic_oracle(a, b):
    t1, t2 = sympy.symbols("t1 t2")
    expected = sympy.integrate(sympy.integrate(t1**a * t2**b, (t2, 0, 1 - t1)), (t1, 0, 1))
    form = SimplexForm(2, {((a, b), (1, 2)): 1})
    assert form.integrate() == F(int(expected.p), int(expected.q))


def test_elementary_forms():
    assert elementary_form((0, 1), 1) == SimplexForm.dt(1, 1)
    for n in range(3):
        for j in range(n + 1):
            assert elementary_form((j,), n) == SimplexForm.t(j, n)
    assert elementary_form((0, 1, 2), 2).integrate() == 1


def test_elementary_section_examples():
    obj = SemicosimplicialDG(line_bundle(1, (-2, 2)), 2)
    assert elementary_section(obj, {}).is_zero()
    zero_cochain = {0: {((0,), 0, 0): F(2), ((1,), 0, 1): F(3)}}
    x = elementary_section(obj, zero_cochain)
    assert x.component(0) == {((0,), 0, 0): SimplexForm.const(0, 2), ((1,), 0, 1): SimplexForm.const(0, 3)}
    one = {1: {((0, 1), 0, 0): F(1), ((1, 0), 0, 0): F(-1)}}
    y = elementary_section(obj, one)
    assert y.component(1)[((0, 1), 0, 0)] == SimplexForm.dt(1, 1)
    assert {n: c for n, c in whitney_integrate(y).items() if c} == one


def test_iota_is_compatible_and_perturbation_is_reported():
    V = line_bundle(2, (-3, 3))
    obj = SemicosimplicialDG(V, 3)
    s = V.components[0].global_sections()[1]
    x = iota(obj, s, 0)
    tot_assemble(obj, x.levels)
    bad = {n: dict(lv) for n, lv in x.levels.items()}
    key = next(iter(bad[2]))
    bad[2][key] = bad[2][key] + SimplexForm.t(1, 2)
    with pytest.raises(CompatibilityError) as err:
        tot_assemble(obj, bad)
    assert err.value.n == 2
    assert {n: c for n, c in whitney_integrate(x).items() if c} == {
        0: {((i,), 0, e): c for i in (0, 1) for e, c in s[str(i)].items()}}


def test_semicosimplicial_identities():
    obj = SemicosimplicialDG(de_rham_two_chart((-2, 2)), 3)
    assert obj.check_cosimplicial(2) and obj.check_cosimplicial(3)
    assert len(tuples(2)) == 8


def test_d_tot_squares_to_zero():
    rng = random.Random(4)
    obj = SemicosimplicialDG(de_rham_two_chart((-2, 2)), 3)
    for _ in range(5):
        x = elementary_section(obj, random_cochain(obj, rng, 0.1))
        assert d_tot(d_tot(x)).is_zero()


@pytest.mark.parametrize("n", range(6))
def test_positive_line_bundles(n):
    res = cech_cohomology(line_bundle(n))
    assert res.stable and res.dims.get(0, 0) == n + 1 and res.dims.get(1, 0) == 0


@pytest.mark.parametrize("n", range(2, 6))
def test_negative_line_bundles(n):
    res = cech_cohomology(line_bundle(-n))
    assert res.stable and res.dims.get(0, 0) == 0 and res.dims.get(1, 0) == n - 1


def test_other_sheaves():
    assert cech_cohomology(line_bundle(-1)).dims.get(1, 0) == 0
    omega = cech_cohomology(cotangent())
    assert omega.stable and omega.dims.get(1, 0) == 0 and omega.dims.get(2, 0) == 1
    dr = cech_cohomology(de_rham_two_chart())
    assert dr.stable and (dr.dims.get(0), dr.dims.get(1, 0), dr.dims.get(2)) == (1, 0, 1)


def test_narrow_window_is_flagged():
    res = cech_cohomology(line_bundle(5), window=(-1, 1))
    assert not res.stable and res.dims[0] != res.widened_dims[0]


def test_representatives_are_cocycles():
    res = cech_cohomology(line_bundle(-3))
    C = res.complex
    for rep in res.representatives[1]:
        vec = [rep.get(k, 0) for k in C.names[1]]
        assert not any(C.apply(1, vec))


@pytest.mark.parametrize("n", range(-2, 4))
def test_line_bundle_atiyah_residue(n):
    value = line_bundle_atiyah(LineBundleProblem(n, (-4, 4)))
    assert value.residue == value.extension_residue == log_derivative_residue(n) == n
    assert value.coordinates == residue_class(F(n), (-4, 4))
    assert value.is_zero == (n == 0)


def test_equal_connections_glue_to_a_global_section():
    conn = build_simplicial_connection(LineBundleProblem(0, (-2, 2)))
    assert end_valued(d_tot(conn)).is_zero()


@pytest.mark.parametrize("V", [line_bundle(0, (-2, 2)), line_bundle(1, (-2, 2)),
                               line_bundle(-2, (-2, 2)), de_rham_two_chart((-2, 2))])
def test_whitney_checks(V):
    report = whitney_checks(V, 4, random.Random(8))
    assert report.ok


@pytest.mark.parametrize("degree", [0, 1])
def test_split_sequence_exactness(degree):
    report = split_sequence_exactness(line_bundle(1, (-1, 1)), cotangent((-1, 1), degree=0), degree)
    assert report.exact and report.dims[1] > 0


def test_curved_tot_check():
    prob = LineBundleProblem(2, (-2, 2))
    obj = SemicosimplicialDG(de_rham_two_chart((-2, 2)), 3)
    samples = [elementary_section(obj, random_cochain(obj, random.Random(i), 0.1)) for i in range(3)]
    report = curved_tot_check(prob, samples)
    assert report.ok and not report.curvature.is_zero()
