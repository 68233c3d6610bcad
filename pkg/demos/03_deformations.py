"""
Obstructions and semiregularity
===============================

A first-order deformation of a flat module is pushed up the tower
Q[u]/(u^n). When a lift is blocked, the obstruction class is fed to the
semiregularity maps and its image is shown to be exact in the quotient complex.
"""

from fractions import Fraction

from semireg.algebroid import Connection, LieAlgebroidSpec, abelian
from semireg.atiyah import AtiyahProblem
from semireg.deform import (
    Lift,
    annihilation_check,
    first_order_classes,
    lift_obstruction,
    module_dgla,
    tower_step,
)
from semireg.liepair import LiePairSpec

F = Fraction

# Abelian two-dimensional algebra acting trivially on Q². First-order
# deformations are pairs of 2x2 matrices; commuting pairs extend, others do not.
pair = LiePairSpec(abelian(2), (0, 1))
zero = ((F(0), F(0)), (F(0), F(0)))
prob = AtiyahProblem(pair, Connection(pair.sub_spec(), 2, (zero, zero)))
L = module_dgla(prob)
print("first-order classes:", first_order_classes(L).dim)

x = {(1,): {((0,), 0, 1): F(1), ((1,), 1, 0): F(1)}}
ob = lift_obstruction(L, tower_step(2), x)
print("obstruction representative:", ob.representative)
for k in (0, 1):
    res = annihilation_check(prob, ob, k)
    print(f"k={k}: exact={res.passed} tau zero={res.tau_zero} degenerate={res.degenerate}")

# The same pipeline on the fixture with a nonzero Atiyah class.
fixture = LieAlgebroidSpec.lie_algebra(["l0", "l1", "l2"], {("l0", "l1"): {"l0": 1}})
prob = AtiyahProblem.from_matrices(LiePairSpec(fixture, (0, 2)), [[[1, 0], [0, 1]], [[0, 0], [0, 0]]])
L = module_dgla(prob)
x = {(1,): {((0,), 0, 0): F(1), ((1,), 0, 1): F(1)}}
for order in range(2, 5):
    out = lift_obstruction(L, tower_step(order), x)
    if isinstance(out, Lift):
        x = out.element
        continue
    print(f"obstructed lifting to u^{order + 1}:", out.representative)
    for k in (0, 1):
        res = annihilation_check(prob, out, k)
        print(f"k={k}: exact={res.passed} primitive={res.primitive} degenerate={res.degenerate}")
    break
