"""
Atiyah classes of Lie pairs
===========================

The class of a pair vanishes when the subalgebra has an invariant complement,
and a witness extension with curvature deep in the Leray filtration is
produced. The pinned three-dimensional fixture carries a nonzero class.
"""

import random

from semireg.algebroid import Connection, LieAlgebroidSpec, gl2
from semireg.atiyah import (
    AtiyahProblem,
    atiyah_class_pair,
    pair_curvature,
    random_extension,
    vanishing_by_projection,
)
from semireg.liepair import LiePairSpec
from semireg.twtot import LineBundleProblem, line_bundle_atiyah

# gl2 over sl2 with the adjoint sl2-module. The traceless projection is
# equivariant, so the class must vanish.
pair = LiePairSpec(gl2(), (0, 1, 2))
prob = AtiyahProblem(pair, Connection.adjoint(pair.sub_spec()))
value = atiyah_class_pair(prob, random_extension(prob, random.Random(0)))
print("gl2/sl2 class is zero:", value.is_zero)
print("witness curvature lies in G_2:", pair_curvature(prob, value.witness).in_G2())
print("projection criterion:", vanishing_by_projection(prob, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]]).ok)

# [l0, l1] = l0 with the subalgebra spanned by l0 and l2, acting on Q² by the
# identity and zero. The bounded search found this instance first.
fixture = LieAlgebroidSpec.lie_algebra(["l0", "l1", "l2"], {("l0", "l1"): {"l0": 1}})
prob = AtiyahProblem.from_matrices(LiePairSpec(fixture, (0, 2)), [[[1, 0], [0, 1]], [[0, 0], [0, 0]]])
value = atiyah_class_pair(prob)
print("fixture class is zero:", value.is_zero)
print("Bott cocycle route:", [str(c) for c in value.bott_class])
print("independent of the extension:", value.independent_of_extension)

# With the zero subalgebra on the two-chart projective line, O(n) has class n·dt/t.
for n in (-2, 0, 3):
    lb = line_bundle_atiyah(LineBundleProblem(n, (-4, 4)))
    print(f"O({n}): residue {lb.residue}, oracle {lb.oracle_residue}")
