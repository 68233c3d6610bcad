"""
Lie algebra cohomology and the Leray page of a pair
===================================================

Exact Chevalley-Eilenberg cohomology of a few small Lie algebras, then the
Leray filtration of a subalgebra and the first page of its spectral sequence.
"""

from semireg.algebroid import abelian, aff1, check_algebroid, de_rham_complex, sl2
from semireg.dgcore import betti
from semireg.liepair import LiePairSpec, leray_E1

# Every spec is validated before anything is computed from it.
for spec in (sl2(), aff1(), abelian(3)):
    assert check_algebroid(spec)
    dims = betti(de_rham_complex(spec))
    print(spec.names, [dims.get(k, 0) for k in range(spec.rank + 1)])

# The two-dimensional nonabelian algebra [x, y] = y with the subalgebra spanned by x.
# Column p of the page is H^q of the subalgebra with values in the p-th exterior
# power of the dual quotient.
pair = LiePairSpec(aff1(), (0,))
e1 = leray_E1(pair)
print("E1 page:", dict(sorted(e1.graded.items())))
print("total cohomology:", e1.total)
print("both routes agree:", e1.agree, "| degenerates at E1:", e1.degenerates_at_E1)

# The Borel subalgebra of sl2 gives a page that does not degenerate.
borel = leray_E1(LiePairSpec(sl2(), (0, 1)))
print("sl2 / borel E1:", dict(sorted(borel.graded.items())), "degenerate:", borel.degenerates_at_E1)
