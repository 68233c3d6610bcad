"""
The projective line from two charts
===================================

Čech cohomology of line bundles over Laurent windows, window stability, and
the Whitney integration checks relating polynomial forms on simplices to
Čech cochains.
"""

import random

from semireg.twtot import cech_cohomology, de_rham_two_chart, line_bundle, whitney_checks

for n in (-3, -2, 0, 2):
    res = cech_cohomology(line_bundle(n))
    print(f"O({n}): dims {res.dims}, stable {res.stable}")

# A window too narrow for O(5) loses sections and is flagged, never returned silently.
res = cech_cohomology(line_bundle(5), window=(-1, 1))
print("narrow window:", res.dims, "widened:", res.widened_dims, "stable:", res.stable)

dr = cech_cohomology(de_rham_two_chart())
print("de Rham hypercohomology:", dr.dims)

report = whitney_checks(de_rham_two_chart((-1, 1)), 20, random.Random(1))
print(report)
