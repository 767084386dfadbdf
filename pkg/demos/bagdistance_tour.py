"""A short tour of the bagdistance on a skewed bivariate sample.

Run with ``python3 demos/bagdistance_tour.py``.
"""

import numpy as np

from distspace import ao, bagdistance, fit_group, sdo

rng = np.random.default_rng(1)
# right-skewed cloud: exponential in x, normal in y
X = np.column_stack([rng.exponential(2.0, 300), rng.standard_normal(300)])
group = fit_group(X, seed=0)

print("Tukey median:", np.round(group.center, 3))
print("bag polygon has", len(group.bag.polygon), "vertices")

# Two points at the same Euclidean distance from the median, one on each side.
# The bag stretches to the right, so the right point is closer in bagdistance.
left = group.center - [3.0, 0.0]
right = group.center + [3.0, 0.0]
for name, x in (("left", left), ("right", right)):
    print(f"{name:>5}: bd={bagdistance(x, group):.3f} sdo={sdo(x, group):.3f} "
          f"ao={ao(x, group):.3f}")

# bd is positively homogeneous about the median
x = group.center + [1.0, 1.0]
print("bd(x) =", round(float(bagdistance(x, group)), 4),
      " bd(median + 2(x - median)) =",
      round(float(bagdistance(group.center + 2 * (x - group.center), group)), 4))
