"""Weighted sum-rate against the number of RIS elements.

Square RIS layouts only, so ``L`` runs over 16, 36, 64 and 100.
"""

from risfdd import default_paper_scenario
from risfdd.harness import ExperimentSpec, compare

ALGORITHMS = ("manifold", "lcao", "separated", "oneway_dl", "oneway_ul", "random")
SWEEP = ("L", [16, 36, 64, 100])

specs = [ExperimentSpec(default_paper_scenario(), name, list(range(5)), sweep=SWEEP)
         for name in ALGORITHMS]
report = compare(specs)

# %% One row per L, one column per algorithm.
print(f"{'L':>4}" + "".join(f"{n:>11}" for n in ALGORITHMS))
for value in SWEEP[1]:
    means = dict(report.ranking(value))
    print(f"{value:>4}" + "".join(f"{means[n]:11.4f}" for n in ALGORITHMS))
