"""Downlink/uplink rate region traced by sweeping the weight eta.

At eta = 1 the RIS serves only the downlink, at eta = 0 only the uplink;
intermediate weights trade one for the other.
"""

from risfdd import default_paper_scenario
from risfdd.harness import ExperimentSpec, run

etas = [round(0.1 * i, 1) for i in range(11)]
seeds = list(range(5))

for name in ("manifold", "lcao"):
    res = run(ExperimentSpec(default_paper_scenario(), name, seeds, sweep=("eta", etas)))
    print(f"\n{name}\n{'eta':>5} {'R_D':>8} {'R_U':>8}")
    for row in res.summary():
        print(f"{row.sweep_value:5.1f} {row.mean_r_dl:8.4f} {row.mean_r_ul:8.4f}")
