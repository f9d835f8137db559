"""Downlink transmit power sweep: how the weighted sum-rate grows with budget."""

from risfdd import default_paper_scenario
from risfdd.harness import ExperimentSpec, run

powers = [17.0, 22.0, 27.0, 32.0, 37.0]
for name in ("manifold", "lcao", "random"):
    spec = ExperimentSpec(default_paper_scenario(), name, list(range(5)),
                          sweep=("p_dl_max_dbm", powers))
    rows = run(spec).summary()
    cells = "  ".join(f"{r.sweep_value:g} dBm: {r.mean_r_wsr:.3f}" for r in rows)
    print(f"{name:>9}  {cells}")
