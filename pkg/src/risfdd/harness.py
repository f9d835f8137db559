"""Seeded experiment runner: single runs, parameter sweeps and paired comparisons.

Each (sweep value, seed) cell realises channels from the seed alone, so every
algorithm sees the same channels and the same initial phases for a given
seed. Results are written as CSV plus a JSON sidecar describing the run.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .baselines import oneway_ao, random_phases, separated_elements
from .channel import algorithm_rng, realize_channels, save_channels
from .closed_form import lcao_solve
from .manifold import RcgSettings, manifold_alternate
from .scenario import ScenarioConfig
from .trace import OptimizationTrace


def _random_as_trace(ch, cfg, rng):
    t0 = time.perf_counter()
    refl, precoders, rates = random_phases(ch, cfg, rng)
    trace = OptimizationTrace()
    trace.append(rates, wall_ms=1e3 * (time.perf_counter() - t0))
    return refl, precoders, trace


ALGORITHMS = {
    "manifold": lambda ch, cfg, rng: manifold_alternate(ch, cfg, rng=rng),
    "lcao": lambda ch, cfg, rng: lcao_solve(ch, cfg, rng),
    "oneway_dl": lambda ch, cfg, rng: oneway_ao(ch, cfg, rng, direction="dl"),
    "oneway_ul": lambda ch, cfg, rng: oneway_ao(ch, cfg, rng, direction="ul"),
    "separated": lambda ch, cfg, rng: separated_elements(ch, cfg, rng),
    "random": _random_as_trace,
}

SWEEP_PARAMETERS = ("L", "p_dl_max_dbm", "eta")
RESULT_COLUMNS = ("sweep_value", "seed", "algorithm", "r_dl", "r_ul", "r_wsr",
                  "outer_iters", "wall_ms")
TRACE_COLUMNS = ("outer_iter", "r_dl", "r_ul", "r_wsr", "grad_norm", "wall_ms")
SUMMARY_COLUMNS = ("sweep_value", "algorithm", "n", "mean_r_dl", "se_r_dl", "mean_r_ul",
                   "se_r_ul", "mean_r_wsr", "se_r_wsr", "mean_outer_iters", "mean_wall_ms")


class ExperimentError(ValueError):
    pass


def run_algorithm(name: str, cfg: ScenarioConfig, seed: int):
    """Realise channels for ``seed`` and run ``name`` on them."""
    try:
        algo = ALGORITHMS[name]
    except KeyError:
        raise ExperimentError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    ch = realize_channels(cfg, seed)
    return algo(ch, cfg, algorithm_rng(seed))


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig
    algorithm: str
    seeds: list[int]
    sweep: tuple[str, list] | None = None
    output_path: Path | None = None

    def __post_init__(self):
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise ExperimentError("seed list must be nonempty")
        if self.algorithm not in ALGORITHMS:
            raise ExperimentError(f"unknown algorithm {self.algorithm!r}")
        if self.sweep is not None:
            name, values = self.sweep
            if name not in SWEEP_PARAMETERS:
                raise ExperimentError(f"cannot sweep {name!r}; choose from {SWEEP_PARAMETERS}")
            if not values:
                raise ExperimentError("sweep needs at least one value")
            self.sweep = (name, list(values))
            for v in self.sweep[1]:
                self.scenario_for(v)  # validates each value up front
        if self.output_path is not None:
            self.output_path = Path(self.output_path)

    @property
    def sweep_values(self) -> list:
        return [None] if self.sweep is None else self.sweep[1]

    def scenario_for(self, value) -> ScenarioConfig:
        if self.sweep is None or value is None:
            return self.scenario
        name = self.sweep[0]
        try:
            if name == "L":
                if float(value) != int(value):
                    raise ExperimentError(f"L must be an integer, got {value}")
                return self.scenario.with_square_ris(int(value))
            return self.scenario.replace(**{name: float(value)})
        except ValueError as exc:
            raise ExperimentError(f"invalid sweep value {name}={value}: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "algorithm": self.algorithm,
            "seeds": self.seeds,
            "sweep": None if self.sweep is None else {"parameter": self.sweep[0],
                                                      "values": self.sweep[1]},
            "output_path": None if self.output_path is None else str(self.output_path),
        }


@dataclass
class CellResult:
    sweep_value: object
    seed: int
    algorithm: str
    r_dl: float
    r_ul: float
    r_wsr: float
    outer_iters: int
    wall_ms: float
    trace: OptimizationTrace | None = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in RESULT_COLUMNS}


@dataclass(frozen=True)
class SummaryRow:
    sweep_value: object
    algorithm: str
    n: int
    mean_r_dl: float
    se_r_dl: float
    mean_r_ul: float
    se_r_ul: float
    mean_r_wsr: float
    se_r_wsr: float
    mean_outer_iters: float
    mean_wall_ms: float


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    cells: list[CellResult]

    def summary(self) -> list[SummaryRow]:
        rows = []
        for value in self.spec.sweep_values:
            group = [c for c in self.cells if c.sweep_value == value]
            rows.append(_summarise(value, self.spec.algorithm, group))
        return rows

    def by_key(self) -> dict:
        return {(c.sweep_value, c.seed): c for c in self.cells}


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


def _summarise(value, algorithm, group) -> SummaryRow:
    m_dl, s_dl = _mean_se([c.r_dl for c in group])
    m_ul, s_ul = _mean_se([c.r_ul for c in group])
    m_w, s_w = _mean_se([c.r_wsr for c in group])
    return SummaryRow(value, algorithm, len(group), m_dl, s_dl, m_ul, s_ul, m_w, s_w,
                      float(np.mean([c.outer_iters for c in group])),
                      float(np.mean([c.wall_ms for c in group])))


def _run_cell(args) -> CellResult:
    spec, value, seed = args
    cfg = spec.scenario_for(value)
    t0 = time.perf_counter()
    _, _, trace = run_algorithm(spec.algorithm, cfg, seed)
    wall = 1e3 * (time.perf_counter() - t0)
    final = trace.final
    return CellResult(value, seed, spec.algorithm, final.r_dl, final.r_ul, final.r_wsr,
                      trace.outer_iters, wall, trace)


def run(spec: ExperimentSpec, workers: int = 1, dump_channels: bool = False) -> ExperimentResult:
    """Run every (sweep value, seed) cell; write outputs if ``spec.output_path`` is set."""
    jobs = [(spec, v, s) for v in spec.sweep_values for s in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(j) for j in jobs]
    result = ExperimentResult(spec, cells)
    if spec.output_path is not None:
        write_result(result, spec.output_path)
        if dump_channels:
            _dump_channels(spec, spec.output_path)
    return result


# ---------------------------------------------------------------- file output

def _format(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def _parse(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row[c]) for c in columns])


def read_csv(path) -> list[dict]:
    """Parse a CSV written by this module; numbers round-trip exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [{h: _parse(v) for h, v in zip(header, line)} for line in reader]


def _trace_name(cell: CellResult) -> str:
    value = "none" if cell.sweep_value is None else _format(cell.sweep_value)
    return f"{cell.algorithm}_sweep-{value}_seed-{cell.seed}.csv"


def write_result(result: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
        write_csv(out / "results.csv", RESULT_COLUMNS, [c.row() for c in result.cells])
        write_csv(out / "summary.csv", SUMMARY_COLUMNS,
                  [vars(r) for r in result.summary()])
        for cell in result.cells:
            if cell.trace is not None:
                write_csv(out / "traces" / _trace_name(cell), TRACE_COLUMNS,
                          [vars(r) for r in cell.trace.rows])
        sidecar = {
            "spec": result.spec.to_dict(),
            "rcg_settings": vars(RcgSettings.from_config(result.spec.scenario)),
            "code_version": __version__,
            "columns": list(RESULT_COLUMNS),
        }
        (out / "results.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    except OSError as exc:
        raise ExperimentError(f"cannot write results to {out}: {exc}") from exc
    return out


def read_results(out_dir) -> list[CellResult]:
    rows = read_csv(Path(out_dir) / "results.csv")
    return [CellResult(**row) for row in rows]


def _dump_channels(spec: ExperimentSpec, out_dir: Path) -> None:
    (out_dir / "channels").mkdir(parents=True, exist_ok=True)
    for value in spec.sweep_values:
        cfg = spec.scenario_for(value)
        for seed in spec.seeds:
            tag = "none" if value is None else _format(value)
            save_channels(realize_channels(cfg, seed),
                          out_dir / "channels" / f"sweep-{tag}_seed-{seed}.bin", seed)


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class PairwiseComparison:
    first: str
    second: str
    sweep_value: object
    n: int
    wins: int
    win_rate: float
    mean_delta: float
    se_delta: float
    sign_test_p: float
    deltas: tuple = field(repr=False)


@dataclass
class ComparisonReport:
    results: dict[str, ExperimentResult]
    pairs: list[PairwiseComparison]

    def ranking(self, sweep_value=None) -> list[tuple[str, float]]:
        """Algorithms ordered by mean final weighted sum-rate."""
        means = []
        for name, res in self.results.items():
            vals = [c.r_wsr for c in res.cells if c.sweep_value == sweep_value]
            means.append((name, float(np.mean(vals))))
        return sorted(means, key=lambda t: -t[1])

    def pair(self, first: str, second: str, sweep_value=None) -> PairwiseComparison:
        for p in self.pairs:
            if (p.first, p.second, p.sweep_value) == (first, second, sweep_value):
                return p
        raise KeyError((first, second, sweep_value))

    def lines(self) -> list[str]:
        out = []
        for value in {p.sweep_value for p in self.pairs}:
            ranking = ", ".join(f"{n}={m:.4f}" for n, m in self.ranking(value))
            out.append(f"[sweep={value}] mean R_WSR: {ranking}")
        for p in self.pairs:
            out.append(f"[sweep={p.sweep_value}] {p.first} vs {p.second}: "
                       f"wins {p.wins}/{p.n}, mean delta {p.mean_delta:+.4f} "
                       f"(se {p.se_delta:.4f}), sign-test p={p.sign_test_p:.3g}")
        return out


def sign_test_p(deltas) -> float:
    """One-sided paired sign test that the first algorithm is better; ties dropped."""
    deltas = np.asarray(deltas, dtype=float)
    wins = int(np.sum(deltas > 0))
    n = int(np.sum(deltas != 0))
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)


def paired(first: ExperimentResult, second: ExperimentResult, sweep_value=None) -> PairwiseComparison:
    a, b = first.by_key(), second.by_key()
    keys = sorted(k for k in a if k[0] == sweep_value and k in b)
    deltas = np.array([a[k].r_wsr - b[k].r_wsr for k in keys])
    mean, se = _mean_se(deltas)
    wins = int(np.sum(deltas > 0))
    return PairwiseComparison(first.spec.algorithm, second.spec.algorithm, sweep_value,
                              len(keys), wins, wins / len(keys), mean, se,
                              sign_test_p(deltas), tuple(deltas))


def compare(specs: list[ExperimentSpec], results: list[ExperimentResult] | None = None,
            workers: int = 1) -> ComparisonReport:
    """Paired per-seed comparison of final weighted sum-rates.

    All specs must share scenario, seeds and sweep; this is what makes the
    per-seed pairing valid. Pre-computed ``results`` may be supplied.
    """
    if len(specs) < 2:
        raise ExperimentError("compare needs at least two experiment specs")
    ref = specs[0]
    for s in specs[1:]:
        if s.scenario != ref.scenario or s.seeds != ref.seeds or s.sweep != ref.sweep:
            raise ExperimentError("compared specs must share scenario, seeds and sweep")
    names = [s.algorithm for s in specs]
    if len(set(names)) != len(names):
        raise ExperimentError("compared specs must use distinct algorithms")
    if results is None:
        results = [run(s, workers=workers) for s in specs]
    by_name = {s.algorithm: r for s, r in zip(specs, results)}
    pairs = [paired(by_name[x], by_name[y], v)
             for v in ref.sweep_values
             for i, x in enumerate(names) for y in names[i + 1:]]
    return ComparisonReport(by_name, pairs)


def write_comparison(report: ComparisonReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, res in report.results.items():
        write_result(res, out / name)
    cols = ("sweep_value", "first", "second", "n", "wins", "win_rate", "mean_delta",
            "se_delta", "sign_test_p")
    write_csv(out / "comparison.csv", cols, [vars(p) for p in report.pairs])
    (out / "comparison.txt").write_text("\n".join(report.lines()) + "\n")


def parse_seeds(text: str) -> list[int]:
    """``"a..b"`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ExperimentError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def parse_sweep(text: str) -> tuple[str, list]:
    """``"param:v1,v2,..."``."""
    if ":" not in text:
        raise ExperimentError(f"sweep must look like param:v1,v2 (got {text!r})")
    name, values = text.split(":", 1)
    parsed = [_parse(v.strip()) for v in values.split(",") if v.strip()]
    if any(isinstance(v, str) or (isinstance(v, float) and not math.isfinite(v)) for v in parsed):
        raise ExperimentError(f"sweep values must be finite numbers (got {values!r})")
    return name.strip(), parsed
