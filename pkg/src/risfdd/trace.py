"""Per-outer-iteration optimisation records."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TraceRow:
    outer_iter: int
    r_dl: float
    r_ul: float
    r_wsr: float
    grad_norm: float | None
    wall_ms: float


@dataclass
class OptimizationTrace:
    """Row 0 is the initial point; row ``s`` follows the ``s``-th outer iteration."""

    rows: list[TraceRow] = field(default_factory=list)

    def append(self, rates, grad_norm=None, wall_ms=0.0) -> None:
        if rates.r_dl < 0 or rates.r_ul < 0:
            raise ValueError("rates must be non-negative")
        self.rows.append(TraceRow(len(self.rows), rates.r_dl, rates.r_ul, rates.r_wsr,
                                  grad_norm, wall_ms))

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    @property
    def r_wsr(self) -> list[float]:
        return [r.r_wsr for r in self.rows]

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    @property
    def outer_iters(self) -> int:
        return len(self.rows) - 1

    @property
    def wall_ms(self) -> float:
        return sum(r.wall_ms for r in self.rows)

    def converged_within(self, max_outer: int, rel_tol: float) -> bool:
        """True if some outer step ``s <= max_outer`` has relative increment below ``rel_tol``."""
        w = self.r_wsr
        for s in range(1, min(max_outer, len(w) - 1) + 1):
            if abs(w[s] - w[s - 1]) < rel_tol * max(abs(w[s - 1]), 1e-300):
                return True
        return False
