"""Lattice first-passage percolation and the cell discretiser.

The lattice is the strip of integer vertices (i, j) with 0 <= i <= n_max and
|j| <= H, with 8-neighbor edges carrying i.i.d. Exp(16/pi) passage times.
First-passage times from the origin to each column give the lower-bound side
of the hitting-time sandwich; the discretiser maps a unit-ball dual trace
onto activation times of side-2 squares centered on the 4Z x 4Z grid, and the
suite checks the mean ordering fpp <= discretised <= dual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .ancestral import DualRun
from .errors import InvariantViolation
from .events import ShapeLaw, unit_ball_law

EDGE_RATE = 16.0 / math.pi


@lru_cache(maxsize=8)
def _strip_edges(n_max: int, H: int):
    """Edge index arrays of the 8-neighbor strip (structure is weight-free)."""
    w = n_max + 1
    h = 2 * H + 1

    def vid(i, j):
        return i * h + (j + H)

    rows, cols = [], []
    # Undirected edges listed once: right, up, and the two right diagonals.
    for i in range(w):
        for j in range(-H, H + 1):
            for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < w and -H <= jj <= H:
                    rows.append(vid(i, j))
                    cols.append(vid(ii, jj))
    return np.array(rows), np.array(cols), w * h


def _strip_graph(n_max: int, H: int, rng: np.random.Generator):
    """Sparse symmetric weight matrix of the 8-neighbor strip."""
    h = 2 * H + 1

    def vid(i, j):
        return i * h + (j + H)

    rows, cols, nv = _strip_edges(n_max, H)
    weights = rng.exponential(1.0 / EDGE_RATE, size=len(rows))
    m = coo_matrix((weights, (rows, cols)), shape=(nv, nv))
    return (m + m.T).tocsr(), vid


def fpp_profile(n_max: int, H: int, rng: np.random.Generator) -> np.ndarray:
    """First-passage times from (0,0) to columns 1..n_max (one weight draw)."""
    graph, vid = _strip_graph(n_max, H, rng)
    dist = dijkstra(graph, directed=False, indices=vid(0, 0))
    h = 2 * H + 1
    per_column = dist.reshape(n_max + 1, h).min(axis=1)
    return per_column[1:]


def fpp_hit(n: int, H: int, seed) -> float:
    """First-passage time from the origin to column n of the strip."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return float(fpp_profile(n, H, rng)[n - 1])


def cell_center(i: int, j: int) -> tuple[float, float]:
    return (4.0 * i, 4.0 * j)


def ball_cell(cx: float, cy: float) -> tuple[int, int] | None:
    """The unique side-2 grid cell a unit ball intersects, or None.

    Cells are squares of side 2 centered at (4i, 4j); a unit ball around
    (cx, cy) meets the cell iff the point-to-square distance is < 1, which
    forces |cx - 4i| < 2 and |cy - 4j| < 2, so only the nearest grid point
    can qualify.
    """
    i = round(cx / 4.0)
    j = round(cy / 4.0)
    dx = max(abs(cx - 4.0 * i) - 1.0, 0.0)
    dy = max(abs(cy - 4.0 * j) - 1.0, 0.0)
    if math.hypot(dx, dy) < 1.0:
        return (i, j)
    return None


@dataclass
class CellActivation:
    activation: dict[tuple[int, int], float] = field(default_factory=dict)

    def column_hit(self, n: int) -> float:
        """Earliest activation among cells in column n (inf if none)."""
        times = [t for (i, _), t in self.activation.items() if i == n]
        return min(times) if times else math.inf


def discretize_trace(
    trace: list[tuple[float, float, float]], audit: bool = False
) -> CellActivation:
    """Cell activation times from a unit-ball trace of (time, cx, cy) rows."""
    cells = CellActivation()
    for t, cx, cy in trace:
        if audit:
            hits = []
            ci, cj = round(cx / 4.0), round(cy / 4.0)
            for i in (ci - 1, ci, ci + 1):
                for j in (cj - 1, cj, cj + 1):
                    dx = max(abs(cx - 4.0 * i) - 1.0, 0.0)
                    dy = max(abs(cy - 4.0 * j) - 1.0, 0.0)
                    if math.hypot(dx, dy) < 1.0:
                        hits.append((i, j))
            if len(hits) > 1:
                raise InvariantViolation(
                    f"ball at ({cx}, {cy}) intersects {len(hits)} cells"
                )
            cell = hits[0] if hits else None
        else:
            cell = ball_cell(cx, cy)
        if cell is not None and cell not in cells.activation:
            cells.activation[cell] = t
    return cells


@dataclass
class DominationReport:
    n_values: list[int]
    mean_fpp: list[float]
    ci_fpp: list[float]
    mean_discr: list[float]
    ci_discr: list[float]
    mean_tau4n: list[float]
    ci_tau4n: list[float]
    pointwise_ok: bool
    ordering_ok: bool


def _mean_ci(a: np.ndarray) -> tuple[float, float]:
    return float(a.mean()), float(1.96 * a.std(ddof=1) / math.sqrt(len(a)))


def dual_discretized_hits(
    n_values: list[int], seed, law: ShapeLaw | None = None
) -> tuple[list[float], list[float]]:
    """(discretised column hits, dual half-plane hits at 4n) for one coupled
    unit-ball trajectory run until the dual reaches 4*max(n)."""
    law = law or unit_ball_law()
    rng = np.random.default_rng(seed)
    run = DualRun(law, rng)
    n_max = max(n_values)
    run.run_until_reach(4.0 * n_max)
    trace = [
        (run.state.times[k],) + run.state.ellipses[k][:2]
        for k in range(run.state.jump_count)
    ]
    cells = discretize_trace(trace)
    tau_discr = [cells.column_hit(n) for n in n_values]
    # Replay reach growth to recover the dual hit time of each threshold.
    tau_dual = []
    for n in n_values:
        target = 4.0 * n
        reach = -math.inf
        hit = math.inf
        for k, (cx, cy, a, b, g) in enumerate(run.state.ellipses):
            d = math.sqrt(a * a * math.cos(g) ** 2 + b * b * math.sin(g) ** 2)
            reach = max(reach, cx + d)
            if reach >= target:
                hit = run.state.times[k]
                break
        tau_dual.append(hit)
    return tau_discr, tau_dual


def domination_replica(
    n_values: list[int], H: int, seed_entropy: int, r: int
) -> tuple[list[float], list[float], list[float]]:
    """One replica of the sandwich: fresh FPP draw plus one coupled dual run."""
    n_max = max(n_values)
    rng = np.random.default_rng(np.random.SeedSequence([seed_entropy, 2 * r]))
    fpp_row = fpp_profile(n_max, H, rng)[np.array(n_values) - 1]
    discr_row, tau_row = dual_discretized_hits(
        n_values, np.random.SeedSequence([seed_entropy, 2 * r + 1])
    )
    return list(map(float, fpp_row)), discr_row, tau_row


def domination_suite(
    n_values: list[int], reps: int, seed, H: int | None = None, rows=None
) -> DominationReport:
    """Mean ordering check E[fpp] <= E[discretised] <= E[dual at 4n].

    ``rows`` may carry precomputed domination_replica outputs (the harness
    uses this to aggregate parallel replicas deterministically).
    """
    n_values = sorted(n_values)
    n_max = max(n_values)
    H = H if H is not None else 2 * n_max + 8
    if rows is None:
        rows_data = [
            domination_replica(n_values, H, _entropy(seed), r) for r in range(reps)
        ]
    else:
        rows_data = rows
    fpp = np.array([r[0] for r in rows_data])
    discr = np.array([r[1] for r in rows_data])
    tau4n = np.array([r[2] for r in rows_data])
    pointwise_ok = bool(np.all(discr <= tau4n))
    rows = [
        (_mean_ci(fpp[:, k]), _mean_ci(discr[:, k]), _mean_ci(tau4n[:, k]))
        for k in range(len(n_values))
    ]
    ordering_ok = all(
        f[0] - f[1] <= d[0] + d[1] and d[0] - d[1] <= t[0] + t[1]
        for f, d, t in rows
    )
    return DominationReport(
        n_values=list(n_values),
        mean_fpp=[r[0][0] for r in rows],
        ci_fpp=[r[0][1] for r in rows],
        mean_discr=[r[1][0] for r in rows],
        ci_discr=[r[1][1] for r in rows],
        mean_tau4n=[r[2][0] for r in rows],
        ci_tau4n=[r[2][1] for r in rows],
        pointwise_ok=pointwise_ok,
        ordering_ok=ordering_ok,
    )


def _entropy(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy)
    return int(np.random.SeedSequence(seed).entropy)
