"""Set-valued forward growth for finite seed regions.

The occupied set is a union of primitive regions: the seed rectangles and/or
ellipses plus every accepted event ellipse.  An event is accepted when its
ellipse overlaps the occupied set on positive area, exactly mirroring the
dual's growth rule, so a dual run started from a finite region is the same
machine under the mirrored shape law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded
from .events import Event, mirror, ShapeLaw
from .geometry import (
    _overlap_params,
    Ellipse,
    ellipse_rect_intersects,
    max_horizontal_offset,
)
from .stream import EventStream

Rect = tuple[float, float, float, float]  # (x0, x1, y0, y1)
DEFAULT_BUDGET = 10_000_000


def disk(cx: float, cy: float, r: float) -> Ellipse:
    return Ellipse(cx, cy, r, r, 0.0)


def _prim_bbox(p) -> Rect:
    if isinstance(p, Ellipse):
        r = max(p.a, p.b)
        return (p.cx - r, p.cx + r, p.cy - r, p.cy + r)
    return p


def _prims_overlap(p, q) -> bool:
    """Positive-area overlap between two primitives (ellipse or rect)."""
    if isinstance(p, Ellipse) and isinstance(q, Ellipse):
        return _overlap_params(
            p.cx, p.cy, p.a, p.b, p.gamma, q.cx, q.cy, q.a, q.b, q.gamma
        )
    if isinstance(p, Ellipse):
        return ellipse_rect_intersects(p, *q)
    if isinstance(q, Ellipse):
        return ellipse_rect_intersects(q, *p)
    return p[0] < q[1] and q[0] < p[1] and p[2] < q[3] and q[2] < p[3]


def regions_overlap(a: list, b: list) -> bool:
    """Positive-area overlap between two unions of primitives."""
    return any(_prims_overlap(p, q) for p in a for q in b)


class ForwardState:
    """Occupied set as seed primitives plus accepted event ellipses.

    Accepted ellipses are spatially hashed by center (cell size 2*r_max); the
    seed primitives are few and checked directly.
    """

    def __init__(self, r_max: float, seeds: list):
        if not seeds:
            raise ValueError("seed region must be non-empty")
        self.r_max = r_max
        self.seeds = list(seeds)
        self.time = 0.0
        self.ellipses: list[tuple[float, float, float, float, float]] = []
        self.times: list[float] = []
        self._cell = 2.0 * r_max
        self._hash: dict[tuple[int, int], list[int]] = {}
        boxes = [_prim_bbox(p) for p in seeds]
        self.bbox = (
            min(b[0] for b in boxes),
            max(b[1] for b in boxes),
            min(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )
        self.reach = self.bbox[1]

    def _cell_of(self, x, y):
        return (math.floor(x / self._cell), math.floor(y / self._cell))

    def overlaps(self, cx, cy, a, b, g) -> bool:
        e = Ellipse(cx, cy, a, b, g)
        for seed in self.seeds:
            if _prims_overlap(e, seed):
                return True
        ci, cj = self._cell_of(cx, cy)
        for ix in (ci - 1, ci, ci + 1):
            for iy in (cj - 1, cj, cj + 1):
                bucket = self._hash.get((ix, iy))
                if bucket:
                    for k in bucket:
                        ex, ey, ea, eb, eg = self.ellipses[k]
                        if _overlap_params(cx, cy, a, b, g, ex, ey, ea, eb, eg):
                            return True
        return False

    def apply_event(self, ev: Event) -> bool:
        self.time = ev.time
        if not self.overlaps(ev.cx, ev.cy, ev.a, ev.b, ev.gamma):
            return False
        idx = len(self.ellipses)
        self.ellipses.append((ev.cx, ev.cy, ev.a, ev.b, ev.gamma))
        self.times.append(ev.time)
        self._hash.setdefault(self._cell_of(ev.cx, ev.cy), []).append(idx)
        r = max(ev.a, ev.b)
        bx0, bx1, by0, by1 = self.bbox
        self.bbox = (
            min(bx0, ev.cx - r),
            max(bx1, ev.cx + r),
            min(by0, ev.cy - r),
            max(by1, ev.cy + r),
        )
        _, d = max_horizontal_offset(ev.a, ev.b, ev.gamma)
        self.reach = max(self.reach, ev.cx + d)
        return True

    def primitives(self, up_to: float | None = None) -> list:
        out = list(self.seeds)
        for k, e in enumerate(self.ellipses):
            if up_to is None or self.times[k] <= up_to:
                out.append(Ellipse(*e))
        return out


def forward_run(
    seeds: list,
    law: ShapeLaw,
    t_end: float,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> ForwardState:
    """Run the forward process to time t_end from a union of primitives."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    state = ForwardState(law.r_max, seeds)
    if t_end == 0:
        return state
    r = law.r_max
    m = 8.0 * r
    bx0, bx1, by0, by1 = state.bbox
    stream = EventStream(law, rng, bx0 - m, bx1 + m, by0 - m, by1 + m)
    while True:
        ev = stream.next_event()
        if ev.time > t_end:
            state.time = t_end
            return state
        if state.apply_event(ev):
            if len(state.ellipses) > budget:
                raise BudgetExceeded(f"jump budget {budget} exceeded at t={ev.time}")
            bx0, bx1, by0, by1 = state.bbox
            wx0, wx1, wy0, wy1 = stream.window
            if bx0 - r < wx0 or bx1 + r > wx1 or by0 - r < wy0 or by1 + r > wy1:
                stream.expand_to(
                    min(wx0, bx0 - m),
                    max(wx1, bx1 + m),
                    min(wy0, by0 - m),
                    max(wy1, by1 + m),
                )


@dataclass
class DualityResult:
    p_forward: float
    p_dual: float
    z_score: float
    reps: int


def duality_replica(
    seed_A: list,
    query_B: list,
    t: float,
    law: ShapeLaw,
    dual_convention: str,
    master: int,
    i: int,
) -> tuple[bool, bool]:
    """One forward run from A and one dual run from B; True means 'missed'."""
    dual_law = mirror(law) if dual_convention == "mirror" else law
    rng = np.random.default_rng(np.random.SeedSequence([master, 2 * i]))
    st = forward_run(seed_A, law, t, rng)
    fwd_empty = not regions_overlap(st.primitives(), query_B)
    rng = np.random.default_rng(np.random.SeedSequence([master, 2 * i + 1]))
    st = forward_run(query_B, dual_law, t, rng)
    dual_empty = not regions_overlap(st.primitives(), seed_A)
    return fwd_empty, dual_empty


def duality_check(
    seed_A: list,
    query_B: list,
    t: float,
    reps: int,
    seed,
    law: ShapeLaw,
    dual_convention: str = "same",
    pairs=None,
) -> DualityResult:
    """Compare forward and dual estimates of P(occupied_t misses B).

    Forward runs grow from A under the law; dual runs grow from B under the
    same law (convention "same", the default) or the tilt-mirrored law
    ("mirror"), and check whether they miss A.  Time reversal of the driving
    process leaves event shapes unchanged, so the two fractions estimate the
    same probability under the "same" convention; for a tilt-asymmetric law
    the "mirror" convention measurably fails (the mirrored law belongs to the
    leftward hitting-time construction, not to duality).  ``pairs`` may carry
    precomputed duality_replica outputs for deterministic parallel
    aggregation.
    """
    if dual_convention not in ("mirror", "same"):
        raise ValueError(f"unknown dual convention {dual_convention!r}")
    master = _entropy(seed)
    if pairs is None:
        pairs = [
            duality_replica(seed_A, query_B, t, law, dual_convention, master, i)
            for i in range(reps)
        ]
    empty_fwd = sum(p[0] for p in pairs)
    empty_dual = sum(p[1] for p in pairs)
    p1 = empty_fwd / reps
    p2 = empty_dual / reps
    pooled = (empty_fwd + empty_dual) / (2 * reps)
    se = math.sqrt(max(pooled * (1 - pooled) * 2 / reps, 1e-300))
    z = (p1 - p2) / se if se > 0 else 0.0
    return DualityResult(p_forward=p1, p_dual=p2, z_score=z, reps=reps)


def _entropy(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return int(np.random.SeedSequence(seed).entropy)


# ---------------------------------------------------------------------------
# Rasterisation
# ---------------------------------------------------------------------------

def rasterize(primitives: list, bounds: Rect, resolution: float) -> np.ndarray:
    """Boolean occupancy grid; pixel centers inside any primitive are True.

    resolution is in pixels per plane unit; row 0 is the top of the frame.
    """
    x0, x1, y0, y1 = bounds
    nx = max(1, int(round((x1 - x0) * resolution)))
    ny = max(1, int(round((y1 - y0) * resolution)))
    xs = x0 + (np.arange(nx) + 0.5) / resolution
    ys = y1 - (np.arange(ny) + 0.5) / resolution
    X, Y = np.meshgrid(xs, ys)
    occ = np.zeros((ny, nx), dtype=bool)
    for p in primitives:
        if isinstance(p, Ellipse):
            cg, sg = math.cos(p.gamma), math.sin(p.gamma)
            dx = X - p.cx
            dy = Y - p.cy
            u = (cg * dx + sg * dy) / p.a
            v = (-sg * dx + cg * dy) / p.b
            occ |= u * u + v * v <= 1.0
        else:
            rx0, rx1, ry0, ry1 = p
            occ |= (X >= rx0) & (X <= rx1) & (Y >= ry0) & (Y <= ry1)
    return occ


def write_pgm(path, occ: np.ndarray) -> None:
    """Write a boolean occupancy grid as a binary P5 graymap (occupied = black)."""
    data = np.where(occ, 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
        f.write(data.tobytes())


def render_frames(
    state: ForwardState,
    bounds: Rect,
    resolution: float,
    times: list[float],
    out_dir=None,
) -> list[np.ndarray]:
    """Occupancy frames of a run at the given times (monotone by growth)."""
    frames = []
    for k, t in enumerate(times):
        occ = rasterize(state.primitives(up_to=t), bounds, resolution)
        frames.append(occ)
        if out_dir is not None:
            write_pgm(f"{out_dir}/frame_{k:03d}.pgm", occ)
    return frames
