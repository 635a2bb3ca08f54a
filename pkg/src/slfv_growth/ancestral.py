"""Event-driven dual (ancestral) growth process from a point start.

The state starts as a single point; the first event whose ellipse covers the
point turns it into a growing union of ellipses, and every later event whose
ellipse overlaps the union on positive area is appended.  The rightmost
abscissa reachable by the union ("reach") is tracked in closed form, so
half-plane hitting times need no geometric sampling.

Ellipses are indexed by a uniform spatial hash with cell size 2*r_max over
their centers; two ellipses can only overlap if their centers are within
2*r_max of each other, so the 3x3 cell neighborhood of a new event contains
every possible partner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, InvariantViolation
from .events import Event, ShapeLaw
from .geometry import _overlap_params, contains, Ellipse, max_horizontal_offset
from .stream import EventStream

DEFAULT_BUDGET = 10_000_000


class AncestralState:
    """Mutable dual-process state: a point or a union of ellipses."""

    def __init__(self, r_max: float, origin: tuple[float, float] = (0.0, 0.0)):
        if r_max <= 0:
            raise ValueError("r_max must be positive")
        self.r_max = r_max
        self.origin = origin
        self.time = 0.0
        self.reach = origin[0]
        # Parallel lists: one entry per accepted ellipse.
        self.ellipses: list[tuple[float, float, float, float, float]] = []
        self.times: list[float] = []
        self._cell = 2.0 * r_max
        self._hash: dict[tuple[int, int], list[int]] = {}
        # Bounding box of the union of ellipse bounding balls.
        self.bbox: tuple[float, float, float, float] | None = None

    @property
    def phase(self) -> str:
        return "point" if not self.ellipses else "region"

    @property
    def jump_count(self) -> int:
        return len(self.ellipses)

    def _cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self._cell), math.floor(y / self._cell))

    def _candidates(self, x: float, y: float):
        cx, cy = self._cell_of(x, y)
        for ix in (cx - 1, cx, cx + 1):
            for iy in (cy - 1, cy, cy + 1):
                bucket = self._hash.get((ix, iy))
                if bucket:
                    yield from bucket

    def contains_point(self, p: tuple[float, float]) -> bool:
        """Membership of a point in the current union of ellipses."""
        for i in self._candidates(p[0], p[1]):
            if contains(Ellipse(*self.ellipses[i]), p):
                return True
        return False

    def overlaps_region(self, cx: float, cy: float, a: float, b: float, g: float) -> bool:
        """Positive-area overlap of an ellipse with the current union."""
        for i in self._candidates(cx, cy):
            ex, ey, ea, eb, eg = self.ellipses[i]
            if _overlap_params(cx, cy, a, b, g, ex, ey, ea, eb, eg):
                return True
        return False

    def _append(self, ev: Event) -> None:
        idx = len(self.ellipses)
        self.ellipses.append((ev.cx, ev.cy, ev.a, ev.b, ev.gamma))
        self.times.append(ev.time)
        self._hash.setdefault(self._cell_of(ev.cx, ev.cy), []).append(idx)
        _, d = max_horizontal_offset(ev.a, ev.b, ev.gamma)
        if ev.cx + d > self.reach:
            self.reach = ev.cx + d
        r = max(ev.a, ev.b)
        x0, x1, y0, y1 = ev.cx - r, ev.cx + r, ev.cy - r, ev.cy + r
        if self.bbox is None:
            self.bbox = (x0, x1, y0, y1)
        else:
            bx0, bx1, by0, by1 = self.bbox
            self.bbox = (min(bx0, x0), max(bx1, x1), min(by0, y0), max(by1, y1))

    def apply_event(self, ev: Event) -> bool:
        """Apply one event; returns True iff it was accepted (state jumped)."""
        if ev.time < self.time:
            raise InvariantViolation(
                f"out-of-order event: t={ev.time} < state time {self.time}"
            )
        self.time = ev.time
        if not self.ellipses:
            covered = contains(
                Ellipse(ev.cx, ev.cy, ev.a, ev.b, ev.gamma), self.origin
            )
            if not covered:
                return False
        elif not self.overlaps_region(ev.cx, ev.cy, ev.a, ev.b, ev.gamma):
            return False
        self._append(ev)
        return True


def apply_event(state: AncestralState, ev: Event) -> AncestralState:
    """Functional-style wrapper: mutate the state in place and return it."""
    state.apply_event(ev)
    return state


class DualRun:
    """One dual trajectory driven by a lazily windowed event stream."""

    def __init__(
        self,
        law: ShapeLaw,
        rng: np.random.Generator,
        origin: tuple[float, float] = (0.0, 0.0),
        budget: int = DEFAULT_BUDGET,
        slab: float = 1.0,
    ):
        self.law = law
        self.budget = budget
        r = law.r_max
        m = 8.0 * r
        self.state = AncestralState(r, origin)
        self.stream = EventStream(
            law, rng, origin[0] - m, origin[0] + m, origin[1] - m, origin[1] + m, slab
        )

    def _maybe_expand(self) -> None:
        r = self.state.r_max
        bx0, bx1, by0, by1 = self.state.bbox
        wx0, wx1, wy0, wy1 = self.stream.window
        if bx0 - r < wx0 or bx1 + r > wx1 or by0 - r < wy0 or by1 + r > wy1:
            m = 8.0 * r
            self.stream.expand_to(
                min(wx0, bx0 - m), max(wx1, bx1 + m), min(wy0, by0 - m), max(wy1, by1 + m)
            )

    def step(self) -> bool:
        """Consume the next event; returns True iff the state jumped."""
        ev = self.stream.next_event()
        if not self.state.apply_event(ev):
            return False
        if self.state.jump_count > self.budget:
            raise BudgetExceeded(
                f"jump budget {self.budget} exceeded at t={self.state.time}"
            )
        self._maybe_expand()
        return True

    def run_until_reach(self, x: float) -> float:
        """First event time at which the union's reach is >= x."""
        while self.state.reach < x:
            self.step()
        return self.state.time

    def hit_times(self, xs: list[float]) -> list[float]:
        """Hitting times of {abscissa >= x} along one trajectory, for
        ascending thresholds.  A single jump may cross several thresholds at
        once; they then share the same hitting time."""
        if list(xs) != sorted(xs):
            raise ValueError("thresholds must be ascending")
        return [self.run_until_reach(x) for x in xs]


def hit_halfplane(
    law: ShapeLaw, x: float, seed, budget: int = DEFAULT_BUDGET
) -> tuple[float, int]:
    """Hitting time of the right half-plane {abscissa >= x} and jump count."""
    if x <= 0:
        raise ValueError("x must be positive")
    rng = np.random.default_rng(seed)
    run = DualRun(law, rng, budget=budget)
    tau = run.run_until_reach(x)
    return tau, run.state.jump_count


@dataclass
class SpeedEstimate:
    nu: float
    speed: float
    r2: float
    xs: list[float]
    means: list[float]
    ci: list[float]
    reps: int = 0
    extras: dict = field(default_factory=dict)


def estimate_speed(
    law: ShapeLaw,
    xs: list[float],
    reps: int,
    seed,
    budget: int = DEFAULT_BUDGET,
) -> SpeedEstimate:
    """Least-squares growth-rate fit of mean hitting time against abscissa.

    Each replica runs one trajectory and records the hitting time of every
    threshold (hitting times are monotone in the threshold along a single
    trajectory, so one pass suffices).
    """
    xs = sorted(float(x) for x in xs)
    if len(set(xs)) < 3:
        raise ValueError("need at least 3 distinct thresholds for a speed fit")
    if reps < 2:
        raise ValueError("need at least 2 replicas")
    taus = np.empty((reps, len(xs)))
    for i in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence([_seed_int(seed), i]))
        run = DualRun(law, rng, budget=budget)
        for j, x in enumerate(xs):
            taus[i, j] = run.run_until_reach(x)
    means = taus.mean(axis=0)
    ci = 1.96 * taus.std(axis=0, ddof=1) / math.sqrt(reps)
    slope, intercept = np.polyfit(xs, means, 1)
    pred = slope * np.asarray(xs) + intercept
    ss_res = float(np.sum((means - pred) ** 2))
    ss_tot = float(np.sum((means - means.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SpeedEstimate(
        nu=float(slope),
        speed=1.0 / float(slope),
        r2=r2,
        xs=list(xs),
        means=[float(v) for v in means],
        ci=[float(v) for v in ci],
        reps=reps,
    )


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return int(np.random.SeedSequence(seed).entropy)
