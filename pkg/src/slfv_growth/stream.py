"""Lazily windowed Poisson event stream.

Events are generated in time slabs of fixed length over the current spatial
window.  The window can be enlarged mid-stream; events for the newly added
area are generated only for times strictly after the last delivered event.
This is exact for monotone growth processes whose state always stays at
distance > r_max from the window boundary: an event in the new area at an
earlier time was too far from the then-current state to interact with it.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .events import Event, ShapeLaw, poisson_window


class EventStream:
    """Infinite time-ordered stream of events on a growable window."""

    def __init__(
        self,
        law: ShapeLaw,
        rng: np.random.Generator,
        x0: float,
        x1: float,
        y0: float,
        y1: float,
        slab: float = 1.0,
    ):
        if x1 <= x0 or y1 <= y0:
            raise ValueError("window is degenerate")
        self.law = law
        self.rng = rng
        self.window = (x0, x1, y0, y1)
        self.slab = slab
        self.slab_start = 0.0
        self.t_delivered = 0.0
        self._heap: list[tuple[float, int, Event]] = []
        self._tick = itertools.count()
        self._fill_slab(self.window, 0.0, self.slab)

    def _fill_slab(self, rect, t0, t1):
        if t1 <= t0:
            return
        x0, x1, y0, y1 = rect
        for ev in poisson_window(x0, x1, y0, y1, t0, t1, self.law, self.rng):
            heapq.heappush(self._heap, (ev.time, next(self._tick), ev))

    def next_event(self) -> Event:
        while not self._heap:
            self.slab_start += self.slab
            self._fill_slab(self.window, self.slab_start, self.slab_start + self.slab)
        t, _, ev = heapq.heappop(self._heap)
        self.t_delivered = t
        return ev

    def expand_to(self, x0: float, x1: float, y0: float, y1: float) -> None:
        """Grow the window; new-area events start after the last delivered time.

        The new window must contain the old one.  The uncovered area is split
        into up to four rectangular strips and each is populated for the
        remainder of the current slab; later slabs use the full new window.
        """
        ox0, ox1, oy0, oy1 = self.window
        if not (x0 <= ox0 and x1 >= ox1 and y0 <= oy0 and y1 >= oy1):
            raise ValueError("expanded window must contain the current window")
        if (x0, x1, y0, y1) == self.window:
            return
        t0 = self.t_delivered
        t1 = self.slab_start + self.slab
        # Left / right full-height strips, then top / bottom strips over the
        # old x-extent.
        strips = []
        if x0 < ox0:
            strips.append((x0, ox0, y0, y1))
        if x1 > ox1:
            strips.append((ox1, x1, y0, y1))
        if y0 < oy0:
            strips.append((ox0, ox1, y0, oy0))
        if y1 > oy1:
            strips.append((ox0, ox1, oy1, y1))
        for rect in strips:
            self._fill_slab(rect, t0, t1)
        self.window = (x0, x1, y0, y1)
