"""Greedy rightmost-point chain and the closed-form speed lower bound.

The chain sits at a single point.  It is covered by an event at rate equal to
the law's jump mass; conditionally on being covered, the event's shape is
area-size-biased and its center is uniform on the shape's ellipse centered at
the current position (z covers p iff z - p lies in the origin-centered
ellipse, which is centrally symmetric, so p - z does too).  The chain then
jumps to the unique rightmost point of the event ellipse.  Because that point
always belongs to the event, the chain stays inside the dual region when both
are driven by one event stream, giving an almost-sure lower bound on dual
growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ancestral import DEFAULT_BUDGET, DualRun
from .errors import BudgetExceeded
from .events import ShapeLaw, jump_mass, mean_extreme_offset
from .geometry import contains, Ellipse, extreme_point_offset, sample_uniform


@dataclass
class ExpressState:
    x: float
    y: float
    time: float
    jump_count: int


def lower_bound_speed(law: ShapeLaw) -> float:
    """Long-run horizontal speed of the chain: jump mass times the mean
    (size-biased) extreme offset."""
    return jump_mass(law) * mean_extreme_offset(law)


class _AtomTable:
    """Per-atom sampling table for the covering-event distribution."""

    def __init__(self, law: ShapeLaw):
        areas = np.array([w * math.pi * a * b for w, a, b, _ in law.atoms])
        self.p = areas / areas.sum()
        self.shapes = [(a, b, g) for _, a, b, g in law.atoms]
        self.offsets = [extreme_point_offset(a, b, g) for _, a, b, g in law.atoms]
        self.rate = jump_mass(law)


def express_jump(state: ExpressState, law: ShapeLaw, rng: np.random.Generator) -> ExpressState:
    """One jump: exponential holding time, size-biased shape, conditional
    center, then the extreme point of the event ellipse."""
    table = _AtomTable(law)
    return _jump(state, table, rng)


def _jump(state: ExpressState, table: _AtomTable, rng: np.random.Generator) -> ExpressState:
    dt = rng.exponential(1.0 / table.rate)
    k = rng.choice(len(table.shapes), p=table.p)
    a, b, g = table.shapes[k]
    ox, oy = sample_uniform(Ellipse(0.0, 0.0, a, b, g), rng)
    cx, cy = state.x + ox, state.y + oy
    dx, dy = table.offsets[k]
    return ExpressState(cx + dx, cy + dy, state.time + dt, state.jump_count + 1)


def long_run_speed(law: ShapeLaw, t_end: float, seed) -> float:
    """Horizontal displacement over elapsed time for one standalone run."""
    rng = np.random.default_rng(seed)
    table = _AtomTable(law)
    state = ExpressState(0.0, 0.0, 0.0, 0)
    while True:
        nxt = _jump(state, table, rng)
        if nxt.time > t_end:
            return state.x / t_end
        state = nxt


def express_hit(law: ShapeLaw, x: float, seed, budget: int = DEFAULT_BUDGET) -> float:
    """First jump time with position abscissa >= x (standalone mode)."""
    if x <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    table = _AtomTable(law)
    state = ExpressState(0.0, 0.0, 0.0, 0)
    while state.x < x:
        state = _jump(state, table, rng)
        if state.jump_count > budget:
            raise BudgetExceeded(f"jump budget {budget} exceeded at t={state.time}")
    return state.time


def coupled_hits(
    law: ShapeLaw, x: float, seed, budget: int = DEFAULT_BUDGET, audit: bool = False
) -> tuple[float, float]:
    """(express hit time, dual hit time) for one shared event stream.

    The chain jumps exactly when an event covers its position; such an event
    is always accepted by the dual (the position lies in the dual region), so
    the chain never leaves the region and its hit time dominates the dual's.
    With ``audit`` on, that membership is checked at every chain jump.
    """
    rng = np.random.default_rng(seed)
    run = DualRun(law, rng, budget=budget)
    px, py = 0.0, 0.0
    tau_dual = None
    tau_express = None
    while tau_dual is None or tau_express is None:
        ev = run.stream.next_event()
        accepted = run.state.apply_event(ev)
        if accepted:
            if run.state.jump_count > budget:
                raise BudgetExceeded(f"jump budget {budget} exceeded at t={ev.time}")
            run._maybe_expand()
            if tau_dual is None and run.state.reach >= x:
                tau_dual = ev.time
        if tau_express is None and contains(
            Ellipse(ev.cx, ev.cy, ev.a, ev.b, ev.gamma), (px, py)
        ):
            if audit and not accepted:
                raise AssertionError(
                    "event covered the chain position but the dual rejected it"
                )
            dx, dy = extreme_point_offset(ev.a, ev.b, ev.gamma)
            px, py = ev.cx + dx, ev.cy + dy
            if audit and not run.state.contains_point((px, py)):
                raise AssertionError("chain position left the dual region")
            if px >= x:
                tau_express = ev.time
    return tau_express, tau_dual
