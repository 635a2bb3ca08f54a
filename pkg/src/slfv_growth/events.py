"""Shape mixtures and Poisson streams of reproduction events.

A ``ShapeLaw`` is a finite atomic mixture over ellipse shape parameters
``(a, b, gamma)``; its total mass is the event intensity per unit area per
unit time.  ``poisson_window`` realises the driving space-time Poisson point
process on one rectangle and time slab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import max_horizontal_offset


@dataclass(frozen=True)
class Event:
    time: float
    cx: float
    cy: float
    a: float
    b: float
    gamma: float


@dataclass(frozen=True)
class ShapeLaw:
    """Finite mixture of shape atoms (weight, a, b, gamma)."""

    atoms: tuple[tuple[float, float, float, float], ...]
    total_mass: float = field(init=False)
    r_max: float = field(init=False)

    def __post_init__(self):
        atoms = tuple(tuple(float(v) for v in atom) for atom in self.atoms)
        if not atoms:
            raise ValueError("ShapeLaw needs at least one atom")
        for w, a, b, g in atoms:
            if w <= 0:
                raise ValueError(f"atom weight must be positive, got {w}")
            if a <= 0 or b <= 0:
                raise ValueError(f"semi-axes must be positive, got a={a}, b={b}")
            if not (-math.pi / 2 < g < math.pi / 2):
                raise ValueError(f"gamma must lie in (-pi/2, pi/2), got {g}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "total_mass", sum(w for w, _, _, _ in atoms))
        object.__setattr__(self, "r_max", max(max(a, b) for _, a, b, _ in atoms))

    @property
    def weights(self):
        return np.array([w for w, _, _, _ in self.atoms])


def unit_ball_law(rate: float = 1.0) -> ShapeLaw:
    """Single-atom law of unit disks hitting any fixed point at the given rate."""
    return ShapeLaw(atoms=(((rate / math.pi), 1.0, 1.0, 0.0),))


def mirror(law: ShapeLaw) -> ShapeLaw:
    """Negate every atom's tilt; weights and axes unchanged."""
    return ShapeLaw(atoms=tuple((w, a, b, -g) for w, a, b, g in law.atoms))


def jump_mass(law: ShapeLaw) -> float:
    """Rate at which a fixed point is covered by an event: sum of weight * area."""
    return sum(w * math.pi * a * b for w, a, b, _ in law.atoms)


def mean_extreme_offset(law: ShapeLaw) -> float:
    """Mean maximal x-offset of the event covering a fixed point.

    The covering event's shape is area-size-biased: a point is hit by a shape
    atom with probability proportional to weight * area.
    """
    total = jump_mass(law)
    acc = 0.0
    for w, a, b, g in law.atoms:
        _, d = max_horizontal_offset(a, b, g)
        acc += (w * math.pi * a * b / total) * d
    return acc


def poisson_window(
    x0: float,
    x1: float,
    y0: float,
    y1: float,
    t0: float,
    t1: float,
    law: ShapeLaw,
    rng: np.random.Generator,
) -> list[Event]:
    """Events of the driving Poisson process on rect x [t0, t1), time-sorted.

    The count is Poisson(mass * area * duration); centers are uniform on the
    rectangle, times uniform on the slab, shapes i.i.d. proportional to atom
    weights.
    """
    if t1 < t0:
        raise ValueError(f"t1={t1} < t0={t0}")
    area = (x1 - x0) * (y1 - y0)
    if area <= 0:
        raise ValueError("rectangle is degenerate")
    n = rng.poisson(law.total_mass * area * (t1 - t0))
    if n == 0:
        return []
    times = np.sort(rng.uniform(t0, t1, size=n))
    xs = rng.uniform(x0, x1, size=n)
    ys = rng.uniform(y0, y1, size=n)
    w = law.weights
    idx = rng.choice(len(law.atoms), size=n, p=w / w.sum())
    out = []
    for i in range(n):
        _, a, b, g = law.atoms[idx[i]]
        out.append(Event(float(times[i]), float(xs[i]), float(ys[i]), a, b, g))
    return out
