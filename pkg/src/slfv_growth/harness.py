"""Experiment runner: config parsing, replica orchestration, outputs.

Configs are flat ``key = value`` text files; command-line flags override file
values.  Replica seeds are derived from the master seed and the replica index
only, and aggregation is ordered by index, so serial and parallel executions
of the same config produce identical output files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ancestral import DualRun, SpeedEstimate
from .errors import ConfigError
from .events import jump_mass, mean_extreme_offset, ShapeLaw
from .express import coupled_hits, long_run_speed, lower_bound_speed
from .forward import (
    disk,
    duality_check,
    duality_replica,
    forward_run,
    render_frames,
)
from .geometry import Ellipse
from .percolation import domination_replica, domination_suite
from .twocolumn import batch_excursions, extrapolate, long_run_heights

EXPERIMENTS = ("speed", "express", "fpp", "twocol", "forward", "duality")


def estimate(samples) -> tuple[float, float, float]:
    """Unbiased mean and variance plus a 95% normal-approximation CI."""
    a = np.asarray(samples, dtype=float)
    if a.size < 2:
        raise ValueError("need at least 2 samples")
    mean = float(a.mean())
    var = float(a.var(ddof=1))
    ci95 = 1.96 * math.sqrt(var / a.size)
    return mean, var, ci95


@dataclass
class ExperimentConfig:
    kind: str
    law: ShapeLaw
    seed: int = 0
    reps: int = 30
    out_dir: str = "."
    workers: int = 1
    params: dict[str, str] = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "kind": self.kind,
            "law": [list(a) for a in self.law.atoms],
            "seed": self.seed,
            "reps": self.reps,
            "out_dir": self.out_dir,
            "workers": self.workers,
            "params": dict(sorted(self.params.items())),
            "version": __version__,
        }


def _parse_scalar(s: str) -> float:
    s = s.strip()
    if s == "1/pi":
        return 1.0 / math.pi
    try:
        return float(s)
    except ValueError as e:
        raise ConfigError(f"cannot parse number {s!r}") from e


def parse_law(text: str) -> ShapeLaw:
    """Atoms as 'w,a,b,gamma' groups separated by ';'; 'ball' is the unit law."""
    text = text.strip()
    if text in ("ball", "unit-ball"):
        return ShapeLaw(atoms=((1.0 / math.pi, 1.0, 1.0, 0.0),))
    atoms = []
    for group in text.split(";"):
        parts = [p for p in group.split(",") if p.strip()]
        if len(parts) != 4:
            raise ConfigError(f"law atom needs 4 fields, got {group!r}")
        atoms.append(tuple(_parse_scalar(p) for p in parts))
    try:
        return ShapeLaw(atoms=tuple(atoms))
    except ValueError as e:
        raise ConfigError(str(e)) from e


def parse_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return out


def build_config(kind: str, raw: dict[str, str]) -> ExperimentConfig:
    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    raw = dict(raw)
    law = parse_law(raw.pop("law", "ball"))
    try:
        seed = int(raw.pop("seed", "0"))
        reps = int(raw.pop("reps", "30"))
        workers = int(raw.pop("workers", os.environ.get("SLFV_WORKERS", "1")))
    except ValueError as e:
        raise ConfigError(f"bad integer field: {e}") from e
    out_dir = raw.pop("out", ".")
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return ExperimentConfig(
        kind=kind, law=law, seed=seed, reps=reps, out_dir=out_dir,
        workers=workers, params=raw,
    )


def _floats(cfg: ExperimentConfig, key: str, default: str) -> list[float]:
    return [_parse_scalar(v) for v in cfg.params.get(key, default).split(",")]


def _ints(cfg: ExperimentConfig, key: str, default: str) -> list[int]:
    return [int(v) for v in cfg.params.get(key, default).split(",")]


def _pmap(fn, args_list, workers: int):
    if workers <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return v


def _write_summary(cfg: ExperimentConfig, extra: dict) -> None:
    payload = {"config": cfg.resolved(), **extra}
    with open(os.path.join(cfg.out_dir, "summary.json"), "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# Replica task functions (module level for process-pool pickling)
# ---------------------------------------------------------------------------

def _speed_replica(atoms, xs, master, i, budget):
    law = ShapeLaw(atoms=atoms)
    rng = np.random.default_rng(np.random.SeedSequence([master, i]))
    run = DualRun(law, rng, budget=budget)
    return run.hit_times(xs)


def _express_replica(atoms, x, master, i):
    law = ShapeLaw(atoms=atoms)
    return coupled_hits(law, x, np.random.SeedSequence([master, i]))


# ---------------------------------------------------------------------------
# Experiment drivers
# ---------------------------------------------------------------------------

def run_speed(cfg: ExperimentConfig) -> dict:
    xs = sorted(_floats(cfg, "xs", "10,20,30,40"))
    budget = int(cfg.params.get("budget", "10000000"))
    rows = _pmap(
        _speed_replica,
        [(cfg.law.atoms, xs, cfg.seed, i, budget) for i in range(cfg.reps)],
        cfg.workers,
    )
    taus = np.array(rows)
    means = taus.mean(axis=0)
    cis = [estimate(taus[:, j])[2] for j in range(len(xs))]
    slope, intercept = np.polyfit(xs, means, 1)
    pred = slope * np.asarray(xs) + intercept
    ss_tot = float(np.sum((means - means.mean()) ** 2))
    r2 = 1.0 - float(np.sum((means - pred) ** 2)) / ss_tot if ss_tot else 1.0
    est = SpeedEstimate(
        nu=float(slope), speed=1.0 / float(slope), r2=r2, xs=xs,
        means=[float(v) for v in means], ci=cis, reps=cfg.reps,
    )
    _write_csv(
        os.path.join(cfg.out_dir, "speed.csv"),
        ["x", "mean_tau", "ci95"],
        zip(xs, est.means, est.ci),
    )
    _maybe_svg(cfg, xs, est.means, slope, intercept)
    return {"nu": est.nu, "speed": est.speed, "r2": est.r2}


def _maybe_svg(cfg, xs, means, slope, intercept):
    if cfg.params.get("svg", "0") not in ("1", "true", "yes"):
        return
    write_svg_scatter(
        os.path.join(cfg.out_dir, "speed.svg"), xs, means, slope, intercept
    )


def write_svg_scatter(path, xs, ys, slope, intercept, size=480):
    """Minimal dependency-free scatter plot with the fitted line."""
    pad = 40
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys) * 1.1
    sx = lambda x: pad + (x - x0) / (x1 - x0 or 1) * (size - 2 * pad)
    sy = lambda y: size - pad - (y - y0) / (y1 - y0 or 1) * (size - 2 * pad)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{pad}" y1="{size-pad}" x2="{size-pad}" y2="{size-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{size-pad}" stroke="black"/>',
    ]
    lx0, lx1 = x0, x1
    parts.append(
        f'<line x1="{sx(lx0):.2f}" y1="{sy(slope*lx0+intercept):.2f}" '
        f'x2="{sx(lx1):.2f}" y2="{sy(slope*lx1+intercept):.2f}" stroke="steelblue"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="crimson"/>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")


def run_express(cfg: ExperimentConfig) -> dict:
    x = _parse_scalar(cfg.params.get("x", "20"))
    t_end = _parse_scalar(cfg.params.get("t_end", "10000"))
    bound = lower_bound_speed(cfg.law)
    standalone = long_run_speed(cfg.law, t_end, np.random.SeedSequence([cfg.seed, 10**6]))
    pairs = _pmap(
        _express_replica,
        [(cfg.law.atoms, x, cfg.seed, i) for i in range(cfg.reps)],
        cfg.workers,
    )
    dominated = sum(1 for te, td in pairs if te >= td)
    _write_csv(
        os.path.join(cfg.out_dir, "express.csv"),
        ["replica", "express_hit", "dual_hit"],
        [(i, te, td) for i, (te, td) in enumerate(pairs)],
    )
    return {
        "lower_bound_speed": bound,
        "standalone_long_run_speed": standalone,
        "dominated_fraction": dominated / cfg.reps,
    }


def run_fpp(cfg: ExperimentConfig) -> dict:
    n_values = sorted(_ints(cfg, "n_values", "5,10"))
    H = int(cfg.params.get("H", str(2 * max(n_values) + 8)))
    rows = _pmap(
        domination_replica,
        [(n_values, H, cfg.seed, r) for r in range(cfg.reps)],
        cfg.workers,
    )
    report = domination_suite(n_values, cfg.reps, cfg.seed, H=H, rows=rows)
    _write_csv(
        os.path.join(cfg.out_dir, "domination.csv"),
        ["n", "mean_fpp", "ci_fpp", "mean_discr", "ci_discr", "mean_tau4n", "ci_tau4n"],
        zip(
            report.n_values, report.mean_fpp, report.ci_fpp,
            report.mean_discr, report.ci_discr,
            report.mean_tau4n, report.ci_tau4n,
        ),
    )
    return {
        "pointwise_ok": report.pointwise_ok,
        "ordering_ok": report.ordering_ok,
    }


def run_twocol(cfg: ExperimentConfig) -> dict:
    mode = cfg.params.get("mode", "exact")
    if mode == "exact":
        ns = _ints(cfg, "schedule", "16,32,64,128")
        res = extrapolate([(n, n ** -3.0) for n in ns])
        _write_csv(
            os.path.join(cfg.out_dir, "twocol_exact.csv"),
            ["N", "epsilon", "expected_return_steps", "eps_times_steps", "speed_estimate"],
            [
                (n, eps, steps, v, 1.0 + 1.0 / (2.0 * v))
                for (n, eps), steps, v in zip(
                    res.schedule, res.return_steps, res.eps_times_steps
                )
            ],
        )
        return {
            "T_square_limit": res.T_square_limit,
            "speed": res.speed,
            "monotone": res.monotone,
        }
    if mode == "mc":
        horizon = _parse_scalar(cfg.params.get("horizon", "100000"))
        m, M = long_run_heights(horizon, np.random.SeedSequence([cfg.seed, 0]))
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        T, Mr, _ = batch_excursions(cfg.reps, rng)
        _write_csv(
            os.path.join(cfg.out_dir, "twocol_mc.csv"),
            ["quantity", "value"],
            [
                ("speed_tall", M / horizon),
                ("speed_short", m / horizon),
                ("mean_return_time", float(T.mean())),
                ("mean_height_at_return", float(Mr.mean())),
            ],
        )
        return {"speed": M / horizon}
    raise ConfigError(f"unknown twocol mode {mode!r}")


def _parse_region(text: str):
    """'disk,cx,cy,r' or 'rect,x0,x1,y0,y1' or 'ellipse,cx,cy,a,b,g'."""
    parts = [p.strip() for p in text.split(",")]
    kind = parts[0]
    vals = [_parse_scalar(p) for p in parts[1:]]
    if kind == "disk" and len(vals) == 3:
        return [disk(*vals)]
    if kind == "rect" and len(vals) == 4:
        return [tuple(vals)]
    if kind == "ellipse" and len(vals) == 5:
        return [Ellipse(*vals)]
    raise ConfigError(f"cannot parse region {text!r}")


def run_forward(cfg: ExperimentConfig) -> dict:
    t_end = _parse_scalar(cfg.params.get("t_end", "20"))
    seeds = _parse_region(cfg.params.get("seed_region", "rect,-40,0,-15,15"))
    times = _floats(cfg, "times", "5,10,15,20")
    resolution = _parse_scalar(cfg.params.get("resolution", "4"))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    state = forward_run(seeds, cfg.law, t_end, rng)
    bx0, bx1, by0, by1 = state.bbox
    frames = render_frames(
        state, (bx0 - 1, bx1 + 1, by0 - 1, by1 + 1), resolution, times,
        out_dir=cfg.out_dir,
    )
    _write_csv(
        os.path.join(cfg.out_dir, "forward_trace.csv"),
        ["t", "center_x", "center_y", "a", "b", "gamma"],
        [
            (state.times[k],) + state.ellipses[k]
            for k in range(len(state.ellipses))
        ],
    )
    return {
        "accepted_events": len(state.ellipses),
        "final_reach": state.reach,
        "frames": len(frames),
    }


def run_duality(cfg: ExperimentConfig) -> dict:
    region_a = _parse_region(cfg.params.get("region_a", "disk,0,0,1"))
    region_b = _parse_region(cfg.params.get("region_b", "disk,4,0,1"))
    t = _parse_scalar(cfg.params.get("t", "2"))
    convention = cfg.params.get("convention", "same")
    pairs = _pmap(
        duality_replica,
        [
            (region_a, region_b, t, cfg.law, convention, cfg.seed, i)
            for i in range(cfg.reps)
        ],
        cfg.workers,
    )
    res = duality_check(
        region_a, region_b, t, cfg.reps, cfg.seed, cfg.law,
        dual_convention=convention, pairs=pairs,
    )
    _write_csv(
        os.path.join(cfg.out_dir, "duality.csv"),
        ["p_forward", "p_dual", "z_score", "reps"],
        [(res.p_forward, res.p_dual, res.z_score, res.reps)],
    )
    return {
        "p_forward": res.p_forward,
        "p_dual": res.p_dual,
        "z_score": res.z_score,
    }


_DRIVERS = {
    "speed": run_speed,
    "express": run_express,
    "fpp": run_fpp,
    "twocol": run_twocol,
    "forward": run_forward,
    "duality": run_duality,
}


def run(cfg: ExperimentConfig) -> dict:
    """Execute one experiment; writes CSV outputs plus a JSON summary."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    result = _DRIVERS[cfg.kind](cfg)
    _write_summary(cfg, {"results": result})
    return result
