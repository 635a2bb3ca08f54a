"""Two-column cube-pile growth: Monte Carlo and exact discretised chain.

Two adjacent piles of cubes grow: from equal heights the pair jumps to
heights (i, i+1) at rate 2; when the difference is d >= 1 the taller pile
grows at rate 1, the shorter catches up by one at rate 2, and it jumps up by
k for each k in [2, d] at rate 1, so the total jump rate is d + 2.  The
return time to equal heights and the height at return determine the long-run
growth speed 1 + 1/(2 E[T]).

The (N, eps) discretised difference chain caps the difference at N and uses
one-step transition probabilities derived from exponential holding in time
slabs of length eps.  Its accelerated variant (leave state 0 in one step) has
a product-form invariant distribution built from an integer sequence A_i,
which yields a closed-form expected exit-then-return step count and, after
extrapolation eps -> 0, N -> infinity, the continuous return time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvariantViolation


# ---------------------------------------------------------------------------
# Continuous-time Monte Carlo
# ---------------------------------------------------------------------------

def batch_excursions(reps: int, rng: np.random.Generator):
    """Vectorised excursions from equal heights back to equal heights.

    Returns (T, M_at_return, max_diff) arrays of length reps, for excursions
    started at (0, 0).
    """
    m = np.zeros(reps, dtype=np.int64)
    M = np.zeros(reps, dtype=np.int64)
    t = np.zeros(reps)
    maxd = np.zeros(reps, dtype=np.int64)
    # First jump from equal heights: rate 2, difference becomes 1.
    t += rng.exponential(0.5, size=reps)
    M += 1
    maxd[:] = 1
    active = np.arange(reps)
    while active.size:
        d = M[active] - m[active]
        rate = d + 2
        t[active] += rng.exponential(1.0, size=active.size) / rate
        c = rng.uniform(0.0, 1.0, size=active.size) * rate
        up = c < 1.0
        down1 = (c >= 1.0) & (c < 3.0)
        drop = c >= 3.0
        M[active[up]] += 1
        m[active[down1]] += 1
        k = 2 + np.floor(c[drop] - 3.0).astype(np.int64)
        m[active[drop]] += k
        maxd[active] = np.maximum(maxd[active], M[active] - m[active])
        active = active[M[active] != m[active]]
    return t, M, maxd


def simulate_return(seed) -> tuple[float, int]:
    """One excursion from (0,0): (return time, common height at return)."""
    rng = np.random.default_rng(seed)
    t, M, _ = batch_excursions(1, rng)
    return float(t[0]), int(M[0])


def long_run_heights(horizon: float, seed) -> tuple[int, int]:
    """(shorter, taller) pile heights at the given horizon, one trajectory.

    Excursions are i.i.d., so complete excursions are generated in bulk and
    only the final partial excursion is replayed event by event.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    base_t = 0.0
    base_h = 0
    while True:
        n = max(1024, int(1.2 * (horizon - base_t)) + 64)
        T, M, _ = batch_excursions(n, rng)
        ct = base_t + np.cumsum(T)
        over = np.searchsorted(ct, horizon)
        if over < n:
            ch = base_h + np.cumsum(M)
            if over > 0:
                base_t = float(ct[over - 1])
                base_h = int(ch[over - 1])
            # Replay one fresh excursion from (base_h, base_h) up to horizon.
            return _partial_excursion(base_h, horizon - base_t, rng)
        base_t = float(ct[-1])
        base_h = int(base_h + np.cumsum(M)[-1])


def _partial_excursion(h0: int, budget: float, rng: np.random.Generator):
    m, M = h0, h0
    t = rng.exponential(0.5)
    if t > budget:
        return (h0, h0)
    M += 1
    while True:
        d = M - m
        if d == 0:
            t += rng.exponential(0.5)
            if t > budget:
                return (m, M)
            M += 1
            continue
        t += rng.exponential(1.0 / (d + 2))
        if t > budget:
            return (m, M)
        c = rng.uniform(0.0, 1.0) * (d + 2)
        if c < 1.0:
            M += 1
        elif c < 3.0:
            m += 1
        else:
            m += 2 + int(c - 3.0)


def long_run_speed_mc(horizon: float, seed) -> float:
    """Taller-pile height over time for one long trajectory."""
    _, M = long_run_heights(horizon, seed)
    return M / horizon


# ---------------------------------------------------------------------------
# Discretised difference chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretizedChain:
    N: int
    epsilon: float
    P: np.ndarray
    accelerated: bool


def build_chain(N: int, epsilon: float, accelerated: bool = False) -> DiscretizedChain:
    """Transition matrix of the capped difference chain on {0, ..., N}."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    P = np.zeros((N + 1, N + 1))
    if accelerated:
        P[0, 1] = 1.0
    else:
        P[0, 0] = math.exp(-2.0 * epsilon)
        P[0, 1] = -math.expm1(-2.0 * epsilon)
    for i in range(1, N):
        q = -math.expm1(-(i + 2) * epsilon)
        P[i, i] = math.exp(-(i + 2) * epsilon)
        P[i, i + 1] = q / (i + 2)
        P[i, i - 1] = 2.0 * q / (i + 2)
        for j in range(0, i - 1):
            P[i, j] = q / (i + 2)
    qN = -math.expm1(-(N + 2) * epsilon)
    P[N, N] = 1.0 - (N + 1) / (N + 2) * qN
    P[N, N - 1] = 2.0 * qN / (N + 2)
    for j in range(0, N - 1):
        P[N, j] = qN / (N + 2)
    return DiscretizedChain(N=N, epsilon=epsilon, P=P, accelerated=accelerated)


def a_sequence_integers(N: int) -> list[int]:
    """The eps-independent integer part A_1..A_N of the A-sequence.

    Backwards recursion A_{i-1} = (i+2) A_i - 2 A_{i+1} - sum_{j=i+2}^N A_j
    from A_N = 1, A_{N-1} = N + 1, in exact integer arithmetic (the values
    grow super-exponentially and cancel catastrophically in floats).
    """
    if N < 3:
        raise ValueError("N must be >= 3")
    A = [0] * (N + 1)
    A[N] = 1
    A[N - 1] = N + 1
    suffix = 0  # sum_{j=i+2}^N A_j, empty for the first step i = N-1
    for i in range(N - 1, 1, -1):
        A[i - 1] = (i + 2) * A[i] - 2 * A[i + 1] - suffix
        suffix += A[i + 1]
    return A[1:]


def a0_tilde(N: int) -> Fraction:
    """A_0 divided by its (1 - exp(-2 eps)) factor; an exact half-integer."""
    A = a_sequence_integers(N)
    return Fraction(2 * A[0] + sum(A[1:]), 2)


def a_sequence(N: int, epsilon: float) -> list[float]:
    """Full A-sequence A_0..A_N; only A_0 depends on epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    A = a_sequence_integers(N)
    a0 = float(a0_tilde(N)) * (-math.expm1(-2.0 * epsilon))
    return [a0] + [float(v) for v in A]


def invariant_distribution(chain: DiscretizedChain) -> np.ndarray:
    """Closed-form stationary law of the accelerated chain, validated as a
    left fixed point of P.

    The unnormalised weight of state i >= 1 is A_i (i+2) / (1 - e^{-(i+2)eps});
    state 0's weight is 2 * (A_0 / (1 - e^{-2 eps})), which is eps-free.  The
    huge integers are handled in log space before normalisation.
    """
    if not chain.accelerated:
        raise ValueError("invariant distribution is for the accelerated chain")
    N, eps = chain.N, chain.epsilon
    A = a_sequence_integers(N)
    t0 = a0_tilde(N)
    logs = [math.log(2.0) + _log_int(t0.numerator) - math.log(t0.denominator)]
    for i in range(1, N + 1):
        logs.append(
            _log_int(A[i - 1]) + math.log(i + 2) - math.log(-math.expm1(-(i + 2) * eps))
        )
    top = max(logs)
    w = np.array([math.exp(v - top) for v in logs])
    pi = w / w.sum()
    residual = float(np.max(np.abs(pi @ chain.P - pi)))
    if residual > 1e-10:
        raise InvariantViolation(f"stationary residual {residual:.3e} > 1e-10")
    return pi


def _log_int(n: int) -> float:
    # math.log handles arbitrary-size ints exactly enough for normalisation.
    return math.log(n)


def expected_return_time(N: int, epsilon: float) -> float:
    """Closed-form mean exit-then-return step count of the (N, eps) chain.

    Equals (expected steps to leave 0) + (expected steps back to 0), i.e.
    1/(1-e^{-2 eps}) + (1 / (2 A_0^~)) sum_i (i+2) A_i / (1 - e^{-(i+2) eps}),
    where A_0^~ is the eps-free part of A_0.  Evaluated in log space.
    """
    if N < 3:
        raise ValueError("N must be >= 3")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    A = a_sequence_integers(N)
    t0 = a0_tilde(N)
    log_a0 = _log_int(t0.numerator) - math.log(t0.denominator)
    total = 0.0
    for i in range(1, N + 1):
        total += math.exp(
            _log_int(A[i - 1])
            + math.log(i + 2)
            - math.log(-math.expm1(-(i + 2) * epsilon))
            - math.log(2.0)
            - log_a0
        )
    return 1.0 / (-math.expm1(-2.0 * epsilon)) + total


def expected_return_time_via_invariant(N: int, epsilon: float) -> float:
    """Cross-check: 1/pi_0 - 1 + 1/(1 - e^{-2 eps}) from the stationary law."""
    chain = build_chain(N, epsilon, accelerated=True)
    pi = invariant_distribution(chain)
    return 1.0 / float(pi[0]) - 1.0 + 1.0 / (-math.expm1(-2.0 * epsilon))


def simulate_discrete_return(N: int, epsilon: float, reps: int, seed) -> np.ndarray:
    """Monte Carlo exit-then-return step counts of the non-accelerated chain.

    Holding times in each state are geometric, so the embedded jump chain is
    simulated directly and the geometric holdings are added per visit.
    """
    rng = np.random.default_rng(seed)
    chain = build_chain(N, epsilon, accelerated=False)
    stay = np.diag(chain.P).copy()
    # Conditional jump distributions (cumulative), one row per state.
    jump = chain.P - np.diag(stay)
    jump[0, :] = 0.0
    jump[0, 1] = 1.0
    rows = jump / jump.sum(axis=1, keepdims=True)
    cum = np.cumsum(rows, axis=1)
    steps = np.zeros(reps, dtype=np.int64)
    # Steps to leave state 0.
    steps += rng.geometric(1.0 - stay[0], size=reps)
    state = np.ones(reps, dtype=np.int64)
    active = np.arange(reps)
    while active.size:
        s = state[active]
        steps[active] += rng.geometric(1.0 - stay[s])
        u = rng.uniform(0.0, 1.0, size=active.size)
        nxt = (u[:, None] > cum[s]).sum(axis=1)
        state[active] = nxt
        active = active[nxt != 0]
    return steps


# ---------------------------------------------------------------------------
# Extrapolation
# ---------------------------------------------------------------------------

@dataclass
class ExtrapolationResult:
    schedule: list[tuple[int, float]]
    eps_times_steps: list[float]
    return_steps: list[float]
    T_square_limit: float
    speed: float
    monotone: bool


def default_schedule() -> list[tuple[int, float]]:
    """N doubling with eps = N^-3, so N^2 eps = 1/N -> 0."""
    return [(n, n ** -3.0) for n in (16, 32, 64, 128)]


def extrapolate(schedule: list[tuple[int, float]] | None = None) -> ExtrapolationResult:
    """Continuous return time and growth speed from the discretised chain.

    Reports eps * E[steps] per schedule point and a Richardson limit using
    the observed geometric error decay (ratio (N_k/N_{k-1})^3 for the default
    schedule).  The speed is 1 + 1/(2 T).
    """
    schedule = schedule or default_schedule()
    if len(schedule) < 2:
        raise ValueError("need at least 2 schedule points to extrapolate")
    steps = [expected_return_time(N, eps) for N, eps in schedule]
    vals = [eps * s for (_, eps), s in zip(schedule, steps)]
    deltas = [abs(b - a) for a, b in zip(vals, vals[1:])]
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(deltas, deltas[1:]))
    ratio = (schedule[-1][0] / schedule[-2][0]) ** 3
    limit = vals[-1] + (vals[-1] - vals[-2]) / (ratio - 1.0)
    return ExtrapolationResult(
        schedule=list(schedule),
        eps_times_steps=vals,
        return_steps=steps,
        T_square_limit=limit,
        speed=1.0 + 1.0 / (2.0 * limit),
        monotone=monotone,
    )


def continuous_return_oracle(depth: int = 200) -> float:
    """Independent mean-return-time computation for the continuous process.

    Let h_d be the expected time to reach difference 0 from difference d.
    First-step analysis gives (d+2) h_d = 1 + h_{d+1} + 2 h_{d-1} +
    sum_{k=2}^{d} h_{d-k}, with h_0 = 0; truncating with h_{depth+1} = h_depth
    and solving the linear system yields T = 1/2 + h_1.
    """
    n = depth
    Amat = np.zeros((n, n))
    bvec = np.ones(n)
    for d in range(1, n + 1):
        r = d - 1
        Amat[r, r] += d + 2
        if d + 1 <= n:
            Amat[r, d] -= 1.0
        else:
            Amat[r, r] -= 1.0  # truncation: h_{n+1} ~ h_n
        if d - 1 >= 1:
            Amat[r, d - 2] -= 2.0
        for k in range(2, d + 1):
            if d - k >= 1:
                Amat[r, d - k - 1] -= 1.0
    h = np.linalg.solve(Amat, bvec)
    return 0.5 + float(h[0])
