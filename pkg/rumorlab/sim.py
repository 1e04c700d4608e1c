"""Exact stochastic simulation of the rumour process.

Two engines:

* the reduced embedded chain on (X, W), W = sum of i * Y_i, which is all
  the final ignorant count depends on (primary engine);
* the full type-resolved chain (X, Y_1, Y_2, ..., Z), used to validate the
  reduction and to time the process on its own clock.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from rumorlab import config
from rumorlab.errors import InitialConditionError, SimulationContractError

logger = logging.getLogger(__name__)

SEED_MASK = 2**64 - 1
CHUNK = 4096


@dataclass(frozen=True)
class ReducedState:
    X: int
    W: int
    N: int

    @property
    def absorbed(self):
        return self.W == 0


@dataclass(frozen=True)
class FullState:
    X: int
    Y: dict
    Z: int
    N: int

    @property
    def spreaders(self):
        return sum(self.Y.values())

    @property
    def W(self):
        return sum(i * c for i, c in self.Y.items())

    def reduced(self):
        return ReducedState(self.X, self.W, self.N)


@dataclass(frozen=True)
class SimulationOutcome:
    final_ignorants: int
    transitions: int
    seed: int
    N: int
    initial_ignorants: int
    replica: int = 0
    absorption_time: float = None
    time_changed_absorption: float = None

    def to_dict(self):
        record = asdict(self)
        for key in ("absorption_time", "time_changed_absorption"):
            if record[key] is None:
                record.pop(key)
        return record


# --- Random streams ---
def replica_rng(seed, replica=0):
    """Counter-based Philox stream keyed by (master seed, replica id)."""
    seq = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(seq))


class _Draws:
    """Buffered uniforms, exponentials and stifling counts from one Generator."""

    def __init__(self, rng, dist, chunk=CHUNK):
        self.rng = rng
        self.dist = dist
        self.chunk = chunk
        self._u, self._ui = [], 0
        self._e, self._ei = [], 0
        self._r, self._ri = [], 0

    def uniform(self):
        if self._ui == len(self._u):
            self._u, self._ui = self.rng.random(self.chunk).tolist(), 0
        self._ui += 1
        return self._u[self._ui - 1]

    def exponential(self):
        if self._ei == len(self._e):
            self._e, self._ei = self.rng.standard_exponential(self.chunk).tolist(), 0
        self._ei += 1
        return self._e[self._ei - 1]

    def stifling(self):
        if self._ri == len(self._r):
            self._r, self._ri = self.dist.sample_many(self.rng, 256).tolist(), 0
        self._ri += 1
        return self._r[self._ri - 1]


def _round_half_up(value):
    return int(math.floor(value + 0.5))


# --- Initial state ---
def init_state(N, ic, dist, rng=None, spreader_type=None):
    """Integer start (ReducedState, FullState) for population N + 1.

    Rounding slack goes to the stiflers. The one-spreader start draws the
    spreader's type from R conditioned on R >= 1 unless `spreader_type` is given.
    """
    if int(N) != N or N < 1:
        raise InitialConditionError(f"N must be a positive integer, got {N}")
    N = int(N)
    population = N + 1

    if ic.y0 is None:
        X = min(_round_half_up(population * ic.x0), N)
        if spreader_type is None:
            rng = rng if rng is not None else replica_rng(config.DEFAULT_SEED)
            spreader_type = dist.sample_positive(rng)
        Y = {int(spreader_type): 1}
    else:
        X = _round_half_up(population * ic.x0)
        Y = {i: _round_half_up(population * y) for i, y in ic.y0.items()}
        Y = {i: c for i, c in Y.items() if c > 0}
        if not Y:
            if spreader_type is None:
                raise InitialConditionError(
                    f"Rounding leaves no spreader at N={N}; raise N or pass spreader_type"
                )
            Y = {int(spreader_type): 1}

    if spreader_type is not None and int(spreader_type) < 1:
        raise InitialConditionError(f"Spreader types are >= 1, got {spreader_type}")

    Z = population - X - sum(Y.values())
    if Z < 0:
        # each rounded count can overshoot by at most one
        if -Z > len(Y) + 1:
            raise InitialConditionError(
                f"Start overfills the population by {-Z} at N={N}; x0 + sum(y_i0) must not exceed 1"
            )
        logger.warning(f"Rounding overshoots the population by {-Z}; taking the slack from the ignorants")
        X += Z
        Z = 0
        if X < 0:
            raise InitialConditionError(f"Spreader counts exceed the population at N={N}")

    full = FullState(X, dict(sorted(Y.items())), Z, N)
    return full.reduced(), full


# --- Reduced chain ---
def step_reduced(state, dist, rng):
    """One jump of the embedded (X, W) chain."""
    if state.W <= 0:
        raise SimulationContractError(f"Cannot step an absorbed state {state}")
    if rng.random() < state.X / state.N:
        return ReducedState(state.X - 1, state.W + dist.sample(rng), state.N)
    return ReducedState(state.X, state.W - 1, state.N)


def _batched_walk(X0, W0, N, dist, rng):
    """Exact reduced-chain run by stages between ignorant contacts.

    In stage k there are X0 - k ignorants; the number of W decrements before
    the next contact is geometric with success probability (X0 - k) / N.
    """
    if W0 == 0 or X0 == 0:
        return X0, W0

    success = (X0 - np.arange(X0)) / N
    failures = rng.geometric(success) - 1
    stifling = dist.sample_many(rng, X0)

    budget = np.concatenate(([0], np.cumsum(stifling)))
    remaining = W0 + budget[:-1] - np.cumsum(failures)
    hits = np.flatnonzero(remaining <= 0)
    stage = int(hits[0]) if hits.size else X0

    # every unit of W is spent by exactly one jump
    transitions = stage + W0 + int(budget[stage])
    return X0 - stage, transitions


def _stepwise_walk(X, W, N, dist, rng):
    draws = _Draws(rng, dist)
    transitions = 0
    while W > 0:
        if draws.uniform() < X / N:
            X -= 1
            W += draws.stifling()
        else:
            W -= 1
        transitions += 1
    return X, transitions


def run_reduced(N, ic, dist, seed, replica=0, method="batched", with_clocks=False, spreader_type=None):
    """Run the reduced embedded chain to absorption (W = 0)."""
    rng = replica_rng(seed, replica)
    start, _ = init_state(N, ic, dist, rng, spreader_type)

    if method == "batched":
        final_x, transitions = _batched_walk(start.X, start.W, start.N, dist, rng)
    elif method == "stepwise":
        final_x, transitions = _stepwise_walk(start.X, start.W, start.N, dist, rng)
    else:
        raise ValueError(f"Unknown reduced-chain method {method!r}")

    clock = None
    if with_clocks:
        # total rate of the time-changed chain is N while W > 0
        clock = float(rng.gamma(transitions, 1.0 / start.N)) if transitions else 0.0

    return SimulationOutcome(
        final_ignorants=int(final_x),
        transitions=int(transitions),
        seed=int(seed),
        N=start.N,
        initial_ignorants=start.X,
        replica=replica,
        time_changed_absorption=clock,
    )


# --- Full chain ---
class _TypeCounts:
    """Spreader counts by type: dense list up to a high-water type, dict above."""

    def __init__(self, counts, dense_size):
        self.dense = [0] * (dense_size + 1)
        self.overflow = {}
        self.total = 0
        for i, c in counts.items():
            for _ in range(c):
                self.add(i)

    def add(self, i):
        if i < len(self.dense):
            self.dense[i] += 1
        else:
            self.overflow[i] = self.overflow.get(i, 0) + 1
        self.total += 1

    def remove(self, i):
        if i < len(self.dense):
            self.dense[i] -= 1
        else:
            self.overflow[i] -= 1
            if not self.overflow[i]:
                del self.overflow[i]
        self.total -= 1

    def pick(self, target):
        """Type of the spreader at position `target` in [0, total)."""
        acc = 0
        for i, c in enumerate(self.dense):
            acc += c
            if target < acc:
                return i
        for i in sorted(self.overflow):
            acc += self.overflow[i]
            if target < acc:
                return i
        # u * total can round up to total
        return max(self.as_dict())

    def as_dict(self):
        counts = {i: c for i, c in enumerate(self.dense) if c}
        counts.update(self.overflow)
        return dict(sorted(counts.items()))


def run_full(N, ic, dist, seed, with_clocks=False, replica=0, spreader_type=None, observer=None):
    """Run the type-resolved chain to absorption (no spreaders left).

    `observer(X, counts, Z)` is called after every jump when given.
    """
    rng = replica_rng(seed, replica)
    _, start = init_state(N, ic, dist, rng, spreader_type)
    N = start.N
    X, Z = start.X, start.Z
    types = _TypeCounts(start.Y, config.DENSE_TYPES)
    draws = _Draws(rng, dist)

    clock = 0.0
    transitions = 0
    while types.total > 0:
        if with_clocks:
            clock += draws.exponential() / (N * types.total)
        if draws.uniform() < X / N:
            # spreader meets an ignorant
            X -= 1
            r = draws.stifling()
            if r == 0:
                Z += 1
            else:
                types.add(r)
        else:
            # stifling experience for a uniformly chosen spreader
            i = types.pick(draws.uniform() * types.total)
            types.remove(i)
            if i == 1:
                Z += 1
            else:
                types.add(i - 1)
        transitions += 1
        if observer is not None:
            observer(X, types.as_dict(), Z)

    return SimulationOutcome(
        final_ignorants=X,
        transitions=transitions,
        seed=int(seed),
        N=N,
        initial_ignorants=start.X,
        replica=replica,
        absorption_time=clock if with_clocks else None,
    )


# --- Sample paths ---
def sample_path(N, ic, dist, seed, t_grid, replica=0, spreader_type=None):
    """Time-changed reduced chain scaled by N, read off on `t_grid`."""
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    rng = replica_rng(seed, replica)
    start, _ = init_state(N, ic, dist, rng, spreader_type)
    X, W, N = start.X, start.W, start.N
    draws = _Draws(rng, dist)

    xs = np.empty_like(t_grid)
    ws = np.empty_like(t_grid)
    g = 0
    clock = 0.0
    while W > 0 and g < t_grid.size:
        clock += draws.exponential() / N
        while g < t_grid.size and t_grid[g] < clock:
            xs[g], ws[g] = X, W
            g += 1
        if draws.uniform() < X / N:
            X -= 1
            W += draws.stifling()
        else:
            W -= 1
    xs[g:], ws[g:] = X, W
    return pd.DataFrame({"t": t_grid, "x": xs / N, "w": ws / N})


# --- Replicas ---
ENGINES = {"reduced": run_reduced, "full": run_full, "path": sample_path}


def run_replicas(engine, N, ic, dist, seed, M, threads=None, progress=False, first_replica=0, **kwargs):
    """M independent runs, returned in replica order whatever the thread count."""
    if engine not in ENGINES:
        raise ValueError(f"Unknown engine {engine!r}; expected one of {sorted(ENGINES)}")
    run = ENGINES[engine]
    threads = threads or config.DEFAULT_THREADS
    ids = range(first_replica, first_replica + M)
    replicas = tqdm(ids, desc=f"{engine} N={N}", disable=not progress, leave=False)
    logger.debug(f"Running {M} {engine} replicas at N={N} on {threads} worker(s)")
    if threads == 1:
        return [run(N, ic, dist, seed, replica=r, **kwargs) for r in replicas]
    return Parallel(n_jobs=threads, backend="loky")(
        delayed(run)(N, ic, dist, seed, replica=r, **kwargs) for r in replicas
    )
