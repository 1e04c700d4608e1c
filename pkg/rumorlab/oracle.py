"""Exact law of the final ignorant count for small populations.

Forward dynamic programming over the reduced (X, W) chain. Mass is pushed
level by level in X (descending); inside a level the W -> W - 1 moves form
a geometric leak that is a first-order recursive filter, and the contact
move is a convolution with the pmf of R.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.signal

from rumorlab import config
from rumorlab.analytic import InitialCondition
from rumorlab.errors import OracleError
from rumorlab.sim import init_state

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinalDistribution:
    N: int
    probabilities: dict
    mean: float
    mean_transitions: float

    @property
    def total_mass(self):
        return float(sum(self.probabilities.values()))

    def pmf_array(self, size=None):
        size = size or (max(self.probabilities) + 1)
        out = np.zeros(size)
        for x, p in self.probabilities.items():
            out[x] = p
        return out

    def to_frame(self):
        rows = sorted(self.probabilities.items())
        return pd.DataFrame(rows, columns=["final_x", "probability"])


def _push_levels(X0, W0, N, pmf, state_cap):
    """Absorbed mass per final X plus the expected number of jumps."""
    max_r = pmf.size - 1
    w_max = W0 + max_r * X0
    if (X0 + 1) * (w_max + 1) > state_cap:
        raise OracleError(
            f"State space {(X0 + 1)} x {(w_max + 1)} exceeds the cap {state_cap}; "
            f"lower N or raise RUMOR_LAB_ORACLE_STATE_CAP"
        )

    absorbed = np.zeros(X0 + 1)
    occupation = 0.0
    inflow = np.zeros(w_max + 1)
    inflow[W0] = 1.0

    for X in range(X0, -1, -1):
        leak = (N - X) / N
        # occupation m[W] = inflow[W] + leak * m[W + 1], swept from the top
        mass = scipy.signal.lfilter([1.0], [1.0, -leak], inflow[::-1])[::-1]
        mass[0] = 0.0
        occupation += mass[1:].sum()
        absorbed[X] = leak * mass[1]
        if X == 0:
            break
        contact = mass * (X / N)
        inflow = np.convolve(contact, pmf)[: w_max + 1]

    return absorbed, occupation


def exact_final_distribution(N, ic, dist, state_cap=None, spreader_type=None):
    """Exact law of X at absorption for a finite-support stifling law."""
    ic = ic or InitialCondition.classical()
    if dist.max_support is None:
        raise OracleError(
            f"{dist.spec} has unbounded support; pass dist.truncate(k) for an exact answer"
        )
    state_cap = state_cap or config.ORACLE_STATE_CAP

    if ic.y0 is None and spreader_type is None:
        # mix over the type of the single starting spreader
        positive = dist.tail(1)
        starts = {i: dist.pmf(i) / positive for i in range(1, dist.max_support + 1) if dist.pmf(i) > 0}
    else:
        starts = {spreader_type: 1.0}

    pmf = dist.pmf_table(dist.max_support)
    absorbed = None
    occupation = 0.0
    for spreader, weight in starts.items():
        start, _ = init_state(N, ic, dist, spreader_type=spreader)
        part, jumps = _push_levels(start.X, start.W, start.N, pmf, state_cap)
        absorbed = weight * part if absorbed is None else absorbed + weight * part
        occupation += weight * jumps

    total = absorbed.sum()
    if abs(total - 1.0) > 1e-9:
        logger.warning(f"Oracle mass at N={N} sums to {total!r}")
    probabilities = {x: float(p) for x, p in enumerate(absorbed) if p > 0.0}
    mean = float(np.dot(np.arange(absorbed.size), absorbed))
    logger.debug(f"Oracle N={N}: mean final X={mean}, mean jumps={occupation}")
    return FinalDistribution(int(N), probabilities, mean, float(occupation))


def exact_mean_ignorants(N, ic, dist, **kwargs):
    return exact_final_distribution(N, ic, dist, **kwargs).mean


def total_variation(exact, samples):
    """TV distance between a FinalDistribution and observed final counts."""
    samples = np.asarray(samples, dtype=np.int64)
    size = max(max(exact.probabilities) + 1, int(samples.max()) + 1)
    empirical = np.bincount(samples, minlength=size) / samples.size
    return 0.5 * float(np.abs(exact.pmf_array(size) - empirical).sum())
