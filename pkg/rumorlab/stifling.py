"""Laws of the stifling count R: how many stifling experiences a new spreader gets."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special
import scipy.stats

from rumorlab.errors import DistributionError

logger = logging.getLogger(__name__)

PMF_SUM_TOLERANCE = 1e-9
TAIL_FLOOR = 1e-15
MAX_ORDER_CHECK = 100_000


class StiflingDistribution:
    """Base class for every law of R.

    Subclasses are immutable. Sampling always takes an externally owned
    numpy Generator so replicas never share a stream.
    """

    kind = "abstract"

    # --- Probabilities ---
    def pmf(self, i):
        raise NotImplementedError

    def tail(self, i):
        """P(R >= i)."""
        raise NotImplementedError

    def pmf_table(self, upto):
        """Array of r_0..r_upto."""
        return np.array([self.pmf(i) for i in range(upto + 1)], dtype=float)

    # --- Moments ---
    def moments(self):
        raise NotImplementedError

    @property
    def mu(self):
        return self.moments()[0]

    @property
    def nu2(self):
        return self.moments()[1]

    @property
    def max_support(self):
        """Largest value with positive mass, or None for unbounded support."""
        return None

    # --- Sampling ---
    def sample(self, rng):
        return int(self.sample_many(rng, 1)[0])

    def sample_many(self, rng, size):
        raise NotImplementedError

    def sample_positive(self, rng):
        """One draw of R conditioned on R >= 1."""
        if self.tail(1) <= 0.0:
            raise DistributionError(f"{self.spec} puts no mass on R >= 1")
        while True:
            draws = self.sample_many(rng, 16)
            positive = draws[draws >= 1]
            if positive.size:
                return int(positive[0])

    def truncate(self, k):
        """Law of R_k: mass above k folded onto k."""
        if int(k) != k or k < 1:
            raise DistributionError(f"Truncation level must be a positive integer, got {k}")
        k = int(k)
        table = {i: float(self.pmf(i)) for i in range(k)}
        table[k] = float(self.tail(k))
        return Explicit({i: r for i, r in table.items() if r > 0.0})

    @property
    def spec(self):
        raise NotImplementedError

    def __str__(self):
        return self.spec


@dataclass(frozen=True)
class Constant(StiflingDistribution):
    """R = kappa with probability one (the kappa-fold stifling model)."""

    kappa: int
    kind = "constant"

    def __post_init__(self):
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise DistributionError(f"Constant stifling count must be a positive integer, got {self.kappa}")
        object.__setattr__(self, "kappa", int(self.kappa))

    def pmf(self, i):
        return 1.0 if i == self.kappa else 0.0

    def tail(self, i):
        return 1.0 if i <= self.kappa else 0.0

    def moments(self):
        return float(self.kappa), 0.0

    @property
    def max_support(self):
        return self.kappa

    def sample_many(self, rng, size):
        return np.full(size, self.kappa, dtype=np.int64)

    def sample_positive(self, rng):
        return self.kappa

    @property
    def spec(self):
        return f"constant:{self.kappa}"


@dataclass(frozen=True)
class Geometric(StiflingDistribution):
    """r_i = p (1 - p)^(i - 1) for i >= 1; r_0 = 0."""

    p: float
    kind = "geometric"
    _law: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise DistributionError(f"Geometric probability must lie in (0, 1], got {self.p}")
        object.__setattr__(self, "_law", scipy.stats.geom(self.p))

    def pmf(self, i):
        return float(self._law.pmf(i))

    def tail(self, i):
        if i <= 1:
            return 1.0
        return float(self._law.sf(i - 1))

    def moments(self):
        return 1.0 / self.p, (1.0 - self.p) / self.p**2

    @property
    def max_support(self):
        return 1 if self.p == 1.0 else None

    def sample_many(self, rng, size):
        return np.asarray(self._law.rvs(size=size, random_state=rng), dtype=np.int64)

    @property
    def spec(self):
        return f"geometric:{self.p!r}"


@dataclass(frozen=True)
class Poisson(StiflingDistribution):
    """R ~ Poisson(lam); R = 0 makes the hearer a stifler at once."""

    lam: float
    kind = "poisson"
    _law: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lam > 0.0 or math.isinf(self.lam):
            raise DistributionError(f"Poisson rate must be a positive real, got {self.lam}")
        object.__setattr__(self, "_law", scipy.stats.poisson(self.lam))

    def pmf(self, i):
        if i < 0:
            return 0.0
        # log-space keeps large rates finite
        return float(np.exp(self._law.logpmf(i)))

    def tail(self, i):
        if i <= 0:
            return 1.0
        return float(self._law.sf(i - 1))

    def moments(self):
        return float(self.lam), float(self.lam)

    def sample_many(self, rng, size):
        return np.asarray(self._law.rvs(size=size, random_state=rng), dtype=np.int64)

    @property
    def spec(self):
        return f"poisson:{self.lam!r}"


@dataclass(frozen=True)
class ZetaTail(StiflingDistribution):
    """r_i proportional to i^(-s) for i >= 1. Infinite mean when s <= 2."""

    s: float
    kind = "zeta"
    _law: object = field(init=False, repr=False, compare=False)
    _norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.s > 1.0 or math.isinf(self.s):
            raise DistributionError(f"Zeta exponent must be a real greater than 1, got {self.s}")
        object.__setattr__(self, "_law", scipy.stats.zipf(self.s))
        object.__setattr__(self, "_norm", float(scipy.special.zeta(self.s)))

    def pmf(self, i):
        if i < 1:
            return 0.0
        return float(i ** (-self.s) / self._norm)

    def tail(self, i):
        if i <= 1:
            return 1.0
        # Hurwitz zeta: sum over j >= i of j^(-s)
        return float(scipy.special.zeta(self.s, i) / self._norm)

    def moments(self):
        mu = math.inf if self.s <= 2.0 else float(scipy.special.zeta(self.s - 1.0)) / self._norm
        if self.s <= 3.0:
            return mu, math.inf
        second = float(scipy.special.zeta(self.s - 2.0)) / self._norm
        return mu, second - mu * mu

    def sample_many(self, rng, size):
        return np.asarray(self._law.rvs(size=size, random_state=rng), dtype=np.int64)

    @property
    def spec(self):
        return f"zeta:{self.s!r}"


@dataclass(frozen=True, eq=False)
class Explicit(StiflingDistribution):
    """Finite pmf {i: r_i}, normalized at construction."""

    table: dict
    kind = "pmf"
    _law: object = field(init=False, repr=False)
    _values: np.ndarray = field(init=False, repr=False)
    _masses: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.table:
            raise DistributionError("Explicit pmf is empty")
        cleaned = {}
        for key, value in self.table.items():
            if int(key) != key or key < 0:
                raise DistributionError(f"pmf support must be nonnegative integers, got {key!r}")
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise DistributionError(f"pmf value for {key} must lie in [0, 1], got {value}")
            cleaned[int(key)] = cleaned.get(int(key), 0.0) + value

        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > PMF_SUM_TOLERANCE:
            raise DistributionError(f"pmf sums to {total!r}, not 1")
        cleaned = {i: r / total for i, r in sorted(cleaned.items()) if r > 0.0}

        mu = math.fsum(i * r for i, r in cleaned.items())
        if mu <= 0.0:
            raise DistributionError("Stifling law must have a positive mean; this pmf is a point mass at 0")

        values = np.fromiter(cleaned.keys(), dtype=np.int64)
        masses = np.fromiter(cleaned.values(), dtype=float)
        object.__setattr__(self, "table", cleaned)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_masses", masses)
        object.__setattr__(self, "_law", scipy.stats.rv_discrete(values=(values, masses)))

    def __eq__(self, other):
        return isinstance(other, Explicit) and self.table == other.table

    def __hash__(self):
        return hash(tuple(self.table.items()))

    def pmf(self, i):
        return self.table.get(i, 0.0)

    def tail(self, i):
        return min(1.0, math.fsum(r for j, r in self.table.items() if j >= i))

    def moments(self):
        mu = math.fsum(i * r for i, r in self.table.items())
        nu2 = math.fsum((i - mu) ** 2 * r for i, r in self.table.items())
        return mu, nu2

    @property
    def max_support(self):
        return int(self._values[-1])

    def sample_many(self, rng, size):
        # inverse transform on the cumulative table
        return np.asarray(self._law.rvs(size=size, random_state=rng), dtype=np.int64)

    @property
    def spec(self):
        return "pmf:" + ",".join(f"{i}={r!r}" for i, r in self.table.items())


# --- Module-level operations ---
def pmf(dist, i):
    return dist.pmf(i)


def moments(dist):
    return dist.moments()


def sample(dist, rng):
    return dist.sample(rng)


def truncate(dist, k):
    return dist.truncate(k)


def stochastically_le(low, high, upto=None):
    """True when P(low >= i) <= P(high >= i) for every i >= 1."""
    if upto is None:
        bounds = [d.max_support for d in (low, high)]
        upto = max(bounds) if None not in bounds else None
    i = 1
    while True:
        a, b = low.tail(i), high.tail(i)
        if a > b + 1e-12:
            logger.debug(f"Stochastic order fails at i={i}: {a} > {b}")
            return False
        if a == 0.0:
            return True
        if upto is not None and i >= upto:
            return True
        if upto is None and max(a, b) < TAIL_FLOOR:
            return True
        if i >= MAX_ORDER_CHECK:
            logger.warning(
                f"Stochastic order of {low.spec} and {high.spec} checked up to i={i} only; "
                f"tails are still {a:.3g} and {b:.3g}"
            )
            return True
        i += 1


_PARSERS = {
    "constant": lambda arg: Constant(int(arg)),
    "geometric": lambda arg: Geometric(float(arg)),
    "poisson": lambda arg: Poisson(float(arg)),
    "zeta": lambda arg: ZetaTail(float(arg)),
}


def parse_distribution(text):
    """Parse `constant:K`, `geometric:P`, `poisson:L`, `zeta:S` or `pmf:0=0.1,1=0.9`."""
    if not text or ":" not in text:
        raise DistributionError(
            f"Distribution spec {text!r} must look like family:parameter "
            "(constant:K, geometric:P, poisson:L, zeta:S, pmf:i=r,...)"
        )
    family, _, arg = text.partition(":")
    family = family.strip().lower()
    arg = arg.strip()

    if family == "pmf":
        table = {}
        for item in arg.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise DistributionError(f"pmf entry {item!r} must look like i=r")
            try:
                table[int(key)] = float(value)
            except ValueError as e:
                raise DistributionError(f"pmf entry {item!r} is not numeric") from e
        return Explicit(table)

    parser = _PARSERS.get(family)
    if parser is None:
        raise DistributionError(f"Unknown distribution family {family!r}; expected one of {sorted(_PARSERS) + ['pmf']}")
    try:
        return parser(arg)
    except ValueError as e:
        if isinstance(e, DistributionError):
            raise
        raise DistributionError(f"Bad parameter {arg!r} for {family}: {e}") from e
