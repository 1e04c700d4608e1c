"""Closed-form limits of the rumour process with random stifling.

Everything here is a pure function of (mu, nu2, x0, w0): the limiting
ignorant fraction x_inf, the CLT variance sigma2, the stopping time t_inf
of the fluid limit, the fluid trajectory itself and the covariance of the
Gaussian fluctuation at t_inf.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
import pandas as pd
import scipy.integrate
import scipy.optimize

from rumorlab.errors import AnalyticDomainError, InitialConditionError

logger = logging.getLogger(__name__)

INV_E = math.exp(-1.0)
LAMBERT_MAX_ITER = 50
LAMBERT_TOL = 1e-15
ROOT_AGREEMENT = 1e-10
ASSEMBLY_TOL = 1e-9
BISECTION_STEPS = 200
SUM_TOL = 1e-12


class Case(str, Enum):
    """The cells of the (w0, x0) classification of f."""

    W0_POSITIVE = "W0_POSITIVE"
    W0_ZERO_SUPERCRITICAL = "W0_ZERO_SUPERCRITICAL"
    W0_ZERO_CRITICAL_OR_SUB = "W0_ZERO_CRITICAL_OR_SUB"


@dataclass(frozen=True)
class CltViolation:
    """Marker returned instead of sigma2 when the CLT hypotheses fail."""

    reason: str

    def __bool__(self):
        return False


def is_violation(value):
    return isinstance(value, CltViolation)


@dataclass(frozen=True)
class InitialCondition:
    """Limiting initial proportions of ignorants, spreaders by type and stiflers.

    `y0` maps a spreader type i >= 1 to its proportion. Without `y0` and with
    w0 = 0 the start is the one-spreader start: the simulator places a single
    spreader and the stiflers take up the rest. Without `y0` and with w0 > 0
    all spreaders are of type 1.
    """

    x0: float = 1.0
    w0: float = None
    y0: dict = None
    z0: float = None

    def __post_init__(self):
        x0 = float(self.x0)
        if not 0.0 < x0 <= 1.0:
            raise InitialConditionError(f"x0 must lie in (0, 1], got {x0}")

        given = self.y0 is not None
        y0 = dict(self.y0) if given else None
        w0 = self.w0

        if y0 is None and w0 is not None and w0 > 0:
            y0 = {1: float(w0)}

        if y0 is not None:
            for i, y in y0.items():
                if int(i) != i or i < 1:
                    raise InitialConditionError(f"Spreader types are integers >= 1, got {i!r}")
                if y < 0:
                    raise InitialConditionError(f"Spreader proportion for type {i} is negative: {y}")
            y0 = {int(i): float(y) for i, y in sorted(y0.items()) if y > 0}
            computed_w0 = math.fsum(i * y for i, y in y0.items())
            if w0 is not None and abs(w0 - computed_w0) > SUM_TOL:
                raise InitialConditionError(f"w0={w0} disagrees with sum(i * y_i0)={computed_w0}")
            w0 = computed_w0
            spreaders = math.fsum(y0.values())
        else:
            w0 = 0.0 if w0 is None else float(w0)
            spreaders = 0.0

        if w0 < 0 or math.isinf(w0) or math.isnan(w0):
            raise InitialConditionError(f"w0 must be a finite nonnegative real, got {w0}")

        z0 = self.z0
        if z0 is None:
            z0 = max(0.0, 1.0 - x0 - spreaders)
        if x0 + spreaders > 1.0 + SUM_TOL:
            raise InitialConditionError(
                f"x0 + sum(y_i0) = {x0 + spreaders} exceeds 1; lower x0 or w0"
            )
        if z0 < 0:
            raise InitialConditionError(f"z0 must be nonnegative, got {z0}")
        if given and abs(x0 + spreaders + z0 - 1.0) > SUM_TOL:
            raise InitialConditionError(f"x0 + sum(y_i0) + z0 = {x0 + spreaders + z0}, not 1")

        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "w0", float(w0))
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "z0", float(z0))

    @classmethod
    def classical(cls):
        """One spreader and N ignorants."""
        return cls(1.0, 0.0)

    @property
    def degenerate(self):
        """True when no spreader mass survives the limit (w0 = 0)."""
        return self.y0 is None

    def to_dict(self):
        return {"x0": self.x0, "w0": self.w0, "y0": self.y0, "z0": self.z0}


@dataclass(frozen=True)
class CovarianceResult:
    var_ux: float
    var_uw: float
    cov_uxuw: float
    sigma2: object = None
    assembly_gap: float = 0.0

    @property
    def determinant(self):
        return self.var_ux * self.var_uw - self.cov_uxuw**2

    @property
    def consistent(self):
        """Assembled and direct sigma2 agree."""
        return self.assembly_gap <= ASSEMBLY_TOL * max(1.0, abs(self.sigma2 or 0.0))


@dataclass(frozen=True)
class AnalyticResult:
    mu: float
    nu2: float
    x0: float
    w0: float
    x_inf: float
    sigma2: object
    t_inf: float
    case: Case
    root_flag: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def clt_holds(self):
        return not is_violation(self.sigma2)

    def to_dict(self):
        record = asdict(self)
        record["case"] = self.case.value
        record["sigma2"] = None if is_violation(self.sigma2) else self.sigma2
        record["clt"] = "violated" if is_violation(self.sigma2) else "ok"
        if is_violation(self.sigma2):
            record["clt_reason"] = self.sigma2.reason
        record.pop("extras")
        return record


# --- Lambert W ---
def lambert_w0(v):
    """Principal branch W0 of the inverse of w * exp(w), by Halley iteration."""
    v = float(v)
    if math.isnan(v) or v < -INV_E - 1e-15:
        raise AnalyticDomainError(f"Lambert W0 is undefined below -1/e, got {v}")
    if v == 0.0:
        return 0.0
    if math.isinf(v):
        return math.inf

    p2 = 2.0 * (math.e * v + 1.0)
    if p2 <= 0.0:
        return -1.0
    p = math.sqrt(p2)

    # Branch-point series, good to ~1e-16 for small p
    if p < 1e-3:
        return -1.0 + p - p**2 / 3.0 + 11.0 / 72.0 * p**3 - 43.0 / 540.0 * p**4 + 769.0 / 17280.0 * p**5

    if v < -0.25:
        w = -1.0 + p - p**2 / 3.0 + 11.0 / 72.0 * p**3
    elif v < 3.0:
        lv = math.log1p(v)
        w = lv * (1.0 - math.log1p(lv) / (2.0 + lv))
    else:
        l1 = math.log(v)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(LAMBERT_MAX_ITER):
        ew = math.exp(w)
        residual = w * ew - v
        w1 = w + 1.0
        if w1 == 0.0:
            break
        denom = ew * w1 - (w + 2.0) * residual / (2.0 * w1)
        if denom == 0.0:
            break
        dw = residual / denom
        w -= dw
        if abs(dw) <= LAMBERT_TOL * (1.0 + abs(w)):
            break
    return max(w, -1.0)


# --- The function f and its root ---
def _check_mu(mu, allow_infinite=False):
    if math.isnan(mu) or mu <= 0:
        raise AnalyticDomainError(f"mu = E[R] must be positive, got {mu}")
    if math.isinf(mu) and not allow_infinite:
        raise AnalyticDomainError("mu must be finite here")


def _check_start(x0, w0):
    if not 0.0 < x0 <= 1.0:
        raise AnalyticDomainError(f"x0 must lie in (0, 1], got {x0}")
    if w0 < 0 or math.isinf(w0):
        raise AnalyticDomainError(f"w0 must be finite and nonnegative, got {w0}")


def _critical_or_sub(mu, x0):
    return x0 * (1.0 + mu) <= 1.0


def f_eval(x, mu, x0=1.0, w0=0.0):
    """f(x) = w0 + (1 + mu)(x0 - x) + log(x / x0) on (0, x0]."""
    _check_mu(mu)
    if not 0.0 < x <= x0:
        raise AnalyticDomainError(f"f is defined on (0, x0] = (0, {x0}], got x={x}")
    return w0 + (1.0 + mu) * (x0 - x) + math.log(x / x0)


def f_prime(x, mu):
    return -(1.0 + mu) + 1.0 / x


def _lambert_root(mu, x0, w0):
    a = x0 * (1.0 + mu)
    v = -a * math.exp(-a - w0)
    return -lambert_w0(v) / (1.0 + mu)


def _bracketed_root(mu, x0, w0):
    """Bisection on the increasing branch of f, then a Newton polish."""
    hi = min(x0, 1.0 / (1.0 + mu))
    lo = max(1e-300, x0 * 1e-12)

    def f(x):
        return w0 + (1.0 + mu) * (x0 - x) + math.log(x / x0)

    if f(lo) > 0.0:
        lo = 1e-300
        if f(lo) > 0.0:
            return lo
    if f(hi) <= 0.0:
        return hi

    root = scipy.optimize.bisect(f, lo, hi, xtol=1e-300, maxiter=BISECTION_STEPS, disp=False)
    try:
        polished = scipy.optimize.newton(f, root, fprime=lambda x: f_prime(x, mu), tol=1e-16, maxiter=20, disp=False)
    except (ArithmeticError, ValueError, RuntimeError):
        return root
    polished = float(polished)
    if not lo <= polished <= hi or abs(f(polished)) > abs(f(root)):
        return root
    return polished


def _limit_fraction_checked(mu, x0, w0):
    _check_mu(mu, allow_infinite=True)
    _check_start(x0, w0)
    if math.isinf(mu):
        return 0.0, False
    if w0 == 0.0 and _critical_or_sub(mu, x0):
        return float(x0), False

    via_lambert = _lambert_root(mu, x0, w0)
    via_bracket = _bracketed_root(mu, x0, w0)
    if abs(via_lambert - via_bracket) > ROOT_AGREEMENT:
        logger.warning(
            f"Root routes disagree for mu={mu}, x0={x0}, w0={w0}: "
            f"lambert={via_lambert!r}, bracket={via_bracket!r}; keeping the smaller root"
        )
        return min(via_lambert, via_bracket), True
    return via_lambert, False


def limit_fraction(mu, x0=1.0, w0=0.0):
    """Limiting fraction x_inf of ignorants; 0 when mu is infinite."""
    return _limit_fraction_checked(mu, x0, w0)[0]


def clt_variance(mu, nu2, x0=1.0, w0=0.0):
    """Variance of the Gaussian limit of sqrt(N)(X/N - x_inf), or a CltViolation."""
    if math.isinf(nu2) or math.isnan(nu2):
        raise AnalyticDomainError("The CLT needs a finite variance of R")
    _check_mu(mu)
    _check_start(x0, w0)
    if w0 == 0.0 and _critical_or_sub(mu, x0):
        return CltViolation(f"w0 = 0 and x0 = {x0} <= 1/(1 + mu) = {1.0 / (1.0 + mu)}")

    x = limit_fraction(mu, x0, w0)
    numerator = x * (1.0 - (1.0 / x0 + w0 + (x0 - x) * (1.0 + mu - nu2)) * x)
    return numerator / (1.0 - (1.0 + mu) * x) ** 2


def stop_time(mu, x0=1.0, w0=0.0):
    """t_inf = w0 + (1 + mu)(x0 - x_inf), the time the fluid w(t) reaches 0."""
    _check_mu(mu)
    x = limit_fraction(mu, x0, w0)
    return w0 + (1.0 + mu) * (x0 - x)


def trajectory(mu, x0, w0, t):
    """Fluid limit (x(t), w(t)); accepts scalars or numpy arrays of times."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise AnalyticDomainError("trajectory needs t >= 0")
    x = x0 * np.exp(-t_arr)
    w = w0 + (1.0 + mu) * (x0 - x) - t_arr
    if np.ndim(t) == 0:
        return float(x), float(w)
    return x, w


# --- Gaussian fluctuation at t_inf ---
def drift(mu, x, w):
    return -x, (mu + 1.0) * x - 1.0


def drift_jacobian(mu):
    return np.array([[-1.0, 0.0], [mu + 1.0, 0.0]])


def diffusion_matrix(mu, nu2, x):
    return np.array([[x, -mu * x], [-mu * x, (nu2 + mu**2 - 1.0) * x + 1.0]])


def propagator(mu, t, s):
    decay = math.exp(-(t - s))
    return np.array([[decay, 0.0], [(mu + 1.0) * (1.0 - decay), 1.0]])


def covariance_by_quadrature(mu, nu2, x0=1.0, w0=0.0, t=None):
    """Integral of Phi(t,s) G(x(s)) Phi(t,s)^T over [0, t]; t defaults to t_inf."""
    if t is None:
        t = stop_time(mu, x0, w0)
    if t == 0:
        return np.zeros((2, 2))

    def integrand(s):
        phi = propagator(mu, t, s)
        return phi @ diffusion_matrix(mu, nu2, x0 * math.exp(-s)) @ phi.T

    result, _ = scipy.integrate.quad_vec(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-12)
    return result


def covariance_at_stop(mu, nu2, x0=1.0, w0=0.0):
    """Closed-form Cov(U(t_inf), U(t_inf)) and the sigma2 assembled from it."""
    if math.isinf(nu2):
        raise AnalyticDomainError("The covariance needs a finite variance of R")
    x = limit_fraction(mu, x0, w0)
    t = stop_time(mu, x0, w0)
    a = mu + 1.0
    spread = (x0 - x) * x / x0

    var_ux = spread
    var_uw = a**2 * spread + nu2 * (x0 - x) + (1.0 - 2.0 * a * x) * t
    cov = t * x - a * spread
    if t == 0.0:
        var_ux = var_uw = cov = 0.0

    direct = clt_variance(mu, nu2, x0, w0)
    if is_violation(direct):
        return CovarianceResult(var_ux, var_uw, cov, direct)

    c = x / (a * x - 1.0)
    assembled = var_ux + 2.0 * c * cov + c**2 * var_uw
    gap = abs(assembled - direct)
    if gap > ASSEMBLY_TOL * max(1.0, abs(direct)):
        logger.warning(f"Assembled sigma2={assembled!r} differs from direct sigma2={direct!r}")
    return CovarianceResult(var_ux, var_uw, cov, assembled, gap)


# --- Classification and profiles ---
def classify_case(mu, x0=1.0, w0=0.0):
    _check_mu(mu, allow_infinite=True)
    if w0 > 0.0:
        return Case.W0_POSITIVE
    if _critical_or_sub(mu, x0):
        return Case.W0_ZERO_CRITICAL_OR_SUB
    return Case.W0_ZERO_SUPERCRITICAL


def f_profile(mu, x0=1.0, w0=0.0, grid_size=200):
    """f sampled on (x0 * 1e-4, x0] with the x_inf row marked."""
    _check_mu(mu)
    xs = np.linspace(x0 * 1e-4, x0, grid_size)
    root = limit_fraction(mu, x0, w0)
    xs = np.unique(np.append(xs, root))
    fs = w0 + (1.0 + mu) * (x0 - xs) + np.log(xs / x0)
    return pd.DataFrame({"x": xs, "f": fs, "is_root": xs == root})


def analyze(mu, nu2, x0=1.0, w0=0.0):
    """Bundle x_inf, sigma2 (or the violation marker), t_inf and the case."""
    x, flag = _limit_fraction_checked(mu, x0, w0)
    if math.isinf(nu2):
        sigma2 = CltViolation("variance of R is infinite")
    else:
        sigma2 = clt_variance(mu, nu2, x0, w0)
    t = math.inf if math.isinf(mu) else w0 + (1.0 + mu) * (x0 - x)
    result = AnalyticResult(mu, nu2, x0, w0, x, sigma2, t, classify_case(mu, x0, w0), flag)
    logger.debug(f"Analytic result: {result}")
    return result


def analyze_distribution(dist, ic=None):
    ic = ic or InitialCondition.classical()
    mu, nu2 = dist.moments()
    return analyze(mu, nu2, ic.x0, ic.w0)
