import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Load overrides from .env
load_dotenv()


def _env(name, default, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError as e:
        raise ValueError(f"{name} has an invalid value {raw!r}: {e}") from e


# Run defaults
DEFAULT_SEED = _env("RUMOR_LAB_SEED", 20240417, int)
DEFAULT_THREADS = _env("RUMOR_LAB_THREADS", 1, int)
LOG_LEVEL = _env("RUMOR_LAB_LOG_LEVEL", "INFO", str).upper()
CSV_DIGITS = _env("RUMOR_LAB_DIGITS", 6, int)

# Pass/fail bands
LLN_C = _env("RUMOR_LAB_LLN_C", 2.0, float)
CLT_VARIANCE_TOL = _env("RUMOR_LAB_CLT_VARIANCE_TOL", 0.15, float)
KS_SLACK = _env("RUMOR_LAB_KS_SLACK", 1.5, float)
KS_COEFF = _env("RUMOR_LAB_KS_COEFF", 1.63, float)
TRANSITIONS_TOL = _env("RUMOR_LAB_TRANSITIONS_TOL", 0.02, float)
MUINF_CEILING = _env("RUMOR_LAB_MUINF_CEILING", 0.05, float)
FLUID_C = _env("RUMOR_LAB_FLUID_C", 3.0, float)

# Engine limits
ORACLE_STATE_CAP = _env("RUMOR_LAB_ORACLE_STATE_CAP", 5_000_000, int)
DENSE_TYPES = _env("RUMOR_LAB_DENSE_TYPES", 64, int)


@dataclass(frozen=True)
class Tolerances:
    """Pass/fail thresholds for the Monte Carlo checks."""

    lln_c: float = LLN_C
    clt_variance_tol: float = CLT_VARIANCE_TOL
    ks_slack: float = KS_SLACK
    ks_coeff: float = KS_COEFF
    transitions_tol: float = TRANSITIONS_TOL
    muinf_ceiling: float = MUINF_CEILING
    fluid_c: float = FLUID_C
    se_multiplier: float = 3.0
