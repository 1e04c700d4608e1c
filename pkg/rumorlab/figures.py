import logging

import numpy as np
import pandas as pd

from rumorlab.analytic import analyze_distribution, classify_case, f_profile, limit_fraction
from rumorlab.stifling import Constant, Geometric, Poisson

logger = logging.getLogger(__name__)

TABLE_FAMILIES = {
    "kappa": (Constant, list(range(1, 9))),
    "geometric": (Geometric, [round(0.1 * k, 1) for k in range(1, 10)]),
    "poisson": (Poisson, [round(0.1 + 0.2 * k, 1) for k in range(10)]),
}

DEFAULT_MU_GRID = np.round(np.linspace(0.05, 8.0, 160), 6)


def table_frame(families=None):
    """x_inf and sigma2 from the classical start for each tabulated law."""
    rows = []
    for family in families or TABLE_FAMILIES:
        law, parameters = TABLE_FAMILIES[family]
        for parameter in parameters:
            result = analyze_distribution(law(parameter))
            rows.append({
                "family": family,
                "parameter": parameter,
                "x_inf": result.x_inf,
                "sigma2": result.sigma2 if result.clt_holds else np.nan,
            })
    logger.info(f"Computed {len(rows)} table rows")
    return pd.DataFrame(rows, columns=["family", "parameter", "x_inf", "sigma2"])


def curve_frame(mu_grid=None, x0=1.0, w0=0.0):
    """x_inf as a function of mu."""
    mu_grid = DEFAULT_MU_GRID if mu_grid is None else np.asarray(mu_grid, dtype=float)
    xs = [limit_fraction(mu, x0, w0) for mu in mu_grid]
    return pd.DataFrame({"mu": mu_grid, "x_inf": xs})


def fprofile_frame(mu, x0=1.0, w0=0.0, grid_size=200):
    frame = f_profile(mu, x0, w0, grid_size)
    frame["case"] = classify_case(mu, x0, w0).value
    return frame
