"""Command-line front end: `rumorlab COMMAND [options]`."""

import logging
import sys
from dataclasses import dataclass, field

import click
import numpy as np
import pandas as pd

from rumorlab import config
from rumorlab.analytic import InitialCondition, analyze, covariance_at_stop, is_violation, stop_time
from rumorlab.errors import DistributionError, InitialConditionError, RumorLabError
from rumorlab.experiments import (
    dump_standardized_samples,
    mc_clt,
    mc_fluid,
    mc_lln,
    mc_monotone,
    mc_mu_infinity,
    mc_transitions,
)
from rumorlab.figures import curve_frame, fprofile_frame, table_frame
from rumorlab.oracle import exact_final_distribution
from rumorlab.report_handler import FORMATS, save_frame, save_records
from rumorlab.sim import run_replicas, sample_path
from rumorlab.stifling import parse_distribution

logger = logging.getLogger(__name__)

COMMANDS = (
    "analytic", "simulate", "oracle", "lln", "clt", "transitions", "muinf",
    "monotone", "tables", "curve", "fprofile", "fluid", "path",
)
FRAME_COMMANDS = {"oracle", "tables", "curve", "fprofile", "path"}
EXIT_PASS, EXIT_FAIL = 0, 1


class DistributionType(click.ParamType):
    """A stifling law given as `family:parameter`."""

    name = "dist"

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            return parse_distribution(value)
        except DistributionError as e:
            self.fail(str(e), param, ctx)


def _float_list(text, option):
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}", param_hint=option)
    if not values:
        raise click.BadParameter("empty list", param_hint=option)
    return values


def _y0(text):
    if text is None:
        return None
    y0 = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        try:
            y0[int(key)] = float(value)
        except ValueError:
            sep = ""
        if not sep:
            raise click.BadParameter(f"entry {item!r} must look like type=proportion", param_hint="--y0")
    return y0


@dataclass
class RunConfig:
    command: str
    dist: object
    N: int
    M: int
    ic: InitialCondition
    seed: int
    output: str = None
    fmt: str = "json"
    threads: int = 1
    y0_spec: str = None
    dist_high: object = None
    n_grid: list = field(default_factory=list)
    mu_grid: list = None
    mu: float = None
    nu2: float = None
    grid_size: int = 200
    engine: str = "reduced"
    with_clocks: bool = False
    spreader_type: int = None
    truncate: int = None
    t_max: float = None
    samples: str = None
    digits: int = 6
    progress: bool = False
    log_level: str = "INFO"

    @property
    def dist_spec(self):
        return self.dist.spec

    @property
    def x0(self):
        return self.ic.x0

    @property
    def w0(self):
        return self.ic.w0


def _build_config(params):
    try:
        ic = InitialCondition(params["x0"], params["w0"], _y0(params["y0_spec"]))
    except InitialConditionError as e:
        raise click.BadParameter(str(e), param_hint="--x0/--w0/--y0")

    command = params["command"]
    if command == "monotone" and params["dist_high"] is None:
        raise click.UsageError("monotone needs --dist-high")
    if params["spreader_type"] is not None and params["spreader_type"] < 1:
        raise click.BadParameter("spreader types are >= 1", param_hint="--spreader-type")

    fmt = params["fmt"]
    if fmt is None:
        fmt = "csv" if command in FRAME_COMMANDS else "jsonl" if command == "simulate" else "json"

    return RunConfig(
        command=command,
        dist=params["dist"],
        N=params["n"],
        M=params["m"],
        ic=ic,
        seed=params["seed"],
        output=params["output"],
        fmt=fmt,
        threads=params["threads"],
        y0_spec=params["y0_spec"],
        dist_high=params["dist_high"],
        n_grid=[int(n) for n in _float_list(params["n_grid"], "--n-grid")],
        mu_grid=_float_list(params["mu_grid"], "--mu-grid") if params["mu_grid"] else None,
        mu=params["mu"],
        nu2=params["nu2"],
        grid_size=params["grid_size"],
        engine=params["engine"],
        with_clocks=params["with_clocks"],
        spreader_type=params["spreader_type"],
        truncate=params["truncate"],
        t_max=params["t_max"],
        samples=params["samples"],
        digits=params["digits"],
        progress=params["progress"],
        log_level=params["log_level"],
    )


# --- Command handlers ---
def _analytic(cfg):
    mu = cfg.mu if cfg.mu is not None else cfg.dist.mu
    nu2 = cfg.nu2 if cfg.nu2 is not None else cfg.dist.nu2
    result = analyze(mu, nu2, cfg.x0, cfg.w0)
    record = {"dist": cfg.dist_spec, **result.to_dict()}
    if result.clt_holds:
        cov = covariance_at_stop(mu, nu2, cfg.x0, cfg.w0)
        record["covariance"] = {
            "var_ux": cov.var_ux,
            "var_uw": cov.var_uw,
            "cov_uxuw": cov.cov_uxuw,
            "assembly_gap": cov.assembly_gap,
        }
    return record, True


def _simulate(cfg):
    kwargs = {"spreader_type": cfg.spreader_type, "with_clocks": cfg.with_clocks}
    outcomes = run_replicas(cfg.engine, cfg.N, cfg.ic, cfg.dist, cfg.seed, cfg.M, cfg.threads, cfg.progress, **kwargs)
    return [o.to_dict() for o in outcomes], True


def _oracle(cfg):
    dist = cfg.dist.truncate(cfg.truncate) if cfg.truncate else cfg.dist
    exact = exact_final_distribution(cfg.N, cfg.ic, dist, spreader_type=cfg.spreader_type)
    if cfg.fmt == "csv":
        return exact.to_frame(), True
    record = {
        "dist": dist.spec,
        "N": exact.N,
        "mean": exact.mean,
        "mean_transitions": exact.mean_transitions,
        "probabilities": exact.probabilities,
    }
    return record, True


def _experiment(run):
    def handler(cfg):
        report = run(cfg.N, cfg.M, cfg.ic, cfg.dist, cfg.seed, threads=cfg.threads, progress=cfg.progress)
        return report.to_dict(), report.passed
    return handler


def _clt(cfg):
    report = mc_clt(cfg.N, cfg.M, cfg.ic, cfg.dist, cfg.seed, threads=cfg.threads, progress=cfg.progress)
    if is_violation(report):
        return {"experiment": "clt", "clt": "violated", "clt_reason": report.reason}, False
    if cfg.samples:
        status = dump_standardized_samples(report, cfg.samples, cfg.digits)
        if status["status"] != "success":
            raise click.ClickException(status["message"])
    return report.to_dict(), report.passed


def _muinf(cfg):
    reports = mc_mu_infinity(cfg.n_grid, cfg.M, cfg.dist, cfg.seed, cfg.ic, threads=cfg.threads, progress=cfg.progress)
    return [r.to_dict() for r in reports], all(r.passed for r in reports)


def _monotone(cfg):
    report = mc_monotone(
        cfg.N, cfg.M, cfg.dist, cfg.dist_high, cfg.seed, cfg.ic, threads=cfg.threads, progress=cfg.progress
    )
    return report.to_dict(), report.passed


def _tables(cfg):
    return table_frame(), True


def _curve(cfg):
    return curve_frame(cfg.mu_grid, cfg.x0, cfg.w0), True


def _fprofile(cfg):
    mu = cfg.mu if cfg.mu is not None else cfg.dist.mu
    return fprofile_frame(mu, cfg.x0, cfg.w0, cfg.grid_size), True


def _t_grid(cfg):
    t_max = cfg.t_max
    if t_max is None:
        t_max = 1.5 * (stop_time(cfg.dist.mu, cfg.x0, cfg.w0) or 1.0)
    return np.linspace(0.0, t_max, 61)


def _fluid(cfg):
    report = mc_fluid(
        cfg.N, cfg.M, cfg.ic, cfg.dist, cfg.seed, _t_grid(cfg), threads=cfg.threads, progress=cfg.progress
    )
    return report.to_dict(), report.passed


def _path(cfg):
    return sample_path(cfg.N, cfg.ic, cfg.dist, cfg.seed, _t_grid(cfg), spreader_type=cfg.spreader_type), True


HANDLERS = {
    "analytic": _analytic,
    "simulate": _simulate,
    "oracle": _oracle,
    "lln": _experiment(mc_lln),
    "clt": _clt,
    "transitions": _experiment(mc_transitions),
    "muinf": _muinf,
    "monotone": _monotone,
    "tables": _tables,
    "curve": _curve,
    "fprofile": _fprofile,
    "fluid": _fluid,
    "path": _path,
}


def run(cfg):
    """Execute a RunConfig; returns the exit code."""
    try:
        payload, passed = HANDLERS[cfg.command](cfg)
    except RumorLabError as e:
        raise click.UsageError(str(e))

    if isinstance(payload, pd.DataFrame):
        status = save_frame(payload, cfg.output, cfg.fmt, cfg.digits)
    elif cfg.fmt == "csv":
        rows = payload if isinstance(payload, list) else [payload]
        status = save_frame(pd.json_normalize(rows), cfg.output, "csv", cfg.digits)
    else:
        status = save_records(payload, cfg.output, cfg.fmt)
    if status["status"] != "success":
        click.echo(f"Output failed: {status['message']}", err=True)
        return EXIT_FAIL
    if not passed:
        logger.warning(f"{cfg.command}: pass criteria not met")
        return EXIT_FAIL
    return EXIT_PASS


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.option("--dist", type=DistributionType(), default="constant:1", show_default=True,
              help="Stifling law: constant:K, geometric:P, poisson:L, zeta:S or pmf:i=r,...")
@click.option("--dist-high", type=DistributionType(), default=None, help="Stochastically larger law (monotone).")
@click.option("--N", "n", type=click.IntRange(min=1), default=1000, show_default=True, help="Population size minus one.")
@click.option("--M", "m", type=click.IntRange(min=1), default=100, show_default=True, help="Monte Carlo replicas.")
@click.option("--x0", type=float, default=1.0, show_default=True)
@click.option("--w0", type=float, default=None, help="Initial spreader budget density (default 0).")
@click.option("--y0", "y0_spec", default=None, help="Spreader proportions by type, e.g. 1=0.3,2=0.1.")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True, help="Master seed (RUMOR_LAB_SEED).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Output file (stdout if omitted).")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=config.DEFAULT_THREADS, show_default=True)
@click.option("--n-grid", default="1000,10000,100000", show_default=True, help="N values for muinf.")
@click.option("--mu-grid", default=None, help="Comma-separated mu values for curve.")
@click.option("--mu", type=click.FloatRange(min=0.0, min_open=True), default=None, help="Override mu (analytic, fprofile).")
@click.option("--nu2", type=click.FloatRange(min=0.0), default=None, help="Override the variance of R (analytic).")
@click.option("--grid-size", type=click.IntRange(min=2), default=200, show_default=True)
@click.option("--engine", type=click.Choice(["reduced", "full"]), default="reduced", show_default=True)
@click.option("--with-clocks", is_flag=True, help="Also simulate jump times.")
@click.option("--spreader-type", type=int, default=None, help="Type of the single starting spreader.")
@click.option("--truncate", type=click.IntRange(min=1), default=None, help="Fold the law above K onto K (oracle).")
@click.option("--t-max", type=click.FloatRange(min=0.0, min_open=True), default=None, help="Time horizon (path, fluid).")
@click.option("--samples", type=click.Path(dir_okay=False), default=None, help="CSV dump of standardized samples (clt).")
@click.option("--digits", type=click.IntRange(min=1, max=17), default=config.CSV_DIGITS, show_default=True)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=config.LOG_LEVEL, show_default=True)
@click.option("--progress", is_flag=True, help="Show a progress bar over replicas.")
@click.pass_context
def main(ctx, **params):
    """Rumour spreading with random stifling: limits, simulation and checks."""
    cfg = _build_config(params)
    logging.basicConfig(
        level=cfg.log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    logger.info(f"Running {cfg.command} with {cfg.dist_spec}, N={cfg.N}, M={cfg.M}, seed={cfg.seed}")
    ctx.exit(run(cfg))


def parse_config(argv):
    """Validated RunConfig for an argument list; click usage errors exit with code 2."""
    with main.make_context("rumorlab", list(argv)) as ctx:
        return _build_config(ctx.params)


if __name__ == "__main__":
    main()
