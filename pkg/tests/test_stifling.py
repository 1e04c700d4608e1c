import math

import numpy as np
import pytest
import scipy.special

from rumorlab.errors import DistributionError
from rumorlab.sim import replica_rng
from rumorlab.stifling import (
    Constant,
    Explicit,
    Geometric,
    Poisson,
    ZetaTail,
    moments,
    parse_distribution,
    stochastically_le,
    truncate,
)


# --- Probabilities and moments ---
ALL_LAWS = [Constant(3), Geometric(0.5), Poisson(1.1), ZetaTail(2.5), Explicit({0: 0.2, 1: 0.5, 3: 0.3})]
FINITE_VARIANCE_LAWS = [Constant(3), Geometric(0.5), Poisson(1.1), ZetaTail(3.5), Explicit({0: 0.2, 1: 0.5, 3: 0.3})]


@pytest.mark.parametrize("dist", ALL_LAWS, ids=lambda d: d.spec)
def test_pmf_and_tail_partition_unity(dist):
    for k in (1, 2, 5, 30):
        total = math.fsum(dist.pmf(i) for i in range(k)) + dist.tail(k)
        assert abs(total - 1.0) <= 1e-12


@pytest.mark.parametrize(
    "dist, upto",
    [(Constant(3), 3), (Geometric(0.5), 200), (Poisson(1.1), 80), (Explicit({0: 0.2, 1: 0.5, 3: 0.3}), 3)],
    ids=lambda v: getattr(v, "spec", None),
)
def test_pmf_sums_to_one(dist, upto):
    assert abs(math.fsum(dist.pmf(i) for i in range(upto + 1)) - 1.0) <= 1e-12


def test_constant_law():
    d = Constant(3)
    assert d.pmf(3) == 1.0 and d.pmf(2) == 0.0
    assert d.tail(3) == 1.0 and d.tail(4) == 0.0
    assert d.moments() == (3.0, 0.0)
    assert d.max_support == 3


def test_geometric_law(geometric_half):
    assert geometric_half.pmf(0) == 0.0
    assert geometric_half.pmf(1) == pytest.approx(0.5)
    assert geometric_half.tail(1) == 1.0
    assert geometric_half.tail(3) == pytest.approx(0.25)
    assert moments(geometric_half) == pytest.approx((2.0, 2.0))
    assert geometric_half.max_support is None


def test_poisson_law():
    d = Poisson(1.1)
    assert d.tail(0) == 1.0
    assert d.pmf(0) == pytest.approx(math.exp(-1.1))
    assert sum(d.pmf(i) for i in range(60)) == pytest.approx(1.0)
    assert d.moments() == (1.1, 1.1)


def test_zeta_moments_by_exponent():
    assert math.isinf(ZetaTail(1.5).mu)
    assert math.isinf(ZetaTail(2.0).mu)

    mu, nu2 = ZetaTail(2.5).moments()
    assert math.isfinite(mu) and math.isinf(nu2)

    mu, nu2 = ZetaTail(4.0).moments()
    norm = scipy.special.zeta(4.0)
    assert mu == pytest.approx(scipy.special.zeta(3.0) / norm)
    assert nu2 == pytest.approx(scipy.special.zeta(2.0) / norm - mu**2)
    assert ZetaTail(4.0).pmf(1) == pytest.approx(1.0 / norm)


def test_zeta_tail_matches_pmf_sum():
    d = ZetaTail(3.5)
    assert d.tail(3) == pytest.approx(1.0 - d.pmf(1) - d.pmf(2))


def test_explicit_normalizes_and_drops_zeros():
    d = Explicit({0: 0.2, 1: 0.5, 3: 0.3, 5: 0.0})
    assert d.table == pytest.approx({0: 0.2, 1: 0.5, 3: 0.3})
    assert d.max_support == 3
    assert d.mu == pytest.approx(1.4)
    assert d.tail(2) == pytest.approx(0.3)


@pytest.mark.parametrize("table", [{0: 1.0}, {1: 0.5}, {-1: 0.5, 1: 0.5}, {}])
def test_explicit_rejects_bad_tables(table):
    with pytest.raises(DistributionError):
        Explicit(table)


@pytest.mark.parametrize("build", [lambda: Constant(0), lambda: Geometric(0.0), lambda: Poisson(-1.0), lambda: ZetaTail(1.0)])
def test_parametric_laws_reject_bad_parameters(build):
    with pytest.raises(DistributionError):
        build()


# --- Truncation and order ---
def test_truncate_constant_below_level():
    d = truncate(Constant(2), 5)
    assert d.table == {2: 1.0}
    assert d.moments() == (2.0, 0.0)


@pytest.mark.parametrize("dist", [Geometric(0.5), Poisson(1.1), ZetaTail(2.5)], ids=lambda d: d.spec)
def test_truncated_mean_increases_to_mu(dist):
    levels = range(1, 41)
    means = np.array([truncate(dist, k).mu for k in levels])
    assert np.all(np.diff(means) >= -1e-12)
    assert np.all(means <= dist.mu + 1e-12)
    assert dist.mu - means[-1] < dist.mu - means[9]


@pytest.mark.parametrize("dist", [Geometric(0.5), Poisson(1.1)], ids=lambda d: d.spec)
def test_truncated_mean_reaches_mu(dist):
    assert truncate(dist, 80).mu == pytest.approx(dist.mu, abs=1e-9)


def test_truncate_folds_tail(geometric_half):
    d = truncate(geometric_half, 2)
    assert d.table == pytest.approx({1: 0.5, 2: 0.5})
    assert d.mu == pytest.approx(1.5)


def test_truncate_of_poisson_keeps_zero_mass():
    d = Poisson(1.0).truncate(3)
    assert d.pmf(0) == pytest.approx(math.exp(-1.0))
    assert sum(d.table.values()) == pytest.approx(1.0)


def test_stochastic_order(constant1, constant2, geometric_half):
    assert stochastically_le(constant1, constant2)
    assert not stochastically_le(constant2, constant1)
    assert stochastically_le(geometric_half.truncate(2), geometric_half)
    assert stochastically_le(geometric_half, geometric_half)
    assert stochastically_le(constant1, geometric_half)


def test_stochastic_order_stops_when_lower_tail_is_empty(caplog):
    with caplog.at_level("WARNING", logger="rumorlab.stifling"):
        assert stochastically_le(Constant(1), ZetaTail(1.5))
    assert not caplog.records


def test_stochastic_order_reports_cut_off_check(caplog):
    with caplog.at_level("WARNING", logger="rumorlab.stifling"):
        assert stochastically_le(ZetaTail(2.5), ZetaTail(1.5))
    assert any("checked up to" in r.getMessage() for r in caplog.records)


# --- Sampling ---
def test_samples_are_reproducible(geometric_half):
    a = geometric_half.sample_many(replica_rng(7, 3), 100)
    b = geometric_half.sample_many(replica_rng(7, 3), 100)
    assert np.array_equal(a, b)
    assert a.dtype == np.int64


def test_sample_mean_matches_law(geometric_half):
    draws = geometric_half.sample_many(replica_rng(11), 20000)
    assert draws.min() >= 1
    assert draws.mean() == pytest.approx(2.0, abs=0.06)


@pytest.mark.parametrize("dist", FINITE_VARIANCE_LAWS, ids=lambda d: d.spec)
def test_million_draws_match_mean(dist):
    n = 1_000_000
    draws = dist.sample_many(replica_rng(2024), n)
    mu, nu2 = dist.moments()
    se = math.sqrt(nu2 / n)
    assert abs(draws.mean() - mu) <= 4 * se + 1e-12


def test_explicit_sampling_hits_support_only():
    d = Explicit({0: 0.25, 2: 0.75})
    draws = d.sample_many(replica_rng(5), 4000)
    assert set(np.unique(draws)) <= {0, 2}
    assert (draws == 2).mean() == pytest.approx(0.75, abs=0.04)


def test_sample_positive_never_zero():
    d = Poisson(0.3)
    rng = replica_rng(9)
    assert all(d.sample_positive(rng) >= 1 for _ in range(200))


# --- Parsing ---
@pytest.mark.parametrize(
    "text, expected",
    [
        ("constant:2", Constant(2)),
        ("geometric:0.5", Geometric(0.5)),
        ("poisson:1.1", Poisson(1.1)),
        ("zeta:1.5", ZetaTail(1.5)),
        ("pmf:0=0.1,1=0.9", Explicit({0: 0.1, 1: 0.9})),
        (" Geometric : 0.25", Geometric(0.25)),
    ],
)
def test_parse_distribution(text, expected):
    assert parse_distribution(text) == expected


@pytest.mark.parametrize("text", ["", "constant", "binomial:3", "geometric:abc", "pmf:1", "pmf:0=1.0", "constant:0"])
def test_parse_distribution_rejects(text):
    with pytest.raises(DistributionError):
        parse_distribution(text)


def test_spec_round_trips_through_parser(geometric_half):
    assert parse_distribution(geometric_half.spec) == geometric_half
    assert str(Constant(4)) == "constant:4"
