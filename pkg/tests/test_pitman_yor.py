import math
from collections import Counter

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from pymentropy import (
    DomainError, PYParams, dir_posterior_moments, posterior_moments, py_log_evidence,
    py_log_evidence_multiplicities, py_posterior_mean, py_posterior_variance, py_prior_mean,
    py_prior_variance,
)
from pymentropy.pitman_yor import beta_entropy_moments, multiplicities_constant
from pymentropy.counts import Multiplicities
from pymentropy.sampler import sample_posterior_entropies

from conftest import integer_partitions, set_partitions


def test_prior_mean_known_values():
    assert py_prior_mean(0.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    mp.mp.dps = 30
    ref = float(mp.digamma(6) - mp.digamma(0.7))
    assert py_prior_mean(0.3, 5.0) == pytest.approx(ref, abs=1e-13)
    assert py_prior_mean(0.0, 0.0) == 0.0
    assert py_prior_variance(0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_prior_moments_vectorize():
    d = np.array([0.0, 0.2, 0.5])
    a = np.array([1.0, 3.0, 10.0])
    m = py_prior_mean(d, a)
    assert m.shape == (3,)
    assert m[1] == pytest.approx(py_prior_mean(0.2, 3.0))
    assert np.all(py_prior_variance(d, a) > 0)


@pytest.mark.parametrize("d,alpha", [(-0.1, 1.0), (1.0, 1.0), (0.5, -0.5), (0.0, -1e-9)])
def test_param_validation(d, alpha):
    with pytest.raises(DomainError):
        py_prior_mean(d, alpha)
    with pytest.raises(DomainError):
        PYParams(d, alpha).validate()


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (2.0, 7.0), (0.3, 40.0), (15.0, 1.2)])
def test_beta_moments_vs_quadrature(a, b):
    pdf = stats.beta(a, b).pdf
    h = lambda x: -_xlogx(x) - _xlogx(1 - x)  # noqa: E731

    def E(f):
        # split at the mode region so quad handles the endpoint singularities
        return sum(integrate.quad(lambda x: f(x) * pdf(x), lo, hi, epsabs=1e-13, limit=200)[0]
                   for lo, hi in ((0, 0.5), (0.5, 1)))

    bm = beta_entropy_moments(a, b)
    assert bm.p == pytest.approx(E(lambda x: x), abs=1e-10)
    assert bm.p2 == pytest.approx(E(lambda x: x * x), abs=1e-10)
    assert bm.q2 == pytest.approx(E(lambda x: (1 - x) ** 2), abs=1e-10)
    assert bm.h == pytest.approx(E(h), abs=1e-9)
    assert bm.h2 == pytest.approx(E(lambda x: h(x) ** 2), abs=1e-9)
    assert bm.ph == pytest.approx(E(lambda x: x * h(x)), abs=1e-9)


@pytest.mark.parametrize("d,alpha", [(0.0, 1.0), (0.4, 0.3), (0.7, 10.0), (0.2, -0.1)])
def test_profile_evidence_sums_to_one(d, alpha):
    for N in (1, 5, 10, 14):
        total = math.fsum(math.exp(py_log_evidence_multiplicities(Multiplicities.from_mapping(Counter(p)), d, alpha))
                          for p in integer_partitions(N))
        assert total == pytest.approx(1.0, abs=1e-11)


def test_multiplicities_constant_counts_set_partitions():
    profiles = Counter(tuple(sorted(b)) for b in set_partitions(7))
    for blocks, count in profiles.items():
        mult = Multiplicities.from_mapping(Counter(blocks))
        assert math.exp(multiplicities_constant(mult)) == pytest.approx(count, rel=1e-12)


def test_evidence_corner_and_vectorization():
    assert py_log_evidence([4], 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert py_log_evidence([3, 1], 0.0, 0.0) == -np.inf
    d = np.array([0.1, 0.5])
    a = np.array([[1.0], [5.0]])
    assert py_log_evidence([3, 2, 1], d, a).shape == (2, 2)


def test_rising_factorial_branches_agree():
    # alpha / d just below and above the switch between the log-gamma and direct sums
    counts = [5, 3, 2, 1, 1, 1]
    d = 1e-4
    lo = py_log_evidence(counts, d, d * (1e6 - 1))
    hi = py_log_evidence(counts, d, d * (1e6 + 1))
    mp.mp.dps = 40
    for a, v in ((d * (1e6 - 1), lo), (d * (1e6 + 1), hi)):
        ref = float(sum(mp.log(mp.mpf(a) + l * mp.mpf(d)) for l in range(1, 6))
                    + sum(mp.loggamma(n - mp.mpf(d)) - mp.loggamma(1 - mp.mpf(d)) for n in counts)
                    + mp.loggamma(1 + mp.mpf(a)) - mp.loggamma(mp.mpf(a) + 13))
        assert v == pytest.approx(ref, abs=1e-9)


def test_posterior_without_data_is_prior():
    m, v = posterior_moments([], 0.3, 2.0)
    assert m == pytest.approx(py_prior_mean(0.3, 2.0))
    assert v == pytest.approx(py_prior_variance(0.3, 2.0))


def test_posterior_mean_agrees_with_moments():
    counts = [7, 3, 3, 1, 1]
    for d, a in [(0.0, 0.5), (0.3, 4.0), (0.8, 0.01)]:
        assert py_posterior_mean(counts, d, a) == pytest.approx(posterior_moments(counts, d, a)[0], abs=1e-12)
        assert py_posterior_variance(counts, d, a) > 0


def test_single_atom_corner():
    # d = alpha = 0 with a single symbol: the posterior is a point mass on H = 0
    m, v = posterior_moments([6], 0.0, 0.0)
    assert m == pytest.approx(0.0, abs=1e-14) and v == pytest.approx(0.0, abs=1e-14)


def test_continuity_in_d_at_zero():
    counts = [4, 2, 1, 1]
    m0, v0 = posterior_moments(counts, 0.0, 3.0)
    m1, v1 = posterior_moments(counts, 1e-9, 3.0)
    assert m1 == pytest.approx(m0, abs=1e-7) and v1 == pytest.approx(v0, abs=1e-7)


def test_dirichlet_bridge():
    counts = [6, 2, 1, 1, 1]
    for a in (0.5, 3.0, 25.0):
        A = 10 ** 7
        dm = dir_posterior_moments(counts, A, a / A)
        m, v = posterior_moments(counts, 0.0, a)
        assert dm.mean == pytest.approx(m, abs=1e-5)
        assert dm.variance == pytest.approx(v, abs=1e-5)


@pytest.mark.parametrize("d,alpha", [(0.0, 5.0), (0.6, 0.5)])
def test_posterior_moments_vs_sampler(d, alpha):
    counts = [10, 4, 2, 1, 1, 1]
    h = sample_posterior_entropies(counts, d, alpha, 100_000, rng=31)
    m, v = posterior_moments(counts, d, alpha)
    se = math.sqrt(v / h.size)
    assert abs(h.mean() - m) < 4 * se
    assert h.var() == pytest.approx(v, rel=0.03)
