"""Closed-form entropy moments and evidence under Pitman-Yor priors.

Every function broadcasts over array-valued ``d`` and ``alpha`` so that a
whole quadrature grid is evaluated in one call; data-dependent sums run
over the multiplicity groups of the counts.
"""

import math
from typing import NamedTuple

import numpy as np

from .counts import as_multiplicities
from .dirichlet import dirichlet_entropy_moments, _clamp_variance
from .exceptions import DomainError
from .special import digamma as _psi0, log_gamma as _lgamma, log_pochhammer, trigamma as _psi1


def _psi(x):
    return np.asarray(_psi0(x))


def _tri(x):
    return np.asarray(_psi1(x))


def _lg(x):
    return np.asarray(_lgamma(x))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


class PYParams(NamedTuple):
    """Discount ``d`` in [0, 1) and concentration ``alpha`` > -d.

    d = alpha = 0 is accepted as the single-atom limit.
    """

    d: float
    alpha: float

    def validate(self):
        check_params(self.d, self.alpha)
        return self


def check_params(d, alpha):
    d = np.asarray(d, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if not (np.all(d >= 0) and np.all(d < 1)):
        raise DomainError("discount d must lie in [0, 1)")
    # d = alpha = 0 is kept as the degenerate single-atom limit
    if not np.all((alpha > -d) | ((alpha == 0) & (d == 0))):
        raise DomainError("concentration alpha must exceed -d")
    return d, alpha


def py_prior_mean(d, alpha):
    """E[H | d, alpha] = psi_0(alpha + 1) - psi_0(1 - d)."""
    d, alpha = check_params(d, alpha)
    return _scalar(_psi(alpha + 1.0) - _psi(1.0 - d))


def py_prior_variance(d, alpha):
    """Var[H | d, alpha] under PY(d, alpha)."""
    d, alpha = check_params(d, alpha)
    return _scalar(_prior_var(d, alpha))


def _prior_var(d, alpha):
    return ((alpha + d) / ((alpha + 1.0) ** 2 * (1.0 - d))
            + (1.0 - d) / (alpha + 1.0) * _tri(2.0 - d)
            - _tri(2.0 + alpha))


class BetaEntropyMoments(NamedTuple):
    """Moments of X ~ Beta(a, b) entering the posterior variance.

    ``h(x) = -x ln x - (1 - x) ln(1 - x)`` is the binary entropy.
    """

    p: np.ndarray          # E[X]
    p2: np.ndarray         # E[X^2]
    q2: np.ndarray         # E[(1 - X)^2]
    h: np.ndarray          # E[h(X)]
    h2: np.ndarray         # E[h(X)^2]
    ph: np.ndarray         # E[X h(X)]


def beta_entropy_moments(a, b):
    """Closed forms for the Beta moments of x, h(x), h(x)^2 and x h(x).

    Each follows from differentiating the Beta function, so only digamma
    and trigamma values at shifted arguments are needed.  Requires a, b > 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(a > 0) and np.all(b > 0)):
        raise DomainError("Beta parameters must be > 0")
    s = a + b
    ss1 = s * (s + 1.0)
    p = a / s
    p2 = a * (a + 1.0) / ss1
    q2 = b * (b + 1.0) / ss1
    pq = a * b / ss1

    psi_s1 = _psi(s + 1.0)
    psi_s2 = _psi(s + 2.0)
    tri_s2 = _tri(s + 2.0)
    h = psi_s1 - p * _psi(a + 1.0) - (1.0 - p) * _psi(b + 1.0)

    # E[X^2 ln X], E[X(1-X) ln(1-X)]
    x2logx = p2 * (_psi(a + 2.0) - psi_s2)
    xqlogq = pq * (_psi(b + 1.0) - psi_s2)
    ph = -x2logx - xqlogq

    da = _psi(a + 2.0) - psi_s2
    db = _psi(b + 2.0) - psi_s2
    x2log2x = p2 * (da * da + _tri(a + 2.0) - tri_s2)
    q2log2q = q2 * (db * db + _tri(b + 2.0) - tri_s2)
    cross = pq * ((_psi(a + 1.0) - psi_s2) * (_psi(b + 1.0) - psi_s2) - tri_s2)
    h2 = x2log2x + 2.0 * cross + q2log2q
    return BetaEntropyMoments(p, p2, q2, h, h2, ph)


def _grid(mult, d, alpha):
    d, alpha = check_params(d, alpha)
    d, alpha = np.broadcast_arrays(d, alpha)
    return d, alpha, mult.N, mult.K


def py_posterior_mean(data, d, alpha):
    """E[H | counts, d, alpha]."""
    mult = as_multiplicities(data)
    d, alpha, N, K = _grid(mult, d, alpha)
    if K == 0:
        return _scalar(_psi(alpha + 1.0) - _psi(1.0 - d))
    f = mult.freqs.astype(float)
    m = mult.mults.astype(float)
    ai = f - d[..., None]
    tail = (m * ai * _psi(ai + 1.0)).sum(axis=-1)
    res = _psi(alpha + N + 1.0) - (alpha + K * d) / (alpha + N) * _psi(1.0 - d) - tail / (alpha + N)
    return _scalar(res)


def posterior_moments(data, d, alpha):
    """Posterior mean and variance of H for fixed (d, alpha).

    The posterior splits into a Dirichlet over the K observed symbols, a
    Beta-distributed leftover mass ``p_*`` and a PY(d, alpha + K d) tail;
    the variance follows from the law of total variance over ``p_*``.
    """
    mult = as_multiplicities(data)
    d, alpha, N, K = _grid(mult, d, alpha)
    if K == 0:
        mean = _psi(alpha + 1.0) - _psi(1.0 - d)
        return _scalar(mean), _scalar(_clamp_variance(_prior_var(d, alpha)))

    f = mult.freqs.astype(float)
    m = mult.mults.astype(float)
    ai = f - d[..., None]
    a_mean, a_second = dirichlet_entropy_moments(ai, m)
    var_a = a_second - a_mean * a_mean

    tail_alpha = alpha + K * d
    b_mean = _psi(tail_alpha + 1.0) - _psi(1.0 - d)
    var_b = _prior_var(d, tail_alpha)

    # p_* ~ Beta(alpha + K d, N - K d); alpha + K d == 0 only for the
    # d = alpha = 0 corner, where p_* is identically zero.
    b_shape = N - K * d
    degenerate = tail_alpha <= 0
    a_shape = np.where(degenerate, 1.0, tail_alpha)
    bm = beta_entropy_moments(a_shape, b_shape)
    zero = np.zeros_like(a_shape)
    one = np.ones_like(a_shape)
    ep = np.where(degenerate, zero, bm.p)
    ep2 = np.where(degenerate, zero, bm.p2)
    eq2 = np.where(degenerate, one, bm.q2)
    eh = np.where(degenerate, zero, bm.h)
    eh2 = np.where(degenerate, zero, bm.h2)
    eph = np.where(degenerate, zero, bm.ph)

    mean = a_mean + ep * (b_mean - a_mean) + eh
    gap = b_mean - a_mean
    var_omega = gap * gap * (ep2 - ep * ep) + (eh2 - eh * eh) + 2.0 * gap * (eph - ep * eh)
    var = eq2 * var_a + ep2 * var_b + var_omega
    return _scalar(mean), _scalar(_clamp_variance(var))


def py_posterior_variance(data, d, alpha):
    """Var[H | counts, d, alpha]."""
    return posterior_moments(data, d, alpha)[1]


# Above this ratio alpha/d the log-gamma form of sum ln(alpha + l d)
# loses digits to cancellation; sum the logs directly instead.
_RISING_DIRECT = 1e6


def _log_rising(alpha, d, K):
    """sum_{l=1}^{K-1} ln(alpha + l d), broadcasting over alpha and d."""
    if K <= 1:
        return np.zeros(np.broadcast(alpha, d).shape)
    alpha, d = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(d, float))
    out = np.empty(alpha.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d > 0, alpha / np.where(d > 0, d, 1.0), np.inf)
    gamma_form = np.isfinite(ratio) & (ratio < _RISING_DIRECT)
    if np.any(gamma_form):
        x = ratio[gamma_form]
        out[gamma_form] = (K - 1) * np.log(d[gamma_form]) + log_pochhammer(x + 1.0, K - 1)
    rest = ~gamma_form
    if np.any(rest):
        a = alpha[rest]
        dd = d[rest]
        with np.errstate(divide="ignore"):
            base = (K - 1) * np.log(a)
        pos = (a > 0) & (dd > 0)
        corr = np.zeros_like(a)
        if np.any(pos):
            r = dd[pos] / a[pos]
            ls = np.arange(1, K, dtype=float)
            corr[pos] = np.log1p(r[:, None] * ls[None, :]).sum(axis=1)
        out[rest] = base + corr
    return out


def _log_evidence_core(mult, d, alpha):
    N, K = mult.N, mult.K
    f = mult.freqs.astype(float)
    m = mult.mults.astype(float)
    res = (_log_rising(alpha, d, K)
           + (m * _lg(f - d[..., None])).sum(axis=-1)
           - K * _lg(1.0 - d) - np.asarray(log_pochhammer(alpha + 1.0, N - 1)))
    return res


def py_log_evidence(data, d, alpha):
    """log p(x | d, alpha): probability of the observed sequence's partition.

    Returns -inf at d = alpha = 0 with two or more distinct symbols.
    """
    mult = as_multiplicities(data)
    if mult.N < 1:
        raise DomainError("evidence needs at least one sample")
    d, alpha, _, _ = _grid(mult, d, alpha)
    return _scalar(_log_evidence_core(mult, d, alpha))


def multiplicities_constant(mult):
    """ln of the number of set partitions of N items with block-size profile m.

    Equals ln N! - sum_k [m_k ln k! + ln m_k!].
    """
    f = mult.freqs
    m = mult.mults
    return (math.lgamma(mult.N + 1)
            - sum(int(mk) * math.lgamma(int(k) + 1) + math.lgamma(int(mk) + 1) for k, mk in zip(f, m)))


def py_log_evidence_multiplicities(mult, d, alpha):
    """log probability of the block-size profile (the multiplicities).

    Differs from :func:`py_log_evidence` only by
    :func:`multiplicities_constant`, which does not depend on (d, alpha);
    summed over all integer partitions of N it gives one.
    """
    mult = as_multiplicities(mult)
    return _scalar(py_log_evidence(mult, d, alpha) + multiplicities_constant(mult))
