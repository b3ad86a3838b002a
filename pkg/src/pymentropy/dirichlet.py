"""Finite-alphabet estimators: plugin, Miller-Madow, Dirichlet posterior
moments, NSB and its asymptotic (A -> infinity) form.

Counts enter through their multiplicities.  The ``A - K`` unobserved bins of
a finite alphabet form one extra multiplicity group with count zero, so the
cost is independent of the alphabet size.
"""

from dataclasses import dataclass
import math

import numpy as np

from .counts import as_multiplicities
from .exceptions import EmptyDataError, InconsistentAlphabetError, DomainError, NoCoincidencesError
from .quadrature import adaptive_integrate
from .result import EntropyEstimate
from .special import EULER_GAMMA, digamma as _psi0, log_gamma as _lgamma, log_pochhammer, trigamma as _psi1


def digamma(x):
    return np.asarray(_psi0(x))


def trigamma(x):
    return np.asarray(_psi1(x))


def log_gamma(x):
    return np.asarray(_lgamma(x))

NEG_VARIANCE_TOL = 1e-9


@dataclass(frozen=True)
class DirPosteriorMoments:
    mean: float
    second_moment: float
    variance: float


def _alphabet(A, K):
    if A is None or int(A) != A or A < 1:
        raise DomainError(f"alphabet size must be a positive integer, got {A!r}")
    if A < K:
        raise InconsistentAlphabetError(f"alphabet size {A} is smaller than K = {K}")
    return int(A)


def _clamp_variance(var):
    var = np.asarray(var, dtype=float)
    return np.where((var < 0) & (var >= -NEG_VARIANCE_TOL), 0.0, var)


def dirichlet_entropy_moments(values, weights):
    """First two moments of H(p) for p ~ Dir(values repeated by weights).

    ``values`` has shape ``(..., G)``: one Dirichlet parameter per group,
    ``weights`` the number of coordinates sharing it.  Leading axes
    broadcast, so a whole parameter grid is evaluated in one call.
    Returns ``(mean, second_moment)``.
    """
    v = np.asarray(values, dtype=float)
    m = np.asarray(weights, dtype=float)
    total = (m * v).sum(axis=-1)
    psi_t1 = digamma(total + 1.0)
    mean = psi_t1 - (m * v * digamma(v + 1.0)).sum(axis=-1) / total

    psi_t2 = digamma(total + 2.0)[..., None]
    tri_t2 = trigamma(total + 2.0)
    a = digamma(v + 1.0) - psi_t2
    s1 = (m * v * a).sum(axis=-1)
    s2 = (m * v * v * a * a).sum(axis=-1)
    sq = (m * v * v).sum(axis=-1)
    # sum over ordered pairs i != k, expanded from (sum)^2 minus diagonal
    cross = s1 * s1 - s2 - tri_t2 * (total * total - sq)
    b = digamma(v + 2.0) - psi_t2
    j = b * b + trigamma(v + 2.0) - tri_t2[..., None]
    square = (m * (v + 1.0) * v * j).sum(axis=-1)
    second = (cross + square) / ((total + 1.0) * total)
    return mean, second


def _groups(mult, A, alpha):
    """Dirichlet parameters per multiplicity group including empty bins."""
    alpha = np.asarray(alpha, dtype=float)
    vals = mult.freqs.astype(float)
    wts = mult.mults.astype(float)
    empty = A - mult.K
    if empty > 0:
        vals = np.append(vals, 0.0)
        wts = np.append(wts, float(empty))
    return vals + alpha[..., None], wts


def plugin_entropy(data):
    """Entropy of the empirical frequencies, in nats."""
    mult = as_multiplicities(data)
    N = mult.N
    if N == 0:
        raise EmptyDataError("plugin entropy needs at least one sample")
    f = mult.freqs.astype(float)
    return float(-(mult.mults * (f / N) * np.log(f / N)).sum())


def miller_madow(data):
    """Plugin entropy plus the first-order bias term (K - 1) / (2N)."""
    mult = as_multiplicities(data)
    if mult.N == 0:
        raise EmptyDataError("Miller-Madow needs at least one sample")
    return plugin_entropy(mult) + (mult.K - 1) / (2.0 * mult.N)


def dir_posterior_moments(data, A, alpha):
    """Posterior mean and variance of H under a symmetric Dir(alpha) prior
    on an alphabet of A symbols."""
    mult = as_multiplicities(data)
    A = _alphabet(A, mult.K)
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    vals, wts = _groups(mult, A, alpha)
    mean, second = dirichlet_entropy_moments(vals, wts)
    var = _clamp_variance(second - mean * mean)
    return DirPosteriorMoments(float(mean), float(second), float(var))


def nsb_weight(alpha, A):
    """Unnormalized NSB hyperprior, d E[H | alpha] / d alpha."""
    alpha = np.asarray(alpha, dtype=float)
    if not np.all(alpha > 0):
        raise DomainError("alpha must be > 0")
    res = A * trigamma(A * alpha + 1.0) - trigamma(alpha + 1.0)
    return float(res) if res.ndim == 0 else res


def _log_polya(mult, A, alpha):
    alpha = np.asarray(alpha, dtype=float)
    N = mult.N
    f = mult.freqs.astype(float)
    const = math.lgamma(N + 1) - float((mult.mults * np.array([math.lgamma(k + 1.0) for k in f])).sum())
    per_group = np.asarray(log_pochhammer(alpha[..., None], f))
    res = (const - np.asarray(log_pochhammer(A * alpha, N))
           + (mult.mults * per_group).sum(axis=-1))
    return res


def polya_log_evidence(data, A, alpha):
    """log p(counts | alpha) under the Dirichlet-multinomial (Polya) model.

    This is the probability of the labelled count vector, including the
    multinomial coefficient N! / prod n_i!.
    """
    mult = as_multiplicities(data)
    A = _alphabet(A, mult.K)
    alpha = np.asarray(alpha, dtype=float)
    if not np.all(alpha > 0):
        raise DomainError("alpha must be > 0")
    res = _log_polya(mult, A, alpha)
    return float(res) if np.ndim(res) == 0 else res


def nsb_estimate(data, A, log_alpha_range=(-20.0, 20.0), rtol=1e-10):
    """NSB posterior mean and std of the entropy for alphabet size A.

    Integrates over t = ln(alpha) with adaptive Gauss-Legendre panels; the
    variance combines the per-alpha variances and the spread of the
    per-alpha means.
    """
    mult = as_multiplicities(data)
    A = _alphabet(A, mult.K)

    def integrand(t):
        alpha = np.exp(t)
        vals, wts = _groups(mult, A, alpha)
        mean, second = dirichlet_entropy_moments(vals, wts)
        with np.errstate(divide="ignore"):
            logw = _log_polya(mult, A, alpha) + np.log(nsb_weight(alpha, A)) + t
        return logw, np.vstack([mean, second])

    (z, m1, m2), ref, panels = adaptive_integrate(integrand, *log_alpha_range, rtol=rtol)
    mean = m1 / z
    var = float(_clamp_variance(m2 / z - mean * mean))
    return EntropyEstimate(
        "nsb",
        float(mean),
        math.sqrt(max(var, 0.0)),
        diagnostics={
            "alphabet_size": A,
            "panels": panels,
            "log_normalizer": float(np.log(z) + ref),
            "log_alpha_range": list(log_alpha_range),
        },
    )


def ansb_estimate(data):
    """Asymptotic NSB: 2 ln N + psi_0(N - K) - psi_0(1) - ln 2 (point only)."""
    mult = as_multiplicities(data)
    N, K = mult.N, mult.K
    if N - K < 1:
        raise NoCoincidencesError(N - K, required=1)
    val = 2.0 * math.log(N) + float(digamma(float(N - K))) + EULER_GAMMA - math.log(2.0)
    return EntropyEstimate("ansb", val, None, diagnostics={"N": N, "K": K})
