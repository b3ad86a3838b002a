"""Special functions used by every closed-form entropy moment.

All functions accept scalars or numpy arrays and broadcast elementwise.
Scalar input gives a Python float back.
"""

import numpy as np
from scipy import special as _sp

from .exceptions import DomainError, NumericalError

EULER_GAMMA = 0.57721566490153286061

_INVDIGAMMA_MAXITER = 100


def _positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"{name} must be > 0")
    return arr


def _out(arr):
    if np.ndim(arr) == 0:
        return float(arr)
    return arr


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    arr = _positive(x)
    return _out(_sp.gammaln(arr))


def _stirling_corr(z):
    # lnG(z) - [(z - 1/2) ln z - z + ln(2 pi) / 2], four terms; error < 2e-15 for z >= 20
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z


_POCH_STIRLING = 20.0


def log_pochhammer(x, m):
    """ln Gamma(x + m) - ln Gamma(x) for x > 0, m >= 0.

    For x >= 20 the difference is taken analytically from Stirling's
    series, m ln x + (x + m - 1/2) log1p(m / x) - m + corrections, so it
    keeps full accuracy when x is huge and the two log-gammas would cancel.
    Below that ln Gamma(x) is small and the plain difference is exact enough.
    """
    x_ = _positive(x)
    m_ = np.asarray(m, dtype=float)
    if not np.all(m_ >= 0):
        raise DomainError("m must be >= 0")
    x_, m_ = np.broadcast_arrays(x_, m_)
    big = x_ >= _POCH_STIRLING
    xb = np.where(big, x_, _POCH_STIRLING)
    xs = np.where(big, 1.0, x_)
    stirling = (m_ * np.log(xb) + (xb + m_ - 0.5) * np.log1p(m_ / xb) - m_
                + (_stirling_corr(xb + m_) - _stirling_corr(xb)))
    direct = _sp.gammaln(xs + m_) - _sp.gammaln(xs)
    res = np.where(m_ == 0, 0.0, np.where(big, stirling, direct))
    return _out(res)


def log_beta(a, b):
    """ln B(a, b); scipy's betaln avoids the cancellation in
    lnG(a) + lnG(b) - lnG(a + b) when one argument is large."""
    a_ = _positive(a, "a")
    b_ = _positive(b, "b")
    res = _sp.betaln(a_, b_)
    return _out(res)


def _digamma(x):
    return _sp.psi(x)


def _trigamma(x):
    return _sp.polygamma(1, x)


def digamma(x):
    """psi_0(x) for x > 0.

    Recurrence shift to x >= 6, then the Bernoulli-number asymptotic series.
    """
    arr = _positive(x)
    return _out(_digamma(arr))


def trigamma(x):
    """psi_1(x) for x > 0."""
    arr = _positive(x)
    return _out(_trigamma(arr))


def inverse_digamma(y, tol=1e-12):
    """Solve psi_0(x) = y for x > 0 by Newton iteration.

    Seeded with exp(y) + 1/2 for y >= -2.22 and -1/(y + gamma) below.
    """
    y_arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y_arr)):
        raise DomainError("y must be finite")
    yv = np.atleast_1d(y_arr).astype(float)
    with np.errstate(divide="ignore"):
        x = np.where(yv >= -2.22, np.exp(np.minimum(yv, 709.0)) + 0.5, -1.0 / (yv + EULER_GAMMA))
    for _ in range(_INVDIGAMMA_MAXITER):
        step = (_digamma(x) - yv) / _trigamma(x)
        x_new = x - step
        # Newton can overshoot below zero for very negative y; halve instead.
        x_new = np.where(x_new > 0, x_new, 0.5 * x)
        done = np.abs(x_new - x) <= tol * np.maximum(np.abs(x_new), 1e-300)
        x = x_new
        if np.all(done):
            break
    else:
        raise NumericalError("inverse_digamma did not converge", {"y": y_arr.tolist()})
    if np.ndim(y) == 0:
        return float(x[0])
    return x.reshape(y_arr.shape)
