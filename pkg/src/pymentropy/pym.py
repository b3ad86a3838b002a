"""Pitman-Yor mixture (PYM) and Dirichlet-process mixture (DPM) estimators.

The mixing prior is flat in the expected prior entropy ``h`` and weighted by
a density ``q(gamma)`` on the tail coordinate ``gamma``.  It is pushed
forward to (d, alpha) with the analytic Jacobian of the reparametrization.
The posterior over (d, alpha) is integrated on a Gauss-Legendre grid
centred on the MAP and scaled by the inverse Hessian.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy import optimize

from .counts import as_multiplicities
from .exceptions import ConfigError, DomainError, NoCoincidencesError, NumericalError
from .pitman_yor import PYParams, _log_evidence_core, check_params, posterior_moments, py_prior_mean
from .quadrature import gauss_legendre
from .result import EntropyEstimate
from .special import EULER_GAMMA, digamma, inverse_digamma, trigamma

log = logging.getLogger(__name__)

PSI1 = -EULER_GAMMA  # digamma(1)


class HGammaParams(tuple):
    """``(h, gamma)``: expected prior entropy and tail-weight coordinate."""

    __slots__ = ()

    def __new__(cls, h, gamma):
        return super().__new__(cls, (float(h), float(gamma)))

    h = property(lambda self: self[0])
    gamma = property(lambda self: self[1])

    def __repr__(self):
        return f"HGammaParams(h={self.h!r}, gamma={self.gamma!r})"


@dataclass(frozen=True)
class GammaTable:
    """Tabulated q(gamma), interpolated linearly in log density; zero outside."""

    gammas: tuple
    densities: tuple

    def __post_init__(self):
        g = np.asarray(self.gammas, float)
        q = np.asarray(self.densities, float)
        if g.ndim != 1 or g.shape != q.shape or g.size < 2:
            raise ConfigError("gamma table needs matching 1-D arrays of length >= 2")
        if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > 1:
            raise ConfigError("gamma table abscissae must be increasing within [0, 1]")
        if np.any(q < 0):
            raise ConfigError("gamma table densities must be >= 0")

    def log_q(self, gamma):
        g = np.asarray(self.gammas, float)
        with np.errstate(divide="ignore"):
            lq = np.log(np.asarray(self.densities, float))
        gamma = np.asarray(gamma, float)
        out = np.interp(gamma, g, lq)
        return np.where((gamma < g[0]) | (gamma > g[-1]), -np.inf, out)


_GAMMA_PRIORS = ("default", "flat", "dp")


@dataclass(frozen=True)
class PymConfig:
    """Settings for the mixture estimators.

    ``gamma_prior`` is ``"default"`` (q = exp(-10 / (1 - gamma)) on
    gamma < 1), ``"flat"`` (q = 1 on gamma <= 1), ``"dp"`` (all mass on
    gamma = 0, i.e. the d = 0 axis) or a :class:`GammaTable`.
    """

    gamma_prior: object = "default"
    grid_size: int = 30
    std_span: float = 6.0
    alpha_cap: float = 1e10
    mass_threshold: float = 0.99
    edge_drop: float = 20.0
    max_expansions: int = 12
    max_refinements: int = 2
    refine_tol: float = 1e-3

    def __post_init__(self):
        if not isinstance(self.gamma_prior, GammaTable) and self.gamma_prior not in _GAMMA_PRIORS:
            raise ConfigError(f"unknown gamma prior {self.gamma_prior!r}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 5:
            raise ConfigError("grid_size must be an integer >= 5")
        if not self.std_span > 0:
            raise ConfigError("std_span must be > 0")
        if not self.alpha_cap > 0:
            raise ConfigError("alpha_cap must be > 0")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 0:
            raise ConfigError("max_refinements must be a non-negative integer")
        if not self.refine_tol > 0:
            raise ConfigError("refine_tol must be > 0")

    def gamma_support(self):
        if isinstance(self.gamma_prior, GammaTable):
            return float(self.gamma_prior.gammas[0]), float(self.gamma_prior.gammas[-1])
        return 0.0, 1.0

    @property
    def dp_only(self):
        return isinstance(self.gamma_prior, str) and self.gamma_prior == "dp"

    def log_q(self, gamma):
        gamma = np.asarray(gamma, float)
        if isinstance(self.gamma_prior, GammaTable):
            return self.gamma_prior.log_q(gamma)
        if self.gamma_prior == "flat":
            return np.where(gamma <= 1.0, 0.0, -np.inf)
        if self.gamma_prior == "dp":
            return np.where(gamma == 0.0, 0.0, -np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(gamma < 1.0, -10.0 / (1.0 - gamma), -np.inf)


# -- reparametrization --------------------------------------------------------

def to_hgamma(d, alpha):
    """Map PY parameters to (h, gamma)."""
    d, alpha = check_params(d, alpha)
    if np.any(alpha < 0):
        raise DomainError("the (h, gamma) coordinates need alpha >= 0")
    num = PSI1 - np.asarray(digamma(1.0 - d))
    h = np.asarray(digamma(alpha + 1.0)) - np.asarray(digamma(1.0 - d))
    if np.any(h <= 0):
        raise DomainError("h = 0 at d = alpha = 0: the distribution is a single atom")
    gamma = num / h
    if np.ndim(h) == 0:
        return HGammaParams(h, gamma)
    return h, gamma


def to_dalpha(h, gamma, tol=1e-10):
    """Inverse of :func:`to_hgamma`."""
    h_ = np.asarray(h, float)
    g_ = np.asarray(gamma, float)
    if np.any(h_ <= 0) or np.any(g_ < 0):
        raise DomainError("need h > 0 and gamma >= 0")
    alpha = np.asarray(inverse_digamma(h_ * (1.0 - g_) + PSI1)) - 1.0
    d = 1.0 - np.asarray(inverse_digamma(PSI1 - h_ * g_))
    # round-off at the gamma = 0 / gamma = 1 edges
    d = np.where((d < 0) & (d > -tol), 0.0, d)
    alpha = np.where((alpha < 0) & (alpha > -tol), 0.0, alpha)
    if np.any(d < 0) or np.any(d >= 1) or np.any(alpha < 0):
        raise DomainError("(h, gamma) maps outside d in [0, 1), alpha >= 0")
    if np.ndim(d) == 0:
        return PYParams(float(d), float(alpha))
    return d, alpha


def hgamma_jacobian(d, alpha):
    """Matrix of partial derivatives of (h, gamma) with respect to (d, alpha)."""
    d, alpha = float(d), float(alpha)
    t1d = trigamma(1.0 - d)
    t1a = trigamma(alpha + 1.0)
    h = digamma(alpha + 1.0) - digamma(1.0 - d)
    g = PSI1 - digamma(1.0 - d)
    return np.array([
        [t1d, t1a],
        [t1d * (h - g) / h ** 2, -g * t1a / h ** 2],
    ])


def log_abs_det_jacobian(d, alpha):
    """ln |det d(h, gamma)/d(d, alpha)| = ln psi_1(1-d) + ln psi_1(alpha+1) - ln h."""
    d = np.asarray(d, float)
    alpha = np.asarray(alpha, float)
    h = np.asarray(digamma(alpha + 1.0)) - np.asarray(digamma(1.0 - d))
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.log(np.asarray(trigamma(1.0 - d))) + np.log(np.asarray(trigamma(alpha + 1.0))) - np.log(h)
    return np.where(h > 0, res, -np.inf)


def log_prior_density(d, alpha, cfg=None, dp_only=None):
    """Log density of the mixing prior on (d, alpha).

    On the d = 0 axis (``dp_only``) the prior is flat in h, i.e.
    ``psi_1(alpha + 1) q(0)``, and zero for d > 0.  Returns -inf where q vanishes.
    """
    cfg = cfg or PymConfig()
    if dp_only is None:
        dp_only = cfg.dp_only
    alpha = np.asarray(alpha, float)
    d = np.asarray(d, float)
    if dp_only:
        res = np.log(np.asarray(trigamma(alpha + 1.0))) + cfg.log_q(0.0)
        res = np.where(d == 0.0, res, -np.inf)
        return float(res) if res.ndim == 0 else res
    h = np.asarray(digamma(alpha + 1.0)) - np.asarray(digamma(1.0 - d))
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (PSI1 - np.asarray(digamma(1.0 - d))) / h
        res = cfg.log_q(gamma) + log_abs_det_jacobian(d, alpha)
    res = np.where(h > 0, res, -np.inf)
    return float(res) if res.ndim == 0 else res


# -- posterior on (d, alpha) ----------------------------------------------------

def _log_post(mult, d, alpha, cfg, dp_only):
    d, alpha = np.broadcast_arrays(np.asarray(d, float), np.asarray(alpha, float))
    ok = (d >= 0) & (d < 1) & (alpha >= 0) & np.isfinite(alpha)
    ds = np.where(ok, d, 0.5)
    als = np.where(ok, alpha, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ev = _log_evidence_core(mult, ds, als)
        lp = log_prior_density(ds, als, cfg, dp_only=dp_only)
    out = np.asarray(ev + lp, float)
    return np.where(ok & ~np.isnan(out), out, -np.inf)


# The MAP only centres the grid, so 1e-7 in the transformed coordinates and
# 1e-9 in log density are ample; fatol is absolute, and tighter values sit
# below the rounding of log posteriors of size ~1e5.
_NM_OPTIONS = {"xatol": 1e-7, "fatol": 1e-9, "maxiter": 4000}

_LOGIT_D = (-25.0, 9.0)
_LOG_ALPHA = (-25.0, 25.0)


def _from_u(u):
    return 1.0 / (1.0 + math.exp(-u[0])), math.exp(u[1])


def _check_coincidences(mult, required=2):
    coinc = mult.N - mult.K
    if coinc < required:
        raise NoCoincidencesError(coinc, required)


def map_fit(data, cfg=None, dp_only=None):
    """MAP (d, alpha) of the mixture posterior.

    Derivative-free Nelder-Mead in (logit d, ln alpha), started from four
    fixed points; the best local optimum wins.
    """
    cfg = cfg or PymConfig()
    mult = as_multiplicities(data)
    if mult.N < 1:
        raise DomainError("map_fit needs at least one sample")
    if dp_only is None:
        dp_only = cfg.dp_only
    K = max(mult.K, 1)
    alpha_starts = (1.0, float(K))

    trace = []
    best = None
    if dp_only:
        def obj1(v):
            val = _log_post(mult, 0.0, math.exp(v[0]), cfg, True)
            return -float(val) if np.isfinite(val) else 1e300

        for a0 in alpha_starts + (float(K) / 10.0 + 0.1, float(mult.N)):
            res = optimize.minimize(obj1, [math.log(a0)], method="Nelder-Mead",
                                    bounds=[_LOG_ALPHA],
                                    options=_NM_OPTIONS)
            trace.append({"start": (0.0, a0), "fun": float(res.fun), "success": bool(res.success)})
            if best is None or res.fun < best.fun:
                best = res
        params = PYParams(0.0, math.exp(best.x[0]))
    else:
        def obj2(u):
            d, a = _from_u(u)
            if d >= 1.0:
                return 1e300
            val = _log_post(mult, d, a, cfg, False)
            return -float(val) if np.isfinite(val) else 1e300

        for d0 in (0.05, 0.5):
            for a0 in alpha_starts:
                u0 = [math.log(d0 / (1 - d0)), math.log(a0)]
                res = optimize.minimize(obj2, u0, method="Nelder-Mead",
                                        bounds=[_LOGIT_D, _LOG_ALPHA],
                                        options=_NM_OPTIONS)
                trace.append({"start": (d0, a0), "fun": float(res.fun), "success": bool(res.success)})
                if best is None or res.fun < best.fun:
                    best = res
        # polish from the winner
        res = optimize.minimize(obj2, best.x, method="Nelder-Mead", bounds=[_LOGIT_D, _LOG_ALPHA],
                                options=_NM_OPTIONS)
        trace.append({"start": "polish", "fun": float(res.fun), "success": bool(res.success)})
        if res.fun <= best.fun:
            best = res
        params = PYParams(*_from_u(best.x))
    if not np.isfinite(best.fun) or best.fun >= 1e300:
        raise NumericalError("MAP search found no point with positive posterior density",
                             {"trace": trace})
    if not any(t["success"] for t in trace):
        raise NumericalError("MAP search did not converge", {"trace": trace})
    return params


def _fd_derivs(f, x, steps, lower, upper):
    """Central-difference gradient and Hessian of f.

    The stencil centre is moved inward when x lies within one step of a
    bound, so boundary optima still get finite-difference curvature.
    """
    x = np.array(x, float)
    n = x.size
    h = np.asarray(steps, float)
    c = np.clip(x, np.asarray(lower, float) + h, np.asarray(upper, float) - h)
    H = np.empty((n, n))
    g = np.empty(n)
    f0 = f(c)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        fp, fm = f(c + ei), f(c - ei)
        g[i] = (fp - fm) / (2 * h[i])
        H[i, i] = (fp - 2.0 * f0 + fm) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(c + ei + ej) - f(c + ei - ej) - f(c - ei + ej) + f(c - ei - ej)) / (4 * h[i] * h[j])
    return g, H


def _geometry(mult, params, cfg, dp_only, log_alpha):
    """Gradient and Hessian of the negative log posterior at the MAP.

    Coordinates are (d, alpha), or (d, ln alpha) when ``log_alpha``; on the
    d = 0 axis only the alpha coordinate is kept.
    """
    d0, a0 = params
    if log_alpha:
        a_x, a_step = math.log(a0), 1e-3
        a_lo, a_hi = -np.inf, np.inf
        to_alpha = np.exp
    else:
        a_x, a_step = a0, 1e-4 * max(a0, 1e-2)
        a_lo, a_hi = 0.0, np.inf
        to_alpha = float
    if dp_only:
        def f(x):
            return -float(_log_post(mult, 0.0, to_alpha(x[0]), cfg, True))
        return _fd_derivs(f, [a_x], [a_step], [a_lo], [a_hi])

    d_step = 1e-4 * min(max(d0, 1e-2), 1.0)

    def f(x):
        return -float(_log_post(mult, x[0], to_alpha(x[1]), cfg, False))
    return _fd_derivs(f, [d0, a_x], [d_step, a_step], [0.0, a_lo], [1.0, a_hi])


def posterior_hessian(data, params, cfg=None, dp_only=None):
    """Finite-difference Hessian of the negative log posterior in (d, alpha).

    Returns a 2x2 array, or 1x1 (alpha only) on the d = 0 axis.
    """
    cfg = cfg or PymConfig()
    if dp_only is None:
        dp_only = cfg.dp_only
    return _geometry(as_multiplicities(data), params, cfg, dp_only, log_alpha=False)[1]


def _is_pd(H):
    if not np.all(np.isfinite(H)):
        return False
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass
class Grid:
    """Quadrature nodes in (d, alpha).  ``weights`` already include the
    Jacobian of the alpha axis when it is laid out in ln alpha."""

    d: np.ndarray
    alpha: np.ndarray
    weights: np.ndarray
    rule: str
    d_bounds: tuple
    axis_bounds: tuple
    alpha_axis: str = "linear"

    @property
    def alpha_bounds(self):
        lo, hi = self.axis_bounds
        if self.alpha_axis == "h":
            return float(self.alpha.min()), float(self.alpha.max())
        if self.alpha_axis == "log":
            return math.exp(lo), math.exp(hi)
        return lo, hi


def _box_grid(n, db, ab, dp_only, alpha_axis):
    x, w = gauss_legendre(n, *ab)
    if alpha_axis == "log":
        x = np.exp(x)
        w = w * x
    if dp_only:
        return Grid(np.zeros_like(x), x, w, "box", (0.0, 0.0), tuple(ab), alpha_axis)
    dx, dw = gauss_legendre(n, *db)
    D, A = np.meshgrid(dx, x, indexing="ij")
    return Grid(D.ravel(), A.ravel(), np.outer(dw, w).ravel(), "box", tuple(db), tuple(ab), alpha_axis)


def _default_h_max(params):
    return float(np.clip(2.0 * py_prior_mean(*params) + 10.0, 20.0, _H_MAX_CAP))


_H_MAX_CAP = 60.0


def hgamma_grid(n, h_max, cfg, dp_only):
    """Tensor rule in (h, gamma) on [0, h_max] x support of q.

    The prior is smooth in these coordinates, so this rule copes with
    posteriors piled against the d = alpha = 0 corner where the (d, alpha)
    density is singular.  h = h_max s^2 clusters nodes near h = 0.  The
    returned weights are divided by the Jacobian so that they integrate
    the (d, alpha) posterior density.
    """
    s, ws = gauss_legendre(n, 0.0, 1.0)
    h = h_max * s * s
    wh = ws * 2.0 * h_max * s
    if dp_only:
        alpha = np.asarray(inverse_digamma(h + PSI1)) - 1.0
        alpha = np.maximum(alpha, 0.0)
        w = wh / np.asarray(trigamma(alpha + 1.0))
        return Grid(np.zeros_like(alpha), alpha, w, "hgamma", (0.0, 0.0), (0.0, h_max), "h")
    g_lo, g_hi = cfg.gamma_support()
    g, wg = gauss_legendre(n, g_lo, g_hi)
    H, G = np.meshgrid(h, g, indexing="ij")
    d, alpha = to_dalpha(H.ravel(), G.ravel())
    with np.errstate(over="ignore"):
        w = np.outer(wh, wg).ravel() / np.exp(log_abs_det_jacobian(d, alpha))
    return Grid(d, alpha, w, "hgamma", (float(d.min()), float(d.max())), (0.0, h_max), "h")


# below this the MAP discount is treated as sitting on the d = 0 edge
_D_EDGE = 1e-6


def _edge_box(g_d, H, x0, span):
    """Box for a MAP on the d = 0 edge.

    Along the ridge x*(d) = x0 + slope * d the negative log posterior grows
    like g d + S d^2 / 2 with S the Schur complement of H_xx; d runs until
    that reaches span^2 / 2, and x covers the ridge -/+ span conditional stds.
    """
    S = H[0, 0] - H[0, 1] ** 2 / H[1, 1]
    drop = 0.5 * span * span
    if S > 0:
        d_max = (-g_d + math.sqrt(g_d * g_d + 2.0 * S * drop)) / S
    elif g_d > 0:
        d_max = drop / g_d
    else:
        return None
    d_max = min(d_max, 1.0)
    slope = -H[0, 1] / H[1, 1]
    sd = 1.0 / math.sqrt(H[1, 1])
    shift = slope * d_max
    return (0.0, d_max), (x0 + min(0.0, shift) - span * sd, x0 + max(0.0, shift) + span * sd)


def quadrature_grid(params, hessian, cfg=None, dp_only=None, gradient=None, alpha_axis="linear"):
    """Quadrature nodes over (d, alpha) for the posterior integral.

    ``hessian`` (and ``gradient``) are those of the negative log posterior
    at ``params`` in (d, x) where x is alpha or, with ``alpha_axis="log"``,
    ln alpha.  With a positive definite Hessian the rule is tensor
    Gauss-Legendre on MAP -/+ std_span * std, clipped to d in [0, 1) and
    alpha >= 0.  A MAP on the d = 0 edge gets a box that follows the ridge
    of the posterior away from the edge (needs ``gradient``).  Otherwise
    the rule falls back to :func:`hgamma_grid`.
    """
    cfg = cfg or PymConfig()
    if dp_only is None:
        dp_only = cfg.dp_only
    if alpha_axis not in ("linear", "log"):
        raise ConfigError("alpha_axis must be 'linear' or 'log'")
    H = np.atleast_2d(np.asarray(hessian, float))
    if not np.allclose(H, H.T, rtol=1e-8, atol=0):
        raise DomainError("hessian must be symmetric")
    n = int(cfg.grid_size)
    span = cfg.std_span
    d0, a0 = params
    x0 = math.log(a0) if alpha_axis == "log" else a0

    def a_box(sd):
        lo, hi = x0 - span * sd, x0 + span * sd
        if alpha_axis == "linear":
            lo = max(lo, 0.0)
        else:
            hi = min(hi, math.log(cfg.alpha_cap))
        return lo, hi

    if dp_only:
        if H.shape == (1, 1) and H[0, 0] > 0 and np.isfinite(H[0, 0]):
            return _box_grid(n, None, a_box(1.0 / math.sqrt(H[0, 0])), True, alpha_axis)
        return hgamma_grid(n, _default_h_max(params), cfg, True)

    g = None if gradient is None else np.asarray(gradient, float)
    if d0 < _D_EDGE and g is not None and H[1, 1] > 0:
        box = _edge_box(g[0], H, x0, span)
        if box is not None:
            db, (lo, hi) = box
            if alpha_axis == "linear":
                lo = max(lo, 0.0)
            else:
                hi = min(hi, math.log(cfg.alpha_cap))
            return _box_grid(n, db, (lo, hi), False, alpha_axis)
    if _is_pd(H):
        std = np.sqrt(np.diag(np.linalg.inv(H)))
        db = (max(d0 - span * std[0], 0.0), min(d0 + span * std[0], 1.0))
        return _box_grid(n, db, a_box(std[1]), False, alpha_axis)
    return hgamma_grid(n, _default_h_max(params), cfg, False)


def _edge_logpost(mult, grid, cfg, dp_only):
    """Max log posterior on each side of the box."""
    n = cfg.grid_size
    ab = grid.axis_bounds
    conv = np.exp if grid.alpha_axis == "log" else np.asarray
    out = {}
    if dp_only:
        out["a_lo"] = float(_log_post(mult, 0.0, conv(ab[0]), cfg, True))
        out["a_hi"] = float(_log_post(mult, 0.0, conv(ab[1]), cfg, True))
        return out
    db = grid.d_bounds
    ax = conv(gauss_legendre(n, *ab)[0])
    dx = gauss_legendre(n, *db)[0]
    out["d_lo"] = float(np.max(_log_post(mult, db[0], ax, cfg, False)))
    out["d_hi"] = float(np.max(_log_post(mult, db[1], ax, cfg, False)))
    out["a_lo"] = float(np.max(_log_post(mult, dx, conv(ab[0]), cfg, False)))
    out["a_hi"] = float(np.max(_log_post(mult, dx, conv(ab[1]), cfg, False)))
    return out


def _axis_limits(grid, cfg):
    if grid.alpha_axis == "log":
        return _LOG_ALPHA[0] - 10.0, math.log(cfg.alpha_cap)
    return 0.0, cfg.alpha_cap


def _expand_box(mult, grid, peak, cfg, dp_only):
    """Widen box sides whose edge still carries non-negligible density."""
    db, ab = list(grid.d_bounds), list(grid.axis_bounds)
    a_min, a_max = _axis_limits(grid, cfg)
    expansions = 0
    for _ in range(cfg.max_expansions):
        edges = _edge_logpost(mult, grid, cfg, dp_only)
        grew = False
        a_w = ab[1] - ab[0]
        if ab[0] > a_min and edges["a_lo"] > peak - cfg.edge_drop:
            ab[0] = max(ab[0] - 0.5 * a_w, a_min)
            grew = True
        if ab[1] < a_max and edges["a_hi"] > peak - cfg.edge_drop:
            ab[1] = min(ab[1] + 0.5 * a_w, a_max)
            grew = True
        if not dp_only:
            d_w = db[1] - db[0]
            if db[0] > 0 and edges["d_lo"] > peak - cfg.edge_drop:
                db[0] = max(db[0] - 0.5 * d_w, 0.0)
                grew = True
            if db[1] < 1 and edges["d_hi"] > peak - cfg.edge_drop:
                db[1] = min(db[1] + 0.5 * d_w, 1.0)
                grew = True
        if not grew:
            break
        expansions += 1
        grid = _box_grid(cfg.grid_size, db, ab, dp_only, grid.alpha_axis)
    return grid, expansions


def _widen(grid, cfg, dp_only):
    """Box three times as wide on every free side with twice the nodes,
    used to measure how much posterior mass the box captured."""
    db, ab = grid.d_bounds, grid.axis_bounds
    a_min, a_max = _axis_limits(grid, cfg)
    a_w = ab[1] - ab[0]
    ab2 = (max(ab[0] - a_w, a_min), min(ab[1] + a_w, a_max))
    d_w = db[1] - db[0]
    db2 = (max(db[0] - d_w, 0.0), min(db[1] + d_w, 1.0))
    return _box_grid(2 * cfg.grid_size, db2, ab2, dp_only, grid.alpha_axis)


def _log_weights(mult, grid, cfg, dp_only):
    with np.errstate(divide="ignore"):
        return _log_post(mult, grid.d, grid.alpha, cfg, dp_only) + np.log(grid.weights)


def _logsumexp(x):
    m = np.max(x)
    if not np.isfinite(m):
        return -np.inf
    return float(m + np.log(np.sum(np.exp(x - m))))


def _captured(mult, ref, inside, cfg, dp_only):
    """Share of the reference rule's posterior weight on nodes ``inside``."""
    lw = _log_weights(mult, ref, cfg, dp_only)
    log_z = _logsumexp(lw)
    if not np.isfinite(log_z):
        return 1.0
    return float(min(1.0, np.exp(lw[inside] - log_z).sum()))


def _box_mass(mult, grid, cfg, dp_only):
    log_z = _logsumexp(_log_weights(mult, grid, cfg, dp_only))
    ref = _widen(grid, cfg, dp_only)
    x = np.log(ref.alpha) if grid.alpha_axis == "log" else ref.alpha
    lo, hi = grid.axis_bounds
    inside = (x >= lo) & (x <= hi)
    if not dp_only:
        inside &= (ref.d >= grid.d_bounds[0]) & (ref.d <= grid.d_bounds[1])
    return log_z, _captured(mult, ref, inside, cfg, dp_only)


def _hgamma_fit(mult, params, peak, cfg, dp_only):
    """(h, gamma) rule with h_max grown until the top edge is negligible.

    Returns ``(grid, log_z, mass)``; mass is the share of h <= h_max under
    a reference rule with twice the nodes on twice the h range.
    """
    n = cfg.grid_size
    h_max = _default_h_max(params)
    while True:
        grid = hgamma_grid(n, h_max, cfg, dp_only)
        lp = _log_post(mult, grid.d, grid.alpha, cfg, dp_only)
        top = lp.reshape(n, -1)[-1] if not dp_only else lp[-1:]
        if np.max(top) < peak - cfg.edge_drop or h_max >= _H_MAX_CAP:
            break
        h_max = min(2.0 * h_max, _H_MAX_CAP)
    log_z = _logsumexp(_log_weights(mult, grid, cfg, dp_only))
    h_ref = min(2.0 * h_max, _H_MAX_CAP)
    ref = hgamma_grid(2 * n, h_ref, cfg, dp_only)
    s = gauss_legendre(2 * n, 0.0, 1.0)[0]
    inside_h = h_ref * s * s <= h_max
    inside = inside_h if dp_only else np.repeat(inside_h, 2 * n)
    return grid, log_z, _captured(mult, ref, inside, cfg, dp_only)


def _node_moments(mult, grid, cfg, dp_only):
    """Normalized posterior weights and conditional entropy moments per node."""
    lw = _log_weights(mult, grid, cfg, dp_only)
    w = np.exp(lw - _logsumexp(lw))
    cm, cv = posterior_moments(mult, grid.d, grid.alpha)
    return w, np.atleast_1d(np.asarray(cm, float)), np.atleast_1d(np.asarray(cv, float))


def _mixture(w, cm, cv):
    mean = float(np.sum(w * cm))
    return mean, float(np.sum(w * (cv + (cm - mean) ** 2)))


def _regrid(grid, n, cfg, dp_only):
    if grid.rule == "hgamma":
        return hgamma_grid(n, grid.axis_bounds[1], cfg, dp_only)
    return _box_grid(n, grid.d_bounds, grid.axis_bounds, dp_only, grid.alpha_axis)


def _refine(mult, grid, moments, cfg, dp_only):
    """Double the nodes on the same region until mean and std settle.

    A box spanning many decades of alpha can need more than ``grid_size``
    nodes per axis; the finest rule computed is always the one returned.
    """
    n = cfg.grid_size
    mean, var = _mixture(*moments)
    refinements = 0
    for _ in range(cfg.max_refinements):
        n *= 2
        fine = _regrid(grid, n, cfg, dp_only)
        fm = _node_moments(mult, fine, cfg, dp_only)
        f_mean, f_var = _mixture(*fm)
        grid, moments = fine, fm
        refinements += 1
        sd = math.sqrt(max(f_var, 0.0))
        tol = cfg.refine_tol * max(sd, 1e-12)
        settled = abs(f_mean - mean) <= tol and abs(sd - math.sqrt(max(var, 0.0))) <= tol
        mean, var = f_mean, f_var
        if settled:
            break
    return (grid, *moments, refinements)


@dataclass
class PosteriorGrid:
    """Normalized posterior weights over (d, alpha) nodes with the
    conditional entropy moments at each node."""

    d: np.ndarray
    alpha: np.ndarray
    weights: np.ndarray
    cond_mean: np.ndarray
    cond_var: np.ndarray
    map_params: PYParams
    log_post_at_map: float
    log_evidence_at_map: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean(self):
        return float(np.sum(self.weights * self.cond_mean))

    @property
    def variance(self):
        m = self.mean
        return float(np.sum(self.weights * (self.cond_var + (self.cond_mean - m) ** 2)))

    def param_moments(self):
        """Posterior mean and covariance of (d, alpha) on the grid."""
        x = np.vstack([self.d, self.alpha])
        mu = x @ self.weights
        dx = x - mu[:, None]
        cov = (dx * self.weights) @ dx.T
        return mu, cov


def posterior_grid(data, cfg=None, dp_only=None):
    """Fit the MAP, build the grid and weight its nodes by the posterior.

    The grid is laid out in (d, ln alpha), where the alpha marginal is
    much closer to Gaussian than in alpha itself.
    """
    cfg = cfg or PymConfig()
    mult = as_multiplicities(data)
    if dp_only is None:
        dp_only = cfg.dp_only
    _check_coincidences(mult)

    params = map_fit(mult, cfg, dp_only=dp_only)
    grad, hess = _geometry(mult, params, cfg, dp_only, log_alpha=True)
    peak = float(_log_post(mult, params.d, params.alpha, cfg, dp_only))
    warnings = []
    expansions = 0
    corner = math.log(params.alpha) <= _LOG_ALPHA[0] + 1e-3
    grid = None
    if not corner:
        grid = quadrature_grid(params, hess, cfg, dp_only=dp_only, gradient=grad, alpha_axis="log")
    if grid is not None and grid.rule == "box":
        grid, expansions = _expand_box(mult, grid, peak, cfg, dp_only)
        log_z, mass = _box_mass(mult, grid, cfg, dp_only)
        if mass < cfg.mass_threshold:
            alt = _hgamma_fit(mult, params, peak, cfg, dp_only)
            if alt[2] > mass:
                grid, log_z, mass = alt
    else:
        grid, log_z, mass = _hgamma_fit(mult, params, peak, cfg, dp_only)
    if not np.isfinite(log_z):
        raise NumericalError("posterior weights vanish on the quadrature grid",
                             {"map": tuple(params), "rule": grid.rule})
    if mass < cfg.mass_threshold:
        msg = f"quadrature grid captures only {mass:.4f} of the posterior mass"
        warnings.append(msg)
        log.warning(msg)

    w, cm, cv = _node_moments(mult, grid, cfg, dp_only)
    grid, w, cm, cv, refinements = _refine(mult, grid, (w, cm, cv), cfg, dp_only)
    ev_map = float(_log_evidence_core(mult, np.asarray(params.d), np.asarray(params.alpha)))
    diagnostics = {
        "rule": grid.rule,
        "alpha_axis": grid.alpha_axis,
        "d_bounds": [float(v) for v in grid.d_bounds],
        "alpha_bounds": [float(v) for v in grid.alpha_bounds],
        "nodes": int(grid.d.size),
        "box_expansions": expansions,
        "refinements": refinements,
        "mass_captured": mass,
        "hessian": np.asarray(hess).tolist(),
        "warnings": warnings,
    }
    return PosteriorGrid(grid.d, grid.alpha, w, cm, cv, params, peak, ev_map, diagnostics)


def _summarize(pg, name, mult):
    var = pg.variance
    if var < 0:
        var = 0.0
    mean, std = pg.mean, math.sqrt(var)
    if not (math.isfinite(mean) and math.isfinite(std)):
        raise NumericalError(f"{name} produced a non-finite estimate", pg.diagnostics)
    diag = dict(pg.diagnostics)
    diag.update({"N": mult.N, "K": mult.K})
    return EntropyEstimate(name, mean, std, pg.map_params.d, pg.map_params.alpha,
                           pg.log_evidence_at_map, diag)


def pym_estimate(data, cfg=None):
    """Posterior mean and std of H under the Pitman-Yor mixture prior.

    Needs at least two coincidences (N - K >= 2); raises
    :class:`NoCoincidencesError` otherwise.
    """
    cfg = cfg or PymConfig()
    mult = as_multiplicities(data)
    pg = posterior_grid(mult, cfg)
    return _summarize(pg, "dpm" if cfg.dp_only else "pym", mult)


def dpm_estimate(data, cfg=None):
    """PYM restricted to the d = 0 axis (Dirichlet-process mixture)."""
    cfg = cfg or PymConfig()
    mult = as_multiplicities(data)
    pg = posterior_grid(mult, cfg, dp_only=True)
    return _summarize(pg, "dpm", mult)
