"""Stick-breaking samplers for Pitman-Yor weights and entropies.

All samplers take a seed or a ``numpy.random.Generator``; a given seed
always reproduces the same stream.  The vectorized ``size=`` variants
consume the stream differently from repeated scalar calls, so the two are
each deterministic but not interchangeable.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from .counts import as_multiplicities
from .exceptions import DomainError, TailTruncationError
from .pitman_yor import _prior_var, check_params
from .pym import PymConfig, posterior_grid
from .special import digamma

STICK_CAP = 10 ** 7
_CHUNK_CELLS = 2_000_000


def make_rng(seed=None):
    """``Generator`` from an int seed or SeedSequence (PCG64); Generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if seed is not None and (int(seed) != seed or seed < 0 or seed >= 2 ** 64):
        raise DomainError("seed must be an integer in [0, 2**64)")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class WeightSample:
    weights: np.ndarray
    remaining_mass: float


def _tail_shape(d, alpha, i):
    # Beta(1 - d, alpha + i d) has an infinite second shape at d = alpha = 0;
    # the stick is then degenerate at 1.
    return alpha + i * d


def stick_break(d, alpha, n_sticks, rng=None):
    """First ``n_sticks`` size-biased PY(d, alpha) weights.

    Stops early once the remaining mass is exactly zero (d = alpha = 0).
    """
    d, alpha = (float(v) for v in check_params(d, alpha))
    if int(n_sticks) != n_sticks or n_sticks < 1:
        raise DomainError("n_sticks must be a positive integer")
    rng = make_rng(rng)
    i = np.arange(1, int(n_sticks) + 1, dtype=float)
    b = _tail_shape(d, alpha, i)
    betas = np.ones_like(b)
    live = b > 0
    betas[live] = rng.beta(1.0 - d, b[live])
    with np.errstate(divide="ignore"):
        log1m = np.log1p(-betas)
    before = np.concatenate([[0.0], np.cumsum(log1m)[:-1]])
    w = betas * np.exp(before)
    rem = float(np.exp(before[-1] + log1m[-1]))
    if rem == 0.0:
        stop = int(np.argmax(log1m == -np.inf)) + 1 if np.any(log1m == -np.inf) else len(w)
        w = w[:stop]
    return WeightSample(w, rem)


def sample_prior_entropies(d, alpha, size, rng=None, tail_var_tol=1e-4, max_sticks=STICK_CAP):
    """``size`` independent tail-corrected entropy draws under PY(d, alpha).

    Sticks are broken in growing chunks for all draws at once until
    ``Var[H_tail] r^2 < tail_var_tol`` (or r < 1e-12); the unbroken remainder
    r contributes ``-r ln r + r E[H | d, alpha + n d]``.
    """
    d, alpha = (float(v) for v in check_params(d, alpha))
    if not tail_var_tol > 0:
        raise DomainError("tail_var_tol must be > 0")
    rng = make_rng(rng)
    size = int(size)
    H = np.zeros(size)
    if size == 0 or (d == 0.0 and alpha == 0.0):
        return H
    logr = np.zeros(size)
    active = np.arange(size)
    n = 0
    chunk = 16
    while active.size:
        if n >= max_sticks:
            raise TailTruncationError(
                f"tail did not converge within {max_sticks} sticks",
                {"d": d, "alpha": alpha, "unfinished": int(active.size)},
            )
        chunk = min(chunk, max(1, _CHUNK_CELLS // active.size), max_sticks - n)
        i = np.arange(n + 1, n + chunk + 1, dtype=float)
        betas = rng.beta(1.0 - d, np.broadcast_to(alpha + i * d, (active.size, chunk)))
        with np.errstate(divide="ignore"):
            log1m = np.log1p(-betas)
        cum = np.cumsum(log1m, axis=1)
        before = logr[active, None] + np.concatenate([np.zeros((active.size, 1)), cum[:, :-1]], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = betas * np.exp(before)
            contrib = np.where(w > 0, -w * (np.log(betas) + before), 0.0)
        H[active] += contrib.sum(axis=1)
        logr[active] += cum[:, -1]
        n += chunk
        chunk *= 2

        r = np.exp(logr[active])
        tail_alpha = alpha + n * d
        tail_var = float(_prior_var(np.asarray(d), np.asarray(tail_alpha)))
        done = (tail_var * r * r < tail_var_tol) | (r < 1e-12)
        if np.any(done):
            rd = r[done]
            tail_mean = digamma(tail_alpha + 1.0) - digamma(1.0 - d)
            H[active[done]] += entr(rd) + rd * tail_mean
            active = active[~done]
    return H


def sample_prior_entropy(d, alpha, tail_var_tol=1e-4, rng=None):
    """One tail-corrected entropy draw under PY(d, alpha)."""
    return float(sample_prior_entropies(d, alpha, 1, rng, tail_var_tol)[0])


def sample_posterior_entropies(data, d, alpha, size, rng=None, tail_var_tol=1e-4):
    """Posterior entropy draws for fixed (d, alpha).

    (p_1..p_K, p_*) ~ Dir(n_1 - d, ..., n_K - d, alpha + K d) via Gamma
    draws; the tail adds ``-p_* ln p_* + p_* H_tail`` with H_tail a
    PY(d, alpha + K d) prior entropy draw.
    """
    mult = as_multiplicities(data)
    if mult.N < 1:
        raise DomainError("posterior sampling needs at least one sample")
    d, alpha = (float(v) for v in check_params(d, alpha))
    rng = make_rng(rng)
    size = int(size)
    shapes = np.repeat(mult.freqs.astype(float), mult.mults) - d
    tail_alpha = alpha + mult.K * d
    out = np.empty(size)
    p_star = np.zeros(size)
    rows = max(1, _CHUNK_CELLS // (shapes.size + 1))
    for start in range(0, size, rows):
        m = min(rows, size - start)
        g = rng.gamma(shapes, size=(m, shapes.size))
        gs = rng.gamma(tail_alpha, size=m) if tail_alpha > 0 else np.zeros(m)
        total = g.sum(axis=1) + gs
        ps = gs / total
        out[start:start + m] = entr(g / total[:, None]).sum(axis=1) + entr(ps)
        p_star[start:start + m] = ps
    if tail_alpha > 0:
        out += p_star * sample_prior_entropies(d, tail_alpha, size, rng, tail_var_tol)
    return out


def sample_posterior_entropy(data, d, alpha, rng=None, tail_var_tol=1e-4):
    """One posterior entropy draw for fixed (d, alpha)."""
    return float(sample_posterior_entropies(data, d, alpha, 1, rng, tail_var_tol)[0])


def sample_pym_posterior(data, cfg=None, n_draws=1000, rng=None):
    """Draws from the PYM posterior over H.

    Each draw picks a grid node (d, alpha) with its normalized posterior
    weight and then samples H given that node.
    """
    cfg = cfg or PymConfig()
    if int(n_draws) != n_draws or n_draws < 0:
        raise DomainError("n_draws must be a non-negative integer")
    mult = as_multiplicities(data)
    pg = posterior_grid(mult, cfg)
    rng = make_rng(rng)
    n_draws = int(n_draws)
    out = np.empty(n_draws)
    if n_draws == 0:
        return out
    idx = rng.choice(pg.weights.size, size=n_draws, p=pg.weights)
    for node in np.unique(idx):
        where = np.flatnonzero(idx == node)
        out[where] = sample_posterior_entropies(mult, pg.d[node], pg.alpha[node], where.size, rng)
    return out
