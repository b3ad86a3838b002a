"""Test distributions with exact entropies, and count generators.

Spec strings: ``uniform:S``, ``powerlaw:a:S``, ``poisson:lam``, ``py:d:alpha``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .counts import CountData
from .exceptions import ConfigError, DomainError, TailTruncationError
from .pitman_yor import check_params
from .sampler import STICK_CAP, make_rng

POISSON_TAIL = 1e-15
PY_TAIL = 1e-12


def exact_entropy(p):
    """-sum p ln p with compensated summation."""
    p = np.asarray(p, float)
    p = p[p > 0]
    return math.fsum((-p * np.log(p)).tolist())


@dataclass(frozen=True)
class KnownDistribution:
    """A distribution with explicit weights (None for an unrealized PY draw)."""

    kind: str
    params: tuple
    probabilities: np.ndarray | None = None
    true_entropy: float | None = None

    @property
    def spec(self):
        return ":".join([self.kind, *(format(v, "g") for v in self.params)])


def _finite(kind, params, p):
    p = np.asarray(p, float)
    p = p / math.fsum(p.tolist())
    p.setflags(write=False)
    return KnownDistribution(kind, tuple(params), p, exact_entropy(p))


def uniform(S):
    if int(S) != S or S < 1:
        raise ConfigError("uniform needs an integer support size S >= 1")
    return _finite("uniform", (int(S),), np.full(int(S), 1.0 / S))


def power_law(a, S):
    """p_n proportional to n^-a for n = 1..S."""
    if not a > 0:
        raise ConfigError("power-law exponent must be > 0")
    if int(S) != S or S < 1:
        raise ConfigError("power law needs an integer support size S >= 1")
    n = np.arange(1, int(S) + 1, dtype=float)
    return _finite("powerlaw", (float(a), int(S)), n ** -float(a))


def poisson(lam):
    """Poisson(lam) truncated once the cumulative mass exceeds 1 - 1e-15."""
    if not (lam > 0 and math.isfinite(lam)):
        raise ConfigError("Poisson rate must be > 0")
    k_max = int(stats.poisson.isf(POISSON_TAIL, lam)) + 1
    k = np.arange(k_max + 1)
    return _finite("poisson", (float(lam),), stats.poisson.pmf(k, lam))


def py_draw(d, alpha):
    """A PY(d, alpha) random distribution; weights appear on :func:`realize`."""
    try:
        check_params(d, alpha)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return KnownDistribution("py", (float(d), float(alpha)))


_KINDS = {"uniform": (uniform, 1), "powerlaw": (power_law, 2), "poisson": (poisson, 1), "py": (py_draw, 2)}


def build(spec):
    """Distribution from a spec string such as ``powerlaw:2:10000``."""
    parts = str(spec).strip().split(":")
    kind = parts[0].lower().replace("_", "")
    if kind not in _KINDS:
        raise ConfigError(f"unknown distribution kind {parts[0]!r}")
    fn, nargs = _KINDS[kind]
    if len(parts) - 1 != nargs:
        raise ConfigError(f"{kind} takes {nargs} parameter(s), got {len(parts) - 1}")
    try:
        args = [float(x) for x in parts[1:]]
    except ValueError:
        raise ConfigError(f"bad number in distribution spec {spec!r}") from None
    return fn(*args)


def _py_weights(d, alpha, rng, tail=PY_TAIL, max_sticks=STICK_CAP):
    """Stick-break until the unbroken mass falls below ``tail``."""
    pieces = []
    logr = 0.0
    n = 0
    chunk = 1024
    log_tail = math.log(tail)
    while logr >= log_tail:
        if n >= max_sticks:
            raise TailTruncationError(
                f"PY({d}, {alpha}) tail mass still {math.exp(logr):.3g} after {n} sticks",
                {"d": d, "alpha": alpha},
            )
        i = np.arange(n + 1, n + chunk + 1, dtype=float)
        b = alpha + i * d
        betas = np.ones(chunk)
        live = b > 0
        betas[live] = rng.beta(1.0 - d, b[live])
        with np.errstate(divide="ignore"):
            log1m = np.log1p(-betas)
        cum = np.cumsum(log1m)
        before = logr + np.concatenate([[0.0], cum[:-1]])
        pieces.append(betas * np.exp(before))
        logr += cum[-1]
        n += chunk
        chunk = min(2 * chunk, max_sticks - n) if n < max_sticks else chunk
    w = np.concatenate(pieces)
    return w[w > 0]


def realize(dist, rng=None):
    """Explicit weights for ``dist``; PY draws are stick-broken with ``rng``."""
    if dist.probabilities is not None:
        return dist
    d, alpha = dist.params
    w = _py_weights(d, alpha, make_rng(rng))
    return _finite("py", dist.params, w)


def draw_counts(dist, n, rng=None):
    """Tally ``n`` iid draws from ``dist``; symbols are labelled by index.

    A PY draw is realized first from the same generator.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    rng = make_rng(rng)
    p = realize(dist, rng).probabilities
    counts = rng.multinomial(int(n), p)
    nz = np.flatnonzero(counts)
    return CountData.from_counts({str(int(i)): int(counts[i]) for i in nz})
