"""Gauss-Legendre rules: fixed, tensor-product and adaptive."""

from functools import lru_cache

import numpy as np

from .exceptions import NumericalError


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a, b):
    """Nodes and weights of the n-point rule on [a, b]."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def tensor_rule(n, box):
    """Tensor-product Gauss-Legendre rule on ``box = ((lo0, hi0), (lo1, hi1))``.

    Returns ``(x0, x1, w)`` flattened, with the first axis varying slowest.
    """
    (lo0, hi0), (lo1, hi1) = box
    x0, w0 = gauss_legendre(n, lo0, hi0)
    x1, w1 = gauss_legendre(n, lo1, hi1)
    X0, X1 = np.meshgrid(x0, x1, indexing="ij")
    W = np.outer(w0, w1)
    return X0.ravel(), X1.ravel(), W.ravel()


def adaptive_integrate(fn, a, b, rtol=1e-10, init_panels=32, max_panels=8192, order=20):
    """Integrate ``exp(logw(x)) * [1, v_1(x), ..., v_k(x)]`` over [a, b].

    ``fn(x)`` returns ``(logw, vals)`` with ``vals`` of shape ``(k, len(x))``.
    Panels are bisected until the ``order``-point and ``order/2``-point
    estimates agree to ``rtol`` relative to the running totals.  The
    integrals are returned scaled by ``exp(-ref)``; ``ref`` is returned too.
    """
    hi_x, hi_w = _leggauss(order)
    lo_x, lo_w = _leggauss(order // 2)

    def panel_sums(lo_edge, hi_edge, ref):
        mids = 0.5 * (lo_edge + hi_edge)
        halves = 0.5 * (hi_edge - lo_edge)
        out = []
        for xs, ws in ((hi_x, hi_w), (lo_x, lo_w)):
            pts = (mids[:, None] + halves[:, None] * xs[None, :]).ravel()
            logw, vals = fn(pts)
            logw = np.asarray(logw, dtype=float)
            vals = np.atleast_2d(np.asarray(vals, dtype=float))
            scaled = np.exp(logw - ref)
            rows = np.vstack([scaled, scaled * vals])
            rows = np.where(np.isfinite(rows), rows, 0.0)
            rows = rows.reshape(rows.shape[0], len(mids), len(xs))
            out.append((rows * ws[None, None, :]).sum(axis=2) * halves[None, :])
        return out[0], out[1], logw

    edges = np.linspace(a, b, init_panels + 1)
    lo_e, hi_e = edges[:-1], edges[1:]
    # locate the peak first so that the exponentials stay in range
    pts = (0.5 * (lo_e + hi_e)[:, None] + 0.5 * (hi_e - lo_e)[:, None] * hi_x[None, :]).ravel()
    logw0, _ = fn(pts)
    logw0 = np.asarray(logw0, dtype=float)
    finite = logw0[np.isfinite(logw0)]
    if finite.size == 0:
        raise NumericalError("integrand vanishes on the whole interval", {"a": a, "b": b})
    ref = float(finite.max())

    done = None
    total_panels = init_panels
    while lo_e.size:
        hi_est, lo_est, _ = panel_sums(lo_e, hi_e, ref)
        accepted_so_far = done if done is not None else np.zeros(hi_est.shape[0])
        total = np.abs(accepted_so_far + hi_est.sum(axis=1))
        err = np.abs(hi_est - lo_est)
        scale = np.maximum(total, 1e-300)[:, None]
        bad = np.any(err > rtol * scale / max(lo_e.size, 1) ** 0.5, axis=0)
        widths = hi_e - lo_e
        bad &= widths > (b - a) * 1e-9
        good_sum = hi_est[:, ~bad].sum(axis=1)
        done = accepted_so_far + good_sum
        if not np.any(bad):
            break
        mid = 0.5 * (lo_e[bad] + hi_e[bad])
        lo_e = np.concatenate([lo_e[bad], mid])
        hi_e = np.concatenate([mid, hi_e[bad]])
        total_panels += int(bad.sum())
        if total_panels > max_panels:
            raise NumericalError(
                "adaptive quadrature did not converge",
                {"panels": total_panels, "interval": (a, b), "rtol": rtol},
            )
    return done, ref, total_panels
