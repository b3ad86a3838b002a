import math

import numpy as np
import pytest

from pymentropy import NumericalError
from pymentropy.quadrature import adaptive_integrate, gauss_legendre, tensor_rule


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(6, -1.0, 3.0)
    assert np.sum(w * x ** 11) == pytest.approx((3 ** 12 - 1) / 12, rel=1e-13)


def test_tensor_rule_layout():
    x0, x1, w = tensor_rule(5, ((0, 1), (2, 4)))
    assert x0.size == x1.size == w.size == 25
    assert np.all(np.diff(x0.reshape(5, 5)[:, 0]) > 0)
    assert np.sum(w * x0 ** 3 * x1 ** 2) == pytest.approx(0.25 * (64 - 8) / 3, rel=1e-13)


def test_adaptive_integrate_gaussian_moments():
    def fn(x):
        return -0.5 * ((x - 1.5) / 0.01) ** 2, np.vstack([x, x * x])

    (z, m1, m2), ref, panels = adaptive_integrate(fn, -20.0, 20.0, rtol=1e-12)
    assert z * math.exp(ref) == pytest.approx(0.01 * math.sqrt(2 * math.pi), rel=1e-10)
    assert m1 / z == pytest.approx(1.5, rel=1e-12)
    assert m2 / z - (m1 / z) ** 2 == pytest.approx(1e-4, rel=1e-8)
    assert panels >= 32


def test_adaptive_integrate_errors():
    with pytest.raises(NumericalError):
        adaptive_integrate(lambda x: (np.full_like(x, -np.inf), np.vstack([x])), 0.0, 1.0)
    with pytest.raises(NumericalError):
        adaptive_integrate(lambda x: (np.zeros_like(x), np.vstack([np.sign(np.sin(1e3 * x))])),
                           0.0, 1.0, rtol=1e-14, max_panels=64)
