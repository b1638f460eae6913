import math

import numpy as np
import pytest
from scipy import integrate, special

from rqmckde.errors import InvalidArgument
from rqmckde.kernel import gaussian_kernel, roughness

K = gaussian_kernel()


def test_constants():
    assert K.at_zero == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert K.mu2 == 1.0
    mu0, _ = integrate.quad(lambda x: K(x) ** 2, -np.inf, np.inf, epsabs=1e-14)
    assert K.mu0_sq == pytest.approx(mu0, rel=1e-10)
    assert K.mu0_sq == pytest.approx(0.28209479, rel=1e-8)
    m2, _ = integrate.quad(lambda x: x * x * K(x), -np.inf, np.inf)
    assert m2 == pytest.approx(K.mu2, rel=1e-10)


def test_truncation_is_negligible():
    assert K.support == 10.0
    assert K(10.0) < 8e-23


@pytest.mark.parametrize("r", range(1, 7))
def test_derivative_matches_central_difference(r):
    x = np.linspace(-5, 5, 2001)
    step = 1e-5
    fd = (K.deriv(x + step, r - 1) - K.deriv(x - step, r - 1)) / (2 * step)
    exact = K.deriv(x, r)
    # relative to the size of the derivative curve; pointwise ratios blow up at its zeros
    assert np.max(np.abs(fd - exact)) < 1e-6 * np.max(np.abs(exact))


def test_derivative_zero_order_is_kernel():
    x = np.linspace(-3, 3, 13)
    assert np.array_equal(K.deriv(x, 0), K(x))
    with pytest.raises(InvalidArgument):
        K.deriv(x, -1)


@pytest.mark.parametrize("r", range(0, 5))
def test_deriv_sq_mass_by_quadrature(r):
    val, _ = integrate.quad(lambda x: float(K.deriv(x, r)) ** 2, -np.inf, np.inf,
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    assert abs(K.deriv_sq_mass(r) - val) < 1e-8


def test_roughness_constant_and_linear():
    assert roughness(np.ones(129), 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    x = np.linspace(0, 1, 257)
    assert roughness(x, 0.0, 1.0) == pytest.approx(1 / 3, abs=1e-14)


def test_roughness_normal_density():
    x = np.linspace(-2, 2, 1025)
    oracle, _ = integrate.quad(lambda t: float(K(t)) ** 2, -2, 2, epsabs=1e-14)
    assert oracle == pytest.approx(special.erf(2) / (2 * math.sqrt(math.pi)), rel=1e-12)
    assert roughness(K(x), -2.0, 2.0) == pytest.approx(oracle, rel=1e-9)
    assert oracle == pytest.approx(0.280775, abs=1e-6)


def test_roughness_errors():
    with pytest.raises(InvalidArgument):
        roughness(np.ones(200), 1.0, 1.0)
    with pytest.raises(InvalidArgument):
        roughness(np.ones(10), 0.0, 1.0)
