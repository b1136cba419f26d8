"""Closed forms for the alpha = 4 planar model with unit noise and threshold.

For a unit-intensity Poisson field the shot noise ``sum_i |X_i|**-4`` is
inverse-gamma with shape 1/2 and scale ``pi**3 / 4``, i.e.

    P(I <= x) = erfc(pi**1.5 / (2 sqrt(x))).

Scaling a unit process by ``1/sqrt(mu)`` gives intensity ``mu`` and multiplies
every ``|X_i|**-4`` by ``mu**2``, hence ``P(I_mu <= x) = erfc(mu pi**1.5 / (2 sqrt(x)))``.
Forms with ``mu_T**2 (r**4 - 1)`` as CDF argument, or with ``mu_T`` in the
denominator of the erfc argument, contradict this scaling and direct
simulation (see ``oracle``).

Incomplete-gamma expressions are realised through ``gamma(1/2, z) = sqrt(pi) erf(sqrt(z))``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .ppp import ParameterError

PI32 = math.pi ** 1.5
# scale of the unit-intensity inverse-gamma interference law
IG_SCALE = math.pi ** 3 / 4


def erfc(x):
    """Complementary error function (Cephes rational approximations via SciPy)."""
    return special.erfc(x)


def erfcx(x):
    """Scaled ``exp(x**2) * erfc(x)``; finite for large ``x`` where the product overflows."""
    return special.erfcx(x)


def interference_cdf(x, mu_T: float = 1.0):
    """``P(sum_i |X_i|**-4 <= x)`` for a PPP of intensity ``mu_T`` in the plane."""
    if not mu_T > 0:
        raise ParameterError("mu_T must be positive")
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = mu_T * PI32 / (2.0 * np.sqrt(np.where(x > 0, x, 1.0)))
        out = np.where(x > 0, special.erfc(arg), 0.0)
    out = np.where(np.isposinf(x), 1.0, out)
    return out[()] if out.ndim == 0 else out


def interference_quantile(p: float, mu_T: float = 1.0) -> float:
    """Inverse of ``interference_cdf`` in closed form."""
    if not 0 < p < 1:
        raise ParameterError("p must lie in (0, 1)")
    return (mu_T * PI32 / (2.0 * special.erfcinv(p))) ** 2


def connect_prob(r, mu_T: float = 1.0):
    """Probability that a receiver at distance ``r`` hears the origin (w = t = 1).

    ``P(r**-4 >= 1 + I) = erfc(mu_T pi**1.5 r**2 / (2 sqrt(1 - r**4)))``.
    """
    r = np.asarray(r, dtype=float)
    inside = (r < 1.0) & (r >= 0.0)
    rr = np.where(inside, r, 0.0)
    arg = mu_T * PI32 * rr * rr / (2.0 * np.sqrt(1.0 - rr ** 4))
    out = np.where(inside, special.erfc(arg), 0.0)
    return out[()] if out.ndim == 0 else out


def expected_connect_count(mu_R: float, mu_T: float) -> float:
    """Mean number of receivers connectable to a typical transmitter.

    ``mu_R * pi * erfcx(mu_T pi**1.5 / 2)``, from
    ``int_0^1 erfc(c u / sqrt(1 - u**2)) du = exp(c**2) erfc(c)``.
    """
    if mu_R < 0 or mu_T < 0:
        raise ParameterError("intensities must be nonnegative")
    return float(mu_R * math.pi * special.erfcx(mu_T * PI32 / 2.0))


def expected_connect_count_quad(mu_R: float, mu_T: float) -> float:
    """Same quantity as ``expected_connect_count`` by adaptive quadrature over the radius."""
    if mu_R < 0 or mu_T < 0:
        raise ParameterError("intensities must be nonnegative")
    if mu_R == 0:
        return 0.0
    val, _ = integrate.quad(lambda r: r * connect_prob(r, mu_T),
                            0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(mu_R * 2 * math.pi * val)


def connections_per_area(mu_R: float, mu_T: float) -> float:
    """Mean connectable pairs per unit area: ``mu_T * expected_connect_count``.

    This is the mean of the averaged connection count over a window, the
    quantity constrained when tilting towards low average connectivity.
    """
    return mu_T * expected_connect_count(mu_R, mu_T)


def poisson_entropy(mu):
    """Relative entropy rate ``mu log mu - mu + 1`` of PPP(mu) w.r.t. PPP(1)."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ParameterError("intensity must be nonnegative")
    out = special.xlogy(mu, mu) - mu + 1.0
    return out[()] if out.ndim == 0 else out


def _shifted(r):
    r = np.asarray(r, dtype=float)
    if np.any((r <= 0) | (r >= 1)):
        raise ParameterError("r must lie in (0, 1)")
    return r ** -4 - 1.0


def isolation_objective(r, lam):
    """Entropy cost plus connection probability under a local intensity ``lam``.

    ``lam log lam - lam + 1 + erfc(lam pi**1.5 / (2 sqrt(r**-4 - 1)))``.
    """
    s = _shifted(r)
    lam = np.asarray(lam, dtype=float)
    return poisson_entropy(lam) + special.erfc(lam * PI32 / (2.0 * np.sqrt(s)))


def stationarity_residual(r, lam):
    """Derivative of ``isolation_objective`` in ``lam``.

    ``log lam - pi / sqrt(s) * exp(-pi**3 lam**2 / (4 s))`` with ``s = r**-4 - 1``.
    The exponent is negative; with ``exp(+...)`` the equation has no root near
    ``r = 1``.
    """
    s = _shifted(r)
    lam = np.asarray(lam, dtype=float)
    return np.log(lam) - math.pi / np.sqrt(s) * np.exp(-IG_SCALE * lam * lam / s)
