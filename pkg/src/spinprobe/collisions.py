"""Maxwell-Boltzmann collision-energy statistics and thermal averaging."""
import math
import warnings

import numpy as np
from scipy import integrate, special

from .constants import K_B
from .exceptions import QuadratureError, RangeError
from .states import endoergic_threshold

# Upper cutoff in u = E_c / (k_B T) above the threshold; the neglected
# relative tail is below exp(-45) * poly ~ 1e-18.
TAIL_U = 45.0
NEGLIGIBLE_MASS = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def mb_pdf(energy, temperature):
    """Maxwell-Boltzmann density of the relative collision energy.

    Parameters
    ----------
    energy : float or ndarray
        Collision energy ``E_c`` in J, nonnegative.
    temperature : float
        Temperature in K, strictly positive.

    Returns
    -------
    float or ndarray
        Probability density in 1/J.
    """
    if not temperature > 0:
        raise ValueError("degenerate distribution: temperature must be > 0")
    E = np.asarray(energy, dtype=float)
    if np.any(E < 0):
        raise ValueError("collision energy must be nonnegative")
    kt = K_B * temperature
    out = (1.0 / (np.pi * kt)) ** 1.5 * 2.0 * np.pi * np.sqrt(E) * np.exp(-E / kt)
    return out if out.ndim else float(out)


def _reduced_threshold(B, T):
    return float(endoergic_threshold(B)) / (K_B * T)


def mb_upper_tail(u):
    """Probability that ``E_c / (k_B T)`` exceeds ``u``."""
    if u <= 0:
        return 1.0
    return float(special.erfc(np.sqrt(u)) + 2.0 * np.sqrt(u / np.pi) * np.exp(-u))


def endoergic_fraction(B, T):
    """Fraction of thermal collisions energetic enough for endoergic exchange.

    Closed form ``1 - erf(sqrt(a)) + 2 sqrt(a/pi) exp(-a)`` with
    ``a = mu_B B / (4 k_B T)``. Fields in T, temperatures in K.
    """
    if B < 0 or T < 0:
        raise ValueError("B and T must be nonnegative")
    if B == 0:
        return 1.0
    if T == 0:
        return 0.0
    return mb_upper_tail(_reduced_threshold(B, T))


def endoergic_fraction_numeric(B, T):
    """Adaptive-quadrature integral of :func:`mb_pdf` above the threshold."""
    if B < 0:
        raise ValueError("B must be nonnegative")
    if not T > 0:
        raise ValueError("degenerate distribution: temperature must be > 0")
    a = _reduced_threshold(B, T)
    norm = 2.0 / np.sqrt(np.pi)

    def integrand(u):
        # mb_pdf in the reduced variable u = E_c / (k_B T)
        return norm * math.sqrt(u) * math.exp(-u)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            # split at a + 1 so the sqrt edge and the exponential tail are
            # resolved independently
            head, _ = integrate.quad(integrand, a, a + 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
            tail, _ = integrate.quad(integrand, a + 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge at B={B}, T={T}: {exc}") from exc
    return head + tail


def _gauss_panels(f, edges):
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(half * (vals @ _GL_WEIGHTS)))


def adaptive_gauss(f, breakpoints, rtol=1e-12, max_doublings=14):
    """Composite 20-point Gauss-Legendre rule, refined globally by panel doubling.

    ``f`` must be vectorized. ``breakpoints`` is a sorted sequence of panel
    edges that always stay edges (kinks of the integrand go here).
    """
    base = np.unique(np.asarray(breakpoints, dtype=float))
    if base.size < 2:
        return 0.0
    n = 4
    prev = None
    for _ in range(max_doublings):
        frac = np.linspace(0.0, 1.0, n + 1)[:-1]
        edges = (base[:-1, None] + np.diff(base)[:, None] * frac[None, :]).ravel()
        edges = np.append(edges, base[-1])
        cur = _gauss_panels(f, edges)
        if prev is not None and abs(cur - prev) <= rtol * abs(cur):
            return cur
        if prev is not None and cur == 0.0 and prev == 0.0:
            return 0.0
        prev = cur
        n *= 2
    raise QuadratureError("composite Gauss-Legendre rule did not converge")


def thermal_average_sigma(provider, channel, B, T, rtol=1e-12):
    """Maxwell-Boltzmann average of an energy-resolved cross section, in m^2.

    Integrates ``mb_pdf(E) * sigma(E)`` from the channel threshold (zero for
    exoergic channels) under the substitution ``E = k_B T (a + s^2)``, which
    removes the square-root edge at the lower limit.
    """
    if not T > 0:
        raise ValueError("degenerate distribution: temperature must be > 0")
    provider.check_field(channel, B)
    kt = K_B * T
    a = _reduced_threshold(B, T) if channel.is_endoergic else 0.0
    u_hi = a + TAIL_U

    e_min, e_max = provider.energy_range(channel, B)
    if e_max < u_hi * kt:
        missing = mb_upper_tail(e_max / kt)
        if missing > NEGLIGIBLE_MASS:
            raise RangeError(
                f"{channel}: table ends at E_c/k_B = {e_max / K_B * 1e9:.4g} nK, "
                f"leaving thermal mass {missing:.3g} unaccounted at T = {T * 1e9:.4g} nK"
            )
        u_hi = e_max / kt
    if e_min > a * kt:
        missing = 1.0 - mb_upper_tail(e_min / kt)
        if missing > NEGLIGIBLE_MASS:
            raise RangeError(
                f"{channel}: table starts at E_c/k_B = {e_min / K_B * 1e9:.4g} nK, "
                f"above the integration start at T = {T * 1e9:.4g} nK"
            )
        a_lo = e_min / kt
    else:
        a_lo = a
    if u_hi <= a_lo:
        return 0.0

    s_lo = np.sqrt(a_lo - a)
    s_hi = np.sqrt(u_hi - a)
    kinks = np.asarray(provider.breakpoints(channel, B), dtype=float) / kt - a
    kinks = np.sqrt(kinks[kinks > 0])
    edges = np.concatenate(([s_lo], kinks[(kinks > s_lo) & (kinks < s_hi)], [s_hi]))

    def integrand(s):
        u = a + s * s
        energy = kt * u
        return kt * mb_pdf(energy, T) * provider.sigma(channel, B, energy) * 2.0 * s

    return adaptive_gauss(integrand, edges, rtol=rtol)
