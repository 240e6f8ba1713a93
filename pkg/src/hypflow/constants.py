"""The decay-constant algebra behind every estimate in the library.

All rates are assembled from three primitives gamma, beta1, beta2, beta3
and folded into minima beta, beta', beta'', beta*, beta**, beta~ whose
admissibility constraints are enforced explicitly.  The two free inputs
``delta_n`` (heat-kernel decay parameter) and ``c0`` (Ricci bound) default
to the curvature values of H^n: the L^2 spectral gap (n-1)^2/4 and the
Ricci operator norm n-1.  Both are configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DecayConstants",
    "AdmissibilityError",
    "gamma_const",
    "beta1",
    "beta2",
    "beta3",
    "beta_main",
    "beta_prime",
    "beta_dprime",
    "beta_star",
    "beta_dstar",
    "beta_tilde",
    "beta_function",
    "singular_time_integral",
]


class AdmissibilityError(ValueError):
    """A constant was requested outside its admissible parameter range."""


def _check_pq(p: float, q: float) -> None:
    if p < 1 or q < 1:
        raise AdmissibilityError("exponents must satisfy p, q >= 1")


@dataclass(frozen=True)
class DecayConstants:
    """Constant zoo for dimension ``n``.

    Parameters
    ----------
    n : int
        Ambient dimension, at least 2.
    delta_n : float, optional
        Heat-kernel decay parameter; defaults to the spectral gap
        ``(n-1)^2 / 4``.
    c0 : float, optional
        Bound on the Ricci operator; defaults to ``n - 1``.
    """

    n: int
    delta_n: float = None  # type: ignore[assignment]
    c0: float = None       # type: ignore[assignment]
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise AdmissibilityError("dimension must be at least 2")
        if self.delta_n is None:
            object.__setattr__(self, "delta_n", (self.n - 1) ** 2 / 4.0)
        if self.c0 is None:
            object.__setattr__(self, "c0", float(self.n - 1))
        if self.delta_n < 0 or self.c0 < 0:
            raise AdmissibilityError("delta_n and c0 must be nonnegative")

    # -- primitives --------------------------------------------------------

    def gamma(self, p: float, q: float) -> float:
        """(delta_n/2) [ (1/p - 1/q) + (8/q)(1 - 1/p) ]."""
        _check_pq(p, q)
        return 0.5 * self.delta_n * ((1.0 / p - 1.0 / q) + (8.0 / q) * (1.0 - 1.0 / p))

    def beta1(self, p: float, q: float) -> float:
        _check_pq(p, q)
        return 0.5 * (self.gamma(p, q) + self.c0)

    def beta2(self, p: float) -> float:
        _check_pq(p, p)
        return (4.0 * self.delta_n / (2.0 * p)) * (1.0 - 1.0 / p) + 0.5 * self.c0

    def beta3(self, p: float, q: float) -> float:
        _check_pq(p, q)
        return 0.25 * (self.gamma(q, q) + self.gamma(p, q)) + 0.5 * self.c0

    def beta4(self, alpha: float, gamma: float, zeta: float) -> float:
        """Rate in the bilinear-term bound: beta3(n/(alpha+zeta), n/gamma)."""
        if not (0 < gamma <= alpha + zeta < self.n):
            raise AdmissibilityError(
                "bilinear bound requires 0 < gamma <= alpha + zeta < n")
        return self.beta3(self.n / (alpha + zeta), self.n / gamma)

    # -- derived minima ------------------------------------------------------

    def _memoized(self, key, builder):
        if key not in self._memo:
            self._memo[key] = builder()
        return self._memo[key]

    def beta(self, delta: float) -> float:
        """min{ beta1(n, n/delta), beta3(n/(2 delta), n/delta) }."""
        if not 0 < delta < 1:
            raise AdmissibilityError("beta requires 0 < delta < 1")
        n = self.n
        return self._memoized(("beta", delta), lambda: min(
            self.beta1(n, n / delta),
            self.beta3(n / (2.0 * delta), n / delta)))

    def beta_prime(self, delta: float) -> float:
        """min{ beta, beta1(n, n), beta3(n/(delta+1), n) }."""
        if not 0 < delta < 1:
            raise AdmissibilityError("beta' requires 0 < delta < 1")
        n = self.n
        return self._memoized(("beta_prime", delta), lambda: min(
            self.beta(delta),
            self.beta1(n, n),
            self.beta3(n / (delta + 1.0), n)))

    def beta_dprime(self, q: float, delta: float) -> float:
        """min{ beta, beta3(n, q), beta3(n/(n/q + delta), q) } for q < n/(1-delta)."""
        if not 0 < delta < 1:
            raise AdmissibilityError("beta'' requires 0 < delta < 1")
        if not q < self.n / (1.0 - delta):
            raise AdmissibilityError(
                f"beta'' inadmissible: q >= n/(1-delta) "
                f"(q = {q}, n/(1-delta) = {self.n / (1.0 - delta):g})")
        n = self.n
        return self._memoized(("beta_dprime", q, delta), lambda: min(
            self.beta(delta),
            self.beta3(n, q),
            self.beta3(n / (n / q + delta), q)))

    def beta_star(self, p: float, delta: float) -> float:
        """min{ beta, beta1(p, p), beta3(n/(n/p + delta), p) } for n/p + delta < n."""
        if not 0 < delta < 1:
            raise AdmissibilityError("beta* requires 0 < delta < 1")
        if not self.n / p + delta < self.n:
            raise AdmissibilityError(
                f"beta* inadmissible: n/p + delta >= n "
                f"(n/p + delta = {self.n / p + delta:g}, n = {self.n})")
        n = self.n
        return self._memoized(("beta_star", p, delta), lambda: min(
            self.beta(delta),
            self.beta1(p, p),
            self.beta3(n / (n / p + delta), p)))

    def beta_dstar(self, p: float, delta: float) -> float:
        """Gradient companion of beta*: beta1(p, p) replaced by beta3(p, p)."""
        if not 0 < delta < 1:
            raise AdmissibilityError("beta** requires 0 < delta < 1")
        if not self.n / p + delta < self.n:
            raise AdmissibilityError(
                f"beta** inadmissible: n/p + delta >= n "
                f"(n/p + delta = {self.n / p + delta:g}, n = {self.n})")
        n = self.n
        return self._memoized(("beta_dstar", p, delta), lambda: min(
            self.beta(delta),
            self.beta3(p, p),
            self.beta3(n / (n / p + delta), p)))

    def beta_tilde(self, p: float, q: float, delta: float, delta_prime: float,
                   delta_star: float) -> float:
        """Large-time rate for the L^p-to-L^q decay ladder.

        Built as min{beta, beta*, beta'', beta1(p, q), beta1(n/(n/p+delta), q)}
        where the three auxiliary parameters obey::

            n/p - n/q + delta < 2,   1 - delta' < delta,   n/p + delta* < n.

        The inner beta and beta'' are evaluated at delta' per their
        defining substitutions q -> n/delta'.
        """
        n = self.n
        for name, val in (("delta", delta), ("delta'", delta_prime), ("delta*", delta_star)):
            if not 0 < val < 1:
                raise AdmissibilityError(f"beta~ requires 0 < {name} < 1")
        if not n / p - n / q + delta < 2:
            raise AdmissibilityError(
                f"beta~ inadmissible: n/p - n/q + delta >= 2 "
                f"({n / p - n / q + delta:g} >= 2)")
        if not 1.0 - delta_prime < delta:
            raise AdmissibilityError(
                f"beta~ inadmissible: 1 - delta' >= delta "
                f"({1.0 - delta_prime:g} >= {delta:g})")
        if not n / p + delta_star < n:
            raise AdmissibilityError(
                f"beta~ inadmissible: n/p + delta* >= n "
                f"({n / p + delta_star:g} >= {n})")

        def build():
            b = self.beta(delta_prime)
            b_dd = min(b, self.beta3(n, q),
                       self.beta3(n / (delta + delta_prime), n / delta_prime))
            b_st = min(b, self.beta1(p, p),
                       self.beta3(n / (n / p + delta_star), p))
            return min(b, b_st, b_dd,
                       self.beta1(p, q),
                       self.beta1(n / (n / p + delta), q))

        return self._memoized(
            ("beta_tilde", p, q, delta, delta_prime, delta_star), build)

    # -- reporting -----------------------------------------------------------

    def table(self, p: float, q: float, delta: float) -> dict:
        """Every constant reachable from (p, q, delta), for the CLI dump.

        Derived minima whose admissibility constraints fail are reported as
        the violated inequality instead of a number.
        """
        out = {
            "n": self.n,
            "delta_n": self.delta_n,
            "c0": self.c0,
            "p": p,
            "q": q,
            "delta": delta,
            "gamma": self.gamma(p, q),
            "beta1": self.beta1(p, q),
            "beta2": self.beta2(p),
            "beta3": self.beta3(p, q),
            "beta": self.beta(delta),
            "beta_prime": self.beta_prime(delta),
        }
        for name, fn in (
            ("beta_dprime", lambda: self.beta_dprime(q, delta)),
            ("beta_star", lambda: self.beta_star(p, delta)),
            ("beta_dstar", lambda: self.beta_dstar(p, delta)),
            ("beta_tilde", lambda: self.beta_tilde(p, q, delta, 1.0 - delta / 2.0, delta)),
        ):
            try:
                out[name] = fn()
            except AdmissibilityError as err:
                out[name] = str(err)
        return out


# -- functional aliases --------------------------------------------------------
#
# Convenience wrappers carrying the dimension explicitly, for callers that
# do not want to hold a DecayConstants instance.


def _consts(n, delta_n=None, c0=None) -> DecayConstants:
    return DecayConstants(n, delta_n, c0)


def gamma_const(n, p, q, **kw) -> float:
    return _consts(n, **kw).gamma(p, q)


def beta1(n, p, q, **kw) -> float:
    return _consts(n, **kw).beta1(p, q)


def beta2(n, p, **kw) -> float:
    return _consts(n, **kw).beta2(p)


def beta3(n, p, q, **kw) -> float:
    return _consts(n, **kw).beta3(p, q)


def beta_main(n, delta, **kw) -> float:
    return _consts(n, **kw).beta(delta)


def beta_prime(n, delta, **kw) -> float:
    return _consts(n, **kw).beta_prime(delta)


def beta_dprime(n, q, delta, **kw) -> float:
    return _consts(n, **kw).beta_dprime(q, delta)


def beta_star(n, p, delta, **kw) -> float:
    return _consts(n, **kw).beta_star(p, delta)


def beta_dstar(n, p, delta, **kw) -> float:
    return _consts(n, **kw).beta_dstar(p, delta)


def beta_tilde(n, p, q, delta, delta_prime, delta_star, **kw) -> float:
    return _consts(n, **kw).beta_tilde(p, q, delta, delta_prime, delta_star)


# -- special functions --------------------------------------------------------


def beta_function(x: float, y: float, step: float = 1.0 / 16.0) -> float:
    """Euler Beta integral B(x,y) = int_0^1 tau^{x-1} (1-tau)^{y-1} dtau.

    Tanh-sinh quadrature: tau = 1/2 (1 + tanh((pi/2) sinh u)) maps both
    algebraic endpoint singularities to double-exponential tails, so the
    trapezoid rule converges spectrally for any x, y > 0.  tau and 1 - tau
    are kept as separate sigmoids to avoid saturation near the endpoints.
    """
    if x <= 0 or y <= 0:
        raise ValueError("Beta integral requires positive arguments")
    # |u| <= 6 keeps cosh(z)^2 in range while the truncated tail is below
    # exp(-pi * min(x,y) * sinh 6) ~ 1e-27 even at x = 0.1.
    u = np.arange(-6.0, 6.0 + 0.5 * step, step)
    z = 0.5 * np.pi * np.sinh(u)
    tau = 1.0 / (1.0 + np.exp(-2.0 * z))
    one_minus_tau = 1.0 / (1.0 + np.exp(2.0 * z))
    sech = 1.0 / np.cosh(z)
    jac = 0.25 * np.pi * np.cosh(u) * sech * sech
    vals = tau ** (x - 1.0) * one_minus_tau ** (y - 1.0) * jac
    return float(step * np.sum(vals))


def singular_time_integral(t: float, delta: float, n_nodes: int = 128) -> float:
    """int_0^t (t-s)^{-(1+delta)/2} s^{-1+delta} ds by substitution quadrature.

    Splits at t/2 and removes each endpoint singularity with a power
    substitution, the same treatment the time-stepping quadrature applies
    to its weights.  Equals t^{-(1-delta)/2} B(delta, (1-delta)/2).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * (x + 1.0)      # nodes on (0, 1)
    wu = 0.5 * w
    half = 0.5 * t

    # Left piece: s = (t/2) u^{1/delta} tames s^{-1+delta}.
    s_l = half * u ** (1.0 / delta)
    jac_l = (half / delta) * u ** (1.0 / delta - 1.0)
    left = np.sum(wu * jac_l * (t - s_l) ** (-0.5 * (1.0 + delta)) * s_l ** (delta - 1.0))

    # Right piece: t - s = (t/2) u^{2/(1-delta)} tames (t-s)^{-(1+delta)/2}.
    expo = 2.0 / (1.0 - delta)
    tau = half * u ** expo
    jac_r = half * expo * u ** (expo - 1.0)
    right = np.sum(wu * jac_r * tau ** (-0.5 * (1.0 + delta)) * (t - tau) ** (delta - 1.0))

    return float(left + right)
