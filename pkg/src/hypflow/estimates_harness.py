"""Numerical verification of the semigroup and solution decay estimates.

Every theorem-level bound the library relies on is recast here as a
falsifiable grid check.  The implied constants of the theory are
non-constructive, so no check compares against an absolute constant;
instead

* weighted ratios must stay bounded under refinement (a sup that moves
  by less than a factor 2 when the time grid doubles and by less than
  30 percent when the space grid doubles),
* fitted decay exponents must clear the predicted rate one-sidedly
  (measured decay at least as fast as predicted, which is the only
  direction an upper bound constrains), and
* singular time integrals must be finite and endpoint-stable.

Each check returns an :class:`EstimateReport`.  Reports are pure
functions of their inputs, so batch verification may evaluate them in
any order or in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .constants import AdmissibilityError, DecayConstants, beta_function
from .geometry import OneForm, lp_norm
from .mild_solver import Trajectory, duhamel, nonlinear_term
from .one_form_semigroup import (_stream_of, apply_L_semigroup_divfree,
                                 covariant_gradient)

ESTIMATE_IDS = (
    "dispersive", "smoothing_p", "smoothing_pq", "div_smoothing",
    "G_bound", "Ln_decay", "Lq_weighted", "grad_weighted",
    "LrLq_member", "Lp_decay", "tmdcy2_rate",
)

TIME_STABILITY = 2.0    # allowed sup growth when the time grid doubles
SPACE_STABILITY = 1.3   # allowed sup change when the space grid doubles
RATE_TOLERANCE = 0.05   # slack on fitted decay exponents
LARGE_TIME_WINDOW = (1.0, 4.0)
SMALL_TIME_WINDOW = (0.01, 0.1)


@dataclass
class EstimateReport:
    """Outcome of one estimate check.

    ``measured`` and ``predicted`` are small named-value dictionaries;
    by convention their first entries are the headline scalars that the
    flat CSV row exposes.  ``margin`` is positive exactly when the
    verdict is a pass, in the natural units of the check (stability
    headroom for ratio checks, rate surplus for fitted decay).
    """

    estimate_id: str
    parameters: dict
    measured: dict
    predicted: dict
    verdict: str
    margin: float

    def __post_init__(self):
        if self.estimate_id not in ESTIMATE_IDS:
            raise ValueError(f"unknown estimate id {self.estimate_id!r}")
        if self.verdict not in ("pass", "fail"):
            raise ValueError(f"verdict must be pass or fail, "
                             f"got {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def row(self) -> dict:
        """Flat record matching the reports.csv schema."""
        return {
            "estimate_id": self.estimate_id,
            "params_json": json.dumps(self.parameters, sort_keys=True),
            "measured": next(iter(self.measured.values())),
            "predicted": next(iter(self.predicted.values())),
            "margin": self.margin,
            "verdict": self.verdict,
        }


# -- shared machinery --------------------------------------------------------


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _context(field, constants: DecayConstants | None) -> tuple:
    n = field.grid.n_dim
    if constants is None:
        constants = DecayConstants(n)
    elif constants.n != n:
        raise AdmissibilityError(
            f"constants are for n = {constants.n}, the field lives on "
            f"n = {n}")
    return n, constants


def _ratio_times(times) -> np.ndarray:
    if times is None:
        times = np.linspace(0.1, 5.0, 9)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("at least two sample times are required")
    if times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be positive and increasing")
    return times


def _refined_sup(fn, times: np.ndarray) -> tuple:
    """Sup of fn over times and over the midpoint-refined grid.

    Refinement only inserts points, so variation = refined / coarse is
    at least 1 and measures how badly the coarse grid under-resolved
    the sup.
    """
    coarse_vals = np.array([fn(t) for t in times])
    mids = 0.5 * (times[:-1] + times[1:])
    mid_vals = np.array([fn(t) for t in mids])
    coarse = float(np.max(coarse_vals))
    refined = float(max(coarse, np.max(mid_vals)))
    variation = refined / coarse if coarse > 0 else 1.0
    return coarse, refined, variation


def fit_exponential_rate(times, values) -> float:
    """Least-squares d/dt log(values); decay appears as a negative slope."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        raise ValueError("rate fit needs at least two samples")
    if np.any(v <= 0):
        raise ValueError("rate fit needs positive values")
    return float(np.polyfit(t, np.log(v), 1)[0])


def fit_power_slope(times, values) -> float:
    """Least-squares d log(values)/d log(t); t^{-a} blowup fits to -a."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        raise ValueError("power fit needs at least two samples")
    if np.any(t <= 0) or np.any(v <= 0):
        raise ValueError("power fit needs positive times and values")
    return float(np.polyfit(np.log(t), np.log(v), 1)[0])


def _trajectory_norms(u: Trajectory, q: float) -> np.ndarray:
    q = float(q)
    if q not in u.norms:
        u.norms[q] = np.array([lp_norm(s, q) for s in u.states])
    return u.norms[q]


def linear_trajectory(a: OneForm, T: float, n_lattice: int = 24,
                      norms: tuple = (2.0, 4.0, 8.0)) -> Trajectory:
    """The semigroup orbit t -> e^{tL}a on the quadratic time lattice.

    Probe input for the decay fits: the linear part of the mild
    solution, with no quadratic correction.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    times = T * (np.arange(n_lattice + 1, dtype=float) / n_lattice) ** 2
    states = [a.copy()]
    for t in times[1:]:
        states.append(apply_L_semigroup_divfree(a, t))
    streams = np.stack([_stream_of(u) for u in states])
    table = {float(q): np.array([lp_norm(u, float(q)) for u in states])
             for q in norms}
    return Trajectory(times, states, table, {"T": T, "linear": True},
                      streams)


# -- semigroup ratio checks --------------------------------------------------


def verify_dispersive(a: OneForm, p: float, q: float, times=None,
                      constants: DecayConstants | None = None
                      ) -> EstimateReport:
    """Weighted-ratio check of the L^p to L^q semigroup decay bound.

    Computes R(t) = ||e^{tL}a||_q t^{(n/2)(1/p - 1/q)} e^{t beta1} /
    ||a||_p on the sample times and again with midpoints inserted; the
    bound is falsified when the sup is non-finite or grows by more than
    the refinement-stability factor.  R is invariant under rescaling a.
    """
    n, constants = _context(a, constants)
    if not (1.0 <= p <= q) or not np.isfinite(q):
        raise AdmissibilityError(
            "the semigroup decay bound requires 1 <= p <= q < inf")
    times = _ratio_times(times)
    power = 0.5 * n * (1.0 / p - 1.0 / q)
    rate = constants.beta1(p, q)
    denom = lp_norm(a, p)
    if denom == 0.0:
        raise ValueError("the ratio is undefined for a zero datum")

    def ratio(t):
        return (lp_norm(apply_L_semigroup_divfree(a, t), q)
                * t ** power * np.exp(rate * t) / denom)

    coarse, refined, variation = _refined_sup(ratio, times)
    ok = np.isfinite(refined) and variation < TIME_STABILITY
    return EstimateReport(
        "dispersive",
        {"n": n, "p": p, "q": q, "t_min": float(times[0]),
         "t_max": float(times[-1]), "n_times": int(times.size)},
        {"sup_ratio": refined, "variation": variation,
         "coarse_sup": coarse},
        {"variation_bound": TIME_STABILITY, "beta1": rate,
         "time_power": power},
        _verdict(ok), TIME_STABILITY - variation)


def verify_smoothing(a: OneForm, p: float, q: float, times=None,
                     constants: DecayConstants | None = None
                     ) -> EstimateReport:
    """Weighted-ratio check of the gradient smoothing bound.

    Same construction as :func:`verify_dispersive` with the covariant
    gradient of the evolved field, the weight t^{(n/2)(1/p - 1/q + 1/n)}
    and the rate beta3(p, q).  For p = q the rate coincides with
    beta2(p), which the predicted block records.
    """
    n, constants = _context(a, constants)
    if not (1.0 < p <= q) or not np.isfinite(q):
        raise AdmissibilityError(
            "the smoothing bound requires 1 < p <= q < inf")
    times = _ratio_times(times)
    power = 0.5 * n * (1.0 / p - 1.0 / q + 1.0 / n)
    rate = constants.beta3(p, q)
    denom = lp_norm(a, p)
    if denom == 0.0:
        raise ValueError("the ratio is undefined for a zero datum")

    def ratio(t):
        grad = covariant_gradient(apply_L_semigroup_divfree(a, t))
        return lp_norm(grad, q) * t ** power * np.exp(rate * t) / denom

    coarse, refined, variation = _refined_sup(ratio, times)
    ok = np.isfinite(refined) and variation < TIME_STABILITY
    predicted = {"variation_bound": TIME_STABILITY, "beta3": rate,
                 "time_power": power}
    if p == q:
        predicted["beta2"] = constants.beta2(p)
    return EstimateReport(
        "smoothing_p" if p == q else "smoothing_pq",
        {"n": n, "p": p, "q": q, "t_min": float(times[0]),
         "t_max": float(times[-1]), "n_times": int(times.size)},
        {"sup_ratio": refined, "variation": variation,
         "coarse_sup": coarse},
        predicted, _verdict(ok), TIME_STABILITY - variation)


def verify_div_smoothing(u: OneForm, p: float, q: float, times=None,
                         constants: DecayConstants | None = None
                         ) -> EstimateReport:
    """Weighted-ratio check of the divergence-form smoothing bound.

    The projected advective term P(grad_{u#} u) is the semigroup image
    of a tensor divergence, so its evolution must obey the gradient
    weight t^{(n/2)(1/p - 1/q + 1/n)} e^{t beta3} against the tensor
    norm ||u x u||_p, which for the outer product is ||u||_{2p}^2
    pointwise.
    """
    n, constants = _context(u, constants)
    if not (1.0 < p <= q) or not np.isfinite(q):
        raise AdmissibilityError(
            "the divergence-form bound requires 1 < p <= q < inf")
    times = _ratio_times(times)
    power = 0.5 * n * (1.0 / p - 1.0 / q + 1.0 / n)
    rate = constants.beta3(p, q)
    denom = lp_norm(u, 2.0 * p) ** 2
    if denom == 0.0:
        raise ValueError("the ratio is undefined for a zero datum")
    source = nonlinear_term(u)

    def ratio(t):
        return (lp_norm(apply_L_semigroup_divfree(source, t), q)
                * t ** power * np.exp(rate * t) / denom)

    coarse, refined, variation = _refined_sup(ratio, times)
    ok = np.isfinite(refined) and variation < TIME_STABILITY
    return EstimateReport(
        "div_smoothing",
        {"n": n, "p": p, "q": q, "t_min": float(times[0]),
         "t_max": float(times[-1]), "n_times": int(times.size)},
        {"sup_ratio": refined, "variation": variation,
         "coarse_sup": coarse},
        {"variation_bound": TIME_STABILITY, "beta3": rate,
         "time_power": power},
        _verdict(ok), TIME_STABILITY - variation)


def small_time_blowup(a: OneForm, q: float = 2.0,
                      window: tuple = SMALL_TIME_WINDOW,
                      n_samples: int = 7,
                      gradient: bool = True) -> float:
    """Fitted power-law exponent of the small-time norm growth.

    Returns the exponent b in ||...||_q ~ t^{-b} fitted on a geometric
    grid inside the window; smooth compactly supported data saturate
    well below the worst-case exponent of the smoothing weight.
    """
    times = np.geomspace(window[0], window[1], n_samples)
    values = []
    for t in times:
        evolved = apply_L_semigroup_divfree(a, t)
        field = covariant_gradient(evolved) if gradient else evolved
        values.append(lp_norm(field, q))
    return -fit_power_slope(times, values)


# -- the quadratic-term bound --------------------------------------------------


def _gest_integral(t: float, power: float, rate: float, product_fn,
                   s_power: float = 0.0) -> float:
    """int_0^t s^{-s_power} (t-s)^{-power} e^{-(t-s) rate} product_fn(s) ds.

    Both algebraic endpoint factors go to the quadrature routine as an
    explicit weight, so the adaptive rule sees only the smooth part.
    """
    if not power < 1.0:
        raise AdmissibilityError(
            "the kernel is not integrable: need alpha + zeta - gamma < 1")
    if not s_power < 1.0:
        raise AdmissibilityError("the s-weight must be integrable")

    def smooth(s):
        return np.exp(-(t - s) * rate) * product_fn(s)

    value, _ = quad(smooth, 0.0, t, weight="alg",
                    wvar=(-s_power, -power), limit=200)
    return float(value)


def gest_model_check(t: float, delta: float) -> tuple:
    """The quadratic-term s-integral on model norms versus its closed form.

    With both norm factors replaced by the model profile s^{-(1-delta)/2}
    and the exponential weights stripped, the right side of the
    quadratic-term bound collapses to the Beta integral
    t^{-(1-delta)/2} B(delta, (1-delta)/2).  Returns (quadrature,
    closed_form); the pair must agree to quadrature accuracy.
    """
    if not 0.0 < delta < 1.0:
        raise AdmissibilityError("delta must lie in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    power = 0.5 * (1.0 + delta)
    measured = _gest_integral(t, power, 0.0, lambda s: 1.0,
                              s_power=1.0 - delta)
    closed = t ** (-0.5 * (1.0 - delta)) \
        * beta_function(delta, 0.5 * (1.0 - delta))
    return measured, closed


def verify_G_bound(u: Trajectory, alpha: float, gamma: float, zeta: float,
                   t: float, constants: DecayConstants | None = None
                   ) -> EstimateReport:
    """Two-sided evaluation of the quadratic-term norm bound.

    Left side: ||Gu(t)||_{n/gamma} by the solver's own quadrature.
    Right side: the singular s-integral of the product of trajectory
    norms with the beta4 = beta3(n/(alpha+zeta), n/gamma) weight.  The
    check reports the implied constant left/right and its stability
    when the norm interpolant is rebuilt on the half-density lattice;
    the theory only promises a finite constant, so that stability is
    the falsifiable content.
    """
    n, constants = _context(u.states[0], constants)
    if not (0.0 < gamma <= alpha + zeta < n):
        raise AdmissibilityError(
            "the quadratic-term bound requires 0 < gamma <= alpha + zeta < n")
    beta4 = constants.beta4(alpha, gamma, zeta)
    power = 0.5 * (alpha + zeta - gamma + 1.0)
    left = lp_norm(duhamel(u, t, check=False), n / gamma)

    product = (_trajectory_norms(u, n / alpha)
               * _trajectory_norms(u, n / zeta))

    def integral(times, values):
        interp = PchipInterpolator(times, values, extrapolate=False)
        return _gest_integral(t, power, beta4, interp)

    right = integral(u.times, product)
    keep = np.unique(np.r_[np.arange(0, u.times.size, 2),
                           u.times.size - 1])
    right_coarse = integral(u.times[keep], product[keep])

    if left == 0.0 and right == 0.0:
        implied, variation, ok = 0.0, 1.0, True
    elif right <= 0.0 or right_coarse <= 0.0:
        implied, variation, ok = float("inf"), float("inf"), False
    else:
        implied = left / right
        variation = max(right / right_coarse, right_coarse / right)
        ok = np.isfinite(implied) and implied > 0.0 \
            and variation < TIME_STABILITY
    return EstimateReport(
        "G_bound",
        {"n": n, "alpha": alpha, "gamma": gamma, "zeta": zeta, "t": t},
        {"implied_constant": implied, "left": left,
         "right_integral": right, "variation": variation},
        {"beta4": beta4, "kernel_power": power,
         "variation_bound": TIME_STABILITY},
        _verdict(ok), TIME_STABILITY - variation)


# -- decay of trajectories ---------------------------------------------------


def measure_decay(u: Trajectory, q: float, weight_power: float,
                  beta_expected: float,
                  fit_window: tuple = LARGE_TIME_WINDOW, *,
                  gradient: bool = False,
                  tolerance: float = RATE_TOLERANCE) -> EstimateReport:
    """Fitted decay rate of t^{weight_power} ||u(t)||_q over the window.

    The check is one-sided: it passes when the fitted rate is at most
    -beta_expected + tolerance (decay at least as fast as predicted)
    and the weighted quantity t^{weight_power} e^{t beta_expected}
    ||u(t)||_q has a finite sup over the lattice.  With ``gradient``
    the covariant gradient norms are measured instead.
    """
    n = u.grid.n_dim
    lo, hi = fit_window
    positive = u.times > 0.0
    tpos = u.times[positive]
    if gradient:
        values = np.array([lp_norm(covariant_gradient(s), q)
                           for s, keep in zip(u.states, positive) if keep])
    else:
        values = _trajectory_norms(u, q)[positive]
    window = (tpos >= lo) & (tpos <= hi)
    if np.count_nonzero(window) < 2:
        raise ValueError(
            f"the fit window [{lo:g}, {hi:g}] contains fewer than two "
            "lattice times")
    if np.any(values[window] <= 0.0):
        raise ValueError("non-positive norms inside the fit window")

    rate = fit_exponential_rate(
        tpos[window], tpos[window] ** weight_power * values[window])
    weighted_sup = float(np.max(
        tpos ** weight_power * np.exp(beta_expected * tpos) * values))
    bound = -beta_expected + tolerance
    ok = rate <= bound and np.isfinite(weighted_sup)

    if gradient:
        estimate_id = "grad_weighted"
    elif weight_power == 0.0 and q == n:
        estimate_id = "Ln_decay"
    elif weight_power == 0.0:
        estimate_id = "Lp_decay"
    else:
        estimate_id = "Lq_weighted"
    return EstimateReport(
        estimate_id,
        {"n": n, "q": q, "weight_power": weight_power,
         "beta_expected": beta_expected, "window_lo": lo, "window_hi": hi,
         "gradient": gradient},
        {"fitted_rate": rate, "weighted_sup": weighted_sup},
        {"rate_bound": bound, "beta": beta_expected,
         "tolerance": tolerance},
        _verdict(ok), bound - rate)


def small_time_weighted_values(u: Trajectory, q: float,
                               k: int = 3) -> np.ndarray:
    """t^{1/2 - n/2q} ||u(t)||_q at the k smallest positive lattice times.

    For q above the dimension the weighted quantity vanishes at t = 0,
    so these values must decrease toward zero as the lattice refines
    toward the origin.
    """
    n = u.grid.n_dim
    if u.times.size < k + 1:
        raise ValueError("the trajectory is too short")
    weight = 0.5 - 0.5 * n / q
    t = u.times[1:k + 1]
    return t ** weight * _trajectory_norms(u, q)[1:k + 1]


# -- space-time membership ----------------------------------------------------


def classify_space_time(n: int, r: float, q: float) -> dict:
    """Arithmetic classification of the space-time pair (r, q).

    The critical line is 1/r = 1/2 - n/(2q).  q = n admits every
    finite r >= 1; pairs on the line are scaling-critical; pairs above
    it (1/r larger) are subcritical; pairs below it fall outside the
    membership theory and are flagged rather than integrated.
    """
    if r < 1 or q < 1:
        raise AdmissibilityError("membership requires r >= 1 and q >= 1")
    exponent = 0.5 - 0.5 * n / q
    critical_r = float("inf") if exponent <= 0.0 else 1.0 / exponent
    inv_r = 1.0 / r
    if q == n:
        kind = "q=n"
    elif abs(inv_r - exponent) <= 1e-12:
        kind = "critical"
    elif inv_r > exponent:
        kind = "subcritical"
    else:
        kind = "inadmissible"
    return {"kind": kind, "exponent": exponent, "critical_r": critical_r}


def verify_space_time_membership(u: Trajectory, r: float, q: float
                                 ) -> EstimateReport:
    """Finiteness of int_0^T ||u(t)||_q^r dt with an endpoint-stable rule.

    The quadratic lattice already grades its nodes toward t = 0 at the
    density the endpoint model t^{-r(1/2 - n/2q)} demands, so the
    integral is the antiderivative of the monotone-cubic interpolant of
    the lattice norms.  The falsifiable content is the endpoint probe:
    halving the smallest positive lattice time must move the integral
    by less than the stability factor, which a genuinely non-integrable
    endpoint cannot satisfy because every halving keeps inflating the
    refined value.  Inadmissible pairs are flagged, never integrated.
    """
    n = u.grid.n_dim
    cls = classify_space_time(n, r, q)
    if cls["kind"] == "inadmissible":
        raise AdmissibilityError(
            f"(r, q) = ({r:g}, {q:g}) sits below the critical line: "
            f"1/r = {1.0 / r:g} < 1/2 - n/2q = {cls['exponent']:g}; the "
            f"scaling-critical exponent for q = {q:g} is "
            f"r = {cls['critical_r']:g}")
    values = _trajectory_norms(u, q)

    def lattice_integral(times, vals):
        anti = PchipInterpolator(times, vals ** r).antiderivative()
        return float(anti(times[-1]) - anti(times[0]))

    base = lattice_integral(u.times, values)
    t_half = 0.5 * (u.times[0] + u.times[1])
    v_half = lp_norm(u.state_at(t_half), q)
    refined = lattice_integral(np.insert(u.times, 1, t_half),
                               np.insert(values, 1, v_half))

    if base == 0.0 and refined == 0.0:
        variation = 1.0
    elif base <= 0.0 or refined <= 0.0:
        variation = float("inf")
    else:
        variation = max(base / refined, refined / base)
    ok = np.isfinite(refined) and variation < TIME_STABILITY
    return EstimateReport(
        "LrLq_member",
        {"n": n, "r": r, "q": q, "kind": cls["kind"],
         "T": float(u.times[-1])},
        {"integral": refined, "coarse_integral": base,
         "variation": variation},
        {"endpoint_power": r * cls["exponent"],
         "variation_bound": TIME_STABILITY},
        _verdict(ok), TIME_STABILITY - variation)


# -- the two-exponent decay ladder ---------------------------------------------


def tmdcy2_branch(n: float, p: float, q: float, *, gradient: bool = False,
                  epsilon: float = 0.25) -> dict:
    """Branch selection and auxiliary-exponent construction of the ladder.

    The direct branch applies when n/2p - n/2q (plus 1/2 for the
    gradient ladder) stays below 1; otherwise the exponent p is
    replaced by p' = qn/(2 g q + n) with g the capped target gap, which
    lands p' strictly inside (p, n) with p' <= q.  For the gradient
    ladder the cap keeps p' below n, which bounds epsilon by n/2q.
    """
    if not (1.0 < p <= q) or not np.isfinite(q):
        raise AdmissibilityError("the ladder requires 1 < p <= q < inf")
    if not 0.0 < epsilon < 0.5:
        raise AdmissibilityError("epsilon must lie in (0, 1/2)")
    base = 0.5 * n / p - 0.5 * n / q
    shift = 0.5 if gradient else 0.0
    if base + shift < 1.0:
        return {"branch": "td5" if gradient else "td3", "p_eff": p,
                "p_prime": None, "t_power": base + 2.0 * shift,
                "epsilon": epsilon, "gap": base}
    eps_eff = min(epsilon, 0.25 * n / q) if gradient else epsilon
    gap = 1.0 - eps_eff - shift
    p_prime = q * n / (2.0 * gap * q + n)
    return {"branch": "td6" if gradient else "td4", "p_eff": p_prime,
            "p_prime": p_prime, "t_power": gap + 2.0 * shift,
            "epsilon": eps_eff, "gap": base}


def verify_tmdcy2(u: Trajectory, p: float, q: float, deltas: tuple, *,
                  gradient: bool = False, epsilon: float = 0.25,
                  constants: DecayConstants | None = None
                  ) -> EstimateReport:
    """Refinement-stable sup of the two-exponent weighted decay quantity.

    Measures sup over lattice times t >= 1 of t^w e^{t beta~} times the
    L^q norm of u (or of its covariant gradient), with the weight w and
    the effective integrability exponent chosen by the branch logic.
    For p = q the time weight collapses to zero and the check reduces
    to plain exponential boundedness.
    """
    n, constants = _context(u.states[0], constants)
    try:
        delta, delta_prime, delta_star = deltas
    except (TypeError, ValueError):
        raise AdmissibilityError(
            "deltas must be the triple (delta, delta', delta*)") from None
    branch = tmdcy2_branch(n, p, q, gradient=gradient, epsilon=epsilon)
    p_eff = branch["p_eff"]
    if gradient and not n / p_eff - n / q + 1.0 + delta < 2.0:
        raise AdmissibilityError(
            f"no admissible delta triple: n/p - n/q + 1 + delta = "
            f"{n / p_eff - n / q + 1.0 + delta:g} >= 2")
    beta_t = constants.beta_tilde(p_eff, q, delta, delta_prime, delta_star)

    window = u.times >= 1.0
    if np.count_nonzero(window) < 2:
        raise ValueError("the trajectory does not reach past t = 1")
    times = u.times[window]
    if gradient:
        values = np.array([lp_norm(covariant_gradient(s), q)
                           for s, keep in zip(u.states, window) if keep])
    else:
        values = _trajectory_norms(u, q)[window]

    def weighted(t, v):
        return t ** branch["t_power"] * np.exp(beta_t * t) * v

    coarse = float(np.max(weighted(times, values)))
    mids = 0.5 * (times[:-1] + times[1:])
    mid_vals = []
    for t in mids:
        state = u.state_at(t)
        field = covariant_gradient(state) if gradient else state
        mid_vals.append(weighted(t, lp_norm(field, q)))
    refined = float(max(coarse, np.max(mid_vals)))
    variation = refined / coarse if coarse > 0.0 else 1.0
    ok = np.isfinite(refined) and variation < TIME_STABILITY
    return EstimateReport(
        "tmdcy2_rate",
        {"n": n, "p": p, "q": q, "delta": delta,
         "delta_prime": delta_prime, "delta_star": delta_star,
         "gradient": gradient, "branch": branch["branch"],
         "p_prime": branch["p_prime"]},
        {"weighted_sup": refined, "variation": variation},
        {"beta_tilde": beta_t, "t_power": branch["t_power"],
         "variation_bound": TIME_STABILITY},
        _verdict(ok), TIME_STABILITY - variation)
