"""Closed-form and semi-analytic tail asymptotes for the three drift regimes.

All evaluators work in log space and return an :class:`Asymptote` whose
``factors`` (log scale) add up to ``log_value``.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from . import gaussian_paths as gp
from .errors import DomainError, ModerateDeviationError, RegimeError
from .estimates import McEstimate, MomentEstimate
from .heavy_tails import Pareto, StepLaw, WeibullT1, integrated_tail, reduced_load_condition_holds
from .workload import Drift


@dataclass(frozen=True)
class Asymptote:
    log_value: float
    regime: str
    factors: dict = field(default_factory=dict)
    notes: tuple = ()
    provenance: dict = field(default_factory=dict)

    @property
    def value(self):
        return math.exp(self.log_value) if self.log_value > -745.0 else 0.0


# -- moderate deviations of W_mu(T) ------------------------------------------

def rate_function(mu, x):
    """``Lambda(x) = mu^2 x / 2 - mu + 1/(2x)``, Legendre transform of ``log E e^{y tau_1}``."""
    return 0.5 * mu * mu * x - mu + 0.5 / x


def rate_slope(mu, x):
    """``lambda(x) = Lambda'(x) = mu^2/2 - 1/(2 x^2)``."""
    return 0.5 * mu * mu - 0.5 / (x * x)


@dataclass(frozen=True)
class ModerateDeviationProblem:
    """Tail of ``W_mu(T)`` for ``T`` drawn from ``dist`` (a tail or residual model)."""

    mu: float
    dist: object

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("drift mu must be positive")

    def Lambda(self, x):
        return rate_function(self.mu, x)

    def lam(self, x):
        return rate_slope(self.mu, x)

    def exponent(self, t, u):
        """``H(t, u) = Q(t) + u Lambda(t/u)``."""
        return float(self.dist.hazard(t)) + u * self.Lambda(t / u)

    def stationarity(self, t, u):
        """``g(t) = Q'(t) + lambda(t/u)``, i.e. ``dH/dt``."""
        return float(self.dist.hazard_rate(t)) + self.lam(t / u)


def _bisect(g, lo, hi, rtol=1e-15):
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return lo, hi


def solve_t_of_u(prob, u, scan=256):
    """Minimiser ``t(u)`` of ``H(., u)`` on ``(0, u/mu)``, a root of ``Q'(t) = -lambda(t/u)``.

    The bracket is scanned for sign changes of ``g = dH/dt`` from negative to
    positive; each is refined by bisection and a safeguarded Newton polish,
    and the one with the smallest ``H`` is returned.  Raises
    :class:`ModerateDeviationError` when ``g`` has no sign change.
    """
    mu = prob.mu
    if not u > 0:
        raise ModerateDeviationError("u must be positive")
    top = u / mu
    g = lambda t: prob.stationarity(t, u)  # noqa: E731
    grid = top * np.logspace(-8, 0, scan)[:-1]
    grid = np.append(grid, top * (1 - 1e-12))
    vals = np.array([g(t) for t in grid])
    ok = np.isfinite(vals)
    crossings = [
        i for i in range(len(grid) - 1)
        if ok[i] and ok[i + 1] and vals[i] < 0 <= vals[i + 1]
    ]
    if not crossings:
        raise ModerateDeviationError(
            "u=%g too small for the moderate-deviation regime: no stationary point in (0, u/mu)" % u
        )
    best_t, best_h = None, np.inf
    for i in crossings:
        lo, hi = _bisect(g, grid[i], grid[i + 1], rtol=1e-9)
        t = _newton_polish(prob, u, 0.5 * (lo + hi), lo, hi)
        h = prob.exponent(t, u)
        if h < best_h:
            best_t, best_h = t, h
    return best_t


def _newton_polish(prob, u, t, lo, hi, rtol=1e-10, max_iter=50):
    for _ in range(max_iter):
        q1 = float(prob.dist.hazard_rate(t))
        lam = prob.lam(t / u)
        gt = q1 + lam
        if abs(gt) <= rtol * (abs(q1) + abs(lam)):
            return t
        dg = float(prob.dist.hazard_rate_deriv(t)) + u * u / t ** 3
        step = gt / dg if dg > 0 else np.nan
        nt = t - step
        if not (np.isfinite(nt) and lo < nt < hi):
            # fall back to bisection when Newton leaves the bracket
            if gt < 0:
                lo = t
            else:
                hi = t
            nt = 0.5 * (lo + hi)
        elif gt < 0:
            lo = t
        else:
            hi = t
        if abs(nt - t) <= 1e-16 * t:
            return nt
        t = nt
    return t


def relation34_gap(dist, mu, u):
    """``u Q'(u/mu)``: leading term of ``u/mu - t(u)`` (exact form at ``mu = 1``)."""
    return u * float(dist.hazard_rate(u / mu))


def moderate_tail(prob, u):
    """``P{W_mu(T) > u} ~ exp(-H(t(u), u))``."""
    t = solve_t_of_u(prob, u)
    q = float(prob.dist.hazard(t))
    lam_part = u * prob.Lambda(t / u)
    return Asymptote(
        -(q + lam_part),
        "moderate_deviation",
        {"duration_tail": -q, "gaussian_deviation": -lam_part},
        provenance={"t_u": t, "mu": prob.mu, "dist": _describe(prob.dist)},
    )


def moderate_hazard(prob, u, rel_step=1e-3):
    """Numeric hazard ``d/du H(t(u), u)`` of the moderate-deviation asymptote."""
    h = rel_step * u
    up = -moderate_tail(prob, u + h).log_value
    dn = -moderate_tail(prob, u - h).log_value
    return (up - dn) / (2 * h)


def _describe(obj):
    return obj.describe() if hasattr(obj, "describe") else repr(obj)


# -- regime evaluators -------------------------------------------------------

def _require_standard_bm(model):
    g = model.gaussian
    if g.kind is not gp.GaussKind.BM or g.scale != 1.0:
        raise RegimeError("this evaluator needs standard Brownian noise")


def theorem31(model, u):
    """Supercritical asymptote ``p (r-rho)/(c-rho) P{W_{r-c}(T_on^r) > u}``."""
    if model.drift is not Drift.SUPERCRITICAL:
        raise RegimeError("moderate-deviation asymptote needs r > c")
    _require_standard_bm(model)
    src = model.source
    if not isinstance(src.on, WeibullT1):
        raise RegimeError("moderate-deviation asymptote needs a Weibull-type (T1) On-period")
    pref = src.p * (src.r - src.rho) / (model.c - src.rho)
    md = moderate_tail(ModerateDeviationProblem(src.r - model.c, src.on_residual), u)
    factors = {"prefactor": math.log(pref), **md.factors}
    return Asymptote(
        math.log(pref) + md.log_value,
        "moderate_deviation",
        factors,
        ("residual hazard evaluated by quadrature",),
        {"t_u": md.provenance["t_u"], "prefactor": pref},
    )


def veraverbeke_sup_tail(step, u):
    """``(1/(-E U)) int_u^inf P{U > v} dv`` for a negative-mean step law."""
    mean = step.mean
    if not mean < 0:
        raise DomainError("random walk needs a negative mean step")
    val = integrated_tail(step, u) / (-mean)
    return Asymptote(math.log(val) if val > 0 else -np.inf, "random_walk_sup",
                     {"integrated_tail": math.log(val) if val > 0 else -np.inf})


def corollary41_prefactor(nu):
    """Closed-form constant ``(1/sqrt(pi)) 2^(1+nu) Gamma(nu + 1/2)`` for ``alpha = 1``."""
    if not nu > 1:
        raise DomainError("nu must exceed 1")
    return 2.0 ** (1.0 + nu) * math.gamma(nu + 0.5) / math.sqrt(math.pi)


def prefactor_exponents(H, nu):
    """The two candidate sup-moment orders ``H(nu-1)`` and ``(nu-1)/H``."""
    return {"paper_exponent": H * (nu - 1.0), "alt_exponent": (nu - 1.0) / H}


PREFACTOR_SOURCES = ("paper_exponent", "alt_exponent", "corollary", "mc_estimate")


def theorem41(model, u, prefactor_source="alt_exponent", moment=None, n_paths=20000, n_steps=1024, seed=0):
    """Critical (``r = c``) asymptote ``p C P{T_on^r > sigma^{-1}(u)}``.

    ``C`` is ``E[sup_{[0,1]} B_H ** q]`` with ``q`` chosen by
    ``prefactor_source``; for ``H = 1/2`` it is the exact half-normal moment,
    otherwise a Monte Carlo estimate unless ``moment`` is supplied.
    ``"corollary"`` uses the closed-form constant (``alpha = 1`` only) and
    ``"mc_estimate"`` takes ``moment`` as is.
    """
    if model.drift is not Drift.CRITICAL:
        raise RegimeError("oscillatory asymptote needs r = c")
    src = model.source
    if not isinstance(src.on, Pareto):
        raise RegimeError("oscillatory asymptote needs a regularly varying On-period")
    if prefactor_source not in PREFACTOR_SOURCES:
        raise ValueError("unknown prefactor source %r" % prefactor_source)
    H = model.gaussian.H
    nu = src.on.nu
    prov = {"prefactor_source": prefactor_source, "H": H, "nu": nu}
    if prefactor_source == "corollary":
        if model.gaussian.alpha != 1.0:
            raise RegimeError("the closed-form constant is stated for alpha = 1")
        C = corollary41_prefactor(nu)
    elif prefactor_source == "mc_estimate":
        if moment is None:
            raise ValueError("mc_estimate needs a moment estimate")
        C = _moment_value(moment)
    else:
        q = prefactor_exponents(H, nu)[prefactor_source]
        prov["exponent"] = q
        if moment is not None:
            C = _moment_value(moment)
        elif H == 0.5:
            C = gp.halfnormal_moment(q)
            prov["moment_method"] = "half-normal closed form"
        else:
            est = gp.estimate_prefactor_moment(H, q, n_paths, n_steps, seed)
            C = est.value
            prov["moment_method"] = "monte carlo (n_paths=%d, n_steps=%d)" % (n_paths, n_steps)
    prov["C"] = C
    arg = gp.sigma_inverse(model.gaussian, u)
    log_tail = -float(src.on_residual.hazard(arg))
    factors = {"p": math.log(src.p), "prefactor": math.log(C), "residual_tail": log_tail}
    return Asymptote(sum(factors.values()), "oscillatory", factors,
                     ("tail read as P{T_on^r > sigma^{-1}(u)}",), prov)


def _moment_value(moment):
    if isinstance(moment, MomentEstimate):
        return moment.value
    if isinstance(moment, McEstimate):
        return moment.p_hat
    return float(moment)


def lemma42_log(spec, d, eta, u):
    """Log-asymptote of ``P{sup_t [X(t) - d t^eta] > u}`` (needs ``eta > alpha/2``)."""
    a = spec.alpha
    if not eta > a / 2.0:
        raise DomainError("need eta > alpha/2 for a finite supremum")
    if not d > 0:
        raise DomainError("d must be positive")
    coef = 0.5 * d ** (a / eta) * (a / (2 * eta - a)) ** (-a / eta) * (2 * eta / (2 * eta - a)) ** 2
    return -coef * u * u / float(spec.variance(u ** (1.0 / eta)))


def theorem51_time_scale(model, u):
    """``(1/(c-r)) (alpha/(2-alpha)) u``: the On-period length that drives overflow."""
    a = model.gaussian.alpha
    return a / (2.0 - a) * u / (model.c - model.source.r)


def theorem51(model, u, vx_tail_source="lemma42_log", vx_estimate=None):
    """Subcritical asymptote ``p P{V_X^{c-r} > u} P{T_on^r > t_u (c-r)... }``."""
    if model.drift is not Drift.SUBCRITICAL:
        raise RegimeError("reduced-peak asymptote needs r < c")
    src = model.source
    if not isinstance(src.on, Pareto):
        raise RegimeError("reduced-peak asymptote needs a regularly varying On-residual")
    d = model.c - src.r
    notes = []
    if vx_tail_source == "lemma42_log":
        log_vx = lemma42_log(model.gaussian, d, 1.0, u)
        notes.append("Gaussian factor is a log-scale asymptote only")
    elif vx_tail_source == "mc_estimate":
        if vx_estimate is None:
            raise ValueError("mc_estimate needs vx_estimate")
        p_vx = _moment_value(vx_estimate)
        log_vx = math.log(p_vx) if p_vx > 0 else -np.inf
        notes.append("Gaussian factor from Monte Carlo")
    else:
        raise ValueError("unknown vx_tail_source %r" % vx_tail_source)
    arg = theorem51_time_scale(model, u)
    log_tail = -float(src.on_residual.hazard(arg))
    factors = {"p": math.log(src.p), "gaussian_sup": log_vx, "residual_tail": log_tail}
    return Asymptote(sum(factors.values()), "reduced_peak", factors, tuple(notes),
                     {"time_scale": arg, "d": d})


# -- classification ----------------------------------------------------------

class Regime(str, Enum):
    REDUCED_LOAD = "ReducedLoad"
    MODERATE_DEVIATION = "ModerateDeviation"
    OSCILLATORY = "Oscillatory"
    REDUCED_PEAK = "ReducedPeak"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class Classification:
    regime: Regime
    reason: str


def classify_regime(model):
    """Pick the asymptotic regime from the drift sign and the On-period class."""
    src = model.source
    on = src.on
    drift = model.drift
    if drift is Drift.SUPERCRITICAL:
        diag = reduced_load_condition_holds(on)
        if diag.status == "holds":
            return Classification(Regime.REDUCED_LOAD,
                                  "r > c and P{T_on > u - sqrt u} ~ P{T_on > u} (%s); "
                                  "source-only tail, outside the evaluators" % diag.reason)
        if not isinstance(on, WeibullT1):
            return Classification(Regime.UNSUPPORTED, "r > c but the On-period is not Weibull-type (T1)")
        g = model.gaussian
        if g.kind is not gp.GaussKind.BM or g.scale != 1.0:
            return Classification(Regime.UNSUPPORTED, "r > c moderate-deviation result needs standard Brownian noise")
        return Classification(Regime.MODERATE_DEVIATION,
                              "r > c, T1 On-period with the reduced-load condition %s (%s)" % (diag.status, diag.reason))
    if drift is Drift.CRITICAL:
        if isinstance(on, Pareto):
            return Classification(Regime.OSCILLATORY, "r = c with regularly varying On-period (index -%g)" % on.nu)
        return Classification(Regime.UNSUPPORTED, "r = c needs a regularly varying On-period")
    if isinstance(on, Pareto) and src.r > 0:
        return Classification(Regime.REDUCED_PEAK, "r < c with regularly varying On-residual")
    return Classification(Regime.UNSUPPORTED, "r < c needs a regularly varying On-residual and r > 0")


def asymptote_for(model, u, prefactor_source="alt_exponent", moment=None):
    """Dispatch to the evaluator of the model's regime; ``None`` if there is none."""
    cls = classify_regime(model)
    if cls.regime is Regime.MODERATE_DEVIATION:
        return theorem31(model, u)
    if cls.regime is Regime.OSCILLATORY:
        return theorem41(model, u, prefactor_source, moment)
    if cls.regime is Regime.REDUCED_PEAK:
        return theorem51(model, u)
    return None


__all__ = [
    "Asymptote",
    "ModerateDeviationProblem",
    "rate_function",
    "rate_slope",
    "solve_t_of_u",
    "relation34_gap",
    "moderate_tail",
    "moderate_hazard",
    "theorem31",
    "veraverbeke_sup_tail",
    "corollary41_prefactor",
    "prefactor_exponents",
    "theorem41",
    "lemma42_log",
    "theorem51",
    "theorem51_time_scale",
    "Regime",
    "Classification",
    "classify_regime",
    "asymptote_for",
    "StepLaw",
]
