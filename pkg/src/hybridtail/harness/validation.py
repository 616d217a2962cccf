"""Named property suites behind ``hybridtail validate``.

Each suite returns a :class:`SuiteResult` holding individual checks with the
measured value, the reference value and the tolerance used.  Default sizes
keep every suite well under ten minutes on one core.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy import stats

from .. import gaussian_paths as gp
from ..asymptotics import (
    ModerateDeviationProblem,
    corollary41_prefactor,
    moderate_hazard,
    moderate_tail,
    prefactor_exponents,
    solve_t_of_u,
    theorem41,
)
from ..errors import DomainError
from ..heavy_tails import make_exponential, make_pareto, make_weibull_t1
from ..onoff import OnOffSpec
from ..streams import path_stream
from ..workload import HybridModel, estimate_tail, sample_random_interval_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    note: str = ""


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, *args, **kw):
        self.checks.append(Check(*args, **kw))


# -- regular-variation index fit ------------------------------------------------

@dataclass(frozen=True)
class RVFit:
    slope: float
    stderr: float
    intercept: float
    n_used: int
    dropped: tuple


def fit_rv_index(us, ps):
    """Least-squares slope of ``log p`` against ``log u`` with its standard error.

    Points with ``p <= 0`` are dropped with a warning; at least four points
    must remain.
    """
    us = np.asarray(us, dtype=float)
    ps = np.asarray(ps, dtype=float)
    keep = (ps > 0) & (us > 0)
    dropped = tuple(float(u) for u in us[~keep])
    if dropped:
        logger.warning("dropping %d nonpositive point(s) at u=%s", len(dropped), dropped)
    if keep.sum() < 4:
        raise DomainError("need at least 4 positive points for a slope fit")
    fit = stats.linregress(np.log(us[keep]), np.log(ps[keep]))
    return RVFit(float(fit.slope), float(fit.stderr), float(fit.intercept), int(keep.sum()), dropped)


# -- suites -------------------------------------------------------------------

def critical_reference_model():
    """BM noise, ``r = c = 1``, Pareto(2) On-periods, unit-mean exponential Off-periods."""
    return HybridModel(gp.brownian_motion(), OnOffSpec(1.0, make_pareto(2.0, 1.0), make_exponential(1.0)), 1.0)


def sandwich(n_paths=1000, mu=1.0, horizon=10.0, n_steps=4096, t_points=(2.5, 5.0, 10.0), seed=0):
    """``N(t) = floor(M(t))`` and ``M - 1 <= N <= M`` on drift-``mu`` BM paths."""
    res = SuiteResult("sandwich")
    bad_floor = bad_sandwich = 0
    for i in range(n_paths):
        path = gp.sample_path(gp.brownian_motion(), horizon, n_steps, path_stream(seed, i)).with_drift(mu)
        for t in t_points:
            N = gp.renewal_count(path, t)
            M = gp.running_max(path, t)
            bad_floor += N != math.floor(M)
            bad_sandwich += not (M - 1 <= N <= M)
    res.add("floor_identity_exceptions", bad_floor, 0, 0, bad_floor == 0)
    res.add("sandwich_exceptions", bad_sandwich, 0, 0, bad_sandwich == 0)
    return res


def hitting_moments(n=10**6, mu=1.0, x=1.0, y=None, seed=0, n_se=4.0):
    """Mean, variance and MGF of first-passage times against the inverse-Gaussian law."""
    y = mu * mu / 4.0 if y is None else y
    tau = gp.sample_hitting_time(mu, x, path_stream(seed, 0), n)
    res = SuiteResult("hitting_moments")
    mean = tau.mean()
    d = tau - mean
    var = d.var(ddof=1)
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(np.mean(d ** 4) - var * var, 0.0) / n)
    e = np.exp(y * tau)
    mgf, se_mgf = e.mean(), e.std(ddof=1) / math.sqrt(n)
    exp_mgf = math.exp(x * (mu - math.sqrt(mu * mu - 2.0 * y)))
    for name, m, ref, se in (("mean", mean, x / mu, se_mean), ("variance", var, x / mu ** 3, se_var),
                             ("mgf", mgf, exp_mgf, se_mgf)):
        res.add(name, float(m), ref, n_se * se, abs(m - ref) <= n_se * se, "z=%.2f" % ((m - ref) / se))
    return res


def relation34(beta=0.7, mu=1.0, u=1e6, tol=0.10, light_beta=0.3, light_u=1e4, light_tol=0.10,
               index_u=1e6, index_tol=0.05):
    """Pure-numerics checks of the moderate-deviation solver.

    * gap ``u/mu - t(u)`` against ``u Q'(u/mu)``;
    * for ``beta < 1/2`` the asymptote reduces to ``P{mu T > u}``;
    * the asymptote's hazard is regularly varying of index ``beta - 1``.
    """
    res = SuiteResult("relation34")
    w = make_weibull_t1(beta)
    prob = ModerateDeviationProblem(mu, w)
    t = solve_t_of_u(prob, u)
    lead = u * float(w.hazard_rate(u / mu))
    r = (u / mu - t) / lead
    res.add("gap_ratio", r, 1.0, tol, abs(r - 1.0) <= tol, "u=%g, t(u)=%.10g" % (u, t))
    res.extras["gap_ratio_curvature_form"] = (u / mu - t) / (lead / mu ** 3)
    wl = make_weibull_t1(light_beta)
    probl = ModerateDeviationProblem(mu, wl)
    lr = math.exp(moderate_tail(probl, light_u).log_value + float(wl.hazard(light_u / mu)))
    res.add("light_coupling_ratio", lr, 1.0, light_tol, abs(lr - 1.0) <= light_tol,
            "beta=%g, u=%g" % (light_beta, light_u))
    q1 = moderate_hazard(prob, index_u)
    q2 = moderate_hazard(prob, 2 * index_u)
    target = 2.0 ** (beta - 1.0)
    rel = q2 / q1 / target - 1.0
    res.add("hazard_index_ratio", q2 / q1, target, index_tol * target, abs(rel) <= index_tol,
            "u=%g" % index_u)
    return res


def lemma31_ratio(beta=0.7, mu=1.0, n_paths=10**5, n_steps=4096, min_prob=1e-2, fractions=(0.5, 0.75, 1.0),
                  floor=0.7, n_se=1.96, seed=0, workers=None):
    """``P{W_mu(T) > u} / P{M_mu(T) > u}`` for Weibull ``T``.

    The largest level ``u*`` is the biggest one at which both empirical
    tails are at least ``min_prob``; the ratio is read at ``fractions`` of
    ``u*``.  Because ``W <= M`` the ratio is a conditional proportion, whose
    binomial standard error sets the 95% band of the monotonicity test.
    """
    res = SuiteResult("lemma31_ratio")
    sups, ends = sample_random_interval_batch(gp.brownian_motion(), make_weibull_t1(beta), n_paths, n_steps,
                                              seed, drift=mu, workers=workers)
    k = int(math.ceil(min_prob * n_paths))
    u_star = float(np.sort(ends)[n_paths - k - 1])
    ratios, ses, levels = [], [], []
    for f in fractions:
        u = f * u_star
        m_hits = int(np.count_nonzero(sups > u))
        w_hits = int(np.count_nonzero(ends > u))
        r = w_hits / m_hits
        ratios.append(r)
        ses.append(math.sqrt(r * (1 - r) / m_hits))
        levels.append(u)
        res.extras["u=%.6g" % u] = {"P_W": w_hits / n_paths, "P_M": m_hits / n_paths, "ratio": r}
    res.add("ratio_at_largest_u", ratios[-1], floor, 0.0, ratios[-1] >= floor, "u*=%.6g" % u_star)
    worst = min(ratios[j + 1] - ratios[j] + n_se * math.hypot(ses[j], ses[j + 1]) for j in range(len(ratios) - 1))
    res.add("nondecreasing_within_noise", worst, 0.0, 0.0, worst >= 0.0,
            "ratios=%s" % ", ".join("%.4f" % r for r in ratios))
    res.extras.update(levels=levels, ratios=ratios, stderrs=ses)
    return res


def _moment_candidates(H, nu, moment_paths, moment_steps, seed, workers):
    out = {}
    for name, q in prefactor_exponents(H, nu).items():
        est = gp.estimate_prefactor_moment(H, q, moment_paths, moment_steps, seed, workers)
        out[name] = (q, est)
    return out


def prefactor(model=None, u=22.0, n_paths=20000, n_steps=2**14, K=100.0, moment_paths=20000, moment_steps=4096,
              factor=1.5, estimate=None, seed=0, workers=None):
    """Which candidate constant matches ``P{V > u} / (p P{T_on^r > sigma^{-1}(u)})``.

    Candidates: the closed-form constant (``alpha = 1`` only) and Monte Carlo
    sup moments of both candidate orders.  A candidate passes when the
    ratio is within ``factor`` of it.
    """
    model = model or critical_reference_model()
    res = SuiteResult("prefactor")
    if estimate is None:
        estimate = estimate_tail(model, u, n_paths, n_steps, seed, K=K, workers=workers)
    src = model.source
    H = model.gaussian.H
    nu = src.on.nu
    tail = math.exp(-float(src.on_residual.hazard(gp.sigma_inverse(model.gaussian, u))))
    raw = estimate.p_hat / tail
    ratio = raw / src.p
    res.extras.update(u=u, p_hat=estimate.p_hat, raw_ratio=raw, ratio=ratio, tail=tail)
    cands = {}
    if model.gaussian.alpha == 1.0:
        cands["corollary"] = corollary41_prefactor(nu)
    for name, (q, est) in _moment_candidates(H, nu, moment_paths, moment_steps, seed + 1, workers).items():
        cands[name] = est.value
        res.extras["%s_order" % name] = q
        if H == 0.5:
            res.extras["%s_closed_form" % name] = gp.halfnormal_moment(q)
    any_pass = False
    for name, C in cands.items():
        ok = 1.0 / factor <= ratio / C <= factor
        any_pass |= ok
        res.extras["candidate_%s" % name] = {"C": C, "ratio_over_C": ratio / C, "passes": ok}
        res.add("candidate_%s" % name, ratio, C, factor, True, "passes" if ok else "outside factor %g" % factor)
    res.add("any_candidate_within_factor", ratio, float("nan"), factor, any_pass,
            "passing: %s" % ", ".join(n for n, c in cands.items() if 1 / factor <= ratio / c <= factor))
    return res


def rv_slope(model=None, us=None, n_paths=20000, n_steps=2**14, K=100.0, tol=0.3, seed=0, workers=None):
    """Tail slope of ``P{V > u}`` on log-log axes against ``(1 - nu)/H``.

    Also checks that the analytic oscillatory asymptote has that slope to
    within 1% at large ``u``.
    """
    model = model or critical_reference_model()
    us = np.geomspace(3.0, 22.0, 6) if us is None else np.asarray(us, dtype=float)
    res = SuiteResult("rv_slope")
    H = model.gaussian.H
    nu = model.source.on.nu
    target = (1.0 - nu) / H
    ests = [estimate_tail(model, u, n_paths, n_steps, seed, K=K, workers=workers, key=(j,))
            for j, u in enumerate(us)]
    fit = fit_rv_index(us, [e.p_hat for e in ests])
    res.extras.update(us=list(us), estimates=ests, fit=fit)
    res.add("mc_slope", fit.slope, target, tol, abs(fit.slope - target) <= tol, "se=%.3g" % fit.stderr)
    big = np.array([1e3, 2e3])
    vals = [theorem41(model, u, "alt_exponent", moment=1.0).log_value for u in big]
    slope = (vals[1] - vals[0]) / math.log(2.0)
    res.add("analytic_slope", slope, target, 0.01 * abs(target), abs(slope / target - 1.0) <= 0.01)
    return res


SUITE_FUNCS = {
    "sandwich": sandwich,
    "lemma31_ratio": lemma31_ratio,
    "hitting_moments": hitting_moments,
    "relation34": relation34,
    "prefactor": prefactor,
    "rv_slope": rv_slope,
}


def run_suite(name, seed=0, workers=None, model=None, n_paths=None):
    """Run a suite with its default sizes; ``n_paths`` overrides the Monte Carlo size."""
    fn = SUITE_FUNCS[name]
    kw = {} if name == "relation34" else {"seed": seed}
    if name in ("lemma31_ratio", "prefactor", "rv_slope"):
        kw["workers"] = workers
    if name in ("prefactor", "rv_slope") and model is not None:
        kw["model"] = model
    if n_paths is not None:
        if name == "hitting_moments":
            kw["n"] = n_paths
        elif name != "relation34":
            kw["n_paths"] = n_paths
    return fn(**kw)


__all__ = [
    "Check",
    "SuiteResult",
    "RVFit",
    "fit_rv_index",
    "critical_reference_model",
    "sandwich",
    "hitting_moments",
    "relation34",
    "lemma31_ratio",
    "prefactor",
    "rv_slope",
    "SUITE_FUNCS",
    "run_suite",
]
