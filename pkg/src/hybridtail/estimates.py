"""Monte Carlo estimate containers and their confidence intervals."""

from dataclasses import dataclass
import math

Z95 = 1.959963984540054


@dataclass(frozen=True)
class McEstimate:
    """Probability estimate with a 95% interval and the run metadata."""

    p_hat: float
    ci_low: float
    ci_high: float
    stderr: float
    n_paths: int
    horizon: float
    n_steps: int
    seed: int
    bias_indicator: float = 0.0
    hits: int = 0
    method: str = "normal"
    flagged: bool = False

    def __post_init__(self):
        if not self.ci_low <= self.p_hat <= self.ci_high:
            raise ValueError("interval does not contain the point estimate")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n_paths: int
    n_steps: int
    seed: int
    bias_indicator: float = 0.0
    flagged: bool = False


def wilson_interval(hits, n, z=Z95):
    p = hits / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def proportion_estimate(hits, n, horizon, n_steps, seed, bias_indicator=0.0):
    """Crude estimator: normal interval, Wilson when fewer than 30 expected hits."""
    hits = int(hits)
    p = hits / n
    se = math.sqrt(p * (1 - p) / n)
    if hits == 0:
        return McEstimate(0.0, 0.0, 3.0 / n, 0.0, n, horizon, n_steps, seed,
                          bias_indicator, 0, "rule-of-three", True)
    if hits < 30:
        lo, hi = wilson_interval(hits, n)
        method = "wilson"
    else:
        lo, hi = max(0.0, p - Z95 * se), min(1.0, p + Z95 * se)
        method = "normal"
    return McEstimate(p, lo, hi, se, n, horizon, n_steps, seed, bias_indicator, hits, method)


def stratified_estimate(weights, hits, counts, horizon, n_steps, seed, bias_indicator=0.0):
    """Mix per-stratum proportions ``hits[k]/counts[k]`` with fixed ``weights``."""
    p = 0.0
    var = 0.0
    for w, h, m in zip(weights, hits, counts):
        q = h / m
        p += w * q
        var += w * w * q * (1 - q) / m
    n = int(sum(counts))
    total_hits = int(sum(hits))
    se = math.sqrt(var)
    if total_hits == 0:
        return McEstimate(0.0, 0.0, 3.0 / n, 0.0, n, horizon, n_steps, seed,
                          bias_indicator, 0, "rule-of-three", True)
    if total_hits < 30:
        # Wilson on the effective sample size of the mixture
        n_eff = p * (1 - p) / var if var > 0 else n
        lo, hi = wilson_interval(p * n_eff, n_eff)
        method = "wilson"
    else:
        lo, hi = max(0.0, p - Z95 * se), min(1.0, p + Z95 * se)
        method = "normal"
    return McEstimate(p, lo, hi, se, n, horizon, n_steps, seed, bias_indicator, total_hits, method)
