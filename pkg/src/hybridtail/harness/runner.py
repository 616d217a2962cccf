"""Batch runs: Monte Carlo, asymptotes and validation suites to CSV."""

from dataclasses import dataclass, field
import io
import logging
import os
import platform

import numpy as np
import scipy

from .. import __version__
from ..asymptotics import Regime, asymptote_for, classify_regime
from ..errors import DomainError, ModerateDeviationError, RegimeError
from ..workload import estimate_tail
from . import figures
from .validation import run_suite

logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "u", "mc_estimate", "ci_low", "ci_high", "asymptote", "log_asymptote", "ratio", "regime",
    "n_paths", "n_steps", "horizon", "seed", "bias_indicator", "note",
)
VALIDATION_COLUMNS = ("suite", "check", "measured", "expected", "tolerance", "passed", "note")


@dataclass(frozen=True)
class ReportRow:
    u: float
    mc_estimate: float = None
    ci_low: float = None
    ci_high: float = None
    asymptote: float = None
    log_asymptote: float = None
    ratio: float = None
    regime: str = ""
    n_paths: int = None
    n_steps: int = None
    horizon: float = None
    seed: int = None
    bias_indicator: float = None
    note: str = ""

    def __post_init__(self):
        both = self.mc_estimate is not None and self.asymptote is not None and self.asymptote > 0
        if self.ratio is not None and not both:
            raise ValueError("ratio needs both an estimate and a positive asymptote")

    def fields(self):
        return [getattr(self, c) for c in REPORT_COLUMNS]


@dataclass
class RunResult:
    mode: str
    rows: list = field(default_factory=list)
    suites: list = field(default_factory=list)
    csv: str = ""
    summary: str = ""
    failed: bool = False
    unsupported: bool = False
    exit_code: int = 0


def format_field(v):
    """17 significant digits for floats, so equal runs give equal bytes."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def to_csv(columns, records):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for rec in records:
        buf.write(",".join(format_field(v) for v in rec) + "\n")
    return buf.getvalue()


def environment_versions():
    return {"hybridtail": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _row_for(config, model, cls, j, u, mode, workers):
    note = ""
    mc = asym = None
    if mode in ("simulate", "compare"):
        mc = estimate_tail(model, u, config.n_paths, config.n_steps, config.seed, K=config.K,
                           stratify=config.stratify, workers=workers, key=(j,))
        if mc.flagged:
            note = "no exceedances; rule-of-three interval"
    if mode in ("asymptote", "compare"):
        if cls.regime in (Regime.REDUCED_LOAD, Regime.UNSUPPORTED):
            note = (note + "; " if note else "") + cls.reason
        else:
            try:
                asym = asymptote_for(model, u, config.prefactor_source)
            except (ModerateDeviationError, RegimeError, DomainError) as exc:
                note = (note + "; " if note else "") + str(exc)
            else:
                if asym.notes:
                    note = (note + "; " if note else "") + "; ".join(asym.notes)
    a_val = asym.value if asym is not None else None
    ratio = None
    if mc is not None and a_val is not None and a_val > 0:
        ratio = mc.p_hat / a_val
    return ReportRow(
        u=float(u),
        mc_estimate=None if mc is None else mc.p_hat,
        ci_low=None if mc is None else mc.ci_low,
        ci_high=None if mc is None else mc.ci_high,
        asymptote=a_val,
        log_asymptote=None if asym is None else asym.log_value,
        ratio=ratio,
        regime=cls.regime.value,
        n_paths=None if mc is None else mc.n_paths,
        n_steps=None if mc is None else mc.n_steps,
        horizon=None if mc is None else mc.horizon,
        seed=config.seed,
        bias_indicator=None if mc is None else mc.bias_indicator,
        note=note,
    )


def _summarise_rows(config, cls, rows):
    lines = ["mode: %s" % config.mode, "regime: %s (%s)" % (cls.regime.value, cls.reason)]
    lines.append("%10s %12s %24s %12s %8s" % ("u", "mc", "95% interval", "asymptote", "ratio"))
    for r in rows:
        ci = "" if r.ci_low is None else "[%.4g, %.4g]" % (r.ci_low, r.ci_high)
        lines.append("%10.4g %12s %24s %12s %8s" % (
            r.u,
            "" if r.mc_estimate is None else "%.4g" % r.mc_estimate,
            ci,
            "" if r.asymptote is None else "%.4g" % r.asymptote,
            "" if r.ratio is None else "%.3f" % r.ratio,
        ))
    return "\n".join(lines)


def run(config, out=None, workers=None, strict=False, make_figures=True):
    """Execute ``config`` and optionally write the CSV (plus figure and gnuplot script) to ``out``."""
    logger.info("config %s seed=%d mode=%s", config.digest(), config.seed, config.mode)
    logger.info("versions %s", environment_versions())
    result = RunResult(config.mode)
    if config.mode == "validate":
        n_override = config.sections.get("validate", {}).get("n_paths")
        records = []
        for name in config.suites:
            logger.info("running suite %s", name)
            res = run_suite(name, seed=config.seed, workers=workers, model=_critical_or_none(config.model),
                            n_paths=n_override)
            result.suites.append(res)
            for c in res.checks:
                records.append((res.name, c.name, float(c.measured), float(c.expected), float(c.tolerance),
                                bool(c.passed), c.note))
        result.csv = to_csv(VALIDATION_COLUMNS, records)
        result.failed = not all(s.passed for s in result.suites)
        result.summary = "\n".join("%-16s %s" % (s.name, "pass" if s.passed else "FAIL") for s in result.suites)
    else:
        model = config.model
        cls = classify_regime(model)
        result.unsupported = cls.regime is Regime.UNSUPPORTED
        for j, u in enumerate(config.u_grid):
            logger.info("u=%g", u)
            result.rows.append(_row_for(config, model, cls, j, u, config.mode, workers))
        result.csv = to_csv(REPORT_COLUMNS, [r.fields() for r in result.rows])
        result.summary = _summarise_rows(config, cls, result.rows)
        if config.mode != "simulate":
            missing = [r for r in result.rows if r.asymptote is None]
            result.failed = bool(missing)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(result.csv)
        if make_figures and result.rows:
            stem = os.path.splitext(out)[0]
            title = "%s, %s" % (config.mode, result.rows[0].regime)
            figures.plot_report(result.rows, stem + ".png", title)
            figures.write_gnuplot_script(out, stem + ".gp", title)
    result.exit_code = 1 if strict and (result.failed or result.unsupported) else 0
    return result


def _critical_or_none(model):
    if model is not None and model.source.r == model.c and hasattr(model.source.on, "nu"):
        return model
    return None


__all__ = ["REPORT_COLUMNS", "VALIDATION_COLUMNS", "ReportRow", "RunResult", "format_field", "to_csv", "run",
           "environment_versions"]
