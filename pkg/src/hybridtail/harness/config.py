"""Experiment configuration: sectioned key/value files with typed values.

Sections and keys are split by :mod:`configparser`; each value is parsed by a
small hand-written grammar::

    value  := number | bool | name | string | list | dict | call
    list   := "[" [value ("," value)*] "]"
    dict   := "{" [name "=" value ("," name "=" value)*] "}"
    call   := name "(" [arg ("," arg)*] ")"      arg := value | name "=" value
    bool   := "true" | "false"
    string := '"' chars '"'                      (backslash escapes " and \\)

Numbers with a dot or exponent are floats, otherwise ints.  Bare names that
are not booleans are strings.  ``serialize`` writes the parsed tree back in
canonical form, and parsing that text gives the same tree.
"""

from dataclasses import dataclass, field, replace
import configparser
import hashlib
import math
import re

import numpy as np

from .. import gaussian_paths as gp
from ..errors import ConfigError, DomainError, SpecError
from ..heavy_tails import SlowlyVarying, make_deterministic, make_exponential, make_pareto, make_weibull_t1
from ..onoff import OnOffSpec
from ..workload import DEFAULT_K, HybridModel

MODES = ("simulate", "asymptote", "compare", "validate")
SUITES = ("sandwich", "lemma31_ratio", "hitting_moments", "relation34", "prefactor", "rv_slope")
PREFACTOR_SOURCES = ("paper_exponent", "alt_exponent", "corollary")


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    kwargs: tuple = ()  # ((key, value), ...) in source order

    def kw(self):
        return dict(self.kwargs)


# -- value grammar -------------------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf\b|nan\b)
      | (?P<name>[A-Za-z_][A-Za-z_0-9.]*)
      | (?P<str>"(?:[^"\\]|\\.)*")
      | (?P<punct>[()\[\]{},=])
    )""",
    re.VERBOSE,
)


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError("cannot parse value near %r" % text[pos:pos + 20])
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ConfigError("expected %r, got %r" % (value, tok[1]))
        self.i += 1
        return tok

    def parse(self):
        v = self.value()
        if self.i != len(self.toks):
            raise ConfigError("trailing input after value: %r" % (self.toks[self.i][1],))
        return v

    def value(self):
        kind, tok = self.take()
        if kind == "num":
            if re.fullmatch(r"[-+]?\d+", tok):
                return int(tok)
            return float(tok)
        if kind == "str":
            return re.sub(r"\\(.)", r"\1", tok[1:-1])
        if kind == "punct":
            if tok == "[":
                return self._seq("]")
            if tok == "{":
                return dict(self._pairs("}", require_keys=True)[1])
            raise ConfigError("unexpected %r" % tok)
        # name: bool, call or bare string
        if self.peek() == ("punct", "("):
            self.take("(")
            args, kwargs = self._pairs(")", require_keys=False)
            return Call(tok, tuple(args), tuple(kwargs))
        if tok == "true":
            return True
        if tok == "false":
            return False
        return tok

    def _seq(self, close):
        items = []
        if self.peek() == ("punct", close):
            self.take(close)
            return items
        while True:
            items.append(self.value())
            kind, tok = self.take()
            if tok == close:
                return items
            if tok != ",":
                raise ConfigError("expected ',' or %r, got %r" % (close, tok))

    def _pairs(self, close, require_keys):
        args, kwargs = [], []
        if self.peek() == ("punct", close):
            self.take(close)
            return args, kwargs
        while True:
            kind, tok = self.peek()
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else (None, None)
            if kind == "name" and nxt == ("punct", "="):
                self.take()
                self.take("=")
                kwargs.append((tok, self.value()))
            elif require_keys:
                raise ConfigError("expected key=value inside braces, got %r" % tok)
            else:
                if kwargs:
                    raise ConfigError("positional argument after keyword argument")
                args.append(self.value())
            kind, tok = self.take()
            if tok == close:
                return args, kwargs
            if tok != ",":
                raise ConfigError("expected ',' or %r, got %r" % (close, tok))


def parse_value(text):
    return _Parser(text).parse()


_BARE = re.compile(r"[A-Za-z_][A-Za-z_0-9.]*")


def _bare_token(v):
    # names such as "inf.x" would tokenize as a number followed by junk
    try:
        return _tokenize(v) == [("name", v)]
    except ConfigError:
        return False


def format_value(v):
    """Canonical text for a parsed value; ``parse_value(format_value(v)) == v``."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        s = repr(v)
        return s if ("." in s or "e" in s) else s + ".0"
    if isinstance(v, str):
        if _BARE.fullmatch(v) and v not in ("true", "false") and _bare_token(v):
            return v
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join("%s=%s" % (k, format_value(x)) for k, x in v.items()) + "}"
    if isinstance(v, Call):
        parts = [format_value(a) for a in v.args]
        parts += ["%s=%s" % (k, format_value(x)) for k, x in v.kwargs]
        return "%s(%s)" % (v.name, ", ".join(parts))
    raise ConfigError("cannot serialise %r" % (v,))


# -- sections ---------------------------------------------------------------

def parse_sections(text):
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from exc
    return {sec: {k: parse_value(v.replace("\n", " ")) for k, v in cp.items(sec)} for sec in cp.sections()}


def serialize_sections(sections):
    lines = []
    for sec, items in sections.items():
        if lines:
            lines.append("")
        lines.append("[%s]" % sec)
        lines.extend("%s = %s" % (k, format_value(v)) for k, v in items.items())
    return "\n".join(lines) + "\n"


# -- builders ---------------------------------------------------------------

def _num(v, what):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("%s must be a number, got %r" % (what, v))
    return float(v)


def _call_args(call, names, required):
    kw = call.kw()
    if len(call.args) > len(names):
        raise ConfigError("%s() takes at most %d positional arguments" % (call.name, len(names)))
    out = dict(zip(names, call.args))
    for k, v in kw.items():
        if k not in names:
            raise ConfigError("%s() got unexpected argument %r" % (call.name, k))
        if k in out:
            raise ConfigError("%s() got %r twice" % (call.name, k))
        out[k] = v
    missing = [n for n in required if n not in out]
    if missing:
        raise ConfigError("%s() missing %s" % (call.name, ", ".join(missing)))
    return out


def _slowly_varying(v):
    if v is None or v == "const":
        return SlowlyVarying()
    if isinstance(v, Call) and v.name == "log":
        a = _call_args(v, ("gamma", "coef"), ())
        return SlowlyVarying(_num(a.get("coef", 1.0), "coef"), _num(a.get("gamma", 0.0), "gamma"))
    raise ConfigError("L must be const or log(gamma=...), got %s" % format_value(v))


def build_tail(v):
    """Duration law from ``pareto(nu, scale)``, ``weibull(beta, L)``, ``exp(rate|mean)`` or ``det(value)``."""
    if not isinstance(v, Call):
        raise ConfigError("expected a distribution call, got %s" % format_value(v))
    if v.name == "pareto":
        a = _call_args(v, ("nu", "scale"), ("nu",))
        return make_pareto(_num(a["nu"], "nu"), _num(a.get("scale", 1.0), "scale"))
    if v.name == "weibull":
        a = _call_args(v, ("beta", "L", "coef", "gamma"), ("beta",))
        L = _slowly_varying(a.get("L"))
        if "coef" in a or "gamma" in a:
            L = SlowlyVarying(_num(a.get("coef", L.coef), "coef"), _num(a.get("gamma", L.gamma), "gamma"))
        return make_weibull_t1(_num(a["beta"], "beta"), L)
    if v.name == "exp":
        a = _call_args(v, ("rate", "mean"), ())
        if ("rate" in a) == ("mean" in a):
            raise ConfigError("exp() needs exactly one of rate, mean")
        rate = _num(a["rate"], "rate") if "rate" in a else 1.0 / _num(a["mean"], "mean")
        return make_exponential(rate)
    if v.name in ("det", "const"):
        a = _call_args(v, ("value",), ("value",))
        return make_deterministic(_num(a["value"], "value"))
    raise ConfigError("unknown distribution %r" % v.name)


def build_gaussian(v):
    """Gaussian part from ``bm(scale)``, ``fbm(H, scale)`` or ``fbm_mix(weights, hursts)``."""
    if not isinstance(v, Call):
        raise ConfigError("expected a Gaussian call, got %s" % format_value(v))
    if v.name == "bm":
        a = _call_args(v, ("scale",), ())
        return gp.brownian_motion(_num(a.get("scale", 1.0), "scale"))
    if v.name == "fbm":
        a = _call_args(v, ("H", "scale"), ("H",))
        return gp.fbm(_num(a["H"], "H"), _num(a.get("scale", 1.0), "scale"))
    if v.name == "fbm_mix":
        a = _call_args(v, ("weights", "hursts"), ("weights", "hursts"))
        if not (isinstance(a["weights"], list) and isinstance(a["hursts"], list)):
            raise ConfigError("fbm_mix() needs lists of weights and hursts")
        return gp.fbm_mixture([_num(w, "weight") for w in a["weights"]], [_num(h, "H") for h in a["hursts"]])
    raise ConfigError("unknown Gaussian kind %r" % v.name)


def build_source(v):
    if not isinstance(v, dict):
        raise ConfigError("source must be {r=..., on=..., off=...}")
    extra = set(v) - {"r", "on", "off"}
    if extra or not {"r", "on", "off"} <= set(v):
        raise ConfigError("source needs exactly the keys r, on, off")
    return OnOffSpec(_num(v["r"], "r"), build_tail(v["on"]), build_tail(v["off"]))


def expand_u_grid(v):
    """``[u1, u2, ...]``, a single number, or ``geom(a, b, n)``."""
    if isinstance(v, Call):
        if v.name != "geom":
            raise ConfigError("u grid must be a list or geom(a, b, n)")
        a = _call_args(v, ("a", "b", "n"), ("a", "b", "n"))
        n = a["n"]
        if not isinstance(n, int) or n < 1:
            raise ConfigError("geom() needs a positive integer count")
        lo, hi = _num(a["a"], "a"), _num(a["b"], "b")
        if not 0 < lo <= hi:
            raise ConfigError("geom() needs 0 < a <= b")
        return tuple(float(x) for x in np.geomspace(lo, hi, n))
    items = v if isinstance(v, list) else [v]
    us = tuple(_num(x, "u") for x in items)
    if not us or any(not (u >= 0 and math.isfinite(u)) for u in us):
        raise ConfigError("u values must be finite and nonnegative")
    return us


# -- experiment config ----------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    model: object  # HybridModel or None (validate mode without a model)
    u_grid: tuple
    n_paths: int
    n_steps: int
    K: float
    seed: int
    stratify: bool
    prefactor_source: str
    suites: tuple
    sections: dict = field(compare=False, repr=False)

    def text(self):
        return serialize_sections(self.sections)

    def digest(self):
        return hashlib.sha256(self.text().encode()).hexdigest()[:16]

    def with_overrides(self, mode=None, seed=None):
        sections = {k: dict(v) for k, v in self.sections.items()}
        run = sections.setdefault("run", {})
        if mode is not None:
            run["mode"] = mode
        if seed is not None:
            run["seed"] = int(seed)
        return from_sections(sections)


def _int(v, what, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError("%s must be an integer >= %d, got %r" % (what, lo, v))
    return v


def from_sections(sections):
    unknown = set(sections) - {"model", "run", "validate"}
    if unknown:
        raise ConfigError("unknown section(s): %s" % ", ".join(sorted(unknown)))
    run = sections.get("run", {})
    known_run = {"mode", "u", "n_paths", "n_steps", "K", "seed", "stratify", "prefactor_source"}
    bad = set(run) - known_run
    if bad:
        raise ConfigError("unknown [run] key(s): %s" % ", ".join(sorted(bad)))
    mode = run.get("mode", "compare")
    if mode not in MODES:
        raise ConfigError("mode must be one of %s" % ", ".join(MODES))
    model = None
    if "model" in sections:
        m = sections["model"]
        bad = set(m) - {"gaussian", "source", "c"}
        if bad:
            raise ConfigError("unknown [model] key(s): %s" % ", ".join(sorted(bad)))
        try:
            model = HybridModel(build_gaussian(m.get("gaussian", Call("bm"))),
                                build_source(m.get("source")), _num(m.get("c"), "c"))
        except (DomainError, SpecError) as exc:
            raise ConfigError("invalid model: %s" % exc) from exc
    elif mode != "validate":
        raise ConfigError("mode %s needs a [model] section" % mode)
    u_grid = expand_u_grid(run.get("u", [1.0])) if (mode != "validate" or "u" in run) else ()
    n_paths = _int(run.get("n_paths", 10000), "n_paths", 100)
    n_steps = _int(run.get("n_steps", 4096), "n_steps", 2)
    if n_steps & (n_steps - 1):
        raise ConfigError("n_steps must be a power of two")
    K = _num(run.get("K", DEFAULT_K), "K")
    if not K > 0:
        raise ConfigError("K must be positive")
    seed = _int(run.get("seed", 0), "seed", 0)
    stratify = run.get("stratify", False)
    if not isinstance(stratify, bool):
        raise ConfigError("stratify must be true or false")
    pref = run.get("prefactor_source", "alt_exponent")
    if pref not in PREFACTOR_SOURCES:
        raise ConfigError("prefactor_source must be one of %s" % ", ".join(PREFACTOR_SOURCES))
    val = sections.get("validate", {})
    bad = set(val) - {"suites", "n_paths"}
    if bad:
        raise ConfigError("unknown [validate] key(s): %s" % ", ".join(sorted(bad)))
    if "n_paths" in val:
        _int(val["n_paths"], "[validate] n_paths", 100)
    suites = val.get("suites", list(SUITES))
    suites = suites if isinstance(suites, list) else [suites]
    for s in suites:
        if s not in SUITES:
            raise ConfigError("unknown suite %r (known: %s)" % (s, ", ".join(SUITES)))
    return ExperimentConfig(mode, model, u_grid, n_paths, n_steps, K, seed, stratify, pref, tuple(suites),
                            {k: dict(v) for k, v in sections.items()})


def parse_config(text):
    return from_sections(parse_sections(text))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc.strerror)) from exc
    return parse_config(text)


def serialize(config):
    return config.text()


__all__ = [
    "Call",
    "ExperimentConfig",
    "MODES",
    "SUITES",
    "parse_value",
    "format_value",
    "parse_sections",
    "serialize_sections",
    "build_tail",
    "build_gaussian",
    "build_source",
    "expand_u_grid",
    "from_sections",
    "parse_config",
    "load_config",
    "serialize",
    "replace",
]
