import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridtail import gaussian_paths as gp
from hybridtail.errors import ConfigError
from hybridtail.harness.config import (
    Call, build_gaussian, build_source, build_tail, expand_u_grid, format_value, load_config, parse_config,
    parse_sections, parse_value, serialize, serialize_sections,
)
from hybridtail.heavy_tails import Deterministic, Exponential, Pareto, WeibullT1

MINIMAL = """
[model]
gaussian = bm()
source = {r=2, on=weibull(beta=0.7, L=const), off=exp(mean=3)}
c = 1.5

[run]
mode = compare
u = [4, 8]
n_paths = 1000
n_steps = 256
seed = 5
"""

names = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(lambda s: s not in ("true", "false", "inf", "nan"))
scalars = (
    st.integers(-10 ** 12, 10 ** 12)
    | st.floats(allow_nan=False)
    | st.booleans()
    | st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=12)
)
values = st.recursive(
    scalars,
    lambda inner: (
        st.lists(inner, max_size=4)
        | st.dictionaries(names, inner, max_size=3)
        | st.builds(lambda n, a, kw: Call(n, tuple(a), tuple(kw.items())), names,
                    st.lists(inner, max_size=3), st.dictionaries(names, inner, max_size=3))
    ),
    max_leaves=12,
)


@given(values)
def test_value_round_trip(v):
    assert parse_value(format_value(v)) == v
    assert format_value(parse_value(format_value(v))) == format_value(v)


@pytest.mark.parametrize("text,expected", [
    ("3", 3),
    ("-2.5e-3", -2.5e-3),
    ("inf", math.inf),
    ("true", True),
    ("alt_exponent", "alt_exponent"),
    ('"a, b"', "a, b"),
    ("[1, 2.0, x]", [1, 2.0, "x"]),
    ("{r=1, on=pareto(nu=2)}", {"r": 1, "on": Call("pareto", (), (("nu", 2),))}),
    ("geom(3, 22, 6)", Call("geom", (3, 22, 6))),
    ("[]", []),
    ("f()", Call("f")),
])
def test_value_examples(text, expected):
    assert parse_value(text) == expected


@pytest.mark.parametrize("text", ["[1, 2", "{1}", "f(a=1, 2)", "1 2", "@", "{r=}", "[1,,2]", ")"])
def test_grammar_errors(text):
    with pytest.raises(ConfigError):
        parse_value(text)


def test_builders():
    assert isinstance(build_tail(parse_value("pareto(nu=2, scale=3)")), Pareto)
    w = build_tail(parse_value("weibull(0.6, L=log(gamma=0.5))"))
    assert isinstance(w, WeibullT1) and w.L.gamma == 0.5
    e = build_tail(parse_value("exp(mean=4)"))
    assert isinstance(e, Exponential) and e.mean == pytest.approx(4.0)
    assert isinstance(build_tail(parse_value("det(2)")), Deterministic)
    assert build_gaussian(parse_value("fbm(H=0.7)")) == gp.fbm(0.7)
    assert build_gaussian(parse_value("bm(scale=2)")).scale == 2.0
    mix = build_gaussian(parse_value("fbm_mix(weights=[1, 1], hursts=[0.3, 0.8])"))
    assert mix.kind is gp.GaussKind.CUSTOM
    src = build_source(parse_value("{r=1, on=pareto(nu=2), off=exp(rate=1)}"))
    assert src.p == pytest.approx(0.5)


@pytest.mark.parametrize("text", [
    "exp(rate=1, mean=1)", "exp()", "pareto()", "pareto(nu=2, shape=1)", "pareto(2, 3, 4)", "gamma(k=1)",
    "weibull(beta=0.5, L=sqrt)", "pareto(nu=x)",
])
def test_tail_builder_errors(text):
    with pytest.raises(ConfigError):
        build_tail(parse_value(text))


def test_source_builder_errors():
    for text in ["{r=1, on=exp(rate=1)}", "{r=1, on=exp(rate=1), off=exp(rate=1), x=1}", "[1]"]:
        with pytest.raises(ConfigError):
            build_source(parse_value(text))
    with pytest.raises(ConfigError):
        build_gaussian(parse_value("ou(theta=1)"))


def test_u_grid_expansion():
    us = expand_u_grid(parse_value("geom(3, 22, 6)"))
    np.testing.assert_allclose(us, np.geomspace(3, 22, 6))
    assert expand_u_grid(2) == (2.0,)
    assert expand_u_grid([1, 2.5]) == (1.0, 2.5)
    for bad in ["geom(0, 1, 3)", "geom(2, 1, 3)", "geom(1, 2, 0)", "[-1]", "[]", "lin(1, 2, 3)", "[inf]"]:
        with pytest.raises(ConfigError):
            expand_u_grid(parse_value(bad))


def test_config_fields_and_round_trip():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "compare" and cfg.u_grid == (4.0, 8.0)
    assert cfg.n_paths == 1000 and cfg.n_steps == 256 and cfg.seed == 5
    assert cfg.K == 5.0 and cfg.stratify is False and cfg.prefactor_source == "alt_exponent"
    assert cfg.model.c == 1.5 and cfg.model.source.r == 2.0
    again = parse_config(serialize(cfg))
    assert again == cfg and again.digest() == cfg.digest()
    assert parse_sections(serialize_sections(cfg.sections)) == cfg.sections


def test_overrides():
    cfg = parse_config(MINIMAL)
    other = cfg.with_overrides(mode="asymptote", seed=9)
    assert other.mode == "asymptote" and other.seed == 9
    assert other.digest() != cfg.digest()
    assert cfg.seed == 5


@pytest.mark.parametrize("patch", [
    ("mode = compare", "mode = explore"),
    ("n_paths = 1000", "n_paths = 50"),
    ("n_steps = 256", "n_steps = 300"),
    ("seed = 5", "seed = -1"),
    ("seed = 5", "seed = 1.5"),
    ("c = 1.5", "c = 0.5"),
    ("c = 1.5", "c = 1.5\nd = 2"),
    ("seed = 5", "seed = 5\nstratify = yes"),
    ("seed = 5", "seed = 5\nK = 0"),
    ("seed = 5", "seed = 5\nprefactor_source = mc_estimate"),
    ("seed = 5", "seed = 5\ncolour = red"),
    ("[run]", "[runs]"),
    ("[run]", "[model]"),
])
def test_validation_errors(patch):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace(*patch))


def test_validate_mode_sections():
    cfg = parse_config("[run]\nmode = validate\n\n[validate]\nsuites = [relation34, sandwich]\nn_paths = 500\n")
    assert cfg.model is None and cfg.suites == ("relation34", "sandwich") and cfg.u_grid == ()
    with pytest.raises(ConfigError):
        parse_config("[run]\nmode = validate\n\n[validate]\nsuites = [bogus]\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nmode = compare\n")


def test_load_config(tmp_path):
    path = tmp_path / "m.cfg"
    path.write_text(MINIMAL)
    assert load_config(str(path)).seed == 5
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.cfg"))


def test_shipped_configs_parse():
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    cfgs = sorted(root.glob("*.cfg"))
    assert cfgs
    for path in cfgs:
        load_config(str(path))
