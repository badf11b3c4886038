"""Scenario runner: parse a TOML scenario, dispatch a verification suite, write reports.

A scenario file has four sections::

    [function]            # catalog entry: id plus its parameters (dim included)
    id = "gaussian_bump"
    dim = 1
    sigma = 1.0

    [space]               # outer space: type tag plus parameters
    type = "lebesgue"
    p = 2

    [functional]          # level-set functional and its quadrature
    k = 1
    q = 2
    gamma = 1

    [suite]               # suite name plus suite-specific keys
    name = "limit"
    tolerance = 0.05

Every run writes ``report.json`` (sorted keys, no timestamps, so reruns are
byte-identical), ``timing.json`` (wall time only) and one CSV per table.

Exit codes: 0 all checks pass, 1 some check failed, 2 invalid configuration,
3 quadrature inconsistency (resolution doubling moved a headline number beyond
its tolerance, a non-finite headline, or a boundary argmax under ``--strict``).
"""
from __future__ import annotations

import csv
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from . import bsvy, calculus, dyadic, spaces, weights
from .bsvy import (BoundaryArgmaxError, FunctionalConfig, HQuadrature, LambdaGrid, gamma_valid)
from .calculus import DEFAULT_WEIGHTING, SeminormQuadrature
from .field import AnalyticField, GridSpec, SampledField, dilate, make_catalog_function

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_QUADRATURE = 0, 1, 2, 3

SUITES = ("limit", "equivalence", "gn", "sharpness", "defect", "sparse", "weights", "spaces",
          "calculus-oracles")
SWEEP_AXES = ("lambda", "R", "epsilon", "dilation", "q")

# fixed CSV column headers, one entry per table name
TABLE_HEADERS = {
    "limit_tail": ("lambda", "phi"),
    "equivalence": ("function", "dilation", "sup", "argmax", "rhs", "ratio", "boundary"),
    "gn": ("dilation", "lhs", "rhs", "ratio", "argmax"),
    "sharpness": ("R", "value"),
    "defect": ("function", "epsilon", "seminorm_q"),
    "sparse": ("weight", "dilation", "sup", "argmax", "rhs", "ratio", "exact_sup"),
    "weights": ("weight", "p", "depth", "ap_constant"),
    "spaces": ("variant", "check", "computed", "reference", "passed"),
    "calculus": ("function", "point", "direction", "limit", "plain", "multinomial",
                 "slope_plain", "slope_multinomial", "selected"),
    "sweep_lambda": ("lambda", "phi"),
    "sweep_R": ("R", "value"),
    "sweep_epsilon": ("epsilon", "seminorm_q"),
    "sweep_dilation": ("dilation", "sup", "argmax", "rhs", "ratio"),
    "sweep_q": ("q", "gamma_valid", "sup", "argmax", "rhs", "ratio"),
}


class ConfigError(ValueError):
    """Invalid scenario (exit 2)."""


class QuadratureInconsistency(RuntimeError):
    """Resolution doubling or finiteness check failed (exit 3)."""


# --------------------------------------------------------------------------
# records


def _clean(v):
    """JSON-safe, deterministic rendering of numbers and containers."""
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class Check:
    """One verdict: ``computed`` against ``predicted`` within ``tolerance``."""

    name: str
    computed: Any
    predicted: Any
    tolerance: Any
    passed: bool
    provenance: str  # PAPER, TRIVIAL or DERIVED
    note: str = ""

    def __post_init__(self):
        if self.provenance not in ("PAPER", "TRIVIAL", "DERIVED"):
            raise ValueError(f"bad provenance {self.provenance!r}")
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return _clean({"name": self.name, "computed": self.computed, "predicted": self.predicted,
                       "tolerance": self.tolerance, "passed": self.passed,
                       "provenance": self.provenance, "note": self.note})


@dataclass
class SuiteOutcome:
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)      # name -> list of row tuples
    headline: dict = field(default_factory=dict)    # name -> (value, relative tolerance)
    findings: dict = field(default_factory=dict)
    stamps: dict = field(default_factory=dict)


@dataclass
class Context:
    strict: bool = False
    threads: int = 1
    resolution: float = 1.0


# --------------------------------------------------------------------------
# scenario parsing


@dataclass
class Scenario:
    suite: str
    function: dict
    space: dict
    functional: dict
    params: dict
    source: dict

    @property
    def dim(self) -> int:
        return int(self.function.get("dim", 1))


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; raises :class:`ConfigError`."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    unknown = set(doc) - {"function", "space", "functional", "suite"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    suite = dict(doc.get("suite", {}))
    name = suite.pop("name", None)
    if name not in SUITES:
        raise ConfigError(f"[suite] name must be one of {SUITES}, got {name!r}")
    scn = Scenario(name, dict(doc.get("function", {})), dict(doc.get("space", {"type": "lebesgue"})),
                   dict(doc.get("functional", {})), suite, doc)
    validate(scn)
    return scn


def build_function(spec: dict, dim: int | None = None) -> AnalyticField:
    spec = dict(spec)
    cid = spec.pop("id", None)
    if cid is None:
        raise ConfigError("[function] needs an 'id'")
    if dim is not None:
        spec.setdefault("dim", dim)
    try:
        return make_catalog_function(cid, spec)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def build_space(spec: dict) -> spaces.SpaceSpec:
    spec = dict(spec)
    if "weight" in spec and isinstance(spec["weight"], dict):
        spec["weight"] = weights.WeightSpec.from_dict(spec["weight"])
    for key, cls in (("phi", spaces.OrliczFunction), ("exponent", spaces.ExponentFunction)):
        if key in spec and isinstance(spec[key], dict):
            spec[key] = cls(**spec[key])
    try:
        return spaces.space_from_dict(spec)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


_FUNCTIONAL_KEYS = {"k", "ell", "q", "gamma", "p", "lambda_min", "lambda_max", "lambda_per_decade",
                    "directions", "radial_per_decade", "r_min", "r_max", "box_factor",
                    "box_half_width", "points_per_axis", "claims_main"}


def build_config(scn: Scenario, ctx: Context | None = None, **override) -> FunctionalConfig:
    """``FunctionalConfig`` from ``[functional]`` and ``[space]``; resolution applied."""
    ctx = ctx or Context()
    fx = {**scn.functional, **override}
    bad = set(fx) - _FUNCTIONAL_KEYS
    if bad:
        raise ConfigError(f"unknown [functional] keys {sorted(bad)}")
    try:
        lam = LambdaGrid(float(fx.get("lambda_min", 1e-4)), float(fx.get("lambda_max", 1e6)),
                         int(fx.get("lambda_per_decade", 16)))
        hq = HQuadrature(int(fx.get("directions", 32)), int(fx.get("radial_per_decade", 64)),
                         fx.get("r_min"), fx.get("r_max"))
        cfg = FunctionalConfig(
            k=int(fx.get("k", 1)), q=float(fx.get("q", 2.0)), gamma=float(fx.get("gamma", 1.0)),
            space=build_space(scn.space), ell=fx.get("ell"), p=fx.get("p"), lam=lam, hquad=hq,
            box_factor=float(fx.get("box_factor", 2.0)), box_half_width=fx.get("box_half_width"),
            points_per_axis=fx.get("points_per_axis"),
            claims_main=bool(fx.get("claims_main", True)),
            strict=ctx.strict, threads=ctx.threads)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.scaled(ctx.resolution) if ctx.resolution != 1.0 else cfg


def validate(scn: Scenario) -> None:
    """Checks run before dispatch (catalog ids, space tags, gamma in Gamma_{p,q})."""
    needs_function = scn.suite not in ("sharpness", "weights", "spaces")
    if needs_function:
        build_function(scn.function)
    build_space(scn.space)
    gamma = scn.functional.get("gamma", 1.0)
    if gamma == 0:
        raise ConfigError("gamma = 0 is not admissible: Gamma_{p,q} = (-inf,-q) u (0,inf) "
                          "for p = 1 and R \\ {0} for p > 1; both exclude 0")
    if scn.suite == "gn":
        p = scn.functional.get("p", scn.space.get("p", 1.0))
        if not gamma_valid(float(p), 1.0, float(gamma)):
            raise ConfigError(f"gamma={gamma} not in Gamma_{{p,1}} for p={p}")
    elif scn.suite in ("limit", "equivalence"):
        build_config(scn)


# --------------------------------------------------------------------------
# helpers


def _functions(scn: Scenario) -> list[tuple[str, AnalyticField]]:
    specs = scn.params.get("functions") or [scn.function]
    out = []
    for spec in specs:
        f = build_function(spec, scn.dim)
        label = spec.get("label") or f"{spec['id']}({', '.join(f'{k}={v}' for k, v in sorted(spec.items()) if k not in ('id', 'label'))})"
        out.append((label, f))
    return out


def _spread(vals) -> float:
    v = np.asarray(vals, dtype=float)
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return math.inf
    return float(v.max() / v.min())


def _finite(x) -> bool:
    return bool(np.all(np.isfinite(np.asarray(x, dtype=float))))


# --------------------------------------------------------------------------
# suites


def suite_limit(scn: Scenario, ctx: Context) -> SuiteOutcome:
    f = build_function(scn.function)
    cfg = build_config(scn, ctx)
    tol = float(scn.params.get("tolerance", 0.05 if f.dim == 1 else 0.10))
    res = bsvy.bsvy_limit(f, cfg)
    out = SuiteOutcome()
    zero = res.status == "exact-zero"
    out.checks.append(Check("limit-vs-symbol", res.limit, res.predicted, tol,
                            res.relative_error < tol, "TRIVIAL" if zero else "DERIVED",
                            f"direction lambda -> {res.direction}"))
    out.checks.append(Check("tail-monotone", res.monotone, True, 1e-3, res.monotone, "DERIVED",
                            res.status))
    out.tables["limit_tail"] = [(float(l), float(v)) for l, v in zip(res.lambdas, res.tail)]
    out.headline["limit"] = (res.limit, tol)
    if f.dim >= 2 and cfg.k >= 2:
        other = "plain" if DEFAULT_WEIGHTING == "multinomial" else "multinomial"
        alt = bsvy.limit_prediction(f, cfg, weighting=other)
        out.findings["weighting"] = {"selected": DEFAULT_WEIGHTING, "predicted_selected": res.predicted,
                                     f"predicted_{other}": alt, "measured_limit": res.limit}
    else:
        out.findings["weighting"] = {"selected": DEFAULT_WEIGHTING,
                                     "note": "both weightings coincide for dim 1 or k = 1"}
    out.findings["limit"] = res.to_dict()
    out.stamps.update(_stamps(f, cfg))
    return out


def _stamps(f: AnalyticField, cfg: FunctionalConfig) -> dict:
    grid = bsvy.outer_grid(f, cfg)
    return {"points_per_axis": grid.points_per_axis, "box_half_width": grid.half_width,
            "directions": cfg.hquad.directions, "radial_per_decade": cfg.hquad.radial_per_decade,
            "lambda_per_decade": cfg.lam.per_decade, "resolution": cfg.resolution}


def suite_equivalence(scn: Scenario, ctx: Context) -> SuiteOutcome:
    cfg = build_config(scn, ctx)
    dils = [float(a) for a in scn.params.get("dilations", [0.25, 1.0, 4.0])]
    window = float(scn.params.get("window", 4.0))
    out = SuiteOutcome()
    ratios = []
    rows = []
    for label, f in _functions(scn):
        for a in dils:
            r = bsvy.bsvy_sup(dilate(f, a) if a != 1 else f, cfg)
            ratios.append(r.ratio)
            rows.append((label, a, r.sup, r.argmax, r.rhs, r.ratio, r.boundary))
    out.tables["equivalence"] = rows
    spread = _spread(ratios)
    out.checks.append(Check("ratios-finite", _finite(ratios), True, None,
                            _finite(ratios) and min(ratios) > 0, "DERIVED"))
    out.checks.append(Check("ratio-window", spread, window, window, spread <= window, "DERIVED",
                            "max/min of sup/||nabla^k f||_X over functions and dilations"))
    out.headline["ratio_min"] = (float(min(ratios)), float(scn.params.get("resolution_tol", 0.05)))
    out.headline["ratio_max"] = (float(max(ratios)), float(scn.params.get("resolution_tol", 0.05)))
    out.stamps.update(_stamps(_functions(scn)[0][1], cfg))
    return out


def suite_gn(scn: Scenario, ctx: Context) -> SuiteOutcome:
    f = build_function(scn.function)
    sp = scn.params
    mode = sp.get("mode", "interpolation-ss")
    s = float(sp.get("s", 0.5))
    q0 = float(sp.get("q0", 2.0))
    eta, s0 = sp.get("eta"), sp.get("s0")
    if mode == "endpoint-inf":
        q = 1.0 / s
    elif mode == "two-parameter":
        if eta is None or s0 is None:
            raise ConfigError("two-parameter mode needs eta and s0")
        eta, s0 = float(eta), float(s0)
        s = (1 - eta) * s0 + eta
        q = 1.0 / ((1 - eta) / q0 + eta)
    else:
        q = 1.0 / ((1 - s) / q0 + s)
    cfg = build_config(scn, ctx, q=q, claims_main=False)
    dils = [float(a) for a in sp.get("dilations", [0.25, 1.0, 4.0])]
    out = SuiteOutcome()
    ratios = []
    for a in dils:
        fa = dilate(f, a) if a != 1 else f
        try:
            r = bsvy.gn_check(fa, cfg, s, q0, mode, eta, s0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        ratios.append(r.ratio)
        out.tables.setdefault("gn", []).append((a, r.lhs, r.rhs, r.ratio, r.argmax))
    spread = _spread(ratios)
    window = float(sp.get("window", 2.0))
    out.checks.append(Check("lhs-over-rhs-finite", max(ratios), None, None,
                            _finite(ratios), "DERIVED", f"mode {mode}, s={s}, q={q}, q0={q0}"))
    out.checks.append(Check("dilation-stability", spread, window, window, spread <= window, "DERIVED"))
    out.headline["ratio"] = (ratios[len(ratios) // 2], float(sp.get("resolution_tol", 0.05)))
    if sp.get("endpoint", False):
        s_end = 1 - 1e-6
        q_end = 1.0 / ((1 - s_end) / q0 + s_end)
        g = bsvy.gn_check(f, replace(cfg, q=q_end), s_end, q0, "interpolation-ss")
        ref = bsvy.bsvy_sup(f, replace(cfg, q=1.0, claims_main=True))
        rel = abs(g.lhs - ref.sup) / ref.sup
        out.checks.append(Check("s-to-1-endpoint", g.lhs, ref.sup, 0.01, rel < 0.01, "DERIVED",
                                "interpolation-ss at s = 1 - 1e-6 against the q = 1 sup"))
    out.stamps.update(_stamps(f, cfg))
    return out


def _sharpness(sp: dict, ctx: Context, R_list=None) -> bsvy.SharpnessTable:
    scale = ctx.resolution
    try:
        return bsvy.sharpness_experiment(
            float(sp.get("p", 1.0)), float(sp.get("q", 2.0)), int(sp.get("k", 1)),
            int(sp.get("ell", sp.get("k", 1))), R_list or sp.get("R", [8, 16, 32, 64]),
            dim=int(sp.get("dim", 2)), lam=float(sp.get("lam", 0.75)),
            directions=int(round(int(sp.get("directions", 2048)) * scale)),
            radial_per_decade=int(round(int(sp.get("radial_per_decade", 32)) * scale)),
            core_panels=int(round(48 * scale)), decade_panels=int(round(24 * scale)),
            fine_step=0.02 / scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def suite_sharpness(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    tab = _sharpness(sp, ctx)
    out = SuiteOutcome()
    out.tables["sharpness"] = [(float(r), float(v)) for r, v in zip(tab.R, tab.values)]
    expect = sp.get("expect", "growth" if tab.regime == "failing" else "saturation")
    if expect == "growth":
        thr = float(sp.get("growth_min", 1.5))
        out.checks.append(Check("growth", tab.growth, f"> {thr}", thr, tab.growth > thr, "PAPER",
                                "value(R_max)/value(R=8); divergent radial integral"))
        out.checks.append(Check("monotone-in-R", tab.monotone, True, None, tab.monotone, "PAPER"))
    else:
        thr = float(sp.get("saturation_max", 1.1))
        out.checks.append(Check("saturation", tab.growth, f"< {thr}", thr, tab.growth < thr,
                                "DERIVED", "value(R_max)/value(R=8); convergent radial integral"))
    out.findings["regime"] = tab.regime
    out.headline["growth"] = (tab.growth, float(sp.get("resolution_tol", 0.02)))
    out.stamps.update({"directions": int(round(int(sp.get("directions", 2048)) * ctx.resolution)),
                       "radial_per_decade": int(round(int(sp.get("radial_per_decade", 32)) * ctx.resolution)),
                       "resolution": ctx.resolution})
    return out


def _seminorm_quad(sp: dict, ctx: Context) -> SeminormQuadrature:
    s = ctx.resolution
    return SeminormQuadrature(h_max=float(sp.get("h_max", 4.0)), x_max=float(sp.get("x_max", 6.0)),
                              points_per_axis=int(round(int(sp.get("points_per_axis", 512)) * s)),
                              directions=int(round(int(sp.get("directions", 32)) * s)),
                              radial_per_decade=int(round(int(sp.get("radial_per_decade", 64)) * s)))


def suite_defect(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    k, q = int(sp.get("k", scn.functional.get("k", 1))), float(sp.get("q", scn.functional.get("q", 2.0)))
    eps = [float(e) for e in sp.get("eps", [0.1, 0.03, 0.01, 0.003, 0.001])]
    quad = _seminorm_quad(sp, ctx)
    out = SuiteOutcome()
    rows = []
    for label, f in _functions(scn):
        rep = bsvy.defect_experiment(f, k, q, eps, quad)
        rows += [(label, float(e), float(v)) for e, v in zip(rep.eps, rep.values)]
        if rep.zero or (f.polynomial_degree is not None and f.polynomial_degree < k):
            out.checks.append(Check(f"zero[{label}]", float(np.max(np.abs(rep.values))), 0.0, 0.0,
                                    rep.zero, "TRIVIAL", "Delta^k annihilates P_{k-1}"))
        else:
            out.checks.append(Check(f"log-fit[{label}]", {"slope": rep.slope, "r2": rep.r2},
                                    {"slope": "> 0", "r2": "> 0.99"}, 0.99, rep.passed, "DERIVED",
                                    "seminorm^q linear in log(1/eps)"))
            out.headline[f"slope[{label}]"] = (rep.slope, float(sp.get("resolution_tol", 0.05)))
    out.tables["defect"] = rows
    out.stamps.update({"points_per_axis": quad.points_per_axis, "directions": quad.directions,
                       "radial_per_decade": quad.radial_per_decade, "resolution": ctx.resolution})
    return out


def suite_sparse(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    f = build_function(scn.function)
    p, beta = float(sp.get("p", 1.0)), float(sp.get("beta", 0.5))
    k = int(sp.get("k", scn.functional.get("k", 1)))
    ell = int(sp.get("ell", k))
    window = tuple(int(j) for j in sp.get("window", [-14, 6]))
    dils = [float(a) for a in sp.get("dilations", [0.25, 1.0, 4.0])]
    wspecs = sp.get("weights", [{"kind": "constant"}])
    limit = float(sp.get("spread_max", 3.0))
    pts = int(round(4096 * ctx.resolution)) if f.dim == 1 else int(round(256 * ctx.resolution))
    out = SuiteOutcome()
    rows = []
    wlist = [weights.WeightSpec.from_dict(wd) for wd in wspecs]
    labels = [w.kind if w.is_constant else f"{w.kind}(a={w.a})" for w in wlist]
    by_weight = {wl: [] for wl in labels}
    for a in dils:
        fa = dilate(f, a) if a != 1 else f
        R = dyadic._support_extent(fa, 8.0 / a)
        table = dyadic.approximation_table(fa, k, 0.0, window, extent=8.0 / a)
        for w, wl in zip(wlist, labels):
            res = dyadic.sparse_sup(fa, p, beta, k, ell, 0.0, w, window=window,
                                    rhs_grid=GridSpec(f.dim, R, pts), table=table)
            by_weight[wl].append(res.ratio)
            rows.append((wl, a, res.sup, res.argmax, res.rhs, res.ratio, res.exact_sup))
    for wl in labels:
        ratios = by_weight[wl]
        spread = _spread(ratios)
        out.checks.append(Check(f"sparse-ratio[{wl}]", spread, f"< {limit}", limit,
                                spread < limit, "DERIVED",
                                f"p={p}, beta={beta}, k={k}, ell={ell}; max/min over dilations"))
        out.headline[f"ratio[{wl}]"] = (ratios[len(ratios) // 2], float(sp.get("resolution_tol", 0.02)))
    out.tables["sparse"] = rows
    draws = int(sp.get("qx_draws", 0))
    if draws and beta != 1:
        rng = np.random.default_rng(int(sp.get("seed", 0)))
        bound = dyadic.qx_bound(f.dim, p, beta)
        table = dyadic.approximation_table(f, k, 0.0, window)
        thr = dyadic._thresholds(table, beta, ell)
        worst, done = 0.0, 0
        pos = np.sort(thr[thr > 0])
        while done < draws and pos.size:
            lam = float(pos[rng.integers(pos.size)]) * 0.999
            fam = dyadic.level_family(f, lam, beta, k, ell, 0.0, window, table=table)
            cube = table.cube(int(fam.members[rng.integers(len(fam))]))
            corner, edge = dyadic.cube_geometry(cube.alpha, cube.j, cube.m)
            x = corner + edge * rng.random(f.dim)
            _, ratio = dyadic.qx_check(fam, x, p)
            worst = max(worst, ratio)
            done += 1
        out.checks.append(Check("qx-geometric-bound", worst, bound, 1e-9,
                                worst <= bound * (1 + 1e-9), "PAPER", f"{done} random draws"))
    out.stamps.update({"window": list(window), "rhs_points_per_axis": pts, "resolution": ctx.resolution})
    return out


def suite_weights(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    dim = int(sp.get("dim", 1))
    wspecs = sp.get("weights", [{"kind": "constant"}, {"kind": "power", "a": -0.5}])
    ps = [float(p) for p in sp.get("p_values", [1.0, 1.5, 2.0, 3.0])]
    depths = [int(round(d * ctx.resolution)) for d in sp.get("depths", [40, 80, 160])]
    out = SuiteOutcome()
    rows = []
    for wd in wspecs:
        w = weights.WeightSpec.from_dict(wd)
        wl = w.kind if w.is_constant else f"{w.kind}(a={w.a})"
        sing = w.singular_point(dim) if w.kind == "shifted_power" else None
        fams = [weights.default_family(dim, sing, depth=d) for d in depths]
        est = {}
        for p in ps:
            vals = []
            for d, fam in zip(depths, fams):
                try:
                    v = weights.ap_constant(w, p, fam)
                except ValueError:
                    v = math.inf
                vals.append(v)
                rows.append((wl, p, d, v))
            est[p] = vals
        deepest = [est[p][-1] for p in ps]
        out.checks.append(Check(f"ap-at-least-one[{wl}]", min(deepest), 1.0, 1e-12,
                                min(deepest) >= 1 - 1e-12, "TRIVIAL", "Jensen"))
        mono = all(b <= a * (1 + 1e-9) for a, b in zip(deepest[:-1], deepest[1:]) if math.isfinite(a))
        out.checks.append(Check(f"monotone-in-p[{wl}]", deepest, "non-increasing", 1e-9, mono,
                                "PAPER", "[w]_{A_q} <= [w]_{A_p} for q >= p"))
        if w.is_constant:
            ok = all(v == 1.0 for vs in est.values() for v in vs)
            out.checks.append(Check(f"constant-is-one[{wl}]", deepest, 1.0, 0.0, ok, "TRIVIAL"))
            continue
        for p in ps:
            vals = est[p]
            admissible = -dim < w.a <= 0 if p == 1 else -dim < w.a < dim * (p - 1)
            stable = all(math.isfinite(v) for v in vals) and \
                abs(vals[-1] - vals[-2]) <= 0.05 * vals[-2]
            grows = (not math.isfinite(vals[-1])) or vals[-1] > vals[0] * 1.5
            out.checks.append(Check(
                f"dichotomy[{wl}, p={p}]", vals, "stable" if admissible else "divergent", 0.05,
                stable if admissible else grows, "DERIVED",
                "power weights: |x|^a in A_p iff -n < a < n(p-1)"))
    out.tables["weights"] = rows
    out.stamps.update({"depths": depths, "resolution": ctx.resolution})
    return out


def _default_variants(p: float) -> dict:
    r = max(p, 1.5)
    return {
        "lebesgue": spaces.Lebesgue(p),
        "weighted_lebesgue": spaces.WeightedLebesgue(p, weights.WeightSpec.power(-0.5)),
        "lorentz": spaces.Lorentz(r, 2.0),
        "variable_lebesgue": spaces.VariableLebesgue(spaces.ExponentFunction("decay", 2.0, 1.5)),
        "mixed_norm": spaces.MixedNorm((r, 2.0)),
        "orlicz": spaces.Orlicz(spaces.OrliczFunction("power_log", p)),
        "morrey": spaces.Morrey(2.0, p),
        "bourgain_morrey": spaces.BourgainMorrey(2.0, 1.0, 4.0),
        "besov_bourgain_morrey": spaces.BesovBourgainMorrey(2.0, 1.0, 4.0, 2.0),
        "herz_local": spaces.HerzLocal(p, 2.0, 0.0),
        "orlicz_slice": spaces.OrliczSlice(2.0, 0.5, spaces.OrliczFunction("power", p)),
    }


def _random_fields(grid: GridSpec, count: int, rng) -> list[SampledField]:
    """Smooth compactly supported random fields: sums of a few Gaussians."""
    pts = grid.points()
    out = []
    for _ in range(count):
        vals = np.zeros(len(pts))
        for _ in range(3):
            c = rng.uniform(-0.4, 0.4, grid.dim) * grid.half_width
            s = rng.uniform(0.1, 0.3) * grid.half_width
            vals += rng.uniform(-1, 1) * np.exp(-np.sum((pts - c) ** 2, axis=-1) / s**2)
        r = np.sqrt(np.sum(pts**2, axis=-1))
        vals *= r < 0.8 * grid.half_width
        out.append(SampledField(grid, vals))
    return out


def suite_spaces(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    dim = int(sp.get("dim", 2))
    p = float(sp.get("p", 2.0))
    count = int(sp.get("fields", 20))
    n = int(round(int(sp.get("points_per_axis", 64 if dim == 2 else 512)) * ctx.resolution))
    grid = GridSpec(dim, float(sp.get("half_width", 4.0)), n)
    rng = np.random.default_rng(int(sp.get("seed", 0)))
    fields = _random_fields(grid, count, rng)
    tol = float(sp.get("tolerance", 0.01))
    out = SuiteOutcome()
    rows = []
    leb = spaces.Lebesgue(p)
    pairs = {
        "lorentz(p,p)": spaces.Lorentz(p, p) if p > 1 else None,
        "morrey(p,p)": spaces.Morrey(p, p),
        "orlicz(t^p)": spaces.Orlicz(spaces.OrliczFunction("power", p)),
        "weighted(1)": spaces.WeightedLebesgue(p, weights.WeightSpec.constant()),
    }
    for name, spec in pairs.items():
        if spec is None:
            continue
        worst = 0.0
        for g in fields:
            a, b = spaces.space_norm(spec, g), spaces.space_norm(leb, g)
            worst = max(worst, abs(a - b) / b)
        rows.append((name, "coincidence", worst, 0.0, worst < tol))
        out.checks.append(Check(f"coincidence[{name} = L^p]", worst, 0.0, tol, worst < tol,
                                "TRIVIAL" if name == "weighted(1)" else "DERIVED"))
    bm = spaces.BourgainMorrey(2.0, 1.0, 4.0)
    bbm = spaces.BesovBourgainMorrey(2.0, 1.0, 4.0, 4.0)
    worst = max(abs(spaces.space_norm(bbm, g) - spaces.space_norm(bm, g)) / spaces.space_norm(bm, g)
                for g in fields)
    rows.append(("besov_bourgain_morrey(tau=r)", "coincidence", worst, 0.0, worst < tol))
    out.checks.append(Check("coincidence[BesovBourgainMorrey(tau=r) = BourgainMorrey]", worst, 0.0,
                            tol, worst < tol, "PAPER"))
    variants = sp.get("variants") or list(_default_variants(p))
    table = _default_variants(p)
    for tag in variants:
        if tag not in table:
            raise ConfigError(f"unknown variant {tag!r}")
        spec = table[tag]
        hom = tri = lat = 0.0
        for i, g in enumerate(fields):
            h = fields[(i + 1) % len(fields)]
            ng = spaces.space_norm(spec, g)
            hom = max(hom, abs(spaces.space_norm(spec, SampledField(grid, -2.5 * g.values)) - 2.5 * ng)
                      / max(2.5 * ng, 1e-300))
            s = spaces.space_norm(spec, SampledField(grid, g.values + h.values))
            tri = max(tri, s / (ng + spaces.space_norm(spec, h)) - 1)
            small = SampledField(grid, g.values * rng.uniform(0, 1, g.values.shape))
            lat = max(lat, spaces.space_norm(spec, small) / max(ng, 1e-300) - 1)
        for check, val in (("homogeneity", hom), ("triangle", tri), ("lattice", lat)):
            thr = 1e-9
            ok = val <= thr
            rows.append((tag, check, val, 0.0, ok))
            out.checks.append(Check(f"{check}[{tag}]", val, 0.0, thr, ok, "TRIVIAL" if check == "homogeneity"
                                    else "DERIVED"))
    out.tables["spaces"] = rows
    out.stamps.update({"points_per_axis": n, "fields": count, "resolution": ctx.resolution})
    return out


def suite_calculus(scn: Scenario, ctx: Context) -> SuiteOutcome:
    sp = scn.params
    k = int(sp.get("k", scn.functional.get("k", 2)))
    draws = int(sp.get("draws", 8))
    rng = np.random.default_rng(int(sp.get("seed", 0)))
    out = SuiteOutcome()
    rows = []
    counts = {"plain": 0, "multinomial": 0, None: 0}
    min_slope = math.inf
    for label, f in _functions(scn):
        for _ in range(draws):
            x = rng.uniform(-1, 1, f.dim)
            xi = rng.normal(size=f.dim)
            xi /= np.linalg.norm(xi)
            res = calculus.limit_symbol_oracle(f, x, xi, k)
            counts[res.selected] += 1
            min_slope = min(min_slope, res.residual_slopes[DEFAULT_WEIGHTING])
            rows.append((label, x.tolist(), xi.tolist(), res.limit, res.candidates["plain"],
                         res.candidates["multinomial"], res.residual_slopes["plain"],
                         res.residual_slopes["multinomial"], res.selected))
    out.checks.append(Check("oracle-convergence-slope", min_slope, ">= 1", 1.0, min_slope >= 1,
                            "DERIVED", "log-log slope of the selected symbol's residual"))
    majority = max(("plain", "multinomial"), key=lambda n: counts[n])
    out.checks.append(Check("selected-weighting", majority, DEFAULT_WEIGHTING, None,
                            majority == DEFAULT_WEIGHTING, "DERIVED",
                            f"oracle votes {{plain: {counts['plain']}, multinomial: {counts['multinomial']}}}"))
    out.findings["weighting"] = {"oracle_votes": {"plain": counts["plain"],
                                                  "multinomial": counts["multinomial"],
                                                  "indeterminate": counts[None]},
                                 "selected": DEFAULT_WEIGHTING}
    res_spl = []
    for label, f in _functions(scn):
        if f.max_derivative_order >= k and f.exact_derivatives:
            x, h = rng.uniform(-1, 1, f.dim), rng.uniform(-0.5, 0.5, f.dim)
            res_spl.append(calculus.spline_identity_residual(f, x, h, k))
    if res_spl:
        worst = max(res_spl)
        out.checks.append(Check("spline-identity", worst, 0.0, 1e-8, worst < 1e-8, "DERIVED",
                                "Delta^k_h f(x) = int M_k(t) D_h^k f(x + t h) dt"))
    out.tables["calculus"] = rows
    return out


_RUNNERS: dict[str, Callable[[Scenario, Context], SuiteOutcome]] = {
    "limit": suite_limit,
    "equivalence": suite_equivalence,
    "gn": suite_gn,
    "sharpness": suite_sharpness,
    "defect": suite_defect,
    "sparse": suite_sparse,
    "weights": suite_weights,
    "spaces": suite_spaces,
    "calculus-oracles": suite_calculus,
}


# --------------------------------------------------------------------------
# sweeps


def sweep_outcome(scn: Scenario, axis: str, ctx: Context) -> SuiteOutcome:
    """One row per axis value, deterministic order."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")
    sp = scn.params
    out = SuiteOutcome()
    if axis == "R":
        tab = _sharpness(sp, ctx, sp.get("values") or sp.get("R"))
        out.tables["sweep_R"] = [(float(r), float(v)) for r, v in zip(tab.R, tab.values)]
        out.checks.append(Check("monotone-in-R", tab.monotone, True, None, tab.monotone, "DERIVED"))
        out.findings["growth"] = tab.growth
        return out
    if axis == "epsilon":
        eps = [float(e) for e in (sp.get("values") or sp.get("eps") or [0.1, 0.03, 0.01, 0.003, 0.001])]
        k = int(sp.get("k", scn.functional.get("k", 1)))
        q = float(sp.get("q", scn.functional.get("q", 2.0)))
        f = build_function(scn.function)
        rep = bsvy.defect_experiment(f, k, q, eps, _seminorm_quad(sp, ctx))
        out.tables["sweep_epsilon"] = [(float(e), float(v)) for e, v in zip(rep.eps, rep.values)]
        out.checks.append(Check("log-fit", {"slope": rep.slope, "r2": rep.r2}, None, 0.99,
                                rep.passed, "TRIVIAL" if rep.zero else "DERIVED"))
        return out
    f = build_function(scn.function)
    cfg = build_config(scn, ctx)
    if axis == "lambda":
        lams = np.asarray(sp.get("values") or cfg.lam.values(), dtype=float)
        vals = bsvy.bsvy_curve(f, lams, cfg)
        out.tables["sweep_lambda"] = [(float(l), float(v)) for l, v in zip(lams, vals)]
        tail = vals[-6:] if cfg.gamma > 0 else vals[:6][::-1]
        d = np.diff(tail)
        big = d[np.abs(d) > 1e-3 * max(abs(tail[-1]), 1e-300)]
        mono = bool(np.all(big >= 0) or np.all(big <= 0))
        out.checks.append(Check("tail-monotone", mono, True, 1e-3, mono, "DERIVED",
                                "last six levels in the L_gamma direction"))
        return out
    if axis == "dilation":
        dils = [float(a) for a in (sp.get("values") or sp.get("dilations") or [0.25, 1.0, 4.0])]
        ratios = []
        for a in dils:
            r = bsvy.bsvy_sup(dilate(f, a) if a != 1 else f, cfg)
            ratios.append(r.ratio)
            out.tables.setdefault("sweep_dilation", []).append((a, r.sup, r.argmax, r.rhs, r.ratio))
        spread = _spread(ratios)
        window = float(sp.get("window", 2.0))
        out.checks.append(Check("flat-in-dilation", spread, window, window, spread <= window, "DERIVED"))
        return out
    # q: record the trend toward the boundary, no assertion
    qs = [float(q) for q in (sp.get("values") or sp.get("q_values") or [1.0, 1.5, 2.0, 3.0])]
    for q in qs:
        valid = gamma_valid(cfg.p_declared, q, cfg.gamma)
        if not valid:
            out.tables.setdefault("sweep_q", []).append((q, False, math.nan, math.nan, math.nan, math.nan))
            continue
        r = bsvy.bsvy_sup(f, replace(cfg, q=q))
        out.tables.setdefault("sweep_q", []).append((q, True, r.sup, r.argmax, r.rhs, r.ratio))
    return out


# --------------------------------------------------------------------------
# driver


def _resolution_checks(first: SuiteOutcome, second: SuiteOutcome) -> list[Check]:
    out = []
    for name, (v1, tol) in sorted(first.headline.items()):
        v2 = second.headline[name][0]
        rel = abs(v2 - v1) / abs(v1) if v1 else abs(v2)
        out.append(Check(f"resolution[{name}]", v2, v1, tol, rel <= tol, "DERIVED",
                         "headline value at doubled resolution"))
    return out


def execute(scn: Scenario, ctx: Context, axis: str | None = None) -> tuple[dict, int]:
    """Run a scenario; returns ``(report, exit_code)`` without touching the filesystem."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        outcome = sweep_outcome(scn, axis, ctx) if axis else _RUNNERS[scn.suite](scn, ctx)
        code = EXIT_OK
        res_checks = []
        if not axis and scn.params.get("resolution_check", False):
            second = _RUNNERS[scn.suite](scn, replace(ctx, resolution=2 * ctx.resolution))
            res_checks = _resolution_checks(outcome, second)
    nonfinite = [n for n, (v, _) in outcome.headline.items() if not math.isfinite(v)]
    passed = all(c.passed for c in outcome.checks)
    if not passed:
        code = EXIT_FAIL
    if nonfinite or not all(c.passed for c in res_checks):
        code = EXIT_QUADRATURE
    report = {
        "scenario": _clean(scn.source),
        "command": "sweep" if axis else "run",
        "axis": axis,
        "suite": scn.suite,
        "checks": [c.to_dict() for c in outcome.checks + res_checks],
        "headline": _clean({k: v for k, (v, _) in outcome.headline.items()}),
        "findings": _clean(outcome.findings),
        "stamps": _clean(outcome.stamps),
        "tables": sorted(f"{name}.csv" for name in outcome.tables),
        "warnings": sorted({str(w.message) for w in caught}),
        "nonfinite_headlines": nonfinite,
        "passed": code == EXIT_OK,
        "exit_code": code,
    }
    report["_tables"] = outcome.tables
    return report, code


def write_outputs(report: dict, out_dir, elapsed: float) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = report.pop("_tables", {})
    for name, rows in tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_HEADERS[name])
            for row in rows:
                w.writerow([_csv_cell(v) for v in row])
    with open(out / "report.json", "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "timing.json", "w") as fh:
        json.dump({"wall_time_s": round(elapsed, 3)}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_cell(x) for x in v)
    return str(v)


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("BSVYLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"BSVYLAB_THREADS must be an integer, got {env!r}")
    return 1


def run_cli(config, out_dir, *, axis: str | None = None, strict: bool = False,
            threads: int | None = None, resolution: float = 1.0, stream=sys.stderr) -> int:
    """Load, execute and write; returns the exit status."""
    t0 = time.perf_counter()
    try:
        if not resolution > 0:
            raise ConfigError("--resolution-scale must be positive")
        ctx = Context(strict=strict, threads=resolve_threads(threads), resolution=float(resolution))
        scn = load_scenario(config)
        report, code = execute(scn, ctx, axis)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=stream)
        return EXIT_CONFIG
    except BoundaryArgmaxError as exc:
        print(f"quadrature inconsistency: {exc}", file=stream)
        return EXIT_QUADRATURE
    except QuadratureInconsistency as exc:
        print(f"quadrature inconsistency: {exc}", file=stream)
        return EXIT_QUADRATURE
    write_outputs(report, out_dir, time.perf_counter() - t0)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: computed={c['computed']} "
              f"predicted={c['predicted']} [{c['provenance']}]", file=stream)
    return code
