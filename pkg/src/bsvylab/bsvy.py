"""Level-set functionals, their sup and limit scans, and the experiments built on them.

For ``lambda > 0`` the inner quantity at ``x`` is

    I(x, lambda) = int 1{ |Delta^k_h f(x)| > lambda |h|^e } |h|^{gamma - n} dh,

with threshold exponent ``e = ell + gamma/q`` (``ell = k`` by default). In polar
coordinates ``h = r xi`` this is ``sum_xi w_xi int 1{rho(r) > lambda} r^{gamma-1} dr``
where ``rho(r) = |Delta^k_{r xi} f(x)| / r^e`` does not depend on ``lambda``. One
evaluation of ``rho`` on a geometric radial grid therefore serves a whole
``lambda`` grid.

Radial discretisation
---------------------
``rho`` is evaluated at the edges of geometric cells anchored at
``r_min = 1e-6 * L`` (``L`` is the length scale of ``f``). Inside a cell
``log rho`` is treated as linear in ``log r``; the crossing radius is solved
for and the ``r^{gamma-1}`` weight integrated exactly. Two closed-form end
pieces complete the line:

* ``[0, r_min]``: ``rho ~ rho(r_min) (r / r_min)^{k-e}`` (leading Taylor power).
* beyond the support: every node ``x + j h``, ``j >= 1``, has left the support,
  so ``|Delta^k_h f(x)| = |f(x)|`` and the set is an explicit interval.

Because every length of the discretisation (outer box, ``r_min``, cell edges)
is a multiple of ``L``, the scheme is dilation-equivariant.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .calculus import (DEFAULT_WEIGHTING, binomial_row, directional_symbol, gradient_magnitude,
                       sphere_rule, strong_seminorm, SeminormQuadrature)
from .field import AnalyticField, GridSpec, SampledField, _sphere_measure
from .spaces import (Lebesgue, SpaceSpec, WeightedLebesgue, convexified_norm, space_norm)
from .weights import WeightSpec, ap_constant, default_family

__all__ = [
    "LambdaGrid",
    "HQuadrature",
    "FunctionalConfig",
    "SupScanResult",
    "LimitResult",
    "GNReport",
    "SharpnessTable",
    "DefectReport",
    "WeightedCheckResult",
    "BoundaryArgmaxError",
    "gamma_valid",
    "length_scale",
    "outer_grid",
    "level_set_indicator",
    "inner_integral",
    "inner_table",
    "bsvy_value",
    "bsvy_curve",
    "bsvy_sup",
    "bsvy_limit",
    "limit_prediction",
    "gn_check",
    "sharpness_experiment",
    "defect_experiment",
    "weighted_upper_check",
]

_TINY = 1e-300
_CHUNK = 1_500_000
_DECAY_THRESHOLD = 1e-17


class BoundaryArgmaxError(RuntimeError):
    """The sup over the ``lambda`` grid sits at a grid endpoint (strict mode)."""


def gamma_valid(p: float, q: float, gamma: float) -> bool:
    """Membership of ``gamma`` in ``Gamma_{p,q}``.

    ``Gamma_{1,q} = (-inf, -q) u (0, inf)`` and ``Gamma_{p,q} = R \\ {0}`` for ``p > 1``.
    """
    if not (p >= 1 and q > 0):
        raise ValueError("need p >= 1 and q > 0")
    if gamma == 0 or not math.isfinite(gamma):
        return False
    if p == 1:
        return gamma > 0 or gamma < -q
    return True


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class LambdaGrid:
    """Geometric grid ``lo .. hi`` with ``per_decade`` points per decade."""

    lo: float = 1e-4
    hi: float = 1e6
    per_decade: int = 16

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or self.per_decade < 1:
            raise ValueError("lambda grid needs 0 < lo < hi and per_decade >= 1")

    def values(self) -> np.ndarray:
        n = int(round(self.per_decade * math.log10(self.hi / self.lo))) + 1
        return np.geomspace(self.lo, self.hi, max(n, 2))


@dataclass(frozen=True)
class HQuadrature:
    """Polar quadrature in ``h``.

    ``r_min`` and ``r_max`` are absolute radii; ``None`` means automatic
    (``r_min = r_min_rel * L``; ``r_max`` from the a-priori cutoff or the
    support of ``f``).
    """

    directions: int = 32
    radial_per_decade: int = 64
    r_min: float | None = None
    r_max: float | None = None
    r_min_rel: float = 1e-6

    def __post_init__(self):
        if self.directions < 1 or self.radial_per_decade < 1:
            raise ValueError("directions and radial_per_decade must be positive")
        if self.r_min is not None and self.r_max is not None and not 0 < self.r_min < self.r_max:
            raise ValueError("radial bounds need 0 < r_min < r_max")


def _declared_p(space: SpaceSpec) -> float:
    for name in ("p", "r"):
        v = getattr(space, name, None)
        if isinstance(v, (int, float)):
            return float(v)
    return 1.0


@dataclass(frozen=True)
class FunctionalConfig:
    """Parameters of the level-set functional.

    Parameters
    ----------
    k, ell : int
        Difference order and threshold order (``ell <= k``; defaults to ``k``).
    q, gamma : float
        Inner exponent and the power in ``|h|^{gamma-n}``; ``b = gamma / q``.
    space : SpaceSpec
        Outer norm ``X``.
    p : float, optional
        The exponent for which ``X^{1/p}`` is declared Banach; used by
        :func:`gamma_valid`. Taken from the space when omitted.
    box_factor, box_half_width : float
        Outer box ``[-B, B]^n`` with ``B = box_factor * L`` unless given.
    points_per_axis : int, optional
        Outer grid resolution (default ``2^12``, ``2^7``, ``2^5`` for dim 1, 2, 3).
    claims_main : bool
        Require ``gamma`` in ``Gamma_{p,q}``.
    """

    k: int = 1
    q: float = 2.0
    gamma: float = 1.0
    space: SpaceSpec = field(default_factory=Lebesgue)
    ell: int | None = None
    p: float | None = None
    lam: LambdaGrid = field(default_factory=LambdaGrid)
    hquad: HQuadrature = field(default_factory=HQuadrature)
    box_factor: float = 2.0
    box_half_width: float | None = None
    points_per_axis: int | None = None
    claims_main: bool = True
    strict: bool = False
    threads: int = 1
    resolution: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.ell is not None and not 1 <= self.ell <= self.k:
            raise ValueError("need 1 <= ell <= k")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be nonzero: Gamma_{p,q} excludes 0")
        if self.claims_main and not gamma_valid(self.p_declared, self.q, self.gamma):
            raise ValueError(
                f"gamma={self.gamma} is not in Gamma_{{p,q}} for p={self.p_declared}, q={self.q}: "
                "Gamma_{1,q} = (-inf,-q) u (0,inf), Gamma_{p,q} = R \\ {0} for p > 1")

    @property
    def p_declared(self) -> float:
        return float(self.p) if self.p is not None else _declared_p(self.space)

    @property
    def ell_eff(self) -> int:
        return self.k if self.ell is None else int(self.ell)

    @property
    def b(self) -> float:
        return self.gamma / self.q

    @property
    def exponent(self) -> float:
        """Threshold exponent ``e = ell + gamma/q``."""
        return self.ell_eff + self.b

    def scaled(self, factor: float) -> "FunctionalConfig":
        """All quadrature resolutions (outer grid, directions, radial cells) times ``factor``."""
        hq = replace(self.hquad, directions=max(1, int(round(self.hquad.directions * factor))),
                     radial_per_decade=max(1, int(round(self.hquad.radial_per_decade * factor))))
        return replace(self, hquad=hq, resolution=self.resolution * factor)


def _default_points(dim: int | None, cfg: FunctionalConfig) -> int:
    base = cfg.points_per_axis or {1: 2**12, 2: 2**7, 3: 2**5}.get(dim or 1, 2**5)
    return int(round(base * cfg.resolution))


# --------------------------------------------------------------------------
# geometry


def length_scale(f: AnalyticField) -> float:
    """Length scale ``L`` of ``f``: the support radius, or the radius beyond
    which ``|f| < 1e-17 sup|f|`` for decaying entries, or 1 for polynomials.

    The decay radius is found by bisection on a radial envelope, so it is
    dilation-covariant to rounding.
    """
    if math.isfinite(f.support_radius):
        return float(f.support_radius)
    if f.polynomial_degree is not None:
        return 1.0
    if "length_scale" in f._cache:
        return f._cache["length_scale"]
    dirs, _ = sphere_rule(f.dim, 16)
    ts = np.linspace(1.0, 2.0, 9)
    thr = _DECAY_THRESHOLD * f.sup()

    def envelope(R):
        pts = R * ts[:, None, None] * dirs[None, :, :]
        return float(np.max(np.abs(f(pts))))

    hi = 1.0
    while envelope(hi) >= thr:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("field does not decay; cannot fix a length scale")
    lo = hi / 2.0
    if envelope(lo) < thr:
        lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if envelope(mid) < thr:
            hi = mid
        else:
            lo = mid
    f._cache["length_scale"] = hi
    return hi


def outer_grid(f: AnalyticField, cfg: FunctionalConfig) -> GridSpec:
    """Outer sampling grid ``[-B, B]^n`` for the x-variable."""
    B = cfg.box_half_width if cfg.box_half_width is not None else cfg.box_factor * length_scale(f)
    return GridSpec(f.dim, B, _default_points(f.dim, cfg))


def _tail_valid(f: AnalyticField) -> bool:
    return f.polynomial_degree is None


@dataclass(frozen=True)
class _Radial:
    edges: np.ndarray
    tail: bool          # closed-form piece beyond the last edge
    truncated: bool     # neither tail nor cutoff covers r > edges[-1]


def _radial_grid(f: AnalyticField, xs: np.ndarray, lam_min: float, k: int, e: float,
                 hq: HQuadrature, extra_edges=None) -> _Radial:
    L = length_scale(f)
    r0 = hq.r_min if hq.r_min is not None else hq.r_min_rel * L
    targets = []
    tail = False
    if hq.r_max is not None:
        targets.append(hq.r_max)
    if e > 0 and f.polynomial_degree is None:
        targets.append((2.0**k * f.sup() / lam_min) ** (1.0 / e))
    if _tail_valid(f):
        r_tail = float(np.max(np.linalg.norm(xs, axis=-1))) + L
        targets.append(r_tail)
    if not targets:
        targets.append(1e3 * L)
    top = max(min(targets), 2 * r0)
    m = int(math.ceil(hq.radial_per_decade * math.log10(top / r0) - 1e-9))
    edges = r0 * 10.0 ** (np.arange(m + 1) / hq.radial_per_decade)
    if extra_edges is not None:
        extra = np.asarray(extra_edges, dtype=float)
        edges = np.unique(np.concatenate([edges, extra[(extra > r0) & (extra < edges[-1])]]))
    if _tail_valid(f):
        tail = edges[-1] >= r_tail
    cut = e > 0 and f.polynomial_degree is None and edges[-1] >= (2.0**k * f.sup() / lam_min) ** (1.0 / e)
    return _Radial(edges, tail, not (tail or cut))


# --------------------------------------------------------------------------
# core table


def level_set_indicator(f: AnalyticField, x, h, lam: float, b: float, k: int,
                        ell: int | None = None) -> np.ndarray:
    """Pointwise ``1{|Delta^k_h f(x)| > lam |h|^{ell + b}}``; ``ell = k`` is the plain level set."""
    from .calculus import _points, forward_difference

    e = (k if ell is None else ell) + b
    d = np.abs(forward_difference(f, x, h, k))
    hn = np.linalg.norm(_points(f, h), axis=-1)
    return d > lam * np.broadcast_to(hn, d.shape) ** e


def _differences(f: AnalyticField, xc: np.ndarray, fx: np.ndarray, edges: np.ndarray,
                 dirs: np.ndarray, coeffs: list[int]) -> np.ndarray:
    """``|Delta^k_{r xi} f(x)|``, shape ``(x, xi, r)``."""
    out = coeffs[0] * fx[:, None, None] * np.ones((1, len(dirs), edges.size))
    step = edges[None, :, None] * dirs[:, None, :]
    for j, c in enumerate(coeffs[1:], start=1):
        out = out + c * f(xc[:, None, None, :] + j * step[None, :, :, :])
    return np.abs(out)


def _block_table(f, xc, fx, loglam, dirs, dw, edges, k, e, gamma) -> np.ndarray:
    """Contribution of a block of directions to ``I`` on ``[edges[0], edges[-1]]`` and ``[0, edges[0]]``."""
    nc, nd, L = len(xc), len(dirs), len(loglam)
    M = edges.size - 1
    logr = np.log(edges)
    dlog = np.diff(logr)
    pe = edges**gamma
    cellw = pe[:-1] * np.expm1(gamma * dlog) / gamma
    rows = nc * nd
    owner = np.repeat(np.arange(nc), nd)
    wrow = np.tile(dw, nc)
    D = _differences(f, xc, fx, edges, dirs, binomial_row(k)).reshape(rows, M + 1)
    lr = np.log(np.maximum(D / edges**e, _TINY))
    a, c = lr[:, :-1], lr[:, 1:]
    lo = np.minimum(a, c).ravel()
    hi = np.maximum(a, c).ravel()
    i_lo = np.searchsorted(loglam, lo, side="left")
    i_hi = np.searchsorted(loglam, hi, side="left")
    # whole cells count for every lambda below min(rho) on the cell
    cell_owner = np.repeat(owner, M)
    full = np.bincount(cell_owner * (L + 1) + i_lo, weights=np.outer(wrow, cellw).ravel(),
                       minlength=nc * (L + 1)).reshape(nc, L + 1)
    table = np.cumsum(full[:, ::-1], axis=1)[:, ::-1][:, 1:]
    # cells crossed by the level: solve for the crossing radius
    counts = i_hi - i_lo
    sel = np.flatnonzero(counts)
    if sel.size:
        cnt = counts[sel]
        rep = np.repeat(sel, cnt)
        starts = np.cumsum(cnt) - cnt
        lam_idx = np.repeat(i_lo[sel], cnt) + (np.arange(cnt.sum()) - np.repeat(starts, cnt))
        row, m = np.divmod(rep, M)
        ar, cr = a.ravel()[rep], c.ravel()[rep]
        t = (loglam[lam_idx] - ar) / (cr - ar)
        # factored forms avoid cancelling two roundings of r^gamma
        w = np.where(ar > cr, pe[m] * np.expm1(gamma * t * dlog[m]),
                     -pe[m + 1] * np.expm1(gamma * (t - 1.0) * dlog[m])) / gamma * wrow[row]
        table += np.bincount(owner[row] * L + lam_idx, weights=w, minlength=nc * L).reshape(nc, L)
    # [0, r_min]: rho ~ rho_0 (r / r_0)^sigma with the Taylor power sigma = k - e
    sigma = k - e
    lr0 = lr[:, :1]
    if sigma == 0:
        first = np.where(lr0 > loglam[None, :], pe[0] / gamma, 0.0)
    else:
        shift = np.minimum((loglam[None, :] - lr0) / sigma, 0.0)
        if sigma < 0:
            first = pe[0] * np.exp(gamma * shift) / gamma
        else:
            first = -pe[0] * np.expm1(gamma * shift) / gamma
    table += np.einsum("cdl,d->cl", first.reshape(nc, nd, L), dw)
    return table


def _chunk_table(f, xc, loglam, lam, rad: _Radial, k, e, gamma, dirs, dw) -> np.ndarray:
    nc, L = len(xc), len(lam)
    fx = f(xc)
    per = max(1, _CHUNK // max(1, nc * max(rad.edges.size * (k + 1), L)))
    table = np.zeros((nc, L))
    for s in range(0, len(dirs), per):
        table += _block_table(f, xc, fx, loglam, dirs[s:s + per], dw[s:s + per], rad.edges, k, e, gamma)
    if rad.tail:
        table += float(np.sum(dw)) * _outer_tail(np.abs(fx), lam, rad.edges[-1], e, gamma)
    return table


def _outer_tail(t: np.ndarray, lam: np.ndarray, rM: float, e: float, gamma: float) -> np.ndarray:
    """``int_{rM}^inf 1{t > lam r^e} r^{gamma-1} dr`` for ``t = |f(x)|``."""
    t = t[:, None]
    lam = lam[None, :]
    with np.errstate(divide="ignore", over="ignore"):
        if e > 0:
            shift = (np.log(np.maximum(t, _TINY)) - np.log(lam)) / e - math.log(rM)
            return np.where(shift > 0, rM**gamma * np.expm1(gamma * np.maximum(shift, 0.0)) / gamma, 0.0)
        if gamma > 0:
            raise ValueError("unbounded tail: e <= 0 with gamma > 0")
        if e == 0:
            return np.where(t > lam, -(rM**gamma) / gamma, 0.0)
        lstar = (np.log(np.maximum(t, _TINY)) - np.log(lam)) / e
        low = np.maximum(lstar, math.log(rM))
        return np.where(t > 0, -np.exp(gamma * low) / gamma, 0.0)


def inner_table(f: AnalyticField, xs, lams, *, k: int, e: float, gamma: float,
                hquad: HQuadrature | None = None, threads: int = 1,
                extra_edges=None) -> np.ndarray:
    """``I(x, lambda)`` for every point of ``xs`` (shape ``(N, dim)``) and every ``lambda``.

    Parameters
    ----------
    e : float
        Threshold exponent in ``|Delta^k_h f(x)| > lambda |h|^e``.
    gamma : float
        Power in the weight ``|h|^{gamma - n}``.
    extra_edges : array_like, optional
        Radii merged into the geometric cell edges (local refinement).

    Returns
    -------
    ndarray, shape ``(N, len(lams))``
    """
    hq = hquad or HQuadrature()
    xs = np.asarray(xs, dtype=float).reshape(-1, f.dim)
    lam = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    if f.polynomial_degree is not None and f.polynomial_degree < k:
        # Delta^k kills P_{k-1}; the sampled differences are rounding residue only
        return np.zeros((len(xs), lam.size))
    order = np.argsort(lam, kind="stable")
    lam_sorted = lam[order]
    rad = _radial_grid(f, xs, float(lam_sorted[0]), k, e, hq, extra_edges)
    if rad.truncated:
        warnings.warn("radial integral truncated at r_max (no cutoff or tail available)",
                      RuntimeWarning, stacklevel=2)
    dirs, dw = sphere_rule(f.dim, hq.directions)
    loglam = np.log(lam_sorted)
    per = max(1, _CHUNK // (max(rad.edges.size * (k + 1), lam.size) * len(dirs)))
    bounds = [(s, min(s + per, len(xs))) for s in range(0, len(xs), per)]

    def work(bd):
        s, t = bd
        return _chunk_table(f, xs[s:t], loglam, lam_sorted, rad, k, e, gamma, dirs, dw)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, bounds))
    else:
        parts = [work(bd) for bd in bounds]
    out = np.empty((len(xs), lam.size))
    out[:, order] = np.maximum(np.concatenate(parts, axis=0), 0.0) if parts else 0.0
    return out


def inner_integral(f: AnalyticField, x, lam, cfg: FunctionalConfig) -> np.ndarray:
    """``int 1_E(x, h) |h|^{gamma-n} dh`` at the point(s) ``x`` and level(s) ``lam``.

    Returns an array of shape ``(points, levels)`` squeezed to the inputs.
    """
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, f.dim) if f.dim > 1 or (x.ndim and x.shape[-1] == 1) else x.reshape(-1, 1)
    tab = inner_table(f, pts, lam, k=cfg.k, e=cfg.exponent, gamma=cfg.gamma,
                      hquad=cfg.hquad, threads=cfg.threads)
    if np.ndim(lam) == 0:
        tab = tab[:, 0]
    if x.ndim == 0 or (f.dim > 1 and x.ndim == 1) or (f.dim == 1 and x.ndim == 1 and x.shape == (1,)):
        tab = tab[0]
    return tab


# --------------------------------------------------------------------------
# functionals


def _norms(space: SpaceSpec, grid: GridSpec, table: np.ndarray, q: float,
           convex: float = 1.0) -> np.ndarray:
    out = np.empty(table.shape[1])
    for i in range(table.shape[1]):
        g = SampledField(grid, table[:, i] ** (1.0 / q))
        out[i] = space_norm(space, g) if convex == 1.0 else convexified_norm(space, convex, g)
    return out


def bsvy_curve(f: AnalyticField, lams, cfg: FunctionalConfig, *, e: float | None = None,
               convex: float = 1.0, grid: GridSpec | None = None) -> np.ndarray:
    """``Phi(lambda) = lambda || I(., lambda)^{1/q} ||_X`` on an array of levels.

    ``convex`` replaces ``X`` by its convexification ``X^convex``; ``e``
    overrides the threshold exponent.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    grid = grid or outer_grid(f, cfg)
    if f.polynomial_degree is not None and f.polynomial_degree < cfg.k:
        return np.zeros_like(lams)
    tab = inner_table(f, grid.points(), lams, k=cfg.k, e=cfg.exponent if e is None else e,
                      gamma=cfg.gamma, hquad=cfg.hquad, threads=cfg.threads)
    return lams * _norms(cfg.space, grid, tab, cfg.q, convex)


def bsvy_value(f: AnalyticField, lam, cfg: FunctionalConfig):
    """Single-level value ``lambda || I^{1/q} ||_X`` (array in, array out)."""
    if np.any(np.asarray(lam) <= 0):
        raise ValueError("lambda must be positive")
    vals = bsvy_curve(f, lam, cfg)
    return float(vals[0]) if np.ndim(lam) == 0 else vals


def _rhs_norm(f: AnalyticField, order: int, space: SpaceSpec, grid: GridSpec,
              convex: float = 1.0) -> float:
    g = SampledField(grid, gradient_magnitude(f, grid.points(), order))
    return space_norm(space, g) if convex == 1.0 else convexified_norm(space, convex, g)


@dataclass
class SupScanResult:
    """Both sides of the equivalence: ``sup_lambda Phi`` and ``|| |nabla^ell f| ||_X``."""

    lambdas: np.ndarray
    values: np.ndarray
    argmax: float
    sup: float
    rhs: float
    ratio: float
    boundary: bool
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"argmax": self.argmax, "sup": self.sup, "rhs": self.rhs, "ratio": self.ratio,
                "boundary": self.boundary, "warnings": list(self.warnings)}


def _scan(curve_fn, grid_spec: LambdaGrid, strict: bool, widen: int = 3, refine: int = 8):
    """Max of ``curve_fn`` over a geometric grid, widened at a boundary argmax and
    refined between the neighbours of an interior one."""
    g = grid_spec
    lams = g.values()
    vals = curve_fn(lams)
    notes = []
    for _ in range(widen):
        i = int(np.argmax(vals))
        if 0 < i < len(lams) - 1 or not np.any(vals > 0):
            break
        lo, hi = (g.lo / 100, g.lo) if i == 0 else (g.hi, g.hi * 100)
        extra = LambdaGrid(lo, hi, g.per_decade).values()
        extra = extra[:-1] if i == 0 else extra[1:]
        notes.append(f"argmax at grid {'lower' if i == 0 else 'upper'} endpoint; widened to "
                     f"[{min(lo, g.lo):.3g}, {max(hi, g.hi):.3g}]")
        lams = np.concatenate([extra, lams]) if i == 0 else np.concatenate([lams, extra])
        vals = np.concatenate([curve_fn(extra), vals]) if i == 0 else np.concatenate([vals, curve_fn(extra)])
        g = LambdaGrid(min(lo, g.lo), max(hi, g.hi), g.per_decade)
    i = int(np.argmax(vals))
    boundary = bool(np.any(vals > 0)) and (i == 0 or i == len(lams) - 1)
    if boundary:
        msg = "sup attained at a lambda-grid endpoint after widening; value is a lower bound"
        if strict:
            raise BoundaryArgmaxError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        notes.append(msg)
    elif np.any(vals > 0) and refine:
        fine = np.geomspace(lams[i - 1], lams[i + 1], 2 * refine + 1)[1:-1]
        fine = fine[fine != lams[i]]
        lams = np.concatenate([lams, fine])
        vals = np.concatenate([vals, curve_fn(fine)])
        order = np.argsort(lams, kind="stable")
        lams, vals = lams[order], vals[order]
        i = int(np.argmax(vals))
    return lams, vals, i, boundary, notes


def bsvy_sup(f: AnalyticField, cfg: FunctionalConfig) -> SupScanResult:
    """Max of ``Phi`` over the configured ``lambda`` grid, with the ratio to ``||nabla^ell f||_X``.

    A boundary argmax triggers up to three two-decade widenings; if the
    argmax still sits at an endpoint a warning is issued (an error with
    ``cfg.strict``). An interior argmax is refined on a finer local grid.
    """
    if not gamma_valid(cfg.p_declared, cfg.q, cfg.gamma):
        raise ValueError(f"gamma={cfg.gamma} not in Gamma_{{p,q}} (p={cfg.p_declared}, q={cfg.q})")
    grid = outer_grid(f, cfg)
    rhs = _rhs_norm(f, cfg.ell_eff, cfg.space, grid)
    if f.polynomial_degree is not None and f.polynomial_degree < cfg.k:
        lams = cfg.lam.values()
        return SupScanResult(lams, np.zeros_like(lams), float(lams[0]), 0.0, rhs, 0.0, False)
    lams, vals, i, boundary, notes = _scan(lambda l: bsvy_curve(f, l, cfg, grid=grid), cfg.lam, cfg.strict)
    sup = float(vals[i])
    ratio = sup / rhs if rhs > 0 else (0.0 if sup == 0 else math.inf)
    return SupScanResult(lams, vals, float(lams[i]), sup, rhs, ratio, boundary, notes)


# --------------------------------------------------------------------------
# limit


@dataclass
class LimitResult:
    """Tail of ``Phi`` in the ``L_gamma`` direction against the symbol prediction."""

    direction: str
    lambdas: np.ndarray
    tail: np.ndarray
    limit: float
    predicted: float
    relative_error: float
    monotone: bool
    status: str

    def to_dict(self) -> dict:
        return {"direction": self.direction, "lambdas": self.lambdas.tolist(),
                "tail": self.tail.tolist(), "limit": self.limit, "predicted": self.predicted,
                "relative_error": self.relative_error, "monotone": self.monotone,
                "status": self.status}


def limit_prediction(f: AnalyticField, cfg: FunctionalConfig, grid: GridSpec | None = None,
                     directions: int | None = None, weighting: str = DEFAULT_WEIGHTING) -> float:
    """``|gamma|^{-1/q} || (int_S |symbol(., xi)|^q dH(xi))^{1/q} ||_X``.

    Sphere rule: two points in dim 1, 256 uniform angles in dim 2, a Lebedev
    rule in dim 3.
    """
    grid = grid or outer_grid(f, cfg)
    n = f.dim
    directions = directions or {1: 2, 2: 256, 3: 302}[n]
    dirs, dw = sphere_rule(n, directions)
    pts = grid.points()
    acc = np.zeros(len(pts))
    for xi, w in zip(dirs, dw):
        acc += w * np.abs(directional_symbol(f, pts, xi, cfg.k, weighting)) ** cfg.q
    g = SampledField(grid, acc ** (1.0 / cfg.q))
    return abs(cfg.gamma) ** (-1.0 / cfg.q) * space_norm(cfg.space, g)


def _limit_levels(f: AnalyticField, cfg: FunctionalConfig, grid: GridSpec, count: int,
                  r_end_rel: float) -> np.ndarray:
    """Six levels ending where the typical crossing radius ``(S/lambda)^{1/b}`` is ``r_end_rel * L``."""
    S = float(np.max(gradient_magnitude(f, grid.points(), cfg.k)))
    if S == 0:
        S = 1.0
    L = length_scale(f)
    lam_end = S * (r_end_rel * L) ** (-cfg.b)
    sgn = 1.0 if cfg.gamma > 0 else -1.0
    steps = np.arange(count)[::-1]
    return lam_end * 10.0 ** (-sgn * steps / cfg.lam.per_decade)


def bsvy_limit(f: AnalyticField, cfg: FunctionalConfig, *, count: int = 6,
               r_end_rel: float = 1e-4, monotone_tol: float = 1e-3) -> LimitResult:
    """Extrapolated ``lim_{lambda -> L_gamma} Phi(lambda)`` and its predicted value.

    The tail levels are the last ``count`` points of a geometric grid (the
    configured density) in the ``L_gamma`` direction, placed so that the
    crossing radius reaches ``r_end_rel * L`` at the final level. The limit
    is the mean of the last three values; the tail is flagged non-monotone if
    successive differences change sign beyond ``monotone_tol`` (relative).
    """
    if not isinstance(cfg.space, (Lebesgue, WeightedLebesgue)):
        raise ValueError("limit runs are restricted to L^p and weighted L^p")
    grid = outer_grid(f, cfg)
    direction = "infinity" if cfg.gamma > 0 else "zero"
    predicted = limit_prediction(f, cfg, grid)
    if f.polynomial_degree is not None and f.polynomial_degree < cfg.k:
        lams = cfg.lam.values()[-count:] if cfg.gamma > 0 else cfg.lam.values()[:count][::-1]
        z = np.zeros(count)
        return LimitResult(direction, lams, z, 0.0, predicted, 0.0, True, "exact-zero")
    lams = _limit_levels(f, cfg, grid, count, r_end_rel)
    tail = bsvy_curve(f, lams, cfg, grid=grid)
    limit = float(np.mean(tail[-3:]))
    d = np.diff(tail)
    scale = max(abs(limit), _TINY)
    big = d[np.abs(d) > monotone_tol * scale]
    monotone = bool(np.all(big > 0) or np.all(big < 0))
    rel = abs(limit - predicted) / abs(predicted) if predicted else abs(limit)
    status = "ok" if monotone else "non-monotone tail: extrapolation unreliable"
    return LimitResult(direction, lams, tail, limit, predicted, float(rel), monotone, status)


# --------------------------------------------------------------------------
# Gagliardo-Nirenberg


@dataclass
class GNReport:
    mode: str
    s: float
    q: float
    q0: float
    lhs: float
    rhs: float
    ratio: float
    argmax: float
    eta: float | None = None
    s0: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                for k, v in self.__dict__.items()}


_GN_MODES = ("interpolation-ss", "endpoint-inf", "two-parameter")


def gn_check(f: AnalyticField, cfg: FunctionalConfig, s: float, q0: float, mode: str,
             eta: float | None = None, s0: float | None = None) -> GNReport:
    """Ratio of the two sides of the fractional Gagliardo-Nirenberg inequality.

    Modes
    -----
    interpolation-ss
        ``1/q = (1-s)/q0 + s``; LHS ``sup lambda ||I_b^{1/q}||_{X^q}`` with
        ``b = gamma/q + s - 1``; RHS ``||nabla^{k-1} f||_{X^{q0}}^{1-s} ||nabla^k f||_X^s``.
    endpoint-inf
        ``q0 = inf``, ``1/q = s``; the first RHS factor is ``sup |nabla^{k-1} f|``.
    two-parameter
        ``s = (1-eta) s0 + eta``, ``1/q = (1-eta)/q0 + eta``; LHS
        ``sup lambda ||I_b||_X^{1/q}``; RHS
        ``[sup lambda ||I_{b0}||_X^{1/q0}]^{1-eta} ||nabla^k f||_X^eta`` with
        ``b0 = gamma/q0 + s0 - 1``.

    ``cfg.q`` must satisfy the mode's exponent relation to 1e-12.
    """
    if mode not in _GN_MODES:
        raise ValueError(f"mode must be one of {_GN_MODES}")
    q, k, gamma = cfg.q, cfg.k, cfg.gamma
    if not gamma_valid(cfg.p_declared, 1.0, gamma):
        raise ValueError(f"gamma={gamma} not in Gamma_{{p,1}} for p={cfg.p_declared}")
    if mode == "two-parameter":
        if eta is None or s0 is None:
            raise ValueError("two-parameter mode needs eta and s0")
        if abs(s - ((1 - eta) * s0 + eta)) > 1e-12 or abs(1 / q - ((1 - eta) / q0 + eta)) > 1e-12:
            raise ValueError("exponent relation violated: s=(1-eta)s0+eta, 1/q=(1-eta)/q0+eta")
        if not (0 <= s0 < s < 1 < q < q0 < math.inf and 0 < eta < 1):
            raise ValueError("need 0 <= s0 < s < 1 < q < q0 < inf and eta in (0,1)")
    else:
        if not 0 < s < 1:
            raise ValueError("s must lie in (0, 1)")
        expected = s if mode == "endpoint-inf" else (1 - s) / q0 + s
        if mode == "endpoint-inf" and math.isfinite(q0):
            raise ValueError("endpoint-inf mode takes q0 = inf")
        if mode == "interpolation-ss" and not (1 <= q0 < math.inf):
            raise ValueError("interpolation-ss mode takes q0 in [1, inf)")
        if abs(1 / q - expected) > 1e-12 or not 1 <= q:
            raise ValueError(f"exponent relation violated: 1/q must equal {expected!r}")

    grid = outer_grid(f, cfg)
    e = k + gamma / q + s - 1
    gn_cfg = replace(cfg, claims_main=False)
    lams, vals, i, boundary, notes = _scan(
        lambda l: bsvy_curve(f, l, gn_cfg, e=e, convex=q, grid=grid), cfg.lam, cfg.strict)
    lhs = float(vals[i])
    grad_k = _rhs_norm(f, k, cfg.space, grid)
    if mode == "interpolation-ss":
        rhs = _rhs_norm(f, k - 1, cfg.space, grid, convex=q0) ** (1 - s) * grad_k**s
    elif mode == "endpoint-inf":
        rhs = float(np.max(gradient_magnitude(f, grid.points(), k - 1))) ** (1 - s) * grad_k**s
    else:
        e0 = k + gamma / q0 + s0 - 1
        cfg0 = replace(gn_cfg, q=q0)
        _, v0, i0, _, n0 = _scan(lambda l: bsvy_curve(f, l, cfg0, e=e0, convex=q0, grid=grid),
                                 cfg.lam, cfg.strict)
        notes += n0
        rhs = float(v0[i0]) ** (1 - eta) * grad_k**eta
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return GNReport(mode, s, q, q0, lhs, rhs, ratio, float(lams[i]), eta, s0, notes)


# --------------------------------------------------------------------------
# sharpness and defect experiments


@dataclass
class SharpnessTable:
    R: np.ndarray
    values: np.ndarray
    lam: float
    regime: str
    growth: float
    monotone: bool

    def rows(self) -> list[dict]:
        return [{"R": float(r), "value": float(v)} for r, v in zip(self.R, self.values)]


def sharpness_experiment(p: float, q: float, k: int, ell: int, R_list, *, dim: int = 2,
                         lam: float = 0.75, directions: int = 2048, radial_per_decade: int = 32,
                         core_panels: int = 48, decade_panels: int = 24,
                         fine_step: float = 0.02) -> SharpnessTable:
    """Truncated ``int_{|x|<R} I(x, lam)^{p/q} dx`` for the mollified-indicator witness.

    ``gamma = -ell q`` and the threshold is ``lam |h|^{ell + gamma/q} = lam``.
    The witness is radial, so ``I`` is tabulated along the ray ``x = t e_1``
    and integrated against ``|S^{n-1}| t^{n-1} dt`` with Gauss panels
    (uniform on ``[0, 4]``, geometric beyond).
    """
    from .field import make_catalog_function

    R_list = np.asarray(sorted(float(r) for r in R_list))
    if R_list[0] <= 4:
        raise ValueError("R values must exceed 4 (the core panel range)")
    if ell > k:
        raise ValueError("need ell <= k")
    gamma = -ell * q
    f = make_catalog_function("mollified_indicator", {"dim": dim})
    n_dec = max(1, int(math.ceil(decade_panels * math.log10(R_list[-1] / 4))))
    outer_edges = np.unique(np.concatenate([np.geomspace(4, R_list[-1], n_dec + 1), R_list]))
    edges = np.concatenate([np.linspace(0, 4, core_panels + 1)[:-1], outer_edges])
    g, gw = np.polynomial.legendre.leggauss(4)
    a, b = edges[:-1, None], edges[1:, None]
    t = (a + (b - a) * (g + 1) / 2).ravel()
    wt = ((b - a) / 2 * gw).ravel() * _sphere_measure(dim) * t ** (dim - 1)
    hq = HQuadrature(directions=directions, radial_per_decade=radial_per_decade)
    # the far set sits where x + j h meets the support: |j r - t| <= 1.5
    I = np.empty(t.size)
    for i, ti in enumerate(t):
        x = np.zeros((1, dim))
        x[0, 0] = ti
        fine = [np.arange(max(ti - 1.5, 0.0), ti + 1.5, fine_step) / j for j in range(1, k + 1)]
        I[i] = inner_table(f, x, [lam], k=k, e=ell + gamma / q, gamma=gamma, hquad=hq,
                           extra_edges=np.concatenate(fine))[0, 0]
    contrib = (wt * I ** (p / q)).reshape(len(edges) - 1, -1).sum(axis=1)
    cum = np.cumsum(contrib)
    values = np.array([cum[np.searchsorted(edges[1:], R)] for R in R_list])
    regime = "failing" if dim * (1 / p - 1 / q) >= ell else "passing"
    i8 = np.argmin(np.abs(R_list - 8))
    growth = float(values[-1] / values[i8]) if values[i8] > 0 else (1.0 if values[-1] == 0 else math.inf)
    monotone = bool(np.all(np.diff(values) >= 0))
    return SharpnessTable(R_list, values, lam, regime, growth, monotone)


@dataclass
class DefectReport:
    eps: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r2: float
    zero: bool
    passed: bool

    def rows(self) -> list[dict]:
        return [{"epsilon": float(e), "seminorm_q": float(v)} for e, v in zip(self.eps, self.values)]


def defect_experiment(f: AnalyticField, k: int, q: float, eps_list,
                      quad: SeminormQuadrature | None = None, outer=None) -> DefectReport:
    """Fit ``strong_seminorm(f, k, s=k, q, eps)^q`` against ``log(1/eps)``.

    Passing means positive slope with ``R^2 > 0.99``, or identically zero
    values for ``f`` in ``P_{k-1}``.
    """
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    vals = np.array([strong_seminorm(f, k, float(k), q, float(e), quad, outer) ** q for e in eps])
    if f.polynomial_degree is not None and f.polynomial_degree < k:
        zero = bool(np.all(vals == 0))
        return DefectReport(eps, vals, 0.0, 0.0, math.nan, zero, zero)
    fit = stats.linregress(np.log(1 / eps), vals)
    r2 = float(fit.rvalue**2)
    return DefectReport(eps, vals, float(fit.slope), float(fit.intercept), r2, False,
                        bool(fit.slope > 0 and r2 > 0.99))


# --------------------------------------------------------------------------
# weighted upper estimate


@dataclass
class WeightedCheckResult:
    ratio: float
    sup: float
    rhs: float
    argmax: float
    a1_constant: float
    lambdas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


def weighted_upper_check(f: AnalyticField, w: WeightSpec, p: float, q: float, gamma: float,
                         k: int, ell: int | None = None, lam_grid: LambdaGrid | None = None,
                         cfg: FunctionalConfig | None = None) -> WeightedCheckResult:
    """``sup_lambda lambda^p int I^{p/q} w / int |nabla^ell f|^p w`` on the outer grid.

    ``cfg`` supplies quadrature settings; its ``k, q, gamma, space`` are overridden.
    """
    ell = k if ell is None else ell
    n = f.dim
    if not gamma_valid(p, q, gamma):
        raise ValueError(f"gamma={gamma} not in Gamma_{{p,q}}")
    if not n * (1 / p - 1 / q) < ell:
        raise ValueError("need n(1/p - 1/q) < ell")
    if w.is_constant:
        a1 = 1.0
    else:
        # the family avoids the singular point, so failure of A_1 shows as growth with depth
        half, a1 = (ap_constant(w, 1.0, default_family(n, w.singular_point(n), depth=d)) for d in (20, 40))
        if not math.isfinite(a1) or a1 > 1.5 * half:
            raise ValueError("weight is not in A_1 on the test family (estimate grows with depth)")
    base = cfg or FunctionalConfig()
    cfg = replace(base, k=k, ell=ell, q=q, gamma=gamma, space=Lebesgue(p), p=p,
                  lam=lam_grid or base.lam)
    grid = outer_grid(f, cfg)
    mass = w.cell_masses(grid)
    rhs = float(np.sum(gradient_magnitude(f, grid.points(), ell) ** p * mass))
    pts = grid.points()

    def curve(lams):
        tab = inner_table(f, pts, lams, k=k, e=cfg.exponent, gamma=gamma, hquad=cfg.hquad,
                          threads=cfg.threads)
        return lams**p * np.sum(tab ** (p / q) * mass[:, None], axis=0)

    if f.polynomial_degree is not None and f.polynomial_degree < k:
        lams = cfg.lam.values()
        return WeightedCheckResult(0.0, 0.0, rhs, float(lams[0]), a1, lams, np.zeros_like(lams))
    lams, vals, i, _, _ = _scan(curve, cfg.lam, cfg.strict)
    sup = float(vals[i])
    return WeightedCheckResult(sup / rhs if rhs > 0 else math.inf, sup, rhs, float(lams[i]), a1,
                               lams, vals)
