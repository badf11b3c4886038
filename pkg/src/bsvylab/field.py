"""Analytic test functions, uniform grids and sampled fields.

Every catalog entry is an :class:`AnalyticField`: a pure, vectorised evaluator
for ``f`` together with evaluators for the partial derivatives ``d^alpha f``.
Smooth entries are built symbolically with sympy, so their derivatives are
exact closed forms; the mollified indicator is the one entry whose profile is
obtained by quadrature.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

__all__ = [
    "GridSpec",
    "SampledField",
    "AnalyticField",
    "CATALOG_IDS",
    "make_catalog_function",
    "sample",
    "dilate",
    "multi_indices",
]

CATALOG_IDS = ("polynomial", "gaussian_bump", "windowed_sinusoid", "mollified_indicator")

# auxiliary resolution of the mollified indicator's convolution quadrature
MOLLIFIER_NODES = 2**9
_PROFILE_TABLE = 2**12


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices in ``Z_+^dim`` with ``|alpha| == order``, lexicographic."""
    out = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]
    return sorted(out, reverse=True)


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on the box ``[-L, L]^dim`` with ``N`` cells per axis."""

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be >= 8")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis."""
        n = self.points_per_axis
        return -self.half_width + (np.arange(n) + 0.5) * self.spacing

    def points(self) -> np.ndarray:
        """Cell centres, shape ``(N**dim, dim)``, row-major in the axis order."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def scaled(self, factor: float) -> "GridSpec":
        """Same grid with the box dilated by ``factor``."""
        return GridSpec(self.dim, self.half_width * factor, self.points_per_axis)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.dim, self.half_width, self.points_per_axis * factor)


@dataclass(frozen=True)
class SampledField:
    """Values of a scalar quantity at the cell centres of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def nd(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledField":
        return SampledField(self.grid, fn(self.values))

    def __mul__(self, c: float) -> "SampledField":
        return SampledField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class AnalyticField:
    """A test function ``f`` with evaluators for ``f`` and ``d^alpha f``, ``|alpha| <= K``.

    Evaluators take points of shape ``(..., dim)`` and return arrays of shape ``(...)``.
    ``support_radius`` is ``inf`` for entries without compact support.
    """

    dim: int
    max_derivative_order: int
    support_radius: float
    catalog_id: str
    params: Mapping
    evaluator: Callable[[np.ndarray], np.ndarray]
    derivative_evaluator: Callable[[tuple[int, ...], np.ndarray], np.ndarray]
    exact_derivatives: bool = True
    polynomial_degree: int | None = None
    radial: bool = False
    sup_norm: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, x) -> np.ndarray:
        x = self._check_points(x)
        return self.evaluator(x)

    def derivative(self, alpha: Sequence[int], x) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim or min(alpha) < 0:
            raise ValueError(f"invalid multi-index {alpha} for dim {self.dim}")
        order = sum(alpha)
        if order > self.max_derivative_order:
            raise ValueError(
                f"derivative of order {order} unavailable (max {self.max_derivative_order})"
            )
        x = self._check_points(x)
        if order == 0:
            return self.evaluator(x)
        if self.polynomial_degree is not None and order > self.polynomial_degree:
            return np.zeros(x.shape[:-1])
        return self.derivative_evaluator(alpha, x)

    def sup(self) -> float:
        """``sup |f|`` (closed form where known, otherwise a sampled estimate)."""
        if self.sup_norm is not None:
            return self.sup_norm
        if "sup" not in self._cache:
            r = self.support_radius if np.isfinite(self.support_radius) else 8.0
            pts = GridSpec(self.dim, r, 256 if self.dim == 1 else 64).points()
            self._cache["sup"] = float(np.max(np.abs(self.evaluator(pts))))
        return self._cache["sup"]

    def _check_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            if self.dim == 1:
                x = x[..., None]
            else:
                raise ValueError(f"points must have trailing dimension {self.dim}")
        return x


# --------------------------------------------------------------------------
# symbolic construction


def _symbols(dim: int):
    return sp.symbols(f"x1:{dim + 1}", real=True)


def _lambdify(xs, expr):
    # |x1| appears in dim 1; its distributional terms sit where the cutoff is flat
    expr = expr.replace(sp.DiracDelta, lambda *a: sp.Integer(0))
    fn = sp.lambdify(xs, expr, modules="numpy", cse=True)

    def call(x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            out = fn(*[x[..., i] for i in range(x.shape[-1])])
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy()

    return call


def _smooth_cutoff(r, inner: float, outer: float):
    """C-infinity radial cutoff: 1 on ``r <= inner``, 0 on ``r >= outer``."""
    u = (outer - r) / (outer - inner)
    phi_u = sp.exp(-1 / u)
    phi_v = sp.exp(-1 / (1 - u))
    # within 1/700 of either edge the blend and all its derivatives are below
    # 1e-290 away from the flat value, while the formula itself hits inf * 0
    eps = sp.Rational(1, 700) * (outer - inner)
    return sp.Piecewise((1, r <= inner + eps), (0, r >= outer - eps), (phi_u / (phi_u + phi_v), True))


# symbolic derivatives and their compiled evaluators, shared across instances
_SYMBOLIC: dict = {}
_COMPILED: dict = {}


def _symbolic_derivative(expr, xs, alpha):
    key = (expr, alpha)
    if key not in _SYMBOLIC:
        if not any(alpha):
            _SYMBOLIC[key] = expr
        else:
            i = max(j for j, a in enumerate(alpha) if a)
            parent = tuple(a - (j == i) for j, a in enumerate(alpha))
            _SYMBOLIC[key] = sp.diff(_symbolic_derivative(expr, xs, parent), xs[i])
    return _SYMBOLIC[key]


def _compiled_derivative(expr, xs, alpha):
    key = (expr, alpha)
    if key not in _COMPILED:
        _COMPILED[key] = _lambdify(xs, _symbolic_derivative(expr, xs, alpha))
    return _COMPILED[key]


def _from_expression(expr, xs, *, dim, catalog_id, params, max_order, support_radius,
                     polynomial_degree=None, sup_norm=None) -> AnalyticField:
    value = _compiled_derivative(expr, xs, (0,) * dim)

    def deriv(alpha, x):
        return _compiled_derivative(expr, xs, alpha)(x)

    return AnalyticField(
        dim=dim,
        max_derivative_order=max_order,
        support_radius=support_radius,
        catalog_id=catalog_id,
        params=dict(params),
        evaluator=value,
        derivative_evaluator=deriv,
        polynomial_degree=polynomial_degree,
        sup_norm=sup_norm,
    )


def _polynomial(dim, params):
    coeffs = params.get("coeffs")
    if coeffs is None:
        raise ValueError("polynomial requires 'coeffs'")
    xs = _symbols(dim)
    if isinstance(coeffs, Mapping):
        items = [(tuple(int(a) for a in _parse_index(k, dim)), float(c)) for k, c in coeffs.items()]
    else:
        if dim != 1:
            raise ValueError("list coefficients are only accepted in dim 1")
        items = [((i,), float(c)) for i, c in enumerate(coeffs)]
    expr = sp.Integer(0)
    degree = 0
    for alpha, c in items:
        if len(alpha) != dim:
            raise ValueError(f"monomial {alpha} does not match dim {dim}")
        if c != 0:
            degree = max(degree, sum(alpha))
        expr += sp.Float(c) * sp.Mul(*[x**a for x, a in zip(xs, alpha)])
    max_order = int(params.get("max_order", degree + 2))
    return _from_expression(expr, xs, dim=dim, catalog_id="polynomial", params=params,
                            max_order=max_order, support_radius=math.inf,
                            polynomial_degree=degree)


def _parse_index(key, dim):
    if isinstance(key, str):
        key = [int(s) for s in key.replace("(", "").replace(")", "").split(",") if s.strip()]
    if isinstance(key, int):
        key = (key,)
    return tuple(key)


def _gaussian_bump(dim, params):
    sigma = float(params.get("sigma", 1.0))
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mono = tuple(int(a) for a in params.get("monomial", (0,) * dim))
    if len(mono) != dim or min(mono) < 0:
        raise ValueError(f"monomial exponents {mono} invalid for dim {dim}")
    amp = float(params.get("amplitude", 1.0))
    xs = _symbols(dim)
    r2 = sum(x**2 for x in xs)
    expr = sp.Float(amp) * sp.exp(-r2 / sp.Float(sigma) ** 2) * sp.Mul(*[x**a for x, a in zip(xs, mono)])
    window = params.get("window")
    support = math.inf
    if window is not None:
        window = float(window)
        expr = expr * _smooth_cutoff(sp.sqrt(r2), window / 2, 3 * window / 4)
        support = 3 * window / 4
    sup_norm = None
    if not any(mono):
        sup_norm = abs(amp)
    return _from_expression(expr, xs, dim=dim, catalog_id="gaussian_bump", params=params,
                            max_order=int(params.get("max_order", 4)), support_radius=support,
                            sup_norm=sup_norm)


def _windowed_sinusoid(dim, params):
    omega = params.get("omega", 2.0)
    omega = np.broadcast_to(np.atleast_1d(np.asarray(omega, dtype=float)), (dim,)) if np.ndim(omega) else np.r_[float(omega), np.zeros(dim - 1)]
    phase = float(params.get("phase", 0.3))
    window = float(params.get("window", 4.0))
    if window <= 0:
        raise ValueError("window must be positive")
    xs = _symbols(dim)
    r = sp.sqrt(sum(x**2 for x in xs))
    arg = sum(sp.Float(w) * x for w, x in zip(omega, xs)) + sp.Float(phase)
    expr = sp.sin(arg) * _smooth_cutoff(r, window / 2, 3 * window / 4)
    return _from_expression(expr, xs, dim=dim, catalog_id="windowed_sinusoid", params=params,
                            max_order=int(params.get("max_order", 4)),
                            support_radius=3 * window / 4, sup_norm=1.0)


# --------------------------------------------------------------------------
# mollified indicator: f = eta_2 * 1_{B(0,1)} with a radial bump eta


def _sphere_measure(dim: int) -> float:
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _cap_measure(dim: int, c: np.ndarray) -> np.ndarray:
    """Surface measure of ``{theta in S^{dim-1}: theta_1 > c}``."""
    if dim == 1:
        # S^0 = {-1, 1}; count before clipping, since c = -1 after clipping loses theta = -1
        return (1.0 > c).astype(float) + (-1.0 > c).astype(float)
    c = np.clip(c, -1.0, 1.0)
    if dim == 2:
        return 2.0 * np.arccos(c)
    if dim == 3:
        return 2.0 * math.pi * (1.0 - c)
    raise ValueError("dim must be 1, 2 or 3")


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1
    with np.errstate(divide="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def mollified_profile(dim: int, rho: np.ndarray, nodes: int = MOLLIFIER_NODES) -> np.ndarray:
    """Radial profile ``F(rho) = (eta_2 * 1_{B(0,1)})(rho e_1)`` by polar quadrature.

    ``eta_2 = 2^n eta(2 .)`` is supported in ``B(0, 1/2)``; in polar coordinates
    the convolution reduces to a one-dimensional integral in ``|y|`` whose
    integrand has a single kink at ``|rho - 1|``, so the rule is split there.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    t, w = np.polynomial.legendre.leggauss(nodes // 2)
    area = _sphere_measure(dim) if dim > 1 else 2.0

    def eta2_radial(s):
        return _bump(2 * s) * s ** (dim - 1)

    # normalisation so that the profile is exactly 1 inside B(0, 1/2)
    s_full = 0.25 * (t + 1)
    norm = area * np.sum(0.25 * w * eta2_radial(s_full))
    out = np.empty_like(rho)
    for i, r in enumerate(rho):
        if r <= 0.5:
            out[i] = 1.0
            continue
        if r >= 1.5:
            out[i] = 0.0
            continue
        b = min(abs(r - 1.0), 0.5)
        total = 0.0
        for lo, hi in ((0.0, b), (b, 0.5)):
            if hi - lo <= 0:
                continue
            s = lo + (hi - lo) * (t + 1) / 2
            with np.errstate(divide="ignore", invalid="ignore"):
                c = (r * r + s * s - 1.0) / (2.0 * r * s)
            total += np.sum((hi - lo) / 2 * w * eta2_radial(s) * _cap_measure(dim, c))
        out[i] = total / norm
    return out


def _mollified_indicator(dim, params):
    rho = np.linspace(0.5, 1.5, _PROFILE_TABLE + 1)
    prof = mollified_profile(dim, rho)
    spline = CubicSpline(rho, prof, bc_type=((1, 0.0), (1, 0.0)))
    d1, d2 = spline.derivative(1), spline.derivative(2)

    def radial(fun, r, inside_value):
        out = np.where(r <= 0.5, inside_value, 0.0)
        mid = (r > 0.5) & (r < 1.5)
        if np.any(mid):
            out = out.astype(float)
            out[mid] = fun(r[mid])
        return out

    def value(x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        return np.clip(radial(spline, r, 1.0), 0.0, 1.0)

    def deriv(alpha, x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        safe = np.where(r > 0, r, 1.0)
        f1 = radial(d1, r, 0.0)
        idx = [i for i, a in enumerate(alpha) for _ in range(a)]
        if len(idx) == 1:
            return f1 * x[..., idx[0]] / safe
        i, j = idx
        f2 = radial(d2, r, 0.0)
        xi, xj = x[..., i], x[..., j]
        delta = 1.0 if i == j else 0.0
        return f2 * xi * xj / safe**2 + f1 * (delta / safe - xi * xj / safe**3)

    return AnalyticField(
        dim=dim,
        max_derivative_order=2,
        support_radius=1.5,
        catalog_id="mollified_indicator",
        params=dict(params),
        evaluator=value,
        derivative_evaluator=deriv,
        exact_derivatives=False,
        radial=True,
        sup_norm=1.0,
    )


_BUILDERS = {
    "polynomial": _polynomial,
    "gaussian_bump": _gaussian_bump,
    "windowed_sinusoid": _windowed_sinusoid,
    "mollified_indicator": _mollified_indicator,
}


def make_catalog_function(catalog_id: str, params: Mapping | None = None) -> AnalyticField:
    """Build a catalog entry.

    Parameters
    ----------
    catalog_id : str
        One of ``polynomial``, ``gaussian_bump``, ``windowed_sinusoid``,
        ``mollified_indicator``.
    params : mapping
        ``dim`` (default 1) plus entry-specific keys:

        * polynomial: ``coeffs`` (list in dim 1, or ``{multi-index: c}``), ``max_order``
        * gaussian_bump: ``sigma``, ``monomial``, ``amplitude``, optional ``window``
        * windowed_sinusoid: ``omega`` (scalar along ``e_1`` or vector), ``phase``, ``window``
        * mollified_indicator: nothing beyond ``dim``
    """
    params = dict(params or {})
    if catalog_id not in _BUILDERS:
        raise ValueError(f"unknown catalog id {catalog_id!r}; expected one of {CATALOG_IDS}")
    dim = int(params.get("dim", 1))
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    params["dim"] = dim
    return _BUILDERS[catalog_id](dim, params)


def dilate(f: AnalyticField, a: float) -> AnalyticField:
    """The field ``x -> f(a x)``; derivatives pick up ``a^{|alpha|}``."""
    if not a > 0:
        raise ValueError("dilation factor must be positive")

    def value(x):
        return f.evaluator(a * x)

    def deriv(alpha, x):
        return a ** sum(alpha) * f.derivative_evaluator(alpha, a * x)

    return AnalyticField(
        dim=f.dim,
        max_derivative_order=f.max_derivative_order,
        support_radius=f.support_radius / a,
        catalog_id=f.catalog_id,
        params={**f.params, "dilation": a * f.params.get("dilation", 1.0)},
        evaluator=value,
        derivative_evaluator=deriv,
        exact_derivatives=f.exact_derivatives,
        polynomial_degree=f.polynomial_degree,
        radial=f.radial,
        sup_norm=f.sup_norm,
    )


def sample(f, grid: GridSpec) -> SampledField:
    """Evaluate ``f`` at the cell centres of ``grid``.

    ``f`` is an :class:`AnalyticField` or any callable on ``(..., dim)`` points.
    """
    dim = getattr(f, "dim", grid.dim)
    if dim != grid.dim:
        raise ValueError(f"field dim {dim} does not match grid dim {grid.dim}")
    return SampledField(grid, np.asarray(f(grid.points()), dtype=float))
