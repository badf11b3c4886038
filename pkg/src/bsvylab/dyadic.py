"""Shifted dyadic grids, minimizing polynomials and the sparse level-set machinery.

Local polynomial fits use a monomial basis scaled to each domain, so the
Gram matrix of a level is shared by all of its cubes and fits are batched.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .calculus import forward_difference, gradient_magnitude, sphere_rule
from .field import AnalyticField, GridSpec, SampledField, multi_indices
from .spaces import Lebesgue, SpaceSpec, space_norm
from .weights import Cube, WeightSpec

__all__ = [
    "DyadicCube",
    "cube_geometry",
    "containing_cube",
    "Ball",
    "Annulus",
    "domain_rule",
    "Polynomial",
    "minimizing_polynomial",
    "local_approximation",
    "ApproximationTable",
    "approximation_table",
    "LevelFamily",
    "level_family",
    "sparse_sum",
    "sparse_sup",
    "qx_check",
    "qx_bound",
    "averaged_modulus",
    "whitney_ratio",
    "poincare_ratio",
    "variant_poincare_check",
    "near_best_constant",
    "mean_bound_constant",
    "DEFAULT_WINDOW",
]

DEFAULT_WINDOW = (-10, 4)
_PANELS, _NODES = 4, 8
_MAX_CUBES_PER_LEVEL = 2_000_000


# --------------------------------------------------------------------------
# shifted dyadic grids


@dataclass(frozen=True)
class DyadicCube:
    """The cube ``2^j (m + [0,1)^n + (-1)^j alpha)`` of the grid ``D^alpha``."""

    alpha: tuple
    j: int
    m: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        for a in self.alpha:
            if min(abs(a - s) for s in (0.0, 1 / 3, 2 / 3)) > 1e-12:
                raise ValueError("shift components must lie in {0, 1/3, 2/3}")
        if len(self.alpha) != len(self.m):
            raise ValueError("alpha and m must have the same length")

    @property
    def dim(self) -> int:
        return len(self.m)

    @property
    def edge(self) -> float:
        return 2.0**self.j

    @property
    def corner(self) -> np.ndarray:
        return cube_geometry(self.alpha, self.j, self.m)[0]

    @property
    def volume(self) -> float:
        return 2.0 ** (self.j * self.dim)

    def as_cube(self) -> Cube:
        return Cube(tuple(self.corner), self.edge)

    def parent(self) -> "DyadicCube":
        """The unique cube of level ``j + 1`` in the same grid containing this one."""
        c = self.corner + self.edge / 2
        return cube_of_point(self.alpha, self.j + 1, c)


def cube_geometry(alpha, j: int, m) -> tuple[np.ndarray, float]:
    """Corner ``2^j (m + (-1)^j alpha)`` and edge ``2^j``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    m = np.atleast_1d(np.asarray(m, dtype=float))
    e = 2.0**j
    return e * (m + (-1) ** j * alpha), e


def cube_of_point(alpha, j: int, x) -> DyadicCube:
    """The cube of ``D^alpha`` at level ``j`` that contains ``x``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.floor(x / 2.0**j - (-1) ** j * alpha).astype(int)
    return DyadicCube(tuple(alpha), j, tuple(m))


def all_shifts(dim: int) -> list[tuple]:
    return [tuple(s) for s in itertools.product((0.0, 1 / 3, 2 / 3), repeat=dim)]


def containing_cube(center, radius: float, levels: Sequence[int] = range(-40, 41)):
    """Smallest cube over the ``3^n`` shifted grids containing the closed ball.

    Returns
    -------
    alpha, cube, ratio
        ``ratio`` is ``edge / diam(B)``.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if not radius > 0:
        raise ValueError("radius must be positive")
    best = None
    for j in levels:
        if 2.0**j < 2 * radius:
            continue
        for alpha in all_shifts(len(c)):
            q = cube_of_point(alpha, j, c - radius)
            lo = q.corner
            if np.all(c + radius <= lo + q.edge) and np.all(c - radius >= lo):
                best = (alpha, q)
                break
        if best is not None:
            break
    if best is None:
        raise ValueError("no containing cube in the level window")
    return best[0], best[1], best[1].edge / (2 * radius)


# --------------------------------------------------------------------------
# domains and quadrature


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def size(self) -> float:
        return self.radius

    def contains(self, x) -> np.ndarray:
        return np.linalg.norm(np.asarray(x) - np.asarray(self.center), axis=-1) < self.radius

    def scaled(self, factor: float) -> "Ball":
        return Ball(tuple(np.asarray(self.center) * factor), self.radius * factor)


@dataclass(frozen=True)
class Annulus:
    """``R < |x - center| < 2R``."""

    center: tuple
    inner: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def size(self) -> float:
        return self.inner

    def contains(self, x) -> np.ndarray:
        d = np.linalg.norm(np.asarray(x) - np.asarray(self.center), axis=-1)
        return (d > self.inner) & (d < 2 * self.inner)

    def scaled(self, factor: float) -> "Annulus":
        return Annulus(tuple(np.asarray(self.center) * factor), self.inner * factor)


def _gauss_panels(a: float, b: float, panels: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    g, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (lo + (hi - lo) * (g + 1) / 2).ravel(), ((hi - lo) / 2 * w).ravel()


def _frame(domain) -> tuple[np.ndarray, float]:
    """Centre and scale of the domain's local monomial basis."""
    if isinstance(domain, Cube):
        return domain.center, domain.edge / 2
    if isinstance(domain, Ball):
        return np.asarray(domain.center), domain.radius
    if isinstance(domain, Annulus):
        return np.asarray(domain.center), 2 * domain.inner
    raise TypeError(f"unsupported domain {domain!r}")


def domain_size(domain) -> float:
    """``R`` of the Poincare-type estimates: edge, radius or inner radius."""
    return domain.edge if isinstance(domain, Cube) else domain.size


def _reference_rule(kind: str, dim: int, panels: int, nodes: int, inner: float = 0.0):
    """Rule on the reference domain in local coordinates (unit scale)."""
    if kind == "cube":
        t, w = _gauss_panels(-1.0, 1.0, panels, nodes)
        mesh = np.meshgrid(*([t] * dim), indexing="ij")
        wm = np.meshgrid(*([w] * dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], -1), np.prod([m.ravel() for m in wm], axis=0)
    lo = inner
    r, wr = _gauss_panels(lo, 1.0, panels, nodes)
    if dim == 1:
        pts = np.concatenate([r, -r])[:, None]
        return pts, np.concatenate([wr, wr])
    dirs, dw = sphere_rule(dim, 64 if dim == 2 else 110)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    w = (wr[:, None] * r[:, None] ** (dim - 1) * dw[None, :]).ravel()
    return pts, w


def domain_rule(domain, panels: int = _PANELS, nodes: int = _NODES) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on a cube, ball or annulus (``panels * nodes`` per axis)."""
    c, s = _frame(domain)
    n = len(c)
    if isinstance(domain, Cube):
        u, w = _reference_rule("cube", n, panels, nodes)
    elif isinstance(domain, Ball):
        u, w = _reference_rule("ball", n, panels, nodes)
    else:
        u, w = _reference_rule("ball", n, panels, nodes, inner=0.5)
    return c + s * u, w * s**n


# --------------------------------------------------------------------------
# polynomials


def _exponents(dim: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(degree + 1):
        out.extend(multi_indices(dim, d))
    return out


def _basis(u: np.ndarray, exps: Sequence[tuple]) -> np.ndarray:
    """Monomials ``u^beta`` for local coordinates ``u`` of shape ``(..., dim)``."""
    return np.stack([np.prod(u ** np.asarray(b), axis=-1) for b in exps], axis=-1)


@dataclass(frozen=True)
class Polynomial:
    """``P(x) = sum_beta c_beta ((x - center)/scale)^beta`` with ``|beta| <= degree``."""

    dim: int
    degree: int
    center: tuple
    scale: float
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @property
    def exponents(self) -> list[tuple[int, ...]]:
        return _exponents(self.dim, self.degree)

    def _local(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return (x - np.asarray(self.center)) / self.scale

    def __call__(self, x) -> np.ndarray:
        return _basis(self._local(x), self.exponents) @ self.coeffs

    def derivative(self, alpha: Sequence[int], x) -> np.ndarray:
        u = self._local(x)
        alpha = np.asarray(alpha)
        out = np.zeros(u.shape[:-1])
        for b, c in zip(self.exponents, self.coeffs):
            b = np.asarray(b)
            if c == 0 or np.any(b < alpha):
                continue
            fac = np.prod([math.perm(int(bi), int(ai)) for bi, ai in zip(b, alpha)])
            out += c * fac * np.prod(u ** (b - alpha), axis=-1)
        return out / self.scale ** int(alpha.sum())

    def global_coefficients(self) -> dict:
        """Coefficients in the raw monomials ``x^beta``, keyed by exponent tuple."""
        out: dict = {}
        c0 = np.asarray(self.center)
        for b, c in zip(self.exponents, self.coeffs):
            # prod_i ((x_i - c_i)/s)^{b_i}, expanded binomially
            parts = [[(math.comb(bi, t) * (-c0[i]) ** (bi - t), t) for t in range(bi + 1)]
                     for i, bi in enumerate(b)]
            for combo in itertools.product(*parts):
                key = tuple(t for _, t in combo)
                val = c * np.prod([v for v, _ in combo]) / self.scale ** sum(b)
                out[key] = out.get(key, 0.0) + val
        return out


def _values(f, x: np.ndarray) -> np.ndarray:
    return np.asarray(f(x), dtype=float)


def minimizing_polynomial(f, domain, s: int, panels: int = _PANELS, nodes: int = _NODES) -> Polynomial:
    """Degree-``s`` mean-square projection of ``f`` on ``domain`` (vanishing moments).

    Raises
    ------
    np.linalg.LinAlgError
        If the normal system is singular (would indicate a quadrature bug).
    """
    if s < 0:
        raise ValueError("degree must be >= 0")
    c, sc = _frame(domain)
    x, w = domain_rule(domain, panels, nodes)
    exps = _exponents(len(c), s)
    phi = _basis((x - c) / sc, exps)
    gram = phi.T @ (w[:, None] * phi)
    rhs = phi.T @ (w * _values(f, x))
    coef = np.linalg.solve(gram, rhs)
    return Polynomial(len(c), s, tuple(c), sc, coef)


def local_approximation(f, domain, k: int, panels: int = _PANELS, nodes: int = _NODES) -> float:
    """``E_k(f, Q) = || f - P^{(k-1)}_Q f ||_{L^1(Q)}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    P = minimizing_polynomial(f, domain, k - 1, panels, nodes)
    x, w = domain_rule(domain, panels, nodes)
    return float(np.sum(w * np.abs(_values(f, x) - P(x))))


def near_best_constant(f, domain, s: int, seed: int = 0) -> tuple[float, float, float]:
    """``||f - P^{(s)} f||_{L^1} / inf_{P in P_s} ||f - P||_{L^1}``.

    The infimum is estimated with a derivative-free minimizer (Powell, then
    Nelder-Mead) started from the projection and from a perturbed copy.
    """
    P = minimizing_polynomial(f, domain, s)
    x, w = domain_rule(domain)
    c, sc = _frame(domain)
    phi = _basis((x - c) / sc, P.exponents)
    fx = _values(f, x)

    def l1(coef):
        return float(np.sum(w * np.abs(fx - phi @ coef)))

    proj = l1(P.coeffs)
    best = proj
    rng = np.random.default_rng(seed)
    for start in (P.coeffs, P.coeffs + 0.1 * rng.normal(size=P.coeffs.size) * (np.abs(P.coeffs).max() + 1e-3)):
        r = minimize(l1, start, method="Powell", options=dict(xtol=1e-10, ftol=1e-12, maxiter=20000))
        r = minimize(l1, r.x, method="Nelder-Mead",
                     options=dict(xatol=1e-10, fatol=1e-13, maxiter=20000, adaptive=True))
        best = min(best, r.fun)
    if best == 0:
        return (1.0 if proj == 0 else math.inf), proj, best
    return proj / best, proj, best


def mean_bound_constant(f, domain, s: int) -> float:
    """``sup_{x in Q} |P^{(s)}_Q f(x)| / avg_Q |f|`` evaluated on the quadrature nodes."""
    P = minimizing_polynomial(f, domain, s)
    x, w = domain_rule(domain)
    avg = np.sum(w * np.abs(_values(f, x))) / np.sum(w)
    if avg == 0:
        return 0.0
    return float(np.max(np.abs(P(x))) / avg)


# --------------------------------------------------------------------------
# level-set families of cubes


@dataclass
class ApproximationTable:
    """``E_k(f, Q)`` for every cube of ``D^alpha`` in a level window meeting the support."""

    k: int
    alpha: tuple
    levels: np.ndarray
    indices: np.ndarray
    corners: np.ndarray
    edges: np.ndarray
    values: np.ndarray
    dim: int

    def cube(self, i: int) -> DyadicCube:
        return DyadicCube(self.alpha, int(self.levels[i]), tuple(self.indices[i]))


def _support_extent(f, extent: float | None) -> float:
    r = getattr(f, "support_radius", math.inf)
    if math.isfinite(r):
        return r
    if extent is None:
        raise ValueError("field has unbounded support; pass extent")
    return extent


def approximation_table(f, k: int, alpha, window: tuple[int, int] = DEFAULT_WINDOW,
                        extent: float | None = 8.0, panels: int = _PANELS,
                        nodes: int = _NODES) -> ApproximationTable:
    """Compute ``E_k`` on all cubes of the window that meet the support of ``f``.

    Cubes that miss ``supp f`` have ``E_k = 0`` and are skipped. For fields
    without compact support the cubes meeting ``[-extent, extent]^n`` are used.
    """
    dim = getattr(f, "dim", len(np.atleast_1d(alpha)))
    alpha = tuple(float(a) for a in np.broadcast_to(np.atleast_1d(alpha), (dim,)))
    R = _support_extent(f, extent)
    u, w = _reference_rule("cube", dim, panels, nodes)
    exps = _exponents(dim, k - 1)
    phi = _basis(u, exps)
    gram = phi.T @ (w[:, None] * phi)
    proj = np.linalg.solve(gram, (phi * w[:, None]).T)   # coeffs = proj @ f
    resid_op = np.eye(len(u)) - phi @ proj
    lv, idx, corners, edges, vals = [], [], [], [], []
    for j in range(window[0], window[1] + 1):
        e = 2.0**j
        s = (-1) ** j * np.asarray(alpha)
        lo = np.floor(-R / e - s).astype(int)
        hi = np.floor(R / e - s).astype(int)
        count = int(np.prod(hi - lo + 1))
        if count > _MAX_CUBES_PER_LEVEL:
            raise ValueError(f"level {j} has {count} cubes; narrow the window")
        ms = np.stack([m.ravel() for m in np.meshgrid(
            *[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")], -1)
        cor = e * (ms + s)
        cen = cor + e / 2
        # keep cubes whose closure meets the ball of radius R
        near = np.linalg.norm(np.clip(np.zeros(dim), cor, cor + e) - 0, axis=-1) <= R
        ms, cor, cen = ms[near], cor[near], cen[near]
        if len(ms) == 0:
            continue
        vol = e**dim
        out = np.empty(len(ms))
        chunk = max(1, 2_000_000 // len(u))
        for a in range(0, len(ms), chunk):
            x = cen[a:a + chunk, None, :] + (e / 2) * u[None, :, :]
            fx = _values(f, x)
            r = fx @ resid_op.T
            out[a:a + chunk] = np.abs(r) @ w * (vol / 2**dim)
        lv.append(np.full(len(ms), j))
        idx.append(ms)
        corners.append(cor)
        edges.append(np.full(len(ms), e))
        vals.append(out)
    cat = (lambda xs, shape: np.concatenate(xs) if xs else np.zeros(shape))
    return ApproximationTable(k, alpha, cat(lv, (0,)).astype(int), cat(idx, (0, dim)).astype(int),
                              cat(corners, (0, dim)), cat(edges, (0,)), cat(vals, (0,)), dim)


@dataclass
class LevelFamily:
    """Cubes ``Q`` of ``D^alpha`` in the window with ``E_k(f,Q) > lambda |Q|^{beta + l/n}``."""

    lam: float
    beta: float
    k: int
    ell: int
    alpha: tuple
    table: ApproximationTable = field(repr=False)
    members: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.members.size)

    def cubes(self) -> list[DyadicCube]:
        return [self.table.cube(int(i)) for i in self.members]

    @property
    def volumes(self) -> np.ndarray:
        return self.table.edges[self.members] ** self.table.dim


def _thresholds(table: ApproximationTable, beta: float, ell: int) -> np.ndarray:
    """``E_k(f,Q) / |Q|^{beta + l/n}``: a cube is a member iff this exceeds ``lambda``."""
    vol = table.edges**table.dim
    return table.values / vol ** (beta + ell / table.dim)


def level_family(f, lam: float, beta: float, k: int, ell: int | None = None, alpha=0.0,
                 window: tuple[int, int] = DEFAULT_WINDOW, table: ApproximationTable | None = None,
                 extent: float | None = 8.0) -> LevelFamily:
    """The family ``D^alpha_{lambda, beta, k, l}[f]`` restricted to the level window."""
    ell = k if ell is None else ell
    if table is None:
        table = approximation_table(f, k, alpha, window, extent)
    t = _thresholds(table, beta, ell)
    members = np.nonzero(t > lam)[0]
    return LevelFamily(lam, beta, k, ell, table.alpha, table, members)


def sparse_sum(family: LevelFamily, p: float, beta: float | None = None,
               w: WeightSpec | None = None) -> float:
    """``lambda^p sum_{Q in family} |Q|^{p(beta-1)} w(Q)``."""
    beta = family.beta if beta is None else beta
    if len(family) == 0:
        return 0.0
    tab = family.table
    vol = family.volumes
    if w is None or w.is_constant:
        wq = vol * (1.0 if w is None else w.c)
    else:
        wq = w.cube_masses(tab.corners[family.members], tab.edges[family.members])
    return float(family.lam**p * np.sum(vol ** (p * (beta - 1)) * wq))


@dataclass
class SparseSupResult:
    sup: float
    argmax: float
    rhs: float
    ratio: float
    exact_sup: float
    curve: np.ndarray = field(repr=False)


def sparse_sup(f: AnalyticField, p: float, beta: float, k: int, ell: int | None = None,
               alpha=0.0, w: WeightSpec | None = None, lam_grid: np.ndarray | None = None,
               window: tuple[int, int] = DEFAULT_WINDOW, rhs_grid: GridSpec | None = None,
               table: ApproximationTable | None = None) -> SparseSupResult:
    """Sup over a lambda grid of the sparse sum, against ``int |nabla^l f|^p w``.

    ``exact_sup`` is the sup over all ``lambda > 0``; it is attained just below
    one of the membership thresholds ``E_k(f,Q)/|Q|^{beta+l/n}``. The default
    grid has 60 geometric points (20 per decade) with one node just below that
    threshold, so it moves covariantly under dilations of ``f``.
    """
    ell = k if ell is None else ell
    if table is None:
        table = approximation_table(f, k, alpha, window)
    thr = _thresholds(table, beta, ell)
    vol = table.edges**table.dim
    if w is None or w.is_constant:
        wq = vol * (1.0 if w is None else w.c)
    else:
        wq = w.cube_masses(table.corners, table.edges)
    terms = vol ** (p * (beta - 1)) * wq
    pos = thr > 0
    order = np.argsort(-thr[pos])
    t_sorted = thr[pos][order]
    cum = np.cumsum(terms[pos][order])
    vals = t_sorted**p * cum
    exact = float(np.max(vals)) if t_sorted.size else 0.0
    if lam_grid is None:
        # 20 points per decade over three decades, one node just below the maximising threshold
        anchor = float(t_sorted[np.argmax(vals)]) * (1 - 1e-12) if t_sorted.size else 1.0
        lam_grid = anchor * 10.0 ** ((np.arange(60) - 40) / 20)
    curve = np.empty(len(lam_grid))
    for i, lam in enumerate(lam_grid):
        curve[i] = lam**p * np.sum(terms[thr > lam])
    # right side by grid quadrature
    if rhs_grid is None:
        R = _support_extent(f, 8.0)
        rhs_grid = GridSpec(table.dim, R, 4096 if table.dim == 1 else 256)
    pts = rhs_grid.points()
    g = gradient_magnitude(f, pts, ell) ** p
    cell = w.cell_masses(rhs_grid) if w is not None else np.full(len(pts), rhs_grid.cell_volume)
    rhs = float(np.sum(g * cell))
    i = int(np.argmax(curve))
    return SparseSupResult(float(curve[i]), float(lam_grid[i]), rhs,
                           float(curve[i] / rhs) if rhs > 0 else 0.0, exact, curve)


def qx_bound(dim: int, p: float, beta: float) -> float:
    """``sum_{j >= 0} 2^{-j n p |beta - 1|}``."""
    return 1.0 / (1.0 - 2.0 ** (-dim * p * abs(beta - 1)))


def qx_check(family: LevelFamily, x, p: float) -> tuple[DyadicCube, float]:
    """The distinguished cube ``Q_x`` and ``sum_{Q ni x} |Q|^{p(beta-1)} / |Q_x|^{p(beta-1)}``.

    ``Q_x`` is the smallest member containing ``x`` when ``beta < 1`` and the
    largest when ``beta > 1``.
    """
    beta = family.beta
    if beta == 1:
        raise ValueError("beta must differ from 1")
    tab = family.table
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cor = tab.corners[family.members]
    edg = tab.edges[family.members]
    inside = np.all((x >= cor) & (x < cor + edg[:, None]), axis=1)
    if not np.any(inside):
        raise ValueError("x is not covered by the family")
    sel = family.members[inside]
    vol = tab.edges[sel] ** tab.dim
    i = int(np.argmin(vol) if beta < 1 else np.argmax(vol))
    qx = tab.cube(int(sel[i]))
    ratio = float(np.sum(vol ** (p * (beta - 1))) / vol[i] ** (p * (beta - 1)))
    return qx, ratio


# --------------------------------------------------------------------------
# moduli and Poincare-type ratios


def averaged_modulus(f, Q: Cube, panels: int = _PANELS, nodes: int = _NODES) -> float:
    """``|Q|^{-1-1/n} int_Q int_Q |f(x) - f(y)| dx dy``."""
    x, w = domain_rule(Q, panels, nodes)
    fx = _values(f, x)
    n = Q.dim
    dbl = np.sum(w[:, None] * w[None, :] * np.abs(fx[:, None] - fx[None, :]))
    return float(dbl / Q.volume ** (1 + 1 / n))


def whitney_ratio(f, Q: Cube, k: int, directions: int = 64, radii: int = 16) -> tuple[float, float, float]:
    """``E_k(f,Q) / sup_{|h| <= l(Q)/k} ||Delta^k_h f||_{L^1(Q(k,h))}`` on a direction x radius grid.

    Returns
    -------
    ratio, numerator, denominator
        ``ratio`` is ``0`` for the exact-zero pair (``f`` in ``P_{k-1}``).
    """
    num = local_approximation(f, Q, k)
    n = Q.dim
    dirs = np.array([[1.0], [-1.0]]) if n == 1 else sphere_rule(n, directions)[0]
    lo0, hi0 = np.asarray(Q.corner), Q.upper
    den = 0.0
    for rr in Q.edge / k * np.arange(1, radii + 1) / radii:
        for d in dirs:
            h = rr * d
            lo = lo0 + np.maximum(0.0, -k * h)
            hi = hi0 - np.maximum(0.0, k * h)
            if np.any(hi - lo <= 0):
                continue
            axes = [_gauss_panels(a, b, _PANELS, _NODES) for a, b in zip(lo, hi)]
            mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
            wm = np.meshgrid(*[a[1] for a in axes], indexing="ij")
            x = np.stack([m.ravel() for m in mesh], -1)
            w = np.prod([m.ravel() for m in wm], axis=0)
            val = float(np.sum(w * np.abs(forward_difference(f, x, h, k))))
            den = max(den, val)
    scale = max(1.0, abs(num))
    if den <= 1e-14 * scale:
        if num > 1e-10 * scale:
            raise ValueError("Whitney denominator vanishes while E_k does not")
        return 0.0, num, den
    return num / den, num, den


def _domain_grid(domain, points: int) -> GridSpec:
    c = np.asarray(_frame(domain)[0])
    if isinstance(domain, Cube):
        reach = np.max(np.abs(np.concatenate([np.asarray(domain.corner), domain.upper])))
    elif isinstance(domain, Ball):
        reach = np.max(np.abs(c)) + domain.radius
    else:
        reach = np.max(np.abs(c)) + 2 * domain.inner
    return GridSpec(len(c), float(reach), points)


def _indicator(domain, pts: np.ndarray) -> np.ndarray:
    if isinstance(domain, Cube):
        lo, hi = np.asarray(domain.corner), domain.upper
        return np.all((pts >= lo) & (pts < hi), axis=-1)
    return domain.contains(pts)


def poincare_ratio(f: AnalyticField, domain, k: int, j: int, spec: SpaceSpec | None = None,
                   points: int | None = None) -> tuple[float, bool]:
    """``||nabla^j (f - P) 1_Omega||_X / (R^{k-j} ||nabla^k f 1_Omega||_X)``.

    ``P`` is the degree ``k - 1`` minimizing polynomial of ``Omega``; both norms
    are computed on a grid covering ``Omega``.

    Returns
    -------
    ratio, zero_numerator
        ``zero_numerator`` flags ``f`` in ``P_{k-1}`` (ratio reported as 0).
    """
    if not 0 <= j <= k - 1:
        raise ValueError("need 0 <= j <= k - 1")
    if isinstance(domain, Annulus) and domain.dim < 2:
        raise ValueError("annulus case needs dim >= 2")
    spec = spec or Lebesgue(1.0)
    points = points or (2048 if domain.dim == 1 else 256)
    grid = _domain_grid(domain, points)
    pts = grid.points()
    ind = _indicator(domain, pts)
    P = minimizing_polynomial(f, domain, k - 1)
    if j == 0:
        top = np.abs(f(pts) - P(pts))
    else:
        acc = np.zeros(len(pts))
        for a in multi_indices(domain.dim, j):
            acc += (f.derivative(a, pts) - P.derivative(a, pts)) ** 2
        top = np.sqrt(acc)
    num = space_norm(spec, SampledField(grid, top * ind))
    den = space_norm(spec, SampledField(grid, gradient_magnitude(f, pts, k) * ind))
    scale = max(1.0, num)
    if num <= 1e-12 * scale:
        return 0.0, True
    if den == 0:
        raise ValueError("nabla^k f vanishes on the domain but f is not a polynomial there")
    return num / (domain_size(domain) ** (k - j) * den), False


def variant_poincare_check(f, x, B: Ball, B1: Ball, k: int, J: int = 12) -> tuple[float, float, float]:
    """``|f(x) - P_{B1} f(x)|`` against ``sum_{j<=J} avg_{2^-j B} |f - P_{2^-j B} f|``.

    Returns ``(lhs, rhs, ratio)`` with ``ratio = 0`` for the exact-zero pair.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.linalg.norm(np.asarray(B.center) - x) > 1e-12:
        raise ValueError("B must be centred at x")
    d = np.linalg.norm(np.asarray(B.center) - np.asarray(B1.center))
    if d + B1.radius > B.radius * (1 + 1e-12) or B.radius > 3 * B1.radius - d + 1e-12:
        raise ValueError("need B1 inside B inside 3 B1")
    P1 = minimizing_polynomial(f, B1, k - 1)
    lhs = float(abs(_values(f, x[None, :])[0] - P1(x[None, :])[0]))
    rhs = 0.0
    for j in range(J + 1):
        b = Ball(tuple(x), B.radius * 2.0**-j)
        pts, w = domain_rule(b)
        P = minimizing_polynomial(f, b, k - 1)
        rhs += float(np.sum(w * np.abs(_values(f, pts) - P(pts))) / np.sum(w))
    scale = max(1.0, abs(lhs))
    if rhs <= 1e-13 * scale:
        if lhs > 1e-10 * scale:
            raise ValueError("right side vanishes while the left side does not")
        return lhs, rhs, 0.0
    return lhs, rhs, lhs / rhs
