"""Norms of ball Banach function spaces evaluated on sampled fields.

Every variant is a frozen dataclass deriving from :class:`SpaceSpec`; the
single entry point :func:`space_norm` dispatches on the variant. Fields are
treated as piecewise constant on grid cells and extended by zero outside the
box, so Lebesgue-type norms are cell sums and Morrey-type norms are exact for
that piecewise-constant model.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, ClassVar

import numpy as np
from scipy.optimize import elementwise

from .field import GridSpec, SampledField
from .weights import WeightSpec

__all__ = [
    "SpaceSpec",
    "Lebesgue",
    "WeightedLebesgue",
    "Lorentz",
    "VariableLebesgue",
    "MixedNorm",
    "Orlicz",
    "Morrey",
    "BourgainMorrey",
    "BesovBourgainMorrey",
    "HerzLocal",
    "OrliczSlice",
    "OrliczFunction",
    "ExponentFunction",
    "space_norm",
    "convexified_norm",
    "lattice_check",
    "space_from_dict",
    "truncation_report",
    "VARIANTS",
]

SHIFTS = (0.0, 1.0 / 3.0, 2.0 / 3.0)


# --------------------------------------------------------------------------
# Orlicz functions and variable exponents


@dataclass(frozen=True)
class OrliczFunction:
    """Orlicz function from a small catalog.

    ``power``: ``t^p``; ``power_log``: ``t^p log(e + t)``; ``sum_powers``:
    ``t^p + t^s``. Lower and upper types are declared in closed form.
    """

    kind: str = "power"
    p: float = 2.0
    s: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "power_log", "sum_powers"):
            raise ValueError(f"unknown Orlicz function {self.kind!r}")
        if not self.p >= 1:
            raise ValueError("Orlicz exponent must be >= 1")
        if self.kind == "sum_powers" and (self.s is None or self.s < 1):
            raise ValueError("sum_powers needs a second exponent s >= 1")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t**self.p
        if self.kind == "power_log":
            return t**self.p * np.log(np.e + t)
        return t**self.p + t**self.s

    @property
    def lower_type(self) -> float:
        return self.p if self.kind != "sum_powers" else min(self.p, self.s)

    @property
    def upper_type(self) -> float:
        if self.kind == "power":
            return self.p
        if self.kind == "power_log":
            return self.p + 1.0
        return max(self.p, self.s)

    def check(self, samples: int = 200) -> bool:
        """Sampled check of ``Phi(0)=0``, positivity, monotonicity and declared types."""
        t = np.geomspace(1e-6, 1e6, samples)
        v = self(t)
        if self(0.0) != 0 or np.any(v <= 0) or np.any(np.diff(v) < 0):
            return False
        s_lo = np.geomspace(1e-4, 1.0, 40)[:, None]
        s_hi = np.geomspace(1.0, 1e4, 40)[:, None]
        ok_lo = np.all(self(s_lo * t) <= s_lo**self.lower_type * v * (1 + 1e-12))
        ok_hi = np.all(self(s_hi * t) <= s_hi**self.upper_type * v * (1 + 1e-12))
        return bool(ok_lo and ok_hi)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ExponentFunction:
    """Variable exponent ``r(x)``: ``constant`` (``a``) or ``decay``
    ``b + (a - b)/(1 + |x|^2)``, which moves from ``a`` at the origin to ``b`` at infinity.
    """

    kind: str = "constant"
    a: float = 2.0
    b: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "decay"):
            raise ValueError(f"unknown exponent function {self.kind!r}")
        if self.kind == "decay" and self.b is None:
            raise ValueError("decay exponent needs b")
        lo, hi = self.bounds
        if lo < 1 or not math.isfinite(hi):
            raise ValueError("exponent must satisfy 1 <= r(x) < inf")

    @property
    def bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.a, self.a
        return min(self.a, self.b), max(self.a, self.b)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.a)
        r2 = np.sum(x * x, axis=-1)
        return self.b + (self.a - self.b) / (1.0 + r2)

    def log_holder_constants(self, dim: int, samples: int = 2000, seed: int = 0) -> tuple[float, float]:
        """Sampled local and decay log-Holder constants.

        Local: ``max |r(x)-r(y)| log(e + 1/|x-y|)``. Decay:
        ``max |r(x) - r_inf| log(e + |x|)``.
        """
        rng = np.random.default_rng(seed)
        x = rng.uniform(-8, 8, (samples, dim))
        y = x + rng.normal(size=(samples, dim)) * 10.0 ** rng.uniform(-6, 0, (samples, 1))
        d = np.linalg.norm(x - y, axis=-1)
        local = np.max(np.abs(self(x) - self(y)) * np.log(np.e + 1.0 / d))
        r_inf = self.a if self.kind == "constant" else self.b
        far = np.max(np.abs(self(x) - r_inf) * np.log(np.e + np.linalg.norm(x, axis=-1)))
        return float(local), float(far)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


# --------------------------------------------------------------------------
# space descriptors


class SpaceSpec:
    """Base class of the space descriptors; ``tag`` names the variant."""

    tag: ClassVar[str] = ""

    def to_dict(self) -> dict:
        out = {"type": self.tag}
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out

    def validate(self, dim: int) -> None:
        pass


def _check_p(name: str, p: float, lo: float = 1.0, strict: bool = False) -> None:
    bad = (p <= lo) if strict else (p < lo)
    if bad or not math.isfinite(p):
        rel = ">" if strict else ">="
        raise ValueError(f"{name} must be finite and {rel} {lo}, got {p}")


@dataclass(frozen=True)
class Lebesgue(SpaceSpec):
    tag: ClassVar[str] = "lebesgue"
    p: float = 2.0

    def __post_init__(self):
        _check_p("p", self.p)


@dataclass(frozen=True)
class WeightedLebesgue(SpaceSpec):
    tag: ClassVar[str] = "weighted_lebesgue"
    p: float = 2.0
    weight: WeightSpec = field(default_factory=WeightSpec.constant)

    def __post_init__(self):
        _check_p("p", self.p)
        if isinstance(self.weight, dict):
            object.__setattr__(self, "weight", WeightSpec.from_dict(self.weight))

    def to_dict(self) -> dict:
        return {"type": self.tag, "p": self.p, "weight": self.weight.to_dict()}


@dataclass(frozen=True)
class Lorentz(SpaceSpec):
    """``L^{r,tau}`` with ``r, tau`` in ``(1, inf)``.

    The value is ``(int_0^inf (t^{1/r} f^*(t))^tau dt/t)^{1/tau}``, built on the
    decreasing rearrangement; for ``tau > r`` this is a quasi-norm.
    """

    tag: ClassVar[str] = "lorentz"
    r: float = 2.0
    tau: float = 2.0

    def __post_init__(self):
        _check_p("r", self.r, strict=True)
        _check_p("tau", self.tau, strict=True)


@dataclass(frozen=True)
class VariableLebesgue(SpaceSpec):
    tag: ClassVar[str] = "variable_lebesgue"
    exponent: ExponentFunction = field(default_factory=ExponentFunction)

    def __post_init__(self):
        if isinstance(self.exponent, dict):
            object.__setattr__(self, "exponent", ExponentFunction(**self.exponent))

    def to_dict(self) -> dict:
        return {"type": self.tag, "exponent": self.exponent.to_dict()}


@dataclass(frozen=True)
class MixedNorm(SpaceSpec):
    """``L^{r_1,...,r_n}``; ``x_1`` is integrated first."""

    tag: ClassVar[str] = "mixed_norm"
    r: tuple = (2.0, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(float(v) for v in self.r))
        for v in self.r:
            _check_p("r_i", v)

    def validate(self, dim: int) -> None:
        if len(self.r) != dim:
            raise ValueError(f"mixed norm has {len(self.r)} exponents for dim {dim}")


@dataclass(frozen=True)
class Orlicz(SpaceSpec):
    tag: ClassVar[str] = "orlicz"
    phi: OrliczFunction = field(default_factory=OrliczFunction)

    def __post_init__(self):
        if isinstance(self.phi, dict):
            object.__setattr__(self, "phi", OrliczFunction(**self.phi))

    def to_dict(self) -> dict:
        return {"type": self.tag, "phi": self.phi.to_dict()}


@dataclass(frozen=True)
class Morrey(SpaceSpec):
    """``M^u_p``, ``1 <= p <= u < inf``; dyadic levels ``j_min..j_max``."""

    tag: ClassVar[str] = "morrey"
    u: float = 2.0
    p: float = 2.0
    j_min: int = -12
    j_max: int = 6

    def __post_init__(self):
        _check_p("p", self.p)
        if not self.p <= self.u < math.inf:
            raise ValueError("Morrey space needs p <= u < inf")
        if self.j_min > self.j_max:
            raise ValueError("empty level window")


@dataclass(frozen=True)
class BourgainMorrey(SpaceSpec):
    """``M^u_{p,r}``, ``1 <= p <= u <= r <= inf``."""

    tag: ClassVar[str] = "bourgain_morrey"
    u: float = 2.0
    p: float = 1.0
    r: float = 4.0
    j_min: int = -12
    j_max: int = 6

    def __post_init__(self):
        _check_p("p", self.p)
        if not self.p <= self.u <= self.r:
            raise ValueError("Bourgain-Morrey space needs p <= u <= r")
        if self.j_min > self.j_max:
            raise ValueError("empty level window")


@dataclass(frozen=True)
class BesovBourgainMorrey(SpaceSpec):
    """``M B^{u,tau}_{p,r}``: level-wise ``l^r`` sums, then ``l^tau`` over levels."""

    tag: ClassVar[str] = "besov_bourgain_morrey"
    u: float = 2.0
    p: float = 1.0
    r: float = 4.0
    tau: float = 4.0
    j_min: int = -12
    j_max: int = 6

    def __post_init__(self):
        _check_p("p", self.p)
        if not self.p <= self.u <= self.r:
            raise ValueError("Besov-Bourgain-Morrey space needs p <= u <= r")
        if not self.tau >= 1:
            raise ValueError("tau must be >= 1")
        if self.j_min > self.j_max:
            raise ValueError("empty level window")


@dataclass(frozen=True)
class HerzLocal(SpaceSpec):
    """Local Herz space with ``omega(t) = t^a`` and annuli centred at ``center``."""

    tag: ClassVar[str] = "herz_local"
    p: float = 2.0
    r: float = 2.0
    a: float = 0.0
    center: tuple | None = None

    def __post_init__(self):
        _check_p("p", self.p)
        _check_p("r", self.r)
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def validate(self, dim: int) -> None:
        p_dual = math.inf if self.p == 1 else self.p / (self.p - 1)
        if not (-dim / self.p < self.a < dim / p_dual):
            raise ValueError(
                f"Herz exponent a={self.a} outside the window (-n/p, n/p') = "
                f"({-dim / self.p}, {dim / p_dual})")
        if self.center is not None and len(self.center) != dim:
            raise ValueError("Herz centre dimension mismatch")


@dataclass(frozen=True)
class OrliczSlice(SpaceSpec):
    """``(E^r_Phi)_t``: ``l^r``-average of local Orlicz norms on balls of radius ``t``."""

    tag: ClassVar[str] = "orlicz_slice"
    r: float = 2.0
    t: float = 0.5
    phi: OrliczFunction = field(default_factory=OrliczFunction)

    def __post_init__(self):
        _check_p("r", self.r)
        if not self.t > 0:
            raise ValueError("slice radius t must be positive")
        if isinstance(self.phi, dict):
            object.__setattr__(self, "phi", OrliczFunction(**self.phi))

    def to_dict(self) -> dict:
        return {"type": self.tag, "r": self.r, "t": self.t, "phi": self.phi.to_dict()}


VARIANTS = {cls.tag: cls for cls in (
    Lebesgue, WeightedLebesgue, Lorentz, VariableLebesgue, MixedNorm, Orlicz,
    Morrey, BourgainMorrey, BesovBourgainMorrey, HerzLocal, OrliczSlice)}


def space_from_dict(d: dict) -> SpaceSpec:
    """Inverse of ``SpaceSpec.to_dict``."""
    d = dict(d)
    tag = d.pop("type", None)
    if tag not in VARIANTS:
        raise ValueError(f"unknown space type {tag!r}; expected one of {sorted(VARIANTS)}")
    if "r" in d and isinstance(d["r"], list):
        d["r"] = tuple(d["r"])
    if "center" in d and d["center"] is not None:
        d["center"] = tuple(d["center"])
    return VARIANTS[tag](**d)


# --------------------------------------------------------------------------
# Luxemburg norms


def _luxemburg(modular: Callable, guess: np.ndarray, args=()) -> np.ndarray:
    """Solve ``modular(lam) = 1`` elementwise for decreasing modulars, in ``log lam``."""
    guess = np.asarray(guess, dtype=float)

    def f(loglam, *a):
        return modular(np.exp(loglam), *a) - 1.0

    x0 = np.log(guess)
    br = elementwise.bracket_root(f, x0 - 0.5, x0 + 0.5, args=args, maxiter=200)
    if not np.all(br.success):
        raise ValueError("Luxemburg bisection could not bracket the modular; degenerate Phi?")
    res = elementwise.find_root(f, (br.bracket[0], br.bracket[1]), args=args,
                                tolerances=dict(xatol=1e-12, xrtol=0.0), maxiter=200)
    if not np.all(res.success):
        raise ValueError("Luxemburg root finding did not converge")
    return np.exp(res.x)


def _orlicz_norm(phi: OrliczFunction, a: np.ndarray, dv: float) -> float:
    a = np.abs(a)
    a = a[a > 0]
    if a.size == 0:
        return 0.0

    def modular(lam):
        lam = np.asarray(lam, dtype=float)
        return np.array([np.sum(phi(a / v)) * dv for v in lam.ravel()]).reshape(lam.shape)

    return float(_luxemburg(modular, np.array(a.max())))


def _variable_norm(expo: ExponentFunction, g: SampledField) -> float:
    a = np.abs(g.values)
    keep = a > 0
    if not np.any(keep):
        return 0.0
    a = a[keep]
    r = expo(g.grid.points()[keep])
    dv = g.grid.cell_volume

    def modular(lam):
        lam = np.asarray(lam, dtype=float)
        return np.array([np.sum((a / v) ** r) * dv for v in lam.ravel()]).reshape(lam.shape)

    return float(_luxemburg(modular, np.array(a.max())))


# --------------------------------------------------------------------------
# dyadic cube masses (Morrey family)


def _level_masses(dens: np.ndarray, grid: GridSpec, j: int, alpha: tuple) -> np.ndarray:
    """Integrals of the piecewise-constant density over every cube of ``D^alpha_j``.

    The integral over a cube is read off the multilinear cumulative integral,
    which is exact for cell-wise constant densities; axes are processed one at
    a time so the cost is linear in the number of cubes.
    """
    L, h, N = grid.half_width, grid.spacing, grid.points_per_axis
    e = 2.0**j
    out = dens
    for ax in range(grid.dim):
        s = (-1) ** j * alpha[ax]
        m_lo = math.floor(-L / e - s)
        m_hi = math.ceil(L / e - s)
        edges = e * (np.arange(m_lo, m_hi + 1) + s)
        u = np.clip((edges + L) / h, 0.0, N)
        i = np.minimum(np.floor(u).astype(int), N - 1)
        t = u - i
        cum = np.concatenate([np.zeros_like(np.take(out, [0], axis=ax)),
                              np.cumsum(out, axis=ax)], axis=ax)
        shape = [1] * out.ndim
        shape[ax] = -1
        c = np.take(cum, i, axis=ax) * (1 - t).reshape(shape) + np.take(cum, i + 1, axis=ax) * t.reshape(shape)
        out = np.diff(c, axis=ax)
    return out.ravel() * grid.cell_volume


def _morrey_terms(spec, g: SampledField):
    """Yield ``(j, terms)`` with ``terms = |Q|^{1/u-1/p} ||g 1_Q||_p`` per level.

    Levels whose cubes are smaller than a cell are returned as the
    pair ``(j, None)`` and handled in closed form by the caller.
    """
    grid = g.grid
    dens = (np.abs(g.values) ** spec.p).reshape(grid.shape)
    n = grid.dim
    shifts = [tuple(s) for s in np.array(np.meshgrid(*([SHIFTS] * n), indexing="ij")).reshape(n, -1).T]
    for j in range(spec.j_min, spec.j_max + 1):
        e = 2.0**j
        if e < grid.spacing:
            yield j, None
            continue
        vol = e**n
        parts = []
        for alpha in shifts:
            m = _level_masses(dens, grid, j, alpha)
            m = m[m > 0]
            parts.append(vol ** (1 / spec.u - 1 / spec.p) * m ** (1 / spec.p))
        yield j, np.concatenate(parts)


def _subcell_level(spec, g: SampledField, j: int, r: float) -> float:
    """``l^r`` mass of one sub-cell level, summed over all shifts.

    Cubes smaller than a cell are assigned to cells by measure: each cell holds
    ``h^n / |Q|`` cubes per shift on average, each contributing
    ``|g_i| |Q|^{1/u}``.
    """
    n = g.grid.dim
    vol = 2.0 ** (j * n)
    a = np.abs(g.values)
    if math.isinf(r):
        return float(a.max() * vol ** (1 / spec.u))
    per_shift = np.sum(a**r) * g.grid.cell_volume * vol ** (r / spec.u - 1)
    return float(3**n * per_shift)


def _morrey_norm(spec, g: SampledField) -> float:
    if isinstance(spec, Morrey):
        best = 0.0
        for j, terms in _morrey_terms(spec, g):
            if terms is None:
                best = max(best, _subcell_level(spec, g, j, math.inf))
            elif terms.size:
                best = max(best, float(terms.max()))
        return best
    r = spec.r
    tau = spec.tau if isinstance(spec, BesovBourgainMorrey) else r
    levels = []
    for j, terms in _morrey_terms(spec, g):
        if math.isinf(r):
            lv = _subcell_level(spec, g, j, r) if terms is None else float(terms.max(initial=0.0))
        else:
            s = _subcell_level(spec, g, j, r) if terms is None else float(np.sum(terms**r))
            lv = s ** (1 / r)
        levels.append(lv)
    levels = np.asarray(levels)
    if math.isinf(tau):
        return float(levels.max())
    return float(np.sum(levels**tau) ** (1 / tau))


# --------------------------------------------------------------------------
# remaining variants


def _lorentz_norm(spec: Lorentz, g: SampledField) -> float:
    a = np.abs(g.values)
    v = np.sort(a, kind="stable")[::-1]
    v = v[v > 0]
    if v.size == 0:
        return 0.0
    t = np.arange(v.size + 1) * g.grid.cell_volume
    e = spec.tau / spec.r
    # int_{t_{i-1}}^{t_i} s^{tau/r - 1} ds, exact on each rearrangement step
    w = (t[1:] ** e - t[:-1] ** e) / e
    return float(np.sum(v**spec.tau * w) ** (1 / spec.tau))


def _mixed_norm(spec: MixedNorm, g: SampledField) -> float:
    spec.validate(g.grid.dim)
    h = g.grid.spacing
    a = np.abs(g.nd)
    for r in spec.r:
        a = (np.sum(a**r, axis=0) * h) ** (1 / r)
    return float(a)


def _herz_norm(spec: HerzLocal, g: SampledField) -> float:
    n = g.grid.dim
    spec.validate(n)
    c = np.zeros(n) if spec.center is None else np.asarray(spec.center)
    d = np.linalg.norm(g.grid.points() - c, axis=-1)
    a = np.abs(g.values) ** spec.p * g.grid.cell_volume
    keep = a > 0
    if not np.any(keep):
        return 0.0
    d = np.maximum(d[keep], np.finfo(float).tiny)
    # annulus 2^{k-1} <= d < 2^k
    k = np.floor(np.log2(d)).astype(int) + 1
    ks, inv = np.unique(k, return_inverse=True)
    mass = np.bincount(inv, weights=a[keep])
    terms = (2.0 ** (ks * spec.a)) ** spec.r * mass ** (spec.r / spec.p)
    return float(np.sum(terms) ** (1 / spec.r))


def _ball_stencil(grid: GridSpec, t: float) -> np.ndarray:
    h = grid.spacing
    P = int(math.ceil(t / h))
    rng = np.arange(-P, P + 1)
    off = np.stack([m.ravel() for m in np.meshgrid(*([rng] * grid.dim), indexing="ij")], axis=-1)
    return off[np.linalg.norm(off * h, axis=-1) < t]


def _orlicz_slice_norm(spec: OrliczSlice, g: SampledField) -> float:
    grid = g.grid
    n, h = grid.dim, grid.spacing
    off = _ball_stencil(grid, spec.t)
    if off.size == 0:
        raise ValueError("slice radius smaller than half a grid cell")
    P = int(np.abs(off).max())
    dv = grid.cell_volume
    padded = np.pad(np.abs(g.nd), P)
    shape = padded.shape
    # every padded cell whose ball meets the data, gathered through the stencil
    flat = padded.ravel()
    strides = np.array([int(np.prod(shape[i + 1:])) for i in range(n)])
    # x ranges over the box enlarged by t, i.e. the whole padded grid
    all_idx = np.arange(flat.size)
    coords = np.stack(np.unravel_index(all_idx, shape), axis=-1)
    nb = coords[None, :, :] + off[:, None, :]
    valid = np.all((nb >= 0) & (nb < np.array(shape)), axis=-1)
    gathered = np.zeros((len(off), flat.size))
    idx = nb @ strides
    gathered[valid] = flat[np.where(valid, idx, 0)][valid]
    gathered = gathered.T
    rows = np.nonzero(gathered.max(axis=1) > 0)[0]
    if rows.size == 0:
        return 0.0
    G = gathered[rows]
    phi = spec.phi

    def modular(lam, ridx):
        return np.sum(phi(G[ridx.astype(int)] / lam[..., None]), axis=-1) * dv

    lam = _luxemburg(modular, G.max(axis=1), args=(np.arange(len(rows), dtype=float),))
    # ||1_B||_Phi on the same discrete ball: Phi(1/lam) |B| = 1
    ball = len(off) * dv

    def mod_ball(lam):
        return phi(1.0 / lam) * ball

    ind = float(_luxemburg(mod_ball, np.array(1.0)))
    ratio = lam / ind
    return float((np.sum(ratio**spec.r) * dv) ** (1 / spec.r))


def space_norm(spec: SpaceSpec, g: SampledField) -> float:
    """``||g||_X`` for the variant ``spec`` (see the module docstring for conventions)."""
    if g.values.size == 0:
        raise ValueError("empty field")
    spec.validate(g.grid.dim)
    a = np.abs(g.values)
    dv = g.grid.cell_volume
    if isinstance(spec, Lebesgue):
        return float((np.sum(a**spec.p) * dv) ** (1 / spec.p))
    if isinstance(spec, WeightedLebesgue):
        w = spec.weight.cell_masses(g.grid)
        return float(np.sum(a**spec.p * w) ** (1 / spec.p))
    if isinstance(spec, Lorentz):
        return _lorentz_norm(spec, g)
    if isinstance(spec, VariableLebesgue):
        return _variable_norm(spec.exponent, g)
    if isinstance(spec, MixedNorm):
        return _mixed_norm(spec, g)
    if isinstance(spec, Orlicz):
        return _orlicz_norm(spec.phi, a, dv)
    if isinstance(spec, (Morrey, BourgainMorrey, BesovBourgainMorrey)):
        return _morrey_norm(spec, g)
    if isinstance(spec, HerzLocal):
        return _herz_norm(spec, g)
    if isinstance(spec, OrliczSlice):
        return _orlicz_slice_norm(spec, g)
    raise TypeError(f"unsupported space {spec!r}")


def convexified_norm(spec: SpaceSpec, q: float, g: SampledField) -> float:
    """``|| |g|^q ||_X^{1/q}``, the norm of the convexification ``X^q``."""
    if not q > 0:
        raise ValueError("q must be positive")
    if q == 1:
        return space_norm(spec, g)
    val = space_norm(spec, SampledField(g.grid, np.abs(g.values) ** q))
    return val ** (1.0 / q)


def lattice_check(spec: SpaceSpec, g1: SampledField, g2: SampledField) -> bool:
    """True iff ``||g1||_X <= ||g2||_X (1 + 1e-9)``; requires ``|g1| <= |g2|``."""
    if g1.grid != g2.grid:
        raise ValueError("fields live on different grids")
    if np.any(np.abs(g1.values) > np.abs(g2.values)):
        raise ValueError("precondition |g1| <= |g2| violated")
    return space_norm(spec, g1) <= space_norm(spec, g2) * (1 + 1e-9)


def truncation_report(spec: SpaceSpec, g: SampledField, extra_levels: int = 2) -> dict:
    """Norm on the configured dyadic window and on a window widened by ``extra_levels``.

    Only meaningful for the Morrey family; other variants report zero change.
    """
    base = space_norm(spec, g)
    if not isinstance(spec, (Morrey, BourgainMorrey, BesovBourgainMorrey)):
        return {"norm": base, "widened": base, "relative_change": 0.0}
    d = spec.to_dict()
    d["j_min"] -= extra_levels
    d["j_max"] += extra_levels
    wide = space_norm(space_from_dict(d), g)
    rel = abs(wide - base) / wide if wide else 0.0
    return {"norm": base, "widened": wide, "relative_change": rel}
