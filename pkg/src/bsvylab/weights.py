"""Muckenhoupt weights: catalog, cube masses, A_p constants and critical indices.

The sup over all cubes in the A_p condition is replaced by a finite
:class:`CubeFamily`; every constant reported here is therefore a lower bound
for the true ``[w]_{A_p}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Cube",
    "WeightSpec",
    "CubeFamily",
    "default_family",
    "ap_quotient",
    "ap_constant",
    "doubling_check",
    "critical_index",
    "CriticalIndexResult",
]

_QUAD_POINTS = 32


@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube ``corner + [0, edge)^n``."""

    corner: tuple
    edge: float

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(float(c) for c in np.atleast_1d(self.corner)))
        if not self.edge > 0:
            raise ValueError("edge must be positive")

    @classmethod
    def centered(cls, center, edge: float) -> "Cube":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(tuple(c - edge / 2), edge)

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.edge**self.dim

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.corner) + self.edge / 2

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.corner) + self.edge

    def contains_cube(self, other: "Cube", tol: float = 1e-12) -> bool:
        lo, hi = np.asarray(self.corner), self.upper
        olo, ohi = np.asarray(other.corner), other.upper
        return bool(np.all(olo >= lo - tol) and np.all(ohi <= hi + tol))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.corner), self.upper
        return np.all((x >= lo) & (x < hi), axis=-1)

    def distance_range(self, point) -> tuple[float, float]:
        """Smallest and largest Euclidean distance from ``point`` to the closed cube."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        lo, hi = np.asarray(self.corner), self.upper
        near = np.clip(p, lo, hi) - p
        far = np.maximum(np.abs(p - lo), np.abs(p - hi))
        return float(np.linalg.norm(near)), float(np.linalg.norm(far))

    def scaled(self, factor: float) -> "Cube":
        return Cube(tuple(np.asarray(self.corner) * factor), self.edge * factor)

    def quadrature(self, points: int = _QUAD_POINTS) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint nodes and weights on the cube."""
        step = self.edge / points
        ax = (np.arange(points) + 0.5) * step
        mesh = np.meshgrid(*[c + ax for c in self.corner], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return pts, np.full(len(pts), step**self.dim)


def _power_primitive(t: np.ndarray, a: float) -> np.ndarray:
    """``int_0^t s^a ds`` for ``t >= 0``; infinite when ``a <= -1`` and ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if a > -1:
        return t ** (a + 1) / (a + 1)
    return np.where(t > 0, np.inf, 0.0)


def _power_mass_1d(lo: float, hi: float, a: float) -> float:
    """``int_lo^hi |x|^a dx`` in closed form."""
    if lo < 0 < hi:
        return _power_mass_1d(0.0, -lo, a) + _power_mass_1d(0.0, hi, a)
    if hi <= 0:
        lo, hi = -hi, -lo
    if hi <= lo:
        return 0.0
    b = a + 1.0
    if lo == 0.0:
        return hi**b / b if b > 0 else math.inf
    # hi^b (1 - (lo/hi)^b) / b, stable as b -> 0 where it tends to log(hi/lo)
    with np.errstate(over="ignore"):
        t = b * math.log(lo / hi)
        if b == 0.0:
            return math.log(hi / lo)
        return float(np.float64(hi) ** b * -np.expm1(t) / b)


@dataclass(frozen=True)
class WeightSpec:
    """A weight from the catalog: ``constant``, ``power`` or ``shifted_power``.

    ``power`` is ``|x|^a``; ``shifted_power`` is ``|x - x0|^a``; ``constant`` is ``c``.
    """

    kind: str = "constant"
    a: float = 0.0
    c: float = 1.0
    x0: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "power", "shifted_power"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "constant" and not self.c > 0:
            raise ValueError("constant weight must be positive")
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightSpec":
        return cls("constant", c=c)

    @classmethod
    def power(cls, a: float) -> "WeightSpec":
        return cls("power", a=a)

    @classmethod
    def shifted_power(cls, a: float, x0) -> "WeightSpec":
        return cls("shifted_power", a=a, x0=x0)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["c"] = self.c
        else:
            out["a"] = self.a
        if self.kind == "shifted_power":
            out["x0"] = list(self.x0)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        d = dict(d)
        kind = d.pop("kind", "constant")
        if "x0" in d:
            d["x0"] = tuple(d["x0"])
        return cls(kind, **d)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.a == 0.0

    def singular_point(self, dim: int) -> np.ndarray:
        if self.kind == "shifted_power":
            if len(self.x0) != dim:
                raise ValueError("x0 dimension mismatch")
            return np.asarray(self.x0)
        return np.zeros(dim)

    def _scale(self) -> float:
        return self.c if self.kind == "constant" else 1.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or (x.ndim == 1 and self.x0 is not None and len(self.x0) == 1):
            x = x[..., None]
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.c)
        r = np.linalg.norm(x - self.singular_point(x.shape[-1]), axis=-1)
        with np.errstate(divide="ignore"):
            return r**self.a

    def dual(self, p: float) -> "WeightSpec":
        """``w^{1 - p'}``, again a catalog weight."""
        if p <= 1:
            raise ValueError("dual weight needs p > 1")
        e = 1.0 - p / (p - 1.0)
        if self.kind == "constant":
            return WeightSpec.constant(self.c**e)
        return WeightSpec(self.kind, a=self.a * e, x0=self.x0)

    def mass(self, cube: Cube) -> float:
        """``w(Q) = int_Q w``: closed form for constants and 1-d power weights."""
        n = cube.dim
        if self.is_constant:
            return self._scale() * cube.volume
        x0 = self.singular_point(n)
        if n == 1:
            lo = cube.corner[0] - x0[0]
            return _power_mass_1d(lo, lo + cube.edge, self.a)
        dmin, _ = cube.distance_range(x0)
        if self.a <= -n and dmin == 0.0:
            return math.inf
        pts, w = cube.quadrature()
        return float(np.sum(w * self(pts)))

    def cube_masses(self, corners: np.ndarray, edges: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`mass` over cubes given by ``corners (m, n)`` and ``edges (m,)``."""
        corners = np.asarray(corners, dtype=float)
        edges = np.asarray(edges, dtype=float)
        n = corners.shape[1]
        if self.is_constant:
            return self._scale() * edges**n
        if n == 1 and self.a > -1:
            b = self.a + 1.0
            lo = corners[:, 0] - self.singular_point(1)[0]
            hi = lo + edges

            def prim(t):
                return np.sign(t) * np.abs(t) ** b / b

            return prim(hi) - prim(lo)
        return np.array([self.mass(Cube(tuple(c), e)) for c, e in zip(corners, edges)])

    def ess_inf(self, cube: Cube) -> float:
        """Essential infimum over the cube from the closed-form distance range."""
        if self.is_constant:
            return self._scale()
        dmin, dmax = cube.distance_range(self.singular_point(cube.dim))
        if self.a < 0:
            return dmax**self.a
        return dmin**self.a

    def cell_masses(self, grid) -> np.ndarray:
        """``w`` integrated over every cell of a :class:`~bsvylab.field.GridSpec`."""
        if self.is_constant:
            return np.full(grid.size, self._scale() * grid.cell_volume)
        x0 = self.singular_point(grid.dim)
        h = grid.spacing
        if grid.dim == 1:
            edges = -grid.half_width + np.arange(grid.points_per_axis + 1) * h - x0[0]
            return np.array([_power_mass_1d(a, b, self.a) for a, b in zip(edges[:-1], edges[1:])])
        # 4^n midpoint sub-cells per cell
        sub = 4
        offs = (np.arange(sub) + 0.5) / sub * h - h / 2
        mesh = np.meshgrid(*([offs] * grid.dim), indexing="ij")
        offs = np.stack([m.ravel() for m in mesh], axis=-1)
        pts = grid.points()
        vals = self(pts[:, None, :] + offs[None, :, :])
        return vals.mean(axis=1) * grid.cell_volume


@dataclass(frozen=True)
class CubeFamily:
    """Finite list of cubes standing in for the sup over all cubes."""

    cubes: tuple

    def __post_init__(self):
        if len(self.cubes) == 0:
            raise ValueError("cube family must be non-empty")
        object.__setattr__(self, "cubes", tuple(self.cubes))

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self):
        return len(self.cubes)

    def union(self, other: "CubeFamily") -> "CubeFamily":
        return CubeFamily(self.cubes + tuple(c for c in other.cubes if c not in set(self.cubes)))


def default_family(dim: int = 1, singular_point=None, levels: Iterable[int] = range(-10, 5),
                   depth: int = 40, box_half_width: float = 64.0) -> CubeFamily:
    """Dyadic cubes near the singular point plus translates accumulating at it.

    For each level ``j`` the standard dyadic cubes within two edge lengths of
    the singular point, whose closure avoids it, are kept (a power weight that
    fails A_p then shows up as growth with ``depth`` rather than as ``inf``). For each edge ``e = 2^j`` with ``j`` in
    ``[-4, 2]`` the cubes ``x0 + delta_i (1, ..., 1) + [0, e)^n`` with
    ``delta_i = e 2^{-i}``, ``i = 1..depth``, approach ``x0`` geometrically.
    """
    x0 = np.zeros(dim) if singular_point is None else np.atleast_1d(np.asarray(singular_point, float))
    cubes = []
    for j in levels:
        e = 2.0**j
        base = np.floor(x0 / e).astype(int)
        rng = range(-2, 2)
        for off in np.array(np.meshgrid(*([list(rng)] * dim), indexing="ij")).reshape(dim, -1).T:
            corner = (base + off) * e
            cube = Cube(tuple(corner), e)
            inside = np.all(np.abs(corner) <= box_half_width) and np.all(np.abs(corner + e) <= box_half_width)
            if inside and cube.distance_range(x0)[0] > 0:
                cubes.append(cube)
    for j in range(-4, 3):
        e = 2.0**j
        for i in range(1, depth + 1):
            d = e * 2.0**-i
            cubes.append(Cube(tuple(x0 + d), e))
            left = x0 - d - e
            # once d is below the rounding of e, the left cube would touch x0
            if np.all(left + e < x0):
                cubes.append(Cube(tuple(left), e))
    return CubeFamily(tuple(dict.fromkeys(cubes)))


def ap_quotient(w: WeightSpec, p: float, cube: Cube) -> float:
    """The A_p quotient of one cube (``p = 1`` uses the closed-form ess inf)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    vol = cube.volume
    m = w.mass(cube)
    if not (m > 0 and math.isfinite(m)):
        raise ValueError(f"weight mass on {cube} is {m}")
    if p == 1:
        inf = w.ess_inf(cube)
        return math.inf if inf == 0 else (m / vol) / inf
    dm = w.dual(p).mass(cube)
    if not math.isfinite(dm):
        return math.inf
    with np.errstate(over="ignore"):
        return float((m / vol) * (dm / vol) ** (p - 1))


def ap_constant(w: WeightSpec, p: float, family: CubeFamily) -> float:
    """Estimate (lower bound) of ``[w]_{A_p}``: max of the quotient over ``family``."""
    best = 0.0
    for cube in family:
        best = max(best, ap_quotient(w, p, cube))
    return best


def doubling_check(w: WeightSpec, p: float, Q: Cube, S: Cube, ap_est: float) -> bool:
    """``w(S) <= [w]_{A_p} (|S|/|Q|)^p w(Q)`` for ``Q`` inside ``S``."""
    if not S.contains_cube(Q):
        raise ValueError("Q must be contained in S")
    return w.mass(S) <= ap_est * (S.volume / Q.volume) ** p * w.mass(Q) * (1 + 1e-9)


@dataclass
class CriticalIndexResult:
    index: float
    estimates: dict


def critical_index(w: WeightSpec, r_grid: Sequence[float], dim: int = 1,
                   depths: Sequence[int] = (64, 128, 256), tol: float = 0.05) -> CriticalIndexResult:
    """Smallest ``r`` on the grid whose A_r estimate is stable under refinement.

    The family is refined by deepening the accumulation at the singular point;
    ``r`` counts as admissible when successive refinements move the estimate by
    less than ``tol`` (relative). Returns ``inf`` when no grid value qualifies.
    """
    r_grid = np.round(np.asarray(r_grid, dtype=float), 12)
    if r_grid[0] > 1 or r_grid[-1] < 4:
        raise ValueError("r_grid must span at least [1, 4]")
    fams = [default_family(dim, w.singular_point(dim) if w.kind == "shifted_power" else None,
                           depth=d) for d in depths]
    table = {}
    found = math.inf
    for r in r_grid:
        try:
            ests = [ap_constant(w, float(r), f) for f in fams]
        except ValueError:
            ests = [math.inf] * len(fams)
        table[float(r)] = ests
        stable = all(math.isfinite(e) for e in ests) and all(
            abs(b - a) <= tol * a for a, b in zip(ests[:-1], ests[1:]))
        if stable and found == math.inf:
            found = float(r)
    return CriticalIndexResult(found, table)
