"""Flat-torus geometry: periodic distance, the capped distance d_plus, and balls.

The torus is [0, L_1) x ... x [0, L_N) with nearest-image (wrapped) metric,
N in {2, 3}, rectangular only.  All quadrature is the node-weight rule
dV = prod(h_i), which is spectrally accurate for periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GLInputError


def _bump(x):
    """C-infinity step: 0 at x<=0, 1 at x>=1, symmetric about 1/2."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    mid = ~(lo | hi)
    out[lo] = 0.0
    out[hi] = 1.0
    xm = x[mid]
    expo = 1.0 / xm - 1.0 / (1.0 - xm)
    out[mid] = 1.0 / (1.0 + np.exp(np.clip(expo, -700.0, 700.0)))
    return out


def _bump_d1(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    p = _bump(xm)
    out[mid] = p * (1.0 - p) * (1.0 / xm**2 + 1.0 / (1.0 - xm) ** 2)
    return out


class CapFunction:
    """Cap profile f for the capped distance d_plus = inj * f(d / inj).

    Piecewise in s = d/inj: identity on [0, 1/2], a smooth rise of f' from 1
    to PLATEAU, a plateau, and a smooth fall of f' to 0 at s = 1, constant 1
    beyond.  Widths are fixed so that the integral of f' over [1/2, 1] is
    exactly 1/2 (hence f(1) = 1).  The plateau 4/3 keeps sup|f'| < sqrt(2).
    """

    PLATEAU = 4.0 / 3.0
    RISE = 0.10          # width of the f' rise, in s-units
    S_LO = 0.5
    S_HI = 1.0

    def __init__(self, table_size: int = 65537):
        m = self.PLATEAU
        self.fall = (m - 1.0) * (1.0 - self.RISE) / m
        self.s_rise_end = self.S_LO + self.RISE
        self.s_fall_start = self.S_HI - self.fall
        if self.s_fall_start < self.s_rise_end:
            raise GLInputError("cap profile: rise and fall overlap")
        # dense cumulative table of f on [1/2, 1]; f is closed-form outside
        s = np.linspace(self.S_LO, self.S_HI, table_size)
        fp = self.derivative(s)
        df = np.concatenate([[0.0], np.cumsum((fp[1:] + fp[:-1]) * 0.5 * np.diff(s))])
        self._table_s = s
        self._table_f = self.S_LO + df
        # trapezoid drift would break f(1)=1; rescale the tabulated increment
        self._table_f = self.S_LO + df * (0.5 / df[-1])

    def derivative(self, s):
        """f'(s), closed form."""
        s = np.asarray(s, dtype=float)
        m = self.PLATEAU
        out = np.zeros_like(s)
        out[s <= self.S_LO] = 1.0
        rise = (s > self.S_LO) & (s < self.s_rise_end)
        out[rise] = 1.0 + (m - 1.0) * _bump((s[rise] - self.S_LO) / self.RISE)
        plat = (s >= self.s_rise_end) & (s <= self.s_fall_start)
        out[plat] = m
        fall = (s > self.s_fall_start) & (s < self.S_HI)
        out[fall] = m * (1.0 - _bump((s[fall] - self.s_fall_start) / self.fall))
        return out

    def second_derivative(self, s):
        """f''(s), closed form."""
        s = np.asarray(s, dtype=float)
        m = self.PLATEAU
        out = np.zeros_like(s)
        rise = (s > self.S_LO) & (s < self.s_rise_end)
        out[rise] = (m - 1.0) / self.RISE * _bump_d1((s[rise] - self.S_LO) / self.RISE)
        fall = (s > self.s_fall_start) & (s < self.S_HI)
        out[fall] = -m / self.fall * _bump_d1((s[fall] - self.s_fall_start) / self.fall)
        return out

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s >= self.S_HI, 1.0, np.minimum(s, self.S_LO))
        mid = (s > self.S_LO) & (s < self.S_HI)
        if np.any(mid):
            out = np.where(mid, np.interp(s, self._table_s, self._table_f), out)
        return out if out.ndim else float(out)

    @property
    def sup_derivative(self) -> float:
        return self.PLATEAU

    @property
    def lipschitz_bound(self) -> float:
        """C_f = max(1, sup|f'|^2), the comparison-inequality constant."""
        return max(1.0, self.PLATEAU**2)


@dataclass(frozen=True)
class TorusGeometry:
    """Flat torus T^N, N in {2,3}: side lengths, grid, metric constants.

    Immutable after construction; safe for concurrent reads.
    """

    side_lengths: tuple
    grid_sizes: tuple
    cap: CapFunction = field(default_factory=CapFunction, repr=False, compare=False)

    def __post_init__(self):
        L = tuple(float(v) for v in self.side_lengths)
        n = tuple(int(v) for v in self.grid_sizes)
        if len(L) not in (2, 3) or len(n) != len(L):
            raise GLInputError(f"need 2 or 3 matching side/grid entries, got {L}, {n}")
        if any(v <= 0 for v in L):
            raise GLInputError("side lengths must be positive")
        if any(v < 8 or v % 2 for v in n):
            raise GLInputError("grid sizes must be even and >= 8")
        object.__setattr__(self, "side_lengths", L)
        object.__setattr__(self, "grid_sizes", n)

    @property
    def dim(self) -> int:
        return len(self.side_lengths)

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.side_lengths, self.grid_sizes))

    @property
    def inj(self) -> float:
        return min(self.side_lengths) / 2.0

    @property
    def diam(self) -> float:
        return 0.5 * float(np.sqrt(sum(L**2 for L in self.side_lengths)))

    @property
    def c_star(self) -> float:
        return self.inj / self.diam

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, i: int) -> np.ndarray:
        L, n = self.side_lengths[i], self.grid_sizes[i]
        return np.arange(n) * (L / n)

    def meshes(self):
        """Coordinate grids, indexing='ij'."""
        return np.meshgrid(*[self.axis_coords(i) for i in range(self.dim)], indexing="ij")

    def wavenumbers(self):
        """Angular wavenumber grids k_i = 2*pi*freq_i / L_i (ij indexing)."""
        ks = [2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
              for L, n in zip(self.side_lengths, self.grid_sizes)]
        return np.meshgrid(*ks, indexing="ij")

    def wrap_delta(self, delta, axis: int):
        """Map a coordinate difference to the nearest image, in [-L/2, L/2)."""
        L = self.side_lengths[axis]
        return (np.asarray(delta) + 0.5 * L) % L - 0.5 * L

    def displacement_grids(self, center):
        """Per-axis wrapped displacements (node - center) on the full grid."""
        center = _check_point(self, center)
        outs = []
        for i in range(self.dim):
            d1 = self.wrap_delta(self.axis_coords(i) - center[i], i)
            shape = [1] * self.dim
            shape[i] = -1
            outs.append(np.broadcast_to(d1.reshape(shape), self.grid_sizes).copy())
        return outs

    def distance_grid(self, center) -> np.ndarray:
        w = self.displacement_grids(center)
        return np.sqrt(sum(wi**2 for wi in w))


def _check_point(geom: TorusGeometry, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != geom.dim:
        raise GLInputError(f"point has {x.size} coordinates, torus is {geom.dim}-dimensional")
    return x


def torus_distance(geom: TorusGeometry, x, y) -> float:
    """Geodesic (nearest-image) distance between two points."""
    x = _check_point(geom, x)
    y = _check_point(geom, y)
    w = [geom.wrap_delta(x[i] - y[i], i) for i in range(geom.dim)]
    return float(np.sqrt(sum(wi**2 for wi in w)))


def d_plus(geom: TorusGeometry, x, y, cap: CapFunction | None = None) -> float:
    """Capped distance inj * f(d/inj); globally smooth across the cut locus."""
    cap = cap or geom.cap
    d = torus_distance(geom, x, y)
    val = geom.inj * float(cap(d / geom.inj))
    if __debug__ and d > 0:
        assert geom.c_star * d - 1e-12 <= val <= 2.0 * d + 1e-12, (d, val)
    return val


def d_plus_grid(geom: TorusGeometry, center, cap: CapFunction | None = None) -> np.ndarray:
    cap = cap or geom.cap
    d = geom.distance_grid(center)
    return geom.inj * cap(d / geom.inj)


def ball_mask(geom: TorusGeometry, center, radius: float) -> np.ndarray:
    """Boolean grid of nodes with torus_distance(node, center) < radius."""
    if radius < 0:
        raise GLInputError("radius must be >= 0")
    return geom.distance_grid(center) < radius
