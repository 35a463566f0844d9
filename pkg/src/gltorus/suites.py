"""Prebuilt experiment suites: the clearing-out ladder and the straight-line
density scan.  Both keep all preconditions honest across an eps ladder by
scaling the vortex torus with eps (side = grid * eps / 2, so h = eps/2 and
R = 8 eps stays well inside the injectivity radius), while the wave branch
uses a fixed torus so its probes isolate the 1/|log eps| trend.
"""

from __future__ import annotations

import logging

import numpy as np

from .dynamics import IntegratorConfig, PhaseWave, VortexLines, evolve, make_initial
from .geometry import TorusGeometry
from .vortex import clearing_out_experiment

log = logging.getLogger(__name__)


def line_geometry(eps: float, grid_n: int, side_over_eps: float | None = None) -> TorusGeometry:
    """Cubic torus scaled with eps; default h = eps/2 (the coarsest resolved
    grid), smaller side_over_eps packs the lines more densely."""
    side_over_eps = grid_n / 2.0 if side_over_eps is None else side_over_eps
    side = side_over_eps * eps
    if side / grid_n > eps / 2.0 + 1e-12:
        raise ValueError("side_over_eps too large: cores under-resolved")
    return TorusGeometry((side,) * 3, (grid_n,) * 3)


def make_line_trajectory(eps: float, grid_n: int, t_end: float,
                         stride: int = 16, dt_factor: float = 0.2,
                         side_over_eps: float | None = None):
    geom = line_geometry(eps, grid_n, side_over_eps)
    L = geom.side_lengths[0]
    # checkerboard quadrupole: no net winding along any cycle, and the
    # 4-fold symmetry cancels the pair attraction, so the lines stay put
    spec = VortexLines((((0.25 * L, 0.25 * L), 1), ((0.75 * L, 0.25 * L), -1),
                        ((0.25 * L, 0.75 * L), -1), ((0.75 * L, 0.75 * L), 1)), axis=2)
    fld = make_initial(geom, eps, spec)
    return evolve(fld, IntegratorConfig(dt_factor, t_end, stride)), geom


def clearing_out_suite(ladder, sigmas, grid_n: int = 96, wave_side: float = 4.0,
                       wave_T: float = 0.05, wave_R: float = 0.2,
                       r_scale: float = 8.0, line_side_over_eps: float = 36.0) -> dict:
    """Clearing-out scatter: wave data on a fixed torus, planted vortex lines
    on eps-scaled tori, probes at R = r_scale * eps on the line branch."""
    wave_geom = TorusGeometry((wave_side,) * 3, (grid_n,) * 3)

    def make_wave(eps):
        fld = make_initial(wave_geom, eps, PhaseWave((1, 0, 0)))
        steps_between = max(int(round(wave_T / (0.2 * eps**2) / 8)), 1)
        return evolve(fld, IntegratorConfig(0.2, wave_T, steps_between))

    line_cache = {}

    def make_line(eps):
        t_end = (r_scale * eps) ** 2
        traj, geom = make_line_trajectory(eps, grid_n, t_end,
                                          side_over_eps=line_side_over_eps)
        line_cache[eps] = geom
        return traj

    def probes(eps):
        geom = line_cache[eps]
        L = geom.side_lengths[0]
        on_core = [(0.25 * L, 0.25 * L, 0.2 * L), (0.75 * L, 0.25 * L, 0.7 * L),
                   (0.25 * L, 0.75 * L, 0.35 * L), (0.75 * L, 0.75 * L, 0.85 * L)]
        far = [(0.5 * L, 0.5 * L, 0.5 * L), (0.0, 0.0, 0.1 * L),
               (0.0, 0.5 * L, 0.6 * L), (0.5 * L, 0.0, 0.9 * L)]
        return on_core, far

    wave_points = [(0.31 * wave_side, 0.5 * wave_side, 0.5 * wave_side),
                   (0.62 * wave_side, 0.17 * wave_side, 0.83 * wave_side),
                   (0.11 * wave_side, 0.71 * wave_side, 0.29 * wave_side),
                   (0.47 * wave_side, 0.93 * wave_side, 0.61 * wave_side),
                   (0.05 * wave_side, 0.05 * wave_side, 0.05 * wave_side),
                   (0.79 * wave_side, 0.41 * wave_side, 0.23 * wave_side),
                   (0.55 * wave_side, 0.67 * wave_side, 0.12 * wave_side),
                   (0.91 * wave_side, 0.28 * wave_side, 0.77 * wave_side)]
    return clearing_out_experiment(make_wave, make_line, probes, sigmas, ladder,
                                   (wave_points, wave_R, wave_T), r_scale=r_scale)


def line_density_suite(eps: float = 0.025, grid_n: int = 192, relax_time=None,
                       radii=None) -> dict:
    """Straight-line density plateau: theta(r) about a point on a relaxed line."""
    relax_time = 20.0 * eps**2 if relax_time is None else relax_time
    traj, geom = make_line_trajectory(eps, grid_n, relax_time, stride=64)
    L = geom.side_lengths[0]
    if radii is None:
        lo, hi = 8.0 * eps, geom.inj / 4.0
        radii = np.linspace(lo, max(hi, lo * 1.25), 6)
    from .energy import energy_density
    from .vortex import density_scan

    snap = traj.snapshots[-1]
    led = energy_density(snap)
    on_line = density_scan(led, (0.25 * L, 0.25 * L, 0.37 * L), radii)
    far_point = (0.5 * L, 0.5 * L, 0.37 * L)
    far = density_scan(led, far_point, radii)
    return {"geom": geom, "on_line": on_line, "far": far, "eps": eps,
            "window": (8.0 * eps, geom.inj / 4.0)}


def line_weighted_oracle(eps: float, R: float, n_quad: int = 4000) -> float:
    """Single straight line: weighted energy R^2 int e K for the planted core,
    by radial quadrature with the Gaussian weight at scale tau = R^2."""
    s = np.linspace(1e-6 * eps, 12.0 * R, n_quad)
    rho = s / np.sqrt(s**2 + 2.0 * eps**2)
    drho = 2.0 * eps**2 / (s**2 + 2.0 * eps**2) ** 1.5
    e = 0.5 * drho**2 + rho**2 / (2.0 * s**2) + (1.0 - rho**2) ** 2 / (4.0 * eps**2)
    tau = R**2
    radial = float(np.trapezoid(e * np.exp(-(s**2) / (4.0 * tau)) * 2.0 * np.pi * s, s))
    # z-factor: the kernel's axial Gaussian integrates to one on a long line
    return R**2 * radial / (4.0 * np.pi * tau)


def line_theta_oracle(eps: float, r: float, n_quad: int = 4000) -> float:
    """Independent oracle for theta(r) on a straight unit-degree line.

    Radial quadrature of the planted core profile rho(s) = s/sqrt(s^2+2eps^2):
    per-unit-length tube energy E(rho_max) = 2 pi int_0^rho_max e(s) s ds with
    e = rho'^2/2 + rho^2/(2 s^2) + (1-rho^2)^2/(4 eps^2), then the ball-chord
    integral mu(B_r) = int_{-r}^{r} E(sqrt(r^2-z^2)) dz, normalized by
    omega_1 r |log eps|.
    """
    s = np.linspace(1e-6 * eps, r, n_quad)
    rho = s / np.sqrt(s**2 + 2.0 * eps**2)
    drho = 2.0 * eps**2 / (s**2 + 2.0 * eps**2) ** 1.5
    e = 0.5 * drho**2 + rho**2 / (2.0 * s**2) + (1.0 - rho**2) ** 2 / (4.0 * eps**2)
    cumulative = 2.0 * np.pi * np.concatenate(
        [[0.0], np.cumsum(0.5 * (e[1:] * s[1:] + e[:-1] * s[:-1]) * np.diff(s))])
    z = np.linspace(-r, r, n_quad)
    tube_r = np.sqrt(np.maximum(r**2 - z**2, 0.0))
    tube_E = np.interp(tube_r, s, cumulative)
    ball_mass = float(np.trapezoid(tube_E, z))
    return ball_mass / (2.0 * r * abs(np.log(eps)))
