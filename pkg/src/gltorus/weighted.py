"""Approximate heat kernel, weighted energy Z(R), the error integrands, and
the monotonicity, time-integrated, comparison, and localization checks.

The kernel K(x, tau; y) = (4 pi tau)^(-N/2) exp(-d_plus(x,y)^2 / (4 tau)) is
smooth on the whole torus because the cap flattens d_plus before the cut
locus.  Its derivatives are evaluated in closed form through the profile
(f, f', f''); on the flat bulk {d < inj/2} this makes the backward-heat
defect and the Hessian cancellation exact to rounding, which the error
integrands inherit.  Spectral and finite-difference variants are kept as
cross-check oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GLInputError
from .fields import ComplexField, pgl_rhs, spectral_gradient, spectral_laplacian
from .geometry import CapFunction, TorusGeometry
from .geometry import d_plus as _d_plus_point


@dataclass(frozen=True)
class KernelEval:
    """Approximate heat kernel about a center, with closed-form derivatives."""

    geom: TorusGeometry
    center: tuple
    tau: float
    values: np.ndarray = field(repr=False)
    dist: np.ndarray = field(repr=False)
    disp: tuple = field(repr=False)

    @property
    def cap(self) -> CapFunction:
        return self.geom.cap

    def _profile_terms(self):
        """g'(d), g''(d), g'(d)/d for r_plus = g(d) = inj^2 f(d/inj)^2 / 2."""
        inj = self.geom.inj
        s = self.dist / inj
        f = self.cap(s)
        fp = self.cap.derivative(s)
        fpp = self.cap.second_derivative(s)
        gp = inj * f * fp
        gpp = fp**2 + f * fpp
        with np.errstate(invalid="ignore", divide="ignore"):
            gp_over_d = np.where(self.dist > 0, gp / np.where(self.dist > 0, self.dist, 1.0), 1.0)
        return gp, gpp, gp_over_d

    def r_plus(self):
        dp = self.geom.inj * self.cap(self.dist / self.geom.inj)
        return 0.5 * dp**2

    def grad(self):
        """grad K = -K grad(r_plus) / (2 tau), componentwise grids."""
        gp, _, gpd = self._profile_terms()
        pref = -self.values / (2.0 * self.tau)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = [np.where(self.dist > 0, w / np.where(self.dist > 0, self.dist, 1.0), 0.0)
                    for w in self.disp]
        return [pref * gp * u for u in unit]

    def hessian(self):
        """Hess K as a dim x dim list of grids (symmetric)."""
        gp, gpp, gpd = self._profile_terms()
        K, tau, d = self.values, self.tau, self.dist
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = [np.where(d > 0, w / np.where(d > 0, d, 1.0), 0.0) for w in self.disp]
        dim = self.geom.dim
        out = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                uij = unit[i] * unit[j]
                hess_r = gpp * uij + gpd * ((1.0 if i == j else 0.0) - uij)
                grad_r_ij = gp**2 * uij
                hij = K * (grad_r_ij / (4.0 * tau**2) - hess_r / (2.0 * tau))
                out[i][j] = hij
                out[j][i] = hij
        return out

    def dtau(self):
        """Kernel-time derivative dK/dtau."""
        N = self.geom.dim
        return self.values * (-N / (2.0 * self.tau) + self.r_plus() / (2.0 * self.tau**2))

    def laplacian(self):
        gp, gpp, gpd = self._profile_terms()
        N = self.geom.dim
        lap_r = gpp + (N - 1) * gpd
        return self.values * (gp**2 / (4.0 * self.tau**2) - lap_r / (2.0 * self.tau))

    def heat_defect(self):
        """dK/dtau - Lap K; identically zero on {d < inj/2} (flat bulk)."""
        return self.dtau() - self.laplacian()

    def laplacian_spectral(self):
        return spectral_laplacian(self.geom, self.values)

    def mass(self) -> float:
        return float(np.sum(self.values)) * self.geom.cell_volume


def kernel(geom: TorusGeometry, y, tau: float) -> KernelEval:
    """K_ap(x, tau; y) on the grid."""
    if tau <= 0:
        raise GLInputError("kernel time tau must be positive")
    disp = tuple(geom.displacement_grids(y))
    dist = np.sqrt(sum(w**2 for w in disp))
    dp = geom.inj * geom.cap(dist / geom.inj)
    vals = (4.0 * np.pi * tau) ** (-geom.dim / 2.0) * np.exp(-(dp**2) / (4.0 * tau))
    return KernelEval(geom, tuple(float(v) for v in np.atleast_1d(y)), float(tau),
                      vals, dist, disp)


def kernel_mass_bound(geom: TorusGeometry, tau: float) -> float:
    """Computed upper bound for int K dvol: 1 + cap inflation."""
    return 1.0 + np.exp(-geom.inj**2 / (8.0 * tau)) * geom.volume / (4.0 * np.pi * tau) ** (geom.dim / 2.0)


# ---------------------------------------------------------------------------
# weighted energies

def weighted_energy(traj, z_star, R: float) -> float:
    """E~(z*, R) = R^2 int e(u(., t* - R^2)) K(., R^2; x*) dvol."""
    x_star, t_star = z_star
    if not 0 < R <= np.sqrt(t_star) + 1e-12:
        raise GLInputError(f"need 0 < R <= sqrt(t*); got R={R}, t*={t_star}")
    geom = traj.geom
    dens = traj.energy_density_at(t_star - R**2)
    K = kernel(geom, x_star, R**2)
    return float(R**2 * np.sum(dens * K.values) * geom.cell_volume)


def error_integrands(fld: ComplexField, z_T, t: float | None = None):
    """(Xi, Phi, Psi) grids for the monotonicity derivative at time t < T."""
    x_T, T = z_T
    t = fld.time if t is None else t
    if t >= T:
        raise GLInputError(f"error integrands need t < T; got t={t}, T={T}")
    tau = T - t
    geom = fld.geom
    K = kernel(geom, x_T, tau)
    grad_u = spectral_gradient(fld)
    dtu = pgl_rhs(fld)

    gradK = K.grad()
    inner = sum(grad_u[i] * gradK[i] for i in range(geom.dim))
    xi = tau * np.abs(dtu + inner / K.values) ** 2

    hess = K.hessian()
    hess_q = np.zeros(geom.grid_sizes)
    for i in range(geom.dim):
        for j in range(geom.dim):
            hess_q = hess_q + hess[i][j] * (grad_u[i] * np.conj(grad_u[j])).real
    grad_sq = sum(np.abs(g) ** 2 for g in grad_u)
    phi = tau * (hess_q - np.abs(inner) ** 2 / K.values) + 0.5 * grad_sq * K.values

    from .energy import energy_density

    dens = energy_density(fld, grad=grad_u).density
    psi = tau * dens * K.heat_defect()
    return xi, phi, psi


def monotonicity_slope(traj, z_T, R: float) -> dict:
    """Z'(R) and its pieces: 2R * [int (V + Xi) K + int Psi + int Phi]."""
    x_T, T = z_T
    fld = traj.field_at(T - R**2)
    geom = traj.geom
    dv = geom.cell_volume
    xi, phi, psi = error_integrands(fld, z_T)
    K = kernel(geom, x_T, R**2)
    from .energy import potential_density

    pot = potential_density(fld)
    pot_int = float(np.sum(pot * K.values)) * dv
    xi_int = float(np.sum(xi * K.values)) * dv
    phi_int = float(np.sum(phi)) * dv
    psi_int = float(np.sum(psi)) * dv
    return {
        "zprime": 2.0 * R * (pot_int + xi_int + psi_int + phi_int),
        "xi_int": xi_int,
        "phi_int": phi_int,
        "psi_int": psi_int,
        "pot_int": pot_int,
    }


@dataclass
class MonotonicityLedger:
    """Z(R) scan about one space-time center, with reconstruction pieces."""

    center: tuple
    T: float
    radii: np.ndarray
    Z: np.ndarray
    zprime: np.ndarray
    xi_int: np.ndarray
    phi_int: np.ndarray
    psi_int: np.ndarray
    pot_int: np.ndarray
    monotone_ok: np.ndarray
    asserted: np.ndarray  # radii beyond ~inj are reported, not asserted
    E0: float
    tau_mono: float

    def violations(self):
        bad = ~self.monotone_ok & self.asserted
        return [float(r) for r in self.radii[bad]]

    def reconstruction_error(self):
        """Aggregate |sum Z' dR - (Z_max - Z_min)| / span, trapezoidal."""
        total = float(np.trapezoid(self.zprime, self.radii))
        span = self.Z[-1] - self.Z[0]
        return abs(total - span) / max(abs(span), 1e-300)


def monotonicity_scan(traj, z_T, radii, tau_mono: float = 1e-3) -> MonotonicityLedger:
    x_T, T = z_T
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii[0] <= 0 or radii[-1] > min(np.sqrt(T), 1.0) + 1e-12:
        raise GLInputError("radii must lie in (0, min(sqrt(T), 1)]")
    if np.any(np.diff(radii) <= 0):
        raise GLInputError("radii must be strictly increasing")
    E0 = traj.initial_energy()
    from .parallel import tmap

    Z = np.array(tmap(lambda R: weighted_energy(traj, z_T, R), radii))
    pieces = tmap(lambda R: monotonicity_slope(traj, z_T, R), radii)
    zprime = np.array([p["zprime"] for p in pieces])
    ok = np.ones(len(radii), dtype=bool)
    for i in range(1, len(radii)):
        slack = tau_mono * E0 * (radii[i] - radii[i - 1])
        ok[i] = Z[i] - Z[i - 1] >= -slack
    asserted = radii <= traj.geom.inj + 1e-12
    return MonotonicityLedger(
        center=tuple(np.atleast_1d(x_T)), T=T, radii=radii, Z=Z, zprime=zprime,
        xi_int=np.array([p["xi_int"] for p in pieces]),
        phi_int=np.array([p["phi_int"] for p in pieces]),
        psi_int=np.array([p["psi_int"] for p in pieces]),
        pot_int=np.array([p["pot_int"] for p in pieces]),
        monotone_ok=ok, asserted=asserted, E0=E0, tau_mono=tau_mono,
    )


def time_integrated_identity(traj, z_T) -> dict:
    """E~(z_T, sqrt(T)) against the time integral of (V + Xi)K + Psi + Phi."""
    x_T, T = z_T
    lhs = weighted_energy(traj, z_T, float(np.sqrt(T)))
    geom = traj.geom
    dv = geom.cell_volume
    times = [t for t in traj.times if t < T - 1e-14]
    vals = []
    for t in times:
        fld = traj.field_at(t)
        xi, phi, psi = error_integrands(fld, z_T, t=t)
        K = kernel(geom, x_T, T - t)
        from .energy import potential_density

        pot = potential_density(fld)
        vals.append(float(np.sum((pot + xi) * K.values + psi + phi)) * dv)
    # open right end: K is singular at t = T, integrand stays finite;
    # extend the last interior value across the final partial interval
    rhs = float(np.trapezoid(vals, times)) + vals[-1] * (T - times[-1])
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "rel_err": abs(lhs - rhs) / denom}


def comparison_inequality(traj, z_star, z_T) -> dict:
    """Weighted-energy comparison between two space-time centers."""
    x_star, t_star = z_star
    x_T, T = z_T
    if not 0 < t_star < T:
        raise GLInputError("need 0 < t* < T")
    geom = traj.geom
    N = geom.dim
    lhs = weighted_energy(traj, z_star, float(np.sqrt(t_star)))
    big = weighted_energy(traj, z_T, float(np.sqrt(T)))
    cf = geom.cap.lipschitz_bound
    dp = _d_plus_point(geom, x_T, x_star)
    factor = (T / t_star) ** (N / 2.0 - 1.0) * np.exp(cf * dp**2 / (T - t_star))
    rhs = factor * big
    return {
        "lhs": lhs,
        "rhs": rhs,
        "margin": rhs - lhs,
        "holds": bool(lhs <= rhs * (1.0 + 1e-9) + 1e-12),
    }


def localization_bound(traj, x_T, T: float, R: float, lam: float,
                       c1_hat: float, c2_hat: float) -> dict:
    """Ball-localization inequality with empirical constants (c1_hat, c2_hat)."""
    geom = traj.geom
    eps = traj.epsilon
    if not np.sqrt(2.0 * eps) < R < 1.0:
        raise GLInputError("need sqrt(2 eps) < R < 1")
    if lam <= 0:
        raise GLInputError("lambda must be positive")
    N = geom.dim
    dens = traj.energy_density_at(T)
    dv = geom.cell_volume
    from .geometry import ball_mask, d_plus_grid

    dp = d_plus_grid(geom, x_T)
    lhs = float(np.sum(dens * np.exp(-(dp**2) / (4.0 * R**2)))) * dv
    ball = float(np.sum(dens[ball_mask(geom, x_T, lam * R)])) * dv
    m0 = traj.initial_energy() / abs(np.log(eps))
    tail = m0 * np.exp(-geom.c_star**2 * lam**2 / 8.0) * (
        np.exp(c2_hat) * (2.0 * R**2 / (T + 2.0 * R**2)) ** ((N - 2) / 2.0)
        + c1_hat * (4.0 * np.pi) ** (N / 2.0) * (np.sqrt(2.0) * R) ** (N - 2) * np.sqrt(T)
    ) * abs(np.log(eps))
    rhs = ball + tail
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "holds": bool(lhs <= rhs + 1e-12)}


def fit_monotonicity_constants(ledger: MonotonicityLedger, c2_grid=None) -> dict:
    """Smallest empirical (C1, C2) making r -> C1 E0 r + exp(C2 r) Z(r) monotone.

    C1_min is non-increasing in C2, so "smallest" is fixed lexicographically:
    minimize max(C1, C2), then C2.
    """
    if c2_grid is None:
        c2_grid = np.linspace(0.0, 8.0, 161)
    r, Z, E0 = ledger.radii, ledger.Z, max(ledger.E0, 1e-300)
    best = None
    for c2 in c2_grid:
        w = np.exp(c2 * r) * Z
        need = np.max((w[:-1] - w[1:]) / (E0 * np.diff(r)))
        c1 = max(float(need), 0.0)
        key = (max(c1, c2), c2)
        if best is None or key < best[0]:
            best = (key, c1, c2)
    return {"c1": best[1], "c2": best[2]}


def psi_offbulk_bound(geom: TorusGeometry, tau: float, weight: float, energy: float) -> float:
    """Rigorous bound for |int_{d >= inj/2} Psi|, computed from the profile.

    |Psi| <= weight * K * [ |Lap r+ - N| / (2 tau) + |r+ - |grad r+|^2/2| / (2 tau^2) ] * e
    with K <= (4 pi tau)^(-N/2) exp(-inj^2/(16 tau)) off the bulk.
    """
    cap = geom.cap
    N = geom.dim
    s = np.linspace(0.0, 1.5, 4001)
    f = cap(s)
    fp = cap.derivative(s)
    fpp = cap.second_derivative(s)
    sup_fp2 = float(np.max(fp**2))
    sup_ffpp = float(np.max(np.abs(f * fpp)))
    c_a = N + sup_fp2 + sup_ffpp + 2.0 * (N - 1) * float(np.max(fp))
    c_b = geom.inj**2 * (1.0 + sup_fp2) / 2.0
    kmax = (4.0 * np.pi * tau) ** (-N / 2.0) * np.exp(-geom.inj**2 / (16.0 * tau))
    return weight * kmax * (c_a / (2.0 * tau) + c_b / (2.0 * tau**2)) * energy
