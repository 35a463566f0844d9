"""Energy densities, normalized measures, and the dissipation identities.

e_eps(u) = |grad u|^2 / 2 + (1 - |u|^2)^2 / (4 eps^2); the normalized measure
mu_eps^t assigns a node set the mass sum(e_eps)/|log eps| * prod(h_i).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NormalizationError
from .fields import ComplexField, pgl_rhs, spectral_gradient


def potential_density(fld: ComplexField) -> np.ndarray:
    """V_eps(u) = (1 - |u|^2)^2 / (4 eps^2), nodewise."""
    return (1.0 - np.abs(fld.values) ** 2) ** 2 / (4.0 * fld.epsilon**2)


@dataclass(frozen=True)
class EnergyLedger:
    """Energy bookkeeping for one snapshot."""

    fld: ComplexField = field(repr=False)
    density: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)
    total: float
    time: float

    @property
    def normalized_total(self) -> float:
        return self.total / self.fld.abs_log_eps


def energy_density(fld: ComplexField, grad=None) -> EnergyLedger:
    grad = grad if grad is not None else spectral_gradient(fld)
    kin = 0.5 * sum(np.abs(g) ** 2 for g in grad)
    pot = potential_density(fld)
    dens = kin + pot
    total = float(np.sum(dens)) * fld.geom.cell_volume
    return EnergyLedger(fld, dens, pot, total, fld.time)


def total_energy(fld: ComplexField) -> float:
    return energy_density(fld).total


def measure_of_set(ledger: EnergyLedger, mask: np.ndarray) -> float:
    """mu_eps^t(A) for a boolean node mask A."""
    eps = ledger.fld.epsilon
    if eps >= 1.0:
        raise NormalizationError(f"epsilon={eps} >= 1 has no |log eps| normalization")
    dv = ledger.fld.geom.cell_volume
    return float(np.sum(ledger.density[mask])) * dv / ledger.fld.abs_log_eps


def dissipation_check(traj, chi: np.ndarray, use_time_difference: bool = False,
                      chi_descriptor: str = "") -> dict:
    """Both sides of the time-integrated energy identity against a test grid chi.

    lhs = int e(T2) chi - int e(T1) chi
    rhs = -int int |du/dt|^2 chi - int int du/dt . <grad u, grad chi>
    du/dt is the spatial PDE right side by default; time integrals are
    trapezoidal over the stored snapshots.
    """
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots")
    geom = snaps[0].geom
    chi = np.asarray(chi, dtype=float)
    dv = geom.cell_volume
    grad_chi = spectral_gradient_real(geom, chi)

    led0 = energy_density(snaps[0])
    led1 = energy_density(snaps[-1])
    lhs = float(np.sum((led1.density - led0.density) * chi)) * dv

    vals = []
    for idx, snap in enumerate(snaps):
        if use_time_difference:
            dudt = _time_difference(snaps, idx)
        else:
            dudt = pgl_rhs(snap)
        grad = spectral_gradient(snap)
        quad = np.abs(dudt) ** 2 * chi
        crossed = sum((dudt * np.conj(grad[i])).real * grad_chi[i] for i in range(geom.dim))
        vals.append(-float(np.sum(quad + crossed)) * dv)
    times = np.asarray(traj.times)
    rhs = float(np.trapezoid(vals, times))
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rel_err": abs(lhs - rhs) / denom,
        "chi_descriptor": chi_descriptor,
        "time_window": [float(times[0]), float(times[-1])],
    }


def energy_test_inequality(traj, chi: np.ndarray) -> dict:
    """Margin of the squared-test-function dissipation inequality.

    (1/2) int int |du/dt|^2 chi^2 + [int e chi^2]_{T1}^{T2}
        <= 4 ||grad chi||_inf^2 * int int_{supp chi} e
    """
    snaps = traj.snapshots
    geom = snaps[0].geom
    chi = np.asarray(chi, dtype=float)
    dv = geom.cell_volume
    grad_chi = spectral_gradient_real(geom, chi)
    gnorm2 = max(float(np.max(sum(g**2 for g in grad_chi))), 0.0)
    supp = np.abs(chi) > 1e-13 * max(float(np.abs(chi).max()), 1e-300)

    quads, supps = [], []
    for snap in snaps:
        dudt = pgl_rhs(snap)
        led = energy_density(snap)
        quads.append(0.5 * float(np.sum(np.abs(dudt) ** 2 * chi**2)) * dv)
        supps.append(float(np.sum(led.density[supp])) * dv)
    times = np.asarray(traj.times)
    lhs = float(np.trapezoid(quads, times))
    lhs += float(np.sum((energy_density(snaps[-1]).density
                         - energy_density(snaps[0]).density) * chi**2)) * dv
    rhs = 4.0 * gnorm2 * float(np.trapezoid(supps, times))
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs}


def spectral_gradient_real(geom, grid):
    from .fields import spectral_gradient_grids

    return spectral_gradient_grids(geom, np.asarray(grid, dtype=float))


def _time_difference(snaps, idx):
    if idx == 0:
        a, b = snaps[0], snaps[1]
    elif idx == len(snaps) - 1:
        a, b = snaps[-2], snaps[-1]
    else:
        a, b = snaps[idx - 1], snaps[idx + 1]
    return (b.values - a.values) / (b.time - a.time)
