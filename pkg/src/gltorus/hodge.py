"""Fourier Hodge decomposition of 1-forms on the torus, winding numbers,
the integer-winding harmonic map, and the gauge decomposition u = w e^{i phi} u_h.

On a flat torus the harmonic 1-forms are the constant forms, so the harmonic
part is the componentwise mean and the exact/co-exact parts are the
longitudinal/transverse Fourier projections.  The cycle-normalized basis is
c^k = (2 pi / L_k) dx^k, so a coefficient gamma_k corresponds to the period
a_k = gamma_k L_k / (2 pi) around the k-th fundamental cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionUnstableError, GLInputError
from .fields import (ComplexField, OneForm, TwoForm, current, form_pairs,
                     spectral_gradient, spectral_gradient_grids)
from .geometry import TorusGeometry


@dataclass(frozen=True)
class HodgeParts:
    """Splitting a = d phi + d* psi + gamma + zeta on the torus."""

    source: OneForm = field(repr=False)
    phi: np.ndarray = field(repr=False)       # zero-mean scalar potential
    psi: TwoForm = field(repr=False)          # co-exact potential, d psi = 0
    gamma: tuple                              # constant harmonic coefficients
    zeta: OneForm = field(repr=False)         # residual (0 for spectral data)

    def exact_part(self) -> OneForm:
        geom = self.source.geom
        return OneForm(geom, tuple(spectral_gradient_grids(geom, self.phi)),
                       time=self.source.time)

    def coexact_part(self) -> OneForm:
        return codifferential(self.psi)

    def harmonic_part(self) -> OneForm:
        geom = self.source.geom
        comps = tuple(np.full(geom.grid_sizes, g) for g in self.gamma)
        return OneForm(geom, comps, time=self.source.time)

    def reconstruction_defect(self) -> float:
        geom = self.source.geom
        parts = [self.exact_part(), self.coexact_part(), self.harmonic_part(), self.zeta]
        worst = 0.0
        for i in range(geom.dim):
            total = sum(p.components[i] for p in parts)
            worst = max(worst, float(np.abs(total - self.source.components[i]).max()))
        return worst

    def orthogonality_defects(self) -> dict:
        """Normalized L2 pairings between the three parts."""
        geom = self.source.geom
        dv = geom.cell_volume
        e, c, h = self.exact_part(), self.coexact_part(), self.harmonic_part()

        def pair(a, b):
            return float(sum(np.sum(ai * bi) for ai, bi in zip(a.components, b.components)) * dv)

        scale = max(pair(e, e) + pair(c, c) + pair(h, h), 1e-300)
        return {
            "exact_coexact": pair(e, c) / scale,
            "exact_harmonic": pair(e, h) / scale,
            "coexact_harmonic": pair(c, h) / scale,
        }

    def part_norms(self) -> dict:
        return {
            "exact": self.exact_part().norm_l2(),
            "coexact": self.coexact_part().norm_l2(),
            "harmonic": self.harmonic_part().norm_l2(),
            "zeta": self.zeta.norm_l2(),
        }


def codifferential(psi: TwoForm) -> OneForm:
    """(d* psi)_j = -sum_i d_i psi_{ij}, with the antisymmetric extension."""
    geom = psi.geom
    comps = []
    for j in range(geom.dim):
        acc = np.zeros(geom.grid_sizes)
        for i in range(geom.dim):
            if i == j:
                continue
            acc -= spectral_gradient_grids(geom, psi.coefficient(i, j))[i]
        comps.append(acc)
    return OneForm(geom, tuple(comps), time=psi.time)


def hodge_decompose(form: OneForm) -> HodgeParts:
    geom = form.geom
    ks = geom.wavenumbers()
    k2 = sum(k**2 for k in ks)
    hats = [np.fft.fftn(c) for c in form.components]
    gamma = tuple(float(h.flat[0].real) / np.prod(geom.grid_sizes) for h in hats)

    with np.errstate(invalid="ignore", divide="ignore"):
        k_dot = sum(ks[i] * hats[i] for i in range(geom.dim))
        phi_hat = np.where(k2 > 0, -1j * k_dot / np.where(k2 > 0, k2, 1.0), 0.0)
    phi = np.fft.ifftn(phi_hat).real

    psi_comps = []
    for (i, j) in form_pairs(geom.dim):
        with np.errstate(invalid="ignore", divide="ignore"):
            num = 1j * (ks[i] * hats[j] - ks[j] * hats[i])
            psi_hat = np.where(k2 > 0, num / np.where(k2 > 0, k2, 1.0), 0.0)
        psi_comps.append(np.fft.ifftn(psi_hat).real)
    psi = TwoForm(geom, tuple(psi_comps), time=form.time)

    parts = HodgeParts(form, phi, psi, gamma,
                       OneForm(geom, tuple(np.zeros(geom.grid_sizes)
                                           for _ in range(geom.dim)), time=form.time))
    zeta_comps = tuple(form.components[i]
                       - parts.exact_part().components[i]
                       - parts.coexact_part().components[i]
                       - gamma[i]
                       for i in range(geom.dim))
    return HodgeParts(form, phi, psi, gamma, OneForm(geom, zeta_comps, time=form.time))


@dataclass(frozen=True)
class WindingVector:
    """Per-axis periods of a 1-form around the fundamental cycles."""

    raw: tuple
    integer: tuple  # nearest-integer approximation (the paper-style floor)

    def distance_to_integer(self) -> float:
        return max(abs(r - i) for r, i in zip(self.raw, self.integer))


def winding(form: OneForm) -> WindingVector:
    """Periods a_k = gamma_k L_k / (2 pi) under the 2 pi-normalized basis."""
    geom = form.geom
    raw = []
    for i in range(geom.dim):
        gamma_i = float(np.mean(form.components[i]))
        raw.append(gamma_i * geom.side_lengths[i] / (2.0 * np.pi))
    integer = tuple(int(np.floor(r + 0.5)) for r in raw)
    return WindingVector(tuple(raw), integer)


def harmonic_floor_map(geom: TorusGeometry, w: WindingVector,
                       epsilon: float = np.exp(-1.0)) -> ComplexField:
    """u_h(x) = exp(i sum_k floor(a_k) 2 pi x_k / L_k); j u_h is constant."""
    coords = geom.meshes()
    phase = sum(w.integer[i] * 2.0 * np.pi * coords[i] / geom.side_lengths[i]
                for i in range(geom.dim))
    return ComplexField(geom, np.exp(1j * np.asarray(phase, dtype=float)),
                        epsilon=epsilon, time=0.0)


def heat_evolve_grid(geom: TorusGeometry, grid: np.ndarray, dt: float) -> np.ndarray:
    """Exact spectral solution of the heat equation over a time increment."""
    if dt < 0:
        raise GLInputError("heat evolution needs dt >= 0")
    k2 = sum(k**2 for k in geom.wavenumbers())
    return np.fft.ifftn(np.fft.fftn(grid) * np.exp(-k2 * dt)).real


WINDING_TOLERANCE = 0.25


@dataclass
class GaugeDecomposition:
    """u = w e^{i phi} u_h on a time window, with Theorem-style diagnostics."""

    u_h: ComplexField
    times: list
    phi_grids: list
    w_fields: list
    winding: WindingVector
    diagnostics: dict


def gauge_decompose(traj, window) -> GaugeDecomposition:
    t1, t2 = float(window[0]), float(window[1])
    if not (traj.times[0] - 1e-12 <= t1 < t2 <= traj.times[-1] + 1e-12):
        raise GLInputError(f"window [{t1}, {t2}] not covered by trajectory")
    geom = traj.geom
    eps = traj.epsilon

    base = traj.field_at(t1)
    ju1 = current(base)
    wv = winding(ju1)
    if wv.distance_to_integer() > WINDING_TOLERANCE:
        raise DecompositionUnstableError(
            f"winding {wv.raw} is {wv.distance_to_integer():.3f} from integers; "
            "a vortex is crossing a fundamental cycle")
    u_h = harmonic_floor_map(geom, wv, epsilon=eps)
    uh_conj = np.conj(u_h.values)

    phi1 = hodge_decompose(ju1).phi
    times = [t for t in traj.times if t1 - 1e-12 <= t <= t2 + 1e-12]
    if not times or abs(times[0] - t1) > 1e-12:
        times = [t1] + [t for t in times if t > t1 + 1e-12]

    phi_grids, w_fields = [], []
    for t in times:
        phi_t = heat_evolve_grid(geom, phi1, t - t1)
        fld = traj.field_at(t)
        w_vals = fld.values * np.exp(-1j * phi_t) * uh_conj
        phi_grids.append(phi_t)
        w_fields.append(ComplexField(geom, w_vals, epsilon=eps, time=t))

    diagnostics = _gauge_diagnostics(traj, times, phi_grids, w_fields)
    return GaugeDecomposition(u_h, times, phi_grids, w_fields, wv, diagnostics)


def _gauge_diagnostics(traj, times, phi_grids, w_fields) -> dict:
    geom = traj.geom
    eps = traj.epsilon
    dv = geom.cell_volume
    log_eps = abs(np.log(eps))
    m0 = traj.initial_energy() / log_eps
    N = geom.dim

    sup_grad_phi = 0.0
    for phi_t in phi_grids:
        g = spectral_gradient_grids(geom, phi_t)
        sup_grad_phi = max(sup_grad_phi, float(np.sqrt(sum(x**2 for x in g)).max()))

    p_values = [1.0, 1.1, (N + 1) / N - 0.01]
    grad_mag = []
    for w in w_fields:
        g = spectral_gradient(w)
        grad_mag.append(np.sqrt(sum(np.abs(x) ** 2 for x in g)))
    lp_norms = {}
    for p in p_values:
        per_t = [float(np.sum(gm**p)) * dv for gm in grad_mag]
        lp_norms[f"{p:g}"] = float(np.trapezoid(per_t, times)) ** (1.0 / p) if len(times) > 1 \
            else per_t[0] ** (1.0 / p)

    grad_u_l2_sq = []
    for t in times:
        g = spectral_gradient(traj.field_at(t))
        grad_u_l2_sq.append(float(np.sum(sum(np.abs(x) ** 2 for x in g))) * dv)

    # dt-component of the space-time harmonic part, against the O(eps |log eps|) scale
    a_eps = 0.0
    if len(times) > 1:
        vals = []
        for i in range(len(times)):
            if i == 0:
                dw = (w_fields[1].values - w_fields[0].values) / (times[1] - times[0])
            elif i == len(times) - 1:
                dw = (w_fields[-1].values - w_fields[-2].values) / (times[-1] - times[-2])
            else:
                dw = (w_fields[i + 1].values - w_fields[i - 1].values) / (times[i + 1] - times[i - 1])
            vals.append(float(np.sum((w_fields[i].values.real * dw.imag
                                      - w_fields[i].values.imag * dw.real))) * dv)
        a_eps = float(np.trapezoid(vals, times)) / (geom.volume * (times[-1] - times[0]))

    return {
        "sup_grad_phi": sup_grad_phi,
        "sup_grad_phi_normalized": sup_grad_phi / np.sqrt((m0 + 1.0) * log_eps),
        "grad_w_lp": lp_norms,
        "grad_u_l2_sq_over_log": [v / log_eps for v in grad_u_l2_sq],
        "dt_harmonic_coefficient": a_eps,
        "dt_harmonic_scale": m0 * eps * log_eps,
        "m0": m0,
    }


def gauge_identity_defect(fld: ComplexField, phi_grid, u_h: ComplexField) -> float:
    """Max nodewise defect of the current-transfer identity for
    w = u e^{-i phi} conj(u_h):
    j w = j u - d phi - j u_h + (1 - |u|^2)(d phi + j u_h).
    """
    geom = fld.geom
    w = ComplexField(geom, fld.values * np.exp(-1j * phi_grid) * np.conj(u_h.values),
                     epsilon=fld.epsilon, time=fld.time)
    jw = current(w)
    ju = current(fld)
    dphi = spectral_gradient_grids(geom, np.asarray(phi_grid, dtype=float))
    juh = current(u_h)
    mod = 1.0 - np.abs(fld.values) ** 2
    worst = 0.0
    for i in range(geom.dim):
        rhs = ju.components[i] - dphi[i] - juh.components[i] \
            + mod * (dphi[i] + juh.components[i])
        worst = max(worst, float(np.abs(jw.components[i] - rhs).max()))
    return worst
