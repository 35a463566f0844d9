"""Stress-tensor identities, ring-vs-mean-curvature-flow comparison, and the
Brakke-inequality diagnostic on extracted filaments.

The stress field is T = e_eps I - grad u (x) du, whose trace satisfies
tr T = (N-2) e_eps + 2 V_eps exactly.  The concentrated measure is proxied
by the energy restricted to the tube {|u| < 3/4}; filament curvature comes
from circumscribed circles through arclength-resampled vertex triples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import TrackingError
from .fields import ComplexField, pgl_rhs, spectral_gradient, spectral_gradient_grids
from .vortex import extract_vortex_set, trilinear_sample

log = logging.getLogger(__name__)

TUBE_LEVEL = 0.75


@dataclass(frozen=True)
class StressField:
    """Per-node symmetric stress tensor e I - grad u (x) du."""

    fld: ComplexField = field(repr=False)
    components: list = field(repr=False)   # components[i][j] grids
    energy: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)

    def trace(self) -> np.ndarray:
        N = self.fld.geom.dim
        return sum(self.components[i][i] for i in range(N))


def stress_tensor(fld: ComplexField) -> StressField:
    from .energy import energy_density

    geom = fld.geom
    grad = spectral_gradient(fld)
    led = energy_density(fld, grad=grad)
    comps = [[None] * geom.dim for _ in range(geom.dim)]
    for i in range(geom.dim):
        for j in range(geom.dim):
            gij = (grad[i] * np.conj(grad[j])).real
            comps[i][j] = led.density * (1.0 if i == j else 0.0) - gij
    return StressField(fld, comps, led.density, led.potential)


def trace_identity_check(fld: ComplexField) -> float:
    """Max nodewise |tr T - (N-2) e - 2 V|; exact algebra up to rounding."""
    sf = stress_tensor(fld)
    N = fld.geom.dim
    defect = sf.trace() - (N - 2) * sf.energy - 2.0 * sf.potential
    return float(np.abs(defect).max())


def stress_identity_check(fld: ComplexField, X) -> dict:
    """(1/|log eps|) int T : DX  against  int <X, du/dt . grad u> / |log eps|."""
    geom = fld.geom
    dv = geom.cell_volume
    log_eps = fld.abs_log_eps
    sf = stress_tensor(fld)
    dX = [spectral_gradient_grids(geom, np.asarray(Xi, dtype=float)) for Xi in X]
    lhs = 0.0
    for i in range(geom.dim):
        for j in range(geom.dim):
            lhs += float(np.sum(sf.components[i][j] * dX[j][i]))
    lhs *= dv / log_eps
    dudt = pgl_rhs(fld)
    grad = spectral_gradient(fld)
    rhs = sum(float(np.sum(np.asarray(X[i], dtype=float) * (dudt * np.conj(grad[i])).real))
              for i in range(geom.dim)) * dv / log_eps
    denom = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "rel_err": abs(lhs - rhs) / denom}


# ---------------------------------------------------------------------------
# filament geometry helpers

def resample_closed(points: np.ndarray, spacing: float) -> np.ndarray:
    """Resample a closed polyline to uniform arclength."""
    seg = np.diff(points, axis=0)
    ds = np.linalg.norm(seg, axis=1)
    s = np.concatenate([[0.0], np.cumsum(ds)])
    total = s[-1]
    m = max(int(round(total / spacing)), 8)
    targets = np.linspace(0.0, total, m, endpoint=False)
    out = np.empty((m, points.shape[1]))
    for d in range(points.shape[1]):
        out[:, d] = np.interp(targets, s, points[:, d])
    return out


def curvature_vectors(points: np.ndarray, shift=None) -> tuple:
    """(h, tangents, ds) at each vertex of a uniformly resampled loop.

    |h| from the circumscribed circle through consecutive triples; the
    direction from the second difference (toward the circumcenter).  `shift`
    is the lattice vector closing an unwrapped cycle-wrapping polyline.
    """
    pts = points
    m = len(pts)
    prv = np.roll(pts, 1, axis=0).copy()
    nxt = np.roll(pts, -1, axis=0).copy()
    if shift is not None:
        prv[0] = prv[0] - np.asarray(shift)
        nxt[-1] = nxt[-1] + np.asarray(shift)
    ab = pts - prv
    bc = nxt - pts
    ca = prv - nxt
    la, lb, lc = (np.linalg.norm(v, axis=1) for v in (ab, bc, ca))
    cross = np.cross(ab, bc)
    area2 = np.linalg.norm(cross, axis=1) if pts.shape[1] == 3 else np.abs(cross)
    with np.errstate(invalid="ignore", divide="ignore"):
        kappa = np.where(area2 > 0, 2.0 * area2 / np.where(area2 > 0, la * lb * lc, 1.0), 0.0)
    second = nxt - 2.0 * pts + prv
    norms = np.linalg.norm(second, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(norms[:, None] > 0, second / np.where(norms[:, None] > 0, norms[:, None], 1.0), 0.0)
    h = kappa[:, None] * direction
    tang = nxt - prv
    tnorm = np.linalg.norm(tang, axis=1)
    tang = tang / np.where(tnorm[:, None] > 0, tnorm[:, None], 1.0)
    ds = 0.5 * (la + lb)
    return h, tang, ds


# ---------------------------------------------------------------------------
# ring tracking

@dataclass
class RingTrack:
    times: list
    radii: list
    r_exact: list
    centers: list
    lengths: list
    tube_energy: list


def ring_mcf_compare(traj, r0: float, axis: int = 2, stop_radius: float | None = None) -> dict:
    """Track the extracted ring radius against sqrt(r0^2 - 2 t).

    The verdict reports the max relative radius error over the window where
    the measured radius stays above stop_radius (default 4 eps), and the
    collapse time against r0^2 / 2.
    """
    eps = traj.epsilon
    stop = 4.0 * eps if stop_radius is None else stop_radius
    geom = traj.geom
    perp = [i for i in range(3) if i != axis]
    track = RingTrack([], [], [], [], [], [])
    log_eps = abs(np.log(eps))
    collapse_measured = None
    for snap, energy in zip(traj.snapshots, traj.energies):
        vs = extract_vortex_set(snap, resolution_check=False)
        if vs.is_empty():
            collapse_measured = snap.time
            break
        fil = max(vs.filaments, key=lambda f: f.length())
        center = fil.unwrapped.mean(axis=0)
        rad = float(np.linalg.norm(fil.unwrapped[:, perp] - center[perp], axis=1).mean())
        from .energy import energy_density

        led = energy_density(snap)
        tube = np.abs(snap.values) < TUBE_LEVEL
        tube_mass = float(np.sum(led.density[tube])) * geom.cell_volume / log_eps
        track.times.append(snap.time)
        track.radii.append(rad)
        track.r_exact.append(float(np.sqrt(max(r0**2 - 2.0 * snap.time, 0.0))))
        track.centers.append(tuple(float(v) for v in center))
        track.lengths.append(fil.length())
        track.tube_energy.append(tube_mass)
    if not track.times:
        raise TrackingError("no filament found at the initial time")
    if collapse_measured is None:
        last_live = track.radii[-1]
        if last_live > stop * 1.5:
            raise TrackingError(
                f"filament lost at r={last_live:.4f}, before the window end {stop:.4f}")
        collapse_measured = traj.times[-1]

    in_window = [i for i, r in enumerate(track.radii) if r >= stop]
    rel_errs = [abs(track.radii[i] - track.r_exact[i]) / max(track.r_exact[i], 1e-12)
                for i in in_window]
    collapse_exact = r0**2 / 2.0
    return {
        "track": track,
        "max_rel_radius_err": max(rel_errs) if rel_errs else np.nan,
        "collapse_time": collapse_measured,
        "collapse_exact": collapse_exact,
        "collapse_rel_err": abs(collapse_measured - collapse_exact) / collapse_exact,
        "stop_radius": stop,
    }


# ---------------------------------------------------------------------------
# Brakke diagnostic

def brakke_diagnostic(traj, chi, tau_brakke: float = 0.1, resample_factor: float = 2.0) -> dict:
    """Forward-difference rate of the tube measure against B(nu, chi).

    nu^t(chi) integrates chi d mu_eps^t over the tube {|u| < 3/4}; h and the
    tangent projection P come from the extracted filaments; the density
    factor Theta is the measured tube mass per unit filament length.
    """
    geom = traj.geom
    chi = np.asarray(chi, dtype=float)
    if np.any(chi <= -1e-15):
        raise ValueError("chi must be positive")
    dv = geom.cell_volume
    log_eps = abs(np.log(traj.epsilon))
    grad_chi = spectral_gradient_grids(geom, chi)
    spacing = resample_factor * max(geom.spacing)

    rows = []
    per_snapshot = []
    for snap in traj.snapshots:
        from .energy import energy_density

        led = energy_density(snap)
        tube = np.abs(snap.values) < TUBE_LEVEL
        nu_chi = float(np.sum(led.density[tube] * chi[tube])) * dv / log_eps
        nu_one = float(np.sum(led.density[tube])) * dv / log_eps
        vs = extract_vortex_set(snap, resolution_check=False)
        length = vs.total_length()
        theta = nu_one / length if length > 0 else 0.0
        b_val = 0.0
        h2_int = 0.0
        if length > 0:
            for fil in vs.filaments:
                pts = resample_closed(fil.closed_unwrapped(), spacing)
                h, tang, ds = curvature_vectors(pts, shift=fil.shift)
                wrapped = pts % np.asarray(geom.side_lengths)
                chi_v = np.array([trilinear_sample(chi, geom, p) for p in wrapped])
                gchi_v = np.stack([[trilinear_sample(g, geom, p) for g in grad_chi]
                                   for p in wrapped])
                h_sq = np.sum(h**2, axis=1)
                p_h = tang * np.sum(tang * h, axis=1)[:, None]
                b_val += float(np.sum((-chi_v * h_sq
                                       + np.sum(gchi_v * p_h, axis=1)) * ds)) * theta
                h2_int += float(np.sum(h_sq * ds)) * theta
        per_snapshot.append({"time": snap.time, "nu_chi": nu_chi, "nu_one": nu_one,
                             "length": length, "theta": theta, "B": b_val,
                             "h2_int": h2_int})

    for a, b in zip(per_snapshot, per_snapshot[1:]):
        dt = b["time"] - a["time"]
        if dt <= 0 or a["length"] == 0:
            continue
        rate = (b["nu_chi"] - a["nu_chi"]) / dt
        defect = rate - a["B"]
        rows.append({
            "time": a["time"],
            "Dt_nu": rate,
            "B": a["B"],
            "defect": defect,
            "nu_chi": a["nu_chi"],
            "theta": a["theta"],
            "length": a["length"],
            "consistent": bool(defect <= tau_brakke * max(a["nu_chi"], 1e-300)),
            "rate_per_theta": rate / a["theta"] if a["theta"] > 0 else np.nan,
        })
    return {"rows": rows, "per_snapshot": per_snapshot, "tau_brakke": tau_brakke,
            "all_consistent": all(r["consistent"] for r in rows) if rows else True}
