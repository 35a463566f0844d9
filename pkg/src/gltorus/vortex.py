"""Codimension-2 vortex set extraction, density estimators, and the
clearing-out experiment driver.

The vortex set at fixed eps is the zero set of u: grid cells where both
Re u and Im u change sign are root-solved by multilinear interpolation.
In 3D, zero points on cell faces are paired into in-cell segments and
stitched across faces into closed (possibly cycle-wrapping) polylines;
vertex degrees come from the vorticity vector of the Jacobian 2-form
against the polyline tangent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtractionFailureError, GLInputError
from .fields import ComplexField, jacobian
from .geometry import ball_mask, d_plus_grid

log = logging.getLogger(__name__)

# unit-ball volumes for the codimension-2 densities; N in {2, 3} only
OMEGA = {0: 1.0, 1: 2.0}


@dataclass
class Filament:
    """One closed polyline: wrapped vertices, unwrapped copy, vertex degrees.

    `shift` is the displacement from the last unwrapped vertex back to the
    first: zero for a contractible loop, a lattice vector for a polyline
    wrapping a fundamental cycle (a straight vortex line).
    """

    vertices: np.ndarray          # (M, dim), wrapped into the torus
    unwrapped: np.ndarray         # (M, dim), continuous along the chain
    degrees: np.ndarray           # (M,), each +-1
    shift: np.ndarray = field(default=None, repr=False)

    def closed_unwrapped(self) -> np.ndarray:
        return np.vstack([self.unwrapped, self.unwrapped[0] + self.shift])

    def length(self) -> float:
        seg = np.diff(self.closed_unwrapped(), axis=0)
        return float(np.sum(np.linalg.norm(seg, axis=1)))


@dataclass
class VortexSet:
    """Extracted zero set: polylines (N=3) or points (N=2) with degrees."""

    time: float
    dim: int
    filaments: list            # N=3: list of Filament
    points: list               # N=2: list of (position, degree)
    core_radius_hint: float

    def total_length(self) -> float:
        return sum(f.length() for f in self.filaments)

    def is_empty(self) -> bool:
        return not self.filaments and not self.points


def _sign_change(a):
    """True where the 2x2 (or 2x2x2) corner stack straddles zero."""
    return (a.min(axis=0) < 0) & (a.max(axis=0) > 0)


def _bilinear_roots(re_c, im_c):
    """Common zeros of two bilinear forms on the unit square.

    Corner order: (0,0), (1,0), (0,1), (1,1).  Returns list of (s, t).
    A form that vanishes on the whole face up to rounding noise (a symmetry
    plane through grid nodes) owns no isolated zeros; the transverse faces
    detect the curve instead.
    """
    re_scale = max(abs(v) for v in re_c)
    im_scale = max(abs(v) for v in im_c)
    if im_scale < 1e-10 * re_scale or re_scale < 1e-10 * im_scale:
        return []
    a0, a1, a2, a3 = (re_c[0],
                      re_c[1] - re_c[0],
                      re_c[2] - re_c[0],
                      re_c[3] - re_c[1] - re_c[2] + re_c[0])
    b0, b1, b2, b3 = (im_c[0],
                      im_c[1] - im_c[0],
                      im_c[2] - im_c[0],
                      im_c[3] - im_c[1] - im_c[2] + im_c[0])
    # eliminate s: (a0 + a2 t) (b1 + b3 t) = (b0 + b2 t) (a1 + a3 t)
    c2 = a2 * b3 - b2 * a3
    c1 = a0 * b3 + a2 * b1 - b0 * a3 - b2 * a1
    c0 = a0 * b1 - b0 * a1
    roots = []
    if abs(c2) < 1e-14 * max(abs(c1), abs(c0), 1e-30):
        if abs(c1) > 0:
            roots = [-c0 / c1]
    else:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0:
            sq = np.sqrt(disc)
            roots = [(-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)]
    out = []
    slack = 1e-9
    for t in roots:
        if not (-slack <= t <= 1.0 + slack):
            continue
        den_a = a1 + a3 * t
        den_b = b1 + b3 * t
        if abs(den_a) >= abs(den_b):
            if abs(den_a) < 1e-30:
                continue
            s = -(a0 + a2 * t) / den_a
        else:
            if abs(den_b) < 1e-30:
                continue
            s = -(b0 + b2 * t) / den_b
        if -slack <= s <= 1.0 + slack:
            out.append((float(np.clip(s, 0.0, 1.0)), float(np.clip(t, 0.0, 1.0))))
    # dedupe nearly-identical double roots
    if len(out) == 2 and abs(out[0][0] - out[1][0]) + abs(out[0][1] - out[1][1]) < 1e-9:
        out = out[:1]
    return out


def _corner_stack_2d(arr):
    return np.stack([arr,
                     np.roll(arr, -1, axis=0),
                     np.roll(arr, -1, axis=1),
                     np.roll(np.roll(arr, -1, axis=0), -1, axis=1)])


def extract_vortex_set(fld: ComplexField, resolution_check: bool = True) -> VortexSet:
    geom = fld.geom
    if resolution_check:
        bad = [h for h in geom.spacing if h > fld.epsilon / 2.0 + 1e-12]
        if bad:
            log.warning("extraction with h=%.4g > eps/2=%.4g; roots may be unreliable",
                        max(bad), fld.epsilon / 2.0)
    if geom.dim == 2:
        return _extract_2d(fld)
    return _extract_3d(fld)


def _nudge_zeros(arr):
    """Symbolic perturbation: exact node zeros count as positive."""
    return np.where(arr == 0.0, 1e-300, arr)


def _extract_2d(fld: ComplexField) -> VortexSet:
    geom = fld.geom
    u = fld.values
    re, im = _nudge_zeros(u.real), _nudge_zeros(u.imag)
    cand = _sign_change(_corner_stack_2d(re)) & _sign_change(_corner_stack_2d(im))
    n0, n1 = geom.grid_sizes
    h0, h1 = geom.spacing
    jac = jacobian(fld).components[0]
    points = []
    seen = set()
    tol = min(h0, h1) * 1e-6
    for i, j in zip(*np.nonzero(cand)):
        rc = [re[i, j], re[(i + 1) % n0, j], re[i, (j + 1) % n1], re[(i + 1) % n0, (j + 1) % n1]]
        ic = [im[i, j], im[(i + 1) % n0, j], im[i, (j + 1) % n1], im[(i + 1) % n0, (j + 1) % n1]]
        for (s, t) in _bilinear_roots(rc, ic):
            pos = ((i + s) * h0 % geom.side_lengths[0], (j + t) * h1 % geom.side_lengths[1])
            key = tuple(int(round(v / tol)) for v in pos)
            if key in seen:
                continue
            seen.add(key)
            deg = 1 if _bilinear_sample(jac, geom, pos) > 0 else -1
            points.append((pos, deg))
    return VortexSet(fld.time, 2, [], points, fld.epsilon)


def _bilinear_sample(grid, geom, pos):
    idx = [pos[i] / geom.spacing[i] for i in range(2)]
    i0 = [int(np.floor(v)) for v in idx]
    fr = [idx[k] - i0[k] for k in range(2)]
    n = geom.grid_sizes
    val = 0.0
    for di in (0, 1):
        for dj in (0, 1):
            w = (fr[0] if di else 1 - fr[0]) * (fr[1] if dj else 1 - fr[1])
            val += w * grid[(i0[0] + di) % n[0], (i0[1] + dj) % n[1]]
    return val


def trilinear_sample(grid, geom, pos):
    idx = [pos[i] / geom.spacing[i] for i in range(3)]
    i0 = [int(np.floor(v)) for v in idx]
    fr = [idx[k] - i0[k] for k in range(3)]
    n = geom.grid_sizes
    val = 0.0
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = ((fr[0] if di else 1 - fr[0])
                     * (fr[1] if dj else 1 - fr[1])
                     * (fr[2] if dk else 1 - fr[2]))
                val += w * grid[(i0[0] + di) % n[0], (i0[1] + dj) % n[1], (i0[2] + dk) % n[2]]
    return val


def _extract_3d(fld: ComplexField) -> VortexSet:
    geom = fld.geom
    u = fld.values
    n = geom.grid_sizes
    h = geom.spacing
    L = geom.side_lengths

    # zero points on cell faces; points landing on shared edges/corners are
    # merged into one canonical id
    re = _nudge_zeros(u.real)
    im = _nudge_zeros(u.imag)
    positions = []
    canon = {}
    tol = min(h) * 1e-6
    solved = {}

    def point_id(pos):
        key = tuple(int(round(v / tol)) for v in pos)
        if key not in canon:
            positions.append(tuple(pos))
            canon[key] = len(positions) - 1
        return canon[key]

    def solve_face(axis, idx):
        key = (axis,) + tuple(int(v) % n[a] for a, v in enumerate(idx))
        if key in solved:
            return solved[key]
        b, c = [x for x in range(3) if x != axis]
        i = list(key[1:])
        ib1 = list(i)
        ib1[b] = (ib1[b] + 1) % n[b]
        ic1 = list(i)
        ic1[c] = (ic1[c] + 1) % n[c]
        ibc = list(ib1)
        ibc[c] = (ibc[c] + 1) % n[c]
        corners = [tuple(i), tuple(ib1), tuple(ic1), tuple(ibc)]
        rc = [float(re[x]) for x in corners]
        ic_ = [float(im[x]) for x in corners]
        pts = []
        for (s, t) in _bilinear_roots(rc, ic_):
            pos = [0.0, 0.0, 0.0]
            pos[axis] = key[1 + axis] * h[axis]
            pos[b] = ((key[1 + b] + s) * h[b]) % L[b]
            pos[c] = ((key[1 + c] + t) * h[c]) % L[c]
            pts.append(point_id(pos))
        solved[key] = list(dict.fromkeys(pts))
        return solved[key]

    # candidate faces: some corner is inside the core tube
    small = np.abs(u) < 0.6
    for axis in range(3):
        b, c = [x for x in range(3) if x != axis]
        cand = (small | np.roll(small, -1, axis=b) | np.roll(small, -1, axis=c)
                | np.roll(np.roll(small, -1, axis=b), -1, axis=c))
        for idx in zip(*np.nonzero(cand)):
            solve_face(axis, idx)

    if not any(solved.values()):
        return VortexSet(fld.time, 3, [], [], fld.epsilon)

    def cube_faces(cube):
        i, j, k = cube
        return [(0, (i, j, k)), (0, ((i + 1) % n[0], j, k)),
                (1, (i, j, k)), (1, (i, (j + 1) % n[1], k)),
                (2, (i, j, k)), (2, (i, j, (k + 1) % n[2]))]

    # group face points by the two cubes sharing each face
    cube_points = {}
    for (axis, i, j, k), pts in list(solved.items()):
        if not pts:
            continue
        base = [i, j, k]
        plus = tuple(base)
        minus_l = list(base)
        minus_l[axis] = (minus_l[axis] - 1) % n[axis]
        for cube in (plus, tuple(minus_l)):
            cube_points.setdefault(cube, []).extend(pts)

    # rescue: cubes with an odd point count get all six faces solved
    for cube in list(cube_points):
        pts = list(dict.fromkeys(cube_points[cube]))
        if len(pts) % 2 == 1:
            full = []
            for (axis, idx) in cube_faces(cube):
                full.extend(solve_face(axis, idx))
            cube_points[cube] = list(dict.fromkeys(full))

    # pair points inside each cube into segments; identical segments seen from
    # neighbouring cubes (curve running along a shared edge) collapse to one
    edges = set()

    def link(p1, p2):
        if p1 != p2:
            edges.add((min(p1, p2), max(p1, p2)))

    bad_cubes = []
    for cube, pts in cube_points.items():
        pts = list(dict.fromkeys(pts))
        if len(pts) == 2:
            link(pts[0], pts[1])
        elif len(pts) == 4:
            for (p1, p2) in _best_pairing(pts, positions, L):
                link(p1, p2)
        elif len(pts) > 4 and len(pts) % 2 == 0:
            for (p1, p2) in _greedy_pairing(pts, positions, L):
                link(p1, p2)
        elif len(pts) != 0:
            bad_cubes.append((cube, len(pts)))
    if bad_cubes:
        raise ExtractionFailureError(
            f"cubes with odd/many zero points: {bad_cubes[:8]}", cells=bad_cubes)

    adjacency = {}
    for (p1, p2) in edges:
        adjacency.setdefault(p1, []).append(p2)
        adjacency.setdefault(p2, []).append(p1)
    open_pts = [p for p, nb in adjacency.items() if len(nb) != 2]
    if open_pts:
        raise ExtractionFailureError(
            f"open chain after stitching: {len(open_pts)} points with degree != 2, "
            f"first at {positions[open_pts[0]]}",
            cells=[positions[p] for p in open_pts[:16]])

    # walk closed loops
    filaments = []
    visited = set()
    jac = jacobian(fld)
    vort = (jac.coefficient(1, 2), -jac.coefficient(0, 2), jac.coefficient(0, 1))
    for start in adjacency:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [p for p in adjacency[cur] if p != prev]
            step = nxt[0] if nxt else prev
            if step == chain[0]:
                break
            prev, cur = cur, step
            chain.append(cur)
            visited.add(cur)
            if len(chain) > 20 * sum(n):
                raise ExtractionFailureError("runaway chain during stitching")
        filaments.append(_build_filament(chain, positions, geom, vort))
    return VortexSet(fld.time, 3, filaments, [], fld.epsilon)


def _best_pairing(pts, positions, L):
    """Split four in-cube zero points into the two shortest segments."""

    def wrapped_dist(p, q):
        d = 0.0
        for a in range(3):
            w = abs(positions[p][a] - positions[q][a])
            w = min(w, L[a] - w)
            d += w * w
        return d

    pairings = [((pts[0], pts[1]), (pts[2], pts[3])),
                ((pts[0], pts[2]), (pts[1], pts[3])),
                ((pts[0], pts[3]), (pts[1], pts[2]))]
    return min(pairings, key=lambda pr: wrapped_dist(*pr[0]) + wrapped_dist(*pr[1]))


def _greedy_pairing(pts, positions, L):
    """Nearest-neighbour pairing for crowded cubes (close vortex approaches)."""

    def wrapped_dist(p, q):
        d = 0.0
        for a in range(3):
            w = abs(positions[p][a] - positions[q][a])
            w = min(w, L[a] - w)
            d += w * w
        return d

    pool = list(pts)
    out = []
    while pool:
        p = pool.pop(0)
        q = min(pool, key=lambda x: wrapped_dist(p, x))
        pool.remove(q)
        out.append((p, q))
    return out


def _build_filament(chain, positions, geom, vort):
    L = geom.side_lengths
    pts = np.array([positions[p] for p in chain])
    unwrapped = [pts[0].copy()]
    for i in range(1, len(pts)):
        step = pts[i] - pts[i - 1]
        for a in range(3):
            step[a] = (step[a] + L[a] / 2) % L[a] - L[a] / 2
        unwrapped.append(unwrapped[-1] + step)
    unwrapped = np.array(unwrapped)
    closing = pts[0] - pts[-1]
    for a in range(3):
        closing[a] = (closing[a] + L[a] / 2) % L[a] - L[a] / 2
    shift = (unwrapped[-1] + closing) - unwrapped[0]

    # vertex degrees from the vorticity direction against the tangent
    degs = []
    m = len(pts)
    for i in range(m):
        nxt = unwrapped[(i + 1) % m] if i + 1 < m else unwrapped[0] + shift
        prv = unwrapped[i - 1] if i > 0 else unwrapped[0] - (unwrapped[1] - unwrapped[0])
        tang = nxt - prv
        w = np.array([trilinear_sample(v, geom, pts[i] % L) for v in vort])
        degs.append(1 if float(np.dot(w, tang)) >= 0 else -1)
    return Filament(pts, unwrapped, np.array(degs, dtype=int), shift=shift)


# ---------------------------------------------------------------------------
# densities

@dataclass
class DensitySample:
    """Ball and parabolic (N-2)-density estimates about one point."""

    point: tuple
    time: float
    radii: np.ndarray
    theta: np.ndarray
    theta_parabolic: np.ndarray


def density_scan(ledger, x, radii) -> DensitySample:
    """theta(r) = mu(B_r(x)) / (omega_{N-2} r^{N-2}) plus the parabolic variant."""
    from .energy import measure_of_set

    geom = ledger.fld.geom
    N = geom.dim
    radii = np.asarray(sorted(float(r) for r in radii))
    h_max = max(geom.spacing)
    if radii[0] <= h_max or radii[-1] >= geom.inj + 1e-12:
        raise GLInputError(f"radii must lie in (h, inj) = ({h_max:.4g}, {geom.inj:.4g})")
    omega = OMEGA[N - 2]
    dv = geom.cell_volume
    log_eps = ledger.fld.abs_log_eps
    dp = d_plus_grid(geom, x)
    theta, theta_p = [], []
    for r in radii:
        mass = measure_of_set(ledger, ball_mask(geom, x, r))
        theta.append(mass / (omega * r ** (N - 2)))
        gauss = float(np.sum(ledger.density * np.exp(-(dp**2) / (4.0 * r**2)))) * dv / log_eps
        theta_p.append(gauss / ((4.0 * np.pi) ** (N / 2.0) * r ** (N - 2)))
    return DensitySample(tuple(np.atleast_1d(x)), ledger.time, radii,
                         np.asarray(theta), np.asarray(theta_p))


# ---------------------------------------------------------------------------
# clearing-out experiment

def clearing_out_probe(traj, x_T, T: float, R: float) -> dict:
    """One scatter sample: (E~/|log eps|, 1 - |u(x_T, T)|)."""
    from .weighted import weighted_energy

    fld = traj.field_at(T)
    val = abs(complex(_sample_any(fld, x_T)))
    e_tilde = weighted_energy(traj, (x_T, T), R)
    return {
        "E_norm": e_tilde / fld.abs_log_eps,
        "one_minus_mod": 1.0 - val,
        "R": R,
        "T": T,
        "x": tuple(float(v) for v in np.atleast_1d(x_T)),
    }


def _sample_any(fld, x):
    geom = fld.geom
    if geom.dim == 2:
        re = _bilinear_sample(fld.values.real, geom, x)
        im = _bilinear_sample(fld.values.imag, geom, x)
        return re + 1j * im
    re = trilinear_sample(fld.values.real, geom, x)
    im = trilinear_sample(fld.values.imag, geom, x)
    return re + 1j * im


def empirical_eta(samples, sigma: float) -> float:
    """Largest threshold such that all samples at or below it have |u| >= 1 - sigma."""
    violators = [s["E_norm"] for s in samples if s["one_minus_mod"] > sigma]
    if not violators:
        return max(s["E_norm"] for s in samples)
    return min(violators)


def clearing_out_experiment(make_wave_traj, make_line_traj, line_probes,
                            sigmas, epsilon_ladder, wave_probe, r_scale: float = 8.0) -> dict:
    """Scatter of (E~/|log eps|, 1-|u|) over an eps ladder, wave and line data.

    make_wave_traj(eps) / make_line_traj(eps): trajectory builders.
    line_probes(eps): (on_core_points, far_points) for the line dataset.
    wave_probe: (points, R, T) reused across the ladder so that the wave
    branch isolates the 1/|log eps| trend.
    """
    ladder = sorted((float(e) for e in epsilon_ladder), reverse=True)
    samples = []
    wave_norms = []
    wave_mod_defect = []
    line_floor = []
    for eps in ladder:
        wtraj = make_wave_traj(eps)
        pts, R_w, T_w = wave_probe
        vals = [clearing_out_probe(wtraj, p, T_w, R_w) for p in pts]
        for v in vals:
            v.update(eps=eps, kind="wave")
        samples.extend(vals)
        wave_norms.append(max(v["E_norm"] for v in vals))
        wave_mod_defect.append(max(v["one_minus_mod"] for v in vals))

        ltraj = make_line_traj(eps)
        on_core, far = line_probes(eps)
        R_l = r_scale * eps
        T_l = ltraj.times[-1]
        for kind, pts_k in (("line-core", on_core), ("line-far", far)):
            for p in pts_k:
                v = clearing_out_probe(ltraj, p, T_l, R_l)
                v.update(eps=eps, kind=kind)
                samples.append(v)
        line_floor.append(min(v["E_norm"] for v in samples
                              if v.get("eps") == eps and v["kind"] == "line-core"))

    etas = {f"{s:g}": empirical_eta(samples, s) for s in sigmas}
    return {
        "samples": samples,
        "eta_hat": etas,
        "ladder": ladder,
        "wave_max_E_norm": wave_norms,
        "wave_max_mod_defect": wave_mod_defect,
        "line_core_E_floor": line_floor,
        "wave_monotone_decreasing": all(b < a - 1e-12 for a, b in zip(wave_norms, wave_norms[1:])),
        "wave_modulus_ok": all(v < 0.05 for v in wave_mod_defect),
        "line_floor_ok": all(v > 0.3 for v in line_floor),
    }
