import numpy as np
import pytest

from gltorus.dynamics import (IntegratorConfig, PhaseWave, VortexPoints, VortexRing,
                              evolve, make_initial)
from gltorus.errors import DecompositionUnstableError
from gltorus.fields import ComplexField, OneForm, current, spectral_gradient_grids
from gltorus.geometry import TorusGeometry
from gltorus.hodge import (gauge_decompose, gauge_identity_defect, harmonic_floor_map,
                           heat_evolve_grid, hodge_decompose, winding, WindingVector)

G2 = TorusGeometry((1.0, 1.0), (64, 64))
G3 = TorusGeometry((1.0, 1.0, 1.0), (48, 48, 48))


def test_decompose_exact_form():
    X, Y = G2.meshes()
    rho = 0.7 * np.sin(2 * np.pi * X) * np.cos(4 * np.pi * Y)
    form = OneForm(G2, tuple(spectral_gradient_grids(G2, rho)))
    parts = hodge_decompose(form)
    assert max(abs(g) for g in parts.gamma) < 1e-12
    assert parts.coexact_part().norm_l2() < 1e-10
    assert np.abs(parts.phi - (rho - rho.mean())).max() < 1e-10


def test_decompose_constant_form():
    form = OneForm(G2, (np.full(G2.grid_sizes, 1.7), np.zeros(G2.grid_sizes)))
    parts = hodge_decompose(form)
    assert np.isclose(parts.gamma[0], 1.7)
    assert np.isclose(parts.gamma[1], 0.0)
    assert np.abs(parts.phi).max() < 1e-12
    assert parts.coexact_part().norm_l2() < 1e-12


def test_decompose_vortex_pair_current():
    fld = make_initial(G2, 0.05, VortexPoints((((0.3, 0.5), 1), ((0.7, 0.5), -1))))
    ju = current(fld)
    parts = hodge_decompose(ju)
    assert parts.reconstruction_defect() < 1e-10
    for v in parts.orthogonality_defects().values():
        assert abs(v) < 1e-10
    # the designated remainder only holds Nyquist scraps of the core spectrum
    total = np.sqrt(sum(float(np.sum(c**2)) for c in ju.components))
    assert parts.zeta.norm_l2() < 1e-3 * max(total, 1.0)


def test_decompose_band_limited_zeta_vanishes():
    X, Y = G2.meshes()
    comps = (np.sin(2 * np.pi * X) + 0.4 * np.cos(4 * np.pi * (X + Y)) + 0.7,
             np.cos(2 * np.pi * Y) - 0.2 * np.sin(4 * np.pi * X))
    parts = hodge_decompose(OneForm(G2, comps))
    assert parts.zeta.norm_l2() < 1e-12
    assert parts.reconstruction_defect() < 1e-12


def test_winding_examples():
    for m in (1, 3, -2):
        X = G2.meshes()[0]
        u = np.exp(1j * 2 * np.pi * m * X / G2.side_lengths[0])
        wv = winding(current(ComplexField(G2, u, epsilon=0.05)))
        assert wv.integer == (m, 0)
        assert abs(wv.raw[0] - m) < 1e-12 and abs(wv.raw[1]) < 1e-12
    # contractible phase: zero winding
    X, Y = G2.meshes()
    u = np.exp(1j * 0.8 * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y))
    wv = winding(current(ComplexField(G2, u, epsilon=0.05)))
    assert wv.integer == (0, 0) and wv.distance_to_integer() < 1e-10


def test_winding_ring_trivial():
    fld = make_initial(G3, 0.07, VortexRing((0.5, 0.5, 0.5), 0.25, axis=2))
    wv = winding(current(fld))
    assert wv.integer == (0, 0, 0)
    assert wv.distance_to_integer() < 0.21  # pi r0^2 / vol of linking lines


def test_harmonic_floor_map_periods():
    geom = TorusGeometry((1.0, 1.5, 0.8), (16, 24, 16))
    u_h = harmonic_floor_map(geom, WindingVector((0.0,) * 3, (1, -2, 0)), epsilon=0.05)
    assert np.abs(np.abs(u_h.values) - 1.0).max() < 1e-14
    ju = current(u_h)
    # period integral oracle along grid lines: sum of ju . dx over each cycle
    for k, expected in zip(range(3), (1, -2, 0)):
        comp = ju.components[k]
        line = [slice(0, 1)] * 3
        line[k] = slice(None)
        period = float(np.sum(comp[tuple(line)])) * geom.spacing[k]
        assert abs(period - 2 * np.pi * expected) < 1e-10
        assert np.abs(comp - comp.flat[0]).max() < 1e-9  # constant form

    trivial = harmonic_floor_map(geom, WindingVector((0.0,) * 3, (0, 0, 0)))
    assert np.abs(trivial.values - 1.0).max() < 1e-14


def test_heat_evolve_exactness():
    X, Y = G2.meshes()
    grid = np.sin(2 * np.pi * X) + 0.3 * np.cos(4 * np.pi * Y)
    out = heat_evolve_grid(G2, grid, 0.01)
    expect = (np.exp(-(2 * np.pi) ** 2 * 0.01) * np.sin(2 * np.pi * X)
              + 0.3 * np.exp(-(4 * np.pi) ** 2 * 0.01) * np.cos(4 * np.pi * Y))
    assert np.abs(out - expect).max() < 1e-12


def test_gauge_decompose_phase_wave():
    fld = make_initial(G3, 0.05, PhaseWave((1, 0, 0)))
    traj = evolve(fld, IntegratorConfig(0.2, 0.01, 4))
    dec = gauge_decompose(traj, (0.0, 0.01))
    assert dec.winding.integer == (1, 0, 0)
    # the harmonic map absorbs the full phase: w stays near 1, phi near 0
    for w in dec.w_fields:
        assert np.abs(w.values - np.abs(w.values)).max() < 1e-6
    for phi in dec.phi_grids:
        assert np.abs(phi).max() < 1e-8
    assert dec.diagnostics["sup_grad_phi_normalized"] < 1e-6
    # j u_h constant in time by construction
    juh = current(dec.u_h)
    assert np.abs(juh.components[0] - 2 * np.pi).max() < 1e-9


def test_gauge_decompose_ring_modulus_identity():
    geom = TorusGeometry((1.25, 1.25, 1.25), (48, 48, 48))
    fld = make_initial(geom, 0.08, VortexRing((0.625, 0.625, 0.625), 0.3, axis=2))
    traj = evolve(fld, IntegratorConfig(0.2, 0.008, 4))
    dec = gauge_decompose(traj, (0.0, traj.times[-1]))
    for w, t in zip(dec.w_fields, dec.times):
        u = traj.field_at(t)
        assert np.abs(np.abs(w.values) - np.abs(u.values)).max() < 1e-12


def test_gauge_unstable_winding():
    # antipodal pair: half the cycles wind, so the period sits 0.5 from Z
    fld = make_initial(G2, 0.05, VortexPoints((((0.25, 0.5), 1), ((0.75, 0.5), -1))))
    traj = evolve(fld, IntegratorConfig(0.2, 0.002, 2))
    with pytest.raises(DecompositionUnstableError):
        gauge_decompose(traj, (0.0, 0.002))


def test_transference_identity_smooth():
    X, Y = G2.meshes()
    u = (1.0 + 0.25 * np.cos(2 * np.pi * X)) * np.exp(1j * (2 * np.pi * Y + 0.4 * np.sin(2 * np.pi * X)))
    fld = ComplexField(G2, u, epsilon=0.05)
    phi = 0.2 * np.sin(2 * np.pi * (X + Y))
    u_h = harmonic_floor_map(G2, winding(current(fld)), epsilon=0.05)
    assert gauge_identity_defect(fld, phi, u_h) < 1e-8


def test_dt_harmonic_coefficient_small():
    fld = make_initial(G3, 0.05, PhaseWave((1, 0, 0)))
    traj = evolve(fld, IntegratorConfig(0.2, 0.01, 2))
    dec = gauge_decompose(traj, (0.0, 0.01))
    scale = max(dec.diagnostics["dt_harmonic_scale"], 1e-12)
    assert abs(dec.diagnostics["dt_harmonic_coefficient"]) < 10 * scale
