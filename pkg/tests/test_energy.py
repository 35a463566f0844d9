import numpy as np
import pytest

from gltorus.dynamics import IntegratorConfig, PhaseWave, RandomBudget, evolve, make_initial
from gltorus.energy import (dissipation_check, energy_density, energy_test_inequality,
                            measure_of_set, total_energy)
from gltorus.errors import NormalizationError
from gltorus.fields import ComplexField, current
from gltorus.geometry import TorusGeometry

GEOM = TorusGeometry((1.0, 1.0), (64, 64))
EPS = 0.05


def test_density_trivial_cases():
    one = ComplexField(GEOM, np.ones(GEOM.grid_sizes, dtype=complex), epsilon=EPS)
    assert np.abs(energy_density(one).density).max() < 1e-20
    zero = ComplexField(GEOM, np.zeros(GEOM.grid_sizes, dtype=complex), epsilon=EPS)
    led = energy_density(zero)
    assert np.allclose(led.density, 1.0 / (4 * EPS**2))
    wave = make_initial(GEOM, EPS, PhaseWave((1, 0)))
    led_w = energy_density(wave)
    assert np.allclose(led_w.density, 0.5 * (2 * np.pi) ** 2)
    assert np.all(led_w.potential <= led_w.density + 1e-15)


def test_measure_of_set_basic():
    wave = make_initial(GEOM, EPS, PhaseWave((1, 0)))
    led = energy_density(wave)
    empty = np.zeros(GEOM.grid_sizes, dtype=bool)
    full = np.ones(GEOM.grid_sizes, dtype=bool)
    assert measure_of_set(led, empty) == 0.0
    assert np.isclose(measure_of_set(led, full), led.normalized_total)
    half = np.zeros(GEOM.grid_sizes, dtype=bool)
    half[: 32, :] = True
    assert abs(measure_of_set(led, half) - 0.5 * led.normalized_total) \
        < 1e-12 * led.normalized_total


def test_measure_additivity_and_normalization_error():
    wave = make_initial(GEOM, EPS, PhaseWave((1, 1)))
    led = energy_density(wave)
    rng = np.random.default_rng(0)
    a = rng.random(GEOM.grid_sizes) < 0.3
    b = (~a) & (rng.random(GEOM.grid_sizes) < 0.5)
    assert np.isclose(measure_of_set(led, a) + measure_of_set(led, b),
                      measure_of_set(led, a | b))
    bad = ComplexField(GEOM, np.ones(GEOM.grid_sizes, dtype=complex), epsilon=1.5)
    with pytest.raises(NormalizationError):
        measure_of_set(energy_density(bad), a)


def test_dissipation_stationary():
    one = ComplexField(GEOM, np.ones(GEOM.grid_sizes, dtype=complex), epsilon=EPS)
    from gltorus.dynamics import Trajectory

    traj = Trajectory([one, one.with_values(one.values, time=0.01)], [0.0, 0.0])
    rep = dissipation_check(traj, np.ones(GEOM.grid_sizes))
    assert abs(rep["lhs"]) < 1e-18 and abs(rep["rhs"]) < 1e-18


def _bump(geom):
    X, Y = geom.meshes()
    Lx, Ly = geom.side_lengths
    return np.exp(2.0 * (np.cos(2 * np.pi * (X / Lx - 0.3))
                         + np.cos(2 * np.pi * (Y / Ly - 0.6)) - 2.0))


def _burned(fld, dtf, burn_t):
    return evolve(fld, IntegratorConfig(dtf, burn_t, 10**6)).snapshots[-1]


def perturbed_wave(geom, eps):
    X, Y = geom.meshes()
    Lx, Ly = geom.side_lengths
    phi = 0.5 * np.sin(2 * np.pi * Y / Ly)
    return ComplexField(geom, np.exp(1j * (2 * np.pi * X / Lx + phi)), epsilon=eps)


@pytest.mark.parametrize("chi_kind", ["one", "bump"])
def test_dissipation_identity_and_dt_refinement(chi_kind):
    # window starts after a short burn-in so the eps-stiff modulus transient
    # (rate ~ 1/eps^2, unresolvable at dt = 0.2 eps^2) is not in the integral
    geom = TorusGeometry((2.0, 2.0), (128, 128))
    chi = np.ones(geom.grid_sizes) if chi_kind == "one" else _bump(geom)
    errs = []
    for dtf in (0.2, 0.1):
        fld = _burned(perturbed_wave(geom, EPS), dtf, 0.004)
        traj = evolve(fld, IntegratorConfig(dtf, 0.08, 1))
        rep = dissipation_check(traj, chi)
        errs.append(rep["rel_err"])
    assert errs[0] < 1e-2
    assert errs[0] / max(errs[1], 1e-18) > 1.7


def test_dissipation_time_difference_variant():
    geom = TorusGeometry((2.0, 2.0), (64, 64))
    fld = _burned(make_initial(geom, EPS, RandomBudget(1.0, seed=2, k_cut=1)), 0.2, 0.004)
    traj = evolve(fld, IntegratorConfig(0.2, 0.06, 1))
    a = dissipation_check(traj, np.ones(geom.grid_sizes))
    b = dissipation_check(traj, np.ones(geom.grid_sizes), use_time_difference=True)
    assert a["rel_err"] < 1e-2
    assert b["rel_err"] < 5e-2


def test_energy_test_function_inequality():
    fld = make_initial(GEOM, EPS, RandomBudget(1.2, seed=4))
    traj = evolve(fld, IntegratorConfig(0.2, 30 * 0.2 * EPS**2, 2))
    rep = energy_test_inequality(traj, _bump(GEOM))
    slack = 1e-2 * max(abs(rep["lhs"]), abs(rep["rhs"]), 1.0)
    assert rep["lhs"] <= rep["rhs"] + slack


def test_current_energy_lower_bound():
    fld = make_initial(GEOM, EPS, RandomBudget(1.0, seed=9))
    led = energy_density(fld)
    ju = current(fld)
    ju_sq = sum(c**2 for c in ju.components)
    max_mod_sq = float(np.abs(fld.values).max()) ** 2
    assert np.all(led.density >= ju_sq / (2 * max_mod_sq) - 1e-12)
