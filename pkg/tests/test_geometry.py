import itertools

import numpy as np
import pytest

from gltorus.errors import GLInputError
from gltorus.geometry import (CapFunction, TorusGeometry, ball_mask, d_plus,
                              d_plus_grid, torus_distance)

CAP = CapFunction()


def test_cap_profile_contract():
    # f1-f5 on a dense sample
    s = np.linspace(0.0, 1.5, 30001)
    f = CAP(s)
    fp = CAP.derivative(s)
    on_unit = s <= 1.0
    assert np.allclose(f[s <= 0.5], s[s <= 0.5])            # f1
    assert np.allclose(f[s >= 1.0], 1.0)                    # f2
    assert np.all(f[on_unit] >= s[on_unit] - 1e-12)         # f3
    assert np.all(np.diff(f) >= -1e-14)                     # f4
    assert fp.max() < np.sqrt(2.0)                          # f5
    assert abs(CAP(1.0) - 1.0) < 1e-12


def test_cap_derivative_consistency():
    s = np.linspace(0.01, 1.3, 5000)
    h = 1e-6
    fd = (CAP(s + h) - CAP(s - h)) / (2 * h)
    assert np.abs(fd - CAP.derivative(s)).max() < 5e-5
    fd2 = (CAP.derivative(s + h) - CAP.derivative(s - h)) / (2 * h)
    assert np.abs(fd2 - CAP.second_derivative(s)).max() < 1e-3


def test_metric_constants():
    geom = TorusGeometry((1.0, 2.0), (16, 32))
    assert geom.inj == 0.5
    assert np.isclose(geom.diam, 0.5 * np.sqrt(5.0))
    assert 0 < geom.c_star <= 1.0
    assert np.isclose(geom.volume, 2.0)
    assert np.isclose(geom.cell_volume, (1 / 16) * (2 / 32))


def test_torus_distance_identity_and_wrap():
    geom = TorusGeometry((1.0, 1.0), (16, 16))
    assert torus_distance(geom, (0.3, 0.4), (0.3, 0.4)) == 0.0
    assert np.isclose(torus_distance(geom, (0.0, 0.0), (0.9, 0.0)), 0.1)


def test_torus_distance_brute_force_oracle():
    geom = TorusGeometry((2.0, 2.0, 2.0), (8, 8, 8))
    x = np.array([0.0, 0.0, 0.0])
    y = np.array([1.0, 1.0, 1.0])
    # independent oracle: min over 3^3 integer translates
    best = min(np.linalg.norm(x - (y + 2.0 * np.array(shift)))
               for shift in itertools.product((-1, 0, 1), repeat=3))
    got = torus_distance(geom, x, y)
    assert np.isclose(got, best)
    assert np.isclose(got, np.sqrt(3.0))


def test_torus_distance_symmetry_triangle():
    geom = TorusGeometry((1.0, 1.5, 0.8), (8, 8, 8))
    rng = np.random.default_rng(42)
    for _ in range(50):
        x, y, z = (rng.uniform(0, geom.side_lengths) for _ in range(3))
        assert np.isclose(torus_distance(geom, x, y), torus_distance(geom, y, x))
        assert torus_distance(geom, x, z) <= (torus_distance(geom, x, y)
                                              + torus_distance(geom, y, z) + 1e-12)


def test_d_plus_paper_items():
    geom = TorusGeometry((1.0, 1.0), (32, 32))
    # f(s) = s for small distances
    x, y = (0.1, 0.2), (0.15, 0.3)
    d = torus_distance(geom, x, y)
    assert d < geom.inj / 2
    assert np.isclose(d_plus(geom, x, y), d)
    # cap saturates at inj for far pairs
    far_x, far_y = (0.0, 0.0), (0.5, 0.5)
    assert torus_distance(geom, far_x, far_y) >= geom.inj
    assert np.isclose(d_plus(geom, far_x, far_y), geom.inj)
    assert d_plus(geom, x, x) == 0.0


def test_d_inequality_random_pairs():
    geom = TorusGeometry((1.0, 2.0, 1.4), (8, 8, 8))
    rng = np.random.default_rng(3)
    for _ in range(200):
        x, y = rng.uniform(0, geom.side_lengths), rng.uniform(0, geom.side_lengths)
        d = torus_distance(geom, x, y)
        dp = d_plus(geom, x, y)
        assert geom.c_star * d - 1e-12 <= dp <= 2.0 * d + 1e-12


def test_d_plus_lipschitz():
    geom = TorusGeometry((1.0, 1.0), (32, 32))
    rng = np.random.default_rng(11)
    y = (0.35, 0.6)
    for _ in range(100):
        x = rng.uniform(0, 1, 2)
        step = 1e-5 * rng.standard_normal(2)
        diff = abs(d_plus(geom, x + step, y) - d_plus(geom, x, y))
        assert diff <= 2.0 * np.linalg.norm(step) + 1e-12


def test_ball_mask_trivial_and_monotone():
    geom = TorusGeometry((1.0, 1.0), (16, 16))
    assert ball_mask(geom, (0.5, 0.5), 0.0).sum() == 0
    assert ball_mask(geom, (0.5, 0.5), geom.diam + 0.01).all()
    small = ball_mask(geom, (0.2, 0.8), 0.15)
    big = ball_mask(geom, (0.2, 0.8), 0.3)
    assert np.all(big[small])


def test_ball_mask_brute_force_count():
    geom = TorusGeometry((1.0, 1.0), (16, 16))
    center, radius = (0.0, 0.0), 0.1
    count = 0
    for i in range(16):
        for j in range(16):
            if torus_distance(geom, (i / 16, j / 16), center) < radius:
                count += 1
    assert ball_mask(geom, center, radius).sum() == count


def test_ball_volume_converges():
    geom = TorusGeometry((1.0, 1.0), (128, 128))
    r = geom.inj / 4
    vol = ball_mask(geom, (0.5, 0.5), r).sum() * geom.cell_volume
    assert abs(vol - np.pi * r**2) / (np.pi * r**2) < 0.05


def test_dplus_grid_matches_pointwise():
    geom = TorusGeometry((1.0, 1.3), (16, 16))
    grid = d_plus_grid(geom, (0.3, 0.7))
    for i in (0, 5, 11):
        for j in (2, 9, 15):
            x = (i * geom.spacing[0], j * geom.spacing[1])
            assert np.isclose(grid[i, j], d_plus(geom, x, (0.3, 0.7)))


def test_input_errors():
    geom = TorusGeometry((1.0, 1.0), (16, 16))
    with pytest.raises(GLInputError):
        torus_distance(geom, (0.1, 0.2, 0.3), (0.0, 0.0))
    with pytest.raises(GLInputError):
        TorusGeometry((1.0,), (16,))
    with pytest.raises(GLInputError):
        TorusGeometry((1.0, 1.0), (15, 16))
    with pytest.raises(GLInputError):
        ball_mask(geom, (0.0, 0.0), -0.1)
