"""Geodesic flag, growth vectors, diagram arithmetic, leading constants."""

from fractions import Fraction

import numpy as np
import pytest

from geoflow import catalog
from geoflow import flag as fl
from geoflow import hamiltonian as ham


RNG = np.random.default_rng(7)


def test_euclidean_flag():
    for n in (2, 3, 4):
        sys = catalog.builtin("euclidean:%d" % n)
        p0 = RNG.uniform(-1, 1, size=n)
        f = fl.flag_at(sys, np.zeros(n), p0)
        assert f.growth == (n,)
        assert f.ample
        assert f.dimension == n
        assert f.weight == n
        assert f.leading == Fraction(1)


def test_heisenberg_flag_generic():
    sys = catalog.builtin("heisenberg3")
    for _ in range(5):
        p0 = RNG.uniform(-1, 1, size=3)
        p0[2] = RNG.uniform(0.3, 1.5)
        f = fl.flag_at(sys, np.zeros(3), p0)
        assert f.growth == (2, 3)
        assert f.increments == (2, 1)
        assert f.dimension == 5
        assert f.weight == 4
        assert f.young_rows == (2, 1)
        assert f.leading == Fraction(1, 12)


def test_heisenberg_flag_straight_line():
    # p3 = 0 gives a straight geodesic; the flag brackets the whole
    # distribution along it, so the growth is still (2, 3)
    sys = catalog.builtin("heisenberg3")
    f = fl.flag_at(sys, np.zeros(3), np.array([1.0, 0.0, 0.0]))
    assert f.growth == (2, 3)
    assert f.ample


def test_engel_flag_generic():
    sys = catalog.builtin("engel")
    for _ in range(4):
        p0 = np.array([RNG.uniform(0.5, 1.2), RNG.uniform(-1, 1),
                       RNG.uniform(0.3, 1.0), RNG.uniform(0.3, 1.0)])
        f = fl.flag_at(sys, np.zeros(4), p0)
        assert f.growth == (2, 3, 4)
        assert f.increments == (2, 1, 1)
        assert f.dimension == 10
        assert f.weight == 7
        assert f.young_rows == (3, 1)
        assert f.leading == Fraction(1, 8640)


def test_engel_flag_stalls_without_first_control():
    # u1 = 0 initially and p4 = 0: the level-3 direction never appears
    sys = catalog.builtin("engel")
    f = fl.flag_at(sys, np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]))
    assert not f.ample
    assert f.growth[0] == 2


def test_heisenberg5_flag():
    sys = catalog.builtin("heisenberg5:1,2")
    p0 = np.array([0.5, -0.4, 0.6, 0.3, 1.1])
    f = fl.flag_at(sys, np.zeros(5), p0)
    assert f.growth == (4, 5)
    assert f.increments == (4, 1)
    assert f.dimension == 7
    assert f.young_rows == (2, 1, 1, 1)
    assert f.leading == Fraction(1, 12)


def test_martinet_pause_and_resume():
    # at the origin the second bracket level adds nothing, the third does
    sys = catalog.martinet()
    f = fl.flag_at(sys, np.zeros(3), np.array([1.0, 1.0, 0.8]))
    assert f.growth == (2, 2, 3)
    assert f.ample
    assert f.dimension == 1 * 2 + 5 * 1


def test_martinet_abnormal_line_stalls():
    sys = catalog.martinet()
    f = fl.flag_at(sys, np.zeros(3), np.array([0.0, 1.0, 0.5]))
    assert not f.ample


def test_stationary_covector_raises():
    sys = catalog.builtin("heisenberg3")
    with pytest.raises(fl.FlagError):
        fl.flag_at(sys, np.zeros(3), np.array([0.0, 0.0, 1.0]))


def test_monotone_increments_on_builtins():
    cases = [("heisenberg3", [0.6, -0.8, 1.1]),
             ("engel", [0.8, 0.6, 0.5, -0.4]),
             ("heisenberg5:1,2", [0.5, -0.4, 0.6, 0.3, 1.1])]
    for name, p in cases:
        sys = catalog.builtin(name)
        f = fl.flag_at(sys, np.zeros(sys.dim), np.array(p, dtype=float))
        d = f.increments
        assert all(d[i] >= d[i + 1] for i in range(len(d) - 1))
        assert not f.diagnostics


def test_dimension_weight_pure_functions():
    assert fl.geodesic_dimension((2, 1)) == 5
    assert fl.geodesic_dimension((2, 1, 1)) == 10
    assert fl.geodesic_dimension((4, 1)) == 7
    assert fl.homogeneous_weight((2, 1)) == 4
    assert fl.homogeneous_weight((2, 1, 1)) == 7
    assert fl.young_diagram((2, 1, 1)) == (3, 1)
    assert fl.young_diagram((4, 1)) == (2, 1, 1, 1)
    assert fl.leading_constant((1, 1, 1)) == Fraction(1)
    assert fl.leading_constant((2, 1)) == Fraction(1, 12)
    assert fl.leading_constant((3, 1)) == Fraction(1, 8640)


def test_equiregular_on_contact():
    sys = catalog.builtin("heisenberg3")
    flag, ok, growths = fl.equiregular_on(sys, np.zeros(3),
                                          np.array([1.0, 0.0, 1.0]), 0.3)
    assert ok
    assert all(g == (2, 3) for g in growths)


def test_equiregular_detects_martinet_jump():
    sys = catalog.martinet()
    flag, ok, growths = fl.equiregular_on(sys, np.zeros(3),
                                          np.array([1.0, 1.0, 0.7]), 0.3)
    assert not ok
    assert growths[0] == (2, 2, 3)
    assert growths[-1] == (2, 3)


def test_poisson_taylor_matches_flow_derivatives():
    # control derivatives from symbolic brackets vs finite differences
    # of the integrated controls along the flow
    sys = catalog.builtin("engel")
    x0 = np.zeros(4)
    p0 = np.array([0.8, 0.6, 0.5, -0.4])
    coeffs = fl.poisson_taylor(sys, x0, p0, 2)
    h = 1e-3
    samples = {dt: ham.flow(sys, x0, p0, dt) for dt in
               (-2 * h, -h, h, 2 * h)}
    u = {dt: ham.controls_at(sys, s.x, s.p) for dt, s in samples.items()}
    u0 = ham.controls_at(sys, x0, p0)
    du = (u[h] - u[-h]) / (2 * h)
    d2u = (u[h] - 2 * u0 + u[-h]) / (h * h)
    coeffs = np.asarray(coeffs)
    assert np.allclose(coeffs[:, 0], u0, atol=1e-12)
    assert np.allclose(coeffs[:, 1], du, atol=1e-6)
    assert np.allclose(coeffs[:, 2], d2u, atol=1e-4)


def test_velocity_at():
    sys = catalog.builtin("heisenberg3")
    v = fl.velocity_at(sys, np.zeros(3), np.array([0.3, -0.7, 5.0]))
    assert np.allclose(v, [0.3, -0.7, 0.0], atol=1e-14)


def test_extension_reproduces_velocity_along_curve():
    sys = catalog.builtin("engel")
    x0 = np.zeros(4)
    p0 = np.array([0.8, 0.6, 0.5, -0.4])
    T = fl.admissible_extension(sys, x0, p0, 4)
    for t in (0.0, 0.02, 0.05):
        s = ham.flow(sys, x0, p0, t)
        want = fl.velocity_at(sys, s.x, s.p)
        got = T(s.x)
        assert np.allclose(got, want, atol=1e-6)
