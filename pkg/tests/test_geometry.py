import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from multiboltz.geometry import (CarlemanSet, CollisionPair, carleman_hyperplane,
                                 carleman_sphere, collide, random_unit)
from multiboltz.mixture import SpeciesSet

vec = arrays(np.float64, 3, elements=st.floats(-10, 10))
mass = st.floats(0.05, 20)


@settings(max_examples=300, deadline=None)
@given(vec, vec, mass, mass, vec)
def test_collision_conserves(v, vs, mi, mj, s):
    if np.linalg.norm(s) < 1e-3:
        s = np.array([0.0, 0.0, 1.0])
    s = s / np.linalg.norm(s)
    vp, vsp = collide(v, vs, mi, mj, s)
    P = mi * v + mj * vs
    E = mi * v @ v + mj * vs @ vs
    assert np.allclose(mi * vp + mj * vsp, P, rtol=0, atol=1e-12 * (1 + np.abs(P).max()))
    assert abs(mi * vp @ vp + mj * vsp @ vsp - E) <= 1e-12 * (1 + E)


def test_grazing_pair_unchanged():
    v = np.array([1.0, 2.0, 3.0])
    vp, vsp = collide(v, v, 1.0, 2.0, np.array([0.0, 0, 1]))
    assert np.array_equal(vp, v) and np.array_equal(vsp, v)


def test_pair_rejects_non_unit_sigma():
    with pytest.raises(ValueError):
        CollisionPair(np.zeros(3), np.ones(3), 0, 0, np.array([1.0, 1, 0]))


def test_carleman_sets_contain_collisions(rng):
    sp = SpeciesSet([1.0, 2.5])
    for _ in range(200):
        v, vs = rng.standard_normal((2, 3)) * 2
        s = random_unit(rng, 1)[0]
        for i, j in ((0, 0), (0, 1), (1, 0)):
            mi, mj = sp.masses[i], sp.masses[j]
            vp, vsp = collide(v, vs, mi, mj, s)
            plane = carleman_hyperplane(v, vp, i, j, sp)
            assert abs(plane.residual(vsp)) < 1e-10 * (1 + np.abs(vsp).max())
            if mi != mj:
                sph = carleman_sphere(v, vsp, i, j, sp)
                assert abs(sph.residual(vp)) < 1e-10 * (1 + sph.radius)


def test_carleman_degenerate_inputs():
    sp = SpeciesSet([1.0, 1.0])
    v = np.ones(3)
    with pytest.raises(ValueError):
        carleman_hyperplane(v, v, 0, 1, sp)
    with pytest.raises(ValueError):
        carleman_sphere(v, 2 * v, 0, 1, sp)
    with pytest.raises(ValueError):
        CarlemanSet("sphere", np.zeros(3), radius=0.0)
    with pytest.raises(ValueError):
        CarlemanSet("cone", np.zeros(3))
