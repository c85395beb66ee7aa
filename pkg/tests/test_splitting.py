import numpy as np
import pytest

from multiboltz.discretization import SphereQuadrature, VelocityGrid
from multiboltz.kernel import KernelSpec
from multiboltz.linear import CollisionModel
from multiboltz.mixture import SpeciesSet
from multiboltz.splitting import (TruncationSpec, apply_A, apply_B, choose_delta, estimate_cb,
                                  fit_ca, partition_error, ramp, theta_delta, theta_scalar)


@pytest.fixture(scope="module")
def model():
    sp = SpeciesSet([1.0])
    return CollisionModel(sp, KernelSpec.hard_spheres(1), VelocityGrid(4.0, 6),
                          SphereQuadrature.product(2, 4))


def test_ramp():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    r = ramp(t)
    assert r[0] == 0 and r[1] == 0 and r[3] == 1 and r[4] == 1
    assert r[2] == pytest.approx(0.5)
    x = np.linspace(-0.5, 1.5, 401)
    assert np.all(np.diff(ramp(x)) >= 0)


def test_theta_support(rng):
    spec = TruncationSpec(0.1)
    v = np.array([1.0, 0.5, 0.0])
    vs = np.array([-1.0, 0.2, 0.3])
    s = np.array([0.0, 0.0, 1.0])
    assert theta_delta(v, vs, s, spec) == pytest.approx(1.0)
    # outside every bound Theta vanishes
    assert theta_delta(np.array([30.0, 0, 0]), vs, s, spec) == 0.0
    assert theta_delta(v, v + 0.05, s, spec) == 0.0
    z = (v - vs) / np.linalg.norm(v - vs)
    assert theta_delta(v, vs, z, spec) == 0.0
    # compiled and vectorised versions agree
    for _ in range(50):
        a, b = rng.uniform(0, 25, 2)
        c = rng.uniform(-1, 1)
        assert theta_scalar(a, b, c, 0.1) == pytest.approx(
            float(theta_delta(np.array([a, 0, 0]), np.array([a, 0, 0]) - b * np.array(
                [c, np.sqrt(1 - c * c), 0]), np.array([1.0, 0, 0]), spec)), abs=1e-12)
    with pytest.raises(ValueError):
        TruncationSpec(1.5)


def test_partition(model, rng):
    spec = TruncationSpec(0.1)
    f = model.mu * rng.standard_normal(model.mu.shape)
    assert np.allclose(apply_A(f, spec, model) + apply_B(f, spec, model), model.apply_K(f),
                       atol=1e-12 * np.abs(model.apply_K(f)).max())
    assert partition_error(spec, model) < 1e-12


def test_cb_and_ca(model):
    spec = TruncationSpec(0.1)
    est, parts = estimate_cb(3, spec, model, samples=20)
    assert est == max(parts.values()) and est > 0
    assert np.isfinite(fit_ca(3, 1.0, spec, model))
    with pytest.raises(ValueError):
        estimate_cb(2, spec, model)
    d, scan = choose_delta(3, model, deltas=(0.2, 0.1), samples=10)
    assert [s[0] for s in scan] == [0.2, 0.1]
    assert d is None or d in (0.2, 0.1)
