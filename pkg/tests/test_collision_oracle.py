"""The compiled weak collision form against a direct numpy evaluation."""
import numpy as np
import pytest

from multiboltz.discretization import SphereQuadrature, VelocityGrid
from multiboltz.kernel import KernelSpec, forward_peaked
from multiboltz.linear import CollisionModel
from multiboltz.mixture import SpeciesSet, maxwellian_values


def stencil(p, n):
    """Seven-point quadratic stencil (indices, weights) at grid coordinates p (K, 3)."""
    c = np.clip(np.floor(p + 0.5).astype(int), 1, n - 2)
    t = p - c
    base = (c[:, 0] * n + c[:, 1]) * n + c[:, 2]
    idx = [base]
    wts = [1.0 - np.sum(t * t, axis=1)]
    for ax, step in enumerate((n * n, n, 1)):
        idx += [base + step, base - step]
        wts += [0.5 * t[:, ax] * (t[:, ax] + 1), 0.5 * t[:, ax] * (t[:, ax] - 1)]
    return np.stack(idx, 1), np.stack(wts, 1)


def brute_force_form(a, b, species, kernel, grid, sphere):
    v = grid.nodes
    mu = maxwellian_values(species, v)
    n, h, R = grid.n, grid.spacing, grid.extent
    sig, sw = sphere.nodes, sphere.weights
    N, nv = a.shape
    out = np.zeros_like(a)
    for i in range(N):
        for j in range(N):
            mi, mj = species.masses[i], species.masses[j]
            M = mi + mj
            for n1 in range(nv):
                for n2 in range(nv):
                    if n1 == n2:
                        continue
                    z = v[n2] - v[n1]
                    r = np.linalg.norm(z)
                    cos_t = -(sig @ z) / r
                    W = (mu[i, n1] * mu[j, n2] * kernel.c_phi[i, j] * r ** kernel.gamma
                         * sw * kernel.b(i, j, cos_t))
                    cm = (mi * v[n1] + mj * v[n2]) / M
                    # same operation order as the compiled loop: primed points can
                    # sit exactly on a stencil switch, where rounding decides
                    p1 = (cm + (mj * r / M) * sig) * (1.0 / h) + (R / h - 0.5)
                    p2 = (cm - (mi * r / M) * sig) * (1.0 / h) + (R / h - 0.5)
                    i1, w1 = stencil(p1, n)
                    i2, w2 = stencil(p2, n)
                    ia, ib = np.sum(w1 * a[i, i1], 1), np.sum(w1 * b[i, i1], 1)
                    ja, jb = np.sum(w2 * a[j, i2], 1), np.sum(w2 * b[j, i2], 1)
                    D = 0.5 * (ia * jb + ib * ja) - 0.5 * (a[i, n1] * b[j, n2]
                                                          + b[i, n1] * a[j, n2])
                    t = 0.25 * W * D
                    out[i, n1] += t.sum()
                    out[j, n2] += t.sum()
                    np.add.at(out[i], i1.ravel(), -(t[:, None] * w1).ravel())
                    np.add.at(out[j], i2.ravel(), -(t[:, None] * w2).ravel())
    return out * h ** 3


@pytest.mark.slow
@pytest.mark.parametrize("gamma,angular", [(1.0, None), (0.0, forward_peaked(1.0))])
def test_weak_form_matches_brute_force(gamma, angular):
    species = SpeciesSet([1.0, 2.0], [1.0, 0.7])
    kernel = KernelSpec(gamma, [[1.0, 0.8], [0.8, 1.3]], angular)
    grid = VelocityGrid(3.0, 4)
    sphere = SphereQuadrature.product(2, 3)
    rng = np.random.default_rng(5)
    a = rng.standard_normal((2, grid.size))
    b = rng.standard_normal((2, grid.size))
    ref = brute_force_form(a, b, species, kernel, grid, sphere)
    got = CollisionModel(species, kernel, grid, sphere).bilinear(a, b)
    assert np.abs(got - ref).max() <= 1e-10 * np.abs(ref).max()


def test_brute_force_on_six_cubed():
    """Single species on the 6^3 grid, Maxwell kernel, g = F / mu fields."""
    species = SpeciesSet([1.0])
    kernel = KernelSpec.maxwell(1)
    grid = VelocityGrid(3.0, 6)
    sphere = SphereQuadrature.product(1, 2)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((1, grid.size))
    ref = brute_force_form(a, a, species, kernel, grid, sphere)
    got = CollisionModel(species, kernel, grid, sphere).bilinear(a, a)
    assert np.abs(got - ref).max() <= 1e-10 * np.abs(ref).max()
