import numpy as np
import pytest

from multiboltz.discretization import VelocityGrid
from multiboltz.mixture import (SpeciesSet, conserved_moments, h_functional, maxwellian,
                                maxwellian_values, normalize_frame)


def test_species_validation():
    with pytest.raises(ValueError):
        SpeciesSet([1.0, 0.0])
    with pytest.raises(ValueError):
        SpeciesSet([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        SpeciesSet([1.0], [-1.0])
    s = SpeciesSet([1.0, 2.0], [0.5, 1.0])
    assert s.n == 2 and s.rho == pytest.approx(2.5)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0])
def test_maxwellian_moments(m):
    sp = SpeciesSet([m], [1.3])
    grid = VelocityGrid.for_species(sp)
    mu = maxwellian(sp, grid).values
    mom = conserved_moments(mu, sp, grid)
    assert mom.per_species_mass[0] == pytest.approx(1.3, abs=1e-8)
    assert np.abs(mom.momentum).max() < 1e-12
    assert mom.energy_scalar == pytest.approx(3 * 1.3, abs=1e-8)
    assert mom.theta_number == pytest.approx(1.0, abs=1e-8)


def test_truncated_box_warns():
    sp = SpeciesSet([0.1])
    with pytest.warns(UserWarning):
        eq = maxwellian(sp, VelocityGrid(2.0, 6))
    assert eq.truncated


def test_frame_of_shifted_maxwellian():
    sp = SpeciesSet([1.0, 3.0])
    grid = VelocityGrid(7.0, 28)
    drift = np.array([0.3, -0.2, 0.1])
    F = maxwellian_values(sp, grid.nodes, temperature=1.5, drift=drift)
    shift, scale = normalize_frame(conserved_moments(F, sp, grid), sp)
    assert np.allclose(shift, drift, atol=1e-8)
    assert scale == pytest.approx(np.sqrt(1.5), rel=1e-6)


def test_frame_rejects_zero_mass():
    sp = SpeciesSet([1.0])
    grid = VelocityGrid(4.0, 6)
    with pytest.raises(ValueError):
        normalize_frame(conserved_moments(np.zeros((1, grid.size)), sp, grid), sp)


def test_h_functional_minimised_by_maxwellian(rng):
    sp = SpeciesSet([1.0])
    grid = VelocityGrid(6.0, 16)
    mu = maxwellian_values(sp, grid.nodes)
    # perturbation orthogonal to 1, v, |v|^2 keeps the moments and raises H
    v2 = grid.speed ** 2
    p = mu * (grid.nodes[:, 0] ** 2 - grid.nodes[:, 1] ** 2)
    assert h_functional(mu + 0.05 * p, grid) > h_functional(mu, grid)
    assert np.isfinite(h_functional(np.zeros_like(mu), grid))
    assert v2.shape == (grid.size,)


def test_moments_shape_check():
    sp = SpeciesSet([1.0, 2.0])
    grid = VelocityGrid(4.0, 4)
    with pytest.raises(ValueError):
        conserved_moments(np.zeros((1, grid.size)), sp, grid)
