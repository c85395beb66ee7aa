import numpy as np
import pytest

from multiboltz.carleman import (SingularBandError, bound_profile, k_of_mu, kernel_check,
                                 kernel_k, monomial_exponents)
from multiboltz.kernel import KernelSpec
from multiboltz.linear import nu_exact
from multiboltz.mixture import SpeciesSet, maxwellian_values


def test_monomials():
    e = monomial_exponents(3)
    assert e.shape == (20, 3)
    assert e.sum(axis=1).max() == 3
    assert len({tuple(r) for r in e}) == 20


def test_singular_band_refused():
    sp = SpeciesSet([1.0])
    kern = KernelSpec.hard_spheres(1)
    v = np.array([0.1, 0.2, 0.3])
    with pytest.raises(SingularBandError):
        kernel_k(0, 0, v, v + 0.01, sp, kern, band=0.05)


@pytest.mark.parametrize("masses,gamma", [([1.0, 2.0], 1.0), ([1.0, 3.0], 0.0)])
def test_k_of_maxwellian_is_nu_mu(masses, gamma):
    """K mu = nu mu because L mu = 0; exercises planes and spheres together."""
    sp = SpeciesSet(masses, [1.0, 0.6])
    kern = KernelSpec(gamma, np.ones((2, 2)))
    v = np.array([0.4, -0.3, 0.8])
    for i in range(2):
        ref = nu_exact(i, v, sp, kern) * maxwellian_values(sp, v)[i]
        assert k_of_mu(i, v, sp, kern) == pytest.approx(ref, rel=1e-7)


def test_kernel_and_sigma_forms_agree():
    sp = SpeciesSet([1.0, 2.0])
    kern = KernelSpec.hard_spheres(2)
    err = kernel_check(sp, kern, [(1, np.array([0.3, -0.5, 0.2]))], n_fields=10)
    assert err.shape == (10,) and err.max() < 1e-6


def test_bound_profile_positive():
    sp = SpeciesSet([1.0, 2.0])
    val = bound_profile(0, 1, np.array([0.1, 0, 0]), np.array([1.0, 1, 0]), sp, 0.125, 1.0)
    assert np.isfinite(val) and val > 0
