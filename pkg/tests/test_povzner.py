import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from multiboltz.kernel import KernelSpec, even_quadratic
from multiboltz.mixture import SpeciesSet
from multiboltz.povzner import (brute_force_ratio, c_k, c_k_envelope, k0, lhs_closed_form,
                                mass_bracket, povzner_lhs, povzner_report, povzner_split,
                                verify_povzner)

vec = arrays(np.float64, 3, elements=st.floats(-5, 5))


@settings(max_examples=300, deadline=None)
@given(vec, vec, st.floats(0.1, 10), st.floats(0.1, 10))
def test_split_bounds(v, vs, mi, mj):
    if mi * v @ v + mj * vs @ vs < 1e-8:
        return
    s = povzner_split(v, vs, mi, mj)
    eps = 1e-10
    assert abs(s.a) <= abs(mi - mj) / (mi + mj) + eps
    assert abs(s.a) + s.b <= 1 + eps


def test_split_saturates_at_equal_velocities():
    v = np.array([0.3, 1.0, -2.0])
    s = povzner_split(v, v, 1.0, 3.0)
    assert abs(s.a) == pytest.approx(0.5)
    assert s.b == pytest.approx(0.0)


def test_zero_energy_rejected():
    with pytest.raises(ValueError):
        povzner_split(np.zeros(3), np.zeros(3), 1.0, 1.0)


@pytest.mark.parametrize("k", [3, 4, 6, 10])
def test_equal_mass_constant(k):
    sp = SpeciesSet([1.0, 1.0])
    kern = KernelSpec.hard_spheres(2)
    assert c_k(sp, kern, k) == pytest.approx(4 / (k + 2), rel=1e-14)


def test_thresholds():
    sp = SpeciesSet([1.0])
    assert k0(sp, KernelSpec.hard_spheres(1)) == (3, pytest.approx(2.0, abs=1e-6))
    # m = (1, 3): the x powers cancel and C_k = 4 / (k + 2)
    sp3 = SpeciesSet([1.0, 3.0])
    assert k0(sp3, KernelSpec.hard_spheres(2))[1] == pytest.approx(2.0, abs=1e-6)
    # strongly anisotropic b pushes the threshold up
    kq = KernelSpec(1.0, [[1.0]], even_quadratic(4.0))
    ki, kr = k0(sp, kq)
    assert kr > 2 and ki == int(np.floor(kr)) + 1
    assert c_k(sp, kq, kr) == pytest.approx(1.0, abs=1e-10)


def test_monotone_and_bracket_limit():
    sp = SpeciesSet([1.0, 5.0])
    kern = KernelSpec.hard_spheres(2)
    vals = [c_k(sp, kern, k) for k in np.linspace(2.1, 20, 60)]
    assert np.all(np.diff(vals) < 0)
    assert mass_bracket(0.0, 3.0) == 2.0
    assert mass_bracket(1e-9, 3.0) == pytest.approx(2.0, abs=1e-8)


def test_closed_form_lhs_matches_quadrature(rng):
    for _ in range(20):
        v, vs = rng.standard_normal((2, 3))
        mi, mj = rng.uniform(0.5, 3, 2)
        k = rng.uniform(2.5, 8)
        s = povzner_split(v, vs, mi, mj)
        lhs, E = povzner_lhs(mi, mj, k, v, vs)
        assert lhs == pytest.approx(lhs_closed_form(s.a, s.b, k, E), rel=1e-10)


def test_energy_equality_at_k2(rng):
    sp = SpeciesSet([1.0, 2.0])
    kern = KernelSpec.hard_spheres(2)
    for _ in range(10):
        v, vs = rng.standard_normal((2, 3))
        lhs, rhs, ok = verify_povzner(0, 1, 2.0, v, vs, sp, kern, constant=c_k_envelope)
        assert lhs == pytest.approx(rhs, rel=1e-12) and ok


def test_envelope_is_a_bound_for_all_mass_ratios():
    kern = KernelSpec.hard_spheres(2)
    for m2 in (1.0, 1.5, 2.0, 3.0, 9.0):
        sp = SpeciesSet([1.0, m2])
        for k in (3, 5, 8):
            ratio = brute_force_ratio(1.0, m2, k, 300, seed=1)
            assert ratio <= c_k_envelope(sp, kern, k) * (1 + 1e-9)


def test_closed_form_undershoots_for_small_mass_ratio():
    """For mass ratios |m_i - m_j| / (m_i + m_j) in (0, 1/2) the closed form
    sits below the sampled supremum (recorded in the decisions ledger)."""
    sp = SpeciesSet([1.0, 2.0])
    kern = KernelSpec.hard_spheres(2)
    ratio = brute_force_ratio(1.0, 1.0, 4, 200, seed=0)
    assert ratio > c_k(sp, kern, 4)


def test_report_fields():
    sp = SpeciesSet([1.0, 1.0])
    rep = povzner_report(sp, KernelSpec.hard_spheres(2), [3, 6], samples=50)
    assert rep.c_k[1] == pytest.approx(0.5)
    assert rep.k0_integer == 3
    assert [r[0] for r in rep.verification] == ["closed_form", "envelope"]
    assert all(r[2] == r[1] for r in rep.verification)
