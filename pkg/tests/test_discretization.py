import numpy as np
import pytest

from multiboltz.discretization import (SphereQuadrature, VelocityGrid, WeightSpec,
                                       inner_product, norm)
from multiboltz.mixture import SpeciesSet


def test_grid_layout():
    g = VelocityGrid(3.0, 6)
    assert g.spacing == pytest.approx(1.0)
    assert g.axis[0] == pytest.approx(-2.5)
    assert g.nodes.shape == (216, 3)
    a, b, c = 1, 4, 2
    assert np.allclose(g.nodes[g.index(a, b, c)], g.axis[[a, b, c]])
    with pytest.raises(ValueError):
        VelocityGrid(-1.0, 4)
    with pytest.raises(ValueError):
        VelocityGrid(1.0, 1)


@pytest.mark.parametrize("rule", [SphereQuadrature.product(6, 12), SphereQuadrature.lebedev(11)])
def test_sphere_rules_integrate_polynomials(rule):
    x, y, z = rule.nodes.T
    assert rule.integrate(np.ones(len(rule))) == pytest.approx(4 * np.pi)
    assert rule.integrate(z ** 2) == pytest.approx(4 * np.pi / 3)
    assert rule.integrate(x ** 2 * y ** 2) == pytest.approx(4 * np.pi / 15)
    assert abs(rule.integrate(x * y * z)) < 1e-13
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)


def test_sphere_config_errors():
    with pytest.raises(ValueError):
        SphereQuadrature.from_config("octahedron")


def test_weights_and_norms():
    sp = SpeciesSet([1.0, 2.0])
    g = VelocityGrid(4.0, 6)
    f = np.ones((2, g.size))
    w = WeightSpec("polynomial_k", 2.0)
    W = w.values(sp, g)
    assert np.allclose(W[0], 1 + g.speed ** 2)
    l1 = norm(f, w, "L1_v_Linf_x", sp, g)
    assert l1 == pytest.approx(2 * np.sum(1 + g.speed ** 2) * g.cell_volume)
    assert norm(f, None, "L2_v", sp, g) ** 2 == pytest.approx(inner_product(f, f, None, sp, g))
    assert norm(f, None, "Linf_xv", sp, g) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        WeightSpec("bogus")
    with pytest.raises(ValueError):
        WeightSpec("nu_weighted", 1.0)
    with pytest.raises(ValueError):
        norm(f, None, "L7", sp, g)


def test_space_cells_share_volume():
    sp = SpeciesSet([1.0])
    g = VelocityGrid(3.0, 4)
    f = np.ones((5, 1, g.size))
    assert inner_product(f, f, None, sp, g) == pytest.approx(g.size * g.cell_volume)
