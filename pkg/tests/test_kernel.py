import numpy as np
import pytest

from multiboltz.kernel import KernelSpec, even_quadratic, forward_peaked


def test_kernel_validation():
    with pytest.raises(ValueError):
        KernelSpec(1.5, [[1.0]])
    with pytest.raises(ValueError):
        KernelSpec(1.0, [[1.0, 2.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        KernelSpec(1.0, [[0.0]])


def test_angular_integrals():
    k = KernelSpec(1.0, [[1.0]])
    assert k.l_b[0, 0] == pytest.approx(4 * np.pi)
    assert k.angular_ratio == pytest.approx(1.0)
    q = KernelSpec(0.0, [[1.0]], even_quadratic(0.5))
    assert q.l_b[0, 0] == pytest.approx(2 * np.pi * (2 + 1 / 3))
    assert q.b_inf[0, 0] == pytest.approx(1.5)
    f = KernelSpec(0.0, [[1.0]], forward_peaked(2.0))
    assert f.l_b[0, 0] == pytest.approx(4 * np.pi / 3)
    assert f.B(0, 0, 2.0, 1.0) == pytest.approx(1.0)
