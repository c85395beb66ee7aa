"""Collision kernel data B_ij = C_ij |v - v*|^gamma b_ij(cos theta)."""
import numpy as np
from scipy.special import roots_legendre

TABLE_SIZE = 4097


def constant(scale=1.0):
    return lambda x: np.full_like(np.asarray(x, float), scale)


def forward_peaked(p=1.0):
    """b(x) = (1 + x)^p / 2^p, normalised to sup 1."""
    return lambda x: ((1.0 + np.asarray(x, float)) / 2.0) ** p


def even_quadratic(a=0.5):
    """b(x) = 1 + a x^2."""
    return lambda x: 1.0 + a * np.asarray(x, float) ** 2


ANGULAR = {"constant": constant, "forward": forward_peaked, "quadratic": even_quadratic}


class KernelSpec:
    """Per-pair kernel data with cached sup and sphere integral of b."""

    def __init__(self, gamma, c_phi, angular=None, cb=1.0):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        c_phi = np.atleast_2d(np.asarray(c_phi, float))
        if c_phi.shape[0] != c_phi.shape[1]:
            raise ValueError("c_phi must be square")
        if not np.allclose(c_phi, c_phi.T, rtol=0, atol=1e-14 * np.abs(c_phi).max()):
            raise ValueError("c_phi must be symmetric")
        if np.any(c_phi <= 0):
            raise ValueError("c_phi must be positive")
        n = c_phi.shape[0]
        if angular is None:
            angular = constant()
        if callable(angular):
            angular = [[angular] * n for _ in range(n)]
        self.gamma = float(gamma)
        self.c_phi = c_phi
        self.angular = angular
        self.cb = float(cb)
        x = np.linspace(-1.0, 1.0, TABLE_SIZE)
        xg, wg = roots_legendre(64)
        self.table = np.empty((n, n, TABLE_SIZE))
        self.b_inf = np.empty((n, n))
        self.l_b = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                b = angular[i][j]
                vals = b(x)
                if np.any(vals < 0):
                    raise ValueError("angular part must be nonnegative")
                self.table[i, j] = vals
                self.b_inf[i, j] = vals.max()
                self.l_b[i, j] = 2 * np.pi * float(wg @ b(xg))
                if not self.l_b[i, j] > 0:
                    raise ValueError("angular part must have positive integral")
        if not np.allclose(self.l_b, self.l_b.T):
            raise ValueError("angular parts must be symmetric in the pair")

    @property
    def n(self):
        return self.c_phi.shape[0]

    def b(self, i, j, x):
        return self.angular[i][j](x)

    def phi(self, i, j, r):
        return self.c_phi[i, j] * np.asarray(r, float) ** self.gamma

    def B(self, i, j, r, cos_theta):
        return self.phi(i, j, r) * self.b(i, j, cos_theta)

    @property
    def angular_ratio(self):
        """max over pairs of 4 pi b_inf / l_b."""
        return float(np.max(4 * np.pi * self.b_inf / self.l_b))

    @classmethod
    def hard_spheres(cls, n, c_phi=1.0):
        return cls(1.0, np.full((n, n), c_phi))

    @classmethod
    def maxwell(cls, n, c_phi=1.0):
        return cls(0.0, np.full((n, n), c_phi))
