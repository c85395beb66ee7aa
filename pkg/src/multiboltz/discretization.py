"""Velocity grids, sphere quadratures, weights and discrete norms.

Distribution fields are plain arrays shaped ``(N, n_nodes)`` for a space
homogeneous state or ``(n_cells, N, n_nodes)`` when a spatial axis is
present.  Cell volumes default to ``1 / n_cells`` (unit torus).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform Cartesian midpoint grid on ``[-R, R]^3``."""

    extent: float
    nodes_per_axis: int

    def __post_init__(self):
        if not self.extent > 0:
            raise ValueError("grid extent must be positive")
        if self.nodes_per_axis < 2:
            raise ValueError("need at least two nodes per axis")

    @classmethod
    def for_species(cls, species, nodes_per_axis=24, factor=8.0):
        """Default grid: extent tied to the widest Maxwellian."""
        return cls(factor / np.sqrt(min(species.masses)), nodes_per_axis)

    @property
    def n(self):
        return self.nodes_per_axis

    @property
    def spacing(self):
        return 2.0 * self.extent / self.nodes_per_axis

    @property
    def axis(self):
        h = self.spacing
        return -self.extent + h * (np.arange(self.n) + 0.5)

    @property
    def size(self):
        return self.n ** 3

    @property
    def cell_volume(self):
        return self.spacing ** 3

    @property
    def nodes(self):
        x = self.axis
        g = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
        return g.reshape(-1, 3)

    @property
    def weights(self):
        return np.full(self.size, self.cell_volume)

    @property
    def speed(self):
        return np.linalg.norm(self.nodes, axis=1)

    def index(self, a, b, c):
        return (a * self.n + b) * self.n + c

    def tail_mass(self, mass):
        """Mass fraction of a unit Maxwellian of the given mass outside the box."""
        from scipy.special import erf

        inside = erf(self.extent * np.sqrt(mass / 2.0)) ** 3
        return 1.0 - inside


class SphereQuadrature:
    """Nodes and weights on the unit sphere.

    The product rule uses Gauss-Legendre in ``cos(theta)`` and a uniform
    azimuth; with an even azimuth count it is antipodally symmetric.
    """

    def __init__(self, nodes, weights, degree=None):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.degree = degree
        if self.nodes.shape != (self.weights.size, 3):
            raise ValueError("nodes must be (K, 3) matching weights")
        if np.any(self.weights <= 0):
            raise ValueError("sphere weights must be positive")
        if abs(self.weights.sum() - 4 * np.pi) > 1e-10:
            raise ValueError("sphere weights must sum to 4*pi")

    def __len__(self):
        return self.weights.size

    @classmethod
    def product(cls, n_theta=16, n_phi=16, axis=None):
        x, wx = roots_legendre(n_theta)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        s = np.sqrt(1 - x ** 2)
        local = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(x, n_phi),
        ], axis=1)
        w = np.repeat(wx, n_phi) * (2 * np.pi / n_phi)
        if axis is not None:
            local = local @ _frame(axis)
        return cls(local, w, degree=min(2 * n_theta - 1, n_phi - 1))

    @classmethod
    def lebedev(cls, order=11):
        from scipy.integrate import lebedev_rule

        x, w = lebedev_rule(order)
        return cls(x.T, w, degree=order)

    @classmethod
    def from_config(cls, kind="product", n_theta=16, n_phi=16, order=11):
        if kind == "product":
            return cls.product(n_theta, n_phi)
        if kind == "lebedev":
            return cls.lebedev(order)
        raise ValueError(f"unknown sphere rule {kind!r}")

    def integrate(self, values):
        return np.asarray(values) @ self.weights


def _frame(axis):
    """Rotation whose third row is the unit vector ``axis``."""
    e3 = np.asarray(axis, float) / np.linalg.norm(axis)
    t = np.array([1.0, 0, 0]) if abs(e3[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = t - e3 * (t @ e3)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.stack([e1, e2, e3])


WEIGHT_KINDS = (
    "maxwellian_inv_sqrt",
    "polynomial_k",
    "polynomial_k_bar",
    "nu_weighted",
    "angle_bracket_beta",
)


@dataclass(frozen=True)
class WeightSpec:
    """Velocity weight W_i(v).

    ``maxwellian_inv_sqrt``  <v>^param mu_i^{-1/2}
    ``polynomial_k``         <v>^param
    ``polynomial_k_bar``     1 + m_i^{param/2} |v|^param
    ``nu_weighted``          (1 + m_i^{param/2} |v|^param) nu_i(v)
    ``angle_bracket_beta``   <v>^param
    """

    kind: str
    param: float = 0.0
    nu: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "nu_weighted" and self.nu is None:
            raise ValueError("nu_weighted needs collision frequencies")

    @property
    def species_dependent(self):
        return self.kind in ("maxwellian_inv_sqrt", "polynomial_k_bar", "nu_weighted")

    def values(self, species, grid):
        """Weight array of shape ``(N, n_nodes)``."""
        speed = grid.speed
        bracket = np.sqrt(1.0 + speed ** 2)
        N = species.n
        if self.kind in ("polynomial_k", "angle_bracket_beta"):
            return np.tile(bracket ** self.param, (N, 1))
        if self.kind == "maxwellian_inv_sqrt":
            from .mixture import maxwellian_values

            mu = maxwellian_values(species, grid.nodes)
            return bracket ** self.param / np.sqrt(mu)
        m = np.asarray(species.masses)[:, None]
        bar = 1.0 + m ** (self.param / 2) * speed ** self.param
        if self.kind == "polynomial_k_bar":
            return bar
        return bar * np.asarray(self.nu)


def _as_3d(f):
    f = np.asarray(f)
    if f.ndim == 2:
        return f[None]
    if f.ndim == 3:
        return f
    raise ValueError("distribution fields are (N, n) or (cells, N, n)")


def _weight_array(w, species, grid, shape):
    if isinstance(w, WeightSpec):
        W = w.values(species, grid)
    else:
        W = np.ones(shape[-2:]) if w is None else np.asarray(w, float)
    if W.shape != tuple(shape[-2:]):
        raise ValueError(f"weight shape {W.shape} does not match field {shape}")
    return W


def inner_product(f, g, w, species, grid, cell_volume=None):
    """Discrete weighted L2 product over velocity (and space, if present)."""
    f3, g3 = _as_3d(f), _as_3d(g)
    if f3.shape != g3.shape:
        raise ValueError("shape mismatch")
    W = _weight_array(w, species, grid, f3.shape)
    if f3.shape[-1] != grid.size:
        raise ValueError("field does not live on this grid")
    vol = 1.0 / f3.shape[0] if cell_volume is None else cell_volume
    return float(vol * np.einsum("cin,cin,in->", f3, g3, W ** 2) * grid.cell_volume)


def norm(f, w, flavor, species, grid, cell_volume=None):
    """Discrete analogue of the named mixed norm.

    ``L2_v`` is the L2 norm over velocity and space, ``L1_v_Linf_x`` takes the
    per-node maximum over cells before the velocity sum, and ``Linf_xv``
    sums the per-species suprema.
    """
    f3 = _as_3d(f)
    if f3.shape[-1] != grid.size:
        raise ValueError("field does not live on this grid")
    W = _weight_array(w, species, grid, f3.shape)
    a = np.abs(f3) * W
    if flavor == "L2_v":
        vol = 1.0 / f3.shape[0] if cell_volume is None else cell_volume
        return float(np.sqrt(vol * grid.cell_volume * np.sum(a ** 2)))
    if flavor == "L1_v_Linf_x":
        return float(grid.cell_volume * a.max(axis=0).sum())
    if flavor == "Linf_xv":
        return float(a.max(axis=(0, 2)).sum())
    raise ValueError(f"unknown norm flavor {flavor!r}")
