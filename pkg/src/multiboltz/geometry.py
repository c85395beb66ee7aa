"""Elastic collision kinematics and the Carleman admissible sets."""
from dataclasses import dataclass

import numpy as np

GRAZING_EPS = 1e-14


@dataclass(frozen=True)
class CollisionPair:
    v: np.ndarray
    v_star: np.ndarray
    i: int
    j: int
    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, float)
        if abs(np.linalg.norm(s) - 1.0) > 1e-12:
            raise ValueError("sigma must be a unit vector")


def collide(v, v_star, mi, mj, sigma):
    """Vectorised collision map; arrays broadcast over leading axes.

    Pairs with |v - v*| below ``GRAZING_EPS`` are returned unchanged.
    """
    v = np.asarray(v, float)
    vs = np.asarray(v_star, float)
    mi = np.asarray(mi, float)[..., None]
    mj = np.asarray(mj, float)[..., None]
    M = mi + mj
    r = np.linalg.norm(v - vs, axis=-1)[..., None]
    r = np.where(r < GRAZING_EPS, 0.0, r)
    centre = mi * v + mj * vs
    vp = (centre + mj * r * sigma) / M
    vsp = (centre - mi * r * sigma) / M
    return vp, vsp


def post_collision(pair, species):
    m = species.masses
    return collide(pair.v, pair.v_star, m[pair.i], m[pair.j], pair.sigma)


@dataclass(frozen=True)
class CarlemanSet:
    kind: str
    origin: np.ndarray
    normal: np.ndarray = None
    radius: float = None

    def __post_init__(self):
        if self.kind == "hyperplane":
            if self.normal is None or not np.linalg.norm(self.normal) > 0:
                raise ValueError("hyperplane needs a nonzero normal")
        elif self.kind == "sphere":
            if self.radius is None or not self.radius > 0:
                raise ValueError("sphere needs a positive radius")
        else:
            raise ValueError(f"unknown Carleman set {self.kind!r}")

    @property
    def normal_or_radius(self):
        return self.normal if self.kind == "hyperplane" else self.radius

    def residual(self, u):
        """Signed membership residual of points ``u`` (distance units)."""
        d = np.asarray(u, float) - self.origin
        if self.kind == "hyperplane":
            n = self.normal / np.linalg.norm(self.normal)
            return d @ n
        return np.linalg.norm(d, axis=-1) - self.radius


def plane_origin(v, w, mi, mj):
    """V_E for the pair (v, w); broadcasts."""
    return ((mi + mj) * np.asarray(v) - (mi - mj) * np.asarray(w)) / (2 * mj)


def carleman_hyperplane(v, v_prime, i, j, species):
    """Plane of admissible v'* given v and v'."""
    v, vp = np.asarray(v, float), np.asarray(v_prime, float)
    if np.array_equal(v, vp):
        raise ValueError("degenerate Carleman set: v == v'")
    mi, mj = species.masses[i], species.masses[j]
    return CarlemanSet("hyperplane", plane_origin(v, vp, mi, mj), normal=v - vp)


def carleman_sphere(v, v_star_prime, i, j, species):
    """Sphere of admissible v' given v and v'* (unequal masses only)."""
    mi, mj = species.masses[i], species.masses[j]
    if mi == mj:
        raise ValueError("equal masses: the admissible set is a hyperplane")
    v, vsp = np.asarray(v, float), np.asarray(v_star_prime, float)
    if np.array_equal(v, vsp):
        raise ValueError("degenerate Carleman set: v == v'*")
    centre = (mi * v - mj * vsp) / (mi - mj)
    radius = mj * np.linalg.norm(v - vsp) / abs(mi - mj)
    return CarlemanSet("sphere", centre, radius=float(radius))


def random_unit(rng, size):
    x = rng.standard_normal((size, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
