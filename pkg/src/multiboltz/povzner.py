"""Povzner splitting of post-collisional energies, C_k and the k0 threshold.

Two constants are provided.  ``c_k`` is the closed form

    C_k = 2/(k+2) * (1 - x^p + (1-x)^p) / (1-x) * max_ij 4 pi b_ij^inf / l_bij,

with p = (k+2)/2 and x the largest mass ratio |m_i - m_j| / (m_i + m_j).
It is the bracket evaluated at the mass-ratio bound only, which is an upper
envelope when the bracket is increasing in x.  The bracket is convex in x
with value 2 at both x = 0 and x = 1/2, so for 0 < x < 1/2 it dips below 2
and the closed form undershoots the true supremum.  ``c_k_envelope`` takes
the maximum of the bracket over [0, x] and is a valid bound for all masses.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .geometry import collide


@dataclass
class PovznerSplit:
    E: np.ndarray
    a: np.ndarray
    b: np.ndarray
    e_dir: np.ndarray


def povzner_split(v, v_star, mi, mj):
    """Energy split m_i|v'|^2 = E (1 + a + b <e, sigma>) / 2 (vectorised)."""
    v = np.asarray(v, float)
    vs = np.asarray(v_star, float)
    mi = np.asarray(mi, float)
    mj = np.asarray(mj, float)
    M = mi + mj
    E = mi * np.sum(v * v, -1) + mj * np.sum(vs * vs, -1)
    if np.any(E <= 0):
        raise ValueError("zero collision energy")
    d = (mi - mj) / M
    a = d * (d * (mi * np.sum(v * v, -1) - mj * np.sum(vs * vs, -1))
             + 4 * mi * mj / M * np.sum(v * vs, -1)) / E
    P = mi[..., None] * v + mj[..., None] * vs
    Pn = np.linalg.norm(P, axis=-1)
    b = 4 * mi * mj / M ** 2 * np.linalg.norm(v - vs, axis=-1) * Pn / E
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(Pn[..., None] > 0, P / Pn[..., None], 0.0)
    return PovznerSplit(E, a, b, e)


def mass_bracket(x, p):
    """(1 - x^p + (1 - x)^p) / (1 - x), with the value 2 at x -> 0."""
    if x < 1e-12:
        return 2.0
    return (1.0 - x ** p + (1.0 - x) ** p) / (1.0 - x)


def mass_ratio(species):
    m = species.m
    return float(np.max(np.abs(m[:, None] - m[None]) / (m[:, None] + m[None])))


def c_k(species, kernel, k):
    """Closed-form constant evaluated at the mass-ratio bound."""
    if not k >= 2:
        raise ValueError("C_k is defined for k >= 2")
    p = (k + 2) / 2
    return 2.0 / (k + 2) * mass_bracket(mass_ratio(species), p) * kernel.angular_ratio


def c_k_envelope(species, kernel, k):
    """Supremum of the bracket over [0, x]; equals ``c_k`` when x >= 1/2."""
    if not k >= 2:
        raise ValueError("C_k is defined for k >= 2")
    p = (k + 2) / 2
    bracket = max(2.0, mass_bracket(mass_ratio(species), p))
    return 2.0 / (k + 2) * bracket * kernel.angular_ratio


def k0(species, kernel, k_max=64.0, constant=c_k):
    """(smallest integer k with C_k < 1, real root of C_k = 1 on (2, k_max))."""
    f = lambda k: constant(species, kernel, k) - 1.0
    if f(k_max) >= 0:
        raise ValueError(f"C_k >= 1 for all k <= {k_max:g}: no Povzner threshold")
    k_int = next(k for k in range(2, int(k_max) + 1) if f(k) < 0)
    if f(2.0) <= 1e-13:
        k_real = 2.0
    else:
        k_real = brentq(f, 2.0, k_max, xtol=1e-12, rtol=1e-14)
    return k_int, float(k_real)


@lru_cache(maxsize=4)
def _base_rule(n_z, n_phi):
    from .discretization import SphereQuadrature

    return SphereQuadrature.product(n_z, n_phi)


def aligned_rule(e, n_z=96, n_phi=4):
    """Product rule with its pole on ``e``.

    Post-collisional energies depend on sigma only through <e, sigma>, so
    the accuracy is that of the 1-D Gauss rule in that variable.
    """
    from .discretization import SphereQuadrature, _frame

    base = _base_rule(n_z, n_phi)
    return SphereQuadrature(base.nodes @ _frame(e), base.weights, base.degree)


def povzner_lhs(mi, mj, k, v, v_star, sphere=None):
    """Sphere integral of m_i^{k/2}|v'|^k + m_j^{k/2}|v'*|^k."""
    v = np.asarray(v, float)
    vs = np.asarray(v_star, float)
    split = povzner_split(v, vs, mi, mj)
    if sphere is None:
        e = split.e_dir if np.any(split.e_dir) else np.array([0.0, 0, 1])
        sphere = aligned_rule(e)
    vp, vsp = collide(v, vs, mi, mj, sphere.nodes)
    vals = (mi ** (k / 2) * np.sum(vp ** 2, 1) ** (k / 2)
            + mj ** (k / 2) * np.sum(vsp ** 2, 1) ** (k / 2))
    return float(sphere.integrate(vals)), float(split.E)


def verify_povzner(i, j, k, v, v_star, species, kernel, sphere=None,
                   constant=c_k, tol=1e-10):
    """Returns (lhs, rhs, ok) for one pair of velocities."""
    m = species.masses
    lhs, E = povzner_lhs(m[i], m[j], k, v, v_star, sphere)
    C = constant(species, kernel, k)
    rhs = kernel.l_b[i, j] / kernel.b_inf[i, j] * C * E ** (k / 2)
    return lhs, rhs, bool(lhs <= rhs * (1 + tol))


def lhs_closed_form(a, b, k, E):
    """Exact value of the sphere integral in terms of the split (a, b)."""
    p = k / 2

    def F(a_):
        if b == 0:
            return 2 * ((1 + a_) / 2) ** p
        hi, lo = ((1 + a_ + b) / 2) ** (p + 1), ((1 + a_ - b) / 2) ** (p + 1)
        return 2 * (hi - lo) / ((p + 1) * b)

    return 2 * np.pi * E ** p * (F(a) + F(-a))


def sample_velocities(rng):
    """Random pair, biased toward the extremal configurations."""
    v, vs = rng.standard_normal((2, 3)) * rng.uniform(0.1, 4.0, size=(2, 1))
    mode = rng.integers(5)
    if mode == 1:
        vs = np.zeros(3)
    elif mode == 2:
        v = np.zeros(3)
    elif mode == 3:
        vs = rng.uniform(-3, 3) * v
    return v, vs


@dataclass
class PovznerReport:
    k_values: list
    c_k: list
    k0_integer: int
    k0_real: float
    c_k_envelope: list = field(default_factory=list)
    verification: list = field(default_factory=list)


def povzner_report(species, kernel, k_values, samples=0, seed=0, k_range=(3, 10)):
    """C_k table, thresholds and a randomized verification pass.

    ``verification`` holds (constant name, samples, passed, max lhs/rhs).
    """
    rep = PovznerReport(
        list(k_values),
        [c_k(species, kernel, k) for k in k_values],
        *k0(species, kernel),
        c_k_envelope=[c_k_envelope(species, kernel, k) for k in k_values],
    )
    if samples:
        for name, const in (("closed_form", c_k), ("envelope", c_k_envelope)):
            rng = np.random.default_rng(seed)
            worst, passed = 0.0, 0
            for _ in range(samples):
                i, j = rng.integers(species.n, size=2)
                k = float(rng.integers(k_range[0], k_range[1] + 1))
                v, vs = sample_velocities(rng)
                lhs, rhs, ok = verify_povzner(i, j, k, v, vs, species, kernel,
                                              constant=const)
                worst = max(worst, lhs / rhs)
                passed += ok
            rep.verification.append((name, samples, passed, worst))
    return rep


def brute_force_ratio(mi, mj, k, samples, seed=0):
    """Largest sampled lhs / (4 pi E^{k/2}) for b = 1."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        v, vs = sample_velocities(rng)
        lhs, E = povzner_lhs(mi, mj, k, v, vs)
        best = max(best, lhs / (4 * np.pi * E ** (k / 2)))
    return best
