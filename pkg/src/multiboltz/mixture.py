"""Species data, global Maxwellians, macroscopic moments and entropy."""
from dataclasses import dataclass
import warnings

import numpy as np

ENTROPY_FLOOR = 1e-300


@dataclass(frozen=True)
class SpeciesSet:
    masses: tuple
    densities: tuple

    def __init__(self, masses, densities=None):
        masses = tuple(float(m) for m in np.atleast_1d(masses))
        if densities is None:
            densities = (1.0,) * len(masses)
        densities = tuple(float(c) for c in np.atleast_1d(densities))
        if len(masses) == 0:
            raise ValueError("need at least one species")
        if len(masses) != len(densities):
            raise ValueError("masses and densities differ in length")
        if any(not m > 0 for m in masses):
            raise ValueError(f"masses must be positive, got {masses}")
        if any(not c > 0 for c in densities):
            raise ValueError(f"densities must be positive, got {densities}")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "densities", densities)

    @property
    def n(self):
        return len(self.masses)

    @property
    def m(self):
        return np.array(self.masses)

    @property
    def c(self):
        return np.array(self.densities)

    @property
    def rho(self):
        return float(self.m @ self.c)


@dataclass
class MacroMoments:
    per_species_mass: np.ndarray
    momentum: np.ndarray
    energy_scalar: float
    rho: float
    number_density: float

    @property
    def velocity(self):
        if self.rho == 0:
            return np.zeros(3)
        return self.momentum / self.rho

    @property
    def theta_number(self):
        """Energy moment divided by 3 times the total number density."""
        return self.energy_scalar / (3 * self.number_density)

    @property
    def theta_rho(self):
        """Energy moment divided by 3 times the total mass density."""
        return self.energy_scalar / (3 * self.rho)


@dataclass
class EquilibriumVector:
    values: np.ndarray
    tail_mass: np.ndarray
    truncated: bool

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def maxwellian_values(species, v, temperature=1.0, drift=(0.0, 0.0, 0.0)):
    """mu_i(v) at arbitrary points ``v`` of shape (..., 3); returns (N, ...)."""
    v = np.asarray(v, float) - np.asarray(drift, float)
    v2 = np.sum(v * v, axis=-1)
    out = []
    for m, c in zip(species.masses, species.densities):
        a = m / temperature
        out.append(c * (a / (2 * np.pi)) ** 1.5 * np.exp(-0.5 * a * v2))
    return np.array(out)


def maxwellian(species, grid, tail_tol=1e-10):
    """Global equilibrium sampled on the grid.

    The ``truncated`` flag (and a warning) signals a box too small for the
    lightest species at the requested tail tolerance.
    """
    values = maxwellian_values(species, grid.nodes)
    tails = np.array([grid.tail_mass(m) for m in species.masses])
    truncated = bool(np.any(tails > tail_tol))
    if truncated:
        warnings.warn(f"Maxwellian tail mass {tails.max():.2e} exceeds {tail_tol:.0e}",
                      stacklevel=2)
    return EquilibriumVector(values, tails, truncated)


def _cells(F):
    F = np.asarray(F, float)
    return F[None] if F.ndim == 2 else F


def conserved_moments(F, species, grid, cell_volume=None):
    """Species masses, total momentum and the centred energy moment."""
    F3 = _cells(F)
    if F3.shape[1:] != (species.n, grid.size):
        raise ValueError(f"field shape {F3.shape} does not match species/grid")
    vol = 1.0 / F3.shape[0] if cell_volume is None else cell_volume
    dv = grid.cell_volume
    Fv = F3.sum(axis=0) * vol
    v = grid.nodes
    mass = Fv.sum(axis=1) * dv
    m = species.m
    rho = float(m @ mass)
    momentum = (m[:, None] * Fv).sum(axis=0) @ v * dv
    u = momentum / rho if rho > 0 else np.zeros(3)
    w2 = np.sum((v - u) ** 2, axis=1)
    energy = float(np.sum(m[:, None] * Fv * w2[None]) * dv)
    return MacroMoments(mass, momentum, energy, rho, float(mass.sum()))


def normalize_frame(moments, species):
    """Shift and scale mapping the state to zero drift and unit temperature.

    Temperature uses number-density weighting so that the normalized
    Maxwellian is an exact fixed point for unequal masses.
    """
    total = float(np.sum(moments.per_species_mass))
    if not total > 0:
        raise ValueError("zero total mass: frame undefined")
    shift = moments.velocity
    energy = moments.energy_scalar
    theta = energy / (3 * total)
    if not theta > 0:
        raise ValueError("nonpositive temperature")
    return shift, float(np.sqrt(theta))


def h_functional(F, grid, cell_volume=None):
    """Sum over species of the integral of F log F (values floored at 1e-300)."""
    F3 = _cells(F)
    vol = 1.0 / F3.shape[0] if cell_volume is None else cell_volume
    Fc = np.maximum(F3, ENTROPY_FLOOR)
    return float(np.sum(Fc * np.log(Fc)) * grid.cell_volume * vol)
