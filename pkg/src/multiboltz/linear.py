"""Linearized collision operator, kernel projections and spectral diagnostics."""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, linalg

from . import collision as _c
from .discretization import WeightSpec, norm
from .mixture import maxwellian_values

PAIR_MASKS = ("all", "mono", "bi")


class CollisionModel:
    """Species, kernel, velocity grid and sphere rule bundled for the
    compiled loops.  Distribution arrays are (N, n_v) or (cells, N, n_v)."""

    def __init__(self, species, kernel, grid, sphere, prune=0.0):
        if kernel.n != species.n:
            raise ValueError("kernel and species set disagree on N")
        self.species = species
        self.kernel = kernel
        self.grid = grid
        self.sphere = sphere
        self.prune = prune
        self.coords = np.ascontiguousarray(grid.nodes)
        self.mu = maxwellian_values(species, self.coords)
        self._strong = {}
        self._matrix = {}

    @property
    def N(self):
        return self.species.n

    @property
    def nv(self):
        return self.grid.size

    def _mask(self, pairs):
        if pairs not in PAIR_MASKS:
            raise ValueError(f"pairs must be one of {PAIR_MASKS}")
        eye = np.eye(self.N, dtype=np.bool_)
        return {"all": np.ones_like(eye), "mono": eye, "bi": ~eye}[pairs]

    def _geom(self):
        g = self.grid
        k = self.kernel
        return (self.coords, g.n, g.extent, g.spacing, self.species.m,
                k.c_phi, k.gamma, k.table)

    # weak (conservative) form -------------------------------------------
    def bilinear(self, a, b, pairs="all"):
        """Symmetric collision form of g-fields ``a``, ``b`` (F units out)."""
        coords, n, R, h, m, cphi, gamma, tab = self._geom()
        return _c.weak_bilinear(
            np.ascontiguousarray(a, float), np.ascontiguousarray(b, float),
            coords, n, R, h, m, cphi, gamma, tab, self.sphere.nodes,
            self.sphere.weights, self.mu, self._mask(pairs), self.prune)

    def _per_cell(self, fn, *fields):
        f0 = np.asarray(fields[0])
        if f0.ndim == 2:
            return fn(*fields)
        return np.stack([fn(*(x[c] for x in fields)) for c in range(f0.shape[0])])

    def apply_Q(self, F):
        """Full collision operator Q(F), per space cell."""
        return self._per_cell(lambda G: self.bilinear(G / self.mu, G / self.mu), F)

    def apply_Q_tilde(self, f, g):
        return self._per_cell(lambda a, b: self.bilinear(a / self.mu, b / self.mu), f, g)

    def apply_L(self, f, pairs="all"):
        """Matrix-free linearization around mu."""
        one = np.ones_like(self.mu)
        return self._per_cell(lambda x: 2.0 * self.bilinear(one, x / self.mu, pairs), f)

    def matrix(self, pairs="all", tol=1e-8):
        if pairs not in self._matrix:
            self._matrix[pairs] = assemble_matrix(self, pairs, tol)
        return self._matrix[pairs]

    # strong (collocation) form -----------------------------------------
    def strong(self, mode=0, delta=0.1):
        """Collocated K matrix on F-values and the matching nu (cached)."""
        key = (mode, float(delta) if mode else 0.0)
        if key not in self._strong:
            coords, n, R, h, m, cphi, gamma, tab = self._geom()
            self._strong[key] = _c.strong_matrix(
                coords, n, R, h, m, self.species.c, cphi, gamma, tab,
                self.sphere.nodes, self.sphere.weights, self.mu, key[1], mode)
        return self._strong[key]

    def nu(self):
        """Collision frequency at the grid nodes (loss coefficient)."""
        return self.strong()[1]

    def apply_K(self, f):
        """Gain-plus-loss part K = L + nu in collocated form."""
        Km = self.strong()[0]
        return self._per_cell(lambda x: (Km @ x.ravel()).reshape(x.shape), f)

    def apply_L_strong(self, f):
        return self._per_cell(lambda x: self.apply_K(x) - self.nu() * x, f)

    def nu_at(self, i, points):
        coords, n, R, h, m, cphi, gamma, tab = self._geom()
        pts = np.ascontiguousarray(np.atleast_2d(points), float)
        return _c.nu_points(i, pts, coords, h, gamma, cphi, tab, self.sphere.nodes,
                            self.sphere.weights, self.mu)


def nu(i, v, species, kernel, sphere, grid):
    """Collision frequency of species ``i`` at velocity ``v`` by quadrature."""
    model = CollisionModel(species, kernel, grid, sphere)
    return float(model.nu_at(i, np.asarray(v, float))[0])


def gaussian_distance_moment(speed, mass, gamma):
    """E|v - X|^gamma for X ~ N(0, I / mass) and |v| = speed."""
    s = 1.0 / np.sqrt(mass)
    a = float(speed)
    if gamma == 0:
        return 1.0
    if gamma == 1:
        if a < 1e-12:
            return s * np.sqrt(8 / np.pi)
        from scipy.special import erf

        x = a / (np.sqrt(2) * s)
        return s * (np.sqrt(2 / np.pi) * np.exp(-x * x) + (a / s + s / a) * erf(x))
    # radial density of |v - X| (noncentral chi with three degrees of freedom)
    def dens(rho):
        if a < 1e-12:
            return np.sqrt(2 / np.pi) * rho ** 2 / s ** 3 * np.exp(-rho ** 2 / (2 * s * s))
        return rho / (a * s * np.sqrt(2 * np.pi)) * (
            np.exp(-(rho - a) ** 2 / (2 * s * s)) - np.exp(-(rho + a) ** 2 / (2 * s * s)))
    val, _ = integrate.quad(lambda r: r ** gamma * dens(r), 0, a + 40 * s, limit=200)
    return val


def nu_exact(i, v, species, kernel):
    """Collision frequency from the closed-form Gaussian distance moments."""
    speed = np.linalg.norm(v)
    return float(sum(
        kernel.c_phi[i, j] * kernel.l_b[i, j] * species.densities[j]
        * gaussian_distance_moment(speed, species.masses[j], kernel.gamma)
        for j in range(species.n)))


# ---------------------------------------------------------------------------
# kernel basis and projections

@dataclass
class ProjectionBasis:
    phi: np.ndarray          # (N + 4, N, n_v), orthonormal
    mono: np.ndarray         # (5N, N, n_v), orthonormal
    mono_raw: np.ndarray     # (5N, N, n_v), m_i mu_i (1, v, |v|^2)
    mu: np.ndarray
    cell_volume: float

    def dot(self, f, g):
        return float(np.sum(f * g / self.mu) * self.cell_volume)

    def gram(self, which="phi"):
        B = getattr(self, which)
        flat = B.reshape(B.shape[0], -1) / np.sqrt(self.mu.ravel())
        return flat @ flat.T * self.cell_volume

    @property
    def h_vectors(self):
        """Euclidean-orthonormal images in the symmetrized variable."""
        flat = self.phi.reshape(self.phi.shape[0], -1)
        return (flat / np.sqrt(self.mu.ravel()) * np.sqrt(self.cell_volume)).T


def _orthonormalize(fields, mu, dv):
    flat = fields.reshape(fields.shape[0], -1)
    G = (flat / mu.ravel()) @ flat.T * dv
    w, V = linalg.eigh(G)
    T = V @ np.diag(w ** -0.5) @ V.T
    return (T @ flat).reshape(fields.shape)


def kernel_fields(species, v, mu):
    """Analytic collision-invariant basis (before discrete re-orthonormalization)."""
    N = species.n
    m, c = species.m, species.c
    out = np.zeros((N + 4, N, v.shape[0]))
    for k in range(N):
        out[k, k] = mu[k] / np.sqrt(c[k])
    rho = m @ c
    for l in range(3):
        out[N + l] = v[:, l] * m[:, None] * mu / np.sqrt(rho)
    v2 = np.sum(v * v, axis=1)
    out[N + 3] = (v2[None] - 3 / m[:, None]) / np.sqrt(6) * m[:, None] * mu / np.sqrt(c.sum())
    return out


def projection_basis(species, grid):
    v = grid.nodes
    mu = maxwellian_values(species, v)
    dv = grid.cell_volume
    phi = _orthonormalize(kernel_fields(species, v, mu), mu, dv)
    N = species.n
    raw = np.zeros((5 * N, N, grid.size))
    v2 = np.sum(v * v, axis=1)
    for i in range(N):
        mm = species.masses[i] * mu[i]
        for q, p in enumerate((np.ones_like(v2), v[:, 0], v[:, 1], v[:, 2], v2)):
            raw[5 * i + q, i] = mm * p
    mono = _orthonormalize(raw, mu, dv)
    return ProjectionBasis(phi, mono, raw, mu, dv)


def _project(f, B, mu, dv):
    f = np.asarray(f, float)
    flat = B.reshape(B.shape[0], -1)
    lead = f.shape[:-2]
    ff = f.reshape(-1, flat.shape[1])
    coef = (ff / mu.ravel()) @ flat.T * dv
    return (coef @ flat).reshape(lead + B.shape[1:])


def project_pi_L(f, basis):
    return _project(f, basis.phi, basis.mu, basis.cell_volume)


def project_pi_Lm(f, basis):
    return _project(f, basis.mono, basis.mu, basis.cell_volume)


def mono_coordinates(f, basis, tol=1e-8):
    """(a_i, u_i, e_i) with f_i = m_i mu_i (a_i + u_i.v + e_i |v|^2)."""
    f = np.asarray(f, float)
    N = f.shape[0]
    coords = np.zeros((N, 5))
    recon = np.zeros_like(f)
    for i in range(N):
        R = basis.mono_raw[5 * i:5 * i + 5, i]
        G = (R / basis.mu[i]) @ R.T
        rhs = (R / basis.mu[i]) @ f[i]
        coords[i] = linalg.solve(G, rhs, assume_a="pos")
        recon[i] = coords[i] @ R
    scale = np.sqrt(basis.dot(f, f))
    err = np.sqrt(basis.dot(f - recon, f - recon))
    if err > tol * max(scale, 1e-300):
        raise ValueError(f"field is not in the mono-species kernel (residual {err:.2e})")
    return coords[:, 0], coords[:, 1:4], coords[:, 4]


def energy_functional_E(f, basis, tol=1e-8):
    """Sum over ordered species pairs of |u_i - u_j|^2 + (e_i - e_j)^2."""
    _, u, e = mono_coordinates(f, basis, tol)
    du = u[:, None, :] - u[None, :, :]
    de = e[:, None] - e[None, :]
    return float(np.sum(du ** 2) + np.sum(de ** 2))


# ---------------------------------------------------------------------------
# assembled operator and spectrum

@dataclass
class OperatorMatrix:
    """Symmetric matrix of L acting on h = f mu^{-1/2} (flattened (N, n_v))."""

    matrix: np.ndarray
    sqrt_mu: np.ndarray
    shape: tuple
    cell_volume: float
    pairs: str = "all"
    asymmetry: float = 0.0   # relative asymmetry before symmetrization

    @property
    def dim(self):
        return self.matrix.shape[0]

    def to_h(self, f):
        return np.asarray(f).reshape(-1) / self.sqrt_mu

    def from_h(self, h):
        return (h * self.sqrt_mu).reshape(self.shape)

    def apply(self, f):
        f = np.asarray(f, float)
        if f.ndim == 3:
            return np.stack([self.apply(x) for x in f])
        return self.from_h(self.matrix @ self.to_h(f))

    def symmetry_error(self):
        M = self.matrix
        return max(self.asymmetry, float(np.abs(M - M.T).max() / np.abs(M).max()))

    @cached_property
    def eig(self):
        return linalg.eigh(self.matrix)

    def propagate(self, f, times):
        """exp(t M) applied to f for each t; returns (len(times), N, n_v)."""
        lam, V = self.eig
        c = V.T @ self.to_h(f)
        out = [self.from_h(V @ (np.exp(lam * t) * c)) for t in np.atleast_1d(times)]
        return np.array(out)


def assemble_matrix(model, pairs="all", tol=1e-8, cap=8000):
    dim = model.N * model.nv
    if dim > cap:
        raise ValueError(f"dense assembly of dimension {dim} exceeds the cap {cap}")
    coords, n, R, h, m, cphi, gamma, tab = model._geom()
    A = _c.weak_matrix(coords, n, R, h, m, cphi, gamma, tab, model.sphere.nodes,
                       model.sphere.weights, model.mu, model._mask(pairs))
    s = np.sqrt(model.mu.ravel())
    M = A * h ** 3 / np.outer(s, s)
    err = np.abs(M - M.T).max() / max(np.abs(M).max(), 1e-300)
    if err > tol:
        raise RuntimeError(f"assembled operator is not symmetric (rel. error {err:.2e})")
    M = 0.5 * (M + M.T)
    return OperatorMatrix(M, s, (model.N, model.nv), model.grid.cell_volume, pairs, float(err))


@dataclass
class SpectralReport:
    gap: float
    kernel_dim_check: int
    dirichlet_samples: list
    nu_fit: list
    coercivity: float = np.nan
    symmetry_error: float = np.nan
    eigenvalues: np.ndarray = field(default=None, repr=False)
    remainder_max: float = np.nan

    def as_dict(self):
        return {
            "gap": self.gap,
            "kernel_dim_check": self.kernel_dim_check,
            "coercivity_fit": self.coercivity,
            "remainder_max": self.remainder_max,
            "symmetry_error": self.symmetry_error,
            "dirichlet_min_ratio": min(r for _, r in self.dirichlet_samples)
            if self.dirichlet_samples else np.nan,
            **{f"nu0_{i}": a for i, (a, _) in enumerate(self.nu_fit)},
            **{f"nu1_{i}": b for i, (_, b) in enumerate(self.nu_fit)},
        }


def nu_fit(nu_vals, speed, gamma):
    """(nu0, nu1) per species with nu0 (1+|v|^g) <= nu <= nu1 (1+|v|^g)."""
    ref = 1.0 + speed ** gamma
    return [(float((x / ref).min()), float((x / ref).max())) for x in nu_vals]


def spectral_gap(M, basis, samples=1000, seed=0, gamma=0.0, speed=None,
                 nu_vals=None, zero_tol=1e-9):
    """Gap on the complement of the discrete kernel basis, plus a sampled
    weighted coercivity constant."""
    lam, V = M.eig
    scale = np.abs(lam).max()
    nzero = int(np.sum(np.abs(lam) <= zero_tol * scale))
    Y = basis.h_vectors
    overlap = np.sum((Y.T @ V) ** 2, axis=0)
    rest = lam[overlap < 0.5]
    top = float(rest.max())
    rng = np.random.default_rng(seed)
    N, nv = M.shape
    if speed is None:
        speed = np.zeros(nv)
    wgt = np.tile((1.0 + speed ** 2) ** (gamma / 2), N)
    P = np.eye(M.dim) - Y @ Y.T
    ratios = []
    for s in range(samples):
        y = rng.standard_normal(M.dim)
        yp = P @ y
        ratios.append((s, float(-(y @ (M.matrix @ y)) / (yp @ (wgt * yp)))))
    fit = nu_fit(nu_vals, speed, gamma) if nu_vals is not None else []
    return SpectralReport(
        gap=-top, kernel_dim_check=nzero, dirichlet_samples=ratios, nu_fit=fit,
        coercivity=min(r for _, r in ratios), symmetry_error=M.symmetry_error(),
        eigenvalues=lam, remainder_max=top)


# ---------------------------------------------------------------------------
# moment identities and the dissipative norm

def test_function_weights(mass, grid, tol=1e-8):
    """(10/m, 5/m) and the quadrature residuals of their orthogonality relations."""
    alpha, alpha_c = 10.0 / mass, 5.0 / mass
    v = grid.nodes
    v2 = np.sum(v * v, axis=1)
    mu = (mass / (2 * np.pi)) ** 1.5 * np.exp(-0.5 * mass * v2)
    dv = grid.cell_volume
    res = []
    for k in range(3):
        vk2 = v[:, k] ** 2
        r1 = np.sum((v2 - alpha) * (v2 - 3 / mass) / 2 * vk2 * mu) * dv
        r2 = np.sum((v2 - alpha_c) * vk2 * mu) * dv
        res.append((r1, r2))
    res = np.array(res)
    if np.abs(res).max() > tol:
        raise ValueError(f"grid too coarse: moment residual {np.abs(res).max():.2e}")
    return alpha, alpha_c, res


def dissipative_norm(f, alpha, k, M, horizon, species, grid, basis=None,
                     panels=64, order=8, kernel_tol=1e-8):
    """alpha ||f|| + int_0^horizon ||exp(sM) f|| ds + exponential tail,
    with ||.|| the L1_v(<v>^k) norm."""
    f = np.asarray(f, float)
    w = WeightSpec("polynomial_k", k)
    f_norm = norm(f, w, "L1_v_Linf_x", species, grid)
    if f_norm == 0:
        return 0.0
    if basis is not None:
        pk = project_pi_L(f, basis)
        if np.sqrt(basis.dot(pk, pk)) > kernel_tol * np.sqrt(basis.dot(f, f)):
            raise ValueError("f has a kernel component; project it out first")
    x, wx = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, horizon, panels + 1)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ts.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wx)
    ts = np.concatenate(ts)
    ws = np.concatenate(ws)
    traj = M.propagate(f, np.concatenate([ts, [horizon - 0.1 * horizon, horizon]]))
    vals = np.array([norm(g, w, "L1_v_Linf_x", species, grid) for g in traj])
    body = float(vals[:-2] @ ws)
    n1, n2 = vals[-2], vals[-1]
    if n2 >= n1 or n2 <= 0:
        if n2 > 1e-14 * f_norm:
            raise ValueError("trajectory is not decaying; project out the kernel first")
        return alpha * f_norm + body
    rate = np.log(n1 / n2) / (0.1 * horizon)
    return alpha * f_norm + body + n2 / rate
