"""Time integration of the perturbed mixture and relaxation diagnostics.

The collision step works on the perturbation f = F - mu with

    df/dt = L f + Q(f, f)

where L is the assembled symmetric matrix (exact exponential on the
linear part) and Q(f, f) is the quadratic part of the conservative weak
form.  Four-stage integrating-factor Runge-Kutta handles the nonlinear
term, so the stiff velocity tail of L does not restrict the step.  With
a spatial torus, transport and collisions are Strang split and transport
is an exact Fourier shift per velocity node.

``run_positive`` is a separate gain/loss scheme on F itself whose updates
are convex combinations of nonnegative quantities.
"""
from dataclasses import dataclass, field

import numpy as np

from . import collision as _c
from .discretization import WeightSpec, norm
from .linear import CollisionModel, project_pi_L, projection_basis
from .mixture import conserved_moments, h_functional

SPACE_MODES = ("homogeneous", "torus_1d", "torus_3d")
SHAPES = ("anisotropic", "random", "zero", "kernel")
INTEGRATORS = ("rk4", "gain_loss_exponential")
NORMS = ("L2_mu", "Linf_beta_mu", "L1_k")


class SolverError(RuntimeError):
    pass


@dataclass
class Scenario:
    species: object
    kernel: object
    grid: object
    sphere: object
    space: str = "homogeneous"
    cells: int = 1
    amplitude: float = 1e-2
    shape: str = "anisotropic"
    integrator: str = "rk4"
    dt: float = 0.25
    t_end: float = 10.0
    output_every: int = 1
    linear_only: bool = False
    seed: int = 0
    k: float = 3.0
    beta: float = 1.0
    blowup: float = 1e3
    inner_tol: float = 1e-10
    inner_max: int = 50
    prune: float = 0.0

    def __post_init__(self):
        if self.space not in SPACE_MODES:
            raise ValueError(f"space must be one of {SPACE_MODES}")
        if self.shape not in SHAPES:
            raise ValueError(f"initial shape must be one of {SHAPES}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if self.space == "homogeneous":
            self.cells = 1
        elif self.cells < 1:
            raise ValueError("need at least one cell")

    @property
    def n_cells(self):
        return self.cells ** 3 if self.space == "torus_3d" else self.cells

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class RelaxationTrace:
    times: list = field(default_factory=list)
    drifts: list = field(default_factory=list)   # (mass per species, momentum, energy)
    H: list = field(default_factory=list)
    norms: dict = field(default_factory=lambda: {k: [] for k in NORMS})
    min_F: list = field(default_factory=list)
    lam_fit: dict = field(default_factory=dict)
    inner_iterations: list = field(default_factory=list)

    def record(self, t, drift, H, norms, min_F):
        if self.times and not t > self.times[-1]:
            raise SolverError("trace timestamps must increase")
        self.times.append(float(t))
        self.drifts.append(drift)
        self.H.append(float(H))
        for k in NORMS:
            self.norms[k].append(float(norms[k]))
        self.min_F.append(float(min_F))

    def max_drift_rate(self):
        """Largest |moment(t) - moment(0)| / t over the run."""
        d = np.array(self.drifts)
        t = np.array(self.times)
        if len(t) < 2:
            return 0.0
        return float((np.abs(d[1:] - d[0]).max(axis=1) / t[1:]).max())

    def h_increase(self):
        """Largest increase of H between consecutive outputs (<= 0 is monotone)."""
        if len(self.H) < 2:
            return 0.0
        return float(np.diff(self.H).max())

    def fit(self):
        self.lam_fit = {k: fit_decay(self.times, self.norms[k]) for k in NORMS}
        return self.lam_fit

    def rows(self):
        N = (len(self.drifts[0]) - 4) if self.drifts else 0
        header = (["t"] + [f"mass_{i}" for i in range(N)] + ["mom_x", "mom_y", "mom_z",
                  "energy", "H"] + [f"norm_{k}" for k in NORMS] + ["min_F"])
        body = []
        for n, t in enumerate(self.times):
            body.append([t, *self.drifts[n], self.H[n], *(self.norms[k][n] for k in NORMS),
                         self.min_F[n]])
        return header, body


def fit_decay(times, values, floor=1e-14):
    """-slope of a least-squares line through log(values) on the final two
    thirds of the run; values below ``floor`` times the first are dropped."""
    t = np.asarray(times, float)
    y = np.asarray(values, float)
    if len(t) < 3 or y[0] <= 0:
        return np.nan
    keep = (t >= t[-1] / 3) & (y > floor * y[0])
    if keep.sum() < 2:
        return np.nan
    slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# initial data

def _anisotropic(species, v, rng):
    out = []
    for i, (m, c) in enumerate(zip(species.masses, species.densities)):
        a = 0.5 * (-1) ** i + 0.2 * rng.standard_normal()
        T = np.array([1 + a, 1 - a / 2, 1 - a / 2])
        u = 0.3 * (-1) ** i * np.array([1.0, 0.5, 0.0]) + 0.1 * rng.standard_normal(3)
        x = (v - u) ** 2 / T
        out.append(c * (m / (2 * np.pi)) ** 1.5 / np.sqrt(T.prod()) * np.exp(-0.5 * m * x.sum(1)))
    return np.array(out)


def initial_perturbation(sc, model, basis):
    """f0 with the global kernel projection removed, scaled to the amplitude
    in L1_v Linf_x(<v>^k).  Spatial modes get one Fourier mode per cell axis."""
    rng = np.random.default_rng(sc.seed)
    mu = model.mu
    v = sc.grid.nodes
    if sc.shape == "zero" or sc.amplitude == 0:
        return np.zeros((sc.n_cells, *mu.shape))
    if sc.shape == "kernel":
        f = basis.phi[0] * sc.amplitude
        return np.broadcast_to(f, (sc.n_cells, *mu.shape)).copy()
    if sc.shape == "anisotropic":
        raw = _anisotropic(sc.species, v, rng) - mu
    else:
        x = np.concatenate([np.ones((len(v), 1)), v, v ** 2, v[:, :1] * v[:, 1:2]], axis=1)
        raw = mu * (rng.standard_normal((mu.shape[0], x.shape[1])) @ x.T)
    f = np.broadcast_to(raw, (sc.n_cells, *mu.shape)).copy()
    if sc.n_cells > 1:
        pos = cell_centres(sc)
        phase = rng.uniform(0, 2 * np.pi, size=3)
        mod = 1 + 0.5 * np.sum(np.cos(2 * np.pi * pos + phase), axis=1)
        f = f * mod[:, None, None]
    mean = f.mean(axis=0)
    f = f - project_pi_L(mean, basis)[None]
    scale = norm(f, WeightSpec("polynomial_k", sc.k), "L1_v_Linf_x", sc.species, sc.grid)
    return f * (sc.amplitude / scale)


def cell_centres(sc):
    x = (np.arange(sc.cells) + 0.5) / sc.cells
    if sc.space == "torus_1d":
        return np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=1)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1)
    return g.reshape(-1, 3)


# ---------------------------------------------------------------------------
# transport

def fourier_shift(f, sc, t):
    """Exact periodic advection by v t on the unit torus (Fourier modes).

    With an even cell count the Nyquist mode of a real field cannot be
    translated exactly; taking the real part damps it by cos(pi n v t).
    """
    if sc.space == "homogeneous":
        return f
    v = sc.grid.nodes
    n = sc.cells
    k = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
    if sc.space == "torus_1d":
        fh = np.fft.fft(f, axis=0)
        fh *= np.exp(-1j * k[:, None, None] * v[None, None, :, 0] * t)
        return np.fft.ifft(fh, axis=0).real
    g = f.reshape(n, n, n, *f.shape[1:])
    gh = np.fft.fftn(g, axes=(0, 1, 2))
    ph = (k[:, None, None, None] * v[None, None, None, :, 0]
          + k[None, :, None, None] * v[None, None, None, :, 1]
          + k[None, None, :, None] * v[None, None, None, :, 2])
    gh *= np.exp(-1j * t * ph)[:, :, :, None, :]
    return np.fft.ifftn(gh, axes=(0, 1, 2)).real.reshape(f.shape)


def upwind_shift(F, sc, t):
    """Semi-Lagrangian advection with periodic linear interpolation; a
    convex combination of cell values, so nonnegativity is preserved."""
    if sc.space == "homogeneous":
        return F
    v = sc.grid.nodes
    n = sc.cells
    axes = [0] if sc.space == "torus_1d" else [0, 1, 2]
    G = F.reshape(n, *F.shape[1:]) if sc.space == "torus_1d" else F.reshape(n, n, n, *F.shape[1:])
    for ax in axes:
        s = v[:, ax] * t * n            # displacement in cells, per node
        whole = np.floor(s).astype(int)
        frac = s - whole
        out = np.empty_like(G)
        for node in range(v.shape[0]):
            a = np.roll(G[..., node], whole[node], axis=ax)
            b = np.roll(a, 1, axis=ax)
            out[..., node] = (1 - frac[node]) * a + frac[node] * b
        G = out
    return G.reshape(F.shape)


# ---------------------------------------------------------------------------
# diagnostics

class Diagnostics:
    def __init__(self, sc, model):
        self.sc = sc
        self.model = model
        self.w_l2 = WeightSpec("maxwellian_inv_sqrt", 0.0)
        self.w_inf = WeightSpec("maxwellian_inv_sqrt", sc.beta)
        self.w_l1 = WeightSpec("polynomial_k", sc.k)

    def moments(self, F):
        mom = conserved_moments(F, self.sc.species, self.sc.grid)
        v = self.sc.grid.nodes
        F3 = F if F.ndim == 3 else F[None]
        Fv = F3.mean(axis=0)
        m = self.sc.species.m[:, None]
        # raw (uncentred) energy is the conserved quantity
        energy = float(np.sum(m * Fv * np.sum(v * v, 1)) * self.sc.grid.cell_volume)
        return np.concatenate([mom.per_species_mass, mom.momentum, [energy]])

    def norms(self, f):
        sp, g = self.sc.species, self.sc.grid
        return {
            "L2_mu": norm(f, self.w_l2, "L2_v", sp, g),
            "Linf_beta_mu": norm(f, self.w_inf, "Linf_xv", sp, g),
            "L1_k": norm(f, self.w_l1, "L1_v_Linf_x", sp, g),
        }

    def record(self, trace, t, F, f):
        trace.record(t, self.moments(F), h_functional(F, self.sc.grid), self.norms(f),
                     float(F.min()))


# ---------------------------------------------------------------------------
# perturbative integrator

class LawsonRK4:
    """Integrating-factor RK4 for f' = M f + N(f) with exact exp(t M)."""

    def __init__(self, M, nonlinear, dt):
        lam, V = M.eig
        self.M = M
        self.N = nonlinear
        self.dt = dt
        self.E = (V * np.exp(lam * dt)) @ V.T
        self.Eh = (V * np.exp(lam * dt / 2)) @ V.T

    def _lin(self, E, f):
        return self.M.from_h(E @ self.M.to_h(f))

    def step(self, f):
        h = self.dt
        if self.N is None:
            return self._lin(self.E, f)
        k1 = self.N(f)
        a = self._lin(self.Eh, f)
        k2 = self.N(a + 0.5 * h * self._lin(self.Eh, k1))
        k3 = self.N(a + 0.5 * h * k2)
        k4 = self.N(self._lin(self.E, f) + h * self._lin(self.Eh, k3))
        return (self._lin(self.E, f) + h / 6 * (self._lin(self.E, k1)
                + 2 * self._lin(self.Eh, k2 + k3) + k4))


def _build(sc):
    model = CollisionModel(sc.species, sc.kernel, sc.grid, sc.sphere, prune=sc.prune)
    basis = projection_basis(sc.species, sc.grid)
    return model, basis


def step(f, integrator, sc):
    """One Strang step (transport half, collisions, transport half)."""
    f = fourier_shift(f, sc, 0.5 * sc.dt)
    f = np.stack([integrator.step(x) for x in f])
    return fourier_shift(f, sc, 0.5 * sc.dt)


def run(sc, model=None, basis=None, f0=None):
    """Perturbative run; returns (trace, final perturbation)."""
    if sc.integrator != "rk4":
        return run_positive(sc)
    if model is None:
        model, basis = _build(sc)
    M = model.matrix()
    mu = model.mu
    nonlinear = None
    if not sc.linear_only:
        nonlinear = lambda f: model.bilinear(f / mu, f / mu)
    integ = LawsonRK4(M, nonlinear, sc.dt)
    f = initial_perturbation(sc, model, basis) if f0 is None else np.asarray(f0, float)
    if f.ndim == 2:
        f = f[None]
    diag = Diagnostics(sc, model)
    trace = RelaxationTrace()
    diag.record(trace, 0.0, mu[None] + f, f)
    n0 = max(trace.norms["L2_mu"][0], 1e-300)
    for s in range(1, sc.steps + 1):
        f = step(f, integ, sc)
        if not np.all(np.isfinite(f)):
            raise SolverError(f"non-finite values at step {s}")
        if s % sc.output_every == 0 or s == sc.steps:
            diag.record(trace, s * sc.dt, mu[None] + f, f)
            if trace.norms["L2_mu"][-1] > sc.blowup * n0 and n0 > 0:
                raise SolverError(f"blow-up: norm grew by more than {sc.blowup:g} "
                                  f"at t = {s * sc.dt:g}")
    trace.fit()
    return trace, f


# ---------------------------------------------------------------------------
# positivity-preserving gain/loss scheme

class GainLoss:
    """Q = -q1(F) F + Q2(F) with q1 >= 0 and Q2 >= 0 for F >= 0."""

    def __init__(self, model):
        self.model = model
        g = model.grid
        k = model.kernel
        self.Lam = _c.loss_matrix(model.coords, k.gamma, k.c_phi, k.table,
                                  model.sphere.nodes, model.sphere.weights, g.spacing)

    def q1(self, F):
        return np.einsum("ijab,jb->ia", self.Lam, F)

    def Q2(self, F):
        m = self.model
        g = m.grid
        k = m.kernel
        return _c.positive_gain(np.ascontiguousarray(F), m.mu, m.coords, g.n, g.extent,
                                g.spacing, m.species.m, m.species.c, k.c_phi, k.gamma,
                                k.table, m.sphere.nodes, m.sphere.weights)

    def apply(self, F):
        return self.Q2(F) - self.q1(F) * F


def _duhamel(F, Fbar, gl, dt):
    q = gl.q1(Fbar)
    G = gl.Q2(Fbar)
    e = np.exp(-dt * q)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(q * dt > 1e-12, (1 - e) / np.where(q > 0, q, 1), dt)
    return e * F + phi * G


def positive_step(F, gl, sc):
    """Exponential Duhamel update with a fixed-point inner iteration on the
    frozen coefficient field; every iterate is nonnegative."""
    new = _duhamel(F, F, gl, sc.dt)
    for it in range(1, sc.inner_max + 1):
        nxt = _duhamel(F, 0.5 * (F + new), gl, sc.dt)
        delta = np.abs(nxt - new).max()
        new = nxt
        if delta <= sc.inner_tol * max(np.abs(new).max(), 1e-300):
            return new, it
    raise SolverError(f"inner iteration did not converge in {sc.inner_max} sweeps "
                      f"(last change {delta:.2e})")


def run_positive(sc, F0=None, model=None):
    if model is None:
        model = CollisionModel(sc.species, sc.kernel, sc.grid, sc.sphere)
    gl = GainLoss(model)
    mu = model.mu
    if F0 is None:
        basis = projection_basis(sc.species, sc.grid)
        f0 = initial_perturbation(sc, model, basis)
        F0 = np.maximum(mu[None] + f0, 0.0)
    F = np.asarray(F0, float)
    if F.ndim == 2:
        F = F[None]
    if F.min() < 0:
        raise ValueError("run_positive needs a nonnegative initial state")
    diag = Diagnostics(sc, model)
    trace = RelaxationTrace()
    diag.record(trace, 0.0, F, F - mu[None])
    for s in range(1, sc.steps + 1):
        F = upwind_shift(F, sc, 0.5 * sc.dt)
        out = []
        for cell in F:
            new, it = positive_step(cell, gl, sc)
            trace.inner_iterations.append(it)
            out.append(new)
        F = upwind_shift(np.stack(out), sc, 0.5 * sc.dt)
        if s % sc.output_every == 0 or s == sc.steps:
            diag.record(trace, s * sc.dt, F, F - mu[None])
    trace.fit()
    return trace, F


def gain_loss_mismatch(F, model, gl=None):
    """Relative gap between the positive split -q1 F + Q2 and the weak Q."""
    gl = gl or GainLoss(model)
    a = gl.apply(F)
    b = model.apply_Q(F)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def kernel_drift(sc, model=None, basis=None, k=0):
    """Linear homogeneous run from a kernel field; returns max |f(t) - f0|."""
    if model is None:
        model, basis = _build(sc)
    f0 = basis.phi[k] * sc.amplitude
    f = model.matrix().propagate(f0, np.arange(1, sc.steps + 1) * sc.dt)
    return float(np.abs(f - f0).max() / np.abs(f0).max())
