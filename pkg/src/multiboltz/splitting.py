"""Smooth truncation Theta_delta and the splitting K = A + B.

A collects the part of the gain-plus-loss operator K = L + nu weighted by
Theta_delta (compactly supported, regularising), B the part weighted by
1 - Theta_delta (small for large polynomial weights).  Both are the
collocated strong-form matrices of ``CollisionModel.strong``.
"""
from dataclasses import dataclass

import numpy as np

from .collision import theta_delta_scalar

DELTAS = (0.2, 0.1, 0.05, 0.02)


@dataclass(frozen=True)
class TruncationSpec:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def inner(self):
        """(|v| max, |v - v*| range, |cos| max) where Theta = 1."""
        d = self.delta
        return 1 / d, (2 * d, 1 / d), 1 - 2 * d

    @property
    def outer(self):
        """Same bounds for the support of Theta."""
        d = self.delta
        return 2 / d, (d, 2 / d), 1 - d


def ramp(t):
    """Vectorised C-infinity step from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.asarray(t, float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0) & (t < 1)
    a = np.exp(-1.0 / np.where(mid, t, 0.5))
    b = np.exp(-1.0 / np.where(mid, 1 - t, 0.5))
    return np.where(mid, a / (a + b), out)


def theta_from_coords(speed, r, cos_t, delta):
    inv = 1.0 / delta
    t1 = 1.0 - ramp((np.asarray(speed) - inv) / inv)
    t2 = ramp((np.asarray(r) - delta) / delta) * (1.0 - ramp((np.asarray(r) - inv) / inv))
    t3 = 1.0 - ramp((np.abs(cos_t) - (1.0 - 2.0 * delta)) / delta)
    return t1 * t2 * t3


def theta_delta(v, v_star, sigma, spec):
    """Theta_delta(v, v*, sigma), broadcasting over leading axes."""
    v = np.asarray(v, float)
    z = v - np.asarray(v_star, float)
    r = np.linalg.norm(z, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_t = np.where(r > 0, np.sum(z * sigma, -1) / np.where(r > 0, r, 1), 0.0)
    return theta_from_coords(np.linalg.norm(v, axis=-1), r, cos_t, spec.delta)


def theta_scalar(speed, r, cos_t, delta):
    """The compiled scalar used inside the quadrature loops."""
    return theta_delta_scalar(speed, r, cos_t, delta)


# ---------------------------------------------------------------------------

def _apply(mat, f):
    f = np.asarray(f, float)
    if f.ndim == 3:
        return np.stack([_apply(mat, x) for x in f])
    return (mat @ f.ravel()).reshape(f.shape)


def apply_A(f, spec, model):
    return _apply(model.strong(1, spec.delta)[0], f)


def apply_B(f, spec, model):
    return _apply(model.strong(2, spec.delta)[0], f)


def b_matrix(spec, model):
    """B as K - A; avoids a third quadrature pass when only norms are needed."""
    return model.strong(0)[0] - model.strong(1, spec.delta)[0]


def partition_error(spec, model, samples=5, seed=0):
    """max |A f + B f - K f| / max |K f| over random fields."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        f = model.mu * rng.standard_normal(model.mu.shape)
        Kf = model.apply_K(f)
        err = np.abs(apply_A(f, spec, model) + apply_B(f, spec, model) - Kf).max()
        worst = max(worst, err / np.abs(Kf).max())
    return worst


def weight_bar(k, species, grid):
    """w_k = 1 + m_i^{k/2} |v|^k, shape (N, n_v)."""
    m = species.m[:, None]
    return 1.0 + m ** (k / 2) * grid.speed[None] ** k


def estimate_cb(k, spec, model, samples=200, seed=0, matrix=None):
    """Lower estimate of the L1_v(w_k nu) -> L1_v(w_k) norm of B.

    The exact norm of the discrete operator is the largest weighted column
    sum; random fields (smooth and sparse) are evaluated as well and the
    maximum of everything is returned with the breakdown.
    """
    if not k > 2:
        raise ValueError("C_B is defined for k > 2")
    B = b_matrix(spec, model) if matrix is None else matrix
    wk = weight_bar(k, model.species, model.grid).ravel()
    wnu = wk * model.nu().ravel()
    col = (np.abs(B) * wk[:, None]).sum(axis=0) / wnu
    rng = np.random.default_rng(seed)
    best_rand = 0.0
    for s in range(samples):
        if s % 2:
            f = rng.standard_normal(wk.size) * model.mu.ravel()
        else:
            f = np.zeros(wk.size)
            idx = rng.choice(wk.size, size=8, replace=False)
            f[idx] = rng.standard_normal(8)
        den = np.abs(f) @ wnu
        if den == 0:
            continue
        best_rand = max(best_rand, float(np.abs(B @ f) @ wk / den))
    return max(float(col.max()), best_rand), {"columns": float(col.max()),
                                              "random": best_rand}


def fit_ca(k, beta, spec, model):
    """Smallest C_A with ||A f||_{Linf(<v>^b mu^{-1/2})} <= C_A ||f||_{L1(<v>^k)}."""
    A = model.strong(1, spec.delta)[0]
    speed2 = np.tile(model.grid.speed ** 2, model.N)
    w_out = (1 + speed2) ** (beta / 2) / np.sqrt(model.mu.ravel())
    w_in = (1 + speed2) ** (k / 2) * model.grid.cell_volume
    return float((np.abs(A) * w_out[:, None] / w_in[None, :]).max())


def choose_delta(k, model, deltas=DELTAS, samples=50, seed=0):
    """Largest delta whose C_B estimate is below one, with the scan."""
    scan = []
    for d in sorted(deltas, reverse=True):
        est, _ = estimate_cb(k, TruncationSpec(d), model, samples, seed)
        scan.append((d, est))
    ok = [d for d, e in scan if e < 1]
    return (max(ok) if ok else None), scan
