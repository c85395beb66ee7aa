"""Compiled quadrature loops over (species pair, v, v*, sigma).

Two discretisations of the collision integral share these loops.

Weak form.  For test functions psi the quadrature of

    sum_i int Q_i psi_i = 1/4 sum_ij int B mu_i mu_j* (g'g'* - g g*)
                          (psi + psi* - psi' - psi'*)

with g = F / mu and primed values taken from a seven-point stencil that
reproduces 1, v and |v|^2 exactly.  Collision invariants then give exactly
zero, Q(mu) = 0 holds exactly, and the linearisation is a symmetric
negative semidefinite matrix.

Strong form.  Collocation of the sigma-integral at each node with
trilinear interpolation of primed values (zero outside the grid) and the
Maxwellian evaluated analytically at primed points.
"""
import numpy as np
from numba import njit

TWO_PI_32 = (2.0 * np.pi) ** 1.5


@njit(cache=True)
def _bval(tab, x):
    T = tab.shape[0]
    t = (x + 1.0) * 0.5 * (T - 1)
    k = int(t)
    if k < 0:
        return tab[0]
    if k >= T - 1:
        return tab[T - 1]
    f = t - k
    return tab[k] * (1.0 - f) + tab[k + 1] * f


@njit(cache=True)
def _mu(m, c, x, y, z):
    return c * (m ** 1.5) / TWO_PI_32 * np.exp(-0.5 * m * (x * x + y * y + z * z))


@njit(cache=True)
def _star(px, py, pz, n, idx, w):
    """Seven-point stencil at grid coordinate p.

    The centre is the nearest node pulled one node in from the boundary,
    so outside the interior the axis stencils extrapolate (still exact on
    quadratics along each axis).  Primed velocities outside the box are
    kept: dropping them would leave the corner nodes nearly collisionless.
    """
    cx = min(max(int(np.floor(px + 0.5)), 1), n - 2)
    cy = min(max(int(np.floor(py + 0.5)), 1), n - 2)
    cz = min(max(int(np.floor(pz + 0.5)), 1), n - 2)
    tx = px - cx
    ty = py - cy
    tz = pz - cz
    c = (cx * n + cy) * n + cz
    idx[0] = c
    w[0] = 1.0 - tx * tx - ty * ty - tz * tz
    sx = n * n
    idx[1] = c + sx
    w[1] = 0.5 * tx * (tx + 1.0)
    idx[2] = c - sx
    w[2] = 0.5 * tx * (tx - 1.0)
    idx[3] = c + n
    w[3] = 0.5 * ty * (ty + 1.0)
    idx[4] = c - n
    w[4] = 0.5 * ty * (ty - 1.0)
    idx[5] = c + 1
    w[5] = 0.5 * tz * (tz + 1.0)
    idx[6] = c - 1
    w[6] = 0.5 * tz * (tz - 1.0)
    return True


@njit(cache=True)
def _trilinear(px, py, pz, n, idx, w, clamp):
    """Eight-corner trilinear stencil.

    Corners outside the grid get weight zero unless ``clamp`` is set, in
    which case indices are clamped (constant extension).  Returns False if
    no corner lies on the grid in the zero-extension mode.
    """
    fx = np.floor(px)
    fy = np.floor(py)
    fz = np.floor(pz)
    ax = px - fx
    ay = py - fy
    az = pz - fz
    ix = int(fx)
    iy = int(fy)
    iz = int(fz)
    any_in = False
    k = 0
    for dx in range(2):
        wx = ax if dx == 1 else 1.0 - ax
        gx = ix + dx
        for dy in range(2):
            wy = ay if dy == 1 else 1.0 - ay
            gy = iy + dy
            for dz in range(2):
                wz = az if dz == 1 else 1.0 - az
                gz = iz + dz
                if clamp:
                    qx = min(max(gx, 0), n - 1)
                    qy = min(max(gy, 0), n - 1)
                    qz = min(max(gz, 0), n - 1)
                    idx[k] = (qx * n + qy) * n + qz
                    w[k] = wx * wy * wz
                    any_in = True
                elif 0 <= gx < n and 0 <= gy < n and 0 <= gz < n:
                    idx[k] = (gx * n + gy) * n + gz
                    w[k] = wx * wy * wz
                    any_in = True
                else:
                    idx[k] = 0
                    w[k] = 0.0
                k += 1
    return any_in


@njit(cache=True)
def _ramp(t):
    """Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = np.exp(-1.0 / t)
    b = np.exp(-1.0 / (1.0 - t))
    return a / (a + b)


@njit(cache=True)
def theta_delta_scalar(speed, r, cos_t, delta):
    """Truncation weight: product of smooth ramps in |v|, |v - v*|, |cos|."""
    inv = 1.0 / delta
    t1 = 1.0 - _ramp((speed - inv) / inv)
    t2 = _ramp((r - delta) / delta) * (1.0 - _ramp((r - inv) / inv))
    t3 = 1.0 - _ramp((abs(cos_t) - (1.0 - 2.0 * delta)) / delta)
    return t1 * t2 * t3


@njit(cache=True)
def weak_bilinear(a, b, coords, n, R, h, masses, cphi, gamma, btab,
                  sig, sigw, mu, pairmask, prune):
    """Symmetric bilinear collision form; returns Q(a, b) in F units.

    ``a`` and ``b`` are values of g = F / mu, shape (N, n_v).
    """
    N, nv = a.shape
    K = sig.shape[0]
    out = np.zeros((N, nv))
    idx1 = np.empty(7, np.int64)
    w1 = np.empty(7)
    idx2 = np.empty(7, np.int64)
    w2 = np.empty(7)
    ih = 1.0 / h
    off = R * ih - 0.5
    for i in range(N):
        for j in range(N):
            if not pairmask[i, j]:
                continue
            mi = masses[i]
            mj = masses[j]
            M = mi + mj
            cij = cphi[i, j]
            tab = btab[i, j]
            for n1 in range(nv):
                vx = coords[n1, 0]
                vy = coords[n1, 1]
                vz = coords[n1, 2]
                mu1 = mu[i, n1]
                for n2 in range(nv):
                    W0 = mu1 * mu[j, n2]
                    if W0 <= prune or n1 == n2:
                        continue
                    zx = coords[n2, 0] - vx
                    zy = coords[n2, 1] - vy
                    zz = coords[n2, 2] - vz
                    r = np.sqrt(zx * zx + zy * zy + zz * zz)
                    W0 *= cij * r ** gamma
                    cx = (mi * vx + mj * coords[n2, 0]) / M
                    cy = (mi * vy + mj * coords[n2, 1]) / M
                    cz = (mi * vz + mj * coords[n2, 2]) / M
                    a1 = a[i, n1]
                    b1 = b[i, n1]
                    a2 = a[j, n2]
                    b2 = b[j, n2]
                    for s in range(K):
                        sx = sig[s, 0]
                        sy = sig[s, 1]
                        sz = sig[s, 2]
                        cos_t = -(zx * sx + zy * sy + zz * sz) / r
                        W = W0 * sigw[s] * _bval(tab, cos_t)
                        if W == 0.0:
                            continue
                        d1 = mj * r / M
                        d2 = mi * r / M
                        if not _star((cx + d1 * sx) * ih + off, (cy + d1 * sy) * ih + off,
                                     (cz + d1 * sz) * ih + off, n, idx1, w1):
                            continue
                        if not _star((cx - d2 * sx) * ih + off, (cy - d2 * sy) * ih + off,
                                     (cz - d2 * sz) * ih + off, n, idx2, w2):
                            continue
                        ia = 0.0
                        ib = 0.0
                        ja = 0.0
                        jb = 0.0
                        for k in range(7):
                            ia += w1[k] * a[i, idx1[k]]
                            ib += w1[k] * b[i, idx1[k]]
                            ja += w2[k] * a[j, idx2[k]]
                            jb += w2[k] * b[j, idx2[k]]
                        D = 0.5 * (ia * jb + ib * ja) - 0.5 * (a1 * b2 + b1 * a2)
                        t = 0.25 * W * D
                        out[i, n1] += t
                        out[j, n2] += t
                        for k in range(7):
                            out[i, idx1[k]] -= t * w1[k]
                            out[j, idx2[k]] -= t * w2[k]
    return out * h ** 3


@njit(cache=True)
def weak_matrix(coords, n, R, h, masses, cphi, gamma, btab, sig, sigw, mu, pairmask):
    """Dirichlet-form matrix A with sum_n w_n psi_n (L f)_n = psi^T A (f / mu).

    The cell-volume factors are left out: the caller scales by h^6.
    """
    N, nv = mu.shape
    K = sig.shape[0]
    A = np.zeros((N * nv, N * nv))
    idx = np.empty(16, np.int64)
    cf = np.empty(16)
    idx1 = np.empty(7, np.int64)
    w1 = np.empty(7)
    idx2 = np.empty(7, np.int64)
    w2 = np.empty(7)
    ih = 1.0 / h
    off = R * ih - 0.5
    for i in range(N):
        for j in range(N):
            if not pairmask[i, j]:
                continue
            mi = masses[i]
            mj = masses[j]
            M = mi + mj
            cij = cphi[i, j]
            tab = btab[i, j]
            for n1 in range(nv):
                vx = coords[n1, 0]
                vy = coords[n1, 1]
                vz = coords[n1, 2]
                for n2 in range(nv):
                    if n1 == n2:
                        continue
                    zx = coords[n2, 0] - vx
                    zy = coords[n2, 1] - vy
                    zz = coords[n2, 2] - vz
                    r = np.sqrt(zx * zx + zy * zy + zz * zz)
                    W0 = mu[i, n1] * mu[j, n2] * cij * r ** gamma
                    cx = (mi * vx + mj * coords[n2, 0]) / M
                    cy = (mi * vy + mj * coords[n2, 1]) / M
                    cz = (mi * vz + mj * coords[n2, 2]) / M
                    idx[0] = i * nv + n1
                    cf[0] = 1.0
                    idx[1] = j * nv + n2
                    cf[1] = 1.0
                    for s in range(K):
                        sx = sig[s, 0]
                        sy = sig[s, 1]
                        sz = sig[s, 2]
                        cos_t = -(zx * sx + zy * sy + zz * sz) / r
                        W = W0 * sigw[s] * _bval(tab, cos_t)
                        if W == 0.0:
                            continue
                        d1 = mj * r / M
                        d2 = mi * r / M
                        if not _star((cx + d1 * sx) * ih + off, (cy + d1 * sy) * ih + off,
                                     (cz + d1 * sz) * ih + off, n, idx1, w1):
                            continue
                        if not _star((cx - d2 * sx) * ih + off, (cy - d2 * sy) * ih + off,
                                     (cz - d2 * sz) * ih + off, n, idx2, w2):
                            continue
                        for k in range(7):
                            idx[2 + k] = i * nv + idx1[k]
                            cf[2 + k] = -w1[k]
                            idx[9 + k] = j * nv + idx2[k]
                            cf[9 + k] = -w2[k]
                        t = 0.25 * W
                        for p in range(16):
                            tp = t * cf[p]
                            row = idx[p]
                            for q in range(16):
                                A[row, idx[q]] -= tp * cf[q]
    return A


@njit(cache=True)
def strong_matrix(coords, n, R, h, masses, dens, cphi, gamma, btab, sig, sigw,
                  mu, delta, mode):
    """Collocated gain-plus-loss operator K (matrix on F values) and nu.

    ``mode`` 0: plain; 1: weighted by the truncation; 2: by one minus it.
    Row (i, n1) of K f is sum_j int B (mu_j'* f_i' + mu_i' f_j'* - mu_i f_j*).
    """
    N, nv = mu.shape
    K = sig.shape[0]
    Kmat = np.zeros((N * nv, N * nv))
    nu = np.zeros((N, nv))
    idx1 = np.empty(8, np.int64)
    w1 = np.empty(8)
    idx2 = np.empty(8, np.int64)
    w2 = np.empty(8)
    ih = 1.0 / h
    off = R * ih - 0.5
    h3 = h ** 3
    for i in range(N):
        for j in range(N):
            mi = masses[i]
            mj = masses[j]
            M = mi + mj
            cij = cphi[i, j]
            tab = btab[i, j]
            for n1 in range(nv):
                vx = coords[n1, 0]
                vy = coords[n1, 1]
                vz = coords[n1, 2]
                speed = np.sqrt(vx * vx + vy * vy + vz * vz)
                row = i * nv + n1
                for n2 in range(nv):
                    zx = coords[n2, 0] - vx
                    zy = coords[n2, 1] - vy
                    zz = coords[n2, 2] - vz
                    r = np.sqrt(zx * zx + zy * zy + zz * zz)
                    if r == 0.0:
                        if gamma > 0.0:
                            continue
                        ux = 0.0
                        uy = 0.0
                        uz = -1.0
                    else:
                        ux = zx / r
                        uy = zy / r
                        uz = zz / r
                    W0 = h3 * cij * r ** gamma
                    cx = (mi * vx + mj * coords[n2, 0]) / M
                    cy = (mi * vy + mj * coords[n2, 1]) / M
                    cz = (mi * vz + mj * coords[n2, 2]) / M
                    for s in range(K):
                        sx = sig[s, 0]
                        sy = sig[s, 1]
                        sz = sig[s, 2]
                        cos_t = -(ux * sx + uy * sy + uz * sz)
                        W = W0 * sigw[s] * _bval(tab, cos_t)
                        if mode != 0:
                            th = theta_delta_scalar(speed, r, cos_t, delta)
                            W *= th if mode == 1 else 1.0 - th
                        if W == 0.0:
                            continue
                        d1 = mj * r / M
                        d2 = mi * r / M
                        px = cx + d1 * sx
                        py = cy + d1 * sy
                        pz = cz + d1 * sz
                        qx = cx - d2 * sx
                        qy = cy - d2 * sy
                        qz = cz - d2 * sz
                        mu_jq = _mu(mj, dens[j], qx, qy, qz)
                        mu_ip = _mu(mi, dens[i], px, py, pz)
                        if _trilinear(px * ih + off, py * ih + off, pz * ih + off,
                                      n, idx1, w1, False):
                            t = W * mu_jq
                            for k in range(8):
                                Kmat[row, i * nv + idx1[k]] += t * w1[k]
                        if _trilinear(qx * ih + off, qy * ih + off, qz * ih + off,
                                      n, idx2, w2, False):
                            t = W * mu_ip
                            for k in range(8):
                                Kmat[row, j * nv + idx2[k]] += t * w2[k]
                        Kmat[row, j * nv + n2] -= W * mu[i, n1]
                        nu[i, n1] += W * mu[j, n2]
    return Kmat, nu


@njit(cache=True)
def loss_matrix(coords, gamma, cphi, btab, sig, sigw, h):
    """Lambda[i, j, n1, n2] = h^3 sum_s w_s B_ij(v_n1 - v_n2, sigma_s)."""
    N = cphi.shape[0]
    nv = coords.shape[0]
    K = sig.shape[0]
    out = np.zeros((N, N, nv, nv))
    h3 = h ** 3
    for i in range(N):
        for j in range(N):
            tab = btab[i, j]
            for n1 in range(nv):
                for n2 in range(nv):
                    zx = coords[n2, 0] - coords[n1, 0]
                    zy = coords[n2, 1] - coords[n1, 1]
                    zz = coords[n2, 2] - coords[n1, 2]
                    r = np.sqrt(zx * zx + zy * zy + zz * zz)
                    if r == 0.0:
                        if gamma > 0.0:
                            continue
                        ux = 0.0
                        uy = 0.0
                        uz = -1.0
                    else:
                        ux = zx / r
                        uy = zy / r
                        uz = zz / r
                    acc = 0.0
                    for s in range(K):
                        cos_t = -(ux * sig[s, 0] + uy * sig[s, 1] + uz * sig[s, 2])
                        acc += sigw[s] * _bval(tab, cos_t)
                    out[i, j, n1, n2] = h3 * cphi[i, j] * r ** gamma * acc
    return out


@njit(cache=True)
def positive_gain(F, mu, coords, n, R, h, masses, dens, cphi, gamma, btab, sig, sigw):
    """Gain term sum_j int B F_i' F_j'* with F(v') = mu(v') * I[F] / I[mu],
    I the trilinear interpolant with constant extension.  Nonnegative for
    F >= 0, exact for F = mu, and the ratio stays O(1) in the tails where
    interpolating F / mu would amplify node values by mu(v') / mu(node)."""
    N, nv = F.shape
    K = sig.shape[0]
    out = np.zeros((N, nv))
    idx1 = np.empty(8, np.int64)
    w1 = np.empty(8)
    idx2 = np.empty(8, np.int64)
    w2 = np.empty(8)
    ih = 1.0 / h
    off = R * ih - 0.5
    h3 = h ** 3
    for i in range(N):
        for j in range(N):
            mi = masses[i]
            mj = masses[j]
            M = mi + mj
            cij = cphi[i, j]
            tab = btab[i, j]
            for n1 in range(nv):
                vx = coords[n1, 0]
                vy = coords[n1, 1]
                vz = coords[n1, 2]
                acc = 0.0
                for n2 in range(nv):
                    zx = coords[n2, 0] - vx
                    zy = coords[n2, 1] - vy
                    zz = coords[n2, 2] - vz
                    r = np.sqrt(zx * zx + zy * zy + zz * zz)
                    if r == 0.0:
                        if gamma > 0.0:
                            continue
                        ux = 0.0
                        uy = 0.0
                        uz = -1.0
                    else:
                        ux = zx / r
                        uy = zy / r
                        uz = zz / r
                    W0 = cij * r ** gamma
                    cx = (mi * vx + mj * coords[n2, 0]) / M
                    cy = (mi * vy + mj * coords[n2, 1]) / M
                    cz = (mi * vz + mj * coords[n2, 2]) / M
                    for s in range(K):
                        sx = sig[s, 0]
                        sy = sig[s, 1]
                        sz = sig[s, 2]
                        cos_t = -(ux * sx + uy * sy + uz * sz)
                        W = W0 * sigw[s] * _bval(tab, cos_t)
                        if W == 0.0:
                            continue
                        d1 = mj * r / M
                        d2 = mi * r / M
                        px = cx + d1 * sx
                        py = cy + d1 * sy
                        pz = cz + d1 * sz
                        qx = cx - d2 * sx
                        qy = cy - d2 * sy
                        qz = cz - d2 * sz
                        _trilinear(px * ih + off, py * ih + off, pz * ih + off,
                                   n, idx1, w1, True)
                        _trilinear(qx * ih + off, qy * ih + off, qz * ih + off,
                                   n, idx2, w2, True)
                        fi = 0.0
                        ui = 0.0
                        fj = 0.0
                        uj = 0.0
                        for k in range(8):
                            fi += w1[k] * F[i, idx1[k]]
                            ui += w1[k] * mu[i, idx1[k]]
                            fj += w2[k] * F[j, idx2[k]]
                            uj += w2[k] * mu[j, idx2[k]]
                        acc += W * (fi / ui) * (fj / uj) * _mu(mi, dens[i], px, py, pz) * \
                            _mu(mj, dens[j], qx, qy, qz)
                out[i, n1] += acc * h3
    return out


@njit(cache=True)
def nu_points(i, points, coords, h, gamma, cphi, btab, sig, sigw, mu):
    """Collision frequency of species i at arbitrary points by grid quadrature."""
    N, nv = mu.shape
    K = sig.shape[0]
    out = np.zeros(points.shape[0])
    h3 = h ** 3
    for p in range(points.shape[0]):
        acc = 0.0
        for j in range(N):
            tab = btab[i, j]
            for n2 in range(nv):
                zx = coords[n2, 0] - points[p, 0]
                zy = coords[n2, 1] - points[p, 1]
                zz = coords[n2, 2] - points[p, 2]
                r = np.sqrt(zx * zx + zy * zy + zz * zz)
                if r == 0.0:
                    if gamma > 0.0:
                        continue
                    ux = 0.0
                    uy = 0.0
                    uz = -1.0
                else:
                    ux = zx / r
                    uy = zy / r
                    uz = zz / r
                ang = 0.0
                for s in range(K):
                    cos_t = -(ux * sig[s, 0] + uy * sig[s, 1] + uz * sig[s, 2])
                    ang += sigw[s] * _bval(tab, cos_t)
                acc += cphi[i, j] * r ** gamma * ang * mu[j, n2]
        out[p] = acc * h3
    return out
