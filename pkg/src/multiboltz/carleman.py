"""Kernel form of K = L + nu through the Carleman admissible sets.

For a fixed pair (v, w) the kernel k^(i)_j(v, w) is a sum of surface
integrals over the admissible sets of the non-integrated post-collisional
velocity, plus the local loss term:

    k^(i)_j = delta_ij sum_l P_l(v, w) + S_j(v, w) - B_ij(v - w) mu_i(v)

P_l integrates mu_l over the plane through V_E(v, w) normal to v - w, S_j
integrates mu_i over the sphere (a plane through v for equal masses).  The
change of variables contributes (1 + m_i/m_j)^2 / |v - w| in front of each
surface integral of B / |u - w| dE(u).

For hard spheres with constant b, plane integrals use polar coordinates
around the point of the plane closest to the origin, where the Maxwellian
is radial.  Otherwise |u - w|^(gamma - 1) (and the direction of u - w in
b) peaks at the foot of w on the plane, which is |v - w|-close to it; the
polar centre moves to that foot with geometrically graded radii.  Sphere
integrals use s = 1 - cos(angle to the point closest to the origin), on
Gauss panels that grow geometrically with the Maxwellian decay in s.
"""
import numpy as np
from numba import njit
from scipy.special import roots_legendre

from .collision import _bval, _mu
from .discretization import SphereQuadrature
from .mixture import maxwellian_values

MU_CUT = 40.0  # surface Maxwellians are cut at exp(-MU_CUT)


class SingularBandError(ValueError):
    pass


@njit(cache=True)
def _basis(nx, ny, nz):
    """Orthonormal frame (e1, e2) of the plane normal to (nx, ny, nz)."""
    if abs(nx) < 0.9:
        tx, ty, tz = 1.0, 0.0, 0.0
    else:
        tx, ty, tz = 0.0, 1.0, 0.0
    d = tx * nx + ty * ny + tz * nz
    ax = tx - d * nx
    ay = ty - d * ny
    az = tz - d * nz
    s = np.sqrt(ax * ax + ay * ay + az * az)
    ax /= s
    ay /= s
    az /= s
    bx = ny * az - nz * ay
    by = nz * ax - nx * az
    bz = nx * ay - ny * ax
    return ax, ay, az, bx, by, bz


@njit(cache=True)
def _integrand(ux, uy, uz, v, w, mi, mj, gamma, tab, role):
    """b(cos theta) |u - w|^(gamma - 1) for u on a Carleman set.

    role 0: w = v', u = v'* (plane term); role 1: w = v'*, u = v'.
    """
    if role == 0:
        px = w[0] - v[0]
        py = w[1] - v[1]
        pz = w[2] - v[2]
        qx = ux - v[0]
        qy = uy - v[1]
        qz = uz - v[2]
    else:
        px = ux - v[0]
        py = uy - v[1]
        pz = uz - v[2]
        qx = w[0] - v[0]
        qy = w[1] - v[1]
        qz = w[2] - v[2]
    r = mi / mj
    zx = qx + r * px
    zy = qy + r * py
    zz = qz + r * pz
    dx = px - qx
    dy = py - qy
    dz = pz - qz
    t2 = dx * dx + dy * dy + dz * dz
    z2 = zx * zx + zy * zy + zz * zz
    if t2 == 0.0 or z2 == 0.0:
        return 0.0
    cos_t = -(zx * dx + zy * dy + zz * dz) / np.sqrt(z2 * t2)
    return _bval(tab, cos_t) * t2 ** (0.5 * (gamma - 1.0))


@njit(cache=True)
def _plane(ox, oy, oz, nx, ny, nz, v, w, mi, mj, ml, cl, gamma, tab, role,
           rx, rw, nphi, smooth):
    """Integral over the plane {(u - o).n = 0} of b |u-w|^(g-1) mu_l(u).

    ``smooth`` (gamma = 1 and constant b): polar coordinates about the
    peak of mu_l.  Otherwise the integrand is peaked at the foot of w on
    the plane, so the polar centre moves there, radial panels grow
    geometrically from the distance of w to the plane, and the angular
    count follows the off-centre Gaussian.
    """
    s = ox * nx + oy * ny + oz * nz
    px = s * nx
    py = s * ny
    pz = s * nz
    ax, ay, az, bx, by, bz = _basis(nx, ny, nz)
    width = np.sqrt(2.0 * MU_CUT / ml)
    if smooth:
        mu0 = _mu(ml, cl, px, py, pz)
        if mu0 == 0.0:
            return 0.0
        acc = 0.0
        for a in range(rx.shape[0]):
            rho = width * rx[a]
            g = np.exp(-0.5 * ml * rho * rho) * rho * width * rw[a]
            inner = 0.0
            for k in range(nphi):
                phi = 2.0 * np.pi * k / nphi
                c = np.cos(phi) * rho
                sn = np.sin(phi) * rho
                inner += _integrand(px + c * ax + sn * bx, py + c * ay + sn * by,
                                    pz + c * az + sn * bz, v, w, mi, mj, gamma, tab, role)
            acc += g * inner
        return acc * mu0 * 2.0 * np.pi / nphi
    hgt = (w[0] - px) * nx + (w[1] - py) * ny + (w[2] - pz) * nz
    fx = w[0] - hgt * nx
    fy = w[1] - hgt * ny
    fz = w[2] - hgt * nz
    dx = fx - px
    dy = fy - py
    dz = fz - pz
    D = np.sqrt(dx * dx + dy * dy + dz * dz)
    if (D - width) > 0.0 and _mu(ml, cl, px, py, pz) == 0.0:
        return 0.0
    rmax = D + width
    m_ang = max(nphi, int(np.sqrt(60.0 * ml * rmax * D)) + 8)
    acc = 0.0
    lo = 0.0
    hi = min(rmax, max(abs(hgt), 1e-3 * rmax))
    while lo < rmax:
        half = 0.5 * (hi - lo)
        for a in range(rx.shape[0]):
            rho = lo + 2.0 * half * rx[a]
            g = 2.0 * half * rw[a] * rho
            inner = 0.0
            for k in range(m_ang):
                phi = 2.0 * np.pi * k / m_ang
                c = np.cos(phi) * rho
                sn = np.sin(phi) * rho
                ux = fx + c * ax + sn * bx
                uy = fy + c * ay + sn * by
                uz = fz + c * az + sn * bz
                inner += _mu(ml, cl, ux, uy, uz) * _integrand(ux, uy, uz, v, w, mi, mj,
                                                             gamma, tab, role)
            acc += g * inner / m_ang
        lo = hi
        hi = min(rmax, 2.0 * hi)
    return acc * 2.0 * np.pi


@njit(cache=True)
def _sphere(ox, oy, oz, R, v, w, mi, mj, ml, cl, gamma, tab, xg, wg, nphi):
    """Integral over the sphere |u - o| = R of b |u-w|^(g-1) mu_l(u)."""
    d = np.sqrt(ox * ox + oy * oy + oz * oz)
    if d > 0.0:
        nx = -ox / d
        ny = -oy / d
        nz = -oz / d
    else:
        nx, ny, nz = 0.0, 0.0, 1.0
    ax, ay, az, bx, by, bz = _basis(nx, ny, nz)
    # mu_l on the sphere is mu_l(closest point) exp(-kappa s), s = 1 - cos;
    # s is covered by Gauss panels growing geometrically away from s = 0
    kappa = ml * R * d
    near = d - R
    mu0 = _mu(ml, cl, near, 0.0, 0.0)
    smax = 2.0 if kappa * 2.0 <= MU_CUT else MU_CUT / kappa
    lo = 0.0
    hi = min(smax, 1.0 / kappa) if kappa > 0.5 else smax
    acc = 0.0
    while lo < smax:
        half = 0.5 * (hi - lo)
        for a in range(xg.shape[0]):
            sv = lo + half * (xg[a] + 1.0)
            x = 1.0 - sv
            g = half * wg[a] * np.exp(-kappa * sv)
            sa = np.sqrt(max(0.0, 1.0 - x * x))
            inner = 0.0
            for k in range(nphi):
                phi = 2.0 * np.pi * k / nphi
                c = np.cos(phi) * sa
                sn = np.sin(phi) * sa
                ux = ox + R * (x * nx + c * ax + sn * bx)
                uy = oy + R * (x * ny + c * ay + sn * by)
                uz = oz + R * (x * nz + c * az + sn * bz)
                inner += _integrand(ux, uy, uz, v, w, mi, mj, gamma, tab, 1)
            acc += g * inner
        lo = hi
        hi = min(smax, 2.0 * hi)
    return acc * mu0 * R * R * 2.0 * np.pi / nphi


@njit(cache=True)
def _kernel_terms(i, v, w, masses, dens, cphi, gamma, btab, lb, rx, rw, xg, wg, nphi,
                  smooth):
    """(sum_l P_l, S_j for each j, loss_j for each j) at the pair (v, w)."""
    N = masses.shape[0]
    ex = v[0] - w[0]
    ey = v[1] - w[1]
    ez = v[2] - w[2]
    r = np.sqrt(ex * ex + ey * ey + ez * ez)
    nx = ex / r
    ny = ey / r
    nz = ez / r
    mi = masses[i]
    plane_sum = 0.0
    S = np.zeros(N)
    loss = np.zeros(N)
    for j in range(N):
        mj = masses[j]
        jac = (1.0 + mi / mj) ** 2 * cphi[i, j] / r
        tab = btab[i, j]
        # plane through V_E(v, w), normal v - w, integrating mu_j
        ox = ((mi + mj) * v[0] - (mi - mj) * w[0]) / (2.0 * mj)
        oy = ((mi + mj) * v[1] - (mi - mj) * w[1]) / (2.0 * mj)
        oz = ((mi + mj) * v[2] - (mi - mj) * w[2]) / (2.0 * mj)
        plane_sum += jac * _plane(ox, oy, oz, nx, ny, nz, v, w, mi, mj, mj, dens[j],
                                  gamma, tab, 0, rx, rw, nphi, smooth)
        if mi == mj:
            S[j] = jac * _plane(v[0], v[1], v[2], nx, ny, nz, v, w, mi, mj, mi, dens[i],
                                gamma, tab, 1, rx, rw, nphi, smooth)
        else:
            ox = (mi * v[0] - mj * w[0]) / (mi - mj)
            oy = (mi * v[1] - mj * w[1]) / (mi - mj)
            oz = (mi * v[2] - mj * w[2]) / (mi - mj)
            R = mj * r / abs(mi - mj)
            S[j] = jac * _sphere(ox, oy, oz, R, v, w, mi, mj, mi, dens[i], gamma, tab,
                                 xg, wg, nphi)
        loss[j] = cphi[i, j] * lb[i, j] * r ** gamma * _mu(mi, dens[i], v[0], v[1], v[2])
    return plane_sum, S, loss


@njit(cache=True)
def _monomials(x, y, z, mass, dens, expo, out):
    m = _mu(mass, dens, x, y, z)
    for b in range(expo.shape[0]):
        out[b] = m * x ** expo[b, 0] * y ** expo[b, 1] * z ** expo[b, 2]


@njit(cache=True)
def _kernel_form_basis(i, v, masses, dens, cphi, gamma, btab, lb, expo,
                       r_nodes, r_weights, omega, omega_w, rx, rw, xg, wg, nphi, smooth):
    """K_i applied to every basis field mu_s * monomial (kernel form)."""
    N = masses.shape[0]
    nb = expo.shape[0]
    out = np.zeros((N, nb))
    vals = np.empty(nb)
    w = np.empty(3)
    for a in range(r_nodes.shape[0]):
        r = r_nodes[a]
        for o in range(omega.shape[0]):
            w[0] = v[0] + r * omega[o, 0]
            w[1] = v[1] + r * omega[o, 1]
            w[2] = v[2] + r * omega[o, 2]
            P, S, loss = _kernel_terms(i, v, w, masses, dens, cphi, gamma, btab, lb,
                                       rx, rw, xg, wg, nphi, smooth)
            q = r * r * r_weights[a] * omega_w[o]
            for s in range(N):
                kk = S[s] - loss[s]
                if s == i:
                    kk += P
                _monomials(w[0], w[1], w[2], masses[s], dens[s], expo, vals)
                for b in range(nb):
                    out[s, b] += q * kk * vals[b]
    return out


@njit(cache=True)
def _sigma_form_basis(i, v, masses, dens, cphi, gamma, btab, expo,
                      r_nodes, r_weights, omega, omega_w, sig, sig_w):
    """K_i applied to every basis field, straight from the sigma form."""
    N = masses.shape[0]
    nb = expo.shape[0]
    out = np.zeros((N, nb))
    v1 = np.empty(nb)
    v2 = np.empty(nb)
    mi = masses[i]
    mu_v = _mu(mi, dens[i], v[0], v[1], v[2])
    for j in range(N):
        mj = masses[j]
        M = mi + mj
        tab = btab[i, j]
        for a in range(r_nodes.shape[0]):
            r = r_nodes[a]
            for o in range(omega.shape[0]):
                sx = v[0] + r * omega[o, 0]
                sy = v[1] + r * omega[o, 1]
                sz = v[2] + r * omega[o, 2]
                cx = (mi * v[0] + mj * sx) / M
                cy = (mi * v[1] + mj * sy) / M
                cz = (mi * v[2] + mj * sz) / M
                q0 = cphi[i, j] * r ** gamma * r * r * r_weights[a] * omega_w[o]
                ang = 0.0
                for s in range(sig.shape[0]):
                    cos_t = -(omega[o, 0] * sig[s, 0] + omega[o, 1] * sig[s, 1]
                              + omega[o, 2] * sig[s, 2])
                    W = q0 * sig_w[s] * _bval(tab, cos_t)
                    ang += sig_w[s] * _bval(tab, cos_t)
                    px = cx + mj * r / M * sig[s, 0]
                    py = cy + mj * r / M * sig[s, 1]
                    pz = cz + mj * r / M * sig[s, 2]
                    qx = cx - mi * r / M * sig[s, 0]
                    qy = cy - mi * r / M * sig[s, 1]
                    qz = cz - mi * r / M * sig[s, 2]
                    # mu_j(v'*) f_i(v')
                    _monomials(px, py, pz, mi, dens[i], expo, v1)
                    g1 = W * _mu(mj, dens[j], qx, qy, qz)
                    for b in range(nb):
                        out[i, b] += g1 * v1[b]
                    # mu_i(v') f_j(v'*)
                    _monomials(qx, qy, qz, mj, dens[j], expo, v2)
                    g2 = W * _mu(mi, dens[i], px, py, pz)
                    for b in range(nb):
                        out[j, b] += g2 * v2[b]
                # - mu_i(v) f_j(v*)
                _monomials(sx, sy, sz, mj, dens[j], expo, v1)
                for b in range(nb):
                    out[j, b] -= q0 * ang * mu_v * v1[b]
    return out


# ---------------------------------------------------------------------------

def monomial_exponents(degree=3):
    return np.array([(a, b, c) for d in range(degree + 1) for a in range(d + 1)
                     for b in range(d + 1 - a) for c in [d - a - b]], dtype=np.int64)


class CarlemanQuadrature:
    """Quadrature settings for the surface and outer integrals."""

    def __init__(self, n_rho=48, n_phi=48, n_x=16, n_r=64, omega_order=29,
                 sigma_order=41, n_panel=16):
        x, wx = roots_legendre(n_rho)
        self.rx = 0.5 * (x + 1.0)
        self.rw = 0.5 * wx
        x, wx = roots_legendre(n_panel)
        self.px = 0.5 * (x + 1.0)
        self.pw = 0.5 * wx
        self.xg, self.wg = roots_legendre(n_x)
        self.n_phi = n_phi
        self.n_r = n_r
        self.omega = SphereQuadrature.lebedev(omega_order)
        self.sigma = SphereQuadrature.lebedev(sigma_order)

    def plane_rule(self, smooth):
        """One Gauss rule on the whole radius, or the per-panel rule."""
        return (self.rx, self.rw) if smooth else (self.px, self.pw)

    def radial(self, rmax, panels=4):
        x, wx = roots_legendre(self.n_r // panels)
        edges = np.linspace(0.0, rmax, panels + 1)
        nodes = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b)
                                for a, b in zip(edges[:-1], edges[1:])])
        weights = np.concatenate([0.5 * (b - a) * wx for a, b in zip(edges[:-1], edges[1:])])
        return nodes, weights


def _smooth(kernel):
    """True when plane integrands carry no |u - w|^(gamma - 1) peak."""
    return bool(kernel.gamma == 1.0 and np.all(kernel.table == kernel.table[..., :1]))


def kernel_k(i, j, v, v_star, species, kernel, quad=None, band=0.0):
    """Pointwise kernel k^(i)_j(v, v*) of K; refuses the singular band."""
    v = np.asarray(v, float)
    w = np.asarray(v_star, float)
    r = np.linalg.norm(v - w)
    if r <= band or r == 0.0:
        raise SingularBandError(f"|v - v*| = {r:.3g} inside the singular band {band:.3g}")
    q = quad or CarlemanQuadrature()
    sm = _smooth(kernel)
    P, S, loss = _kernel_terms(i, v, w, species.m, species.c, kernel.c_phi, kernel.gamma,
                               kernel.table, kernel.l_b, *q.plane_rule(sm), q.xg, q.wg,
                               q.n_phi, sm)
    return float((P if i == j else 0.0) + S[j] - loss[j])


def _rmax(v, species):
    return float(np.linalg.norm(v) + np.sqrt(2 * MU_CUT / min(species.masses)))


def kernel_form(i, v, species, kernel, expo, quad):
    """K_i(mu_s x^a) at v for each species s and exponent row a, kernel form."""
    v = np.asarray(v, float)
    rn, rw = quad.radial(_rmax(v, species))
    sm = _smooth(kernel)
    return _kernel_form_basis(i, v, species.m, species.c, kernel.c_phi, kernel.gamma,
                              kernel.table, kernel.l_b, expo, rn, rw, quad.omega.nodes,
                              quad.omega.weights, *quad.plane_rule(sm), quad.xg, quad.wg,
                              quad.n_phi, sm)


def sigma_form(i, v, species, kernel, expo, quad):
    """Same quantity by direct quadrature of the sigma form."""
    v = np.asarray(v, float)
    rn, rw = quad.radial(_rmax(v, species))
    return _sigma_form_basis(i, v, species.m, species.c, kernel.c_phi, kernel.gamma,
                             kernel.table, expo, rn, rw, quad.omega.nodes,
                             quad.omega.weights, quad.sigma.nodes, quad.sigma.weights)


def kernel_check(species, kernel, points, n_fields=100, degree=3, seed=0, quad=None):
    """Relative mismatch between kernel and sigma forms of K on random
    smooth fields f_s = mu_s * (random polynomial of the given degree).

    ``points`` is a list of (species index, velocity).  Returns the array
    of per-field relative errors (max over points / max |K f|).
    """
    quad = quad or CarlemanQuadrature()
    expo = monomial_exponents(degree)
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((n_fields, species.n, expo.shape[0]))
    kf, sf = [], []
    for i, v in points:
        A = kernel_form(i, v, species, kernel, expo, quad)
        B = sigma_form(i, v, species, kernel, expo, quad)
        kf.append(np.einsum("fsb,sb->f", coef, A))
        sf.append(np.einsum("fsb,sb->f", coef, B))
    kf, sf = np.array(kf), np.array(sf)
    scale = np.abs(sf).max(axis=0)
    return np.abs(kf - sf).max(axis=0) / scale


def k_of_mu(i, v, species, kernel, quad=None):
    """(K mu)_i(v) in kernel form, to compare with nu_i(v) mu_i(v)."""
    quad = quad or CarlemanQuadrature()
    expo = np.zeros((1, 3), dtype=np.int64)
    return float(kernel_form(i, v, species, kernel, expo, quad).sum())


# ---------------------------------------------------------------------------
# pointwise bound shape and the weighted integral estimate

def bound_profile(i, j, v, w, species, m_hat, gamma):
    """Right-hand side shape of the pointwise kernel bound (without C_K)."""
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    r = np.linalg.norm(v - w)
    mu_i = maxwellian_values(species, v)[i]
    mu_j = maxwellian_values(species, w)[j]
    d = (v @ v - w @ w) ** 2 / r ** 2
    return np.sqrt(mu_i / mu_j) * (r ** gamma + r ** (gamma - 2)) * np.exp(-m_hat * r * r - m_hat * d)


def fit_bound_shape(species, kernel, samples=200, seed=0, candidates=None, quad=None,
                    band=0.1, growth=10.0):
    """Largest m_hat among the candidates for which |k| / shape stays
    bounded: the sup over far samples may not exceed ``growth`` times the
    sup over near samples.  Returns (m_hat, C_K, ratios)."""
    quad = quad or CarlemanQuadrature(n_rho=32, n_phi=32, n_x=48)
    rng = np.random.default_rng(seed)
    cand = sorted(candidates or [1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64], reverse=True)
    recs = []
    for _ in range(samples):
        i, j = rng.integers(species.n, size=2)
        v = rng.standard_normal(3) * rng.uniform(0.2, 2.5)
        w = v + rng.standard_normal(3) * rng.uniform(0.2, 2.5)
        if np.linalg.norm(v - w) <= band:
            continue
        recs.append((i, j, v, w, abs(kernel_k(i, j, v, w, species, kernel, quad, band))))
    size = np.array([max(np.linalg.norm(v), np.linalg.norm(w)) for _, _, v, w, _ in recs])
    near = size <= np.median(size)
    for m_hat in cand:
        ratio = np.array([k / bound_profile(i, j, v, w, species, m_hat, kernel.gamma)
                          for i, j, v, w, k in recs])
        if ratio[~near].max() <= growth * ratio[near].max():
            return m_hat, float(ratio.max()), ratio
    return np.nan, np.inf, ratio


def weighted_kernel_integral(i, v, species, kernel, beta=1.0, quad=None):
    """sum_j int |k^(i)_j(v, w)| <v>^b/<w>^b sqrt(mu_j(w)/mu_i(v)) dw."""
    quad = quad or CarlemanQuadrature(n_rho=32, n_phi=32, n_x=48, n_r=32, omega_order=17)
    v = np.asarray(v, float)
    rn, rw = quad.radial(_rmax(v, species))
    mu_v = maxwellian_values(species, v)[i]
    sm = _smooth(kernel)
    px, pw = quad.plane_rule(sm)
    total = 0.0
    for r, wr in zip(rn, rw):
        for om, wo in zip(quad.omega.nodes, quad.omega.weights):
            w = v + r * om
            P, S, loss = _kernel_terms(i, v, w, species.m, species.c, kernel.c_phi,
                                       kernel.gamma, kernel.table, kernel.l_b, px, pw,
                                       quad.xg, quad.wg, quad.n_phi, sm)
            k = S - loss
            k[i] += P
            mu_w = maxwellian_values(species, w)
            wt = ((1 + v @ v) / (1 + w @ w)) ** (beta / 2) * np.sqrt(mu_w / mu_v)
            total += r * r * wr * wo * float(np.abs(k) @ wt)
    return total


def fit_weighted_integral(species, kernel, speeds, beta=1.0, quad=None, direction=None):
    """C = max (1 + |v|) I(v) over v = s * direction for each species."""
    e = np.asarray(direction if direction is not None else (1.0, 2.0, 2.0), float)
    e = e / np.linalg.norm(e)
    rows = []
    for i in range(species.n):
        for s in speeds:
            I = weighted_kernel_integral(i, s * e, species, kernel, beta, quad)
            rows.append((i, float(s), I, (1 + s) * I))
    C = max(r[3] for r in rows)
    return C, rows
