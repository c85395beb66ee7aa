import numpy as np
import pytest

from multiboltz.discretization import SphereQuadrature, VelocityGrid
from multiboltz.kernel import KernelSpec
from multiboltz.mixture import SpeciesSet, maxwellian_values
from multiboltz.solver import (RelaxationTrace, Scenario, SolverError, fit_decay,
                               fourier_shift, kernel_drift, run, run_positive, upwind_shift)


def scenario(**kw):
    sp = SpeciesSet([1.0, 2.0])
    opts = dict(dt=0.5, t_end=2.0, amplitude=1e-2)
    opts.update(kw)
    return Scenario(sp, KernelSpec.maxwell(2, 0.3), VelocityGrid(4.0, 6),
                    SphereQuadrature.product(2, 4), **opts)


def test_scenario_validation():
    with pytest.raises(ValueError):
        scenario(space="torus_2d")
    with pytest.raises(ValueError):
        scenario(dt=0.0)
    with pytest.raises(ValueError):
        scenario(shape="square")
    assert scenario(space="torus_3d", cells=3).n_cells == 27


def test_fit_decay():
    t = np.linspace(0, 10, 41)
    assert fit_decay(t, 3 * np.exp(-0.7 * t)) == pytest.approx(0.7)
    assert np.isnan(fit_decay(t, np.zeros_like(t)))


def test_trace_rejects_time_reversal():
    tr = RelaxationTrace()
    tr.record(0.0, np.zeros(6), 0.0, {"L2_mu": 1, "Linf_beta_mu": 1, "L1_k": 1}, 0.0)
    with pytest.raises(SolverError):
        tr.record(0.0, np.zeros(6), 0.0, {"L2_mu": 1, "Linf_beta_mu": 1, "L1_k": 1}, 0.0)


def test_fourier_shift_is_exact_translation(rng):
    sc = scenario(space="torus_1d", cells=7)
    f = rng.standard_normal((7, 2, sc.grid.size))
    back = fourier_shift(fourier_shift(f, sc, 0.3), sc, -0.3)
    assert np.allclose(back, f, atol=1e-12)
    vx = sc.grid.nodes[:, 0]
    node = int(np.argmax(vx))
    g = fourier_shift(f, sc, 1.0 / (7 * vx[node]))
    assert np.allclose(g[:, :, node], np.roll(f[:, :, node], 1, axis=0), atol=1e-12)


def test_upwind_shift_positive_and_conservative(rng):
    sc = scenario(space="torus_3d", cells=3)
    F = rng.uniform(0, 1, (27, 2, sc.grid.size))
    G = upwind_shift(F, sc, 0.37)
    assert G.min() >= 0
    assert np.allclose(G.sum(axis=0), F.sum(axis=0))


def test_linear_run_conserves_and_decays():
    trace, f = run(scenario(linear_only=True, t_end=4.0))
    assert trace.max_drift_rate() < 1e-12
    assert all(v > 0 for v in trace.lam_fit.values())


def test_nonlinear_run_h_theorem():
    trace, _ = run(scenario(amplitude=0.05, t_end=2.0))
    assert trace.max_drift_rate() < 1e-12
    assert trace.h_increase() <= 0


def test_zero_perturbation_and_kernel_field():
    trace, f = run(scenario(shape="zero"))
    assert all(v == 0 for v in trace.norms["L2_mu"]) and not f.any()
    assert kernel_drift(scenario(shape="kernel", linear_only=True)) < 1e-10


def test_spatial_run_conserves():
    trace, _ = run(scenario(space="torus_1d", cells=4, linear_only=True, t_end=1.0))
    assert trace.max_drift_rate() < 1e-12


def test_positive_scheme_keeps_maxwellian_and_sign(rng):
    sc = scenario(integrator="gain_loss_exponential", dt=0.05, t_end=0.1)
    mu = maxwellian_values(sc.species, sc.grid.nodes)
    trace, F = run_positive(sc, mu)
    assert np.abs(F[0] - mu).max() < 1e-9 * mu.max()
    F0 = mu * rng.uniform(0, 2, mu.shape)
    trace, F = run_positive(sc, F0)
    assert min(trace.min_F) >= 0
    with pytest.raises(ValueError):
        run_positive(sc, -mu)
