"""Command-line front end: spectrum | povzner | relax | splitting | kernel-check.

Exit codes: 0 all checks pass, 1 a check failed (or a run aborted),
2 configuration error.
"""
import argparse
import os
import sys

import numpy as np

from . import config as cf

PASS, FAIL, CONFIG = 0, 1, 2


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows, comment):
    with open(path, "w") as fh:
        fh.write(f"# {comment}; columns: {', '.join(header)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_report(path, items):
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k}={_fmt(v)}\n")


def _checks(out, checks):
    for name, ok in checks:
        print(f"check {name}: {'pass' if ok else 'FAIL'}", file=out)
    return PASS if all(ok for _, ok in checks) else FAIL


# ---------------------------------------------------------------------------

def cmd_spectrum(cfg, args):
    from .linear import CollisionModel, projection_basis, spectral_gap

    species, kernel, grid, sphere = cf.build_all(cfg)
    an = cfg.get("analysis", {})
    model = CollisionModel(species, kernel, grid, sphere)
    try:
        M = model.matrix(tol=1e-8) if grid.size * species.n <= an.get("cap", 8000) else None
    except RuntimeError as exc:
        print(f"assembly error: {exc}", file=sys.stderr)
        return FAIL
    if M is None:
        print("error: dense assembly exceeds the size cap", file=sys.stderr)
        return FAIL
    basis = projection_basis(species, grid)
    rep = spectral_gap(M, basis, samples=an.get("samples", 1000), seed=args.seed,
                       gamma=kernel.gamma, speed=grid.speed, nu_vals=model.nu())
    write_csv(os.path.join(args.out, "eigenvalues.csv"), ["index", "eigenvalue"],
              list(enumerate(rep.eigenvalues)), "discrete linearized operator spectrum")
    items = [("species", species.n), ("nodes", grid.size), *rep.as_dict().items(),
             ("expected_kernel_dim", species.n + 4)]
    write_report(os.path.join(args.out, "spectrum_report.txt"), items)
    for k, v in items:
        print(f"{k}={_fmt(v)}")
    return _checks(sys.stdout, [
        ("symmetric", rep.symmetry_error < 1e-8),
        ("kernel_dim", rep.kernel_dim_check == species.n + 4),
        ("gap_positive", rep.gap > 0),
        ("coercivity_positive", rep.coercivity > 0),
    ])


def cmd_povzner(cfg, args):
    from .povzner import povzner_report

    species, kernel, _, _ = cf.build_all(cfg)
    an = cfg.get("analysis", {})
    ks = an.get("k_values", [3, 4, 5, 6, 8, 10])
    try:
        rep = povzner_report(species, kernel, ks, samples=an.get("samples", 1000),
                             seed=args.seed, k_range=(an.get("k_min", 3), an.get("k_max", 10)))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL
    write_csv(os.path.join(args.out, "povzner.csv"), ["k", "C_k", "C_k_envelope"],
              zip(rep.k_values, rep.c_k, rep.c_k_envelope), "Povzner constants")
    items = [("k0_integer", rep.k0_integer), ("k0_real", rep.k0_real)]
    for name, n, passed, worst in rep.verification:
        items += [(f"{name}_samples", n), (f"{name}_passed", passed),
                  (f"{name}_max_ratio", worst)]
    write_report(os.path.join(args.out, "povzner_report.txt"), items)
    for k, v in items:
        print(f"{k}={_fmt(v)}")
    checks = [("c_k_decreasing", bool(np.all(np.diff(rep.c_k) < 0)))]
    checks += [(f"verification_{name}", passed == n) for name, n, passed, _ in rep.verification
               if name == "closed_form"]
    return _checks(sys.stdout, checks)


def cmd_relax(cfg, args):
    from .solver import SolverError, run, run_positive

    sc = cf.build_scenario(cfg, args.seed)
    positive = args.positive or sc.integrator == "gain_loss_exponential"
    try:
        trace, _ = run_positive(sc) if positive else run(sc)
    except SolverError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return FAIL
    header, rows = trace.rows()
    write_csv(os.path.join(args.out, "relaxation.csv"), header, rows,
              "relaxation trace (moments are raw, drifts are differences from row 0)")
    items = [(f"lambda_fit_{k}", v) for k, v in trace.lam_fit.items()]
    items += [("max_drift_rate", trace.max_drift_rate()), ("max_H_increase", trace.h_increase()),
              ("min_F", min(trace.min_F))]
    write_report(os.path.join(args.out, "relaxation_report.txt"), items)
    for k, v in items:
        print(f"{k}={_fmt(v)}")
    zero = sc.amplitude == 0 or sc.shape == "zero"
    checks = []
    if positive:
        checks.append(("nonnegative", min(trace.min_F) >= 0))
    else:
        checks.append(("conservation", trace.max_drift_rate() < 1e-8))
        if not sc.linear_only:
            checks.append(("H_monotone", trace.h_increase() <= 1e-10))
        if not zero and sc.shape != "kernel":
            checks.append(("decay", all(v > 0 for v in trace.lam_fit.values())))
    return _checks(sys.stdout, checks)


def cmd_splitting(cfg, args):
    from .linear import CollisionModel
    from .splitting import DELTAS, TruncationSpec, estimate_cb, fit_ca, partition_error

    species, kernel, grid, sphere = cf.build_all(cfg)
    an = cfg.get("analysis", {})
    k = an.get("k", 3.0)
    if not k > 2:
        raise cf.ConfigError("splitting needs k > 2")
    deltas = sorted(an.get("deltas", DELTAS[:3]), reverse=True)
    delta = an.get("delta", 0.05)
    model = CollisionModel(species, kernel, grid, sphere)
    rows = []
    for d in deltas:
        est, parts = estimate_cb(k, TruncationSpec(d), model, an.get("samples", 200), args.seed)
        rows.append((d, est, parts["columns"], parts["random"]))
    write_csv(os.path.join(args.out, "splitting.csv"),
              ["delta", "C_B_estimate", "column_bound", "random_fields"], rows,
              f"C_B estimates for k = {k:g}")
    spec = TruncationSpec(delta)
    chosen = next((r[1] for r in rows if r[0] == delta), None)
    if chosen is None:
        chosen = estimate_cb(k, spec, model, an.get("samples", 200), args.seed)[0]
    items = [("k", k), ("delta", delta), ("C_B", chosen),
             ("C_A", fit_ca(k, an.get("beta", 1.0), spec, model)),
             ("partition_error", partition_error(spec, model, seed=args.seed))]
    ok_deltas = [d for d, e, *_ in rows if e < 1]
    items.append(("delta_choice", max(ok_deltas) if ok_deltas else "none"))
    write_report(os.path.join(args.out, "splitting_report.txt"), items)
    for key, v in items:
        print(f"{key}={_fmt(v)}")
    ests = [r[1] for r in rows]
    return _checks(sys.stdout, [
        ("C_B_below_one", chosen < 1),
        ("C_A_finite", bool(np.isfinite(items[3][1]))),
        ("partition", items[4][1] < 1e-8),
        ("delta_trend", all(b <= a * (1 + 1e-12) for a, b in zip(ests, ests[1:]))),
    ])


def cmd_kernel_check(cfg, args):
    from .carleman import fit_bound_shape, fit_weighted_integral, kernel_check

    species, kernel, grid, _ = cf.build_all(cfg)
    an = cfg.get("analysis", {})
    rng = np.random.default_rng(args.seed)
    points = [(i, rng.uniform(-1.5, 1.5, 3)) for i in range(species.n) for _ in range(2)]
    err = kernel_check(species, kernel, points, n_fields=an.get("fields", 100), seed=args.seed)
    m_hat, C_K, _ = fit_bound_shape(species, kernel, samples=an.get("samples", 200),
                                    seed=args.seed, band=grid.spacing / 2)
    C, rows = fit_weighted_integral(species, kernel, an.get("speeds", [0, 1, 2, 4]),
                                    beta=an.get("beta", 1.0))
    write_csv(os.path.join(args.out, "kernel_check.csv"), ["field", "relative_error"],
              list(enumerate(err)), "kernel form vs sigma form of K on random fields")
    write_csv(os.path.join(args.out, "weighted_integral.csv"),
              ["species", "speed", "integral", "scaled"], rows,
              "weighted kernel integral and (1 + |v|) times it")
    items = [("max_relative_error", float(err.max())), ("m_hat", m_hat), ("C_K", C_K),
             ("C_weighted", C)]
    write_report(os.path.join(args.out, "kernel_check_report.txt"), items)
    for k, v in items:
        print(f"{k}={_fmt(v)}")
    return _checks(sys.stdout, [
        ("kernel_vs_sigma", err.max() < 1e-6),
        ("bound_shape", bool(np.isfinite(m_hat))),
        ("weighted_integral_finite", bool(np.isfinite(C))),
    ])


COMMANDS = {
    "spectrum": cmd_spectrum,
    "povzner": cmd_povzner,
    "relax": cmd_relax,
    "splitting": cmd_splitting,
    "kernel-check": cmd_kernel_check,
}


def parser():
    p = argparse.ArgumentParser(prog="multiboltz", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="scenario INI file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="cap on numba worker threads")
    p.add_argument("--positive", action="store_true", help="relax: use the gain/loss scheme")
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        cfg = cf.read_config(args.config)
        if args.seed is None:
            args.seed = cfg.get("analysis", {}).get("seed", 0)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG


if __name__ == "__main__":
    sys.exit(main())
