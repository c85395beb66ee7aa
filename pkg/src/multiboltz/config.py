"""Scenario files: INI sections with a fixed schema (unknown keys rejected).

Example::

    [species]
    masses = 1.0, 2.0
    densities = 1.0, 1.0

    [kernel]
    gamma = 1
    c_phi = 1.0          ; scalar, or rows separated by ';'
    angular = constant   ; constant | forward | quadratic
    angular_param = 1.0

    [grid]
    nodes = 10
    extent = 5.0

    [sphere]
    kind = product       ; product | lebedev
    n_theta = 4
    n_phi = 8
"""
import configparser

import numpy as np

from .discretization import SphereQuadrature, VelocityGrid
from .kernel import ANGULAR, KernelSpec
from .mixture import SpeciesSet
from .solver import Scenario


class ConfigError(ValueError):
    pass


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _matrix(s):
    rows = [_floats(r) for r in s.split(";") if r.strip()]
    return np.array(rows if len(rows) > 1 or len(rows[0]) > 1 else rows[0][0])


SCHEMA = {
    "species": {"masses": _floats, "densities": _floats},
    "kernel": {"gamma": float, "c_phi": _matrix, "angular": str, "angular_param": float,
               "cb": float},
    "grid": {"nodes": int, "extent": float, "factor": float},
    "sphere": {"kind": str, "n_theta": int, "n_phi": int, "order": int},
    "solver": {"space": str, "cells": int, "amplitude": float, "shape": str,
               "integrator": str, "dt": float, "t_end": float, "output_every": int,
               "linear_only": _bool, "k": float, "beta": float, "blowup": float,
               "inner_tol": float, "inner_max": int, "prune": float},
    "analysis": {"seed": int, "samples": int, "k_values": _floats, "k": float,
                 "deltas": _floats, "delta": float, "beta": float, "fields": int,
                 "speeds": _floats, "cap": int, "k_min": int, "k_max": int},
}

REQUIRED = {"species": ("masses",), "kernel": ("gamma", "c_phi")}


def read_config(path):
    """Parse and validate; returns {section: {key: value}}."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        out[sec] = {}
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            try:
                out[sec][key] = SCHEMA[sec][key](raw)
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from exc
    for sec, keys in REQUIRED.items():
        for key in keys:
            if key not in out.get(sec, {}):
                raise ConfigError(f"missing [{sec}] {key}")
    return out


def build_species(cfg):
    s = cfg["species"]
    try:
        return SpeciesSet(s["masses"], s.get("densities"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_kernel(cfg, n):
    k = cfg["kernel"]
    c = np.asarray(k["c_phi"], float)
    if c.ndim == 0:
        c = np.full((n, n), float(c))
    if c.shape != (n, n):
        raise ConfigError(f"c_phi must be {n}x{n}")
    name = k.get("angular", "constant")
    if name not in ANGULAR:
        raise ConfigError(f"unknown angular part {name!r}")
    ang = ANGULAR[name](k["angular_param"]) if "angular_param" in k else ANGULAR[name]()
    try:
        return KernelSpec(k["gamma"], c, ang, k.get("cb", 1.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_grid(cfg, species):
    g = cfg.get("grid", {})
    n = g.get("nodes", 24)
    try:
        if "extent" in g:
            return VelocityGrid(g["extent"], n)
        return VelocityGrid.for_species(species, n, g.get("factor", 8.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_sphere(cfg):
    s = cfg.get("sphere", {})
    try:
        return SphereQuadrature.from_config(s.get("kind", "product"), s.get("n_theta", 16),
                                            s.get("n_phi", 16), s.get("order", 11))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_all(cfg):
    species = build_species(cfg)
    return species, build_kernel(cfg, species.n), build_grid(cfg, species), build_sphere(cfg)


def build_scenario(cfg, seed=None):
    species, kernel, grid, sphere = build_all(cfg)
    opts = dict(cfg.get("solver", {}))
    if seed is not None:
        opts["seed"] = seed
    elif "seed" in cfg.get("analysis", {}):
        opts["seed"] = cfg["analysis"]["seed"]
    try:
        return Scenario(species, kernel, grid, sphere, **opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
