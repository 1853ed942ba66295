"""TOML run configuration: defaults, strict validation, object construction.

Every section and key is listed in ``DEFAULTS``; anything else is rejected.
A few keys accept the string ``"auto"`` in place of a number, meaning the
value is derived (``kappa`` from the potential, ``eta`` from the step
ratios, ``tau_ref`` as ``2^-10 T``) or that the check is skipped (the
``*_expected_order`` keys).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .grid import GridSpec
from .harness import InitialCondition
from .kernels import POLICY_MODES, RatioPolicy
from .potential import KINDS, ConfigError, Potential
from .scheme import VARIANTS, SchemeConfig
from .stabilizer import AuxFunctional
from .timegrid import AdaptiveParams

AUTO = "auto"

DEFAULTS: dict[str, dict] = {
    "run": {
        "label": "run",
        "output": "out",
        "seed": 0,
        "snapshot_times": [5.0, 50.0, 500.0, 2000.0],
    },
    "model": {
        "potential": "double-well",
        "theta": 0.8,
        "theta_c": 1.6,
        "eps2": 0.01,
        "L": 2 * math.pi,
        "M": 64,
    },
    "scheme": {
        "variant": "SESAV1",
        "variants": list(VARIANTS),
        "stabilizer": "hermite",
        "kappa": AUTO,
        "ratio_policy": "energy",
        "delta": 0.001,
        "eta": AUTO,
        "clamp": False,
    },
    "time": {
        "T": 1.0,
        "grid": "uniform",
        "taus": [0.1, 0.05, 0.025, 0.0125],
        "tau": 0.01,
        "r_max": 2.4,
        "tau_ref": AUTO,
        "alpha": 1e8,
        "tau_min": 0.04,
        "tau_max": 0.4,
        "shrink_first_step": False,
        "energy_signal": "original",
    },
    "initial": {
        "kind": "sine",
        "amplitude": 0.1,
        "lo": -0.8,
        "hi": 0.8,
        "seed": 0,
    },
    "checks": {
        "expected_order": AUTO,
        "order_tol": 0.25,
        "g_expected_order": AUTO,
        "g_order_tol": 0.3,
        "energy_expected_order": AUTO,
        "energy_order_tol": 0.3,
        "assert_mbp": True,
        "energy_rtol": 0.02,
    },
}

COMMENTS = {
    "run.seed": "master seed for random-ratio grids; --seed also overrides initial.seed",
    "run.snapshot_times": "simulate/coarsen: dump the field at the first grid time at or past each",
    "model.potential": f"one of {', '.join(KINDS)}",
    "model.eps2": "interface parameter epsilon^2",
    "scheme.variant": f"simulate/converge/energy: one of {', '.join(VARIANTS)}",
    "scheme.variants": "mbp: variants compared at every tau",
    "scheme.stabilizer": "hermite (bounded cutoff) or identity",
    "scheme.kappa": "stabilization constant; auto = the potential's default",
    "scheme.ratio_policy": f"one of {', '.join(POLICY_MODES)}",
    "scheme.eta": "recombination parameter of the psi diagnostic; auto = eta* of the largest ratio",
    "scheme.clamp": "Flory-Huggins only: clip to [-beta, beta] instead of failing on a breach",
    "time.grid": "uniform, random or adaptive (simulate only)",
    "time.taus": "converge/mbp/energy: step sizes, strictly decreasing",
    "time.tau": "simulate: step size of a uniform or random grid",
    "time.tau_ref": "converge: reference step; auto = 2^-10 T",
    "time.energy_signal": "adaptive controller input: original or modified",
    "initial.kind": "sine (amplitude sin(2 pi x/L) sin(2 pi y/L)) or random (i.i.d. uniform in [lo, hi])",
    "checks.expected_order": "converge: asserted phi order; auto = not asserted",
    "checks.g_expected_order": "converge: asserted order of |g - 1|; auto = not asserted",
    "checks.energy_expected_order": "energy: asserted order of max |E - modified E|; auto = not asserted",
    "checks.assert_mbp": "simulate: fail when max |phi| exceeds beta",
    "checks.energy_rtol": "coarsen: allowed relative final-energy gap to the tau_min run",
}


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def defaults_toml() -> str:
    lines = []
    for section, keys in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in keys.items():
            note = COMMENTS.get(f"{section}.{key}")
            if note:
                lines.append(f"# {note}")
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(name: str, default, value):
    if default == AUTO:
        if value == AUTO or _is_number(value):
            return float(value) if _is_number(value) else value
        raise ConfigError(f"{name}: expected a number or \"auto\", got {value!r}")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{name}: expected true or false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if isinstance(default, float):
        if _is_number(value):
            return float(value)
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{name}: expected a string, got {value!r}")
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{name}: expected a list, got {value!r}")
        kind = type(default[0])
        out = []
        for x in value:
            if kind is float and _is_number(x):
                out.append(float(x))
            elif kind is str and isinstance(x, str):
                out.append(x)
            else:
                raise ConfigError(f"{name}: bad list entry {x!r}")
        return out
    raise AssertionError(name)


def merge(raw: dict) -> dict:
    """Overlay ``raw`` on the defaults, rejecting unknown sections and keys."""
    out = {s: dict(keys) for s, keys in DEFAULTS.items()}
    for section, keys in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(f"{section}: unknown section")
        if not isinstance(keys, dict):
            raise ConfigError(f"{section}: expected a table")
        for key, value in keys.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            out[section][key] = _check_type(key, DEFAULTS[section][key], value)
    return out


def load(path: str | Path | None) -> dict:
    if path is None:
        return merge({})
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: no such file {str(path)!r}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"config: {err}") from err
    return merge(raw)


@dataclass(frozen=True)
class RunConfig:
    """Validated objects built from a merged config table."""

    raw: dict
    scheme: SchemeConfig
    initial: InitialCondition
    adaptive: AdaptiveParams | None
    eta: float | None
    tau_ref: float | None

    def section(self, name: str) -> dict:
        return self.raw[name]


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value}")


def build(cfg: dict, command: str) -> RunConfig:
    """Check every precondition needed by ``command`` before anything runs."""
    run, model, sch, tm, ini, chk = (cfg[k] for k in ("run", "model", "scheme", "time", "initial", "checks"))
    if run["seed"] < 0:
        raise ConfigError(f"seed: must be non-negative, got {run['seed']}")
    _positive("L", model["L"])
    if model["M"] < 2:
        raise ConfigError(f"M: need at least 2 grid points, got {model['M']}")
    _positive("eps2", model["eps2"])
    pot = Potential(model["potential"], model["theta"], model["theta_c"])
    if sch["stabilizer"] not in ("hermite", "identity"):
        raise ConfigError(f"stabilizer: expected 'hermite' or 'identity', got {sch['stabilizer']!r}")
    for v in [sch["variant"], *sch["variants"]]:
        if v not in VARIANTS:
            raise ConfigError(f"variant: unknown {v!r}, expected one of {VARIANTS}")
    if not sch["variants"]:
        raise ConfigError("variants: need at least one")
    if sch["ratio_policy"] not in POLICY_MODES:
        raise ConfigError(f"ratio_policy: expected one of {POLICY_MODES}, got {sch['ratio_policy']!r}")
    if not 0 < sch["delta"] < 1:
        raise ConfigError(f"delta: must lie in (0, 1), got {sch['delta']}")
    kappa = None if sch["kappa"] == AUTO else sch["kappa"]
    if kappa is not None and kappa < 0:
        raise ConfigError(f"kappa: must be non-negative, got {kappa}")
    eta = None if sch["eta"] == AUTO else sch["eta"]
    if eta is not None and not 0 <= eta < 1:
        raise ConfigError(f"eta: must lie in [0, 1), got {eta}")
    policy = RatioPolicy(sch["ratio_policy"], sch["delta"])
    scheme = SchemeConfig(
        GridSpec(model["L"], model["M"]),
        pot,
        model["eps2"],
        variant=sch["variant"],
        kappa=kappa,
        stabilizer=AuxFunctional(sch["stabilizer"]),
        ratio_policy=policy,
        clamp=sch["clamp"],
    )

    _positive("T", tm["T"])
    if tm["grid"] not in ("uniform", "random", "adaptive"):
        raise ConfigError(f"grid: expected 'uniform', 'random' or 'adaptive', got {tm['grid']!r}")
    if tm["grid"] == "adaptive" and command not in ("simulate", "coarsen"):
        raise ConfigError(f"grid: 'adaptive' is only available to simulate and coarsen, not {command}")
    if tm["energy_signal"] not in ("original", "modified"):
        raise ConfigError(f"energy_signal: expected 'original' or 'modified', got {tm['energy_signal']!r}")
    if not tm["r_max"] > 1:
        raise ConfigError(f"r_max: must exceed 1, got {tm['r_max']}")
    if policy.mode != "permissive":
        limit = policy.r_max_energy if policy.mode == "energy" else policy.r_max_mbp
        if tm["r_max"] > limit:
            raise ConfigError(f"r_max: {tm['r_max']} exceeds the {policy.mode} ratio limit {limit:.6g}")
    _positive("tau", tm["tau"])
    for tau in tm["taus"]:
        _positive("taus", tau)

    tau_ref = None if tm["tau_ref"] == AUTO else tm["tau_ref"]
    if command == "converge":
        if len(tm["taus"]) < 4:
            raise ConfigError("taus: need ≥ 4 values")
        if any(b >= a for a, b in zip(tm["taus"], tm["taus"][1:])):
            raise ConfigError("taus: must be strictly decreasing")
        ref = tau_ref if tau_ref is not None else 2.0**-10 * tm["T"]
        if ref > min(tm["taus"]) / 8:
            raise ConfigError(f"tau_ref: must be <= smallest tau / 8 = {min(tm['taus']) / 8:.6g}, got {ref:.6g}")
    if command in ("mbp", "energy") and not tm["taus"]:
        raise ConfigError("taus: need at least one value")

    adaptive = None
    if command == "coarsen" or tm["grid"] == "adaptive":
        adaptive = AdaptiveParams(tm["tau_min"], tm["tau_max"], tm["alpha"], tm["r_max"])

    initial = InitialCondition(ini["kind"], ini["amplitude"], ini["lo"], ini["hi"], ini["seed"])
    initial.validate(pot)
    for key in ("order_tol", "g_order_tol", "energy_order_tol", "energy_rtol"):
        _positive(key, chk[key])
    return RunConfig(cfg, scheme, initial, adaptive, eta, tau_ref)


def expected(value):
    return None if value == AUTO else value
