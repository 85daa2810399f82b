"""Experiment configuration: TOML parsing and validation.

A config file has a ``[model]`` table selecting the level scheme by name, a
``[run]`` table with atom number, initial excitation and integration window,
and optional per-command tables (``[output]``, ``[scaling]``,
``[entanglement]``, ``[wigner]``, ``[photonic]``) that the CLI subcommands
interpret.  Anything malformed raises :class:`ConfigError`, which the CLI
maps to exit code 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from pathlib import Path
from typing import Any

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .dynamics import LevelScheme, SchemeKind


class ConfigError(ValueError):
    """Configuration file is missing, unparseable, or inconsistent."""


EXCITATION_PRESETS: dict[str, tuple[complex, complex]] = {
    "symmetric": (1 / sqrt(2), 1 / sqrt(2)),
    "antisymmetric": (1 / sqrt(2), -1 / sqrt(2)),
    "deterministic_e1": (1.0 + 0j, 0j),
    "deterministic_e2": (0j, 1.0 + 0j),
}


@dataclass
class ExperimentConfig:
    scheme: LevelScheme
    n_atoms: int
    alpha: complex
    beta: complex
    excitation: str | None
    t_end: float | None
    sample_dt: float | None
    step: float | None
    include_phases: bool
    steady_threshold: float
    sections: dict[str, Any] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)

    def require_t_end(self) -> float:
        if self.t_end is None:
            raise ConfigError("this command needs [run].t_end")
        return self.t_end


def _complex_pair(value: Any, name: str) -> complex:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"[run].{name} must be a (re, im) pair")
    try:
        return complex(float(value[0]), float(value[1]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[run].{name} must contain numbers") from exc


def _build_scheme(model: dict[str, Any]) -> LevelScheme:
    kind = model.get("kind")
    try:
        which = SchemeKind(kind)
    except ValueError as exc:
        raise ConfigError(
            f"[model].kind must be one of {[k.value for k in SchemeKind]}, got {kind!r}"
        ) from exc
    try:
        if which is SchemeKind.V_NONDEGENERATE:
            return LevelScheme.v_nondegenerate(
                omega1=model["omega1"],
                omega2=model["omega2"],
                gamma1=model["gamma1"],
                gamma2=model["gamma2"],
            )
        if which is SchemeKind.V_DEGENERATE:
            return LevelScheme.v_degenerate(omega0=model["omega0"], gamma=model["gamma"])
        return LevelScheme.fla(
            omega0=model["omega0"],
            omega_plus=model["omega_plus"],
            omega_minus=model["omega_minus"],
            gamma=model["gamma"],
            gamma_plus=model["gamma_plus"],
            gamma_minus=model["gamma_minus"],
        )
    except KeyError as exc:
        raise ConfigError(f"[model] is missing {exc.args[0]!r} for kind {which.value}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [model]: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc

    if "model" not in raw:
        raise ConfigError("config needs a [model] table")
    if "run" not in raw:
        raise ConfigError("config needs a [run] table")
    scheme = _build_scheme(raw["model"])
    run = raw["run"]

    try:
        n_atoms = int(run["n_atoms"])
    except KeyError as exc:
        raise ConfigError("[run].n_atoms is required") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("[run].n_atoms must be an integer") from exc
    if n_atoms < 1:
        raise ConfigError("[run].n_atoms must be at least 1")

    excitation = run.get("excitation")
    if excitation is not None:
        if excitation not in EXCITATION_PRESETS:
            raise ConfigError(
                f"unknown excitation preset {excitation!r}; choose from "
                f"{sorted(EXCITATION_PRESETS)} or give alpha/beta pairs"
            )
        alpha, beta = EXCITATION_PRESETS[excitation]
    else:
        if "alpha" not in run or "beta" not in run:
            raise ConfigError("[run] needs either excitation = <preset> or alpha and beta pairs")
        alpha = _complex_pair(run["alpha"], "alpha")
        beta = _complex_pair(run["beta"], "beta")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ConfigError("|alpha|^2 + |beta|^2 must equal 1")
    # Renormalize the residual rounding so downstream 1e-12 checks pass.
    norm = sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
    alpha, beta = alpha / norm, beta / norm

    def _positive(name: str) -> float | None:
        if name not in run:
            return None
        try:
            value = float(run[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[run].{name} must be a number") from exc
        if value <= 0:
            raise ConfigError(f"[run].{name} must be positive")
        return value

    sections = {
        name: raw[name]
        for name in ("output", "scaling", "entanglement", "wigner", "photonic")
        if name in raw
    }

    return ExperimentConfig(
        scheme=scheme,
        n_atoms=n_atoms,
        alpha=alpha,
        beta=beta,
        excitation=excitation,
        t_end=_positive("t_end"),
        sample_dt=_positive("sample_dt"),
        step=_positive("step"),
        include_phases=bool(run.get("include_phases", True)),
        steady_threshold=float(run.get("steady_threshold", 1e-4)),
        sections=sections,
        raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())


def parse_coordinate(token: str) -> tuple[int, str]:
    """Parse a slice coordinate like "X1" or "P2" into (mode index, quadrature).

    Mode numbers are 1-based in configs, 0-based internally.
    """
    if len(token) < 2 or token[0] not in ("X", "P"):
        raise ConfigError(f"coordinate {token!r} must look like X1 or P2")
    try:
        mode = int(token[1:])
    except ValueError as exc:
        raise ConfigError(f"coordinate {token!r} must end in a mode number") from exc
    if mode < 1:
        raise ConfigError(f"coordinate {token!r}: mode numbers are 1-based")
    return mode - 1, token[0]
