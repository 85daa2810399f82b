"""Command-line interface.

Subcommands::

    mlsr simulate      master-equation trajectory, intensities, tracked elements
    mlsr photonic      final photonic state / mixture and mode-independence verdict
    mlsr entanglement  negativity scans, conditional entropies, ground-sector measures
    mlsr wigner        Wigner cuts, separability probes, grid integral
    mlsr scaling       peak intensity vs atom number with power-law fits

Every command takes ``--config FILE`` or ``--preset NAME`` (shipped preset),
writes CSV/JSON into ``--out DIR`` and a ``run_metadata.json`` describing the
run.  Outputs are deterministic: rerunning a command reproduces files
byte-for-byte.  Exit codes: 0 success, 2 configuration error, 3 numerical
invariant breach during integration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata, resources
from math import sqrt
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import _backend, dynamics, entanglement, photonic, wigner
from .config import (
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_config,
    parse_coordinate,
)
from .dynamics import InvariantViolation, SchemeKind
from .fitting import fit_power_law


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj: Any) -> None:
    with path.open("w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _complex_json(z: complex) -> dict[str, float]:
    return {"re": float(z.real), "im": float(z.imag)}


def _load(args: argparse.Namespace) -> tuple[ExperimentConfig, str | None]:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        return load_config(args.config), None
    if args.preset:
        ref = resources.files("mlsr.presets") / f"{args.preset}.toml"
        if not ref.is_file():
            available = sorted(
                p.name.removesuffix(".toml")
                for p in resources.files("mlsr.presets").iterdir()
                if p.name.endswith(".toml")
            )
            raise ConfigError(f"unknown preset {args.preset!r}; available: {available}")
        return parse_config(ref.read_text()), args.preset
    raise ConfigError("a configuration is required: --config FILE or --preset NAME")


def _metadata(
    out: Path, command: str, preset: str | None, cfg: ExperimentConfig, args, outputs: list[str]
) -> None:
    try:
        version = metadata.version("mlsr")
    except metadata.PackageNotFoundError:  # pragma: no cover - dev tree
        version = "unknown"
    _write_json(
        out / "run_metadata.json",
        {
            "command": command,
            "preset": preset,
            "package_version": version,
            "backend": _backend.backend_name(),
            "threads": args.threads,
            "deterministic": True,
            "config": cfg.raw,
            "outputs": sorted(outputs),
        },
    )


def _trajectory(cfg: ExperimentConfig) -> dynamics.TimeSeries:
    gen = dynamics.build_generator(
        cfg.scheme, cfg.n_atoms, include_phases=cfg.include_phases
    )
    rho0 = dynamics.symmetric_init(cfg.scheme, cfg.n_atoms, cfg.alpha, cfg.beta)
    return dynamics.integrate(
        gen, rho0, cfg.require_t_end(), step=cfg.step, sample_dt=cfg.sample_dt
    )


def _parse_entry(raw: Any, levels: int) -> tuple[int, ...]:
    if isinstance(raw, str):
        occ = tuple(int(ch) for ch in raw)
    else:
        occ = tuple(int(x) for x in raw)
    if len(occ) != levels:
        raise ConfigError(f"matrix-element label {raw!r} must have {levels} level counts")
    return occ


def _cmd_simulate(cfg: ExperimentConfig, preset, args, out: Path) -> int:
    output = cfg.sections.get("output", {})
    series = _trajectory(cfg)
    outputs = []

    inten = dynamics.intensities(series, cfg.scheme)
    rows = (
        (t, *vals) for t, vals in zip(inten.times, np.asarray(inten.values))
    )
    _write_csv(out / "intensities.csv", ("t", *inten.labels), rows)
    outputs.append("intensities.csv")

    if output.get("populations", False):
        basis = series.values[0].basis
        labels = ["p_" + "-".join(map(str, s)) for s in basis.states]
        rows = (
            (t, *[rho.data[i, i].real for i in range(len(basis))])
            for t, rho in zip(series.times, series.values)
        )
        _write_csv(out / "populations.csv", ("t", *labels), rows)
        outputs.append("populations.csv")

    entries_cfg = output.get("entries", [])
    if entries_cfg:
        levels = cfg.scheme.levels
        pairs = [
            (_parse_entry(bra, levels), _parse_entry(ket, levels)) for bra, ket in entries_cfg
        ]
        basis = series.values[0].basis
        header = ["t"]
        for bra, ket in pairs:
            tag = "".join(map(str, bra)) + "_" + "".join(map(str, ket))
            header += [f"re_{tag}", f"im_{tag}"]
        idx = [(basis.index_of(b), basis.index_of(k)) for b, k in pairs]

        def entry_rows():
            for t, rho in zip(series.times, series.values):
                row = [t]
                for i, j in idx:
                    z = rho.data[i, j]
                    row += [z.real, z.imag]
                yield row

        _write_csv(out / "entries.csv", header, entry_rows())
        outputs.append("entries.csv")

    spectrum_cfg = output.get("spectrum")
    if spectrum_cfg:
        levels = cfg.scheme.levels
        pairs = [
            (_parse_entry(bra, levels), _parse_entry(ket, levels))
            for bra, ket in spectrum_cfg.get("entries", entries_cfg)
        ]
        if not pairs:
            raise ConfigError("[output].spectrum needs matrix-element entries")
        margin = float(spectrum_cfg.get("window_margin", 15.0))
        t0 = dynamics.steady_state_time(series, threshold=cfg.steady_threshold)
        report: dict[str, Any] = {"steady_state_time": t0, "window_margin": margin}
        if t0 is None:
            report["peaks"] = None
            report["note"] = "excited-state sector never settled below threshold"
        else:
            start = t0 + margin
            keep = series.times >= start - 1e-12
            window = dynamics.TimeSeries(
                times=series.times[keep],
                values=[v for v, k in zip(series.values, keep) if k],
            )
            peaks = dynamics.coherence_spectrum(window, pairs)
            report["window_start"] = float(window.times[0])
            report["peaks"] = [
                {
                    "bra": list(bra),
                    "ket": list(ket),
                    "angular_frequency": omega,
                    "amplitude": amp,
                }
                for (bra, ket), (omega, amp) in zip(pairs, peaks)
            ]
        _write_json(out / "spectrum.json", report)
        outputs.append("spectrum.json")

    _metadata(out, "simulate", preset, cfg, args, outputs)
    return 0


def _pure_state_json(state: photonic.PhotonicPureState) -> dict[str, Any]:
    return {
        "labels": list(state.basis.labels or ()),
        "states": [list(s) for s in state.basis.states],
        "amplitudes": [_complex_json(a) for a in state.amplitudes],
        "tag": state.tag,
    }


def _independence_json(report: photonic.ModeIndependenceReport) -> dict[str, Any]:
    return {
        "classification": report.classification.value,
        "dressed_operators": [
            [_complex_json(x) for x in vec] for vec in report.operators.vectors
        ],
        "witness": None
        if report.witness is None
        else {
            "first": [_complex_json(x) for x in report.witness[0]],
            "second": [_complex_json(x) for x in report.witness[1]],
            "overlap": report.witness[2],
        },
    }


def _final_photonic(cfg: ExperimentConfig):
    if cfg.scheme.kind is SchemeKind.FLA:
        return photonic.fla_final_mixture(cfg.scheme, cfg.n_atoms, cfg.alpha, cfg.beta)
    return photonic.v_final_state(cfg.n_atoms, cfg.alpha, cfg.beta)


def _cmd_photonic(cfg: ExperimentConfig, preset, args, out: Path) -> int:
    state = _final_photonic(cfg)
    report = photonic.mode_independence_check(state)
    if isinstance(state, photonic.PhotonicMixture):
        body = {
            "kind": "mixture",
            "components": [
                {"probability": p, **_pure_state_json(comp)}
                for p, comp in state.components
            ],
        }
    else:
        body = {"kind": "pure", **_pure_state_json(state)}
    body["mode_independence"] = _independence_json(report)
    _write_json(out / "photonic_state.json", body)
    _metadata(out, "photonic", preset, cfg, args, outputs=["photonic_state.json"])
    return 0


def _alpha_grid(section: dict[str, Any]) -> np.ndarray:
    points = int(section.get("alpha2_points", 41))
    if points < 2:
        raise ConfigError("alpha2_points must be at least 2")
    return np.linspace(0.0, 1.0, points)


def _embedded_final(cfg: ExperimentConfig, alpha: complex, beta: complex):
    state = (
        photonic.fla_final_mixture(cfg.scheme, cfg.n_atoms, alpha, beta)
        if cfg.scheme.kind is SchemeKind.FLA
        else photonic.v_final_state(cfg.n_atoms, alpha, beta)
    )
    rho = photonic.mixture_density_matrix(state)
    return entanglement.embed_occupation(rho)


def _scheme_with_rates(cfg: ExperimentConfig, case: dict[str, Any]) -> dynamics.LevelScheme:
    base = cfg.scheme
    try:
        return dynamics.LevelScheme.fla(
            omega0=base.omega0,
            omega_plus=base.omega_plus,
            omega_minus=base.omega_minus,
            gamma=case.get("gamma", base.gamma),
            gamma_plus=case.get("gamma_plus", base.gamma_plus),
            gamma_minus=case.get("gamma_minus", base.gamma_minus),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid rate case {case.get('name', '?')!r}: {exc}") from exc


def _ground_measures(cfg: ExperimentConfig, scheme: dynamics.LevelScheme):
    gen = dynamics.build_generator(scheme, cfg.n_atoms, include_phases=cfg.include_phases)
    rho0 = dynamics.symmetric_init(scheme, cfg.n_atoms, cfg.alpha, cfg.beta)
    series = dynamics.integrate(
        gen, rho0, cfg.require_t_end(), step=cfg.step, sample_dt=cfg.sample_dt
    )
    ground = dynamics.ground_sector_state(series.values[-1])
    embedded, f = entanglement.embed_occupation(ground)
    return ground, entanglement.negativity(embedded, f), entanglement.peres_min_eigenvalue(embedded, f)


def _cmd_entanglement(cfg: ExperimentConfig, preset, args, out: Path) -> int:
    section = cfg.sections.get("entanglement", {})
    mode = section.get("mode")
    outputs: list[str] = []

    if mode == "negativity_scan":
        n_values = [int(n) for n in section.get("n_values", [cfg.n_atoms])]
        grid = _alpha_grid(section)
        columns = {}
        maxima = []
        for n in n_values:
            vals = []
            for a2 in grid:
                alpha, beta = sqrt(a2), sqrt(1.0 - a2)
                state = photonic.v_final_state(n, alpha, beta)
                embedded, f = entanglement.embed_occupation(state.density_matrix())
                vals.append(entanglement.negativity(embedded, f))
            columns[n] = vals
            k = int(np.argmax(vals))
            maxima.append({"n_atoms": n, "max_negativity": vals[k], "argmax_alpha2": float(grid[k])})
        rows = ((a2, *[columns[n][i] for n in n_values]) for i, a2 in enumerate(grid))
        _write_csv(out / "negativity.csv", ("alpha2", *[f"N{n}" for n in n_values]), rows)
        _write_json(out / "negativity_max.json", maxima)
        outputs += ["negativity.csv", "negativity_max.json"]

    elif mode == "conditional_entropy":
        if cfg.scheme.kind is not SchemeKind.FLA:
            raise ConfigError("conditional_entropy mode needs an FLA model")
        grid = _alpha_grid(section)
        labels = photonic.FLA_MODE_LABELS
        rows = []
        for a2 in grid:
            alpha, beta = sqrt(a2), sqrt(1.0 - a2)
            embedded, f = _embedded_final(cfg, alpha, beta)
            rows.append(
                (a2, *[entanglement.conditional_entropy(embedded, f, m) for m in range(3)])
            )
        header = ("alpha2", *[f"S_given_{lab}" for lab in labels])
        _write_csv(out / "conditional_entropy.csv", header, rows)
        outputs.append("conditional_entropy.csv")

    elif mode == "ground_negativity":
        if cfg.scheme.kind is not SchemeKind.FLA:
            raise ConfigError("ground_negativity mode needs an FLA model")
        cases = section.get("cases") or [{}]
        results = []
        for case in cases:
            scheme = _scheme_with_rates(cfg, case)
            ground, neg, peres = _ground_measures(cfg, scheme)
            results.append(
                {
                    "name": case.get("name", "base"),
                    "gamma": [list(r) for r in scheme.gamma],
                    "gamma_plus": scheme.gamma_plus,
                    "gamma_minus": scheme.gamma_minus,
                    "negativity": neg,
                    "peres_min_eigenvalue": peres,
                    "ground_states": [list(s) for s in ground.basis.states],
                    "matrix": [[_complex_json(z) for z in row] for row in ground.data],
                }
            )
        _write_json(out / "ground_sector.json", results)
        outputs.append("ground_sector.json")

    elif mode == "peres_scan":
        if cfg.scheme.kind is not SchemeKind.FLA:
            raise ConfigError("peres_scan mode needs an FLA model")
        points = int(section.get("ratio_points", 11))
        ratios = np.linspace(0.0, 1.0, points)
        pm_ratios = [float(x) for x in section.get("gamma_pm_ratios", [1.0])]
        columns = []
        for pm in pm_ratios:
            col_neg, col_peres = [], []
            for r in ratios:
                case = {
                    "gamma": [[1.0, float(r)], [float(r), 1.0]],
                    "gamma_plus": pm,
                    "gamma_minus": pm,
                }
                scheme = _scheme_with_rates(cfg, case)
                _, neg, peres = _ground_measures(cfg, scheme)
                col_neg.append(neg)
                col_peres.append(peres)
            columns.append((pm, col_neg, col_peres))
        header = ["gamma12_over_gamma11"]
        for pm, _, _ in columns:
            header += [f"negativity_pm{_fmt(pm)}", f"peres_pm{_fmt(pm)}"]
        rows = []
        for i, r in enumerate(ratios):
            row = [r]
            for _, neg, peres in columns:
                row += [neg[i], peres[i]]
            rows.append(row)
        _write_csv(out / "peres_scan.csv", header, rows)
        outputs.append("peres_scan.csv")

    else:
        raise ConfigError(
            "[entanglement].mode must be one of negativity_scan, conditional_entropy, "
            f"ground_negativity, peres_scan; got {mode!r}"
        )

    _metadata(out, "entanglement", preset, cfg, args, outputs)
    return 0


def _wigner_state(cfg: ExperimentConfig, section: dict[str, Any]):
    source = section.get("source", "photonic")
    if source == "photonic":
        state = _final_photonic(cfg)
        rho = photonic.mixture_density_matrix(state)
        return state, rho
    if source == "atomic_ground":
        if cfg.scheme.kind is not SchemeKind.FLA:
            raise ConfigError("atomic_ground Wigner source needs an FLA model")
        series = _trajectory(cfg)
        ground = dynamics.ground_sector_state(series.values[-1])
        return ground, ground
    raise ConfigError(f"[wigner].source must be photonic or atomic_ground, got {source!r}")


def _cmd_wigner(cfg: ExperimentConfig, preset, args, out: Path) -> int:
    section = cfg.sections.get("wigner", {})
    grid = wigner.GridSpec(
        npoints=int(section.get("npoints", 81)),
        extent=float(section.get("extent", 3.0)),
    )
    state, rho = _wigner_state(cfg, section)
    outputs: list[str] = []
    summary: dict[str, Any] = {
        "modes": list(rho.basis.labels or ()),
        "origin_value": wigner.wigner_value(rho, wigner.PhasePoint.origin(rho.basis.levels)),
    }

    for pair in section.get("slices", []):
        first = parse_coordinate(pair[0])
        second = parse_coordinate(pair[1])
        cut = wigner.wigner_slice(rho, first, second, grid)
        name = f"slice_{pair[0]}_{pair[1]}.csv"
        rows = (
            (cut.x[i], cut.y[j], cut.values[i, j])
            for i in range(len(cut.x))
            for j in range(len(cut.y))
        )
        _write_csv(out / name, (pair[0], pair[1], "W"), rows)
        outputs.append(name)

    probes = []
    for pair in section.get("probes", []):
        modes = (int(pair[0]) - 1, int(pair[1]) - 1)
        result = wigner.separability_probe(
            state, modes, grid, tol=float(section.get("probe_tol", 1e-8))
        )
        probes.append(
            {
                "modes": [int(pair[0]), int(pair[1])],
                "verdict": result.verdict.value,
                "max_deviation": result.max_deviation,
                "component_deviations": list(result.component_deviations),
            }
        )
    if probes:
        summary["probes"] = probes
    if section.get("integral", False):
        summary["grid_integral"] = wigner.wigner_grid_integral(rho)
    _write_json(out / "wigner_summary.json", summary)
    outputs.append("wigner_summary.json")
    _metadata(out, "wigner", preset, cfg, args, outputs)
    return 0


def _default_observables(kind: SchemeKind) -> list[str]:
    if kind is SchemeKind.V_NONDEGENERATE:
        return ["I_w1", "I_w2"]
    if kind is SchemeKind.V_DEGENERATE:
        return ["I_total"]
    return ["I_w0", "I_wplus", "I_wminus"]


def _cmd_scaling(cfg: ExperimentConfig, preset, args, out: Path) -> int:
    section = cfg.sections.get("scaling", {})
    n_values = [int(n) for n in section.get("n_values", range(2, 9))]
    if sorted(set(n_values)) != n_values:
        raise ConfigError("[scaling].n_values must be strictly increasing")
    observables = section.get("observables", _default_observables(cfg.scheme.kind))

    def one(n: int):
        gen = dynamics.build_generator(cfg.scheme, n, include_phases=cfg.include_phases)
        rho0 = dynamics.symmetric_init(cfg.scheme, n, cfg.alpha, cfg.beta)
        series = dynamics.integrate(
            gen, rho0, cfg.require_t_end(), step=cfg.step, sample_dt=cfg.sample_dt
        )
        inten = dynamics.intensities(series, cfg.scheme)
        peaks = {}
        for label in observables:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                peaks[label] = dynamics.detect_peak(inten.column(label))
        return peaks

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(one, n_values))
    else:
        results = [one(n) for n in n_values]

    header = ["N"]
    for label in observables:
        header += [f"peak_{label}", f"tpeak_{label}"]
    rows = []
    for n, peaks in zip(n_values, results):
        row = [float(n)]
        for label in observables:
            t_peak, i_peak = peaks[label]
            row += [i_peak, t_peak]
        rows.append(row)
    _write_csv(out / "scaling.csv", header, rows)
    outputs = ["scaling.csv"]

    if section.get("fit", True) and len(n_values) >= 4:
        fits = []
        for label in observables:
            fit = fit_power_law(
                [(n, peaks[label][1]) for n, peaks in zip(n_values, results)]
            )
            fits.append(
                {
                    "observable": label,
                    "beta": fit.beta,
                    "alpha": fit.alpha,
                    "c": fit.c,
                    "residual_rms": fit.residual_rms,
                }
            )
        _write_json(out / "scaling_fits.json", fits)
        outputs.append("scaling_fits.json")

    _metadata(out, "scaling", preset, cfg, args, outputs)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "photonic": _cmd_photonic,
    "entanglement": _cmd_entanglement,
    "wigner": _cmd_wigner,
    "scaling": _cmd_scaling,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlsr",
        description="Collective emission from small multilevel-atom ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="TOML experiment configuration")
        p.add_argument("--preset", help="name of a shipped preset configuration")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, preset = _load(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, preset, args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"numerical invariant breach: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
