"""Command-line front end.

Subcommands: scan-eta, scan-resolution, simulate, feasibility.
Exit codes: 0 success, 1 validation error, 2 assumption-check failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import sys

import numpy as np

from . import feasibility as feas
from . import scattering as sc
from .collapse import CollapseModel, collapse_probability
from .config import SCHEMA, ConfigError, RunConfig, load_config
from .constants import constants, hz_to_omega, mass_from_particles, nm_to_m
from .experiment import (
    ExperimentPlan,
    PulseAssumptionError,
    aggregate,
    check_pulse_assumptions,
    simulate,
    write_csv,
)
from .interferometer import InterferometerConfig, PhotonProbe
from .oscillator import FoilOscillator
from .scattering import ScatterCoupling

EXIT_OK, EXIT_VALIDATION, EXIT_ASSUMPTION, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- builders: RunConfig -> domain objects -------------------------------------------


def _build(cfg: RunConfig, section: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise cfg.error(section, _blamed_key(section, str(exc)), str(exc)) from None


def _blamed_key(section: str, message: str):
    """Config key whose field name opens ``message`` ("trials must be ..." -> trials)."""
    words = message.split()
    if not words:
        return None
    first = words[0]
    for key in sorted(SCHEMA.get(section, ())):
        if key == first or key.startswith(first + "_"):
            return key
    return None


def build_photon(cfg: RunConfig, default_nm: float | None = None) -> PhotonProbe:
    nm = cfg.get("photon", "wavelength_nm")
    metres = cfg.get("photon", "wavelength_m")
    if nm is not None and metres is not None:
        raise cfg.error("photon", "wavelength_m", "give either wavelength_nm or wavelength_m")
    if metres is None:
        if nm is None:
            if default_nm is None:
                raise cfg.error("photon", None, "missing wavelength_nm")
            nm = default_nm
        metres = nm_to_m(nm)
    return _build(cfg, "photon", PhotonProbe, metres)


def build_foil(cfg: RunConfig, default_particles=None, default_hz=None) -> FoilOscillator:
    particles = cfg.get("foil", "particles")
    mass = cfg.get("foil", "mass_kg")
    if particles is not None and mass is not None:
        raise cfg.error("foil", "mass_kg", "give either particles or mass_kg")
    if mass is None:
        particles = default_particles if particles is None else particles
        if particles is None:
            raise cfg.error("foil", None, "missing particles or mass_kg")
        mass = mass_from_particles(particles)
    hz = cfg.get("foil", "frequency_hz")
    omega = cfg.get("foil", "omega_rad_s")
    if hz is not None and omega is not None:
        raise cfg.error("foil", "omega_rad_s", "give either frequency_hz or omega_rad_s")
    if omega is None:
        hz = default_hz if hz is None else hz
        if hz is None:
            raise cfg.error("foil", None, "missing frequency_hz or omega_rad_s")
        omega = hz_to_omega(hz)
    return _build(cfg, "foil", FoilOscillator, mass, omega)


def build_plan(cfg: RunConfig, seed: int) -> ExperimentPlan:
    photon = build_photon(cfg)
    foil = build_foil(cfg)
    topology = cfg.get("interferometer", "topology", str, "open_loop")
    config = _build(cfg, "interferometer", InterferometerConfig, topology, photon)
    model = _build(
        cfg, "collapse", CollapseModel,
        cfg.get("collapse", "variant", str, "none"),
        cfg.get("collapse", "per_particle_rate", float, 1e-15),
        cfg.get("collapse", "exponent", float, 1.0),
    )
    if model.variant.value == "none":
        model = CollapseModel.none()
    coupling = _build(cfg, "coupling", ScatterCoupling, cfg.get("coupling", "efficiency", float, 1.0))
    return _build(
        cfg, "experiment", ExperimentPlan, config, foil, model, coupling,
        photons_per_pulse=cfg.get("experiment", "photons_per_pulse", int, 1),
        observation_window=cfg.get("experiment", "observation_window_s", float, 1.0),
        trials=cfg.get("experiment", "trials", int, 1000),
        master_seed=seed,
        pulse_duration=cfg.get("experiment", "pulse_duration_s", float, 0.0),
        anomaly_threshold=cfg.get("experiment", "anomaly_threshold", int, 2),
        n_max=cfg.get("experiment", "n_max", int, 200),
    )


def build_mirror(cfg: RunConfig):
    if not cfg.has_section("mirror"):
        raise ConfigError("feasibility needs a [mirror] section (or --preset) with thickness_m and lateral_size_m")
    preset = cfg.get("mirror", "preset", str)
    if preset is not None and preset not in feas.MATERIAL_PRESETS:
        raise cfg.error("mirror", "preset", f"unknown preset; choose from {sorted(feas.MATERIAL_PRESETS)}")
    base = feas.MATERIAL_PRESETS.get(preset)
    fields = {
        "refractive_index": "refractive_index",
        "extinction_coefficient": "extinction_coefficient",
        "youngs_modulus": "youngs_modulus_pa",
        "density": "density_kg_m3",
        "poisson_ratio": "poisson_ratio",
        "atomic_volume": "atomic_volume_m3",
    }
    kwargs = {}
    for attr, key in fields.items():
        value = cfg.get("mirror", key, float, getattr(base, attr, None))
        if value is None:
            raise cfg.error("mirror", key, "missing (no preset given)")
        kwargs[attr] = value
    material = _build(cfg, "mirror", feas.MirrorMaterial, **kwargs)
    geometry = _build(
        cfg, "mirror", feas.MirrorGeometry,
        cfg.get("mirror", "thickness_m", float, required=True),
        cfg.get("mirror", "lateral_size_m", float, required=True),
        cfg.get("mirror", "shape", str, "rectangular_clamped"),
    )
    default_nm = feas.WAVELENGTH_PRESETS[preset] / 1e-9 if preset else None
    return material, geometry, default_nm


# --- helpers ---------------------------------------------------------------------------


def _header(command: str, cfg: RunConfig, seed: int) -> str:
    return f"symprobe {command}\nconfig_sha256={cfg.digest(command)}\nseed={seed}"


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _write_rows(path, header, columns, rows):
    with _output(path) as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def _grid(lo, hi, steps, spacing):
    if spacing == "log":
        return np.geomspace(lo, hi, steps)
    if spacing == "linear":
        return np.linspace(lo, hi, steps)
    raise ValueError(f"spacing must be 'log' or 'linear', got {spacing!r}")


# --- commands --------------------------------------------------------------------------


def eta_scan_rows(eta):
    eta = np.asarray(eta, dtype=float)
    cols = (
        eta,
        sc.r_bound(eta),
        sc.r_qualitative(eta),
        sc.debye_waller(eta),
        sc.p_odd_exact(eta),
        sc.d2_fraction_localized(eta),
    )
    return [tuple(repr(float(c[i])) for c in cols) for i in range(len(eta))]


ETA_COLUMNS = ("eta", "r_bound", "r_qualitative", "p00", "p_odd_exact", "d2_fraction_localized")
RESOLUTION_COLUMNS = ("particles", "wavelength_nm", "mass_kg", "omega_max_rad_s", "m_omega_max", "energy_resolution")


def cmd_scan_eta(cfg: RunConfig, seed: int, out):
    lo = cfg.get("scan_eta", "eta_min", float, 0.01)
    hi = cfg.get("scan_eta", "eta_max", float, 3.0)
    steps = cfg.get("scan_eta", "steps", int, 200)
    spacing = cfg.get("scan_eta", "spacing", str, "log")
    if not 0 < lo < hi:
        raise cfg.error("scan_eta", "eta_min", "need 0 < eta_min < eta_max")
    if steps < 2:
        raise cfg.error("scan_eta", "steps", "need at least 2 steps")
    try:
        eta = _grid(lo, hi, steps, spacing)
    except ValueError as exc:
        raise cfg.error("scan_eta", "spacing", str(exc)) from None
    _write_rows(out, _header("scan-eta", cfg, seed), ETA_COLUMNS, eta_scan_rows(eta))
    return EXIT_OK


def resolution_scan_rows(particles, wavelengths_nm, margin):
    """One row per (particle count, wavelength) with the largest omega allowed at ``margin``."""
    rows = []
    for nm in wavelengths_nm:
        photon = PhotonProbe(nm_to_m(nm))
        for n in particles:
            mass = mass_from_particles(float(n))
            w = feas.max_omega_high_resolution(mass, photon.wavelength, margin)
            res = constants().hbar * w / photon.energy
            rows.append(tuple(repr(float(v)) for v in (n, nm, mass, w, mass * w, res)))
    return rows


def cmd_scan_resolution(cfg: RunConfig, seed: int, out):
    lo = cfg.get("scan_resolution", "particles_min", float, 1e6)
    hi = cfg.get("scan_resolution", "particles_max", float, 1e18)
    steps = cfg.get("scan_resolution", "steps", int, 61)
    margin = cfg.get("scan_resolution", "margin", float, feas.DEFAULT_MARGIN)
    text = cfg.get("scan_resolution", "wavelengths_nm", str, "0.1,1000")
    if not 1 <= lo < hi:
        raise cfg.error("scan_resolution", "particles_min", "need 1 <= particles_min < particles_max")
    if steps < 2:
        raise cfg.error("scan_resolution", "steps", "need at least 2 steps")
    if margin < 1:
        raise cfg.error("scan_resolution", "margin", "margin must be >= 1")
    try:
        wavelengths = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise cfg.error("scan_resolution", "wavelengths_nm", "expected comma-separated numbers") from None
    if not wavelengths or any(not 0.1 <= w <= 1000 for w in wavelengths):
        raise cfg.error("scan_resolution", "wavelengths_nm", "wavelengths must lie in 0.1-1000 nm")
    rows = resolution_scan_rows(np.geomspace(lo, hi, steps), wavelengths, margin)
    _write_rows(out, _header("scan-resolution", cfg, seed), RESOLUTION_COLUMNS, rows)
    return EXIT_OK


def _summary(plan: ExperimentPlan, batch, report) -> str:
    tally = aggregate(batch)
    p_collapse = collapse_probability(plan.collapse_rate, plan.observation_window)
    lines = [
        f"trials: {plan.trials}",
        f"photons_per_pulse: {plan.photons_per_pulse}",
        f"eta: {plan.eta:.6g}",
        f"ground_width_m: {plan.foil.width(0):.6g}",
        f"collapse_rate_per_s: {plan.collapse_rate:.6g}",
        f"expected_collapses: {plan.trials * p_collapse:.6g}",
        f"observed_collapses: {tally.collapsed_trials}",
        f"d1: {tally.d1}",
        f"d2: {tally.d2}",
        f"d2_fraction: {tally.d2_fraction:.6g} +/- {tally.d2_stderr:.3g}",
        f"expected_coherent_d2_fraction: {sc.p_odd_exact(plan.eta):.6g}",
        f"expected_localized_d2_fraction: {sc.d2_fraction_localized(plan.eta):.6g}",
        f"coherent_d1/d2: {tally.coherent_d1}/{tally.coherent_d2}",
        f"collapsed_d1/d2: {tally.collapsed_d1}/{tally.collapsed_d2}",
        f"unscattered: {tally.unscattered}",
    ]
    if plan.photons_per_pulse > 1:
        quiet = plan.trials - tally.collapsed_trials
        rate = tally.false_alarms / quiet if quiet else 0.0
        lines += [
            f"anomaly_threshold: {plan.anomaly_threshold}",
            f"anomalous_pulses: {tally.anomalous_pulses}",
            f"false_alarms: {tally.false_alarms}",
            f"false_alarm_rate: {rate:.6g}",
        ]
    lines.append(report.format())
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig, seed: int, out, workers: int, force: bool):
    for section in ("photon", "foil"):
        if not cfg.has_section(section):
            raise ConfigError(f"simulate needs a [{section}] section")
    plan = build_plan(cfg, seed)
    report = check_pulse_assumptions(plan)
    print(report.format(), file=sys.stderr)
    if plan.photons_per_pulse > 1 and report.status == "fail" and not force:
        raise PulseAssumptionError("pulse assumptions failed; rerun with --force to override")
    batch = simulate(plan, workers=workers, force=force)
    summary = _summary(plan, batch, report)
    header = _header("simulate", cfg, seed)
    if out not in (None, "-"):
        with _output(out) as fh:
            write_csv(batch, fh, comment=header)
        with _output(_summary_path(out)) as fh:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
            fh.write(summary)
    sys.stdout.write(summary)
    return EXIT_OK


def _summary_path(out: str) -> str:
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".summary.txt"


def cmd_feasibility(cfg: RunConfig, seed: int, out):
    material, geometry, default_nm = build_mirror(cfg)
    photon = build_photon(cfg, default_nm)
    foil = build_foil(cfg, default_particles=1e15, default_hz=10.0)
    margin = cfg.get("mirror", "margin", float, feas.DEFAULT_MARGIN)
    surrounding = cfg.get("mirror", "surrounding_index", complex, 1.0)
    rows = _build(cfg, "mirror", feas.feasibility_report, material, geometry, photon, foil,
                  surrounding_index=surrounding, margin=margin)
    header = _header("feasibility", cfg, seed)
    sys.stdout.write(feas.format_report(rows) + "\n")
    if out not in (None, "-"):
        with _output(out) as fh:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
            fh.write(feas.report_csv(rows))
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    common.add_argument("--out", help="output path ('-' or absent: stdout)")
    common.add_argument("--workers", type=int, help="worker processes for simulate")
    common.add_argument("--force", action="store_true", help="run despite failed pulse assumptions")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration value (repeatable)")

    parser = _Parser(prog="symprobe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan-eta", parents=[common], help="R_bound and probabilities versus eta")
    p.add_argument("--eta-min", dest="scan_eta.eta_min")
    p.add_argument("--eta-max", dest="scan_eta.eta_max")
    p.add_argument("--steps", dest="scan_eta.steps")
    p.add_argument("--spacing", dest="scan_eta.spacing", choices=("log", "linear"))

    p = sub.add_parser("scan-resolution", parents=[common], help="required energy resolution versus foil size")
    p.add_argument("--particles-min", dest="scan_resolution.particles_min")
    p.add_argument("--particles-max", dest="scan_resolution.particles_max")
    p.add_argument("--steps", dest="scan_resolution.steps")
    p.add_argument("--wavelengths", dest="scan_resolution.wavelengths_nm", help="comma-separated, nm")
    p.add_argument("--margin", dest="scan_resolution.margin")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo run of experiment a or b")
    p.add_argument("--trials", dest="experiment.trials")

    p = sub.add_parser("feasibility", parents=[common], help="mirror design report")
    p.add_argument("--preset", dest="mirror.preset", choices=sorted(feas.MATERIAL_PRESETS))
    return parser


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config) if args.config else RunConfig()
        overrides = [f"{k}={v}" for k, v in vars(args).items() if "." in k and v is not None]
        cfg.override(overrides + args.set)
        if args.seed is not None:
            cfg.override([f"run.seed={args.seed}"])
        seed = cfg.get("run", "seed", int, 0)
        out = args.out if args.out is not None else cfg.get("run", "out", str)
        workers = args.workers if args.workers is not None else cfg.get("run", "workers", int, 1)
        force = args.force or cfg.get("run", "force", bool, False)
        if args.command == "scan-eta":
            return cmd_scan_eta(cfg, seed, out)
        if args.command == "scan-resolution":
            return cmd_scan_resolution(cfg, seed, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, seed, out, workers, force)
        return cmd_feasibility(cfg, seed, out)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PulseAssumptionError as exc:
        print(f"assumption check failed: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except OSError as exc:
        name = getattr(exc, "filename", None) or ""
        print(f"I/O error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
