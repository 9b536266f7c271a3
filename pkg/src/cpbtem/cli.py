"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 I/O error,
3 a feasibility check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from cpbtem.config import ConfigError, RunConfig
from cpbtem.dose import heisenberg_bound_resolution, sql_resolution
from cpbtem.feasibility import feasibility_report
from cpbtem.fileio import FormatError, format_value, read_phasemap, write_csv, write_kv, write_phasemap, write_pgm
from cpbtem.imaging import (
    SPECIMEN_KINDS,
    ImageResult,
    dog_target,
    extract_high_res,
    gaussian_filter,
    plan_from_dose,
    simulate_baseline,
    simulate_proposed,
    synth_specimen,
)
from cpbtem.scaling import scaling_study

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_INFEASIBLE = 3

# command-line flag (argparse dest) -> configuration key
FLAG_KEYS = {
    "seed": "seed",
    "k": "protocol.k",
    "dose": "scan.dose",
    "step": "scan.step",
    "phasemap": "specimen.file",
    "specimen": "specimen.kind",
    "p_inelastic": "protocol.p_inelastic",
    "eta": "detector.eta",
    "e_mirror": "device.e_mirror",
    "e_j": "device.e_j",
    "delta_e": "device.delta_e",
    "temperature": "device.temperature",
    "ks": "scaling.k",
    "budget": "scaling.budget",
    "replicates": "scaling.replicates",
    "sigma_fine": "filter.sigma_fine",
    "sigma_coarse": "filter.sigma_coarse",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    p.add_argument("--config", default=d(None), help="key-value configuration file")
    p.add_argument("--seed", type=int, default=d(None), help="64-bit run seed")
    p.add_argument("--out", default=d("out"), help="output directory (default: out)")
    p.add_argument("--analytic", action="store_true", default=d(False), help="noise-free expected images")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads (outputs do not depend on it)")
    p.add_argument("--set", dest="overrides", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override one configuration key; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cpbtem", description="Entanglement-enhanced TEM simulator with a Cooper-pair-box probe.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _add_common(p, suppress=True)
        return p

    def add_specimen(p):
        p.add_argument("--phasemap", help="specimen phase map file")
        p.add_argument("--specimen", choices=SPECIMEN_KINDS, help="synthetic specimen kind")
        p.add_argument("--dose", type=float, help="electrons per nm^2")

    p = add("simulate", "Monte-Carlo image of the CPB method plus the DoG target map")
    add_specimen(p)
    p.add_argument("--k", type=int, help="electrons per CPB measurement")
    p.add_argument("--step", type=float, help="scan step in nm (0: one position per map pixel)")
    p.add_argument("--p-inelastic", type=float)
    p.add_argument("--eta", type=float, help="detector similarity violation")

    p = add("baseline", "shot-noise limited in-focus phase-contrast image and its DoG extraction")
    add_specimen(p)

    p = add("feasibility", "device feasibility report; exit 3 if any check fails")
    p.add_argument("--e-mirror", type=float, help="mirror field, V/m")
    p.add_argument("--e-j", type=float, help="Josephson energy, eV")
    p.add_argument("--delta-e", type=float, help="beam energy spread, eV")
    p.add_argument("--temperature", type=float, help="K")
    p.add_argument("--k", type=int, dest="device_k")

    p = add("scaling", "estimator spread versus k at a fixed electron budget")
    p.add_argument("--k", dest="ks", metavar="K1,K2,...", help="comma-separated k values")
    p.add_argument("--budget", type=int, help="electrons per estimate")
    p.add_argument("--replicates", type=int)

    p = add("filter", "Gaussian or difference-of-Gaussians filtering of a phase map file")
    p.add_argument("input", help="input phase map file")
    p.add_argument("--sigma", type=float, help="single Gaussian width in nm (default: DoG)")
    p.add_argument("--sigma-fine", type=float)
    p.add_argument("--sigma-coarse", type=float)
    return parser


def resolve_config(args) -> RunConfig:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value if not isinstance(value, (int, float)) else str(value)
    if getattr(args, "device_k", None) is not None:
        overrides["device.k"] = str(args.device_k)
    return RunConfig.load(args.config, overrides)


def _specimen(cfg: RunConfig):
    path = cfg["specimen.file"]
    if path:
        return read_phasemap(path)
    s = cfg.section("specimen")
    try:
        return synth_specimen(
            s["kind"], seed=cfg["seed"], width=s["width"], height=s["height"], pixel_size=s["pixel_size"],
            amplitude=s["amplitude"], radius=s["radius"], count=s["count"], period=s["period"],
            envelope_radius=s["envelope_radius"], n_blobs=s["n_blobs"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _display(values: np.ndarray, pixel_size: float, sigma: float) -> np.ndarray:
    """Smoothed copy for viewing; lost pixels are filled with the image mean first."""
    if not sigma > 0:
        return values
    finite = values[np.isfinite(values)]
    fill = float(finite.mean()) if finite.size else 0.0
    img = ImageResult(np.nan_to_num(values, nan=fill), "cpb_frequency", pixel_size)
    return gaussian_filter(img, sigma).values


def _write_image(out: Path, name: str, values, pixel_size: float, display_sigma: float = 0.0) -> None:
    write_csv(out / f"{name}.csv", values)
    write_pgm(out / f"{name}.pgm", _display(np.asarray(values, float), pixel_size, display_sigma))


def _write_config(out: Path, cfg: RunConfig, command: str) -> None:
    (out / "config.txt").write_text(f"# cpbtem {command}\n" + "\n".join(cfg.echo()) + "\n")


def _scan(cfg: RunConfig, spec):
    step = cfg["scan.step"] or None
    try:
        return plan_from_dose(spec, cfg["scan.dose"], cfg["protocol.k"], step)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    spec = _specimen(cfg)
    protocol, beam, det = cfg.protocol(), cfg.beam(), cfg.detector()
    plan = _scan(cfg, spec)
    img, meta = simulate_proposed(spec, beam, plan, protocol, det, seed=cfg["seed"],
                                  analytic=args.analytic, threads=args.threads)
    target = dog_target(spec, cfg["filter.sigma_fine"], cfg["filter.sigma_coarse"])
    write_phasemap(out / "specimen.phasemap", spec)
    _write_image(out, "proposed", img.values, img.pixel_size, cfg["output.display_sigma"])
    _write_image(out, "target", target.values, target.pixel_size)
    items = [("command", "simulate", ""), ("seed", cfg["seed"], ""), ("dose", cfg["scan.dose"], "e/nm^2")]
    items += [(k, v, "") for k, v in meta.items()]
    write_kv(out / "metadata.txt", items)
    _write_config(out, cfg, "simulate")
    print(f"simulate: {meta['scan_positions']} positions, {meta['cpb_measurements_total']} CPB measurements, "
          f"{meta['electrons_total']} electrons -> {out}")
    return EXIT_OK


def cmd_baseline(cfg: RunConfig, out: Path, args) -> int:
    spec = _specimen(cfg)
    try:
        img = simulate_baseline(spec, cfg["scan.dose"], seed=cfg["seed"], analytic=args.analytic)
        high = extract_high_res(img, cfg["filter.sigma_fine"], cfg["filter.sigma_coarse"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_phasemap(out / "specimen.phasemap", spec)
    _write_image(out, "baseline", img.values, img.pixel_size)
    _write_image(out, "highres", high.values, high.pixel_size)
    write_kv(out / "metadata.txt", [
        ("command", "baseline", ""),
        ("seed", cfg["seed"], ""),
        ("dose", cfg["scan.dose"], "e/nm^2"),
        ("pixels", img.values.size, ""),
        ("electrons_per_pixel_mean", float(img.values.mean()), ""),
        ("electrons_total", float(img.values.sum()), ""),
        ("analytic", bool(args.analytic), ""),
    ])
    _write_config(out, cfg, "baseline")
    print(f"baseline: {img.values.size} pixels, {img.values.sum():.0f} electrons -> {out}")
    return EXIT_OK


def cmd_feasibility(cfg: RunConfig, out: Path, args) -> int:
    report = feasibility_report(cfg.device())
    report.write(out / "feasibility.txt")
    _write_config(out, cfg, "feasibility")
    sys.stdout.write(report.to_text())
    if not report.ok:
        failed = ", ".join(n for n, ok in report.flags.items() if not ok)
        print(f"feasibility: failed checks: {failed}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_scaling(cfg: RunConfig, out: Path, args) -> int:
    constants = cfg.constants()
    try:
        result = scaling_study(cfg["scaling.k"], cfg["scaling.budget"], cfg["scaling.replicates"], cfg.detector(),
                               delta_theta=cfg["scaling.delta_theta"], seed=cfg["seed"], base=cfg.protocol(),
                               constants=constants, threads=args.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    header = "k,measurements,mean,std,predicted_std,resolution_nm\n"
    body = "".join(
        ",".join(format_value(v) for v in (r.k, r.measurements, r.mean, r.std, r.predicted_std, r.resolution_nm)) + "\n"
        for r in result.rows
    )
    (out / "scaling.csv").write_text(header + body)
    length, k_required = heisenberg_bound_resolution(constants)
    write_kv(out / "summary.txt", [
        ("seed", cfg["seed"], ""),
        ("budget", cfg["scaling.budget"], ""),
        ("replicates", cfg["scaling.replicates"], ""),
        ("delta_theta", cfg["scaling.delta_theta"], "rad"),
        ("slope", result.slope, ""),
        ("intercept", result.intercept, ""),
        ("sql_resolution", sql_resolution(constants), "nm"),
        ("heisenberg_resolution", length, "nm"),
        ("heisenberg_k_required", k_required, ""),
    ])
    _write_config(out, cfg, "scaling")
    sys.stdout.write(header + body)
    print(f"slope = {format_value(result.slope)}")
    return EXIT_OK


def cmd_filter(cfg: RunConfig, out: Path, args) -> int:
    spec = read_phasemap(args.input)
    try:
        if args.sigma is not None:
            values = gaussian_filter(spec, args.sigma).theta
        else:
            values = dog_target(spec, cfg["filter.sigma_fine"], cfg["filter.sigma_coarse"]).values
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    filtered = type(spec)(values, spec.pixel_size)
    write_phasemap(out / "filtered.phasemap", filtered)
    _write_image(out, "filtered", values, spec.pixel_size)
    _write_config(out, cfg, "filter")
    print(f"filter: {spec.width}x{spec.height} -> {out}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "baseline": cmd_baseline,
    "feasibility": cmd_feasibility,
    "scaling": cmd_scaling,
    "filter": cmd_filter,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = resolve_config(args)
    except FormatError as exc:
        print(f"cpbtem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cpbtem: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ConfigError) as exc:
        print(f"cpbtem: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"cpbtem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        print(f"cpbtem: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
