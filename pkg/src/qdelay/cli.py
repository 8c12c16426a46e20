"""Command-line front end: ``qdelay scan | verify | montecarlo | chip``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, bell, counting, photonic, verify
from . import delayed_choice as dc

OUTPUT_DIR_ENV = "QDELAY_OUTPUT_DIR"
MODES = ("intensity", "chsh", "chsh-photonic")
FORMATS = ("csv", "json")
PHOTONIC_TOL = 1e-8

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_TOLERANCE = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    mode: str = "intensity"
    alpha_min: float = dc.ALPHA_RANGE[0]
    alpha_max: float = dc.ALPHA_RANGE[1]
    alpha_steps: int = dc.DEFAULT_STEPS
    phi_min: float = dc.PHI_RANGE[0]
    phi_max: float = dc.PHI_RANGE[1]
    phi_steps: int = dc.DEFAULT_STEPS
    output: Path | None = None
    format: str = "csv"

    def validate(self) -> "ScanConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.alpha_steps < 2 or self.phi_steps < 2:
            raise ConfigError("steps must be at least 2")
        bounds = (self.alpha_min, self.alpha_max, self.phi_min, self.phi_max)
        if not all(np.isfinite(bounds)):
            raise ConfigError("grid bounds must be finite")
        if self.alpha_min > self.alpha_max or self.phi_min > self.phi_max:
            raise ConfigError("grid minimum exceeds maximum")
        if self.alpha_min < dc.ALPHA_RANGE[0] or self.alpha_max > dc.ALPHA_RANGE[1] + 1e-12:
            raise ConfigError("alpha must lie in [0, pi/2]")
        return self

    def axes(self):
        return (
            np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps),
            np.linspace(self.phi_min, self.phi_max, self.phi_steps),
        )

    def target(self) -> Path:
        if self.output is not None:
            return Path(self.output)
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        return base / f"scan_{self.mode}.{self.format}"


class ToleranceFailure(RuntimeError):
    pass


def compute_grid(cfg: ScanConfig) -> np.ndarray:
    alpha, phi = cfg.axes()
    if cfg.mode == "intensity":
        try:
            return dc.intensity_surface(alpha, phi).i0
        except dc.RouteMismatch as exc:
            raise ToleranceFailure(str(exc)) from exc
    logical = bell.chsh_surface(alpha, phi).s
    if cfg.mode == "chsh":
        return logical
    chip = photonic.photonic_chsh_surface(alpha, phi)
    err = float(np.max(np.abs(chip - logical)))
    if err > PHOTONIC_TOL:
        raise ToleranceFailure(f"photonic and logical CHSH surfaces differ by {err:.3e}")
    return chip


def _header(cfg: ScanConfig) -> dict:
    return {
        "mode": cfg.mode,
        "version": __version__,
        "alpha": [cfg.alpha_min, cfg.alpha_max, cfg.alpha_steps],
        "phi": [cfg.phi_min, cfg.phi_max, cfg.phi_steps],
    }


def format_grid(cfg: ScanConfig, values: np.ndarray) -> str:
    alpha, phi = cfg.axes()
    rows = [(float(a), float(f), float(values[i, j])) for i, a in enumerate(alpha) for j, f in enumerate(phi)]
    meta = _header(cfg)
    if cfg.format == "json":
        doc = {**meta, "columns": ["alpha", "phi", "value"], "rows": [list(r) for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    lines = [
        f"# mode={meta['mode']}",
        "# alpha={!r}:{!r}:{}".format(*meta["alpha"]),
        "# phi={!r}:{!r}:{}".format(*meta["phi"]),
        f"# version={meta['version']}",
        "alpha,phi,value",
    ]
    lines += [f"{a!r},{f!r},{v!r}" for a, f, v in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Grid:
    config: ScanConfig
    alpha: np.ndarray
    phi: np.ndarray
    values: np.ndarray


def _axis_spec(text: str):
    lo, hi, n = text.split(":")
    return float(lo), float(hi), int(n)


def parse_grid(text: str, fmt: str = "csv") -> Grid:
    """Inverse of :func:`format_grid`."""
    if fmt == "json":
        doc = json.loads(text)
        meta, rows = doc, np.array(doc["rows"], dtype=float)
        a_spec, f_spec = doc["alpha"], doc["phi"]
    else:
        meta = {}
        data = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line and not line.startswith("alpha,"):
                data.append([float(x) for x in line.split(",")])
        rows = np.array(data, dtype=float)
        a_spec, f_spec = _axis_spec(meta["alpha"]), _axis_spec(meta["phi"])
    cfg = ScanConfig(
        mode=meta["mode"],
        alpha_min=float(a_spec[0]), alpha_max=float(a_spec[1]), alpha_steps=int(a_spec[2]),
        phi_min=float(f_spec[0]), phi_max=float(f_spec[1]), phi_steps=int(f_spec[2]),
        format=fmt,
    )
    shape = (cfg.alpha_steps, cfg.phi_steps)
    return Grid(cfg, rows[:, 0].reshape(shape)[:, 0], rows[:, 1].reshape(shape)[0], rows[:, 2].reshape(shape))


def read_grid(path) -> Grid:
    path = Path(path)
    fmt = "json" if path.suffix == ".json" else "csv"
    return parse_grid(path.read_text(), fmt)


def run_scan(cfg: ScanConfig) -> Path:
    cfg.validate()
    text = format_grid(cfg, compute_grid(cfg))
    target = cfg.target()
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    return target


# --- subcommand handlers --------------------------------------------------


def _cmd_scan(args) -> int:
    cfg = ScanConfig(
        mode=args.mode,
        alpha_min=args.alpha_min, alpha_max=args.alpha_max, alpha_steps=args.alpha_steps,
        phi_min=args.phi_min, phi_max=args.phi_max, phi_steps=args.phi_steps,
        output=Path(args.output) if args.output else None,
        format=args.format,
    )
    try:
        path = run_scan(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    print(f"wrote {cfg.alpha_steps}x{cfg.phi_steps} {cfg.mode} grid to {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = verify.run_all(w_phase_error=args.inject_w_phase_error)
    if args.json:
        print(json.dumps({"checks": [r.to_dict() for r in results],
                          "passed": all(r.passed for r in results)}, indent=2))
    else:
        for r in results:
            print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"first failing check: {failed[0].name}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    if not 0.0 <= args.visibility <= 1.0:
        print("error: visibility must be in [0, 1]", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if args.shots < 1 or args.repetitions < 1:
        print("error: shots and repetitions must be at least 1", file=sys.stderr)
        return EXIT_BAD_CONFIG

    params = dc.ExperimentParams(args.alpha, args.phi)
    rho = counting.NoiseModel(args.visibility).apply(dc.global_state(params))
    probs = counting.setting_probabilities(rho)
    run = counting.run_repetitions(probs, args.shots, args.repetitions, args.seed)
    if args.counts_out:
        first = counting.sample_counts(probs, args.shots, counting.repetition_seed(args.seed, 0))
        Path(args.counts_out).write_text(first.to_csv())

    summary = {
        "visibility": args.visibility,
        "shots_per_setting": args.shots,
        "repetitions": args.repetitions,
        "seed": args.seed,
        "expected_s": counting.chsh_from_probabilities(probs),
        "mean_s": run.mean,
        "std_s": run.std,
        "mean_stderr": float(np.mean(run.stderr)),
        "violation_fraction": run.violation_fraction,
        "violation": bool(run.mean > 2.0),
    }
    if args.json:
        summary["repetition_s"] = run.s.tolist()
        print(json.dumps(summary, indent=2))
        return EXIT_OK
    if not args.quiet:
        for k, e in enumerate(run.estimates):
            print(f"rep {k:5d}: S = {e.s:.4f} +/- {e.stderr:.4f}")
    print(f"mean S = {run.mean:.4f}, std = {run.std:.4f}, mean stderr = {summary['mean_stderr']:.4f}")
    print(f"repetitions with S > 2: {100 * run.violation_fraction:.1f}%")
    print("CHSH violation: " + ("yes" if summary["violation"] else "no"))
    return EXIT_OK


def _cmd_chip_dump(args) -> int:
    try:
        net = photonic.build_chip(dc.ExperimentParams(args.alpha, args.phi), args.alice, args.bob)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    text = net.to_json() + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_chip_load(args) -> int:
    try:
        net = photonic.ModeNetwork.load(args.file)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    u = photonic.transfer_matrix(net)
    unit_err = float(np.max(np.abs(u.conj().T @ u - np.eye(net.n_modes))))
    n_coupler = sum(isinstance(e, photonic.Coupler) for e in net.elements)
    print(f"modes: {net.n_modes}, couplers: {n_coupler}, phase shifters: {len(net.elements) - n_coupler}")
    print(f"transfer matrix unitarity error: {unit_err:.2e}")
    if net.n_modes >= photonic.CHIP_MAP.n_modes:
        try:
            psi, success = photonic.run_chip(net)
        except photonic.PostSelectionError as exc:
            print(f"post-selection failed: {exc}", file=sys.stderr)
            return EXIT_TOLERANCE
        probs = np.abs(psi) ** 2
        print(f"coincidence success probability: {success:.6f}")
        for label, p in zip(("00", "01", "10", "11"), probs):
            print(f"  P(system, ancilla = {label[0]}, {label[1]}) = {p:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdelay", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="intensity or CHSH grid over (alpha, phi)")
    scan.add_argument("--mode", choices=MODES, default="intensity")
    scan.add_argument("--alpha-min", type=float, default=dc.ALPHA_RANGE[0])
    scan.add_argument("--alpha-max", type=float, default=dc.ALPHA_RANGE[1])
    scan.add_argument("--alpha-steps", type=int, default=dc.DEFAULT_STEPS)
    scan.add_argument("--phi-min", type=float, default=dc.PHI_RANGE[0])
    scan.add_argument("--phi-max", type=float, default=dc.PHI_RANGE[1])
    scan.add_argument("--phi-steps", type=int, default=dc.DEFAULT_STEPS)
    scan.add_argument("-o", "--output", help=f"output file (default: ${OUTPUT_DIR_ENV}/scan_<mode>.<format>)")
    scan.add_argument("--format", choices=FORMATS, default="csv")
    scan.set_defaults(func=_cmd_scan)

    ver = sub.add_parser("verify", help="run the invariant checks")
    ver.add_argument("--json", action="store_true")
    ver.add_argument("--inject-w-phase-error", type=float, default=0.0, metavar="RAD",
                     help="fault injection: offset both W-interferometer heaters")
    ver.set_defaults(func=_cmd_verify)

    mc = sub.add_parser("montecarlo", help="finite-count CHSH estimates under white noise")
    mc.add_argument("--visibility", type=float, default=counting.visibility_for(verify.REPORTED_S))
    mc.add_argument("--shots", type=int, default=2800, help="coincidences per setting pair")
    mc.add_argument("--repetitions", type=int, default=1000)
    mc.add_argument("--seed", type=int, default=7)
    mc.add_argument("--alpha", type=float, default=np.pi / 4)
    mc.add_argument("--phi", type=float, default=np.pi / 2)
    mc.add_argument("--counts-out", help="write the first repetition's count table as CSV")
    mc.add_argument("--quiet", action="store_true", help="only print the aggregate")
    mc.add_argument("--json", action="store_true")
    mc.set_defaults(func=_cmd_montecarlo)

    chip = sub.add_parser("chip", help="photonic chip description")
    chip_sub = chip.add_subparsers(dest="chip_command", required=True)
    dump = chip_sub.add_parser("dump", help="emit the chip network as JSON")
    dump.add_argument("--alpha", type=float, default=np.pi / 4)
    dump.add_argument("--phi", type=float, default=np.pi / 2)
    dump.add_argument("--alice", choices=sorted(photonic.ALICE_HEATERS))
    dump.add_argument("--bob", choices=sorted(photonic.BOB_HEATERS))
    dump.add_argument("-o", "--output")
    dump.set_defaults(func=_cmd_chip_dump)
    load = chip_sub.add_parser("load", help="load a network JSON and evaluate it")
    load.add_argument("file")
    load.set_defaults(func=_cmd_chip_load)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
