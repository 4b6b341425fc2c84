"""Command-line entry point: ``ifprep <command> [--config FILE] [--out DIR] [--seed N]``.

Exit codes: 0 ok, 2 configuration or usage error, 3 degenerate selection,
4 numerical-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import secrets
import sys
import tempfile
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .amplitudes import forward_amplitude_from_optical_theorem, unitarity_report
from .dsl import ExperimentConfig, ParseError, load, parse, serialize
from .errors import DegenerateSelection, NumericalDomainError
from .interferometer import outcome_distribution, path_amplitudes
from .joint_state import atom_from_geometry, evolve_overlap, postselect_d2
from .montecarlo import run_ensemble, write_trials_csv
from .wavepacket import (
    energy_budget,
    make_smoothed_rectangle,
    momentum_distribution,
    window_and_renormalize,
    write_momentum_csv,
    write_position_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 2, 3, 4

PROBABILITY_FIELDS = [
    "p_d1", "p_d2", "p_absorbed", "p_scattered",
    "d2_exact_re", "d2_exact_im", "d2_approx_im", "rel_err", "defect",
]
SWEEP_PARAMS = ("z_mag_sq", "w_n", "bs1_reflectivity", "phase_I")


class ConfigError(Exception):
    pass


# --- computations shared by several commands -----------------------------

def probability_table(cfg: ExperimentConfig) -> dict[str, float]:
    """Outcome probabilities for an atom in the window plus the D2 amplitudes.

    Raises DegenerateSelection when D2 cannot fire.
    """
    amps = cfg.amplitudes()
    dist = outcome_distribution(cfg.network, amps, atom_present=True)
    joint = evolve_overlap(atom_from_geometry(cfg.geometry), amps, cfg.network)
    post = postselect_d2(joint, path_amplitudes(cfg.network))
    exact, approx = post.exact_amplitude, post.approx_amplitude
    if exact == 0:
        raise DegenerateSelection("D2 amplitude of the window component vanishes")
    return {
        "p_d1": dist.p_d1,
        "p_d2": dist.p_d2,
        "p_absorbed": dist.p_absorbed,
        "p_scattered": dist.p_scattered,
        "d2_exact_re": exact.real,
        "d2_exact_im": exact.imag,
        "d2_approx_im": approx.imag,
        "rel_err": abs(exact - approx) / abs(exact),
        "defect": unitarity_report(amps).defect,
        "analytic_p_d2": post.probability,
    }


def wavepacket_summary(cfg: ExperimentConfig):
    wcfg = cfg.wavepacket
    wide = make_smoothed_rectangle(cfg.geometry.w_Gd, 0.0, wcfg.edge_fraction, wcfg.grid)
    narrow = window_and_renormalize(wide, cfg.geometry.w_n, wcfg.window_center, wcfg.edge_fraction)
    before, after = momentum_distribution(wide), momentum_distribution(narrow)
    budget = energy_budget(before, after)
    summary = {
        "before": before.to_dict(),
        "after": after.to_dict(),
        "sigma_x_ratio": after.sigma_x / before.sigma_x,
        "energy_delta_J": budget.delta_joule,
        "energy_delta_neV": budget.delta_nev,
        "forward_amplitude_fm": forward_amplitude_from_optical_theorem(
            cfg.absorber.cross_sections()
        ),
    }
    return summary, wide, narrow


def with_param(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    try:
        cfg = _replace_param(cfg, param, value)
    except ValueError as exc:
        raise ConfigError(f"{param} = {value!r}: {exc}") from exc
    # Round-trip through the parser to apply the same semantic checks.
    return parse(serialize(cfg))


def _replace_param(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    if param == "z_mag_sq":
        cfg = replace(cfg, absorber=replace(cfg.absorber, z_mag_sq=value))
    elif param == "w_n":
        cfg = replace(cfg, geometry=replace(cfg.geometry, w_n=value))
    elif param == "bs1_reflectivity":
        cfg = replace(cfg, network=replace(cfg.network, bs1_reflectivity=value))
    elif param == "phase_I":
        cfg = replace(cfg, network=replace(cfg.network, extra_phase_I=value))
    else:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    return cfg


# --- output plumbing ------------------------------------------------------

def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


class Run:
    def __init__(self, args, cfg: ExperimentConfig, seed: int):
        self.args, self.cfg, self.seed = args, cfg, seed
        self.started = time.perf_counter()
        if args.out:
            self.dir = Path(args.out)
        else:
            stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
            self.dir = Path("runs") / f"{stamp}-seed{seed}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.dir / name

    def write_text(self, name: str, text: str) -> None:
        _atomic_write(self.path(name), text)

    def write_json(self, name: str, obj) -> None:
        self.write_text(name, _dump_json(obj))

    def finish(self, extra_args: dict | None = None) -> None:
        manifest = {
            "command": self.args.command,
            "args": extra_args or {},
            "config": serialize(self.cfg),
            "seed": self.seed,
            "versions": {
                "ifprep": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "outputs": sorted(self.outputs),
            "duration_s": time.perf_counter() - self.started,
        }
        _atomic_write(self.dir / "manifest.json", _dump_json(manifest))


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return parse("")
    try:
        return load(args.config)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(64)


# --- commands -------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = _load_config(args)
    sys.stdout.write(serialize(cfg))
    return EXIT_OK


def cmd_probabilities(args) -> int:
    cfg = _load_config(args)
    table = probability_table(cfg)
    run = Run(args, cfg, _resolve_seed(args))
    run.write_json("probabilities.json", {k: table[k] for k in PROBABILITY_FIELDS})
    run.finish()
    print(f"P(D1)={table['p_d1']:.6g}  P(D2)={table['p_d2']:.6g}  "
          f"P(abs)={table['p_absorbed']:.6g}  P(scat)={table['p_scattered']:.6g}")
    print(f"D2 amplitude exact={complex(table['d2_exact_re'], table['d2_exact_im']):.6g}  "
          f"approx={table['d2_approx_im']:.6g}j  rel_err={table['rel_err']:.4g}")
    print(f"wrote {run.dir}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args)
    trial_cfg = cfg.trial_config(seed, n_trials=args.trials)
    stats = run_ensemble(trial_cfg, workers=args.workers)
    run = Run(args, cfg, seed)
    run.write_json("stats.json", stats.to_json_dict())
    if args.dump_trials or cfg.montecarlo.dump_trials:
        path = run.path("trials.csv")
        tmp = path.with_name(".trials.csv.tmp")
        write_trials_csv(trial_cfg, tmp, workers=args.workers)
        os.replace(tmp, path)
    run.finish({"trials": trial_cfg.n_trials})
    print(f"{trial_cfg.n_trials} trials, seed {seed}: counts {stats.counts}")
    print(f"P(D2) empirical={stats.empirical_p_d2:.6g} analytic={stats.analytic_p_d2:.6g} "
          f"+- {stats.std_error:.2g}")
    print(f"wrote {run.dir}")
    return EXIT_OK


def cmd_wavepacket(args) -> int:
    cfg = _load_config(args)
    summary, wide, narrow = wavepacket_summary(cfg)
    run = Run(args, cfg, _resolve_seed(args))
    run.write_json("spreads.json", summary)
    for tag, wp in (("before", wide), ("after", narrow)):
        for kind, writer in (("x", write_position_csv), ("p", write_momentum_csv)):
            path = run.path(f"density_{kind}_{tag}.csv")
            tmp = path.with_name(f".{path.name}.tmp")
            writer(wp, tmp)
            os.replace(tmp, path)
    run.finish()
    b, a = summary["before"], summary["after"]
    print(f"sigma_x {b['sigma_x']:.6g} um -> {a['sigma_x']:.6g} um "
          f"(ratio {summary['sigma_x_ratio']:.5g})")
    print(f"sigma_p {b['sigma_p']:.4g} -> {a['sigma_p']:.4g} kg m/s; "
          f"dE = {summary['energy_delta_neV']:.4g} neV")
    print(f"heisenberg ratio before {b['heisenberg_ratio']:.4g}, after {a['heisenberg_ratio']:.4g}")
    print(f"wrote {run.dir}")
    return EXIT_OK


SWEEP_COLUMNS = ["param", "value"] + PROBABILITY_FIELDS + ["analytic_p_d2"]


def sweep_values(start: float, stop: float, steps: int, log: bool) -> np.ndarray:
    if steps == 1:
        return np.array([start])
    if log:
        return np.geomspace(start, stop, steps)
    return np.linspace(start, stop, steps)


def sweep_rows(cfg: ExperimentConfig, param: str, values) -> list[dict]:
    rows = []
    for value in values:
        point = with_param(cfg, param, float(value))
        try:
            table = probability_table(point)
        except DegenerateSelection:
            amps = point.amplitudes()
            dist = outcome_distribution(point.network, amps, atom_present=True)
            table = dict.fromkeys(PROBABILITY_FIELDS + ["analytic_p_d2"], math.nan)
            table.update(p_d1=dist.p_d1, p_d2=dist.p_d2, p_absorbed=dist.p_absorbed,
                         p_scattered=dist.p_scattered, analytic_p_d2=0.0,
                         defect=unitarity_report(amps).defect)
        rows.append({"param": param, "value": float(value), **table})
    return rows


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.steps < 1:
        raise ConfigError("--steps must be at least 1")
    if args.log and (args.start <= 0 or args.stop <= 0):
        raise ConfigError("--log requires positive bounds")
    rows = sweep_rows(cfg, args.param, sweep_values(args.start, args.stop, args.steps, args.log))
    buf = io.StringIO()
    out = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    out.writeheader()
    for row in rows:
        out.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    run = Run(args, cfg, _resolve_seed(args))
    run.write_text("sweep.csv", buf.getvalue())
    run.finish({"param": args.param, "from": args.start, "to": args.stop,
                "steps": args.steps, "log": args.log})
    print(f"{len(rows)} rows of {args.param} written to {run.dir / 'sweep.csv'}")
    return EXIT_OK


# --- argument parsing -----------------------------------------------------

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment description (.ifp); defaults if omitted")
    common.add_argument("--out", help="run directory (default runs/<timestamp>-seed<seed>)")
    common.add_argument("--seed", type=_u64, help="64-bit seed; drawn from OS entropy if omitted")

    parser = argparse.ArgumentParser(prog="ifprep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="parse a config and print its canonical form")
    sub.add_parser("probabilities", parents=[common], help="outcome table and D2 amplitudes")

    mc = sub.add_parser("montecarlo", parents=[common], help="shutter-gated ensemble simulation")
    mc.add_argument("--trials", type=_positive_int, help="override montecarlo.n_trials")
    mc.add_argument("--dump-trials", action="store_true", help="also write trials.csv")
    mc.add_argument("--workers", type=_positive_int, default=1)

    sub.add_parser("wavepacket", parents=[common], help="position/momentum spreads before and after selection")

    sw = sub.add_parser("sweep", parents=[common], help="probability table over a parameter range")
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--from", dest="start", type=float, required=True)
    sw.add_argument("--to", dest="stop", type=float, required=True)
    sw.add_argument("--steps", type=int, default=11)
    sw.add_argument("--log", action="store_true", help="geometric spacing")

    rp = sub.add_parser("replay", help="re-run a recorded manifest into a new directory")
    rp.add_argument("manifest")
    rp.add_argument("--out", required=True)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "probabilities": cmd_probabilities,
    "montecarlo": cmd_montecarlo,
    "wavepacket": cmd_wavepacket,
    "sweep": cmd_sweep,
}


def _replay_argv(manifest_path: str, out: str) -> list[str]:
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    config_path = Path(out) / "replayed.ifp"
    Path(out).mkdir(parents=True, exist_ok=True)
    _atomic_write(config_path, manifest["config"])
    argv = [manifest["command"], "--config", str(config_path), "--out", out,
            "--seed", str(manifest["seed"])]
    extra = manifest["args"]
    if manifest["command"] == "montecarlo":
        argv += ["--trials", str(extra["trials"])]
    elif manifest["command"] == "sweep":
        argv += ["--param", extra["param"], "--from", repr(extra["from"]),
                 "--to", repr(extra["to"]), "--steps", str(extra["steps"])]
        if extra["log"]:
            argv.append("--log")
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        return main(_replay_argv(args.manifest, args.out))
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"{args.config or '<defaults>'}:{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSelection as exc:
        print(f"degenerate selection: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NumericalDomainError as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
