"""Command-line entry point: ``flagarea <experiment> [--config FILE] [overrides]``."""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

from .experiments import DEFAULTS, REGISTRY, ExperimentConfig
from .io import emit_plot_data, ensure_dir, read_config, write_lines

OUT_ENV = "FLAGAREA_OUT"


@dataclass
class RunReport:
    config: ExperimentConfig
    verdicts: list
    timings: dict
    manifest: list

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)


def _tuple(text):
    return tuple(float(s) for s in str(text).split(",") if s.strip())


_CASTS = {
    "n": int, "t_end": float, "dt": float, "paths": int, "seed": int, "u_grid": str,
    "kappa": _tuple, "mu": _tuple, "out": str, "tol": float,
    "trajectories": lambda s: str(s).strip().lower() in ("1", "true", "yes"),
}


def build_config(name, file_values=None, overrides=None):
    """Defaults < config file < command-line overrides."""
    if name not in REGISTRY:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
    values = dict(DEFAULTS[name])
    values["out"] = os.environ.get(OUT_ENV, "flagarea-out")
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in _CASTS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _CASTS[key](raw)
    values.pop("name", None)
    return ExperimentConfig(name=name, **values)


def run(config):
    """Run one experiment and write report, config echo, data files and manifest."""
    outdir = ensure_dir(os.path.join(config.out, config.name))
    t0 = time.perf_counter()
    verdicts, series = REGISTRY[config.name](config)
    elapsed = time.perf_counter() - t0
    manifest = []
    for stem, cols in series.items():
        manifest.append(emit_plot_data(cols, os.path.join(outdir, f"{stem}.dat")))
    manifest.append(write_lines(os.path.join(outdir, "report.txt"), [v.line() for v in verdicts]))
    manifest.append(write_lines(os.path.join(outdir, "config.txt"), config.echo()))
    # timings vary run to run, so they stay out of the report and data files
    write_lines(os.path.join(outdir, "timings.txt"), [f"total_seconds {elapsed:.3f}"])
    write_lines(os.path.join(outdir, "manifest.txt"), [os.path.basename(p) for p in manifest])
    for p in manifest:
        if not os.path.exists(p):
            raise FileNotFoundError(p)
    return RunReport(config, verdicts, {"total_seconds": elapsed}, manifest)


def make_parser():
    p = argparse.ArgumentParser(prog="flagarea", description=__doc__)
    p.add_argument("experiment", choices=sorted(REGISTRY))
    p.add_argument("--config", help="key=value file")
    p.add_argument("--n", type=int)
    p.add_argument("--t-end", dest="t_end")
    p.add_argument("--dt")
    p.add_argument("--paths")
    p.add_argument("--seed")
    p.add_argument("--out")
    p.add_argument("--tol")
    p.add_argument("--u-grid", dest="u_grid")
    p.add_argument("--mu")
    p.add_argument("--kappa")
    p.add_argument("--trajectories", action="store_const", const="1")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("experiment", "config")}
    try:
        file_values = read_config(args.config) if args.config else {}
        config = build_config(args.experiment, file_values, overrides)
        report = run(config)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for v in report.verdicts:
        print(v.line())
    print(f"# {config.name}: {'PASS' if report.passed else 'FAIL'} "
          f"({report.timings['total_seconds']:.1f} s)", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
