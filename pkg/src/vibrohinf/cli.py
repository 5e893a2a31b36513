"""Command-line entry point.

Usage::

    vibrohinf SUBCOMMAND [--config run.json] [overrides...]

Subcommands: gamma-star, average, expand, verify, simulate, paper-table.
Exit status: 0 success, 1 infeasible, 2 numerical failure (or unwritable
output), 3 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, harness, hinf, serialize
from .errors import ConfigError, Infeasible, NumericalFailure, VibroHinfError
from .expansion import build_series, eval_series
from .periodic import DEFAULT_GRID, MIN_GRID
from .riccati import RESIDUAL_RTOL, IMAG_AXIS_TOL
from .vibration import Convention, SystemSpec, averaged_are_input, transform_system

logger = logging.getLogger("vibrohinf")

EXIT_OK, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2, 3
OUTPUT_DIR_ENV = "VIBROHINF_OUTPUT_DIR"
SUBCOMMANDS = ("gamma-star", "average", "expand", "verify", "simulate", "paper-table")


@dataclass
class RunConfig:
    plant: dict | None = None
    order: int = 2
    grid_size: int = DEFAULT_GRID
    gamma: float | None = None
    epsilon: float = 0.05
    epsilon_list: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    tol: float = hinf.DEFAULT_TOL
    gamma_max: float = hinf.DEFAULT_GAMMA_MAX
    convention: str = "paper"
    seed: int = 0
    output_path: str = "vibrohinf_out/run"
    steps: int = harness.DEFAULT_STEPS
    # simulate
    disturbance: str = "noise"        # zero | bump | noise | worst_case
    horizon: float | None = None
    step: float | None = None
    k_values: list = field(default_factory=lambda: list(hinf.TABLE_K_VALUES))
    raw: bytes = b""

    def spec(self) -> SystemSpec:
        if self.plant is None:
            raise ConfigError("config has no 'plant' section")
        p = self.plant
        try:
            n = len(p["A"])
            return SystemSpec(
                A=p["A"],
                B1=p.get("B1") or np.zeros((n, 0)),
                B2=p.get("B2") or np.zeros((n, 0)),
                L=p.get("L", np.eye(n).tolist()),
                K=p.get("K"),
                gamma=self.gamma if self.gamma is not None else 1.0,
                epsilon=self.epsilon,
            )
        except KeyError as exc:
            raise ConfigError(f"plant is missing {exc}") from exc
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid plant: {exc}") from exc

    def validate(self) -> None:
        for name in ("tol", "gamma_max", "epsilon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.grid_size < MIN_GRID or self.grid_size % 2:
            raise ConfigError(f"grid_size must be even and >= {MIN_GRID}")
        if self.steps % self.grid_size:
            raise ConfigError("steps must be a multiple of grid_size")
        if not 0 <= self.order <= 8:
            raise ConfigError("order must be in [0, 8]")
        try:
            Convention(self.convention)
        except ValueError as exc:
            raise ConfigError(f"unknown convention {self.convention!r}") from exc
        if any(not e > 0 for e in self.epsilon_list):
            raise ConfigError("epsilon_list entries must be positive")
        if self.disturbance not in ("zero", "bump", "noise", "worst_case"):
            raise ConfigError(f"unknown disturbance {self.disturbance!r}")
        for name in ("horizon", "step"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.raw).hexdigest()


_KNOWN = {f for f in RunConfig.__dataclass_fields__ if f != "raw"}


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = RunConfig(**data, raw=raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vibrohinf", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--output", help="output path prefix (overrides config)")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--gamma-max", type=float)
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--order", type=int)
    ap.add_argument("--grid-size", type=int)
    ap.add_argument("--steps", type=int)
    ap.add_argument("--convention", choices=[c.value for c in Convention])
    ap.add_argument("--seed", type=int)
    ap.add_argument("--digits", type=int, default=6)
    ap.add_argument("--paper-format", action="store_true",
                    help="decimal commas in the paper table")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    for arg, attr in (("tol", "tol"), ("gamma", "gamma"), ("gamma_max", "gamma_max"),
                      ("epsilon", "epsilon"), ("order", "order"),
                      ("grid_size", "grid_size"), ("steps", "steps"),
                      ("convention", "convention"), ("seed", "seed"),
                      ("output", "output_path")):
        val = getattr(args, arg)
        if val is not None:
            setattr(cfg, attr, val)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        cfg.output_path = str(Path(env_dir) / Path(cfg.output_path).name)
    return cfg


def _meta(cfg: RunConfig, sub: str, digits: int, **extra) -> dict:
    meta = {
        "subcommand": sub,
        "config_sha256": cfg.config_hash,
        "convention": cfg.convention,
        "grid_size": cfg.grid_size,
        "tol": cfg.tol,
        "gamma_max": cfg.gamma_max,
        "are_residual_rtol": RESIDUAL_RTOL,
        "imag_axis_tol": IMAG_AXIS_TOL,
        "rk4_steps_per_period": cfg.steps,
        "digits": digits,
    }
    meta.update(extra)
    return meta


def _out(cfg: RunConfig, suffix: str) -> Path:
    base = Path(cfg.output_path)
    return base.with_name(base.name + suffix)


def _cmd_gamma_star(cfg, args):
    avg = transform_system(cfg.spec(), cfg.grid_size, cfg.convention)
    res = hinf.gamma_star(avg, cfg.tol, cfg.gamma_max)
    print(f"{res.gamma_star:.{max(4, -int(np.floor(np.log10(cfg.tol))))}f}")
    return serialize.write_gamma_result(_out(cfg, "_gamma.csv"), res,
                                        _meta(cfg, "gamma-star", args.digits), args.digits)


def _averaged(cfg):
    spec = cfg.spec()
    if cfg.gamma is None:
        raise ConfigError("gamma is required for this subcommand")
    return transform_system(spec, cfg.grid_size, cfg.convention)


def _cmd_average(cfg, args):
    A, D, C = averaged_are_input(_averaged(cfg))
    return serialize.write_matrices(_out(cfg, "_average.csv"),
                                    {"A_bar": A, "D_bar": D, "C_bar": C},
                                    _meta(cfg, "average", args.digits, gamma=cfg.gamma),
                                    args.digits)


def _cmd_expand(cfg, args):
    series = build_series(_averaged(cfg), cfg.order)
    return serialize.write_series(_out(cfg, "_series"), series,
                                  _meta(cfg, "expand", args.digits, gamma=cfg.gamma,
                                        order=cfg.order), args.digits)


def _cmd_verify(cfg, args):
    avg = _averaged(cfg)
    rep = harness.convergence_order(avg, cfg.epsilon_list, cfg.order, cfg.steps)
    eps_star, certs = harness.certify_epsilon(avg, cfg.order, harness.EPSILON_SWEEP,
                                              cfg.steps)
    extra = {"gamma": cfg.gamma, "epsilon_star_sweep": serialize.fmt(eps_star)}
    for c in certs:
        extra[f"certificate_eps_{c.epsilon:g}"] = (
            f"floquet={c.floquet_radius:.6g} pd={c.positive_definite} "
            f"reference={c.reference_converged} ok={c.ok}")
    return serialize.write_report(_out(cfg, "_verify.csv"), rep,
                                  _meta(cfg, "verify", args.digits, **extra), args.digits)


def _signal(cfg, q):
    if cfg.disturbance == "zero":
        return harness.zero_signal(q)
    if cfg.disturbance in ("bump", "worst_case"):
        return harness.bump_signal(np.ones(q), 1.0, 1.0, 0.25)
    return harness.noise_signal(cfg.seed, q)


def _cmd_simulate(cfg, args):
    avg = _averaged(cfg)
    spec = avg.spec
    series = build_series(avg, cfg.order)
    if np.any(spec.K):
        step = cfg.step or spec.epsilon * 2 * np.pi / 64

        def gains(t):
            R = eval_series(series, spec.epsilon, t, "original_R")
            return hinf.controller_gains(R, spec, check=False)

        closed = series.closed_loop_avg
    else:
        step = cfg.step or 0.05
        R = series.constants[0]
        gains = hinf.controller_gains(R, spec)
        closed = series.certificate.closed_loop
    horizon = cfg.horizon or harness.default_horizon(closed)
    handover = 2.0 if cfg.disturbance == "worst_case" else None
    sim = harness.simulate(spec, gains, _signal(cfg, spec.q), horizon, step,
                           worst_case_after=handover)
    meta = _meta(cfg, "simulate", args.digits, gamma=cfg.gamma, epsilon=spec.epsilon,
                 disturbance=cfg.disturbance, seed=cfg.seed, horizon=horizon, step=step)
    return serialize.write_simulation(_out(cfg, "_simulation.csv"), sim, meta, args.digits)


def _cmd_paper_table(cfg, args):
    rows = hinf.paper_table(cfg.k_values, cfg.tol, cfg.grid_size, cfg.convention)
    text = serialize.paper_table_csv(rows, args.paper_format)
    sys.stdout.write(text)
    meta = _meta(cfg, "paper-table", args.digits)
    for r in rows:
        oracle = 1.0 / (0.27 + r.k**2 / 2.0)
        if r.gamma_paper is not None and abs(r.gamma_paper - r.gamma_fixture) > 0.005:
            msg = (f"printed {r.gamma_paper:.3f} vs computed {r.gamma_fixture:.3f} "
                   f"(DC-gain oracle {oracle:.3f})")
            meta[f"discrepancy_k_{r.k:g}"] = msg
            print(f"warning: k={r.k:g}: {msg}", file=sys.stderr)
    files = []
    if args.output is not None or args.config is not None or os.environ.get(OUTPUT_DIR_ENV):
        files = serialize.write_paper_table(_out(cfg, "_paper_table.csv"), rows, meta,
                                            args.paper_format)
    return files


_COMMANDS = {
    "gamma-star": _cmd_gamma_star,
    "average": _cmd_average,
    "expand": _cmd_expand,
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "paper-table": _cmd_paper_table,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        cfg.validate()
        files = _COMMANDS[args.subcommand](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VibroHinfError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        logger.info("wrote %s", f)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
