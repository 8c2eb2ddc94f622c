"""Command-line interface.

Subcommands::

    tlmor generate    random stable surrogate system -> model JSON
    tlmor impulse     model JSON -> (noisy) impulse CSV
    tlmor reduce      impulse CSV -> ROM JSON + trace CSV
    tlmor eval        impulse CSV + ROM JSON -> metrics on stdout
    tlmor experiment  noise x horizon sweep -> traces + summary CSV
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import io
from .exceptions import BacktrackExhausted, DimensionError, InfeasibleInit, RankDeficient, SolveFailure
from .lti import (
    ImpulseData, StateSpaceModel, add_noise, impulse_response, random_stable_system,
    relative_error, spectral_radius, tl_h2_error, tl_h2_norm,
)
from .optimizer import OptimizerConfig, era_init, minimize, random_init

log = logging.getLogger("tlmor")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RANK_DEFICIENT = 3
EXIT_INFEASIBLE_INIT = 4
EXIT_BACKTRACK_EXHAUSTED = 5
EXIT_SOLVE_FAILURE = 6

SUMMARY_FIELDS = ("sigma", "L", "init_rel_err", "final_rel_err", "iters", "reason",
                  "init_truth_rel_err", "final_truth_rel_err")


@dataclass
class ExperimentConfig:
    """Sweep definition; the JSON config file uses these field names.

    ``system`` is either ``{"model": path}`` or surrogate parameters
    ``{"n", "m", "p", "rho_max", "seed"}``. ``init`` is ``"era"`` or
    ``{"random": seed}``.
    """

    system: dict = field(default_factory=lambda: {"n": 120, "m": 2, "p": 2,
                                                  "rho_max": 0.99, "seed": 0})
    horizons: list = field(default_factory=lambda: [20, 40])
    order: int = 2
    sigmas: list = field(default_factory=lambda: [0.0, 1.0, 50.0])
    noise_seed: int = 0
    optimizer: dict = field(default_factory=dict)
    output_dir: str = "experiment"
    init: object = "era"

    def __post_init__(self):
        if any(s < 0 for s in self.sigmas):
            raise ValueError("noise sigmas must be nonnegative")
        if self.init == "era" and any(L < 3 for L in self.horizons):
            raise ValueError("ERA initialization needs every horizon L >= 3")
        if self.init != "era" and not (isinstance(self.init, dict) and "random" in self.init):
            raise ValueError(f"init must be 'era' or {{'random': seed}}, got {self.init!r}")
        OptimizerConfig(**self.optimizer)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment config fields: {sorted(unknown)}")
        return cls(**d)

    def build_system(self) -> StateSpaceModel:
        if "model" in self.system:
            return io.load_model(self.system["model"])
        s = self.system
        return random_stable_system(int(s["n"]), int(s["m"]), int(s["p"]),
                                    float(s.get("rho_max", 0.99)), s.get("seed", 0))


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(
        alpha_init=args.alpha_init, beta=args.beta, c1=args.c1, tol=args.tol,
        max_iters=args.max_iters, max_backtracks=args.max_backtracks,
        stability_checked=args.stable, seed=args.seed,
    )


def _initial_rom(data, order, init, seed):
    if init == "era":
        return era_init(data, order)
    return random_init(data, order, seed)


def cmd_generate(args) -> int:
    model = random_stable_system(args.n, args.m, args.p, args.rho_max, args.seed)
    io.save_model(model, args.out)
    print(json.dumps({"path": str(args.out), "spectral_radius": model.spectral_radius}))
    return EXIT_OK


def cmd_impulse(args) -> int:
    model = io.load_model(args.model)
    data = add_noise(impulse_response(model, args.L), args.sigma, args.noise_seed)
    io.save_impulse(data, args.out)
    return EXIT_OK


def cmd_reduce(args) -> int:
    data = io.load_impulse(args.data)
    cfg = _optimizer_config(args)
    init = _initial_rom(data, args.order, args.init, args.seed)
    rom, trace = minimize(data, init, cfg)
    io.save_model(rom, args.out_rom)
    io.save_trace(trace, args.out_trace)
    print(json.dumps({
        "init_rel_error": relative_error(data, init),
        "final_rel_error": relative_error(data, rom),
        "iters": trace.n_steps,
        "reason": trace.reason,
    }))
    trace.raise_for_reason()
    return EXIT_OK


def eval_metrics(data: ImpulseData, rom, truth: StateSpaceModel | None = None) -> dict:
    nrm = tl_h2_norm(data)
    err = tl_h2_error(data, rom)
    out = {
        "tl_h2_norm": nrm,
        "tl_h2_error": err,
        "rel_error": err / nrm if nrm > 0 else float("nan"),
        "spectral_radius": spectral_radius(rom.A),
    }
    if truth is not None:
        exact = impulse_response(truth, data.L)
        out["truth_rel_error"] = relative_error(exact, rom)
    return out


def cmd_eval(args) -> int:
    data = io.load_impulse(args.data)
    rom = io.load_rom(args.rom)
    truth = io.load_model(args.model) if args.model else None
    print(json.dumps(eval_metrics(data, rom, truth)))
    return EXIT_OK


def _sigma_tag(sigma: float) -> str:
    return f"{sigma:g}".replace(".", "p")


def run_cell(cfg: ExperimentConfig, truth: StateSpaceModel, L: int, sigma: float) -> dict:
    """One (horizon, noise level) cell; writes its own trace and ROM."""
    out = Path(cfg.output_dir)
    stem = f"L{L}_sigma{_sigma_tag(sigma)}"
    row = {"sigma": sigma, "L": L}
    try:
        exact = impulse_response(truth, L)
        data = add_noise(exact, sigma, cfg.noise_seed)
        io.save_impulse(data, out / f"impulse_{stem}.csv")
        if cfg.init == "era":
            init = era_init(data, cfg.order)
        else:
            init = random_init(data, cfg.order, cfg.init["random"])
        rom, trace = minimize(data, init, OptimizerConfig(**cfg.optimizer))
        io.save_trace(trace, out / f"trace_{stem}.csv")
        io.save_model(rom, out / f"rom_{stem}.json")
        row.update(
            init_rel_err=relative_error(data, init),
            final_rel_err=relative_error(data, rom),
            iters=trace.n_steps,
            reason=trace.reason,
            init_truth_rel_err=relative_error(exact, init),
            final_truth_rel_err=relative_error(exact, rom),
        )
    except (RankDeficient, SolveFailure, InfeasibleInit, DimensionError, ValueError, OSError) as exc:
        log.error("cell %s failed: %s", stem, exc)
        row.update(init_rel_err=float("nan"), final_rel_err=float("nan"), iters=0,
                   reason=f"error:{type(exc).__name__}",
                   init_truth_rel_err=float("nan"), final_truth_rel_err=float("nan"))
    return row


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = cfg.build_system()
    io.save_model(truth, out / "truth.json")
    io.write_json(asdict(cfg), out / "config.json")
    cells = [(L, float(s)) for L in cfg.horizons for s in cfg.sigmas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(run_cell, cfg, truth, L, s) for L, s in cells]
            rows = [f.result() for f in futs]
    else:
        rows = [run_cell(cfg, truth, L, s) for L, s in cells]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([io.fmt(v) if isinstance(v, float) else v
                        for v in (row[k] for k in SUMMARY_FIELDS)])
    return rows


def load_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in SUMMARY_FIELDS:
            if k in ("reason",):
                continue
            row[k] = int(row[k]) if k in ("L", "iters") else float(row[k])
    return rows


def cmd_experiment(args) -> int:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.out:
        d["output_dir"] = args.out
    if args.max_iters is not None:
        d.setdefault("optimizer", {})["max_iters"] = args.max_iters
    cfg = ExperimentConfig.from_dict(d)
    rows = run_experiment(cfg, jobs=args.jobs)
    failed = [r for r in rows if str(r["reason"]).startswith("error:")]
    for r in rows:
        print(json.dumps(r))
    return EXIT_FAILURE if failed else EXIT_OK


def _add_optimizer_args(p):
    p.add_argument("--alpha-init", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--c1", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--max-backtracks", type=int, default=60)
    p.add_argument("--stable", action="store_true",
                   help="reject steps whose state matrix has spectral radius >= 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlmor", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random stable surrogate system")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--rho-max", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("model.json"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("impulse", help="write L Markov parameters of a model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("impulse.csv"))
    p.set_defaults(func=cmd_impulse)

    p = sub.add_parser("reduce", help="fit a ROM to impulse data")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--order", "-r", type=int, default=2)
    p.add_argument("--init", choices=("era", "random"), default="era")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-rom", type=Path, default=Path("rom.json"))
    p.add_argument("--out-trace", type=Path, default=Path("trace.csv"))
    _add_optimizer_args(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("eval", help="print error metrics of a ROM as JSON")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--rom", type=Path, required=True)
    p.add_argument("--model", type=Path, help="truth model for truth-relative error")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run the noise x horizon sweep")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=str)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RankDeficient as exc:
        log.error("%s", exc)
        return EXIT_RANK_DEFICIENT
    except BacktrackExhausted as exc:
        log.error("%s", exc)
        return EXIT_BACKTRACK_EXHAUSTED
    except InfeasibleInit as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE_INIT
    except SolveFailure as exc:
        log.error("%s", exc)
        return EXIT_SOLVE_FAILURE
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
