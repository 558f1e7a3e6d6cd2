"""Command-line interface.

    enaqt evolve      --config fmo3.json --gamma 12.07 --t-end 20 --output traj.csv
    enaqt sweep       --gamma-grid 1e-6:1e4:121 --output sweep.csv
    enaqt efficiency  --gamma 12.07 --method direct
    enaqt lqu         --state "0.5,0.5,0;0.5,0.5,0;0,0,0" --method both

The config file holds the physics, flags hold per-run knobs and override
file values. Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, correlations, dynamics, experiments, export
from .errors import NumericalError, ValidationError
from .model import RunConfig, config_to_dict, fmo3_preset, load_config, localized_state

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("enaqt")


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig(fmo3_preset(), 1)
    changes = {}
    if args.dissipation is not None:
        changes["dissipation_rates"] = args.dissipation
    if args.sink_rate is not None:
        changes["sink_rate"] = args.sink_rate
    if args.sink_site is not None:
        changes["sink_site"] = args.sink_site
    if args.hbar is not None:
        changes["hbar"] = args.hbar
    if getattr(args, "gamma", None) is not None:
        changes["dephasing_rates"] = args.gamma
    model = cfg.model.replace(**changes) if changes else cfg.model
    initial = args.initial_site if args.initial_site is not None else cfg.initial_site
    return RunConfig(model, initial)


def _summary_path(args, default_output: Path) -> Path:
    if args.summary:
        return Path(args.summary)
    return default_output.with_suffix(".json")


def cmd_evolve(args) -> int:
    cfg = _resolve_config(args)
    if cfg.model.dephasing_rates is None:
        raise ValidationError("no dephasing rate: pass --gamma or set dephasing_ps1 in the config")
    observables = {s.strip() for s in args.observables.split(",") if s.strip()}
    unknown = observables - {"populations", "lqu"}
    if unknown:
        raise ValidationError(f"unknown observable {sorted(unknown)[0]!r} (allowed: populations, lqu)")
    start = time.perf_counter()
    rho0 = localized_state(cfg.model, cfg.initial_site)
    traj = dynamics.evolve(cfg.model, None, rho0, args.t_end, args.dt)
    if "lqu" in observables:
        traj = correlations.with_lqu(traj, normalize=args.lqu_normalize, qubit_site=args.qubit_site)
    purity = np.real(np.einsum("tij,tji->t", traj.states, traj.states))
    out = Path(args.output)
    export.write_trajectory_csv(traj, out, with_lqu="lqu" in observables)
    export.write_json(
        {
            "command": "evolve",
            "config": config_to_dict(cfg),
            "t_end_ps": args.t_end,
            "dt_ps": float(traj.times[1] - traj.times[0]) if len(traj) > 1 else None,
            "samples": len(traj),
            "final_p_rc": float(traj.p_rc[-1]),
            "final_trace": float(np.trace(traj.states[-1]).real),
            "max_trace_drift": float(np.max(np.abs(np.trace(traj.states, axis1=1, axis2=2) - 1))),
            "max_purity_drift": float(np.max(np.abs(purity - purity[0]))),
            "lqu_normalize": args.lqu_normalize,
            "wall_time_s": time.perf_counter() - start,
            "output": str(out),
        },
        _summary_path(args, out),
    )
    return EXIT_OK


def _parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, pts = text.split(":")
        return float(lo), float(hi), int(pts)
    except ValueError:
        raise ValidationError(f"--gamma-grid must look like min:max:points, got {text!r}") from None


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    lo, hi, pts = _parse_grid(args.gamma_grid)
    if args.points is not None:
        pts = args.points
    sweep_cfg = experiments.SweepConfig(
        model=cfg.model,
        gamma_min=lo,
        gamma_max=hi,
        points=pts,
        efficiency_method=args.method,
        t_max=args.t_max,
        plateau_window=args.plateau_window,
        plateau_tol=args.plateau_tol,
        initial_site=cfg.initial_site,
        lqu_normalize=args.lqu_normalize,
        lqu_horizon=args.lqu_horizon,
        compute_flux=not args.no_flux,
        threads=args.threads,
    )
    start = time.perf_counter()
    result = experiments.run_dephasing_sweep(sweep_cfg)
    wall = time.perf_counter() - start
    out = Path(args.output)
    export.write_sweep_csv(result, out)
    eta_max, eta_arg = result.peak_eta()
    phi_max, phi_arg = result.peak_phi()
    export.write_json(
        {
            "command": "sweep",
            "config": sweep_cfg.as_dict(),
            "peak_eta": eta_max,
            "argmax_gamma_eta": eta_arg,
            "peak_phi_lqu": phi_max,
            "argmax_gamma_phi": phi_arg,
            "failed_points": [{"gamma": p.gamma, "error": p.error} for p in result.failed],
            # kept out of the CSV so repeated runs stay byte-identical
            "wall_time_s": wall,
            "output": str(out),
        },
        _summary_path(args, out),
    )
    return EXIT_OK


def cmd_efficiency(args) -> int:
    cfg = _resolve_config(args)
    if cfg.model.dephasing_rates is None:
        raise ValidationError("no dephasing rate: pass --gamma or set dephasing_ps1 in the config")
    start = time.perf_counter()
    rep = _efficiency(cfg, args)
    payload = {"command": "efficiency", "config": config_to_dict(cfg), **rep.as_dict(),
               "wall_time_s": time.perf_counter() - start}
    sys.stdout.write(export.write_json(payload))
    return EXIT_OK


def _efficiency(cfg: RunConfig, args) -> dynamics.EfficiencyReport:
    rho0 = localized_state(cfg.model, cfg.initial_site)
    if args.method == "direct":
        return dynamics.efficiency_direct(cfg.model, None, rho0)
    return dynamics.efficiency_by_integration(cfg.model, None, rho0, t_max=args.t_max, tol=args.tol)


def _parse_entry(text: str, row: int, col: int) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise ValidationError(f"state entry at row {row}, column {col} is not a number: {text!r}") from None


def _check_square(rows: list, source: str) -> None:
    if not rows:
        raise ValidationError(f"{source}: state is empty")
    for r, row in enumerate(rows, start=1):
        if len(row) != len(rows):
            raise ValidationError(f"{source}: row {r} has {len(row)} entries, expected {len(rows)}")


def parse_state(spec: str) -> np.ndarray:
    """Site block from an inline ``a,b,c;d,e,f;...`` string or a JSON file.

    The file may hold a bare nested list or ``{"site_block": [...]}``; complex
    entries are given as strings (``"0.1-0.2j"``) or ``[re, im]`` pairs.
    """
    path = Path(spec)
    if path.suffix == ".json" or path.is_file():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read state file {spec}: {exc}") from exc
        if isinstance(data, dict):
            if "site_block" not in data:
                raise ValidationError(f"{spec}: expected a 'site_block' key")
            data = data["site_block"]
        if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
            raise ValidationError(f"{spec}: site block must be a list of rows")
        _check_square(data, spec)
        out = np.empty((len(data), len(data)), dtype=complex)
        for r, row in enumerate(data, start=1):
            for c, x in enumerate(row, start=1):
                if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
                    out[r - 1, c - 1] = complex(x[0], x[1])
                elif isinstance(x, (int, float, str)) and not isinstance(x, bool):
                    out[r - 1, c - 1] = _parse_entry(str(x), r, c)
                else:
                    raise ValidationError(f"{spec}: state entry at row {r}, column {c} is not a number: {x!r}")
        return out
    rows = [r.split(",") for r in spec.strip().strip(";").split(";")]
    _check_square(rows, "--state")
    return np.array([[_parse_entry(x, r, c) for c, x in enumerate(row, start=1)]
                     for r, row in enumerate(rows, start=1)])


def cmd_lqu(args) -> int:
    block = parse_state(args.state)
    n = block.shape[0]
    if not 1 <= args.qubit_site <= n:
        raise ValidationError(f"--qubit-site must be in 1..{n}")
    normalize = not args.no_normalize
    payload: dict = {"command": "lqu", "n_sites": n, "qubit_site": args.qubit_site, "normalize": normalize}
    results = {}
    if args.method in ("single", "both"):
        results["single"] = correlations.lqu_single_excitation(block, normalize=normalize, qubit_site=args.qubit_site)
    if args.method in ("general", "both"):
        b = block / np.trace(block).real if normalize else block
        part = correlations.PartitionSpec.default(n, args.qubit_site)
        results["general"] = correlations.lqu_general(correlations.embed_single_excitation(b, part))
    for name, res in results.items():
        payload[name] = res.as_dict()
    payload["lqu"] = next(iter(results.values())).value
    if len(results) == 2:
        payload["abs_difference"] = abs(results["single"].value - results["general"].value)
    sys.stdout.write(export.write_json(payload))
    return EXIT_OK


def _add_model_overrides(p: argparse.ArgumentParser, with_gamma: bool = True) -> None:
    g = p.add_argument_group("model overrides")
    g.add_argument("--config", help="JSON config file (default: FMO trimer preset)")
    if with_gamma:
        g.add_argument("--gamma", type=float, help="dephasing rate for every site, ps^-1")
    g.add_argument("--dissipation", type=float, help="dissipation rate for every site, ps^-1")
    g.add_argument("--sink-rate", type=float, help="transfer rate to the reaction centre, ps^-1")
    g.add_argument("--sink-site", type=int, help="site coupled to the reaction centre (1-based)")
    g.add_argument("--hbar", type=float, help="hbar in cm^-1 ps")
    g.add_argument("--initial-site", type=int, help="initially excited site (1-based)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enaqt", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size for sweeps")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="propagate the density matrix and write a trajectory CSV")
    _add_model_overrides(p)
    p.add_argument("--t-end", type=float, default=20.0, help="ps")
    p.add_argument("--dt", type=float, help="output step in ps (default depends on gamma)")
    p.add_argument("--observables", default="populations,lqu")
    p.add_argument("--lqu-normalize", action="store_true", help="normalize the site block before LQU")
    p.add_argument("--qubit-site", type=int, default=1)
    p.add_argument("--output", default="trajectory.csv")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="efficiency and LQU flux over a dephasing grid")
    _add_model_overrides(p, with_gamma=False)
    p.add_argument("--gamma-grid", default="1e-6:1e4:121", help="min:max:points, log-spaced, ps^-1")
    p.add_argument("--points", type=int, help="override the number of grid points")
    p.add_argument("--method", choices=experiments.EFFICIENCY_METHODS, default="direct")
    p.add_argument("--t-max", type=float, default=dynamics.T_MAX_DEFAULT,
                   help="integration cap in ps (integrate method only)")
    p.add_argument("--plateau-window", type=float, default=2.0, help="ps")
    p.add_argument("--plateau-tol", type=float, default=1e-3)
    p.add_argument("--lqu-horizon", type=float, default=20.0, help="ps")
    p.add_argument("--lqu-normalize", action="store_true")
    p.add_argument("--no-flux", action="store_true", help="skip the LQU trajectories")
    p.add_argument("--output", default="sweep.csv")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("efficiency", help="transport efficiency at one dephasing rate (JSON on stdout)")
    _add_model_overrides(p)
    p.add_argument("--method", choices=experiments.EFFICIENCY_METHODS, default="direct")
    p.add_argument("--t-max", type=float, default=dynamics.T_MAX_DEFAULT, help="integration cap, ps")
    p.add_argument("--tol", type=float, default=dynamics.DRAIN_TOL, help="site population drain threshold")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("lqu", help="LQU of a single-excitation site block (JSON on stdout)")
    p.add_argument("--state", required=True, help="inline 'a,b;c,d' rows or a JSON file")
    p.add_argument("--method", choices=("general", "single", "both"), default="both")
    p.add_argument("--qubit-site", type=int, default=1)
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_lqu)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        return args.func(args)
    except ValidationError as exc:
        print(f"enaqt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"enaqt {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"enaqt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
