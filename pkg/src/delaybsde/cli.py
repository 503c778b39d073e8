"""Command-line interface: tables, prices, path dumps, residual studies and checks."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bessel
from .checks import CHECKS, beta_sweep, default_config, example41_table, residual_study, run_all
from .errors import DomainError
from .kernel import ModelParams, psi, psi_diag, psi_prime
from .montecarlo import SimConfig, probability_below, simulate_paths
from .payoffs import ExpBM, payoff_from_json
from .solver_y import solve_y_path, static_rho_y
from .solver_z import solve_z_path, static_rho_z

DEFAULT_PAYOFF = ExpBM.martingale(2.0).to_json()

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


def load_config_file(path) -> dict:
    """SimConfig fields from a JSON or TOML file (chosen by extension)."""
    path = Path(path)
    if path.suffix == ".toml":
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    else:
        data = json.loads(path.read_text())
    allowed = {"n_paths", "grid_steps", "seed", "horizon"}
    unknown = set(data) - allowed
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    return data


def _sim_config(args, **defaults) -> SimConfig:
    kw = dict(defaults)
    if getattr(args, "config", None):
        kw.update(load_config_file(args.config))
    for key, attr in (("n_paths", "paths"), ("grid_steps", "steps"), ("seed", "seed")):
        if getattr(args, attr, None) is not None:
            kw[key] = getattr(args, attr)
    kw["horizon"] = args.horizon
    return SimConfig(**kw)


def _params(args) -> ModelParams:
    return ModelParams(args.beta, args.horizon)


def _emit(text: str, args):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], args):
    fmt = getattr(args, "format", "csv") or "csv"
    if fmt == "json":
        return json.dumps(rows, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_bessel_table(args):
    w = np.logspace(np.log10(args.wmin), np.log10(args.wmax), args.count)
    rows = [
        {"w": float(x), "I0": float(a), "I1": float(b), "K0": float(c), "K1": float(d)}
        for x, a, b, c, d in zip(w, bessel.i0(w), bessel.i1(w), bessel.k0(w), bessel.k1(w))
    ]
    _emit(_table(rows, args), args)


def cmd_kernel_table(args):
    params = _params(args)
    nodes = np.linspace(0.0, params.horizon, args.nodes + 1)
    rows = []
    for t in nodes:
        for s in nodes[nodes <= t]:
            rows.append({
                "s": float(s),
                "t": float(t),
                "psi": psi(s, t, params),
                "psi_prime": psi_prime(s, t, params) if s > 0 else None,
                "diag": psi_diag(t, params),
            })
    _emit(_table(rows, args), args)


def cmd_price(args, mode):
    params = _params(args)
    payoff = payoff_from_json(args.payoff)
    rho = static_rho_y(payoff, params) if mode == "y" else static_rho_z(payoff, params)
    out = {"beta": params.beta, "horizon": params.horizon, "payoff": payoff.to_dict(), "rho": rho,
           "mean": payoff.mean_p(params.horizon)}
    _emit(json.dumps(out, sort_keys=True) + "\n", args)


def cmd_path(args, mode):
    params = _params(args)
    payoff = payoff_from_json(args.payoff)
    config = _sim_config(args, n_paths=1)
    path = next(simulate_paths(replace(config, n_paths=1), batch_size=1))
    sol = (solve_y_path if mode == "y" else solve_z_path)(payoff, path, params)
    dens = "M" if mode == "y" else "Z_q"
    rows = []
    n = path.grid.steps
    for k, t in enumerate(path.grid.nodes):
        last = k == n
        rows.append({
            "t": float(t),
            "W": float(path.w[0, k]),
            "V": float(sol.v[0, k]),
            dens: None if last else float(sol.density[0, k]),
            "Y": float(sol.y[0, k]),
            "Z": None if last else float(sol.z[0, k]),
        })
    _emit(_table(rows, args), args)


def cmd_verify(args, mode):
    params = _params(args)
    payoff = payoff_from_json(args.payoff)
    config = _sim_config(args, n_paths=20_000, grid_steps=512)
    study = residual_study(mode, payoff, params, config, levels=args.levels)
    study.update({"mode": mode, "beta": params.beta, "horizon": params.horizon, "payoff": payoff.to_dict(),
                  "n_paths": config.n_paths, "seed": config.seed})
    _emit(json.dumps(study, sort_keys=True) + "\n", args)


def cmd_sweep(args):
    payoff = payoff_from_json(args.payoff)
    betas = [float(b) for b in args.betas.split(",")]
    _emit(_table(beta_sweep(payoff, betas, args.horizon, args.mode), args), args)


def cmd_compare_rho_star(args):
    _emit(_table(example41_table(_params(args)), args), args)


def cmd_counterexample(args):
    params = _params(args)
    payoff = payoff_from_json(args.payoff)
    config = _sim_config(args, n_paths=100_000, grid_steps=512)
    solve = solve_y_path if args.mode == "y" else solve_z_path
    values = np.concatenate([solve(payoff, batch, params).at(args.time) for batch in simulate_paths(config)])
    est = probability_below(values, 0.0, 0.99)
    out = {"mode": args.mode, "t": args.time, "p": est.mean, "stderr": est.stderr, "lower_99": est.lower,
           "upper_99": est.upper, "n": est.n, "seed": config.seed}
    _emit(json.dumps(out, sort_keys=True) + "\n", args)


def cmd_check(args) -> int:
    ids = list(CHECKS) if args.check_id == "all" else [args.check_id]
    configs = {}
    for cid in ids:
        cfg = default_config(cid, seed=args.seed or 0, n_paths=args.paths, grid_steps=args.steps)
        configs[cid] = cfg
    reports = run_all(configs, jobs=args.jobs)
    _emit("".join(r.to_json(timings=args.timings) + "\n" for r in reports), args)
    return 0 if all(r.passed for r in reports) else 1


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, default=1.0)
    common.add_argument("--horizon", type=float, default=1.0)
    common.add_argument("--payoff", default=DEFAULT_PAYOFF, help="payoff as JSON, e.g. '{\"kind\": \"exp_bm\", \"a\": 2, \"drift\": 2}'")
    common.add_argument("--paths", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="JSON or TOML file with n_paths, grid_steps, seed, horizon")
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="delaybsde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bessel-table", parents=[common], help="I0, I1, K0, K1 on log-spaced points")
    p.add_argument("--wmin", type=float, default=1e-3)
    p.add_argument("--wmax", type=float, default=50.0)
    p.add_argument("--count", type=int, default=50)
    p.set_defaults(func=cmd_bessel_table)

    p = sub.add_parser("kernel-table", parents=[common], help="psi, its s-derivative and diagonal on a grid")
    p.add_argument("--nodes", type=int, default=8)
    p.set_defaults(func=cmd_kernel_table)

    for mode in ("y", "z"):
        p = sub.add_parser(f"price-{mode}", parents=[common], help=f"static value, {mode.upper()}-averaged equation")
        p.set_defaults(func=lambda a, m=mode: cmd_price(a, m))
        p = sub.add_parser(f"path-{mode}", parents=[common], help="per-node solution along one seeded path")
        p.set_defaults(func=lambda a, m=mode: cmd_path(a, m))
        p = sub.add_parser(f"verify-{mode}", parents=[common], help="residual refinement study (JSON)")
        p.add_argument("--levels", type=int, default=3)
        p.set_defaults(func=lambda a, m=mode: cmd_verify(a, m))

    p = sub.add_parser("sweep", parents=[common], help="static value over a list of beta")
    p.add_argument("--betas", default="0,0.5,1,2,5,10")
    p.add_argument("--mode", choices=("y", "z"), default="y")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-rho-star", parents=[common], help="log penalty vs flat penalty for three step functions")
    p.set_defaults(func=cmd_compare_rho_star)

    p = sub.add_parser("counterexample", parents=[common], help="probability that Y(t) is negative")
    p.add_argument("--mode", choices=("y", "z"), default="y")
    p.add_argument("--time", type=float, default=0.5)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("check", parents=[common], help="run a named check or 'all'; JSON lines")
    p.add_argument("check_id", help="one of: all, " + ", ".join(CHECKS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="include wall-clock seconds (breaks byte-identity)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except (DomainError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
