"""Named verification checks with machine-readable reports.

Each check runs end to end from a :class:`SimConfig` and returns a
:class:`CheckReport`. Reports are serialized as sorted-key JSON lines so two
runs with the same seed produce identical bytes; wall-clock time is only
included on request.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from . import bessel
from .errors import DomainError
from .kernel import ModelParams, psi, psi_diag
from .montecarlo import RNG_NAME, RunningStats, SimConfig, probability_below, refinement_rates, simulate_paths
from .oracles import picard_solve
from .paths import TimeGrid
from .payoffs import Constant, ExpBM, ExpIntegral, StepFunction, radon_nikodym
from .solver_y import deterministic_solve, residual_y, solve_y_path, static_rho_y
from .solver_z import physical_path, residual_z, rho_star, solve_z_path, static_rho_z, two_factor_decomposition

__all__ = ["CheckReport", "CHECKS", "default_config", "run_check", "run_all", "residual_study", "beta_sweep"]


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    status: str
    observed: dict
    tolerance: dict
    config: dict = field(default_factory=dict)
    runtime_seconds: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self, timings: bool = False) -> dict:
        d = {
            "check_id": self.check_id,
            "status": self.status,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "config": self.config,
        }
        if timings and self.runtime_seconds is not None:
            d["runtime_seconds"] = self.runtime_seconds
        return d

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(_plain(self.to_dict(timings)), sort_keys=True)


def _plain(x):
    """Convert numpy scalars/arrays to built-in types for JSON."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


UNIT = ModelParams(1.0, 1.0)
RESIDUAL_TIMES = (0.25, 0.5, 0.75)


# --------------------------------------------------------------------------
# reusable studies
# --------------------------------------------------------------------------


def residual_study(mode: str, payoff, params: ModelParams, config: SimConfig, times=RESIDUAL_TIMES, levels: int = 3,
                   batch_size: int = 1000) -> dict:
    """Mean-square residual on nested grids ``config.grid_steps * 2**j``.

    Paths are drawn once on the finest grid and subsampled, so every level
    sees the same trajectories. ``mode`` is ``"y"`` (paths of ``W``) or
    ``"z"`` (paths of ``W~``).
    """
    if mode not in ("y", "z"):
        raise DomainError("mode must be 'y' or 'z'")
    solve, resid = (solve_y_path, residual_y) if mode == "y" else (solve_z_path, residual_z)
    finest = config.grid_steps * 2 ** (levels - 1)
    fine = replace(config, grid_steps=finest, horizon=params.horizon)
    stats = [[RunningStats() for _ in times] for _ in range(levels)]
    for batch in simulate_paths(fine, batch_size):
        for j in range(levels):
            path = batch.coarsen(2 ** (levels - 1 - j))
            r = resid(solve(payoff, path, params), path, params, times)
            for i in range(len(times)):
                stats[j][i].update(r[:, i] ** 2)
    mse = [[s.result().mean for s in row] for row in stats]
    stderr = [[s.result().stderr for s in row] for row in stats]
    rates = [refinement_rates([mse[j][i] for j in range(levels)]) for i in range(len(times))]
    return {
        "steps": [config.grid_steps * 2**j for j in range(levels)],
        "times": list(times),
        "mse": mse,
        "mse_stderr": stderr,
        "rates": rates,
    }


def beta_sweep(payoff, betas, horizon: float = 1.0, mode: str = "y") -> list[dict]:
    """Static value per ``beta`` with the bounds it is known to satisfy."""
    rows = []
    for beta in betas:
        params = ModelParams(float(beta), horizon)
        if mode == "y":
            mean = payoff.mean_p(horizon)
            rho = static_rho_y(payoff, params)
            low = math.exp(-beta * horizon) * mean
        elif mode == "z":
            mean = payoff.mean_p(horizon)
            rho = static_rho_z(payoff, params)
            low = payoff.essential_infimum()
        else:
            raise DomainError("mode must be 'y' or 'z'")
        rows.append({"beta": float(beta), "rho": rho, "bound_low": low, "bound_high": mean})
    return rows


def _i0_series(x: float) -> float:
    # plain power series; independent of the library's evaluation branches
    terms, k, term = [], 0, 1.0
    while term > 1e-18 or k < 5:
        terms.append(term)
        k += 1
        term *= (x / 2) ** 2 / (k * k)
    return math.fsum(terms)


# --------------------------------------------------------------------------
# individual checks
# --------------------------------------------------------------------------


def _bessel_wronskian(config):
    w = np.logspace(-6, np.log10(50.0), 200)
    dev = np.abs(w * (bessel.i0e(w) * bessel.k1e(w) + bessel.i1e(w) * bessel.k0e(w)) - 1.0)
    return {"max_deviation": float(dev.max())}, {"max_deviation": 1e-10}, bool(dev.max() <= 1e-10)


def _scaled_derivative_errors():
    w = np.linspace(0.1, 20.0, 200)
    h = 1e-6

    def cd(f):
        return (f(w + h) - f(w - h)) / (2 * h)

    # d/dw of e^{-w} I_n and e^{w} K_n
    i0e, i1e, k0e, k1e = bessel.i0e(w), bessel.i1e(w), bessel.k0e(w), bessel.k1e(w)
    return {
        "i0": float(np.max(np.abs(cd(bessel.i0e) - (i1e - i0e)))),
        "i1": float(np.max(np.abs(cd(bessel.i1e) - (i0e - i1e / w - i1e)))),
        "k0": float(np.max(np.abs(cd(bessel.k0e) - (k0e - k1e)))),
        "k1": float(np.max(np.abs(cd(bessel.k1e) - (-k0e - k1e / w + k1e)))),
    }


def _bessel_derivatives(config):
    errs = _scaled_derivative_errors()
    worst = max(errs.values())
    return {"max_abs_error": worst, **errs}, {"max_abs_error": 1e-5}, bool(worst <= 1e-5)


ANTIDERIVATIVES = {
    # integrand, antiderivative
    "w*I0 -> w*I1": (lambda w: w * bessel.i0(w), lambda w: w * bessel.i1(w)),
    "I1 -> I0": (bessel.i1, bessel.i0),
    "w*K0 -> -w*K1": (lambda w: w * bessel.k0(w), lambda w: -w * bessel.k1(w)),
    "K1 -> -K0": (bessel.k1, lambda w: -bessel.k0(w)),
}


def antiderivative_errors(intervals=((0.1, 1.0), (0.5, 3.0), (1.0, 8.0), (2.0, 20.0))) -> dict:
    out = {}
    for name, (g, anti) in ANTIDERIVATIVES.items():
        worst = 0.0
        for a, b in intervals:
            ref, _ = quad(g, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
            worst = max(worst, abs(float(anti(b)) - float(anti(a)) - ref) / abs(ref))
        out[name] = worst
    return out


def _bessel_antiderivatives(config):
    errs = antiderivative_errors()
    worst = max(errs.values())
    return {"max_rel_error": worst, **errs}, {"max_rel_error": 1e-8}, bool(worst <= 1e-8)


def _deter_picard(config):
    grid = TimeGrid(1.0, 4096)
    x = grid.nodes
    f = np.sin(3.0 * x) + 0.5 * np.sin(7.0 * x) ** 2
    obs = {}
    for beta in (0.5, 1.0, 2.0):
        y = deterministic_solve(0.3, f, x, ModelParams(beta, 1.0))
        ref = picard_solve(0.3, f, x, beta)
        obs[f"beta={beta}"] = float(np.max(np.abs(y - ref)))
    worst = max(obs.values())
    return {"sup_error": worst, **obs}, {"sup_error": 1e-6}, bool(worst <= 1e-6)


def _rate_verdict(study, bar=0.7):
    flat = [r for rates in study["rates"] for r in rates]
    decreasing = all(
        study["mse"][j + 1][i] < study["mse"][j][i] for j in range(len(study["mse"]) - 1) for i in range(len(study["times"]))
    )
    return min(flat), bool(decreasing and min(flat) >= bar)


def _y_residual(config):
    study = residual_study("y", ExpBM.martingale(2.0), UNIT, config)
    worst, ok = _rate_verdict(study)
    return {"min_rate": worst, **study}, {"min_rate": 0.7}, ok


def _z_residual(config):
    study = residual_study("z", ExpIntegral(), UNIT, config)
    worst, ok = _rate_verdict(study)
    return {"min_rate": worst, **study}, {"min_rate": 0.7}, ok


def _prop32_bounds(config):
    rho = static_rho_y(Constant(1.0), UNIT)
    oracle = 1.0 / _i0_series(2.0)
    err = abs(rho - oracle)
    inside = math.exp(-1.0) < rho < 1.0
    obs = {"rho": rho, "oracle": oracle, "abs_error": err, "lower": math.exp(-1.0), "upper": 1.0}
    return obs, {"abs_error": 1e-9}, bool(err <= 1e-9 and inside)


def _beta_limits(config):
    rows = beta_sweep(Constant(1.0), [1e-4, 1.0, 1e4])
    small, big = rows[0]["rho"], rows[2]["rho"]
    obs = {"rho": [r["rho"] for r in rows], "betas": [r["beta"] for r in rows],
           "small_beta_rel_gap": abs(small - 1.0), "large_beta_ratio": big}
    tol = {"small_beta_rel_gap": 2e-2, "large_beta_ratio": 1e-3}
    decreasing = rows[0]["rho"] > rows[1]["rho"] > rows[2]["rho"]
    return obs, tol, bool(obs["small_beta_rel_gap"] <= 2e-2 and big <= 1e-3 and decreasing)


def _negative_probability(mode, config, t=0.5):
    xi = ExpBM.martingale(2.0)
    solve = solve_y_path if mode == "y" else solve_z_path
    values = [solve(xi, batch, UNIT).at(t) for batch in simulate_paths(replace(config, horizon=1.0))]
    est = probability_below(np.concatenate(values), 0.0, 0.99)
    obs = {"p": est.mean, "stderr": est.stderr, "lower_99": est.lower, "upper_99": est.upper, "n": est.n}
    return obs, {"lower_99_greater_than": 0.0}, bool(est.lower > 0)


def _ex31(config):
    return _negative_probability("y", config)


def _ex42(config):
    return _negative_probability("z", config)


def example41_cases(horizon: float = 1.0) -> dict:
    """The three step functions contrasting the log penalty with a flat one."""
    cut = horizon / math.e
    return {
        "h=1": StepFunction.constant(1.0),
        "h=1{s>T/e}": StepFunction((cut,), (0.0, 1.0)),
        "h=1{s<=T/e}": StepFunction((cut,), (1.0, 0.0)),
    }


def example41_table(params: ModelParams = UNIT) -> list[dict]:
    rows = []
    for name, h in example41_cases(params.horizon).items():
        xi = ExpIntegral(h)
        rho, star = static_rho_z(xi, params), rho_star(xi, params)
        rows.append({"case": name, "rho": rho, "rho_star": star, "ratio": rho / star})
    return rows


def _ex41(config):
    rows = example41_table()
    eq, gt, lt = rows
    target = math.exp(1.0 / math.e)
    obs = {
        "rows": rows,
        "equal_gap": abs(eq["rho"] - eq["rho_star"]),
        "ratio_gt": gt["ratio"],
        "ratio_gt_error": abs(gt["ratio"] - target),
        "ratio_lt_error": abs(lt["ratio"] - 1.0 / target),
    }
    tol = {"equal_gap": 1e-12, "ratio_gt_error": 1e-9, "ratio_lt_error": 1e-9}
    ok = (
        obs["equal_gap"] <= 1e-12
        and gt["rho"] > gt["rho_star"]
        and lt["rho"] < lt["rho_star"]
        and obs["ratio_gt_error"] <= 1e-9
        and obs["ratio_lt_error"] <= 1e-9
    )
    return obs, tol, bool(ok)


def _measure_change(config):
    xi = ExpIntegral()
    n_stats, nx_stats = RunningStats(), RunningStats()
    for batch in simulate_paths(replace(config, horizon=1.0)):
        n = radon_nikodym(batch, UNIT)
        n_stats.update(n)
        nx_stats.update(n * xi.terminal(batch))
    en, enx = n_stats.result(), nx_stats.result()
    target = xi.mean_q(UNIT)
    obs = {
        "mean_N": en.mean, "stderr_N": en.stderr, "z_N": (en.mean - 1.0) / en.stderr,
        "mean_N_xi": enx.mean, "stderr_N_xi": enx.stderr, "target_N_xi": target,
        "z_N_xi": (enx.mean - target) / enx.stderr,
    }
    return obs, {"abs_z": 3.0}, bool(en.within(1.0) and enx.within(target))


def _kernel_bounds(config):
    params = UNIT
    t = np.linspace(0.0, 0.999, 60)
    worst = 0.0
    ok = True
    for tt in t:
        s = np.linspace(0.0, tt, 40)
        col = psi(s, tt, params)
        lo, hi = psi(0.0, tt, params), psi_diag(tt, params)
        slack = 1e-14 * hi  # psi and psi_diag round differently on the diagonal
        ok &= bool(lo > 0 and np.all(col >= lo - slack) and np.all(col <= hi + slack) and hi <= 1 + 1e-14)
        ok &= bool(np.all(np.diff(col) >= -slack))
        worst = max(worst, float(abs(psi(tt, tt, params) - hi)))
    diag = psi_diag(np.linspace(0, 1, 200), params)
    ok &= bool(np.all(np.diff(diag) > 0))
    return {"diag_vs_psi": worst, "chain_holds": ok}, {"diag_vs_psi": 1e-10}, bool(ok and worst <= 1e-10)


def _z_beta_monotone(config):
    xi = ExpIntegral()
    betas = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
    rho = [static_rho_z(xi, ModelParams(b, 1.0)) for b in betas]
    big = static_rho_z(xi, ModelParams(1e4, 1.0))
    ok = all(a > b for a, b in zip(rho, rho[1:])) and abs(rho[0] - xi.mean_p(1.0)) <= 1e-15 and big <= 1e-3
    return {"betas": betas, "rho": rho, "rho_at_1e4": big}, {"rho_at_1e4": 1e-3}, bool(ok)


def _z_upper_bound(config):
    # path-wise: Y(t) <= E~[xi | F_t] and, via the shifted path, Y(t) <= E[xi | F_t]
    xi = ExpIntegral()
    worst_q, worst_p = -np.inf, -np.inf
    small = replace(config, n_paths=min(config.n_paths, 2000), horizon=1.0)
    for batch in simulate_paths(small):
        for t in RESIDUAL_TIMES:
            x, penalty = two_factor_decomposition(xi, batch, UNIT, t)
            y = x - penalty
            vp = xi.conditional_mean_p(physical_path(batch, UNIT))[..., batch.grid.index_of(t)]
            worst_q = max(worst_q, float(np.max(y - x)))
            worst_p = max(worst_p, float(np.max(y - vp)))
    return {"max_y_minus_vq": worst_q, "max_y_minus_vp": worst_p}, {"max_excess": 0.0}, bool(worst_q <= 0 and worst_p <= 0)


@dataclass(frozen=True)
class _Entry:
    run: object
    description: str
    overrides: dict


CHECKS: dict[str, _Entry] = {
    "bessel.wronskian": _Entry(_bessel_wronskian, "w(I0 K1 + I1 K0) = 1 on [1e-6, 50]", {}),
    "bessel.derivatives": _Entry(_bessel_derivatives, "first-derivative relations by central differences", {}),
    "bessel.antiderivatives": _Entry(_bessel_antiderivatives, "antiderivative relations against adaptive quadrature", {}),
    "deter.picard": _Entry(_deter_picard, "deterministic delay equation vs Picard iteration", {}),
    "y.residual": _Entry(_y_residual, "Y-averaged equation residual refinement", {"n_paths": 20_000, "grid_steps": 512}),
    "prop3.2.bounds": _Entry(_prop32_bounds, "rho = 1/I0(2) inside (e^-1, 1)", {}),
    "prop3.2.beta-limits": _Entry(_beta_limits, "beta -> 0 and beta -> 1e4 limits of rho", {}),
    "ex3.1.counterexample": _Entry(_ex31, "P(Y(0.5) < 0) > 0 for exp(2W(T) - 2T)", {"n_paths": 100_000, "grid_steps": 512}),
    "ex4.1.table": _Entry(_ex41, "rho vs constant-penalty value for three step functions", {}),
    "z.residual": _Entry(_z_residual, "Z-averaged equation residual refinement", {"n_paths": 20_000, "grid_steps": 512}),
    "ex4.2.counterexample": _Entry(_ex42, "Q~(Y(0.5) < 0) > 0 for exp(2W(T) - 2T)", {"n_paths": 100_000, "grid_steps": 512}),
    "prop4.1.measure-change": _Entry(_measure_change, "E[N] = 1 and E[N xi] = E~[xi]", {"n_paths": 100_000, "grid_steps": 512}),
    "kernel.bounds": _Entry(_kernel_bounds, "0 < psi(0,t) <= psi(s,t) <= psi(t,t) <= 1", {}),
    "prop4.2.beta-monotone": _Entry(_z_beta_monotone, "static Z value decreasing in beta", {}),
    "prop4.3.upper-bound": _Entry(_z_upper_bound, "Y(t) below both conditional means, path-wise", {"n_paths": 2000, "grid_steps": 512}),
}


def default_config(check_id: str, seed: int = 0, n_paths: int | None = None, grid_steps: int | None = None) -> SimConfig:
    """The check's own configuration, with any explicit overrides applied."""
    entry = _lookup(check_id)
    kw = dict(entry.overrides)
    if n_paths is not None:
        kw["n_paths"] = n_paths
    if grid_steps is not None:
        kw["grid_steps"] = grid_steps
    return SimConfig(seed=seed, **kw)


def _lookup(check_id):
    try:
        return CHECKS[check_id]
    except KeyError:
        raise DomainError(f"unknown check {check_id!r}; available: {', '.join(sorted(CHECKS))}") from None


def run_check(check_id: str, config: SimConfig | None = None) -> CheckReport:
    entry = _lookup(check_id)
    config = config or default_config(check_id)
    start = time.perf_counter()
    observed, tolerance, ok = entry.run(config)
    elapsed = time.perf_counter() - start
    cfg = {"n_paths": config.n_paths, "grid_steps": config.grid_steps, "seed": config.seed, "rng": RNG_NAME}
    return CheckReport(check_id, "pass" if ok else "fail", _plain(observed), _plain(tolerance), cfg, elapsed)


def _run_one(args):
    check_id, config = args
    return run_check(check_id, config)


def run_all(configs: dict[str, SimConfig], jobs: int = 1) -> list[CheckReport]:
    """Run the given checks; output order follows ``configs`` regardless of ``jobs``."""
    items = list(configs.items())
    if jobs <= 1:
        return [_run_one(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, items))
