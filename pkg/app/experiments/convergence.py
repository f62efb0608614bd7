"""Carleman 截断阶数收敛实验"""
import logging
import os

import numpy as np

from app.core.errors import FiniteTimeBlowupError
from app.engine.adr import box_field, localized_field, logistic_reference_errors, uniform_field
from app.engine.carleman import absolute_error_series, convergence_study
from app.experiments.output import build_metadata, write_csv
from app.models.lattice import LatticeField
from app.models.results import ExperimentResult
from app.schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


def initial_field(config: ExperimentConfig) -> LatticeField:
    initial, n_sites = config.initial, config.adr.n_sites
    if initial.kind == "box":
        return box_field(initial.box(), n_sites)
    if initial.kind == "localized":
        return localized_field(n_sites, initial.site, initial.height)
    return uniform_field(n_sites, initial.height)


def _padded(values: np.ndarray, length: int) -> np.ndarray:
    result = np.full(length, np.nan)
    result[: values.size] = values
    return result


def run_convergence(config: ExperimentConfig, out_dir: str) -> ExperimentResult:
    params = config.adr.to_params()
    phi0 = initial_field(config)
    n_steps = config.run.n_steps
    orders = config.carleman.orders
    result = ExperimentResult(name="convergence", out_dir=out_dir)

    derived = params.derived()
    phi_max = float(np.max(np.abs(phi0.values)))
    logger.info(
        "收敛实验：N=%d，K=%s，%d 步，Pe_cell=%.4g，R=%.4g",
        params.n_sites, orders, n_steps, derived.peclet_cell, phi_max * params.b / params.a,
    )

    study = convergence_study(
        params, phi0, orders, n_steps,
        guard=config.carleman.guard, workers=config.run.threads, keep_trajectories=True,
    )

    nonfinite = [row.order for row in study.rows if not row.finite]
    extra = {
        "derived.gamma_d": derived.gamma_d,
        "derived.gamma_a": derived.gamma_a,
        "derived.gamma_r": derived.gamma_r,
        "derived.peclet_cell": derived.peclet_cell,
        "derived.damkohler_adv": derived.damkohler_adv,
        "derived.damkohler_diff": derived.damkohler_diff,
        "derived.nonlinearity_strength": phi_max * params.b / params.a,
        "result.log_slope": study.log_slope,
        "result.nonfinite_orders": nonfinite or "none",
    }
    metadata = build_metadata("convergence", config.metadata(), extra)
    for order in nonfinite:
        result.fail(f"K={order} 的轨迹出现溢出")

    result.files.append(write_csv(
        os.path.join(out_dir, "convergence.csv"),
        ["K", "max_rel_err", "mean_rel_err", "t_star", "logistic_exact_err", "logistic_euler_err", "finite"],
        [
            [row.order, row.max_relative, row.mean_relative, row.t_star,
             row.logistic_exact_error, row.logistic_euler_error, row.finite]
            for row in study.rows
        ],
        metadata,
    ))

    length = n_steps + 1
    times = params.dt * np.arange(length)
    snapshots = np.unique(np.linspace(0, n_steps, config.carleman.snapshots).round().astype(int))
    euler = study.euler_trajectory
    for order, trajectory, series in zip(orders, study.carleman_trajectories, study.series):
        try:
            reference = logistic_reference_errors(phi_max, params.a, params.b, order, params.dt, n_steps)
            exact_rel, euler_rel = reference.exact_relative, reference.euler_relative
        except FiniteTimeBlowupError:
            exact_rel = euler_rel = np.full(length, np.nan)
        relative = _padded(series.relative, length)
        absolute = absolute_error_series(euler, trajectory)
        result.files.append(write_csv(
            os.path.join(out_dir, f"trajectory_K{order}.csv"),
            ["step", "time", "rel_err", "abs_err", "logistic_exact_rel_err", "logistic_euler_rel_err"],
            zip(range(length), times, relative, absolute, exact_rel, euler_rel),
            {**metadata, "K": order},
        ))
        result.files.append(write_csv(
            os.path.join(out_dir, f"profiles_K{order}.csv"),
            ["step", "time", "site", "phi_euler", "phi_carleman"],
            [
                [step, times[step], site, euler[step, site], trajectory[step, site]]
                for step in snapshots for site in range(params.n_sites)
            ],
            {**metadata, "K": order},
        ))

    if config.run.plots:
        _plot(out_dir, result, study, orders, times, snapshots)
    return result


def _plot(out_dir, result, study, orders, times, snapshots) -> None:
    from app.experiments.plots import line_plot

    curves = {f"K={k}": _padded(s.relative, times.size) for k, s in zip(orders, study.series)}
    result.files.append(line_plot(
        os.path.join(out_dir, "relative_error.svg"), times, curves, "t", "max relative error", logy=True,
    ))
    result.files.append(line_plot(
        os.path.join(out_dir, "k_convergence.svg"), orders,
        {"max Δ_R(t*)": [row.max_relative for row in study.rows]}, "K", "max relative error", logy=True,
    ))
    last = study.carleman_trajectories[-1]
    sites = np.arange(last.shape[1])
    profiles = {}
    for step in snapshots:
        profiles[f"Euler t={times[step]:.3g}"] = study.euler_trajectory[step]
        profiles[f"Carleman t={times[step]:.3g}"] = last[step]
    result.files.append(line_plot(os.path.join(out_dir, "profiles.svg"), sites, profiles, "site", "φ"))
