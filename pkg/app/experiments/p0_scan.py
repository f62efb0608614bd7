"""L 块编码后选择概率 p₀ 的参数扫描"""
import logging
import os
from itertools import product

import numpy as np

from app.core.errors import InvalidConfigError
from app.engine.block_encoding import (
    ToeplitzL,
    build_be_circuit_L,
    check_applicability,
    p0_analytic_L,
    simulate_be,
)
from app.experiments.output import build_metadata, write_csv
from app.models.results import ExperimentResult
from app.schemas.experiment import ExperimentConfig
from app.schemas.report import LocalizedState, UniformState
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

SIMULATION_TOLERANCE = 1e-12

# 均匀态的另一种写法与局域态峰值的读数，与解析值并列写入元数据
REPORTED_UNIFORM = "(1-gamma_re^2)/16"
REPORTED_LOCALIZED_PEAK = 0.12
PEAK_GAMMAS = (0.9, 0.01, 0.01)     # (γ_adv, γ_diff, γ_re)


def _evaluate(n_sites: int, site: int, simulate: bool, gamma_adv: float, gamma_diff: float, gamma_re: float):
    toeplitz = ToeplitzL.from_gammas(n_sites, gamma_diff, gamma_adv, gamma_re)
    report = check_applicability(toeplitz.numbers)
    status = "fail" if report.any_fail else ("pass" if report.all_pass else "boundary")
    if report.any_fail:
        return [gamma_adv, gamma_diff, gamma_re, False, status, None, None, None]

    localized = p0_analytic_L(toeplitz, LocalizedState(site=site))
    uniform = p0_analytic_L(toeplitz, UniformState())
    simulated = None
    if simulate:
        psi = np.zeros(n_sites)
        psi[site] = 1.0
        _, simulated = simulate_be(build_be_circuit_L(toeplitz), psi)
    return [gamma_adv, gamma_diff, gamma_re, True, status, localized, uniform, simulated]


def _reference_values(n_sites: int, site: int, gamma_re: float) -> dict:
    """均匀态与局域态峰值处的解析 p₀ 以及文献值"""
    gamma_adv, gamma_diff, peak_re = PEAK_GAMMAS
    peak = ToeplitzL.from_gammas(n_sites, gamma_diff, gamma_adv, peak_re)
    return {
        "reference.uniform_formula": "(1-gamma_re)^2/16",
        "reference.uniform_p0": (1.0 - gamma_re) ** 2 / 16.0,
        "reference.uniform_formula_reported": REPORTED_UNIFORM,
        "reference.uniform_p0_reported": (1.0 - gamma_re ** 2) / 16.0,
        "reference.peak_gammas": list(PEAK_GAMMAS),
        "reference.peak_localized_p0": p0_analytic_L(peak, LocalizedState(site=site)),
        "reference.peak_localized_p0_reported": REPORTED_LOCALIZED_PEAK,
    }

def run_p0_scan(config: ExperimentConfig, out_dir: str) -> ExperimentResult:
    section = config.p0
    n_sites = section.n_sites
    if section.localized_site >= n_sites:
        raise InvalidConfigError(f"p0.localized_site={section.localized_site} 超出范围")
    if section.simulate and n_sites & (n_sites - 1):
        raise InvalidConfigError(f"p0.simulate 要求 N 为 2 的幂，实际 N={n_sites}")

    result = ExperimentResult(name="p0scan", out_dir=out_dir)
    references = _reference_values(n_sites, section.localized_site, section.gamma_re)
    metadata = build_metadata("p0scan", config.metadata(), references)
    columns = ["gamma_adv", "gamma_diff", "gamma_re", "applicable", "status", "p0_localized", "p0_uniform", "p0_simulated"]

    adv = np.linspace(section.gamma_adv_min, section.gamma_adv_max, section.gamma_adv_count)
    diff = np.linspace(section.gamma_diff_min, section.gamma_diff_max, section.gamma_diff_count)
    grid = list(product(adv, diff))
    logger.info("p₀ 扫描：N=%d，网格 %d×%d，γ_re=%g", n_sites, adv.size, diff.size, section.gamma_re)
    rows = ordered_map(
        lambda point: _evaluate(n_sites, section.localized_site, section.simulate, point[0], point[1], section.gamma_re),
        grid,
        config.run.threads,
    )

    sweep = np.linspace(section.sweep_gamma_re_min, section.sweep_gamma_re_max, section.sweep_gamma_re_count)
    sweep_rows = ordered_map(
        lambda gamma_re: _evaluate(
            n_sites, section.localized_site, section.simulate, section.sweep_gamma_adv, section.sweep_gamma_diff, gamma_re
        ),
        sweep,
        config.run.threads,
    )

    for row in rows + sweep_rows:
        localized, simulated = row[5], row[7]
        if simulated is not None and abs(simulated - localized) > SIMULATION_TOLERANCE:
            result.fail(f"γ_adv={row[0]:.4g} γ_diff={row[1]:.4g} γ_re={row[2]:.4g}：模拟与解析 p₀ 相差 {abs(simulated - localized):.3g}")

    result.files.append(write_csv(os.path.join(out_dir, "p0_scan.csv"), columns, rows, metadata))
    result.files.append(write_csv(os.path.join(out_dir, "p0_sweep.csv"), columns, sweep_rows, metadata))

    if config.run.plots:
        from app.experiments.plots import heatmap, line_plot

        values = np.array([np.nan if r[5] is None else r[5] for r in rows]).reshape(adv.size, diff.size).T
        result.files.append(heatmap(
            os.path.join(out_dir, "p0_localized.svg"), adv, diff, values, "γ_adv", "γ_diff", "p₀[L]",
        ))
        result.files.append(line_plot(
            os.path.join(out_dir, "p0_sweep.svg"),
            sweep,
            {
                "localized": [np.nan if r[5] is None else r[5] for r in sweep_rows],
                "uniform": [np.nan if r[6] is None else r[6] for r in sweep_rows],
            },
            "γ_re",
            "p₀[L]",
        ))
    return result
