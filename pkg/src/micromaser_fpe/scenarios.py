"""Scenario execution: single points, sweeps and oracle comparisons."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, fpe_engine, oracle
from .fpe_engine import NoSteadyStateError
from .models import (
    PointFailure,
    ResultRow,
    RunResult,
    Scenario,
)
from .pump_states import Z_STATE

TRUNCATION_TRUSTED = 1e-6


def build_manifest(scenario: Scenario) -> dict:
    """Fully resolved configuration; deterministic modes re-run bit-identically."""
    return {
        "config": scenario.model_dump(mode="json"),
        "seed": scenario.seed,
        "mode": scenario.mode,
        "version": __version__,
    }


def run_scenario(scenario: Scenario) -> RunResult:
    """Execute one scenario and collect rows, warnings and failures."""
    if scenario.mode == "sweep":
        return _run_sweep(scenario)
    rows, warnings, failures = _evaluate_point(scenario, point_id=0, swept=None)
    result = RunResult(
        rows=rows,
        warnings=warnings,
        discrepancies=_discrepancies_for(scenario),
        failures=failures,
        manifest=build_manifest(scenario),
    )
    _flag_nans(result)
    return result


def _evaluate_point(scenario: Scenario, point_id: int, swept):
    """Run one scenario point, folding expected error modes into rows/failures."""
    try:
        rows, warnings, failures = _run_point(scenario, point_id, swept)
    except NoSteadyStateError as exc:
        rows = [ResultRow(point_id=point_id, swept_value=swept, stable=False,
                          sf_valid=False, method="", note=str(exc))]
        warnings, failures = [], []
    except (ValueError, RuntimeError) as exc:
        rows, warnings = [], []
        failures = [PointFailure(point_id=point_id, swept_value=swept, error=str(exc))]
    return rows, warnings, failures


def _flag_nans(result: RunResult) -> None:
    for row in result.rows:
        if row.has_nan():
            row.note = (row.note + "; " if row.note else "") + "non-finite value"
            row.sf_valid = False
            result.failures.append(
                PointFailure(point_id=row.point_id, swept_value=row.swept_value,
                             error="non-finite value in row")
            )


def _discrepancies_for(scenario: Scenario) -> list[dict]:
    if scenario.pump.family != Z_STATE:
        return []
    # coherent-pump runs ship the condensed-formula comparison; the
    # reference side is the quadrature-verified exact closed form
    entries = []
    pump = scenario.pump.to_pump()
    u = abs(pump.alpha) ** 2
    m_abs = abs(pump.alpha * pump.beta)
    for b_angle in (0.5, 1.0, 1.5, 2.0, 2.5):
        ref = fpe_engine.q_ii_z_exact(u, m_abs, pump.b, b_angle)
        val = fpe_engine.q_ii_closed_z(pump.alpha, pump.beta, pump.b, b_angle)
        entries.append(fpe_engine._entry(
            "q_ii_closed_z", {"u": u, "b_bit": pump.b, "b_angle": b_angle},
            val, ref, fpe_engine.CLONE_QUAD_RTOL))
        gref = float(fpe_engine.gamma_factor_z(u, m_abs, pump.b, b_angle))
        gval = float(fpe_engine.gamma_factor_z_condensed(u, m_abs, pump.b, b_angle))
        entries.append(fpe_engine._entry(
            "gamma_factor_z_condensed", {"u": u, "b_bit": pump.b, "b_angle": b_angle},
            gval, gref, fpe_engine.CLONE_QUAD_RTOL))
    return entries


def _noise_row(scenario: Scenario, point_id: int, swept) -> tuple[ResultRow, list[str]]:
    pump = scenario.pump.to_pump()
    cavity = scenario.cavity.to_cavity(pump.n_atoms)
    if scenario.noise.optimize_b:
        report, implied_ct = fpe_engine.optimal_operating_point(
            pump, cavity.gT, scenario.noise.b_min, scenario.noise.b_max
        )
        note = f"optimize_b: implied CT = {implied_ct:.6g}"
    else:
        report = fpe_engine.noise_report(pump, cavity, method=scenario.noise.method)
        note = ""
    row = ResultRow(
        point_id=point_id,
        swept_value=swept,
        I_ss=report.i_ss,
        B=report.b,
        phi_ss=report.phi_ss,
        Gamma=report.gamma,
        xi=report.xi,
        i2_zero=report.i2_zero,
        Q_II=report.q_ii,
        stable=report.stable,
        sf_valid=report.sf_valid,
        method=report.method,
        note=note,
    )
    return row, list(report.warnings)


def _steady_rows(scenario: Scenario, point_id: int, swept) -> list[ResultRow]:
    pump = scenario.pump.to_pump()
    cavity = scenario.cavity.to_cavity(pump.n_atoms)
    if pump.family == Z_STATE:
        st = fpe_engine.steady_state_z(pump, cavity)
        states = [] if st is None else [st]
    else:
        states = fpe_engine.steady_state_clone(pump, cavity)
    if not states:
        return [ResultRow(point_id=point_id, swept_value=swept, stable=False,
                          method="closed-form", note="no root in search window")]
    rows = []
    for k, st in enumerate(states):
        rows.append(ResultRow(
            point_id=point_id + k,
            swept_value=swept,
            I_ss=st.i_ss,
            B=st.b,
            phi_ss=st.phi_ss,
            Gamma=st.gamma,
            stable=st.stable,
            method="closed-form",
        ))
    return rows


def _coefficients_row(scenario: Scenario, point_id: int, swept) -> ResultRow:
    pump = scenario.pump.to_pump()
    cavity = scenario.cavity.to_cavity(pump.n_atoms)
    i_val = scenario.field_point.I
    phi = scenario.field_point.phi
    if i_val is None:
        report = fpe_engine.noise_report(pump, cavity, method="quadrature")
        i_val = report.i_ss
        if phi is None:
            phi = report.phi_ss if report.phi_ss is not None else 0.0
    if phi is None:
        phi = 0.0
    dd = fpe_engine.diffusion_quadrature(pump, cavity, i_val, phi)
    return ResultRow(
        point_id=point_id,
        swept_value=swept,
        I_ss=i_val,
        B=cavity.gT * math.sqrt(i_val),
        phi_ss=phi,
        Q_II=dd.q_ii,
        method="quadrature",
        note=f"A_I = {dd.a_i:.9g}; A_phi = {dd.a_phi:.9g}; "
             f"Q_Iphi = {dd.q_iphi:.9g}; Q_phiphi = {dd.q_phiphi:.9g}",
    )


def _oracle_row(scenario: Scenario, point_id: int, swept):
    """Oracle steady-state row; quality-gate breaches are reported as failures."""
    pump = scenario.pump.to_pump()
    cavity = scenario.cavity.to_cavity(pump.n_atoms)
    warnings: list[str] = []
    failures: list[PointFailure] = []
    seed_i = None
    seed_phase = 0.0
    try:
        report = fpe_engine.noise_report(pump, cavity)
        seed_i = report.i_ss
        if report.phi_ss is not None:
            seed_phase = report.phi_ss
    except NoSteadyStateError:
        warnings.append("no stable semiclassical point; oracle seeded from vacuum")
    cfg = oracle.OracleConfig(
        pump=pump,
        gT=cavity.gT,
        CT=cavity.CT,
        n_max=scenario.oracle.n_max,
        conv_tol=scenario.oracle.conv_tol,
        max_cycles=scenario.oracle.max_cycles,
    )
    res = oracle.steady_state(cfg, seed_intensity=seed_i, seed_phase=seed_phase)
    trunc_ok = res.truncation_weight < TRUNCATION_TRUSTED
    note = f"cycles = {res.cycles}; truncation_weight = {res.truncation_weight:.3g}"
    if not res.converged:
        note += "; not converged"
        failures.append(PointFailure(
            point_id=point_id, swept_value=swept,
            error=f"oracle did not converge within {cfg.max_cycles} cycles"))
    if not trunc_ok:
        failures.append(PointFailure(
            point_id=point_id, swept_value=swept,
            error=f"truncation leakage {res.truncation_weight:.3g} at n_max = {cfg.n_max}"))
    row = ResultRow(
        point_id=point_id,
        swept_value=swept,
        I_ss=res.mean_n,
        B=cavity.gT * math.sqrt(res.mean_n) if res.mean_n > 0 else None,
        xi=res.mandel,
        stable=res.converged,
        sf_valid=None,
        trunc_ok=trunc_ok,
        method="oracle",
        note=note,
    )
    return row, warnings, failures


def _sde_row(scenario: Scenario, point_id: int, swept) -> ResultRow:
    pump = scenario.pump.to_pump()
    cavity = scenario.cavity.to_cavity(pump.n_atoms)
    spec = scenario.sde
    res = fpe_engine.sde_sample(
        pump, cavity, n_traj=spec.n_traj, dt=spec.dt, t_end=spec.t_end,
        seed=scenario.seed,
    )
    report = fpe_engine.noise_report(pump, cavity)
    return ResultRow(
        point_id=point_id,
        swept_value=swept,
        I_ss=res.i_mean,
        B=cavity.gT * math.sqrt(res.i_mean),
        Gamma=report.gamma,
        xi=res.xi_est,
        Q_II=report.q_ii,
        stable=True,
        sf_valid=report.sf_valid,
        method="SDE",
        note=f"stderr = {res.stderr:.6g}; linearized xi = {report.xi:.9g}; "
             f"steps = {res.steps}",
    )


def _run_point(scenario: Scenario, point_id: int, swept):
    """Dispatch one point; returns (rows, warnings, failures)."""
    mode = scenario.mode
    if mode == "noise":
        row, warnings = _noise_row(scenario, point_id, swept)
        return [row], warnings, []
    if mode == "steady-state":
        return _steady_rows(scenario, point_id, swept), [], []
    if mode == "coefficients":
        return [_coefficients_row(scenario, point_id, swept)], [], []
    if mode == "oracle":
        row, warnings, failures = _oracle_row(scenario, point_id, swept)
        return [row], warnings, failures
    if mode == "sde":
        return [_sde_row(scenario, point_id, swept)], [], []
    if mode == "compare":
        noise_row, warnings = _noise_row(scenario, point_id, swept)
        oracle_row, w2, failures = _oracle_row(scenario, point_id, swept)
        return [noise_row, oracle_row], warnings + w2, failures
    raise ValueError(f"unsupported mode {mode!r}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def apply_axis(scenario: Scenario, value: float) -> Scenario:
    """Scenario copy with the sweep axis set to the given value."""
    axis = scenario.sweep.axis
    if axis == "cavity.gT":
        return scenario.model_copy(
            update={"cavity": scenario.cavity.model_copy(update={"gT": value})}
        )
    if axis == "cavity.CT":
        return scenario.model_copy(
            update={"cavity": scenario.cavity.model_copy(update={"CT": value})}
        )
    pump = scenario.pump
    if axis == "pump.lambda1":
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"lambda1 = {value} outside [0, 1]")
        new = pump.model_copy(update={"lambda1": value})
    elif axis == "pump.alpha_abs":
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"|alpha| = {value} outside [0, 1]")
        new = _with_amplitudes(pump, value, math.sqrt(max(0.0, 1.0 - value**2)))
    elif axis == "pump.ab_abs":
        # |alpha beta| <= 1/2 for normalized amplitudes; branch with |beta| >= |alpha|
        if not 0.0 <= value <= 0.5:
            raise ValueError(f"|alpha beta| = {value} outside the feasible range [0, 0.5]")
        u = 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - 4.0 * value**2)))
        new = _with_amplitudes(pump, math.sqrt(u), math.sqrt(1.0 - u))
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return scenario.model_copy(update={"pump": new})


def _with_amplitudes(pump, alpha_abs: float, beta_abs: float):
    """Rescale amplitude magnitudes, keeping the existing phases."""
    a_old = complex(pump.alpha_re, pump.alpha_im)
    b_old = complex(pump.beta_re, pump.beta_im)
    a_ph = np.exp(1j * np.angle(a_old)) if a_old != 0 else 1.0
    b_ph = np.exp(1j * np.angle(b_old)) if b_old != 0 else 1.0
    a_new = alpha_abs * a_ph
    b_new = beta_abs * b_ph
    return pump.model_copy(update={
        "alpha_re": float(np.real(a_new)),
        "alpha_im": float(np.imag(a_new)),
        "beta_re": float(np.real(b_new)),
        "beta_im": float(np.imag(b_new)),
    })


def _run_sweep(scenario: Scenario) -> RunResult:
    """Evaluate the swept axis point by point; rows come out in axis order."""
    values = scenario.sweep.values()

    def evaluate(idx_value):
        idx, value = idx_value
        try:
            point = apply_axis(scenario, value).model_copy(update={"mode": "noise"})
        except ValueError as exc:
            return idx, [], [], [PointFailure(point_id=idx, swept_value=value,
                                              error=str(exc))]
        return idx, *_evaluate_point(point, idx, value)

    tasks = list(enumerate(values))
    if scenario.threads > 1:
        with ThreadPoolExecutor(max_workers=scenario.threads) as pool:
            outcomes = list(pool.map(evaluate, tasks))
    else:
        outcomes = [evaluate(t) for t in tasks]

    rows: list[ResultRow] = []
    warnings: list[str] = []
    failures: list[PointFailure] = []
    for _, point_rows, warns, fails in sorted(outcomes, key=lambda o: o[0]):
        rows.extend(point_rows)
        for w in warns:
            if w not in warnings:
                warnings.append(w)
        failures.extend(fails)
    result = RunResult(
        rows=rows,
        warnings=warnings,
        discrepancies=_discrepancies_for(scenario),
        failures=failures,
        manifest=build_manifest(scenario),
    )
    _flag_nans(result)
    return result
