"""Run one configured experiment end to end and emit its report files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report
from .config import Assembled, assemble
from .linalg import LinalgError
from .rates import (
    CurvatureFrame,
    RateReport,
    RatesError,
    accelerate,
    curvature_at,
    verdicts,
)
from .surrogate import Trace, iterate


@dataclass
class ReportBundle:
    name: str
    trace_csv_path: Path
    rates_json_path: Path
    plot_svg_path: Path | None
    trace: Trace
    theta_star: np.ndarray
    frame: CurvatureFrame
    report: RateReport

    @property
    def passed(self) -> bool:
        return self.report.passed


def locate_fixed_point(problem, trace: Trace, fd) -> np.ndarray:
    """Refine the trace's endpoint by one extrapolation step.

    Rate windows need the fixed point to more digits than the stopping
    tolerance gives; inverting the local linearization on the last increment
    supplies them whenever the iteration map is (locally) affine.
    """
    if len(trace) < 2:
        return trace.final.copy()
    prev, last = trace.iterates[-2], trace.iterates[-1]
    try:
        frame = curvature_at(problem, prev, fd)
        refined = accelerate(prev, last, frame)
    except (RatesError, LinalgError, np.linalg.LinAlgError):
        return last.copy()
    jump = float(np.linalg.norm(refined - last))
    step = float(np.linalg.norm(last - prev))
    if not np.all(np.isfinite(refined)) or jump > 10.0 * step + 1e-9:
        return last.copy()  # extrapolation is untrustworthy this far out
    if not problem.domain.contains(refined, tol=1e-9):
        return last.copy()
    return refined


def _trace_csv(trace: Trace, theta_star, problem) -> tuple[list[str], list[list[str]]]:
    q = trace.iterates[0].shape[0]
    header = ["n"] + [f"theta_{i}" for i in range(q)] + ["err_l2", "q_gap", "residual"]
    q_star = float(problem.eval_q(theta_star, theta_star))
    errors = trace.errors(theta_star)
    rows = []
    for n, point in enumerate(trace.iterates):
        row = [str(n)] + [report.fmt(c) for c in point] + [report.fmt(errors[n])]
        if n < len(trace.q_values):
            row.append(report.fmt(trace.q_values[n] - q_star))
            row.append(report.fmt(trace.residuals[n]))
        else:
            row.extend(["", ""])
        rows.append(row)
    return header, rows


def rates_payload(name: str, algorithm: str, assembled_label: str, theta_star, frame, rep) -> dict:
    return {
        "name": name,
        "algorithm": algorithm,
        "label": assembled_label,
        "theta_star": np.asarray(theta_star),
        "theory": {"rho_inf": rep.theory.rho_inf, "rho_sup": rep.theory.rho_sup},
        "empirical": {
            "slope": rep.empirical_slope,
            "successive_ratio": rep.successive_ratio,
            "rate": rep.empirical_rate,
            "q_gap_slope": rep.q_gap_slope,
            "q_gap_rate": rep.q_gap_rate,
            "superlinear": rep.superlinear,
            "span_warning": rep.span_warning,
        },
        "verdicts": dict(rep.verdicts),
        "tol_rate": rep.tol_rate,
        "curvature": {
            "a_star": frame.a_star,
            "b_star": frame.b_star,
            "a_tilde": frame.a_tilde,
            "b_tilde": frame.b_tilde,
            "basis": frame.basis,
            "asymmetry_diag": frame.asymmetry_diag,
            "h4_pass": frame.h4_pass,
        },
    }


def run_experiment(cfg: dict, out_dir, plot: bool = False) -> ReportBundle:
    """Assemble, iterate, analyze and write trace.csv / rates.json (/ plot.svg)."""
    asm: Assembled = assemble(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    trace = iterate(asm.problem, asm.theta0, asm.stop)
    theta_star = asm.theta_star if asm.theta_star is not None else locate_fixed_point(
        asm.problem, trace, asm.fd
    )
    frame = curvature_at(asm.problem, theta_star, asm.fd)
    rep = verdicts(trace, theta_star, frame, asm.problem)

    header, rows = _trace_csv(trace, theta_star, asm.problem)
    trace_path = report.write_csv(out / "trace.csv", header, rows)
    payload = rates_payload(asm.name, asm.algorithm, asm.problem.label, theta_star, frame, rep)
    payload["stop_reason"] = trace.stop_reason.value
    payload["n_iterates"] = len(trace)
    rates_path = report.write_text(out / "rates.json", report.dumps(payload))

    plot_path = None
    if plot:
        svg = report.svg_log_error_plot(
            trace.errors(theta_star), rep.theory.rho_sup, title=asm.name
        )
        plot_path = report.write_text(out / "plot.svg", svg)

    return ReportBundle(
        name=asm.name,
        trace_csv_path=trace_path,
        rates_json_path=rates_path,
        plot_svg_path=plot_path,
        trace=trace,
        theta_star=np.asarray(theta_star, dtype=float),
        frame=frame,
        report=rep,
    )
