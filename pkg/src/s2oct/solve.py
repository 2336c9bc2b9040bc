"""Run a MIP backend on a serialized model and turn the result into a report.

Two backends exchange files with the solver:

``highs``
    Loads the written MPS file into an in-process HiGHS instance (``highspy``).
``command``
    Runs an external executable from a command template and parses the
    HiGHS-style solution file it writes. The executable is taken from
    ``SolverConfig.command``, or from the ``S2OCT_SOLVER`` environment variable.

After a solve with an incumbent, the returned point is polished. The binaries
are rounded and fixed, and the LP is re-solved. Among the resulting optima,
the point with the smallest largest hyperplane excursion
``|omega_b . x_i - gamma_b|`` is selected.
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import SolutionIntegrityError, SolverNotFoundError
from .model import (
    BINARY,
    CONTINUOUS,
    FEASIBILITY_TOL,
    Constraint,
    MilpModel,
    SolveReport,
    SolveStatus,
    Variable,
    extract_solution,
)
from .mps import write_model_file

log = logging.getLogger(__name__)

SOLVER_ENV = "S2OCT_SOLVER"
DEFAULT_COMMAND = "{solver} --model_file {model} --solution_file {solution} --options_file {options}"
HIGHS_DEFAULT_REL_GAP = 1e-4
HIGHS_DEFAULT_ABS_GAP = 1e-6
FEASIBILITY_FIRST_EFFORT = 0.3
POLISH_OBJ_SLACK = 1e-9
TIME_SLACK = 0.05


class Emphasis(str, enum.Enum):
    BALANCED = "balanced"
    FEASIBILITY_FIRST = "feasibility"


@dataclass(frozen=True)
class SolverConfig:
    time_limit_seconds: float = 7200.0
    emphasis: Emphasis = Emphasis.FEASIBILITY_FIRST
    threads: int = 1
    mip_gap: Optional[float] = None
    solver_id: str = "highs"
    command: Optional[str] = None
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        object.__setattr__(self, "emphasis", Emphasis(self.emphasis))
        if not self.time_limit_seconds > 0:
            raise ValueError("time_limit_seconds must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.mip_gap is not None and self.mip_gap < 0:
            raise ValueError("mip_gap must be nonnegative")
        if self.solver_id not in ("highs", "command"):
            raise ValueError(f"unknown solver_id {self.solver_id!r}")

    @property
    def effective_gap(self) -> float:
        return HIGHS_DEFAULT_REL_GAP if self.mip_gap is None else self.mip_gap


@dataclass
class RawResult:
    status: SolveStatus
    values: Optional[np.ndarray] = None
    objective: float = math.nan
    bound: float = math.nan
    runtime: float = 0.0
    diagnostics: str = ""
    notes: list = field(default_factory=list)


def _highs_options(config: SolverConfig, is_mip: bool) -> tuple[dict, list]:
    opts = {
        "time_limit": float(config.time_limit_seconds),
        "random_seed": int(config.seed),
        "threads": int(config.threads),
        "primal_feasibility_tolerance": 1e-9,
        "mip_feasibility_tolerance": 1e-7,
    }
    notes = []
    if is_mip:
        if config.mip_gap is not None:
            opts["mip_rel_gap"] = float(config.mip_gap)
            opts["mip_abs_gap"] = min(HIGHS_DEFAULT_ABS_GAP, float(config.mip_gap)) or 1e-9
        if config.emphasis is Emphasis.FEASIBILITY_FIRST:
            opts["mip_heuristic_effort"] = FEASIBILITY_FIRST_EFFORT
            notes.append(f"emphasis=feasibility -> mip_heuristic_effort={FEASIBILITY_FIRST_EFFORT}")
    return opts, notes


_STATUS_TEXT = {
    "optimal": SolveStatus.OPTIMAL,
    "infeasible": SolveStatus.INFEASIBLE,
    "time limit reached": SolveStatus.TIME_LIMIT,
}


def _run_highspy(model: MilpModel, mps: Path, sol: Path, config: SolverConfig, is_mip: bool) -> RawResult:
    try:
        import highspy
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise SolverNotFoundError("highspy is not installed") from exc
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(str(mps)) != highspy.HighsStatus.kOk:
        return RawResult(SolveStatus.ERROR, diagnostics=f"HiGHS could not read {mps}")
    opts, notes = _highs_options(config, is_mip)
    for k, v in opts.items():
        h.setOptionValue(k, v)
    t0 = time.perf_counter()
    run_status = h.run()
    runtime = time.perf_counter() - t0
    ms = h.getModelStatus()
    text = h.modelStatusToString(ms)
    info = h.getInfo()
    has_primal = info.primal_solution_status == 2
    status = _STATUS_TEXT.get(text.lower(), SolveStatus.ERROR)
    if run_status == highspy.HighsStatus.kError:
        status = SolveStatus.ERROR
    values = None
    if has_primal:
        h.writeSolution(str(sol), 0)
        # column order of the loaded model follows the MPS file
        values = np.array(h.getSolution().col_value, dtype=float)
    bound = info.mip_dual_bound if is_mip else info.objective_function_value
    return RawResult(
        status=status,
        values=values,
        objective=info.objective_function_value if has_primal else math.nan,
        bound=float(bound),
        runtime=runtime,
        diagnostics=f"HiGHS model status: {text}",
        notes=notes,
    )


def parse_highs_solution(path, model: MilpModel) -> tuple[str, Optional[np.ndarray], float]:
    """Parse a HiGHS raw solution file (style 0).

    Returns ``(model status text, values or None, objective)``.
    """
    lines = Path(path).read_text().splitlines()
    status_text = ""
    values = None
    objective = math.nan
    k = 0
    while k < len(lines):
        line = lines[k].strip()
        if line == "Model status" and k + 1 < len(lines):
            status_text = lines[k + 1].strip()
            k += 2
            continue
        if line.startswith("Model status:"):
            status_text = line.split(":", 1)[1].strip()
        if line == "# Primal solution values":
            feasible = k + 1 < len(lines) and lines[k + 1].strip() == "Feasible"
            k += 2
            if not feasible:
                continue
            while k < len(lines) and not lines[k].startswith("# Columns"):
                if lines[k].startswith("Objective"):
                    objective = float(lines[k].split()[1])
                k += 1
            ncols = int(lines[k].split()[2])
            values = np.zeros(len(model.variables))
            for rec in lines[k + 1 : k + 1 + ncols]:
                name, val = rec.split()
                values[model.var(name)] = float(val)
            k += 1 + ncols
            continue
        k += 1
    return status_text, values, objective


def _resolve_command(config: SolverConfig) -> str:
    solver = os.environ.get(SOLVER_ENV, "highs")
    template = config.command or DEFAULT_COMMAND
    if "{solver}" in template:
        exe = shlex.split(solver)[0]
        if shutil.which(exe) is None and not Path(exe).exists():
            raise SolverNotFoundError(
                f"solver executable {exe!r} not found; set {SOLVER_ENV} or SolverConfig.command"
            )
    return template.replace("{solver}", solver)


_DUAL_BOUND_RE = re.compile(r"Dual bound\s+(\S+)")


def _run_command(model: MilpModel, mps: Path, sol: Path, config: SolverConfig, is_mip: bool) -> RawResult:
    template = _resolve_command(config)
    opts, notes = _highs_options(config, is_mip)
    opts_path = mps.with_suffix(".opt")
    opts_path.write_text("".join(f"{k} = {v}\n" for k, v in opts.items()))
    cmd = template.format(
        model=shlex.quote(str(mps)),
        solution=shlex.quote(str(sol)),
        options=shlex.quote(str(opts_path)),
        time_limit=config.time_limit_seconds,
        seed=config.seed,
        threads=config.threads,
    )
    if sol.exists():
        sol.unlink()
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            shlex.split(cmd),
            capture_output=True,
            text=True,
            timeout=config.time_limit_seconds * (1 + TIME_SLACK) + 30.0,
        )
    except subprocess.TimeoutExpired as exc:
        return RawResult(SolveStatus.ERROR, runtime=time.perf_counter() - t0, diagnostics=f"timeout: {exc}")
    except OSError as exc:
        raise SolverNotFoundError(f"could not start solver: {exc}") from exc
    runtime = time.perf_counter() - t0
    diag = (proc.stdout[-2000:] + proc.stderr[-2000:]).strip()
    if proc.returncode != 0 or not sol.exists():
        return RawResult(SolveStatus.ERROR, runtime=runtime, diagnostics=f"exit {proc.returncode}: {diag}")
    text, values, objective = parse_highs_solution(sol, model)
    status = _STATUS_TEXT.get(text.lower(), SolveStatus.ERROR)
    bound = math.nan
    if not is_mip:
        bound = objective
    else:
        hit = _DUAL_BOUND_RE.findall(proc.stdout)
        if hit:
            try:
                bound = float(hit[-1])
            except ValueError:
                pass
    return RawResult(status, values, objective, bound, runtime, diag, notes)


def _run_backend(model: MilpModel, config: SolverConfig, run_dir: Path, stem: str) -> RawResult:
    is_mip = any(v.kind == BINARY for v in model.variables)
    mps = write_model_file(model, run_dir / f"{stem}.mps")
    sol = run_dir / f"{stem}.sol"
    if config.solver_id == "highs":
        return _run_highspy(model, mps, sol, config, is_mip)
    return _run_command(model, mps, sol, config, is_mip)


def _fixed_binaries(model: MilpModel, values: np.ndarray) -> MilpModel:
    variables = tuple(
        Variable(v.name, CONTINUOUS, float(round(x)), float(round(x))) if v.kind == BINARY else v
        for v, x in zip(model.variables, values)
    )
    return dataclasses.replace(model, name=f"{model.name}_fixed", variables=variables)


def _min_excursion(model: MilpModel, cap: float) -> MilpModel:
    nv = len(model.variables)
    tau = Variable("tau", CONTINUOUS, 0.0, math.inf)
    rows = list(model.constraints)
    for name, terms in model.margins:
        t = [(nv, 1.0)]
        rows.append(Constraint(f"up_{name}", tuple(sorted([(j, -a) for j, a in terms] + t)), ">=", 0.0))
        rows.append(Constraint(f"lo_{name}", tuple(sorted(list(terms) + t)), ">=", 0.0))
    rows.append(Constraint("objcap", model.objective, "<=", cap))
    return dataclasses.replace(
        model,
        name=f"{model.name}_excursion",
        variables=model.variables + (tau,),
        constraints=tuple(rows),
        objective=((nv, 1.0),),
    )


def _polish(model: MilpModel, values: np.ndarray, config: SolverConfig, run_dir: Path):
    lp_config = dataclasses.replace(config, polish=False)
    fixed = _fixed_binaries(model, values)
    first = _run_backend(fixed, lp_config, run_dir, "polish_fixed")
    if first.status is not SolveStatus.OPTIMAL or first.values is None:
        return None, f"polish skipped: fixed-binary LP returned {first.status.value}"
    obj = fixed.objective_value(first.values)
    if not model.margins:
        return first.values, "polished: fixed-binary LP"
    cap = obj + POLISH_OBJ_SLACK * max(1.0, abs(obj))
    second = _run_backend(_min_excursion(fixed, cap), lp_config, run_dir, "polish_excursion")
    if second.status is not SolveStatus.OPTIMAL or second.values is None:
        return first.values, "polished: fixed-binary LP (excursion stage failed)"
    return second.values[: len(model.variables)], "polished: fixed-binary LP + min excursion"


def solve(model: MilpModel, config: SolverConfig | None = None, run_dir=None) -> SolveReport:
    """Solve ``model`` and return a verified :class:`SolveReport`.

    Raises :class:`SolverNotFoundError` when the backend is unavailable.
    Solver crashes and integrity failures become ``status=Error`` reports.
    """
    config = config or SolverConfig()
    with tempfile.TemporaryDirectory(prefix="s2oct_") as tmp:
        rdir = Path(run_dir) if run_dir is not None else Path(tmp)
        rdir.mkdir(parents=True, exist_ok=True)
        try:
            raw = _run_backend(model, config, rdir, "model")
        except SolverNotFoundError:
            raise
        except Exception as exc:  # solver crash
            log.exception("backend failure")
            return SolveReport(SolveStatus.ERROR, diagnostics=f"{type(exc).__name__}: {exc}")

        status = raw.status
        notes = list(raw.notes)
        if raw.values is not None and status is SolveStatus.TIME_LIMIT:
            status = SolveStatus.FEASIBLE
        if raw.values is None or status is SolveStatus.ERROR:
            if status is SolveStatus.OPTIMAL:
                status = SolveStatus.ERROR
            return SolveReport(
                status,
                runtime_seconds=raw.runtime,
                best_bound=raw.bound,
                diagnostics=raw.diagnostics,
                notes=notes,
            )
        if status is SolveStatus.OPTIMAL:
            gap_ok = abs(raw.objective - raw.bound) <= config.effective_gap * max(1.0, abs(raw.objective)) + HIGHS_DEFAULT_ABS_GAP
            if not gap_ok:
                notes.append("optimality claim without matching bound; downgraded to Feasible")
                status = SolveStatus.FEASIBLE

        values = raw.values
        polished = False
        if config.polish:
            t0 = time.perf_counter()
            try:
                pv, note = _polish(model, values, config, rdir)
            except Exception as exc:
                pv, note = None, f"polish failed: {exc}"
            notes.append(f"{note} ({time.perf_counter() - t0:.3f}s)")
            if pv is not None:
                values, polished = pv, True
        try:
            report = extract_solution(model, values)
        except SolutionIntegrityError as exc:
            return SolveReport(SolveStatus.ERROR, runtime_seconds=raw.runtime, diagnostics=str(exc), notes=notes)

    report.status = status
    report.runtime_seconds = raw.runtime
    report.best_bound = raw.bound
    report.solver_objective = raw.objective
    report.polished = polished
    report.notes = notes
    report.diagnostics = raw.diagnostics
    if report.max_violation > FEASIBILITY_TOL:
        report.notes.append(f"returned point violates the model by {report.max_violation:.3g}")
    return report
