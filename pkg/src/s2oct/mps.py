"""Free-format MPS writer and a reader for the subset the writer emits."""
from __future__ import annotations

import math
from pathlib import Path

from .errors import FormatError
from .model import BINARY, CONTINUOUS, Constraint, MilpModel, Variable

OBJ_ROW = "obj"
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(x: float) -> str:
    return repr(float(x))


def model_to_mps(model: MilpModel) -> str:
    nv = len(model.variables)
    column_entries: list[list[tuple[str, float]]] = [[] for _ in range(nv)]
    for j, a in model.objective:
        column_entries[j].append((OBJ_ROW, a))
    for c in model.constraints:
        for j, a in c.terms:
            column_entries[j].append((c.name, a))

    out = [f"NAME {model.name}", "OBJSENSE", "    MIN", "ROWS", f" N  {OBJ_ROW}"]
    out += [f" {_SENSE_CODE[c.sense]}  {c.name}" for c in model.constraints]
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for v, entries in zip(model.variables, column_entries):
        is_int = v.kind == BINARY
        if is_int != in_int:
            tag = "INTORG" if is_int else "INTEND"
            out.append(f"    MARKER{marker}  'MARKER'  '{tag}'")
            marker += 1
            in_int = is_int
        if not entries:
            entries = [(OBJ_ROW, 0.0)]
        out += [f"    {v.name}  {row}  {_num(a)}" for row, a in entries]
    if in_int:
        out.append(f"    MARKER{marker}  'MARKER'  'INTEND'")
    out.append("RHS")
    out += [f"    RHS  {c.name}  {_num(c.rhs)}" for c in model.constraints if c.rhs != 0.0]
    out.append("BOUNDS")
    for v in model.variables:
        lo, up = v.lower, v.upper
        if lo == -math.inf and up == math.inf:
            out.append(f" FR BND  {v.name}")
            continue
        if lo == -math.inf:
            out.append(f" MI BND  {v.name}")
        else:
            out.append(f" LO BND  {v.name}  {_num(lo)}")
        if up == math.inf:
            out.append(f" PL BND  {v.name}")
        else:
            out.append(f" UP BND  {v.name}  {_num(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_model_file(model: MilpModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model_to_mps(model), encoding="ascii")
    return path


def read_model_file(path) -> MilpModel:
    """Parse an MPS file produced by :func:`write_model_file`."""
    name = "model"
    section = None
    rows: list[tuple[str, str]] = []
    col_order: list[str] = []
    col_kind: dict[str, str] = {}
    col_terms: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    in_int = False
    for raw in Path(path).read_text(encoding="ascii").splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            section = tok[0]
            if section == "NAME" and len(tok) > 1:
                name = tok[1]
            continue
        if section == "OBJSENSE":
            if tok[0] not in ("MIN", "MINIMIZE"):
                raise FormatError("only minimization models are supported")
        elif section == "ROWS":
            rows.append((tok[0], tok[1]))
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            col = tok[0]
            if col not in col_kind:
                col_order.append(col)
                col_kind[col] = BINARY if in_int else CONTINUOUS
                col_terms[col] = []
            for k in range(1, len(tok) - 1, 2):
                col_terms[col].append((tok[k], float(tok[k + 1])))
        elif section == "RHS":
            for k in range(1, len(tok) - 1, 2):
                rhs[tok[k]] = float(tok[k + 1])
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            lo_up = bounds.setdefault(col, [0.0, math.inf])
            if kind == "FR":
                lo_up[:] = [-math.inf, math.inf]
            elif kind == "MI":
                lo_up[0] = -math.inf
            elif kind == "PL":
                lo_up[1] = math.inf
            elif kind == "LO":
                lo_up[0] = float(tok[3])
            elif kind == "UP":
                lo_up[1] = float(tok[3])
            elif kind == "FX":
                lo_up[:] = [float(tok[3])] * 2
            elif kind == "BV":
                lo_up[:] = [0.0, 1.0]
            else:
                raise FormatError(f"unsupported bound type {kind}")
        elif section != "ENDATA":
            raise FormatError(f"unsupported MPS section {section}")

    obj_row = next(r for code, r in rows if code == "N")
    cidx = {c: k for k, c in enumerate(col_order)}
    row_terms: dict[str, list[tuple[int, float]]] = {r: [] for _, r in rows}
    for col in col_order:
        for r, a in col_terms[col]:
            if r not in row_terms:
                raise FormatError(f"column {col} references unknown row {r}")
            row_terms[r].append((cidx[col], a))
    variables = tuple(
        Variable(c, col_kind[c], *bounds.get(c, [0.0, math.inf])) for c in col_order
    )
    constraints = tuple(
        Constraint(r, tuple(row_terms[r]), _CODE_SENSE[code], rhs.get(r, 0.0))
        for code, r in rows
        if code != "N"
    )
    objective = tuple((j, a) for j, a in row_terms[obj_row] if a != 0.0)
    return MilpModel(name, variables, constraints, objective)
