"""Fixed-layout MPS export of a PGS model.

Fields sit in the standard fixed columns (2, 5, 15, 25, 40, 50). Names are
never truncated, so a name longer than eight characters pushes the rest of
its line right. Names never contain spaces, so free-format readers (HiGHS,
CBC, GLPK ``--freemps``) parse the file unchanged.
"""
from pathlib import Path

import numpy as np

from .model import MilpModel


def _num(v: float) -> str:
    v = float(v)
    if v == 0:
        v = 0.0  # no "-0"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _pad(s: str, width: int) -> str:
    return s.ljust(width) if len(s) < width else s + " "


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    out = " " + _pad(f1, 3) + _pad(f2, 10) + _pad(f3, 10) + _pad(f4, 15) + _pad(f5, 10) + f6
    return out.rstrip()


def model_to_mps(model: MilpModel, name: str = "PGS") -> str:
    lines = [f"NAME          {name}", "OBJSENSE", "    MIN", "ROWS", _line("N", "OBJ")]
    for rn, s in zip(model.row_names, model.sense):
        lines.append(_line(s, rn))

    lines.append("COLUMNS")
    A = model.A.tocsc()
    in_int = False
    for c, cname in enumerate(model.col_names):
        if model.col_is_int[c] and not in_int:
            lines.append(_line("", "MARKER", "'MARKER'", "", "'INTORG'"))
            in_int = True
        elif not model.col_is_int[c] and in_int:
            lines.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
            in_int = False
        entries = []
        if model.cost[c] != 0:
            entries.append(("OBJ", model.cost[c]))
        lo, hi = A.indptr[c], A.indptr[c + 1]
        for r, v in zip(A.indices[lo:hi], A.data[lo:hi]):
            if v != 0:
                entries.append((model.row_names[r], v))
        if not entries:
            entries.append(("OBJ", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                lines.append(_line("", cname, pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
            else:
                lines.append(_line("", cname, pair[0][0], _num(pair[0][1])))
    if in_int:
        lines.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))

    lines.append("RHS")
    for rn, b in zip(model.row_names, model.rhs):
        if b != 0:
            lines.append(_line("", "RHS", rn, _num(b)))

    lines.append("BOUNDS")
    for c, cname in enumerate(model.col_names):
        lo, hi = model.lb[c], model.ub[c]
        if model.col_is_int[c] and lo == 0 and hi == 1:
            lines.append(_line("BV", "BND", cname))
        elif lo == hi:
            lines.append(_line("FX", "BND", cname, _num(lo)))
        else:
            if lo != 0:
                lines.append(_line("LO", "BND", cname, _num(lo)))
            if np.isfinite(hi):
                lines.append(_line("UP", "BND", cname, _num(hi)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_mps(model: MilpModel, path, name: str = "PGS") -> Path:
    path = Path(path)
    path.write_text(model_to_mps(model, name))
    return path
