"""Export a :class:`LinearProgram` in the CPLEX LP text format.

Grammar used (see docs/lp_format.md)::

    \\ <model name>
    Minimize | Maximize
     obj: <term> <term> ...
    Subject To
     <row name>: <term> <term> ... <= | >= | = <rhs>
    Bounds
     <lb> <= <var> <= <ub>   |  <var> free  |  <var> >= <lb>  |  -inf <= <var> <= <ub>
    End

A term is ``+ <coef> <var>`` or ``- <coef> <var>``. Long expressions are
wrapped so that no line exceeds 255 characters.
"""
from __future__ import annotations

import math
from typing import TextIO

from .model import LinearProgram

_MAX_LINE = 255


def _num(v: float) -> str:
    return repr(float(v))


def _expr_lines(head: str, terms, names, tail: str = "") -> list[str]:
    lines = []
    cur = head
    for j, v in terms:
        if v == 0.0:
            continue
        tok = f" {'-' if v < 0 else '+'} {_num(abs(v))} {names[j]}"
        if len(cur) + len(tok) > _MAX_LINE:
            lines.append(cur)
            cur = "   "
        cur += tok
    if cur.strip() == head.strip() and not lines:
        cur += " 0 " + names[0] if names else " 0"
    if len(cur) + len(tail) > _MAX_LINE:
        lines.append(cur)
        cur = "   "
    lines.append(cur + tail)
    return lines


def write_lp(lp: LinearProgram, fh: TextIO) -> None:
    comp = lp.compile()
    names = lp.var_names
    out = [f"\\ {lp.name}", "Maximize" if lp.sense == "max" else "Minimize"]
    obj = sorted(lp.objective.items())
    out += _expr_lines(" obj:", obj, names)
    out.append("Subject To")
    A = comp.A
    row_names = lp.row_names
    for i in range(A.shape[0]):
        s, e = A.indptr[i], A.indptr[i + 1]
        terms = list(zip(A.indices[s:e].tolist(), A.data[s:e].tolist()))
        rel = {-1: "<=", 0: "=", 1: ">="}[int(comp.rel[i])]
        out += _expr_lines(f" {row_names[i]}:", terms, names, f" {rel} {_num(comp.rhs[i])}")
    out.append("Bounds")
    for j, nm in enumerate(names):
        lo, hi = comp.lb[j], comp.ub[j]
        if lo == 0.0 and math.isinf(hi):
            continue
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" {nm} free")
        elif math.isinf(hi):
            out.append(f" {nm} >= {_num(lo)}")
        else:
            lo_s = "-inf" if math.isinf(lo) else _num(lo)
            out.append(f" {lo_s} <= {nm} <= {_num(hi)}")
    out.append("End")
    fh.write("\n".join(out) + "\n")


def dumps_lp(lp: LinearProgram) -> str:
    import io

    buf = io.StringIO()
    write_lp(lp, buf)
    return buf.getvalue()
