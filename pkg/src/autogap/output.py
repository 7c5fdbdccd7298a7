"""Deterministic serialization of certificates, tables and trees."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .dynamics import Certificate
from .reeb import ReebTree

CERT_COLUMNS = ["name", "computed", "expected", "tolerance", "relation", "verdict"]


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _json_safe(obj):
    """Non-finite floats become the strings ``"nan"``, ``"inf"``, ``"-inf"``."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def certificates_json(certs: Iterable[Certificate]) -> str:
    return json.dumps([_json_safe(c.to_dict()) for c in certs], indent=2, allow_nan=False) + "\n"


def certificates_jsonl(certs: Iterable[Certificate]) -> str:
    return "".join(json.dumps(_json_safe(c.to_dict()), allow_nan=False) + "\n" for c in certs)


def table_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(x) for x in row])
    return buf.getvalue()


def certificates_csv(certs: Iterable[Certificate]) -> str:
    return table_csv(CERT_COLUMNS, ([c.name, c.computed, c.expected, c.tolerance, c.relation, c.verdict]
                                    for c in certs))


def plotdata(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Whitespace-separated columns with a ``#`` header line."""
    lines = ["# " + " ".join(columns)]
    for row in rows:
        lines.append(" ".join(_num(x) if not isinstance(x, str) else x for x in row))
    return "\n".join(lines) + "\n"


def summary_table(certs: Sequence[Certificate]) -> str:
    width = max([len(c.name) for c in certs] + [4])
    out = []
    for c in certs:
        comp = "absent" if c.computed is None else f"{c.computed:.10g}"
        exp = "absent" if c.expected is None else f"{c.expected:.10g}"
        out.append(f"{c.verdict.upper():<18} {c.name:<{width}}  computed={comp}  expected={exp}  tol={c.tolerance:.3g}")
    n_pass = sum(c.passed for c in certs)
    out.append(f"{n_pass}/{len(certs)} certificates passed")
    return "\n".join(out) + "\n"


def render(result, fmt: str) -> dict:
    """``{file name: text}`` for a scenario result in the given format."""
    certs = result.certificates
    if fmt == "json":
        return {"certificates.json": certificates_json(certs)}
    if fmt == "csv":
        files = {f"{name}.csv": table_csv(cols, rows)
                 for name, (cols, rows) in result.tables.items() if cols[:2] == ["h", "r_value"]}
        files["certificates.csv"] = certificates_csv(certs)
        return files
    if fmt == "plotdata":
        return {f"{name}.dat": plotdata(cols, rows) for name, (cols, rows) in result.tables.items()}
    if fmt == "dot":
        return {f"{name}.dot": tree.to_dot() for name, tree in result.trees.items()}
    raise ValueError(f"unknown format {fmt!r}")


def emit(result, fmt: str, out_dir) -> list[Path]:
    """Write the rendered files into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in sorted(render(result, fmt).items()):
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths


def tree_json(tree: ReebTree) -> str:
    d = tree.to_dict()
    d["stem_report"] = tree.stem_report().to_dict()
    d["median"] = tree.median().to_dict()
    return json.dumps(_json_safe(d), indent=2, allow_nan=False) + "\n"
