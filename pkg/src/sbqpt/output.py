"""CSV/JSON writers with a provenance header.

Floats are written with 17 significant digits so that identical runs give
byte-identical files.
"""
from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

Table = Tuple[Sequence[str], List[Sequence]]


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


def _csv_cell(v) -> str:
    v = _plain(v)
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render_csv(provenance: dict, columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {provenance['tool']} {provenance['version']}\n")
    buf.write("# provenance: " + json.dumps(_plain(provenance), sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(v) for v in row) + "\n")
    return buf.getvalue()


def render_json(provenance: dict, tables: Dict[str, Table]) -> str:
    doc = {
        "provenance": _plain(provenance),
        "tables": {name: {"columns": list(cols), "rows": [_plain(list(r)) for r in rows]}
                   for name, (cols, rows) in tables.items()},
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def table_paths(out: Path, names: Sequence[str]) -> Dict[str, Path]:
    """First table goes to ``out``; the others to siblings named ``<stem>.<table><suffix>``."""
    paths = {names[0]: out}
    for name in names[1:]:
        paths[name] = out.with_name(f"{out.stem}.{name}{out.suffix or '.csv'}")
    return paths


def write(out, fmt: str, provenance: dict, tables: Dict[str, Table]) -> List[Path]:
    """Write tables to ``out`` (or stdout when ``out`` is None); returns written paths."""
    if fmt == "json":
        text = render_json(provenance, tables)
        if out is None:
            print(text, end="")
            return []
        Path(out).write_text(text)
        return [Path(out)]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    if out is None:
        print("\n".join(render_csv(provenance, *tables[n]) for n in tables), end="")
        return []
    written = []
    for name, path in table_paths(Path(out), list(tables)).items():
        path.write_text(render_csv(provenance, *tables[name]))
        written.append(path)
    return written


def load_provenance(path) -> dict:
    """Recover the provenance block from a JSON or CSV output file."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)["provenance"]
    for line in text.splitlines():
        if line.startswith("# provenance: "):
            return json.loads(line[len("# provenance: "):])
    raise ValueError(f"no provenance header in {path}")
