"""Artifact files: SPF1 field dumps, CSV tables, JSON, all written atomically."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clifford import build_clifford
from .fields import GridSpec, ScalarField, SpinorField

MAGIC = "SPF1"


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | Path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


# --- SPF1 ----------------------------------------------------------------


def spf1_header(grid: GridSpec, fiber: int) -> str:
    h = grid.header_fields()
    return f"{MAGIC} n={h['n']} dims={h['dims']} lens={h['lens']} spin={h['spin']} fiber={fiber}\n"


def write_spf1(path: str | Path, f: SpinorField | ScalarField) -> Path:
    """Header line, then little-endian float64 data, row-major with the fiber fastest.

    Spinor entries are ``(re, im)`` pairs; scalar fields are real with ``fiber=1``.
    """
    if isinstance(f, SpinorField):
        header = spf1_header(f.grid, f.rep.fiber_dim)
        body = np.ascontiguousarray(f.values).view(np.float64).astype("<f8").tobytes()
    else:
        header = spf1_header(f.grid, 1)
        body = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    return atomic_write_bytes(path, header.encode("ascii") + body)


def _parse_header(line: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != MAGIC:
        raise ValueError(f"not an {MAGIC} file")
    fields = {}
    for tok in parts[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ValueError(f"malformed header token {tok!r}")
        fields[key] = val
    missing = {"n", "dims", "lens", "spin", "fiber"} - fields.keys()
    if missing:
        raise ValueError(f"header lacks {sorted(missing)}")
    return fields


def read_spf1(path: str | Path) -> SpinorField | ScalarField:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    h = _parse_header(raw[:nl].decode("ascii"))
    n = int(h["n"])
    grid = GridSpec(
        n,
        tuple(int(v) for v in h["dims"].split(",")),
        tuple(float(v) for v in h["lens"].split(",")),
        tuple(h["spin"]),
    )
    fiber = int(h["fiber"])
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    if fiber == 1 and data.size == grid.npoints:
        return ScalarField(grid, data.reshape(grid.sizes).astype(float))
    rep = build_clifford(n)
    if fiber != rep.fiber_dim:
        raise ValueError(f"fiber {fiber} does not match dimension {n}")
    if data.size != 2 * grid.npoints * fiber:
        raise ValueError(f"expected {2 * grid.npoints * fiber} floats, found {data.size}")
    vals = data.astype(float).view(complex).reshape(grid.sizes + (fiber,))
    return SpinorField(grid, rep, vals)


# --- CSV -----------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def expand_complex(row: Mapping[str, object]) -> dict[str, object]:
    """Split complex entries into ``<name>_re`` and ``<name>_im`` columns."""
    out: dict[str, object] = {}
    for k, v in row.items():
        if isinstance(v, (complex, np.complexfloating)):
            out[f"{k}_re"] = float(v.real)
            out[f"{k}_im"] = float(v.imag)
        else:
            out[k] = v
    return out


def csv_text(rows: Sequence[Mapping[str, object]], columns: Sequence[str] | None = None) -> str:
    rows = [expand_complex(r) for r in rows]
    if columns is None:
        if not rows:
            raise ValueError("an empty table needs explicit columns")
        columns = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(path: str | Path, rows: Iterable[Mapping[str, object]],
              columns: Sequence[str] | None = None) -> Path:
    return atomic_write_text(path, csv_text(list(rows), columns))


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
