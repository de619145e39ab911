"""CSV readers and writers with a leading manifest comment block."""
from __future__ import annotations

import csv
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import SchemaError

FLOAT_FMT = "{:.17g}"


def atomic_write(path, text: str) -> None:
    """Write UTF-8 text with LF endings via a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    command: str
    parameters: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    elapsed: float | None = None
    deterministic: bool = False

    def versions(self) -> dict:
        import scipy

        from . import __version__

        return {"cvmacwilliams": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                "python": platform.python_version()}

    def as_dict(self) -> dict:
        out = {"command": self.command, "parameters": self.parameters, "tolerances": self.tolerances,
               "versions": self.versions()}
        if not self.deterministic:
            out["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
            if self.elapsed is not None:
                out["elapsed_s"] = round(self.elapsed, 3)
        return out

    def comment_block(self) -> str:
        lines = ["# manifest"]
        for key, value in self.as_dict().items():
            lines.append(f"# {key}: {json.dumps(value, sort_keys=True, default=_jsonable)}")
        return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def table_text(header: list[str], columns, manifest: RunManifest | None = None, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if manifest is not None:
        buf.write(manifest.comment_block())
    if meta:
        buf.write("#meta " + json.dumps(meta, sort_keys=True, default=_jsonable) + "\n")
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def weights_text(r, A, B, deltas=None, manifest: RunManifest | None = None, meta: dict | None = None) -> str:
    """`r,A,B` rows, then an optional `#deltas` block of `location,massA,massB`."""
    text = table_text(["r", "A", "B"], [r, A, B], manifest, meta)
    if deltas:
        loc, ma, mb = zip(*deltas)
        text += "#deltas\nlocation,massA,massB\n"
        text += "".join(f"{fmt(a)},{fmt(b)},{fmt(c)}\n" for a, b, c in zip(loc, ma, mb))
    return text


def _numeric_rows(lines: list[str], header: list[str], where: str) -> np.ndarray:
    rows = list(csv.reader(lines))
    if not rows or [h.strip() for h in rows[0]] != header:
        raise SchemaError(f"{where}: expected header {','.join(header)}")
    out = []
    for rec in rows[1:]:
        if len(rec) != len(header):
            raise SchemaError(f"{where}: row {rec!r} has {len(rec)} fields")
        try:
            out.append([float(v) for v in rec])
        except ValueError as exc:
            raise SchemaError(f"{where}: non-numeric row {rec!r}") from exc
    if not out:
        raise SchemaError(f"{where}: no data rows")
    a = np.array(out)
    if not np.all(np.isfinite(a)):
        raise SchemaError(f"{where}: non-finite value")
    return a


def _content_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return [ln.rstrip("\r\n") for ln in fh]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def read_weights(path):
    """Return (r, A, B, deltas) from a weights CSV; B may be absent (`r,value`)."""
    lines = _content_lines(path)
    if "#deltas" in lines:
        k = lines.index("#deltas")
        main, delta_lines = lines[:k], lines[k + 1 :]
    else:
        main, delta_lines = lines, []
    main = [ln for ln in main if ln.strip() and not ln.lstrip().startswith("#")]
    if not main:
        raise SchemaError(f"{path}: empty input")
    header = [h.strip() for h in main[0].split(",")]
    if header == ["r", "value"]:
        a = _numeric_rows(main, header, str(path))
        r, A, B = a[:, 0], a[:, 1], None
    else:
        a = _numeric_rows(main, ["r", "A", "B"], str(path))
        r, A, B = a[:, 0], a[:, 1], a[:, 2]
    if len(r) < 4 or np.any(np.diff(r) <= 0) or r[0] < 0:
        raise SchemaError(f"{path}: r must be non-negative, strictly ascending, with at least 4 rows")
    deltas = []
    delta_lines = [ln for ln in delta_lines if ln.strip() and not ln.lstrip().startswith("#")]
    if delta_lines:
        d = _numeric_rows(delta_lines, ["location", "massA", "massB"], f"{path} #deltas")
        deltas = [tuple(row) for row in d]
    return r, A, B, deltas


def spectrum_text(entries, manifest: RunManifest | None = None) -> str:
    buf = io.StringIO()
    if manifest is not None:
        buf.write(manifest.comment_block())
    buf.write("length,multiplicity\n")
    for length, mult in entries:
        buf.write(f"{fmt(length)},{int(mult)}\n")
    return buf.getvalue()
