"""Deterministic report serialization, raw field dumps and run configs.

Floats are written with 17 significant digits, infinities as the string "inf"
and object keys sorted, so identical runs produce identical bytes.  The stdlib
json encoder offers no control over float formatting, hence the small writer.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import GridFunction, make_grid

MAGIC = b"SCLB"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(v, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, enum.Enum):
        v = v.value
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return f'"{fmt_float(x)}"' if not math.isfinite(x) else fmt_float(x)
    if isinstance(v, str):
        return _json_string(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {_json_value(v[k], indent, level + 1)}" for k in sorted(v, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        items = [f"{pad}{_json_value(x, indent, level + 1)}" for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _json_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps(obj, indent: int = 2) -> str:
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if isinstance(v, enum.Enum):
        return str(v.value)
    return str(v)


def csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, header: list, rows: list) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# raw field dumps

def dump_field(path, u: GridFunction) -> Path:
    """Header {magic, version u32, n u32, N u32, h f64} then row-major complex128 values."""
    path = Path(path)
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, DUMP_VERSION, g.n, g.N, g.h))
        fh.write(np.ascontiguousarray(u.values, dtype="<c16").tobytes())
    return path


def read_field(path, L: float) -> GridFunction:
    """Inverse of ``dump_field``; the half width is not stored and must be supplied."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for a field header")
    magic, version, n, N, h = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != DUMP_VERSION:
        raise ValueError(f"unsupported dump version {version}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    if vals.size != N**n:
        raise ValueError(f"expected {N**n} values, found {vals.size}")
    return GridFunction(make_grid(n, L, N, h), vals.reshape((N,) * n).astype(complex))


# ---------------------------------------------------------------------------
# run configs: key=value lines, repeated keys for lists

@dataclass
class RunConfig:
    command: str = ""
    family: Optional[str] = None
    symbol: Optional[str] = None
    n: Optional[int] = None
    h: Optional[str] = None  # dyadic range "2^-a..2^-b" or comma list
    p: list = field(default_factory=list)
    L: Optional[float] = None
    N: Optional[int] = None
    tol: Optional[float] = None
    model: str = "power"
    kind: str = "weyl"
    seed: int = 0
    out: str = "."
    dump: bool = False
    check: Optional[str] = None
    k: Optional[int] = None
    q: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    width: Optional[float] = None
    inputs: list = field(default_factory=list)

    _LISTS = ("p", "q", "lam", "levels", "inputs")
    _INTS = ("n", "N", "seed", "k")
    _FLOATS = ("L", "tol", "width")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in self._LISTS:
                lines.extend(f"{f.name}={x}" for x in v)
            elif v is None:
                continue
            elif isinstance(v, bool):
                lines.append(f"{f.name}={'true' if v else 'false'}")
            elif isinstance(v, float):
                lines.append(f"{f.name}={fmt_float(v)}")
            else:
                lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls()
        names = {f.name for f in fields(cls)}
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {no}: expected key=value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in names:
                raise ValueError(f"config line {no}: unknown key {key!r}")
            if key in cls._LISTS:
                getattr(cfg, key).append(val)
            elif key in cls._INTS:
                setattr(cfg, key, int(val))
            elif key in cls._FLOATS:
                setattr(cfg, key, float(val))
            elif key == "dump":
                if val.lower() not in ("true", "false"):
                    raise ValueError(f"config line {no}: dump must be true or false")
                cfg.dump = val.lower() == "true"
            else:
                setattr(cfg, key, val)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text(), encoding="utf-8")
        return path
