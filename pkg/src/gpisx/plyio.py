"""ASCII PLY and CSV point clouds, ASCII PLY meshes.

Only ``format ascii 1.0`` is read. Vertex coordinates are written with nine
significant digits, enough for a float32 value to survive the round trip
bit for bit. Every write goes to a temporary file in the target directory
which is then renamed over the destination.
"""

from __future__ import annotations

import contextlib
import csv
import io
import os
import tempfile

import numpy as np

from .errors import IoError, ParseError, UnsupportedFormat
from .geometry import PointCloud3
from .isosurface import TriangleMesh

__all__ = ["atomic_write", "load_cloud", "save_cloud", "save_mesh", "load_mesh", "read_ply"]

_PLY_TYPES = {
    "char": int, "uchar": int, "short": int, "ushort": int, "int": int, "uint": int,
    "int8": int, "uint8": int, "int16": int, "uint16": int, "int32": int, "uint32": int,
    "float": float, "double": float, "float32": float, "float64": float,
}

# "float" values are kept in single precision so that a float32 cloud reads
# back exactly; integers are widened
_NP_TYPES = {"float": np.float32, "float32": np.float32, "double": np.float64, "float64": np.float64}


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Open a temp file next to ``path``; rename it into place on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.basename(path), dir=directory)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException as e:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        if isinstance(e, OSError) and not isinstance(e, IoError):
            raise IoError(f"cannot write {path}: {e}") from e
        raise


# reading -----------------------------------------------------------------------


class _Element:
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.props = []  # (name, type) or (name, ("list", count_type, item_type))


def _parse_header(lines, path):
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", 1, path)
    elements = []
    fmt = None
    for i, raw in enumerate(lines[1:], start=2):
        tok = raw.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        key = tok[0]
        if key == "format":
            if len(tok) != 3:
                raise ParseError(f"bad format line {raw.strip()!r}", i, path)
            if tok[1] != "ascii":
                raise UnsupportedFormat(f"{path}: PLY format {tok[1]!r} is not supported (ascii only)")
            fmt = tok[1]
        elif key == "element":
            if len(tok) != 3 or not tok[2].isdigit():
                raise ParseError(f"bad element line {raw.strip()!r}", i, path)
            elements.append(_Element(tok[1], int(tok[2])))
        elif key == "property":
            if not elements:
                raise ParseError("property before any element", i, path)
            if len(tok) == 5 and tok[1] == "list":
                if tok[2] not in _PLY_TYPES or tok[3] not in _PLY_TYPES:
                    raise ParseError(f"unknown list type in {raw.strip()!r}", i, path)
                elements[-1].props.append((tok[4], ("list", tok[2], tok[3])))
            elif len(tok) == 3 and tok[1] in _PLY_TYPES:
                elements[-1].props.append((tok[2], tok[1]))
            else:
                raise ParseError(f"bad property line {raw.strip()!r}", i, path)
        elif key == "end_header":
            if fmt is None:
                raise ParseError("header has no format line", i, path)
            return elements, i
        else:
            raise ParseError(f"unexpected header line {raw.strip()!r}", i, path)
    raise ParseError("header is not terminated by end_header", len(lines), path)


def _parse_row(tok, props, lineno, path):
    """Scalars of one element row, with list properties returned as arrays."""
    out = {}
    pos = 0
    try:
        for name, typ in props:
            if isinstance(typ, tuple):
                n = int(tok[pos])
                conv = _PLY_TYPES[typ[2]]
                out[name] = [conv(v) for v in tok[pos + 1 : pos + 1 + n]]
                if len(out[name]) != n:
                    raise IndexError
                pos += 1 + n
            else:
                out[name] = float(tok[pos]) if _PLY_TYPES[typ] is float else int(tok[pos])
                pos += 1
    except (IndexError, ValueError):
        raise ParseError(f"malformed data row {' '.join(tok)!r}", lineno, path) from None
    if pos != len(tok):
        raise ParseError(f"expected {pos} values, found {len(tok)}", lineno, path)
    return out


def read_ply(path):
    """``{element_name: {property: values}}`` from an ASCII PLY file.

    Scalar properties become numpy arrays; list properties stay lists.
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except UnicodeDecodeError:
        raise UnsupportedFormat(f"{path}: not an ASCII PLY file") from None
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    elements, header_end = _parse_header(lines, path)
    data = {}
    row = header_end
    for el in elements:
        cols = {name: [] for name, _ in el.props}
        for _ in range(el.count):
            row += 1
            while row <= len(lines) and not lines[row - 1].strip():
                row += 1
            if row > len(lines):
                raise ParseError(f"file ends inside element {el.name!r}", row - 1, path)
            vals = _parse_row(lines[row - 1].split(), el.props, row, path)
            for k, v in vals.items():
                cols[k].append(v)
        for name, typ in el.props:
            if not isinstance(typ, tuple):
                cols[name] = np.asarray(cols[name], dtype=_NP_TYPES.get(typ, np.int64))
        data[el.name] = cols
    return data


def _load_ply_cloud(path):
    data = read_ply(path)
    vert = data.get("vertex")
    if vert is None or not all(k in vert for k in "xyz"):
        raise ParseError("no vertex element with x, y, z properties", None, path)
    pts = np.column_stack([np.asarray(vert[k], dtype=float) for k in "xyz"]).reshape(-1, 3)
    return pts


def _load_csv_cloud(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    if not rows:
        raise ParseError("empty CSV file", 1, path)
    header = [h.strip().lower() for h in rows[0]]
    try:
        idx = [header.index(k) for k in "xyz"]
    except ValueError:
        raise ParseError(f"CSV header must name x, y and z columns, got {rows[0]}", 1, path) from None
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            pts.append([float(row[i]) for i in idx])
        except (IndexError, ValueError):
            raise ParseError(f"bad CSV row {row}", lineno, path) from None
    return np.asarray(pts, dtype=float).reshape(-1, 3)


def load_cloud(path, frame="world"):
    """Point cloud from ``.ply`` (ASCII) or ``.csv`` with an ``x,y,z`` header."""
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".ply":
        pts = _load_ply_cloud(path)
    elif ext == ".csv":
        pts = _load_csv_cloud(path)
    else:
        raise UnsupportedFormat(f"{path}: unknown cloud format {ext or '(no extension)'!r}")
    if not np.all(np.isfinite(pts)):
        raise ParseError("non-finite coordinate", None, path)
    return PointCloud3(pts, frame=frame)


def load_mesh(path):
    data = read_ply(path)
    vert = data.get("vertex", {})
    face = data.get("face", {})
    if not all(k in vert for k in "xyz"):
        raise ParseError("no vertex element with x, y, z properties", None, path)
    v = np.column_stack([np.asarray(vert[k], dtype=float) for k in "xyz"]).reshape(-1, 3)
    q = np.asarray(vert.get("quality", np.full(len(v), np.nan)), dtype=float)
    faces = face.get("vertex_indices", [])
    if any(len(f) != 3 for f in faces):
        raise UnsupportedFormat(f"{path}: only triangle faces are supported")
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(v, f, q)


# writing -----------------------------------------------------------------------


def _fmt_rows(arr, fmt):
    buf = io.StringIO()
    if len(arr):
        np.savetxt(buf, arr, fmt=fmt)
    return buf.getvalue()


def save_cloud(cloud, path):
    """ASCII PLY with ``float`` x, y, z; values are rounded to float32."""
    pts = cloud.points if isinstance(cloud, PointCloud3) else np.asarray(cloud, dtype=float).reshape(-1, 3)
    header = f"ply\nformat ascii 1.0\ncomment frame {getattr(cloud, 'frame', 'world')}\nelement vertex {len(pts)}\n"
    header += "property float x\nproperty float y\nproperty float z\nend_header\n"
    body = _fmt_rows(pts.astype(np.float32).astype(np.float64), "%.9g")
    with atomic_write(path) as fh:
        fh.write(header)
        fh.write(body)


def save_mesh(mesh, path):
    """ASCII PLY with vertex ``quality`` (posterior variance) and triangle faces."""
    v = np.asarray(mesh.vertices, dtype=float).reshape(-1, 3)
    f = np.asarray(mesh.triangles, dtype=np.int64).reshape(-1, 3)
    q = np.asarray(mesh.vertex_attrs, dtype=float).reshape(-1)
    if len(q) != len(v):
        raise ValueError("vertex_attrs must have one value per vertex")
    if len(f) and (f.min() < 0 or f.max() >= len(v)):
        raise ValueError("face index out of range")
    header = (
        "ply\nformat ascii 1.0\ncomment quality = GPIS posterior variance\n"
        f"element vertex {len(v)}\n"
        "property double x\nproperty double y\nproperty double z\nproperty double quality\n"
        f"element face {len(f)}\n"
        "property list uchar int vertex_indices\nend_header\n"
    )
    verts = _fmt_rows(np.column_stack([v, q]), "%.17g")
    faces = _fmt_rows(np.column_stack([np.full(len(f), 3), f]), "%d")
    with atomic_write(path) as fh:
        fh.write(header)
        fh.write(verts)
        fh.write(faces)
