"""Point cloud readers/writers (PLY ascii + binary little-endian, XYZ, OFF) and stats reports."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from graphsimp.core import PointCloud

FORMATS = ("ply_ascii", "ply_binary_le", "xyz", "off")

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_TEXT_FMT = "%.9g"


class CloudParseError(ValueError):
    pass


def _infer_format(path: Path) -> str:
    ext = path.suffix.lower()
    with open(path, "rb") as fh:
        head = fh.read(512)
    if head.startswith(b"ply"):
        for line in head.split(b"\n")[1:]:
            if line.startswith(b"format"):
                if b"ascii" in line:
                    return "ply_ascii"
                if b"binary_little_endian" in line:
                    return "ply_binary_le"
                raise CloudParseError(f"{path}: unsupported PLY format line {line.decode(errors='replace')!r}")
        raise CloudParseError(f"{path}: PLY header without a format line")
    if head.lstrip().startswith(b"OFF") or ext == ".off":
        return "off"
    if ext in (".xyz", ".txt", ".pts", ".asc", ""):
        return "xyz"
    if ext == ".ply":
        raise CloudParseError(f"{path}: missing 'ply' magic")
    raise CloudParseError(f"{path}: cannot infer cloud format from extension {ext!r}")


def _check_finite(pts: np.ndarray, where: str) -> np.ndarray:
    ok = np.isfinite(pts).all(axis=1)
    if not ok.all():
        raise CloudParseError(f"{where}: non-finite coordinate in vertex {int(np.argmin(ok))}")
    return pts


def _parse_ply_header(fh, path):
    magic = fh.readline()
    if magic.rstrip(b"\r\n") != b"ply":
        raise CloudParseError(f"{path}: byte 0: missing 'ply' magic")
    fmt = None
    elements = []  # (name, count, [(prop, dtype or None-for-list)])
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise CloudParseError(f"{path}: line {lineno}: header ended before 'end_header'")
        tokens = raw.decode("ascii", errors="replace").split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        key = tokens[0]
        if key == "end_header":
            break
        if key == "format":
            if len(tokens) < 2:
                raise CloudParseError(f"{path}: line {lineno}: malformed format line")
            fmt = tokens[1]
        elif key == "element":
            if len(tokens) != 3 or not tokens[2].isdigit():
                raise CloudParseError(f"{path}: line {lineno}: malformed element line")
            elements.append((tokens[1], int(tokens[2]), []))
        elif key == "property":
            if not elements:
                raise CloudParseError(f"{path}: line {lineno}: property before any element")
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise CloudParseError(f"{path}: line {lineno}: malformed list property")
                elements[-1][2].append((tokens[4], None))
            else:
                if len(tokens) != 3 or tokens[1] not in _PLY_TYPES:
                    raise CloudParseError(f"{path}: line {lineno}: unknown property type in {raw!r}")
                elements[-1][2].append((tokens[2], _PLY_TYPES[tokens[1]]))
        else:
            raise CloudParseError(f"{path}: line {lineno}: unexpected header keyword {key!r}")
    if fmt not in ("ascii", "binary_little_endian"):
        raise CloudParseError(f"{path}: unsupported PLY format {fmt!r}")
    return fmt, elements, lineno


def _read_ply(path: Path) -> np.ndarray:
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        fmt, elements, header_lines = _parse_ply_header(fh, path)
        names = [e[0] for e in elements]
        if "vertex" not in names:
            raise CloudParseError(f"{path}: no vertex element in header")
        vi = names.index("vertex")
        _, count, props = elements[vi]
        pnames = [p[0] for p in props]
        for axis in "xyz":
            if axis not in pnames:
                raise CloudParseError(f"{path}: vertex element lacks property {axis!r}")

        if fmt == "binary_little_endian":
            for name, cnt, eprops in elements[:vi]:
                if any(dt is None for _, dt in eprops):
                    raise CloudParseError(f"{path}: cannot skip list-valued element {name!r} preceding vertices")
                fh.seek(cnt * np.dtype([(p, "<" + dt) for p, dt in eprops]).itemsize, os.SEEK_CUR)
            if any(dt is None for _, dt in props):
                raise CloudParseError(f"{path}: list properties on vertices are not supported in binary PLY")
            dtype = np.dtype([(p, "<" + dt) for p, dt in props])
            start = fh.tell()
            need = count * dtype.itemsize
            if start + need > size:
                have = (size - start) // dtype.itemsize
                raise CloudParseError(
                    f"{path}: byte {start}: truncated body, header declares {count} vertices "
                    f"but only {have} complete records remain"
                )
            rec = np.frombuffer(fh.read(need), dtype=dtype, count=count)
            pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
            return _check_finite(pts, str(path))

        # ascii
        lineno = header_lines
        for name, cnt, _ in elements[:vi]:
            for _ in range(cnt):
                if not fh.readline():
                    raise CloudParseError(f"{path}: line {lineno + 1}: truncated element {name!r}")
                lineno += 1
        cols = [pnames.index(a) for a in "xyz"]
        if any(dt is None for _, dt in props[: max(cols) + 1]):
            raise CloudParseError(f"{path}: list properties before coordinates are not supported")
        pts = np.empty((count, 3), dtype=np.float64)
        for i in range(count):
            raw = fh.readline()
            lineno += 1
            if not raw:
                raise CloudParseError(
                    f"{path}: line {lineno}: truncated body, header declares {count} vertices, found {i}"
                )
            tokens = raw.split()
            try:
                pts[i] = [float(tokens[c]) for c in cols]
            except (IndexError, ValueError):
                raise CloudParseError(f"{path}: line {lineno}: malformed vertex record {raw!r}") from None
        return _check_finite(pts, str(path))


def _read_xyz(path: Path) -> np.ndarray:
    rows = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            tokens = line.split()
            try:
                rows.append((float(tokens[0]), float(tokens[1]), float(tokens[2])))
            except (IndexError, ValueError):
                raise CloudParseError(f"{path}: line {lineno}: expected three coordinates, got {line!r}") from None
    if not rows:
        raise CloudParseError(f"{path}: no points")
    return _check_finite(np.array(rows, dtype=np.float64), str(path))


def _read_off(path: Path) -> np.ndarray:
    with open(path, "r") as fh:
        lines = enumerate(fh, 1)

        def next_content():
            for lineno, line in lines:
                line = line.split("#", 1)[0].strip()
                if line:
                    return lineno, line
            return None, None

        lineno, line = next_content()
        if line is None or not line.startswith("OFF"):
            raise CloudParseError(f"{path}: line 1: missing 'OFF' magic")
        rest = line[3:].split()
        if not rest:
            lineno, line = next_content()
            if line is None:
                raise CloudParseError(f"{path}: missing counts line")
            rest = line.split()
        try:
            nv = int(rest[0])
        except (IndexError, ValueError):
            raise CloudParseError(f"{path}: line {lineno}: malformed counts line") from None
        pts = np.empty((nv, 3), dtype=np.float64)
        for i in range(nv):
            lineno, line = next_content()
            if line is None:
                raise CloudParseError(f"{path}: truncated body, header declares {nv} vertices, found {i}")
            try:
                pts[i] = [float(t) for t in line.split()[:3]]
            except ValueError:
                raise CloudParseError(f"{path}: line {lineno}: malformed vertex {line!r}") from None
    return _check_finite(pts, str(path))


def read_cloud(path, format: str | None = None) -> PointCloud:
    """Load vertex coordinates from ``path``; format inferred from magic bytes/extension if not given."""
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt in ("ply_ascii", "ply_binary_le"):
        pts = _read_ply(path)
    elif fmt == "xyz":
        pts = _read_xyz(path)
    elif fmt == "off":
        pts = _read_off(path)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if pts.shape[0] == 0:
        raise CloudParseError(f"{path}: no vertices")
    return PointCloud(pts)


def format_for_path(path) -> str:
    ext = Path(path).suffix.lower()
    return {".ply": "ply_binary_le", ".off": "off"}.get(ext, "xyz")


def write_cloud(cloud: PointCloud, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or format_for_path(path)
    pts = cloud.points
    n = pts.shape[0]
    if fmt == "ply_binary_le":
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {n}\n"
            "property double x\nproperty double y\nproperty double z\nend_header\n"
        )
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(pts, dtype="<f8").tobytes())
    elif fmt == "ply_ascii":
        header = (
            "ply\nformat ascii 1.0\n"
            f"element vertex {n}\n"
            "property double x\nproperty double y\nproperty double z\nend_header"
        )
        np.savetxt(path, pts, fmt=_TEXT_FMT, header=header, comments="")
    elif fmt == "xyz":
        np.savetxt(path, pts, fmt=_TEXT_FMT)
    elif fmt == "off":
        np.savetxt(path, pts, fmt=_TEXT_FMT, header=f"OFF\n{n} 0 0", comments="")
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_stats(report: dict, path) -> None:
    """One ``name value`` line per metric, sorted by name."""
    lines = [f"{k} {_fmt_value(report[k])}\n" for k in sorted(report)]
    with open(path, "w") as fh:
        fh.writelines(lines)


def read_stats(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                key, _, value = line.rstrip("\n").partition(" ")
                out[key] = value
    return out


def write_labels(labels: np.ndarray, path) -> None:
    """Sidecar label file: one 0/1 per line, same order as the cloud."""
    np.savetxt(path, np.asarray(labels, dtype=np.int8), fmt="%d")


def read_labels(path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.int8, ndmin=1).astype(bool)
