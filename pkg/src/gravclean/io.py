"""Point-cloud file I/O: PLY (ascii / binary little-endian) and XYZ text.

Noise labels travel inside the vertex element as a ``uchar is_noise``
property so ground truth cannot desynchronize from geometry. Readers
reject non-finite coordinates with a location diagnostic instead of
letting them into a cloud; writers produce deterministic bytes.
"""

from __future__ import annotations

import warnings

import numpy as np

from .cloud import PointCloud
from .errors import CloudParseError, EmptyCloudError

__all__ = ["read_cloud", "write_cloud"]

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

_FORMATS = ("ply-ascii", "ply-binary-le", "xyz")


def read_cloud(path, fmt: str | None = None) -> PointCloud:
    """Read a cloud; format inferred from extension / magic when omitted.

    Point ids are assigned in file order. Labels are populated iff an
    ``is_noise`` vertex channel is present.
    """
    path = str(path)
    if fmt is None:
        fmt = _sniff_format(path)
    if fmt == "xyz":
        return _read_xyz(path)
    if fmt in ("ply-ascii", "ply-binary-le", "ply"):
        return _read_ply(path)
    raise ValueError(f"unknown format {fmt!r}; expected one of {_FORMATS}")


def write_cloud(cloud: PointCloud, path, fmt: str = "ply-ascii", precision: str = "double") -> None:
    """Write a cloud. ``precision`` is ``"double"`` or ``"float"`` (PLY only).

    The ``is_noise`` channel is written iff the cloud carries labels.
    """
    if len(cloud) == 0:
        raise EmptyCloudError("refusing to write an empty cloud")
    if precision not in ("double", "float"):
        raise ValueError("precision must be 'double' or 'float'")
    path = str(path)
    if fmt == "xyz":
        _write_xyz(cloud, path)
    elif fmt == "ply-ascii":
        _write_ply(cloud, path, binary=False, precision=precision)
    elif fmt in ("ply-binary-le", "ply-binary"):
        _write_ply(cloud, path, binary=True, precision=precision)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {_FORMATS}")


def _sniff_format(path: str) -> str:
    lower = path.lower()
    if lower.endswith(".xyz") or lower.endswith(".txt"):
        return "xyz"
    if lower.endswith(".ply"):
        return "ply"
    with open(path, "rb") as fh:
        magic = fh.read(3)
    return "ply" if magic == b"ply" else "xyz"


# ---------------------------------------------------------------------------
# PLY
# ---------------------------------------------------------------------------

def _read_ply(path: str) -> PointCloud:
    with open(path, "rb") as fh:
        binary, elements, n_header_lines = _parse_ply_header(fh, path)
        vertex_props, n_vertices, preceding = _vertex_layout(elements, path)
        if preceding:
            raise CloudParseError(
                f"{path}: elements {preceding} precede the vertex element; unsupported"
            )
        names = [p[0] for p in vertex_props]
        for coord in ("x", "y", "z"):
            if coord not in names:
                raise CloudParseError(f"{path}: vertex element lacks property {coord!r}")
        if binary:
            dtype = np.dtype([(nm, "<" + code) for nm, code in vertex_props])
            raw = fh.read(dtype.itemsize * n_vertices)
            if len(raw) < dtype.itemsize * n_vertices:
                got = len(raw) // dtype.itemsize
                raise CloudParseError(
                    f"{path}: header declares {n_vertices} vertices, body holds {got}"
                )
            table = np.frombuffer(raw, dtype=dtype, count=n_vertices)
        else:
            table = _read_ascii_vertices(fh, vertex_props, n_vertices, path, n_header_lines)
        trailing = [name for name, _ in elements[1:]]
        if trailing:
            warnings.warn(
                f"{path}: skipping non-vertex elements {trailing}", stacklevel=3
            )

    xyz = np.column_stack([table["x"], table["y"], table["z"]]).astype(np.float64)
    _reject_nonfinite(xyz, path)
    labels = table["is_noise"].astype(bool) if "is_noise" in names else None
    return PointCloud(xyz, labels)


def _parse_ply_header(fh, path: str):
    def next_line():
        line = fh.readline()
        if not line:
            raise CloudParseError(f"{path}: unexpected end of file in header")
        return line.decode("ascii", errors="replace").strip()

    if next_line() != "ply":
        raise CloudParseError(f"{path}: missing 'ply' magic line")
    binary = None
    elements: list[tuple[str, dict]] = []  # (name, {"count": int, "props": [...]})
    n_lines = 1
    while True:
        line = next_line()
        n_lines += 1
        if line == "end_header":
            break
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        fields = line.split()
        if fields[0] == "format":
            if fields[1] == "ascii":
                binary = False
            elif fields[1] == "binary_little_endian":
                binary = True
            elif fields[1] == "binary_big_endian":
                raise CloudParseError(
                    f"{path}: big-endian PLY is not supported; re-export as "
                    "ascii or binary_little_endian"
                )
            else:
                raise CloudParseError(f"{path}: unknown PLY format {fields[1]!r}")
        elif fields[0] == "element":
            elements.append((fields[1], {"count": int(fields[2]), "props": []}))
        elif fields[0] == "property":
            if not elements:
                raise CloudParseError(f"{path}: property before any element (line {n_lines})")
            elements[-1][1]["props"].append(fields[1:])
        else:
            raise CloudParseError(f"{path}: unrecognized header line {line!r}")
    if binary is None:
        raise CloudParseError(f"{path}: header lacks a format line")
    return binary, elements, n_lines


def _vertex_layout(elements, path: str):
    preceding = []
    for name, info in elements:
        if name == "vertex":
            props = []
            for spec in info["props"]:
                if spec[0] == "list":
                    raise CloudParseError(
                        f"{path}: list property in vertex element is not supported"
                    )
                code = _PLY_TYPES.get(spec[0])
                if code is None:
                    raise CloudParseError(f"{path}: unknown property type {spec[0]!r}")
                props.append((spec[1], code))
            return props, info["count"], preceding
        preceding.append(name)
    raise CloudParseError(f"{path}: no vertex element in header")


def _read_ascii_vertices(fh, props, n_vertices, path, header_lines):
    rows = np.empty((n_vertices, len(props)), dtype=np.float64)
    line_no = header_lines
    filled = 0
    for raw in fh:
        line_no += 1
        text = raw.decode("ascii", errors="replace").strip()
        if not text:
            continue
        if filled == n_vertices:
            break
        parts = text.split()
        if len(parts) < len(props):
            raise CloudParseError(
                f"{path}:{line_no}: expected {len(props)} values, got {len(parts)}"
            )
        try:
            rows[filled] = [float(v) for v in parts[: len(props)]]
        except ValueError as exc:
            raise CloudParseError(f"{path}:{line_no}: {exc}") from None
        filled += 1
    if filled < n_vertices:
        raise CloudParseError(
            f"{path}: header declares {n_vertices} vertices, body holds {filled}"
        )
    table = {}
    for j, (name, code) in enumerate(props):
        table[name] = rows[:, j].astype(code)
    return table


def _write_ply(cloud: PointCloud, path: str, binary: bool, precision: str) -> None:
    coord_type = "double" if precision == "double" else "float"
    header = ["ply"]
    header.append(
        "format binary_little_endian 1.0" if binary else "format ascii 1.0"
    )
    header.append(f"element vertex {len(cloud)}")
    header += [f"property {coord_type} {ax}" for ax in "xyz"]
    if cloud.labels is not None:
        header.append("property uchar is_noise")
    header.append("end_header")
    xyz = cloud.xyz.astype("<f8" if precision == "double" else "<f4")

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fields = [("x", xyz.dtype.str), ("y", xyz.dtype.str), ("z", xyz.dtype.str)]
            if cloud.labels is not None:
                fields.append(("is_noise", "u1"))
            rec = np.empty(len(cloud), dtype=np.dtype(fields))
            rec["x"], rec["y"], rec["z"] = xyz[:, 0], xyz[:, 1], xyz[:, 2]
            if cloud.labels is not None:
                rec["is_noise"] = cloud.labels.astype("u1")
            fh.write(rec.tobytes())
        else:
            digits = 17 if precision == "double" else 9
            labels = cloud.labels
            for i in range(len(cloud)):
                coords = " ".join(f"{v:.{digits}g}" for v in xyz[i])
                if labels is not None:
                    coords += f" {int(labels[i])}"
                fh.write((coords + "\n").encode("ascii"))


# ---------------------------------------------------------------------------
# XYZ text
# ---------------------------------------------------------------------------

def _read_xyz(path: str) -> PointCloud:
    coords: list[list[float]] = []
    labels: list[int] = []
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (3, 4):
                raise CloudParseError(
                    f"{path}:{line_no}: expected 'x y z [is_noise]', got {len(parts)} fields"
                )
            try:
                coords.append([float(v) for v in parts[:3]])
            except ValueError as exc:
                raise CloudParseError(f"{path}:{line_no}: {exc}") from None
            labels.append(int(parts[3]) if len(parts) == 4 else -1)
    if not coords:
        raise CloudParseError(f"{path}: no points found")
    has_label = [v >= 0 for v in labels]
    if any(has_label) and not all(has_label):
        raise CloudParseError(f"{path}: label column present on some lines only")
    xyz = np.asarray(coords, dtype=np.float64)
    _reject_nonfinite(xyz, path)
    return PointCloud(xyz, np.asarray(labels, dtype=bool) if all(has_label) else None)


def _write_xyz(cloud: PointCloud, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        labels = cloud.labels
        for i in range(len(cloud)):
            line = " ".join(f"{v:.17g}" for v in cloud.xyz[i])
            if labels is not None:
                line += f" {int(labels[i])}"
            fh.write(line + "\n")


def _reject_nonfinite(xyz: np.ndarray, path: str) -> None:
    bad = np.flatnonzero(~np.isfinite(xyz).all(axis=1))
    if bad.size:
        head = ", ".join(str(int(b)) for b in bad[:5])
        raise CloudParseError(
            f"{path}: non-finite coordinates at record(s) [{head}]"
            + ("" if bad.size <= 5 else f" (+{bad.size - 5} more)")
        )
