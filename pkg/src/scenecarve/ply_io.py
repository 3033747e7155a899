"""PLY mesh reader/writer (ascii and binary little-endian).

Supports the subset the toolkit ingests: a vertex element with x/y/z
(float or double), optional red/green/blue (uchar or float), optional
nx/ny/nz, and a face element with a vertex_indices list property.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import PlyParseError, ValidationError

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class _Property:
    def __init__(self, name, dtype, is_list=False, count_dtype=None):
        self.name = name
        self.dtype = dtype
        self.is_list = is_list
        self.count_dtype = count_dtype


class _Element:
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.properties = []


def _parse_header(lines):
    """Parse header lines (already decoded) into (format, elements)."""
    if not lines or lines[0].strip() != "ply":
        raise PlyParseError("missing 'ply' magic", line=1)
    fmt = None
    elements = []
    current = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        parts = line.split()
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] not in (
                "ascii", "binary_little_endian"
            ):
                raise PlyParseError(
                    f"unsupported format {' '.join(parts[1:])!r}", line=lineno
                )
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3:
                raise PlyParseError("malformed element declaration", line=lineno)
            try:
                count = int(parts[2])
            except ValueError:
                raise PlyParseError("element count is not an integer", line=lineno)
            current = _Element(parts[1], count)
            elements.append(current)
        elif parts[0] == "property":
            if current is None:
                raise PlyParseError("property before any element", line=lineno)
            if parts[1] == "list":
                if len(parts) != 5:
                    raise PlyParseError("malformed list property", line=lineno)
                cdt, dt = parts[2], parts[3]
                if cdt not in _SCALAR_TYPES or dt not in _SCALAR_TYPES:
                    raise PlyParseError(f"unknown list types {cdt}/{dt}", line=lineno)
                current.properties.append(
                    _Property(parts[4], _SCALAR_TYPES[dt], True, _SCALAR_TYPES[cdt])
                )
            else:
                if len(parts) != 3:
                    raise PlyParseError("malformed property", line=lineno)
                if parts[1] not in _SCALAR_TYPES:
                    raise PlyParseError(f"unknown type {parts[1]!r}", line=lineno)
                current.properties.append(_Property(parts[2], _SCALAR_TYPES[parts[1]]))
        elif parts[0] == "end_header":
            if fmt is None:
                raise PlyParseError("no format line before end_header", line=lineno)
            return fmt, elements, lineno
        else:
            raise PlyParseError(f"unknown header keyword {parts[0]!r}", line=lineno)
    raise PlyParseError("header never terminated with end_header", line=len(lines))


def _read_ascii_elements(text_rows, elements, header_lines):
    data = {}
    row_iter = iter(enumerate(text_rows, start=header_lines + 1))
    for elem in elements:
        rows = []
        for _ in range(elem.count):
            try:
                lineno, row = next(row_iter)
            except StopIteration:
                raise PlyParseError(
                    f"file ends inside element {elem.name!r}",
                    line=header_lines + len(text_rows),
                )
            tokens = row.split()
            values = {}
            pos = 0
            for prop in elem.properties:
                try:
                    if prop.is_list:
                        n = int(tokens[pos]); pos += 1
                        vals = [float(tokens[pos + i]) for i in range(n)]
                        pos += n
                        values[prop.name] = vals
                    else:
                        values[prop.name] = float(tokens[pos]); pos += 1
                except (IndexError, ValueError):
                    raise PlyParseError(
                        f"bad row for element {elem.name!r}", line=lineno
                    )
            rows.append(values)
        data[elem.name] = rows
    return data


def _read_binary_elements(buf, offset, elements):
    data = {}
    for elem in elements:
        fixed = all(not p.is_list for p in elem.properties)
        if fixed:
            dtype = np.dtype([(p.name, "<" + p.dtype) for p in elem.properties])
            need = dtype.itemsize * elem.count
            if offset + need > len(buf):
                raise PlyParseError(
                    f"file truncated inside element {elem.name!r}", offset=offset
                )
            arr = np.frombuffer(buf, dtype=dtype, count=elem.count, offset=offset)
            offset += need
            rows = [
                {p.name: float(arr[p.name][i]) for p in elem.properties}
                for i in range(elem.count)
            ]
            data[elem.name] = rows
        else:
            rows = []
            for _ in range(elem.count):
                values = {}
                for prop in elem.properties:
                    if prop.is_list:
                        cdt = np.dtype("<" + prop.count_dtype)
                        if offset + cdt.itemsize > len(buf):
                            raise PlyParseError("truncated list count", offset=offset)
                        n = int(np.frombuffer(buf, cdt, 1, offset)[0])
                        offset += cdt.itemsize
                        dt = np.dtype("<" + prop.dtype)
                        if offset + n * dt.itemsize > len(buf):
                            raise PlyParseError("truncated list body", offset=offset)
                        values[prop.name] = (
                            np.frombuffer(buf, dt, n, offset).astype(float).tolist()
                        )
                        offset += n * dt.itemsize
                    else:
                        dt = np.dtype("<" + prop.dtype)
                        if offset + dt.itemsize > len(buf):
                            raise PlyParseError("truncated property", offset=offset)
                        values[prop.name] = float(np.frombuffer(buf, dt, 1, offset)[0])
                        offset += dt.itemsize
                rows.append(values)
            data[elem.name] = rows
    return data


def read_ply(path):
    """Read a PLY file.

    Returns (vertices (n,3) float64, faces (m,3) int32, colors (n,3) float64
    in [0,1] or None, normals (n,3) float64 or None).
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    header_end = raw.find(b"end_header")
    if header_end < 0:
        raise PlyParseError("no end_header found", offset=len(raw))
    nl = raw.find(b"\n", header_end)
    if nl < 0:
        raise PlyParseError("end_header line not terminated", offset=header_end)
    header_text = raw[: nl + 1].decode("ascii", errors="replace")
    header_lines = header_text.splitlines()
    fmt, elements, _ = _parse_header(header_lines)

    if fmt == "ascii":
        body = raw[nl + 1 :].decode("ascii", errors="replace")
        rows = [r for r in body.splitlines()]
        data = _read_ascii_elements(rows, elements, len(header_lines))
    else:
        data = _read_binary_elements(raw, nl + 1, elements)

    if "vertex" not in data:
        raise PlyParseError("no vertex element", line=1)
    vrows = data["vertex"]
    for axis in ("x", "y", "z"):
        if vrows and axis not in vrows[0]:
            raise PlyParseError(f"vertex element lacks property {axis!r}", line=1)
    vertices = np.array(
        [[r["x"], r["y"], r["z"]] for r in vrows], dtype=np.float64
    ).reshape(-1, 3)

    colors = None
    if vrows and all(c in vrows[0] for c in ("red", "green", "blue")):
        colors = np.array(
            [[r["red"], r["green"], r["blue"]] for r in vrows], dtype=np.float64
        )
        if colors.size and colors.max() > 1.0:
            colors = colors / 255.0
        colors = np.clip(colors, 0.0, 1.0)

    normals = None
    if vrows and all(c in vrows[0] for c in ("nx", "ny", "nz")):
        normals = np.array(
            [[r["nx"], r["ny"], r["nz"]] for r in vrows], dtype=np.float64
        )

    faces = []
    if "face" in data:
        for i, row in enumerate(data["face"]):
            idx = None
            for key in ("vertex_indices", "vertex_index"):
                if key in row:
                    idx = [int(v) for v in row[key]]
                    break
            if idx is None:
                raise PlyParseError("face row lacks vertex_indices", line=1)
            if len(idx) < 3:
                raise ValidationError(f"face {i} has fewer than 3 vertices")
            for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                faces.append((idx[0], idx[k], idx[k + 1]))
    faces = np.array(faces, dtype=np.int32).reshape(-1, 3)

    n = len(vertices)
    if faces.size:
        bad = (faces < 0) | (faces >= n)
        if bad.any():
            fi = int(np.argwhere(bad.any(axis=1))[0][0])
            raise ValidationError(
                f"face {fi} references vertex {int(faces[fi][bad[fi]][0])} "
                f"but mesh has {n} vertices"
            )
        degen = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        )
        if degen.any():
            fi = int(np.argwhere(degen)[0][0])
            raise ValidationError(f"face {fi} is degenerate (repeated vertex index)")
    return vertices, faces, colors, normals


def write_ply(path, vertices, faces, colors=None, normals=None, binary=True):
    """Write a triangle mesh as PLY. Colors are float [0,1], stored as uchar."""
    vertices = np.asarray(vertices, dtype=np.float32).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int32).reshape(-1, 3)
    n, m = len(vertices), len(faces)

    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    header.append(f"element vertex {n}")
    header += ["property float x", "property float y", "property float z"]
    if normals is not None:
        header += ["property float nx", "property float ny", "property float nz"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append(f"element face {m}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")

    if colors is not None:
        c8 = np.clip(np.asarray(colors, dtype=np.float64) * 255.0 + 0.5, 0, 255).astype(
            np.uint8
        )
    if normals is not None:
        nrm = np.asarray(normals, dtype=np.float32).reshape(-1, 3)

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            for i in range(n):
                fh.write(struct.pack("<3f", *vertices[i]))
                if normals is not None:
                    fh.write(struct.pack("<3f", *nrm[i]))
                if colors is not None:
                    fh.write(struct.pack("<3B", *c8[i]))
            for f in faces:
                fh.write(struct.pack("<B3i", 3, *f))
        else:
            for i in range(n):
                parts = [f"{v:.9g}" for v in vertices[i]]
                if normals is not None:
                    parts += [f"{v:.9g}" for v in nrm[i]]
                if colors is not None:
                    parts += [str(int(v)) for v in c8[i]]
                fh.write((" ".join(parts) + "\n").encode("ascii"))
            for f in faces:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n".encode("ascii"))
