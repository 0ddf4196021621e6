"""Reading, validating and placing triangle meshes.

Meshes are plain triangle soups in micrometres.  Neither STL nor OBJ carries
units, so callers place a design in the working area with
:func:`transform_mesh`.
"""

import struct
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidCoordinate,
    MeshSyntaxError,
    TruncatedFile,
    ZeroScale,
)

__all__ = [
    "Mesh",
    "MeshReport",
    "parse_stl",
    "parse_obj",
    "write_stl",
    "validate_mesh",
    "transform_mesh",
    "load_mesh",
]

_STL_HEADER = 80
_STL_FACET = np.dtype(
    [("normal", "<f4", (3,)), ("vertices", "<f4", (3, 3)), ("attr", "<u2")]
)
DEGENERATE_AREA_UM2 = 1e-12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle soup; ``triangles`` has shape ``(n, 3, 3)`` as (triangle, vertex, xyz)."""

    triangles: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        tri = np.array(self.triangles, dtype=float).reshape(-1, 3, 3)
        if not np.all(np.isfinite(tri)):
            raise InvalidCoordinate("mesh contains NaN or infinite coordinates")
        tri.setflags(write=False)
        object.__setattr__(self, "triangles", tri)

    def __len__(self):
        return len(self.triangles)

    @property
    def vertices(self):
        return self.triangles.reshape(-1, 3)


@dataclass(frozen=True)
class MeshReport:
    triangle_count: int
    degenerate_count: int
    bbox_min: Optional[tuple]
    bbox_max: Optional[tuple]


def _parse_stl_ascii(text):
    lines = text.splitlines()
    triangles = []
    name = None
    facet = None
    state = "outside"
    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        key = tokens[0].lower()
        if state == "outside":
            if key != "solid":
                raise MeshSyntaxError(f"expected 'solid', got {tokens[0]!r}", lineno)
            if name is None and len(tokens) > 1:
                name = " ".join(tokens[1:])
            state = "solid"
        elif state == "solid":
            if key == "facet":
                facet = []
                state = "facet"
            elif key == "endsolid":
                state = "outside"
            else:
                raise MeshSyntaxError(f"expected 'facet' or 'endsolid', got {tokens[0]!r}", lineno)
        elif state == "facet":
            if key != "outer" or len(tokens) < 2 or tokens[1].lower() != "loop":
                raise MeshSyntaxError("expected 'outer loop'", lineno)
            state = "loop"
        elif state == "loop":
            if key == "vertex":
                if len(tokens) != 4:
                    raise MeshSyntaxError("vertex needs exactly three coordinates", lineno)
                try:
                    xyz = [float(t) for t in tokens[1:]]
                except ValueError:
                    raise MeshSyntaxError(f"bad vertex coordinate in {raw.strip()!r}", lineno) from None
                if not all(np.isfinite(xyz)):
                    raise InvalidCoordinate(f"line {lineno}: non-finite vertex coordinate")
                facet.append(xyz)
            elif key == "endloop":
                if len(facet) != 3:
                    raise MeshSyntaxError(f"facet has {len(facet)} vertices, expected 3", lineno)
                state = "endloop"
            else:
                raise MeshSyntaxError(f"expected 'vertex' or 'endloop', got {tokens[0]!r}", lineno)
        elif state == "endloop":
            if key != "endfacet":
                raise MeshSyntaxError("expected 'endfacet'", lineno)
            triangles.append(facet)
            state = "solid"
    if state != "outside":
        raise MeshSyntaxError("unexpected end of file", len(lines))
    return Mesh(np.array(triangles, dtype=float).reshape(-1, 3, 3), name=name)


def _parse_stl_binary(data):
    if len(data) < _STL_HEADER + 4:
        raise TruncatedFile(f"binary STL needs at least 84 bytes, got {len(data)}")
    (count,) = struct.unpack_from("<I", data, _STL_HEADER)
    expected = _STL_HEADER + 4 + _STL_FACET.itemsize * count
    if len(data) != expected:
        raise TruncatedFile(
            f"binary STL declares {count} facets ({expected} bytes) but file has {len(data)} bytes"
        )
    facets = np.frombuffer(data, dtype=_STL_FACET, count=count, offset=_STL_HEADER + 4)
    tri = facets["vertices"].astype(float)
    if not np.all(np.isfinite(tri)):
        bad = int(np.flatnonzero(~np.isfinite(tri).reshape(count, -1).all(axis=1))[0])
        raise InvalidCoordinate(f"facet {bad} has a non-finite vertex coordinate")
    header = bytes(data[:_STL_HEADER]).split(b"\0", 1)[0].decode("ascii", "replace").strip()
    return Mesh(tri, name=header or None)


def parse_stl(data):
    """Parse an STL file (ASCII or binary) into a :class:`Mesh`.

    The file is treated as ASCII when it begins with ``solid`` and parses as
    ASCII; otherwise as binary.  Facet normals are ignored.
    """
    data = bytes(data)
    if data.lstrip()[:5].lower() == b"solid":
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            return _parse_stl_binary(data)
        try:
            return _parse_stl_ascii(text)
        except MeshSyntaxError:
            # Binary files may also start with "solid" in their header.
            if len(data) >= 84:
                (count,) = struct.unpack_from("<I", data, _STL_HEADER)
                if len(data) == _STL_HEADER + 4 + 50 * count:
                    return _parse_stl_binary(data)
            raise
    return _parse_stl_binary(data)


def write_stl(mesh, header=b""):
    """Serialize ``mesh`` as binary STL with geometric facet normals."""
    tri = mesh.triangles
    facets = np.zeros(len(tri), dtype=_STL_FACET)
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    norm = np.linalg.norm(normals, axis=1, keepdims=True)
    facets["normal"] = np.divide(normals, norm, out=np.zeros_like(normals), where=norm > 0)
    facets["vertices"] = tri
    if not header and mesh.name:
        header = mesh.name.encode("ascii", "replace")
    head = header[:_STL_HEADER].ljust(_STL_HEADER, b"\0")
    return head + struct.pack("<I", len(tri)) + facets.tobytes()


def parse_obj(text):
    """Parse the vertex/face subset of Wavefront OBJ.

    Polygons are fan-triangulated from their first vertex; ``v/vt/vn`` index
    forms and negative (relative) indices are accepted.  Records other than
    ``v`` and ``f`` are skipped with a warning.
    """
    vertices = []
    triangles = []
    skipped = set()
    name = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        key = tokens[0]
        if key == "v":
            if len(tokens) not in (4, 5):
                raise MeshSyntaxError("vertex needs 3 coordinates (optionally w)", lineno)
            try:
                xyz = [float(t) for t in tokens[1:4]]
            except ValueError:
                raise MeshSyntaxError(f"bad vertex coordinate in {line!r}", lineno) from None
            if not all(np.isfinite(xyz)):
                raise InvalidCoordinate(f"line {lineno}: non-finite vertex coordinate")
            vertices.append(xyz)
        elif key == "f":
            if len(tokens) < 4:
                raise MeshSyntaxError("face needs at least 3 vertices", lineno)
            idx = []
            for tok in tokens[1:]:
                head = tok.split("/", 1)[0]
                try:
                    k = int(head)
                except ValueError:
                    raise MeshSyntaxError(f"bad face index {tok!r}", lineno) from None
                n = len(vertices)
                if k > 0 and k <= n:
                    idx.append(k - 1)
                elif k < 0 and -k <= n:
                    idx.append(n + k)
                else:
                    raise IndexOutOfRange(f"line {lineno}: face index {k} with {n} vertices defined")
            for a, b in zip(idx[1:-1], idx[2:]):
                triangles.append((vertices[idx[0]], vertices[a], vertices[b]))
        else:
            if key == "o" and name is None and len(tokens) > 1:
                name = " ".join(tokens[1:])
            elif key not in skipped:
                skipped.add(key)
                warnings.warn(f"OBJ record {key!r} ignored (first seen on line {lineno})", stacklevel=2)
    return Mesh(np.array(triangles, dtype=float).reshape(-1, 3, 3), name=name)


def load_mesh(path):
    """Load an ``.stl`` or ``.obj`` file by extension."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if path.lower().endswith(".obj"):
        return parse_obj(data.decode("utf-8"))
    return parse_stl(data)


def validate_mesh(mesh):
    tri = mesh.triangles
    if len(tri) == 0:
        return MeshReport(0, 0, None, None)
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    verts = mesh.vertices
    return MeshReport(
        triangle_count=len(tri),
        degenerate_count=int(np.count_nonzero(area <= DEGENERATE_AREA_UM2)),
        bbox_min=tuple(float(v) for v in verts.min(axis=0)),
        bbox_max=tuple(float(v) for v in verts.max(axis=0)),
    )


def transform_mesh(mesh, scale=(1.0, 1.0, 1.0), translate=(0.0, 0.0, 0.0)):
    """Return a copy of ``mesh`` with ``v' = v * scale + translate`` applied per vertex."""
    scale = np.asarray(scale, dtype=float).reshape(3)
    translate = np.asarray(translate, dtype=float).reshape(3)
    if not np.all(np.isfinite(scale)) or not np.all(np.isfinite(translate)):
        raise InvalidCoordinate("scale and translation must be finite")
    if np.any(scale == 0):
        raise ZeroScale(f"scale components must be nonzero, got {tuple(scale)}")
    return Mesh(mesh.triangles * scale + translate, name=mesh.name)
