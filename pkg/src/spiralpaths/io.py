"""OFF / OBJ mesh reading and writing, path polylines, JSON helpers."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidMesh, MeshParseError
from .mesh import Polytope


def _tokens(text: str):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def parse_off(text: str):
    lines = list(_tokens(text))
    if not lines or not lines[0].startswith("OFF"):
        raise MeshParseError("missing OFF header")
    head = lines[0][3:].split()
    rest = lines[1:]
    if not head:
        if not rest:
            raise MeshParseError("missing counts line")
        head, rest = rest[0].split(), rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError) as exc:
        raise MeshParseError("bad counts line") from exc
    if len(rest) < nv + nf:
        raise MeshParseError("file ends early")
    try:
        V = np.array([[float(x) for x in rest[k].split()[:3]] for k in range(nv)])
        F = []
        for k in range(nv, nv + nf):
            parts = [int(x) for x in rest[k].split()]
            n = parts[0]
            face = parts[1 : 1 + n]
            if len(face) != n or n < 3:
                raise MeshParseError(f"bad face line {k}")
            F.extend([face[0], face[m], face[m + 1]] for m in range(1, n - 1))
    except ValueError as exc:
        raise MeshParseError("non-numeric entry") from exc
    return _check(V, F)


def parse_obj(text: str):
    V, F = [], []
    try:
        for line in _tokens(text):
            parts = line.split()
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                idx = [i - 1 if i > 0 else len(V) + i for i in idx]
                F.extend([idx[0], idx[m], idx[m + 1]] for m in range(1, len(idx) - 1))
    except (ValueError, IndexError) as exc:
        raise MeshParseError("malformed OBJ record") from exc
    return _check(np.array(V, dtype=float).reshape(-1, 3), F)


def _check(V, F):
    if len(V) < 4 or not F:
        raise MeshParseError("too few vertices or faces")
    F = np.array(F, dtype=np.int64)
    if F.min() < 0 or F.max() >= len(V):
        raise MeshParseError("face index out of range")
    if V.shape[1] != 3 or not np.all(np.isfinite(V)):
        raise MeshParseError("vertices must be finite 3D points")
    return V, F


def read_mesh(path) -> Polytope:
    """Load an OFF or OBJ file as a validated convex Polytope."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshParseError(str(exc)) from exc
    return mesh_from_text(text, "obj" if path.suffix.lower() == ".obj" else "off")


def mesh_from_text(text: str, fmt: str = "off") -> Polytope:
    """Parse OFF or OBJ text into a validated convex Polytope."""
    V, F = parse_obj(text) if fmt == "obj" else parse_off(text)
    try:
        return Polytope.from_faces(V, F)
    except InvalidMesh as exc:
        raise MeshParseError(f"not a closed convex triangulated surface: {exc}") from exc


def off_text(poly: Polytope) -> str:
    out = ["OFF", f"{poly.n_vertices} {poly.n_facets} {len(poly.edges)}"]
    out += [" ".join(repr(float(c)) for c in v) for v in poly.vertices]
    out += ["3 " + " ".join(str(int(i)) for i in f) for f in poly.facets]
    return "\n".join(out) + "\n"


def obj_text(poly: Polytope) -> str:
    out = ["v " + " ".join(repr(float(c)) for c in v) for v in poly.vertices]
    out += ["f " + " ".join(str(int(i) + 1) for i in f) for f in poly.facets]
    return "\n".join(out) + "\n"


def write_mesh(poly: Polytope, path) -> Path:
    path = Path(path)
    path.write_text(obj_text(poly) if path.suffix.lower() == ".obj" else off_text(poly))
    return path


def polyline_obj(xyz) -> str:
    """OBJ text with one ``l`` record through the given points."""
    xyz = np.asarray(xyz, dtype=float)
    out = ["v " + " ".join(repr(float(c)) for c in p) for p in xyz]
    out.append("l " + " ".join(str(k + 1) for k in range(len(xyz))))
    return "\n".join(out) + "\n"


def path_record(path) -> dict:
    return {
        "points": [{"facet": int(p.facet), "bary": [float(b) for b in p.bary]} for p in path.points],
        "xyz": np.asarray(path.xyz, dtype=float).tolist(),
        "crossed_edges": [int(e) for e in path.crossed_edges],
        "length": float(path.length),
        "certified": bool(path.certified),
        "ties": bool(path.ties),
    }


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(o):
    # JSON has no infinity; encode it as a string
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_finite(json.loads(json.dumps(obj, default=_default, allow_nan=True))), indent=2, sort_keys=True)
