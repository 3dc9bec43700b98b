"""Parsing and validation of submission/rubric scene files.

Two carriers are supported: the Scene Grading Format (SGF), a JSON
document holding objects, transforms, meshes and cameras; and Wavefront
OBJ as a geometry-only fallback (no transforms, no cameras).

Parsers never raise on bad input: they return a ValidationReport instead
of a Scene, with one entry per problem and a document path for each.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import SceneValidationError
from .scene import (
    Camera,
    Mesh,
    PrimitiveType,
    Quaternion,
    Scene,
    SceneObject,
    Transform,
    Vec3,
    quaternion_from_euler_xyz,
)

__all__ = [
    "ValidationReport",
    "parse_sgf",
    "parse_obj",
    "parse_scene_file",
    "validate_scene",
    "serialize_sgf",
    "SGF_VERSION",
    "OBJ_UNITS_LABEL",
]

SGF_VERSION = 1
OBJ_UNITS_LABEL = "wavefront-obj"

_PRIMITIVE_LABELS = {p.value for p in PrimitiveType if p is not PrimitiveType.UNKNOWN}
_KNOWN_OBJECT_KEYS = {"name", "primitive", "transform", "mesh", "modifiers"}
_KNOWN_CAMERA_KEYS = {"name", "transform", "fov_y_radians", "aspect", "clip_near", "clip_far"}
_KNOWN_TRANSFORM_KEYS = {"location", "rotation_quaternion", "rotation_euler_xyz", "scale"}
_KNOWN_TOP_KEYS = {"sgf_version", "units", "objects", "cameras"}


@dataclass
class ValidationReport:
    """Findings from parsing or validating a scene document.

    Each entry is (path-in-document, message). A Scene is only produced
    when `errors` is empty.
    """

    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, path: str, message: str) -> None:
        self.errors.append((path, message))

    def warn(self, path: str, message: str) -> None:
        self.warnings.append((path, message))

    def extend(self, other: "ValidationReport") -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)

    def to_dict(self) -> dict:
        return {
            "errors": [{"path": p, "message": m} for p, m in self.errors],
            "warnings": [{"path": p, "message": m} for p, m in self.warnings],
        }

    def __str__(self) -> str:
        lines = [f"error at {p}: {m}" for p, m in self.errors]
        lines += [f"warning at {p}: {m}" for p, m in self.warnings]
        return "\n".join(lines) or "ok"


def _as_float_list(value: Any, n: int, path: str, report: ValidationReport) -> list[float] | None:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        report.error(path, f"expected a list of {n} numbers")
        return None
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            report.error(f"{path}[{i}]", "expected a number")
            return None
        fv = float(v)
        if not math.isfinite(fv):
            report.error(f"{path}[{i}]", f"non-finite value {v!r}")
            return None
        out.append(fv)
    return out


def _parse_transform(
    data: Any, path: str, report: ValidationReport, *, for_camera: bool = False
) -> Transform | None:
    if not isinstance(data, dict):
        report.error(path, "transform must be an object")
        return None
    for key in data:
        if key not in _KNOWN_TRANSFORM_KEYS:
            report.warn(f"{path}.{key}", "unknown field ignored")

    loc = _as_float_list(data.get("location", [0.0, 0.0, 0.0]), 3, f"{path}.location", report)

    has_quat = "rotation_quaternion" in data
    has_euler = "rotation_euler_xyz" in data
    rotation: Quaternion | None = None
    if has_quat and has_euler:
        report.error(path, "give exactly one of rotation_quaternion / rotation_euler_xyz")
    elif has_quat:
        q = _as_float_list(data["rotation_quaternion"], 4, f"{path}.rotation_quaternion", report)
        if q is not None:
            norm = math.sqrt(sum(c * c for c in q))
            if abs(norm - 1.0) > 1e-3:
                report.error(
                    f"{path}.rotation_quaternion",
                    f"quaternion norm {norm:.6f} deviates from 1 by more than 1e-3",
                )
            else:
                rotation = Quaternion.of(q)
    elif has_euler:
        e = _as_float_list(data["rotation_euler_xyz"], 3, f"{path}.rotation_euler_xyz", report)
        if e is not None:
            rotation = quaternion_from_euler_xyz(*e)
    else:
        report.error(path, "missing rotation_quaternion or rotation_euler_xyz")

    if for_camera:
        scale = [1.0, 1.0, 1.0]  # camera scale is ignored for projection
    else:
        scale = _as_float_list(data.get("scale", [1.0, 1.0, 1.0]), 3, f"{path}.scale", report)
        if scale is not None and any(s <= 0 for s in scale):
            report.error(f"{path}.scale", f"scale components must be > 0, got {scale}")
            scale = None

    if loc is None or rotation is None or scale is None:
        return None
    return Transform(Vec3.of(loc), rotation, Vec3.of(scale))


def _parse_mesh(data: Any, path: str, report: ValidationReport) -> Mesh | None:
    if not isinstance(data, dict):
        report.error(path, "mesh must be an object with vertices and faces")
        return None
    raw_verts = data.get("vertices")
    raw_faces = data.get("faces")
    if not isinstance(raw_verts, list):
        report.error(f"{path}.vertices", "expected a list of [x, y, z] triples")
        return None
    if not isinstance(raw_faces, list):
        report.error(f"{path}.faces", "expected a list of index lists")
        return None

    # Fast path for the common case of a clean numeric (N, 3) array;
    # fall back to the per-vertex walk for precise error locations.
    verts: list[list[float]] | np.ndarray
    try:
        arr = np.array(raw_verts, dtype=np.float64)
    except (TypeError, ValueError):
        arr = None
    if arr is not None and arr.ndim == 2 and arr.shape[1] == 3 and np.all(np.isfinite(arr)):
        verts = arr
    else:
        verts = []
        for i, v in enumerate(raw_verts):
            fv = _as_float_list(v, 3, f"{path}.vertices[{i}]", report)
            if fv is None:
                return None
            verts.append(fv)

    faces: list[list[int]] = []
    n = len(verts)
    bad = False
    for fi, f in enumerate(raw_faces):
        fpath = f"{path}.faces[{fi}]"
        if not isinstance(f, list) or len(f) < 3:
            report.error(fpath, "face needs at least 3 vertex indices")
            bad = True
            continue
        idx = []
        for v in f:
            if isinstance(v, bool) or not isinstance(v, int):
                report.error(fpath, f"face index {v!r} is not an integer")
                bad = True
                break
            idx.append(v)
        else:
            out_of_range = [i for i in idx if i < 0 or i >= n]
            if out_of_range:
                report.error(
                    fpath,
                    f"face references vertex {out_of_range[0]}, mesh has {n} vertices",
                )
                bad = True
            elif len(set(idx)) != len(idx):
                report.error(fpath, "face repeats a vertex index")
                bad = True
            else:
                faces.append(idx)
    if bad:
        return None
    try:
        return Mesh(np.array(verts, dtype=np.float64).reshape(len(verts), 3), faces)
    except SceneValidationError as exc:
        report.error(path, str(exc))
        return None


def parse_sgf(document: bytes | str) -> tuple[Scene | None, ValidationReport]:
    """Parse an SGF JSON document.

    Returns (scene, report); the scene is None exactly when the report
    carries errors. Unknown fields are ignored with a warning.
    """
    report = ValidationReport()
    if isinstance(document, bytes):
        try:
            text = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            report.error("$", f"not valid UTF-8: {exc}")
            return None, report
    else:
        text = document

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        report.error("$", f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        return None, report

    if not isinstance(doc, dict):
        report.error("$", "top-level value must be an object")
        return None, report

    for key in doc:
        if key not in _KNOWN_TOP_KEYS:
            report.warn(f"$.{key}", "unknown field ignored")

    version = doc.get("sgf_version")
    if version is None:
        report.warn("$.sgf_version", "missing, assuming version 1")
    elif version != SGF_VERSION:
        report.error("$.sgf_version", f"unsupported version {version!r}, expected {SGF_VERSION}")

    units = doc.get("units", "")
    if not isinstance(units, str):
        report.warn("$.units", "expected a string, ignoring")
        units = ""

    objects: list[SceneObject] = []
    seen_names: set[str] = set()
    raw_objects = doc.get("objects", [])
    if not isinstance(raw_objects, list):
        report.error("$.objects", "expected a list")
        raw_objects = []
    for i, raw in enumerate(raw_objects):
        path = f"objects[{i}]"
        if not isinstance(raw, dict):
            report.error(path, "object entry must be a JSON object")
            continue
        for key in raw:
            if key not in _KNOWN_OBJECT_KEYS:
                report.warn(f"{path}.{key}", "unknown field ignored")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            report.error(f"{path}.name", "object name must be a non-empty string")
            continue
        if name in seen_names:
            report.error(f"{path}.name", f"duplicate object name {name!r}")
            continue
        seen_names.add(name)

        declared: PrimitiveType | None = None
        raw_prim = raw.get("primitive")
        if raw_prim is not None:
            if not isinstance(raw_prim, str):
                report.warn(f"{path}.primitive", "expected a string or null, treating as unknown")
                declared = PrimitiveType.UNKNOWN
            elif raw_prim.strip().lower() not in _PRIMITIVE_LABELS:
                report.warn(
                    f"{path}.primitive",
                    f"unrecognized primitive label {raw_prim!r}, treating as unknown",
                )
                declared = PrimitiveType.UNKNOWN
            else:
                declared = PrimitiveType.from_label(raw_prim)

        if "transform" not in raw:
            report.error(f"{path}.transform", "missing transform")
            continue
        transform = _parse_transform(raw["transform"], f"{path}.transform", report)
        if "mesh" not in raw:
            report.error(f"{path}.mesh", "missing mesh")
            continue
        mesh = _parse_mesh(raw["mesh"], f"{path}.mesh", report)

        modifiers_raw = raw.get("modifiers", [])
        modifiers: list[str] = []
        if not isinstance(modifiers_raw, list) or any(
            not isinstance(m, str) for m in modifiers_raw
        ):
            report.warn(f"{path}.modifiers", "expected a list of strings, ignoring")
        else:
            modifiers = list(modifiers_raw)

        if transform is None or mesh is None:
            continue
        objects.append(
            SceneObject(
                name=name,
                mesh=mesh,
                transform=transform,
                declared_primitive=declared,
                modifiers=tuple(modifiers),
            )
        )

    cameras: list[Camera] = []
    seen_cam_names: set[str] = set()
    raw_cameras = doc.get("cameras", [])
    if not isinstance(raw_cameras, list):
        report.error("$.cameras", "expected a list")
        raw_cameras = []
    for i, raw in enumerate(raw_cameras):
        path = f"cameras[{i}]"
        if not isinstance(raw, dict):
            report.error(path, "camera entry must be a JSON object")
            continue
        for key in raw:
            if key not in _KNOWN_CAMERA_KEYS:
                report.warn(f"{path}.{key}", "unknown field ignored")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            report.error(f"{path}.name", "camera name must be a non-empty string")
            continue
        if name in seen_cam_names:
            report.error(f"{path}.name", f"duplicate camera name {name!r}")
            continue
        seen_cam_names.add(name)
        if "transform" not in raw:
            report.error(f"{path}.transform", "missing transform")
            continue
        transform = _parse_transform(raw["transform"], f"{path}.transform", report, for_camera=True)

        numbers = {}
        bad = False
        for fieldname in ("fov_y_radians", "aspect", "clip_near", "clip_far"):
            v = raw.get(fieldname)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
                report.error(f"{path}.{fieldname}", "expected a finite number")
                bad = True
            else:
                numbers[fieldname] = float(v)
        if bad or transform is None:
            continue
        try:
            cameras.append(
                Camera(
                    name=name,
                    transform=transform,
                    fov_y=numbers["fov_y_radians"],
                    aspect=numbers["aspect"],
                    clip_near=numbers["clip_near"],
                    clip_far=numbers["clip_far"],
                )
            )
        except SceneValidationError as exc:
            report.error(path, str(exc))

    if report.errors:
        return None, report
    try:
        scene = Scene(objects=tuple(objects), cameras=tuple(cameras), units=units)
    except SceneValidationError as exc:
        report.error("$", str(exc))
        return None, report
    return scene, report


def _resolve_obj_index(raw: int, vertex_count: int) -> int | None:
    """Wavefront indices are 1-based; negative values count from the end."""
    if raw > 0:
        idx = raw - 1
    elif raw < 0:
        idx = vertex_count + raw
    else:
        return None
    if 0 <= idx < vertex_count:
        return idx
    return None


def parse_obj(document: bytes | str) -> tuple[Scene | None, ValidationReport]:
    """Parse Wavefront OBJ text into a geometry-only Scene.

    `v`, `f`, `o`, `g` and `#` records are honored; everything else is
    ignored with a warning. Transforms come back as identity (OBJ bakes
    world coordinates) and there are no cameras, so pose and camera checks
    are not assessable for OBJ submissions.
    """
    report = ValidationReport()
    if isinstance(document, bytes):
        try:
            text = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            report.error("$", f"not valid UTF-8: {exc}")
            return None, report
    else:
        text = document

    vertices: list[list[float]] = []
    # Each group: (name, list of faces as global vertex indices)
    groups: list[tuple[str, list[list[int]]]] = []
    current: list[list[int]] | None = None
    current_name = ""
    ignored: set[str] = set()

    def open_group(name: str) -> None:
        nonlocal current, current_name
        current = []
        current_name = name
        groups.append((name, current))

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        where = f"line {lineno}"
        if tag == "v":
            if len(parts) < 4:
                report.error(where, "vertex record needs 3 coordinates")
                continue
            coords = []
            ok = True
            for p in parts[1:4]:
                try:
                    value = float(p)
                except ValueError:
                    report.error(where, f"non-numeric vertex component {p!r}")
                    ok = False
                    break
                if not math.isfinite(value):
                    report.error(where, f"non-finite vertex component {p!r}")
                    ok = False
                    break
                coords.append(value)
            if ok:
                vertices.append(coords)
        elif tag == "f":
            if len(parts) < 4:
                report.error(where, "face record needs at least 3 vertices")
                continue
            idx: list[int] = []
            ok = True
            for p in parts[1:]:
                ref = p.split("/")[0]
                try:
                    raw_idx = int(ref)
                except ValueError:
                    report.error(where, f"bad face vertex reference {p!r}")
                    ok = False
                    break
                resolved = _resolve_obj_index(raw_idx, len(vertices))
                if resolved is None:
                    report.error(where, f"face references undefined vertex {raw_idx}")
                    ok = False
                    break
                idx.append(resolved)
            if not ok:
                continue
            if len(set(idx)) != len(idx):
                report.error(where, "face repeats a vertex")
                continue
            if current is None:
                open_group("default")
            current.append(idx)
        elif tag in ("o", "g"):
            name = " ".join(parts[1:]) if len(parts) > 1 else "default"
            open_group(name)
        else:
            if tag not in ignored:
                report.warn(f"line {lineno}", f"record type {tag!r} ignored")
                ignored.add(tag)

    if report.errors:
        return None, report
    if not vertices or not any(faces for _, faces in groups):
        report.error("$", "no geometry")
        return None, report

    objects: list[SceneObject] = []
    used_names: set[str] = set()
    for name, faces in groups:
        if not faces:
            report.warn("$", f"group {name!r} has no faces, skipped")
            continue
        unique = name
        n = 1
        while unique in used_names:
            n += 1
            unique = f"{name}_{n}"
        if unique != name:
            report.warn("$", f"duplicate group name {name!r} renamed to {unique!r}")
        used_names.add(unique)

        # Remap the global vertex pool down to the vertices this group
        # uses, preserving their original file order.
        used = sorted({i for face in faces for i in face})
        remap = {g: l for l, g in enumerate(used)}
        local_verts = [vertices[i] for i in used]
        local_faces = [[remap[i] for i in face] for face in faces]
        objects.append(
            SceneObject(
                name=unique,
                mesh=Mesh(np.array(local_verts, dtype=np.float64), local_faces),
            )
        )

    scene = Scene(objects=tuple(objects), cameras=(), units=OBJ_UNITS_LABEL)
    return scene, report


def parse_scene_file(path: str | "os.PathLike[str]") -> tuple[Scene | None, ValidationReport]:
    """Dispatch on extension: .obj goes to parse_obj, anything else to parse_sgf."""
    import os

    with open(path, "rb") as fh:
        data = fh.read()
    if os.fspath(path).lower().endswith(".obj"):
        return parse_obj(data)
    return parse_sgf(data)


def _face_areas(mesh: Mesh) -> np.ndarray:
    """Fan-triangulated polygon areas, batched per face arity."""
    areas = np.zeros(mesh.face_count)
    by_arity: dict[int, list[int]] = {}
    for fi, face in enumerate(mesh.faces):
        by_arity.setdefault(len(face), []).append(fi)
    for arity, idxs in by_arity.items():
        pts = mesh.vertices[np.array([mesh.faces[i] for i in idxs])]
        total = np.zeros((len(idxs), 3))
        for k in range(1, arity - 1):
            total += np.cross(pts[:, k] - pts[:, 0], pts[:, k + 1] - pts[:, 0])
        areas[idxs] = np.linalg.norm(total, axis=1) / 2.0
    return areas


def validate_scene(scene: Scene) -> ValidationReport:
    """Semantic checks beyond parsing: empty meshes are errors, degenerate
    (zero-area) faces are warnings. The scene is not mutated."""
    report = ValidationReport()
    for oi, obj in enumerate(scene.objects):
        path = f"objects[{oi}]"
        if obj.mesh.vertex_count == 0 or obj.mesh.face_count == 0:
            report.error(f"{path}.mesh", f"empty mesh on object {obj.name!r}")
            continue
        for fi in np.flatnonzero(_face_areas(obj.mesh) < 1e-12):
            report.warn(f"{path}.mesh.faces[{fi}]", "degenerate face (zero area)")
    for ci, cam in enumerate(scene.cameras):
        path = f"cameras[{ci}]"
        if not 0.0 < cam.fov_y < math.pi:
            report.error(f"{path}.fov_y_radians", "must be in (0, pi)")
        if cam.aspect <= 0:
            report.error(f"{path}.aspect", "must be > 0")
        if not 0.0 < cam.clip_near < cam.clip_far:
            report.error(f"{path}.clip_near", "need 0 < clip_near < clip_far")
    return report


def serialize_sgf(scene: Scene, *, indent: int | None = None) -> bytes:
    """Serialize a Scene to SGF bytes. Floats keep full precision so a
    parse -> serialize -> parse round trip is exact."""
    doc = {
        "sgf_version": SGF_VERSION,
        "units": scene.units,
        "objects": [
            {
                "name": obj.name,
                "primitive": obj.declared_primitive.value if obj.declared_primitive else None,
                "transform": {
                    "location": obj.transform.location.to_list(),
                    "rotation_quaternion": obj.transform.rotation.to_list(),
                    "scale": obj.transform.scale.to_list(),
                },
                "mesh": {
                    "vertices": [list(map(float, v)) for v in obj.mesh.vertices],
                    "faces": [list(f) for f in obj.mesh.faces],
                },
                "modifiers": list(obj.modifiers),
            }
            for obj in scene.objects
        ],
        "cameras": [
            {
                "name": cam.name,
                "transform": {
                    "location": cam.transform.location.to_list(),
                    "rotation_quaternion": cam.transform.rotation.to_list(),
                },
                "fov_y_radians": cam.fov_y,
                "aspect": cam.aspect,
                "clip_near": cam.clip_near,
                "clip_far": cam.clip_far,
            }
            for cam in scene.cameras
        ],
    }
    return json.dumps(doc, indent=indent).encode("utf-8")
