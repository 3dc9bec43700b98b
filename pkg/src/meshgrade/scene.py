"""Core scene domain types.

Everything here is immutable after construction and carries no I/O or
scoring logic, so instances can be shared freely between concurrent
grading workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import SceneValidationError

__all__ = [
    "Vec3",
    "Quaternion",
    "Transform",
    "Mesh",
    "PrimitiveType",
    "SceneObject",
    "Camera",
    "Scene",
    "quaternion_from_euler_xyz",
]


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise SceneValidationError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True, slots=True)
class Vec3:
    """A 3-component vector in scene units. All components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        _require_finite("Vec3 component", self.x, self.y, self.z)

    @classmethod
    def of(cls, seq: Sequence[float]) -> "Vec3":
        if len(seq) != 3:
            raise SceneValidationError(f"expected 3 components, got {len(seq)}")
        return cls(float(seq[0]), float(seq[1]), float(seq[2]))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z]


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Unit quaternion (w, x, y, z). The constructor normalizes its input."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        _require_finite("Quaternion component", self.w, self.x, self.y, self.z)
        norm = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if norm < 1e-12:
            raise SceneValidationError("quaternion has zero norm")
        object.__setattr__(self, "w", self.w / norm)
        object.__setattr__(self, "x", self.x / norm)
        object.__setattr__(self, "y", self.y / norm)
        object.__setattr__(self, "z", self.z / norm)

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def of(cls, seq: Sequence[float]) -> "Quaternion":
        if len(seq) != 4:
            raise SceneValidationError(f"expected 4 components, got {len(seq)}")
        return cls(float(seq[0]), float(seq[1]), float(seq[2]), float(seq[3]))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> "Quaternion":
        ax = np.asarray(axis, dtype=np.float64)
        n = np.linalg.norm(ax)
        if n < 1e-12:
            raise SceneValidationError("rotation axis has zero norm")
        ax = ax / n
        half = angle / 2.0
        s = math.sin(half)
        return cls(math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)

    def multiply(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def to_matrix(self) -> np.ndarray:
        """Return the 3x3 rotation matrix acting on column vectors."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    def rotate(self, v: Sequence[float]) -> np.ndarray:
        return self.to_matrix() @ np.asarray(v, dtype=np.float64)

    def to_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]


def quaternion_from_euler_xyz(rx: float, ry: float, rz: float) -> Quaternion:
    """Convert XYZ Euler angles (radians) to a unit quaternion.

    The result equals Rz(rz) @ Ry(ry) @ Rx(rx): the X rotation is applied
    to a vector first, matching the common exporter convention.
    """
    _require_finite("euler angle", rx, ry, rz)
    qx = Quaternion.from_axis_angle((1.0, 0.0, 0.0), rx)
    qy = Quaternion.from_axis_angle((0.0, 1.0, 0.0), ry)
    qz = Quaternion.from_axis_angle((0.0, 0.0, 1.0), rz)
    return qz.multiply(qy).multiply(qx)


@dataclass(frozen=True, slots=True)
class Transform:
    """Object pose: translation, rotation and strictly positive per-axis scale."""

    location: Vec3 = field(default_factory=lambda: Vec3(0.0, 0.0, 0.0))
    rotation: Quaternion = field(default_factory=Quaternion.identity)
    scale: Vec3 = field(default_factory=lambda: Vec3(1.0, 1.0, 1.0))

    def __post_init__(self) -> None:
        if self.scale.x <= 0 or self.scale.y <= 0 or self.scale.z <= 0:
            raise SceneValidationError(
                f"scale components must be > 0, got {self.scale.to_list()}"
            )

    @classmethod
    def identity(cls) -> "Transform":
        return cls()

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply scale, then rotation, then translation to an (N, 3) array."""
        pts = np.asarray(points, dtype=np.float64)
        scaled = pts * self.scale.to_array()
        rotated = scaled @ self.rotation.to_matrix().T
        return rotated + self.location.to_array()


class Mesh:
    """Polygon mesh in object-local coordinates.

    Vertices are stored as a read-only (N, 3) float64 array; faces as a
    tuple of index tuples. Every face has at least 3 indices, all indices
    are in range and no face repeats a vertex.
    """

    __slots__ = ("vertices", "faces")

    def __init__(
        self,
        vertices: np.ndarray | Sequence[Sequence[float]],
        faces: Iterable[Sequence[int]],
    ) -> None:
        verts = np.array(vertices, dtype=np.float64)
        if verts.size == 0:
            verts = verts.reshape(0, 3)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise SceneValidationError(
                f"vertices must be an (N, 3) array, got shape {verts.shape}"
            )
        if not np.all(np.isfinite(verts)):
            raise SceneValidationError("mesh vertices contain non-finite values")
        verts.setflags(write=False)

        n = verts.shape[0]
        checked: list[tuple[int, ...]] = []
        for fi, face in enumerate(faces):
            idx = tuple(int(i) for i in face)
            if len(idx) < 3:
                raise SceneValidationError(f"face {fi} has fewer than 3 vertices")
            if len(set(idx)) != len(idx):
                raise SceneValidationError(f"face {fi} repeats a vertex index")
            for i in idx:
                if i < 0 or i >= n:
                    raise SceneValidationError(
                        f"face {fi} references vertex {i}, mesh has {n} vertices"
                    )
            checked.append(idx)

        self.vertices = verts
        self.faces = tuple(checked)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return self.faces == other.faces and np.array_equal(
            self.vertices, other.vertices
        )

    def __hash__(self) -> int:
        return id(self)

    def __repr__(self) -> str:
        return f"Mesh(vertices={self.vertex_count}, faces={self.face_count})"


class PrimitiveType(Enum):
    """The stock starting shapes a scene object may be built from."""

    CUBE = "cube"
    UV_SPHERE = "uv_sphere"
    TORUS = "torus"
    CYLINDER = "cylinder"
    CONE = "cone"
    PLANE = "plane"
    UNKNOWN = "unknown"

    @classmethod
    def from_label(cls, label: str) -> "PrimitiveType":
        """Map an exporter label to a member; unrecognized labels fall back
        to UNKNOWN rather than raising."""
        try:
            return cls(label.strip().lower())
        except ValueError:
            return cls.UNKNOWN

    @property
    def display_name(self) -> str:
        return {
            PrimitiveType.CUBE: "cube",
            PrimitiveType.UV_SPHERE: "UV sphere",
            PrimitiveType.TORUS: "torus",
            PrimitiveType.CYLINDER: "cylinder",
            PrimitiveType.CONE: "cone",
            PrimitiveType.PLANE: "plane",
            PrimitiveType.UNKNOWN: "shape of unrecognized type",
        }[self]


@dataclass(frozen=True, slots=True)
class SceneObject:
    """A named mesh object with its pose and modifier labels."""

    name: str
    mesh: Mesh
    transform: Transform = field(default_factory=Transform.identity)
    declared_primitive: PrimitiveType | None = None
    modifiers: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise SceneValidationError("object name must be non-empty")
        object.__setattr__(self, "modifiers", tuple(self.modifiers))

    def world_vertices(self) -> np.ndarray:
        return self.transform.apply(self.mesh.vertices)


@dataclass(frozen=True, slots=True)
class Camera:
    """Perspective camera. Transform scale is ignored for projection."""

    name: str
    transform: Transform
    fov_y: float
    aspect: float
    clip_near: float
    clip_far: float

    def __post_init__(self) -> None:
        if not self.name:
            raise SceneValidationError("camera name must be non-empty")
        _require_finite(
            "camera parameter", self.fov_y, self.aspect, self.clip_near, self.clip_far
        )
        if not 0.0 < self.fov_y < math.pi:
            raise SceneValidationError(f"fov_y must be in (0, pi), got {self.fov_y}")
        if self.aspect <= 0:
            raise SceneValidationError(f"aspect must be > 0, got {self.aspect}")
        if not 0.0 < self.clip_near < self.clip_far:
            raise SceneValidationError(
                f"need 0 < clip_near < clip_far, got {self.clip_near}, {self.clip_far}"
            )


@dataclass(frozen=True, slots=True)
class Scene:
    """A collection of mesh objects and cameras; the unit of submission."""

    objects: tuple[SceneObject, ...] = ()
    cameras: tuple[Camera, ...] = ()
    units: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "cameras", tuple(self.cameras))
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SceneValidationError(f"duplicate object name: {dup[0]!r}")
        cam_names = [c.name for c in self.cameras]
        if len(set(cam_names)) != len(cam_names):
            dup = sorted({n for n in cam_names if cam_names.count(n) > 1})
            raise SceneValidationError(f"duplicate camera name: {dup[0]!r}")

    def object_by_name(self, name: str) -> SceneObject:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)

    def first_camera(self) -> Camera | None:
        """The camera with the lexicographically smallest name, if any."""
        if not self.cameras:
            return None
        return min(self.cameras, key=lambda c: c.name)
