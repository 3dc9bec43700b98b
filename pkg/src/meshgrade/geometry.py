"""Mesh statistics, bounding volumes, rotation distance, primitive
inference and camera frustum coverage.

All functions are pure and safe to call concurrently over distinct meshes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import SceneValidationError
from .scene import Camera, Mesh, PrimitiveType, Quaternion, Transform, Vec3

__all__ = [
    "MeshStats",
    "Aabb",
    "PrimitiveGuess",
    "mesh_stats",
    "world_aabb",
    "rotation_distance",
    "infer_primitive",
    "frustum_coverage",
    "coverage_points",
    "bounding_sphere",
    "world_centroid",
    "SPHERE_RSD_MAX",
    "COPLANAR_TOL",
]

# Config-overridable classification thresholds; callers may pass their own.
SPHERE_RSD_MAX = 0.02
COPLANAR_TOL = 1e-6
_AXIS_ALIGN_TOL = 1e-6


@dataclass(frozen=True, slots=True)
class MeshStats:
    """Topological counts for a mesh.

    euler_characteristic is V - E + F with unique undirected edges;
    polygon_count equals face_count (quads count once) while
    triangle_equivalent_count sums (arity - 2) over faces.
    """

    vertex_count: int
    edge_count: int
    face_count: int
    euler_characteristic: int
    boundary_edge_count: int
    nonmanifold_edge_count: int
    triangle_equivalent_count: int

    @property
    def polygon_count(self) -> int:
        return self.face_count

    @property
    def is_closed_manifold(self) -> bool:
        return self.boundary_edge_count == 0 and self.nonmanifold_edge_count == 0


@dataclass(frozen=True, slots=True)
class Aabb:
    """Axis-aligned bounding box in world space."""

    min: Vec3
    max: Vec3

    def __post_init__(self) -> None:
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise SceneValidationError("Aabb min must be <= max componentwise")

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max.to_array() - self.min.to_array()))


@dataclass(frozen=True, slots=True)
class PrimitiveGuess:
    """Classification outcome: UNKNOWN always has confidence <= 0.5."""

    primitive: PrimitiveType
    confidence: float
    evidence: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "evidence", tuple(self.evidence))
        if self.primitive is PrimitiveType.UNKNOWN and self.confidence > 0.5:
            raise SceneValidationError("UNKNOWN guesses must have confidence <= 0.5")


def _edge_face_counts(mesh: Mesh) -> Counter:
    counts: Counter = Counter()
    for face in mesh.faces:
        n = len(face)
        for k in range(n):
            a, b = face[k], face[(k + 1) % n]
            counts[(a, b) if a < b else (b, a)] += 1
    return counts


def mesh_stats(mesh: Mesh) -> MeshStats:
    """Count vertices, unique undirected edges and faces of a mesh."""
    counts = _edge_face_counts(mesh)
    v = mesh.vertex_count
    e = len(counts)
    f = mesh.face_count
    boundary = sum(1 for c in counts.values() if c == 1)
    nonmanifold = sum(1 for c in counts.values() if c >= 3)
    tri_equiv = sum(len(face) - 2 for face in mesh.faces)
    return MeshStats(
        vertex_count=v,
        edge_count=e,
        face_count=f,
        euler_characteristic=v - e + f,
        boundary_edge_count=boundary,
        nonmanifold_edge_count=nonmanifold,
        triangle_equivalent_count=tri_equiv,
    )


def world_aabb(mesh: Mesh, transform: Transform) -> Aabb:
    """Bounding box of the mesh after scale -> rotate -> translate."""
    if mesh.vertex_count == 0:
        raise SceneValidationError("empty mesh")
    pts = transform.apply(mesh.vertices)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return Aabb(Vec3(*lo), Vec3(*hi))


def world_centroid(mesh: Mesh, transform: Transform) -> np.ndarray:
    if mesh.vertex_count == 0:
        raise SceneValidationError("empty mesh")
    return transform.apply(mesh.vertices).mean(axis=0)


def bounding_sphere(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Center (mean of points) and radius of an enclosing sphere."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise SceneValidationError("no points")
    center = pts.mean(axis=0)
    radius = float(np.sqrt(((pts - center) ** 2).sum(axis=1).max()))
    return center, radius


def rotation_distance(a: Quaternion, b: Quaternion) -> float:
    """Geodesic angle between two rotations, in [0, pi].

    Uses 2*acos(|a.b|), which is symmetric and insensitive to the
    quaternion double cover (q and -q denote the same rotation).
    """
    d = min(1.0, abs(a.dot(b)))
    return 2.0 * math.acos(d)


def _face_normals(mesh: Mesh) -> np.ndarray:
    """Unit Newell normals per face; zero rows for degenerate faces."""
    normals = np.zeros((mesh.face_count, 3), dtype=np.float64)
    verts = mesh.vertices
    for fi, face in enumerate(mesh.faces):
        pts = verts[list(face)]
        nxt = np.roll(pts, -1, axis=0)
        n = np.array(
            [
                np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
                np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
                np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
            ]
        )
        norm = np.linalg.norm(n)
        if norm > 1e-15:
            normals[fi] = n / norm
    return normals


def _looks_like_box(mesh: Mesh, tol: float) -> bool:
    """True when the 6 face normals form 3 mutually orthogonal antiparallel
    pairs, i.e. a rotation exists that axis-aligns all of them."""
    if mesh.face_count != 6 or any(len(f) != 4 for f in mesh.faces):
        return False
    normals = _face_normals(mesh)
    if np.any(np.linalg.norm(normals, axis=1) < 0.5):
        return False
    dots = normals @ normals.T
    paired = [False] * 6
    for i in range(6):
        if paired[i]:
            continue
        partner = -1
        for j in range(6):
            if j == i:
                continue
            if abs(dots[i, j] + 1.0) <= tol:
                partner = j
            elif abs(dots[i, j]) > tol:
                return False
        if partner < 0 or paired[partner]:
            return False
        paired[i] = paired[partner] = True
    return True


def _cap_faces(mesh: Mesh) -> list[int]:
    return [i for i, f in enumerate(mesh.faces) if len(f) >= 5]


def infer_primitive(
    mesh: Mesh,
    *,
    sphere_rsd_max: float = SPHERE_RSD_MAX,
    coplanar_tol: float = COPLANAR_TOL,
) -> PrimitiveGuess:
    """Classify a mesh as one of the stock primitives from topology and
    intrinsic geometry only, so the verdict survives rigid transforms and
    uniform scaling of the vertex data. UNKNOWN is a fallback, not an error.
    """
    if mesh.vertex_count == 0 or mesh.face_count == 0:
        return PrimitiveGuess(PrimitiveType.UNKNOWN, 0.0, ("empty mesh",))

    stats = mesh_stats(mesh)
    if stats.nonmanifold_edge_count > 0:
        return PrimitiveGuess(
            PrimitiveType.UNKNOWN,
            0.0,
            (f"non-manifold: {stats.nonmanifold_edge_count} edges on 3+ faces",),
        )

    closed = stats.boundary_edge_count == 0
    chi = stats.euler_characteristic

    if closed and chi == 0:
        return PrimitiveGuess(
            PrimitiveType.TORUS, 0.9, ("closed mesh with Euler characteristic 0",)
        )

    if closed and chi == 2:
        # Specific shapes first: cube and cylinder vertices are also
        # equidistant from the centroid, so the sphere spread test must
        # only run once those rules have been ruled out.
        if _looks_like_box(mesh, _AXIS_ALIGN_TOL):
            return PrimitiveGuess(
                PrimitiveType.CUBE,
                0.95,
                ("6 quads whose normals form 3 orthogonal antiparallel pairs",),
            )
        caps = _cap_faces(mesh)
        if len(caps) == 2:
            normals = _face_normals(mesh)
            d = float(normals[caps[0]] @ normals[caps[1]])
            if d < -1.0 + 1e-3:
                return PrimitiveGuess(
                    PrimitiveType.CYLINDER,
                    0.9,
                    ("two n-gon caps with antiparallel normals",),
                )
        if len(caps) == 1:
            tris = [f for f in mesh.faces if len(f) == 3]
            if tris:
                shared = set(tris[0])
                for f in tris[1:]:
                    shared &= set(f)
                apex = shared - set(mesh.faces[caps[0]])
                if apex:
                    return PrimitiveGuess(
                        PrimitiveType.CONE,
                        0.9,
                        ("one n-gon cap plus a triangle fan sharing an apex vertex",),
                    )
        centered = mesh.vertices - mesh.vertices.mean(axis=0)
        dist = np.linalg.norm(centered, axis=1)
        mean_dist = float(dist.mean())
        rsd = float(dist.std() / mean_dist) if mean_dist > 1e-15 else math.inf
        if rsd < sphere_rsd_max and mesh.face_count > 6:
            margin = 1.0 - rsd / sphere_rsd_max
            return PrimitiveGuess(
                PrimitiveType.UV_SPHERE,
                0.5 + 0.5 * margin,
                (f"centroid-distance spread {rsd:.5f} below {sphere_rsd_max}",),
            )
        return PrimitiveGuess(
            PrimitiveType.UNKNOWN, 0.3, ("closed sphere-like mesh, no rule matched",)
        )

    if not closed and chi == 1:
        centered = mesh.vertices - mesh.vertices.mean(axis=0)
        scale = float(np.sqrt((centered**2).sum(axis=1).mean()))
        if scale > 1e-15:
            # Plane fit via smallest principal direction, scale-relative.
            _, s, vt = np.linalg.svd(centered, full_matrices=False)
            residual = float(np.abs(centered @ vt[-1]).max()) / scale
            if residual <= coplanar_tol:
                return PrimitiveGuess(
                    PrimitiveType.PLANE,
                    0.9,
                    (f"open disk topology, coplanar within {coplanar_tol}",),
                )

    return PrimitiveGuess(
        PrimitiveType.UNKNOWN,
        0.2,
        (f"chi={chi}, boundary_edges={stats.boundary_edge_count}",),
    )


def coverage_points(mesh: Mesh, transform: Transform, samples: int) -> np.ndarray:
    """Deterministic world-space surface samples for coverage estimates:
    every vertex, then face centroids in face order until `samples` points
    are collected (or faces run out)."""
    if mesh.vertex_count == 0:
        raise SceneValidationError("empty mesh")
    if samples < 8:
        raise SceneValidationError("samples must be >= 8")
    pts = [transform.apply(mesh.vertices)]
    need = samples - mesh.vertex_count
    if need > 0 and mesh.face_count > 0:
        centroids = np.array(
            [mesh.vertices[list(f)].mean(axis=0) for f in mesh.faces[:need]]
        )
        pts.append(transform.apply(centroids))
    return np.vstack(pts)


def points_in_frustum(points: np.ndarray, camera: Camera) -> np.ndarray:
    """Boolean mask of world points inside the camera's view frustum.

    The camera looks along its local -Z axis with +Y up; fov_y is the full
    vertical angle and the horizontal half-extent is tan(fov_y/2) * aspect.
    Boundary points count as inside.
    """
    rot = camera.transform.rotation.to_matrix()
    local = (np.asarray(points, dtype=np.float64) - camera.transform.location.to_array()) @ rot
    depth = -local[:, 2]
    tan_half_y = math.tan(camera.fov_y / 2.0)
    tan_half_x = tan_half_y * camera.aspect
    return (
        (depth >= camera.clip_near)
        & (depth <= camera.clip_far)
        & (np.abs(local[:, 0]) <= tan_half_x * depth)
        & (np.abs(local[:, 1]) <= tan_half_y * depth)
    )


def frustum_coverage(
    mesh: Mesh, transform: Transform, camera: Camera, samples: int = 256
) -> float:
    """Fraction of deterministically sampled surface points visible to the
    camera, in [0, 1]."""
    pts = coverage_points(mesh, transform, samples)
    return float(points_in_frustum(pts, camera).mean())
