"""Shared fixtures: the crown assignment scene family and scene fuzzers."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meshgrade import primitives
from meshgrade.engine import Rubric
from meshgrade.ingest import serialize_sgf
from meshgrade.scene import (
    Camera,
    Mesh,
    Quaternion,
    Scene,
    SceneObject,
    Transform,
    Vec3,
)


def extrude_faces(mesh: Mesh, face_indices: set[int], depth: float = 0.35) -> Mesh:
    """Extrude the given faces along their normals, each into its own
    ring of side quads plus a lifted cap. Keeps closed meshes closed."""
    verts = [tuple(v) for v in mesh.vertices]
    faces: list[tuple[int, ...]] = []
    for fi, face in enumerate(mesh.faces):
        if fi not in face_indices:
            faces.append(face)
            continue
        pts = mesh.vertices[list(face)]
        normal = np.zeros(3)
        for k in range(1, len(face) - 1):
            normal += np.cross(pts[k] - pts[0], pts[k + 1] - pts[0])
        norm = np.linalg.norm(normal)
        if norm > 1e-12:
            normal /= norm
        lifted = []
        for idx in face:
            verts.append(tuple(mesh.vertices[idx] + normal * depth))
            lifted.append(len(verts) - 1)
        n = len(face)
        for k in range(n):
            faces.append((face[k], face[(k + 1) % n], lifted[(k + 1) % n], lifted[k]))
        faces.append(tuple(lifted))
    return Mesh(np.array(verts), faces)


def crown_mesh(major: int = 48, minor: int = 12) -> Mesh:
    """The crown: every other face of a torus extruded outward."""
    base = primitives.torus(major, minor)
    picks = {
        i * minor + j
        for i in range(major)
        for j in range(minor)
        if (i + j) % 2 == 0
    }
    return extrude_faces(base, picks)


def front_camera(distance: float = 8.0, name: str = "Camera") -> Camera:
    """Camera on -Y looking toward +Y (local -Z rotated onto +Y)."""
    rot = Quaternion.from_axis_angle((1.0, 0.0, 0.0), math.pi / 2)
    return Camera(
        name=name,
        transform=Transform(Vec3(0.0, -distance, 0.0), rot, Vec3(1, 1, 1)),
        fov_y=0.8,
        aspect=16 / 9,
        clip_near=0.1,
        clip_far=100.0,
    )


def crown_scene(mesh: Mesh | None = None, *, modifiers: tuple[str, ...] = ()) -> Scene:
    return Scene(
        objects=(
            SceneObject(
                name="Crown",
                mesh=mesh if mesh is not None else crown_mesh(),
                transform=Transform(Vec3(0, 0, 0), Quaternion.identity(), Vec3(1, 1, 1)),
                modifiers=modifiers,
            ),
        ),
        cameras=(front_camera(),),
        units="blender",
    )


@pytest.fixture(scope="session")
def crown() -> Mesh:
    return crown_mesh()


@pytest.fixture(scope="session")
def crown_rubric(crown) -> Rubric:
    return Rubric(scene=crown_scene(crown))


def random_transform(rng: np.random.Generator, *, uniform_scale: bool = False) -> Transform:
    q = Quaternion(*rng.normal(size=4))
    if uniform_scale:
        s = float(rng.uniform(0.5, 2.0))
        scale = Vec3(s, s, s)
    else:
        scale = Vec3(*rng.uniform(0.5, 2.0, size=3))
    return Transform(Vec3(*rng.uniform(-5, 5, size=3)), q, scale)


_FUZZ_PRIMITIVES = [
    lambda rng: primitives.cube(),
    lambda rng: primitives.uv_sphere(int(rng.integers(8, 24)), int(rng.integers(6, 12))),
    lambda rng: primitives.torus(int(rng.integers(8, 24)), int(rng.integers(4, 10))),
    lambda rng: primitives.cylinder(int(rng.integers(8, 24))),
    lambda rng: primitives.cone(int(rng.integers(8, 24))),
    lambda rng: primitives.plane(int(rng.integers(1, 4))),
]


def fuzz_scene(rng: np.random.Generator, *, with_camera: bool | None = None) -> Scene:
    """Random valid scene: 1-4 primitive objects, optional camera."""
    n_objects = int(rng.integers(1, 5))
    objects = []
    for i in range(n_objects):
        maker = _FUZZ_PRIMITIVES[int(rng.integers(0, len(_FUZZ_PRIMITIVES)))]
        modifiers = ("SUBSURF",) if rng.random() < 0.2 else ()
        objects.append(
            SceneObject(
                name=f"Object{i}",
                mesh=maker(rng),
                transform=random_transform(rng),
                modifiers=modifiers,
            )
        )
    cameras = ()
    want_camera = rng.random() < 0.5 if with_camera is None else with_camera
    if want_camera:
        cameras = (
            Camera(
                name="Camera",
                transform=Transform(
                    Vec3(*rng.uniform(-10, 10, size=3)),
                    Quaternion(*rng.normal(size=4)),
                    Vec3(1, 1, 1),
                ),
                fov_y=float(rng.uniform(0.3, 1.5)),
                aspect=float(rng.uniform(0.8, 2.0)),
                clip_near=0.1,
                clip_far=100.0,
            ),
        )
    return Scene(objects=tuple(objects), cameras=cameras, units="blender")


def write_sgf(path: Path, scene: Scene) -> Path:
    path.write_bytes(serialize_sgf(scene))
    return path


def write_rubric(path: Path, scene: Scene, **extras) -> Path:
    doc = {"scene": json.loads(serialize_sgf(scene).decode()), **extras}
    path.write_text(json.dumps(doc))
    return path
