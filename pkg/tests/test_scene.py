"""Scene-model types: construction invariants and quaternion conversion."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meshgrade.errors import SceneValidationError
from meshgrade.scene import (
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
from oracles import quaternion_from_euler_scipy

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


class TestVec3:
    def test_round_trip(self):
        v = Vec3(1.5, -2.0, 0.25)
        assert (v.x, v.y, v.z) == (1.5, -2.0, 0.25)
        assert v.to_list() == [1.5, -2.0, 0.25]

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(SceneValidationError):
            Vec3(0.0, bad, 0.0)


class TestQuaternion:
    def test_constructor_normalizes(self):
        q = Quaternion(2.0, 0.0, 0.0, 0.0)
        assert q.w == 1.0
        norm = math.sqrt(q.w**2 + q.x**2 + q.y**2 + q.z**2)
        assert abs(norm - 1.0) < 1e-6

    def test_zero_norm_rejected(self):
        with pytest.raises(SceneValidationError):
            Quaternion(0.0, 0.0, 0.0, 0.0)

    def test_rotation_acts_correctly(self):
        q = Quaternion.from_axis_angle((0, 0, 1), math.pi / 2)
        rotated = q.rotate((1.0, 0.0, 0.0))
        assert np.allclose(rotated, [0.0, 1.0, 0.0], atol=1e-12)


class TestEulerConversion:
    def test_identity(self):
        q = quaternion_from_euler_xyz(0.0, 0.0, 0.0)
        assert (q.w, q.x, q.y, q.z) == (1.0, 0.0, 0.0, 0.0)

    def test_quarter_turn_about_z(self):
        q = quaternion_from_euler_xyz(0.0, 0.0, math.pi / 2)
        assert abs(q.w - math.sqrt(2) / 2) < 1e-12
        assert abs(q.z - math.sqrt(2) / 2) < 1e-12
        assert abs(q.x) < 1e-12 and abs(q.y) < 1e-12

    def test_half_turn_about_x(self):
        q = quaternion_from_euler_xyz(math.pi, 0.0, 0.0)
        assert abs(q.w) < 1e-12
        assert abs(abs(q.x) - 1.0) < 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(SceneValidationError):
            quaternion_from_euler_xyz(float("nan"), 0.0, 0.0)

    @given(angles, angles, angles)
    def test_matches_scipy(self, rx, ry, rz):
        ours = quaternion_from_euler_xyz(rx, ry, rz)
        w, x, y, z = quaternion_from_euler_scipy(rx, ry, rz)
        dot = abs(ours.w * w + ours.x * x + ours.y * y + ours.z * z)
        assert dot > 1 - 1e-9  # same rotation up to double cover

    @given(angles, angles, angles)
    def test_rotation_action_round_trip(self, rx, ry, rz):
        q = quaternion_from_euler_xyz(rx, ry, rz)
        v = np.array([0.3, -1.2, 2.0])
        back = q.conjugate().rotate(q.rotate(v))
        assert np.allclose(back, v, atol=1e-9)


class TestTransform:
    def test_rejects_non_positive_scale(self):
        with pytest.raises(SceneValidationError):
            Transform(Vec3(0, 0, 0), Quaternion.identity(), Vec3(1.0, 0.0, 1.0))
        with pytest.raises(SceneValidationError):
            Transform(Vec3(0, 0, 0), Quaternion.identity(), Vec3(1.0, -1.0, 1.0))

    def test_apply_order_scale_rotate_translate(self):
        t = Transform(
            Vec3(10.0, 0.0, 0.0),
            Quaternion.from_axis_angle((0, 0, 1), math.pi / 2),
            Vec3(2.0, 1.0, 1.0),
        )
        out = t.apply(np.array([[1.0, 0.0, 0.0]]))
        # scale: (2,0,0); rotate 90deg about z: (0,2,0); translate: (10,2,0)
        assert np.allclose(out, [[10.0, 2.0, 0.0]], atol=1e-12)


class TestMesh:
    def test_face_index_out_of_range(self):
        with pytest.raises(SceneValidationError):
            Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 99)])

    def test_repeated_vertex_in_face(self):
        with pytest.raises(SceneValidationError):
            Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 1)])

    def test_too_short_face(self):
        with pytest.raises(SceneValidationError):
            Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1)])

    def test_vertices_read_only(self):
        mesh = Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 2)])
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0

    def test_round_trip_fields(self):
        verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
        faces = [(0, 1, 2), (1, 3, 2)]
        mesh = Mesh(verts, faces)
        assert mesh.vertex_count == 4
        assert mesh.face_count == 2
        assert mesh.faces == ((0, 1, 2), (1, 3, 2))
        assert np.array_equal(mesh.vertices, np.array(verts, dtype=float))


class TestSceneInvariants:
    def _obj(self, name: str) -> SceneObject:
        return SceneObject(name=name, mesh=Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 2)]))

    def test_duplicate_object_names_rejected(self):
        with pytest.raises(SceneValidationError):
            Scene(objects=(self._obj("A"), self._obj("A")))

    def test_empty_object_name_rejected(self):
        with pytest.raises(SceneValidationError):
            self._obj("")

    def test_camera_invariants(self):
        t = Transform.identity()
        with pytest.raises(SceneValidationError):
            Camera(name="c", transform=t, fov_y=0.0, aspect=1.0, clip_near=0.1, clip_far=10)
        with pytest.raises(SceneValidationError):
            Camera(name="c", transform=t, fov_y=1.0, aspect=1.0, clip_near=5.0, clip_far=1.0)
        with pytest.raises(SceneValidationError):
            Camera(name="c", transform=t, fov_y=math.pi, aspect=1.0, clip_near=0.1, clip_far=10)

    def test_first_camera_by_name_order(self):
        t = Transform.identity()
        cb = Camera(name="B", transform=t, fov_y=1.0, aspect=1.0, clip_near=0.1, clip_far=10)
        ca = Camera(name="A", transform=t, fov_y=1.0, aspect=1.0, clip_near=0.1, clip_far=10)
        scene = Scene(objects=(self._obj("x"),), cameras=(cb, ca))
        assert scene.first_camera().name == "A"


def test_primitive_type_fallback():
    assert PrimitiveType.from_label("torus") is PrimitiveType.TORUS
    assert PrimitiveType.from_label("suzanne") is PrimitiveType.UNKNOWN
