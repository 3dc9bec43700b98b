"""Exporter tests: document shape, camera math, determinism, and the full
round trip through the grader's command-line interface (the only coupling
to the grader is the SGF files on disk)."""

from __future__ import annotations

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

import export_sgf
import fake_bpy
from conftest import set_scene


def run_meshgrade(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "meshgrade.cli", *args],
        capture_output=True,
        text=True,
        timeout=120,
    )


def unique_edges(faces) -> set[tuple[int, int]]:
    edges = set()
    for face in faces:
        n = len(face)
        for k in range(n):
            a, b = face[k], face[(k + 1) % n]
            edges.add((min(a, b), max(a, b)))
    return edges


@pytest.fixture(autouse=True)
def fresh_default_scene():
    set_scene(fake_bpy.default_scene())
    yield


class TestDocumentShape:
    def test_default_scene_exports_cube_and_camera(self, tmp_path):
        out = tmp_path / "scene.sgf.json"
        doc = export_sgf.export_scene(str(out))
        assert len(doc["objects"]) == 1
        assert len(doc["cameras"]) == 1
        assert doc["sgf_version"] == 1
        cube = doc["objects"][0]
        assert cube["name"] == "Cube"
        assert len(cube["mesh"]["vertices"]) == 8
        assert len(cube["mesh"]["faces"]) == 6
        # The light never travels.
        assert all(o["name"] != "Light" for o in doc["objects"])

    def test_default_cube_v_e_f(self, tmp_path):
        out = tmp_path / "scene.sgf.json"
        export_sgf.export_scene(str(out))
        doc = json.loads(out.read_text())
        mesh = doc["objects"][0]["mesh"]
        assert len(mesh["vertices"]) == 8
        assert len(unique_edges(mesh["faces"])) == 12
        assert len(mesh["faces"]) == 6

    def test_torus_exports_576_faces(self, tmp_path):
        set_scene(fake_bpy.torus_scene())
        doc = export_sgf.export_scene(str(tmp_path / "t.sgf.json"))
        torus = doc["objects"][0]
        assert torus["name"] == "Torus"
        assert torus["primitive"] == "torus"
        assert len(torus["mesh"]["faces"]) == 576
        assert len(torus["mesh"]["vertices"]) == 576

    def test_exported_quaternion_unit_norm(self, tmp_path):
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        for entry in list(doc["objects"]) + list(doc["cameras"]):
            w, x, y, z = entry["transform"]["rotation_quaternion"]
            assert abs(math.sqrt(w * w + x * x + y * y + z * z) - 1.0) < 1e-6

    def test_nine_significant_digits(self, tmp_path):
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        loc = doc["cameras"][0]["transform"]["location"]
        assert loc[0] == float(format(7.35889, ".9g"))
        for value in loc:
            assert float(format(value, ".9g")) == value

    def test_objects_sorted_by_name(self, tmp_path):
        scene = fake_bpy.Scene(
            objects=[
                fake_bpy.Object(name="Zeta", type="MESH", data=fake_bpy.default_cube_mesh()),
                fake_bpy.Object(name="Alpha", type="MESH", data=fake_bpy.default_cube_mesh()),
                fake_bpy.default_camera_object(),
            ]
        )
        set_scene(scene)
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        assert [o["name"] for o in doc["objects"]] == ["Alpha", "Zeta"]


class TestCameraMath:
    def test_horizontal_auto_fit(self, tmp_path):
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        cam = doc["cameras"][0]
        aspect = 1920 / 1080
        expected = 2.0 * math.atan((36.0 / (2.0 * 50.0)) / aspect)
        # Values are quantized to 9 significant digits on export.
        assert cam["fov_y_radians"] == float(format(expected, ".9g"))
        assert cam["aspect"] == float(format(aspect, ".9g"))
        assert cam["clip_near"] == 0.1
        assert cam["clip_far"] == 100.0

    def test_vertical_fit_portrait_render(self, tmp_path):
        scene = fake_bpy.default_scene()
        scene.render.resolution_x = 1080
        scene.render.resolution_y = 1920
        set_scene(scene)
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        expected = 2.0 * math.atan(24.0 / (2.0 * 50.0))
        assert doc["cameras"][0]["fov_y_radians"] == pytest.approx(expected, abs=1e-9)

    def test_explicit_vertical_fit(self, tmp_path):
        scene = fake_bpy.default_scene()
        scene.objects[2].data.sensor_fit = "VERTICAL"
        set_scene(scene)
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"))
        expected = 2.0 * math.atan(24.0 / (2.0 * 50.0))
        assert doc["cameras"][0]["fov_y_radians"] == pytest.approx(expected, abs=1e-9)


class TestOptionsAndErrors:
    def test_empty_scene_fails(self, tmp_path):
        set_scene(fake_bpy.Scene(objects=[fake_bpy.default_camera_object()]))
        with pytest.raises(export_sgf.ExportError, match="nothing to export"):
            export_sgf.export_scene(str(tmp_path / "s.sgf.json"))

    def test_non_positive_scale_fails(self, tmp_path):
        bad = fake_bpy.Object(
            name="Mirrored",
            type="MESH",
            data=fake_bpy.default_cube_mesh(),
            matrix_world=fake_bpy.MatrixWorld(
                fake_bpy.Vector3(0, 0, 0),
                fake_bpy.QuaternionWXYZ(1, 0, 0, 0),
                fake_bpy.Vector3(1, -1, 1),
            ),
        )
        set_scene(fake_bpy.Scene(objects=[bad]))
        with pytest.raises(export_sgf.ExportError, match="non-positive scale"):
            export_sgf.export_scene(str(tmp_path / "s.sgf.json"))

    def test_modifiers_exported_unapplied_by_default(self, tmp_path):
        raw = fake_bpy.default_cube_mesh()
        evaluated = fake_bpy.default_torus_mesh(8, 4)  # stands in for the result
        obj = fake_bpy.Object(
            name="Cube",
            type="MESH",
            data=raw,
            modifiers=[fake_bpy.Modifier("SUBSURF")],
            evaluated_mesh=evaluated,
        )
        set_scene(fake_bpy.Scene(objects=[obj]))
        doc = export_sgf.export_scene(str(tmp_path / "raw.sgf.json"))
        assert doc["objects"][0]["modifiers"] == ["SUBSURF"]
        assert len(doc["objects"][0]["mesh"]["faces"]) == 6  # pre-modifier

        doc = export_sgf.export_scene(
            str(tmp_path / "applied.sgf.json"), apply_modifiers=True
        )
        assert len(doc["objects"][0]["mesh"]["faces"]) == 32  # evaluated

    def test_selected_only(self, tmp_path):
        scene = fake_bpy.Scene(
            objects=[
                fake_bpy.Object(
                    name="Keep", type="MESH", data=fake_bpy.default_cube_mesh()
                ),
                fake_bpy.Object(
                    name="Drop",
                    type="MESH",
                    data=fake_bpy.default_cube_mesh(),
                    selected=False,
                ),
            ]
        )
        set_scene(scene)
        doc = export_sgf.export_scene(str(tmp_path / "s.sgf.json"), selected_only=True)
        assert [o["name"] for o in doc["objects"]] == ["Keep"]

    def test_headless_main(self, tmp_path, capsys):
        out = tmp_path / "cli.sgf.json"
        assert export_sgf.main(["--out", str(out)]) == 0
        assert out.exists()
        assert "wrote 1 object(s), 1 camera(s)" in capsys.readouterr().out

    def test_headless_main_error_exit(self, tmp_path, capsys):
        set_scene(fake_bpy.Scene(objects=[]))
        assert export_sgf.main(["--out", str(tmp_path / "x.json")]) == 1
        assert "nothing to export" in capsys.readouterr().err

    def test_export_is_deterministic(self, tmp_path):
        a = tmp_path / "a.sgf.json"
        b = tmp_path / "b.sgf.json"
        export_sgf.export_scene(str(a))
        export_sgf.export_scene(str(b))
        assert a.read_bytes() == b.read_bytes()


class TestGraderRoundTrip:
    """The acceptance path: exported files fed to the grader CLI."""

    def test_exported_cube_validates(self, tmp_path):
        out = tmp_path / "cube.sgf.json"
        export_sgf.export_scene(str(out))
        proc = run_meshgrade("validate", "--scene", str(out))
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["valid"] is True
        assert doc["objects"] == [{"name": "Cube", "vertices": 8, "faces": 6}]

    def test_torus_export_self_grades_to_max(self, tmp_path):
        set_scene(fake_bpy.torus_scene())
        first = tmp_path / "first.sgf.json"
        second = tmp_path / "second.sgf.json"
        export_sgf.export_scene(str(first))
        export_sgf.export_scene(str(second))

        rubric = tmp_path / "rubric.json"
        rubric.write_text(json.dumps({"scene": {"path": first.name}}))
        report_path = tmp_path / "report.json"
        proc = run_meshgrade(
            "grade",
            "--rubric", str(rubric),
            "--submission", str(second),
            "--out", str(report_path),
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(report_path.read_text())
        assert report["score"] == 100.0
        assert report["feedback"] == []
        print("SECONDARY ACCEPTANCE PASS: exporter round-trip scores max_score")

    def test_cube_export_grades_against_torus_rubric_with_deduction(self, tmp_path):
        set_scene(fake_bpy.torus_scene())
        rubric_scene = tmp_path / "ideal.sgf.json"
        export_sgf.export_scene(str(rubric_scene))
        rubric = tmp_path / "rubric.json"
        rubric.write_text(json.dumps({"scene": {"path": rubric_scene.name}}))

        set_scene(fake_bpy.default_scene())
        submission = tmp_path / "cube.sgf.json"
        export_sgf.export_scene(str(submission))

        proc = run_meshgrade(
            "grade", "--rubric", str(rubric), "--submission", str(submission),
            "--format", "json",
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(proc.stdout)
        fired = {s["check_id"] for s in report["subscores"] if s["deduction"] > 0}
        assert "primitive_type" in fired
        assert report["score"] < 100.0
