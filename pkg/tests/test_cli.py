"""CLI contract: subcommands, exit codes, formats, batch determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import crown_mesh, crown_scene, write_rubric, write_sgf
from meshgrade import primitives
from meshgrade.cli import EXIT_CONFIG, EXIT_INPUT, EXIT_OK, main
from meshgrade.scene import Mesh


def mesh_to_obj(mesh: Mesh) -> bytes:
    lines = ["o exported"]
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for f in mesh.faces:
        lines.append("f " + " ".join(str(i + 1) for i in f))
    return ("\n".join(lines) + "\n").encode()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    crown = crown_mesh()
    rubric_path = write_rubric(root / "rubric.json", crown_scene(crown))
    good = write_sgf(root / "alice.sgf.json", crown_scene(crown))
    cube = write_sgf(root / "bob.sgf.json", crown_scene(primitives.grid_cube(17)))
    return {"root": root, "rubric": rubric_path, "good": good, "cube": cube, "crown": crown}


class TestGradeCommand:
    def test_perfect_submission_json(self, workspace, capsys):
        code = main(
            [
                "grade",
                "--rubric", str(workspace["rubric"]),
                "--submission", str(workspace["good"]),
            ]
        )
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["score"] == 100.0
        assert doc["submission_id"] == "alice"
        assert doc["feedback"] == []

    def test_malformed_sgf_exit_2(self, workspace, tmp_path, capsys):
        bad = tmp_path / "broken.sgf.json"
        bad.write_text("{nope")
        code = main(
            ["grade", "--rubric", str(workspace["rubric"]), "--submission", str(bad)]
        )
        assert code == EXIT_INPUT
        assert "malformed" in capsys.readouterr().err

    def test_negative_weight_exit_3(self, workspace, tmp_path, capsys):
        weights = tmp_path / "weights.json"
        weights.write_text(json.dumps({"w_location": -5}))
        code = main(
            [
                "grade",
                "--rubric", str(workspace["rubric"]),
                "--submission", str(workspace["good"]),
                "--weights", str(weights),
            ]
        )
        assert code == EXIT_CONFIG
        assert "invalid weight" in capsys.readouterr().err

    def test_unreadable_file_exit_2(self, workspace, capsys):
        code = main(
            [
                "grade",
                "--rubric", str(workspace["rubric"]),
                "--submission", str(workspace["root"] / "nope.sgf.json"),
            ]
        )
        assert code == EXIT_INPUT

    def test_text_and_csv_formats(self, workspace, capsys):
        assert (
            main(
                [
                    "grade",
                    "--rubric", str(workspace["rubric"]),
                    "--submission", str(workspace["cube"]),
                    "--format", "text",
                ]
            )
            == EXIT_OK
        )
        out = capsys.readouterr().out
        assert "score: 70.00" in out
        assert "primitive_type" in out

        assert (
            main(
                [
                    "grade",
                    "--rubric", str(workspace["rubric"]),
                    "--submission", str(workspace["cube"]),
                    "--format", "csv",
                ]
            )
            == EXIT_OK
        )
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0].startswith("submission_id,score,location,")
        assert lines[1].startswith("bob,70.00")

    def test_out_file_written(self, workspace, tmp_path):
        out = tmp_path / "report.json"
        code = main(
            [
                "grade",
                "--rubric", str(workspace["rubric"]),
                "--submission", str(workspace["good"]),
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        assert json.loads(out.read_text())["score"] == 100.0

    def test_obj_submission_not_assessable_pose(self, workspace, tmp_path, capsys):
        obj_path = tmp_path / "carol.obj"
        obj_path.write_bytes(mesh_to_obj(workspace["crown"]))
        code = main(
            ["grade", "--rubric", str(workspace["rubric"]), "--submission", str(obj_path)]
        )
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["score"] == 100.0
        flags = {s["check_id"]: s["assessable"] for s in doc["subscores"]}
        assert flags["location"] is False and flags["camera"] is False
        assert flags["polygon_ratio"] is True

    def test_templates_env_var(self, workspace, tmp_path, capsys, monkeypatch):
        from meshgrade.engine import CheckId

        custom = {
            c.value: {"message": f"custom {c.value} on {{object}}", "suggestion": ""}
            for c in CheckId
        }
        tpl = tmp_path / "templates.json"
        tpl.write_text(json.dumps(custom))
        monkeypatch.setenv("MESHGRADE_TEMPLATES", str(tpl))
        code = main(
            ["grade", "--rubric", str(workspace["rubric"]), "--submission", str(workspace["cube"])]
        )
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        messages = [f["message"] for f in doc["feedback"]]
        assert any(m.startswith("custom primitive_type") for m in messages)

    def test_inputs_never_mutated(self, workspace):
        before = workspace["good"].read_bytes()
        main(
            ["grade", "--rubric", str(workspace["rubric"]), "--submission", str(workspace["good"])]
        )
        assert workspace["good"].read_bytes() == before


class TestBatchCommand:
    @pytest.fixture()
    def batch_dir(self, tmp_path):
        d = tmp_path / "subs"
        d.mkdir()
        crown = crown_mesh()
        for i in range(8):
            mesh = crown if i % 2 == 0 else primitives.grid_cube(17)
            write_sgf(d / f"learner{i:02d}.sgf.json", crown_scene(mesh))
        (d / "broken1.sgf.json").write_text("{")
        (d / "broken2.sgf.json").write_text('{"sgf_version": 9}')
        return d

    def test_batch_grades_and_reports_failures(self, workspace, batch_dir, tmp_path, capsys):
        out_dir = tmp_path / "reports"
        summary = tmp_path / "summary.csv"
        code = main(
            [
                "batch",
                "--rubric", str(workspace["rubric"]),
                "--dir", str(batch_dir),
                "--jobs", "1",
                "--out-dir", str(out_dir),
                "--summary", str(summary),
                "--summary-json", str(tmp_path / "summary.json"),
            ]
        )
        assert code == EXIT_OK
        rows = summary.read_text().strip().splitlines()
        assert len(rows) == 1 + 8  # header + graded files; failures excluded
        assert len(list(out_dir.glob("*.report.json"))) == 8
        summary_doc = json.loads((tmp_path / "summary.json").read_text())
        assert summary_doc["total"] == 10
        assert summary_doc["graded"] == 8
        assert len(summary_doc["failed"]) == 2
        err = capsys.readouterr().err
        assert "graded 8/10" in err

        # Cross-check: per-check failure counts match the emitted reports.
        fired = {c: 0 for c in summary_doc["per_check_failure_counts"]}
        for report_path in out_dir.glob("*.report.json"):
            doc = json.loads(report_path.read_text())
            for check in {s["check_id"] for s in doc["subscores"] if s["deduction"] > 0}:
                fired[check] += 1
        assert fired == summary_doc["per_check_failure_counts"]

    def test_jobs_1_and_4_byte_identical(self, workspace, batch_dir, tmp_path):
        s1 = tmp_path / "s1.csv"
        s4 = tmp_path / "s4.csv"
        for jobs, path in ((1, s1), (4, s4)):
            code = main(
                [
                    "batch",
                    "--rubric", str(workspace["rubric"]),
                    "--dir", str(batch_dir),
                    "--jobs", str(jobs),
                    "--summary", str(path),
                ]
            )
            assert code == EXIT_OK
        assert s1.read_bytes() == s4.read_bytes()

    def test_empty_directory_exit_2(self, workspace, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert (
            main(["batch", "--rubric", str(workspace["rubric"]), "--dir", str(empty)])
            == EXIT_INPUT
        )


class TestDupesCommand:
    def test_planted_pair(self, workspace, tmp_path, capsys):
        d = tmp_path / "cohort"
        d.mkdir()
        crown = workspace["crown"]
        write_sgf(d / "a.sgf.json", crown_scene(crown))
        copied = Mesh(crown.vertices * 2.0 + 1.0, crown.faces)
        write_sgf(d / "b.sgf.json", crown_scene(copied))
        write_sgf(d / "c.sgf.json", crown_scene(primitives.torus(20, 10)))
        code = main(["dupes", "--dir", str(d)])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["clusters"]) == 1
        assert {m["submission_id"] for m in doc["clusters"][0]} == {"a", "b"}

    def test_all_unique_empty_clusters(self, tmp_path, capsys):
        d = tmp_path / "cohort"
        d.mkdir()
        write_sgf(d / "a.sgf.json", crown_scene(primitives.torus(12, 6)))
        write_sgf(d / "b.sgf.json", crown_scene(primitives.torus(16, 8)))
        code = main(["dupes", "--dir", str(d)])
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["clusters"] == []

    def test_cross_format_duplicate_detected(self, tmp_path, capsys):
        d = tmp_path / "cohort"
        d.mkdir()
        mesh = primitives.torus(14, 7)
        write_sgf(d / "sgf_sub.sgf.json", crown_scene(mesh))
        (d / "obj_sub.obj").write_bytes(mesh_to_obj(mesh))
        code = main(["dupes", "--dir", str(d)])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["clusters"]) == 1
        assert {m["submission_id"] for m in doc["clusters"][0]} == {"sgf_sub", "obj_sub"}

    def test_fewer_than_two_exit_2(self, tmp_path):
        d = tmp_path / "cohort"
        d.mkdir()
        write_sgf(d / "only.sgf.json", crown_scene(primitives.torus(12, 6)))
        assert main(["dupes", "--dir", str(d)]) == EXIT_INPUT

    def test_exclude_rubric_template(self, workspace, tmp_path, capsys):
        d = tmp_path / "cohort"
        d.mkdir()
        crown = workspace["crown"]
        write_sgf(d / "a.sgf.json", crown_scene(crown))
        write_sgf(d / "b.sgf.json", crown_scene(crown))
        code = main(
            ["dupes", "--dir", str(d), "--exclude-rubric", str(workspace["rubric"])]
        )
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["clusters"] == []


class TestValidateCommand:
    def test_valid_scene(self, workspace, capsys):
        code = main(["validate", "--scene", str(workspace["good"])])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["valid"] is True
        assert doc["objects"][0]["name"] == "Crown"

    def test_invalid_scene(self, tmp_path, capsys):
        bad = tmp_path / "bad.sgf.json"
        bad.write_text(json.dumps({"sgf_version": 1, "objects": [{"name": ""}]}))
        code = main(["validate", "--scene", str(bad)])
        assert code == EXIT_INPUT
        doc = json.loads(capsys.readouterr().out)
        assert doc["valid"] is False and doc["errors"]
