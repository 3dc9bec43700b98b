"""Wire the bpy test double in before the exporter module is imported."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent.parent))

import fake_bpy

# The exporter does `import bpy` at module scope; give it the double.
_bpy = fake_bpy.make_module()
sys.modules.setdefault("bpy", _bpy)

import export_sgf  # noqa: E402  (needs the stub in place first)


def set_scene(scene) -> None:
    sys.modules["bpy"].context.scene = scene
