"""meshgrade: rubric-based auto-grading for 3D modeling assignment scenes.

Typical use::

    from meshgrade import Rubric, grade
    from meshgrade.ingest import parse_scene_file

    rubric_scene, _ = parse_scene_file("rubric.sgf.json")
    submission, _ = parse_scene_file("submission.sgf.json")
    report = grade(submission, Rubric(scene=rubric_scene))

or, estimator style::

    from meshgrade.estimators import SceneGrader

    grader = SceneGrader().fit(rubric_scene)
    report = grader.predict(submission)
"""

from .engine import (
    CheckId,
    GradeOptions,
    GradeReport,
    Matching,
    Rubric,
    SubScore,
    ToleranceTable,
    WeightTable,
    grade,
    load_rubric,
    match_objects,
    prepare_rubric,
)
from .errors import (
    ConfigurationError,
    MeshgradeError,
    SceneValidationError,
    TemplateError,
)
from .geometry import (
    Aabb,
    MeshStats,
    PrimitiveGuess,
    frustum_coverage,
    infer_primitive,
    mesh_stats,
    rotation_distance,
    world_aabb,
)
from .ingest import ValidationReport, parse_obj, parse_sgf, serialize_sgf, validate_scene
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
from .similarity import DuplicateReport, Fingerprint, mesh_fingerprint, scan_duplicates

__version__ = "0.1.0"
