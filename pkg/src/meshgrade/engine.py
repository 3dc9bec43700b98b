"""Object matching, the rubric sub-score checks and deduction-from-maximum
aggregation into a grade report.

Grading starts from the rubric's maximum score and subtracts a weighted
penalty per failed check: object pose (location and rotation), scale,
polygon-count ratio, primitive type, object inventory, surface modifiers
and camera framing. grade() is pure: the same inputs always produce an
identical report.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigurationError
from .geometry import (
    PrimitiveGuess,
    bounding_sphere,
    coverage_points,
    infer_primitive,
    points_in_frustum,
    rotation_distance,
)
from .scene import Camera, PrimitiveType, Quaternion, Scene, SceneObject

__all__ = [
    "CheckId",
    "WeightTable",
    "ToleranceTable",
    "Rubric",
    "GradeOptions",
    "SubScore",
    "Matching",
    "GradeReport",
    "PreparedRubric",
    "prepare_rubric",
    "load_rubric",
    "match_objects",
    "score_pose",
    "score_scale",
    "score_polygon_ratio",
    "score_inventory",
    "score_camera",
    "grade",
    "ENGINE_VERSION",
    "CAMERA_SAMPLES_PER_OBJECT",
]

ENGINE_VERSION = "0.1.0"
CAMERA_SAMPLES_PER_OBJECT = 256


class CheckId(Enum):
    LOCATION = "location"
    ROTATION = "rotation"
    SCALE = "scale"
    POLYGON_RATIO = "polygon_ratio"
    PRIMITIVE_TYPE = "primitive_type"
    MISSING_OBJECT = "missing_object"
    EXTRA_OBJECT = "extra_object"
    CAMERA = "camera"
    MODIFIER = "modifier"


_CHECK_ORDER = {check: i for i, check in enumerate(CheckId)}


def check_order(check: CheckId) -> int:
    """Stable position of a check in the enumeration, for deterministic
    ordering of report and feedback entries."""
    return _CHECK_ORDER[check]


@dataclass(frozen=True, slots=True)
class WeightTable:
    """Points at stake per check. Rotation deliberately weighs less than
    location, and a wrong primitive type weighs most."""

    max_score: float = 100.0
    w_location: float = 10.0
    w_rotation: float = 5.0
    w_scale: float = 10.0
    w_polygon: float = 15.0
    w_primitive_type: float = 30.0
    w_missing_object: float = 30.0
    w_extra_object: float = 5.0
    extra_object_cap: float = 15.0
    w_camera: float = 15.0
    w_modifier: float = 5.0
    allow_weight_order_override: bool = False

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name in ("max_score", "allow_weight_order_override"):
                continue
            value = getattr(self, f.name)
            if value < 0:
                raise ConfigurationError(f"invalid weight: {f.name} must be >= 0, got {value}")
        if self.max_score <= 0:
            raise ConfigurationError(f"max_score must be > 0, got {self.max_score}")
        if self.w_rotation >= self.w_location:
            message = (
                f"w_rotation ({self.w_rotation}) should stay below w_location "
                f"({self.w_location}); rotation is deliberately the lighter check"
            )
            if self.allow_weight_order_override:
                warnings.warn(message, stacklevel=2)
            else:
                raise ConfigurationError(message)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WeightTable":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown weight field(s): {sorted(unknown)}")
        return cls(**data)

    def weight_for(self, check: CheckId) -> float:
        return {
            CheckId.LOCATION: self.w_location,
            CheckId.ROTATION: self.w_rotation,
            CheckId.SCALE: self.w_scale,
            CheckId.POLYGON_RATIO: self.w_polygon,
            CheckId.PRIMITIVE_TYPE: self.w_primitive_type,
            CheckId.MISSING_OBJECT: self.w_missing_object,
            CheckId.EXTRA_OBJECT: self.w_extra_object,
            CheckId.CAMERA: self.w_camera,
            CheckId.MODIFIER: self.w_modifier,
        }[check]


@dataclass(frozen=True, slots=True)
class ToleranceTable:
    """Full-credit / zero-credit bounds for the continuous checks and the
    inclusive polygon-count ratio band."""

    loc_full_credit: float = 0.10
    loc_zero_credit: float = 0.50
    rot_full_credit: float = 0.2618  # ~15 degrees
    rot_zero_credit: float = 1.0472  # ~60 degrees
    scale_full_credit_factor: float = 1.25
    scale_zero_credit_factor: float = 2.0
    polygon_band: tuple[float, float] = (0.7, 1.3)
    camera_full_credit_coverage: float = 0.95
    match_cost_cutoff: float = 4.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "polygon_band", tuple(self.polygon_band))
        pairs = [
            ("loc", self.loc_full_credit, self.loc_zero_credit),
            ("rot", self.rot_full_credit, self.rot_zero_credit),
            ("scale", self.scale_full_credit_factor, self.scale_zero_credit_factor),
        ]
        for name, full, zero in pairs:
            if not 0 < full < zero:
                raise ConfigurationError(
                    f"{name}: need 0 < full-credit bound < zero-credit bound, got {full}, {zero}"
                )
        if self.scale_full_credit_factor < 1.0:
            raise ConfigurationError("scale_full_credit_factor must be >= 1")
        low, high = self.polygon_band
        if not low < 1.0 < high:
            raise ConfigurationError(f"polygon_band must straddle 1.0, got [{low}, {high}]")
        if low <= 0:
            raise ConfigurationError("polygon_band lower bound must be > 0")
        if not 0.0 < self.camera_full_credit_coverage <= 1.0:
            raise ConfigurationError("camera_full_credit_coverage must be in (0, 1]")
        if self.match_cost_cutoff <= 0:
            raise ConfigurationError("match_cost_cutoff must be > 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToleranceTable":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown tolerance field(s): {sorted(unknown)}")
        prepared = dict(data)
        if "polygon_band" in prepared:
            band = prepared["polygon_band"]
            if not isinstance(band, (list, tuple)) or len(band) != 2:
                raise ConfigurationError("polygon_band must be [low, high]")
            prepared["polygon_band"] = (float(band[0]), float(band[1]))
        return cls(**prepared)


@dataclass(frozen=True, slots=True)
class Rubric:
    """The grading contract: an ideal scene plus weights and tolerances."""

    scene: Scene
    weights: WeightTable = field(default_factory=WeightTable)
    tolerances: ToleranceTable = field(default_factory=ToleranceTable)
    use_declared_primitive: bool = False

    def __post_init__(self) -> None:
        if not self.scene.objects:
            raise ConfigurationError("rubric scene has no objects")
        for obj in self.scene.objects:
            if obj.mesh.face_count == 0 or obj.mesh.vertex_count == 0:
                raise ConfigurationError(
                    f"rubric object {obj.name!r} has an empty mesh (polygon count 0)"
                )


@dataclass(frozen=True, slots=True)
class GradeOptions:
    """Which checks the submission carries enough data for. OBJ ingest has
    no transforms or cameras, so pose, scale and camera become
    'not assessable' rather than wrong."""

    assess_pose: bool = True
    assess_scale: bool = True
    assess_camera: bool = True

    @classmethod
    def for_units(cls, units: str) -> "GradeOptions":
        from .ingest import OBJ_UNITS_LABEL

        if units == OBJ_UNITS_LABEL:
            return cls(assess_pose=False, assess_scale=False, assess_camera=False)
        return cls()


@dataclass(frozen=True, slots=True)
class SubScore:
    """Outcome of one check on one object (or on the camera).

    `measured` is the raw metric and `threshold` the bound it was held to;
    `weight` is the maximum deduction this check could have taken. The
    label fields carry categorical readings (e.g. primitive names) for
    feedback rendering.
    """

    check_id: CheckId
    object_name: str | None
    deduction: float
    measured: float
    threshold: float
    weight: float
    assessable: bool = True
    note: str = ""
    measured_label: str = ""
    expected_label: str = ""

    def __post_init__(self) -> None:
        if self.deduction < 0 or self.deduction > self.weight + 1e-9:
            raise ConfigurationError(
                f"{self.check_id.value}: deduction {self.deduction} outside [0, {self.weight}]"
            )

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id.value,
            "object_name": self.object_name,
            "deduction": self.deduction,
            "measured": self.measured,
            "threshold": self.threshold,
            "weight": self.weight,
            "assessable": self.assessable,
            "note": self.note,
            "measured_label": self.measured_label,
            "expected_label": self.expected_label,
        }


@dataclass(frozen=True, slots=True)
class Matching:
    """One-to-one assignment between submission and rubric objects."""

    pairs: tuple[tuple[str, str, float], ...]
    unmatched_submission: tuple[str, ...]
    unmatched_rubric: tuple[str, ...]

    def __post_init__(self) -> None:
        seen_sub: set[str] = set()
        seen_rub: set[str] = set()
        for sub, rub, _ in self.pairs:
            seen_sub.add(sub)
            seen_rub.add(rub)
        for name in self.unmatched_submission:
            if name in seen_sub:
                raise ConfigurationError(f"{name!r} both matched and unmatched")
            seen_sub.add(name)
        for name in self.unmatched_rubric:
            if name in seen_rub:
                raise ConfigurationError(f"{name!r} both matched and unmatched")
            seen_rub.add(name)

    @property
    def total_cost(self) -> float:
        return sum(cost for _, _, cost in self.pairs)

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"submission": s, "rubric": r, "cost": c} for s, r, c in self.pairs
            ],
            "unmatched_submission": list(self.unmatched_submission),
            "unmatched_rubric": list(self.unmatched_rubric),
        }


@dataclass(frozen=True, slots=True)
class GradeReport:
    """Final score plus every sub-score, the object matching and the
    primitive classification evidence."""

    score: float
    subscores: tuple[SubScore, ...]
    matching: Matching
    primitive_guesses: dict[str, PrimitiveGuess]
    rubric_id: str = ""
    submission_id: str = ""
    engine_version: str = ENGINE_VERSION

    def deduction_total(self, check: CheckId | None = None) -> float:
        return sum(
            s.deduction for s in self.subscores if check is None or s.check_id is check
        )

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "subscores": [s.to_dict() for s in self.subscores],
            "matching": self.matching.to_dict(),
            "primitive_guesses": {
                name: {
                    "primitive": guess.primitive.value,
                    "confidence": guess.confidence,
                    "evidence": list(guess.evidence),
                }
                for name, guess in sorted(self.primitive_guesses.items())
            },
            "rubric_id": self.rubric_id,
            "submission_id": self.submission_id,
            "engine_version": self.engine_version,
        }

    def to_json(self, *, feedback: list[dict] | None = None, indent: int | None = None) -> bytes:
        doc = self.to_dict()
        if feedback is not None:
            doc["feedback"] = feedback
        return json.dumps(doc, indent=indent).encode("utf-8")


# ---------------------------------------------------------------------------
# Rubric preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Frame:
    """World-to-reference-frame map shared by all cross-scene comparisons.

    Poses are compared in the frame of each scene's first camera so that a
    rigid motion applied to a whole scene (objects and camera together)
    changes nothing. Scenes without a camera fall back to world frame.
    """

    rotation_t: np.ndarray  # world->frame rotation, applied as row @ R
    origin: np.ndarray
    orientation_inv: Quaternion

    @classmethod
    def identity(cls) -> "_Frame":
        return cls(np.eye(3), np.zeros(3), Quaternion.identity())

    @classmethod
    def from_camera(cls, camera: Camera) -> "_Frame":
        return cls(
            camera.transform.rotation.to_matrix(),
            camera.transform.location.to_array(),
            camera.transform.rotation.conjugate(),
        )

    def point(self, p: np.ndarray) -> np.ndarray:
        return (np.asarray(p, dtype=np.float64) - self.origin) @ self.rotation_t

    def orientation(self, q: Quaternion) -> Quaternion:
        return self.orientation_inv.multiply(q)


def _primitive_of(obj: SceneObject, use_declared: bool, guess: PrimitiveGuess) -> PrimitiveType:
    if use_declared and obj.declared_primitive is not None:
        return obj.declared_primitive
    return guess.primitive


@dataclass(frozen=True, slots=True)
class PreparedRubric:
    """A rubric with its derived quantities computed once, so repeated
    grade() calls (batch, service) skip the per-call rubric analysis."""

    rubric: Rubric
    radius: float
    guesses: dict[str, PrimitiveGuess]
    self_coverage: float | None  # None when the rubric scene has no camera

    @property
    def scene(self) -> Scene:
        return self.rubric.scene

    @property
    def weights(self) -> WeightTable:
        return self.rubric.weights

    @property
    def tolerances(self) -> ToleranceTable:
        return self.rubric.tolerances


def _scene_radius(scene: Scene) -> float:
    all_points = [obj.world_vertices() for obj in scene.objects if obj.mesh.vertex_count]
    if not all_points:
        return 1.0
    _, radius = bounding_sphere(np.vstack(all_points))
    return radius if radius > 1e-12 else 1.0


def _pooled_coverage(objects: list[SceneObject], camera: Camera) -> float:
    pools = [
        coverage_points(obj.mesh, obj.transform, CAMERA_SAMPLES_PER_OBJECT)
        for obj in objects
        if obj.mesh.vertex_count
    ]
    if not pools:
        return 0.0
    points = np.vstack(pools)
    return float(points_in_frustum(points, camera).mean())


def prepare_rubric(rubric: Rubric) -> PreparedRubric:
    guesses = {obj.name: infer_primitive(obj.mesh) for obj in rubric.scene.objects}
    camera = rubric.scene.first_camera()
    self_coverage = None
    if camera is not None:
        self_coverage = _pooled_coverage(list(rubric.scene.objects), camera)
    return PreparedRubric(
        rubric=rubric,
        radius=_scene_radius(rubric.scene),
        guesses=guesses,
        self_coverage=self_coverage,
    )


def load_rubric(source: bytes | str | Mapping[str, Any], *, base_dir: str | Path | None = None) -> Rubric:
    """Load a rubric document: JSON with an inline SGF scene (or a path to
    one), plus optional weight and tolerance overrides. Any problem raises
    ConfigurationError."""
    from .ingest import parse_scene_file, parse_sgf

    if isinstance(source, (bytes, str)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"rubric is not valid JSON: {exc}") from exc
    else:
        doc = dict(source)
    if not isinstance(doc, dict):
        raise ConfigurationError("rubric document must be a JSON object")

    scene_spec = doc.get("scene")
    if scene_spec is None:
        raise ConfigurationError("rubric document is missing the scene")
    if isinstance(scene_spec, Mapping) and set(scene_spec.keys()) == {"path"}:
        path = Path(scene_spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            scene, report = parse_scene_file(path)
        except OSError as exc:
            raise ConfigurationError(f"cannot read rubric scene {path}: {exc}") from exc
    elif isinstance(scene_spec, Mapping):
        scene, report = parse_sgf(json.dumps(scene_spec))
    else:
        raise ConfigurationError("rubric scene must be an inline SGF object or {\"path\": ...}")
    if scene is None:
        raise ConfigurationError(f"rubric scene is invalid:\n{report}")

    try:
        weights = WeightTable.from_dict(doc.get("weights", {}))
        tolerances = ToleranceTable.from_dict(doc.get("tolerances", {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad rubric configuration: {exc}") from exc
    return Rubric(
        scene=scene,
        weights=weights,
        tolerances=tolerances,
        use_declared_primitive=bool(doc.get("use_declared_primitive", False)),
    )


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def _pair_cost(
    sub: SceneObject,
    rub: SceneObject,
    sub_type: PrimitiveType,
    rub_type: PrimitiveType,
    sub_frame: _Frame,
    rub_frame: _Frame,
    radius: float,
) -> float:
    cost = 0.0 if sub_type is rub_type else 1.0
    c_sub = sub.world_vertices().mean(axis=0)
    c_rub = rub.world_vertices().mean(axis=0)
    # Distance in whichever frame agrees better: world coordinates keep a
    # misplaced camera from cascading into missing-object flags, camera
    # frame keeps a rigidly moved scene matchable.
    d_world = float(np.linalg.norm(c_sub - c_rub))
    d_frame = float(np.linalg.norm(sub_frame.point(c_sub) - rub_frame.point(c_rub)))
    cost += min(d_world, d_frame) / radius
    f_sub, f_rub = sub.mesh.face_count, rub.mesh.face_count
    if f_sub > 0 and f_rub > 0:
        cost += 0.25 * abs(math.log(f_sub / f_rub))
    elif f_sub != f_rub:
        cost += 4.0  # one side empty: as bad as the default cutoff
    return cost


def _frames(submission: Scene, rubric_scene: Scene) -> tuple[_Frame, _Frame]:
    sub_cam = submission.first_camera()
    rub_cam = rubric_scene.first_camera()
    if sub_cam is not None and rub_cam is not None:
        return _Frame.from_camera(sub_cam), _Frame.from_camera(rub_cam)
    return _Frame.identity(), _Frame.identity()


def match_objects(
    submission: Scene,
    rubric: Rubric | PreparedRubric,
    *,
    guesses: dict[str, PrimitiveGuess] | None = None,
) -> Matching:
    """Minimum-total-cost one-to-one assignment between submission and
    rubric objects. Pair cost combines a type-mismatch indicator, the
    normalized centroid distance and a face-count ratio term; pairs whose
    cost exceeds the cutoff are left unmatched. Ties break on name order.
    """
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    if guesses is None:
        guesses = {obj.name: infer_primitive(obj.mesh) for obj in submission.objects}

    subs = sorted(submission.objects, key=lambda o: o.name)
    rubs = sorted(prepared.scene.objects, key=lambda o: o.name)
    if not subs:
        return Matching(
            pairs=(),
            unmatched_submission=(),
            unmatched_rubric=tuple(o.name for o in rubs),
        )

    use_declared = prepared.rubric.use_declared_primitive
    sub_frame, rub_frame = _frames(submission, prepared.scene)
    sub_types = [_primitive_of(o, use_declared, guesses[o.name]) for o in subs]
    rub_types = [
        _primitive_of(o, use_declared, prepared.guesses[o.name]) for o in rubs
    ]

    cost = np.zeros((len(subs), len(rubs)))
    for i, sub in enumerate(subs):
        for j, rub in enumerate(rubs):
            cost[i, j] = _pair_cost(
                sub, rub, sub_types[i], rub_types[j], sub_frame, rub_frame, prepared.radius
            )

    from scipy.optimize import linear_sum_assignment  # deferred: heavy import

    rows, cols = linear_sum_assignment(cost)
    cutoff = prepared.tolerances.match_cost_cutoff
    pairs: list[tuple[str, str, float]] = []
    matched_sub: set[int] = set()
    matched_rub: set[int] = set()
    for i, j in zip(rows, cols):
        c = float(cost[i, j])
        if c > cutoff:
            continue
        pairs.append((subs[i].name, rubs[j].name, c))
        matched_sub.add(i)
        matched_rub.add(j)

    return Matching(
        pairs=tuple(sorted(pairs)),
        unmatched_submission=tuple(
            o.name for i, o in enumerate(subs) if i not in matched_sub
        ),
        unmatched_rubric=tuple(o.name for j, o in enumerate(rubs) if j not in matched_rub),
    )


# ---------------------------------------------------------------------------
# Sub-score checks
# ---------------------------------------------------------------------------


def _ramp(x: float, full: float, zero: float, weight: float) -> float:
    """0 at or below the full-credit bound, the whole weight at or above
    the zero-credit bound, linear in between."""
    if x <= full:
        return 0.0
    if x >= zero:
        return weight
    return weight * (x - full) / (zero - full)


def score_pose(
    sub: SceneObject,
    rub: SceneObject,
    rubric: Rubric | PreparedRubric,
    *,
    assessable: bool = True,
    sub_frame: _Frame | None = None,
    rub_frame: _Frame | None = None,
) -> tuple[SubScore, SubScore]:
    """Location and rotation sub-scores for one matched pair."""
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    tol, w = prepared.tolerances, prepared.weights
    if sub_frame is None or rub_frame is None:
        sub_frame = rub_frame = _Frame.identity()
    if not assessable:
        return (
            SubScore(CheckId.LOCATION, sub.name, 0.0, 0.0, tol.loc_full_credit,
                     w.w_location, assessable=False, note="pose data not available"),
            SubScore(CheckId.ROTATION, sub.name, 0.0, 0.0, tol.rot_full_credit,
                     w.w_rotation, assessable=False, note="pose data not available"),
        )

    p_sub = sub_frame.point(sub.transform.location.to_array())
    p_rub = rub_frame.point(rub.transform.location.to_array())
    loc_metric = float(np.linalg.norm(p_sub - p_rub)) / prepared.radius
    loc = SubScore(
        CheckId.LOCATION,
        sub.name,
        _ramp(loc_metric, tol.loc_full_credit, tol.loc_zero_credit, w.w_location),
        loc_metric,
        tol.loc_full_credit,
        w.w_location,
    )

    q_sub = sub_frame.orientation(sub.transform.rotation)
    q_rub = rub_frame.orientation(rub.transform.rotation)
    rot_metric = rotation_distance(q_sub, q_rub)
    rot = SubScore(
        CheckId.ROTATION,
        sub.name,
        _ramp(rot_metric, tol.rot_full_credit, tol.rot_zero_credit, w.w_rotation),
        rot_metric,
        tol.rot_full_credit,
        w.w_rotation,
    )
    return loc, rot


def score_scale(
    sub: SceneObject,
    rub: SceneObject,
    rubric: Rubric | PreparedRubric,
    *,
    assessable: bool = True,
) -> SubScore:
    """Worst per-axis scale ratio, mapped through the linear ramp."""
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    tol, w = prepared.tolerances, prepared.weights
    if not assessable:
        return SubScore(CheckId.SCALE, sub.name, 0.0, 1.0, tol.scale_full_credit_factor,
                        w.w_scale, assessable=False, note="scale data not available")
    s_sub = sub.transform.scale.to_list()
    s_rub = rub.transform.scale.to_list()
    metric = max(max(a / b, b / a) for a, b in zip(s_sub, s_rub))
    return SubScore(
        CheckId.SCALE,
        sub.name,
        _ramp(metric, tol.scale_full_credit_factor, tol.scale_zero_credit_factor, w.w_scale),
        metric,
        tol.scale_full_credit_factor,
        w.w_scale,
    )


def score_polygon_ratio(
    sub: SceneObject, rub: SceneObject, rubric: Rubric | PreparedRubric
) -> SubScore:
    """Polygon-count ratio check: full credit inside the inclusive band,
    the whole polygon weight outside it."""
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    tol, w = prepared.tolerances, prepared.weights
    if rub.mesh.face_count == 0:
        raise ConfigurationError(f"rubric object {rub.name!r} has polygon count 0")
    low, high = tol.polygon_band
    ratio = sub.mesh.face_count / rub.mesh.face_count
    inside = low <= ratio <= high
    violated_bound = high if ratio > high else low
    return SubScore(
        CheckId.POLYGON_RATIO,
        sub.name,
        0.0 if inside else w.w_polygon,
        ratio,
        violated_bound if not inside else high,
        w.w_polygon,
        expected_label=f"[{low:.2f}, {high:.2f}]",
    )


def score_inventory(
    matching: Matching,
    submission: Scene,
    rubric: Rubric | PreparedRubric,
    *,
    guesses: dict[str, PrimitiveGuess] | None = None,
) -> list[SubScore]:
    """Primitive-type, missing/extra object and modifier sub-scores."""
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    w = prepared.weights
    if guesses is None:
        guesses = {obj.name: infer_primitive(obj.mesh) for obj in submission.objects}
    use_declared = prepared.rubric.use_declared_primitive

    out: list[SubScore] = []
    for sub_name, rub_name, _cost in matching.pairs:
        sub = submission.object_by_name(sub_name)
        rub = prepared.scene.object_by_name(rub_name)
        sub_type = _primitive_of(sub, use_declared, guesses[sub_name])
        rub_type = _primitive_of(rub, use_declared, prepared.guesses[rub_name])
        mismatch = sub_type is not rub_type
        out.append(
            SubScore(
                CheckId.PRIMITIVE_TYPE,
                sub_name,
                w.w_primitive_type if mismatch else 0.0,
                1.0 if mismatch else 0.0,
                0.0,
                w.w_primitive_type,
                measured_label=sub_type.display_name,
                expected_label=rub_type.display_name,
            )
        )
        added_modifiers = bool(sub.modifiers) and not rub.modifiers
        out.append(
            SubScore(
                CheckId.MODIFIER,
                sub_name,
                w.w_modifier if added_modifiers else 0.0,
                float(len(sub.modifiers)),
                0.0,
                w.w_modifier,
                measured_label=", ".join(sub.modifiers),
            )
        )

    for rub_name in matching.unmatched_rubric:
        rub = prepared.scene.object_by_name(rub_name)
        rub_type = _primitive_of(rub, use_declared, prepared.guesses[rub_name])
        out.append(
            SubScore(
                CheckId.MISSING_OBJECT,
                rub_name,
                w.w_missing_object,
                1.0,
                0.0,
                w.w_missing_object,
                expected_label=rub_type.display_name,
            )
        )

    remaining = w.extra_object_cap
    for sub_name in matching.unmatched_submission:
        deduction = min(w.w_extra_object, max(0.0, remaining))
        remaining -= deduction
        out.append(
            SubScore(
                CheckId.EXTRA_OBJECT,
                sub_name,
                deduction,
                1.0,
                0.0,
                w.w_extra_object,
            )
        )
    return out


def score_camera(
    submission: Scene,
    rubric: Rubric | PreparedRubric,
    matching: Matching,
    *,
    assessable: bool = True,
) -> SubScore | None:
    """Framing check: fraction of the matched objects' surface samples the
    submission's first camera can see.

    The effective full-credit bound is capped at the rubric scene's own
    coverage of itself, so a rubric-identical scene always passes. Returns
    None when the rubric expects no camera at all.
    """
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    tol, w = prepared.tolerances, prepared.weights
    if prepared.self_coverage is None:
        return None
    threshold = min(tol.camera_full_credit_coverage, prepared.self_coverage)
    if not assessable:
        return SubScore(CheckId.CAMERA, None, 0.0, 0.0, threshold, w.w_camera,
                        assessable=False, note="camera data not available")

    camera = submission.first_camera()
    if camera is None:
        return SubScore(
            CheckId.CAMERA, None, w.w_camera, 0.0, threshold, w.w_camera,
            note="no camera",
        )
    matched = [submission.object_by_name(s) for s, _, _ in matching.pairs]
    if not matched:
        return SubScore(CheckId.CAMERA, None, 0.0, 0.0, threshold, w.w_camera,
                        assessable=False, note="no matched objects to frame")
    coverage = _pooled_coverage(matched, camera)
    if threshold <= 0.0 or coverage >= threshold:
        deduction = 0.0
    else:
        deduction = round(w.w_camera * (threshold - coverage) / threshold, 2)
    return SubScore(CheckId.CAMERA, None, deduction, coverage, threshold, w.w_camera)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def grade(
    submission: Scene,
    rubric: Rubric | PreparedRubric,
    *,
    options: GradeOptions | None = None,
    submission_id: str = "",
    rubric_id: str = "",
) -> GradeReport:
    """Run every check and aggregate score = clamp(max - sum(deductions)).

    Pure and deterministic: identical inputs produce identical reports.
    """
    prepared = rubric if isinstance(rubric, PreparedRubric) else prepare_rubric(rubric)
    if options is None:
        options = GradeOptions.for_units(submission.units)

    guesses = {obj.name: infer_primitive(obj.mesh) for obj in submission.objects}
    matching = match_objects(submission, prepared, guesses=guesses)
    sub_frame, rub_frame = _frames(submission, prepared.scene)

    subscores: list[SubScore] = []
    for sub_name, rub_name, _cost in matching.pairs:
        sub = submission.object_by_name(sub_name)
        rub = prepared.scene.object_by_name(rub_name)
        loc, rot = score_pose(
            sub,
            rub,
            prepared,
            assessable=options.assess_pose,
            sub_frame=sub_frame,
            rub_frame=rub_frame,
        )
        subscores.append(loc)
        subscores.append(rot)
        subscores.append(score_scale(sub, rub, prepared, assessable=options.assess_scale))
        subscores.append(score_polygon_ratio(sub, rub, prepared))

    subscores.extend(score_inventory(matching, submission, prepared, guesses=guesses))
    camera_score = score_camera(
        submission, prepared, matching, assessable=options.assess_camera
    )
    if camera_score is not None:
        subscores.append(camera_score)

    total = sum(s.deduction for s in subscores)
    w = prepared.weights
    score = min(max(w.max_score - total, 0.0), w.max_score)
    return GradeReport(
        score=score,
        subscores=tuple(subscores),
        matching=matching,
        primitive_guesses=guesses,
        rubric_id=rubric_id,
        submission_id=submission_id,
    )
