"""Duplicate-submission detection via canonical mesh fingerprints.

A fingerprint is a SHA-256 digest of the mesh geometry after a
canonicalization that removes translation, uniform scale, vertex/face
ordering and (for generic shapes) rotation. Equal canonical geometry
therefore always collides, which makes the scan free of false negatives
for exact-up-to-transform copies. Clusters are advisory: symmetric
primitives can legitimately canonicalize identically across honest
submissions, so flags require human review.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import SceneValidationError
from .scene import Mesh, Scene

__all__ = [
    "Fingerprint",
    "DuplicateReport",
    "mesh_fingerprint",
    "scan_duplicates",
    "cluster_fingerprints",
    "DUPLICATE_METHOD",
    "QUANTIZATION_STEP",
]

DUPLICATE_METHOD = "exact-canonical"
QUANTIZATION_STEP = 1e-4


@dataclass(frozen=True, slots=True)
class Fingerprint:
    """Transform-invariant identity of one object's mesh."""

    digest: str
    object_name: str
    vertex_count: int
    face_count: int

    def to_dict(self) -> dict:
        return {
            "digest": self.digest,
            "object_name": self.object_name,
            "vertex_count": self.vertex_count,
            "face_count": self.face_count,
        }


@dataclass(frozen=True, slots=True)
class DuplicateReport:
    """Groups of (submission_id, object_name) sharing a fingerprint.

    Every cluster has at least two members; clusters partition the set of
    flagged objects (fingerprint equality is an equivalence relation).
    """

    clusters: tuple[tuple[tuple[str, str], ...], ...]
    method: str = DUPLICATE_METHOD

    def to_dict(self) -> dict:
        return {
            "clusters": [
                [{"submission_id": sid, "object_name": name} for sid, name in cluster]
                for cluster in self.clusters
            ],
            "method": self.method,
        }


def _canonical_axes(centered: np.ndarray) -> np.ndarray:
    """Right-handed principal frame with a deterministic sign convention:
    each of the two dominant axes points toward the positive third moment
    of the vertex cloud, the third completes the triad."""
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    axes = vecs[:, ::-1].T  # rows, descending eigenvalue
    for k in range(2):
        coords = centered @ axes[k]
        skew = float(np.sum(coords**3))
        if skew < -1e-9:
            axes[k] = -axes[k]
    axes[2] = np.cross(axes[0], axes[1])
    return axes


def canonical_mesh(mesh: Mesh) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    """Canonical integer-grid form of a mesh: centered, scaled to unit RMS
    radius, principal-axis aligned, quantized, with sorted vertices and
    cyclically normalized, sorted faces."""
    if mesh.vertex_count == 0:
        raise SceneValidationError("empty mesh")
    centered = mesh.vertices - mesh.vertices.mean(axis=0)
    rms = float(np.sqrt((centered**2).sum(axis=1).mean()))
    if rms > 1e-15:
        centered = centered / rms
    aligned = centered @ _canonical_axes(centered).T
    quantized = np.round(aligned / QUANTIZATION_STEP).astype(np.int64)

    order = np.lexsort((quantized[:, 2], quantized[:, 1], quantized[:, 0]))
    remap = np.empty(len(order), dtype=np.int64)
    remap[order] = np.arange(len(order))
    sorted_verts = quantized[order]

    faces = []
    for face in mesh.faces:
        mapped = tuple(int(remap[i]) for i in face)
        pivot = mapped.index(min(mapped))
        faces.append(mapped[pivot:] + mapped[:pivot])
    return sorted_verts, tuple(sorted(faces))


def mesh_fingerprint(mesh: Mesh, object_name: str = "") -> Fingerprint:
    """SHA-256 digest of the canonical byte stream of a mesh."""
    verts, faces = canonical_mesh(mesh)
    h = hashlib.sha256()
    h.update(struct.pack("<qq", len(verts), len(faces)))
    h.update(verts.astype("<i8").tobytes())
    for face in faces:
        h.update(struct.pack("<q", len(face)))
        h.update(np.asarray(face, dtype="<i8").tobytes())
    return Fingerprint(
        digest=h.hexdigest(),
        object_name=object_name,
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
    )


def cluster_fingerprints(
    entries: list[tuple[str, Fingerprint]],
    *,
    exclude_digests: set[str] | None = None,
) -> DuplicateReport:
    """Group (submission_id, fingerprint) entries by digest. Digests in
    exclude_digests (e.g. rubric template geometry) never form clusters."""
    groups: dict[str, list[tuple[str, str]]] = {}
    for sid, fp in entries:
        if exclude_digests and fp.digest in exclude_digests:
            continue
        groups.setdefault(fp.digest, []).append((sid, fp.object_name))
    clusters = [
        tuple(sorted(members)) for members in groups.values() if len(members) >= 2
    ]
    clusters.sort(key=lambda c: c[0])
    return DuplicateReport(clusters=tuple(clusters))


def scan_duplicates(
    submissions: list[tuple[str, Scene]],
    *,
    exclude: Scene | None = None,
) -> DuplicateReport:
    """Fingerprint every object of every submission and report digest
    collisions. Objects identical to `exclude` (rubric-provided template
    geometry) are skipped. Output ordering does not depend on input order.
    """
    entries: list[tuple[str, Fingerprint]] = []
    for sid, scene in submissions:
        for obj in scene.objects:
            if obj.mesh.vertex_count == 0:
                continue
            entries.append((sid, mesh_fingerprint(obj.mesh, obj.name)))
    exclude_digests: set[str] | None = None
    if exclude is not None:
        exclude_digests = {
            mesh_fingerprint(obj.mesh, obj.name).digest
            for obj in exclude.objects
            if obj.mesh.vertex_count
        }
    return cluster_fingerprints(entries, exclude_digests=exclude_digests)
