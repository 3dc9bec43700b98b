"""Generators for the stock primitive meshes.

These mirror the tessellation style of common modeling tools (quad grids,
n-gon caps, pole fans) and are used to build rubric scenes and test
fixtures programmatically.
"""

from __future__ import annotations

import math

import numpy as np

from .scene import Mesh

__all__ = [
    "cube",
    "grid_cube",
    "uv_sphere",
    "torus",
    "cylinder",
    "cone",
    "plane",
]


def cube(size: float = 2.0) -> Mesh:
    """Axis-aligned cube centered at the origin: 8 vertices, 6 quads."""
    h = size / 2.0
    verts = [
        (-h, -h, -h),
        (h, -h, -h),
        (h, h, -h),
        (-h, h, -h),
        (-h, -h, h),
        (h, -h, h),
        (h, h, h),
        (-h, h, h),
    ]
    faces = [
        (0, 3, 2, 1),  # bottom (-z)
        (4, 5, 6, 7),  # top (+z)
        (0, 1, 5, 4),  # -y
        (1, 2, 6, 5),  # +x
        (2, 3, 7, 6),  # +y
        (3, 0, 4, 7),  # -x
    ]
    return Mesh(verts, faces)


def grid_cube(divisions: int, size: float = 2.0) -> Mesh:
    """Cube whose 6 sides are subdivided into divisions x divisions quads."""
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    h = size / 2.0
    n = divisions + 1
    vert_index: dict[tuple[float, float, float], int] = {}
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, ...]] = []

    def vid(p: tuple[float, float, float]) -> int:
        key = (round(p[0], 12), round(p[1], 12), round(p[2], 12))
        if key not in vert_index:
            vert_index[key] = len(verts)
            verts.append(key)
        return vert_index[key]

    # Each side is parameterized by (u, v) over a fixed axis sign.
    sides = [
        (lambda u, v: (u, v, -h)),
        (lambda u, v: (v, u, h)),
        (lambda u, v: (v, -h, u)),
        (lambda u, v: (u, h, v)),
        (lambda u, v: (-h, u, v)),
        (lambda u, v: (h, v, u)),
    ]
    coords = [-h + size * i / divisions for i in range(n)]
    for side in sides:
        for i in range(divisions):
            for j in range(divisions):
                p00 = vid(side(coords[i], coords[j]))
                p10 = vid(side(coords[i + 1], coords[j]))
                p11 = vid(side(coords[i + 1], coords[j + 1]))
                p01 = vid(side(coords[i], coords[j + 1]))
                faces.append((p00, p10, p11, p01))
    return Mesh(verts, faces)


def uv_sphere(segments: int = 32, rings: int = 16, radius: float = 1.0) -> Mesh:
    """Longitude/latitude sphere: quad belts with triangle fans at both poles."""
    if segments < 3 or rings < 3:
        raise ValueError("need segments >= 3 and rings >= 3")
    verts: list[tuple[float, float, float]] = [(0.0, 0.0, radius)]
    for r in range(1, rings):
        phi = math.pi * r / rings
        z = radius * math.cos(phi)
        rr = radius * math.sin(phi)
        for s in range(segments):
            theta = 2.0 * math.pi * s / segments
            verts.append((rr * math.cos(theta), rr * math.sin(theta), z))
    verts.append((0.0, 0.0, -radius))
    south = len(verts) - 1

    def ring_vertex(r: int, s: int) -> int:
        return 1 + (r - 1) * segments + (s % segments)

    faces: list[tuple[int, ...]] = []
    for s in range(segments):
        faces.append((0, ring_vertex(1, s), ring_vertex(1, s + 1)))
    for r in range(1, rings - 1):
        for s in range(segments):
            faces.append(
                (
                    ring_vertex(r, s),
                    ring_vertex(r + 1, s),
                    ring_vertex(r + 1, s + 1),
                    ring_vertex(r, s + 1),
                )
            )
    for s in range(segments):
        faces.append((south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)))
    return Mesh(verts, faces)


def torus(
    major_segments: int = 48,
    minor_segments: int = 12,
    major_radius: float = 1.0,
    minor_radius: float = 0.25,
) -> Mesh:
    """Quad-grid torus around the Z axis."""
    if major_segments < 3 or minor_segments < 3:
        raise ValueError("need major_segments >= 3 and minor_segments >= 3")
    verts = []
    for i in range(major_segments):
        u = 2.0 * math.pi * i / major_segments
        cu, su = math.cos(u), math.sin(u)
        for j in range(minor_segments):
            v = 2.0 * math.pi * j / minor_segments
            r = major_radius + minor_radius * math.cos(v)
            verts.append((r * cu, r * su, minor_radius * math.sin(v)))

    def vid(i: int, j: int) -> int:
        return (i % major_segments) * minor_segments + (j % minor_segments)

    faces = []
    for i in range(major_segments):
        for j in range(minor_segments):
            faces.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return Mesh(verts, faces)


def cylinder(segments: int = 32, radius: float = 1.0, depth: float = 2.0) -> Mesh:
    """Cylinder along Z with two n-gon caps and quad sides."""
    if segments < 5:
        raise ValueError("need segments >= 5 for n-gon caps")
    h = depth / 2.0
    verts = []
    for s in range(segments):
        t = 2.0 * math.pi * s / segments
        verts.append((radius * math.cos(t), radius * math.sin(t), -h))
    for s in range(segments):
        t = 2.0 * math.pi * s / segments
        verts.append((radius * math.cos(t), radius * math.sin(t), h))
    faces: list[tuple[int, ...]] = []
    for s in range(segments):
        sn = (s + 1) % segments
        faces.append((s, sn, segments + sn, segments + s))
    faces.append(tuple(range(segments - 1, -1, -1)))  # bottom cap, outward -z
    faces.append(tuple(range(segments, 2 * segments)))  # top cap, outward +z
    return Mesh(verts, faces)


def cone(segments: int = 32, radius: float = 1.0, depth: float = 2.0) -> Mesh:
    """Cone along Z: one n-gon base cap plus a triangle fan to the apex."""
    if segments < 5:
        raise ValueError("need segments >= 5 for the n-gon cap")
    h = depth / 2.0
    verts = []
    for s in range(segments):
        t = 2.0 * math.pi * s / segments
        verts.append((radius * math.cos(t), radius * math.sin(t), -h))
    verts.append((0.0, 0.0, h))
    apex = segments
    faces: list[tuple[int, ...]] = []
    for s in range(segments):
        faces.append((s, (s + 1) % segments, apex))
    faces.append(tuple(range(segments - 1, -1, -1)))
    return Mesh(verts, faces)


def plane(divisions: int = 1, size: float = 2.0) -> Mesh:
    """Flat quad grid in the XY plane."""
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    h = size / 2.0
    n = divisions + 1
    verts = []
    for i in range(n):
        for j in range(n):
            verts.append((-h + size * i / divisions, -h + size * j / divisions, 0.0))
    faces = []
    for i in range(divisions):
        for j in range(divisions):
            a = i * n + j
            b = (i + 1) * n + j
            faces.append((a, b, b + 1, a + 1))
    return Mesh(verts, faces)
