"""
Synthetics: параметрические тестовые меши с аналитической разметкой.

Формы собираются из трёх примитивов:
- профиль, вращаемый вокруг оси z (цилиндр, корпус кружки)
- труба, заметаемая по дуге окружности (тор, дуга тора с торцами)
- примитивы trimesh (icosphere, box, цилиндр по отрезку)
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import trimesh
from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import ShapeSpecError
from .geometry import TriangleMesh, compute_com, ray_first_hits

logger = logging.getLogger(__name__)

ShapeKind = Literal["torus", "arc_torus", "mug", "hanger", "plate_with_holes", "sphere", "box", "cylinder"]

MIN_RESOLUTION = 8
_MERGE_KEY = 1e-9
_AXIS_Y = (0.0, 1.0, 0.0)
_AXIS_Z = (0.0, 0.0, 1.0)

# Параметры по умолчанию (метры, градусы)
SHAPE_DEFAULTS: Dict[str, Dict[str, float]] = {
    "torus": {"major_radius": 0.05, "minor_radius": 0.01},
    "arc_torus": {"major_radius": 0.05, "minor_radius": 0.01, "sweep_deg": 270.0},
    "mug": {
        "radius": 0.04,
        "wall": 0.004,
        "height": 0.1,
        "bottom": 0.005,
        "handle_radius": 0.025,
        "handle_tube": 0.004,
        "handle_offset": 0.01,  # от внешней стенки до центра ручки
    },
    "hanger": {"width": 0.3, "height": 0.12, "rod_radius": 0.004, "hook_radius": 0.02, "hook_sweep_deg": 270.0},
    "plate_with_holes": {"tile": 0.06, "hole_radius": 0.015, "thickness": 0.01},
    "sphere": {"radius": 0.05},
    "box": {"x": 0.08, "y": 0.06, "z": 0.04},
    "cylinder": {"radius": 0.03, "height": 0.1},
}


class ShapeSpec(BaseModel):
    """Описание синтетической формы."""
    model_config = ConfigDict(extra="forbid")

    kind: ShapeKind
    params: Dict[str, float] = Field(default_factory=dict)
    resolution: int = 64
    seed: int = 0
    partial_viewpoints: Optional[List[Tuple[float, float, float]]] = None

    def resolved_params(self) -> Dict[str, float]:
        defaults = SHAPE_DEFAULTS[self.kind]
        unknown = sorted(set(self.params) - set(defaults))
        if unknown:
            raise ShapeSpecError(f"unknown parameters for {self.kind}: {', '.join(unknown)}")
        params = {**defaults, **{key: float(value) for key, value in self.params.items()}}
        for key, value in params.items():
            if not math.isfinite(value) or value <= 0:
                raise ShapeSpecError(f"{self.kind}.{key} must be positive, got {value}")
        return params


@dataclass
class GroundTruth:
    name: str
    kind: str
    com: np.ndarray
    hole_centers: List[np.ndarray] = field(default_factory=list)
    hole_axes: List[np.ndarray] = field(default_factory=list)
    expected_m: List[float] = field(default_factory=list)
    gap_direction: Optional[np.ndarray] = None
    watertight: bool = True
    partial: bool = False

    def to_dict(self) -> Dict:
        def vec(value):
            return None if value is None else [float(x) for x in value]

        return {
            "name": self.name,
            "kind": self.kind,
            "com": vec(self.com),
            "hole_centers": [vec(c) for c in self.hole_centers],
            "hole_axes": [vec(a) for a in self.hole_axes],
            "expected_m": [float(m) for m in self.expected_m],
            "gap_direction": vec(self.gap_direction),
            "watertight": self.watertight,
            "partial": self.partial,
        }


# ============= Primitives =============

def _rotation_x(deg: float) -> np.ndarray:
    a = math.radians(deg)
    return np.array([[1.0, 0.0, 0.0], [0.0, math.cos(a), -math.sin(a)], [0.0, math.sin(a), math.cos(a)]])


def _place(vertices: np.ndarray, rotation: Optional[np.ndarray] = None, offset: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    if rotation is not None:
        vertices = vertices @ rotation.T
    return vertices + np.asarray(offset, dtype=np.float64)


def revolve_profile(profile: Sequence[Tuple[float, float]], sections: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Тело вращения профиля (rho, z) вокруг оси z.

    Профиль начинается и заканчивается на оси (rho = 0) и обходит сечение
    материала против часовой стрелки, тогда нормали смотрят наружу.
    """
    angles = 2.0 * math.pi * np.arange(sections) / sections
    vertices = []
    rings = []
    for rho, z in profile:
        if rho == 0.0:
            rings.append([len(vertices)] * sections)
            vertices.append((0.0, 0.0, z))
        else:
            start = len(vertices)
            rings.append(list(range(start, start + sections)))
            vertices.extend((rho * math.cos(a), rho * math.sin(a), z) for a in angles)

    faces = []
    for k in range(len(profile) - 1):
        lower, upper = rings[k], rings[k + 1]
        for i in range(sections):
            j = (i + 1) % sections
            a, b, c, d = lower[i], upper[i], upper[j], lower[j]
            faces.append((a, c, b))
            faces.append((a, d, c))
    faces = np.array([f for f in faces if len(set(f)) == 3], dtype=np.int64)
    return np.array(vertices, dtype=np.float64), faces


def swept_tube(
    major_radius: float,
    minor_radius: float,
    n_major: int,
    n_minor: int,
    theta_range: Optional[Tuple[float, float]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Труба радиуса minor_radius вдоль окружности major_radius в плоскости xy.

    theta_range=None: замкнутый тор; иначе дуга [θ0, θ1] с плоскими торцами.
    """
    closed = theta_range is None
    if closed:
        thetas = 2.0 * math.pi * np.arange(n_major) / n_major
    else:
        thetas = np.linspace(theta_range[0], theta_range[1], n_major + 1)
    phis = 2.0 * math.pi * np.arange(n_minor) / n_minor

    theta, phi = np.meshgrid(thetas, phis, indexing="ij")
    ring = major_radius + minor_radius * np.cos(phi)
    vertices = np.stack([ring * np.cos(theta), ring * np.sin(theta), minor_radius * np.sin(phi)], axis=-1).reshape(-1, 3)

    n_rings = len(thetas)
    index = np.arange(n_rings * n_minor).reshape(n_rings, n_minor)
    i_next = (np.arange(n_rings) + 1) % n_rings
    j_next = (np.arange(n_minor) + 1) % n_minor
    span = n_rings if closed else n_rings - 1
    a = index[:span]
    b = index[i_next[:span]]
    c = b[:, j_next]
    d = a[:, j_next]
    faces = np.concatenate([
        np.stack([a, b, c], axis=-1).reshape(-1, 3),
        np.stack([a, c, d], axis=-1).reshape(-1, 3),
    ])

    if not closed:
        start_center = len(vertices)
        end_center = start_center + 1
        centers = np.array([
            [major_radius * math.cos(thetas[0]), major_radius * math.sin(thetas[0]), 0.0],
            [major_radius * math.cos(thetas[-1]), major_radius * math.sin(thetas[-1]), 0.0],
        ])
        vertices = np.concatenate([vertices, centers])
        first, last = index[0], index[-1]
        start_cap = np.column_stack([np.full(n_minor, start_center), first, first[j_next]])
        end_cap = np.column_stack([np.full(n_minor, end_center), last[j_next], last])
        faces = np.concatenate([faces, start_cap, end_cap])
    return vertices, faces


def _merge(parts: Sequence[Tuple[np.ndarray, np.ndarray]], weld: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    vertices, faces, offset = [], [], 0
    for part_vertices, part_faces in parts:
        vertices.append(part_vertices)
        faces.append(part_faces + offset)
        offset += len(part_vertices)
    vertices = np.concatenate(vertices)
    faces = np.concatenate(faces)
    if weld:
        keys = np.round(vertices / _MERGE_KEY).astype(np.int64)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        vertices = vertices[first]
        faces = inverse.reshape(-1)[faces]
    return vertices, faces


def _from_trimesh(mesh: trimesh.Trimesh) -> Tuple[np.ndarray, np.ndarray]:
    return np.asarray(mesh.vertices, dtype=np.float64), np.asarray(mesh.faces, dtype=np.int64)


def _holed_tile(center_x: float, tile: float, hole_radius: float, thickness: float, n: int, seam_side: int):
    """
    Квадратная пластина с круглым отверстием по центру.

    Окружность и граница квадрата делятся по одним и тем же углам (n кратно 8,
    поэтому углы квадрата попадают в узлы). Стенка со стороны шва seam_side
    (+1 правая, −1 левая) не строится: там пластина сшивается с соседней.
    """
    angles = 2.0 * math.pi * np.arange(n) / n
    cos, sin = np.cos(angles), np.sin(angles)
    scale = (tile / 2.0) / np.maximum(np.abs(cos), np.abs(sin))
    inner = np.column_stack([hole_radius * cos, hole_radius * sin])
    outer = np.column_stack([scale * cos, scale * sin])
    on_edge = np.isclose(np.abs(outer), tile / 2.0, rtol=0.0, atol=1e-12)
    outer = np.where(on_edge, np.sign(outer) * tile / 2.0, outer)

    z_top, z_bottom = thickness / 2.0, -thickness / 2.0
    rings = [(inner, z_top), (outer, z_top), (inner, z_bottom), (outer, z_bottom)]
    vertices = np.concatenate([np.column_stack([xy[:, 0] + center_x, xy[:, 1], np.full(n, z)]) for xy, z in rings])
    it, ot, ib, ob = (np.arange(n) + r * n for r in range(4))
    k = np.arange(n)
    k1 = (k + 1) % n

    faces = [
        np.column_stack([it[k], ot[k], ot[k1]]), np.column_stack([it[k], ot[k1], it[k1]]),  # верх
        np.column_stack([ib[k], ob[k1], ob[k]]), np.column_stack([ib[k], ib[k1], ob[k1]]),  # низ
        np.column_stack([it[k], ib[k1], ib[k]]), np.column_stack([it[k], it[k1], ib[k1]]),  # отверстие
    ]
    seam = np.isclose(outer[k, 0], seam_side * tile / 2.0) & np.isclose(outer[k1, 0], seam_side * tile / 2.0)
    wall = ~seam
    faces.append(np.column_stack([ot[k[wall]], ob[k[wall]], ob[k1[wall]]]))
    faces.append(np.column_stack([ot[k[wall]], ob[k1[wall]], ot[k1[wall]]]))
    return vertices, np.concatenate(faces)


# ============= Shapes =============

def _arc_range(sweep_deg: float) -> Tuple[float, float]:
    """Дуга с разрывом, центрированным на +x."""
    gap = 2.0 * math.pi - math.radians(sweep_deg)
    return gap / 2.0, 2.0 * math.pi - gap / 2.0


def _arc_torus_com_x(major_radius: float, minor_radius: float, sweep_deg: float) -> float:
    theta0, _ = _arc_range(sweep_deg)
    sweep = math.radians(sweep_deg)
    return -2.0 * math.sin(theta0) * (major_radius ** 2 + minor_radius ** 2 / 4.0) / (major_radius * sweep)


def _tube_sections(resolution: int) -> int:
    return max(8, resolution // 4)


def _build_torus(p, resolution):
    if p["minor_radius"] >= p["major_radius"]:
        raise ShapeSpecError("torus.minor_radius must be smaller than major_radius")
    mesh = swept_tube(p["major_radius"], p["minor_radius"], resolution, _tube_sections(resolution))
    truth = GroundTruth(
        name="torus", kind="torus", com=np.zeros(3),
        hole_centers=[np.zeros(3)], hole_axes=[np.array(_AXIS_Z)], expected_m=[1.0],
    )
    return mesh, truth


def _build_arc_torus(p, resolution):
    if p["minor_radius"] >= p["major_radius"]:
        raise ShapeSpecError("arc_torus.minor_radius must be smaller than major_radius")
    if not 0.0 < p["sweep_deg"] < 360.0:
        raise ShapeSpecError("arc_torus.sweep_deg must be in (0, 360)")
    mesh = swept_tube(
        p["major_radius"], p["minor_radius"], resolution, _tube_sections(resolution), _arc_range(p["sweep_deg"])
    )
    truth = GroundTruth(
        name="arc_torus", kind="arc_torus",
        com=np.array([_arc_torus_com_x(p["major_radius"], p["minor_radius"], p["sweep_deg"]), 0.0, 0.0]),
        hole_centers=[np.zeros(3)], hole_axes=[np.array(_AXIS_Z)], expected_m=[p["sweep_deg"] / 360.0],
        gap_direction=np.array([1.0, 0.0, 0.0]),
    )
    return mesh, truth


def _build_mug(p, resolution):
    outer, inner = p["radius"], p["radius"] - p["wall"]
    if inner <= 0 or p["bottom"] >= p["height"]:
        raise ShapeSpecError("mug wall/bottom must be thinner than the cup")
    if p["handle_tube"] >= p["handle_radius"]:
        raise ShapeSpecError("mug.handle_tube must be smaller than handle_radius")
    mid_wall = (outer + inner) / 2.0
    handle_center = np.array([outer + p["handle_offset"], 0.0, p["height"] / 2.0])
    # Торцы ручки лежат на средней окружности стенки
    ratio = (mid_wall - handle_center[0]) / p["handle_radius"]
    if not -1.0 < ratio < 1.0:
        raise ShapeSpecError("mug handle does not meet the cup wall")
    half_sweep = math.acos(ratio)

    cup = revolve_profile(
        [(0.0, 0.0), (outer, 0.0), (outer, p["height"]), (inner, p["height"]), (inner, p["bottom"]), (0.0, p["bottom"])],
        resolution,
    )
    handle_vertices, handle_faces = swept_tube(
        p["handle_radius"], p["handle_tube"], max(8, resolution // 2), _tube_sections(resolution), (-half_sweep, half_sweep)
    )
    handle = (_place(handle_vertices, _rotation_x(90.0), handle_center), handle_faces)
    mesh = _merge([cup, handle])

    free_x = 0.5 * (outer + handle_center[0] + p["handle_radius"] - p["handle_tube"])
    truth = GroundTruth(
        name="mug", kind="mug", com=np.zeros(3),
        hole_centers=[np.array([free_x, 0.0, handle_center[2]])], hole_axes=[np.array(_AXIS_Y)], expected_m=[1.0],
    )
    return mesh, truth


def _build_hanger(p, resolution):
    half, height, rod = p["width"] / 2.0, p["height"], p["rod_radius"]
    left, right, apex = np.array([-half, 0.0, 0.0]), np.array([half, 0.0, 0.0]), np.array([0.0, 0.0, height])
    sections = max(8, resolution // 2)
    parts = [
        _from_trimesh(trimesh.creation.cylinder(radius=rod, segment=[a, b], sections=sections))
        for a, b in ((left, right), (left, apex), (right, apex))
    ]
    if not 0.0 < p["hook_sweep_deg"] < 360.0:
        raise ShapeSpecError("hanger.hook_sweep_deg must be in (0, 360)")
    hook_center = apex + np.array([0.0, 0.0, p["hook_radius"]])
    hook_vertices, hook_faces = swept_tube(
        p["hook_radius"], rod, max(8, resolution // 2), _tube_sections(resolution), _arc_range(p["hook_sweep_deg"])
    )
    parts.append((_place(hook_vertices, _rotation_x(90.0), hook_center), hook_faces))
    mesh = _merge(parts)

    # Центр вписанной окружности треугольника
    a, b, c = np.linalg.norm(right - apex), np.linalg.norm(left - apex), np.linalg.norm(left - right)
    incenter = (a * left + b * right + c * apex) / (a + b + c)
    truth = GroundTruth(
        name="hanger", kind="hanger", com=np.zeros(3),
        hole_centers=[incenter, hook_center], hole_axes=[np.array(_AXIS_Y), np.array(_AXIS_Y)],
        expected_m=[1.0, p["hook_sweep_deg"] / 360.0],
        gap_direction=np.array([1.0, 0.0, 0.0]),
    )
    return mesh, truth


def _build_plate(p, resolution):
    if p["hole_radius"] * 2.0 >= p["tile"]:
        raise ShapeSpecError("plate_with_holes.hole_radius too large for the tile")
    n = max(8, int(math.ceil(resolution / 8.0)) * 8)
    half = p["tile"] / 2.0
    mesh = _merge([
        _holed_tile(-half, p["tile"], p["hole_radius"], p["thickness"], n, seam_side=+1),
        _holed_tile(+half, p["tile"], p["hole_radius"], p["thickness"], n, seam_side=-1),
    ], weld=True)
    truth = GroundTruth(
        name="plate_with_holes", kind="plate_with_holes", com=np.zeros(3),
        hole_centers=[np.array([-half, 0.0, 0.0]), np.array([half, 0.0, 0.0])],
        hole_axes=[np.array(_AXIS_Z), np.array(_AXIS_Z)], expected_m=[1.0, 1.0],
    )
    return mesh, truth


def _build_sphere(p, resolution):
    subdivisions = min(5, max(2, resolution.bit_length() - 3))
    mesh = _from_trimesh(trimesh.creation.icosphere(subdivisions=subdivisions, radius=p["radius"]))
    return mesh, GroundTruth(name="sphere", kind="sphere", com=np.zeros(3))


def _build_box(p, resolution):
    mesh = _from_trimesh(trimesh.creation.box(extents=[p["x"], p["y"], p["z"]]))
    return mesh, GroundTruth(name="box", kind="box", com=np.zeros(3))


def _build_cylinder(p, resolution):
    h = p["height"] / 2.0
    mesh = revolve_profile([(0.0, -h), (p["radius"], -h), (p["radius"], h), (0.0, h)], resolution)
    return mesh, GroundTruth(name="cylinder", kind="cylinder", com=np.zeros(3))


_BUILDERS = {
    "torus": _build_torus,
    "arc_torus": _build_arc_torus,
    "mug": _build_mug,
    "hanger": _build_hanger,
    "plate_with_holes": _build_plate,
    "sphere": _build_sphere,
    "box": _build_box,
    "cylinder": _build_cylinder,
}


def partial_scan(mesh: TriangleMesh, viewpoints: Sequence[Sequence[float]]) -> TriangleMesh:
    """
    Оставить грани, видимые хотя бы из одной точки обзора: грань смотрит на
    камеру и луч от её центра до камеры ничего не пересекает.
    """
    centroids = mesh.triangles.mean(axis=1)
    visible = np.zeros(len(mesh.faces), dtype=bool)
    for viewpoint in viewpoints:
        to_view = np.asarray(viewpoint, dtype=np.float64) - centroids
        distance = np.linalg.norm(to_view, axis=1)
        facing = np.einsum("ij,ij->i", to_view, mesh.face_normals) > 0.0
        idx = np.nonzero(facing & ~visible)[0]
        if len(idx) == 0:
            continue
        directions = to_view[idx] / distance[idx, None]
        hit_distance, _ = ray_first_hits(mesh, centroids[idx], directions)
        visible[idx[hit_distance >= distance[idx]]] = True
    if not visible.any():
        raise ShapeSpecError("no face is visible from the given viewpoints")

    faces = mesh.faces[visible]
    used, remap = np.unique(faces, return_inverse=True)
    logger.info(f"📷 Partial scan kept {int(visible.sum())}/{len(mesh.faces)} faces")
    return TriangleMesh.from_arrays(mesh.vertices[used], remap.reshape(-1, 3))


def build_shape(spec: ShapeSpec) -> Tuple[TriangleMesh, GroundTruth]:
    """
    Построить меш формы и её разметку.

    Raises:
        ShapeSpecError: неверные параметры или слишком низкое разрешение
    """
    if spec.resolution < MIN_RESOLUTION:
        raise ShapeSpecError(f"resolution {spec.resolution} too low to be watertight (min {MIN_RESOLUTION})")
    params = spec.resolved_params()
    (vertices, faces), truth = _BUILDERS[spec.kind](params, spec.resolution)
    mesh = TriangleMesh.from_arrays(vertices, faces)
    if not mesh.is_watertight:
        raise ShapeSpecError(f"{spec.kind} at resolution {spec.resolution} is not watertight")

    if spec.kind in ("mug", "hanger"):
        truth.com = compute_com(mesh).com

    if spec.partial_viewpoints:
        mesh = partial_scan(mesh, spec.partial_viewpoints)
        truth.name = f"{truth.name}_partial"
        truth.watertight = mesh.is_watertight
        truth.partial = True

    logger.info(f"🧩 Built {truth.name}: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
    return mesh, truth


def write_shape(mesh: TriangleMesh, truth: GroundTruth, out_dir: str, fmt: str = "obj") -> Tuple[Path, Path]:
    """Записать <name>.<obj|ply> и <name>.groundtruth.json в out_dir."""
    if fmt not in ("obj", "ply"):
        raise ShapeSpecError(f"unsupported output format '{fmt}'")
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    mesh_path = directory / f"{truth.name}.{fmt}"
    truth_path = directory / f"{truth.name}.groundtruth.json"
    mesh.to_trimesh().export(str(mesh_path))
    with truth_path.open("w", encoding="utf-8") as f:
        json.dump(truth.to_dict(), f, indent=2)
    logger.info(f"💾 Wrote {mesh_path} and {truth_path}")
    return mesh_path, truth_path
