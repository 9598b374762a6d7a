"""
Параметрическая модель захвата с крюком.

Локальная система: O в центре ладони, ẑ от запястья к кончикам пальцев,
x̂ от прямого пальца к L-пальцу, ŷ = ẑ × x̂.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np
import trimesh

from ..core.constants import (
    COLLISION_OPENING_CLOSED,
    GRIPPER_L_B,
    GRIPPER_L_F,
    GRIPPER_L_H,
    GRIPPER_L_W,
    GRIPPER_ROD_RADIUS,
    GRIPPER_SLAB_HALF_THICKNESS,
)
from .geometry import RigidTransform, SurfaceCloud

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GripperModel:
    l_f: float = GRIPPER_L_F
    l_w: float = GRIPPER_L_W
    l_h: float = GRIPPER_L_H
    l_b: float = GRIPPER_L_B
    rod_radius: float = GRIPPER_ROD_RADIUS
    opening: Optional[float] = None

    def __post_init__(self):
        if self.opening is None:
            object.__setattr__(self, "opening", float(self.l_w))
        if not (0 < self.l_h < self.l_w):
            raise ValueError("gripper requires 0 < l_h < l_w")
        if self.l_f <= 0 or self.l_b <= 0 or self.rod_radius <= 0:
            raise ValueError("l_f, l_b and rod_radius must be positive")
        if not (0 <= self.opening <= self.l_w):
            raise ValueError(f"opening must be in [0, {self.l_w}], got {self.opening}")

    def with_opening(self, opening: float) -> "GripperModel":
        return replace(self, opening=opening)

    def open(self) -> "GripperModel":
        return self.with_opening(self.l_w)

    def closed(self) -> "GripperModel":
        """Замкнутая петля: конец стержня p1 касается линии прямого пальца."""
        return self.with_opening(self.l_h)

    def for_collision(self, opening_mode: str) -> "GripperModel":
        return self.closed() if opening_mode == COLLISION_OPENING_CLOSED else self.open()


@dataclass(frozen=True, eq=False)
class GripperFrame:
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    p4: np.ndarray
    p5: np.ndarray
    p6: np.ndarray
    p7: np.ndarray
    p_m: np.ndarray
    n1: np.ndarray
    n2: np.ndarray

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in ("p1", "p2", "p3", "p4", "p5", "p6", "p7", "p_m", "n1", "n2")}


def key_points(model: GripperModel) -> GripperFrame:
    half = model.opening / 2.0
    p1 = np.array([half - model.l_h, 0.0, model.l_f])
    p2 = np.array([-half, 0.0, model.l_f])
    p3 = np.array([half, 0.0, model.l_f])
    p6 = np.array([0.0, 0.0, -model.l_b])
    p7 = np.zeros(3)
    return GripperFrame(
        p1=p1,
        p2=p2,
        p3=p3,
        p4=np.array([-half, 0.0, 0.0]),
        p5=np.array([half, 0.0, 0.0]),
        p6=p6,
        p7=p7,
        p_m=0.5 * (p1 + p2),
        n1=np.array([0.0, 0.0, -1.0]),
        n2=np.array([-1.0, 0.0, 0.0]),
    )


@dataclass(frozen=True, eq=False)
class Capsule:
    name: str
    start: np.ndarray
    end: np.ndarray
    radius: float

    def distance(self, points: np.ndarray) -> np.ndarray:
        return segment_distance(points, self.start, self.end)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.distance(points) <= self.radius

    def transformed(self, pose: RigidTransform) -> "Capsule":
        return Capsule(self.name, pose.apply(self.start), pose.apply(self.end), self.radius)


def segment_distance(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Расстояние от точек до отрезка [start, end]."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    axis = end - start
    length_sq = float(axis @ axis)
    rel = points - start
    if length_sq == 0.0:
        return np.linalg.norm(rel, axis=1)
    t = np.clip(rel @ axis / length_sq, 0.0, 1.0)
    return np.linalg.norm(rel - t[:, None] * axis, axis=1)


def collision_volume(model: GripperModel) -> List[Capsule]:
    """
    Капсулы захвата в локальной системе при текущем раскрытии model.opening.

    Пальцы, стержень и ладонь радиусом rod_radius; кисть радиусом l_w/2,
    ось от (0, 0, −l_w/2) до запястья p6, чтобы скруглённый торец касался
    линии ладони, а не заходил внутрь петли.
    """
    frame = key_points(model)
    return [
        Capsule("straight_finger", frame.p4, frame.p2, model.rod_radius),
        Capsule("l_finger", frame.p5, frame.p3, model.rod_radius),
        Capsule("rod", frame.p3, frame.p1, model.rod_radius),
        Capsule("palm", frame.p4, frame.p5, model.rod_radius),
        Capsule("hand", np.array([0.0, 0.0, -model.l_w / 2.0]), frame.p6, model.l_w / 2.0),
    ]


def points_in_volume(capsules: List[Capsule], points: np.ndarray) -> np.ndarray:
    """Маска точек (в той же системе, что и капсулы), попавших хотя бы в одну капсулу."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64)).reshape(-1, 3)
    inside = np.zeros(len(points), dtype=bool)
    for capsule in capsules:
        inside |= capsule.contains(points)
    return inside


def caged_mask(model: GripperModel, pose: RigidTransform, points: np.ndarray,
               slab_half_thickness: float = GRIPPER_SLAB_HALF_THICKNESS) -> np.ndarray:
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    local = pose.inverse_apply(points)
    half = model.l_w / 2.0
    return (
        (np.abs(local[:, 1]) <= slab_half_thickness)
        & (local[:, 0] >= -half) & (local[:, 0] <= half)
        & (local[:, 2] >= 0.0) & (local[:, 2] <= model.l_f)
    )


def slice_caged_points(model: GripperModel, pose: RigidTransform, cloud: SurfaceCloud,
                       slab_half_thickness: float = GRIPPER_SLAB_HALF_THICKNESS) -> np.ndarray:
    """
    Точки облака внутри прямоугольника между пальцами, ладонью и линией кончиков
    (раскрытие l_w), в слое толщиной 2·slab_half_thickness вокруг плоскости захвата.
    """
    return cloud.points[caged_mask(model, pose, cloud.points, slab_half_thickness)]


def capsule_mesh(capsule: Capsule, sections: int = 16) -> trimesh.Trimesh:
    axis = capsule.end - capsule.start
    length = float(np.linalg.norm(axis))
    if length < 1e-12:
        mesh = trimesh.creation.icosphere(subdivisions=2, radius=capsule.radius)
    else:
        mesh = trimesh.creation.capsule(height=length, radius=capsule.radius, count=[sections, sections])
        mesh.apply_translation(-mesh.bounds.mean(axis=0))
        mesh.apply_transform(trimesh.geometry.align_vectors([0.0, 0.0, 1.0], axis / length))
    mesh.apply_translation(0.5 * (capsule.start + capsule.end))
    return mesh


def gripper_mesh(model: GripperModel, pose: Optional[RigidTransform] = None) -> trimesh.Trimesh:
    """Меш всех капсул захвата, поставленный в мировую систему позой pose."""
    pose = pose or RigidTransform.identity()
    parts = [capsule_mesh(capsule.transformed(pose)) for capsule in collision_volume(model)]
    return trimesh.util.concatenate(parts)
