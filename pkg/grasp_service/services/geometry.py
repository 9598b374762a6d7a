"""
Geometry core: загрузка мешей, семплинг поверхности, масс-свойства, лучи.

Все типы здесь неизменяемы после построения: меш, облако и ускоряющая
структура для лучей можно безопасно делить между потоками.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np
import trimesh
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from ..core.constants import (
    DEGENERATE_AREA_EPS,
    POISSON_CANDIDATE_FACTOR,
    POISSON_MIN_TARGET,
    POISSON_SEARCH_STEPS,
    SUPPORTED_MESH_FORMATS,
)
from ..core.errors import EmptyMeshError, MeshLoadError, SamplingError, UnsupportedFormatError
from .raycast import RayCaster

logger = logging.getLogger(__name__)

_ROTATION_TOL = 1e-9


def unit(vector: np.ndarray) -> np.ndarray:
    """Нормализовать вектор; нулевой вектор остаётся нулевым."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        return vector.copy()
    return vector / norm


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Поза (R, t): x_world = R · x_local + t."""
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise ValueError("rigid transform must be finite")
        if np.abs(rotation.T @ rotation - np.eye(3)).max() > _ROTATION_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > _ROTATION_TOL:
            raise ValueError("rotation determinant must be +1")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_axes(cls, x_axis: np.ndarray, y_axis: np.ndarray, z_axis: np.ndarray, translation=None) -> "RigidTransform":
        """Поза, чьи локальные оси x̂, ŷ, ẑ переходят в заданные мировые векторы."""
        rotation = np.column_stack([x_axis, y_axis, z_axis])
        return cls(rotation, np.zeros(3) if translation is None else translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def apply_direction(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: сначала other, затем self."""
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Треугольный меш в метрах. Нормали граней выводятся из порядка обхода."""
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(vertices)):
            raise ValueError("mesh vertices must be finite")
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise ValueError("face index out of range")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @classmethod
    def from_arrays(cls, vertices: np.ndarray, faces: np.ndarray) -> "TriangleMesh":
        """
        Построить меш с очисткой: вырожденные грани удаляются, замкнутый меш
        с отрицательным объёмом перевыворачивается целиком.

        Raises:
            EmptyMeshError: после очистки не осталось граней
        """
        mesh = cls(vertices, faces)
        areas = mesh.face_areas
        keep = areas > DEGENERATE_AREA_EPS
        dropped = int((~keep).sum())
        if dropped:
            logger.debug(f"Dropping {dropped} degenerate faces")
            mesh = cls(mesh.vertices, mesh.faces[keep])
        if len(mesh.faces) == 0:
            raise EmptyMeshError("empty mesh after cleaning")
        if mesh.is_watertight and mesh.signed_volume < 0:
            logger.debug("Negative signed volume, re-winding all faces")
            mesh = cls(mesh.vertices, mesh.faces[:, ::-1])
        return mesh

    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    @cached_property
    def _cross(self) -> np.ndarray:
        tris = self.triangles
        return np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        norms = np.linalg.norm(self._cross, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            normals = np.where(norms > 0, self._cross / norms, 0.0)
        return normals

    @property
    def area(self) -> float:
        return float(self.face_areas.sum())

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        used = self.vertices[np.unique(self.faces)]
        return used.min(axis=0), used.max(axis=0)

    @cached_property
    def _trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=np.array(self.vertices), faces=np.array(self.faces), process=False)

    def to_trimesh(self) -> trimesh.Trimesh:
        """Вид меша как trimesh.Trimesh (без обработки, индексы граней сохранены)."""
        return self._trimesh

    @cached_property
    def is_watertight(self) -> bool:
        """Каждое ребро ровно в двух гранях, и обход согласован."""
        mesh = self._trimesh
        return bool(len(self.faces) >= 4 and mesh.is_watertight and mesh.is_winding_consistent)

    @cached_property
    def signed_volume(self) -> float:
        return float(self._trimesh.volume)

    @cached_property
    def ray_caster(self) -> RayCaster:
        return RayCaster(self.vertices, self.faces)

    def transformed(self, transform: RigidTransform) -> "TriangleMesh":
        return TriangleMesh(transform.apply(self.vertices), self.faces)


@dataclass(frozen=True, eq=False)
class SurfaceCloud:
    """Облако точек на поверхности с внешними нормалями."""
    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        normals = np.array(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(points) != len(normals):
            raise ValueError("points and normals must have equal length")
        if len(normals) and np.abs(np.linalg.norm(normals, axis=1) - 1.0).max() > 1e-6:
            raise ValueError("cloud normals must be unit length")
        points.setflags(write=False)
        normals.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "normals", normals)

    @classmethod
    def empty(cls) -> "SurfaceCloud":
        return cls(np.zeros((0, 3)), np.zeros((0, 3)))

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def kdtree(self) -> cKDTree:
        return cKDTree(self.points)

    def nearest_distance(self, queries: np.ndarray) -> np.ndarray:
        """Расстояние от каждой точки запроса до ближайшей точки облака."""
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if len(self.points) == 0:
            return np.full(len(queries), np.inf)
        distances, _ = self.kdtree.query(queries)
        return distances

    def transformed(self, transform: RigidTransform) -> "SurfaceCloud":
        return SurfaceCloud(transform.apply(self.points), transform.apply_direction(self.normals))


@dataclass(frozen=True)
class MeshStats:
    com: np.ndarray = field(compare=False)
    bbox_min: np.ndarray = field(compare=False)
    bbox_max: np.ndarray = field(compare=False)
    watertight: bool
    volume: float = 0.0
    area: float = 0.0


class RayHit(NamedTuple):
    point: np.ndarray
    distance: float
    face_index: int


def load_mesh(path: str) -> TriangleMesh:
    """
    Загрузить меш из OBJ/PLY/STL.

    Args:
        path: Путь к файлу меша (единицы: метры)

    Returns:
        Очищенный TriangleMesh

    Raises:
        MeshLoadError: файл не существует или не читается
        UnsupportedFormatError: неподдерживаемое расширение
        EmptyMeshError: после очистки граней не осталось
    """
    file_path = Path(path)
    suffix = file_path.suffix.lower()
    if suffix not in SUPPORTED_MESH_FORMATS:
        raise UnsupportedFormatError(f"unsupported format '{suffix}' (expected one of {', '.join(SUPPORTED_MESH_FORMATS)})")
    if not file_path.is_file():
        raise MeshLoadError(f"unreadable file: {path}")

    try:
        loaded = trimesh.load(str(file_path), force="mesh", process=False)
        loaded.merge_vertices()
    except Exception as e:
        raise MeshLoadError(f"unreadable file: {path} ({e})") from e

    if not isinstance(loaded, trimesh.Trimesh) or len(loaded.faces) == 0:
        raise EmptyMeshError(f"empty mesh after cleaning: {path}")

    mesh = TriangleMesh.from_arrays(np.asarray(loaded.vertices), np.asarray(loaded.faces))
    logger.info(f"📦 Loaded mesh {file_path.name}: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
    return mesh


def compute_com(mesh: TriangleMesh) -> MeshStats:
    """
    Центр масс меша.

    Замкнутый меш: объёмный центроид однородного тела (масс-свойства trimesh).
    Иначе: центроид поверхности, взвешенный по площади.
    """
    bbox_min, bbox_max = mesh.bounds
    area = mesh.area

    if mesh.is_watertight:
        volume = mesh.signed_volume
        if abs(volume) > 1e-18:
            com = np.asarray(mesh.to_trimesh().center_mass, dtype=np.float64)
            return MeshStats(com=com, bbox_min=bbox_min, bbox_max=bbox_max, watertight=True, volume=volume, area=area)
        logger.warning("⚠️ Watertight mesh with zero volume, using surface centroid")

    centroids = mesh.triangles.mean(axis=1)
    com = (mesh.face_areas[:, None] * centroids).sum(axis=0) / area
    return MeshStats(com=com, bbox_min=bbox_min, bbox_max=bbox_max, watertight=False, volume=0.0, area=area)


def _greedy_accept(indptr: np.ndarray, indices: np.ndarray, count: int, limit: Optional[int] = None) -> np.ndarray:
    blocked = np.zeros(count, dtype=bool)
    accepted = []
    for i in range(count):
        if blocked[i]:
            continue
        accepted.append(i)
        if limit is not None and len(accepted) >= limit:
            break
        blocked[indices[indptr[i]:indptr[i + 1]]] = True
    return np.asarray(accepted, dtype=np.int64)


def poisson_disk_sample(mesh: TriangleMesh, target_count: int, seed: int) -> SurfaceCloud:
    """
    Poisson-disk семплинг поверхности методом отбора из случайных кандидатов.

    Кандидаты: target_count · POISSON_CANDIDATE_FACTOR точек, равномерно по площади.
    Радиус ищется бинарным поиском в [0.5·r_est, 1.5·r_est] как наибольший,
    при котором жадный отбор даёт не меньше target_count точек; результат
    обрезается до ровно target_count точек в порядке кандидатов.

    Raises:
        SamplingError: target_count < 4 или площадь слишком мала для такой плотности
    """
    if target_count < POISSON_MIN_TARGET:
        raise SamplingError(f"target_count must be >= {POISSON_MIN_TARGET}, got {target_count}")

    area = mesh.area
    r_est = math.sqrt(2.0 * area / (math.sqrt(3.0) * target_count))
    if not math.isfinite(r_est) or r_est <= 1e-12:
        raise SamplingError(f"target_count {target_count} too large for mesh area {area:.3e}")

    rng = np.random.default_rng(seed)
    n_candidates = target_count * POISSON_CANDIDATE_FACTOR
    face_idx = rng.choice(len(mesh.faces), size=n_candidates, p=mesh.face_areas / area)
    uv = rng.random((n_candidates, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    tris = mesh.triangles[face_idx]
    candidates = tris[:, 0] + uv[:, :1] * (tris[:, 1] - tris[:, 0]) + uv[:, 1:] * (tris[:, 2] - tris[:, 0])
    tree = cKDTree(candidates)

    def accepted_at(radius: float, limit: Optional[int]) -> np.ndarray:
        pairs = tree.query_pairs(radius, output_type="ndarray")
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        adjacency = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n_candidates, n_candidates)).tocsr()
        return _greedy_accept(adjacency.indptr, adjacency.indices, n_candidates, limit)

    lo, hi = 0.5 * r_est, 1.5 * r_est
    if len(accepted_at(lo, target_count)) < target_count:
        raise SamplingError(f"target_count {target_count} too large for mesh area {area:.3e}")
    if len(accepted_at(hi, target_count)) >= target_count:
        lo = hi
    else:
        for _ in range(POISSON_SEARCH_STEPS):
            mid = 0.5 * (lo + hi)
            if len(accepted_at(mid, target_count)) >= target_count:
                lo = mid
            else:
                hi = mid

    chosen = accepted_at(lo, target_count)[:target_count]
    points = candidates[chosen]
    normals = mesh.face_normals[face_idx[chosen]]
    logger.debug(f"Poisson-disk: {len(points)} points, radius {lo:.5f} (r_est {r_est:.5f})")
    return SurfaceCloud(points, normals)


def ray_first_hit(mesh: TriangleMesh, origin: np.ndarray, direction: np.ndarray) -> Optional[RayHit]:
    """Ближайшее пересечение луча с мешем (t > RAY_EPSILON) или None."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    distances, faces = mesh.ray_caster.first_hits(origin[None, :], direction[None, :])
    if faces[0] < 0:
        return None
    distance = float(distances[0])
    return RayHit(point=origin + distance * direction, distance=distance, face_index=int(faces[0]))


def ray_first_hits(mesh: TriangleMesh, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Пакетный вариант ray_first_hit: (distances, face_indices), inf/-1 для промахов."""
    return mesh.ray_caster.first_hits(origins, directions)
