"""
Hangability Detection: поиск структур, за которые объект можно повесить.

Стадии:
1. find_candidate_contacts: точки облака, чьи нормали смотрят на центр масс,
   кластеризуются single-linkage
2. select_hang_position: точка отрезка контакт→CoM с наибольшим свободным
   пространством вокруг
3. detect_hang_direction: веер лучей в плоскостях с нормалями на полусфере,
   выбирается плоскость с наибольшим числом попаданий
4. through_hole_filter: лучи вдоль ±v не должны ничего задеть
"""
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..core.config import HangConfig
from ..core.constants import HANG_DEDUP_DOT
from ..core.errors import DegenerateSegmentError, NoSurroundingStructureError
from .geometry import (
    MeshStats,
    SurfaceCloud,
    TriangleMesh,
    compute_com,
    poisson_disk_sample,
    ray_first_hit,
    ray_first_hits,
    unit,
)

logger = logging.getLogger(__name__)

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_SEGMENT_EPS = 1e-9
_MISS_MEAN_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class ContactCluster:
    representative: np.ndarray
    members: np.ndarray  # индексы точек облака


@dataclass(frozen=True, eq=False)
class HangRecord:
    c: np.ndarray
    v: np.ndarray
    contacts: np.ndarray
    m: float
    a: Optional[np.ndarray]
    source_contact: np.ndarray
    clearance: float = 0.0
    plane_index: int = -1

    def __post_init__(self):
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-9:
            raise ValueError("hang direction must be unit length")
        if not 0.0 <= self.m <= 1.0:
            raise ValueError(f"completeness m must be in [0, 1], got {self.m}")
        if (self.a is None) != (self.m >= 1.0):
            raise ValueError("open direction must be present iff m < 1")


class HangDirection(NamedTuple):
    v: np.ndarray
    m: float
    a: Optional[np.ndarray]
    contacts: np.ndarray
    plane_index: int


def canonicalize_direction(v: np.ndarray) -> np.ndarray:
    """Знак v: v·ẑ ≥ 0, при v·ẑ = 0 сначала v·x̂ ≥ 0, затем v·ŷ ≥ 0."""
    v = np.asarray(v, dtype=np.float64)
    for component in (2, 0, 1):
        if v[component] > 0.0:
            return v.copy()
        if v[component] < 0.0:
            return -v
    return v.copy()


def fibonacci_hemisphere(count: int) -> np.ndarray:
    """count единичных нормалей на верхней полусфере (спираль Фибоначчи)."""
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - (i + 0.5) / count
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * _GOLDEN_ANGLE
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def plane_basis(normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ортонормированный базис (e1, e2) плоскости с нормалью normal."""
    ref = np.array([0.0, 1.0, 0.0]) if abs(normal[0]) > 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = unit(np.cross(normal, ref))
    e2 = np.cross(normal, e1)
    return e1, e2


def fan_directions(normal: np.ndarray, rays_per_plane: int) -> np.ndarray:
    e1, e2 = plane_basis(normal)
    angles = 2.0 * math.pi * np.arange(rays_per_plane) / rays_per_plane
    return np.cos(angles)[:, None] * e1 + np.sin(angles)[:, None] * e2


def find_candidate_contacts(cloud: SurfaceCloud, stats: MeshStats, cfg: HangConfig) -> List[ContactCluster]:
    """
    Кандидаты в контактные точки.

    Точка входит, если угол между её нормалью и направлением на CoM не больше
    normal_cone_deg; члены группируются single-linkage с радиусом cluster_radius.
    Представитель кластера: член, ближайший к центроиду кластера.
    """
    if len(cloud) == 0:
        return []

    to_com = stats.com - cloud.points
    dist = np.linalg.norm(to_com, axis=1)
    valid = dist > _SEGMENT_EPS
    cosines = np.full(len(cloud), -1.0)
    cosines[valid] = np.einsum("ij,ij->i", cloud.normals[valid], to_com[valid]) / dist[valid]
    members = np.nonzero(valid & (cosines >= math.cos(math.radians(cfg.normal_cone_deg))))[0]
    if len(members) == 0:
        logger.debug("No cloud normals point toward the center of mass")
        return []

    sub = cloud.points[members]
    pairs = cKDTree(sub).query_pairs(cfg.cluster_radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(sub), len(sub)))
    n_clusters, labels = connected_components(graph, directed=False)

    clusters = []
    for label in range(n_clusters):
        idx = np.nonzero(labels == label)[0]
        centroid = sub[idx].mean(axis=0)
        closest = idx[int(np.argmin(np.linalg.norm(sub[idx] - centroid, axis=1)))]
        clusters.append(ContactCluster(representative=sub[closest].copy(), members=members[idx]))

    clusters.sort(key=lambda cluster: tuple(cluster.representative))
    logger.debug(f"Contact candidates: {len(members)} points in {len(clusters)} clusters")
    return clusters


def select_hang_position(
    contact: np.ndarray,
    stats: MeshStats,
    mesh: TriangleMesh,
    cfg: HangConfig,
    cloud: Optional[SurfaceCloud] = None,
) -> Tuple[np.ndarray, float]:
    """
    Точка на отрезке контакт→CoM с наибольшим расстоянием до облака.

    Args:
        contact: Представитель кластера (на поверхности)
        stats: Масс-свойства меша
        mesh: Меш (для отсечения отрезка первой встреченной стенкой)
        cfg: Параметры детекции
        cloud: Облако, по которому меряется свободное пространство

    Returns:
        (c, clearance)

    Raises:
        DegenerateSegmentError: контакт совпадает с CoM
    """
    contact = np.asarray(contact, dtype=np.float64)
    segment = stats.com - contact
    length = float(np.linalg.norm(segment))
    if length < _SEGMENT_EPS:
        raise DegenerateSegmentError("contact coincides with the center of mass")
    if cloud is None:
        cloud = poisson_disk_sample(mesh, cfg.sample_count, 0)

    direction = segment / length
    if cfg.clip_to_free_space:
        hit = ray_first_hit(mesh, contact, direction)
        if hit is not None and hit.distance < length:
            length = hit.distance

    t = np.arange(1, cfg.segment_samples + 1) / (cfg.segment_samples + 1)
    samples = contact + (t * length)[:, None] * direction
    clearance = cloud.nearest_distance(samples)
    best = int(np.argmax(clearance))  # первый максимум: ближе к контакту
    return samples[best], float(clearance[best])


def cap_normals(axis: np.ndarray, count: int, half_angle_deg: float) -> np.ndarray:
    """count единичных нормалей в сферической шапке вокруг axis (спираль Фибоначчи)."""
    axis = unit(np.asarray(axis, dtype=np.float64))
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - (i + 0.5) / count * (1.0 - math.cos(math.radians(half_angle_deg)))
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * _GOLDEN_ANGLE
    e1, e2 = plane_basis(axis)
    return (radius * np.cos(phi))[:, None] * e1 + (radius * np.sin(phi))[:, None] * e2 + z[:, None] * axis


def _cast_fans(c: np.ndarray, normals: np.ndarray, mesh: TriangleMesh, rays: int):
    directions = np.concatenate([fan_directions(n, rays) for n in normals])
    origins = np.broadcast_to(c, directions.shape)
    distances, faces = ray_first_hits(mesh, origins, directions)
    return directions, distances, (faces >= 0).reshape(len(normals), rays)


def _full_ring_center(c: np.ndarray, winner: np.ndarray, mesh: TriangleMesh, cfg: HangConfig):
    """
    Центр шапки плоскостей, в которых все лучи попадают.

    Полное кольцо дают все плоскости в некотором конусе вокруг оси отверстия;
    нормаль берётся как среднее таких плоскостей в шапке вокруг победителя.
    None, если в средней плоскости кольцо не замкнуто.
    """
    rays = cfg.rays_per_plane
    local = cap_normals(winner, cfg.plane_count, cfg.refine_cap_deg)
    _, _, hits = _cast_fans(c, local, mesh, rays)
    full = local[hits.all(axis=1)]
    if len(full) == 0:
        return None
    center = unit(full.mean(axis=0))
    directions, distances, center_hits = _cast_fans(c, center[None, :], mesh, rays)
    if not center_hits.all():
        logger.debug(f"Full-ring center {center} leaves gaps, keeping winning plane")
        return None
    return center, directions, distances


def detect_hang_direction(c: np.ndarray, mesh: TriangleMesh, cfg: HangConfig) -> HangDirection:
    """
    Направление навешивания v, полнота m, направление разрыва a и контакты.

    Выбирается плоскость с наибольшим числом попаданий (при равенстве с
    меньшим индексом). Если она замыкает полное кольцо, v уточняется до центра
    шапки равных ей плоскостей (refine_cap_deg > 0).

    Raises:
        NoSurroundingStructureError: ни одна плоскость не дала попаданий
    """
    c = np.asarray(c, dtype=np.float64)
    normals = fibonacci_hemisphere(cfg.plane_count)
    rays = cfg.rays_per_plane
    directions, distances, hits = _cast_fans(c, normals, mesh, rays)

    counts = hits.sum(axis=1)
    if counts.max() == 0:
        raise NoSurroundingStructureError()
    best = int(np.argmax(counts))

    normal = normals[best]
    plane_hits = hits[best]
    plane_dirs = directions[best * rays:(best + 1) * rays]
    plane_dist = distances[best * rays:(best + 1) * rays]
    if counts[best] == rays and cfg.refine_cap_deg > 0:
        refined = _full_ring_center(c, normal, mesh, cfg)
        if refined is not None:
            normal, plane_dirs, plane_dist = refined
    contacts = c + plane_dist[plane_hits, None] * plane_dirs[plane_hits]
    m = float(counts[best]) / rays

    a = None
    if counts[best] < rays:
        misses = plane_dirs[~plane_hits]
        mean = misses.mean(axis=0)
        a = unit(mean) if np.linalg.norm(mean) >= _MISS_MEAN_EPS else misses[0].copy()

    return HangDirection(v=canonicalize_direction(normal), m=m, a=a, contacts=contacts, plane_index=best)


def through_hole_filter(c: np.ndarray, v: np.ndarray, mesh: TriangleMesh) -> bool:
    v = np.asarray(v, dtype=np.float64)
    return ray_first_hit(mesh, c, v) is None and ray_first_hit(mesh, c, -v) is None


def _record_key(record: HangRecord):
    return (-record.m, -record.clearance, tuple(record.c))


def _deduplicate(records: List[HangRecord], radius: float) -> List[HangRecord]:
    kept: List[HangRecord] = []
    for record in sorted(records, key=_record_key):
        duplicate = any(
            np.linalg.norm(record.c - other.c) < radius and abs(float(record.v @ other.v)) > HANG_DEDUP_DOT
            for other in kept
        )
        if not duplicate:
            kept.append(record)
    return kept


def detect_hangability(
    mesh: TriangleMesh,
    cfg: HangConfig,
    seed: int,
    cloud: Optional[SurfaceCloud] = None,
    stats: Optional[MeshStats] = None,
) -> List[HangRecord]:
    """
    Полный проход детекции навешиваемых структур.

    Returns:
        Записи, отсортированные по (−m, −clearance, c); пустой список допустим
    """
    stats = stats or compute_com(mesh)
    if cloud is None:
        cloud = poisson_disk_sample(mesh, cfg.sample_count, seed)

    clusters = find_candidate_contacts(cloud, stats, cfg)
    records = []
    for cluster in clusters:
        contact = cluster.representative
        try:
            c, clearance = select_hang_position(contact, stats, mesh, cfg, cloud)
        except DegenerateSegmentError:
            logger.debug(f"Skipping contact {contact}: degenerate segment")
            continue
        if clearance < cfg.min_clearance:
            logger.debug(f"Skipping contact {contact}: clearance {clearance:.4f} < {cfg.min_clearance}")
            continue
        try:
            direction = detect_hang_direction(c, mesh, cfg)
        except NoSurroundingStructureError:
            logger.debug(f"Skipping position {c}: no surrounding structure")
            continue
        if direction.m < cfg.min_m:
            logger.debug(f"Skipping position {c}: m={direction.m:.3f} < {cfg.min_m}")
            continue
        if not through_hole_filter(c, direction.v, mesh):
            logger.debug(f"Skipping position {c}: not a through hole")
            continue
        records.append(HangRecord(
            c=c,
            v=direction.v,
            contacts=direction.contacts,
            m=direction.m,
            a=direction.a,
            source_contact=contact,
            clearance=clearance,
            plane_index=direction.plane_index,
        ))

    result = _deduplicate(records, cfg.cluster_radius)
    logger.info(f"🔍 Hangability: {len(clusters)} contact clusters, {len(records)} records, {len(result)} after dedup")
    return result
