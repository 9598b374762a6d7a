"""
Grasp Generation: параллельные и вертикальные захваты по записям навешиваемости.

Для каждой пары (контакт h, знаки) строится поза захвата:
- parallel: стержень p3→p1 параллелен v, середина p_M совпадает с c
- vertical: прямой палец вдоль v (или нормали пола), кончик p2 в точке q_m

Затем кандидаты отсеиваются по числу точек облака внутри захвата (N_c < p_c).
"""
import logging
from dataclasses import dataclass, replace
from itertools import product
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np

from ..core.config import GenConfig
from ..core.constants import GRIPPER_SLAB_HALF_THICKNESS, HANG_SAMPLE_COUNT, KIND_ORDER, KIND_PARALLEL, KIND_VERTICAL
from ..core.errors import DegenerateSegmentError, EmptyCagedSetError, EmptyContactsError
from .geometry import RigidTransform, SurfaceCloud, TriangleMesh, poisson_disk_sample
from .gripper import GripperFrame, GripperModel, collision_volume, key_points, points_in_volume, slice_caged_points
from .hangability import HangRecord

if TYPE_CHECKING:
    from .scoring import ScoreBreakdown

logger = logging.getLogger(__name__)

SIGN_CHOICES: Tuple[Tuple[int, int], ...] = tuple(product((1, -1), repeat=2))

_DEGENERATE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    pose: RigidTransform
    kind: str
    hang_index: int
    contact: np.ndarray
    contact_index: int
    sign_choices: Tuple[int, int]
    n_collisions: int = 0
    q_m: Optional[np.ndarray] = None
    score: Optional["ScoreBreakdown"] = None

    def sort_key(self):
        return (self.hang_index, KIND_ORDER[self.kind], self.contact_index, self.sign_choices)


def _orthogonal_unit(vector: np.ndarray, axis: np.ndarray) -> Optional[np.ndarray]:
    projected = vector - (vector @ axis) * axis
    norm = np.linalg.norm(projected)
    if norm < _DEGENERATE_EPS:
        return None
    return projected / norm


def gen_parallel(hang: HangRecord, frame: GripperFrame, hang_index: int = 0) -> List[GraspCandidate]:
    """Параллельные захваты: R·x̂ = ±v, R·ẑ = ±unit(c − h), pose(p_M) = c."""
    if len(hang.contacts) == 0:
        raise EmptyContactsError("hang record has no contacts")

    candidates = []
    for j, h in enumerate(hang.contacts):
        u = _orthogonal_unit(hang.c - h, hang.v)
        if u is None:
            logger.debug(f"Parallel: degenerate rotation for contact {j}")
            continue
        for s_rod, s_app in SIGN_CHOICES:
            x_axis = s_rod * hang.v
            z_axis = s_app * u
            rotation = np.column_stack([x_axis, np.cross(z_axis, x_axis), z_axis])
            pose = RigidTransform(rotation, hang.c - rotation @ frame.p_m)
            candidates.append(GraspCandidate(
                pose=pose,
                kind=KIND_PARALLEL,
                hang_index=hang_index,
                contact=np.array(h),
                contact_index=j,
                sign_choices=(s_rod, s_app),
            ))
    return candidates


def approach_point(h: np.ndarray, c: np.ndarray, d1: float) -> np.ndarray:
    """q1 = h + d1 · unit(c − h)."""
    segment = np.asarray(c, dtype=np.float64) - h
    length = np.linalg.norm(segment)
    if length < _DEGENERATE_EPS:
        raise DegenerateSegmentError("contact coincides with hanging position")
    return h + d1 * segment / length


def farthest_caged_point(caged: np.ndarray, q1: np.ndarray, v: np.ndarray) -> np.ndarray:
    """q_f = argmax over Q of (q − q1)·v."""
    if len(caged) == 0:
        raise EmptyCagedSetError("caged set Q is empty")
    return caged[int(np.argmax((caged - q1) @ v))]


def matching_point(q1: np.ndarray, q_f: np.ndarray, v: np.ndarray, d2: float) -> np.ndarray:
    """q_m = q2 + d2·v, где q2: проекция q_f на прямую через q1 вдоль v."""
    q2 = q1 + ((q_f - q1) @ v) * v
    return q2 + d2 * v


def compute_vertical_placement(
    h: np.ndarray,
    c: np.ndarray,
    v: np.ndarray,
    axis: np.ndarray,
    cloud: SurfaceCloud,
    model: GripperModel,
    pose_rot: np.ndarray,
    cfg: GenConfig,
    slab_half_thickness: float = GRIPPER_SLAB_HALF_THICKNESS,
) -> np.ndarray:
    """
    Точка q_m, в которую ставится кончик прямого пальца.

    Q берётся срезом облака в пробной позе: прямой палец проходит через q1
    вдоль axis, его середина в q1. v разворачивается по axis, чтобы кончик
    уходил за самую дальнюю точку Q по ходу подхода.

    Raises:
        DegenerateSegmentError: h совпадает с c
        EmptyCagedSetError: срез пуст
    """
    h = np.asarray(h, dtype=np.float64)
    q1 = approach_point(h, c, cfg.d1)

    open_model = model.open()
    finger_mid = np.array([-open_model.l_w / 2.0, 0.0, open_model.l_f / 2.0])
    trial = RigidTransform(pose_rot, q1 - pose_rot @ finger_mid)
    caged = slice_caged_points(open_model, trial, cloud, slab_half_thickness)

    v_prime = v if float(v @ axis) >= 0.0 else -v
    q_f = farthest_caged_point(caged, q1, v_prime)
    return matching_point(q1, q_f, v_prime, cfg.d2)


def finger_axis(v: np.ndarray, cfg: GenConfig) -> np.ndarray:
    """Нормаль пола, если |v·n_ground| > p_theta, иначе v."""
    ground = np.asarray(cfg.ground_normal, dtype=np.float64)
    return ground if abs(float(v @ ground)) > cfg.p_theta else np.asarray(v, dtype=np.float64)


def gen_vertical(
    hang: HangRecord,
    frame: GripperFrame,
    cloud: SurfaceCloud,
    cfg: GenConfig,
    model: Optional[GripperModel] = None,
    hang_index: int = 0,
    slab_half_thickness: float = GRIPPER_SLAB_HALF_THICKNESS,
) -> List[GraspCandidate]:
    """Вертикальные захваты: R·ẑ = ±f, R·(−x̂) = ±u′, pose(p2) = q_m."""
    if len(hang.contacts) == 0:
        raise EmptyContactsError("hang record has no contacts")
    model = model or GripperModel()
    f = finger_axis(hang.v, cfg)

    candidates = []
    for j, h in enumerate(hang.contacts):
        u_prime = _orthogonal_unit(hang.c - h, f)
        if u_prime is None:
            logger.debug(f"Vertical: degenerate rotation for contact {j}")
            continue
        for s_fin, s_rod in SIGN_CHOICES:
            z_axis = s_fin * f
            x_axis = -s_rod * u_prime
            rotation = np.column_stack([x_axis, np.cross(z_axis, x_axis), z_axis])
            try:
                q_m = compute_vertical_placement(
                    h, hang.c, hang.v, z_axis, cloud, model, rotation, cfg, slab_half_thickness
                )
            except (EmptyCagedSetError, DegenerateSegmentError):
                logger.debug(f"Vertical: empty caged set for contact {j}, signs {(s_fin, s_rod)}")
                continue
            candidates.append(GraspCandidate(
                pose=RigidTransform(rotation, q_m - rotation @ frame.p2),
                kind=KIND_VERTICAL,
                hang_index=hang_index,
                contact=np.array(h),
                contact_index=j,
                sign_choices=(s_fin, s_rod),
                q_m=q_m,
            ))
    return candidates


def check_collision(cand: GraspCandidate, cloud: SurfaceCloud, model: GripperModel, cfg: GenConfig) -> Tuple[bool, int]:
    """N_c: число точек облака внутри объёма захвата; keep = N_c < p_c."""
    if len(cloud) == 0:
        return True, 0
    capsules = collision_volume(model.for_collision(cfg.collision_opening))
    local = cand.pose.inverse_apply(cloud.points)
    n_collisions = int(points_in_volume(capsules, local).sum())
    return n_collisions < cfg.p_c, n_collisions


def generate_grasps(
    hangs: List[HangRecord],
    cloud: Optional[SurfaceCloud],
    mesh: Optional[TriangleMesh],
    model: GripperModel,
    cfg: GenConfig,
    slab_half_thickness: float = GRIPPER_SLAB_HALF_THICKNESS,
    sample_count: int = HANG_SAMPLE_COUNT,
    seed: int = 0,
) -> List[GraspCandidate]:
    """
    Множество G бесколлизионных кандидатов по всем записям.

    Args:
        hangs: Записи навешиваемости
        cloud: Облако для среза и проверки коллизий (если None, семплируется с mesh)
        mesh: Меш объекта
        model: Геометрия захвата
        cfg: Параметры генерации

    Returns:
        Кандидаты в порядке (hang_index, kind, contact_index, sign_choices)
    """
    if not hangs:
        return []
    if cloud is None:
        if mesh is None:
            raise ValueError("either cloud or mesh is required")
        cloud = poisson_disk_sample(mesh, sample_count, seed)

    frame = key_points(model.open())
    raw: List[GraspCandidate] = []
    for index, hang in enumerate(hangs):
        if len(hang.contacts) == 0:
            logger.debug(f"Hang {index} has no contacts, skipping")
            continue
        raw.extend(gen_parallel(hang, frame, hang_index=index))
        raw.extend(gen_vertical(hang, frame, cloud, cfg, model, hang_index=index, slab_half_thickness=slab_half_thickness))

    kept = []
    for cand in raw:
        keep, n_collisions = check_collision(cand, cloud, model, cfg)
        if keep:
            kept.append(replace(cand, n_collisions=n_collisions))
        else:
            logger.debug(f"Rejected {cand.kind} hang={cand.hang_index} contact={cand.contact_index}: N_c={n_collisions}")

    kept.sort(key=GraspCandidate.sort_key)
    logger.info(f"✋ Grasp generation: {len(raw)} raw candidates, {len(kept)} collision-free")
    return kept
