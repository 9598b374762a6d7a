"""
Pipeline: семплинг → навешиваемость → генерация захватов → оценка → top-k.

Единая точка входа для CLI и HTTP-роутов.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import List

from ..core.config import PipelineConfig
from .geometry import MeshStats, SurfaceCloud, TriangleMesh, compute_com, poisson_disk_sample
from .grasp_gen import GraspCandidate, generate_grasps
from .hangability import HangRecord, detect_hangability
from .scoring import rank_top_k, score_candidates

logger = logging.getLogger(__name__)


@dataclass
class HangResult:
    stats: MeshStats
    cloud: SurfaceCloud
    hangs: List[HangRecord]


@dataclass
class DetectResult(HangResult):
    candidate_count: int = 0
    grasps: List[GraspCandidate] = field(default_factory=list)


def run_hang(mesh: TriangleMesh, config: PipelineConfig) -> HangResult:
    """Детекция навешиваемых структур на меше."""
    started = time.perf_counter()
    stats = compute_com(mesh)
    cloud = poisson_disk_sample(mesh, config.hang.sample_count, config.run.seed)
    logger.info(
        f"📐 Mesh stats: watertight={stats.watertight}, area={stats.area:.6f}, "
        f"{len(cloud)} surface samples"
    )
    hangs = detect_hangability(mesh, config.hang, config.run.seed, cloud=cloud, stats=stats)
    logger.info(f"✅ Hang stage finished in {time.perf_counter() - started:.2f}s: {len(hangs)} records")
    return HangResult(stats=stats, cloud=cloud, hangs=hangs)


def run_detect(mesh: TriangleMesh, config: PipelineConfig) -> DetectResult:
    """Полный пайплайн: записи навешиваемости и ранжированные захваты."""
    started = time.perf_counter()
    hang_result = run_hang(mesh, config)
    model = config.gripper.to_model()
    candidates = generate_grasps(
        hang_result.hangs,
        hang_result.cloud,
        mesh,
        model,
        config.gen,
        slab_half_thickness=config.gripper.slab_half_thickness,
    )
    scored = score_candidates(candidates, hang_result.hangs, config.score)
    ranked = rank_top_k(scored, config.run.top_k)
    logger.info(f"✅ Detect finished in {time.perf_counter() - started:.2f}s: {len(ranked)}/{len(candidates)} grasps returned")
    return DetectResult(
        stats=hang_result.stats,
        cloud=hang_result.cloud,
        hangs=hang_result.hangs,
        candidate_count=len(candidates),
        grasps=ranked,
    )
