"""
Сериализация результатов: JSON-документы hang/detect и файлы визуализации.

Числа с плавающей точкой пишутся через repr (кратчайшее точное представление),
поэтому parse → dump возвращает тот же текст.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import trimesh

from ..core.config import PipelineConfig
from .geometry import MeshStats, RigidTransform, TriangleMesh, ray_first_hits
from .grasp_gen import GraspCandidate
from .gripper import gripper_mesh
from .hangability import HangRecord, fan_directions

logger = logging.getLogger(__name__)

HIT_COLOR = (255, 0, 0)
MISS_COLOR = (0, 255, 0)
MARKER_RADIUS = 0.002


def _vec(values: Optional[Iterable[float]]) -> Optional[List[float]]:
    if values is None:
        return None
    return [float(x) for x in np.asarray(values).reshape(-1)]


def hang_to_dict(record: HangRecord) -> Dict[str, Any]:
    return {
        "c": _vec(record.c),
        "v": _vec(record.v),
        "m": float(record.m),
        "a": _vec(record.a),
        "contacts": [_vec(point) for point in record.contacts],
    }


def grasp_to_dict(rank: int, cand: GraspCandidate) -> Dict[str, Any]:
    score = cand.score
    return {
        "rank": rank,
        "kind": cand.kind,
        "hang_index": cand.hang_index,
        "contact": _vec(cand.contact),
        "rotation": _vec(cand.pose.rotation),
        "translation": _vec(cand.pose.translation),
        "q_m": _vec(cand.q_m),
        "n_collisions": int(cand.n_collisions),
        "score": None if score is None else {
            "alpha": float(score.alpha),
            "s_alpha": float(score.s_alpha),
            "beta": None if score.beta is None else float(score.beta),
            "s_beta": float(score.s_beta),
            "m": float(score.m),
            "s_total": float(score.s_total),
        },
    }


def build_hang_document(mesh_name: str, config: PipelineConfig, stats: MeshStats, hangs: List[HangRecord]) -> Dict[str, Any]:
    return {
        "mesh": mesh_name,
        "config_hash": config.config_hash(),
        "com": _vec(stats.com),
        "hangs": [hang_to_dict(record) for record in hangs],
    }


def build_detect_document(
    mesh_name: str,
    config: PipelineConfig,
    stats: MeshStats,
    hangs: List[HangRecord],
    grasps: List[GraspCandidate],
) -> Dict[str, Any]:
    document = build_hang_document(mesh_name, config, stats, hangs)
    document["grasps"] = [grasp_to_dict(rank, cand) for rank, cand in enumerate(grasps, start=1)]
    return document


def dumps_document(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def write_document(document: Dict[str, Any], path: Optional[str]) -> str:
    """Записать документ в файл (или вернуть текст, если path не задан)."""
    text = dumps_document(document)
    if path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        logger.info(f"💾 Wrote {out}")
    return text


def read_document(path: str) -> Dict[str, Any]:
    """
    Прочитать документ detect.

    Raises:
        ValueError: файл не JSON или в нём нет обязательных полей
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"corrupt detect output {path}: {e}") from e
    if not isinstance(document, dict) or not isinstance(document.get("hangs"), list):
        raise ValueError(f"corrupt detect output {path}: missing 'hangs'")
    if not isinstance(document.get("grasps", []), list):
        raise ValueError(f"corrupt detect output {path}: 'grasps' must be a list")
    return document


def _write_ray_ply(path: Path, segments: List[tuple]) -> None:
    # ASCII PLY: вершины с цветом и рёбра-отрезки
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {2 * len(segments)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        f"element edge {len(segments)}",
        "property int vertex1",
        "property int vertex2",
        "end_header",
    ]
    for start, end, color in segments:
        for point in (start, end):
            lines.append(f"{point[0]!r} {point[1]!r} {point[2]!r} {color[0]} {color[1]} {color[2]}")
    for i in range(len(segments)):
        lines.append(f"{2 * i} {2 * i + 1}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def hang_ray_segments(mesh: TriangleMesh, hangs: List[Dict[str, Any]], rays_per_plane: int) -> List[tuple]:
    """Отрезки веера лучей для каждой записи: до попадания (hit) или на длину диагонали (miss)."""
    lo, hi = mesh.bounds
    miss_length = float(np.linalg.norm(hi - lo))
    segments = []
    for hang in hangs:
        c = np.asarray(hang["c"], dtype=np.float64)
        directions = fan_directions(np.asarray(hang["v"], dtype=np.float64), rays_per_plane)
        distances, faces = ray_first_hits(mesh, np.broadcast_to(c, directions.shape), directions)
        for direction, distance, face in zip(directions, distances, faces):
            if face >= 0:
                segments.append((c, c + distance * direction, HIT_COLOR))
            else:
                segments.append((c, c + miss_length * direction, MISS_COLOR))
    return segments


def write_viz(document: Dict[str, Any], mesh: TriangleMesh, out_dir: str, config: PipelineConfig) -> List[Path]:
    """
    Файлы визуализации: grasp_XX.ply на каждый захват, rays.ply, markers.ply.

    Returns:
        Пути записанных файлов
    """
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    model = config.gripper.to_model()
    written: List[Path] = []

    markers = []
    for grasp in document.get("grasps", []):
        pose = RigidTransform(np.asarray(grasp["rotation"], dtype=np.float64).reshape(3, 3), grasp["translation"])
        path = directory / f"grasp_{int(grasp['rank']):02d}.ply"
        gripper_mesh(model, pose).export(str(path))
        written.append(path)
        if grasp.get("q_m") is not None:
            markers.append(grasp["q_m"])

    hangs = document["hangs"]
    rays_path = directory / "rays.ply"
    _write_ray_ply(rays_path, hang_ray_segments(mesh, hangs, config.hang.rays_per_plane))
    written.append(rays_path)

    for hang in hangs:
        markers.append(hang["c"])
        markers.extend(hang.get("contacts", []))
    if markers:
        spheres = []
        for point in markers:
            sphere = trimesh.creation.icosphere(subdivisions=1, radius=MARKER_RADIUS)
            sphere.apply_translation(np.asarray(point, dtype=np.float64))
            spheres.append(sphere)
        markers_path = directory / "markers.ply"
        trimesh.util.concatenate(spheres).export(str(markers_path))
        written.append(markers_path)

    logger.info(f"🎨 Wrote {len(written)} visualization files to {directory}")
    return written
