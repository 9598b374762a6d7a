"""
Pipeline routes: детекция навешиваемости и захватов по пути к мешу, генерация
синтетических форм.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field, ValidationError

from ..core.config import apply_overrides, build_pipeline_config, unflatten_keys
from ..core.errors import ConfigError, GraspServiceError, MeshLoadError
from ..services.export import build_detect_document, build_hang_document
from ..services.geometry import load_mesh
from ..services.pipeline import run_detect, run_hang
from ..services.synthetics import ShapeSpec, build_shape, write_shape

logger = logging.getLogger(__name__)

router = APIRouter()


class PipelineRequest(BaseModel):
    mesh_path: str
    config: Dict[str, Any] = Field(default_factory=dict)
    top_k: Optional[int] = None
    seed: Optional[int] = None
    profile: Optional[Literal["full", "single"]] = None


class SynthRequest(ShapeSpec):
    out_dir: str
    format: Literal["obj", "ply"] = "obj"


def _prepare(request: PipelineRequest):
    if not Path(request.mesh_path).is_file():
        raise HTTPException(status_code=404, detail=f"unreadable file: {request.mesh_path}")
    try:
        raw = apply_overrides(unflatten_keys(request.config), request.top_k, request.seed, request.profile)
        config = build_pipeline_config(raw)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    try:
        mesh = load_mesh(request.mesh_path)
    except MeshLoadError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return mesh, config


@router.post("/hang")
def hang(request: PipelineRequest):
    """Записи навешиваемости (тот же документ, что пишет `hang` в CLI)."""
    mesh, config = _prepare(request)
    try:
        result = run_hang(mesh, config)
    except GraspServiceError as e:
        logger.error(f"❌ Hang failed for {request.mesh_path}: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    return build_hang_document(Path(request.mesh_path).name, config, result.stats, result.hangs)


@router.post("/detect")
def detect(request: PipelineRequest):
    """Ранжированные захваты (тот же документ, что пишет `detect` в CLI)."""
    mesh, config = _prepare(request)
    try:
        result = run_detect(mesh, config)
    except GraspServiceError as e:
        logger.error(f"❌ Detect failed for {request.mesh_path}: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    return build_detect_document(Path(request.mesh_path).name, config, result.stats, result.hangs, result.grasps)


@router.post("/synth")
def synth(request: SynthRequest):
    """Построить синтетическую форму и записать меш с разметкой в out_dir."""
    try:
        spec = ShapeSpec(**request.model_dump(exclude={"out_dir", "format"}))
        mesh, truth = build_shape(spec)
        mesh_path, truth_path = write_shape(mesh, truth, request.out_dir, request.format)
    except (GraspServiceError, ValidationError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except OSError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return {
        "status": "ok",
        "data": {
            "mesh_path": str(mesh_path),
            "groundtruth_path": str(truth_path),
            "groundtruth": truth.to_dict(),
        },
    }
