"""
Pipeline log routes: просмотр логов, собранных ApplicationLogHandler.
"""
from typing import Optional

from fastapi import APIRouter
from fastapi.responses import JSONResponse

from ..utils.log_collector import application_log_collector

router = APIRouter()


@router.get("/logs")
async def get_pipeline_logs(
    limit: int = 100,
    level: Optional[str] = None,
    stage: Optional[str] = None,
    search: Optional[str] = None,
    logger_name: Optional[str] = None,
):
    """
    Получить логи пайплайна.

    Args:
        limit: Максимальное количество записей (по умолчанию 100)
        level: Фильтр по уровню (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        stage: Фильтр по стадии (geometry, hangability, grasp_gen, scoring, ...)
        search: Поиск по сообщению
        logger_name: Фильтр по имени логгера
    """
    logs = application_log_collector.get_logs(
        limit=limit,
        level=level,
        stage=stage,
        search=search,
        logger_name=logger_name,
    )
    return JSONResponse({"status": "ok", "data": {"logs": logs, "count": len(logs)}})


@router.get("/logs/stats")
async def get_pipeline_logs_stats():
    """Статистика логов по уровням и стадиям."""
    return JSONResponse({"status": "ok", "data": application_log_collector.get_stats()})


@router.post("/logs/clear")
async def clear_pipeline_logs():
    application_log_collector.clear()
    return JSONResponse({"status": "ok", "message": "Pipeline logs cleared"})
