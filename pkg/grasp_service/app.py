"""
Grasp Service Application - FastAPI поверх пайплайна захватов.

- /health
- /api/hang, /api/detect, /api/synth
- /api/logs, /api/logs/stats, /api/logs/clear
"""
import logging
import os
from typing import Optional

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from .core.constants import LOG_FORMAT, LOG_LEVEL_ENV
from .utils.log_collector import application_log_collector

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None) -> None:
    """
    Настроить root logger один раз: формат сервиса, уровень из аргумента или
    переменной окружения GRASP_LOG_LEVEL (по умолчанию INFO).
    """
    level_name = (level or os.getenv(LOG_LEVEL_ENV, "INFO")).upper()
    numeric = getattr(logging, level_name, None)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    if not logging.root.handlers:
        logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.root.setLevel(numeric)
    for handler in logging.root.handlers:
        if handler is not application_log_collector:
            handler.setLevel(numeric)


def attach_log_collector() -> None:
    root_logger = logging.getLogger()
    if application_log_collector not in root_logger.handlers:
        root_logger.addHandler(application_log_collector)
        logger.debug("Log collector handler added")


def create_app() -> FastAPI:
    """Создать FastAPI приложение сервиса."""
    configure_logging()
    attach_log_collector()

    app = FastAPI(
        title="Grasp Service",
        description="Hangability detection and hook-gripper grasp planning from object meshes",
        version="1.0.0",
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    async def health():
        """Health check endpoint."""
        return {"status": "healthy", "logs_collected": len(application_log_collector.logs)}

    # ============= Mount Routers =============
    from .routes import logs, pipeline

    app.include_router(pipeline.router, prefix="/api", tags=["pipeline"])
    app.include_router(logs.router, prefix="/api", tags=["logs"])
    logger.info("✅ FastAPI application created successfully")
    return app
