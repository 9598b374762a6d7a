"""
ASGI entry point for uvicorn with hot reload support:

    uvicorn grasp_service.asgi:app --reload --port 11000
"""
import logging

from .app import create_app

logger = logging.getLogger(__name__)

app = create_app()
logger.info("✅ ASGI: application ready")
