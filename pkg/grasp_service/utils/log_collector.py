"""
Pipeline Log Collector - кольцевой буфер логов пайплайна для просмотра через API.
"""
import logging
import threading
import traceback
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

from ..core.constants import LOG_COLLECTOR_MAX_SIZE


def stage_of(logger_name: str) -> str:
    """Стадия пайплайна по имени логгера: grasp_service.services.hangability → hangability."""
    if not logger_name:
        return "unknown"
    return logger_name.rsplit(".", 1)[-1]


@dataclass
class LogEntry:
    """Запись лога пайплайна."""
    level: str
    logger_name: str
    message: str
    timestamp: datetime = field(default_factory=datetime.now)
    exc_info: Optional[str] = None

    @property
    def stage(self) -> str:
        return stage_of(self.logger_name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "logger_name": self.logger_name,
            "stage": self.stage,
            "message": self.message,
            "timestamp": self.timestamp.isoformat(),
            "exc_info": self.exc_info,
        }


class ApplicationLogHandler(logging.Handler):
    """Handler, складывающий записи в память (последние max_size)."""

    def __init__(self, max_size: int = LOG_COLLECTOR_MAX_SIZE):
        super().__init__()
        self.max_size = max_size
        self.logs: deque = deque(maxlen=max_size)
        self.lock = threading.Lock()

    def emit(self, record: logging.LogRecord):
        try:
            exc_info = None
            if record.exc_info:
                exc_info = "".join(traceback.format_exception(*record.exc_info))
            try:
                message = record.getMessage()
            except Exception:
                message = str(record.msg)

            entry = LogEntry(
                level=record.levelname,
                logger_name=record.name,
                message=message,
                timestamp=datetime.fromtimestamp(record.created),
                exc_info=exc_info,
            )
            # Не блокируемся: воркеры пайплайна не должны ждать API
            if self.lock.acquire(blocking=False):
                try:
                    self.logs.append(entry)
                finally:
                    self.lock.release()
        except Exception:
            # Ошибки хэндлера не логируем, иначе рекурсия
            pass

    def get_logs(
        self,
        limit: int = 100,
        level: Optional[str] = None,
        stage: Optional[str] = None,
        search: Optional[str] = None,
        logger_name: Optional[str] = None,
    ) -> List[Dict[str, Any]]:
        """
        Получить логи с фильтрацией.

        Args:
            limit: Максимальное количество записей (последние)
            level: Уровень (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            stage: Стадия пайплайна (hangability, grasp_gen, ...)
            search: Подстрока в сообщении или имени логгера
            logger_name: Подстрока в имени логгера
        """
        with self.lock:
            filtered = list(self.logs)

        if level:
            filtered = [log for log in filtered if log.level == level.upper()]
        if stage:
            filtered = [log for log in filtered if log.stage == stage.lower()]
        if logger_name:
            needle = logger_name.lower()
            filtered = [log for log in filtered if needle in log.logger_name.lower()]
        if search:
            needle = search.lower()
            filtered = [log for log in filtered if needle in log.message.lower() or needle in log.logger_name.lower()]

        if limit <= 0:
            return []
        return [log.to_dict() for log in filtered[-limit:]]

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            logs = list(self.logs)

        stats: Dict[str, Any] = {"total_logs": len(logs), "by_level": {}, "by_stage": {}}
        for log in logs:
            stats["by_level"][log.level] = stats["by_level"].get(log.level, 0) + 1
            stats["by_stage"][log.stage] = stats["by_stage"].get(log.stage, 0) + 1
        return stats

    def clear(self):
        with self.lock:
            self.logs.clear()


# Глобальный экземпляр коллектора логов
application_log_collector = ApplicationLogHandler()
