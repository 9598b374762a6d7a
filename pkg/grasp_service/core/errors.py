"""
Иерархия исключений сервиса.

Всё, что пайплайн считает ошибкой входных данных, наследуется от
GraspServiceError: CLI превращает это в exit 1, HTTP-роуты в 4xx.
"""
from typing import Optional


class GraspServiceError(Exception):
    """Базовое исключение пайплайна."""


class MeshLoadError(GraspServiceError):
    """Файл меша не читается."""


class UnsupportedFormatError(MeshLoadError):
    """Расширение файла не входит в поддерживаемые форматы."""


class EmptyMeshError(MeshLoadError):
    """После очистки не осталось ни одной грани."""


class SamplingError(GraspServiceError):
    """Poisson-disk семплинг невозможен с заданными параметрами."""


class DegenerateSegmentError(GraspServiceError):
    """Контактная точка совпадает с центром масс."""


class NoSurroundingStructureError(GraspServiceError):
    """Ни один луч ни в одной плоскости не попал в объект."""

    def __init__(self, message: str = "all planes score zero hits"):
        super().__init__(message)


class EmptyContactsError(GraspServiceError):
    """У хэнга нет контактных точек."""


class EmptyCagedSetError(GraspServiceError):
    """Срез облака плоскостью захвата пуст (Q = ∅)."""


class MissingOpenDirectionError(GraspServiceError):
    """m < 1, но направление разрыва a отсутствует."""


class ShapeSpecError(GraspServiceError, ValueError):
    """Некорректные параметры синтетической формы."""


class ConfigError(GraspServiceError):
    """Ошибка конфигурации; field: имя поля через точку (hang.sample_count)."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
