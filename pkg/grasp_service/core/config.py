"""
Pipeline Configuration: централизованная конфигурация всех стадий пайплайна.

Отвечает за:
- Описание параметров стадий (hang.*, gen.*, score.*, gripper.*, run.*)
- Валидацию значений (pydantic), с именем поля в сообщении об ошибке
- Загрузку из файлов (YAML, JSON, TOML), вложенных или с ключами через точку
- Профили сканирования (full / single), задающие d2
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import constants as C
from .errors import ConfigError

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]


logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]


def _unit_vector(value: Vector3) -> Vector3:
    norm = math.sqrt(sum(float(x) * float(x) for x in value))
    if not math.isfinite(norm) or norm < 1e-12:
        raise ValueError("vector must be finite and non-zero")
    return tuple(float(x) / norm for x in value)  # type: ignore[return-value]


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class HangConfig(_Section):
    """Параметры детекции навешиваемых структур."""
    sample_count: int = Field(default=C.HANG_SAMPLE_COUNT, ge=C.POISSON_MIN_TARGET)
    normal_cone_deg: float = Field(default=C.HANG_NORMAL_CONE_DEG, gt=0, lt=90)
    cluster_radius: float = Field(default=C.HANG_CLUSTER_RADIUS, gt=0)
    segment_samples: int = Field(default=C.HANG_SEGMENT_SAMPLES, gt=0)
    plane_count: int = Field(default=C.HANG_PLANE_COUNT, gt=0)
    rays_per_plane: int = Field(default=C.HANG_RAYS_PER_PLANE, gt=0)
    refine_cap_deg: float = Field(default=C.HANG_REFINE_CAP_DEG, ge=0, lt=90)
    min_m: float = Field(default=C.HANG_MIN_M, ge=0, le=1)
    min_clearance: float = Field(default=C.HANG_MIN_CLEARANCE, gt=0)
    clip_to_free_space: bool = True


class GenConfig(_Section):
    """Параметры генерации захватов (точки подхода и отсев по коллизиям)."""
    d1: float = Field(default=C.GEN_D1, gt=0)
    d2: float = Field(default=C.PROFILE_D2[C.PROFILE_FULL], ge=0)
    p_theta: float = Field(default=C.GEN_P_THETA, gt=0, le=1)
    p_c: int = Field(default=C.GEN_P_C, ge=0)
    ground_normal: Vector3 = C.GEN_GROUND_NORMAL
    gravity_dir: Vector3 = C.GEN_GRAVITY_DIR
    collision_opening: Literal["open", "closed"] = C.COLLISION_OPENING_OPEN

    @field_validator("ground_normal", "gravity_dir")
    @classmethod
    def _normalize(cls, value: Vector3) -> Vector3:
        return _unit_vector(value)


class ScoreConfig(_Section):
    """Параметры функции оценки."""
    gamma_alpha: float = Field(default=C.SCORE_GAMMA_ALPHA, gt=0)
    gamma_beta: float = Field(default=C.SCORE_GAMMA_BETA, gt=0)
    anti_gravity: Vector3 = C.SCORE_ANTI_GRAVITY

    @field_validator("anti_gravity")
    @classmethod
    def _normalize(cls, value: Vector3) -> Vector3:
        return _unit_vector(value)


class GripperSettings(_Section):
    """Геометрия захвата с крюком (метры)."""
    l_f: float = Field(default=C.GRIPPER_L_F, gt=0)
    l_w: float = Field(default=C.GRIPPER_L_W, gt=0)
    l_h: float = Field(default=C.GRIPPER_L_H, gt=0)
    l_b: float = Field(default=C.GRIPPER_L_B, gt=0)
    rod_radius: float = Field(default=C.GRIPPER_ROD_RADIUS, gt=0)
    slab_half_thickness: float = Field(default=C.GRIPPER_SLAB_HALF_THICKNESS, gt=0)

    @model_validator(mode="after")
    def _check_rod(self):
        if not self.l_h < self.l_w:
            raise ValueError("l_h must be smaller than l_w")
        return self

    def to_model(self):
        """Собрать GripperModel в открытом состоянии (opening = l_w)."""
        from ..services.gripper import GripperModel

        return GripperModel(
            l_f=self.l_f,
            l_w=self.l_w,
            l_h=self.l_h,
            l_b=self.l_b,
            rod_radius=self.rod_radius,
            opening=self.l_w,
        )


class RunSettings(_Section):
    top_k: int = Field(default=C.DEFAULT_TOP_K, ge=1)
    seed: int = 0
    profile: Literal["full", "single"] = C.PROFILE_FULL


class PipelineConfig(_Section):
    """Вся конфигурация пайплайна одной сериализуемой записью."""
    hang: HangConfig = Field(default_factory=HangConfig)
    gen: GenConfig = Field(default_factory=GenConfig)
    score: ScoreConfig = Field(default_factory=ScoreConfig)
    gripper: GripperSettings = Field(default_factory=GripperSettings)
    run: RunSettings = Field(default_factory=RunSettings)

    @model_validator(mode="before")
    @classmethod
    def _apply_profile(cls, data: Any) -> Any:
        # Профиль задаёт d2, если d2 не указан явно
        if not isinstance(data, dict):
            return data
        data = dict(data)
        run = data.get("run") or {}
        if isinstance(run, RunSettings):
            profile = run.profile
        elif isinstance(run, dict):
            profile = run.get("profile", C.PROFILE_FULL)
        else:
            return data
        if profile not in C.PROFILE_D2:
            return data  # ошибку сообщит валидатор поля run.profile
        gen = data.get("gen") or {}
        if not isinstance(gen, (dict, GenConfig)):
            return data
        if isinstance(gen, GenConfig):
            explicit = "d2" in gen.model_fields_set
            gen_d2 = gen.d2
        else:
            gen = dict(gen)
            explicit = "d2" in gen
            gen_d2 = gen.get("d2")
        if not explicit:
            if isinstance(gen, GenConfig):
                gen = gen.model_copy(update={"d2": C.PROFILE_D2[profile]})
            else:
                gen["d2"] = C.PROFILE_D2[profile]
        elif gen_d2 != C.PROFILE_D2[profile]:
            logger.warning(f"⚠️ gen.d2={gen_d2} overrides profile '{profile}' (d2={C.PROFILE_D2[profile]})")
        data["gen"] = gen
        return data

    @model_validator(mode="before")
    @classmethod
    def _link_anti_gravity(cls, data: Any) -> Any:
        # score.anti_gravity по умолчанию = −gen.gravity_dir
        if not isinstance(data, dict):
            return data
        score = data.get("score") or {}
        if isinstance(score, ScoreConfig):
            if "anti_gravity" in score.model_fields_set:
                return data
        elif not isinstance(score, dict) or "anti_gravity" in score:
            return data
        gen = data.get("gen") or {}
        if isinstance(gen, GenConfig):
            gravity = gen.gravity_dir
        elif isinstance(gen, dict):
            gravity = gen.get("gravity_dir")
        else:
            return data
        if gravity is None:
            return data
        try:
            anti_gravity = tuple(-float(x) for x in gravity)
        except (TypeError, ValueError):
            return data  # ошибку сообщит валидатор поля gen.gravity_dir
        data = dict(data)
        if isinstance(score, ScoreConfig):
            data["score"] = {**score.model_dump(exclude_unset=True), "anti_gravity": anti_gravity}
        else:
            data["score"] = {**score, "anti_gravity": anti_gravity}
        return data

    @model_validator(mode="after")
    def _check_gravity_pair(self) -> "PipelineConfig":
        dot = sum(a * b for a, b in zip(self.gen.gravity_dir, self.score.anti_gravity))
        if dot > -1.0 + C.GRAVITY_PAIR_TOLERANCE:
            raise ConfigError("must be opposite to gen.gravity_dir", field="score.anti_gravity")
        return self

    def config_hash(self) -> str:
        """SHA-256 канонического JSON эффективной конфигурации."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def unflatten_keys(data: Dict[str, Any]) -> Dict[str, Any]:
    """Превратить {'hang.sample_count': 10} в {'hang': {'sample_count': 10}}."""
    result: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = unflatten_keys(value)
        parts = str(key).split(".")
        node = result
        for part in parts[:-1]:
            existing = node.setdefault(part, {})
            if not isinstance(existing, dict):
                raise ConfigError("conflicts with a nested section", field=".".join(parts))
            node = existing
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf].update(value)
        else:
            node[leaf] = value
    return result


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Прочитать сырой словарь конфигурации из файла.

    Args:
        path: Путь к .yaml/.yml, .json или .toml

    Returns:
        Вложенный словарь (ключи через точку уже развёрнуты)
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    suffix = file_path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            with file_path.open("r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        elif suffix == ".json":
            with file_path.open("r", encoding="utf-8") as f:
                data = json.load(f)
        elif suffix == ".toml":
            with file_path.open("rb") as f:
                data = tomllib.load(f)
        else:
            raise ConfigError(f"unsupported config format '{suffix}'")
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"top level of {path} must be a mapping")
    return unflatten_keys(data)


def apply_overrides(
    raw: Dict[str, Any],
    top_k: Optional[int] = None,
    seed: Optional[int] = None,
    profile: Optional[str] = None,
) -> Dict[str, Any]:
    """Наложить флаги командной строки на сырой словарь конфигурации."""
    merged = {key: (dict(value) if isinstance(value, dict) else value) for key, value in raw.items()}
    run = merged.setdefault("run", {})
    if not isinstance(run, dict):
        raise ConfigError("must be a mapping", field="run")
    if top_k is not None:
        run["top_k"] = top_k
    if seed is not None:
        run["seed"] = seed
    if profile is not None:
        run["profile"] = profile
    return merged


def build_pipeline_config(raw: Optional[Dict[str, Any]] = None) -> PipelineConfig:
    """Провалидировать сырой словарь; ошибка называет поле через точку."""
    try:
        return PipelineConfig.model_validate(unflatten_keys(raw or {}))
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigError(first.get("msg", "invalid value"), field=field or None) from e


def load_pipeline_config(path: Optional[str] = None, **overrides: Any) -> PipelineConfig:
    """Загрузить конфигурацию из файла (или значения по умолчанию) с оверрайдами CLI."""
    raw = read_config_file(path) if path else {}
    config = build_pipeline_config(apply_overrides(raw, **overrides))
    logger.info(f"Loaded pipeline config (profile={config.run.profile}, d2={config.gen.d2}, top_k={config.run.top_k})")
    return config


# Example configuration file content
EXAMPLE_CONFIG_YAML = """
hang:
  sample_count: 4000
  normal_cone_deg: 30
  cluster_radius: 0.01
  plane_count: 200
  rays_per_plane: 72
  refine_cap_deg: 30
gen:
  d1: 0.01
  p_theta: 0.95
  p_c: 10
  gravity_dir: [0, 0, -1]
score:
  gamma_alpha: 0.04
  gamma_beta: 2
gripper:
  l_f: 0.08
  l_w: 0.08
  l_h: 0.03
run:
  top_k: 10
  seed: 0
  profile: full
"""

EXAMPLE_CONFIG_TOML = """
"hang.sample_count" = 4000
"gen.p_c" = 10
"run.profile" = "single"
"""

__all__ = [
    "HangConfig",
    "GenConfig",
    "ScoreConfig",
    "GripperSettings",
    "RunSettings",
    "PipelineConfig",
    "unflatten_keys",
    "read_config_file",
    "apply_overrides",
    "build_pipeline_config",
    "load_pipeline_config",
    "EXAMPLE_CONFIG_YAML",
    "EXAMPLE_CONFIG_TOML",
]
