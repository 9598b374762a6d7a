"""
Оценка и ранжирование захватов.

S_total = m · S_β · S_α, где
S_α = exp(−α²/γ_α), где α: угол между осью к запястью R·n1 и антигравитацией;
S_β = 1 при m = 1, иначе exp(−β²/γ_β), где β: угол между направлением разрыва a
и R·n1 (parallel) или R·n2 (vertical).
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import ScoreConfig
from ..core.constants import KIND_ORDER, KIND_PARALLEL
from ..core.errors import MissingOpenDirectionError
from .grasp_gen import GraspCandidate
from .gripper import GripperModel, key_points
from .hangability import HangRecord

logger = logging.getLogger(__name__)

_FRAME = key_points(GripperModel())
N1 = _FRAME.n1
N2 = _FRAME.n2


@dataclass(frozen=True)
class ScoreBreakdown:
    alpha: float
    s_alpha: float
    beta: Optional[float]
    s_beta: float
    m: float
    s_total: float


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    return math.acos(min(1.0, max(-1.0, float(a @ b))))


def direction_score(alpha: float, gamma_alpha: float) -> float:
    return math.exp(-alpha * alpha / gamma_alpha)


def completeness_score(beta: float, gamma_beta: float) -> float:
    return math.exp(-beta * beta / gamma_beta)


def score_direction(cand: GraspCandidate, cfg: ScoreConfig) -> Tuple[float, float]:
    """(alpha, s_alpha) для оси к запястью R·n1."""
    alpha = _angle(cand.pose.rotation @ N1, np.asarray(cfg.anti_gravity, dtype=np.float64))
    return alpha, direction_score(alpha, cfg.gamma_alpha)


def score_completeness(cand: GraspCandidate, hang: HangRecord, cfg: ScoreConfig) -> Tuple[Optional[float], float]:
    """
    (beta, s_beta); при m = 1 beta отсутствует и s_beta = 1.

    Raises:
        MissingOpenDirectionError: m < 1, но у записи нет a
    """
    if hang.m >= 1.0:
        return None, 1.0
    if hang.a is None:
        raise MissingOpenDirectionError(f"hang record with m={hang.m} has no open direction")
    axis = N1 if cand.kind == KIND_PARALLEL else N2
    beta = _angle(np.asarray(hang.a, dtype=np.float64), cand.pose.rotation @ axis)
    return beta, completeness_score(beta, cfg.gamma_beta)


def score_total(cand: GraspCandidate, hang: HangRecord, cfg: ScoreConfig) -> ScoreBreakdown:
    alpha, s_alpha = score_direction(cand, cfg)
    beta, s_beta = score_completeness(cand, hang, cfg)
    return ScoreBreakdown(
        alpha=alpha,
        s_alpha=s_alpha,
        beta=beta,
        s_beta=s_beta,
        m=hang.m,
        s_total=hang.m * s_beta * s_alpha,
    )


def score_candidates(cands: List[GraspCandidate], hangs: List[HangRecord], cfg: ScoreConfig) -> List[GraspCandidate]:
    """Проставить разбивку оценки каждому кандидату."""
    return [replace(cand, score=score_total(cand, hangs[cand.hang_index], cfg)) for cand in cands]


def _rank_key(cand: GraspCandidate):
    return (-cand.score.s_total, KIND_ORDER[cand.kind], cand.hang_index, cand.contact_index, cand.sign_choices)


def rank_top_k(cands: List[GraspCandidate], k: int) -> List[GraspCandidate]:
    """
    Лучшие k кандидатов по убыванию s_total.

    Равные оценки: parallel раньше vertical, затем hang_index, contact_index, знаки.
    """
    if any(cand.score is None for cand in cands):
        raise ValueError("all candidates must be scored before ranking")
    ranked = sorted(cands, key=_rank_key)[:max(k, 0)]
    if ranked:
        logger.info(f"🏆 Ranked {len(cands)} candidates, top s_total={ranked[0].score.s_total:.6f}")
    return ranked
