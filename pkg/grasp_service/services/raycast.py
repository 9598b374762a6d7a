"""
Ray casting по треугольному мешу.

Грани сортируются по Morton-коду центроидов и режутся на бакеты фиксированного
размера; у каждого бакета свой AABB. Пачка лучей сначала проходит slab-тест
против всех AABB, затем Möller–Trumbore только внутри задетых бакетов.
Результат совпадает с перебором всех граней: при равной дистанции побеждает
грань с меньшим индексом.
"""
import logging
from typing import Tuple

import numpy as np

from ..core.constants import RAY_BUCKET_SIZE, RAY_EPSILON

logger = logging.getLogger(__name__)

_DET_EPS = 1e-18
_AABB_PAD = 1e-9
_SLAB_BUDGET = 4_000_000  # лучей × бакетов в одном блоке slab-теста


def intersect_triangles(
    origins: np.ndarray,
    directions: np.ndarray,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    eps: float = RAY_EPSILON,
) -> np.ndarray:
    """
    Двусторонний тест Möller–Trumbore для всех пар (луч, треугольник).

    Args:
        origins: (k, 3) начала лучей
        directions: (k, 3) единичные направления
        v0, e1, e2: (f, 3) вершина и два ребра каждого треугольника

    Returns:
        (k, f) дистанции попадания, np.inf где попадания нет или t <= eps
    """
    p = np.cross(directions[:, None, :], e2[None, :, :])
    det = np.einsum("kfi,fi->kf", p, e1)
    valid = np.abs(det) > _DET_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
        s = origins[:, None, :] - v0[None, :, :]
        u = np.einsum("kfi,kfi->kf", s, p) * inv
        q = np.cross(s, e1[None, :, :])
        v = np.einsum("ki,kfi->kf", directions, q) * inv
        t = np.einsum("fi,kfi->kf", e2, q) * inv
    hit = valid & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > eps)
    return np.where(hit, t, np.inf)


def _spread_bits(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) & np.uint64(0x3FF)
    x = (x | (x << np.uint64(16))) & np.uint64(0x030000FF)
    x = (x | (x << np.uint64(8))) & np.uint64(0x0300F00F)
    x = (x | (x << np.uint64(4))) & np.uint64(0x030C30C3)
    x = (x | (x << np.uint64(2))) & np.uint64(0x09249249)
    return x


def morton_order(points: np.ndarray) -> np.ndarray:
    """Порядок точек вдоль Z-кривой (10 бит на ось)."""
    lo = points.min(axis=0)
    extent = np.maximum(points.max(axis=0) - lo, 1e-12)
    cells = np.clip(((points - lo) / extent * 1023.0).astype(np.int64), 0, 1023)
    code = _spread_bits(cells[:, 0]) | (_spread_bits(cells[:, 1]) << np.uint64(1)) | (_spread_bits(cells[:, 2]) << np.uint64(2))
    return np.argsort(code, kind="stable")


class RayCaster:
    """Неизменяемая ускоряющая структура над гранями меша."""

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, bucket_size: int = RAY_BUCKET_SIZE):
        tris = vertices[faces]
        order = morton_order(tris.mean(axis=1))
        tris = tris[order]
        self.face_ids = order.astype(np.int64)
        self.v0 = np.ascontiguousarray(tris[:, 0])
        self.e1 = np.ascontiguousarray(tris[:, 1] - tris[:, 0])
        self.e2 = np.ascontiguousarray(tris[:, 2] - tris[:, 0])

        starts = np.arange(0, len(order), bucket_size)
        self.bucket_slices = [slice(s, min(s + bucket_size, len(order))) for s in starts]
        self.bucket_lo = np.array([tris[sl].reshape(-1, 3).min(axis=0) for sl in self.bucket_slices]) - _AABB_PAD
        self.bucket_hi = np.array([tris[sl].reshape(-1, 3).max(axis=0) for sl in self.bucket_slices]) + _AABB_PAD
        logger.debug(f"RayCaster built: {len(order)} faces in {len(self.bucket_slices)} buckets")

    @property
    def bucket_count(self) -> int:
        return len(self.bucket_slices)

    def _slab_test(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        safe = np.where(directions == 0.0, 1e-300, directions)
        inv = 1.0 / safe
        t1 = (self.bucket_lo[None, :, :] - origins[:, None, :]) * inv[:, None, :]
        t2 = (self.bucket_hi[None, :, :] - origins[:, None, :]) * inv[:, None, :]
        tmin = np.minimum(t1, t2).max(axis=2)
        tmax = np.maximum(t1, t2).min(axis=2)
        return (tmax >= np.maximum(tmin, 0.0)) & (tmax > RAY_EPSILON)

    def first_hits(self, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Ближайшие попадания для пачки лучей.

        Returns:
            (distances, face_indices): np.inf и -1 для промахов
        """
        origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
        directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        count = len(origins)
        best_t = np.full(count, np.inf)
        best_f = np.full(count, -1, dtype=np.int64)
        if count == 0 or self.bucket_count == 0:
            return best_t, best_f

        block = max(1, _SLAB_BUDGET // self.bucket_count)
        for start in range(0, count, block):
            stop = min(start + block, count)
            o = origins[start:stop]
            d = directions[start:stop]
            touched = self._slab_test(o, d)
            for b in np.nonzero(touched.any(axis=0))[0]:
                rays = np.nonzero(touched[:, b])[0]
                sl = self.bucket_slices[b]
                t = intersect_triangles(o[rays], d[rays], self.v0[sl], self.e1[sl], self.e2[sl])
                t_min = t.min(axis=1)
                found = np.isfinite(t_min)
                if not found.any():
                    continue
                ids = self.face_ids[sl]
                f_min = np.where(t == t_min[:, None], ids[None, :], np.iinfo(np.int64).max).min(axis=1)

                gidx = rays + start
                cur_t = best_t[gidx]
                cur_f = best_f[gidx]
                better = found & ((t_min < cur_t) | ((t_min == cur_t) & (f_min < cur_f)))
                best_t[gidx[better]] = t_min[better]
                best_f[gidx[better]] = f_min[better]
        return best_t, best_f
