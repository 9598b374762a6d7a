import math

import numpy as np
import pytest

from conftest import make_shape, random_transform
from grasp_service.core.config import HangConfig
from grasp_service.core.errors import DegenerateSegmentError, NoSurroundingStructureError
from grasp_service.services.geometry import (
    RigidTransform,
    SurfaceCloud,
    TriangleMesh,
    compute_com,
    poisson_disk_sample,
)
from grasp_service.services.hangability import (
    HangRecord,
    _deduplicate,
    canonicalize_direction,
    detect_hang_direction,
    detect_hangability,
    fibonacci_hemisphere,
    find_candidate_contacts,
    select_hang_position,
    through_hole_filter,
)
from grasp_service.services.synthetics import ShapeSpec, build_shape, revolve_profile, swept_tube


def _angle_deg(a, b):
    cos = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.degrees(math.acos(np.clip(cos, -1.0, 1.0)))


# ============= Candidate contacts =============

def test_sphere_has_no_contact_clusters(sphere_mesh, hang_cfg):
    cloud = poisson_disk_sample(sphere_mesh, 1000, 0)
    assert find_candidate_contacts(cloud, compute_com(sphere_mesh), hang_cfg) == []


def test_torus_contacts_lie_on_inner_half(torus_cloud, torus_stats, hang_cfg):
    clusters = find_candidate_contacts(torus_cloud, torus_stats, hang_cfg)

    assert len(clusters) == 1, f"expected one ring cluster, got {len(clusters)}"
    members = torus_cloud.points[clusters[0].members]
    assert np.all(np.linalg.norm(members[:, :2], axis=1) < 0.05)
    rep_index = np.nonzero((torus_cloud.points == clusters[0].representative).all(axis=1))[0]
    assert len(rep_index) == 1 and rep_index[0] in clusters[0].members


def test_two_tori_give_separate_clusters(hang_cfg):
    first = swept_tube(0.05, 0.01, 64, 16)
    second = swept_tube(0.05, 0.01, 64, 16)
    shift = np.array([0.2, 0.0, 0.0])
    mesh = TriangleMesh.from_arrays(
        np.vstack([first[0], second[0] + shift]),
        np.vstack([first[1], second[1] + len(first[0])]),
    )
    cloud = poisson_disk_sample(mesh, 4000, 1)

    clusters = find_candidate_contacts(cloud, compute_com(mesh), hang_cfg)

    assert len(clusters) >= 2
    sides = [set(np.sign(cloud.points[c.members, 0] - 0.1)) for c in clusters]
    assert all(len(side) == 1 for side in sides), "a cluster spans both tori"
    assert {-1.0, 1.0} <= set().union(*sides)


def test_clusters_sorted_by_representative(plate, hang_cfg):
    mesh = plate[0]
    cloud = poisson_disk_sample(mesh, 4000, 0)
    clusters = find_candidate_contacts(cloud, compute_com(mesh), hang_cfg)

    keys = [tuple(c.representative) for c in clusters]
    assert keys == sorted(keys)


# ============= Hang position =============

def test_torus_hang_position_near_center(torus_mesh, torus_stats, torus_cloud, hang_cfg):
    contact = np.array([0.04, 0.0, 0.0])
    c, clearance = select_hang_position(contact, torus_stats, torus_mesh, hang_cfg, torus_cloud)

    assert np.linalg.norm(c) < 0.005
    assert clearance == pytest.approx(0.04, rel=0.1)
    # c лежит на отрезке контакт → CoM
    assert abs(c[1]) < 1e-12 and abs(c[2]) < 1e-12 and 0.0 < c[0] < 0.04


def test_rod_hang_position_has_small_clearance(hang_cfg):
    mesh, _ = make_shape("cylinder", radius=0.01, height=0.1)
    cloud = poisson_disk_sample(mesh, 2000, 0)

    _, clearance = select_hang_position(np.array([0.01, 0.0, 0.0]), compute_com(mesh), mesh, hang_cfg, cloud)

    # свободное пространство внутри стержня не больше его радиуса
    assert clearance < 0.01


def test_contact_at_com_is_degenerate(torus_mesh, torus_stats, torus_cloud, hang_cfg):
    with pytest.raises(DegenerateSegmentError):
        select_hang_position(torus_stats.com.copy(), torus_stats, torus_mesh, hang_cfg, torus_cloud)


def test_segment_clipped_at_first_wall(plate, hang_cfg):
    mesh, truth = plate
    stats = compute_com(mesh)
    cloud = poisson_disk_sample(mesh, 4000, 0)
    # дальняя стенка правого отверстия: отрезок до CoM пересекает отверстие и упирается в ближнюю стенку
    c, clearance = select_hang_position(np.array([0.045, 0.0, 0.0]), stats, mesh, hang_cfg, cloud)

    assert 0.015 <= c[0] <= 0.045
    assert np.linalg.norm(c - truth.hole_centers[1]) < 0.005
    assert clearance > 0.01


# ============= Hang direction =============

def test_torus_direction_is_axis(torus_mesh, hang_cfg):
    direction = detect_hang_direction(np.zeros(3), torus_mesh, hang_cfg)

    assert abs(direction.v[2]) > 0.99
    assert direction.m == 1.0
    assert direction.a is None
    assert len(direction.contacts) == hang_cfg.rays_per_plane
    # все контакты в плоскости, перпендикулярной v
    assert np.abs(direction.contacts @ direction.v).max() < 1e-12


def test_arc_torus_direction_and_gap(arc_torus, hang_cfg):
    mesh, truth = arc_torus
    direction = detect_hang_direction(np.zeros(3), mesh, hang_cfg)

    assert abs(direction.m - 0.75) <= 0.05
    assert direction.a is not None
    assert _angle_deg(direction.a, truth.gap_direction) < 15.0
    assert abs(direction.v[2]) > 0.95


def test_full_ring_refined_to_hole_axis(torus_mesh):
    transform = random_transform(3)
    mesh = torus_mesh.transformed(transform)
    axis = transform.apply_direction(np.array([0.0, 0.0, 1.0]))
    c = transform.translation

    refined = detect_hang_direction(c, mesh, HangConfig())
    plain = detect_hang_direction(c, mesh, HangConfig(refine_cap_deg=0))

    # без уточнения v это нормаль выигравшей плоскости веера
    winner = fibonacci_hemisphere(HangConfig().plane_count)[plain.plane_index]
    assert np.abs(plain.v - canonicalize_direction(winner)).max() < 1e-12
    assert refined.plane_index == plain.plane_index
    assert refined.m == plain.m == 1.0
    assert abs(float(refined.v @ axis)) > 0.99
    assert np.abs((refined.contacts - c) @ refined.v).max() < 1e-9


def test_arc_torus_record_at_center_of_mass(arc_torus, hang_cfg):
    mesh, truth = arc_torus
    records = detect_hangability(mesh, hang_cfg, 0)

    # c лежит на отрезке к CoM (смещён от центра дуги), разрыв оттуда виден под меньшим углом
    assert records
    record = records[0]
    assert 0.75 <= record.m < 0.9
    assert record.a is not None
    assert _angle_deg(record.a, truth.gap_direction) < 15.0
    assert abs(record.v[2]) > 0.95


def test_isolated_point_has_no_structure(torus_mesh, hang_cfg):
    with pytest.raises(NoSurroundingStructureError):
        detect_hang_direction(np.array([700.0, 400.0, 300.0]), torus_mesh, hang_cfg)


def test_direction_canonical_sign():
    assert list(canonicalize_direction(np.array([0.0, 0.0, -1.0]))) == [0.0, 0.0, 1.0]
    assert list(canonicalize_direction(np.array([-1.0, 0.0, 0.0]))) == [1.0, 0.0, 0.0]
    assert list(canonicalize_direction(np.array([0.0, -1.0, 0.0]))) == [0.0, 1.0, 0.0]


def test_fibonacci_hemisphere_is_unit_upper():
    normals = fibonacci_hemisphere(200)
    assert normals.shape == (200, 3)
    assert np.abs(np.linalg.norm(normals, axis=1) - 1.0).max() < 1e-12
    assert np.all(normals[:, 2] > 0.0)


# ============= Through-hole filter =============

def test_through_hole_torus(torus_mesh):
    assert through_hole_filter(np.zeros(3), np.array([0.0, 0.0, 1.0]), torus_mesh)


def test_through_hole_rejects_cup():
    vertices, faces = revolve_profile(
        [(0.0, 0.0), (0.04, 0.0), (0.04, 0.1), (0.036, 0.1), (0.036, 0.005), (0.0, 0.005)], 64
    )
    cup = TriangleMesh.from_arrays(vertices, faces)
    assert cup.is_watertight
    assert not through_hole_filter(np.array([0.0, 0.0, 0.05]), np.array([0.0, 0.0, 1.0]), cup)


def test_through_hole_rejects_inside_solid(box_mesh):
    assert not through_hole_filter(np.zeros(3), np.array([0.0, 0.0, 1.0]), box_mesh)


# ============= Full pass =============

def test_detect_sphere_has_no_records(sphere_mesh, hang_cfg):
    assert detect_hangability(sphere_mesh, hang_cfg, 0) == []


def test_detect_torus_single_record(torus_hangs):
    assert len(torus_hangs) == 1
    record = torus_hangs[0]
    assert np.linalg.norm(record.c) < 0.005
    assert abs(record.v[2]) > 0.99
    assert record.m == 1.0
    assert record.a is None
    assert record.clearance >= 0.005


def test_detect_plate_one_record_per_hole(plate, hang_cfg):
    mesh, truth = plate
    records = detect_hangability(mesh, hang_cfg, 0)

    assert len(records) == 2
    for center in truth.hole_centers:
        distances = [np.linalg.norm(r.c - center) for r in records]
        assert min(distances) < 0.015
    assert all(abs(r.v[2]) > 0.95 for r in records)


def test_detect_mug_finds_handle(mug, hang_cfg):
    mesh, truth = mug
    records = detect_hangability(mesh, hang_cfg, 0)

    handle = truth.hole_centers[0]
    near = [r for r in records if np.linalg.norm(r.c - handle) < 0.01]
    assert near, f"no record near the handle, got {[r.c.tolist() for r in records]}"
    assert abs(near[0].v[1]) > 0.9


def test_partial_mug_loses_handle(mug, hang_cfg):
    full = detect_hangability(mug[0], hang_cfg, 0)
    partial_mesh, truth = build_shape(ShapeSpec(kind="mug", partial_viewpoints=[(-0.5, 0.0, 0.05)]))
    partial = detect_hangability(partial_mesh, hang_cfg, 0)

    assert truth.partial
    handle = mug[1].hole_centers[0]
    full_near = [r for r in full if np.linalg.norm(r.c - handle) < 0.01]
    partial_near = [r for r in partial if np.linalg.norm(r.c - handle) < 0.01]
    assert len(full_near) != len(partial_near)


def test_detect_translation_equivariance(torus_mesh, torus_cloud, torus_hangs, hang_cfg):
    shift = RigidTransform(np.eye(3), np.array([0.3, -0.2, 0.1]))
    moved = detect_hangability(torus_mesh.transformed(shift), hang_cfg, 0, cloud=torus_cloud.transformed(shift))

    assert len(moved) == len(torus_hangs)
    for original, record in zip(torus_hangs, moved):
        assert np.abs(record.c - shift.apply(original.c)).max() < 1e-6
        assert np.abs(record.v - original.v).max() < 1e-9
        assert record.m == original.m


@pytest.mark.parametrize("seed", range(1, 11))
def test_detect_rotation_equivariance(torus_mesh, torus_cloud, torus_hangs, hang_cfg, seed):
    transform = random_transform(seed)
    moved = detect_hangability(torus_mesh.transformed(transform), hang_cfg, 0, cloud=torus_cloud.transformed(transform))
    axis = transform.apply_direction(np.array([0.0, 0.0, 1.0]))

    assert len(moved) == len(torus_hangs) == 1
    record = moved[0]
    assert np.linalg.norm(record.c - transform.translation) < 0.005
    assert abs(float(record.v @ axis)) > 0.99
    assert abs(float(record.v @ transform.apply_direction(torus_hangs[0].v))) > 0.99
    assert record.m == 1.0
    assert record.a is None


def test_detect_is_deterministic(plate, hang_cfg):
    first = detect_hangability(plate[0], hang_cfg, 3)
    second = detect_hangability(plate[0], hang_cfg, 3)

    assert [r.c.tolist() for r in first] == [r.c.tolist() for r in second]


def test_dedup_keeps_higher_m_then_clearance():
    def record(c, m, clearance):
        return HangRecord(
            c=np.array(c),
            v=np.array([0.0, 0.0, 1.0]),
            contacts=np.zeros((0, 3)),
            m=m,
            a=None if m == 1.0 else np.array([1.0, 0.0, 0.0]),
            source_contact=np.zeros(3),
            clearance=clearance,
        )

    near = record([0.0, 0.0, 0.0], 1.0, 0.004)
    wide = record([0.002, 0.0, 0.0], 1.0, 0.006)
    partial = record([0.001, 0.0, 0.0], 0.9, 0.02)
    kept = _deduplicate([partial, near, wide], radius=0.01)

    assert len(kept) == 1
    assert kept[0] is wide

    kept = _deduplicate([partial, record([0.05, 0.0, 0.0], 1.0, 0.001)], radius=0.01)
    assert [r.m for r in kept] == [1.0, 0.9]


def test_hang_record_validation():
    with pytest.raises(ValueError):
        HangRecord(c=np.zeros(3), v=np.array([0.0, 0.0, 2.0]), contacts=np.zeros((0, 3)), m=1.0, a=None, source_contact=np.zeros(3))
    with pytest.raises(ValueError):
        HangRecord(c=np.zeros(3), v=np.array([0.0, 0.0, 1.0]), contacts=np.zeros((0, 3)), m=0.5, a=None, source_contact=np.zeros(3))


def test_custom_config_changes_fan(torus_mesh):
    cfg = HangConfig(plane_count=20, rays_per_plane=36)
    direction = detect_hang_direction(np.zeros(3), torus_mesh, cfg)

    assert len(direction.contacts) == 36
    assert 0 <= direction.plane_index < 20


def test_empty_cloud_has_no_contacts(torus_stats, hang_cfg):
    assert find_candidate_contacts(SurfaceCloud.empty(), torus_stats, hang_cfg) == []
