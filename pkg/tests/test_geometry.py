import numpy as np
import pytest
import trimesh
from scipy.spatial import cKDTree

from conftest import random_transform
from grasp_service.core.errors import EmptyMeshError, MeshLoadError, SamplingError, UnsupportedFormatError
from grasp_service.services.geometry import (
    RigidTransform,
    TriangleMesh,
    compute_com,
    load_mesh,
    poisson_disk_sample,
)

CUBE_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""


def _box(extents, offset=(0.0, 0.0, 0.0)):
    box = trimesh.creation.box(extents=extents)
    box.apply_translation(offset)
    return np.asarray(box.vertices), np.asarray(box.faces)


def _concatenate(*parts):
    vertices, faces, shift = [], [], 0
    for v, f in parts:
        vertices.append(v)
        faces.append(f + shift)
        shift += len(v)
    return TriangleMesh.from_arrays(np.vstack(vertices), np.vstack(faces))


def test_load_cube_obj(tmp_path):
    path = tmp_path / "cube.obj"
    path.write_text(CUBE_OBJ)

    mesh = load_mesh(str(path))

    assert len(mesh.vertices) == 8
    assert len(mesh.faces) == 12
    assert mesh.is_watertight
    assert mesh.signed_volume == pytest.approx(1.0)


def test_load_drops_zero_area_face(tmp_path):
    # Одна грань куба заменена на вырожденную (три точки на одном ребре)
    lines = CUBE_OBJ.splitlines()
    lines.insert(8, "v 0.5 0 0")
    lines[-1] = "f 1 9 2"
    path = tmp_path / "degenerate.obj"
    path.write_text("\n".join(lines) + "\n")

    mesh = load_mesh(str(path))

    assert len(mesh.faces) == 11
    assert not mesh.is_watertight


def test_load_missing_file_reports_unreadable(tmp_path):
    with pytest.raises(MeshLoadError) as exc:
        load_mesh(str(tmp_path / "nope.obj"))
    assert "unreadable file" in str(exc.value)


def test_load_unsupported_extension(tmp_path):
    path = tmp_path / "mesh.xyz"
    path.write_text("0 0 0\n")
    with pytest.raises(UnsupportedFormatError):
        load_mesh(str(path))


def test_from_arrays_rejects_fully_degenerate_mesh():
    vertices = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    with pytest.raises(EmptyMeshError):
        TriangleMesh.from_arrays(vertices, np.array([[0, 1, 2]]))


def test_from_arrays_rewinds_inverted_closed_mesh():
    vertices, faces = _box((1.0, 1.0, 1.0))
    mesh = TriangleMesh.from_arrays(vertices, faces[:, ::-1])

    assert mesh.signed_volume == pytest.approx(1.0)
    assert compute_com(mesh).com == pytest.approx(np.zeros(3), abs=1e-12)


def test_rigid_transform_validation_and_inverse():
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, 2.0]), np.zeros(3))
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    transform = random_transform(3)
    points = np.random.default_rng(0).normal(size=(20, 3))
    roundtrip = transform.inverse().apply(transform.apply(points))
    assert np.abs(roundtrip - points).max() < 1e-12
    composed = (transform @ transform.inverse()).as_matrix()
    assert np.abs(composed - np.eye(4)).max() < 1e-12


def test_com_unit_cube_at_origin():
    vertices, faces = _box((1.0, 1.0, 1.0))
    stats = compute_com(TriangleMesh.from_arrays(vertices, faces))

    assert stats.watertight
    assert np.abs(stats.com).max() < 1e-9
    assert stats.volume == pytest.approx(1.0)
    assert stats.area == pytest.approx(6.0)


def test_com_translated_torus(torus_mesh):
    offset = np.array([0.1, 0.0, 0.0])
    moved = torus_mesh.transformed(RigidTransform(np.eye(3), offset))

    assert np.abs(compute_com(moved).com - offset).max() < 1e-6


def test_com_l_shape_matches_voxels():
    # Три единичных куба с общими гранями: ножка L вдоль x и вдоль y
    mesh = _concatenate(
        _box((1, 1, 1), (0.5, 0.5, 0.5)),
        _box((1, 1, 1), (1.5, 0.5, 0.5)),
        _box((1, 1, 1), (0.5, 1.5, 0.5)),
    )
    stats = compute_com(mesh)

    step = 0.01
    axis = np.arange(step / 2, 2.0, step)
    zs = np.arange(step / 2, 1.0, step)
    gx, gy, gz = np.meshgrid(axis, axis, zs, indexing="ij")
    inside = (gx < 1.0) | (gy < 1.0)
    voxel_com = np.array([gx[inside].mean(), gy[inside].mean(), gz[inside].mean()])

    assert stats.watertight
    assert np.abs(stats.com - voxel_com).max() < 1e-4
    assert stats.com == pytest.approx([5.0 / 6.0, 5.0 / 6.0, 0.5], abs=1e-9)


def test_com_open_mesh_uses_surface_centroid():
    vertices, faces = _box((1.0, 1.0, 1.0))
    top = np.nonzero(trimesh.Trimesh(vertices, faces, process=False).face_normals[:, 2] > 0.5)[0]
    open_box = TriangleMesh.from_arrays(vertices, np.delete(faces, top, axis=0))
    stats = compute_com(open_box)

    assert not stats.watertight
    assert stats.com[:2] == pytest.approx([0.0, 0.0], abs=1e-12)
    # пять граней площади 1: четыре стенки с центром z=0, дно z=-0.5
    assert stats.com[2] == pytest.approx(-0.1)


def test_com_invariant_to_vertex_and_face_order(torus_mesh):
    rng = np.random.default_rng(11)
    perm = rng.permutation(len(torus_mesh.vertices))
    inverse = np.argsort(perm)
    shuffled = TriangleMesh(torus_mesh.vertices[perm], inverse[torus_mesh.faces][rng.permutation(len(torus_mesh.faces))])

    assert np.abs(compute_com(shuffled).com - compute_com(torus_mesh).com).max() < 1e-12


def test_com_matches_trimesh_mass_properties(torus_mesh):
    stats = compute_com(torus_mesh)
    reference = trimesh.Trimesh(torus_mesh.vertices, torus_mesh.faces, process=False)

    assert stats.watertight
    assert np.abs(stats.com - reference.center_mass).max() < 1e-12
    assert stats.volume == pytest.approx(reference.volume, rel=1e-12)
    # тор R=0.05, r=0.01: вписанный меш (16 сечений трубы) чуть меньше 2π²Rr²
    analytic = 2.0 * np.pi**2 * 0.05 * 0.01**2
    assert 0.95 * analytic < stats.volume < analytic


def test_winding_inconsistent_mesh_is_not_watertight():
    vertices, faces = _box((1.0, 1.0, 1.0))
    flipped = faces.copy()
    flipped[0] = flipped[0][::-1]
    mesh = TriangleMesh(vertices, flipped)

    assert not mesh.is_watertight
    assert not compute_com(mesh).watertight


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_com_rigid_equivariance(arc_torus, seed):
    mesh = arc_torus[0]
    transform = random_transform(seed)
    expected = transform.apply(compute_com(mesh).com)

    assert np.abs(compute_com(mesh.transformed(transform)).com - expected).max() < 1e-9


def test_poisson_sphere_points_on_surface():
    sphere = trimesh.creation.icosphere(subdivisions=4, radius=1.0)
    mesh = TriangleMesh.from_arrays(sphere.vertices, sphere.faces)

    cloud = poisson_disk_sample(mesh, 500, 7)

    assert len(cloud) == 500
    radii = np.linalg.norm(cloud.points, axis=1)
    assert np.abs(radii - 1.0).max() < 2e-3
    assert np.abs(np.linalg.norm(cloud.normals, axis=1) - 1.0).max() < 1e-9
    # внешние нормали
    assert np.all(np.einsum("ij,ij->i", cloud.points, cloud.normals) > 0.9)


def test_poisson_box_points_on_faces_and_spread(box_mesh):
    cloud = poisson_disk_sample(box_mesh, 800, 3)
    half = np.array([0.04, 0.03, 0.02])

    scaled = np.abs(cloud.points) / half
    assert np.abs(scaled.max(axis=1) - 1.0).max() < 1e-9

    r_est = np.sqrt(2.0 * box_mesh.area / (np.sqrt(3.0) * 800))
    nearest, _ = cKDTree(cloud.points).query(cloud.points, k=2)
    assert nearest[:, 1].min() >= 0.5 * r_est


def test_poisson_is_deterministic(torus_mesh):
    first = poisson_disk_sample(torus_mesh, 600, 42)
    second = poisson_disk_sample(torus_mesh, 600, 42)

    assert np.array_equal(first.points, second.points)
    assert np.array_equal(first.normals, second.normals)


def test_poisson_rejects_tiny_target(torus_mesh):
    with pytest.raises(SamplingError):
        poisson_disk_sample(torus_mesh, 3, 0)
