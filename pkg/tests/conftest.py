import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from grasp_service.core.config import HangConfig, PipelineConfig
from grasp_service.services.geometry import RigidTransform, compute_com, poisson_disk_sample
from grasp_service.services.hangability import detect_hangability
from grasp_service.services.synthetics import ShapeSpec, build_shape


def make_shape(kind, resolution=64, **params):
    mesh, truth = build_shape(ShapeSpec(kind=kind, params=params, resolution=resolution))
    return mesh, truth


def random_transform(seed):
    rng = np.random.default_rng(seed)
    rotation = Rotation.random(random_state=seed).as_matrix()
    return RigidTransform(rotation, rng.uniform(-0.5, 0.5, size=3))


@pytest.fixture(scope="session")
def torus():
    return make_shape("torus")


@pytest.fixture(scope="session")
def torus_mesh(torus):
    return torus[0]


@pytest.fixture(scope="session")
def arc_torus():
    return make_shape("arc_torus")


@pytest.fixture(scope="session")
def sphere_mesh():
    return make_shape("sphere")[0]


@pytest.fixture(scope="session")
def box_mesh():
    return make_shape("box")[0]


@pytest.fixture(scope="session")
def plate():
    return make_shape("plate_with_holes")


@pytest.fixture(scope="session")
def mug():
    return make_shape("mug")


@pytest.fixture(scope="session")
def hang_cfg():
    return HangConfig()


@pytest.fixture(scope="session")
def default_config():
    return PipelineConfig()


@pytest.fixture(scope="session")
def torus_stats(torus_mesh):
    return compute_com(torus_mesh)


@pytest.fixture(scope="session")
def torus_cloud(torus_mesh, hang_cfg):
    return poisson_disk_sample(torus_mesh, hang_cfg.sample_count, 0)


@pytest.fixture(scope="session")
def torus_hangs(torus_mesh, hang_cfg, torus_cloud, torus_stats):
    return detect_hangability(torus_mesh, hang_cfg, 0, cloud=torus_cloud, stats=torus_stats)
