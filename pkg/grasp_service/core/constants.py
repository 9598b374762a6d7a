"""
Константы для всего приложения.
Централизованное хранение всех магических чисел и строк.
"""

# ============= Geometry =============
RAY_EPSILON = 1e-6  # Минимальная дистанция попадания луча (метры)
DEGENERATE_AREA_EPS = 1e-16  # Грани с меньшей площадью отбрасываются при загрузке (м²)
RAY_BUCKET_SIZE = 64  # Граней в одном бакете ускоряющей структуры
SUPPORTED_MESH_FORMATS = (".obj", ".ply", ".stl")

# ============= Poisson disk sampling =============
POISSON_MIN_TARGET = 4
POISSON_CANDIDATE_FACTOR = 10  # Кандидатов на одну целевую точку
POISSON_SEARCH_STEPS = 14  # Шагов бинарного поиска радиуса

# ============= Hangability defaults =============
HANG_SAMPLE_COUNT = 4000
HANG_NORMAL_CONE_DEG = 30.0
HANG_CLUSTER_RADIUS = 0.01  # 1 см
HANG_SEGMENT_SAMPLES = 50
HANG_PLANE_COUNT = 200
HANG_RAYS_PER_PLANE = 72
HANG_REFINE_CAP_DEG = 30.0  # Шапка уточнения v для полного кольца (0 выключает)
HANG_MIN_M = 0.5
HANG_MIN_CLEARANCE = 0.005  # 5 мм
HANG_DEDUP_DOT = 0.99  # |v1·v2| выше этого порога считаются одним хэнгом

# ============= Gripper defaults =============
GRIPPER_L_F = 0.08
GRIPPER_L_W = 0.08
GRIPPER_L_H = 0.03
GRIPPER_L_B = 0.06
GRIPPER_ROD_RADIUS = 0.005
GRIPPER_SLAB_HALF_THICKNESS = 0.008

COLLISION_OPENING_OPEN = "open"
COLLISION_OPENING_CLOSED = "closed"

# ============= Grasp generation defaults =============
GEN_D1 = 0.01
GEN_P_THETA = 0.95
GEN_P_C = 10
GEN_GROUND_NORMAL = (0.0, 0.0, 1.0)
GEN_GRAVITY_DIR = (0.0, 0.0, -1.0)

# ============= Scoring defaults =============
SCORE_GAMMA_ALPHA = 0.04
SCORE_GAMMA_BETA = 2.0
SCORE_ANTI_GRAVITY = (0.0, 0.0, 1.0)
GRAVITY_PAIR_TOLERANCE = 1e-6  # score.anti_gravity и gen.gravity_dir противоположны с этим допуском
DEFAULT_TOP_K = 10

# ============= Viewpoint profiles =============
PROFILE_FULL = "full"  # 10 ракурсов сканирования
PROFILE_SINGLE = "single"  # 1 ракурс

PROFILE_D2 = {
    PROFILE_FULL: 0.0,
    PROFILE_SINGLE: 0.005,
}

ALLOWED_PROFILES = [
    PROFILE_FULL,
    PROFILE_SINGLE,
]

# ============= Candidate kinds =============
KIND_PARALLEL = "parallel"
KIND_VERTICAL = "vertical"

# Порядок при разрешении равенства очков
KIND_ORDER = {
    KIND_PARALLEL: 0,
    KIND_VERTICAL: 1,
}

# ============= CLI exit codes =============
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_GRASP = 2  # Ни одного захвата, попытка считается неудачной

# ============= Logging =============
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL_ENV = "GRASP_LOG_LEVEL"
LOG_COLLECTOR_MAX_SIZE = 5000

# ============= HTTP service =============
SERVICE_HOST = "0.0.0.0"
SERVICE_PORT = 11000
