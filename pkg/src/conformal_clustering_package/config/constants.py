from enum import Enum, IntEnum


class ProbabilityTolerance(Enum):
    """Tolerances for points on the probability simplex."""
    RENORMALIZE = 1e-6
    NEGATIVE_CLIP = 1e-12


class ClusteringDefaults(Enum):
    """Defaults for the soft clustering backends."""
    VARIANCE_FLOOR = 1e-6
    MIN_COMPONENT_WEIGHT = 1e-8
    EM_TOL = 1e-6               # gain in mean per-observation log-likelihood
    EM_MAX_ITER = 500
    EM_RESTARTS = 5
    ASCENT_SLACK = 1e-8
    HIGH_DIM_THRESHOLD = 50     # p above this defaults to diagonal covariances
    GAMMA_SUPPORT_EPS = 1e-12
    FCM_FUZZINESS = 1.7
    FCM_TOL = 1e-6
    FCM_MAX_ITER = 300
    FCM_COINCIDENCE = 1e-12


class ClassifierDefaults(Enum):
    """Defaults for the soft classifiers."""
    RANDOM_FEATURES = 256
    BANDWIDTH_SUBSAMPLE = 512
    RIDGE = 1e-3
    GRAD_TOL = 1e-5
    MAX_ITER = 500
    ARMIJO_C = 1e-4
    MAX_STEP = 1e6
    KNN_NEIGHBORS = 15


class ConformalDefaults(Enum):
    """Defaults for calibration, evaluation and experiments."""
    ALPHA = 0.1
    TRAIN_FRACTION = 0.5
    TEST_SIZE = 2000
    MAX_FAILURE_RATE = 0.2
    QUANTILE_INDEX_SLACK = 1e-9
    ENUMERATION_LIMIT = 4096
    BRUTE_FORCE_MAX_K = 8


class MixtureFamily(str, Enum):
    GAUSSIAN_FULL = "gaussian-full"
    GAUSSIAN_DIAG = "gaussian-diag"
    GAMMA_INDEPENDENT = "gamma-independent"


class InitStrategy(str, Enum):
    KMEANS_PP = "kmeans++"
    RANDOM_RESPONSIBILITY = "random-responsibility"


class ClustererKind(str, Enum):
    MIXTURE = "mixture"
    FCM = "fcm"
    ORACLE = "oracle"   # true posterior of a simulation generator; diagnostics only


class ClassifierKind(str, Enum):
    MULTINOMIAL_LOGISTIC = "multinomial-logistic"
    KNN_SOFT = "knn-soft"
    CLUSTERER_BYPASS = "clusterer-bypass"


class PipelineMode(str, Enum):
    STOCHASTIC = "stochastic"
    NAIVE_HARD = "naive-hard"
    ORACLE_LABELS = "oracle-labels"


class Method(str, Enum):
    """Methods compared by the experiment runner."""
    STOCHASTIC = "stochastic"
    NAIVE_HARD = "naive-hard"
    CUTOFF = "cutoff"
    ORACLE_LABELS = "oracle-labels"


class GeneratorFamily(str, Enum):
    GAUSSIAN = "gaussian"
    GAMMA = "gamma"


class SweepParameter(str, Enum):
    N = "n"
    SIGMA2 = "sigma2"
    FUZZINESS = "fuzziness"


class ExitCode(IntEnum):
    SUCCESS = 0
    IO_ERROR = 2
    CONFIG_ERROR = 3
    FIT_ERROR = 4


FORMAT_VERSION = 1
