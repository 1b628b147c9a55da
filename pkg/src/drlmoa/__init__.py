"""Multi-objective TSP by decomposition: pointer-network subproblem solvers and MOEA baselines."""
from .core import (
    EUCLIDEAN,
    SCALAR_DIFF,
    ArchiveEntry,
    Instance,
    ObjectiveSpec,
    ParetoArchive,
    evaluate_tour,
    gen_instance,
    generate_weights,
    nondominated_filter,
    normalize_instance,
    tchebycheff,
    weighted_sum,
)
from .errors import CheckpointError, ConfigurationError, DomainError, ParseError, TrainingError
from .hypervolume import hypervolume, reference_point
from .kernels import BACKEND
from .trainer import ModelBank, TrainConfig, infer_front, train_drlmoa

__version__ = "0.1.0"
