"""d4kit: iterative removal of linearly decodable concepts from data.

The core loop fits a linear learner against a supervised target,
normalizes the fitted weight vector into a unit direction, and projects
the data onto the orthogonal complement of all directions found so far.
What remains carries no linearly recoverable information about the
target, while unrelated structure is preserved. Companion modules cover
kernel-space removal, a spurious-correlation benchmark, and a word
embedding debiasing suite.
"""

__version__ = "0.1.0"

from . import embedkit, kernelize, learners, linalg, serialize, synthbench
from .core import (
    D4Config,
    D4Model,
    IterationDiagnostics,
    ProbePoint,
    StoppingRule,
    d4_fit,
    d4_reduce,
    d4_transform,
    probe_trajectory,
)
from .errors import D4Error
from .learners import LabeledDataset, LearnerSpec
from .linalg import OrthonormalBasis, Tolerances, tol

__all__ = [
    "D4Config",
    "D4Error",
    "D4Model",
    "IterationDiagnostics",
    "LabeledDataset",
    "LearnerSpec",
    "OrthonormalBasis",
    "ProbePoint",
    "StoppingRule",
    "Tolerances",
    "__version__",
    "d4_fit",
    "d4_reduce",
    "d4_transform",
    "embedkit",
    "kernelize",
    "learners",
    "linalg",
    "probe_trajectory",
    "serialize",
    "synthbench",
    "tol",
]
