"""Random walks on finitely generated groups and the capacity of their range."""

from .errors import (
    BallTooLarge,
    DegenerateGenerators,
    DuplicateGenerator,
    EmptyGeneratorSet,
    InsufficientCounts,
    NonConvergence,
    NonSymmetricGenerators,
    RangecapError,
    ResourceCapError,
    TooManyLevels,
    ValidationError,
    WindowOutOfBounds,
)
from .groups import (
    GroupPresentation,
    GrowthProfile,
    ball,
    group_from_spec,
    growth_profile,
    identity,
    inverse,
    load_group,
    make_group,
    multiply,
    word_length,
)
from .kernels import KernelTable, exact_kernel, return_probabilities
from .walks import RangeSet, WalkPath, dyadic_segments, exit_time, range_of, simulate
from .backtrack import BacktrackDecomposition, insert_backtracks, simulate_no_backtrack

__version__ = "0.1.0"
