"""
regime_swk models package.

Domain models and the pure operations on them: measures and the lift,
1D and sliced Wasserstein geometry, the clustering loops, labeling and
scoring, synthetic data generation and the experiment runners.
"""
from .base import ModelBase, ArrayModelBase
from .field_types import (
    NonNegativeInt,
    PositiveInt,
    PositiveFloat,
    Seed,
    Correlation,
    WassersteinOrder,
    MAX_EXHAUSTIVE_ATOMS,
    MAX_EXHAUSTIVE_LABELS,
)
from .exceptions import (
    RegimeSwkError,
    ConfigError,
    ParameterError,
    DataError,
    DomainError,
    DegenerateInputError,
    InsufficientDataError,
    ShapeError,
    ContractError,
    SizeGuardError,
    EmptyClusterError,
    GenerationError,
    ArtifactIOError,
)
from .measures import (
    Stream,
    ReturnSeries,
    LiftConfig,
    EmpiricalMeasure,
    MeasureFamily,
    log_returns,
    lift,
    closed_form_window_count,
)
from .wasserstein import (
    SortedAtoms,
    ProjectionScheme,
    ProjectionSet,
    ProjectedMeasure,
    ProjectedFamily,
    w1_distance,
    w1_barycentre,
    brute_force_w1,
    make_projection_set,
    project_measure,
    project_family,
    sliced_distance,
)
from .labeling import (
    UNLABELED,
    LabeledSeries,
    RegimeSummary,
    RegimeStats,
    majority_vote,
    contingency,
    map_clusters,
    apply_mapping,
    total_accuracy,
    per_regime_accuracy,
    regime_stats,
)
from .seeding import RunSeed, derive_run_seed, derive_run_seeds
from .clustering import (
    ClusterConfig,
    Centroid,
    IterationDiagnostics,
    ClusteringResult,
    RunOutcome,
    init_centroids,
    assign_step,
    update_step,
    run_clustering,
    run_wk_means,
    multi_run,
    multi_run_async,
    select_best,
)
from .synthgen import (
    RegimeShape,
    RegimeParams,
    ScenarioSpec,
    MinorityPeriod,
    SyntheticDataset,
    Scenario,
    place_minority_periods,
    gen_1d,
    gen_2d,
    gen_3d,
    gen_2d_gaussian_regime,
    gen_moons_regime,
    make_moons,
    gen_scenario,
)
from .experiment import (
    H2Rule,
    CellConfig,
    ExperimentConfig,
    AccuracyReport,
    ClusterReport,
    SweepCell,
    SweepReport,
    run_cluster_async,
    run_cell_async,
    run_sweep_async,
)
