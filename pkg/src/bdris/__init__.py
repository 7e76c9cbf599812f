"""Link-level simulator and optimizer for beyond-diagonal RIS aerial downlinks."""

from .channel import (
    ArrayGeometry,
    ChannelSet,
    LinkBudget,
    Scenario,
    ScenarioConfig,
    path_gain,
    sample_scenario,
    square_grid,
    steering_vector,
    synth_channels,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    OutputConfig,
    SystemConfig,
    default_config,
    parse_config,
    serialize_config,
    system_architecture,
)
from .experiment import (
    ResultRow,
    ResultsTable,
    SummaryRow,
    dbm_to_mw,
    read_csv,
    run_experiment,
    summarize,
    write_csv,
)
from .objective import (
    Assignment,
    ModeError,
    PowerAlloc,
    effective_gain,
    effective_gains,
    fd_check,
    grad_phase,
    spectral_efficiency,
)
from .optimizer import (
    ArmijoOptions,
    AscentResult,
    DegenerateInstanceError,
    OptimOptions,
    Solution,
    alternate,
    ascend_phase,
    ascend_phase_diagonal,
    waterfill,
)
from .plotting import PlotError, emit_plot
from .surface import (
    Architecture,
    ArchitectureKind,
    ConfigurationError,
    Mode,
    PhaseConfig,
    ProjectionError,
    TangentDir,
    ValidationReport,
    embed,
    make_feasible_random,
    project_feasible,
    retract,
    tangent_project,
    validate,
)

__version__ = "0.1.0"
