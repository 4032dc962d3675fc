"""Visibility-maintaining safety filter for vision-guided mobile robots.

A minimally invasive program filter: given a reference velocity, it solves a
small quadratic program so that a weighted count of visible landmarks stays
above a required score, optionally together with obstacle clearance, and
observation events re-anchor the tracked feature set without breaking the
guarantee. Subpackages with heavier dependencies (teleop, report, checks)
are imported on demand.
"""

from .constraints import (
    AugmentedState,
    AuxState,
    ConstraintParams,
    ConstraintSet,
    InfeasibleStartError,
    build_rows,
    check_equivalence_sample,
    initialize,
    reinitialize,
)
from .kinematics import (
    DiffDriveGimbal,
    MODEL_KINDS,
    PlanarCamBot,
    RobotModel,
    integrate_configuration,
    landmark_rate,
    propagate_landmark,
    wrap_angle,
)
from .qp import QpProblem, QpSolution, SolverSettings, kkt_residual, solve
from .safety_filter import (
    FilterConfig,
    FilterOutput,
    deviation_cost,
    event_sample_seed,
    filter_step,
    run_observation_event,
)
from .scenario_io import (
    ScenarioError,
    apply_overrides,
    build_scenario,
    bundled_scenario_path,
    load_scenario,
    resolve_scenario,
)
from .sim import (
    CircularTracker,
    EventRecord,
    ExternalReference,
    Scenario,
    SimEngine,
    Trace,
    TraceRecord,
    WallInspection,
    metrics,
    run,
)
from .trace_io import read_csv, write_csv, write_metrics
from .visibility import (
    Landmark,
    LandmarkStore,
    SectorFov2D,
    StereoFrustum,
    VISIBILITY_KINDS,
    VisibilityModel,
    sample_features,
    visible_mask,
)
from .world import (
    Disc,
    FeatureWall,
    Segment,
    World,
    generate_uniform_landmarks,
    signed_distance,
)

__version__ = "0.1.0"
