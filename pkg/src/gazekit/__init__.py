"""Rolling-horizon gaze planning for social robots.

A 200 ms tick engine that plans where a robot should look over the next
seconds as priority scores per target per frame, coordinates eye and
head motion from the planned fixation length, and ships with a reactive
baseline, a scenario simulator, metrics, and a live tuning service.
"""

from .core import (
    FRAME_MS,
    DegeneratePositionError,
    Direction,
    GazeKitError,
    GazePlan,
    InvalidSpanError,
    Target,
    TargetKind,
    TargetKindError,
    UnknownTargetError,
    angular_distance,
    direction_to,
)
from .events import (
    Event,
    RobotListeningEvent,
    RobotSpeakingEvent,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    TargetAddEvent,
    TargetMovedEvent,
    TargetRemoveEvent,
    UserSpeakingEvent,
    WordTiming,
    match_keywords,
    parse_scenario,
    serialize_scenario,
)
from .planner import ConfigError, GazePlanner, PlannerConfig
from .controller import (
    ControllerConfig,
    GazeCommand,
    RobotPose,
    UnreachableGazeError,
    control_tick,
    head_target,
    same_target_freq,
    slack,
    step,
)
from .baseline import ReactiveSystem
from .simulator import (
    PLANNED,
    REACTIVE,
    PlannedEngine,
    ReactiveEngine,
    TraceRecord,
    compare,
    read_trace,
    run,
    write_trace,
)
from .metrics import EmptyTraceError, MetricsReport, compute_metrics

__version__ = "0.1.0"
