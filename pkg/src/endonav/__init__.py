"""endonav: deterministic vascular centerline navigation and RL training."""

from .vesselgraph import (
    CenterlineEdge,
    CenterlineError,
    CenterlineNode,
    GeodesicField,
    GraphInvariantError,
    ProjectionError,
    SpacingError,
    VesselGraph,
    centerline_document,
    geodesic_from,
    load_centerline,
    load_centerline_file,
    manifold_distance,
    menger_curvature,
    nearest_node,
    node_curvature,
    resample,
    save_centerline_file,
)
from .phantoms import generate_complex_phantom, generate_simplified_phantom
from .guidewire import (
    GuidewireConfig,
    GuidewireState,
    WireEvent,
    advance,
    heading,
    reset_wire,
    rotate,
    step_wire,
)
from .reward import RewardConfig, StepOutcome, compute_reward
from .env import (
    Env,
    EpisodeDoneError,
    EpisodeResult,
    EvalSummary,
    Observation,
    TaskSpec,
    evaluate,
    format_success_rate,
    make_env,
    run_episode,
)
from .nets import Adam, Mlp, gradients, soft_update
from .ddpg import (
    DdpgConfig,
    DivergenceError,
    Policy,
    ReplayBuffer,
    TrainingLog,
    act,
    load_checkpoint,
    save_checkpoint,
    train,
    update,
)

__version__ = "0.1.0"
