"""Random Lipschitz functions on graphs: exact counting, sampling and experiments."""

__version__ = "0.1.0"

from randlip.graph import (
    Graph,
    BallDecomposition,
    build_layered_cycle,
    cycle_graph,
    path_graph,
    complete_graph,
    bfs_distances,
    ball,
    max_ball_size,
    pack_disjoint_balls,
    choose_radius,
)
from randlip.lipschitz import (
    ModelKind,
    IntLipschitzFunction,
    RealLipschitzFunction,
    PinningError,
    validate,
    range_of,
    extremal,
    interval_stat,
    restrict,
)

__all__ = [
    "Graph",
    "BallDecomposition",
    "build_layered_cycle",
    "cycle_graph",
    "path_graph",
    "complete_graph",
    "bfs_distances",
    "ball",
    "max_ball_size",
    "pack_disjoint_balls",
    "choose_radius",
    "ModelKind",
    "IntLipschitzFunction",
    "RealLipschitzFunction",
    "PinningError",
    "validate",
    "range_of",
    "extremal",
    "interval_stat",
    "restrict",
]
