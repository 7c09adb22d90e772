from ._core import (
    Action,
    Pose,
    RunConfig,
    Scene,
    SubtaskResult,
    World,
    compute_spl,
    compute_sr,
    fmm_distance,
    keyframe_probabilities,
    kmeans,
    load_scene,
    run_pipeline,
)

__all__ = [
    "Action",
    "Pose",
    "RunConfig",
    "Scene",
    "SubtaskResult",
    "World",
    "compute_spl",
    "compute_sr",
    "fmm_distance",
    "keyframe_probabilities",
    "kmeans",
    "load_scene",
    "run_pipeline",
]
