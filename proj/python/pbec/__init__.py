"""Rate-equation kinetics of a multimode photon gas coupled to a pumped dye
reservoir: scene construction, stiff integration, steady-state continuation,
quench experiments and power-law analysis."""

from ._core import (
    ConfigError,
    FitError,
    HierarchyBasis,
    ModeIndex,
    ModeRecord,
    QuenchRecord,
    Scene,
    SceneParams,
    SolverError,
    StateError,
    SteadyState,
    SystemState,
    Transition,
    __version__,
    big_quench_trace,
    build_hierarchy,
    build_scene,
    continuation_sweep,
    detect_transitions,
    effective_view,
    equilibration_time,
    find_steady,
    log_grid,
    mode_intensity,
    preset_names,
    preset_text,
    rhs_full,
)

__all__ = [
    "ConfigError",
    "FitError",
    "HierarchyBasis",
    "ModeIndex",
    "ModeRecord",
    "QuenchRecord",
    "Scene",
    "SceneParams",
    "SolverError",
    "StateError",
    "SteadyState",
    "SystemState",
    "Transition",
    "__version__",
    "big_quench_trace",
    "build_hierarchy",
    "build_scene",
    "continuation_sweep",
    "detect_transitions",
    "effective_view",
    "equilibration_time",
    "find_steady",
    "log_grid",
    "mode_intensity",
    "preset_names",
    "preset_text",
    "rhs_full",
]
