"""Python interface to the VANET topology simulator."""

from ._vanet import (
    Algorithm,
    ConfigError,
    ConstraintViolation,
    ExperimentConfig,
    FieldError,
    InvalidPathError,
    LinkLimits,
    LinkStrategy,
    LookupError,
    NetworkSnapshot,
    OrderingError,
    ParseError,
    PlacementError,
    RsuNode,
    ShapeError,
    SolverParams,
    VanetError,
    VehicleState,
    build_scenario,
    compare,
    complexity,
    config_keys,
    link_adaptability,
    load_config,
    parse_config,
    parse_trace,
    predict_link_lifetime,
    run_experiment,
    runnable_steps,
    select_mode,
    write_csv_trace,
)

__all__ = [name for name in dir() if not name.startswith("_")]
