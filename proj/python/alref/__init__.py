"""Active label refinement for semantic segmentation."""

from ._alref import (
    BoundsError,
    ConfigError,
    DimensionError,
    DomainError,
    Error,
    FormatError,
    IoError,
    ProtocolError,
    TransportError,
    __version__,
    entropy,
    fit_predict,
    generate_pool,
    noise_rate,
    run_experiment,
    select_top_k,
    simulate_coarse,
    utility_cs,
    utility_us,
)

__all__ = [
    "BoundsError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "Error",
    "FormatError",
    "IoError",
    "ProtocolError",
    "TransportError",
    "__version__",
    "entropy",
    "fit_predict",
    "generate_pool",
    "noise_rate",
    "run_experiment",
    "select_top_k",
    "simulate_coarse",
    "utility_cs",
    "utility_us",
]
