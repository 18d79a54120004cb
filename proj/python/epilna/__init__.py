"""Stochastic epidemic inference with linear noise approximations."""

from ._epilna import (
    ConfigError,
    InvalidInput,
    Model,
    NumericalFailure,
    ObsParams,
    Params,
    corrupt,
    fit,
    forward_filter,
    make_model,
    ode_loglik,
    pf_loglik,
    preset_path,
    r0,
    simulate,
    transition_moments,
)

__all__ = [
    "ConfigError",
    "InvalidInput",
    "Model",
    "NumericalFailure",
    "ObsParams",
    "Params",
    "corrupt",
    "fit",
    "forward_filter",
    "make_model",
    "ode_loglik",
    "pf_loglik",
    "preset_path",
    "r0",
    "simulate",
    "transition_moments",
]
