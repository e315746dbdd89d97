"""Bayesian synthetic likelihood with robust mean and variance adjustments."""

from ._rbsl import (
    ConfigError,
    estimate_moments,
    gamma_prior_divergence,
    gaussian_logpdf,
    ks_two_sample,
    read_trace,
    run_chain,
    run_experiment,
    simulate_summaries,
    synthetic_loglike,
    validate_config,
)

__all__ = [
    "ConfigError",
    "estimate_moments",
    "gamma_prior_divergence",
    "gaussian_logpdf",
    "ks_two_sample",
    "read_trace",
    "run_chain",
    "run_experiment",
    "simulate_summaries",
    "synthetic_loglike",
    "validate_config",
]
