"""Stochastic Ginzburg-Landau simulator and finite-state Doeblin toolkit."""

from ._core import (
    BlowUpError,
    ConfigError,
    apply_semigroup,
    bernoulli_solution,
    eigenvalue,
    eval_polynomial,
    fit_rate,
    geometric_bound_check,
    invariant_measure,
    minorization,
    moments,
    norm_gamma,
    ode_comparison,
    scaled_random_field,
    simulate,
    spectrum_violation,
    sup_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
