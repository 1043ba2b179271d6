"""Microstructural price-impact toolkit.

Simulates the finite-activity market and its diffusion limit, solves for
stationary and transient densities of the fundamental price modulo one,
computes expected price-impact and resilience curves, and estimates the
stationary density from limit-order-book trade events.
"""

from .params import (
    AssumptionReport,
    CdfSpec,
    ModelParams,
    SigmaSpec,
    beta_minus,
    beta_plus,
    load_params,
    mu0_hat,
    mu1_hat,
    mu_bar0,
    mu_bar1,
    sigma_bar,
    sigma_hat,
    validate_assumptions,
)

__version__ = "0.1.0"
