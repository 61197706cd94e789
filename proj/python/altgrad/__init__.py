"""Python access to the altgrad C++ core (bandits, chain oracles, sampling tree)."""

from ._altgrad import (
    SamplingTree,
    bandit_objective,
    biased_fixed_point,
    biased_update_step,
    chain_exact_values,
    chain_policy_gradient,
    entropy,
    estimator_variance,
    kl_series,
    kl_to_softmax,
    max_attractor_stepsize,
    run_bandit,
    run_seed,
    softmax,
    softmax_jacobian,
)

__all__ = [
    "SamplingTree",
    "bandit_objective",
    "biased_fixed_point",
    "biased_update_step",
    "chain_exact_values",
    "chain_policy_gradient",
    "entropy",
    "estimator_variance",
    "kl_series",
    "kl_to_softmax",
    "max_attractor_stepsize",
    "run_bandit",
    "run_seed",
    "softmax",
    "softmax_jacobian",
]
