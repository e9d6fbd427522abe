"""Finitely nested interactive POMDPs: particle filtering and planning on sample sets."""

__version__ = "0.1.0"

from . import analysis, domains, filters, model, planner, priors
from .domains import UavConfig, build_mm, build_tiger, build_tiger_growl_only, build_uav, dump_domain, get_domain, load_domain
from .filters import GridBelief, bootstrap_filter, grid_update_level1, ipf_step, ipf_step_sampled_obs, level0_update
from .model import (
    Domain,
    Frame,
    NestedPrior,
    ParticleSet,
    normalize_weights,
    resample_unbiased,
    sample_initial_particles,
    validate_domain,
)
from .planner import (
    PolicyNode,
    RtsConfig,
    approx_policy,
    grid_plan_level1,
    observation_likelihood,
    sample_observation_set,
    solve_level0_policy,
)
from .priors import get_prior

__all__ = [
    "analysis", "domains", "filters", "model", "planner", "priors",
    "UavConfig", "build_mm", "build_tiger", "build_tiger_growl_only", "build_uav",
    "dump_domain", "get_domain", "load_domain",
    "GridBelief", "bootstrap_filter", "grid_update_level1", "ipf_step", "ipf_step_sampled_obs", "level0_update",
    "Domain", "Frame", "NestedPrior", "ParticleSet", "normalize_weights", "resample_unbiased",
    "sample_initial_particles", "validate_domain",
    "PolicyNode", "RtsConfig", "approx_policy", "grid_plan_level1", "observation_likelihood",
    "sample_observation_set", "solve_level0_policy",
    "get_prior",
]
