"""Bilateral multi-issue negotiation framework.

Alternating-offers protocol engine, linear additive utility domains, a tactic
library with scripted baselines, phased strategy templates whose parameters
are produced by DDPG learners, an NSGA-II/TOPSIS bid generator, a frequency
opponent model, supervised pre-training, and a tournament harness.
"""

__version__ = "0.1.0"

from .domain import (
    Bid,
    Domain,
    Issue,
    PreferenceProfile,
    Scenario,
    discounted_utility,
    generate_scenario,
    opposition,
    pareto_frontier,
    parse_domain,
    parse_profile,
    utility,
)

__all__ = [
    "Bid",
    "Domain",
    "Issue",
    "PreferenceProfile",
    "Scenario",
    "discounted_utility",
    "generate_scenario",
    "opposition",
    "pareto_frontier",
    "parse_domain",
    "parse_profile",
    "utility",
    "__version__",
]
