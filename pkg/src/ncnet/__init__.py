"""Capacity bounds and simulation tools for noncoherent multi-cell random access."""

from .bounds import (
    NetworkConfig,
    corollary1_upper_bound,
    min_LP,
    theorem1_upper_bound,
    theorem2_lower_bound,
)
from .fading import double_exponential_profile, empirical_profile, exponential_profile
from .mapping import ActivityPattern, forward_map, inverse_map

__all__ = [
    "ActivityPattern",
    "NetworkConfig",
    "corollary1_upper_bound",
    "double_exponential_profile",
    "empirical_profile",
    "exponential_profile",
    "forward_map",
    "inverse_map",
    "min_LP",
    "theorem1_upper_bound",
    "theorem2_lower_bound",
]
