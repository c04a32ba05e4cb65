"""Enumeration caps for the exhaustive operations.

Every exhaustive checker takes an optional ``cap`` argument; ``None`` means
"use the default below". The ``EFX_LAB_MAX_M`` environment variable, when
set, overrides every good-count cap at once (useful for scripted runs).
"""

import os

MONOTONE_CAP = 20  # is_monotone / is_non_degenerate: 2**m subsets
MMS_CAP = 12  # is_mms_feasible / is_nice_cancelable: ~3**m..4**m pairs
ENUMERATE_EFX_CAP = 8  # oracle: 3**m allocations
RAINBOW_BRUTE_CAP = 40  # oracle DFS: k * d


def resolve_m_cap(cap, default: int) -> int:
    """Effective good-count cap: explicit argument, else env override, else default."""
    if cap is not None:
        return cap
    env = os.environ.get("EFX_LAB_MAX_M")
    if env is not None:
        return int(env)
    return default
