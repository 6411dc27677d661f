"""Python bindings for the antico simulator.

Settings are passed as a dict of config keys, e.g. ``{"scenario": "CVR", "group_size": 3}``.
"""

try:
    from ._antico import *  # noqa: F401,F403  (installed wheel)
    from ._antico import ConfigError
except ImportError:  # in-tree build: module sits next to the package
    from _antico import *  # noqa: F401,F403
    from _antico import ConfigError

__all__ = [
    "ConfigError",
    "min_honesty_deposit",
    "conservative_honesty_deposit",
    "defection_dominates",
    "equilibria",
    "keygen",
    "ring_sign",
    "ring_verify",
    "linked",
    "config_keys",
    "config",
    "run_episode",
    "run_replicas",
    "sweep",
    "ablate",
    "audit",
]
