"""Design sizing and quasi-static traversal simulation for a three-module,
track-driven in-pipe climbing robot."""

__version__ = "0.1.0"
