"""Momentum-target actor-critic training with leader-follower control tasks."""

__version__ = "0.1.0"
