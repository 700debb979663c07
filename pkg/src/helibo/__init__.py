"""Closed-loop Bayesian augmentation search for vision-guided VTOL landing."""

__version__ = "0.1.0"
