"""Emergency-department triage benchmark toolkit.

Builds a visit-level master dataset from nine linked ED/hospital CSV
tables, derives clinical early-warning scores and machine-learning
baselines for outcome prediction, and evaluates everything with
bootstrap confidence intervals. A synthetic data generator with planted,
recoverable outcomes supports end-to-end testing without access to
restricted clinical data.
"""

__version__ = "0.1.0"

from . import errors

__all__ = ["errors", "__version__"]
