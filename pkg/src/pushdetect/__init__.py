"""Microscopic pushing-behavior detection for top-view crowd recordings.

Builds per-person local regions from trajectories via bounded Voronoi
diagrams, prepares labeled crop datasets, scores them with a pluggable
classifier, tunes the decision threshold for class imbalance, and
evaluates with imbalance-aware metrics.
"""

__version__ = "0.1.0"

from .errors import PushDetectError

__all__ = ["PushDetectError", "__version__"]
