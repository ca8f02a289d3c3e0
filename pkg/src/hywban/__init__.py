"""Semantic-concept classification and friendly-jamming simulation for hybrid radio/optical body-area links."""
from .features import BinaryFeatures, FeatureVector, SemanticLabel, Thresholds, ValidationError

__version__ = "0.1.0"

__all__ = ["BinaryFeatures", "FeatureVector", "SemanticLabel", "Thresholds", "ValidationError", "__version__"]
