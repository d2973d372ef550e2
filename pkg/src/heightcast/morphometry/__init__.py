from .features import MorphometryConfig
from .manifest import FeatureManifest, FeatureMatrix, assemble_matrix

__all__ = ["FeatureManifest", "FeatureMatrix", "MorphometryConfig", "assemble_matrix"]
