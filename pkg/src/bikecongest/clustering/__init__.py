from .classify import (
    ClusterAssignment,
    CongestedSpotClassifier,
    CrowdingLabel,
    classify,
    name_clusters,
    rank_clusters,
)
from .features import (
    DEFAULT_POI_CATEGORIES,
    FEATURE_NAMES,
    FeatureSet,
    SpotFeatures,
    build_features,
    poi_index,
    standardize,
)
from .gmm import GaussianMixture, gmm_fit
from .kmeans import KMeans, kmeans_fit
from .metrics import elbow_curve, elbow_select, pick_elbow, silhouette, silhouette_samples

__all__ = [
    "ClusterAssignment",
    "CongestedSpotClassifier",
    "CrowdingLabel",
    "DEFAULT_POI_CATEGORIES",
    "FEATURE_NAMES",
    "FeatureSet",
    "GaussianMixture",
    "KMeans",
    "SpotFeatures",
    "build_features",
    "classify",
    "elbow_curve",
    "elbow_select",
    "gmm_fit",
    "kmeans_fit",
    "name_clusters",
    "pick_elbow",
    "poi_index",
    "rank_clusters",
    "silhouette",
    "silhouette_samples",
    "standardize",
]
