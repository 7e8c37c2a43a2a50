"""Congested-spot classification.

The elbow rule picks k. K-means and a GMM are both fit at that k and the one
with the higher silhouette wins; clusters are then named by mean congestion.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ..validation import check_seed
from .features import FEATURE_NAMES
from .gmm import GaussianMixture
from .kmeans import KMeans
from .metrics import elbow_curve, pick_elbow, silhouette, silhouette_samples


class CrowdingLabel(str, Enum):
    OVER = "Over-crowded"
    SEMI = "Semi-crowded"
    LIGHT = "Light-crowded"


RANKED_LABELS = (CrowdingLabel.OVER, CrowdingLabel.SEMI, CrowdingLabel.LIGHT)


def rank_clusters(labels, mean_congestion):
    """Map cluster id -> rank (0 = highest mean congestion).

    Equal means fall back to the cluster's first member row, which keeps the
    ranking independent of how cluster ids happen to be numbered.
    """
    labels = np.asarray(labels)
    mean_congestion = np.asarray(mean_congestion, dtype=float)
    keys = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        keys.append((-float(np.mean(mean_congestion[members])), int(members[0]), int(c)))
    return {c: rank for rank, (_, _, c) in enumerate(sorted(keys))}


def name_clusters(labels, mean_congestion):
    """Per-point label names; Over/Semi/Light when there are exactly three
    clusters, otherwise ``"cluster-<rank>"``."""
    ranks = rank_clusters(labels, mean_congestion)
    if len(ranks) == 3:
        return [RANKED_LABELS[ranks[c]].value for c in labels]
    return [f"cluster-{ranks[c]}" for c in labels]


def _safe_silhouette(X, labels):
    if X.shape[1] == 0 or len(np.unique(labels)) < 2 or len(np.unique(labels)) >= X.shape[0]:
        return None
    return silhouette(X, labels)


class CongestedSpotClassifier(ClusterMixin, BaseEstimator):
    """Cluster standardized spot features and rank clusters by congestion.

    Parameters
    ----------
    k_range : tuple (k_min, k_max)
        Inclusive range scanned by the elbow rule.
    n_clusters : int or None
        Skip the elbow scan and use this k.
    random_state : int
    n_init : int
        K-means restarts for every fit.
    threads : int
        Parallel K-means fits across k; results do not depend on it.

    Attributes
    ----------
    k_, labels_, label_names_, chosen_model_, silhouette_, sample_silhouettes_,
    cluster_ranks_, inertia_by_k_, silhouette_by_k_, kmeans_, gmm_
    """

    def __init__(self, k_range=(2, 10), n_clusters=None, random_state=0, n_init=10,
                 reg_eps=1e-6, threads=1):
        self.k_range = k_range
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.n_init = n_init
        self.reg_eps = reg_eps
        self.threads = threads

    def fit(self, X, y=None, mean_congestion=None):
        """``mean_congestion`` (raw, unstandardized) orders the clusters;
        defaults to the first column of ``X``."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        seed = check_seed(self.random_state)
        if mean_congestion is None:
            mean_congestion = X[:, 0] if X.ndim == 2 and X.shape[1] else np.zeros(n)

        self.inertia_by_k_ = {}
        self.silhouette_by_k_ = {}
        self.kmeans_ = self.gmm_ = None
        self.silhouette_kmeans_ = self.silhouette_gmm_ = None
        k_lo, k_hi = self.k_range
        scan = [k for k in range(k_lo, k_hi + 1) if k < n]

        if n == 0:
            labels = np.zeros(0, dtype=int)
            self.k_, self.chosen_model_ = 0, None
        elif X.shape[1] == 0 or (not scan and self.n_clusters is None):
            labels = np.zeros(n, dtype=int)
            self.k_, self.chosen_model_ = 1, "KMeans"
        else:
            if scan:
                models = elbow_curve(X, scan, seed=seed, n_init=self.n_init, threads=self.threads)
                for k in scan:
                    self.inertia_by_k_[k] = models[k].inertia_
                    self.silhouette_by_k_[k] = _safe_silhouette(X, models[k].labels_)
            k = self.n_clusters or pick_elbow(scan, [self.inertia_by_k_[k] for k in scan])
            k = min(int(k), n)
            self.kmeans_ = KMeans(k, random_state=seed, n_init=self.n_init).fit(X)
            self.gmm_ = GaussianMixture(
                k, random_state=seed, reg_eps=self.reg_eps, kmeans_n_init=self.n_init
            ).fit(X)
            self.silhouette_kmeans_ = _safe_silhouette(X, self.kmeans_.labels_)
            self.silhouette_gmm_ = _safe_silhouette(X, self.gmm_.labels_)
            km_s = -np.inf if self.silhouette_kmeans_ is None else self.silhouette_kmeans_
            gm_s = -np.inf if self.silhouette_gmm_ is None else self.silhouette_gmm_
            if gm_s > km_s:
                labels, self.chosen_model_ = self.gmm_.labels_, "GMM"
            else:
                labels, self.chosen_model_ = self.kmeans_.labels_, "KMeans"
            self.k_ = k

        labels = np.asarray(labels, dtype=int)
        self.labels_ = labels
        self.silhouette_ = _safe_silhouette(X, labels) if n else None
        if self.silhouette_ is not None:
            self.sample_silhouettes_ = silhouette_samples(X, labels)
        else:
            self.sample_silhouettes_ = np.zeros(n)
        self.cluster_ranks_ = rank_clusters(labels, mean_congestion) if n else {}
        self.label_names_ = name_clusters(labels, mean_congestion) if n else []
        return self


@dataclass(frozen=True)
class ClusterAssignment:
    fence_id: str
    cluster: int
    label: str
    chosen_model: str
    silhouette: float
    point_silhouette: float


def classify(features, seed=0, k_range=(2, 10), n_clusters=None, n_init=10, reg_eps=1e-6,
             threads=1, silhouette_raw=False):
    """Classify a :class:`~bikecongest.clustering.features.FeatureSet`.

    Returns ``(assignments, report)`` where ``report`` is JSON-ready.
    """
    clf = CongestedSpotClassifier(
        k_range=k_range, n_clusters=n_clusters, random_state=seed, n_init=n_init,
        reg_eps=reg_eps, threads=threads,
    )
    mean_c = features.raw[:, 0] if len(features.spots) else np.zeros(0)
    clf.fit(features.X, mean_congestion=mean_c)

    overall = clf.silhouette_ if clf.silhouette_ is not None else 0.0
    assignments = [
        ClusterAssignment(
            fence_id=spot.fence_id,
            cluster=int(clf.cluster_ranks_[int(c)]),
            label=name,
            chosen_model=clf.chosen_model_,
            silhouette=overall,
            point_silhouette=float(s),
        )
        for spot, c, name, s in zip(
            features.spots, clf.labels_, clf.label_names_, clf.sample_silhouettes_
        )
    ]

    n = len(assignments)
    clusters = []
    for rank in sorted(set(clf.cluster_ranks_.values())):
        members = [i for i, a in enumerate(assignments) if a.cluster == rank]
        clusters.append(
            {
                "cluster": rank,
                "label": assignments[members[0]].label,
                "count": len(members),
                "share": len(members) / n,
                "feature_means": {
                    name: float(features.raw[members, j].mean())
                    for j, name in enumerate(FEATURE_NAMES)
                },
            }
        )
    report = {
        "n_spots": n,
        "seed": seed,
        "k_range": list(k_range),
        "k_selected": clf.k_,
        "k_forced": n_clusters,
        "inertia_by_k": {str(k): v for k, v in clf.inertia_by_k_.items()},
        "silhouette_by_k": {str(k): v for k, v in clf.silhouette_by_k_.items()},
        "silhouette_kmeans": clf.silhouette_kmeans_,
        "silhouette_gmm": clf.silhouette_gmm_,
        "gmm_log_likelihood": clf.gmm_.log_likelihood_ if clf.gmm_ is not None else None,
        "chosen_model": clf.chosen_model_,
        "silhouette": clf.silhouette_,
        "features_used": list(features.columns),
        "features_dropped": list(features.dropped),
        "clusters": clusters,
    }
    if silhouette_raw:
        report["silhouette_raw"] = _safe_silhouette(features.raw, clf.labels_) if n else None
    return assignments, report
