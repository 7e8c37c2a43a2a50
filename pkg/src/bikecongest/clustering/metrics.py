"""Silhouette score and elbow selection of the cluster count."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..validation import check_features
from .kmeans import kmeans_fit


def pairwise_distances(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))


def silhouette_samples(X, labels):
    """Per-point silhouette ``(b - a) / max(a, b)``.

    Points in singleton clusters score 0, as do points with ``a == b == 0``.
    """
    X = check_features(X)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise ValueError("silhouette needs at least two distinct labels")
    dist = pairwise_distances(X)
    masks = [labels == c for c in clusters]
    sizes = np.array([m.sum() for m in masks])
    # sums[i, c]: total distance from point i to members of cluster c
    sums = np.column_stack([dist[:, m].sum(axis=1) for m in masks])
    own = np.searchsorted(clusters, labels)
    n = len(labels)
    rows = np.arange(n)
    own_size = sizes[own]
    a = np.where(own_size > 1, sums[rows, own] / np.maximum(own_size - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[rows, own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = (own_size > 1) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return s


def silhouette(X, labels):
    return float(np.mean(silhouette_samples(X, labels)))


def chord_distances(ks, inertias):
    """Perpendicular distance of each ``(k, J_k)`` from the end-to-end chord."""
    ks = np.asarray(ks, dtype=float)
    js = np.asarray(inertias, dtype=float)
    dx, dy = ks[-1] - ks[0], js[-1] - js[0]
    norm = np.hypot(dx, dy)
    if norm == 0:
        return np.zeros_like(ks)
    return np.abs(dx * (js - js[0]) - dy * (ks - ks[0])) / norm


def pick_elbow(ks, inertias, rel_tol=1e-9):
    """k with the largest chord distance; near-ties go to the smaller k."""
    ks = list(ks)
    if len(ks) < 3:
        return ks[0]
    d = chord_distances(ks, inertias)
    scale = np.hypot(ks[-1] - ks[0], inertias[-1] - inertias[0])
    tol = rel_tol * scale
    best = float(d.max())
    if best <= tol:
        return ks[0]
    for k, dist in zip(ks, d):
        if dist >= best - tol:
            return k
    return ks[0]


def elbow_curve(X, k_range=range(2, 11), seed=0, n_init=1, threads=1, max_iter=300, tol=1e-6):
    """``{k: fitted KMeans}`` for every ``k`` in ``k_range`` not above ``len(X)``."""
    X = check_features(X)
    ks = [k for k in k_range if k <= X.shape[0]]

    def fit(k):
        return kmeans_fit(X, k, seed=seed, max_iter=max_iter, tol=tol, n_init=n_init)

    if threads > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(fit, ks))
    else:
        models = [fit(k) for k in ks]
    return dict(zip(ks, models))


def elbow_select(X, k_range=range(2, 11), seed=0, n_init=1, threads=1):
    models = elbow_curve(X, k_range, seed=seed, n_init=n_init, threads=threads)
    if not models:
        raise ValueError("no k in k_range fits the sample count")
    ks = sorted(models)
    return pick_elbow(ks, [models[k].inertia_ for k in ks])
