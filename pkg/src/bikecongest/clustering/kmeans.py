"""Lloyd's K-means with k-means++ seeding."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ..errors import InvariantViolation
from ..validation import check_features, check_n_clusters, check_seed


def squared_distances(X, centers):
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def inertia(X, labels, centers):
    """Within-cluster sum of squared distances to the assigned centers."""
    diff = X - centers[labels]
    return float(np.sum(np.einsum("nd,nd->n", diff, diff)))


def kmeans_plusplus(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = squared_distances(X, X[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, squared_distances(X, X[[idx]])[:, 0])
    return X[chosen].copy()


def _repair_empty(X, labels, centers, k):
    """Give every empty cluster the point farthest from its own center."""
    labels = labels.copy()
    for j in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[j]:
            continue
        d2 = np.einsum("nd,nd->n", X - centers[labels], X - centers[labels])
        d2[counts[labels] < 2] = -1.0
        labels[int(np.argmax(d2))] = j
    return labels


def _centers_of(X, labels, k):
    centers = np.empty((k, X.shape[1]))
    for j in range(k):
        centers[j] = X[labels == j].mean(axis=0)
    return centers


def _lloyd(X, k, rng, max_iter, tol):
    centers = kmeans_plusplus(X, k, rng)
    labels = np.argmin(squared_distances(X, centers), axis=1)
    history = [inertia(X, labels, centers)]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels = _repair_empty(X, labels, centers, k)
        new_centers = _centers_of(X, labels, k)
        history.append(inertia(X, labels, new_centers))
        shift = float(np.sqrt(np.sum((new_centers - centers) ** 2)))
        centers = new_centers
        new_labels = np.argmin(squared_distances(X, centers), axis=1)
        converged = shift < tol or np.array_equal(new_labels, labels)
        labels = new_labels
        if converged:
            break
    final = inertia(X, labels, centers)
    history.append(final)
    return centers, labels, final, history, n_iter


class KMeans(ClusterMixin, BaseEstimator):
    """K-means minimizing within-cluster sum of squares.

    Parameters
    ----------
    n_clusters : int
    random_state : int
        Seed for the k-means++ draws; equal seeds give identical fits.
    max_iter : int
    tol : float
        Stop once the centers move less than this (Frobenius norm).
    n_init : int
        Independent restarts; the lowest inertia wins, earliest on ties.

    Attributes
    ----------
    cluster_centers_, labels_, inertia_, n_iter_
    inertia_history_ : list of float
        Objective after seeding and after every update step, ending with the
        final assignment. Never increases.
    """

    def __init__(self, n_clusters=3, random_state=0, max_iter=300, tol=1e-6, n_init=1):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init

    def fit(self, X, y=None):
        X = check_features(X)
        k = check_n_clusters(self.n_clusters, X.shape[0])
        rng = np.random.default_rng(check_seed(self.random_state))
        best = None
        for _ in range(max(1, self.n_init)):
            run = _lloyd(X, k, rng, self.max_iter, self.tol)
            if best is None or run[2] < best[2]:
                best = run
        centers, labels, final, history, n_iter = best
        if any(b > a + 1e-12 * abs(a) for a, b in zip(history, history[1:])):
            raise InvariantViolation("k-means objective increased between iterations")
        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = final
        self.inertia_history_ = history
        self.n_iter_ = n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_features(X)
        return np.argmin(squared_distances(X, self.cluster_centers_), axis=1)


def kmeans_fit(X, k, seed=0, max_iter=300, tol=1e-6, n_init=1):
    return KMeans(k, random_state=seed, max_iter=max_iter, tol=tol, n_init=n_init).fit(X)
