"""Full-covariance Gaussian mixture fitted by expectation-maximization."""

import numpy as np
from scipy import linalg
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ..errors import InvariantViolation, SingularCovariance
from ..validation import check_features, check_n_clusters
from .kmeans import KMeans

_LOG_2PI = np.log(2.0 * np.pi)


def _floor_eigenvalues(cov, floor):
    # maximizer of the Gaussian likelihood subject to eigenvalues >= floor
    cov = (cov + cov.T) / 2.0
    w, v = linalg.eigh(cov)
    w = np.maximum(w, floor)
    out = (v * w) @ v.T
    return (out + out.T) / 2.0


def gaussian_log_density(X, mean, cov):
    try:
        chol = linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovariance("covariance is not positive definite") from exc
    z = linalg.solve_triangular(chol, (X - mean).T, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (X.shape[1] * _LOG_2PI + log_det + np.sum(z * z, axis=0))


def _estimate_log_prob(X, weights, means, covariances):
    return np.column_stack(
        [np.log(w) + gaussian_log_density(X, m, c) for w, m, c in zip(weights, means, covariances)]
    )


def _e_step(X, weights, means, covariances):
    log_prob = _estimate_log_prob(X, weights, means, covariances)
    log_norm = logsumexp(log_prob, axis=1)
    return log_prob - log_norm[:, None], float(np.sum(log_norm))


def _m_step(X, resp, reg_eps):
    nk = resp.sum(axis=0) + 10 * np.finfo(float).eps
    weights = nk / nk.sum()
    means = (resp.T @ X) / nk[:, None]
    covariances = np.empty((len(nk), X.shape[1], X.shape[1]))
    for k in range(len(nk)):
        diff = X - means[k]
        cov = (resp[:, k, None] * diff).T @ diff / nk[k]
        covariances[k] = _floor_eigenvalues(cov, reg_eps)
    return weights, means, covariances


def _init_from_kmeans(X, km, reg_eps):
    k = km.cluster_centers_.shape[0]
    n, d = X.shape
    counts = np.bincount(km.labels_, minlength=k).astype(float)
    means = km.cluster_centers_.copy()
    covariances = np.empty((k, d, d))
    pooled = np.cov(X, rowvar=False, bias=True).reshape(d, d)
    for j in range(k):
        members = X[km.labels_ == j]
        if len(members):
            diff = members - means[j]
            cov = diff.T @ diff / len(members)
        else:
            cov = pooled
        covariances[j] = cov + reg_eps * np.eye(d)
    counts = np.where(counts > 0, counts, 1.0)
    return counts / counts.sum(), means, covariances


class GaussianMixture(ClusterMixin, BaseEstimator):
    """Gaussian mixture with full covariances, seeded from K-means.

    Covariance eigenvalues are floored at ``reg_eps`` in every M-step, which
    keeps each update a constrained likelihood maximizer, so the training
    log-likelihood is nondecreasing from one iteration to the next. A decrease
    beyond rounding raises :class:`InvariantViolation`.

    Attributes
    ----------
    weights_, means_, covariances_
    responsibilities_ : ndarray (n_samples, n_components)
    log_likelihood_ : float
    log_likelihood_history_ : list of float
    labels_, n_iter_, converged_
    """

    def __init__(self, n_components=3, random_state=0, max_iter=200, tol=1e-6,
                 reg_eps=1e-6, kmeans_n_init=1):
        self.n_components = n_components
        self.random_state = random_state
        self.max_iter = max_iter
        self.tol = tol
        self.reg_eps = reg_eps
        self.kmeans_n_init = kmeans_n_init

    def fit(self, X, y=None):
        X = check_features(X)
        k = check_n_clusters(self.n_components, X.shape[0])
        km = KMeans(k, random_state=self.random_state, n_init=self.kmeans_n_init).fit(X)
        weights, means, covariances = _init_from_kmeans(X, km, self.reg_eps)

        history = []
        converged = False
        n_iter = 0
        log_resp = None
        for n_iter in range(1, self.max_iter + 1):
            log_resp, ll = _e_step(X, weights, means, covariances)
            if history:
                prev = history[-1]
                if ll < prev - 1e-10 * max(1.0, abs(prev)):
                    raise InvariantViolation(
                        f"EM log-likelihood decreased: {prev!r} -> {ll!r}"
                    )
                history.append(ll)
                if ll - prev < self.tol * max(abs(prev), np.finfo(float).tiny):
                    converged = True
                    break
            else:
                history.append(ll)
            weights, means, covariances = _m_step(X, np.exp(log_resp), self.reg_eps)
        if not converged:
            log_resp, ll = _e_step(X, weights, means, covariances)
            history.append(ll)

        self.weights_ = weights
        self.means_ = means
        self.covariances_ = covariances
        self.responsibilities_ = np.exp(log_resp)
        self.log_likelihood_ = history[-1]
        self.log_likelihood_history_ = history
        self.labels_ = np.argmax(log_resp, axis=1)
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "means_")
        log_resp, _ = _e_step(check_features(X), self.weights_, self.means_, self.covariances_)
        return np.exp(log_resp)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y=None):
        """Total log-likelihood of ``X``."""
        check_is_fitted(self, "means_")
        return _e_step(check_features(X), self.weights_, self.means_, self.covariances_)[1]


def gmm_fit(X, k, seed=0, max_iter=200, tol=1e-6, reg_eps=1e-6):
    return GaussianMixture(k, random_state=seed, max_iter=max_iter, tol=tol, reg_eps=reg_eps).fit(X)
