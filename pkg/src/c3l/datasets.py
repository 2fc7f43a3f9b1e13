"""Seeded synthetic data sets used by the tests, the acceptance suite and the README."""

import numpy as np


def make_boundary_blobs(centers, n_per_blob=200, scale=1.0, seed=0):
    """Axis-aligned Gaussian blobs; the boundary is ``x_1 = 0``.

    Parameters
    ----------
    centers : array_like, shape (n_blobs, n_features)
    n_per_blob : int
    scale : float or array_like
        Per-feature standard deviation, shared by all blobs or one row per blob.
    seed : int

    Returns
    -------
    X : ndarray, shape (n_blobs * n_per_blob, n_features)
    y : ndarray of blob indices
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), centers.shape)
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, s, size=(n_per_blob, centers.shape[1]))
                   for c, s in zip(centers, scale)])
    y = np.repeat(np.arange(centers.shape[0]), n_per_blob)
    return X, y


def two_separated_blobs(seed=0, n_per_blob=150):
    return make_boundary_blobs([[-3.0, 0.0], [3.0, 0.0]], n_per_blob, 1.0, seed)


def two_crossing_blobs(seed=0, n_per_blob=200):
    """Blobs at ``x_1 = -1.5`` and ``x_1 = 1.5``; a few percent of each crosses the boundary."""
    return make_boundary_blobs([[-1.5, 0.0], [1.5, 0.0]], n_per_blob, 1.0, seed)


def straddling_blob(seed=0, n_per_blob=200):
    """One wide blob centred on the boundary plus one well-separated blob per side."""
    return make_boundary_blobs([[0.0, 0.0], [5.0, 4.0], [-5.0, -4.0]], n_per_blob,
                               [[1.5, 1.0], [1.0, 1.0], [1.0, 1.0]], seed)


def three_blobs(seed=0, n_per_blob=150):
    """Three separated blobs in 3-D, none touching the boundary."""
    return make_boundary_blobs([[-6.0, 0.0, 0.0], [6.0, 4.0, 0.0], [6.0, -4.0, 3.0]],
                               n_per_blob, 1.0, seed)
