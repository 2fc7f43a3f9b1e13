"""Decision boundaries and the canonical frame.

A hyperplane ``{x : h.x = a}`` splits the space into a positive and a
negative class.  All clustering is done in a rotated and shifted frame in
which the boundary is ``{0} x R^(N-1)``, so that the first coordinate of a
mapped point is its signed distance to the boundary.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_data, check_point
from .exceptions import InputError


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Boundary ``h.x = a`` with classification rule ``sign(h.x - a)``."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        normal = np.atleast_1d(np.asarray(self.normal, dtype=np.float64))
        if normal.ndim != 1 or normal.size == 0:
            raise InputError("hyperplane normal must be a non-empty vector")
        if not np.all(np.isfinite(normal)) or not np.isfinite(self.offset):
            raise InputError("hyperplane coefficients must be finite")
        if not np.linalg.norm(normal) > 0:
            raise InputError("hyperplane normal must be non-zero")
        object.__setattr__(self, "normal", _frozen(normal))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.shape[0]

    @classmethod
    def first_axis(cls, dim):
        """The boundary ``x_1 = 0`` of the canonical frame."""
        normal = np.zeros(dim)
        normal[0] = 1.0
        return cls(normal, 0.0)

    def signed_distance(self, X):
        X = np.asarray(X, dtype=np.float64)
        return (X @ self.normal - self.offset) / np.linalg.norm(self.normal)

    def to_dict(self):
        return {"normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class CanonicalTransform:
    """Isometry ``x -> Q x - shift`` sending a hyperplane to ``x_1 = 0``."""

    rotation: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen(self.rotation))
        object.__setattr__(self, "shift", _frozen(self.shift))

    @property
    def dim(self):
        return self.shift.shape[0]

    def transform(self, X):
        """Map points (a single vector or rows of a matrix) to the canonical frame."""
        X = np.asarray(X, dtype=np.float64)
        return X @ self.rotation.T - self.shift

    def inverse_transform(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        return (Y + self.shift) @ self.rotation

    def to_dict(self):
        return {"rotation": self.rotation.tolist(), "shift": self.shift.tolist()}


def classify(hp, x):
    """Return ``sign(h.x - a)`` as +1 or -1; points on the boundary get +1."""
    x = check_point(x, hp.dim)
    return 1 if float(hp.normal @ x) - hp.offset >= 0.0 else -1


def classify_rows(hp, X):
    """Vectorised :func:`classify` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != hp.dim:
        raise InputError(f"expected rows of dimension {hp.dim}, got shape {X.shape}")
    return np.where(X @ hp.normal - hp.offset >= 0.0, 1, -1)


def canonicalize(hp):
    """Build the isometry taking ``hp`` to ``{0} x R^(N-1)``.

    The rotation is a Householder reflection sending ``h / |h|`` to the
    first basis vector (the reflection's sign is fixed up on the first
    row), followed by subtracting ``a / |h|`` from the first coordinate.
    """
    if not isinstance(hp, Hyperplane):
        raise InputError("canonicalize expects a Hyperplane")
    norm = np.linalg.norm(hp.normal)
    u = hp.normal / norm
    dim = u.shape[0]
    # reflect along u + s*e1 so that the subtraction never cancels
    s = 1.0 if u[0] >= 0.0 else -1.0
    v = u.copy()
    v[0] += s
    Q = np.eye(dim) - 2.0 * np.outer(v, v) / (v @ v)
    Q[0] *= -s
    shift = np.zeros(dim)
    shift[0] = hp.offset / norm
    return CanonicalTransform(Q, shift)


def embed_discriminant(f_values, threshold, X):
    """Prepend ``f(x) - threshold`` as a new first coordinate.

    Returns the extended data and the hyperplane ``x_1 = 0`` in the
    extended space, whose classification equals ``sign(f(x) - threshold)``.
    """
    X = check_data(X)
    f = np.asarray(f_values, dtype=np.float64).ravel()
    if f.shape[0] != X.shape[0]:
        raise InputError(
            f"discriminant has {f.shape[0]} values but data has {X.shape[0]} rows")
    if not np.all(np.isfinite(f)) or not np.isfinite(threshold):
        raise InputError("discriminant values and threshold must be finite")
    Z = np.column_stack([f - float(threshold), X])
    return Z, Hyperplane.first_axis(Z.shape[1])
