"""Small input validation helpers built on top of sklearn's ``check_array``."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InputError


def check_data(X, *, min_rows=1):
    """Return ``X`` as a finite 2-D float64 array or raise :class:`InputError`."""
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True,
                        ensure_min_samples=min_rows, copy=False)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return X


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def check_point(x, dim):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != dim:
        raise InputError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x
