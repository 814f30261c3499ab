"""Generalized Laguerre polynomials and log-factorials.

Everything in the package that needs :math:`L_k^\\alpha(x)` or a factorial
normalization goes through this module.  Laguerre values come from the
forward three-term recurrence

.. math::

    m L_m^\\alpha(x) = (2m - 1 + \\alpha - x) L_{m-1}^\\alpha(x)
                      - (m - 1 + \\alpha) L_{m-2}^\\alpha(x),

which, unlike the alternating power series, does not lose digits for large x.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import CapabilityError, DomainError

MAX_DEGREE = 512


def _check_index(name: str, value: int) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise DomainError(f"{name} must be nonnegative, got {value}")
    return value


def laguerre(k: int, alpha: int, x: float, max_degree: int = MAX_DEGREE) -> float:
    """Evaluate the generalized Laguerre polynomial ``L_k^alpha(x)``.

    Parameters
    ----------
    k : int
        Polynomial degree, ``0 <= k <= max_degree``.
    alpha : int
        Upper index, ``0 <= alpha <= max_degree``.
    x : float
        Finite real argument.

    Raises
    ------
    DomainError
        Negative indices or non-finite ``x``.
    CapabilityError
        ``k`` or ``alpha`` beyond ``max_degree``.
    """
    k = _check_index("k", k)
    alpha = _check_index("alpha", alpha)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    if k > max_degree or alpha > max_degree:
        raise CapabilityError(
            f"Laguerre degree/index ({k}, {alpha}) exceeds max_degree={max_degree}"
        )
    prev, cur = 0.0, 1.0
    for m in range(1, k + 1):
        prev, cur = cur, ((2 * m - 1 + alpha - x) * cur - (m - 1 + alpha) * prev) / m
    return cur


def laguerre_table(
    kmax: int, alpha, x, max_degree: int = MAX_DEGREE
) -> np.ndarray:
    """All ``L_m^alpha(x)`` for ``m = 0..kmax``, broadcast over ``alpha`` and ``x``.

    Returns an array of shape ``(kmax + 1,) + broadcast(alpha, x).shape``.
    """
    kmax = _check_index("kmax", kmax)
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(alpha < 0) or np.any(alpha != np.round(alpha)):
        raise DomainError("alpha must be nonnegative integers")
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    if kmax > max_degree or (alpha.size and alpha.max() > max_degree):
        raise CapabilityError(f"Laguerre table exceeds max_degree={max_degree}")
    alpha, x = np.broadcast_arrays(alpha, x)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 1.0 + alpha - x
    for m in range(2, kmax + 1):
        out[m] = ((2 * m - 1 + alpha - x) * out[m - 1] - (m - 1 + alpha) * out[m - 2]) / m
    return out


@lru_cache(maxsize=4096)
def _log_factorial(m: int) -> float:
    # math.log accepts arbitrarily large ints, so this is correctly rounded
    # for every m, not just below 171.
    return math.log(math.factorial(m))


def log_factorial(m: int) -> float:
    """Natural log of ``m!``."""
    m = _check_index("m", m)
    return _log_factorial(m)


def log_factorials(mmax: int) -> np.ndarray:
    """Array ``[ln 0!, ln 1!, ..., ln mmax!]``."""
    mmax = _check_index("mmax", mmax)
    return np.array([_log_factorial(m) for m in range(mmax + 1)])
