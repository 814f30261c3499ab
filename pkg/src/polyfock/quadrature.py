"""Integration against the Gaussian probability measure on the plane.

``dmu(z) = (1/pi) exp(-|z|^2) dA(z)`` factorizes in polar coordinates as
``exp(-t) dt * dtheta / (2 pi)`` with ``t = |z|^2``.  A rule is therefore a
radial rule in ``t`` (weights include the ``exp(-t)`` factor and sum to one)
times the uniform trapezoid rule in the angle, which is exact for
trigonometric polynomials of degree below the number of angles.

Two radial families are provided:

* :func:`build_rule` -- Gauss-Laguerre in ``t``.  Exact for polynomial
  integrands ``z^a conj(z)^b``; this is what the Gram and ladder tests use.
* :func:`build_panel_rule` -- composite Gauss-Legendre in ``s = |z|`` with
  panel edges at caller-supplied break radii.  Symbols with kinks or jumps
  on circles (clipped monomials, the angular symbol, annuli, tabulated
  profiles) converge exponentially on it instead of algebraically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_laguerre, roots_legendre

from .errors import AccuracyError, DomainError, NumericError

__all__ = [
    "QuadratureRule",
    "build_rule",
    "build_panel_rule",
    "default_rule",
    "integrate",
    "integrate_nu",
    "integrate_shifted",
    "radial_panel_nodes",
    "panel_extent",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Product rule for ``mu``: radial nodes ``t_i = |z|^2`` times uniform angles.

    ``max_exact_degree`` is the total degree ``a + b`` up to which
    ``z^a conj(z)^b`` is integrated exactly (``None`` for panel rules, which are
    exact only to rounding once converged).
    """

    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angular_count: int
    max_exact_degree: int | None
    log_weights: np.ndarray = field(repr=False, default=None)
    kind: str = "gauss-laguerre"

    def __post_init__(self):
        t = np.asarray(self.radial_nodes, dtype=float)
        w = np.asarray(self.radial_weights, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or t.size == 0:
            raise DomainError("radial nodes and weights must be matching 1-D arrays")
        if np.any(np.diff(t) <= 0) or t[0] <= 0:
            raise DomainError("radial nodes must be positive and strictly increasing")
        if np.any(w < 0):
            raise DomainError("radial weights must be nonnegative")
        if self.angular_count < 1:
            raise DomainError("angular_count must be positive")
        lw = self.log_weights
        if lw is None:
            with np.errstate(divide="ignore"):
                lw = np.log(w)
        object.__setattr__(self, "radial_nodes", t)
        object.__setattr__(self, "radial_weights", w)
        object.__setattr__(self, "log_weights", np.asarray(lw, dtype=float))
        for arr in (self.radial_nodes, self.radial_weights, self.log_weights):
            arr.setflags(write=False)

    @property
    def radial_count(self) -> int:
        return self.radial_nodes.size

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(self.radial_nodes)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.angular_count) / self.angular_count

    def nodes(self) -> np.ndarray:
        """Complex nodes, shape ``(radial_count, angular_count)``."""
        return self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    def weights2d(self) -> np.ndarray:
        """Weights matching :meth:`nodes`; they sum to one."""
        return np.repeat(self.radial_weights[:, None] / self.angular_count,
                         self.angular_count, axis=1)

    def with_angular_count(self, angular_count: int) -> "QuadratureRule":
        return QuadratureRule(self.radial_nodes, self.radial_weights, angular_count,
                              self.max_exact_degree, self.log_weights, self.kind)

    def describe(self) -> dict:
        return {"kind": self.kind, "radial_count": self.radial_count,
                "angular_count": self.angular_count,
                "max_exact_degree": self.max_exact_degree}


def build_rule(radial_count: int, angular_count: int) -> QuadratureRule:
    """Gauss-Laguerre rule in ``t = |z|^2`` with ``angular_count`` uniform angles.

    Integrates ``z^a conj(z)^b`` exactly (to rounding) whenever
    ``a + b <= 2 * radial_count - 1`` and ``|a - b| < angular_count``.
    """
    if int(radial_count) < 1 or int(angular_count) < 1:
        raise DomainError("radial_count and angular_count must be positive")
    radial_count, angular_count = int(radial_count), int(angular_count)
    t, w = roots_laguerre(radial_count)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
        raise NumericError(f"Gauss-Laguerre solver failed for n={radial_count}")
    mass = w.sum()
    if abs(mass - 1.0) > 1e-12:
        raise NumericError(
            f"Gauss-Laguerre weights for n={radial_count} sum to {mass!r}, not 1"
        )
    return QuadratureRule(t, w, angular_count, 2 * radial_count - 1)


def default_rule(levels: int, degrees: int) -> QuadratureRule:
    """Rule exact for every Gram integrand of ``levels x degrees`` basis functions."""
    return build_rule(levels + degrees + 8, 2 * (levels + degrees) + 9)


def panel_extent(degree: int, drop: float = 80.0) -> float:
    """Radius beyond which ``s^degree exp(-s^2)`` is ``exp(-drop)`` below its peak."""
    degree = max(int(degree), 0)
    peak = math.sqrt(degree / 2.0)

    def logf(s):
        return (degree * math.log(s) if degree else 0.0) - s * s

    top = logf(peak) if degree else 0.0
    lo, hi = max(peak, 1e-3), max(peak, 1.0) + 1.0
    while logf(hi) > top - drop:
        hi *= 1.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if logf(mid) > top - drop:
            lo = mid
        else:
            hi = mid
    return hi


def radial_panel_nodes(
    a: float, b: float, breaks: Sequence[float] = (), width: float = 0.5, order: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on ``[a, b]`` honoring ``breaks``."""
    if not b > a:
        raise DomainError(f"empty interval [{a}, {b}]")
    count = max(1, int(math.ceil((b - a) / width)))
    edges = set(np.linspace(a, b, count + 1).tolist())
    edges.update(x for x in breaks if a < x < b)
    edges = np.array(sorted(edges))
    x, w = roots_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w[None, :]).ravel()
    return nodes, weights


def build_panel_rule(
    angular_count: int,
    degree: int = 0,
    breaks: Sequence[float] = (),
    width: float = 0.5,
    order: int = 16,
    s_max: float | None = None,
) -> QuadratureRule:
    """Composite Gauss-Legendre rule in ``s = |z|`` on ``[0, s_max]``.

    ``breaks`` are radii at which the integrand may be non-smooth; they become
    panel edges.  ``degree`` is the largest total polynomial degree the rule
    must carry; it sets ``s_max`` unless given explicitly.
    """
    if angular_count < 1:
        raise DomainError("angular_count must be positive")
    if s_max is None:
        s_max = panel_extent(degree)
    s, w = radial_panel_nodes(0.0, s_max, breaks, width, order)
    log_w = np.log(w) + np.log(2.0 * s) - s * s
    return QuadratureRule(s * s, np.exp(log_w), int(angular_count), None, log_w, "panel")


def _evaluate(g: Callable, z: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(z), dtype=complex)
    vals = np.broadcast_to(vals, z.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        raise NumericError(f"integrand is not finite at node z={z[idx]!r}")
    return vals


def integrate(rule: QuadratureRule, g: Callable) -> complex:
    """``sum_i sum_m w_i / M * g(sqrt(t_i) exp(i theta_m))``."""
    vals = _evaluate(g, rule.nodes())
    return complex(rule.radial_weights @ vals.mean(axis=1))


def integrate_nu(rule: QuadratureRule, g: Callable) -> complex:
    """Integrate against ``dnu = (1/2pi) exp(-|z|^2/2) dA`` via ``z = sqrt(2) u``."""
    return integrate(rule, lambda u: g(math.sqrt(2.0) * u))


def integrate_shifted(
    g: Callable,
    center: complex,
    radial_count: int = 48,
    angular_count: int = 64,
    alpha: int = 0,
    tol: float = 1e-10,
    max_doublings: int = 3,
) -> complex:
    """``int g(center + u) |u|^(2 alpha) / alpha! dmu(u)`` with a doubling gate.

    Uses Gauss-Laguerre in ``t = |u|^2`` with ``t^alpha / alpha!`` folded into
    the integrand (generalized Gauss-Laguerre weights overflow at the node
    counts reached by doubling); both node counts are doubled until two
    successive estimates agree to ``tol`` (absolute), otherwise
    :class:`AccuracyError` is raised.
    """

    def once(nr, na):
        t, w = roots_laguerre(nr)
        w = w * t ** alpha / math.factorial(alpha)
        theta = 2.0 * np.pi * np.arange(na) / na
        u = np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]
        vals = _evaluate(g, center + u)
        return complex(w @ vals.mean(axis=1))

    prev = once(radial_count, angular_count)
    change = math.inf
    for _ in range(max_doublings):
        radial_count, angular_count = 2 * radial_count, 2 * angular_count
        cur = once(radial_count, angular_count)
        change = abs(cur - prev)
        if change <= tol:
            return cur
        prev = cur
    raise AccuracyError(
        f"shifted Gaussian quadrature at center {center!r} did not converge to {tol}"
        f" (last change {change:.3e})"
    )
