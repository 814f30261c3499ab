"""Orthonormal basis of L^2(C, mu) sorted by true-polyanalytic level.

The basis function of level ``k`` and analytic degree ``j`` is

    e_{k,j} = (adag)^(k-1) z^j / sqrt((k-1)! j!),     adag = -d/dz + conj(z),

kept as an exact integer-coefficient polynomial in ``(z, conj(z))`` with a
separate log-scale factor.  Every ``e_{k,j}`` is a single angular harmonic:
all its monomials ``z^a conj(z)^b`` share ``a - b = j - k + 1``.  Evaluation
happens in log space so that Gaussian factors can be folded in without
overflow.

Flat ordering is level-major: ``(k, j) -> (k - 1) * J + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.special import pdtrc

from .errors import CapabilityError, DomainError, RangeError
from .specfun import laguerre, laguerre_table, log_factorial

MAX_POLY_DEGREE = 1024


# --------------------------------------------------------------------------
# truncation layout


@dataclass(frozen=True)
class Subspace:
    """Span of ``e_{k,j}`` for ``k`` in ``levels`` and ``0 <= j < degrees``."""

    levels: tuple[int, ...]
    degrees: int

    def __post_init__(self):
        levels = tuple(int(k) for k in self.levels)
        if not levels or min(levels) < 1 or len(set(levels)) != len(levels):
            raise DomainError(f"invalid level set {self.levels!r}")
        if list(levels) != sorted(levels):
            raise DomainError("levels must be increasing")
        if int(self.degrees) < 1:
            raise DomainError("degrees must be positive")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "degrees", int(self.degrees))

    @property
    def dim(self) -> int:
        return len(self.levels) * self.degrees

    def index(self, k: int, j: int) -> int:
        if k not in self.levels or not 0 <= j < self.degrees:
            raise DomainError(f"(k={k}, j={j}) is not in {self}")
        return self.levels.index(k) * self.degrees + j

    def pairs(self) -> list[tuple[int, int]]:
        return [(k, j) for k in self.levels for j in range(self.degrees)]

    @property
    def level_of(self) -> np.ndarray:
        return np.repeat(np.array(self.levels), self.degrees)

    @property
    def degree_of(self) -> np.ndarray:
        return np.tile(np.arange(self.degrees), len(self.levels))

    @property
    def frequencies(self) -> np.ndarray:
        """Angular harmonic ``j - k + 1`` of every basis element."""
        return self.degree_of - self.level_of + 1

    def embedding(self, other: "Subspace") -> np.ndarray:
        """Indices of this subspace's basis inside ``other`` (must contain it)."""
        return np.array([other.index(k, j) for k, j in self.pairs()], dtype=int)

    def contains(self, other: "Subspace") -> bool:
        return set(other.levels) <= set(self.levels) and other.degrees <= self.degrees

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "degrees": self.degrees}

    @classmethod
    def from_dict(cls, d: dict) -> "Subspace":
        return cls(tuple(d["levels"]), d["degrees"])


@dataclass(frozen=True)
class TruncationSpec:
    """The finite model: ``K`` levels by ``J`` degrees, plus Hankel margins."""

    K: int
    J: int
    margin_K: int = 0
    margin_J: int = 0

    def __post_init__(self):
        if int(self.K) < 1 or int(self.J) < 1:
            raise DomainError("K and J must be positive")
        if int(self.margin_K) < 0 or int(self.margin_J) < 0:
            raise DomainError("margins must be nonnegative")

    @property
    def dim(self) -> int:
        return self.K * self.J

    def flat_index(self, k: int, j: int) -> int:
        if not (1 <= k <= self.K and 0 <= j < self.J):
            raise DomainError(f"(k={k}, j={j}) outside K={self.K}, J={self.J}")
        return (k - 1) * self.J + j

    def unflatten(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise DomainError(f"flat index {index} outside [0, {self.dim})")
        return index // self.J + 1, index % self.J

    def full(self) -> Subspace:
        return Subspace(tuple(range(1, self.K + 1)), self.J)

    def margined(self) -> Subspace:
        return Subspace(tuple(range(1, self.K + self.margin_K + 1)), self.J + self.margin_J)

    def level(self, k: int) -> Subspace:
        if not 1 <= k <= self.K:
            raise DomainError(f"level {k} outside 1..{self.K}")
        return Subspace((k,), self.J)

    def first(self, n: int) -> Subspace:
        if not 1 <= n <= self.K:
            raise DomainError(f"order {n} outside 1..{self.K}")
        return Subspace(tuple(range(1, n + 1)), self.J)

    @property
    def gate_radius_sq(self) -> float:
        return gate_radius_sq(self.J)

    def to_dict(self) -> dict:
        return {"K": self.K, "J": self.J, "margin_K": self.margin_K, "margin_J": self.margin_J}

    @classmethod
    def from_dict(cls, d: dict) -> "TruncationSpec":
        return cls(d["K"], d["J"], d.get("margin_K", 0), d.get("margin_J", 0))


def gate_radius_sq(degrees: int) -> float:
    """Largest ``|z|^2`` at which coherent vectors of ``degrees`` terms are trusted."""
    return degrees - 4.0 * math.sqrt(degrees)


def check_gate(z: complex, degrees: int) -> None:
    limit = gate_radius_sq(degrees)
    if abs(z) ** 2 > limit:
        raise RangeError(
            f"|z|^2 = {abs(z) ** 2:.4g} exceeds the coherent-state gate J - 4 sqrt(J) ="
            f" {limit:.4g} for J = {degrees}; increase J"
        )


# --------------------------------------------------------------------------
# exact polynomials


@dataclass(frozen=True)
class BivariatePoly:
    """``exp(log_scale) * sum c[a, b] z^a conj(z)^b`` with exact coefficients.

    ``coeffs`` maps ``(a, b)`` to Python ints (or complex numbers for general
    input); zero entries are dropped on construction.
    """

    coeffs: dict = field(default_factory=dict)
    log_scale: float = 0.0

    def __post_init__(self):
        clean = {}
        for (a, b), c in self.coeffs.items():
            if a < 0 or b < 0:
                raise DomainError("exponents must be nonnegative")
            if c != 0:
                clean[(int(a), int(b))] = c
        if clean and max(a + b for a, b in clean) > MAX_POLY_DEGREE:
            raise CapabilityError(f"polynomial degree exceeds {MAX_POLY_DEGREE}")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_table(cls, table) -> "BivariatePoly":
        table = np.asarray(table)
        return cls({(a, b): complex(table[a, b]) for a, b in zip(*np.nonzero(table))})

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    @property
    def degree(self) -> int:
        return max((a + b for a, b in self.coeffs), default=-1)

    @property
    def order(self) -> int:
        """Polyanalytic order ``1 + max b`` (0 for the zero polynomial)."""
        return 1 + max((b for _, b in self.coeffs), default=-1)

    def table(self) -> np.ndarray:
        """Dense coefficient table ``c[a][b]`` with the scale applied, trimmed."""
        if not self.coeffs:
            return np.zeros((0, 0), dtype=complex)
        A = 1 + max(a for a, _ in self.coeffs)
        B = 1 + max(b for _, b in self.coeffs)
        out = np.zeros((A, B), dtype=complex)
        for (a, b), c in self.coeffs.items():
            out[a, b] = complex(c) * self.scale
        return out

    def __call__(self, z):
        """Horner evaluation in ``z`` (outer) and ``conj(z)`` (inner)."""
        z = np.asarray(z, dtype=complex)
        tab = self.table()
        if tab.size == 0:
            return np.zeros_like(z)
        zb = np.conj(z)
        out = np.zeros_like(z)
        for a in range(tab.shape[0] - 1, -1, -1):
            inner = np.zeros_like(z)
            for b in range(tab.shape[1] - 1, -1, -1):
                inner = inner * zb + tab[a, b]
            out = out * z + inner
        return out

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        return _combine(self, other, -1)

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        return _combine(self, other, 1)

    def __eq__(self, other):
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return (self - other).coeffs == {}

    __hash__ = None


def _combine(p: BivariatePoly, q: BivariatePoly, sign: int) -> BivariatePoly:
    if p.log_scale == q.log_scale:
        out = dict(p.coeffs)
        for key, c in q.coeffs.items():
            out[key] = out.get(key, 0) + sign * c
        return BivariatePoly(out, p.log_scale)
    out = {key: complex(c) * p.scale for key, c in p.coeffs.items()}
    for key, c in q.coeffs.items():
        out[key] = out.get(key, 0) + sign * complex(c) * q.scale
    return BivariatePoly(out)


def monomial(a: int, b: int, coeff=1) -> BivariatePoly:
    return BivariatePoly({(a, b): coeff})


def ladder_raise(p: BivariatePoly) -> BivariatePoly:
    """``(-d/dz + conj(z)) p`` in exact coefficient arithmetic."""
    out: dict = {}
    for (a, b), c in p.coeffs.items():
        if a:
            out[(a - 1, b)] = out.get((a - 1, b), 0) - a * c
        out[(a, b + 1)] = out.get((a, b + 1), 0) + c
    return BivariatePoly(out, p.log_scale)


def ladder_lower(p: BivariatePoly) -> BivariatePoly:
    """``d/d(conj z) p`` in exact coefficient arithmetic."""
    out: dict = {}
    for (a, b), c in p.coeffs.items():
        if b:
            out[(a, b - 1)] = out.get((a, b - 1), 0) + b * c
    return BivariatePoly(out, p.log_scale)


@lru_cache(maxsize=None)
def basis_poly(k: int, j: int) -> BivariatePoly:
    """Orthonormal basis polynomial ``e_{k,j}`` of level ``k``, degree ``j``."""
    if k < 1 or j < 0:
        raise DomainError(f"basis index (k={k}, j={j}) invalid")
    if k - 1 + j > MAX_POLY_DEGREE:
        raise CapabilityError(f"basis degree {k - 1 + j} exceeds {MAX_POLY_DEGREE}")
    p = monomial(0 + j, 0)
    for _ in range(k - 1):
        p = ladder_raise(p)
    return BivariatePoly(p.coeffs, -0.5 * (log_factorial(k - 1) + log_factorial(j)))


def radial_profiles(space: Subspace, s, log_extra=0.0) -> np.ndarray:
    """``rho_b(s) * exp(log_extra)`` for every basis element ``b`` of ``space``.

    ``e_b(s e^{i theta}) = rho_b(s) e^{i m_b theta}`` with ``m_b`` from
    :attr:`Subspace.frequencies`.  ``log_extra`` (broadcast against ``s``) is
    folded in before exponentiation, which keeps Gaussian-weighted values
    finite at large radii.

    Summing the exact polynomial cancels badly at high level, and so does the
    pointwise raising recurrence.  Values therefore use the equivalent form

        rho_{k,j}(s) = (-1)^p sqrt(p!/q!) s^(q-p) L_p^(q-p)(s^2),

    with ``p = min(j, k-1)``, ``q = max(j, k-1)``, where the Laguerre
    recurrence in ``p`` is forward stable.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    log_extra = np.broadcast_to(np.asarray(log_extra, dtype=float), s.shape)
    level, degree = space.level_of - 1, space.degree_of
    p, q = np.minimum(level, degree), np.maximum(level, degree)
    d = q - p
    lf = np.array([log_factorial(int(i)) for i in range(int(q.max()) + 1)])
    dvals, dpos = np.unique(d, return_inverse=True)
    lag = laguerre_table(int(p.max()), dvals[:, None], (s * s)[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.log(s)
        power = np.where(d[:, None] == 0, 0.0, d[:, None] * log_s[None, :])
    expo = (0.5 * (lf[p] - lf[q]))[:, None] + log_extra[None, :] + power
    sign = np.where(p % 2 == 0, 1.0, -1.0)[:, None]
    return sign * np.exp(expo) * lag[p, dpos, :]


def basis_values(space: Subspace, z, gaussian: bool = False) -> np.ndarray:
    """Pointwise ``e_b(z)`` (times ``exp(-|z|^2/2)`` if ``gaussian``), shape ``(dim,) + z.shape``."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    s = np.abs(flat)
    prof = radial_profiles(space, s, -0.5 * s * s if gaussian else 0.0)
    phase = np.exp(1j * space.frequencies[:, None] * np.angle(flat)[None, :])
    return (prof * phase).reshape((space.dim,) + z.shape)


def weighted_profiles(space: Subspace, rule) -> np.ndarray:
    """``rho_b(s_i) sqrt(w_i)`` on the radial nodes of ``rule``."""
    return radial_profiles(space, rule.radii, 0.5 * rule.log_weights)


# --------------------------------------------------------------------------
# reproducing kernels


def kernel_eval(z: complex, w: complex, level: int | None = None, order: int | None = None,
                log_scaled: bool = False) -> complex:
    """Reproducing kernel of a true-polyanalytic level or of a polyanalytic space.

    ``level=k`` gives ``L_{k-1}^0(|z-w|^2) exp(z conj(w))``; ``order=n`` gives
    ``L_{n-1}^1(|z-w|^2) exp(z conj(w))``.  With ``log_scaled`` the result is
    multiplied by ``exp(-(|z|^2 + |w|^2)/2)``, which never overflows.
    """
    if (level is None) == (order is None):
        raise DomainError("give exactly one of level= or order=")
    z, w = complex(z), complex(w)
    if not (math.isfinite(abs(z)) and math.isfinite(abs(w))):
        raise DomainError("z and w must be finite")
    x = abs(z - w) ** 2
    poly = laguerre(level - 1, 0, x) if level is not None else laguerre(order - 1, 1, x)
    expo = z * w.conjugate()
    if log_scaled:
        expo -= 0.5 * (abs(z) ** 2 + abs(w) ** 2)
    elif expo.real > 700.0:
        raise RangeError(
            f"exp(z conj(w)) overflows (Re = {expo.real:.4g}); use log_scaled=True"
        )
    return poly * complex(np.exp(expo))


# --------------------------------------------------------------------------
# coefficient vectors


@dataclass(frozen=True)
class CoefVec:
    """Coefficients of an ``L^2(C, mu)`` element against the basis of ``space``."""

    space: Subspace
    values: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.space.dim,):
            raise DomainError(f"values must have length {self.space.dim}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def on(self, space: Subspace) -> np.ndarray:
        """Values restricted/embedded into ``space`` (zeros where absent)."""
        out = np.zeros(space.dim, dtype=complex)
        for idx, (k, j) in enumerate(space.pairs()):
            if k in self.space.levels and j < self.space.degrees:
                out[idx] = self.values[self.space.index(k, j)]
        return out


def coherent_coefficients(z: complex, degrees: int) -> np.ndarray:
    """``exp(-|z|^2/2) conj(z)^j / sqrt(j!)`` for ``j < degrees``, any ``z``."""
    z = complex(z)
    j = np.arange(degrees)
    r2 = abs(z) ** 2
    if r2 == 0.0:
        out = np.zeros(degrees, dtype=complex)
        out[0] = 1.0
        return out
    lf = np.array([log_factorial(int(i)) for i in j])
    logmag = -0.5 * r2 + j * math.log(abs(z)) - 0.5 * lf
    return np.exp(logmag) * np.exp(-1j * j * np.angle(z))


def poisson_tail(z: complex, degrees: int) -> float:
    """Coherent-state mass beyond ``degrees`` terms, square-rooted."""
    return float(math.sqrt(pdtrc(degrees - 1, abs(z) ** 2))) if degrees > 0 else 1.0


def coherent_vector(kind: str, z: complex, index: int, spec: TruncationSpec,
                    space: Subspace | None = None, gate: bool = True) -> CoefVec:
    """Coherent-state coefficient vectors.

    ``kind`` is one of

    * ``"l"``: the level-``index`` lift ``l_{z,k}`` of the normalized kernel ``k_z``,
    * ``"k"``: the normalized reproducing kernel ``k_{z,n}`` of the order-``index`` space,
    * ``"m"``: the monomial ``m_k = w^(k-1)/sqrt((k-1)!)``,
    * ``"lhat"``: ``W_z m_k``.
    """
    space = spec.full() if space is None else space
    z = complex(z)
    if gate and kind != "m":
        check_gate(z, space.degrees)
    J = space.degrees
    values = np.zeros(space.dim, dtype=complex)
    if kind == "l":
        if index not in space.levels:
            raise DomainError(f"level {index} not in {space}")
        start = space.index(index, 0)
        values[start:start + J] = coherent_coefficients(z, J)
        return CoefVec(space, values, poisson_tail(z, J))
    if kind == "k":
        needed = set(range(1, index + 1))
        if not needed <= set(space.levels):
            raise DomainError(f"levels 1..{index} must be in {space}")
        vals = np.conj(basis_values(space, z, gaussian=True)) / math.sqrt(index)
        mask = space.level_of <= index
        values[mask] = vals[mask]
        tail = math.sqrt(max(0.0, 1.0 - float(np.vdot(values, values).real)))
        return CoefVec(space, values, tail)
    if kind == "m":
        if 1 not in space.levels or index - 1 >= J:
            raise DomainError(f"m_{index} not representable in {space}")
        values[space.index(1, index - 1)] = 1.0
        return CoefVec(space, values, 0.0)
    if kind == "lhat":
        from .operators import weyl_matrix

        m = coherent_vector("m", 0, index, spec, space)
        W = weyl_matrix(z, spec, space=space, gate=gate)
        out = W.entries @ m.values
        tail = math.sqrt(max(0.0, 1.0 - float(np.vdot(out, out).real)))
        return CoefVec(space, out, tail)
    raise DomainError(f"unknown coherent vector kind {kind!r}")


def interior_degrees(columns_leak: Iterable[float], tol: float) -> int:
    """Length of the leading run of columns whose leak is at most ``tol``."""
    count = 0
    for leak in columns_leak:
        if leak > tol:
            break
        count += 1
    return count
