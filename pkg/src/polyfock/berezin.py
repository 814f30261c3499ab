"""Scalar, matrix and standard Berezin transforms and the heat transform."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ive

from .basis import Subspace, TruncationSpec, check_gate, coherent_vector
from .errors import AccuracyError, DomainError
from .operators import OperatorMatrix, shifted_gram
from .quadrature import integrate_shifted, radial_panel_nodes
from .symbols import Symbol

SCHEMA = "polyfock-report/1"
HEAT_TAIL = 9.0  # exp(-81) cuts the Gaussian window


def _levels_needed(T: OperatorMatrix, levels: Sequence[int]) -> None:
    if not T.square:
        raise DomainError("Berezin transforms need a square operator")
    missing = set(levels) - set(T.cols.levels)
    if missing:
        raise DomainError(f"operator does not act on levels {sorted(missing)}")


def coherent_columns(T: OperatorMatrix, z: complex, levels: Sequence[int],
                     gate: bool = True) -> np.ndarray:
    """Columns ``l_{z,k}`` for ``k`` in ``levels`` in the operator's basis."""
    _levels_needed(T, levels)
    if gate:
        check_gate(z, T.cols.degrees)
    return np.stack([coherent_vector("l", z, k, T.spec, T.cols, gate=False).values
                     for k in levels], axis=1)


def berezin_scalar(T: OperatorMatrix, z: complex, level: int | None = None,
                   gate: bool = True) -> complex:
    """``<T l_{z,k}, l_{z,k}>``; ``level`` defaults to the operator's only level."""
    if level is None:
        if len(T.cols.levels) != 1:
            raise DomainError("operator spans several levels; pass level=")
        level = T.cols.levels[0]
    L = coherent_columns(T, z, [level], gate)[:, 0]
    return complex(np.vdot(L, T.entries @ L))


def berezin_matrix(T: OperatorMatrix, z: complex, n: int | None = None,
                   gate: bool = True) -> np.ndarray:
    """``B[k-1, j-1] = <T l_{z,j}, l_{z,k}>`` for ``j, k <= n``."""
    n = len(T.cols.levels) if n is None else n
    L = coherent_columns(T, z, range(1, n + 1), gate)
    return L.conj().T @ T.entries @ L


def berezin_standard(T: OperatorMatrix, z: complex, n: int | None = None,
                     gate: bool = True) -> complex:
    """``<T k_{z,n}, k_{z,n}>`` with the normalized reproducing kernel of ``F^2_n``."""
    n = len(T.cols.levels) if n is None else n
    _levels_needed(T, range(1, n + 1))
    k = coherent_vector("k", z, n, T.spec, T.cols, gate=gate).values
    return complex(np.vdot(k, T.entries @ k))


# --------------------------------------------------------------------------
# heat transform


def _heat_bessel(f: Symbol, z: complex, tol: float, max_halvings: int = 6) -> complex:
    """Level-one heat transform of a polar-separable symbol.

    Integrating out the angle leaves
    ``e^{i m theta} int profile(s) 2s e^{-(s-r)^2} ive(|m|, 2rs) ds``.
    """
    r, theta = abs(z), math.atan2(z.imag, z.real)
    m = abs(f.harmonic)
    a, b = max(0.0, r - HEAT_TAIL), r + HEAT_TAIL

    def once(width):
        s, w = radial_panel_nodes(a, b, f.breaks, width=width)
        vals = np.asarray(f.profile(s), dtype=complex) * 2 * s * np.exp(-(s - r) ** 2)
        vals = vals * ive(m, 2 * r * s)
        return complex(w @ vals)

    width = f.radial_width(b)
    prev = once(width)
    change = math.inf
    for _ in range(max_halvings):
        width /= 2
        cur = once(width)
        change = abs(cur - prev)
        if change <= tol:
            return cur * np.exp(1j * f.harmonic * theta)
        prev = cur
    raise AccuracyError(f"heat transform of {f.tag} at {z!r} did not converge (change {change:.3e})")


def _heat_local(f: Symbol, z: complex, level: int, tol: float, max_halvings: int = 6) -> complex:
    """Level-``k`` heat transform as the ``e_{k,0}`` entry of the shifted Gram matrix.

    ``|e_{k,0}(u)|^2 = |u|^(2(k-1)) / (k-1)!``, and the local rule puts panel
    edges on the symbol's radial breaks.  Panel widths are halved until two
    estimates agree to ``tol``.
    """
    space = Subspace((level,), 1)
    width = f.radial_width(abs(z) + HEAT_TAIL)
    prev = complex(shifted_gram(f, z, space, space, f.breaks, width)[0, 0])
    change = math.inf
    for _ in range(max_halvings):
        width /= 2
        cur = complex(shifted_gram(f, z, space, space, f.breaks, width)[0, 0])
        change = abs(cur - prev)
        if change <= tol:
            return cur
        prev = cur
    raise AccuracyError(f"heat transform of {f.tag} at {z!r} did not converge (change {change:.3e})")


def heat_transform(f: Symbol, z: complex, level: int = 1, tol: float = 1e-10) -> complex:
    """``int f(w) |l_{z,k}(w)|^2 dmu(w)``; for ``level = 1`` this is the heat transform.

    Equals ``int f(z + u) |u|^(2(k-1)) / (k-1)! dmu(u)``.  Polar-separable
    symbols use a Bessel reduction to one dimension at level one and a local
    break-aligned rule at higher levels; everything else uses a Gauss-Laguerre
    rule centred at ``z``.  No path involves the coherent-state truncation.
    """
    z = complex(z)
    if level < 1:
        raise DomainError("level must be at least 1")
    if f.separable:
        return _heat_bessel(f, z, tol) if level == 1 else _heat_local(f, z, level, tol)
    return integrate_shifted(f, z, alpha=level - 1, tol=tol)


# --------------------------------------------------------------------------
# sampled fields


def circle_grid(radii: Sequence[float], angles: int) -> np.ndarray:
    """Points ``r e^{2 pi i m / angles}`` ordered by radius, then angle."""
    if angles < 1:
        raise DomainError("need at least one angle")
    theta = 2 * np.pi * np.arange(angles) / angles
    return np.concatenate([r * np.exp(1j * theta) for r in radii]) if len(radii) else \
        np.zeros(0, dtype=complex)


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # + 0.0 drops the sign of -0.0


@dataclass(frozen=True)
class BerezinSample:
    """A Berezin field sampled at ``points``: ``values[i]`` is ``n x n``."""

    points: np.ndarray
    values: np.ndarray
    n: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        vals = np.asarray(self.values, dtype=complex).reshape(pts.size, self.n, self.n)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.points.size

    def norms(self) -> np.ndarray:
        """Spectral norm of each value."""
        if self.n == 1:
            return np.abs(self.values[:, 0, 0])
        return np.linalg.norm(self.values, 2, axis=(1, 2))

    def to_csv(self) -> str:
        lines = ["re_z,im_z,k,j,re_value,im_value"]
        for p, v in zip(self.points, self.values):
            for k in range(self.n):
                for j in range(self.n):
                    lines.append(",".join([_fmt(p.real), _fmt(p.imag), str(k + 1), str(j + 1),
                                           _fmt(v[k, j].real), _fmt(v[k, j].imag)]))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "berezin-sample",
            "n": self.n,
            "meta": self.meta,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "values": [[[[float(x.real), float(x.imag)] for x in row] for row in v]
                       for v in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def berezin_field(source, grid: Sequence[complex], mode: str, *, level: int = 1,
                  n: int | None = None, gate: bool = True, tol: float = 1e-10) -> BerezinSample:
    """Evaluate a transform at every grid point, in grid order.

    ``mode`` is ``scalar`` (level ``level``), ``matrix`` or ``standard``
    (order ``n``) for an :class:`OperatorMatrix` source, or ``heat`` for a
    :class:`Symbol` source (level ``level``).
    """
    grid = np.asarray(grid, dtype=complex).ravel()
    if mode == "heat":
        if not isinstance(source, Symbol):
            raise DomainError("heat mode needs a symbol")
        vals = [heat_transform(source, z, level, tol) for z in grid]
        return BerezinSample(grid, np.array(vals), 1,
                             {"mode": mode, "level": level, "symbol": source.descriptor})
    if not isinstance(source, OperatorMatrix):
        raise DomainError(f"{mode} mode needs an operator matrix")
    meta = {"mode": mode, "operator": source.label, "spec": source.spec.to_dict()}
    if mode == "scalar":
        vals = [berezin_scalar(source, z, level, gate) for z in grid]
        return BerezinSample(grid, np.array(vals), 1, {**meta, "level": level})
    n = len(source.cols.levels) if n is None else n
    if mode == "matrix":
        vals = [berezin_matrix(source, z, n, gate) for z in grid]
        return BerezinSample(grid, np.array(vals).reshape(-1, n, n), n, {**meta, "n": n})
    if mode == "standard":
        vals = [berezin_standard(source, z, n, gate) for z in grid]
        return BerezinSample(grid, np.array(vals), 1, {**meta, "n": n})
    raise DomainError(f"unknown Berezin mode {mode!r}")


def order_space(spec: TruncationSpec, n: int) -> Subspace:
    return spec.first(n)
