"""Bounded symbols and the built-in symbol library.

A :class:`Symbol` wraps a vectorized evaluator together with its sup-norm
bound and descriptor.  Library symbols that are polar separable,

    f(s e^{i theta}) = profile(s) * e^{i m theta},

also carry ``profile`` and ``harmonic = m``; matrix builders and heat
transforms use this structure for exact angular integration.  ``breaks`` lists
radii where the profile is not smooth, so radial panel rules can put edges
there.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError
from .quadrature import default_rule

DEFAULT_K, DEFAULT_J = 6, 64

TAGS = ("constant", "monomial", "radial-table", "gaussian", "phase", "angular",
        "heaviside-strip", "user-grid")


@dataclass(frozen=True)
class Symbol:
    """A bounded function on the plane with metadata.

    ``vo`` and ``vmo`` are advisory flags (``None`` when unknown).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    bound: float
    radial: bool
    descriptor: dict
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    harmonic: int = 0
    breaks: tuple[float, ...] = ()
    vo: bool | None = None
    vmo: bool | None = None
    panel_width: float = 0.5
    radial_frequency: float = 0.0
    real: bool = False
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.bound) and self.bound >= 0):
            raise DomainError(f"symbol bound must be finite and nonnegative, got {self.bound}")

    def __call__(self, z):
        return np.asarray(self.evaluator(np.asarray(z, dtype=complex)), dtype=complex)

    def radial_width(self, s_max: float) -> float:
        """Radial panel width resolving the profile up to radius ``s_max``.

        ``radial_frequency`` is the growth rate of the profile's phase
        derivative (``2`` for ``exp(i s^2)``); panels then hold about two periods.
        """
        if self.radial_frequency <= 0:
            return self.panel_width
        return min(self.panel_width, 4 * math.pi / (self.radial_frequency * max(s_max, 1.0)))

    @property
    def separable(self) -> bool:
        return self.profile is not None

    @property
    def tag(self) -> str:
        return self.descriptor.get("tag", "custom")

    def check_bound(self, values, slack: float = 1e-9) -> None:
        peak = float(np.max(np.abs(values), initial=0.0))
        if not math.isfinite(peak) or peak > self.bound * (1 + slack) + slack:
            raise DomainError(
                f"symbol {self.tag} sampled at |f| = {peak:.6g} above its bound {self.bound:.6g}"
            )

    def shifted(self, z0: complex) -> "Symbol":
        """``w -> f(w + z0)``; loses polar structure unless ``z0 == 0``."""
        z0 = complex(z0)
        if z0 == 0:
            return self
        ev = self.evaluator
        return Symbol(lambda w: ev(np.asarray(w, dtype=complex) + z0), self.bound, False,
                      {**self.descriptor, "shift": [z0.real, z0.imag]},
                      vo=self.vo, vmo=self.vmo, real=self.real)

    def conj(self) -> "Symbol":
        ev, prof = self.evaluator, self.profile
        return replace(
            self,
            evaluator=lambda w: np.conj(ev(w)),
            profile=None if prof is None else (lambda s: np.conj(prof(s))),
            harmonic=-self.harmonic,
            descriptor={**self.descriptor, "op": "conj"},
        )

    def abs2(self) -> "Symbol":
        ev, prof = self.evaluator, self.profile
        return replace(
            self,
            evaluator=lambda w: np.abs(ev(w)) ** 2 + 0j,
            bound=self.bound ** 2,
            radial=self.radial or prof is not None,
            profile=None if prof is None else (lambda s: np.abs(prof(s)) ** 2 + 0j),
            harmonic=0,
            radial_frequency=0.0,
            descriptor={**self.descriptor, "op": "abs2"},
            real=True,
        )

    def minus_constant(self, c: complex) -> "Symbol":
        """``f - c``; only used for residual symbols like ``f(w) - f(z0)``."""
        ev = self.evaluator
        c = complex(c)
        return Symbol(lambda w: ev(w) - c, self.bound + abs(c), self.radial,
                      {**self.descriptor, "minus": [c.real, c.imag]})


def _unit(z: np.ndarray) -> np.ndarray:
    r = np.abs(z)
    return np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0)


def polar_symbol(profile, harmonic: int, bound: float, descriptor: dict, **kw) -> Symbol:
    """Symbol ``profile(|z|) (z/|z|)^harmonic``."""

    def ev(z):
        z = np.asarray(z, dtype=complex)
        out = np.asarray(profile(np.abs(z)), dtype=complex)
        if harmonic:
            out = out * _unit(z) ** harmonic
        return out

    return Symbol(ev, float(bound), harmonic == 0, descriptor, profile=profile,
                  harmonic=int(harmonic), **kw)


# --------------------------------------------------------------------------
# library


def constant(c: complex = 1.0) -> Symbol:
    c = complex(c)
    return polar_symbol(lambda s: np.full(np.shape(s), c), 0, abs(c),
                        {"tag": "constant", "c": [c.real, c.imag]},
                        vo=True, vmo=True, real=c.imag == 0)


def gaussian(s: float = 1.0) -> Symbol:
    s = float(s)
    if s < 0:
        raise DomainError("gaussian rate must be nonnegative")
    return polar_symbol(lambda r: np.exp(-s * np.asarray(r) ** 2) + 0j, 0, 1.0,
                        {"tag": "gaussian", "s": s}, vo=True, vmo=True, real=True)


def phase() -> Symbol:
    return polar_symbol(lambda r: np.exp(1j * np.asarray(r) ** 2), 0, 1.0,
                        {"tag": "phase"}, vo=False, vmo=False, radial_frequency=2.0)


def angular() -> Symbol:
    return polar_symbol(lambda r: np.minimum(np.asarray(r, dtype=float), 1.0) + 0j, 1, 1.0,
                        {"tag": "angular"}, breaks=(1.0,), vo=True, vmo=True)


def default_clip_radius(K: int = DEFAULT_K, J: int = DEFAULT_J) -> float:
    """Radius of the outermost node of the default quadrature rule."""
    return float(default_rule(K, J).radii[-1])


def monomial(a: int, b: int, clip_radius: float | None = None) -> Symbol:
    """``z^a conj(z)^b`` inside ``|z| <= clip_radius``, radially frozen outside."""
    a, b = int(a), int(b)
    if a < 0 or b < 0:
        raise DomainError("monomial exponents must be nonnegative")
    R = default_clip_radius() if clip_radius is None else float(clip_radius)
    if not R > 0:
        raise DomainError("clip radius must be positive")
    n = a + b
    return polar_symbol(lambda s: np.minimum(np.asarray(s, dtype=float), R) ** n + 0j,
                        a - b, R ** n, {"tag": "monomial", "a": a, "b": b, "clip": R},
                        breaks=(R,), vo=True, vmo=True, real=a == b)


def radial_table(radii, values) -> Symbol:
    """Piecewise-linear radial profile through ``(radii, values)``, constant beyond."""
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=complex)
    if r.ndim != 1 or r.shape != v.shape or r.size < 1:
        raise DomainError("radial table needs matching 1-D radii and values")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise DomainError("table radii must be nonnegative and increasing")

    def prof(s):
        s = np.asarray(s, dtype=float)
        return np.interp(s, r, v.real) + 1j * np.interp(s, r, v.imag)

    return polar_symbol(prof, 0, float(np.abs(v).max()),
                        {"tag": "radial-table", "radii": r.tolist(),
                         "values": [[x.real, x.imag] for x in v]},
                        breaks=tuple(r.tolist()), vo=True, vmo=True,
                        real=bool(np.all(v.imag == 0)))


def heaviside_strip(a: float, b: float) -> Symbol:
    """Indicator of the annulus ``a <= |z| < b``."""
    a, b = float(a), float(b)
    if not 0 <= a < b:
        raise DomainError("heaviside-strip needs 0 <= a < b")
    return polar_symbol(lambda s: ((np.asarray(s) >= a) & (np.asarray(s) < b)) + 0j, 0, 1.0,
                        {"tag": "heaviside-strip", "a": a, "b": b},
                        breaks=(a, b), vo=True, vmo=True, real=True)


def user_grid(path: str | Path) -> Symbol:
    """Bilinear interpolation of a CSV grid with columns ``x,y,re[,im]``.

    Points outside the grid take the value at the nearest boundary point.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.DictReader(fh)]
    except OSError as exc:
        raise DomainError(f"cannot read user grid {path}: {exc}") from exc
    if not rows or not {"x", "y", "re"} <= set(rows[0]):
        raise DomainError(f"user grid {path} needs columns x,y,re[,im]")
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    val = np.array([float(r["re"]) + 1j * float(r.get("im") or 0.0) for r in rows])
    xs, ys = np.unique(x), np.unique(y)
    if xs.size < 2 or ys.size < 2 or xs.size * ys.size != val.size:
        raise DomainError(f"user grid {path} is not a full rectangular grid")
    table = np.full((xs.size, ys.size), np.nan, dtype=complex)
    table[np.searchsorted(xs, x), np.searchsorted(ys, y)] = val
    if np.isnan(table).any():
        raise DomainError(f"user grid {path} has duplicate or missing points")
    interp_re = RegularGridInterpolator((xs, ys), table.real)
    interp_im = RegularGridInterpolator((xs, ys), table.imag)

    def ev(z):
        z = np.asarray(z, dtype=complex)
        pts = np.stack([np.clip(z.real, xs[0], xs[-1]), np.clip(z.imag, ys[0], ys[-1])], -1)
        return interp_re(pts) + 1j * interp_im(pts)

    return Symbol(ev, float(np.abs(val).max()), False,
                  {"tag": "user-grid", "path": str(path)},
                  real=bool(np.all(val.imag == 0)))


# --------------------------------------------------------------------------
# descriptor parsing


def _floats(text: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"bad numeric parameters {text!r}") from exc
    if count is not None and len(vals) != count:
        raise DomainError(f"expected {count} parameters, got {text!r}")
    return vals


def parse_symbol(text: str, clip_radius: float | None = None) -> Symbol:
    """Build a library symbol from ``TAG[:params]``.

    ========================  =====================================
    ``constant:c``            ``c`` real or Python complex literal
    ``gaussian:s``            ``exp(-s |z|^2)``, default ``s = 1``
    ``phase``                 ``exp(i |z|^2)``
    ``angular``               ``z / max(1, |z|)``
    ``monomial:a,b[,R]``      clipped ``z^a conj(z)^b``
    ``radial-table:r=v,...``  piecewise-linear radial profile
    ``heaviside-strip:a,b``   indicator of ``a <= |z| < b``
    ``user-grid:PATH``        CSV grid ``x,y,re[,im]``
    ========================  =====================================
    """
    tag, _, params = text.strip().partition(":")
    tag = tag.strip().lower()
    if tag == "constant":
        try:
            return constant(complex(params.replace(" ", "")) if params else 1.0)
        except ValueError as exc:
            raise DomainError(f"bad constant {params!r}") from exc
    if tag == "gaussian":
        return gaussian(*(_floats(params, 1) if params else []))
    if tag == "phase":
        return phase()
    if tag == "angular":
        return angular()
    if tag == "monomial":
        vals = _floats(params)
        if len(vals) not in (2, 3) or any(v != int(v) for v in vals[:2]):
            raise DomainError("monomial needs integer a,b and optional clip radius")
        R = vals[2] if len(vals) == 3 else clip_radius
        return monomial(int(vals[0]), int(vals[1]), R)
    if tag == "radial-table":
        try:
            pairs = [p.split("=") for p in params.split(",") if p.strip()]
            r = [float(a) for a, _ in pairs]
            v = [complex(b) for _, b in pairs]
        except ValueError as exc:
            raise DomainError(f"radial-table needs r=v pairs, got {params!r}") from exc
        return radial_table(r, v)
    if tag == "heaviside-strip":
        return heaviside_strip(*_floats(params, 2))
    if tag == "user-grid":
        if not params:
            raise DomainError("user-grid needs a file path")
        return user_grid(params)
    raise DomainError(f"unknown symbol tag {tag!r}; known: {', '.join(TAGS)}")
