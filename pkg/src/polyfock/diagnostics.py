"""Finite numerical probes for compactness, VO/VMO membership and essential spectra.

Nothing here decides compactness.  Every probe returns a profile over
increasing radii and a tri-state hint computed from explicit thresholds.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import Subspace, TruncationSpec, coherent_coefficients, gate_radius_sq
from .berezin import SCHEMA, berezin_matrix, berezin_scalar, heat_transform, _fmt
from .errors import DomainError
from .operators import (OperatorMatrix, conjugate_by_weyl, ladder_matrix, projection_matrix,
                        shifted_gram, shifted_multiplication_matrix, toeplitz_matrix)
from .symbols import Symbol

CONSISTENT = "consistent-with-compact"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

DEFAULT_THRESHOLDS = {"consistent": 0.02, "inconsistent": 0.2}
DEFAULT_RAY_RADII = tuple(4.0 * 2 ** i for i in range(5))
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
RING_RADII = (1.0, 2.0 / 3.0, 1.0 / 3.0)


NOISE_FLOOR = 1e-6  # square roots of round-off-level eigenvalues sit near 1e-8


def monotone_nonincreasing(values: Sequence[float], slack: float = 1e-9) -> bool:
    """Non-increasing up to ``slack`` (absolute plus relative)."""
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= slack * (1.0 + np.abs(v[:-1]))))


def verdict(values: Sequence[float], consistent: float = 0.02, inconsistent: float = 0.2) -> str:
    """Tri-state hint from a profile ordered by increasing radius."""
    if len(values) == 0:
        return INCONCLUSIVE
    values = np.where(np.abs(values) < NOISE_FLOOR, 0.0, values)
    last = float(values[-1])
    if last > inconsistent:
        return INCONSISTENT
    if last < consistent and monotone_nonincreasing(values):
        return CONSISTENT
    return INCONCLUSIVE


@dataclass
class DiagnosticsReport:
    """Profiles plus a verdict hint; ``series`` holds labelled extra profiles."""

    kind: str
    profile: list[tuple[float, float]]
    verdict_hint: str
    tolerances: dict
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.profile])

    @property
    def radii(self) -> np.ndarray:
        return np.array([r for r, _ in self.profile])

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": self.kind,
            "verdict_hint": self.verdict_hint,
            "tolerances": self.tolerances,
            "profile": [[float(r), float(v)] for r, v in self.profile],
            "series": {k: [[float(r), float(v)] for r, v in s] for k, s in self.series.items()},
            "data": self.data,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = ["series,radius,value"]
        for label, prof in [("profile", self.profile), *sorted(self.series.items())]:
            lines += [f"{label},{_fmt(r)},{_fmt(v)}" for r, v in prof]
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# oscillation and VO / VMO


def disk_offsets(samples: int) -> np.ndarray:
    """Nested quasi-uniform points of the closed unit disk.

    Point ``i`` sits on ring ``RING_RADII[i % 3]`` at angle ``2 pi frac(i g)``
    with ``g`` the golden ratio conjugate, so the first ``n`` points are a
    subset of the first ``n + 1`` and the sampled sup never decreases with
    ``samples``.
    """
    if samples < 8:
        raise DomainError("oscillation needs at least 8 samples")
    i = np.arange(samples)
    ring = np.array(RING_RADII)[i % 3]
    return ring * np.exp(2j * np.pi * np.mod(i * GOLDEN, 1.0))


def _as_field(field_) -> Callable:
    if isinstance(field_, Symbol):
        return lambda w: field_(np.asarray(w))
    return field_


def _norm(x) -> float:
    x = np.asarray(x)
    if x.ndim >= 2:
        return float(np.linalg.norm(x, 2))
    return float(np.abs(x).max()) if x.size else 0.0


def oscillation(field_, z: complex, samples: int = 48) -> float:
    """Sampled ``sup_{|w - z| <= 1} ||F(z) - F(w)||`` (a lower bound for the sup).

    ``field_`` is a Symbol or a callable returning a scalar or matrix for one
    point.
    """
    offsets = disk_offsets(samples)
    if isinstance(field_, Symbol):
        pts = complex(z) + offsets
        vals = field_(pts)
        return float(np.abs(vals - field_(np.array([complex(z)]))[0]).max())
    F = _as_field(field_)
    center = np.asarray(F(complex(z)))
    return max(_norm(np.asarray(F(complex(z) + o)) - center) for o in offsets)


def vo_profile(f, radii: Sequence[float], angles: int = 16, samples: int = 48,
               threshold: float = 0.05, inconsistent: float = 0.2) -> DiagnosticsReport:
    """``r -> max_theta Osc_{r e^{i theta}}(f)``."""
    radii = _increasing(radii)
    theta = 2 * np.pi * np.arange(angles) / angles
    prof = [(r, max(oscillation(f, r * np.exp(1j * t), samples) for t in theta)) for r in radii]
    tol = {"consistent": threshold, "inconsistent": inconsistent, "angles": angles,
           "samples": samples}
    return DiagnosticsReport("vo", prof, verdict([v for _, v in prof], threshold, inconsistent),
                             tol, data=_symbol_data(f))


def vmo_gap(f: Symbol, z: complex, tol: float = 1e-10) -> float:
    """``heat(|f|^2)(z) - |heat(f)(z)|^2``."""
    return float(heat_transform(f.abs2(), z, tol=tol).real - abs(heat_transform(f, z, tol=tol)) ** 2)


def vmo_profile(f: Symbol, radii: Sequence[float], angles: int = 8,
                thresholds: dict | None = None) -> DiagnosticsReport:
    th = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    radii = _increasing(radii)
    theta = 2 * np.pi * np.arange(angles) / angles
    prof = [(r, max(vmo_gap(f, r * np.exp(1j * t)) for t in theta)) for r in radii]
    return DiagnosticsReport("vmo", prof, verdict([v for _, v in prof], th["consistent"],
                                                  th["inconsistent"]),
                             {**th, "angles": angles}, data=_symbol_data(f))


# --------------------------------------------------------------------------
# limit operators along rays


@dataclass
class RayProbe:
    """Compressed ``W_{-r theta} T W_{r theta}`` snapshots along one ray."""

    direction: complex
    radii: list[float]
    window: int
    snapshots: list[np.ndarray]
    drift: list[float]
    scalar_residual: list[float]
    strong_residual: list[float]
    limits: list[complex]

    def to_report(self) -> DiagnosticsReport:
        prof = list(zip(self.radii, self.scalar_residual))
        return DiagnosticsReport(
            "ray", prof, verdict(self.scalar_residual), dict(DEFAULT_THRESHOLDS),
            series={"drift": list(zip(self.radii[1:], self.drift)),
                    "strong_residual": list(zip(self.radii, self.strong_residual))},
            data={"direction": [self.direction.real, self.direction.imag],
                  "window": self.window,
                  "limits": [[c.real, c.imag] for c in self.limits]},
        )


def _window_space(spec: TruncationSpec, window: int) -> Subspace:
    if not 1 <= window <= spec.dim:
        raise DomainError(f"window {window} outside 1..{spec.dim}")
    if window <= spec.J:
        return Subspace((1,), window)
    return spec.first(-(-window // spec.J))


def ray_probe(f: Symbol, spec: TruncationSpec, direction: complex = 1.0,
              radii: Sequence[float] = DEFAULT_RAY_RADII, window: int = 8,
              builder: Callable[[Symbol], OperatorMatrix] | None = None) -> RayProbe:
    """Snapshots of the conjugated multiplication operator along ``r * direction``.

    ``W_{-z} M_f W_z = M_{f(. + z)}``, so snapshots come from the shifted symbol
    and no Weyl matrix is truncated.  ``scalar_residual`` is
    ``||snapshot - f(z) I||``; ``strong_residual`` is
    ``sup ||(f(. + z) - f(z)) v||`` over unit ``v`` in the window, the
    quantity that vanishes when the limit operator is the scalar ``f(z)``.
    """
    direction = complex(direction)
    if abs(direction) == 0:
        raise DomainError("direction must be nonzero")
    direction /= abs(direction)
    radii = _increasing(radii)
    space = _window_space(spec, window)
    snaps, scalar_res, strong_res, limits = [], [], [], []
    for r in radii:
        z = r * direction
        c = complex(f(np.array([z]))[0])
        if builder is not None:
            S = builder(f.shifted(z)).entries[:window, :window]
            D = _residual_gram(f, c, z, spec, space)
        elif f.separable:
            S, D = shifted_gram([f, lambda u, c=c: np.abs(f(u) - c) ** 2], z, space, space,
                                f.breaks, f.radial_width)
        else:
            S = shifted_multiplication_matrix(f, z, spec, space, space).entries
            D = _residual_gram(f, c, z, spec, space)
        S, D = S[:window, :window], D[:window, :window]
        snaps.append(S)
        limits.append(c)
        scalar_res.append(float(np.linalg.norm(S - c * np.eye(window), 2)))
        lam = float(np.linalg.eigvalsh(0.5 * (D + D.conj().T)).max())
        strong_res.append(math.sqrt(max(lam, 0.0)))
    drift = [float(np.linalg.norm(b - a, 2)) for a, b in zip(snaps, snaps[1:])]
    return RayProbe(direction, list(radii), window, snaps, drift, scalar_res, strong_res, limits)


def _residual_gram(f: Symbol, c: complex, z: complex, spec, space) -> np.ndarray:
    g = f.minus_constant(c).abs2()
    return shifted_multiplication_matrix(g, z, spec, space, space).entries


# --------------------------------------------------------------------------
# Berezin-based compactness evidence


def compactness_score(T: OperatorMatrix, radii: Sequence[float], angles: int = 16,
                      thresholds: dict | None = None) -> DiagnosticsReport:
    """Sup of ``||B_n(T)||`` on circles plus the singular-value tail ratio.

    Radii beyond the coherent-state gate are skipped and listed in the report.
    """
    th = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    radii = _increasing(radii)
    limit = math.sqrt(max(gate_radius_sq(T.cols.degrees), 0.0))
    used = [r for r in radii if r <= limit]
    skipped = [r for r in radii if r > limit]
    theta = 2 * np.pi * np.arange(angles) / angles
    single = len(T.cols.levels) == 1
    levels = T.cols.levels
    if not single and levels != tuple(range(1, len(levels) + 1)):
        raise DomainError("operator must act on one level or on levels 1..n")

    def value(z):
        if single:
            return abs(berezin_scalar(T, z))
        return float(np.linalg.norm(berezin_matrix(T, z), 2))

    prof = [(r, max(value(r * np.exp(1j * t)) for t in theta)) for r in used]
    sv = np.linalg.svd(T.entries, compute_uv=False)
    ratio = float(sv[T.cols.dim // 2] / sv[0]) if sv.size and sv[0] > 0 else 0.0
    vals = [v for _, v in prof]
    hint = verdict(vals, th["consistent"], th["inconsistent"])
    if hint == CONSISTENT and ratio >= th["consistent"]:
        hint = INCONCLUSIVE
    warn = [f"radii {skipped} exceed the coherent-state gate {limit:.4g}"] if skipped else []
    return DiagnosticsReport("compactness", prof, hint, {**th, "angles": angles},
                             data={"singular_tail_ratio": ratio, "skipped_radii": skipped,
                                   "operator": T.label},
                             warnings=warn)


# --------------------------------------------------------------------------
# essential spectrum


@dataclass
class EssSpectrumEstimate:
    """Berezin values on circles; ``cloud`` is the outermost circle."""

    radii: list[float]
    clouds: list[np.ndarray]
    level: int
    warnings: list[str]

    @property
    def cloud(self) -> np.ndarray:
        return self.clouds[-1]

    def convergence(self) -> list[float]:
        """Hausdorff distance between successive circles' clouds."""
        return [hausdorff(a, b) for a, b in zip(self.clouds, self.clouds[1:])]

    def to_report(self) -> DiagnosticsReport:
        steps = self.convergence()
        return DiagnosticsReport(
            "ess-spectrum", list(zip(self.radii[1:], steps)), INCONCLUSIVE,
            dict(DEFAULT_THRESHOLDS),
            data={"level": self.level, "radius": self.radii[-1],
                  "cloud": [[float(c.real), float(c.imag)] for c in self.cloud]},
            warnings=self.warnings)


def hausdorff(a, b) -> float:
    a, b = np.asarray(a, dtype=complex).ravel(), np.asarray(b, dtype=complex).ravel()
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def perturbation_berezin(C: np.ndarray, space: Subspace, z: complex, level: int) -> complex:
    """``<C l_{z,k}, l_{z,k}>`` for a matrix ``C`` on ``space``, without the tail gate.

    Coherent coefficients are computed in log space, so this is exact at any
    ``|z|`` (they simply underflow to zero far out).
    """
    coeffs = np.zeros(space.dim, dtype=complex)
    if level in space.levels:
        start = space.index(level, 0)
        coeffs[start:start + space.degrees] = coherent_coefficients(z, space.degrees)
    return complex(np.vdot(coeffs, C @ coeffs))


def ess_spectrum_estimate(f: Symbol, level: int, radii: Sequence[float], angles: int = 128,
                          perturbation: tuple[np.ndarray, Subspace] | None = None,
                          tol: float = 1e-10) -> EssSpectrumEstimate:
    """Samples of ``B_(k)(T_{f,(k)} + C)`` on circles.

    The Toeplitz part is the level-``k`` heat transform of ``f``; the optional
    finite-rank ``perturbation = (C, space)`` contributes its exact Berezin
    transform.
    """
    radii = _increasing(radii)
    warn = []
    if f.vo is False:
        warn.append(f"symbol {f.tag} is not tagged VO; the estimate may be meaningless")
    else:
        vo = vo_profile(f, radii[-1:], angles=8)
        if vo.verdict_hint == INCONSISTENT:
            warn.append("sampled oscillation does not vanish at the largest radius")
    for w in warn:
        warnings.warn(w, stacklevel=2)
    theta = 2 * np.pi * np.arange(angles) / angles
    clouds = []
    for r in radii:
        pts = r * np.exp(1j * theta)
        vals = np.array([heat_transform(f, z, level, tol) for z in pts])
        if perturbation is not None:
            C, space = perturbation
            vals = vals + np.array([perturbation_berezin(C, space, z, level) for z in pts])
        clouds.append(vals)
    return EssSpectrumEstimate(list(radii), clouds, level, warn)


# --------------------------------------------------------------------------
# transfer identity and Hankel probes


def toeplitz_transfer_check(f: Symbol, spec: TruncationSpec, z: complex, j: int, k: int,
                            n: int | None = None) -> tuple[complex, complex, float]:
    """``(<T_{f,n} l_{z,j}, l_{z,k}>, <W_{-z} T_{f,1} W_z m_k, m_j>, |difference|)``."""
    n = max(j, k) if n is None else n
    if not (1 <= j <= n and 1 <= k <= n <= spec.K):
        raise DomainError("need 1 <= j, k <= n <= K")
    Tn = toeplitz_matrix(f, spec, order=n)
    lhs = complex(berezin_matrix(Tn, z)[k - 1, j - 1])
    T1 = toeplitz_matrix(f, spec, level=1)
    C = conjugate_by_weyl(T1, z).entries
    rhs = complex(C[j - 1, k - 1])
    return lhs, rhs, abs(lhs - rhs)


def hankel_k_independence_probe(f: Symbol, spec: TruncationSpec, levels: Sequence[int] = (1, 2, 3),
                                radii: Sequence[float] = DEFAULT_RAY_RADII,
                                direction: complex = 1.0, window: int = 8,
                                mode: str = "hankel",
                                thresholds: dict | None = None) -> DiagnosticsReport:
    """Per level ``k``: norm of the shifted Hankel (or Toeplitz) operator on a window.

    With ``f_r = f(. + r theta)`` and the window ``{e_{k,j} : j < window}``,
    the Hankel profile is ``sqrt(lambda_max(M_{|f_r|^2} - A^* A))`` where
    ``A = P_(k) M_{f_r}`` restricted to the window (range degrees up to
    ``window + margin_J``).  This is ``||H_{f,(k)} W_z||`` on the window.  The
    Toeplitz sibling reports ``||A||`` and attaches no equivalence claim.
    """
    if mode not in ("hankel", "toeplitz"):
        raise DomainError("mode must be 'hankel' or 'toeplitz'")
    th = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    levels = tuple(sorted(set(int(k) for k in levels)))
    if not levels or levels[0] < 1 or levels[-1] > spec.K:
        raise DomainError(f"levels must lie in 1..{spec.K}")
    radii = _increasing(radii)
    direction = complex(direction) / abs(complex(direction))
    cols = Subspace(levels, window)
    rows = Subspace(levels, window + max(spec.margin_J, 1))
    series = {k: [] for k in levels}
    for r in radii:
        z = r * direction
        if f.separable:
            A_all, B_all = shifted_gram([f, f.abs2()], z, rows, cols, f.breaks, f.radial_width)
        else:
            A_all = shifted_multiplication_matrix(f, z, spec, rows, cols).entries
            B_all = shifted_multiplication_matrix(f.abs2(), z, spec, rows, cols).entries
        for k in levels:
            ri = Subspace((k,), rows.degrees).embedding(rows)
            ci = Subspace((k,), window).embedding(cols)
            A = A_all[np.ix_(ri, ci)]
            if mode == "toeplitz":
                val = float(np.linalg.norm(A[:window], 2))
            else:
                B = B_all[np.ix_(ri[:window], ci)]
                G = B - A.conj().T @ A
                lam = float(np.linalg.eigvalsh(0.5 * (G + G.conj().T)).max())
                val = math.sqrt(max(lam, 0.0))
            series[k].append((r, val))
    hints = {k: verdict([v for _, v in s], th["consistent"], th["inconsistent"])
             for k, s in series.items()}
    worst = [(r, max(series[k][i][1] for k in levels)) for i, r in enumerate(radii)]
    agree = len(set(hints.values())) == 1
    return DiagnosticsReport(
        "hankel-k" if mode == "hankel" else "toeplitz-k", worst,
        next(iter(hints.values())) if agree else INCONCLUSIVE,
        {**th, "window": window},
        series={f"level-{k}": s for k, s in series.items()},
        data={"level_verdicts": {str(k): v for k, v in hints.items()}, "levels_agree": agree,
              **_symbol_data(f)})


def ell2_band_profile(T: OperatorMatrix, n: int) -> list[tuple[int, float]]:
    """``k -> ||P_n A^k T (Adag)^k P_n||`` for ``T`` on the full truncation.

    Only shifts that keep the image inside the truncation are reported; no
    verdict is attached.
    """
    spec = T.spec
    if T.rows != spec.full() or T.cols != spec.full():
        raise DomainError("ell2 band profile needs an operator on the full truncation")
    A = ladder_matrix(spec, "A").entries
    Ad = ladder_matrix(spec, "Adag").entries
    P = projection_matrix(spec, order=n).entries
    out = []
    left, right = P, P
    for k in range(0, spec.K - n + 1):
        out.append((k, float(np.linalg.norm(left @ T.entries @ right, 2))))
        left, right = left @ A, Ad @ right
    return out


# --------------------------------------------------------------------------


def _increasing(radii) -> list[float]:
    radii = [float(r) for r in radii]
    if not radii:
        raise DomainError("need at least one radius")
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] < 0:
        raise DomainError("radii must be nonnegative and strictly increasing")
    return radii


def _symbol_data(f) -> dict:
    return {"symbol": f.descriptor} if isinstance(f, Symbol) else {}
