"""Identity-verification suite behind ``polyfock verify``.

Every check reports a measured residual next to its tolerance.  Checks that
involve truncated Weyl matrices are evaluated on interior indices: the
leading degrees whose Weyl columns lose at most ``INTERIOR_LEAK`` of their
mass to the truncation at the largest displacement used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import symbols as lib
from .basis import Subspace, TruncationSpec, kernel_eval, weighted_profiles
from .berezin import berezin_matrix, berezin_standard, circle_grid
from .config import DEFAULT_PROBE_RADII, RunConfig
from .diagnostics import toeplitz_transfer_check
from .operators import (
    conjugate_by_weyl,
    hankel_gram,
    hankel_product_rhs,
    ladder_matrix,
    multiplication_matrix,
    projection_matrix,
    toeplitz_matrix,
    weyl_block,
    weyl_matrix,
)
from .specfun import laguerre

INTERIOR_LEAK = 1e-12
COVARIANCE_PAIRS = 20
COVARIANCE_RADIUS = 1.5
COMPOSITION_RADIUS = 1.5
UNITARITY_RADIUS = 2.0
CONJUGATION_RADIUS = 1.0
FIXED_PROBE_RADII = (COVARIANCE_RADIUS * 2,)

# default tolerances per check
TOLERANCES = {
    "ladder: A Adag = I (levels < K)": 1e-12,
    "ladder: Adag A = I - P(1)": 1e-12,
    "ladder: Adag P(k) A = P(k+1)": 1e-12,
    "ladder: N = adag a": 1e-12,
    "ladder: [a, adag] = I (levels < K)": 1e-12,
    "laguerre: sum identity": 1e-10,
    "laguerre: derivative identity": 1e-6,
    "basis: Gram orthonormality": 1e-10,
    "kernel: K_n = sum of K_(k), n <= 8": 1e-10,
    "weyl: W_0 = I": 0.0,
    "weyl: unitarity (interior)": 1e-7,
    "weyl: composition W_z W_w (interior)": 1e-7,
    "weyl: block diagonal": 0.0,
    "weyl: conjugation W_-z M_f W_z = M_f(.+z) (interior)": 1e-6,
    "berezin: shift covariance": 1e-6,
    "counterexample: standard transform vanishes": 1e-8,
    "counterexample: matrix transform = diag(1, -1)": 1e-10,
    "counterexample: operator norm = 1": 1e-12,
    "spectrum: gaussian eigenvalues": 1e-8,
    "spectrum: phase eigenvalue moduli": 1e-6,
    "hankel: product identity": 1e-6,
    "toeplitz: transfer identity": 1e-6,
}


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": float(self.residual),
                "tolerance": float(self.tolerance), "passed": self.passed,
                "detail": self.detail}


def _max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def interior_mask(space: Subspace, degrees: int, levels: int | None = None) -> np.ndarray:
    mask = space.degree_of < degrees
    if levels is not None:
        mask &= space.level_of <= levels
    return mask


def weyl_interior(J: int, zs) -> int:
    """Leading degrees whose columns of ``D(z)`` leak at most ``INTERIOR_LEAK`` for every ``z``."""
    count = J
    for z in zs:
        leak = 1.0 - np.sum(np.abs(weyl_block(z, J)) ** 2, axis=0)
        bad = np.nonzero(leak > INTERIOR_LEAK)[0]
        count = min(count, int(bad[0]) if bad.size else J)
    return count


def _sub(E: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return E[np.ix_(mask, mask)]


# --------------------------------------------------------------------------
# individual suites


def ladder_checks(spec: TruncationSpec) -> list[Check]:
    a, ad = ladder_matrix(spec, "a").entries, ladder_matrix(spec, "adag").entries
    A, Ad = ladder_matrix(spec, "A").entries, ladder_matrix(spec, "Adag").entries
    N = ladder_matrix(spec, "N").entries
    I = np.eye(spec.dim)
    space = spec.full()
    inner = space.level_of < spec.K
    P = [None] + [projection_matrix(spec, level=k).entries for k in range(1, spec.K + 1)]
    shift = max((_max_abs(Ad @ P[k] @ A - P[k + 1]) for k in range(1, spec.K)), default=0.0)
    return [
        Check("ladder: A Adag = I (levels < K)", _max_abs(_sub(A @ Ad - I, inner)),
              0.0, {"levels": spec.K - 1}),
        Check("ladder: Adag A = I - P(1)", _max_abs(Ad @ A - (I - P[1])), 0.0),
        Check("ladder: Adag P(k) A = P(k+1)", shift, 0.0, {"k_max": spec.K - 1}),
        Check("ladder: N = adag a", _max_abs(ad @ a - N), 0.0),
        Check("ladder: [a, adag] = I (levels < K)", _max_abs(_sub(a @ ad - ad @ a - I, inner)),
              0.0, {"levels": spec.K - 1}),
    ]


def laguerre_checks() -> list[Check]:
    worst = 0.0
    for x in (0.0, 0.5, 1.0, 4.0, 10.0):
        total = 0.0
        for n in range(1, 33):
            total += laguerre(n - 1, 0, x)
            ref = laguerre(n - 1, 1, x)
            worst = max(worst, abs(total - ref) / (1 + abs(ref)))
    h = 1e-5
    dworst = 0.0
    for k in range(2, 17):
        for x in (0.3, 1.0, 3.0):
            fd = (laguerre(k - 1, 0, x + h) - laguerre(k - 1, 0, x - h)) / (2 * h)
            dworst = max(dworst, abs(fd + laguerre(k - 2, 1, x)))
    return [Check("laguerre: sum identity", worst, 0.0, {"n_max": 32}),
            Check("laguerre: derivative identity", dworst, 0.0, {"k_max": 16, "step": h})]


def basis_checks(spec: TruncationSpec, rule, rng: np.random.Generator) -> list[Check]:
    space = spec.full()
    phi = weighted_profiles(space, rule)
    # angular integration selects equal frequencies
    same = space.frequencies[:, None] == space.frequencies[None, :]
    G = np.where(same, phi @ phi.T, 0.0)
    if rule.angular_count <= int(np.ptp(space.frequencies)):
        # an inexact angular rule aliases frequencies; integrate explicitly
        theta = rule.angles
        ph = np.exp(1j * np.outer(space.frequencies, theta))
        G = sum((phi[:, i, None] * ph) @ (phi[:, i, None] * ph).conj().T
                for i in range(rule.radial_count)) / rule.angular_count
    gram = _max_abs(G - np.eye(space.dim))
    worst = 0.0
    for _ in range(8):
        z, w = (complex(*rng.uniform(-1.4, 1.4, 2)) for _ in range(2))
        for n in range(1, 9):
            lhs = kernel_eval(z, w, order=n)
            rhs = sum(kernel_eval(z, w, level=k) for k in range(1, n + 1))
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1.0))
    return [Check("basis: Gram orthonormality", gram, 0.0,
                  {"basis_size": space.dim, "quadrature": rule.describe()}),
            Check("kernel: K_n = sum of K_(k), n <= 8", worst, 0.0, {"pairs": 8})]


def weyl_checks(spec: TruncationSpec, rule, rng: np.random.Generator) -> list[Check]:
    space = spec.full()
    J = spec.J
    out = [Check("weyl: W_0 = I", _max_abs(weyl_matrix(0, spec).entries - np.eye(spec.dim)), 0.0)]

    uz = [UNITARITY_RADIUS * np.exp(1j * t) for t in (0.3, 1.9, 4.0)] + [1.0 + 0.5j]
    n_in = weyl_interior(J, uz)
    mask = interior_mask(space, n_in)
    worst = 0.0
    for z in uz:
        W = weyl_matrix(z, spec).entries
        worst = max(worst, _max_abs(_sub(W.conj().T @ W - np.eye(spec.dim), mask)))
    out.append(Check("weyl: unitarity (interior)", worst, 0.0,
                     {"interior_degrees": n_in, "max_abs_z": UNITARITY_RADIUS}))

    pairs = [tuple(COMPOSITION_RADIUS * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
                   for _ in range(2)) for _ in range(6)]
    pairs.append((COMPOSITION_RADIUS, COMPOSITION_RADIUS * 1j))
    n_in = weyl_interior(J, [w for _, w in pairs] + [z + w for z, w in pairs])
    mask = interior_mask(space, n_in)
    worst = 0.0
    for z, w in pairs:
        lhs = weyl_matrix(z, spec).entries @ weyl_matrix(w, spec).entries
        rhs = np.exp(-1j * (z * np.conj(w)).imag) * weyl_matrix(z + w, spec).entries
        worst = max(worst, _max_abs(_sub(lhs - rhs, mask)))
    out.append(Check("weyl: composition W_z W_w (interior)", worst, 0.0,
                     {"interior_degrees": n_in, "pairs": len(pairs)}))

    W = weyl_matrix(1.0 - 0.5j, spec).entries
    off = W.copy()
    for k in range(spec.K):
        off[k * J:(k + 1) * J, k * J:(k + 1) * J] = 0.0
    out.append(Check("weyl: block diagonal", _max_abs(off), 0.0))

    f = lib.monomial(1, 1)
    M = multiplication_matrix(f, spec, rule=rule)
    zs = [CONJUGATION_RADIUS * np.exp(1j * t) for t in (0.0, 2.2)] + [0.4 - 0.3j]
    n_in = weyl_interior(J, zs) - 1
    mask = interior_mask(space, n_in, spec.K - 1)
    worst = 0.0
    for z in zs:
        lhs = conjugate_by_weyl(M, z).entries
        rhs = multiplication_matrix(f.shifted(z), spec, rule=rule).entries
        worst = max(worst, _max_abs(_sub(lhs - rhs, mask)))
    out.append(Check("weyl: conjugation W_-z M_f W_z = M_f(.+z) (interior)", worst, 0.0,
                     {"symbol": f.descriptor, "interior_degrees": n_in,
                      "interior_levels": spec.K - 1}))
    return out


def covariance_check(spec: TruncationSpec, rng: np.random.Generator, n: int = 3) -> Check:
    n = min(n, spec.K)
    syms = [lib.angular(), lib.gaussian(1.0), lib.monomial(1, 1), lib.heaviside_strip(1.0, 2.0)]
    ops = [toeplitz_matrix(f, spec, order=n) for f in syms]
    worst = 0.0
    for i in range(COVARIANCE_PAIRS):
        z, zeta = (COVARIANCE_RADIUS * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
                   for _ in range(2))
        T = ops[i % len(ops)]
        lhs = berezin_matrix(conjugate_by_weyl(T, zeta), z)
        rhs = berezin_matrix(T, z + zeta)
        worst = max(worst, _max_abs(lhs - rhs))
    return Check("berezin: shift covariance", worst, 0.0,
                 {"pairs": COVARIANCE_PAIRS, "n": n, "symbols": [f.tag for f in syms]})


def counterexample_checks(spec: TruncationSpec, radii, angles: int) -> list[Check]:
    space = spec.first(2)
    D = (projection_matrix(spec, level=1) - projection_matrix(spec, level=2)).restrict(space, space)
    grid = circle_grid(radii, angles)
    std = max(abs(berezin_standard(D, z)) for z in grid)
    mat = max(_max_abs(berezin_matrix(D, z) - np.diag([1.0, -1.0])) for z in grid)
    return [
        Check("counterexample: standard transform vanishes", std, 0.0,
              {"points": int(grid.size), "max_radius": max(radii)}),
        Check("counterexample: matrix transform = diag(1, -1)", mat, 0.0,
              {"points": int(grid.size)}),
        Check("counterexample: operator norm = 1", abs(D.norm() - 1.0), 0.0),
    ]


def spectrum_checks(spec: TruncationSpec) -> list[Check]:
    count = min(33, spec.J)
    ev = np.sort(np.linalg.eigvals(toeplitz_matrix(lib.gaussian(1.0), spec, level=1).entries).real)
    ev = ev[::-1][:count]
    g = _max_abs(ev - 2.0 ** -(np.arange(count) + 1.0))
    ev = np.sort(np.abs(np.linalg.eigvals(toeplitz_matrix(lib.phase(), spec, level=1).entries)))[::-1]
    p = _max_abs(ev - 2.0 ** (-(np.arange(spec.J) + 1.0) / 2))
    return [Check("spectrum: gaussian eigenvalues", g, 0.0, {"count": count}),
            Check("spectrum: phase eigenvalue moduli", p, 0.0, {"count": spec.J})]


def hankel_check(spec: TruncationSpec) -> Check:
    worst, cases = 0.0, []
    for f in (lib.angular(), lib.phase(), lib.gaussian(1.0)):
        for k in range(1, min(3, spec.K) + 1):
            r = _max_abs(hankel_gram(f, spec, level=k).entries
                         - hankel_product_rhs(f, spec, level=k).entries)
            worst = max(worst, r)
            cases.append([f.tag, k])
    return Check("hankel: product identity", worst, 0.0, {"cases": cases})


def transfer_check(spec: TruncationSpec) -> Check:
    syms = [lib.angular(), lib.gaussian(1.0), lib.monomial(1, 1), lib.phase()]
    zs = [1.0, 0.5 - 1.2j, -1.5j]
    jk = [(1, 2), (2, 3), (3, 1)]
    worst, cases = 0.0, []
    for i, f in enumerate(syms):
        for t, z in enumerate(zs):
            j, k = jk[(i + t) % len(jk)]
            if max(j, k) > spec.K:
                continue
            worst = max(worst, toeplitz_transfer_check(f, spec, z, j, k)[2])
            cases.append([f.tag, [z.real, z.imag] if isinstance(z, complex) else [z, 0.0], j, k])
    return Check("toeplitz: transfer identity", worst, 0.0, {"cases": cases})


# --------------------------------------------------------------------------


DEFAULT_ANGLES = 16


def run_suite(config: RunConfig) -> list[Check]:
    """Run every check; tolerances come from ``TOLERANCES`` unless ``config.tol`` is set."""
    spec = config.spec
    radii = config.radii if config.radii is not None else DEFAULT_PROBE_RADII
    angles = config.angles if config.angles is not None else DEFAULT_ANGLES
    rule = config.rule()
    rng = np.random.default_rng(config.seed)
    checks = (ladder_checks(spec) + laguerre_checks() + basis_checks(spec, rule, rng)
              + weyl_checks(spec, rule, rng) + [covariance_check(spec, rng)]
              + counterexample_checks(spec, radii, angles) + spectrum_checks(spec)
              + [hankel_check(spec), transfer_check(spec)])
    for c in checks:
        c.tolerance = config.tol if config.tol is not None else TOLERANCES[c.name]
    return checks


def probe_radii(config: RunConfig) -> tuple[float, ...]:
    """Every displacement modulus the suite evaluates coherent states at."""
    radii = config.radii if config.radii is not None else DEFAULT_PROBE_RADII
    return tuple(radii) + FIXED_PROBE_RADII
