"""Dense matrices of ladder, projection, Weyl, multiplication, Toeplitz and Hankel operators.

Matrices act on coefficient vectors in the basis ``e_{k,j}`` (see
:mod:`polyfock.basis`); entry ``[row, col]`` is ``<A e_col, e_row>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .basis import (Subspace, TruncationSpec, check_gate, radial_profiles)
from .errors import AccuracyError, DomainError
from .quadrature import (QuadratureRule, build_panel_rule, default_rule, integrate_nu,
                         panel_extent, radial_panel_nodes)
from .specfun import laguerre, laguerre_table, log_factorials
from .symbols import Symbol

HANKEL_LEAK_TOL = 1e-3
DEFAULT_MARGINS = (4, 8)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix from ``cols`` to ``rows`` of a truncated model."""

    spec: TruncationSpec
    rows: Subspace
    cols: Subspace
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.rows.dim, self.cols.dim):
            raise DomainError(
                f"entries shape {entries.shape} does not match {self.rows.dim}x{self.cols.dim}"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def square(self) -> bool:
        return self.rows == self.cols

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.spec, self.cols, self.rows, self.entries.conj().T,
                              f"adjoint({self.label})")

    def norm(self) -> float:
        """Spectral norm (largest singular value)."""
        if self.entries.size == 0:
            return 0.0
        return float(np.linalg.norm(self.entries, 2))

    def restrict(self, rows: Subspace | None = None, cols: Subspace | None = None) -> "OperatorMatrix":
        """Compress to sub-blocks given by smaller subspaces."""
        rows = self.rows if rows is None else rows
        cols = self.cols if cols is None else cols
        r, c = rows.embedding(self.rows), cols.embedding(self.cols)
        return OperatorMatrix(self.spec, rows, cols, self.entries[np.ix_(r, c)], self.label)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.cols != other.rows:
            raise DomainError("incompatible operator shapes")
        return OperatorMatrix(self.spec, self.rows, other.cols, self.entries @ other.entries,
                              f"{self.label}*{other.label}")

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._same_shape(other)
        return OperatorMatrix(self.spec, self.rows, self.cols, self.entries + other.entries,
                              f"{self.label}+{other.label}")

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._same_shape(other)
        return OperatorMatrix(self.spec, self.rows, self.cols, self.entries - other.entries,
                              f"{self.label}-{other.label}")

    def scaled(self, c: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.spec, self.rows, self.cols, c * self.entries,
                              f"{c}*{self.label}")

    def _same_shape(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise DomainError("operators live on different subspaces")


def identity_matrix(spec: TruncationSpec, space: Subspace | None = None) -> OperatorMatrix:
    space = spec.full() if space is None else space
    return OperatorMatrix(spec, space, space, np.eye(space.dim), "I")


def domain_space(spec: TruncationSpec, level: int | None = None,
                 order: int | None = None) -> Subspace:
    """``F^2_(k)`` (``level=k``) or ``F^2_n`` (``order=n``) inside the truncation."""
    if (level is None) == (order is None):
        raise DomainError("give exactly one of level= or order=")
    return spec.level(level) if level is not None else spec.first(order)


# --------------------------------------------------------------------------
# exact structural operators


def ladder_matrix(spec: TruncationSpec, which: str) -> OperatorMatrix:
    """``a``, ``adag``, ``A``, ``Adag`` or ``N`` on the full truncation.

    ``Adag`` sends ``e_{k,j}`` to ``e_{k+1,j}``; the image of level ``K`` is
    dropped by the truncation.
    """
    K, J = spec.K, spec.J
    space = spec.full()
    level = space.level_of
    out = np.zeros((space.dim, space.dim))
    if which == "N":
        np.fill_diagonal(out, level - 1)
        return OperatorMatrix(spec, space, space, out, "N")
    if which not in ("a", "adag", "A", "Adag"):
        raise DomainError(f"unknown ladder operator {which!r}")
    src = np.arange((K - 1) * J)
    scale = np.sqrt(level[src]) if which in ("a", "adag") else np.ones(src.size)
    out[src + J, src] = scale
    if which in ("a", "A"):
        out = out.T
    return OperatorMatrix(spec, space, space, out, which)


def projection_matrix(spec: TruncationSpec, level: int | None = None,
                      order: int | None = None) -> OperatorMatrix:
    """0/1 diagonal onto ``F^2_(k)`` or ``F^2_n`` in the full truncation."""
    target = domain_space(spec, level, order)
    space = spec.full()
    diag = np.isin(space.level_of, target.levels).astype(float)
    label = f"P({level})" if level is not None else f"P{order}"
    return OperatorMatrix(spec, space, space, np.diag(diag), label)


def flip_matrix(spec: TruncationSpec, space: Subspace | None = None) -> OperatorMatrix:
    """``(Uf)(z) = f(-z)``: diagonal with ``(-1)^(j + k - 1)``."""
    space = spec.full() if space is None else space
    sign = (-1.0) ** (space.degree_of + space.level_of - 1)
    return OperatorMatrix(spec, space, space, np.diag(sign), "flip")


def weyl_block(z: complex, degrees: int) -> np.ndarray:
    """Matrix ``D[j', j] = <W_z e_{1,j}, e_{1,j'}>`` for ``j, j' < degrees``.

    Uses the closed form in terms of ``L_j^(d)(|z|^2)``; the prefactors are
    assembled in log space.
    """
    z = complex(z)
    J = int(degrees)
    x = abs(z) ** 2
    if z == 0:
        return np.eye(J, dtype=complex)
    lf = log_factorials(J)
    j = np.arange(J)
    d = np.arange(J)
    lag = laguerre_table(J - 1, d[None, :], x)[:, 0, :]  # [n, d] = L_n^(d)(x)
    jj, jp = np.meshgrid(j, j)  # jj = column index j, jp = row index j'
    lo = np.minimum(jj, jp)
    diff = np.abs(jp - jj)
    logmag = -0.5 * x + 0.5 * (lf[lo] - lf[lo + diff]) + diff * math.log(abs(z))
    lval = lag[lo, diff]
    lower = jp >= jj
    ph = np.where(lower, np.exp(-1j * diff * np.angle(z)), np.exp(1j * diff * np.angle(-z)))
    return np.exp(logmag) * lval * ph


def weyl_matrix(z: complex, spec: TruncationSpec, space: Subspace | None = None,
                gate: bool = True) -> OperatorMatrix:
    """``W_z`` on the truncation: identical blocks ``D(z)`` on every level."""
    space = spec.full() if space is None else space
    if gate:
        check_gate(z, space.degrees)
    D = weyl_block(z, space.degrees)
    return OperatorMatrix(spec, space, space, np.kron(np.eye(len(space.levels)), D),
                          f"W({complex(z)})")


def conjugate_by_weyl(T: OperatorMatrix, z: complex, gate: bool = True) -> OperatorMatrix:
    """``W_{-z} T W_z`` computed as ``W_z^* T W_z``."""
    if not T.square:
        raise DomainError("conjugation needs a square operator")
    W = weyl_matrix(z, T.spec, T.rows, gate=gate).entries
    return OperatorMatrix(T.spec, T.rows, T.cols, W.conj().T @ T.entries @ W,
                          f"W(-z){T.label}W(z)")


# --------------------------------------------------------------------------
# multiplication, Toeplitz, Hankel


def _poly_degree(*spaces: Subspace) -> int:
    return sum(max(s.levels) - 1 + s.degrees - 1 for s in spaces) + 1


def symbol_panel_rule(f: Symbol, rows: Subspace, cols: Subspace,
                      angular_count: int = 1) -> QuadratureRule:
    """Radial panel rule adequate for ``profile * rho_row * rho_col``."""
    degree = _poly_degree(rows, cols)
    return build_panel_rule(angular_count, degree, breaks=f.breaks,
                            width=f.radial_width(panel_extent(degree)))


def _multiplication_fast(f: Symbol, rows: Subspace, cols: Subspace) -> np.ndarray:
    rule = symbol_panel_rule(f, rows, cols)
    s = rule.radii
    prof = np.asarray(f.profile(s), dtype=complex)
    f.check_bound(prof)
    phi_r = radial_profiles(rows, s, 0.5 * rule.log_weights)
    phi_c = radial_profiles(cols, s, 0.5 * rule.log_weights)
    G = (phi_r * prof[None, :]) @ phi_c.T
    mask = rows.frequencies[:, None] == cols.frequencies[None, :] + f.harmonic
    return np.where(mask, G, 0.0)


def _multiplication_generic(f: Symbol, rows: Subspace, cols: Subspace,
                            rule: QuadratureRule) -> np.ndarray:
    fvals = f(rule.nodes())
    f.check_bound(fvals)
    F = np.fft.ifft(fvals, axis=1)
    M = rule.angular_count
    D = (cols.frequencies[None, :] - rows.frequencies[:, None]) % M
    phi_r = radial_profiles(rows, rule.radii, 0.5 * rule.log_weights)
    phi_c = radial_profiles(cols, rule.radii, 0.5 * rule.log_weights)
    G = np.zeros((rows.dim, cols.dim), dtype=complex)
    for i in range(rule.radial_count):
        G += np.outer(phi_r[:, i], phi_c[:, i]) * F[i][D]
    return G


def generic_rule(rows: Subspace, cols: Subspace, breaks=(), width=None) -> QuadratureRule:
    """Product rule for all Gram integrands between ``rows`` and ``cols``.

    Gauss-Laguerre (exact for the polynomial part) unless the symbol has radial
    ``breaks``; then radial panels with edges on the breaks, since Gauss-Laguerre
    converges slowly across a kink or jump.
    """
    levels = max(max(rows.levels), max(cols.levels))
    rule = default_rule(levels, max(rows.degrees, cols.degrees))
    if not breaks:
        return rule
    degree = _poly_degree(rows, cols)
    return build_panel_rule(rule.angular_count, degree, breaks=breaks,
                            width=width(panel_extent(degree)) if width else 0.5)


def multiplication_matrix(f: Symbol, spec: TruncationSpec, rule: QuadratureRule | None = None,
                          *, rows: Subspace | None = None, cols: Subspace | None = None,
                          fast: bool = True) -> OperatorMatrix:
    """``<f e_col, e_row>`` for all basis pairs.

    Polar-separable symbols use a 1-D radial panel integral with exact angular
    selection unless ``fast=False`` or an explicit ``rule`` is passed.  The
    generic path integrates on a product rule (default: :func:`generic_rule`).
    """
    rows = spec.full() if rows is None else rows
    cols = spec.full() if cols is None else cols
    if fast and rule is None and f.separable:
        G = _multiplication_fast(f, rows, cols)
    else:
        G = _multiplication_generic(f, rows, cols, rule or generic_rule(rows, cols, f.breaks,
                                                                        f.radial_width))
    return OperatorMatrix(spec, rows, cols, G, f"M[{f.tag}]")


def toeplitz_matrix(f: Symbol, spec: TruncationSpec, level: int | None = None,
                    order: int | None = None, rule: QuadratureRule | None = None,
                    fast: bool = True) -> OperatorMatrix:
    """``T_{f,(k)}`` or ``T_{f,n}``: the compression of ``M_f`` to the domain."""
    dom = domain_space(spec, level, order)
    M = multiplication_matrix(f, spec, rule, rows=dom, cols=dom, fast=fast)
    label = f"T[{f.tag},({level})]" if level is not None else f"T[{f.tag},{order}]"
    return OperatorMatrix(spec, dom, dom, M.entries, label)


@dataclass(frozen=True)
class HankelResult:
    matrix: OperatorMatrix
    leak: np.ndarray
    relative_leak: np.ndarray


def hankel_matrix(f: Symbol, spec: TruncationSpec, level: int | None = None,
                  order: int | None = None, rule: QuadratureRule | None = None,
                  tol: float = HANKEL_LEAK_TOL, fast: bool = True) -> HankelResult:
    """``(I - P) M_f`` on the domain, with range in the margined truncation.

    Per column the leak ``||f e||^2 - ||column of M_f in the margined space||^2``
    is the mass lost beyond the margins.  It is measured relative to
    ``bound^2`` (the scale of ``||M_f||^2``) because columns that ``f`` nearly
    annihilates have no meaningful relative error of their own; a relative
    leak above ``tol`` raises :class:`AccuracyError`.
    """
    dom = domain_space(spec, level, order)
    rng = spec.margined()
    M = multiplication_matrix(f, spec, rule, rows=rng, cols=dom, fast=fast).entries
    diag = np.real(np.diag(multiplication_matrix(f.abs2(), spec, rule, rows=dom, cols=dom,
                                                 fast=fast).entries))
    leak = diag - np.sum(np.abs(M) ** 2, axis=0)
    rel = leak / max(f.bound ** 2, 1e-300)
    worst = float(np.max(rel, initial=0.0))
    if worst > tol:
        raise AccuracyError(
            f"Hankel range of {f.tag} leaks {worst:.3e} (relative) past margins"
            f" ({spec.margin_K}, {spec.margin_J}); increase them"
        )
    H = M.copy()
    H[np.isin(rng.level_of, dom.levels), :] = 0.0
    label = f"H[{f.tag},({level})]" if level is not None else f"H[{f.tag},{order}]"
    return HankelResult(OperatorMatrix(spec, rng, dom, H, label), leak, rel)


def hankel_gram(f: Symbol, spec: TruncationSpec, level: int | None = None,
                order: int | None = None) -> OperatorMatrix:
    """``H_f^* H_f`` on the domain from pointwise values of ``H_f e = f e - P(f e)``.

    ``P(f e)`` is expanded on the domain levels with degrees up to
    ``J + margin_J``; the Gram matrix of the resulting functions is taken on a
    2-D panel rule.  No truncation of the Hankel range is involved.
    """
    dom = domain_space(spec, level, order)
    inner = Subspace(dom.levels, spec.J + spec.margin_J)
    P = multiplication_matrix(f, spec, rows=inner, cols=dom).entries
    freq_span = int(np.abs(inner.frequencies).max() + np.abs(dom.frequencies).max()
                    + abs(f.harmonic))
    degree = _poly_degree(inner, inner)
    rule = build_panel_rule(2 * freq_span + 9, degree, breaks=f.breaks,
                            width=f.radial_width(panel_extent(degree)))
    theta = rule.angles
    M = rule.angular_count
    ph_dom = np.exp(1j * np.outer(dom.frequencies, theta))
    ph_in = np.exp(1j * np.outer(inner.frequencies, theta))
    r_dom = radial_profiles(dom, rule.radii, 0.5 * rule.log_weights)
    r_in = radial_profiles(inner, rule.radii, 0.5 * rule.log_weights)
    fv = f(rule.nodes())
    f.check_bound(fv)
    G = np.zeros((dom.dim, dom.dim), dtype=complex)
    for i in range(rule.radial_count):
        cols = fv[i][None, :] * r_dom[:, i, None] * ph_dom
        cols -= P.T @ (r_in[:, i, None] * ph_in)
        G += cols.conj() @ cols.T / M
    return OperatorMatrix(spec, dom, dom, G, f"H*H[{f.tag}]")


def hankel_product_rhs(f: Symbol, spec: TruncationSpec, level: int | None = None,
                       order: int | None = None) -> OperatorMatrix:
    """``T_{|f|^2} - T_{conj f} T_f`` with the inner product over ``J + margin_J`` degrees."""
    dom = domain_space(spec, level, order)
    inner = Subspace(dom.levels, spec.J + spec.margin_J)
    A = multiplication_matrix(f, spec, rows=inner, cols=dom).entries
    B = multiplication_matrix(f.abs2(), spec, rows=dom, cols=dom).entries
    return OperatorMatrix(spec, dom, dom, B - A.conj().T @ A, f"T|f|^2-TfbarTf[{f.tag}]")


# --------------------------------------------------------------------------
# integral-operator norm bound


def banded_kernel_norm_bound(k: int, spec: TruncationSpec | None = None) -> tuple[float, float]:
    """``(||A P_(k)||, 2 ||g||_{L^1(nu)})`` with ``g(z) = -z L_{k-2}^1(|z|^2) / sqrt(k-1)``."""
    if k < 2:
        raise DomainError("the kernel bound needs k >= 2 (A P_(1) = 0)")
    spec = TruncationSpec(max(k, 2), 8) if spec is None else spec
    if k > spec.K:
        raise DomainError(f"level {k} outside the truncation K={spec.K}")
    A = ladder_matrix(spec, "A").entries
    P = projection_matrix(spec, level=k).entries
    norm = float(np.linalg.norm(A @ P, 2))

    def absg(z):
        r2 = np.abs(z) ** 2
        lag = np.array([laguerre(k - 2, 1, x) for x in r2.ravel()]).reshape(r2.shape)
        return np.abs(z) * np.abs(lag) / math.sqrt(k - 1)

    rule = build_panel_rule(1, 2 * k + 2, width=0.25)
    bound = 2.0 * integrate_nu(rule, absg).real
    return norm, float(bound)


# --------------------------------------------------------------------------
# shifted symbols at large distance


LOCAL_DROP = 50.0


def _local_nodes(z0: complex, extent: float, breaks, width: float, arc: float = 1.5,
                 order: int = 16):
    """Nodes ``u`` and weights of ``dA / pi`` on the disk ``|u - z0| <= extent``.

    Polar coordinates about the origin, so radial kinks of the symbol (the
    ``breaks``) become panel edges; each radius gets its own angular arc.
    """
    r, theta0 = abs(z0), math.atan2(z0.imag, z0.real)
    s, ws = radial_panel_nodes(max(0.0, r - extent), r + extent, breaks, width, order)
    x, wx = roots_legendre(order)
    us, wts = [], []
    for si, wi in zip(s, ws):
        c = (si * si + r * r - extent * extent) / (2 * r * si) if r > 0 else -2.0
        if c >= 1.0:
            continue
        if c <= -1.0:
            count = max(32, int(math.ceil(2 * math.pi * si * order / arc)))
            phi = 2 * math.pi * np.arange(count) / count
            wphi = np.full(count, 2 * math.pi / count)
        else:
            half = math.acos(c)
            panels = max(1, int(math.ceil(2 * half * si / arc)))
            edges = np.linspace(theta0 - half, theta0 + half, panels + 1)
            lo, hi = edges[:-1, None], edges[1:, None]
            phi = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
            wphi = (0.5 * (hi - lo) * wx).ravel()
        us.append(si * np.exp(1j * phi))
        wts.append(wi * si * wphi / math.pi)
    return np.concatenate(us), np.concatenate(wts)


def shifted_gram(g, z0: complex, rows: Subspace, cols: Subspace, breaks=(),
                 width=0.5, chunk: int = 200_000):
    """``int g(u) e_col(u - z0) conj(e_row(u - z0)) dmu(u - z0)`` on a local rule.

    ``g`` is a vectorized function of ``u``, or a list of them (then a list of
    matrices is returned).  Only the disk where the Gaussian weight matters is
    sampled, so this stays accurate for symbols that oscillate on scale
    ``1/|z0|`` there.  ``width`` is the radial panel width or a callable
    mapping the outermost radius to one.
    """
    from .basis import basis_values

    funcs = list(g) if isinstance(g, (list, tuple)) else [g]
    z0 = complex(z0)
    extent = panel_extent(_poly_degree(rows, cols), LOCAL_DROP)
    if callable(width):
        width = width(abs(z0) + extent)
    u, w = _local_nodes(z0, extent, breaks, width)
    out = [np.zeros((rows.dim, cols.dim), dtype=complex) for _ in funcs]
    for start in range(0, u.size, chunk):
        uu, ww = u[start:start + chunk], w[start:start + chunk]
        v = uu - z0
        er = basis_values(rows, v, gaussian=True).conj()
        ec = basis_values(cols, v, gaussian=True).T
        for G, fn in zip(out, funcs):
            G += (er * (ww * np.asarray(fn(uu), dtype=complex))) @ ec
    return out if isinstance(g, (list, tuple)) else out[0]


def shifted_multiplication_matrix(f: Symbol, z0: complex, spec: TruncationSpec,
                                  rows: Subspace | None = None, cols: Subspace | None = None,
                                  rule: QuadratureRule | None = None) -> OperatorMatrix:
    """``M_{f(. + z0)}``, which equals ``W_{-z0} M_f W_{z0}`` without any truncated Weyl matrix.

    Polar-separable symbols are integrated on a local rule around ``z0``;
    other symbols use the generic product rule on the shifted evaluator.
    """
    rows = spec.full() if rows is None else rows
    cols = spec.full() if cols is None else cols
    z0 = complex(z0)
    if f.separable and rule is None:
        G = shifted_gram(f, z0, rows, cols, f.breaks, f.radial_width)
    else:
        G = multiplication_matrix(f.shifted(z0), spec, rule, rows=rows, cols=cols).entries
    return OperatorMatrix(spec, rows, cols, G, f"M[{f.tag}(.+{z0})]")
