"""Resolved run configuration shared by every command."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .basis import TruncationSpec, gate_radius_sq
from .errors import DomainError, RangeError
from .quadrature import QuadratureRule, build_rule, default_rule

DEFAULT_SPEC = TruncationSpec(6, 64, 4, 8)
DEFAULT_PROBE_RADII = (0.5, 1.0, 1.5, 2.0, 3.0)


def parse_ints(text: str, name: str, sizes: tuple[int, ...]) -> tuple[int, ...]:
    try:
        vals = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise DomainError(f"{name}: expected comma-separated integers, got {text!r}") from exc
    if len(vals) not in sizes:
        raise DomainError(f"{name}: expected {' or '.join(map(str, sizes))} values")
    return vals


def parse_spec(text: str) -> TruncationSpec:
    vals = parse_ints(text, "--spec", (2, 4))
    K, J = vals[:2]
    mK, mJ = vals[2:] if len(vals) == 4 else (DEFAULT_SPEC.margin_K, DEFAULT_SPEC.margin_J)
    return TruncationSpec(K, J, mK, mJ)


def parse_radii(text: str) -> tuple[float, ...]:
    try:
        radii = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise DomainError(f"--radii: expected comma-separated numbers, got {text!r}") from exc
    if not radii or any(not math.isfinite(r) or r < 0 for r in radii):
        raise DomainError("--radii: radii must be finite and nonnegative")
    return radii


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; :meth:`to_dict` is echoed in every output."""

    command: str
    spec: TruncationSpec = DEFAULT_SPEC
    quad: tuple[int, int] | None = None
    radii: tuple[float, ...] | None = None
    symbol: str | None = None
    level: int | None = None
    poly: int | None = None
    grid: str = "circles"
    angles: int | None = None
    mode: str | None = None
    operator: str = "toeplitz"
    probe: str | None = None
    thresholds: dict = field(default_factory=lambda: {"consistent": 0.02, "inconsistent": 0.2})
    tol: float | None = None
    seed: int = 0
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        """Raise :class:`DomainError`/:class:`RangeError` on inconsistent settings."""
        if self.level is not None and self.poly is not None:
            raise DomainError("--level and --poly are mutually exclusive")
        for name, v in (("--level", self.level), ("--poly", self.poly)):
            if v is not None and not 1 <= v <= self.spec.K:
                raise RangeError(f"{name} {v} outside 1..{self.spec.K}")
        if self.tol is not None and not (self.tol >= 0 and math.isfinite(self.tol)):
            raise DomainError("--tol must be a finite nonnegative number")
        if self.angles is not None and self.angles < 1:
            raise DomainError("--angles must be positive")
        if self.quad is not None:
            R, M = self.quad
            need = self.spec.K + self.spec.J - 2
            if R < 1 or M < 1 or 2 * R - 1 < 2 * need or M <= need:
                raise DomainError(
                    f"--quad {R},{M} is not exact for the Gram integrands of K={self.spec.K},"
                    f" J={self.spec.J}: need R >= {need + 1} and M >= {need + 1}")

    def check_gate(self, radii) -> None:
        """Fail up front when a probe radius exceeds the coherent-state gate."""
        limit = gate_radius_sq(self.spec.J)
        bad = sorted({r for r in radii if r * r > limit})
        if bad:
            raise RangeError(
                f"probe radii {bad} exceed the coherent-state gate: |z|^2 must be at most"
                f" J - 4 sqrt(J) = {limit:.4g} for J = {self.spec.J}")

    def rule(self) -> QuadratureRule:
        if self.quad is not None:
            return build_rule(*self.quad)
        return default_rule(self.spec.K, self.spec.J)

    def clip_radius(self) -> float:
        """Monomial clipping radius: the outermost radial node of the active rule."""
        return float(self.rule().radii[-1])

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "spec": self.spec.to_dict(),
            "quad": list(self.quad) if self.quad else None,
            "radii": list(self.radii) if self.radii is not None else None,
            "symbol": self.symbol,
            "level": self.level,
            "poly": self.poly,
            "grid": self.grid,
            "angles": self.angles,
            "mode": self.mode,
            "operator": self.operator,
            "probe": self.probe,
            "thresholds": dict(self.thresholds),
            "tol": self.tol,
            "seed": self.seed,
            "format": self.format,
        }
