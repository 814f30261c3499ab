"""Command-line front end.

Commands: ``verify``, ``spectrum``, ``berezin`` and ``diagnose``.  Exit codes:
0 on success, 1 when checks fail or a computation cannot meet its accuracy
target, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import __version__
from .berezin import SCHEMA, _fmt, berezin_field, circle_grid
from .config import DEFAULT_PROBE_RADII, RunConfig, parse_ints, parse_radii, parse_spec
from .diagnostics import (
    DEFAULT_RAY_RADII,
    INCONCLUSIVE,
    DiagnosticsReport,
    compactness_score,
    ell2_band_profile,
    ess_spectrum_estimate,
    hankel_k_independence_probe,
    ray_probe,
    vmo_profile,
    vo_profile,
)
from .errors import AccuracyError, NumericError, PolyfockError
from .io import read_operator
from .operators import (
    OperatorMatrix,
    domain_space,
    flip_matrix,
    identity_matrix,
    multiplication_matrix,
    projection_matrix,
    toeplitz_matrix,
)
from .symbols import Symbol, parse_symbol
from .verify import DEFAULT_ANGLES as VERIFY_ANGLES
from .verify import probe_radii, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

PROBES = ("vo", "vmo", "compactness", "ray", "ess-spec", "hankel-k", "ell2-band")
OPERATORS = ("toeplitz", "identity", "projection-difference", "flip")
MODES = ("scalar", "matrix", "standard", "heat")
DEFAULT_ANGLES = {"berezin": 16, "vo": 16, "vmo": 8, "compactness": 16, "ess-spec": 128,
                  "verify": VERIFY_ANGLES}
DEFAULT_PROBE_RADII_BY_PROBE = {"compactness": (1.0, 2.0, 3.0, 4.0, 5.0),
                                "ess-spec": (16.0, 32.0, 64.0)}


class ConfigError(PolyfockError):
    """Inconsistent command-line configuration."""


# --------------------------------------------------------------------------
# output


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_with_config(config: RunConfig, body: str) -> str:
    """Config echo as a ``#`` comment line, then the CSV header and rows."""
    return "# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n" + body


def _emit(config: RunConfig, files: dict[str, str]) -> None:
    """Write ``name -> text`` into ``--out`` (UTF-8), or to stdout without it."""
    if config.out is None:
        for text in files.values():
            sys.stdout.write(text)
        return
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8", newline="\n")


def _rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# shared helpers


def _symbol(config: RunConfig, required: bool = True) -> Symbol | None:
    if config.symbol is None:
        if required:
            raise ConfigError(f"{config.command} needs --symbol")
        return None
    return parse_symbol(config.symbol, clip_radius=config.clip_radius())


def _domain(config: RunConfig) -> dict:
    if config.poly is not None:
        return {"order": config.poly}
    return {"level": config.level if config.level is not None else 1}


def _angles(config: RunConfig, key: str) -> int:
    return config.angles if config.angles is not None else DEFAULT_ANGLES[key]


# --------------------------------------------------------------------------
# verify


def cmd_verify(config: RunConfig) -> int:
    config = dataclasses.replace(
        config, radii=config.radii if config.radii is not None else DEFAULT_PROBE_RADII,
        angles=_angles(config, "verify"))
    config.check_gate(probe_radii(config))
    checks = run_suite(config)
    failed = [c.name for c in checks if not c.passed]
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{status}  {c.residual:.3e} <= {c.tolerance:.1e}  {c.name}", file=sys.stderr)
    if config.format == "csv":
        body = _rows_to_csv(["name", "residual", "tolerance", "passed"],
                            [[c.name, float(c.residual), float(c.tolerance), str(c.passed).lower()]
                             for c in checks])
        files = {"verify.csv": _csv_with_config(config, body)}
    else:
        files = {"verify.json": _json({"schema": SCHEMA, "kind": "verify",
                                       "config": config.to_dict(),
                                       "checks": [c.to_dict() for c in checks],
                                       "passed": not failed, "failed": failed})}
    _emit(config, files)
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------------------
# spectrum


def _sorted_eigs(values: np.ndarray) -> np.ndarray:
    """Descending modulus, ties broken by real then imaginary part."""
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real, -np.abs(values)))]


def radial_eigenvalues(T: OperatorMatrix) -> np.ndarray:
    """Eigenvalues of a radial Toeplitz matrix from its per-frequency blocks."""
    freq = T.cols.frequencies
    out = []
    for m in np.unique(freq):
        idx = np.nonzero(freq == m)[0]
        out.append(np.linalg.eigvals(T.entries[np.ix_(idx, idx)]))
    return np.concatenate(out)


def cmd_spectrum(config: RunConfig) -> int:
    f = _symbol(config)
    dom = _domain(config)
    rule = config.rule() if config.quad is not None else None
    T = toeplitz_matrix(f, config.spec, rule=rule, **dom)
    eig = _sorted_eigs(np.linalg.eigvals(T.entries))
    sv = np.linalg.svd(T.entries, compute_uv=False)
    header = ["index", "re_eigenvalue", "im_eigenvalue", "abs_eigenvalue", "singular_value"]
    radial = None
    if f.radial:
        fast = T if rule is None else toeplitz_matrix(f, config.spec, **dom)
        lam = radial_eigenvalues(fast)
        rows, cols = linear_sum_assignment(np.abs(eig[:, None] - lam[None, :]))
        radial = np.empty_like(eig)
        radial[rows] = lam[cols]
        header += ["re_radial", "im_radial", "abs_difference"]
    rows_out = []
    for i, (e, s) in enumerate(zip(eig, sv)):
        row = [i, float(e.real), float(e.imag), float(abs(e)), float(s)]
        if radial is not None:
            row += [float(radial[i].real), float(radial[i].imag), float(abs(e - radial[i]))]
        rows_out.append(row)
    if config.format == "csv":
        files = {"spectrum.csv": _csv_with_config(config, _rows_to_csv(header, rows_out))}
    else:
        payload = {"schema": SCHEMA, "kind": "spectrum", "config": config.to_dict(),
                   "operator": T.label, "symbol": f.descriptor,
                   "eigenvalues": [[float(e.real), float(e.imag)] for e in eig],
                   "singular_values": [float(s) for s in sv]}
        if radial is not None:
            payload["radial_eigenvalues"] = [[float(e.real), float(e.imag)] for e in radial]
            payload["max_abs_difference"] = float(np.abs(eig - radial).max())
        files = {"spectrum.json": _json(payload)}
    _emit(config, files)
    return EXIT_OK


# --------------------------------------------------------------------------
# berezin


def _read_grid(path: str) -> np.ndarray:
    """Points from a CSV of ``re,im`` rows; non-numeric rows (headers) are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read grid file {path!r}: {exc}") from exc
    pts = []
    for row in csv.reader(line for line in text.splitlines() if not line.startswith("#")):
        try:
            pts.append(complex(float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            continue
    if not pts:
        raise ConfigError(f"grid file {path!r} has no points")
    return np.array(pts)


def _grid(config: RunConfig) -> np.ndarray:
    if config.grid == "circles":
        return circle_grid(config.radii, _angles(config, "berezin"))
    path = config.grid[5:] if config.grid.startswith("file:") else config.grid
    return _read_grid(path)


def _operator(config: RunConfig) -> OperatorMatrix:
    spec = config.spec
    name = config.operator
    if name == "toeplitz":
        return toeplitz_matrix(_symbol(config), spec, **_domain(config))
    if name == "projection-difference":
        space = spec.first(2)
        return (projection_matrix(spec, level=1) - projection_matrix(spec, level=2)).restrict(
            space, space)
    if name in ("identity", "flip"):
        space = domain_space(spec, **_domain(config))
        return identity_matrix(spec, space) if name == "identity" else flip_matrix(spec, space)
    path = name[5:] if name.startswith("file:") else name
    if not Path(path).is_file():
        raise ConfigError(f"--operator must be one of {', '.join(OPERATORS)} or a PFOK file")
    return read_operator(path)


def cmd_berezin(config: RunConfig) -> int:
    config = dataclasses.replace(
        config, radii=config.radii if config.radii is not None else DEFAULT_PROBE_RADII,
        angles=_angles(config, "berezin") if config.grid == "circles" else config.angles)
    grid = _grid(config)
    mode = config.mode
    if mode == "heat":
        f = _symbol(config)
        sample = berezin_field(f, grid, "heat", level=config.level or 1)
    else:
        T = _operator(config)
        if mode is None:
            mode = "scalar" if len(T.cols.levels) == 1 else "matrix"
        if mode == "scalar":
            sample = berezin_field(T, grid, mode, level=config.level)
        else:
            sample = berezin_field(T, grid, mode, n=config.poly)
    config = dataclasses.replace(config, mode=mode)
    if config.format == "csv":
        files = {"berezin.csv": _csv_with_config(config, sample.to_csv())}
    else:
        files = {"berezin.json": _json({**sample.to_json_dict(), "config": config.to_dict()})}
    _emit(config, files)
    return EXIT_OK


# --------------------------------------------------------------------------
# diagnose


def _probe_radii(config: RunConfig, probe: str) -> tuple[float, ...]:
    if config.radii is not None:
        return config.radii
    return DEFAULT_PROBE_RADII_BY_PROBE.get(probe, DEFAULT_RAY_RADII)


def run_probe(config: RunConfig) -> DiagnosticsReport:
    probe = config.probe
    f = _symbol(config)
    spec, th = config.spec, config.thresholds
    radii = config.radii
    if probe == "vo":
        return vo_profile(f, radii, angles=config.angles, threshold=th["consistent"],
                          inconsistent=th["inconsistent"])
    if probe == "vmo":
        return vmo_profile(f, radii, angles=config.angles, thresholds=th)
    if probe == "compactness":
        T = toeplitz_matrix(f, spec, **_domain(config))
        return compactness_score(T, radii, angles=config.angles, thresholds=th)
    if probe == "ray":
        return ray_probe(f, spec, radii=radii).to_report()
    if probe == "ess-spec":
        return ess_spectrum_estimate(f, config.level or 1, radii, angles=config.angles).to_report()
    if probe == "hankel-k":
        return hankel_k_independence_probe(f, spec, levels=range(1, min(3, spec.K) + 1),
                                           radii=radii, thresholds=th)
    if probe == "ell2-band":
        M = multiplication_matrix(f, spec)
        prof = ell2_band_profile(M, config.poly or 1)
        return DiagnosticsReport("ell2-band", [(float(k), v) for k, v in prof], INCONCLUSIVE,
                                 {}, data={"symbol": f.descriptor, "n": config.poly or 1})
    raise ConfigError(f"--probe must be one of {', '.join(PROBES)}")


def cmd_diagnose(config: RunConfig) -> int:
    if config.probe is None:
        raise ConfigError(f"diagnose needs --probe ({', '.join(PROBES)})")
    if config.probe not in PROBES:
        raise ConfigError(f"--probe must be one of {', '.join(PROBES)}")
    config = dataclasses.replace(
        config, radii=_probe_radii(config, config.probe),
        angles=config.angles if config.angles is not None else DEFAULT_ANGLES.get(config.probe))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = run_probe(config)
    for w in caught:
        print(f"polyfock: warning: {w.message}", file=sys.stderr)
    payload = {**report.to_json_dict(), "config": config.to_dict()}
    name = config.probe
    files = {f"{name}.json": _json(payload), f"{name}.csv": _csv_with_config(config, report.to_csv())}
    if config.out is None:
        files = {k: v for k, v in files.items() if k.endswith("." + config.format)}
    _emit(config, files)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "berezin": cmd_berezin,
            "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyfock",
                                description="Truncated polyanalytic Fock space experiments.")
    p.add_argument("--version", action="version", version=f"polyfock {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--spec", default="6,64,4,8", help="K,J[,margin_K,margin_J]")
    p.add_argument("--quad", help="R,M: Gauss-Laguerre nodes and angular samples")
    p.add_argument("--symbol", help="TAG[:params], e.g. gaussian:1, phase, monomial:1,1")
    dom = p.add_mutually_exclusive_group()
    dom.add_argument("--level", type=int, help="true-polyanalytic level k")
    dom.add_argument("--poly", type=int, help="polyanalytic order n")
    p.add_argument("--radii", help="comma-separated radii")
    p.add_argument("--grid", default="circles", help="circles, or a CSV file of re,im points")
    p.add_argument("--angles", type=int, help="angles per circle")
    p.add_argument("--mode", choices=MODES, help="Berezin transform kind")
    p.add_argument("--operator", default="toeplitz",
                   help=f"{', '.join(OPERATORS)} or a PFOK container path")
    p.add_argument("--probe", help=", ".join(PROBES))
    p.add_argument("--thresholds", help="consistent,inconsistent verdict thresholds")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--tol", type=float, help="override every verify tolerance")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled probe points")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    thresholds = {"consistent": 0.02, "inconsistent": 0.2}
    if args.thresholds:
        try:
            c, i = (float(x) for x in args.thresholds.split(","))
        except ValueError as exc:
            raise ConfigError("--thresholds needs two numbers: consistent,inconsistent") from exc
        if not 0 <= c <= i:
            raise ConfigError("--thresholds must satisfy 0 <= consistent <= inconsistent")
        thresholds = {"consistent": c, "inconsistent": i}
    config = RunConfig(
        command=args.command,
        spec=parse_spec(args.spec),
        quad=parse_ints(args.quad, "--quad", (2,)) if args.quad else None,
        radii=parse_radii(args.radii) if args.radii else None,
        symbol=args.symbol,
        level=args.level,
        poly=args.poly,
        grid=args.grid,
        angles=args.angles,
        mode=args.mode,
        operator=args.operator,
        probe=args.probe,
        thresholds=thresholds,
        tol=args.tol,
        seed=args.seed,
        out=args.out,
        format=args.format,
    )
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except (AccuracyError, NumericError) as exc:
        print(f"polyfock: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except PolyfockError as exc:
        print(f"polyfock: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
