"""Command line: forward map, inverse map, spectra, quantization checks, Wigner.

Exit codes: 0 success, 1 bad input, 2 domain error (no curve, non-confining
potential, truncated state), 3 curve fails the quantization condition.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FermiCurveError, InputError, NotQuantizedError
from .fermi_map import PhaseCurve, curve_area, curve_from_fermi, fermi_from_wavefunction
from .inverse_map import check_quantization, potential_from_curve, reconstruct_wavefunction
from .io import dumps_json, read_csv, write_csv, write_json
from .numerics import DEFAULT_TOL, ToleranceConfig
from .quantization import maxu_rule_evaluate, numerov_eigensolve, spectrum
from .states import (
    Grid,
    PhysicalConstants,
    Potential,
    SampledWavefunction,
    make_hermite_state,
    make_squeezed_gaussian,
)
from .wigner import PhaseSpaceGrid, wigner_gaussian_closed, wigner_numeric

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_NOT_QUANTIZED = 0, 1, 2, 3

FORMATS = """\
File formats (CSV: one header line, '#' comment lines allowed, floats with 17 significant digits)

  wavefunction   x,re,im          uniform x grid
  potential      x,V              strictly increasing x
  phase curve    x,p_plus,p_minus strictly increasing x, p_plus >= p_minus, closed at both ends
  fermi          x,f,g            points where the Fermi pair is defined
  spectrum       n,E,method       method is numerov or qian_dong
  wigner         x,p,W            row-major in x

JSON reports
  forward.json              {"area", "area_over_h", "x_A", "x_B"}
  inverse.json              {"n", "E", "E0", "residual", "E_ref", "overlap_oracle"?}
  spectrum.json             {"ground_energy", "levels": [{"n", "E", "method", "numerov_E"?, "delta"?}]}
  verify.json               {"energy", "n_nodes_psi", "action", "maxu_correction",
                             "maxu_residual", "wkb_residual", ...}
  wigner.json               {"hbar", "norm", "min_W", "max_W"}
  gaussian_comparison.json  {"max_abs_dev", "det_G"}
  error.json                {"error", "message", "exit_code"}
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    constants: PhysicalConstants
    grid: Grid | None
    tol: ToleranceConfig
    output_dir: Path
    args: argparse.Namespace


def _common(p: argparse.ArgumentParser):
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--grid-points", type=int)
    p.add_argument("--abs-tol", type=float, default=DEFAULT_TOL.abs_tol)
    p.add_argument("--rel-tol", type=float, default=DEFAULT_TOL.rel_tol)
    p.add_argument("--output-dir", type=Path, default=Path("."))


def _state_flags(p: argparse.ArgumentParser):
    p.add_argument("--state", choices=["gaussian", "hermite"])
    p.add_argument("--a", type=float, default=1.0, help="Gaussian width parameter")
    p.add_argument("--b", type=float, default=0.0, help="Gaussian chirp parameter")
    p.add_argument("--n", type=int, default=0, help="Hermite index")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--input", type=Path, help="wavefunction CSV (x,re,im)")


def _potential_flags(p: argparse.ArgumentParser):
    p.add_argument("--potential", choices=["harmonic", "morse", "polynomial", "tabulated"], required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--D", type=float, default=8.0, help="Morse depth")
    p.add_argument("--alpha", type=float, default=1.0, help="Morse width")
    p.add_argument("--x-e", type=float, default=0.0, help="Morse centre")
    p.add_argument("--coeffs", type=str, help="polynomial coefficients, increasing order, comma separated")
    p.add_argument("--input", type=Path, help="potential CSV (x,V) for --potential tabulated")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fermicurve", description=__doc__.splitlines()[0])
    parser.add_argument("--seed-docs", action="store_true", help="print the file format reference and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("forward", help="wavefunction -> Fermi function -> phase curve -> area")
    _common(p)
    _state_flags(p)

    p = sub.add_parser("inverse", help="phase curve -> quantization check -> wavefunction")
    _common(p)
    p.add_argument("--input", type=Path, required=True, help="phase curve CSV (x,p_plus,p_minus)")
    p.add_argument("--gauge-x0", type=float)
    p.add_argument("--E-ref", dest="E_ref", type=float)
    p.add_argument("--compare", type=Path, help="wavefunction CSV to report the overlap with")

    p = sub.add_parser("solve", help="spectrum from the ground-state anchored rule")
    _common(p)
    _potential_flags(p)
    p.add_argument("--levels", type=int, default=5, help="highest level index n_max")
    p.add_argument("--oracle", action="store_true", help="cross-check every level with Numerov")

    p = sub.add_parser("verify", help="evaluate the exact and WKB quantization conditions for one level")
    _common(p)
    _potential_flags(p)
    p.add_argument("--level", type=int, default=0)

    p = sub.add_parser("wigner", help="numeric Wigner function on a phase-space grid")
    _common(p)
    _state_flags(p)
    p.add_argument("--x-min", type=float, default=-4.0)
    p.add_argument("--x-max", type=float, default=4.0)
    p.add_argument("--nx", type=int, default=81)
    p.add_argument("--p-min", type=float, default=-4.0)
    p.add_argument("--p-max", type=float, default=4.0)
    p.add_argument("--np", dest="np_", type=int, default=81)
    return parser


def _config(args) -> RunConfig:
    constants = PhysicalConstants(args.hbar, args.mass)
    flags = (args.grid_min, args.grid_max, args.grid_points)
    if all(v is None for v in flags):
        grid = None
    elif any(v is None for v in flags):
        raise InputError("--grid-min, --grid-max and --grid-points go together")
    else:
        grid = Grid(*flags)
    tol = ToleranceConfig(args.abs_tol, args.rel_tol, DEFAULT_TOL.max_iterations)
    args.output_dir.mkdir(parents=True, exist_ok=True)
    return RunConfig(constants, grid, tol, args.output_dir, args)


# -- inputs -----------------------------------------------------------------------

def _read_wavefunction(path) -> SampledWavefunction:
    cols = read_csv(path, ["x", "re", "im"])
    x = cols["x"]
    if x.size < 8:
        raise InputError("wavefunction needs at least 8 samples")
    dx = np.diff(x)
    if not np.all(dx > 0) or np.max(np.abs(dx - dx.mean())) > 1e-9 * (x[-1] - x[0]):
        raise InputError("wavefunction abscissae must be uniformly spaced and increasing")
    return SampledWavefunction(Grid(float(x[0]), float(x[-1]), x.size), cols["re"] + 1j * cols["im"])


def _builtin_state(cfg: RunConfig, points: int):
    a = cfg.args
    c = cfg.constants
    if a.state == "gaussian":
        grid = cfg.grid or _symmetric(math.sqrt(42.0 * c.hbar / a.a) + 1.0, points)
        return make_squeezed_gaussian(a.a, a.b, grid, c)
    scale = math.sqrt(c.hbar / (c.mass * a.omega))
    grid = cfg.grid or _symmetric((7.0 + a.n / 3.0) * scale, points)
    return make_hermite_state(a.n, a.omega, grid, c)


def _symmetric(L: float, points: int) -> Grid:
    return Grid(-L, L, points)


def _state(cfg: RunConfig, points: int) -> SampledWavefunction:
    a = cfg.args
    if a.input is not None:
        psi = _read_wavefunction(a.input)
        return psi.resample(cfg.grid) if cfg.grid is not None else psi
    if a.state is None:
        raise InputError("give --state or --input")
    return _builtin_state(cfg, points)


def _potential(args) -> Potential:
    kind = args.potential
    if kind == "harmonic":
        return Potential.harmonic(args.omega, args.mass)
    if kind == "morse":
        return Potential.morse(args.D, args.alpha, args.x_e)
    if kind == "polynomial":
        if not args.coeffs:
            raise InputError("--potential polynomial needs --coeffs")
        try:
            coeffs = [float(v) for v in args.coeffs.split(",")]
        except ValueError as exc:
            raise InputError(f"bad --coeffs: {exc}") from exc
        return Potential.polynomial(coeffs)
    if args.input is None:
        raise InputError("--potential tabulated needs --input")
    cols = read_csv(args.input, ["x", "V"])
    return Potential.tabulated(cols["x"], cols["V"])


# -- commands ---------------------------------------------------------------------

def cmd_forward(cfg: RunConfig) -> int:
    psi = _state(cfg, 20001)
    F = fermi_from_wavefunction(psi, cfg.constants)
    keep = F.valid_mask
    write_csv(cfg.output_dir / "fermi.csv", ["x", "f", "g"], [F.grid.x[keep], F.f[keep], F.g[keep]])
    C = curve_from_fermi(F, tol=cfg.tol)
    write_csv(cfg.output_dir / "curve.csv", ["x", "p_plus", "p_minus"], [C.x, C.p_plus, C.p_minus])
    area = curve_area(C, cfg.tol)
    summary = {"area": area, "area_over_h": area / cfg.constants.h, "x_A": C.x_A, "x_B": C.x_B}
    write_json(cfg.output_dir / "forward.json", summary)
    print(dumps_json(summary), end="")
    return EXIT_OK


def _read_curve(path) -> PhaseCurve:
    cols = read_csv(path, ["x", "p_plus", "p_minus"])
    return PhaseCurve(cols["x"], cols["p_plus"], cols["p_minus"])


def cmd_inverse(cfg: RunConfig) -> int:
    a = cfg.args
    C = _read_curve(a.input)
    bundle = potential_from_curve(C, E_ref=a.E_ref, gauge_x0=a.gauge_x0, constants=cfg.constants)
    check = check_quantization(C, cfg.constants, cfg.tol, bundle=bundle)
    report = {"n": check.n, "E": None, "E0": check.E0, "residual": check.residual, "E_ref": check.E_ref}
    if check.n is None:
        write_json(cfg.output_dir / "inverse.json", report)
        print(dumps_json(report), end="")
        print(f"curve fails the quantization condition (residual {check.residual:.6g})", file=sys.stderr)
        return EXIT_NOT_QUANTIZED
    psi, check, E_n = reconstruct_wavefunction(C, a.gauge_x0, cfg.grid, cfg.constants, cfg.tol, E_ref=a.E_ref)
    report["E"] = E_n
    if a.compare is not None:
        report["overlap_oracle"] = psi.overlap(_read_wavefunction(a.compare))
    write_csv(cfg.output_dir / "reconstructed.csv", ["x", "re", "im"], [psi.x, psi.values.real, psi.values.imag])
    write_json(cfg.output_dir / "inverse.json", report)
    print(dumps_json(report), end="")
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    a = cfg.args
    if a.levels < 0:
        raise InputError("--levels must be non-negative")
    V = _potential(a)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = spectrum(V, a.levels, cfg.grid, cfg.constants, cfg.tol, oracle=a.oracle)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = spec.to_dict()
    if a.oracle:
        out["max_abs_delta"] = max(abs(lv.delta) for lv in spec.levels)
    write_json(cfg.output_dir / "spectrum.json", out)
    write_csv(cfg.output_dir / "spectrum.csv", ["n", "E", "method"],
              [[lv.n for lv in spec.levels], [lv.energy for lv in spec.levels],
               [lv.method for lv in spec.levels]])
    print(dumps_json(out), end="")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    a = cfg.args
    V = _potential(a)
    E, psi = numerov_eigensolve(V, a.level, cfg.grid, cfg.constants, cfg.tol)
    report = maxu_rule_evaluate(psi, V, E, cfg.constants, cfg.tol).to_dict()
    report["level"] = a.level
    write_json(cfg.output_dir / "verify.json", report)
    print(dumps_json(report), end="")
    return EXIT_OK


def cmd_wigner(cfg: RunConfig) -> int:
    a = cfg.args
    psi = _state(cfg, 8001)
    pg = PhaseSpaceGrid(a.x_min, a.x_max, a.nx, a.p_min, a.p_max, a.np_)
    W = wigner_numeric(psi, pg, cfg.constants)
    X, P = np.meshgrid(pg.x, pg.p, indexing="ij")
    write_csv(cfg.output_dir / "wigner.csv", ["x", "p", "W"], [X.ravel(), P.ravel(), W.ravel()])
    meta = {"hbar": cfg.constants.hbar, "norm": psi.norm() ** 2,
            "min_W": float(W.min()), "max_W": float(W.max())}
    write_json(cfg.output_dir / "wigner.json", meta)
    print(dumps_json(meta), end="")
    if a.input is None and a.state == "gaussian":
        form = wigner_gaussian_closed(a.a, a.b, cfg.constants)
        cmp = {"max_abs_dev": float(np.max(np.abs(W - form.on_grid(pg)))), "det_G": form.det}
        write_json(cfg.output_dir / "gaussian_comparison.json", cmp)
        print(dumps_json(cmp), end="")
    return EXIT_OK


COMMANDS = {
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "wigner": cmd_wigner,
}


def _fail(exc: Exception, code: int, output_dir: Path | None) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    text = dumps_json(payload)
    print(text, end="")
    if output_dir is not None:
        try:
            output_dir.mkdir(parents=True, exist_ok=True)
            (output_dir / "error.json").write_text(text)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed_docs:
        print(FORMATS, end="")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    out = getattr(args, "output_dir", None)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except NotQuantizedError as exc:
        return _fail(exc, EXIT_NOT_QUANTIZED, out)
    except DomainError as exc:
        return _fail(exc, EXIT_DOMAIN, out)
    except (FermiCurveError, ValueError) as exc:
        return _fail(exc, EXIT_INPUT, out)
    except OSError as exc:
        return _fail(exc, EXIT_INPUT, out)


if __name__ == "__main__":
    sys.exit(main())
