"""Command-line front end: degrade / solve / compare / diagnose.

Images travel as binary PGM (P5, maxval 255) mapped linearly to [0, 1];
traces are emitted as CSV with a fixed column schema.  Every command is
deterministic given its flags (all randomness is seeded).

Exit statuses: 0 success, 1 usage error, 2 I/O or format error, 3 numeric
breakdown inside a solver.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import core
from .core import PenaltyConfig
from .deblur import (
    AdmmConfig,
    DeblurSpec,
    ExperimentResult,
    admm_baseline_run,
    build_problem,
    degrade,
    residual_bounds,
    run_experiment,
    snr,
)
from .errors import NumericBreakdownError, PgmFormatError
from .imageops import as_image, gaussian_kernel, tv_forward

TRACE_HEADER = "iter,gamma,phi,psi,feas,dx,dy,snr"

PROFILES = {
    # regularization weight and noise level presets; remaining knobs share
    # the same defaults either way
    "sane": {"lam": 1e-2, "sigma": 1e-3},
    "paper-scale": {"lam": 1e6, "sigma": 1e-8},
}


class UsageError(ValueError):
    """Bad flags or flag values."""


@dataclass
class RunConfig:
    command: str
    algorithm: str = "irpamc"
    input_path: str | None = None
    truth_path: str | None = None
    output_path: str | None = None
    trace_path: str | None = None
    gamma0: float = 10.0
    gamma_bar: float = 1000.0
    a: float = 1.1
    delta: float = 1e-6
    lam: float = 1e-2
    q: float = 0.5
    sigma: float = 1e-3
    beta: float = 1000.0
    kernel_size: int = 9
    kernel_sigma: float = 2.0
    iters: int = 200
    seed: int = 0
    step_tol: float = 0.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--input", dest="input_path")
    shared.add_argument("--truth", dest="truth_path")
    shared.add_argument("--output", dest="output_path")
    shared.add_argument("--trace", dest="trace_path")
    shared.add_argument("--profile", choices=sorted(PROFILES), default="sane")
    shared.add_argument("--gamma0", type=float, default=10.0)
    shared.add_argument("--gamma-bar", type=float, default=1000.0)
    shared.add_argument("--a", type=float, default=1.1)
    shared.add_argument("--delta", type=float, default=1e-6)
    shared.add_argument("--lam", "--lambda", dest="lam", type=float, default=None)
    shared.add_argument("--q", type=float, default=0.5)
    shared.add_argument("--sigma", type=float, default=None)
    shared.add_argument("--beta", type=float, default=1000.0)
    shared.add_argument("--kernel-size", type=int, default=9)
    shared.add_argument("--kernel-sigma", type=float, default=2.0)
    shared.add_argument("--iters", type=int, default=200)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--step-tol", dest="step_tol", type=float, default=0.0)
    parser = _Parser(prog="irpam", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("degrade", parents=[shared])
    solve = sub.add_parser("solve", parents=[shared])
    solve.add_argument("--algorithm", choices=("irpam", "irpamc", "admm"),
                       default="irpamc")
    sub.add_parser("compare", parents=[shared])
    sub.add_parser("diagnose", parents=[shared])
    return parser


def parse_config(argv) -> RunConfig:
    """Parse flags into a validated RunConfig (raises UsageError)."""
    ns = _build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a command is required: degrade | solve | compare | diagnose")
    profile = PROFILES[ns.profile]
    cfg = RunConfig(
        command=ns.command,
        algorithm=getattr(ns, "algorithm", "irpamc"),
        input_path=ns.input_path,
        truth_path=ns.truth_path,
        output_path=ns.output_path,
        trace_path=ns.trace_path,
        gamma0=ns.gamma0,
        gamma_bar=ns.gamma_bar,
        a=ns.a,
        delta=ns.delta,
        lam=profile["lam"] if ns.lam is None else ns.lam,
        q=ns.q,
        sigma=profile["sigma"] if ns.sigma is None else ns.sigma,
        beta=ns.beta,
        kernel_size=ns.kernel_size,
        kernel_sigma=ns.kernel_sigma,
        iters=ns.iters,
        seed=ns.seed,
        step_tol=ns.step_tol,
    )
    if not 0 < cfg.q <= 1:
        raise UsageError(f"--q must lie in (0, 1], got {cfg.q}")
    if cfg.iters < 1:
        raise UsageError("--iters must be at least 1")
    if cfg.gamma0 <= 0 or cfg.gamma_bar < cfg.gamma0:
        raise UsageError("--gamma0 must be positive and --gamma-bar >= --gamma0")
    if cfg.a < 1:
        raise UsageError("--a must be >= 1")
    if cfg.a == 1 and cfg.gamma0 != cfg.gamma_bar:
        raise UsageError("--a 1 (no continuation) requires --gamma0 == --gamma-bar")
    if cfg.delta <= 0:
        raise UsageError("--delta must be positive")
    if cfg.lam <= 0:
        raise UsageError("--lam must be positive")
    if cfg.sigma < 0:
        raise UsageError("--sigma must be nonnegative")
    if cfg.beta <= 0:
        raise UsageError("--beta must be positive")
    if cfg.kernel_size % 2 == 0 or cfg.kernel_size < 1:
        raise UsageError("--kernel-size must be odd and positive")
    if cfg.kernel_sigma <= 0:
        raise UsageError("--kernel-sigma must be positive")
    if cfg.step_tol < 0:
        raise UsageError("--step-tol must be nonnegative")
    needed = {
        "degrade": ("input_path", "output_path"),
        "solve": ("input_path", "output_path"),
        "compare": ("truth_path", "output_path", "trace_path"),
        "diagnose": ("input_path",),
    }[cfg.command]
    for name in needed:
        if not getattr(cfg, name):
            raise UsageError(f"--{name.replace('_path', '')} is required for "
                             f"'{cfg.command}'")
    return cfg


# ---------------------------------------------------------------------------
# PGM (P5) I/O

def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) into a float image in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise PgmFormatError("not a binary PGM (magic 'P5' missing)", 0)
    pos = 2
    values = []
    while len(values) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise PgmFormatError("expected a decimal header field", start)
        values.append((int(data[start:pos]), start))
    (cols, _), (rows, _), (maxval, mv_off) = values
    if maxval != 255:
        raise PgmFormatError(f"unsupported maxval {maxval}; only 255 is accepted",
                             mv_off)
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PgmFormatError("single whitespace byte must follow maxval", pos)
    pos += 1
    if rows <= 0 or cols <= 0:
        raise PgmFormatError("image dimensions must be positive", 2)
    expected = rows * cols
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise PgmFormatError(
            f"truncated raster: expected {expected} bytes, found {len(raster)}",
            len(data),
        )
    grid = np.frombuffer(raster, dtype=np.uint8).reshape(rows, cols)
    return grid.astype(float) / 255.0


def quantize(u) -> np.ndarray:
    """Clamp to [0, 1] and round half away from zero to 8-bit levels."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return np.floor(u * 255.0 + 0.5).astype(np.uint8)


def write_pgm(u, path) -> None:
    """Write an image as binary PGM; intensities are clamp-quantized.

    SNR computed on a written file can differ slightly from the in-memory
    value because of this 8-bit quantization.
    """
    u = as_image(u)
    rows, cols = u.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(quantize(u).tobytes())


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def write_trace(trace, path) -> None:
    """Write per-iteration records as CSV (full-precision decimal floats).

    Infinite SNR (exact recovery) is serialized as the string ``inf``.
    """
    if not trace:
        raise ValueError("trace is empty")
    lines = [TRACE_HEADER]
    for r in trace:
        lines.append(
            f"{r.k},{_fmt(r.gamma)},{_fmt(r.phi)},{_fmt(r.psi)},{_fmt(r.feas)},"
            f"{_fmt(r.dx)},{_fmt(r.dy)},{_fmt(r.snr)}"
        )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Commands

def _kernel(cfg: RunConfig):
    return gaussian_kernel(cfg.kernel_size, cfg.kernel_sigma)


def _penalty_config(cfg: RunConfig) -> PenaltyConfig:
    if cfg.algorithm == "irpam":
        # no continuation: run at the cap from the start
        return PenaltyConfig(cfg.gamma_bar, cfg.gamma_bar, 1.0, cfg.delta,
                             cfg.iters, cfg.step_tol)
    return PenaltyConfig(cfg.gamma0, cfg.gamma_bar, cfg.a, cfg.delta,
                         cfg.iters, cfg.step_tol)


def _solve_penalty(spec: DeblurSpec, pcfg: PenaltyConfig, truth) -> ExperimentResult:
    if truth is not None:
        return run_experiment(spec, pcfg, truth)
    problem = build_problem(spec)
    sol = core.run(problem, pcfg, spec.observed, tv_forward(spec.observed))
    return ExperimentResult(
        restored=sol.x_final,
        snr_curve=[],
        final_snr=float("nan"),
        wall_time=sol.trace[-1].t_wall,
        trace=sol.trace,
    )


def _with_suffix(path: str, tag: str) -> str:
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return f"{path}_{tag}"
    return f"{stem}_{tag}.{ext}"


def degrade_command(cfg: RunConfig) -> int:
    truth = read_pgm(cfg.input_path)
    blurred = degrade(truth, _kernel(cfg), cfg.sigma, cfg.seed)
    write_pgm(blurred, cfg.output_path)
    print(f"degraded {cfg.input_path} -> {cfg.output_path} "
          f"(kernel {cfg.kernel_size}x{cfg.kernel_size} sigma={cfg.kernel_sigma}, "
          f"noise sigma={cfg.sigma}, seed={cfg.seed})")
    return 0


def solve_command(cfg: RunConfig) -> int:
    observed = read_pgm(cfg.input_path)
    truth = read_pgm(cfg.truth_path) if cfg.truth_path else None
    spec = DeblurSpec.create(observed, _kernel(cfg), cfg.lam, cfg.q)
    if cfg.algorithm == "admm":
        res = admm_baseline_run(spec, AdmmConfig(cfg.beta, cfg.iters),
                                observed, tv_forward(observed), truth)
    else:
        res = _solve_penalty(spec, _penalty_config(cfg), truth)
    write_pgm(res.restored, cfg.output_path)
    if cfg.trace_path:
        write_trace(res.trace, cfg.trace_path)
    tail = f"final SNR {res.final_snr:.4f} dB" if truth is not None else "no truth given"
    print(f"{cfg.algorithm}: {len(res.trace)} iterations, {tail}")
    return 0


def compare_command(cfg: RunConfig) -> int:
    """Run the penalty solver and the ADMM baseline from one initialization
    and emit both restored images and both traces."""
    truth = read_pgm(cfg.truth_path)
    if cfg.input_path:
        observed = read_pgm(cfg.input_path)
    else:
        observed = degrade(truth, _kernel(cfg), cfg.sigma, cfg.seed)
    spec = DeblurSpec.create(observed, _kernel(cfg), cfg.lam, cfg.q)
    pres = run_experiment(spec, _penalty_config(cfg), truth)
    ares = admm_baseline_run(spec, AdmmConfig(cfg.beta, cfg.iters),
                             observed, tv_forward(observed), truth)
    write_pgm(pres.restored, _with_suffix(cfg.output_path, "irpamc"))
    write_pgm(ares.restored, _with_suffix(cfg.output_path, "admm"))
    write_trace(pres.trace, _with_suffix(cfg.trace_path, "irpamc"))
    write_trace(ares.trace, _with_suffix(cfg.trace_path, "admm"))
    blurred_snr = snr(truth, observed)
    print(f"blurred input: {blurred_snr:.4f} dB | "
          f"irpamc: {pres.final_snr:.4f} dB | admm: {ares.final_snr:.4f} dB")
    return 0


def diagnose_command(cfg: RunConfig) -> int:
    """Run the continuation solver and print how the trace fares against the
    descent theory."""
    observed = read_pgm(cfg.input_path)
    truth = read_pgm(cfg.truth_path) if cfg.truth_path else None
    spec = DeblurSpec.create(observed, _kernel(cfg), cfg.lam, cfg.q)
    problem = build_problem(spec)
    pcfg = _penalty_config(cfg)
    res = _solve_penalty(spec, pcfg, truth)
    sol_trace = res.trace
    report = core.theory_report(sol_trace, problem.nu, pcfg)
    derived, stated = residual_bounds(observed, cfg.gamma_bar)
    feas_sq = sol_trace[-1].feas ** 2
    print(f"stabilization index K = {report['stabilization_index']} "
          f"(iterations: {report['iterations']})")
    print(f"strong convexity modulus nu = {problem.nu:.6g}")
    print(f"phi monotone after K: {'PASS' if report['monotone'] else 'FAIL'} "
          f"(worst rise {report['worst_rise']:.3e})")
    for name, label in (("literal", "stated x-coefficient"),
                        ("half", "half-weakened"),
                        ("derived", "derived modulus")):
        ok, bad = report[name]
        verdict = "PASS" if bad == 0 else "FAIL"
        print(f"sufficient descent [{label}]: {verdict} ({ok} pass / {bad} fail)")
    ok = report["step_square_sum"] <= report["step_square_bound"] * (1 + 1e-6)
    print(f"step square-summability: {'PASS' if ok else 'FAIL'} "
          f"(sum {report['step_square_sum']:.3e} vs bound "
          f"{report['step_square_bound']:.3e})")
    print(f"final squared constraint residual {feas_sq:.3e} "
          f"(bound derived {derived:.3e}, stated {stated:.3e})")
    if cfg.trace_path:
        write_trace(sol_trace, cfg.trace_path)
    return 0


COMMANDS = {
    "degrade": degrade_command,
    "solve": solve_command,
    "compare": compare_command,
    "diagnose": diagnose_command,
}


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericBreakdownError as exc:
        print(f"numeric breakdown: {exc}", file=sys.stderr)
        return 3
    except (OSError, PgmFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
