"""Penalty alternating-minimization engine with iterative reweighting.

Solves linearly constrained composites

    min_{x,y}  f(x) + sum_i h(g(y_i))   s.t.  A x + B y = c

by minimizing the quadratic-penalty surrogate

    Phi_gamma(x, y) = f(x) + sum_i h(g(y_i)) + (gamma/2) ||A x + B y - c||^2

with alternating exact x-solves and reweighted proximal y-steps, optionally
ramping gamma geometrically up to a cap (continuation).  The module also
houses the descent diagnostics that check the scheme's convergence theory on
recorded traces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericBreakdownError, UnsupportedStructureError

# Smoothing added to |y| before taking the (q-1) power in concave-power
# weight rules; keeps weights finite at y = 0.
WEIGHT_SMOOTHING = 1e-8

# Relative factor for the floating-point slack used by the descent
# diagnostic: tol = DESCENT_TOL_FACTOR * |Phi at the stabilization index|.
DESCENT_TOL_FACTOR = 1e-8

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass
class ProblemInterface:
    """Caller-supplied description of one constrained composite problem.

    The engine never inspects A, B or c beyond the callables below, so any
    array shapes are fine as long as ``apply_A(x)``, ``apply_B(y)`` and ``c``
    agree.  ``x_solver(y, gamma)`` must return the exact minimizer of
    ``f(x) + (gamma/2)||A x + B y - c||^2`` (certified by the caller, e.g.
    through a residual check).

    ``b_sign`` declares the coupling structure: +1 or -1 when B is plus or
    minus the identity (enabling the closed-form y-step), ``None`` otherwise,
    in which case ``y_solver`` must be provided for :func:`y_update`.
    """

    f_eval: Callable[[np.ndarray], float]
    x_solver: Callable[[np.ndarray, float], np.ndarray]
    g_eval: Callable[[np.ndarray], np.ndarray]
    prox_g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h_eval: Callable[[np.ndarray], np.ndarray]
    weight_rule: Callable[[np.ndarray], np.ndarray]
    apply_A: Callable[[np.ndarray], np.ndarray]
    apply_B: Callable[[np.ndarray], np.ndarray]
    apply_Bt: Callable[[np.ndarray], np.ndarray]
    c: np.ndarray
    f_lower: float = 0.0
    h_lower: float = 0.0
    b_sign: int | None = None
    y_solver: Callable[..., np.ndarray] | None = None
    nu: float | None = None


@dataclass
class PenaltyConfig:
    """Knobs of the continuation loop.

    ``a == 1`` (no continuation) is only accepted together with
    ``gamma0 == gamma_bar``; otherwise the cap would never be reached.
    ``step_tol == 0`` disables the early stop and the loop runs the full
    ``max_iters`` budget.
    """

    gamma0: float
    gamma_bar: float
    a: float
    delta: float
    max_iters: int
    step_tol: float = 0.0
    diagnostics_enabled: bool = True

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if self.gamma_bar < self.gamma0:
            raise ValueError("gamma_bar must be >= gamma0")
        if self.a < 1:
            raise ValueError("continuation factor a must be >= 1")
        if self.a == 1 and self.gamma0 != self.gamma_bar:
            raise ValueError("a == 1 requires gamma0 == gamma_bar")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_tol < 0:
            raise ValueError("step_tol must be >= 0")


@dataclass
class IterationRecord:
    """Scalar record of one executed iteration.

    ``phi`` is always evaluated at the cap ``gamma_bar`` (the quantity the
    descent theory monotonically decreases), regardless of the current
    ``gamma``.  ``descent_ok`` holds the literal sufficient-descent check,
    ``descent_ok_half`` the same check with the x-step coefficient halved;
    both are ``"not-applicable"`` before stabilization.
    """

    k: int
    gamma: float
    phi: float
    psi: float
    feas: float
    dx: float
    dy: float
    descent_ok: str = NOT_APPLICABLE
    descent_ok_half: str = NOT_APPLICABLE
    snr: float | None = None
    t_wall: float = 0.0


@dataclass
class Solution:
    x_final: np.ndarray
    y_final: np.ndarray
    trace: list[IterationRecord]
    stabilization_index: int


def original_objective(p: ProblemInterface, x: np.ndarray, y: np.ndarray) -> float:
    """f(x) + sum_i h(g(y_i))."""
    y = np.asarray(y, dtype=float)
    return float(p.f_eval(x)) + float(np.sum(p.h_eval(p.g_eval(y))))


def _constraint_residual(p: ProblemInterface, x, y) -> np.ndarray:
    ax = np.asarray(p.apply_A(x), dtype=float)
    by = np.asarray(p.apply_B(y), dtype=float)
    c = np.asarray(p.c, dtype=float)
    if ax.shape != c.shape or by.shape != c.shape:
        raise ValueError(
            f"constraint blocks disagree: A x has shape {ax.shape}, "
            f"B y has shape {by.shape}, c has shape {c.shape}"
        )
    return ax + by - c


def feasibility_residual(p: ProblemInterface, x: np.ndarray, y: np.ndarray) -> float:
    """||A x + B y - c||_2."""
    return float(np.linalg.norm(_constraint_residual(p, x, y).ravel()))


def penalty_objective(p: ProblemInterface, x, y, gamma: float) -> float:
    """Psi(x, y) + (gamma/2) ||A x + B y - c||^2."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    r = _constraint_residual(p, x, y)
    return original_objective(p, x, y) + 0.5 * gamma * float(np.sum(r * r))


def compute_weights(p: ProblemInterface, y: np.ndarray) -> np.ndarray:
    """Reweighting coefficients w_i at the current y (one per component)."""
    y = np.asarray(y, dtype=float)
    return np.broadcast_to(np.asarray(p.weight_rule(y), dtype=float), y.shape).copy()


def power_weight_rule(lam: float, q: float, smoothing: float = WEIGHT_SMOOTHING):
    """Weight rule for h(t) = lam * t**q composed with g = |.|.

    Returns ``w(y) = lam * q * (|y| + smoothing)**(q - 1)``, the smoothed
    slope of the concave power at |y|.  For q = 1 this is the constant lam
    and reweighting degenerates to plain alternating minimization.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")

    def rule(y):
        return lam * q * (np.abs(y) + smoothing) ** (q - 1.0)

    return rule


def soft_threshold(d, tau):
    """prox of tau*|.|: sign(d) * max(|d| - tau, 0)."""
    d = np.asarray(d, dtype=float)
    return np.sign(d) * np.maximum(np.abs(d) - tau, 0.0)


def y_update(
    p: ProblemInterface,
    y_prev: np.ndarray,
    x_new: np.ndarray,
    w: np.ndarray,
    gamma: float,
    delta: float,
) -> np.ndarray:
    """Exact minimizer of the reweighted proximal y-subproblem.

    With B = s*I (s = +/-1) the subproblem separates per component into

        min_t  w_i g(t) + (gamma/2)(s t + (A x - c)_i)^2
                        + (delta*gamma/2)(t - y_prev_i)^2

    whose solution is ``prox_g`` of the convex-combination drive point with
    scale ``w_i / ((1+delta) gamma)``.  Components with w_i = 0 reduce to the
    unconstrained quadratic minimizer (the drive point itself).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if p.b_sign not in (1, -1):
        if p.y_solver is not None:
            return np.asarray(p.y_solver(y_prev, x_new, w, gamma, delta), dtype=float)
        raise UnsupportedStructureError(
            "closed-form y-step requires B = +/- identity; supply y_solver"
        )
    y_prev = np.asarray(y_prev, dtype=float)
    ax = np.asarray(p.apply_A(x_new), dtype=float)
    drive = (delta * y_prev + p.b_sign * (np.asarray(p.c, dtype=float) - ax)) / (1.0 + delta)
    tau = np.broadcast_to(np.asarray(w, dtype=float), drive.shape) / ((1.0 + delta) * gamma)
    free = tau <= 0
    tau_safe = np.where(free, 1.0, tau)
    return np.where(free, drive, p.prox_g(drive, tau_safe))


def continuation_step(gamma_k: float, cfg: PenaltyConfig) -> float:
    """Next penalty parameter: min(gamma_bar, a * gamma_k)."""
    return min(cfg.gamma_bar, cfg.a * gamma_k)


def stabilization_index(cfg: PenaltyConfig) -> int:
    """Index K = ceil(log_a(gamma_bar / gamma0)) after which gamma is capped.

    Zero when gamma0 == gamma_bar.  Guarded against floating-point log
    wobble so exact powers (e.g. gamma_bar/gamma0 = a**k) return k itself.
    """
    if cfg.gamma0 == cfg.gamma_bar:
        return 0
    if cfg.a <= 1:
        raise ValueError("a must exceed 1 when gamma0 < gamma_bar")
    ratio = cfg.gamma_bar / cfg.gamma0
    k = int(math.ceil(math.log(ratio) / math.log(cfg.a)))
    # settle off-by-one from log rounding by direct comparison
    while k > 0 and cfg.a ** (k - 1) >= ratio * (1.0 - 1e-12):
        k -= 1
    while cfg.a**k < ratio * (1.0 - 1e-12):
        k += 1
    return k


def descent_diagnostic(
    rec_prev: IterationRecord,
    rec_next: IterationRecord,
    nu: float,
    cfg: PenaltyConfig,
    tol_descent: float = 0.0,
    x_coefficient_scale: float = 1.0,
) -> str:
    """Check the per-iteration sufficient-descent inequality.

    Passes when

        phi_prev - phi_next >= scale * min(gamma_bar, nu*gamma_bar) * dx^2
                               + (delta*gamma_bar/2) * dy^2 - tol_descent

    with dx, dy taken from ``rec_next``.  Applicable only after the
    stabilization index, when both records ran at the capped gamma;
    returns ``"not-applicable"`` otherwise.  ``x_coefficient_scale=0.5``
    gives the half-weakened variant that is also logged on traces.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    K = stabilization_index(cfg)
    if rec_next.k <= K:
        return NOT_APPLICABLE
    if rec_prev.gamma != cfg.gamma_bar or rec_next.gamma != cfg.gamma_bar:
        return NOT_APPLICABLE
    drop = rec_prev.phi - rec_next.phi
    gb = cfg.gamma_bar
    need = (
        x_coefficient_scale * min(gb, nu * gb) * rec_next.dx**2
        + 0.5 * cfg.delta * gb * rec_next.dy**2
    )
    return PASS if drop >= need - tol_descent else FAIL


def subgradient_gap(
    p: ProblemInterface,
    y_k: np.ndarray,
    y_next: np.ndarray,
    w: np.ndarray,
    mask: np.ndarray | None = None,
) -> float:
    """Concavity slack sum_i [h(g(y_k_i)) - h(g(y_next_i)) - w_i (g(y_k_i) - g(y_next_i))].

    Nonnegative whenever each w_i is an exact supergradient slope of h at
    g(y_k_i); smoothed weights can dip slightly below the exact slope, so
    callers verifying the theory should pass exact weights and restrict to
    coordinates where those are defined (``mask``).
    """
    gk = np.asarray(p.g_eval(np.asarray(y_k, dtype=float)), dtype=float)
    gn = np.asarray(p.g_eval(np.asarray(y_next, dtype=float)), dtype=float)
    terms = p.h_eval(gk) - p.h_eval(gn) - np.asarray(w, dtype=float) * (gk - gn)
    if mask is not None:
        terms = terms[mask]
    return float(np.sum(terms))


def run(
    p: ProblemInterface,
    cfg: PenaltyConfig,
    x0: np.ndarray,
    y0: np.ndarray,
    observer: Callable[..., None] | None = None,
) -> Solution:
    """Execute the continuation loop and record one trace entry per iteration.

    Each iteration performs the exact x-solve at the current gamma, computes
    reweighting coefficients at the current y, takes the proximal y-step and
    then advances gamma.  Stops after ``max_iters`` iterations or as soon as
    ``max(dx, dy) < step_tol`` (when ``step_tol > 0``).

    ``observer``, when given, is called as
    ``observer(k, x_new, y_prev, y_new, weights, record)`` after each
    iteration; mutating ``record`` (e.g. to stamp an SNR) is allowed.

    Raises :class:`NumericBreakdownError` if an iterate goes non-finite.
    """
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    feasibility_residual(p, x, y)  # validates block shapes up front
    K = stabilization_index(cfg)
    gamma = float(cfg.gamma0)
    trace: list[IterationRecord] = []
    phi_stab = None
    t0 = time.perf_counter()
    for k in range(cfg.max_iters):
        x_new = np.asarray(p.x_solver(y, gamma), dtype=float)
        w = compute_weights(p, y)
        y_new = y_update(p, y, x_new, w, gamma, cfg.delta)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(y_new))):
            raise NumericBreakdownError(k)
        dx = float(np.linalg.norm((x_new - x).ravel()))
        dy = float(np.linalg.norm((y_new - y).ravel()))
        rec = IterationRecord(
            k=k,
            gamma=gamma,
            phi=penalty_objective(p, x_new, y_new, cfg.gamma_bar),
            psi=original_objective(p, x_new, y_new),
            feas=feasibility_residual(p, x_new, y_new),
            dx=dx,
            dy=dy,
            t_wall=time.perf_counter() - t0,
        )
        if k == K:
            phi_stab = rec.phi
        if (
            cfg.diagnostics_enabled
            and p.nu is not None
            and k > K
            and phi_stab is not None
        ):
            tol = DESCENT_TOL_FACTOR * abs(phi_stab)
            rec.descent_ok = descent_diagnostic(trace[k - 1], rec, p.nu, cfg, tol)
            rec.descent_ok_half = descent_diagnostic(
                trace[k - 1], rec, p.nu, cfg, tol, x_coefficient_scale=0.5
            )
        if observer is not None:
            observer(k, x_new, y, y_new, w, rec)
        trace.append(rec)
        x, y = x_new, y_new
        gamma = continuation_step(gamma, cfg)
        if cfg.step_tol > 0 and max(dx, dy) < cfg.step_tol:
            break
    return Solution(x_final=x, y_final=y, trace=trace, stabilization_index=K)


def theory_report(
    trace: Sequence[IterationRecord], nu: float, cfg: PenaltyConfig
) -> dict:
    """Summarize how a recorded trace fares against the descent theory.

    Returns a dict with, over the post-stabilization records:

    - ``monotone``: whether phi is non-increasing within 1e-10 relative slack,
      and ``worst_rise`` the largest observed increase;
    - ``literal`` / ``half`` / ``derived``: (pass, fail) counts for the
      sufficient-descent inequality with the stated x-coefficient
      min(gamma_bar, nu*gamma_bar), its halved variant, and the derivable
      modulus nu*min(1, gamma_bar)/2;
    - ``step_square_sum`` and ``step_square_bound``: the accumulated
      squared step norms and their theoretical cap
      (phi(K) - phi(end)) / min(gamma_bar, nu*gamma_bar, delta*gamma_bar/2).
    """
    K = stabilization_index(cfg)
    out: dict = {"stabilization_index": K, "iterations": len(trace)}
    post = [r for r in trace if r.k >= K and r.gamma == cfg.gamma_bar]
    if len(post) < 2:
        out["monotone"] = True
        out["worst_rise"] = 0.0
        out["literal"] = out["half"] = out["derived"] = (0, 0)
        out["step_square_sum"] = 0.0
        out["step_square_bound"] = 0.0
        return out
    worst_rise = 0.0
    monotone = True
    counts = {"literal": [0, 0], "half": [0, 0], "derived": [0, 0]}
    gb = cfg.gamma_bar
    tol = DESCENT_TOL_FACTOR * abs(trace[K].phi)
    coeffs = {
        "literal": min(gb, nu * gb),
        "half": 0.5 * min(gb, nu * gb),
        "derived": 0.5 * nu * min(1.0, gb),
    }
    ssum = 0.0
    for prev, rec in zip(post, post[1:]):
        drop = prev.phi - rec.phi
        if drop < -1e-10 * abs(prev.phi):
            monotone = False
            worst_rise = max(worst_rise, -drop)
        ssum += rec.dx**2 + rec.dy**2
        for name, coef in coeffs.items():
            need = coef * rec.dx**2 + 0.5 * cfg.delta * gb * rec.dy**2
            counts[name][0 if drop >= need - tol else 1] += 1
    out["monotone"] = monotone
    out["worst_rise"] = worst_rise
    for name in coeffs:
        out[name] = tuple(counts[name])
    out["step_square_sum"] = ssum
    denom = min(gb, nu * gb, 0.5 * cfg.delta * gb)
    out["step_square_bound"] = (post[0].phi - post[-1].phi) / denom
    return out
