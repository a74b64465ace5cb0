"""Ellipse-center iteration for strongly convex quadratics.

One step works on the current level set of the objective.  From the iterate
x, a step of length t = 2 ||g||^2 / (g^T A g) along the negative gradient
lands on a point y with the same objective value.  The two gradients at x
and y span a plane; intersecting that plane with the level set gives an
ellipse whose center is also the minimizer of the objective on the plane.
The center solves a 2x2 Gram system and becomes the next iterate.  When the
two gradients are (numerically) parallel the step falls back to the midpoint
of x and y, which coincides with an exact-line-search gradient step.

Solvers here are single-threaded over immutable inputs; concurrent solves on
the same problem are safe.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .quadratic import QuadraticProblem, _as_vector

__all__ = [
    "Branch",
    "EpsilonMode",
    "Termination",
    "SolveOptions",
    "IterationRecord",
    "StepRecord",
    "SolverResult",
    "level_step",
    "ellipse_center_coeffs",
    "me_iterate",
    "me_solve",
    "write_trace_csv",
]


class Branch(Enum):
    ELLIPSE_CENTER = "ellipse_center"
    MIDPOINT = "midpoint"
    CONVERGED = "converged"


class EpsilonMode(Enum):
    ABSOLUTE = "abs"
    RELATIVE_TO_INITIAL = "rel"


class Termination(Enum):
    GRADIENT_TOLERANCE = "gradient_tolerance"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class SolveOptions:
    """Stopping rule and iteration controls shared by all solvers.

    ``epsilon`` bounds the gradient norm; in RELATIVE_TO_INITIAL mode the
    effective threshold is epsilon * ||grad f(x1)||.  ``dependence_tolerance``
    scales the test that declares the two gradients parallel: they count as
    dependent when the Gram determinant is at most tolerance * ||g_x||_A^2 *
    ||g_y||_A^2, which makes the test invariant under rescaling of either
    gradient.
    """

    epsilon: float = 1e-8
    epsilon_mode: EpsilonMode = EpsilonMode.RELATIVE_TO_INITIAL
    max_iterations: int = 1_000_000
    dependence_tolerance: float = 1e-12
    record_trace: bool = False

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.dependence_tolerance < 0.0:
            raise ValueError("dependence_tolerance must be nonnegative")

    def gradient_threshold(self, initial_grad_norm: float) -> float:
        if self.epsilon_mode is EpsilonMode.ABSOLUTE:
            return self.epsilon
        return self.epsilon * initial_grad_norm


@dataclass(frozen=True)
class IterationRecord:
    """Artifacts of one ellipse-center step starting at ``x``.

    ``f_value`` and ``grad_norm`` describe the starting iterate; ``x_next``
    is the produced iterate (equal to ``x`` on the CONVERGED branch).  The
    ellipse coefficients ``delta``, ``alpha``, ``beta`` are present only on
    the ELLIPSE_CENTER branch.
    """

    x: np.ndarray
    g_x: np.ndarray
    f_value: float
    grad_norm: float
    branch: Branch
    x_next: np.ndarray
    t: float | None = None
    y: np.ndarray | None = None
    g_y: np.ndarray | None = None
    delta: float | None = None
    alpha: float | None = None
    beta: float | None = None


@dataclass(frozen=True)
class StepRecord:
    """Per-iteration state of a baseline solver (no ellipse-specific fields)."""

    f_value: float
    grad_norm: float
    x: np.ndarray | None = None


@dataclass(frozen=True)
class SolverResult:
    x_final: np.ndarray
    iterations: int
    f_final: float
    grad_norm_final: float
    wall_time_seconds: float
    terminated_by: Termination
    trace: list | None = None


def level_step(problem: QuadraticProblem, x, g_x):
    """Step along -g_x to the other point of the current level set.

    Returns ``(t, y)`` with t = 2 ||g_x||^2 / (g_x^T A g_x) and y = x - t g_x,
    so that f(y) = f(x).  Requires a nonzero gradient.
    """
    x = _as_vector(x, problem.dim)
    g_x = _as_vector(g_x, problem.dim, name="g_x")
    gag = problem.a_inner(g_x, g_x)
    if not np.isfinite(gag) or gag <= 0.0:
        raise ValueError(
            f"gradient energy norm is {gag!r}; operator is not positive definite "
            "or the iterate overflowed"
        )
    t = 2.0 * float(g_x @ g_x) / gag
    if not np.isfinite(t) or t <= 0.0:
        raise ValueError(f"level step t={t!r} is not a positive finite number")
    return t, x - t * g_x


def _coeffs_from_gram(gg, gxgy, m11, m12, m22, delta):
    # Cramer solve of M [alpha, beta] = q with q = (-||g_x||^2, -<g_x, g_y>).
    q1 = -gg
    q2 = -gxgy
    alpha = (q1 * m22 - q2 * m12) / delta
    beta = (m11 * q2 - m12 * q1) / delta
    return alpha, beta


def _coeffs_expanded(gg, gxgy, m11, m12, m22, delta):
    # Same algebra written as the four explicit products, kept as a
    # cross-check on the Gram-system route.
    alpha = (gxgy * m12 - gg * m22) / delta
    beta = (-gxgy * m11 + gg * m12) / delta
    return alpha, beta


def ellipse_center_coeffs(
    problem: QuadraticProblem,
    g_x,
    g_y,
    dependence_tolerance: float = 1e-12,
    cross_check: bool = False,
):
    """Coefficients (delta, alpha, beta) of the ellipse center.

    The center of the level-set ellipse in the plane spanned by g_x and g_y
    is x + alpha g_x + beta g_y.  The pair (alpha, beta) solves the 2x2 Gram
    system whose determinant is delta.  Raises if the gradients fail the
    dependence test; callers must take the midpoint branch instead.

    With ``cross_check`` the coefficients are recomputed from the expanded
    product formulas and both routes must agree to 1e-10 relatively.
    """
    g_x = _as_vector(g_x, problem.dim, name="g_x")
    g_y = _as_vector(g_y, problem.dim, name="g_y")
    ag_x = problem.A.matvec(g_x)
    ag_y = problem.A.matvec(g_y)
    m11 = float(g_x @ ag_x)
    m12 = float(g_x @ ag_y)
    m22 = float(g_y @ ag_y)
    delta = m11 * m22 - m12 * m12
    if delta <= dependence_tolerance * m11 * m22:
        raise ValueError(
            f"gradients are dependent (delta={delta:.3e}); the midpoint branch applies"
        )
    gg = float(g_x @ g_x)
    gxgy = float(g_x @ g_y)
    alpha, beta = _coeffs_from_gram(gg, gxgy, m11, m12, m22, delta)
    if cross_check:
        alpha2, beta2 = _coeffs_expanded(gg, gxgy, m11, m12, m22, delta)
        scale = max(abs(alpha), abs(beta), 1e-300)
        if abs(alpha - alpha2) > 1e-10 * scale or abs(beta - beta2) > 1e-10 * scale:
            raise RuntimeError(
                f"coefficient routes disagree: ({alpha}, {beta}) vs ({alpha2}, {beta2})"
            )
    return delta, alpha, beta


def me_iterate(
    problem: QuadraticProblem,
    x,
    options: SolveOptions = SolveOptions(),
    grad_tolerance: float | None = None,
) -> IterationRecord:
    """One ellipse-center step from ``x``.

    ``grad_tolerance`` is the effective stopping threshold; when omitted it
    is derived from ``options`` using the gradient at ``x`` itself, so in
    relative mode a standalone call only reports CONVERGED at an exact
    stationary point.  ``me_solve`` passes the threshold fixed at the initial
    iterate.
    """
    x = _as_vector(x, problem.dim)
    g_x = problem.gradient(x)
    grad_norm = float(np.linalg.norm(g_x))
    if not np.isfinite(grad_norm):
        raise RuntimeError(f"gradient norm is {grad_norm}; aborting")
    # f(x) = 1/2 x^T g - 1/2 b^T x + c, reusing the gradient's matvec.
    f_value = 0.5 * float(x @ g_x - problem.b @ x) + problem.c
    if grad_tolerance is None:
        grad_tolerance = options.gradient_threshold(grad_norm)
    if grad_norm <= grad_tolerance:
        return IterationRecord(
            x=x, g_x=g_x, f_value=f_value, grad_norm=grad_norm,
            branch=Branch.CONVERGED, x_next=x,
        )

    ag_x = problem.A.matvec(g_x)
    gg = float(g_x @ g_x)
    m11 = float(g_x @ ag_x)
    if not np.isfinite(m11) or m11 <= 0.0:
        raise ValueError(
            f"gradient energy norm is {m11!r}; operator is not positive definite "
            "or the iterate overflowed"
        )
    t = 2.0 * gg / m11
    y = x - t * g_x
    g_y = problem.gradient(y)
    ag_y = problem.A.matvec(g_y)
    m12 = float(g_x @ ag_y)
    m22 = float(g_y @ ag_y)
    delta = m11 * m22 - m12 * m12

    if delta > options.dependence_tolerance * m11 * m22:
        alpha, beta = _coeffs_from_gram(gg, float(g_x @ g_y), m11, m12, m22, delta)
        x_next = x + alpha * g_x + beta * g_y
        branch = Branch.ELLIPSE_CENTER
    else:
        x_next = 0.5 * (x + y)
        branch = Branch.MIDPOINT
        delta = alpha = beta = None

    if not np.all(np.isfinite(x_next)):
        raise RuntimeError(
            f"non-finite iterate produced (branch={branch.value}, t={t}, "
            f"delta={delta}, alpha={alpha}, beta={beta})"
        )
    return IterationRecord(
        x=x, g_x=g_x, f_value=f_value, grad_norm=grad_norm, branch=branch,
        x_next=x_next, t=t, y=y, g_y=g_y, delta=delta, alpha=alpha, beta=beta,
    )


def me_solve(
    problem: QuadraticProblem,
    x1,
    options: SolveOptions = SolveOptions(),
) -> SolverResult:
    """Run the ellipse-center method from ``x1`` until the stopping rule fires.

    The gradient threshold is fixed from the initial iterate, the convergence
    check runs before each update, and ``iterations`` counts updates actually
    performed.
    """
    x = _as_vector(x1, problem.dim, name="x1")
    threshold = options.gradient_threshold(float(np.linalg.norm(problem.gradient(x))))
    trace = [] if options.record_trace else None
    iterations = 0
    start = time.perf_counter()
    while True:
        record = me_iterate(problem, x, options, grad_tolerance=threshold)
        if record.branch is Branch.CONVERGED:
            terminated = Termination.GRADIENT_TOLERANCE
            f_final = record.f_value
            grad_norm_final = record.grad_norm
            break
        if trace is not None:
            trace.append(record)
        x = record.x_next
        iterations += 1
        if iterations >= options.max_iterations:
            g = problem.gradient(x)
            grad_norm_final = float(np.linalg.norm(g))
            if grad_norm_final <= threshold:
                terminated = Termination.GRADIENT_TOLERANCE
            else:
                terminated = Termination.MAX_ITERATIONS
            f_final = problem.value(x)
            break
    elapsed = time.perf_counter() - start
    return SolverResult(
        x_final=x,
        iterations=iterations,
        f_final=f_final,
        grad_norm_final=grad_norm_final,
        wall_time_seconds=elapsed,
        terminated_by=terminated,
        trace=trace,
    )


_TRACE_COLUMNS = ("iter", "branch", "f", "grad_norm", "t", "delta", "alpha", "beta")


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def write_trace_csv(path, trace) -> None:
    """Write per-iteration records to CSV.

    Accepts both ellipse-center ``IterationRecord`` rows and baseline
    ``StepRecord`` rows; columns a record does not carry stay blank.  Each
    row reports the state at the start of that iteration.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_COLUMNS)
        for i, rec in enumerate(trace, start=1):
            branch = rec.branch.value if isinstance(rec, IterationRecord) else ""
            writer.writerow(
                [
                    i,
                    branch,
                    _fmt(rec.f_value),
                    _fmt(rec.grad_norm),
                    _fmt(getattr(rec, "t", None)),
                    _fmt(getattr(rec, "delta", None)),
                    _fmt(getattr(rec, "alpha", None)),
                    _fmt(getattr(rec, "beta", None)),
                ]
            )
