"""Damped Newton solves of F(A[u]) = rhs(t, c) on the torus, with the unknown
constant c solved simultaneously.

The unknown pair is (u mean-zero, c); constants span the cokernel of the
linearization on a closed manifold, so the Newton system is bordered: the
pointwise linearized equation plus the mean-zero constraint make it square.
The linear solves are matrix-free Krylov (lgmres) with a constant-coefficient
spectral preconditioner: the inverse of (mean trace of the first-derivative
matrix / n) times the metric Laplacian.

Continuity paths, each anchored at a member solvable from u = 0:

  ``hessian``     F(A[u]) = t*H + (1-t)*H0 + c,     H0 = F(A[0]),
  ``quotient``    f_t(lambda(A[u])) = -c,           f_t the blended quotient,
  ``riemannian``  F(A[u]) = c + (1-t)*h0,           h0 = F(A[0]) pointwise,
  ``fixed``       F(A[u]) = h + c.

Marching warm-starts each t from the previous solution and bisects the t-step
on Newton stagnation down to 1e-4 before giving up with a partial report.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, lgmres

from .eigencalc import eigen_decompose
from .operators import BlendedQuotient, SymmetricOperator
from .torus import (
    MatrixField,
    PeriodicGrid,
    ScalarField,
    endomorphism_field,
    hessian,
    laplacian_symbol,
    metric_root_inverse,
)


class AdmissibilityError(ValueError):
    """Eigenvalues of A[u] left the operator cone somewhere on the grid."""

    def __init__(self, worst_index: tuple, margin: float):
        self.worst_index = worst_index
        self.margin = margin
        super().__init__(
            f"inadmissible data: cone margin {margin:.6g} at grid point {worst_index}"
        )


class StagnationError(RuntimeError):
    """Newton line search exhausted its halvings."""

    def __init__(self, message: str, state: "SolveState | None" = None):
        self.state = state
        super().__init__(message)


class PathBoundError(RuntimeError):
    """A recorded path constant violated its monotone bound."""


class PathKind(enum.Enum):
    HESSIAN = "hessian"
    QUOTIENT = "quotient"
    RIEMANNIAN = "riemannian"
    FIXED = "fixed"


@dataclass
class TorusProblem:
    """Problem data: operator, backgrounds, right-hand side and path choice."""

    grid: PeriodicGrid
    op: SymmetricOperator
    alpha: np.ndarray
    chi: MatrixField
    h: ScalarField | None = None
    path: PathKind = PathKind.FIXED
    quotient_l: int = 0
    quotient_k: int = 0
    normalization: str = "mean_zero"
    newton_tol: float = 1e-10
    max_newton: int = 50
    max_halvings: int = 30

    def __post_init__(self):
        if self.normalization not in ("mean_zero", "sup_zero"):
            raise ValueError("normalization must be 'mean_zero' or 'sup_zero'")
        if self.chi.grid != self.grid:
            raise ValueError("fields must share one grid")
        if self.h is not None and self.h.grid != self.grid:
            raise ValueError("fields must share one grid")
        if self.op.n != self.grid.n:
            raise ValueError("operator cone dimension must match the mode dimension")
        if self.path in (PathKind.HESSIAN, PathKind.FIXED, PathKind.RIEMANNIAN):
            if self.path is not PathKind.RIEMANNIAN and self.h is None:
                raise ValueError(f"{self.path.value} path requires an rhs field h")
        if self.path is PathKind.QUOTIENT and not (
            1 <= self.quotient_l < self.quotient_k <= self.grid.n
        ):
            raise ValueError("quotient path requires 1 <= l < k <= n")


@dataclass
class SolveState:
    u: ScalarField
    c: float
    t: float
    residual_norm: float
    admissibility_margin: float
    iterations: int = 0
    trace: tuple = ()


@dataclass
class SolveReport:
    steps: list[dict] = field(default_factory=list)
    final: SolveState | None = None
    diagnostics: dict = field(default_factory=dict)
    complete: bool = True

    def to_dict(self) -> dict:
        out = {
            "schema": "v1",
            "complete": self.complete,
            "steps": self.steps,
            "diagnostics": self.diagnostics,
        }
        if self.final is not None:
            out["final"] = {
                "t": self.final.t,
                "c": self.final.c,
                "residual_norm": self.final.residual_norm,
                "admissibility_margin": self.final.admissibility_margin,
                "iterations": self.final.iterations,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def normalize(u: ScalarField, mode: str) -> ScalarField:
    """Subtract the mean (mean_zero) or the max (sup_zero); idempotent."""
    if mode == "mean_zero":
        return ScalarField(u.grid, u.values - u.values.mean())
    if mode == "sup_zero":
        return ScalarField(u.grid, u.values - u.values.max())
    raise ValueError(f"unknown normalization {mode!r}")


def path_operator(problem: TorusProblem, t: float) -> SymmetricOperator:
    if problem.path is PathKind.QUOTIENT:
        return BlendedQuotient(problem.grid.n, problem.quotient_l, problem.quotient_k, t)
    return problem.op


def constant_sign(problem: TorusProblem) -> float:
    """Sign s in rhs = base + s*c; the residual is F - base - s*c."""
    return -1.0 if problem.path is PathKind.QUOTIENT else 1.0


def _background_value(problem: TorusProblem, t: float) -> np.ndarray:
    """F(A[0]) for the operator in force at parameter t."""
    op = path_operator(problem, t)
    endo = endomorphism_field(problem.alpha, problem.chi)
    lam = np.linalg.eigvalsh(endo.values)
    _require_admissible(op, lam)
    return np.asarray(op.value(lam, check=False))


def rhs_base(problem: TorusProblem, t: float) -> np.ndarray:
    """The c-independent part of the right-hand side at parameter t."""
    if problem.path is PathKind.HESSIAN:
        h0 = _background_value(problem, t)
        return t * problem.h.values + (1.0 - t) * h0
    if problem.path is PathKind.QUOTIENT:
        return np.zeros(problem.grid.shape)
    if problem.path is PathKind.RIEMANNIAN:
        return (1.0 - t) * _background_value(problem, t)
    return problem.h.values


def _require_admissible(op: SymmetricOperator, lam: np.ndarray) -> float:
    margins = np.asarray(op.cone.margin(lam))
    worst = float(margins.min())
    if worst <= 0.0:
        idx = np.unravel_index(int(np.argmin(margins)), margins.shape)
        raise AdmissibilityError(idx, worst)
    return worst


def admissibility_margin(problem: TorusProblem, u: ScalarField, t: float = 1.0) -> float:
    """min over the grid of the cone margin of lambda(A[u]); may be <= 0."""
    op = path_operator(problem, t)
    endo = endomorphism_field(problem.alpha, problem.chi, u)
    lam = np.linalg.eigvalsh(endo.values)
    return float(np.asarray(op.cone.margin(lam)).min())


def residual(problem: TorusProblem, u: ScalarField, c: float, t: float) -> ScalarField:
    """Pointwise F_t(A[u]) - rhs_t(c); raises AdmissibilityError off the cone."""
    op = path_operator(problem, t)
    endo = endomorphism_field(problem.alpha, problem.chi, u)
    lam = np.linalg.eigvalsh(endo.values)
    _require_admissible(op, lam)
    vals = np.asarray(op.value(lam, check=False))
    rhs = rhs_base(problem, t) + constant_sign(problem) * c
    return ScalarField(problem.grid, vals - rhs)


class Linearization:
    """Matrix-free derivative of the residual at a fixed admissible iterate."""

    def __init__(self, problem: TorusProblem, u: ScalarField, t: float):
        self.problem = problem
        self.grid = problem.grid
        op = path_operator(problem, t)
        endo = endomorphism_field(problem.alpha, problem.chi, u)
        eig = eigen_decompose(endo.values)
        _require_admissible(op, eig.values)
        grad = op.gradient(eig.values, check=False)
        frame = eig.frame
        self.derivative_matrix = np.einsum(
            "...ip,...p,...jp->...ij", frame, grad, np.conj(frame)
        )
        self.mean_trace = float(np.real(
            np.einsum("...ii->...", self.derivative_matrix)
        ).mean()) / self.grid.n
        self.sign = constant_sign(problem)
        self._linv = metric_root_inverse(problem.alpha, self.grid.n)

    def apply(self, v: ScalarField, dc: float) -> ScalarField:
        """Directional derivative: <D, alpha-orthonormal Hess v> - s*dc."""
        hv = hessian(v).values
        ht = np.einsum("ab,...bc,dc->...ad", self._linv, hv, np.conj(self._linv))
        out = np.real(np.einsum("...ij,...ij->...", self.derivative_matrix, np.conj(ht)))
        return ScalarField(self.grid, out - self.sign * dc)


def linearized_apply(problem: TorusProblem, state: SolveState, v: ScalarField,
                     dc: float) -> ScalarField:
    return Linearization(problem, state.u, state.t).apply(v, dc)


def _solve_newton_system(lin: Linearization, r: np.ndarray, forcing: float):
    """Solve [dF - s*dc = -r ; mean(v) = 0] by preconditioned lgmres."""
    grid = lin.grid
    npts = int(np.prod(grid.shape))
    sign = lin.sign
    symbol = laplacian_symbol(grid, lin.problem.alpha) * lin.mean_trace
    zero_mode = (0,) * grid.stored_axes
    symbol[zero_mode] = 1.0  # the zero mode is handled by the constant block

    def matvec(w):
        v = ScalarField(grid, w[:npts].reshape(grid.shape))
        out = lin.apply(v, float(w[npts]))
        return np.concatenate([out.values.ravel(), [v.values.mean()]])

    def precondition(w):
        g = w[:npts].reshape(grid.shape)
        gbar = g.mean()
        spec = np.fft.fftn(g - gbar) / symbol
        spec[zero_mode] = 0.0
        v = np.real(np.fft.ifftn(spec))
        return np.concatenate([v.ravel(), [-sign * gbar]])

    a_op = LinearOperator((npts + 1, npts + 1), matvec=matvec, dtype=float)
    m_op = LinearOperator((npts + 1, npts + 1), matvec=precondition, dtype=float)
    b = np.concatenate([-r.ravel(), [0.0]])
    sol, _ = lgmres(a_op, b, M=m_op, rtol=forcing, atol=0.0, maxiter=200)
    dv = sol[:npts].reshape(grid.shape)
    dv = dv - dv.mean()
    return ScalarField(grid, dv), float(sol[npts])


def newton_solve(problem: TorusProblem, t: float,
                 warm: SolveState | None = None) -> SolveState:
    """Damped Newton on (u, c) at fixed t.

    Accepts a step only when the iterate stays strictly admissible and the
    sup-norm residual decreases; halves the step up to ``max_halvings`` times
    and raises StagnationError with the last state when exhausted.
    """
    grid = problem.grid
    if warm is None:
        u = ScalarField.zeros(grid)
        base = rhs_base(problem, t)
        endo = endomorphism_field(problem.alpha, problem.chi)
        lam = np.linalg.eigvalsh(endo.values)
        op = path_operator(problem, t)
        _require_admissible(op, lam)
        c = constant_sign(problem) * float(
            (np.asarray(op.value(lam, check=False)) - base).mean()
        )
    else:
        u = normalize(warm.u, "mean_zero")
        c = warm.c

    r = residual(problem, u, c, t)  # raises on an inadmissible warm start
    r_sup = float(np.abs(r.values).max())
    trace: list[dict] = []
    iterations = 0
    for _ in range(problem.max_newton):
        margin = admissibility_margin(problem, u, t)
        trace.append({"residual_sup": r_sup, "margin": margin})
        if r_sup < problem.newton_tol:
            break
        lin = Linearization(problem, u, t)
        forcing = max(min(1e-4, 0.1 * r_sup), 1e-12)
        dv, dc = _solve_newton_system(lin, r.values, forcing)
        step = 1.0
        for _ in range(problem.max_halvings + 1):
            u_try = ScalarField(grid, u.values + step * dv.values)
            c_try = c + step * dc
            if admissibility_margin(problem, u_try, t) > 0.0:
                r_try = residual(problem, u_try, c_try, t)
                r_try_sup = float(np.abs(r_try.values).max())
                if r_try_sup < r_sup:
                    u, c, r, r_sup = u_try, c_try, r_try, r_try_sup
                    break
            step *= 0.5
        else:
            state = SolveState(u, c, t, r_sup, admissibility_margin(problem, u, t),
                               iterations, tuple(trace))
            raise StagnationError(
                f"line search stagnated at t={t:.6g}, residual {r_sup:.3e}", state
            )
        iterations += 1
    else:
        if r_sup >= problem.newton_tol:
            state = SolveState(u, c, t, r_sup, admissibility_margin(problem, u, t),
                               iterations, tuple(trace))
            raise StagnationError(
                f"Newton did not converge in {problem.max_newton} iterations "
                f"at t={t:.6g}, residual {r_sup:.3e}", state
            )
    margin = admissibility_margin(problem, u, t)
    return SolveState(u, c, t, r_sup, margin, iterations, tuple(trace))


def uniform_schedule(steps: int = 21) -> np.ndarray:
    if steps < 2:
        raise ValueError("schedule needs at least the endpoints")
    return np.linspace(0.0, 1.0, steps)


def run_continuity(problem: TorusProblem, t_schedule, bound_slack: float = 1e-8,
                   min_step: float = 1e-4) -> SolveReport:
    """March the continuity parameter from 0 to 1 with warm starts.

    On Newton stagnation the t-step is bisected, down to ``min_step`` before
    aborting with a partial report.  Recorded path constants are checked
    against their monotone bounds:

      riemannian:  t*min(h0) <= c_t <= t*max(h0)   (within slack),
      quotient:    c_t >= t * (class constant)      (within slack).
    """
    schedule = np.asarray(list(t_schedule), dtype=float)
    if schedule.ndim != 1 or schedule.size < 2:
        raise ValueError("t_schedule must be a 1-D list of at least two values")
    if not (schedule[0] == 0.0 and schedule[-1] == 1.0):
        raise ValueError("t_schedule must start at 0 and end at 1")
    if np.any(np.diff(schedule) <= 0):
        raise ValueError("t_schedule must be strictly increasing")

    h0_bounds = None
    quotient_floor = None
    if problem.path is PathKind.RIEMANNIAN:
        h0 = _background_value(problem, 0.0)
        h0_bounds = (float(h0.min()), float(h0.max()))
    if problem.path is PathKind.QUOTIENT:
        from .torus import compute_c

        quotient_floor = compute_c(problem.chi, problem.alpha,
                                   problem.quotient_l, problem.quotient_k)

    report = SolveReport()
    state: SolveState | None = None
    t_done = None
    pending = list(schedule)
    while pending:
        t_next = pending[0]
        try:
            state = newton_solve(problem, t_next, warm=state)
        except StagnationError:
            t_from = 0.0 if t_done is None else t_done
            if t_next - t_from <= min_step:
                report.complete = False
                report.final = state
                return report
            pending.insert(0, 0.5 * (t_from + t_next))
            continue
        pending.pop(0)
        t_done = t_next
        _check_path_bounds(problem, state, h0_bounds, quotient_floor, bound_slack)
        report.steps.append({
            "t": float(state.t),
            "c": float(state.c),
            "residual_norm": float(state.residual_norm),
            "admissibility_margin": float(state.admissibility_margin),
            "newton_iterations": int(state.iterations),
        })
    final_u = normalize(state.u, problem.normalization)
    report.final = replace(state, u=final_u)
    return report


def _check_path_bounds(problem: TorusProblem, state: SolveState, h0_bounds,
                       quotient_floor, slack: float) -> None:
    t, c = state.t, state.c
    if h0_bounds is not None:
        lo, hi = t * h0_bounds[0], t * h0_bounds[1]
        if not (lo - slack <= c <= hi + slack):
            raise PathBoundError(
                f"c_t = {c:.12g} outside [t*min(h0), t*max(h0)] = "
                f"[{lo:.12g}, {hi:.12g}] at t={t:.6g}"
            )
    if quotient_floor is not None:
        if c < t * quotient_floor - slack:
            raise PathBoundError(
                f"c_t = {c:.12g} below t*c = {t * quotient_floor:.12g} at t={t:.6g}"
            )
