"""Numerical checks of the a priori inequalities on solved or synthetic data.

These are desk-scale verifications, not proofs: the contact-set lower bound is
integrated with finite differences on a sampled ball, the second-order /
gradient ratio is reported as a monitor without an invented constant, and the
structural concavity flags are evaluated on samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import SymmetricOperator
from .torus import MatrixField, ScalarField, complex_gradient, complex_hessian, metric_root_inverse


@dataclass(frozen=True)
class BallGrid:
    """Cartesian sampling of the unit ball plus explicit sphere samples.

    The square [-radius, radius)^m is sampled with ``points_per_axis`` points
    per axis (origin on the grid for even counts); interior points are those
    strictly inside the ball.  Boundary values live on explicit sphere
    samples, not on grid points, so radial test functions are evaluated at
    their true boundary values.
    """

    m: int
    points_per_axis: int
    radius: float = 1.0

    def __post_init__(self):
        if self.m not in (1, 2, 3):
            raise ValueError("BallGrid supports m in {1, 2, 3}")
        if self.points_per_axis < 8:
            raise ValueError("need at least 8 points per axis")

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / self.points_per_axis

    def axis_coordinates(self) -> np.ndarray:
        return -self.radius + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> list[np.ndarray]:
        ax = self.axis_coordinates()
        return list(np.meshgrid(*([ax] * self.m), indexing="ij"))

    def interior_mask(self) -> np.ndarray:
        coords = self.coordinates()
        rr = sum(c**2 for c in coords)
        return rr < self.radius**2

    def boundary_points(self) -> np.ndarray:
        count = 4 * self.points_per_axis
        if self.m == 1:
            return np.array([[-self.radius], [self.radius]])
        if self.m == 2:
            th = 2.0 * np.pi * np.arange(count) / count
            return self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        idx = np.arange(count * 4)
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        z = 1.0 - 2.0 * (idx + 0.5) / (count * 4)
        th = 2.0 * np.pi * idx / golden
        r = np.sqrt(1.0 - z**2)
        return self.radius * np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)


@dataclass
class BallFunction:
    grid: BallGrid
    values: np.ndarray          # on the full cartesian square
    boundary_values: np.ndarray

    @staticmethod
    def from_callable(grid: BallGrid, fn) -> "BallFunction":
        coords = grid.coordinates()
        vals = np.asarray(fn(*coords), dtype=float)
        bpts = grid.boundary_points()
        bvals = np.asarray(fn(*[bpts[:, a] for a in range(grid.m)]), dtype=float)
        return BallFunction(grid, vals, bvals)

    def center_value(self) -> float:
        center = (self.grid.points_per_axis // 2,) * self.grid.m
        return float(self.values[center])

    def gradient(self) -> list[np.ndarray]:
        g = np.gradient(self.values, self.grid.spacing)
        return [g] if self.grid.m == 1 else list(g)

    def fd_hessian(self) -> np.ndarray:
        g = self.gradient()
        m = self.grid.m
        hess = np.zeros(self.values.shape + (m, m))
        for i in range(m):
            gi = np.gradient(g[i], self.grid.spacing)
            for j in range(m):
                hess[..., i, j] = gi[j] if m > 1 else gi
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))


@dataclass(frozen=True)
class ContactSet:
    mask: np.ndarray
    points: np.ndarray  # (count, m) coordinates

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def contact_set(v: BallFunction, epsilon: float) -> ContactSet:
    """Points carrying a global lower supporting plane with |gradient| < eps/2."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if v.center_value() + epsilon > float(v.boundary_values.min()) + 1e-12:
        raise ValueError("precondition failed: v(0) + epsilon must not exceed boundary values")
    grid = v.grid
    interior = grid.interior_mask()
    grads = v.gradient()
    grad_norm = np.sqrt(sum(g**2 for g in grads))
    candidates = interior & (grad_norm < 0.5 * epsilon)

    coords = grid.coordinates()
    pts_all = np.stack([c[interior] for c in coords], axis=1)
    vals_all = v.values[interior]
    bpts = grid.boundary_points()
    test_pts = np.concatenate([pts_all, bpts], axis=0)
    test_vals = np.concatenate([vals_all, v.boundary_values])

    slack = 1e-12 * (1.0 + float(np.abs(test_vals).max()))
    mask = np.zeros_like(candidates)
    cand_idx = np.argwhere(candidates)
    for idx in cand_idx:
        key = tuple(idx)
        x = np.array([coords[a][key] for a in range(grid.m)])
        g = np.array([grads[a][key] for a in range(grid.m)])
        support = v.values[key] + (test_pts - x) @ g
        if np.all(test_vals >= support - slack):
            mask[key] = True
    pts = np.stack([coords[a][mask] for a in range(grid.m)], axis=1) if mask.any() \
        else np.zeros((0, grid.m))
    return ContactSet(mask, pts)


@dataclass(frozen=True)
class AbpReport:
    epsilon: float
    contact_volume_fraction: float
    integral_det: float
    lower_bound: float
    passed: bool
    grid_tolerance: float = 0.05


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


#: relative slack in the pass predicate.  The continuum inequality is an
#: identity (the gradient image of the contact set is exactly the ball of
#: radius eps/2, counted once), so the discrete comparison can only be made
#: up to quadrature error; 5% covers it comfortably at 64^2.
ABP_GRID_TOLERANCE = 0.05


def abp_check(v: BallFunction, epsilon: float) -> AbpReport:
    """Contact-set lower bound: c0 * eps^m <= integral over P of det(D^2 v).

    c0 is the unit-ball volume over 2^m, the constant realized by the
    gradient-image argument (the ball of radius eps/2 lies inside the
    gradient image of the contact set).  The Hessian determinant is
    integrated with centered finite differences; cells straddling the
    |grad v| = eps/2 boundary enter with a first-order antialiased weight,
    and the pass predicate allows ABP_GRID_TOLERANCE of relative slack.
    """
    grid = v.grid
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if v.center_value() + epsilon > float(v.boundary_values.min()) + 1e-12:
        raise ValueError("precondition failed: v(0) + epsilon must not exceed boundary values")
    m = grid.m
    h = grid.spacing
    interior = grid.interior_mask()
    grads = v.gradient()
    gnorm = np.sqrt(sum(g**2 for g in grads))
    hess = v.fd_hessian()
    # spatial rate of change of |grad v| along its own direction
    gdir = np.stack(grads, axis=-1) / np.maximum(gnorm, 1e-300)[..., None]
    rate = np.abs(np.einsum("...ij,...i,...j->...", hess, gdir, gdir))
    weight = np.clip(0.5 + (0.5 * epsilon - gnorm) / np.maximum(rate * h, 1e-300), 0.0, 1.0)
    weight[~interior] = 0.0
    candidates = weight > 0.0

    coords = grid.coordinates()
    pts_all = np.stack([c[interior] for c in coords], axis=1)
    vals_all = v.values[interior]
    bpts = grid.boundary_points()
    test_pts = np.concatenate([pts_all, bpts], axis=0)
    test_vals = np.concatenate([vals_all, v.boundary_values])
    slack = 1e-12 * (1.0 + float(np.abs(test_vals).max()))
    for idx in np.argwhere(candidates):
        key = tuple(idx)
        x = np.array([coords[a][key] for a in range(m)])
        g = np.array([grads[a][key] for a in range(m)])
        support = v.values[key] + (test_pts - x) @ g
        if not np.all(test_vals >= support - slack):
            weight[key] = 0.0

    cell = h**m
    dets = np.linalg.det(hess[weight > 0]) if candidates.any() else np.zeros(0)
    integral_det = float((dets * weight[weight > 0]).sum() * cell)
    c0 = unit_ball_volume(m) / 2.0**m
    lower = c0 * epsilon**m
    fraction = float(weight.sum()) * cell / (unit_ball_volume(m) * grid.radius**m)
    passed = integral_det >= lower * (1.0 - ABP_GRID_TOLERANCE)
    return AbpReport(epsilon, fraction, integral_det, lower, passed, ABP_GRID_TOLERANCE)


@dataclass(frozen=True)
class HmwReport:
    """Second-order/gradient monitor with the test-function parameters.

    ``ratio`` = sup |dd u| / (1 + sup |grad u|^2); the comparison constant in
    the underlying estimate depends on the subsolution and is not computable,
    so only the ratio is reported, never a pass/fail.
    """

    sup_dd_u: float
    sup_grad_sq: float
    ratio: float
    phi_params: dict
    psi_params: dict


def hmw_ratio(u: ScalarField, alpha, a_const: float = 1.0) -> HmwReport:
    if u.grid.mode != "complex":
        raise ValueError("the second-order/gradient monitor applies in complex mode")
    n = u.grid.n
    linv = metric_root_inverse(alpha, n)
    dd = complex_hessian(u).values
    ddo = np.einsum("ab,...bc,dc->...ad", linv, dd, np.conj(linv))
    opnorm = np.abs(np.linalg.eigvalsh(ddo)).max(axis=-1)
    sup_dd = float(opnorm.max())
    grad = complex_gradient(u)
    w = np.einsum("ab,...b->...a", linv, grad)
    grad_sq = np.real(np.einsum("...a,...a->...", np.conj(w), w))
    sup_grad_sq = float(grad_sq.max())
    big_k = sup_grad_sq + 1.0
    spread = float(u.values.max() - u.values.min())
    tau = 1.0 / (1.0 + spread)
    return HmwReport(
        sup_dd_u=sup_dd,
        sup_grad_sq=sup_grad_sq,
        ratio=sup_dd / (1.0 + sup_grad_sq),
        phi_params={"K": big_k, "phi_prime_low": 1.0 / (4.0 * big_k),
                    "phi_prime_high": 1.0 / (2.0 * big_k)},
        psi_params={"A": float(a_const), "tau": tau},
    )


@dataclass(frozen=True)
class TraceEstimate:
    c_fit: float
    threshold: float
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def trace_estimate_check(u: ScalarField, g: MatrixField, alpha, a_const: float,
                         threshold: float) -> TraceEstimate:
    """Fit the smallest C with tr_alpha(g) <= C exp(A (u - inf u)) pointwise."""
    ainv = np.linalg.inv(np.asarray(alpha, dtype=complex)
                         if np.iscomplexobj(g.values) else np.asarray(alpha, dtype=float))
    tr = np.real(np.einsum("ab,...ba->...", ainv, g.values))
    shifted = u.values - u.values.min()
    c_fit = float((tr * np.exp(-a_const * shifted)).max())
    return TraceEstimate(c_fit, threshold, c_fit <= threshold)


def strong_concavity_flags(op: SymmetricOperator, lambda_samples) -> tuple[bool, bool]:
    """Evaluate the two strengthened concavity conditions on sorted samples.

    With lam sorted descending (lam_1 largest):
      (a)  f_11 + f_1 / lam_1 <= 0,
      (b)  lam_1 f_1 <= lam_i f_i for all i.
    Returns the AND over all samples per condition.
    """
    lam = np.atleast_2d(np.asarray(lambda_samples, dtype=float))
    if lam.size == 0:
        raise ValueError("lambda_samples must be non-empty")
    lam = -np.sort(-lam, axis=-1)
    g = op.gradient(lam)
    h = op.hessian(lam)
    tol = 1e-12 * (1.0 + np.abs(g).max() + np.abs(h).max())
    cond_a = bool(np.all(h[..., 0, 0] + g[..., 0] / lam[..., 0] <= tol))
    prods = lam * g
    cond_b = bool(np.all(prods[..., :1] <= prods + tol))
    return cond_a, cond_b
